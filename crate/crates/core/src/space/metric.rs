use crate::error::{Error, Result};
use crate::instances::cantor::{key_distance, CantorPoint};

/// Pairwise distance of a finite space.
#[derive(Debug, Clone)]
pub enum Metric {
    /// Explicit symmetric matrix, row-major.
    Matrix { n: usize, data: Vec<f64> },
    /// Prefix metric on eventually-constant binary sequences.
    Cantor {
        depth: usize,
        points: Vec<CantorPoint>,
        keys: Vec<u64>,
    },
    /// Euclidean distance between coordinate rows.
    Euclidean { dim: usize, coords: Vec<f64> },
}

impl Metric {
    pub fn matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Schema(format!(
                    "distance matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Metric::Matrix { n, data })
    }

    pub fn cantor(depth: usize, points: Vec<CantorPoint>) -> Result<Self> {
        let keys: Vec<u64> = points.iter().map(|p| p.key()).collect();
        Ok(Metric::Cantor {
            depth,
            points,
            keys,
        })
    }

    pub fn euclidean(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 && !rows.is_empty() {
            return Err(Error::Schema(
                "Euclidean coordinates must have dimension >= 1".into(),
            ));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Schema(format!(
                    "coordinate row {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Schema(format!(
                    "coordinate row {i} has non-finite entry {bad}"
                )));
            }
            coords.extend(row);
        }
        Ok(Metric::Euclidean { dim, coords })
    }

    pub fn len(&self) -> usize {
        match self {
            Metric::Matrix { n, .. } => *n,
            Metric::Cantor { points, .. } => points.len(),
            Metric::Euclidean { dim, coords } => {
                if *dim == 0 {
                    0
                } else {
                    coords.len() / dim
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            Metric::Matrix { n, data } => data[i * n + j],
            Metric::Cantor { keys, .. } => key_distance(keys[i], keys[j]),
            Metric::Euclidean { dim, coords } => euclidean(
                &coords[i * dim..(i + 1) * dim],
                &coords[j * dim..(j + 1) * dim],
            ),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Metric::Matrix { .. } => "matrix",
            Metric::Cantor { .. } => "cantor",
            Metric::Euclidean { .. } => "euclidean",
        }
    }

    pub fn cantor_points(&self) -> Option<&[CantorPoint]> {
        match self {
            Metric::Cantor { points, .. } => Some(points),
            _ => None,
        }
    }

    pub fn cantor_keys(&self) -> Option<&[u64]> {
        match self {
            Metric::Cantor { keys, .. } => Some(keys),
            _ => None,
        }
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match self {
            Metric::Euclidean { dim, coords } => Some(&coords[i * dim..(i + 1) * dim]),
            _ => None,
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            Metric::Euclidean { dim, .. } => Some(*dim),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}
