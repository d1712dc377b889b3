//! Finite metric spaces, subsets, partial fields, ball queries and the
//! derived-set filtration.

pub(crate) mod cb;
mod field;
mod index;
pub mod io;
mod kdtree;
mod mask;
mod metric;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cb::{cb_filtration, derived_step, CbTerminal, ScatteredDecomposition};
pub use field::ScalarField;
pub use index::NeighborIndex;
pub use mask::SubsetMask;
pub use metric::Metric;

use crate::error::{Error, Result};

/// Triangle checks are exhaustive up to this many points, sampled above.
pub const EXHAUSTIVE_VALIDATION_LIMIT: usize = 500;
const VALIDATION_SEED: u64 = 0x05ee_d0f_7a1a;

/// Identity of a constructed space; masks and fields carry it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceId(u64);

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A validated finite metric space with a global resolution floor.
#[derive(Debug)]
pub struct SpaceInstance {
    id: SpaceId,
    name: String,
    resolution: f64,
    points: Vec<PointRecord>,
    metric: Metric,
    diameter: OnceLock<f64>,
}

/// Summary of a metric validation pass.
#[derive(Debug, Clone, Serialize)]
pub struct MetricCheck {
    pub points: usize,
    pub exhaustive: bool,
    pub triples_checked: u64,
}

impl SpaceInstance {
    /// Builds and validates a space.
    pub fn new(
        name: impl Into<String>,
        resolution: f64,
        points: Vec<PointRecord>,
        metric: Metric,
    ) -> Result<Self> {
        let space = Self::new_unchecked(name, resolution, points, metric)?;
        space.validate()?;
        Ok(space)
    }

    /// Builds a space checking only structural consistency (ids, resolution,
    /// sizes), not the metric axioms.
    pub fn new_unchecked(
        name: impl Into<String>,
        resolution: f64,
        points: Vec<PointRecord>,
        metric: Metric,
    ) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::Resolution(resolution));
        }
        if points.len() != metric.len() {
            return Err(Error::Schema(format!(
                "{} point records but the metric describes {} points",
                points.len(),
                metric.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if p.id != i {
                return Err(Error::Schema(format!(
                    "point ids must be dense 0..n-1; position {i} holds id {}",
                    p.id
                )));
            }
        }
        Ok(SpaceInstance {
            id: SpaceId(NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed)),
            name: name.into(),
            resolution,
            points,
            metric,
            diameter: OnceLock::new(),
        })
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn points(&self) -> &[PointRecord] {
        &self.points
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.points.get(id).and_then(|p| p.label.as_deref())
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist(i, j)
    }

    pub fn check_point(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(id))
        }
    }

    pub fn all(&self) -> SubsetMask {
        SubsetMask::full(self)
    }

    pub fn empty_mask(&self) -> SubsetMask {
        SubsetMask::empty(self)
    }

    /// Largest pairwise distance (0 for spaces with fewer than two points).
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| match &self.metric {
            Metric::Matrix { data, .. } => data.iter().copied().fold(0.0, f64::max),
            Metric::Cantor { .. } => {
                // Ids follow sequence order, so the extreme keys span the
                // largest ultrametric ball.
                if self.len() < 2 {
                    0.0
                } else {
                    self.dist(0, self.len() - 1)
                }
            }
            Metric::Euclidean { .. } => (0..self.len())
                .into_par_iter()
                .map(|i| {
                    ((i + 1)..self.len())
                        .map(|j| self.dist(i, j))
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max),
        })
    }

    /// Checks the metric axioms.
    ///
    /// Triangle inequalities are checked for every triple up to
    /// [`EXHAUSTIVE_VALIDATION_LIMIT`] points and for `10 n` seeded random
    /// triples above it.
    pub fn validate(&self) -> Result<MetricCheck> {
        let n = self.len();
        match &self.metric {
            Metric::Matrix { data, .. } => {
                for i in 0..n {
                    for j in 0..n {
                        let d = data[i * n + j];
                        if !d.is_finite() {
                            return Err(Error::MetricAxiom(format!(
                                "d({i},{j}) = {d} is not finite"
                            )));
                        }
                        if i == j && d != 0.0 {
                            return Err(Error::MetricAxiom(format!(
                                "d({i},{i}) = {d}, expected 0"
                            )));
                        }
                        if i != j && d <= 0.0 {
                            return Err(Error::MetricAxiom(format!(
                                "d({i},{j}) = {d} must be positive for distinct points"
                            )));
                        }
                        if d != data[j * n + i] {
                            return Err(Error::MetricAxiom(format!(
                                "asymmetric distances d({i},{j}) = {d} != d({j},{i}) = {}",
                                data[j * n + i]
                            )));
                        }
                    }
                }
            }
            Metric::Cantor { keys, .. } => {
                if keys.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::MetricAxiom(
                        "Cantor points must be distinct and listed in sequence order".into(),
                    ));
                }
            }
            Metric::Euclidean { .. } => {
                if n >= 2 {
                    let index = NeighborIndex::new(self, &self.all());
                    for x in 0..n {
                        if let Some(d) = index.nearest_other(x) {
                            if d <= 0.0 {
                                return Err(Error::MetricAxiom(format!(
                                    "point {x} coincides with another point"
                                )));
                            }
                        }
                    }
                }
            }
        }
        self.check_triangles()
    }

    fn check_triangles(&self) -> Result<MetricCheck> {
        let n = self.len();
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let d_ij = self.dist(i, j);
            let d_jk = self.dist(j, k);
            let d_ik = self.dist(i, k);
            if !triangle_holds(d_ik, d_ij, d_jk) {
                return Err(Error::Triangle {
                    i,
                    j,
                    k,
                    d_ij,
                    d_jk,
                    d_ik,
                });
            }
            Ok(())
        };
        if n <= EXHAUSTIVE_VALIDATION_LIMIT {
            // Report the lexicographically first violating triple.
            let first_bad = (0..n).into_par_iter().find_first(|&i| {
                (0..n).any(|j| {
                    (0..n)
                        .any(|k| !triangle_holds(self.dist(i, k), self.dist(i, j), self.dist(j, k)))
                })
            });
            if let Some(i) = first_bad {
                for j in 0..n {
                    for k in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
            Ok(MetricCheck {
                points: n,
                exhaustive: true,
                triples_checked: (n as u64).pow(3),
            })
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED ^ n as u64);
            let samples = 10 * n as u64;
            for _ in 0..samples {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                let k = rng.gen_range(0..n);
                check(i, j, k)?;
            }
            Ok(MetricCheck {
                points: n,
                exhaustive: false,
                triples_checked: samples,
            })
        }
    }

    /// Open ball `{ y ∈ within : d(center, y) < radius }`.
    pub fn ball(&self, center: usize, radius: f64, within: &SubsetMask) -> Result<SubsetMask> {
        self.check_point(center)?;
        within.check_bound_to(self)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        let mut out = self.empty_mask();
        for y in within.iter() {
            if self.dist(center, y) < radius {
                out.insert(y)?;
            }
        }
        Ok(out)
    }

    /// Distance from `x` to the nearest other member of `within`; 0 when
    /// `x` is the only member.
    pub fn local_scale(&self, x: usize, within: &SubsetMask) -> Result<f64> {
        self.check_point(x)?;
        within.check_bound_to(self)?;
        if !within.contains(x) {
            return Err(Error::InvalidParameter(format!(
                "point {x} is not in the subset"
            )));
        }
        let best = within
            .iter()
            .filter(|&y| y != x)
            .map(|y| self.dist(x, y))
            .fold(f64::INFINITY, f64::min);
        Ok(if best.is_finite() { best } else { 0.0 })
    }

    /// Members of `a` with another member of `a` closer than `scale`: the
    /// resolution-scale stand-in for the derived set.
    pub fn delta_limit_points(&self, a: &SubsetMask, scale: f64) -> Result<SubsetMask> {
        a.check_bound_to(self)?;
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let index = NeighborIndex::new(self, a);
        let members = a.ids();
        let keep: Vec<usize> = members
            .par_iter()
            .copied()
            .filter(|&x| matches!(index.nearest_other(x), Some(d) if d < scale))
            .collect();
        Ok(SubsetMask::from_sorted_unchecked(
            self.id,
            self.len(),
            &keep,
        ))
    }
}

#[inline]
fn triangle_holds(d_ik: f64, d_ij: f64, d_jk: f64) -> bool {
    // A few units of rounding slack: Euclidean distances come from square
    // roots and can miss exact additivity on collinear points.
    d_ik <= (d_ij + d_jk) * (1.0 + 4.0 * f64::EPSILON)
}

/// How the single "neighbourhood" ball of a point is sized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "lowercase")]
pub enum ScalePolicy {
    /// One global radius.
    Fixed(f64),
    /// `multiplier ×` distance to the nearest other point of the current set.
    Adaptive(f64),
}

impl ScalePolicy {
    pub const DEFAULT_MULTIPLIER: f64 = 3.0;

    pub fn adaptive() -> Self {
        ScalePolicy::Adaptive(Self::DEFAULT_MULTIPLIER)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalePolicy::Fixed(s) if !(s.is_finite() && s > 0.0) => Err(Error::InvalidParameter(
                format!("fixed scale must be positive, got {s}"),
            )),
            ScalePolicy::Adaptive(m) if !(m.is_finite() && m >= 1.0) => Err(
                Error::InvalidParameter(format!("adaptive multiplier must be at least 1, got {m}")),
            ),
            _ => Ok(()),
        }
    }

    /// Ball radius for a point whose nearest other point of the current set
    /// lies at `local_scale` (`None` when it has no other point).
    ///
    /// Returns `None` when the point has no meaningful neighbourhood.
    #[inline]
    pub fn radius(&self, local_scale: impl FnOnce() -> Option<f64>) -> Option<f64> {
        match *self {
            ScalePolicy::Fixed(s) => Some(s),
            ScalePolicy::Adaptive(m) => match local_scale() {
                Some(d) if d > 0.0 => Some(m * d),
                _ => None,
            },
        }
    }
}

impl fmt::Display for ScalePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalePolicy::Fixed(s) => write!(f, "fixed:{s}"),
            ScalePolicy::Adaptive(m) => write!(f, "adaptive:{m}"),
        }
    }
}

impl FromStr for ScalePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("policy {s:?} is not KIND:VALUE")))?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("policy value {value:?} is not a number"))
        })?;
        let policy = match kind.trim() {
            "fixed" => ScalePolicy::Fixed(value),
            "adaptive" => ScalePolicy::Adaptive(value),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown policy kind {other:?}"
                )))
            }
        };
        policy.validate()?;
        Ok(policy)
    }
}
