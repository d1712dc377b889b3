//! Instance generators: the truncated Cantor space, calibration spaces of
//! known derived-set length, and seeded random point clouds.

pub mod cantor;

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use cantor::{cantor_instance, ex1_function, tail_zero_subset, CantorPoint};

use crate::error::{Error, Result};
use crate::space::io::Instance;
use crate::space::{
    cb_filtration, Metric, NeighborIndex, PointRecord, ScalarField, ScalePolicy, SpaceInstance,
    SubsetMask,
};

/// Ratio between consecutive cluster distances in [`ordinal_instance`].
pub const ORDINAL_RATIO: f64 = 0.875;
/// Size of a child cluster relative to its distance from the parent apex.
pub const ORDINAL_SHRINK: f64 = 0.0625;
pub const DEFAULT_BRANCHING: usize = 10;

/// The points `0` and `1/i` for `i = 1..=n` on the line; id `i` is `1/i`
/// and id 0 is the limit point.
pub fn sequence_instance(n: usize) -> Result<SpaceInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sequence length must be at least 2, got {n}"
        )));
    }
    let coords: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).map(|i| 1.0 / i as f64))
        .collect();
    let labels = std::iter::once("0".to_string())
        .chain((1..=n).map(|i| format!("1/{i}")))
        .collect();
    line_instance(format!("sequence-{n}"), coords, labels)
}

/// A scattered subset of the line whose derived-set filtration has exactly
/// `k + 1` levels under the adaptive policy.
///
/// The apex sits at 0. A cluster with apex `p` and size `L` has `branching`
/// children with apexes at `p + L q^j` (`j = 1..=branching`), each a cluster
/// of one lower rank and size `L q^j σ`, where `q` is [`ORDINAL_RATIO`] and
/// `σ` is [`ORDINAL_SHRINK`]. Point 0 is the apex; labels record the path
/// of child indices.
pub fn ordinal_instance(k: usize, branching: usize) -> Result<SpaceInstance> {
    if k < 1 {
        return Err(Error::InvalidParameter(
            "ordinal rank must be at least 1".into(),
        ));
    }
    if branching < 3 {
        return Err(Error::InvalidParameter(format!(
            "branching must be at least 3, got {branching}"
        )));
    }
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    build_cluster(
        0.0,
        1.0,
        k,
        branching,
        "o".to_string(),
        &mut coords,
        &mut labels,
    );
    line_instance(format!("ordinal-{k}-{branching}"), coords, labels)
}

fn build_cluster(
    apex: f64,
    size: f64,
    rank: usize,
    branching: usize,
    label: String,
    coords: &mut Vec<f64>,
    labels: &mut Vec<String>,
) {
    coords.push(apex);
    labels.push(label.clone());
    if rank == 0 {
        return;
    }
    let mut reach = size;
    for j in 1..=branching {
        reach *= ORDINAL_RATIO;
        build_cluster(
            apex + reach,
            reach * ORDINAL_SHRINK,
            rank - 1,
            branching,
            format!("{label}.{j}"),
            coords,
            labels,
        );
    }
}

fn line_instance(name: String, coords: Vec<f64>, labels: Vec<String>) -> Result<SpaceInstance> {
    let mut sorted = coords.clone();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let points = labels
        .into_iter()
        .enumerate()
        .map(|(id, label)| PointRecord {
            id,
            label: Some(label),
        })
        .collect();
    let metric = Metric::euclidean(coords.into_iter().map(|c| vec![c]).collect())?;
    SpaceInstance::new(name, gap, points, metric)
}

/// `n` seeded uniform points in the unit cube of dimension `dim`, with the
/// smallest pairwise gap as resolution.
pub fn random_instance(seed: u64, n: usize, dim: usize) -> Result<SpaceInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "random instances need n >= 2, got {n}"
        )));
    }
    if dim < 1 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let points: Vec<PointRecord> = (0..n).map(|id| PointRecord { id, label: None }).collect();
    let metric = Metric::euclidean(rows)?;
    let probe = SpaceInstance::new_unchecked("probe", 1.0, points.clone(), metric.clone())?;
    let index = NeighborIndex::new(&probe, &probe.all());
    let gap = (0..n)
        .into_par_iter()
        .map(|x| index.nearest_other(x).unwrap_or(f64::INFINITY))
        .reduce(|| f64::INFINITY, f64::min);
    SpaceInstance::new(format!("random-{seed}-{n}-{dim}"), gap, points, metric)
}

/// Field `f` on `X`: the indicator of point `p`.
pub fn indicator(space: &SpaceInstance, p: usize) -> Result<ScalarField> {
    space.check_point(p)?;
    ScalarField::from_fn(space.all(), |x| if x == p { 1.0 } else { 0.0 })
}

/// Field on `X` with the parity of each point's derived-set rank under the
/// adaptive policy.
pub fn rank_parity(space: &SpaceInstance) -> Result<ScalarField> {
    let dec = cb_filtration(space, &space.all(), ScalePolicy::adaptive())?;
    ScalarField::from_fn(space.all(), |x| dec.rank[x].map_or(0.0, |r| (r % 2) as f64))
}

/// Generator descriptions accepted by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorSpec {
    Cantor { depth: usize },
    Ordinal { k: usize, branching: usize },
    Random { seed: u64, n: usize, dim: usize },
    Sequence { n: usize },
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |i: usize| -> Result<u64> {
            parts
                .get(i)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("generator {s:?} is missing parameter {i}"))
                })?
                .parse::<u64>()
                .map_err(|_| {
                    Error::InvalidParameter(format!(
                        "generator {s:?}: parameter {i} is not an integer"
                    ))
                })
        };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if parts.len() < lo + 1 || parts.len() > hi + 1 {
                return Err(Error::InvalidParameter(format!(
                    "generator {s:?} has the wrong number of parameters"
                )));
            }
            Ok(())
        };
        match parts[0] {
            "cantor" => {
                arity(1, 1)?;
                Ok(GeneratorSpec::Cantor {
                    depth: num(1)? as usize,
                })
            }
            "ordinal" => {
                arity(1, 2)?;
                let branching = if parts.len() > 2 {
                    num(2)? as usize
                } else {
                    DEFAULT_BRANCHING
                };
                Ok(GeneratorSpec::Ordinal {
                    k: num(1)? as usize,
                    branching,
                })
            }
            "random" => {
                arity(3, 3)?;
                Ok(GeneratorSpec::Random {
                    seed: num(1)?,
                    n: num(2)? as usize,
                    dim: num(3)? as usize,
                })
            }
            "sequence" => {
                arity(1, 1)?;
                Ok(GeneratorSpec::Sequence {
                    n: num(1)? as usize,
                })
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown generator {other:?}"
            ))),
        }
    }
}

/// Builds a generated instance with its standard subsets and fields.
///
/// * `cantor:D`: subset `Y` of tail-0 points and the block-parity field `f` on it.
/// * `ordinal:K[:B]`: subsets `apex` and `Y` (everything but the apex), the
///   apex `indicator` and `rank_parity` on `X`, and the coordinate `f` on `Y`.
/// * `sequence:N`: subset `Y = X` and the `indicator` of the limit point as `f`.
/// * `random:SEED:N:DIM`: subset `Y = X` and the smooth field
///   `f(x) = sin(2π Σ x_i)`.
pub fn generate_spec(spec: GeneratorSpec) -> Result<Instance> {
    match spec {
        GeneratorSpec::Cantor { depth } => {
            let space = cantor_instance(depth)?;
            let y = tail_zero_subset(&space)?;
            let f = ex1_function(&space)?;
            let mut inst = Instance::bare(space);
            inst.subsets.insert("Y".into(), y);
            inst.fields.insert("f".into(), f);
            Ok(inst)
        }
        GeneratorSpec::Ordinal { k, branching } => {
            let space = ordinal_instance(k, branching)?;
            let apex = SubsetMask::from_ids(&space, [0])?;
            let y = apex.complement();
            let coords =
                ScalarField::from_fn(y.clone(), |x| space.metric().coords(x).expect("line")[0])?;
            let ind = indicator(&space, 0)?;
            let parity = rank_parity(&space)?;
            let mut inst = Instance::bare(space);
            inst.subsets.insert("apex".into(), apex);
            inst.subsets.insert("Y".into(), y);
            inst.fields.insert("indicator".into(), ind);
            inst.fields.insert("rank_parity".into(), parity);
            inst.fields.insert("f".into(), coords);
            Ok(inst)
        }
        GeneratorSpec::Sequence { n } => {
            let space = sequence_instance(n)?;
            let f = indicator(&space, 0)?;
            let mut inst = Instance::bare(space);
            inst.subsets.insert("Y".into(), inst.space.all());
            inst.fields.insert("f".into(), f);
            Ok(inst)
        }
        GeneratorSpec::Random { seed, n, dim } => {
            let space = random_instance(seed, n, dim)?;
            let f = ScalarField::from_fn(space.all(), |x| {
                let s: f64 = space.metric().coords(x).expect("euclidean").iter().sum();
                (std::f64::consts::TAU * s).sin()
            })?;
            let mut inst = Instance::bare(space);
            inst.subsets.insert("Y".into(), inst.space.all());
            inst.fields.insert("f".into(), f);
            Ok(inst)
        }
    }
}

pub fn generate(spec: &str) -> Result<Instance> {
    generate_spec(spec.parse()?)
}
