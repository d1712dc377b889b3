//! Oscillation quantities and the iterated derivations `D` and `G`.
//!
//! The "every neighbourhood" quantifier of the continuum definitions is
//! realised as one open ball per point, sized by a [`ScalePolicy`]. Both
//! derivations at a point use the same ball, which is what keeps the
//! one-step inclusion laws exact. Only limit points of the current set in
//! the sense of [`derived_step`](crate::space::derived_step) qualify,
//! as isolated points carry no oscillation.

mod inclusion;

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub use inclusion::{kl_inclusion_check, InclusionReport, Law, LawCheck};

use crate::error::{Error, Result};
use crate::space::cb::is_limit_point;
use crate::space::{NeighborIndex, ScalarField, ScalePolicy, SpaceInstance, SubsetMask};

/// Which derivation to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DerivationKind {
    /// Points whose ball holds a pair of values at least `ε` apart.
    D,
    /// Points whose ball holds a value at least `ε` away from their own.
    G,
}

/// `max f − min f` over `a`; 0 when `a` has at most one point.
pub fn osc_on_set(f: &ScalarField, a: &SubsetMask) -> Result<f64> {
    f.check_covers(a)?;
    Ok(spread(a.iter().map(|x| f.at(x))))
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo <= hi {
        hi - lo
    } else {
        0.0
    }
}

/// Oscillation of `f` over `B(x, scale) ∩ Y`; 0 when the ball misses `Y`.
pub fn osc_at_point(
    space: &SpaceInstance,
    f: &ScalarField,
    x: usize,
    y: &SubsetMask,
    scale: f64,
) -> Result<f64> {
    space.check_point(x)?;
    check_positive("scale", scale)?;
    f.check_covers(y)?;
    y.check_bound_to(space)?;
    let index = NeighborIndex::new(space, y);
    Ok(osc_in_ball(&index, f, x, scale))
}

pub(crate) fn osc_in_ball(
    index: &NeighborIndex<'_>,
    f: &ScalarField,
    x: usize,
    radius: f64,
) -> f64 {
    let (lo, hi) = ball_range(index, f, x, radius);
    if lo <= hi {
        hi - lo
    } else {
        0.0
    }
}

/// `(min, max)` of `f` over the ball; `(+∞, −∞)` when it is empty.
pub(crate) fn ball_range(
    index: &NeighborIndex<'_>,
    f: &ScalarField,
    x: usize,
    radius: f64,
) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    index.for_each_in_ball(x, radius, |y| {
        let v = f.at(y);
        lo = lo.min(v);
        hi = hi.max(v);
    });
    (lo, hi)
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

/// One application of `D` or `G` to `p`.
pub fn step(
    space: &SpaceInstance,
    kind: DerivationKind,
    f: &ScalarField,
    epsilon: f64,
    p: &SubsetMask,
    policy: ScalePolicy,
) -> Result<SubsetMask> {
    check_positive("epsilon", epsilon)?;
    policy.validate()?;
    p.check_bound_to(space)?;
    f.check_covers(p)?;
    let index = NeighborIndex::new(space, p);
    Ok(step_with(&index, kind, f, epsilon, policy))
}

fn step_with(
    index: &NeighborIndex<'_>,
    kind: DerivationKind,
    f: &ScalarField,
    epsilon: f64,
    policy: ScalePolicy,
) -> SubsetMask {
    let keep: Vec<usize> = index
        .members()
        .par_iter()
        .copied()
        .filter(|&x| {
            if !is_limit_point(index, x, policy) {
                return false;
            }
            let Some(radius) = policy.radius(|| index.nearest_other(x)) else {
                return false;
            };
            let (lo, hi) = ball_range(index, f, x, radius);
            match kind {
                DerivationKind::D => hi - lo >= epsilon,
                DerivationKind::G => {
                    let fx = f.at(x);
                    fx - lo >= epsilon || hi - fx >= epsilon
                }
            }
        })
        .collect();
    index.to_mask(&keep)
}

/// `D¹(f, ε, P)`: points of `P` whose ball in `P` carries oscillation `≥ ε`.
pub fn d_step(
    space: &SpaceInstance,
    f: &ScalarField,
    epsilon: f64,
    p: &SubsetMask,
    policy: ScalePolicy,
) -> Result<SubsetMask> {
    step(space, DerivationKind::D, f, epsilon, p, policy)
}

/// `G¹(f, ε, P)`: points `y` of `P` whose ball in `P` holds some `y′` with
/// `|f(y) − f(y′)| ≥ ε`. The closure step of the continuum definition is the
/// identity on finite sets.
pub fn g_step(
    space: &SpaceInstance,
    f: &ScalarField,
    epsilon: f64,
    p: &SubsetMask,
    policy: ScalePolicy,
) -> Result<SubsetMask> {
    step(space, DerivationKind::G, f, epsilon, p, policy)
}

/// How a derivation trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "step", rename_all = "lowercase")]
pub enum TraceTerminal {
    /// `levels[n]` is empty and `levels[n − 1]` is not.
    Emptied(usize),
    /// `levels[n]` is nonempty and the next step returns it unchanged.
    Saturated(usize),
    /// The step budget ran out first; `levels[n]` is the last level computed.
    Truncated(usize),
}

/// The iterates `P = L⁰ ⊋ L¹ ⊋ …` of one derivation.
#[derive(Debug, Clone)]
pub struct DerivationTrace {
    pub kind: DerivationKind,
    pub epsilon: f64,
    pub policy: ScalePolicy,
    pub levels: Vec<SubsetMask>,
    pub terminal: TraceTerminal,
}

impl DerivationTrace {
    pub fn index(&self) -> IndexValue {
        match self.terminal {
            TraceTerminal::Emptied(n) => IndexValue::Finite(n),
            TraceTerminal::Saturated(_) => IndexValue::Saturated,
            TraceTerminal::Truncated(_) => IndexValue::Truncated,
        }
    }

    /// Level `n`, continuing past the terminal: empty after emptying, the
    /// fixed point after saturation.
    pub fn level(&self, n: usize) -> Option<&SubsetMask> {
        match self.terminal {
            TraceTerminal::Truncated(_) => self.levels.get(n),
            _ => Some(&self.levels[n.min(self.levels.len() - 1)]),
        }
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(SubsetMask::len).collect()
    }
}

/// Applies `D` or `G` until the set empties, stalls, or `max_steps` steps
/// (default `|P| + 1`) have been taken.
pub fn iterate(
    space: &SpaceInstance,
    kind: DerivationKind,
    f: &ScalarField,
    epsilon: f64,
    p: &SubsetMask,
    policy: ScalePolicy,
    max_steps: Option<usize>,
) -> Result<DerivationTrace> {
    check_positive("epsilon", epsilon)?;
    policy.validate()?;
    p.check_bound_to(space)?;
    f.check_covers(p)?;
    let max_steps = max_steps.unwrap_or(p.len() + 1);
    if max_steps == 0 {
        return Err(Error::InvalidParameter(
            "max_steps must be at least 1".into(),
        ));
    }
    let mut levels = vec![p.clone()];
    let terminal = loop {
        let current = levels.last().expect("nonempty");
        let n = levels.len() - 1;
        if current.is_empty() {
            break TraceTerminal::Emptied(n);
        }
        if n == max_steps {
            break TraceTerminal::Truncated(n);
        }
        let index = NeighborIndex::new(space, current);
        let next = step_with(&index, kind, f, epsilon, policy);
        if &next == current {
            break TraceTerminal::Saturated(n);
        }
        levels.push(next);
    };
    Ok(DerivationTrace {
        kind,
        epsilon,
        policy,
        levels,
        terminal,
    })
}

/// The finite oscillation index at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexValue {
    /// The `D` trace empties at this step.
    Finite(usize),
    /// The trace reached a nonempty fixed point.
    Saturated,
    /// The step budget ran out.
    Truncated,
}

impl IndexValue {
    pub fn finite(&self) -> Option<usize> {
        match self {
            IndexValue::Finite(n) => Some(*n),
            _ => None,
        }
    }

    /// True when finite and at most `bound`.
    pub fn at_most(&self, bound: usize) -> bool {
        matches!(self, IndexValue::Finite(n) if *n <= bound)
    }
}

impl fmt::Display for IndexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexValue::Finite(n) => write!(f, "{n}"),
            IndexValue::Saturated => f.write_str("SATURATED"),
            IndexValue::Truncated => f.write_str("TRUNCATED"),
        }
    }
}

impl Serialize for IndexValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IndexValue::Finite(n) => s.serialize_u64(*n as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexEntry {
    pub epsilon: f64,
    pub index: IndexValue,
    pub level_sizes: Vec<usize>,
}

/// `β(f, ε)` over a decreasing grid of `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct IndexProfile {
    pub policy: ScalePolicy,
    pub entries: Vec<IndexEntry>,
}

impl IndexProfile {
    /// Largest finite index, or `None` if any entry is not finite.
    pub fn max_finite(&self) -> Option<usize> {
        self.entries
            .iter()
            .map(|e| e.index.finite())
            .try_fold(0, |acc, v| v.map(|n| acc.max(n)))
    }
}

/// Index of `f` on `P` at every `ε` of a strictly decreasing grid.
pub fn index_profile(
    space: &SpaceInstance,
    f: &ScalarField,
    p: &SubsetMask,
    policy: ScalePolicy,
    grid: &[f64],
) -> Result<IndexProfile> {
    check_grid(grid)?;
    let entries = grid
        .par_iter()
        .map(|&epsilon| {
            let trace = iterate(space, DerivationKind::D, f, epsilon, p, policy, None)?;
            Ok(IndexEntry {
                epsilon,
                index: trace.index(),
                level_sizes: trace.level_sizes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexProfile { policy, entries })
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("the epsilon grid is empty".into()));
    }
    for &e in grid {
        check_positive("grid epsilon", e)?;
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "the epsilon grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// `{2^{-1}, …, 2^{-8}}`.
pub fn dyadic_grid() -> Vec<f64> {
    (1..=8).map(|j| (-(j as f64)).exp2()).collect()
}

/// `{3^{-1}, …, 3^{-4}}`.
pub fn triadic_grid() -> Vec<f64> {
    (1..=4).map(|j| 1.0 / 3f64.powi(j)).collect()
}

/// The union of the dyadic and triadic grids, sorted decreasing.
pub fn default_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = dyadic_grid().into_iter().chain(triadic_grid()).collect();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests;
