use rayon::prelude::*;
use serde::Serialize;

use super::{NeighborIndex, ScalePolicy, SpaceInstance, SubsetMask};
use crate::error::{Error, Result};

/// How a derived-set filtration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "step", rename_all = "lowercase")]
pub enum CbTerminal {
    /// `filtration[n]` is empty and every earlier level is not.
    Emptied(usize),
    /// `filtration[n]` is a nonempty fixed point of the derived-set step.
    Saturated(usize),
}

/// Derived-set filtration `A = A⁽⁰⁾ ⊋ A⁽¹⁾ ⊋ …` with ranks and isolation radii.
#[derive(Debug, Clone)]
pub struct ScatteredDecomposition {
    pub policy: ScalePolicy,
    /// Levels up to and including the terminal one (empty when emptied).
    pub filtration: Vec<SubsetMask>,
    pub terminal: CbTerminal,
    /// `rank[x]` is the level `x` leaves the filtration; `None` off `A` or
    /// inside a saturated core.
    pub rank: Vec<Option<usize>>,
    /// Distance from `x` to the nearest other point of its own level, for
    /// ranked points. A point alone on its level gets the space diameter.
    pub isolation: Vec<Option<f64>>,
}

impl ScatteredDecomposition {
    /// Number of nonempty levels.
    pub fn length(&self) -> usize {
        self.filtration.iter().take_while(|l| !l.is_empty()).count()
    }

    pub fn is_scattered(&self) -> bool {
        matches!(self.terminal, CbTerminal::Emptied(_))
    }

    /// Points of rank exactly `r`.
    pub fn rank_set(&self, r: usize) -> Vec<usize> {
        (0..self.rank.len())
            .filter(|&x| self.rank[x] == Some(r))
            .collect()
    }

    pub fn max_rank(&self) -> Option<usize> {
        self.rank.iter().flatten().copied().max()
    }
}

/// One derived-set step under `policy`.
///
/// Under a fixed scale `s` this is [`SpaceInstance::delta_limit_points`].
/// Under the adaptive policy a point is a limit point when the points it is
/// nearest to are themselves packed more than `multiplier` times more
/// tightly: some nearest neighbour `y` of `x` in `A` has
/// `multiplier · ls(y, A) < ls(x, A)`. This is the footprint of a sequence
/// accumulating at `x` that has been truncated.
pub fn derived_step(
    space: &SpaceInstance,
    a: &SubsetMask,
    policy: ScalePolicy,
) -> Result<SubsetMask> {
    policy.validate()?;
    a.check_bound_to(space)?;
    let index = NeighborIndex::new(space, a);
    let keep: Vec<usize> = index
        .members()
        .par_iter()
        .copied()
        .filter(|&x| is_limit_point(&index, x, policy))
        .collect();
    Ok(index.to_mask(&keep))
}

/// Whether the member `x` of the indexed set survives one derived-set step.
pub(crate) fn is_limit_point(index: &NeighborIndex<'_>, x: usize, policy: ScalePolicy) -> bool {
    match policy {
        ScalePolicy::Fixed(s) => matches!(index.nearest_other(x), Some(d) if d < s),
        ScalePolicy::Adaptive(m) => match index.nearest_others(x) {
            Some((lx, ties)) if lx > 0.0 => ties
                .iter()
                .any(|&y| index.nearest_other(y).is_some_and(|ly| m * ly < lx)),
            _ => false,
        },
    }
}

/// Iterates the derived-set step from `a` until it empties or stalls.
pub fn cb_filtration(
    space: &SpaceInstance,
    a: &SubsetMask,
    policy: ScalePolicy,
) -> Result<ScatteredDecomposition> {
    policy.validate()?;
    a.check_bound_to(space)?;
    if a.is_empty() {
        return Err(Error::InvalidParameter(
            "the filtration needs a nonempty set".into(),
        ));
    }
    let mut filtration = vec![a.clone()];
    let terminal = loop {
        let current = filtration.last().expect("nonempty");
        let next = derived_step(space, current, policy)?;
        let step = filtration.len();
        if next.is_empty() {
            filtration.push(next);
            break CbTerminal::Emptied(step);
        }
        if &next == current {
            break CbTerminal::Saturated(step - 1);
        }
        filtration.push(next);
    };

    let n = space.len();
    let mut rank = vec![None; n];
    let mut isolation = vec![None; n];
    let ranked_levels = match terminal {
        CbTerminal::Emptied(k) => k,
        CbTerminal::Saturated(k) => k,
    };
    let fallback = if space.diameter() > 0.0 {
        space.diameter()
    } else {
        space.resolution()
    };
    for (level, set) in filtration.iter().enumerate().take(ranked_levels) {
        let index = NeighborIndex::new(space, set);
        let next = &filtration[level + 1];
        let leaving: Vec<usize> = set.iter().filter(|&x| !next.contains(x)).collect();
        let radii: Vec<f64> = leaving
            .par_iter()
            .map(|&x| index.nearest_other(x).unwrap_or(fallback))
            .collect();
        for (x, r) in leaving.into_iter().zip(radii) {
            rank[x] = Some(level);
            isolation[x] = Some(r);
        }
    }
    Ok(ScatteredDecomposition {
        policy,
        filtration,
        terminal,
        rank,
        isolation,
    })
}
