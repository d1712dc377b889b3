use serde::Serialize;

use super::{iterate, step, DerivationKind, DerivationTrace};
use crate::error::{Error, Result};
use crate::space::{ScalarField, ScalePolicy, SpaceInstance, SubsetMask};

/// The inclusion laws checked by [`kl_inclusion_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Law {
    /// `G(f+g, ε, P) ⊆ G(f, ε/2, P) ∪ G(g, ε/2, P)`, one step.
    SumSplit,
    /// `G(f, ε, P ∪ Q) ⊆ G(f, ε, P) ∪ G(f, ε, Q)`, one step.
    UnionSplit,
    /// `Dⁿ(f, 2ε, P) ⊆ Gⁿ(f, ε, P)`.
    DoubledDInG,
    /// `Gⁿ(f, ε, P) ⊆ Dⁿ(f, ε, P)`.
    GInD,
    /// `G²ⁿ(f+g, ε, P) ⊆ Gⁿ(f, ε/2, P) ∪ Gⁿ(g, ε/2, P)`.
    IteratedSumSplit,
}

/// Outcome of one law at one level.
#[derive(Debug, Clone, Serialize)]
pub struct LawCheck {
    pub law: Law,
    pub level: usize,
    /// Hard laws are provable under the chosen semantics and must hold.
    pub hard: bool,
    pub violations: Vec<usize>,
}

impl LawCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub epsilon: f64,
    pub policy: ScalePolicy,
    pub depth: usize,
    pub checks: Vec<LawCheck>,
}

impl InclusionReport {
    pub fn hard_violations(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.hard)
            .map(|c| c.violations.len())
            .sum()
    }

    pub fn violations_of(&self, law: Law) -> usize {
        self.checks
            .iter()
            .filter(|c| c.law == law)
            .map(|c| c.violations.len())
            .sum()
    }

    pub fn failed_hard(&self) -> Vec<&LawCheck> {
        self.checks
            .iter()
            .filter(|c| c.hard && !c.holds())
            .collect()
    }
}

fn check(
    law: Law,
    level: usize,
    hard: bool,
    lhs: &SubsetMask,
    rhs: &SubsetMask,
) -> Result<LawCheck> {
    Ok(LawCheck {
        law,
        level,
        hard,
        violations: lhs.violations_against(rhs)?,
    })
}

/// Checks the sum, union and sandwich inclusions for `f` and `g` on `P`.
///
/// One-step laws compare derivations that share the same ball at every point
/// and are exact. The level-`n` sandwich compares iterates that may live on
/// different sets; it is exact under a fixed scale (one step is monotone in
/// the set) and reported softly under the adaptive policy, whose ball radius
/// depends on the set. The union law and its iterated sum analogue are
/// always soft: a point can lose its only witness when the set is split.
///
/// `union_pair` gives `(P₁, Q₁)` for the union law; by default `P` is split
/// into even and odd ids.
#[allow(clippy::too_many_arguments)]
pub fn kl_inclusion_check(
    space: &SpaceInstance,
    f: &ScalarField,
    g: &ScalarField,
    epsilon: f64,
    p: &SubsetMask,
    policy: ScalePolicy,
    depth: usize,
    union_pair: Option<(&SubsetMask, &SubsetMask)>,
) -> Result<InclusionReport> {
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "inclusion depth must be at least 1".into(),
        ));
    }
    if f.domain() != g.domain() {
        return Err(Error::Precondition(
            "the two fields must share one domain".into(),
        ));
    }
    let sum = f.add(g)?;
    let half = epsilon / 2.0;
    let mut checks = Vec::new();

    let lhs = step(space, DerivationKind::G, &sum, epsilon, p, policy)?;
    let rhs = step(space, DerivationKind::G, f, half, p, policy)?.union(&step(
        space,
        DerivationKind::G,
        g,
        half,
        p,
        policy,
    )?)?;
    checks.push(check(Law::SumSplit, 1, true, &lhs, &rhs)?);

    let (p1, q1) = match union_pair {
        Some((a, b)) => (a.clone(), b.clone()),
        None => {
            let even = SubsetMask::from_ids(space, p.iter().filter(|x| x % 2 == 0))?;
            let odd = p.difference(&even)?;
            (even, odd)
        }
    };
    let joined = p1.union(&q1)?;
    let lhs = step(space, DerivationKind::G, f, epsilon, &joined, policy)?;
    let rhs = step(space, DerivationKind::G, f, epsilon, &p1, policy)?.union(&step(
        space,
        DerivationKind::G,
        f,
        epsilon,
        &q1,
        policy,
    )?)?;
    checks.push(check(Law::UnionSplit, 1, false, &lhs, &rhs)?);

    let traces = |kind, field: &ScalarField, eps, steps| {
        iterate(space, kind, field, eps, p, policy, Some(steps))
    };
    let d_double = traces(DerivationKind::D, f, 2.0 * epsilon, depth)?;
    let g_single = traces(DerivationKind::G, f, epsilon, depth)?;
    let d_single = traces(DerivationKind::D, f, epsilon, depth)?;
    let level_hard = |n: usize| n <= 1 || matches!(policy, ScalePolicy::Fixed(_));
    for n in 1..=depth {
        let (Some(a), Some(b), Some(c)) = (
            level(&d_double, n),
            level(&g_single, n),
            level(&d_single, n),
        ) else {
            break;
        };
        checks.push(check(Law::DoubledDInG, n, level_hard(n), a, b)?);
        checks.push(check(Law::GInD, n, level_hard(n), b, c)?);
    }

    let g_sum = traces(DerivationKind::G, &sum, epsilon, depth)?;
    let g_f = traces(DerivationKind::G, f, half, depth)?;
    let g_g = traces(DerivationKind::G, g, half, depth)?;
    for n in 1..=depth / 2 {
        let (Some(a), Some(b), Some(c)) = (level(&g_sum, 2 * n), level(&g_f, n), level(&g_g, n))
        else {
            break;
        };
        checks.push(check(Law::IteratedSumSplit, n, false, a, &b.union(c)?)?);
    }

    Ok(InclusionReport {
        epsilon,
        policy,
        depth,
        checks,
    })
}

fn level(trace: &DerivationTrace, n: usize) -> Option<&SubsetMask> {
    trace.level(n)
}
