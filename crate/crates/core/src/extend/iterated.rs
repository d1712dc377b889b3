use super::glue::glue_values;
use super::{check_inputs, patch, Diagnostics, ExtensionReport, Method, RoundDiagnostics};
use crate::error::{Error, Result};
use crate::space::{ScalarField, ScalePolicy, SpaceInstance, SubsetMask};

/// Sum of glued approximations `g_n` of the running residual at `ε = 2^{-n}`.
///
/// Each round checks `‖g_n‖_X ≤ ‖r_{n−1}‖_Y` and `‖r_n‖_Y ≤ 2^{-n}` where
/// `r_n = f − Σ_{i≤n} g_i` on `Y`.
pub fn iterated_extension(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
    policy: ScalePolicy,
    rounds: usize,
) -> Result<ExtensionReport> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let f = check_inputs(space, y, f)?;
    let mut sum = vec![0.0; space.len()];
    let mut residual = f.clone();
    let mut log = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let epsilon = (-(round as f64)).exp2();
        let before = residual.sup_norm();
        let glued = glue_values(space, y, &residual, epsilon, policy).map_err(|e| match e {
            Error::Saturated { step, .. } => Error::Precondition(format!(
                "residual trace saturated at step {step} in round {round} (epsilon = {epsilon})"
            )),
            other => other,
        })?;
        let term_norm = glued.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if term_norm > before {
            return Err(Error::Invariant(format!(
                "round {round}: term norm {term_norm} exceeds residual norm {before}"
            )));
        }
        for (s, g) in sum.iter_mut().zip(&glued.values) {
            *s += g;
        }
        residual = ScalarField::from_fn(y.clone(), |p| residual.at(p) - glued.values[p])?;
        let after = residual.sup_norm();
        if after > epsilon {
            return Err(Error::Invariant(format!(
                "round {round}: residual norm {after} exceeds {epsilon}"
            )));
        }
        log.push(RoundDiagnostics {
            round,
            epsilon,
            alpha: glued.alpha,
            term_norm,
            residual_before: before,
            residual_after: after,
        });
    }
    let (field, patch_log) = patch(space, sum, y, &f)?;
    ExtensionReport::new(
        Method::Iterated,
        field,
        y,
        &f,
        patch_log,
        Diagnostics::Iterated { rounds: log },
        2 * rounds,
    )
}
