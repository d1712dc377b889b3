use super::{check_inputs, patch, Diagnostics, ExtensionReport, Method};
use crate::derivations::{iterate, DerivationKind, TraceTerminal};
use crate::error::{Error, Result};
use crate::space::{ScalarField, ScalePolicy, SpaceInstance, SubsetMask};
use crate::unity::{blend, cover_for_piece, partition};

/// The pasted field before the `Y` patch, with its construction record.
pub(crate) struct Glued {
    pub values: Vec<f64>,
    pub alpha: usize,
    pub piece_sizes: Vec<usize>,
    pub carrier_sizes: Vec<usize>,
    pub uncovered: usize,
}

/// Pastes piecewise blends of `f` along the `D` trace of `f` on `Y` at `ε`.
///
/// Piece `β` is `Y^β ∖ Y^{β+1}`; its cover avoids `Y^{β+1}` and keeps `f`
/// within `ε` of each centre value, so the blend `f_β` on the carrier `Z_β`
/// stays within `ε` of `f` there. A point takes the value of the first
/// piece whose carrier contains it and 0 if none does.
pub(crate) fn glue_values(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
    epsilon: f64,
    policy: ScalePolicy,
) -> Result<Glued> {
    let trace = iterate(space, DerivationKind::D, f, epsilon, y, policy, None)?;
    let alpha = match trace.terminal {
        TraceTerminal::Emptied(n) => n,
        TraceTerminal::Saturated(n) | TraceTerminal::Truncated(n) => {
            return Err(Error::Saturated { epsilon, step: n });
        }
    };
    let mut values = vec![0.0; space.len()];
    let mut assigned = space.empty_mask();
    let mut piece_sizes = Vec::with_capacity(alpha);
    let mut carrier_sizes = Vec::with_capacity(alpha);
    for beta in 0..alpha {
        let (level, next) = (&trace.levels[beta], &trace.levels[beta + 1]);
        let piece_f = f.restrict(level)?;
        let cover = cover_for_piece(space, level, next, &piece_f, epsilon)?;
        let pou = partition(space, &cover)?;
        let anchors: Vec<f64> = cover.elements.iter().map(|e| f.at(e.center)).collect();
        let f_beta = blend(&pou, &anchors)?;
        piece_sizes.push(level.len() - next.len());
        carrier_sizes.push(cover.carrier.len());
        for z in cover.carrier.difference(&assigned)?.iter() {
            values[z] = f_beta.at(z);
        }
        assigned = assigned.union(&cover.carrier)?;
    }
    Ok(Glued {
        values,
        alpha,
        piece_sizes,
        carrier_sizes,
        uncovered: space.len() - assigned.len(),
    })
}

/// Extension of `f` from `Y` whose pre-patch values satisfy
/// `‖F‖_X ≤ ‖f‖_Y` and `‖F − f‖_Y ≤ ε`, both checked on the computed values.
pub fn glue_extension(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
    epsilon: f64,
    policy: ScalePolicy,
) -> Result<ExtensionReport> {
    let f = check_inputs(space, y, f)?;
    let glued = glue_values(space, y, &f, epsilon, policy)?;
    let f_norm = f.sup_norm();
    let prepatch_norm = glued.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let prepatch_error = y
        .iter()
        .map(|p| (glued.values[p] - f.at(p)).abs())
        .fold(0.0, f64::max);
    if prepatch_norm > f_norm {
        return Err(Error::Invariant(format!(
            "glued field has norm {prepatch_norm} above the norm {f_norm} of f"
        )));
    }
    if prepatch_error > epsilon {
        return Err(Error::Invariant(format!(
            "glued field is {prepatch_error} away from f on Y at epsilon {epsilon}"
        )));
    }
    let (field, log) = patch(space, glued.values, y, &f)?;
    let diagnostics = Diagnostics::Glue {
        epsilon,
        alpha: glued.alpha,
        piece_sizes: glued.piece_sizes,
        carrier_sizes: glued.carrier_sizes,
        uncovered: glued.uncovered,
        prepatch_norm,
        f_norm,
        prepatch_error,
    };
    ExtensionReport::new(Method::Glue, field, y, &f, log, diagnostics, 2)
}
