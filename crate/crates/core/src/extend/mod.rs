//! Extension constructions: each takes `f` on `Y ⊆ X` and returns a field on
//! all of `X` that agrees with `f` on `Y` bit for bit.
//!
//! Every construction ends with an exact patch on `Y`; the size of the
//! overwritten discrepancy is recorded in the report's [`PatchLog`].

mod glue;
mod iterated;
mod layered;
mod limsup;
mod retract;
mod scattered;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use glue::glue_extension;
pub use iterated::iterated_extension;
pub use layered::{layered_extension, DEFAULT_MAX_LAYERS};
pub use limsup::limsup_extension;
pub use retract::{retract_extension, retract_report};
pub use scattered::scattered_extension;

use crate::error::{Error, Result};
use crate::space::{ScalarField, SpaceInstance, SubsetMask};

/// The available constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Glue,
    Iterated,
    Layered,
    Limsup,
    Scattered,
    Retract,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Glue,
        Method::Iterated,
        Method::Layered,
        Method::Limsup,
        Method::Scattered,
        Method::Retract,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Glue => "glue",
            Method::Iterated => "iterated",
            Method::Layered => "layered",
            Method::Limsup => "limsup",
            Method::Scattered => "scattered",
            Method::Retract => "retract",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown extension method {s:?}")))
    }
}

/// How much the exact patch on `Y` had to move the construction.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PatchLog {
    /// Points of `Y` whose value changed.
    pub patched_points: usize,
    /// Largest `|F_prepatch(y) − f(y)|` over `Y`.
    pub max_magnitude: f64,
}

/// One round of the iterated construction.
#[derive(Debug, Clone, Serialize)]
pub struct RoundDiagnostics {
    pub round: usize,
    pub epsilon: f64,
    /// Index of the residual's trace at this round's `ε`.
    pub alpha: usize,
    /// `‖g_n‖_X`.
    pub term_norm: f64,
    /// `‖f − Σ_{i<n} g_i‖_Y` before the round.
    pub residual_before: f64,
    /// `‖f − Σ_{i≤n} g_i‖_Y` after the round.
    pub residual_after: f64,
}

/// One layer of the layered construction.
#[derive(Debug, Clone, Serialize)]
pub struct LayerDiagnostics {
    pub k: usize,
    /// `|S_k|`, the number of cover elements.
    pub centers: usize,
    /// `|X_k|`, the carrier of the layer cover.
    pub carrier: usize,
    /// Points of `X_k` that leave at this layer.
    pub exits: usize,
    pub min_n: u32,
    pub max_n: u32,
    /// Smallest `l_k` over the carrier.
    pub min_l: u32,
    /// Points passing the oscillation test but admitting no `n_{k+1}` up to the cap.
    pub dropped_by_search: usize,
    /// Points failing the oscillation test.
    pub failed_osc_test: usize,
    /// Largest `|F(y) − f(y)|` over `Y` points exiting at this layer.
    pub exit_patch: f64,
}

/// Method-specific construction record.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Diagnostics {
    Glue {
        epsilon: f64,
        /// The finite index `α` of `f` on `Y` at `ε`.
        alpha: usize,
        /// `|Y^β ∖ Y^{β+1}|` for each piece.
        piece_sizes: Vec<usize>,
        /// `|Z_β|` for each piece.
        carrier_sizes: Vec<usize>,
        /// Points of `X` outside every `Z_β`, set to 0.
        uncovered: usize,
        /// `‖F_prepatch‖_X`.
        prepatch_norm: f64,
        /// `‖f‖_Y`.
        f_norm: f64,
        /// `‖F_prepatch − f‖_Y`.
        prepatch_error: f64,
    },
    Iterated {
        rounds: Vec<RoundDiagnostics>,
    },
    Layered {
        layers: Vec<LayerDiagnostics>,
        /// Search cap for `n_{k+1}`.
        n_max: u32,
        /// Number of `(k, m, x)` triples checked against the layer bounds.
        lemma_checks: usize,
        /// `Y` points whose patch exceeds `2^{1−k*}` at their exit layer `k*`.
        patch_bound_violations: usize,
    },
    Limsup {
        /// Largest dyadic radius needed to reach `Y`.
        max_radius: f64,
    },
    Scattered {
        /// Largest Cantor–Bendixson rank in the space.
        top_rank: usize,
        /// Regions handled by the recursion.
        regions: usize,
        /// Annular shells built around top-rank points.
        shells: usize,
        /// Windows `V_y` placed inside shells.
        windows: usize,
    },
    Retract {
        domain_size: usize,
    },
}

/// The output of one extension construction.
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionReport {
    pub method: Method,
    /// The extension, defined on every point of the space.
    #[serde(skip)]
    pub field: ScalarField,
    /// `max_{y ∈ Y} |F(y) − f(y)|`; zero after patching.
    pub restriction_error: f64,
    pub patch: PatchLog,
    pub diagnostics: Diagnostics,
    /// Number of in-construction checks that were evaluated.
    pub assertions_checked: usize,
    /// Failed checks; a failure aborts the construction, so this is empty
    /// in every returned report.
    pub assertion_log: Vec<String>,
}

impl ExtensionReport {
    pub(crate) fn new(
        method: Method,
        field: ScalarField,
        y: &SubsetMask,
        f: &ScalarField,
        patch: PatchLog,
        diagnostics: Diagnostics,
        assertions_checked: usize,
    ) -> Result<Self> {
        let restriction_error = y
            .iter()
            .map(|p| (field.at(p) - f.at(p)).abs())
            .fold(0.0, f64::max);
        if restriction_error != 0.0 || y.iter().any(|p| field.at(p).to_bits() != f.at(p).to_bits())
        {
            return Err(Error::Invariant(format!(
                "{method} extension differs from f on Y by {restriction_error}"
            )));
        }
        Ok(ExtensionReport {
            method,
            field,
            restriction_error,
            patch,
            diagnostics,
            assertions_checked,
            assertion_log: Vec::new(),
        })
    }
}

/// Checks the common inputs: `Y` nonempty and bound to the space, `f` defined on `Y`.
pub(crate) fn check_inputs(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
) -> Result<ScalarField> {
    y.check_bound_to(space)?;
    if y.is_empty() {
        return Err(Error::Precondition("the subset Y is empty".into()));
    }
    f.check_covers(y)?;
    f.restrict(y)
}

/// Overwrites `values` with `f` on `Y` and wraps them as a field on all of `X`.
pub(crate) fn patch(
    space: &SpaceInstance,
    mut values: Vec<f64>,
    y: &SubsetMask,
    f: &ScalarField,
) -> Result<(ScalarField, PatchLog)> {
    let mut log = PatchLog::default();
    for p in y.iter() {
        let target = f.at(p);
        if values[p].to_bits() != target.to_bits() {
            log.patched_points += 1;
            log.max_magnitude = log.max_magnitude.max((values[p] - target).abs());
            values[p] = target;
        }
    }
    Ok((ScalarField::new(space.all(), values)?, log))
}
