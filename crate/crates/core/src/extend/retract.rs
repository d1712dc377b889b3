use rayon::prelude::*;

use super::{check_inputs, patch, Diagnostics, ExtensionReport, Method};
use crate::error::{Error, Result};
use crate::space::{NeighborIndex, ScalarField, SpaceInstance, SubsetMask};

/// Extends `values` from its domain `D` by nearest-point retraction, smallest
/// id on ties. `D` must contain `Y` and be closed at resolution: no point
/// outside `D` lies closer than the resolution to a point of `D`.
pub fn retract_extension(
    space: &SpaceInstance,
    y: &SubsetMask,
    values: &ScalarField,
) -> Result<ScalarField> {
    y.check_bound_to(space)?;
    let domain = values.domain();
    domain.check_bound_to(space)?;
    if domain.is_empty() {
        return Err(Error::Precondition("the retraction domain is empty".into()));
    }
    if !y.is_subset(domain)? {
        return Err(Error::Precondition(
            "Y is not contained in the retraction domain".into(),
        ));
    }
    let index = NeighborIndex::new(space, domain);
    let nearest: Vec<(usize, f64)> = (0..space.len())
        .into_par_iter()
        .map(|x| index.nearest(x).expect("domain is nonempty"))
        .collect();
    if let Some(x) =
        (0..space.len()).find(|&x| !domain.contains(x) && nearest[x].1 < space.resolution())
    {
        return Err(Error::Precondition(format!(
            "the retraction domain is not closed at resolution: point {x} lies {} from it",
            nearest[x].1
        )));
    }
    ScalarField::new(
        space.all(),
        nearest.iter().map(|&(p, _)| values.at(p)).collect(),
    )
}

/// [`retract_extension`] of `f` from `D = Y`, wrapped as a report.
pub fn retract_report(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
) -> Result<ExtensionReport> {
    let f = check_inputs(space, y, f)?;
    let field = retract_extension(space, y, &f)?;
    let (field, log) = patch(space, field.raw().to_vec(), y, &f)?;
    let diagnostics = Diagnostics::Retract {
        domain_size: y.len(),
    };
    ExtensionReport::new(Method::Retract, field, y, &f, log, diagnostics, 1)
}
