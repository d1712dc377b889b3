use rayon::prelude::*;

use super::{check_inputs, patch, Diagnostics, ExtensionReport, Method};
use crate::derivations::ball_range;
use crate::error::Result;
use crate::space::{NeighborIndex, ScalarField, SpaceInstance, SubsetMask};

/// `F(x) = max f` over the smallest dyadic ball around `x` that meets `Y`,
/// scanning radii upward from the largest power of two not below the
/// resolution.
pub fn limsup_extension(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
) -> Result<ExtensionReport> {
    let f = check_inputs(space, y, f)?;
    let index = NeighborIndex::new(space, y);
    let finest = space.resolution().log2().ceil().exp2();
    let per_point: Vec<(f64, f64)> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let mut radius = finest;
            loop {
                let (_, hi) = ball_range(&index, &f, x, radius);
                if hi > f64::NEG_INFINITY {
                    return (hi, radius);
                }
                radius *= 2.0;
            }
        })
        .collect();
    let max_radius = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    let values = per_point.into_iter().map(|p| p.0).collect();
    let (field, log) = patch(space, values, y, &f)?;
    let (lo, hi) = f.range().expect("Y is nonempty");
    let within = field.iter().all(|(_, v)| lo <= v && v <= hi);
    if !within {
        return Err(crate::error::Error::Invariant(
            "limsup field leaves the range of f".into(),
        ));
    }
    ExtensionReport::new(
        Method::Limsup,
        field,
        y,
        &f,
        log,
        Diagnostics::Limsup { max_radius },
        1,
    )
}
