//! Ball covers, hat-function partitions of unity subordinated to them, and
//! blending of anchor values.
//!
//! Weights are never materialised: a cover can have thousands of elements
//! each containing thousands of points. Elements are bucketed by dyadic
//! radius band and every band keeps a neighbour index on its centres, so
//! the elements containing a point are found by one ball query per band.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{NeighborIndex, ScalarField, SpaceInstance, SubsetMask};

/// One open ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallElement {
    pub center: usize,
    pub radius: f64,
}

/// A finite family of open balls and the set of points they cover.
#[derive(Debug, Clone)]
pub struct BallCover {
    pub elements: Vec<BallElement>,
    pub carrier: SubsetMask,
}

impl BallCover {
    pub fn new(space: &SpaceInstance, elements: Vec<BallElement>) -> Result<Self> {
        for e in &elements {
            space.check_point(e.center)?;
            if !(e.radius.is_finite() && e.radius > 0.0) {
                return Err(Error::Invariant(format!(
                    "cover element at {} has non-positive radius {}",
                    e.center, e.radius
                )));
            }
        }
        let index = CoverIndex::new(space, &elements);
        let covered: Vec<usize> = (0..space.len())
            .into_par_iter()
            .filter(|&z| index.covers(z))
            .collect();
        let carrier = SubsetMask::from_ids(space, covered)?;
        Ok(BallCover { elements, carrier })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

struct Band<'a> {
    max_radius: f64,
    centers: NeighborIndex<'a>,
    by_center: HashMap<usize, Vec<usize>>,
}

/// Finds the elements whose open ball contains a point.
struct CoverIndex<'a> {
    space: &'a SpaceInstance,
    elements: &'a [BallElement],
    bands: Vec<Band<'a>>,
}

impl<'a> CoverIndex<'a> {
    fn new(space: &'a SpaceInstance, elements: &'a [BallElement]) -> Self {
        let mut grouped: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, e) in elements.iter().enumerate() {
            grouped
                .entry(e.radius.log2().floor() as i32)
                .or_default()
                .push(i);
        }
        let bands = grouped
            .into_values()
            .map(|members| {
                let mut by_center: HashMap<usize, Vec<usize>> = HashMap::new();
                let mut max_radius: f64 = 0.0;
                for &i in &members {
                    by_center.entry(elements[i].center).or_default().push(i);
                    max_radius = max_radius.max(elements[i].radius);
                }
                let mut centers: Vec<usize> = by_center.keys().copied().collect();
                centers.sort_unstable();
                let mask = SubsetMask::from_ids(space, centers).expect("centres are valid ids");
                Band {
                    max_radius,
                    centers: NeighborIndex::new(space, &mask),
                    by_center,
                }
            })
            .collect();
        CoverIndex {
            space,
            elements,
            bands,
        }
    }

    /// Calls `visit(element, distance)` for every element containing `z`.
    fn for_each_containing(&self, z: usize, mut visit: impl FnMut(usize, f64)) {
        for band in &self.bands {
            band.centers.for_each_in_ball(z, band.max_radius, |c| {
                let d = self.space.dist(c, z);
                for &i in &band.by_center[&c] {
                    if d < self.elements[i].radius {
                        visit(i, d);
                    }
                }
            });
        }
    }

    fn covers(&self, z: usize) -> bool {
        let mut hit = false;
        self.for_each_containing(z, |_, _| hit = true);
        hit
    }

    /// Normalised hat weights at `z`, sorted by element.
    fn weights_at(&self, z: usize) -> Vec<(usize, f64)> {
        let mut raw = Vec::new();
        self.for_each_containing(z, |i, d| raw.push((i, self.elements[i].radius - d)));
        raw.sort_unstable_by_key(|&(i, _)| i);
        let total: f64 = raw.iter().map(|&(_, w)| w).sum();
        for entry in &mut raw {
            entry.1 /= total;
        }
        raw
    }
}

/// Hat-function partition of unity subordinated to a [`BallCover`].
///
/// The raw weight of element `(c, r)` at `z` is `max(0, r − d(c, z))`;
/// weights are the raw weights divided by their sum at `z`.
pub struct PartitionOfUnity<'a> {
    cover: &'a BallCover,
    index: CoverIndex<'a>,
}

/// Result of checking normalisation and subordination on every carrier point.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionCheck {
    pub carrier_points: usize,
    pub max_normalisation_error: f64,
    /// Largest number of elements overlapping at one point.
    pub max_overlap: usize,
}

/// Builds the partition of unity for `cover`.
pub fn partition<'a>(
    space: &'a SpaceInstance,
    cover: &'a BallCover,
) -> Result<PartitionOfUnity<'a>> {
    cover.carrier.check_bound_to(space)?;
    if cover.carrier.is_empty() {
        return Err(Error::Precondition("the cover carries no points".into()));
    }
    Ok(PartitionOfUnity {
        cover,
        index: CoverIndex::new(space, &cover.elements),
    })
}

impl PartitionOfUnity<'_> {
    pub fn cover(&self) -> &BallCover {
        self.cover
    }

    /// `(element, weight)` pairs with positive weight at `z`, by element.
    pub fn weights_at(&self, z: usize) -> Vec<(usize, f64)> {
        self.index.weights_at(z)
    }

    /// Points where `element` has positive weight.
    pub fn support(&self, element: usize) -> Result<SubsetMask> {
        let e = self
            .cover
            .elements
            .get(element)
            .ok_or_else(|| Error::InvalidParameter(format!("no cover element {element}")))?;
        self.index
            .space
            .ball(e.center, e.radius, &self.index.space.all())
    }

    /// Verifies that weights are nonnegative, supported inside their balls
    /// and sum to one within rounding at every carrier point.
    pub fn check(&self) -> Result<PartitionCheck> {
        let space = self.index.space;
        let ids = self.cover.carrier.ids();
        let per_point = ids
            .par_iter()
            .map(|&z| {
                let weights = self.weights_at(z);
                if weights.is_empty() {
                    return Err(Error::Invariant(format!(
                        "carrier point {z} has zero total weight"
                    )));
                }
                for &(i, w) in &weights {
                    let e = self.cover.elements[i];
                    if !(w > 0.0) || space.dist(e.center, z) >= e.radius {
                        return Err(Error::Invariant(format!(
                            "element {i} has weight {w} at {z} outside its open ball"
                        )));
                    }
                }
                let sum: f64 = weights.iter().map(|&(_, w)| w).sum();
                let err = (sum - 1.0).abs();
                if err > weights.len() as f64 * f64::EPSILON {
                    return Err(Error::Invariant(format!(
                        "weights at {z} sum to {sum} over {} elements",
                        weights.len()
                    )));
                }
                Ok((err, weights.len()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PartitionCheck {
            carrier_points: ids.len(),
            max_normalisation_error: per_point.iter().map(|p| p.0).fold(0.0, f64::max),
            max_overlap: per_point.iter().map(|p| p.1).max().unwrap_or(0),
        })
    }

    /// Weighted average of the anchors at `z`, clamped to the range of the
    /// contributing anchors so the convexity bound survives rounding.
    pub fn blend_at(&self, z: usize, anchors: &[f64]) -> Option<f64> {
        let weights = self.weights_at(z);
        if weights.is_empty() {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut acc = 0.0;
        for (i, w) in weights {
            let a = anchors[i];
            lo = lo.min(a);
            hi = hi.max(a);
            acc += w * a;
        }
        Some(acc.clamp(lo, hi))
    }
}

/// The field `z ↦ Σ φ_i(z) a_i` on the carrier of the cover.
pub fn blend(pou: &PartitionOfUnity<'_>, anchors: &[f64]) -> Result<ScalarField> {
    if anchors.len() != pou.cover.elements.len() {
        return Err(Error::InvalidParameter(format!(
            "{} anchor values for {} cover elements",
            anchors.len(),
            pou.cover.elements.len()
        )));
    }
    let carrier = &pou.cover.carrier;
    let ids = carrier.ids();
    let vals: Vec<f64> = ids
        .par_iter()
        .map(|&z| {
            pou.blend_at(z, anchors)
                .expect("carrier points are covered")
        })
        .collect();
    let mut values = vec![0.0; carrier.universe()];
    for (z, v) in ids.into_iter().zip(vals) {
        values[z] = v;
    }
    ScalarField::new(carrier.clone(), values)
}

/// Cover of the piece `Y^β ∖ Y^{β+1}` with balls that avoid `Y^{β+1}` and on
/// which `f` stays within `ε` of its value at the centre.
///
/// The radius at `y` is half the smaller of `d(y, Y^{β+1})` and the distance
/// from `y` to the nearest point of `Y^β` whose value differs from `f(y)` by
/// at least `ε`; either distance is capped at the space diameter.
pub fn cover_for_piece(
    space: &SpaceInstance,
    ybeta: &SubsetMask,
    ynext: &SubsetMask,
    f: &ScalarField,
    epsilon: f64,
) -> Result<BallCover> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    ybeta.check_bound_to(space)?;
    f.check_covers(ybeta)?;
    if !ynext.is_subset(ybeta)? {
        return Err(Error::Precondition(
            "the next level is not inside the current one".into(),
        ));
    }
    let piece = ybeta.difference(ynext)?.ids();
    if piece.is_empty() {
        return Err(Error::Precondition("the piece to cover is empty".into()));
    }
    let cap = if space.diameter() > 0.0 {
        space.diameter()
    } else {
        space.resolution()
    };
    let next_index = NeighborIndex::new(space, ynext);
    let level: Vec<usize> = ybeta.ids();
    let beta_index = NeighborIndex::new(space, ybeta);
    let elements = piece
        .par_iter()
        .map(|&y| {
            let fy = f.at(y);
            let d_next = next_index.nearest(y).map_or(f64::INFINITY, |(_, d)| d);
            let d_jump = level
                .iter()
                .filter(|&&z| (f.at(z) - fy).abs() >= epsilon)
                .map(|&z| space.dist(y, z))
                .fold(f64::INFINITY, f64::min);
            let radius = 0.5 * d_next.min(d_jump).min(cap);
            if !(radius > 0.0) {
                return Err(Error::Invariant(format!(
                    "piece point {y} admits no positive cover radius"
                )));
            }
            // Both conditions, rechecked on the ball itself.
            if next_index.count_in_ball(y, radius) > 0 {
                return Err(Error::Invariant(format!(
                    "cover ball at {y} meets the next level"
                )));
            }
            let mut window_ok = true;
            beta_index.for_each_in_ball(y, radius, |z| window_ok &= (f.at(z) - fy).abs() < epsilon);
            if !window_ok {
                return Err(Error::Invariant(format!(
                    "cover ball at {y} leaves the epsilon window"
                )));
            }
            Ok(BallElement { center: y, radius })
        })
        .collect::<Result<Vec<_>>>()?;
    BallCover::new(space, elements)
}
