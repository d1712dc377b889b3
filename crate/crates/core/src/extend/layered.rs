use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::{check_inputs, patch, Diagnostics, ExtensionReport, LayerDiagnostics, Method};
use crate::derivations::osc_in_ball;
use crate::error::{Error, Result};
use crate::space::{NeighborIndex, ScalarField, ScalePolicy, SpaceInstance, SubsetMask};
use crate::unity::{partition, BallCover, BallElement};

/// Effectively unbounded: the search cap on `n` ends the construction first.
pub const DEFAULT_MAX_LAYERS: usize = 64;

const CHUNK: usize = 1024;
const OFF: u32 = u32::MAX;

fn dyadic(n: i64) -> f64 {
    (-(n as f64)).exp2()
}

/// One layer: the cover by `B(s, 2^{-n_k(s)})`, its blend and the
/// per-point bookkeeping. Dense vectors are indexed by point id.
struct LayerState {
    centers: Vec<usize>,
    n: Vec<u32>,
    carrier: SubsetMask,
    values: Vec<f64>,
    /// `l_k(x)`; 0 off the carrier.
    l: Vec<u32>,
    /// Interned `S_k(x)` as sorted element indices; `OFF` off the carrier.
    set_of: Vec<u32>,
    sets: Vec<Vec<u32>>,
    /// `min l_{k−1}(s)` over `s ∈ S_k(x)`, for `k ≥ 1`.
    min_prev_l: Vec<u32>,
}

impl LayerState {
    fn contains_set(&self, outer: u32, inner: u32) -> bool {
        if outer == inner {
            return true;
        }
        let (a, b) = (&self.sets[outer as usize], &self.sets[inner as usize]);
        if b.len() > a.len() {
            return false;
        }
        let mut it = a.iter();
        b.iter().all(|e| it.any(|x| x == e))
    }
}

fn build_layer(
    space: &SpaceInstance,
    y_index: &NeighborIndex<'_>,
    f: &ScalarField,
    centers: Vec<usize>,
    n: Vec<u32>,
    prev: Option<&LayerState>,
) -> Result<LayerState> {
    let elements: Vec<BallElement> = centers
        .iter()
        .zip(&n)
        .map(|(&c, &nk)| BallElement {
            center: c,
            radius: dyadic(nk as i64),
        })
        .collect();
    let anchors: Vec<f64> = elements
        .par_iter()
        .map(|e| match y_index.nearest(e.center) {
            Some((yid, d)) if d < e.radius => Ok(f.at(yid)),
            _ => Err(Error::Invariant(format!(
                "cover ball at {} of radius {} holds no point of Y",
                e.center, e.radius
            ))),
        })
        .collect::<Result<_>>()?;
    let cover = BallCover::new(space, elements)?;
    let pou = partition(space, &cover)?;

    let total = space.len();
    let mut values = vec![f64::NAN; total];
    let mut l = vec![0u32; total];
    let mut set_of = vec![OFF; total];
    let mut min_prev_l = vec![0u32; total];
    let mut sets: Vec<Vec<u32>> = Vec::new();
    let mut interned: HashMap<Vec<u32>, u32> = HashMap::new();
    let ids = cover.carrier.ids();
    for chunk in ids.chunks(CHUNK) {
        let rows: Vec<(f64, u32, u32, Vec<u32>)> = chunk
            .par_iter()
            .map(|&x| {
                let weights = pou.weights_at(x);
                let (mut lo, mut hi, mut acc) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
                let mut max_n = 0;
                let mut min_l = u32::MAX;
                for &(i, w) in &weights {
                    let a = anchors[i];
                    lo = lo.min(a);
                    hi = hi.max(a);
                    acc += w * a;
                    max_n = max_n.max(n[i]);
                    if let Some(p) = prev {
                        min_l = min_l.min(p.l[centers[i]]);
                    }
                }
                let members = weights.iter().map(|&(i, _)| i as u32).collect();
                (acc.clamp(lo, hi), max_n + 1, min_l, members)
            })
            .collect();
        for (&x, (v, lx, ml, members)) in chunk.iter().zip(rows) {
            values[x] = v;
            l[x] = lx;
            min_prev_l[x] = ml;
            let next_id = sets.len() as u32;
            let id = *interned.entry(members).or_insert_with_key(|m| {
                sets.push(m.clone());
                next_id
            });
            set_of[x] = id;
        }
    }
    Ok(LayerState {
        centers,
        n,
        carrier: cover.carrier.clone(),
        values,
        l,
        set_of,
        sets,
        min_prev_l,
    })
}

enum Admission {
    Admitted(u32),
    FailedOsc,
    Dropped,
}

/// Decides whether `x ∈ X_k` joins `S_{k+1}` and with which `n_{k+1}(x)`.
#[allow(clippy::too_many_arguments)]
fn admit(
    x: usize,
    layer: &LayerState,
    x_index: &NeighborIndex<'_>,
    y_index: &NeighborIndex<'_>,
    f: &ScalarField,
    policy: ScalePolicy,
    resolution: f64,
    n_max: u32,
) -> Admission {
    let lx = layer.l[x];
    let bound = dyadic(lx as i64);
    let scale = policy
        .radius(|| y_index.nearest_other(x))
        .unwrap_or(resolution);
    if osc_in_ball(y_index, f, x, scale) >= bound {
        return Admission::FailedOsc;
    }
    let own = layer.set_of[x];
    let mut seen = HashSet::new();
    for n in lx..=n_max {
        let (inner, outer) = (dyadic(n as i64), dyadic(n as i64 - 1));
        if osc_in_ball(y_index, f, x, outer) >= bound {
            continue;
        }
        // Condition (2): every point of the small ball sees all of S_k(x).
        seen.clear();
        let mut ok = true;
        x_index.for_each_in_ball(x, inner, |z| {
            if ok && seen.insert(layer.set_of[z]) {
                ok = layer.set_of[z] != OFF && layer.contains_set(layer.set_of[z], own);
            }
        });
        if !ok {
            continue;
        }
        // Condition (3): no point of the large ball sees an element outside S_k(x).
        seen.clear();
        x_index.for_each_in_ball(x, outer, |z| {
            if ok && layer.set_of[z] != OFF && seen.insert(layer.set_of[z]) {
                ok = layer.contains_set(own, layer.set_of[z]);
            }
        });
        if !ok {
            continue;
        }
        // The conditions above only get easier as n grows; the anchor
        // condition only gets harder, so the first admissible n decides.
        return if y_index.count_in_ball(x, inner) > 0 {
            Admission::Admitted(n)
        } else {
            Admission::Dropped
        };
    }
    Admission::Dropped
}

/// Layered extension of a function continuous on a dense subset `Y`.
///
/// Layer `k` covers `X_k` by balls `B(s, 2^{-n_k(s)})`, `s ∈ S_k`, and blends
/// anchor values `f(y_s)` with `y_s` the nearest point of `Y` to `s`. A point
/// of `X_k` joins `S_{k+1}` when `f` oscillates by less than `2^{-l_k(x)}`
/// around it and some `n ≥ l_k(x)` up to `n_max` meets the nesting and
/// separation conditions while `B(x, 2^{-n})` still meets `Y`. A point takes
/// the value of the last layer whose carrier contains it.
///
/// The oscillation test uses the policy radius at `x` measured against `Y`.
/// Every layer checks `X_{k+1} ⊆ X_k`, `l_k(s) ≥ k + 1`, and against every
/// earlier layer `k ≥ 1` the bounds `|F_k − F_m| < 2^{1−l}` and, on `Y`,
/// `|F_k − f| < 2^{−l}` with `l` the smallest `l_{k−1}(s)` over `S_k(x)`.
pub fn layered_extension(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
    policy: ScalePolicy,
    max_layers: usize,
) -> Result<ExtensionReport> {
    if max_layers == 0 {
        return Err(Error::InvalidParameter(
            "max_layers must be at least 1".into(),
        ));
    }
    policy.validate()?;
    let f = check_inputs(space, y, f)?;
    let resolution = space.resolution();
    let y_index = NeighborIndex::new(space, y);
    let x_index = NeighborIndex::new(space, &space.all());
    let far: Vec<usize> = (0..space.len())
        .into_par_iter()
        .filter(|&x| y_index.nearest(x).is_none_or(|(_, d)| d > resolution))
        .collect();
    if let Some(&x) = far.first() {
        return Err(Error::Precondition(format!(
            "Y is not dense at resolution {resolution}: {} points are farther, first {x}",
            far.len()
        )));
    }
    let n_max = (1.0 / resolution).log2().ceil().max(0.0) as u32 + 4;

    let mut layers: Vec<LayerState> = Vec::new();
    let mut diags: Vec<LayerDiagnostics> = Vec::new();
    let mut checks = 0usize;
    let mut centers: Vec<usize> = (0..space.len()).collect();
    let mut n: Vec<u32> = vec![0; space.len()];
    loop {
        let k = layers.len();
        let layer = build_layer(space, &y_index, &f, centers, n, layers.last())?;
        for (&s, _) in layer.centers.iter().zip(&layer.n) {
            checks += 1;
            if (layer.l[s] as usize) < k + 1 {
                return Err(Error::Invariant(format!(
                    "layer {k}: l({s}) = {} is below {}",
                    layer.l[s],
                    k + 1
                )));
            }
        }
        if let Some(prev) = layers.last() {
            checks += 1;
            if !layer.carrier.is_subset(&prev.carrier)? {
                return Err(Error::Invariant(format!(
                    "layer {k} carrier is not inside layer {}",
                    k - 1
                )));
            }
        }
        checks += check_layer_bounds(&layers, &layer, k, y, &f)?;

        let mut diag = LayerDiagnostics {
            k,
            centers: layer.centers.len(),
            carrier: layer.carrier.len(),
            exits: 0,
            min_n: layer.n.iter().copied().min().unwrap_or(0),
            max_n: layer.n.iter().copied().max().unwrap_or(0),
            min_l: layer.carrier.iter().map(|x| layer.l[x]).min().unwrap_or(0),
            dropped_by_search: 0,
            failed_osc_test: 0,
            exit_patch: 0.0,
        };
        let mut next_centers = Vec::new();
        let mut next_n = Vec::new();
        if k + 1 < max_layers {
            let ids = layer.carrier.ids();
            let admitted: Vec<Admission> = ids
                .par_iter()
                .map(|&x| admit(x, &layer, &x_index, &y_index, &f, policy, resolution, n_max))
                .collect();
            for (x, a) in ids.into_iter().zip(admitted) {
                match a {
                    Admission::Admitted(nx) => {
                        next_centers.push(x);
                        next_n.push(nx);
                    }
                    Admission::FailedOsc => diag.failed_osc_test += 1,
                    Admission::Dropped => diag.dropped_by_search += 1,
                }
            }
        }
        layers.push(layer);
        diags.push(diag);
        if next_centers.is_empty() {
            break;
        }
        centers = next_centers;
        n = next_n;
    }

    // Paste: each point keeps the value of the last layer containing it.
    let mut exit_layer = vec![0usize; space.len()];
    let mut values = vec![0.0; space.len()];
    for (k, layer) in layers.iter().enumerate() {
        for x in layer.carrier.iter() {
            exit_layer[x] = k;
            values[x] = layer.values[x];
        }
    }
    for &k in &exit_layer {
        diags[k].exits += 1;
    }
    let mut patch_bound_violations = 0;
    for p in y.iter() {
        let k = exit_layer[p];
        let gap = (values[p] - f.at(p)).abs();
        diags[k].exit_patch = diags[k].exit_patch.max(gap);
        if gap > dyadic(k as i64 - 1) {
            patch_bound_violations += 1;
        }
    }
    let (field, log) = patch(space, values, y, &f)?;
    let diagnostics = Diagnostics::Layered {
        layers: diags,
        n_max,
        lemma_checks: checks,
        patch_bound_violations,
    };
    ExtensionReport::new(Method::Layered, field, y, &f, log, diagnostics, checks)
}

/// Checks the new layer `m` against every earlier layer `k ≥ 1`, and its own
/// values on `Y`. Returns the number of comparisons made.
fn check_layer_bounds(
    earlier: &[LayerState],
    layer: &LayerState,
    m: usize,
    y: &SubsetMask,
    f: &ScalarField,
) -> Result<usize> {
    let mut checks = 0;
    if m >= 1 {
        for p in layer.carrier.iter().filter(|&p| y.contains(p)) {
            checks += 1;
            let gap = (layer.values[p] - f.at(p)).abs();
            let bound = dyadic(layer.min_prev_l[p] as i64);
            if !(gap < bound) {
                return Err(Error::Invariant(format!(
                    "layer {m}: |F_{m}({p}) − f({p})| = {gap} is not below {bound}"
                )));
            }
        }
    }
    for (k, lower) in earlier.iter().enumerate().skip(1) {
        for x in layer.carrier.iter() {
            checks += 1;
            let gap = (lower.values[x] - layer.values[x]).abs();
            let bound = dyadic(lower.min_prev_l[x] as i64 - 1);
            if !(gap < bound) {
                return Err(Error::Invariant(format!(
                    "layers {k} and {m} at point {x}: gap {gap} is not below {bound}"
                )));
            }
        }
    }
    Ok(checks)
}
