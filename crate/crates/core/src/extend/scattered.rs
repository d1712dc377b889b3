use super::{check_inputs, patch, Diagnostics, ExtensionReport, Method};
use crate::error::{Error, Result};
use crate::space::{
    cb_filtration, CbTerminal, Metric, NeighborIndex, ScalarField, ScalePolicy,
    ScatteredDecomposition, SpaceInstance, SubsetMask,
};

/// Largest power of two not above `r`.
fn dyadic_floor(r: f64) -> f64 {
    r.log2().floor().exp2()
}

struct Builder<'a> {
    space: &'a SpaceInstance,
    everywhere: NeighborIndex<'a>,
    y: &'a SubsetMask,
    f: &'a ScalarField,
    decomposition: ScatteredDecomposition,
    values: Vec<f64>,
    regions: usize,
    shells: usize,
    windows: usize,
}

impl Builder<'_> {
    fn rank(&self, x: usize) -> usize {
        self.decomposition.rank[x].expect("every point has a rank in a scattered space")
    }

    fn delta(&self, x: usize) -> f64 {
        self.decomposition.isolation[x].expect("every point has an isolation distance")
    }

    fn mask(&self, ids: &[usize]) -> Result<SubsetMask> {
        SubsetMask::from_ids(self.space, ids.iter().copied())
    }

    /// Writes an extension of `f` restricted to `region` into `values`.
    fn extend(&mut self, region: &[usize]) -> Result<()> {
        if region.is_empty() {
            return Ok(());
        }
        self.regions += 1;
        let top = region
            .iter()
            .map(|&x| self.rank(x))
            .max()
            .expect("nonempty");
        let region_mask = self.mask(region)?;
        if top == 0 {
            // Every point is isolated: anchor each one at its nearest Y point.
            let anchors = NeighborIndex::new(self.space, &region_mask.intersection(self.y)?);
            for &z in region {
                self.values[z] = match anchors.nearest(z) {
                    Some((p, _)) => self.f.at(p),
                    None => 0.0,
                };
            }
            return Ok(());
        }
        let index = NeighborIndex::new(self.space, &region_mask);
        let tops: Vec<usize> = region
            .iter()
            .copied()
            .filter(|&x| self.rank(x) == top)
            .collect();
        let mut in_w1 = self.space.empty_mask();
        for &x in &tops {
            let rho = dyadic_floor((self.delta(x) / 3.0).min(1.0));
            let w1 = index.ball(x, rho);
            for &z in &w1 {
                in_w1.insert(z)?;
            }
            let fx = if self.y.contains(x) {
                self.f.at(x)
            } else {
                0.0
            };
            self.values[x] = fx;
            // Shells U_n = W_n ∖ W_{n+1} with W_n = B(x, ρ 2^{1−n}), until W_n = {x}.
            let mut outer = w1;
            let mut radius = rho;
            let mut n = 0;
            while outer.len() > 1 {
                n += 1;
                radius /= 2.0;
                let inner = index.ball(x, radius);
                let shell: Vec<usize> = outer
                    .iter()
                    .copied()
                    .filter(|z| inner.binary_search(z).is_err())
                    .collect();
                self.shells += 1;
                self.extend(&shell)?;
                self.place_windows(&shell, n, fx)?;
                outer = inner;
            }
        }
        let rest: Vec<usize> = region
            .iter()
            .copied()
            .filter(|&z| !in_w1.contains(z))
            .collect();
        self.extend(&rest)
    }

    /// Keeps the recursive values on windows `V_y` around the `Y` points of
    /// `shell` and sets the rest of the shell to `fx`.
    fn place_windows(&mut self, shell: &[usize], n: usize, fx: f64) -> Result<()> {
        let shell_mask = self.mask(shell)?;
        let mut keep = self.space.empty_mask();
        for &y in shell.iter().filter(|&&y| self.y.contains(y)) {
            let cap = self.delta(y).min(1.0 / n as f64);
            let fy = self.f.at(y);
            let mut radius = dyadic_floor((self.delta(y) / 3.0).min(1.0 / n as f64));
            loop {
                let ball = self.everywhere.ball(y, radius);
                let inside = ball.iter().all(|&z| shell_mask.contains(z));
                let close = ball.iter().all(|&z| (self.values[z] - fy).abs() < cap);
                if inside && close {
                    for z in ball {
                        keep.insert(z)?;
                    }
                    break;
                }
                radius /= 2.0;
            }
            self.windows += 1;
        }
        for &z in shell {
            if !keep.contains(z) {
                self.values[z] = fx;
            }
        }
        Ok(())
    }
}

/// Extension of `f` from `Y` on a scattered space whose balls are clopen at
/// resolution: the Cantor metric or points on a line.
///
/// Recurses on Cantor–Bendixson rank. The top-rank points of a region get
/// disjoint shells `B(x, ρ 2^{1−n}) ∖ B(x, ρ 2^{−n})` with `ρ ≤ δ_x / 3`; each
/// shell is extended recursively, its values are kept only on windows around
/// its `Y` points where they stay close to `f(y)`, and the rest of the shell
/// takes `F(x)`, which is `f(x)` on `Y` and 0 elsewhere. The remainder of the
/// region is extended recursively.
pub fn scattered_extension(
    space: &SpaceInstance,
    y: &SubsetMask,
    f: &ScalarField,
    policy: ScalePolicy,
) -> Result<ExtensionReport> {
    let f = check_inputs(space, y, f)?;
    match space.metric() {
        Metric::Cantor { .. } => {}
        Metric::Euclidean { dim: 1, .. } => {}
        _ => {
            return Err(Error::Precondition(
                "scattered extension needs balls that are clopen at resolution: \
                 only the Cantor metric and points on a line are supported"
                    .into(),
            ))
        }
    }
    let decomposition = cb_filtration(space, &space.all(), policy)?;
    if let CbTerminal::Saturated(n) = decomposition.terminal {
        return Err(Error::Precondition(format!(
            "the space is not scattered at resolution: its derived sets stall at level {n}"
        )));
    }
    let top_rank = decomposition.max_rank().unwrap_or(0);
    let mut builder = Builder {
        space,
        everywhere: NeighborIndex::new(space, &space.all()),
        y,
        f: &f,
        decomposition,
        values: vec![0.0; space.len()],
        regions: 0,
        shells: 0,
        windows: 0,
    };
    let all: Vec<usize> = (0..space.len()).collect();
    builder.extend(&all)?;
    let diagnostics = Diagnostics::Scattered {
        top_rank,
        regions: builder.regions,
        shells: builder.shells,
        windows: builder.windows,
    };
    let (field, log) = patch(space, builder.values, y, &f)?;
    ExtensionReport::new(Method::Scattered, field, y, &f, log, diagnostics, 0)
}
