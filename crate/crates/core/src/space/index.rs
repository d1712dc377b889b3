use super::kdtree::KdTree;
use super::{Metric, SpaceInstance, SubsetMask};

/// Below this many members a linear scan beats building a tree.
const SCAN_LIMIT: usize = 48;

enum Backend {
    Scan,
    Kd(KdTree),
    // Members sorted by their 64-bit sequence key; prefix balls are ranges.
    Prefix(Vec<(u64, usize)>),
}

/// Ball and nearest-neighbour queries restricted to one subset.
///
/// Every query answers exactly what a linear scan with the space metric
/// would: `{ y ∈ subset : d(center, y) < radius }`.
pub struct NeighborIndex<'a> {
    space: &'a SpaceInstance,
    members: Vec<usize>,
    backend: Backend,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(space: &'a SpaceInstance, subset: &SubsetMask) -> Self {
        let members = subset.ids();
        let backend = match space.metric() {
            Metric::Cantor { keys, .. } => {
                let mut sorted: Vec<(u64, usize)> =
                    members.iter().map(|&id| (keys[id], id)).collect();
                sorted.sort_unstable();
                Backend::Prefix(sorted)
            }
            Metric::Euclidean { dim, coords } if members.len() > SCAN_LIMIT => {
                Backend::Kd(KdTree::build(*dim, coords, &members))
            }
            _ => Backend::Scan,
        };
        NeighborIndex {
            space,
            members,
            backend,
        }
    }

    pub fn space(&self) -> &'a SpaceInstance {
        self.space
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Calls `visit` for every member strictly closer than `radius` to
    /// `center`. `center` need not be a member. Visit order is unspecified.
    pub fn for_each_in_ball(&self, center: usize, radius: f64, mut visit: impl FnMut(usize)) {
        match &self.backend {
            Backend::Scan => {
                for &y in &self.members {
                    if self.space.dist(center, y) < radius {
                        visit(y);
                    }
                }
            }
            Backend::Kd(tree) => {
                let query = self
                    .space
                    .metric()
                    .coords(center)
                    .expect("euclidean metric");
                tree.for_each_within(query, radius, &mut visit);
            }
            Backend::Prefix(sorted) => {
                let keys = self.space.metric().cantor_keys().expect("cantor metric");
                let (lo, hi) = prefix_range(keys[center], radius);
                let start = sorted.partition_point(|&(k, _)| k < lo);
                for &(k, id) in &sorted[start..] {
                    if k > hi {
                        break;
                    }
                    visit(id);
                }
            }
        }
    }

    /// Sorted ids of the members in the open ball.
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(center, radius, |y| out.push(y));
        out.sort_unstable();
        out
    }

    /// Number of members in the open ball.
    pub fn count_in_ball(&self, center: usize, radius: f64) -> usize {
        let mut count = 0;
        self.for_each_in_ball(center, radius, |_| count += 1);
        count
    }

    pub fn to_mask(&self, ids: &[usize]) -> SubsetMask {
        SubsetMask::from_sorted_unchecked(self.space.id(), self.space.len(), ids)
    }

    /// Nearest member to `x` (possibly `x` itself) as `(id, distance)`,
    /// smallest id on ties.
    pub fn nearest(&self, x: usize) -> Option<(usize, f64)> {
        self.nearest_excluding(x, None)
    }

    /// Distance from `x` to the nearest member other than `x`.
    pub fn nearest_other(&self, x: usize) -> Option<f64> {
        self.nearest_excluding(x, Some(x)).map(|(_, d)| d)
    }

    /// Nearest member other than `x` as `(id, distance)`, smallest id on ties.
    pub fn nearest_other_point(&self, x: usize) -> Option<(usize, f64)> {
        self.nearest_excluding(x, Some(x))
    }

    /// All members other than `x` at the minimal distance from `x`.
    pub fn nearest_others(&self, x: usize) -> Option<(f64, Vec<usize>)> {
        let d = self.nearest_other(x)?;
        let mut ties = Vec::new();
        self.for_each_in_ball(x, next_up(d), |y| {
            if y != x && self.space.dist(x, y) == d {
                ties.push(y);
            }
        });
        ties.sort_unstable();
        Some((d, ties))
    }

    fn nearest_excluding(&self, x: usize, exclude: Option<usize>) -> Option<(usize, f64)> {
        match &self.backend {
            Backend::Scan => {
                let mut best: Option<(usize, f64)> = None;
                for &y in &self.members {
                    if Some(y) == exclude {
                        continue;
                    }
                    let d = self.space.dist(x, y);
                    match best {
                        Some((_, bd)) if d >= bd => {}
                        _ => best = Some((y, d)),
                    }
                }
                best
            }
            Backend::Kd(tree) => {
                let query = self.space.metric().coords(x).expect("euclidean metric");
                tree.nearest(query, exclude).map(|(d, id)| (id, d))
            }
            Backend::Prefix(sorted) => {
                let keys = self.space.metric().cantor_keys().expect("cantor metric");
                let key = keys[x];
                let pos = sorted.partition_point(|&(k, _)| k < key);
                // In an ultrametric the nearest points are sequence-order
                // neighbours; scan outward past the excluded point.
                let mut best: Option<(usize, f64)> = None;
                let mut consider = |slot: usize| {
                    let (k, id) = sorted[slot];
                    if Some(id) == exclude {
                        return false;
                    }
                    let d = super::super::instances::cantor::key_distance(key, k);
                    match best {
                        Some((bid, bd)) if d > bd || (d == bd && id > bid) => {}
                        _ => best = Some((id, d)),
                    }
                    true
                };
                let mut lo = pos;
                while lo > 0 {
                    lo -= 1;
                    if consider(lo) {
                        break;
                    }
                }
                let mut hi = pos;
                while hi < sorted.len() {
                    let stop = consider(hi);
                    hi += 1;
                    if stop {
                        break;
                    }
                }
                // Equal-distance neighbours further out can only tie; settle
                // ties on the smallest id with a bounded scan.
                if let Some((_, d)) = best {
                    let mut ties = Vec::new();
                    self.for_each_in_ball(x, next_up(d), |y| {
                        if Some(y) != exclude && self.space.dist(x, y) == d {
                            ties.push(y);
                        }
                    });
                    if let Some(&first) = ties.iter().min() {
                        best = Some((first, d));
                    }
                }
                best
            }
        }
    }
}

/// Smallest double strictly greater than a positive finite `d`.
pub(crate) fn next_up(d: f64) -> f64 {
    f64::from_bits(d.to_bits() + 1)
}

/// Key range `[lo, hi]` of the sequences within prefix distance `< radius`
/// of `key`.
fn prefix_range(key: u64, radius: f64) -> (u64, u64) {
    // Distances are 2^{-m}; find the smallest m with 2^{-m} < radius. Points
    // qualify iff they first differ at coordinate >= m, i.e. share the first
    // m - 1 coordinates.
    let mut m = 1u32;
    while m <= 64 && (-(m as f64)).exp2() >= radius {
        m += 1;
    }
    let shared = m - 1;
    if shared == 0 {
        return (0, u64::MAX);
    }
    if shared >= 64 {
        return (key, key);
    }
    let mask = u64::MAX << (64 - shared);
    (key & mask, (key & mask) | !mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use proptest::prelude::*;

    fn scan_ball(space: &SpaceInstance, within: &SubsetMask, c: usize, r: f64) -> Vec<usize> {
        within.iter().filter(|&y| space.dist(c, y) < r).collect()
    }

    #[test]
    fn prefix_ranges() {
        assert_eq!(prefix_range(0xF000_0000_0000_0000, 0.75), (0, u64::MAX));
        // radius 1/2: need 2^{-m} < 1/2 -> m = 2 -> share 1 coordinate.
        let (lo, hi) = prefix_range(0xF000_0000_0000_0000, 0.5);
        assert_eq!(lo, 0x8000_0000_0000_0000);
        assert_eq!(hi, u64::MAX);
        assert_eq!(prefix_range(7, 1e-300), (7, 7));
    }

    #[test]
    fn cantor_index_matches_scan() {
        let space = instances::cantor_instance(6).unwrap();
        let sub = SubsetMask::from_ids(&space, (0..space.len()).filter(|i| i % 3 != 1)).unwrap();
        let index = NeighborIndex::new(&space, &sub);
        for c in (0..space.len()).step_by(5) {
            for r in [1.0, 0.5, 0.3, 0.25, 0.1, 1.0 / 64.0, 1.0 / 128.0, 0.004] {
                assert_eq!(
                    index.ball(c, r),
                    scan_ball(&space, &sub, c, r),
                    "c={c} r={r}"
                );
            }
            let scan_nn = sub
                .iter()
                .filter(|&y| y != c)
                .map(|y| (space.dist(c, y), y))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(index.nearest_other_point(c).map(|(id, d)| (d, id)), scan_nn);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kd_index_matches_scan(seed in 0u64..1000, n in 50usize..400, dim in 1usize..4, r in 0.01f64..0.6) {
            let space = instances::random_instance(seed, n, dim).unwrap();
            let sub = SubsetMask::from_ids(&space, (0..n).filter(|i| (i * 7 + seed as usize) % 5 != 0)).unwrap();
            let index = NeighborIndex::new(&space, &sub);
            for c in (0..n).step_by(17) {
                prop_assert_eq!(index.ball(c, r), scan_ball(&space, &sub, c, r));
                let scan_nn = sub
                    .iter()
                    .filter(|&y| y != c)
                    .map(|y| (space.dist(c, y), y))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                prop_assert_eq!(index.nearest_other_point(c).map(|(id, d)| (d, id)), scan_nn);
            }
        }
    }
}
