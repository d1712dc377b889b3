//! A static k-d tree over a subset of Euclidean points.
//!
//! Pruning works on coordinates; the final membership test always goes
//! through the space metric so results agree bit-for-bit with a linear scan.

use super::metric::euclidean;

const LEAF_SIZE: usize = 12;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

pub(crate) struct KdTree {
    dim: usize,
    // Member ids and their coordinates, permuted into tree order.
    ids: Vec<usize>,
    coords: Vec<f64>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub(crate) fn build(dim: usize, all_coords: &[f64], members: &[usize]) -> Self {
        let mut order: Vec<usize> = (0..members.len()).collect();
        let mut tree = KdTree {
            dim,
            ids: Vec::with_capacity(members.len()),
            coords: Vec::with_capacity(members.len() * dim),
            nodes: Vec::new(),
        };
        let point = |slot: usize| &all_coords[members[slot] * dim..(members[slot] + 1) * dim];
        if !members.is_empty() {
            tree.split(&mut order, 0, &point);
        }
        for &slot in &order {
            tree.ids.push(members[slot]);
            tree.coords.extend_from_slice(point(slot));
        }
        tree
    }

    fn split<'c>(
        &mut self,
        order: &mut [usize],
        offset: usize,
        point: &impl Fn(usize) -> &'c [f64],
    ) -> usize {
        let slot = self.nodes.len();
        if order.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf {
                start: offset,
                end: offset + order.len(),
            });
            return slot;
        }
        // Split along the dimension of largest spread.
        let mut best_dim = 0;
        let mut best_spread = -1.0;
        for d in 0..self.dim {
            let (lo, hi) = order
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                    let v = point(s)[d];
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            point(a)[best_dim]
                .total_cmp(&point(b)[best_dim])
                .then(a.cmp(&b))
        });
        let value = point(order[mid])[best_dim];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let (lo, hi) = order.split_at_mut(mid);
        let left = self.split(lo, offset, point);
        let right = self.split(hi, offset + mid, point);
        self.nodes[slot] = Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        };
        slot
    }

    fn coords_at(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Visits every member `y` with `dist(query, y) < radius`.
    pub(crate) fn for_each_within(
        &self,
        query: &[f64],
        radius: f64,
        visit: &mut impl FnMut(usize),
    ) {
        if self.ids.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for slot in start..end {
                        if euclidean(query, self.coords_at(slot)) < radius {
                            visit(self.ids[slot]);
                        }
                    }
                }
                Node::Split {
                    dim,
                    value,
                    left,
                    right,
                } => {
                    // Conservative on both sides; the exact test happens at the leaves.
                    if query[dim] - radius <= value {
                        stack.push(left);
                    }
                    if query[dim] + radius >= value {
                        stack.push(right);
                    }
                }
            }
        }
    }

    /// Nearest member other than `exclude` as `(distance, id)`, ties broken
    /// by the smallest id.
    pub(crate) fn nearest(&self, query: &[f64], exclude: Option<usize>) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        if !self.ids.is_empty() {
            self.nearest_in(0, query, exclude, &mut best);
        }
        best
    }

    fn nearest_in(
        &self,
        node: usize,
        query: &[f64],
        exclude: Option<usize>,
        best: &mut Option<(f64, usize)>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let id = self.ids[slot];
                    if Some(id) == exclude {
                        continue;
                    }
                    let d = euclidean(query, self.coords_at(slot));
                    let better = match *best {
                        None => true,
                        Some((bd, bid)) => d < bd || (d == bd && id < bid),
                    };
                    if better {
                        *best = Some((d, id));
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let delta = query[dim] - value;
                let (near, far) = if delta <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_in(near, query, exclude, best);
                let must_visit = match *best {
                    None => true,
                    // `<=` keeps equal-distance candidates with smaller ids reachable.
                    Some((bd, _)) => delta.abs() <= bd,
                };
                if must_visit {
                    self.nearest_in(far, query, exclude, best);
                }
            }
        }
    }
}
