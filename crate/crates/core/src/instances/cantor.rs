//! Eventually-constant points of the Cantor space `{0,1}^ω`, the truncated
//! Cantor instance and the block-parity function used for the sharpness
//! experiment.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::space::{Metric, PointRecord, ScalarField, SpaceInstance, SubsetMask};

/// Longest head a [`CantorPoint`] may carry. Two distinct points with heads of
/// length at most `d` already differ within the first `d + 1` coordinates, so
/// a 64-bit expansion separates every pair.
pub const MAX_HEAD: usize = 62;

/// An eventually-constant binary sequence `(head, tail^ω)`.
///
/// Stored in canonical form: the head never ends with the tail symbol, which
/// makes equality of the represented sequences coincide with structural
/// equality.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CantorPoint {
    // Coordinate i (1-based) lives at bit 64 - i.
    bits: u64,
    len: u8,
    tail: u8,
}

impl CantorPoint {
    /// Builds the canonical point for `head` followed by `tail` forever.
    pub fn new(head: &[u8], tail: u8) -> Result<Self> {
        if tail > 1 {
            return Err(Error::InvalidParameter(format!(
                "tail must be 0 or 1, got {tail}"
            )));
        }
        let mut len = head.len();
        while len > 0 && head[len - 1] == tail {
            len -= 1;
        }
        if len > MAX_HEAD {
            return Err(Error::InvalidParameter(format!(
                "canonical head of length {len} exceeds the supported {MAX_HEAD}"
            )));
        }
        let mut bits = 0u64;
        for (i, &b) in head[..len].iter().enumerate() {
            match b {
                0 => {}
                1 => bits |= 1u64 << (63 - i),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "head symbol {other} is not a bit"
                    )))
                }
            }
        }
        Ok(CantorPoint {
            bits,
            len: len as u8,
            tail,
        })
    }

    pub fn head_len(&self) -> usize {
        self.len as usize
    }

    pub fn tail(&self) -> u8 {
        self.tail
    }

    pub fn head(&self) -> Vec<u8> {
        (0..self.head_len())
            .map(|i| self.coordinate(i + 1))
            .collect()
    }

    /// Coordinate `i` of the represented sequence, numbered from 1.
    pub fn coordinate(&self, i: usize) -> u8 {
        assert!(i >= 1, "coordinates are numbered from 1");
        if i <= self.head_len() {
            ((self.bits >> (64 - i)) & 1) as u8
        } else {
            self.tail
        }
    }

    /// The first 64 coordinates packed most-significant first.
    pub fn key(&self) -> u64 {
        if self.tail == 1 {
            self.bits | (u64::MAX >> self.len)
        } else {
            self.bits
        }
    }

    /// `2^{-m}` where `m` is the first coordinate at which the sequences differ.
    pub fn distance(&self, other: &CantorPoint) -> f64 {
        key_distance(self.key(), other.key())
    }

    pub fn label(&self) -> String {
        let mut s: String = self
            .head()
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect();
        s.push('(');
        s.push(if self.tail == 1 { '1' } else { '0' });
        s.push(')');
        s
    }

    /// Parses the `head(tail)` form produced by [`CantorPoint::label`].
    pub fn parse(label: &str) -> Result<Self> {
        let bad = || Error::Schema(format!("malformed Cantor label {label:?}"));
        let open = label.find('(').ok_or_else(bad)?;
        if !label.ends_with(')') || label.len() != open + 3 {
            return Err(bad());
        }
        let head = label[..open]
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<u8>>>()?;
        let tail = match &label[open + 1..open + 2] {
            "0" => 0,
            "1" => 1,
            _ => return Err(bad()),
        };
        CantorPoint::new(&head, tail)
    }
}

impl Ord for CantorPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for CantorPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CantorPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub(crate) fn key_distance(a: u64, b: u64) -> f64 {
    let x = a ^ b;
    if x == 0 {
        0.0
    } else {
        let first = x.leading_zeros() as i32 + 1;
        (-first as f64).exp2()
    }
}

/// All canonical points with head length at most `depth`, in lexicographic
/// order of the represented sequences.
pub fn enumerate_points(depth: usize) -> Result<Vec<CantorPoint>> {
    if depth > MAX_HEAD {
        return Err(Error::InvalidParameter(format!(
            "Cantor depth {depth} exceeds the supported {MAX_HEAD}"
        )));
    }
    let mut points = Vec::with_capacity(1usize << (depth + 1));
    for tail in 0..=1u8 {
        for len in 0..=depth {
            for word in 0..(1u64 << len) {
                // Canonical heads do not end with the tail symbol.
                if len > 0 && (word & 1) as u8 == tail {
                    continue;
                }
                let head: Vec<u8> = (0..len)
                    .map(|i| ((word >> (len - 1 - i)) & 1) as u8)
                    .collect();
                points.push(CantorPoint::new(&head, tail)?);
            }
        }
    }
    points.sort();
    Ok(points)
}

/// The truncated Cantor space of all eventually-constant sequences whose
/// canonical head has length at most `depth`.
///
/// Ids follow sequence order. Pair it with [`tail_zero_subset`] and
/// [`ex1_function`] for the sharpness experiment.
pub fn cantor_instance(depth: usize) -> Result<SpaceInstance> {
    if depth < 2 {
        return Err(Error::InvalidParameter(format!(
            "Cantor depth must be at least 2, got {depth}"
        )));
    }
    let points = enumerate_points(depth)?;
    let records = points
        .iter()
        .enumerate()
        .map(|(id, p)| PointRecord {
            id,
            label: Some(p.label()),
        })
        .collect();
    let metric = Metric::cantor(depth, points)?;
    let resolution = (-(depth as f64)).exp2();
    SpaceInstance::new(format!("cantor-{depth}"), resolution, records, metric)
}

/// The tail-0 points, i.e. sequences with infinitely many zeros.
pub fn tail_zero_subset(space: &SpaceInstance) -> Result<SubsetMask> {
    let points = space
        .metric()
        .cantor_points()
        .ok_or_else(|| Error::Precondition("the instance does not use the Cantor metric".into()))?;
    SubsetMask::from_ids(
        space,
        points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.tail() == 0)
            .map(|(id, _)| id),
    )
}

/// Exact value of `h(g(x))` as a ternary fraction `numerator / 3^exponent`.
///
/// `g` sends `(1^{n1}, 0, 1^{n2}, 0, ...)` to the parities `(n1 mod 2, n2 mod 2, ...)`
/// and `h` embeds a binary sequence into the middle-thirds Cantor set
/// via `Σ 2 e_k / 3^k`. Only tail-0 points have infinitely many blocks.
pub fn ex1_exact(point: &CantorPoint) -> Result<(u128, u32)> {
    if point.tail() != 0 {
        return Err(Error::NotInDomain(format!(
            "point {} (the block-parity function is defined on tail-0 points only)",
            point.label()
        )));
    }
    let parities = block_parities(&point.head());
    let exponent = parities.len() as u32;
    let mut numerator: u128 = 0;
    for &p in &parities {
        numerator = numerator * 3 + 2 * p as u128;
    }
    Ok((numerator, exponent))
}

/// Parities of the blocks of ones in `head` followed by zeros forever. Blocks
/// beyond the head are empty and contribute nothing.
pub fn block_parities(head: &[u8]) -> Vec<u8> {
    // A canonical tail-0 head ends in 1 (or is empty); the first tail zero
    // closes the last block.
    let mut out = Vec::new();
    let mut run = 0usize;
    for &b in head {
        if b == 1 {
            run += 1;
        } else {
            out.push((run % 2) as u8);
            run = 0;
        }
    }
    if !head.is_empty() {
        out.push((run % 2) as u8);
    }
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

pub fn ex1_value(point: &CantorPoint) -> Result<f64> {
    let (num, exp) = ex1_exact(point)?;
    Ok(ternary_to_f64(num, exp))
}

pub(crate) fn ternary_to_f64(numerator: u128, exponent: u32) -> f64 {
    if numerator == 0 {
        return 0.0;
    }
    let den = 3u128.pow(exponent);
    // Both fit comfortably in u128 for exponent <= 63; the quotient is
    // formed in f64 from the exact integers.
    numerator as f64 / den as f64
}

/// The block-parity function on the tail-0 points of a Cantor instance.
pub fn ex1_function(space: &SpaceInstance) -> Result<ScalarField> {
    let points = space.metric().cantor_points().ok_or_else(|| {
        Error::Precondition("the block-parity function needs a Cantor instance".into())
    })?;
    let domain = tail_zero_subset(space)?;
    let mut values = vec![0.0; space.len()];
    for id in domain.iter() {
        values[id] = ex1_value(&points[id])?;
    }
    ScalarField::new(domain, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_strips_trailing_tail_symbols() {
        let a = CantorPoint::new(&[1, 0], 0).unwrap();
        let b = CantorPoint::new(&[1], 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.distance(&b), 0.0);
        let c = CantorPoint::new(&[0, 1, 1, 1], 1).unwrap();
        assert_eq!(c.head(), vec![0]);
    }

    #[test]
    fn prefix_metric_examples() {
        let all_ones = CantorPoint::new(&[], 1).unwrap();
        let one_then_zeros = CantorPoint::new(&[1], 0).unwrap();
        assert_eq!(all_ones.distance(&one_then_zeros), 0.25);
        let zeros = CantorPoint::new(&[], 0).unwrap();
        assert_eq!(zeros.distance(&all_ones), 0.5);
    }

    #[test]
    fn enumeration_counts_match_brute_force() {
        for depth in 2..=8usize {
            // Enumerate every head of length <= depth with both tails and
            // deduplicate by the represented sequence (first depth + 2 coordinates).
            let mut seqs = std::collections::BTreeSet::new();
            for tail in 0..=1u8 {
                for len in 0..=depth {
                    for word in 0..(1u32 << len) {
                        let seq: Vec<u8> = (0..depth + 2)
                            .map(|i| {
                                if i < len {
                                    ((word >> (len - 1 - i)) & 1) as u8
                                } else {
                                    tail
                                }
                            })
                            .collect();
                        seqs.insert(seq);
                    }
                }
            }
            let points = enumerate_points(depth).unwrap();
            assert_eq!(points.len(), seqs.len(), "depth {depth}");
            assert_eq!(points.len(), 1usize << (depth + 1));
        }
    }

    #[test]
    fn labels_round_trip() {
        for p in enumerate_points(4).unwrap() {
            assert_eq!(CantorPoint::parse(&p.label()).unwrap(), p);
        }
        assert!(CantorPoint::parse("10(2)").is_err());
        assert!(CantorPoint::parse("1x(0)").is_err());
    }

    #[test]
    fn ex1_values() {
        let zero = CantorPoint::new(&[], 0).unwrap();
        assert_eq!(ex1_value(&zero).unwrap(), 0.0);
        // j full "10" blocks then zeros: 1 - 3^{-j}.
        for j in 1..=6usize {
            let head: Vec<u8> = std::iter::repeat([1u8, 0]).take(j).flatten().collect();
            let p = CantorPoint::new(&head, 0).unwrap();
            let (num, exp) = ex1_exact(&p).unwrap();
            assert_eq!(exp as usize, j);
            assert_eq!(num, 3u128.pow(j as u32) - 1);
        }
        assert!(ex1_value(&CantorPoint::new(&[], 1).unwrap()).is_err());
    }

    #[test]
    fn ex1_value_ignores_even_blocks() {
        // (1,1,0, 1, 0^ω): blocks 2 and 1 -> parities (0, 1) -> 2/9.
        let p = CantorPoint::new(&[1, 1, 0, 1], 0).unwrap();
        assert_eq!(ex1_exact(&p).unwrap(), (2, 2));
    }
}
