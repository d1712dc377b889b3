use std::fmt;

use fixedbitset::FixedBitSet;

use super::{SpaceId, SpaceInstance};
use crate::error::{Error, Result};

/// A subset of the points of one [`SpaceInstance`].
///
/// Masks remember which space they were built for; every binary operation
/// between masks of different spaces is refused.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    space: SpaceId,
    bits: FixedBitSet,
}

impl SubsetMask {
    pub fn empty(space: &SpaceInstance) -> Self {
        Self::empty_for(space.id(), space.len())
    }

    pub(crate) fn empty_for(space: SpaceId, n: usize) -> Self {
        SubsetMask {
            space,
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(space: &SpaceInstance) -> Self {
        let mut mask = Self::empty(space);
        mask.bits.insert_range(..);
        mask
    }

    pub fn from_ids<I>(space: &SpaceInstance, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut mask = Self::empty(space);
        for id in ids {
            mask.insert(id)?;
        }
        Ok(mask)
    }

    pub(crate) fn from_sorted_unchecked(space: SpaceId, n: usize, ids: &[usize]) -> Self {
        let mut mask = Self::empty_for(space, n);
        for &id in ids {
            mask.bits.insert(id);
        }
        mask
    }

    pub fn space_id(&self) -> SpaceId {
        self.space
    }

    /// Size of the universe (number of points of the bound space).
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        id < self.bits.len() && self.bits.contains(id)
    }

    pub fn insert(&mut self, id: usize) -> Result<()> {
        if id >= self.bits.len() {
            return Err(Error::UnknownPoint(id));
        }
        self.bits.insert(id);
        Ok(())
    }

    pub fn remove(&mut self, id: usize) {
        if id < self.bits.len() {
            self.bits.set(id, false);
        }
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    /// Member ids in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn first(&self) -> Option<usize> {
        self.bits.minimum()
    }

    pub fn check_space(&self, other: &SubsetMask) -> Result<()> {
        if self.space != other.space || self.universe() != other.universe() {
            return Err(Error::ForeignMask);
        }
        Ok(())
    }

    pub fn check_bound_to(&self, space: &SpaceInstance) -> Result<()> {
        if self.space != space.id() || self.universe() != space.len() {
            return Err(Error::ForeignMask);
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &SubsetMask) -> Result<bool> {
        self.check_space(other)?;
        Ok(self.bits.is_subset(&other.bits))
    }

    pub fn union(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.check_space(other)?;
        let mut out = self.clone();
        out.bits.union_with(&other.bits);
        Ok(out)
    }

    pub fn intersection(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.check_space(other)?;
        let mut out = self.clone();
        out.bits.intersect_with(&other.bits);
        Ok(out)
    }

    pub fn difference(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.check_space(other)?;
        let mut out = self.clone();
        out.bits.difference_with(&other.bits);
        Ok(out)
    }

    pub fn complement(&self) -> SubsetMask {
        let mut out = self.clone();
        out.bits.toggle_range(..);
        out
    }

    /// Members of `self` missing from `other`.
    pub fn violations_against(&self, other: &SubsetMask) -> Result<Vec<usize>> {
        Ok(self.difference(other)?.ids())
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
