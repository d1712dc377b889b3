use super::{SpaceId, SpaceInstance, SubsetMask};
use crate::error::{Error, Result};

/// A partial real-valued function on the points of one space.
///
/// Values are stored densely over the whole universe; entries off the domain
/// are zero and never observable through the accessors.
#[derive(Clone, PartialEq)]
pub struct ScalarField {
    domain: SubsetMask,
    values: Vec<f64>,
}

impl ScalarField {
    /// Builds a field from a dense value vector indexed by point id.
    pub fn new(domain: SubsetMask, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.universe() {
            return Err(Error::Schema(format!(
                "field has {} values for a space of {} points",
                values.len(),
                domain.universe()
            )));
        }
        for (id, v) in values.iter_mut().enumerate() {
            if domain.contains(id) {
                if !v.is_finite() {
                    return Err(Error::Schema(format!(
                        "field value at point {id} is not finite: {v}"
                    )));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(ScalarField { domain, values })
    }

    /// Builds a field from `(id, value)` pairs; the domain is the set of ids.
    pub fn from_pairs(
        space: &SpaceInstance,
        pairs: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut domain = space.empty_mask();
        let mut values = vec![0.0; space.len()];
        for (id, v) in pairs {
            domain.insert(id)?;
            values[id] = v;
        }
        Self::new(domain, values)
    }

    pub fn from_fn(domain: SubsetMask, mut value: impl FnMut(usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; domain.universe()];
        for id in domain.iter() {
            values[id] = value(id);
        }
        Self::new(domain, values)
    }

    pub fn constant(domain: SubsetMask, c: f64) -> Result<Self> {
        Self::from_fn(domain, |_| c)
    }

    pub fn space_id(&self) -> SpaceId {
        self.domain.space_id()
    }

    pub fn domain(&self) -> &SubsetMask {
        &self.domain
    }

    /// Dense values by point id; entries off the domain are zero.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, id: usize) -> Option<f64> {
        self.domain.contains(id).then(|| self.values[id])
    }

    pub fn value(&self, id: usize) -> Result<f64> {
        self.get(id)
            .ok_or_else(|| Error::NotInDomain(format!("point {id}")))
    }

    /// Value at a point known to be in the domain.
    #[inline]
    pub(crate) fn at(&self, id: usize) -> f64 {
        debug_assert!(self.domain.contains(id));
        self.values[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.domain.iter().map(|id| (id, self.values[id]))
    }

    /// Fails unless `subset` lies inside the domain.
    pub fn check_covers(&self, subset: &SubsetMask) -> Result<()> {
        if !subset.is_subset(&self.domain)? {
            let missing = subset.difference(&self.domain)?;
            return Err(Error::NotInDomain(format!(
                "subset (first missing point {})",
                missing.first().unwrap_or(0)
            )));
        }
        Ok(())
    }

    pub fn restrict(&self, subset: &SubsetMask) -> Result<ScalarField> {
        self.check_covers(subset)?;
        Self::new(subset.clone(), self.values.clone())
    }

    /// `max |f|` over the domain; 0 on an empty domain.
    pub fn sup_norm(&self) -> f64 {
        self.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    /// `max |f|` over `subset`, which must lie in the domain.
    pub fn sup_norm_on(&self, subset: &SubsetMask) -> Result<f64> {
        self.check_covers(subset)?;
        Ok(subset
            .iter()
            .map(|id| self.values[id].abs())
            .fold(0.0, f64::max))
    }

    /// Smallest and largest value; `None` on an empty domain.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.iter().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    fn zip_with(&self, other: &ScalarField, op: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        let domain = self.domain.intersection(&other.domain)?;
        Self::from_fn(domain, |id| op(self.values[id], other.values[id]))
    }

    /// Pointwise sum on the common domain.
    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Pointwise difference on the common domain.
    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `max |f − g|` over `subset`, which must lie in both domains.
    pub fn distance_on(&self, other: &ScalarField, subset: &SubsetMask) -> Result<f64> {
        self.check_covers(subset)?;
        other.check_covers(subset)?;
        Ok(subset
            .iter()
            .map(|id| (self.values[id] - other.values[id]).abs())
            .fold(0.0, f64::max))
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn rejects_non_finite_values_on_the_domain_only() {
        let space = instances::sequence_instance(3).unwrap();
        let domain = SubsetMask::from_ids(&space, [0, 1]).unwrap();
        assert!(ScalarField::new(domain.clone(), vec![0.0, f64::NAN, 1.0, 2.0]).is_err());
        let f = ScalarField::new(domain, vec![0.0, 1.0, f64::NAN, 2.0]).unwrap();
        assert_eq!(f.get(2), None);
        assert_eq!(f.raw()[2], 0.0);
        assert!(f.value(3).is_err());
    }

    #[test]
    fn arithmetic_uses_the_common_domain() {
        let space = instances::sequence_instance(3).unwrap();
        let f = ScalarField::from_pairs(&space, [(0, 1.0), (1, -2.0), (2, 0.5)]).unwrap();
        let g = ScalarField::from_pairs(&space, [(1, 1.0), (2, 0.25), (3, 9.0)]).unwrap();
        let s = f.add(&g).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(1, -1.0), (2, 0.75)]);
        assert_eq!(f.sub(&g).unwrap().get(2), Some(0.25));
        assert_eq!(f.sup_norm(), 2.0);
        assert_eq!(f.range(), Some((-2.0, 1.0)));
        let part = SubsetMask::from_ids(&space, [0, 2]).unwrap();
        assert_eq!(f.restrict(&part).unwrap().sup_norm(), 1.0);
        assert!(g.restrict(&part).is_err());
    }
}
