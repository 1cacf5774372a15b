use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A point in objective space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySet("objective vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "objective vector has non-finite entries: {values:?}"
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Objective vectors of one decision over all sampled scenarios, stored row-major.
///
/// The first point is the nominal realization when the set was produced by
/// [`crate::ocp::evaluate_realizations`] on a grid centred on zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSet {
    dim: usize,
    values: Vec<f64>,
}

impl RealizationSet {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("objective dimension must be >= 1".into()));
        }
        if values.is_empty() {
            return Err(Error::EmptySet("realization set"));
        }
        if values.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} values do not split into points of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("realization set has non-finite entries".into()));
        }
        Ok(Self { dim, values })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet("realization set"))?;
        let dim = first.as_ref().len();
        let mut values = Vec::with_capacity(dim * points.len());
        for p in points {
            check_dim(dim, p.as_ref().len())?;
            values.extend_from_slice(p.as_ref());
        }
        Self::new(dim, values)
    }

    pub fn singleton(point: &[f64]) -> Result<Self> {
        Self::new(point.len(), point.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// Equality as point sets, ignoring order and multiplicity.
    pub fn same_set(&self, other: &RealizationSet) -> bool {
        self.dim == other.dim
            && self.points().all(|a| other.points().any(|b| a == b))
            && other.points().all(|b| self.points().any(|a| a == b))
    }
}

/// `a <= b` componentwise with `a != b`.
#[inline]
pub(crate) fn dominates_slice(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// `a <= b` componentwise.
#[inline]
pub(crate) fn weakly_dominated_slice(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Pareto order for minimization: `a <= b` componentwise and `a != b`.
pub fn pareto_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_dim(a.dim(), b.dim())?;
    Ok(dominates_slice(a.as_slice(), b.as_slice()))
}

/// Set-based minmax dominance: every point of `a` lies in `b - R^k_>=`, i.e.
/// is componentwise below some point of `b` with at least one strict component.
pub fn set_dominates(a: &RealizationSet, b: &RealizationSet) -> Result<bool> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("set_dominates operand"));
    }
    check_dim(a.dim(), b.dim())?;
    Ok(a.points().all(|p| b.points().any(|q| dominates_slice(p, q))))
}

/// Maximal elements of `a`: points no other point of `a` lies above.
/// Exact duplicates are collapsed onto their first occurrence.
pub fn worst_case_set(a: &RealizationSet) -> RealizationSet {
    let mut keep: Vec<&[f64]> = Vec::new();
    for (i, p) in a.points().enumerate() {
        let dominated = a.points().any(|q| dominates_slice(p, q));
        let duplicate = a.points().take(i).any(|q| q == p);
        if !dominated && !duplicate {
            keep.push(p);
        }
    }
    RealizationSet::from_points(&keep).expect("maximal subset of a nonempty finite set is nonempty")
}

/// Componentwise maximum over the set.
pub fn sup_vector(a: &RealizationSet) -> ObjectiveVector {
    let mut sup = a.point(0).to_vec();
    for p in a.points().skip(1) {
        for (s, v) in sup.iter_mut().zip(p) {
            if *v > *s {
                *s = *v;
            }
        }
    }
    ObjectiveVector(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(v: &[f64]) -> ObjectiveVector {
        ObjectiveVector::new(v.to_vec()).unwrap()
    }

    fn rs(points: &[&[f64]]) -> RealizationSet {
        RealizationSet::from_points(points).unwrap()
    }

    #[test]
    fn pareto_examples() {
        assert!(pareto_dominates(&ov(&[1.0, 2.0]), &ov(&[2.0, 3.0])).unwrap());
        assert!(!pareto_dominates(&ov(&[1.0, 2.0]), &ov(&[1.0, 2.0])).unwrap());
        assert!(!pareto_dominates(&ov(&[1.0, 3.0]), &ov(&[2.0, 2.0])).unwrap());
        assert!(matches!(
            pareto_dominates(&ov(&[1.0]), &ov(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn set_dominance_examples() {
        let x = rs(&[&[0.3, 0.7]]);
        assert!(!set_dominates(&x, &x).unwrap());
        assert!(set_dominates(&rs(&[&[0.0, 0.0]]), &rs(&[&[1.0, 1.0]])).unwrap());
        // weak inequality with one strict component is enough
        assert!(set_dominates(&rs(&[&[1.0, 0.0]]), &rs(&[&[1.0, 1.0]])).unwrap());
        // a set covered by the lower-left region of two points
        let b = rs(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let a = rs(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        assert!(set_dominates(&a, &b).unwrap());
        assert!(!set_dominates(&b, &a).unwrap());
    }

    #[test]
    fn empty_and_mismatched_sets_are_rejected() {
        assert!(RealizationSet::new(2, vec![]).is_err());
        assert!(RealizationSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
        let a = rs(&[&[0.0]]);
        let b = rs(&[&[0.0, 1.0]]);
        assert!(set_dominates(&a, &b).is_err());
    }

    #[test]
    fn worst_case_examples() {
        let w = worst_case_set(&rs(&[&[0.0, 0.0], &[1.0, 1.0]]));
        assert_eq!(w, rs(&[&[1.0, 1.0]]));
        let w = worst_case_set(&rs(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(w, rs(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let w = worst_case_set(&rs(&[&[4.0, 2.0]]));
        assert_eq!(w, rs(&[&[4.0, 2.0]]));
        let w = worst_case_set(&rs(&[&[1.0, 1.0], &[1.0, 1.0]]));
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn sup_examples() {
        assert_eq!(sup_vector(&rs(&[&[0.0, 1.0], &[1.0, 0.0]])), ov(&[1.0, 1.0]));
        assert_eq!(sup_vector(&rs(&[&[3.5, -2.0]])), ov(&[3.5, -2.0]));
        assert_eq!(
            sup_vector(&rs(&[&[-1.0, 2.0], &[3.0, -4.0], &[0.0, 0.0]])),
            ov(&[3.0, 2.0])
        );
    }

    #[test]
    fn same_set_ignores_order() {
        let a = rs(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let b = rs(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        assert!(a.same_set(&b));
        assert!(!a.same_set(&rs(&[&[0.0, 1.0]])));
    }
}
