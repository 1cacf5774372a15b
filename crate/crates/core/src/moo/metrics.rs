use crate::error::{check_dim, Error, Result};

/// Point-to-point norm used inside set distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Max,
    Euclidean,
}

impl Norm {
    #[inline]
    fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Max => a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())),
            Norm::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }
}

/// Maximum-norm distance between two vectors.
pub fn d_inf(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dim(u.len(), v.len())?;
    Ok(Norm::Max.dist(u, v))
}

fn check_sets<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], b: &[Q]) -> Result<usize> {
    let first = a.first().ok_or(Error::EmptySet("first point set"))?;
    if b.is_empty() {
        return Err(Error::EmptySet("second point set"));
    }
    let dim = first.as_ref().len();
    for p in a.iter().map(AsRef::as_ref).chain(b.iter().map(AsRef::as_ref)) {
        check_dim(dim, p.len())?;
    }
    Ok(dim)
}

fn point_to_set<Q: AsRef<[f64]>>(p: &[f64], set: &[Q], norm: Norm) -> f64 {
    set.iter().map(|q| norm.dist(p, q.as_ref())).fold(f64::INFINITY, f64::min)
}

/// Directed semi-distance `sup_{a in A} inf_{b in B} |a - b|`.
fn semi_distance<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], b: &[Q], norm: Norm) -> f64 {
    a.iter().map(|p| point_to_set(p.as_ref(), b, norm)).fold(0.0, f64::max)
}

/// Hausdorff distance under the maximum norm.
pub fn hausdorff<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], b: &[Q]) -> Result<f64> {
    hausdorff_with(a, b, Norm::Max)
}

pub fn hausdorff_with<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], b: &[Q], norm: Norm) -> Result<f64> {
    check_sets(a, b)?;
    Ok(semi_distance(a, b, norm).max(semi_distance(b, a, norm)))
}

fn averaged<P: AsRef<[f64]>, Q: AsRef<[f64]>>(from: &[P], to: &[Q], p: f64, norm: Norm) -> f64 {
    let s: f64 = from.iter().map(|x| point_to_set(x.as_ref(), to, norm).powf(p)).sum();
    (s / from.len() as f64).powf(1.0 / p)
}

/// Averaged Hausdorff distance `max(GD_p, IGD_p)` with Euclidean point distances.
pub fn delta_p<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], reference: &[Q], p: f64) -> Result<f64> {
    delta_p_with(a, reference, p, Norm::Euclidean)
}

pub fn delta_p_with<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    a: &[P],
    reference: &[Q],
    p: f64,
    norm: Norm,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("delta_p requires p >= 1, got {p}")));
    }
    check_sets(a, reference)?;
    let gd = averaged(a, reference, p, norm);
    let igd = averaged(reference, a, p, norm);
    Ok(gd.max(igd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_inf_examples() {
        assert_eq!(d_inf(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(d_inf(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(d_inf(&[-1.0, 4.0], &[2.0, 3.0]).unwrap(), 3.0);
        assert!(d_inf(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = [[0.0, 0.0], [3.0, 0.0]];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&a, &[[1.0, 0.0]]).unwrap(), 2.0);
        assert_eq!(hausdorff(&[[0.0, 0.0]], &[[1.0, 2.0]]).unwrap(), 2.0);
        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(hausdorff(&empty, &a), Err(Error::EmptySet(_))));
    }

    #[test]
    fn delta_p_examples() {
        let r = [[0.2, 0.8], [0.5, 0.5]];
        assert_eq!(delta_p(&r, &r, 2.0).unwrap(), 0.0);
        assert_eq!(delta_p(&[[0.0]], &[[1.0]], 2.0).unwrap(), 1.0);
        // GD = sqrt((1 + 1) / 2) = 1, IGD = 1
        assert!((delta_p(&[[0.0], [2.0]], &[[1.0]], 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(delta_p(&[[0.0]], &[[1.0]], 0.5).is_err());
    }
}
