//! Analytic benchmark problems with brute-force references.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::moo::{archive_update, Archive, ArchiveEntry, DecisionPoint, RealizationSet};
use crate::ocp::{TimeGrid, Trajectory, UMocp, UncertaintyBox};

/// Four fixed candidates under a box uncertainty on both coordinates.
pub struct Lss25Problem;

impl Lss25Problem {
    pub const CANDIDATES: [(&'static str, [f64; 2]); 4] = [
        ("u_I", [-0.3545, 1.3044]),
        ("u_II", [0.6445, 0.2392]),
        ("u_III", [0.3760, -0.7945]),
        ("u_IV", [1.7017, 0.6869]),
    ];
    pub const ALPHA_HALF_WIDTH: f64 = 0.2;
    const SCALE_N: f64 = 2.0;

    pub fn eval(u: [f64; 2], alpha: [f64; 2]) -> [f64; 2] {
        let (x, y) = (u[0] + alpha[0], u[1] + alpha[1]);
        let c = Self::SCALE_N.powf(-0.25);
        [
            c * (x * x + y * y).powf(0.25),
            c * ((1.0 - x).powi(2) + (1.0 - y).powi(2)).powf(0.25),
        ]
    }

    pub fn uncertainty(samples_per_dim: usize) -> Result<UncertaintyBox> {
        let w = Self::ALPHA_HALF_WIDTH;
        UncertaintyBox::new(vec![-w, -w], vec![w, w], samples_per_dim)
    }

    pub fn realizations(u: [f64; 2], samples_per_dim: usize) -> Result<RealizationSet> {
        let pts: Vec<[f64; 2]> = Self::uncertainty(samples_per_dim)?
            .samples()
            .iter()
            .map(|a| Self::eval(u, [a[0], a[1]]))
            .collect();
        RealizationSet::from_points(&pts)
    }

    /// Set-based efficient subset of the four candidates.
    pub fn efficient_set(samples_per_dim: usize) -> Result<Archive> {
        let population = Self::CANDIDATES
            .iter()
            .map(|(_, u)| {
                Ok(ArchiveEntry::new(
                    DecisionPoint::unchecked(u.to_vec()),
                    Self::realizations(*u, samples_per_dim)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        archive_update(population, Archive::new())
    }

    pub fn label(u: &[f64]) -> Option<&'static str> {
        Self::CANDIDATES.iter().find(|(_, c)| c.as_slice() == u).map(|(n, _)| *n)
    }
}

/// Two-objective problem whose Pareto set is the anti-diagonal `u1 = -u2`
/// for `alpha < 1`, independent of `alpha`.
pub struct WittingProblem;

impl WittingProblem {
    pub const U_LIMIT: f64 = 2.0;
    pub const ALPHA_RANGE: (f64, f64) = (0.1, 1.5);

    pub fn eval(u: [f64; 2], alpha: f64) -> [f64; 2] {
        let (sum, diff) = (u[0] + u[1], u[0] - u[1]);
        let base = 0.5 * ((1.0 + sum * sum).sqrt() + (1.0 + diff * diff).sqrt());
        let bump = alpha * (-diff * diff).exp();
        [base + 0.5 * diff + bump, base - 0.5 * diff + bump]
    }

    pub fn decision_grid(grid_n: usize) -> Vec<f64> {
        let l = Self::U_LIMIT;
        (0..grid_n).map(|i| -l + 2.0 * l * i as f64 / (grid_n - 1) as f64).collect()
    }

    /// Brute-force nondominated subset of a `grid_n x grid_n` decision grid.
    pub fn reference_front(alpha: f64, grid_n: usize) -> ReferenceFront {
        let g = Self::decision_grid(grid_n);
        let mut decisions = Vec::with_capacity(grid_n * grid_n);
        let mut objectives = Vec::with_capacity(grid_n * grid_n);
        for &u1 in &g {
            for &u2 in &g {
                decisions.push([u1, u2]);
                objectives.push(Self::eval([u1, u2], alpha));
            }
        }
        let keep = nondominated_2d(&objectives);
        ReferenceFront {
            decisions: keep.iter().map(|&i| decisions[i]).collect(),
            objectives: keep.iter().map(|&i| objectives[i]).collect(),
        }
    }
}

impl WittingProblem {
    /// Spacing of [`Self::decision_grid`].
    pub fn grid_cell(grid_n: usize) -> f64 {
        2.0 * Self::U_LIMIT / (grid_n - 1) as f64
    }

    /// Fraction of the `reference_alpha` efficient set (by cardinality) with no
    /// efficient point at `alpha` within one grid cell.
    pub fn lost_fraction(reference_alpha: f64, alpha: f64, grid_n: usize) -> f64 {
        let a = Self::reference_front(reference_alpha, grid_n);
        let b = Self::reference_front(alpha, grid_n);
        uncovered_fraction(&a.decisions, &b.decisions, Self::grid_cell(grid_n) * (1.0 + 1e-9))
    }
}

/// Fraction of `a` with no point of `b` within `tol` in the max-norm.
pub fn uncovered_fraction(a: &[[f64; 2]], b: &[[f64; 2]], tol: f64) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let missing = a
        .iter()
        .filter(|p| !b.iter().any(|q| (p[0] - q[0]).abs().max((p[1] - q[1]).abs()) <= tol))
        .count();
    missing as f64 / a.len() as f64
}

/// A reference Pareto set and its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFront {
    pub decisions: Vec<[f64; 2]>,
    pub objectives: Vec<[f64; 2]>,
}

impl ReferenceFront {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u1,u2,j1,j2\n");
        for (u, j) in self.decisions.iter().zip(&self.objectives) {
            out.push_str(&format!("{:?},{:?},{:?},{:?}\n", u[0], u[1], j[0], j[1]));
        }
        out
    }
}

/// Indices of the nondominated points of a bi-objective set, in input order.
/// Points with identical objective vectors are all kept.
pub fn nondominated_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut keep = Vec::new();
    let mut best = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let j1 = points[order[i]][0];
        let group_min = points[order[i]][1];
        let mut j = i;
        while j < order.len() && points[order[j]][0] == j1 {
            if group_min < best && points[order[j]][1] == group_min {
                keep.push(order[j]);
            }
            j += 1;
        }
        best = best.min(group_min);
        i = j;
    }
    keep.sort_unstable();
    keep
}

/// The witting problem as an uncertain control instance: one zero-dynamics step
/// whose state carries `alpha`; the two control nodes are `(u1, u2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WittingOcp {
    pub alpha: f64,
}

impl UMocp for WittingOcp {
    fn state_dim(&self) -> usize {
        1
    }

    fn objective_count(&self) -> usize {
        2
    }

    fn uncertainty_dim(&self) -> usize {
        1
    }

    fn grid(&self) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, 1.0).expect("static grid")
    }

    fn control_bounds(&self) -> (f64, f64) {
        (-WittingProblem::U_LIMIT, WittingProblem::U_LIMIT)
    }

    fn initial_state(&self, alpha: &[f64], x0: &mut [f64]) {
        x0[0] = self.alpha + alpha[0];
    }

    fn rhs(&self, _x: &[f64], _u: f64, dx: &mut [f64]) {
        dx[0] = 0.0;
    }

    fn terminal_cost(&self, states: &Trajectory, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&WittingProblem::eval([u[0], u[1]], states.last()[0]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::evaluate;

    #[test]
    fn lss25_values() {
        let [j1, j2] = Lss25Problem::eval([0.0, 0.0], [0.0, 0.0]);
        assert_eq!(j1, 0.0);
        assert!((j2 - 1.0).abs() < 1e-15);
        let [j1, j2] = Lss25Problem::eval([1.0, 1.0], [0.0, 0.0]);
        assert!((j1 - 1.0).abs() < 1e-15);
        assert_eq!(j2, 0.0);
    }

    #[test]
    fn lss25_efficient_sets() {
        for n in [21, 3, 1] {
            let a = Lss25Problem::efficient_set(n).unwrap();
            let names: Vec<_> = a.decisions().iter().map(|u| Lss25Problem::label(u).unwrap()).collect();
            assert_eq!(names, vec!["u_II", "u_IV"], "samples_per_dim = {n}");
        }
    }

    #[test]
    fn witting_values() {
        assert_eq!(WittingProblem::eval([0.0, 0.0], 0.5), [1.5, 1.5]);
        for t in [-1.7, -0.3, 0.0, 0.4, 1.9] {
            let alpha = 0.7;
            let [a, b] = WittingProblem::eval([t / 2.0, -t / 2.0], alpha);
            let expected = 1.0 + (1.0 + t * t).sqrt() + 2.0 * alpha * (-t * t).exp();
            assert!((a + b - expected).abs() < 1e-12);
        }
        let [a, b] = WittingProblem::eval([0.3, -1.2], 0.9);
        let [c, d] = WittingProblem::eval([-1.2, 0.3], 0.9);
        assert_eq!((a, b), (d, c));
    }

    #[test]
    fn witting_set_moves_only_for_large_alpha() {
        assert_eq!(WittingProblem::lost_fraction(0.5, 0.1, 61), 0.0);
        assert_eq!(WittingProblem::lost_fraction(0.1, 0.5, 61), 0.0);
        assert!(WittingProblem::lost_fraction(0.5, 1.5, 61) >= 0.1);
        assert_eq!(uncovered_fraction(&[], &[[0.0, 0.0]], 1.0), 0.0);
        assert_eq!(uncovered_fraction(&[[0.0, 0.0], [3.0, 0.0]], &[[0.5, 0.5]], 1.0), 0.5);
    }

    #[test]
    fn witting_ocp_wrap() {
        let o = evaluate(&WittingOcp { alpha: 0.5 }, &[0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(o.objectives, vec![1.5, 1.5]);
    }

    #[test]
    fn nondominated_filter_matches_quadratic_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<[f64; 2]> = (0..300)
            .map(|_| [rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64])
            .collect();
        let brute: Vec<usize> = (0..pts.len())
            .filter(|&i| {
                !pts.iter().any(|q| q[0] <= pts[i][0] && q[1] <= pts[i][1] && *q != pts[i])
            })
            .collect();
        assert_eq!(nondominated_2d(&pts), brute);
    }

    #[test]
    fn reference_lies_on_anti_diagonal() {
        let r = WittingProblem::reference_front(0.5, 100);
        let cell = 4.0 / 99.0;
        assert!(r.decisions.iter().all(|u| (u[0] + u[1]).abs() <= 2.0 * cell));
        assert!(r.to_csv().starts_with("u1,u2,j1,j2\n"));
    }
}
