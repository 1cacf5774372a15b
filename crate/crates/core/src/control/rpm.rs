use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::moo::{worst_case_set, Bounds, RealizationSet};
use crate::ocp::{evaluate_robust, is_feasible_violation, UMocp, UncertaintyBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpmConfig {
    /// Total robust evaluations, restoration included.
    pub budget: usize,
    /// Initial pattern step as a fraction of each box width.
    pub initial_step: f64,
    /// Search stops once the step fraction falls below this.
    pub min_step: f64,
}

impl Default for RpmConfig {
    fn default() -> Self {
        Self { budget: 600, initial_step: 0.1, min_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpmResult {
    pub controls: Vec<f64>,
    /// Distance of the worst-case set to the reference point.
    pub phi: f64,
    pub phi_init: f64,
    pub evaluations: usize,
    /// The start was robust-infeasible and had to be repaired first.
    pub restored: bool,
    /// The budget ran out before the step size converged.
    pub budget_exhausted: bool,
}

/// Hausdorff distance (maximum norm) between the worst-case set of `r` and `{z}`.
pub fn reference_distance(r: &RealizationSet, z: &[f64]) -> f64 {
    worst_case_set(r)
        .points()
        .map(|w| w.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

struct Probe {
    u: Vec<f64>,
    phi: f64,
    violation: f64,
}

struct PatternSearch<'a, P: UMocp + ?Sized> {
    instance: &'a P,
    unc: &'a UncertaintyBox,
    z: &'a [f64],
    bounds: Bounds,
    evaluations: usize,
    budget: usize,
}

impl<P: UMocp + ?Sized> PatternSearch<'_, P> {
    fn probe_all(&mut self, points: Vec<Vec<f64>>) -> Result<Vec<Probe>> {
        let room = self.budget.saturating_sub(self.evaluations);
        let points: Vec<Vec<f64>> = points.into_iter().take(room).collect();
        self.evaluations += points.len();
        let (instance, unc, z) = (self.instance, self.unc, self.z);
        points
            .into_par_iter()
            .map(|u| {
                let (r, violation) = evaluate_robust(instance, &u, unc)?;
                Ok(Probe { phi: reference_distance(&r, z), violation, u })
            })
            .collect()
    }

    fn poll_points(&self, x: &[f64], previous: Option<&[f64]>, step: f64) -> Vec<Vec<f64>> {
        let n = x.len();
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 3);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = sign;
                dirs.push(d);
            }
        }
        // Shifting all entries together follows ridges the coordinate pattern cannot.
        if n > 1 {
            let c = 1.0 / (n as f64).sqrt();
            dirs.push(vec![c; n]);
            dirs.push(vec![-c; n]);
        }
        let mut points: Vec<Vec<f64>> = dirs
            .into_iter()
            .map(|d| {
                let mut p: Vec<f64> = (0..n).map(|i| x[i] + step * self.bounds.width(i) * d[i]).collect();
                self.bounds.clip(&mut p);
                p
            })
            .filter(|p| p.as_slice() != x)
            .collect();
        if let Some(prev) = previous {
            let mut p: Vec<f64> = x.iter().zip(prev).map(|(a, b)| 2.0 * a - b).collect();
            self.bounds.clip(&mut p);
            if p.as_slice() != x {
                points.push(p);
            }
        }
        points
    }

    /// Minimizes `key` from `start`, halving the step after every failed poll.
    fn run(&mut self, start: Probe, step0: f64, min_step: f64, key: impl Fn(&Probe) -> f64, done: impl Fn(&Probe) -> bool) -> Result<Probe> {
        let mut best = start;
        let mut previous: Option<Vec<f64>> = None;
        let mut step = step0;
        while step >= min_step && self.evaluations < self.budget && !done(&best) {
            let points = self.poll_points(&best.u, previous.as_deref(), step);
            let probes = self.probe_all(points)?;
            let winner = probes
                .into_iter()
                .enumerate()
                .min_by(|(i, a), (j, b)| key(a).total_cmp(&key(b)).then(i.cmp(j)))
                .map(|(_, p)| p);
            match winner {
                Some(p) if key(&p) < key(&best) => {
                    previous = Some(std::mem::replace(&mut best, p).u);
                }
                _ => {
                    previous = None;
                    step *= 0.5;
                }
            }
        }
        Ok(best)
    }
}

/// Reference point method: locally minimizes the distance between the
/// worst-case set of `u` and `z` over robust-feasible controls, by a
/// derivative-free pattern search started at `u_init`.
///
/// A robust-infeasible start is first repaired by minimizing the worst
/// constraint violation. The result is never worse than the feasible start.
pub fn rpm_refine<P: UMocp + ?Sized>(
    instance: &P,
    u_init: &[f64],
    unc: &UncertaintyBox,
    z: &[f64],
    config: &RpmConfig,
) -> Result<RpmResult> {
    check_dim(instance.grid().nodes(), u_init.len())?;
    check_dim(instance.objective_count(), z.len())?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("reference point {z:?} is not finite")));
    }
    if config.budget == 0 {
        return Err(Error::InvalidInput("rpm budget must be >= 1".into()));
    }
    let (lo, hi) = instance.control_bounds();
    let bounds = Bounds::uniform(u_init.len(), lo, hi)?;
    if !bounds.contains(u_init) {
        return Err(Error::InvalidInput("rpm start outside the control bounds".into()));
    }
    let mut search = PatternSearch { instance, unc, z, bounds, evaluations: 0, budget: config.budget };
    let start = search.probe_all(vec![u_init.to_vec()])?.pop().expect("budget >= 1");
    let phi_init = start.phi;

    let restored = !is_feasible_violation(start.violation);
    let feasible_start = if restored {
        let repaired = search.run(
            start,
            config.initial_step,
            config.min_step,
            |p| p.violation,
            |p| is_feasible_violation(p.violation),
        )?;
        if !is_feasible_violation(repaired.violation) {
            return Err(Error::Infeasible(format!(
                "restoration ended at violation {:.3e} after {} evaluations",
                repaired.violation, search.evaluations
            )));
        }
        repaired
    } else {
        start
    };

    let penalized = |p: &Probe| if is_feasible_violation(p.violation) { p.phi } else { f64::INFINITY };
    let best = search.run(feasible_start, config.initial_step, config.min_step, penalized, |_| false)?;
    Ok(RpmResult {
        phi: best.phi,
        controls: best.u,
        phi_init,
        evaluations: search.evaluations,
        restored,
        budget_exhausted: search.evaluations >= config.budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{WittingOcp, WittingProblem};
    use crate::ocp::{TimeGrid, Trajectory};

    fn witting_box() -> UncertaintyBox {
        UncertaintyBox::symmetric(0.4, 21).unwrap()
    }

    fn phi_oracle(u: [f64; 2]) -> f64 {
        witting_box()
            .samples()
            .iter()
            .map(|a| {
                let j = WittingProblem::eval(u, 0.5 + a[0]);
                j[0].abs().max(j[1].abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn reference_distance_is_max_over_worst_case() {
        let r = RealizationSet::from_points(&[[1.0, 4.0], [3.0, 1.0], [0.5, 0.5]]).unwrap();
        assert_eq!(reference_distance(&r, &[0.0, 0.0]), 4.0);
        assert_eq!(reference_distance(&r, &[3.0, 1.0]), 3.0);
    }

    #[test]
    fn witting_reaches_grid_minimum() {
        let g = WittingProblem::decision_grid(200);
        let grid_min = g
            .iter()
            .flat_map(|&a| g.iter().map(move |&b| [a, b]))
            .map(phi_oracle)
            .fold(f64::INFINITY, f64::min);
        let res = rpm_refine(&WittingOcp { alpha: 0.5 }, &[-1.8, -1.6], &witting_box(), &[0.0, 0.0], &RpmConfig::default())
            .unwrap();
        assert!(res.evaluations <= 600);
        assert!(res.phi <= grid_min + 1e-3, "phi {} vs grid {grid_min}", res.phi);
        assert!((res.controls[0] + res.controls[1]).abs() < 1e-2);
        assert!((res.phi - phi_oracle([res.controls[0], res.controls[1]])).abs() < 1e-12);
    }

    #[test]
    fn minimizer_is_a_fixed_point() {
        let res = rpm_refine(&WittingOcp { alpha: 0.5 }, &[0.0, 0.0], &witting_box(), &[0.0, 0.0], &RpmConfig::default())
            .unwrap();
        assert_eq!(res.controls, vec![0.0, 0.0]);
        assert_eq!(res.phi, res.phi_init);
    }

    /// `x' = u` from `x0 = alpha`, objectives `(x(1)^2, (x(1) - 1)^2)`, constraint `x <= 0.5`.
    struct Pushed;

    impl UMocp for Pushed {
        fn state_dim(&self) -> usize {
            1
        }
        fn objective_count(&self) -> usize {
            2
        }
        fn constraint_count(&self) -> usize {
            1
        }
        fn uncertainty_dim(&self) -> usize {
            1
        }
        fn grid(&self) -> TimeGrid {
            TimeGrid::new(0.0, 1.0, 0.5).unwrap()
        }
        fn control_bounds(&self) -> (f64, f64) {
            (-1.0, 1.0)
        }
        fn initial_state(&self, alpha: &[f64], x0: &mut [f64]) {
            x0[0] = alpha[0];
        }
        fn rhs(&self, _x: &[f64], u: f64, dx: &mut [f64]) {
            dx[0] = u;
        }
        fn terminal_cost(&self, t: &Trajectory, _u: &[f64], out: &mut [f64]) {
            let x = t.last()[0];
            out[0] = x * x;
            out[1] = (x - 1.0).powi(2);
        }
        fn constraints(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] - 0.5;
        }
    }

    #[test]
    fn infeasible_start_is_restored_and_phi_never_increases() {
        let unc = UncertaintyBox::symmetric(0.1, 3).unwrap();
        let res = rpm_refine(&Pushed, &[1.0, 1.0, 1.0], &unc, &[0.0, 0.0], &RpmConfig::default()).unwrap();
        assert!(res.restored);
        assert!(crate::ocp::robust_feasible(&Pushed, &res.controls, &unc).unwrap());

        let start = [0.1, 0.0, -0.1];
        let res = rpm_refine(&Pushed, &start, &unc, &[0.0, 0.0], &RpmConfig::default()).unwrap();
        assert!(!res.restored);
        assert!(res.phi <= res.phi_init);
    }

    #[test]
    fn hopeless_start_reports_infeasibility() {
        // alpha alone exceeds the limit, no control can repair it
        let unc = UncertaintyBox::symmetric(0.7, 3).unwrap();
        let err = rpm_refine(&Pushed, &[0.0; 3], &unc, &[0.0, 0.0], &RpmConfig { budget: 50, ..Default::default() });
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn utopic_reference_gives_robust_efficient_result() {
        use rand::{Rng, SeedableRng};
        let unc = UncertaintyBox::symmetric(0.1, 5).unwrap();
        let res = rpm_refine(&Pushed, &[0.0, 0.2, -0.3], &unc, &[-1.0, -1.0], &RpmConfig::default()).unwrap();
        let mine = crate::ocp::evaluate_realizations(&Pushed, &res.controls, &unc).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if !crate::ocp::robust_feasible(&Pushed, &u, &unc).unwrap() {
                continue;
            }
            let other = crate::ocp::evaluate_realizations(&Pushed, &u, &unc).unwrap();
            assert!(!crate::moo::set_dominates(&other, &mine).unwrap(), "{u:?} dominates {:?}", res.controls);
        }
    }
}
