//! Direct discretization of uncertain multi-objective optimal control problems.
//!
//! Controls are zero-order-hold on an equidistant grid, the flow is advanced
//! with classical RK4 at the grid step, running costs are integrated as extra
//! RK4 states and path constraints are checked at every node.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::moo::{ObjectiveVector, RealizationSet};

/// Absolute slack on constraint values when deciding feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub const MAX_STATE_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub te: f64,
    pub h: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, te: f64, h: f64) -> Result<Self> {
        if !(te > t0) || !(h > 0.0) {
            return Err(Error::InvalidInput(format!("invalid time grid t0={t0} te={te} h={h}")));
        }
        let steps = (te - t0) / h;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "horizon {} is not an integer multiple of h={h}",
                te - t0
            )));
        }
        Ok(Self { t0, te, h })
    }

    /// Number of control nodes `N_u = (te - t0) / h + 1`.
    pub fn nodes(&self) -> usize {
        ((self.te - self.t0) / self.h).round() as usize + 1
    }

    pub fn steps(&self) -> usize {
        self.nodes() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }
}

/// Discretized scalar control on a [`TimeGrid`] within box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlTrajectory {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub u_min: f64,
    pub u_max: f64,
}

impl ControlTrajectory {
    pub fn new(grid: TimeGrid, values: Vec<f64>, u_min: f64, u_max: f64) -> Result<Self> {
        check_dim(grid.nodes(), values.len())?;
        if values.iter().any(|v| !(u_min..=u_max).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "control values outside [{u_min}, {u_max}]"
            )));
        }
        Ok(Self { grid, values, u_min, u_max })
    }

    pub fn constant(grid: TimeGrid, value: f64, u_min: f64, u_max: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.nodes()], u_min, u_max)
    }
}

/// Interval box on the uncertain parameter, sampled on a tensor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub samples_per_dim: usize,
}

impl UncertaintyBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, samples_per_dim: usize) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if samples_per_dim == 0 || samples_per_dim % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "samples_per_dim must be odd, got {samples_per_dim}"
            )));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(*l <= 0.0 && 0.0 <= *h) {
                return Err(Error::InvalidInput(format!(
                    "uncertainty interval [{l}, {h}] must contain 0"
                )));
            }
        }
        Ok(Self { lo, hi, samples_per_dim })
    }

    /// A box with only the nominal scenario.
    pub fn nominal(dim: usize) -> Self {
        Self { lo: vec![0.0; dim], hi: vec![0.0; dim], samples_per_dim: 1 }
    }

    pub fn symmetric(half_width: f64, samples_per_dim: usize) -> Result<Self> {
        Self::new(vec![-half_width], vec![half_width], samples_per_dim)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, alpha: &[f64]) -> bool {
        alpha.len() == self.dim()
            && alpha.iter().zip(self.lo.iter().zip(&self.hi)).all(|(a, (l, h))| l <= a && a <= h)
    }

    fn coordinate(&self, j: usize, i: usize) -> f64 {
        let n = self.samples_per_dim;
        if n == 1 {
            return 0.0;
        }
        let mid = n / 2;
        // Negative and positive halves are spaced separately so 0 is hit exactly.
        if i < mid {
            self.lo[j] * (mid - i) as f64 / mid as f64
        } else {
            self.hi[j] * (i - mid) as f64 / mid as f64
        }
    }

    /// All grid scenarios in lexicographic order of their sample indices.
    pub fn samples(&self) -> Vec<Vec<f64>> {
        let n = self.samples_per_dim;
        let d = self.dim();
        let total = n.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            out.push((0..d).map(|j| self.coordinate(j, idx[j])).collect());
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < n {
                    break;
                }
                idx[j] = 0;
            }
        }
        out
    }
}

/// An uncertain multi-objective optimal control problem instance, already
/// parametrized by its nominal initial condition.
pub trait UMocp: Sync {
    fn state_dim(&self) -> usize;
    fn objective_count(&self) -> usize;
    fn constraint_count(&self) -> usize {
        0
    }
    fn uncertainty_dim(&self) -> usize;
    fn grid(&self) -> TimeGrid;
    fn control_bounds(&self) -> (f64, f64);

    /// Initial state for scenario `alpha`.
    fn initial_state(&self, alpha: &[f64], x0: &mut [f64]);
    fn rhs(&self, x: &[f64], u: f64, dx: &mut [f64]);

    fn running_cost(&self, _x: &[f64], _u: f64, _out: &mut [f64]) {}
    /// Terminal term; sees the full state trajectory and the controls.
    fn terminal_cost(&self, _states: &Trajectory, _u: &[f64], _out: &mut [f64]) {}
    /// Path constraints `g(x) <= 0`.
    fn constraints(&self, _x: &[f64], _out: &mut [f64]) {}
}

/// States at all grid nodes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

/// One RK4 step of size `h` with the control held at `u`.
pub fn rk4_step<F>(rhs: F, x: &[f64], u: f64, h: f64, out: &mut [f64])
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let n = x.len();
    assert!(n <= MAX_STATE_DIM, "state dimension {n} exceeds {MAX_STATE_DIM}");
    let mut buf = [[0.0; MAX_STATE_DIM]; 5];
    let [k1, k2, k3, k4, tmp] = &mut buf;
    let (k1, k2, k3, k4, tmp) = (&mut k1[..n], &mut k2[..n], &mut k3[..n], &mut k4[..n], &mut tmp[..n]);
    rhs(x, u, k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    rhs(tmp, u, k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    rhs(tmp, u, k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    rhs(tmp, u, k4);
    for i in 0..n {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates the dynamics from `x_start` over the instance grid.
pub fn integrate_flow<P: UMocp + ?Sized>(instance: &P, x_start: &[f64], u: &[f64]) -> Result<Trajectory> {
    let n = instance.state_dim();
    check_dim(n, x_start.len())?;
    if n > MAX_STATE_DIM {
        return Err(Error::InvalidInput(format!("state dimension {n} exceeds {MAX_STATE_DIM}")));
    }
    let grid = instance.grid();
    check_dim(grid.nodes(), u.len())?;
    if x_start.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration { step: 0 });
    }
    let mut values = vec![0.0; n * grid.nodes()];
    values[..n].copy_from_slice(x_start);
    for k in 0..grid.steps() {
        let (done, rest) = values.split_at_mut((k + 1) * n);
        let x = &done[k * n..];
        let next = &mut rest[..n];
        rk4_step(|x, u, dx| instance.rhs(x, u, dx), x, u[k], grid.h, next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { step: k + 1 });
        }
    }
    Ok(Trajectory { dim: n, values })
}

/// Integrates the dynamics together with the running costs, which ride along
/// as extra RK4 states so the quadrature has the integrator's order.
fn integrate_with_cost<P: UMocp + ?Sized>(instance: &P, x_start: &[f64], u: &[f64]) -> Result<(Trajectory, Vec<f64>)> {
    let n = instance.state_dim();
    let k = instance.objective_count();
    check_dim(n, x_start.len())?;
    if n + k > MAX_STATE_DIM {
        return Err(Error::InvalidInput(format!("state plus objective dimension {} exceeds {MAX_STATE_DIM}", n + k)));
    }
    let grid = instance.grid();
    check_dim(grid.nodes(), u.len())?;
    if x_start.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration { step: 0 });
    }
    let rhs = |z: &[f64], u: f64, dz: &mut [f64]| {
        instance.rhs(&z[..n], u, &mut dz[..n]);
        dz[n..].iter_mut().for_each(|c| *c = 0.0);
        instance.running_cost(&z[..n], u, &mut dz[n..]);
    };
    let mut values = vec![0.0; n * grid.nodes()];
    values[..n].copy_from_slice(x_start);
    let mut z = [0.0; MAX_STATE_DIM];
    z[..n].copy_from_slice(x_start);
    let mut next = [0.0; MAX_STATE_DIM];
    for step in 0..grid.steps() {
        rk4_step(rhs, &z[..n + k], u[step], grid.h, &mut next[..n + k]);
        if next[..n + k].iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { step: step + 1 });
        }
        z = next;
        values[(step + 1) * n..(step + 2) * n].copy_from_slice(&z[..n]);
    }
    Ok((Trajectory { dim: n, values }, z[n..n + k].to_vec()))
}

/// Objectives and per-constraint maxima over the grid for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
    pub trajectory: Trajectory,
}

impl Outcome {
    pub fn max_violation(&self) -> f64 {
        self.constraints.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn evaluate<P: UMocp + ?Sized>(instance: &P, alpha: &[f64], u: &[f64]) -> Result<Outcome> {
    check_dim(instance.uncertainty_dim(), alpha.len())?;
    let mut x0 = vec![0.0; instance.state_dim()];
    instance.initial_state(alpha, &mut x0);
    let (traj, mut objectives) = integrate_with_cost(instance, &x0, u)?;
    let k = instance.objective_count();
    let mut terminal = vec![0.0; k];
    instance.terminal_cost(&traj, u, &mut terminal);
    for j in 0..k {
        objectives[j] += terminal[j];
    }

    let m = instance.constraint_count();
    let mut constraints = vec![f64::NEG_INFINITY; m];
    let mut g = vec![0.0; m];
    if m > 0 {
        for x in traj.states() {
            instance.constraints(x, &mut g);
            for (c, v) in constraints.iter_mut().zip(&g) {
                *c = c.max(*v);
            }
        }
    }
    if objectives.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration { step: traj.len() - 1 });
    }
    Ok(Outcome { objectives, constraints, trajectory: traj })
}

pub fn evaluate_objectives<P: UMocp + ?Sized>(instance: &P, alpha: &[f64], u: &[f64]) -> Result<ObjectiveVector> {
    ObjectiveVector::new(evaluate(instance, alpha, u)?.objectives)
}

/// Realizations over every scenario of `unc` plus the worst constraint value
/// seen in any of them (`-inf` for unconstrained problems).
pub fn evaluate_robust<P: UMocp + ?Sized>(
    instance: &P,
    u: &[f64],
    unc: &UncertaintyBox,
) -> Result<(RealizationSet, f64)> {
    check_dim(instance.uncertainty_dim(), unc.dim())?;
    let k = instance.objective_count();
    let samples = unc.samples();
    let mut values = Vec::with_capacity(k * samples.len());
    let mut worst = f64::NEG_INFINITY;
    for alpha in &samples {
        let o = evaluate(instance, alpha, u)?;
        values.extend_from_slice(&o.objectives);
        worst = worst.max(o.max_violation());
    }
    Ok((RealizationSet::new(k, values)?, worst))
}

pub fn evaluate_realizations<P: UMocp + ?Sized>(
    instance: &P,
    u: &[f64],
    unc: &UncertaintyBox,
) -> Result<RealizationSet> {
    Ok(evaluate_robust(instance, u, unc)?.0)
}

pub fn robust_feasible<P: UMocp + ?Sized>(instance: &P, u: &[f64], unc: &UncertaintyBox) -> Result<bool> {
    Ok(evaluate_robust(instance, u, unc)?.1 <= FEASIBILITY_TOL)
}

pub fn is_feasible_violation(v: f64) -> bool {
    v <= FEASIBILITY_TOL
}
