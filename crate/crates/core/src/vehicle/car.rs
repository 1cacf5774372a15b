use super::{rhs_raw, ReducedState, VehicleParams};
use crate::error::{Error, Result};
use crate::moo::Bounds;
use crate::ocp::{TimeGrid, Trajectory, UMocp};

/// Arclength and signed lateral offset of `(x, y)` relative to the arc that
/// passes through the origin heading along +x with constant curvature `kappa`.
///
/// Written so that `kappa -> 0` degrades smoothly to `(x, y)`.
#[inline]
pub fn arc_frenet(kappa: f64, x: f64, y: f64) -> (f64, f64) {
    if kappa == 0.0 {
        return (x, y);
    }
    let r2 = x * x + y * y;
    let q = kappa * kappa * r2 - 2.0 * kappa * y + 1.0;
    let d = (2.0 * y - kappa * r2) / (1.0 + q.max(0.0).sqrt());
    let s = (kappa * x).atan2(1.0 - kappa * y) / kappa;
    (s, d)
}

/// Car maneuvering on the locally linearized track.
///
/// The car starts at `(0, d + alpha)` with heading `xi` while the track is the
/// constant-curvature arc through the origin. Objectives are the integrated
/// squared centerline distance and the negative arclength progress; the path
/// constraint is `|d(t)| <= d_max` at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct CarProblem {
    pub params: VehicleParams,
    pub x0: ReducedState,
    pub grid: TimeGrid,
    pub u_min: f64,
    pub u_max: f64,
    pub d_max: f64,
}

impl CarProblem {
    pub const U_LIMIT: f64 = 0.5;

    pub fn new(params: VehicleParams, x0: ReducedState, grid: TimeGrid, d_max: f64) -> Result<Self> {
        params.validate()?;
        if !x0.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite reduced state {x0:?}")));
        }
        if !(d_max > 0.0) {
            return Err(Error::InvalidInput(format!("d_max must be positive, got {d_max}")));
        }
        Ok(Self { params, x0, grid, u_min: -Self::U_LIMIT, u_max: Self::U_LIMIT, d_max })
    }

    /// Horizon 0.5 s at step 0.05 s (11 control nodes).
    pub fn default_grid() -> TimeGrid {
        TimeGrid::new(0.0, 0.5, 0.05).expect("static grid")
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::uniform(self.grid.nodes(), self.u_min, self.u_max).expect("valid steering bounds")
    }

    pub fn with_state(&self, x0: ReducedState) -> Self {
        Self { x0, ..self.clone() }
    }

    fn frenet(&self, x: &[f64]) -> (f64, f64) {
        arc_frenet(self.x0.kappa, x[0], x[1])
    }
}

impl UMocp for CarProblem {
    fn state_dim(&self) -> usize {
        5
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
        self.grid
    }

    fn control_bounds(&self) -> (f64, f64) {
        (self.u_min, self.u_max)
    }

    fn initial_state(&self, alpha: &[f64], x0: &mut [f64]) {
        x0.copy_from_slice(&[0.0, self.x0.d + alpha[0], self.x0.xi, self.x0.v_y, self.x0.r]);
    }

    fn rhs(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        rhs_raw(&self.params, x, u, dx);
    }

    fn running_cost(&self, x: &[f64], _u: f64, out: &mut [f64]) {
        let (_, d) = self.frenet(x);
        out[0] = d * d;
        out[1] = 0.0;
    }

    fn terminal_cost(&self, states: &Trajectory, _u: &[f64], out: &mut [f64]) {
        let (s0, _) = self.frenet(states.state(0));
        let (se, _) = self.frenet(states.last());
        out[0] = 0.0;
        out[1] = -(se - s0);
    }

    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.frenet(x).1.abs() - self.d_max;
    }
}
