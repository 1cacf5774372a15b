//! Single-track (bicycle) vehicle model at constant longitudinal speed, track
//! geometry and the reduction of the car-on-track problem to five parameters.

mod car;
mod reduce;
mod track;

pub use car::{arc_frenet, CarProblem};
pub use reduce::{mirror_reduce, symmetry_reduce, ReducedState};
pub use track::{Projection, Track, TrackParams, DEFAULT_D_MAX, DEFAULT_KAPPA_LIMIT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::rk4_step;

/// Which printing of the lateral coefficients to use.
///
/// `Published` follows the coefficient table of the source model verbatim.
/// With the default constants its lateral subsystem is a saddle (one real
/// eigenvalue near `+6.6 /s` at 30 m/s), so closed-loop runs diverge within a
/// second unless the controller stabilizes it.
///
/// `Textbook` is the common linear single-track form where the yaw coupling
/// of `v_y` carries `L_f C_f cos u - L_r C_r` and the `-v_x` term sits in the
/// `r` coefficient of the lateral equation. It is stable for these constants
/// and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoefficientForm {
    Published,
    #[default]
    Textbook,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Front cornering stiffness.
    pub c_alpha_f: f64,
    /// Rear cornering stiffness.
    pub c_alpha_r: f64,
    /// Front axle to centre of mass, m.
    pub l_f: f64,
    /// Rear axle to centre of mass, m.
    pub l_r: f64,
    /// Mass, kg.
    pub mass: f64,
    /// Yaw moment of inertia, kg m^2.
    pub i_z: f64,
    /// Longitudinal speed, m/s.
    pub v_x: f64,
    pub form: CoefficientForm,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            c_alpha_f: 65_100.0,
            c_alpha_r: 54_100.0,
            l_f: 1.0,
            l_r: 1.45,
            mass: 1275.0,
            i_z: 1627.0,
            v_x: 30.0,
            form: CoefficientForm::Textbook,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if self.v_x == 0.0 {
            return Err(Error::ZeroSpeed);
        }
        let positive = [self.c_alpha_f, self.c_alpha_r, self.l_f, self.l_r, self.mass, self.i_z];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !self.v_x.is_finite() {
            return Err(Error::InvalidInput(format!("vehicle parameters must be positive: {self:?}")));
        }
        Ok(())
    }

    /// `C_1 .. C_6` at steering angle `u`.
    pub fn coefficients(&self, u: f64) -> [f64; 6] {
        let cf = self.c_alpha_f * u.cos();
        let cr = self.c_alpha_r;
        let (m, iz, vx, lf, lr) = (self.mass, self.i_z, self.v_x, self.l_f, self.l_r);
        let c1 = -(cf + cr) / (m * vx);
        let c3 = cf / m;
        let c5 = -(lf * lf * cf + lr * lr * cr) / (iz * vx);
        let c6 = lf * cf / iz;
        let (c2, c4) = match self.form {
            CoefficientForm::Published => (
                -(lf * cf + lr * cr) / (iz * vx),
                -(lf * cf + lr * cr) / (m * vx) - vx,
            ),
            CoefficientForm::Textbook => (
                -(lf * cf - lr * cr) / (m * vx) - vx,
                -(lf * cf - lr * cr) / (iz * vx),
            ),
        };
        [c1, c2, c3, c4, c5, c6]
    }
}

/// World-frame state `(p1, p2, theta, v_y, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub p1: f64,
    pub p2: f64,
    pub theta: f64,
    pub v_y: f64,
    pub r: f64,
}

impl VehicleState {
    pub fn to_array(self) -> [f64; 5] {
        [self.p1, self.p2, self.theta, self.v_y, self.r]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self { p1: x[0], p2: x[1], theta: x[2], v_y: x[3], r: x[4] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Right-hand side on raw state slices; `params` must already be validated.
#[inline]
pub(crate) fn rhs_raw(params: &VehicleParams, x: &[f64], u: f64, dx: &mut [f64]) {
    let [c1, c2, c3, c4, c5, c6] = params.coefficients(u);
    let (s, c) = x[2].sin_cos();
    let (vy, r) = (x[3], x[4]);
    dx[0] = params.v_x * c - vy * s;
    dx[1] = params.v_x * s + vy * c;
    dx[2] = r;
    dx[3] = c1 * vy + c2 * r + c3 * u;
    dx[4] = c4 * vy + c5 * r + c6 * u;
}

pub fn dynamics_rhs(params: &VehicleParams, state: &VehicleState, u: f64) -> Result<VehicleState> {
    if params.v_x == 0.0 {
        return Err(Error::ZeroSpeed);
    }
    if u.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidInput(format!("steering angle {u} beyond pi/2")));
    }
    let mut dx = [0.0; 5];
    rhs_raw(params, &state.to_array(), u, &mut dx);
    Ok(VehicleState::from_slice(&dx))
}

/// Advances the world state over consecutive zero-order-hold intervals of length `h`.
/// Returns the states after each interval.
pub fn simulate(params: &VehicleParams, start: VehicleState, controls: &[f64], h: f64) -> Result<Vec<VehicleState>> {
    params.validate()?;
    let mut x = start.to_array();
    let mut out = Vec::with_capacity(controls.len());
    for (k, &u) in controls.iter().enumerate() {
        let mut next = [0.0; 5];
        rk4_step(|x, u, dx| rhs_raw(params, x, u, dx), &x, u, h, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { step: k + 1 });
        }
        x = next;
        out.push(VehicleState::from_slice(&x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_equilibrium() {
        let p = VehicleParams::default();
        let dx = dynamics_rhs(&p, &VehicleState::default(), 0.0).unwrap();
        assert_eq!(dx.to_array(), [30.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn coefficient_values() {
        let c = VehicleParams::default().coefficients(0.0);
        assert!((c[2] - 65_100.0 / 1275.0).abs() < 1e-12);
        assert!((c[2] - 51.058_823_529_411_76).abs() < 1e-9);
        assert!((c[5] - 65_100.0 / 1627.0).abs() < 1e-12);
        assert!((c[5] - 40.012_292_563_0).abs() < 1e-9);
        let expected_c1 = -(65_100.0 + 54_100.0) / (1275.0 * 30.0);
        assert!((c[0] - expected_c1).abs() < 1e-12);
    }

    #[test]
    fn forms_differ_only_in_coupling_terms() {
        let a = VehicleParams { form: CoefficientForm::Published, ..Default::default() }.coefficients(0.1);
        let b = VehicleParams { form: CoefficientForm::Textbook, ..Default::default() }.coefficients(0.1);
        for i in [0, 2, 4, 5] {
            assert_eq!(a[i], b[i]);
        }
        assert_ne!(a[1], b[1]);
        assert_ne!(a[3], b[3]);
    }

    #[test]
    fn lateral_stability_by_form() {
        // det < 0 of the (v_y, r) block means a saddle
        let det = |form| {
            let c = VehicleParams { form, ..Default::default() }.coefficients(0.0);
            c[0] * c[4] - c[1] * c[3]
        };
        assert!((det(CoefficientForm::Published) + 87.85).abs() < 0.01);
        assert!(det(CoefficientForm::Textbook) > 0.0);
    }

    #[test]
    fn zero_speed_is_singular() {
        let p = VehicleParams { v_x: 0.0, ..Default::default() };
        assert!(matches!(dynamics_rhs(&p, &VehicleState::default(), 0.0), Err(Error::ZeroSpeed)));
    }

    #[test]
    fn simulate_straight() {
        let p = VehicleParams::default();
        let xs = simulate(&p, VehicleState::default(), &[0.0; 3], 0.05).unwrap();
        assert_eq!(xs.len(), 3);
        assert!((xs[2].p1 - 4.5).abs() < 1e-12);
        assert_eq!(xs[2].p2, 0.0);
    }
}
