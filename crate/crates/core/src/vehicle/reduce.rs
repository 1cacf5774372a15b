use serde::{Deserialize, Serialize};

use super::track::wrap_angle;
use super::{Track, VehicleState};
use crate::error::{Error, Result};

/// Vehicle state relative to the local track: `(v_y, r, xi, d, kappa)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub v_y: f64,
    pub r: f64,
    /// Heading relative to the track tangent, rad.
    pub xi: f64,
    /// Signed lateral distance, left positive, m.
    pub d: f64,
    pub kappa: f64,
}

impl ReducedState {
    pub fn new(v_y: f64, r: f64, xi: f64, d: f64, kappa: f64) -> Self {
        Self { v_y, r, xi, d, kappa }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.v_y, self.r, self.xi, self.d, self.kappa]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { v_y: a[0], r: a[1], xi: a[2], d: a[3], kappa: a[4] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Reflection about the centerline.
    pub fn mirrored(self) -> Self {
        Self::from_array(self.to_array().map(|v| -v))
    }
}

/// Removes translation and rotation: the reduced coordinates of `state` relative
/// to its foot point on `track`.
pub fn symmetry_reduce(track: &Track, state: &VehicleState) -> Result<ReducedState> {
    if !state.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite vehicle state {state:?}")));
    }
    let proj = track.project([state.p1, state.p2]);
    let local = track.local_params(proj.s);
    Ok(ReducedState {
        v_y: state.v_y,
        r: state.r,
        xi: wrap_angle(state.theta - local.tangent_angle),
        d: proj.d,
        kappa: local.kappa,
    })
}

/// Maps states right of the centerline (`d < 0`) onto `d > 0` by reflection.
/// Controls computed for a mirrored state must be negated before use.
pub fn mirror_reduce(x: ReducedState) -> (ReducedState, bool) {
    if x.d < 0.0 {
        (x.mirrored(), true)
    } else {
        (x, false)
    }
}
