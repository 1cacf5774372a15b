//! Online phase: library lookup, preference selection, reference point
//! refinement and the receding-horizon loop.

mod mpc;
mod rpm;

pub use mpc::{mpc_run, mpc_step, Controller, Counters, LogEvent, RunMetrics, SimulationLog, StepRecord};
pub use rpm::{reference_distance, rpm_refine, RpmConfig, RpmResult};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{LibraryEntry, NeighborStrategy};
use crate::ocp::{TimeGrid, UncertaintyBox};
use crate::vehicle::{CarProblem, CoefficientForm, VehicleParams, DEFAULT_D_MAX};

/// Normalization guard in the Chebyshev selection.
pub const SELECTION_EPS: f64 = 1e-12;

/// Nonnegative objective weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Preference(Vec<f64>);

impl Preference {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::EmptySet("preference"));
        }
        if rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidInput(format!("preference {rho:?} has negative or non-finite weights")));
        }
        let sum: f64 = rho.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("preference {rho:?} sums to {sum}, not 1")));
        }
        Ok(Self(rho))
    }

    pub fn equal(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Preference {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Preference> for Vec<f64> {
    fn from(p: Preference) -> Self {
        p.0
    }
}

/// Aspiration point of the reference point method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ReferencePoint(Vec<f64>);

impl ReferencePoint {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::EmptySet("reference point"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("reference point {z:?} is not finite")));
        }
        Ok(Self(z))
    }

    /// Best attainable value of each car objective over a horizon: no
    /// centerline error and full-speed progress.
    pub fn car_ideal(params: &VehicleParams, grid: &TimeGrid) -> Self {
        Self(vec![0.0, -params.v_x * (grid.te - grid.t0)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ReferencePoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ReferencePoint> for Vec<f64> {
    fn from(z: ReferencePoint) -> Self {
        z.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodVariant {
    /// Nominal library, interpolation only.
    OptOffOn,
    /// Robust library, interpolation only.
    SbrOffOn,
    /// Reference point method alone, warm-started from the previous step.
    SbrRpm,
    /// Robust library lookup refined by the reference point method.
    Hybrid,
}

impl MethodVariant {
    pub const ALL: [MethodVariant; 4] = [Self::OptOffOn, Self::SbrOffOn, Self::SbrRpm, Self::Hybrid];

    pub fn uses_library(self) -> bool {
        !matches!(self, Self::SbrRpm)
    }

    pub fn uses_rpm(self) -> bool {
        matches!(self, Self::SbrRpm | Self::Hybrid)
    }

    /// Whether uncertainty is treated explicitly.
    pub fn is_robust(self) -> bool {
        !matches!(self, Self::OptOffOn)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::OptOffOn => "opt",
            Self::SbrOffOn => "sbr",
            Self::SbrRpm => "rpm",
            Self::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for MethodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for MethodVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.cli_name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?} (expected opt, sbr, rpm or hybrid)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SelectionRule {
    /// Weighted Chebyshev distance to the ideal point of the normalized sup points.
    #[default]
    Chebyshev,
    /// Weighted sum of the normalized sup points.
    WeightedSum,
}

/// Index of the entry preferred under `rho`; ties go to the lowest index.
pub fn select_by_preference(entries: &[LibraryEntry], rho: &Preference, rule: SelectionRule) -> Result<usize> {
    let first = entries.first().ok_or(Error::EmptySet("efficient set"))?;
    let k = first.sup_point.len();
    crate::error::check_dim(k, rho.as_slice().len())?;
    let mut ideal = vec![f64::INFINITY; k];
    let mut nadir = vec![f64::NEG_INFINITY; k];
    for e in entries {
        crate::error::check_dim(k, e.sup_point.len())?;
        for j in 0..k {
            ideal[j] = ideal[j].min(e.sup_point[j]);
            nadir[j] = nadir[j].max(e.sup_point[j]);
        }
    }
    let score = |e: &LibraryEntry| {
        let terms = (0..k).map(|j| rho.0[j] * (e.sup_point[j] - ideal[j]) / (nadir[j] - ideal[j] + SELECTION_EPS));
        match rule {
            SelectionRule::Chebyshev => terms.fold(f64::NEG_INFINITY, f64::max),
            SelectionRule::WeightedSum => terms.sum(),
        }
    };
    let mut best = 0;
    let mut best_score = score(first);
    for (i, e) in entries.iter().enumerate().skip(1) {
        let s = score(e);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(best)
}

/// Inverse-distance weighted average of neighbor controls, or the control of
/// a neighbor at distance zero verbatim. The average is clipped to `[lo, hi]`.
pub fn interpolate_controls(controls: &[&[f64]], distances: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    crate::error::check_dim(controls.len(), distances.len())?;
    let first = controls.first().ok_or(Error::EmptySet("interpolation neighbors"))?;
    let n = first.len();
    for c in controls {
        crate::error::check_dim(n, c.len())?;
    }
    if let Some(j) = distances.iter().position(|&d| d == 0.0) {
        return Ok(controls[j].to_vec());
    }
    if distances.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid interpolation distances {distances:?}")));
    }
    let total: f64 = distances.iter().map(|d| 1.0 / d).sum();
    Ok((0..n)
        .map(|i| {
            let v: f64 = controls.iter().zip(distances).map(|(c, d)| c[i] / d).sum::<f64>() / total;
            v.clamp(lo, hi)
        })
        .collect())
}

/// Receding-horizon settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub params: VehicleParams,
    /// Prediction horizon grid.
    pub grid: TimeGrid,
    /// Control entries applied to the plant per step.
    pub applied: usize,
    /// Uncertainty on the lateral offset.
    pub uncertainty: UncertaintyBox,
    pub d_max: f64,
    pub rho: Preference,
    pub z: ReferencePoint,
    pub selection: SelectionRule,
    pub neighbors: NeighborStrategy,
    pub rpm: RpmConfig,
    pub seed: u64,
    /// End the run once one lap is completed.
    pub stop_at_lap: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        let params = VehicleParams::default();
        let grid = CarProblem::default_grid();
        Self {
            params,
            grid,
            applied: 3,
            uncertainty: UncertaintyBox::symmetric(0.25, 21).expect("static box"),
            d_max: DEFAULT_D_MAX,
            rho: Preference::equal(2),
            z: ReferencePoint::car_ideal(&params, &grid),
            selection: SelectionRule::Chebyshev,
            neighbors: NeighborStrategy::CellCorners,
            rpm: RpmConfig::default(),
            seed: 0,
            stop_at_lap: true,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = self.grid.nodes();
        if self.applied == 0 || self.applied > n {
            return Err(Error::InvalidInput(format!("applied entries {} not in 1..={n}", self.applied)));
        }
        crate::error::check_dim(2, self.rho.as_slice().len())?;
        crate::error::check_dim(2, self.z.as_slice().len())?;
        crate::error::check_dim(1, self.uncertainty.dim())?;
        if !(self.d_max > 0.0) {
            return Err(Error::InvalidInput("d_max must be positive".into()));
        }
        Ok(())
    }

    /// Duration of the applied part of each solution.
    pub fn control_horizon(&self) -> f64 {
        self.applied as f64 * self.grid.h
    }
}

/// User-facing run settings shared by the command line and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub rho: Vec<f64>,
    /// Defaults to the car ideal point when absent.
    pub z: Option<Vec<f64>>,
    pub coefficients: CoefficientForm,
    pub seed: u64,
    pub rpm_budget: usize,
    pub uncertainty_samples: usize,
    pub neighbors: NeighborStrategy,
    pub selection: SelectionRule,
}

impl Default for RunOptions {
    fn default() -> Self {
        let c = MpcConfig::default();
        Self {
            rho: c.rho.into(),
            z: None,
            coefficients: c.params.form,
            seed: c.seed,
            rpm_budget: c.rpm.budget,
            uncertainty_samples: c.uncertainty.samples_per_dim,
            neighbors: c.neighbors,
            selection: c.selection,
        }
    }
}

impl RunOptions {
    pub fn config(&self) -> Result<MpcConfig> {
        let mut c = MpcConfig::default();
        c.params.form = self.coefficients;
        c.rho = Preference::new(self.rho.clone())?;
        c.z = match &self.z {
            Some(z) => ReferencePoint::new(z.clone())?,
            None => ReferencePoint::car_ideal(&c.params, &c.grid),
        };
        c.seed = self.seed;
        if self.rpm_budget == 0 {
            return Err(Error::InvalidInput("rpm budget must be positive".into()));
        }
        c.rpm.budget = self.rpm_budget;
        let half = c.uncertainty.hi[0];
        c.uncertainty = UncertaintyBox::symmetric(half, self.uncertainty_samples)?;
        c.neighbors = self.neighbors;
        c.selection = self.selection;
        c.validate()?;
        Ok(c)
    }
}
