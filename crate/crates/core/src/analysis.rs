//! Variance-based sensitivity and convergence studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::WittingProblem;
use crate::error::{Error, Result};
use crate::moo::{delta_p, stochastic_search, Bounds, Evaluation, RealizationSet, SearchConfig};
use crate::ocp::evaluate;
use crate::vehicle::{CarProblem, ReducedState, VehicleParams};

/// A named uniform input range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl ParameterRange {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.to_string(), lo, hi }
    }
}

/// First-order indices per parameter (rows) and objective (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub parameters: Vec<ParameterRange>,
    /// `None` where the output variance is zero.
    pub indices: Vec<Vec<Option<f64>>>,
    /// Half-widths of the bootstrap 95% intervals.
    pub half_widths: Vec<Vec<Option<f64>>>,
    pub samples: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl SensitivityReport {
    pub fn index(&self, param: &str, objective: usize) -> Option<f64> {
        let i = self.parameters.iter().position(|p| p.name == param)?;
        self.indices[i][objective]
    }

    /// Parameter with the largest index for `objective`.
    pub fn dominant(&self, objective: usize) -> Option<&str> {
        self.parameters
            .iter()
            .zip(&self.indices)
            .filter_map(|(p, row)| row[objective].map(|s| (p, s)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p.name.as_str())
    }

    pub fn to_csv(&self, comment: &[String]) -> String {
        let mut out = String::new();
        for c in comment {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("parameter,lo,hi,objective,index,half_width\n");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_else(|| "undefined".into());
        for (i, p) in self.parameters.iter().enumerate() {
            for k in 0..self.indices[i].len() {
                out.push_str(&format!(
                    "{},{:?},{:?},J{},{},{}\n",
                    p.name,
                    p.lo,
                    p.hi,
                    k + 1,
                    fmt(self.indices[i][k]),
                    fmt(self.half_widths[i][k])
                ));
            }
        }
        out
    }
}

fn first_order(fa: &[f64], fb: &[f64], fab: &[f64], idx: &[usize]) -> Option<f64> {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&j| fa[j] + fb[j]).sum::<f64>() / (2.0 * n);
    let var = idx.iter().map(|&j| (fa[j] - mean).powi(2) + (fb[j] - mean).powi(2)).sum::<f64>() / (2.0 * n);
    if var <= 0.0 {
        return None;
    }
    let v = idx.iter().map(|&j| (fb[j] - mean) * (fab[j] - fa[j])).sum::<f64>() / n;
    Some(v / var)
}

/// Pick-freeze Monte Carlo estimate of first-order Sobol indices with
/// bootstrap confidence half-widths. Uses `n * (d + 2)` model evaluations.
pub fn sobol_first_order<F>(
    model: F,
    parameters: &[ParameterRange],
    n: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<SensitivityReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if n < 64 {
        return Err(Error::InvalidInput(format!("need at least 64 base samples, got {n}")));
    }
    let d = parameters.len();
    if d == 0 || parameters.iter().any(|p| !(p.lo < p.hi)) {
        return Err(Error::InvalidInput("parameter ranges must be nonempty intervals".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| parameters.iter().map(|p| rng.gen_range(p.lo..p.hi)).collect())
            .collect()
    };
    let a = draw();
    let b = draw();
    let eval_all = |rows: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> { rows.par_iter().map(|x| model(x)).collect() };
    let ya = eval_all(&a)?;
    let yb = eval_all(&b)?;
    let k = ya[0].len();
    let column = |y: &[Vec<f64>], obj: usize| -> Vec<f64> { y.iter().map(|v| v[obj]).collect() };

    let resamples: Vec<Vec<usize>> = (0..bootstrap).map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect()).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut indices = Vec::with_capacity(d);
    let mut half_widths = Vec::with_capacity(d);
    for i in 0..d {
        let ab: Vec<Vec<f64>> = a
            .iter()
            .zip(&b)
            .map(|(ra, rb)| {
                let mut r = ra.clone();
                r[i] = rb[i];
                r
            })
            .collect();
        let yab = eval_all(&ab)?;
        let mut row = Vec::with_capacity(k);
        let mut hw = Vec::with_capacity(k);
        for obj in 0..k {
            let (fa, fb, fab) = (column(&ya, obj), column(&yb, obj), column(&yab, obj));
            row.push(first_order(&fa, &fb, &fab, &all));
            let mut boot: Vec<f64> = resamples.iter().filter_map(|idx| first_order(&fa, &fb, &fab, idx)).collect();
            hw.push(if boot.len() < 2 {
                None
            } else {
                boot.sort_by(f64::total_cmp);
                let q = |p: f64| boot[((boot.len() - 1) as f64 * p).round() as usize];
                Some(0.5 * (q(0.975) - q(0.025)))
            });
        }
        indices.push(row);
        half_widths.push(hw);
    }
    Ok(SensitivityReport { parameters: parameters.to_vec(), indices, half_widths, samples: n, bootstrap, seed })
}

/// Input ranges of the car sensitivity study: the reduced state over a
/// near-centerline operating regime (full library range for `d` and `kappa`)
/// plus mass and `L_f` at +-10% of their nominal values.
pub fn car_parameter_ranges() -> Vec<ParameterRange> {
    let p = VehicleParams::default();
    vec![
        ParameterRange::new("v_y", -0.5, 0.5),
        ParameterRange::new("r", -0.1, 0.1),
        ParameterRange::new("xi", -0.05, 0.05),
        ParameterRange::new("d", 0.0, 10.0),
        ParameterRange::new("kappa", -0.1, 0.1),
        ParameterRange::new("m", 0.9 * p.mass, 1.1 * p.mass),
        ParameterRange::new("L_f", 0.9 * p.l_f, 1.1 * p.l_f),
    ]
}

/// Nominal open-loop car objectives at the constant control `u` for
/// `(v_y, r, xi, d, kappa, m, L_f)`.
pub fn car_objectives(y: &[f64], u: f64) -> Result<Vec<f64>> {
    let params = VehicleParams { mass: y[5], l_f: y[6], ..Default::default() };
    let x0 = ReducedState { v_y: y[0], r: y[1], xi: y[2], d: y[3], kappa: y[4] };
    let problem = CarProblem::new(params, x0, CarProblem::default_grid(), f64::MAX)?;
    let controls = vec![u; problem.grid.nodes()];
    Ok(evaluate(&problem, &[0.0], &controls)?.objectives)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub budget: usize,
    pub median_decision: f64,
    pub median_objective: f64,
    /// `(decision, objective)` per run.
    pub runs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub alpha: f64,
    pub population_size: usize,
    pub reference_size: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self, comment: &[String]) -> String {
        let mut out = String::new();
        for c in comment {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("budget,runs,median_delta2_decision,median_delta2_objective\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:?},{:?}\n", r.budget, r.runs.len(), r.median_decision, r.median_objective));
        }
        out
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median `Delta_2` of stochastic-search archives against the brute-force
/// reference of the witting problem, in decision and objective space.
/// Run `r` uses seed `seed + r` for every budget.
pub fn delta2_convergence(
    alpha: f64,
    budgets: &[usize],
    runs: usize,
    population_size: usize,
    reference_grid: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    if budgets.is_empty() || runs == 0 {
        return Err(Error::InvalidInput("need at least one budget and one run".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!("budgets {budgets:?} must be strictly ascending")));
    }
    let reference = WittingProblem::reference_front(alpha, reference_grid);
    let bounds = Bounds::uniform(2, -WittingProblem::U_LIMIT, WittingProblem::U_LIMIT)?;
    let mut rows = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let runs: Vec<(f64, f64)> = (0..runs as u64)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64)> {
                let config = SearchConfig::with_budget(budget, population_size, seed.wrapping_add(r));
                let archive = stochastic_search(&bounds, &config, &[], |u| {
                    let j = WittingProblem::eval([u[0], u[1]], alpha);
                    Ok(Evaluation { realizations: RealizationSet::singleton(&j)?, feasible: true })
                })?;
                let decisions = archive.decisions();
                let objectives: Vec<Vec<f64>> = archive.iter().map(|e| e.sup_point.as_slice().to_vec()).collect();
                Ok((
                    delta_p(&decisions, &reference.decisions, 2.0)?,
                    delta_p(&objectives, &reference.objectives, 2.0)?,
                ))
            })
            .collect::<Result<_>>()?;
        rows.push(ConvergenceRow {
            budget,
            median_decision: median(runs.iter().map(|r| r.0).collect()),
            median_objective: median(runs.iter().map(|r| r.1).collect()),
            runs,
        });
    }
    Ok(ConvergenceTable { alpha, population_size, reference_size: reference.len(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<ParameterRange> {
        vec![ParameterRange::new("y1", 0.0, 1.0), ParameterRange::new("y2", 0.0, 1.0)]
    }

    #[test]
    fn single_variable_owns_the_variance() {
        let r = sobol_first_order(|y| Ok(vec![y[0]]), &unit_square(), 4096, 50, 1).unwrap();
        assert!((r.indices[0][0].unwrap() - 1.0).abs() < 0.05);
        assert!(r.indices[1][0].unwrap().abs() < 0.05);
        assert!(r.half_widths[0][0].unwrap() > 0.0);
    }

    #[test]
    fn additive_split() {
        let r = sobol_first_order(|y| Ok(vec![y[0] + y[1]]), &unit_square(), 4096, 50, 2).unwrap();
        let (a, b) = (r.indices[0][0].unwrap(), r.indices[1][0].unwrap());
        assert!((a - 0.5).abs() < 0.05 && (b - 0.5).abs() < 0.05);
        assert!(a + b <= 1.1);
    }

    #[test]
    fn constant_output_is_undefined() {
        let r = sobol_first_order(|_| Ok(vec![3.0]), &unit_square(), 64, 10, 0).unwrap();
        assert_eq!(r.indices[0][0], None);
        assert!(r.to_csv(&[]).contains("undefined"));
        assert!(sobol_first_order(|_| Ok(vec![3.0]), &unit_square(), 63, 10, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let f = |y: &[f64]| Ok(vec![y[0] * y[1], y[1]]);
        let a = sobol_first_order(f, &unit_square(), 128, 20, 9).unwrap();
        let b = sobol_first_order(f, &unit_square(), 128, 20, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn car_objectives_at_equilibrium() {
        let p = VehicleParams::default();
        let j = car_objectives(&[0.0, 0.0, 0.0, 0.0, 0.0, p.mass, p.l_f], 0.0).unwrap();
        assert!(j[0].abs() < 1e-12 && (j[1] + 15.0).abs() < 1e-9);
    }

    #[test]
    fn convergence_single_budget_and_determinism() {
        let a = delta2_convergence(0.5, &[300], 3, 50, 60, 4).unwrap();
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows[0].runs.len(), 3);
        assert_eq!(a, delta2_convergence(0.5, &[300], 3, 50, 60, 4).unwrap());
        assert!(delta2_convergence(0.5, &[500, 400], 3, 50, 60, 4).is_err());
    }
}
