use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{archive_update, Archive, ArchiveEntry, RealizationSet};
use crate::error::{check_dim, Error, Result};

/// Axis-aligned box of admissible decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidInput("bounds must have at least one dimension".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidInput(format!("invalid bound interval [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    pub fn clip(&self, u: &mut [f64]) {
        for (x, (l, h)) in u.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*l, *h);
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, h)| if l == h { *l } else { rng.gen_range(*l..=*h) })
            .collect()
    }
}

/// A candidate decision `u` inside its box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub values: Vec<f64>,
}

impl DecisionPoint {
    pub fn new(values: Vec<f64>, bounds: &Bounds) -> Result<Self> {
        if !bounds.contains(&values) {
            return Err(Error::InvalidInput(format!("decision {values:?} outside its bounds")));
        }
        Ok(Self { values })
    }

    pub(crate) fn unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// What the search callback reports for one candidate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub realizations: RealizationSet,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub population_size: usize,
    /// Generations after the initial population; zero keeps only `P_0`.
    pub iterations: usize,
    /// Standard deviation of mutations as a fraction of each box width.
    pub mutation_scale: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { population_size: 100, iterations: 99, mutation_scale: 0.1, seed: 0 }
    }
}

impl SearchConfig {
    /// Splits a total evaluation budget into generations of `population_size`.
    pub fn with_budget(budget: usize, population_size: usize, seed: u64) -> Self {
        let population_size = population_size.clamp(1, budget.max(1));
        Self {
            population_size,
            iterations: (budget / population_size).saturating_sub(1),
            mutation_scale: 0.1,
            seed,
        }
    }

    pub fn budget(&self) -> usize {
        self.population_size * (self.iterations + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::InvalidInput("population_size must be >= 1".into()));
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "mutation_scale {} outside (0, 1]",
                self.mutation_scale
            )));
        }
        Ok(())
    }
}

/// Generic stochastic search with the set-based archiver.
///
/// `P_0` is drawn uniformly from `bounds` (after the explicit `seeds`, which
/// occupy its first slots). Every later generation mixes fresh uniform samples
/// with Gaussian perturbations of archive members, half and half in
/// expectation. Infeasible candidates never reach the archive.
pub fn stochastic_search<F>(
    bounds: &Bounds,
    config: &SearchConfig,
    seeds: &[Vec<f64>],
    mut evaluate: F,
) -> Result<Archive>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    config.validate()?;
    for s in seeds {
        if !bounds.contains(s) {
            return Err(Error::InvalidInput(format!("seed {s:?} outside bounds")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sigmas: Vec<f64> = (0..bounds.dim()).map(|i| config.mutation_scale * bounds.width(i)).collect();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut archive = Archive::new();
    for iteration in 0..=config.iterations {
        let mut population = Vec::with_capacity(config.population_size);
        for slot in 0..config.population_size {
            let u = if iteration == 0 {
                seeds.get(slot).cloned().unwrap_or_else(|| bounds.sample(&mut rng))
            } else if archive.is_empty() || rng.gen_bool(0.5) {
                bounds.sample(&mut rng)
            } else {
                let parent = &archive.entries[rng.gen_range(0..archive.len())].decision.values;
                let mut child: Vec<f64> = parent
                    .iter()
                    .zip(&sigmas)
                    .map(|(x, s)| x + s * std_normal.sample(&mut rng))
                    .collect();
                bounds.clip(&mut child);
                child
            };
            let eval = evaluate(&u).map_err(|e| Error::Search { iteration, source: Box::new(e) })?;
            if eval.feasible {
                population.push(ArchiveEntry::new(
                    super::DecisionPoint::unchecked(u),
                    eval.realizations,
                ));
            }
        }
        archive = archive_update(population, archive)?;
    }
    Ok(archive)
}
