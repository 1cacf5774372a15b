use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{interpolate_controls, rpm_refine, select_by_preference, MethodVariant, MpcConfig};
use crate::error::{Error, Result};
use crate::library::{neighbors, Library};
use crate::ocp::robust_feasible;
use crate::vehicle::{mirror_reduce, simulate, symmetry_reduce, CarProblem, ReducedState, Track, VehicleState};

/// One receding-horizon step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// Plant state at the start of the step.
    pub state: VehicleState,
    /// Reduced state before mirroring.
    pub reduced: ReducedState,
    pub mirrored: bool,
    /// Full predicted control sequence in world orientation.
    pub controls: Vec<f64>,
    pub applied: Vec<f64>,
    /// Integral of `d^2` over the applied interval.
    pub j1: f64,
    /// Negative arclength progress over the applied interval.
    pub j2: f64,
    /// Largest `|d| - d_max` over the applied interval.
    pub violation: f64,
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    /// Sup points of the efficient set the control was taken from (reduced frame).
    pub front: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LogEvent {
    /// The reduced state was outside the library grid and was clamped.
    Clamped { step: usize },
    /// No neighbor had a usable efficient set; a zero control was used.
    NoLibraryData { step: usize },
    /// The reference point method failed; the start control was used instead.
    RpmFallback { step: usize, reason: String },
    /// The plant left the admissible corridor.
    ConstraintViolation { step: usize, violation: f64 },
    LapCompleted { step: usize, time: f64 },
}

/// Work counters, used to check which parts of the pipeline each method touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub nominal_lookups: usize,
    pub robust_lookups: usize,
    pub rpm_calls: usize,
    pub rpm_evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Time integral of `|d|`.
    pub accumulated_distance: f64,
    /// Time integral of `d^2`.
    pub accumulated_sq_distance: f64,
    pub max_distance: f64,
    /// Arclength covered.
    pub progress: f64,
    pub lap_time: Option<f64>,
    pub violation_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationLog {
    pub method: MethodVariant,
    pub records: Vec<StepRecord>,
    pub events: Vec<LogEvent>,
    pub metrics: RunMetrics,
    pub counters: Counters,
}

impl SimulationLog {
    pub fn csv_header(nodes: usize, applied: usize) -> String {
        let mut h = String::from("t,p1,p2,theta,vy,r,xi,d,kappa");
        for i in 1..=nodes {
            write!(h, ",u{i}").unwrap();
        }
        for i in 1..=applied {
            write!(h, ",applied{i}").unwrap();
        }
        h.push_str(",J1,J2,violation");
        h
    }

    pub fn csv_row(r: &StepRecord) -> String {
        let s = &r.state;
        let x = &r.reduced;
        let mut row = format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.t, s.p1, s.p2, s.theta, s.v_y, s.r, x.xi, x.d, x.kappa
        );
        for v in r.controls.iter().chain(&r.applied) {
            write!(row, ",{v:?}").unwrap();
        }
        write!(row, ",{:?},{:?},{:?}", r.j1, r.j2, r.violation).unwrap();
        row
    }

    /// CSV with one row per step; `comment` lines are prefixed with `# `.
    pub fn to_csv(&self, nodes: usize, applied: usize, comment: &[String]) -> String {
        let mut out = String::new();
        for c in comment {
            writeln!(out, "# {c}").unwrap();
        }
        writeln!(out, "{}", Self::csv_header(nodes, applied)).unwrap();
        for r in &self.records {
            writeln!(out, "{}", Self::csv_row(r)).unwrap();
        }
        out
    }
}

/// Receding-horizon controller driving a plant along a track.
#[derive(Debug, Clone)]
pub struct Controller {
    pub method: MethodVariant,
    /// Preference and reference point may be changed between steps.
    pub config: MpcConfig,
    track: Arc<Track>,
    library: Option<Arc<Library>>,
    state: VehicleState,
    time: f64,
    step: usize,
    previous: Option<Vec<f64>>,
    rng: ChaCha8Rng,
    s_last: f64,
    lap_target: f64,
    finished: bool,
    log: SimulationLog,
}

impl Controller {
    pub fn new(
        method: MethodVariant,
        config: MpcConfig,
        track: Arc<Track>,
        library: Option<Arc<Library>>,
        start: VehicleState,
    ) -> Result<Self> {
        config.validate()?;
        if method.uses_library() && library.is_none() {
            return Err(Error::InvalidInput(format!(
                "method {method} needs an offline library; only rpm runs without one"
            )));
        }
        if !start.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite start state {start:?}")));
        }
        let s0 = track.project([start.p1, start.p2]).s;
        let lap_target = if track.is_closed() { track.length() } else { track.length() - s0 };
        Ok(Self {
            method,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            track,
            library,
            state: start,
            time: 0.0,
            step: 0,
            previous: None,
            s_last: s0,
            lap_target,
            finished: false,
            log: SimulationLog {
                method,
                records: vec![],
                events: vec![],
                metrics: RunMetrics::default(),
                counters: Counters::default(),
            },
        })
    }

    pub fn state(&self) -> VehicleState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn log(&self) -> &SimulationLog {
        &self.log
    }

    pub fn into_log(self) -> SimulationLog {
        self.log
    }

    fn lookup(&mut self, x: &ReducedState, robust: bool) -> Result<Option<(Vec<f64>, Vec<Vec<f64>>)>> {
        let lib = self.library.as_ref().expect("checked at construction").clone();
        if robust {
            self.log.counters.robust_lookups += 1;
        } else {
            self.log.counters.nominal_lookups += 1;
        }
        let nb = neighbors(lib.spec(), x, self.config.neighbors);
        if nb.clamped {
            log::warn!("step {}: reduced state {x:?} outside the library grid, clamped", self.step);
            self.log.events.push(LogEvent::Clamped { step: self.step });
        }
        let mut chosen: Vec<(&[f64], f64)> = Vec::new();
        let mut front = Vec::new();
        let mut closest = f64::INFINITY;
        for &(index, dist) in &nb.nodes {
            let Some(node) = lib.node(index) else { continue };
            let entries = &node.front(robust).entries;
            if entries.is_empty() {
                continue;
            }
            let i = select_by_preference(entries, &self.config.rho, self.config.selection)?;
            chosen.push((&entries[i].controls, dist));
            if dist < closest {
                closest = dist;
                front = entries.iter().map(|e| e.sup_point.clone()).collect();
            }
        }
        if chosen.is_empty() {
            return Ok(None);
        }
        let (controls, dists): (Vec<&[f64]>, Vec<f64>) = chosen.into_iter().unzip();
        let u = interpolate_controls(&controls, &dists, -CarProblem::U_LIMIT, CarProblem::U_LIMIT)?;
        Ok(Some((u, front)))
    }

    fn random_start(&mut self, problem: &CarProblem) -> Result<Vec<f64>> {
        let bounds = problem.bounds();
        let mut u = bounds.sample(&mut self.rng);
        for _ in 0..50 {
            if robust_feasible(problem, &u, &self.config.uncertainty)? {
                break;
            }
            u = bounds.sample(&mut self.rng);
        }
        Ok(u)
    }

    fn refine(&mut self, problem: &CarProblem, start: Vec<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.log.counters.rpm_calls += 1;
        let c = &self.config;
        match rpm_refine(problem, &start, &c.uncertainty, c.z.as_slice(), &c.rpm) {
            Ok(res) => {
                self.log.counters.rpm_evaluations += res.evaluations;
                let r = crate::ocp::evaluate_realizations(problem, &res.controls, &c.uncertainty)?;
                let front = crate::moo::worst_case_set(&r).points().map(|p| p.to_vec()).collect();
                Ok((res.controls, front))
            }
            Err(Error::Infeasible(reason)) => {
                self.log.counters.rpm_evaluations += c.rpm.budget;
                log::warn!("step {}: reference point method infeasible ({reason}); using start", self.step);
                self.log.events.push(LogEvent::RpmFallback { step: self.step, reason });
                Ok((start, vec![]))
            }
            Err(e) => Err(e),
        }
    }

    /// Computes the control sequence for the current plant state in the
    /// reduced (possibly mirrored) frame.
    fn plan(&mut self, xm: &ReducedState, mirrored: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let c = &self.config;
        let problem = CarProblem::new(c.params, *xm, c.grid, c.d_max)?;
        let n = c.grid.nodes();
        let from_library = |this: &mut Self, robust: bool| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
            match this.lookup(xm, robust)? {
                Some(found) => Ok(found),
                None => {
                    log::warn!("step {}: no usable library neighbor, steering straight", this.step);
                    this.log.events.push(LogEvent::NoLibraryData { step: this.step });
                    Ok((vec![0.0; n], vec![]))
                }
            }
        };
        match self.method {
            MethodVariant::OptOffOn => from_library(self, false),
            MethodVariant::SbrOffOn => from_library(self, true),
            MethodVariant::Hybrid => {
                let (u, _) = from_library(self, true)?;
                self.refine(&problem, u)
            }
            MethodVariant::SbrRpm => {
                let start = match &self.previous {
                    Some(prev) => {
                        let a = self.config.applied;
                        let last = *prev.last().expect("nonempty controls");
                        let sign = if mirrored { -1.0 } else { 1.0 };
                        (0..n).map(|i| sign * prev.get(i + a).copied().unwrap_or(last)).collect()
                    }
                    None => self.random_start(&problem)?,
                };
                self.refine(&problem, start)
            }
        }
    }

    /// Runs one receding-horizon step and advances the plant.
    pub fn step(&mut self) -> Result<&StepRecord> {
        let track = self.track.clone();
        let reduced = symmetry_reduce(&track, &self.state)?;
        let (xm, mirrored) = mirror_reduce(reduced);
        let (u_frame, front) = self.plan(&xm, mirrored)?;
        let controls: Vec<f64> = if mirrored { u_frame.iter().map(|v| -v).collect() } else { u_frame };
        let applied = controls[..self.config.applied].to_vec();
        let h = self.config.grid.h;
        let states = simulate(&self.config.params, self.state, &applied, h)?;

        let d_max = self.config.d_max;
        let mut d_prev = reduced.d;
        let mut j1 = 0.0;
        let mut abs_int = 0.0;
        let mut progress = 0.0;
        let mut violation = reduced.d.abs() - d_max;
        let m = &mut self.log.metrics;
        m.max_distance = m.max_distance.max(reduced.d.abs());
        for (i, s) in states.iter().enumerate() {
            let proj = track.project([s.p1, s.p2]);
            j1 += 0.5 * h * (d_prev * d_prev + proj.d * proj.d);
            abs_int += 0.5 * h * (d_prev.abs() + proj.d.abs());
            let ds = track.progress(self.s_last, proj.s);
            if m.lap_time.is_none() && m.progress + ds >= self.lap_target - 1e-9 {
                let frac = if ds > 0.0 { ((self.lap_target - m.progress) / ds).clamp(0.0, 1.0) } else { 1.0 };
                let t = self.time + (i as f64 + frac) * h;
                m.lap_time = Some(t);
                self.log.events.push(LogEvent::LapCompleted { step: self.step, time: t });
                if self.config.stop_at_lap {
                    self.finished = true;
                }
            }
            m.progress += ds;
            progress += ds;
            self.s_last = proj.s;
            m.max_distance = m.max_distance.max(proj.d.abs());
            violation = violation.max(proj.d.abs() - d_max);
            d_prev = proj.d;
        }
        m.accumulated_sq_distance += j1;
        m.accumulated_distance += abs_int;
        if violation > 0.0 {
            m.violation_steps += 1;
            log::warn!("step {}: plant left the corridor by {violation:.3} m", self.step);
            self.log.events.push(LogEvent::ConstraintViolation { step: self.step, violation });
        }

        self.log.records.push(StepRecord {
            step: self.step,
            t: self.time,
            state: self.state,
            reduced,
            mirrored,
            controls: controls.clone(),
            applied,
            j1,
            j2: -progress,
            violation,
            rho: self.config.rho.as_slice().to_vec(),
            z: self.config.z.as_slice().to_vec(),
            front,
        });
        self.previous = Some(controls);
        self.state = *states.last().expect("applied >= 1");
        self.time += h * self.config.applied as f64;
        self.step += 1;
        Ok(self.log.records.last().expect("just pushed"))
    }
}

/// One step of `controller`; see [`Controller::step`].
pub fn mpc_step(controller: &mut Controller) -> Result<StepRecord> {
    controller.step().cloned()
}

/// Runs up to `steps` receding-horizon steps (fewer if the lap completes and
/// `config.stop_at_lap` is set).
pub fn mpc_run(
    method: MethodVariant,
    track: Arc<Track>,
    library: Option<Arc<Library>>,
    start: VehicleState,
    steps: usize,
    config: MpcConfig,
) -> Result<SimulationLog> {
    let mut c = Controller::new(method, config, track, library, start)?;
    while c.step_index() < steps && !c.is_finished() {
        c.step()?;
    }
    Ok(c.into_log())
}
