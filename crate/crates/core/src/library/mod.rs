//! Offline grid of robust efficient sets over the reduced state space.

mod build;
mod io;

pub use build::{build_library, solve_node, BuildOptions, NodeSolver};
pub use io::{checksum64, decode_node, encode_node, load, save, LoadReport, FORMAT_VERSION, MAGIC};

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::{Archive, RealizationSet};
use crate::ocp::{TimeGrid, UncertaintyBox};
use crate::vehicle::{CarProblem, ReducedState, VehicleParams};

/// One axis of the library grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 || !(min <= max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidInput(format!("invalid grid axis [{min}, {max}] x {count}")));
        }
        if count == 1 && min != max {
            return Err(Error::InvalidInput("single-point axis needs min == max".into()));
        }
        let step = if count == 1 { 0.0 } else { (max - min) / (count - 1) as f64 };
        Ok(Self { min, max, step, count })
    }

    pub fn point(min: f64) -> Self {
        Self { min, max: min, step: 0.0, count: 1 }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step
        }
    }

    /// Position in units of grid steps from `min`.
    pub fn normalized(&self, x: f64) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            (x - self.min) / self.step
        }
    }

    fn validate(&self) -> Result<()> {
        let recount = if self.count == 1 { 1.0 } else { (self.max - self.min) / self.step + 1.0 };
        if (recount - self.count as f64).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("grid axis count {} inconsistent with step", self.count)));
        }
        Ok(())
    }
}

/// Library grid over `(d, xi, v_y, r, kappa)`, enumerated with `kappa` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: GridAxis,
    pub xi: GridAxis,
    pub v_y: GridAxis,
    pub r: GridAxis,
    pub kappa: GridAxis,
}

impl GridSpec {
    /// 21 x 7 x 13 x 13 x 9 nodes.
    pub fn paper() -> Self {
        Self {
            d: GridAxis::new(0.0, 10.0, 21).unwrap(),
            xi: GridAxis::new(-PI / 4.0, PI / 4.0, 7).unwrap(),
            v_y: GridAxis::new(-3.0, 3.0, 13).unwrap(),
            r: GridAxis::new(-6.0, 6.0, 13).unwrap(),
            kappa: GridAxis::new(-0.1, 0.1, 9).unwrap(),
        }
    }

    /// Three points per axis over the same ranges (243 nodes).
    pub fn coarse() -> Self {
        let p = Self::paper();
        let three = |a: GridAxis| GridAxis::new(a.min, a.max, 3).unwrap();
        Self { d: three(p.d), xi: three(p.xi), v_y: three(p.v_y), r: three(p.r), kappa: three(p.kappa) }
    }

    /// Paper spacing over a range covering gentle tracks (675 nodes):
    /// `d` 0..2, `xi` +-pi/12, `v_y` +-1, `r` +-1, `kappa` +-0.025.
    pub fn compact() -> Self {
        Self {
            d: GridAxis::new(0.0, 2.0, 5).unwrap(),
            xi: GridAxis::new(-PI / 12.0, PI / 12.0, 3).unwrap(),
            v_y: GridAxis::new(-1.0, 1.0, 5).unwrap(),
            r: GridAxis::new(-1.0, 1.0, 3).unwrap(),
            kappa: GridAxis::new(-0.025, 0.025, 3).unwrap(),
        }
    }

    pub fn axes(&self) -> [&GridAxis; 5] {
        [&self.d, &self.xi, &self.v_y, &self.r, &self.kappa]
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.axes() {
            a.validate()?;
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.axes().iter().map(|a| a.count).product()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: Self = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("grid spec {}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Per-axis indices of a linear node index.
    pub fn coords(&self, index: usize) -> [usize; 5] {
        let mut rem = index;
        let mut out = [0usize; 5];
        for (k, a) in self.axes().iter().enumerate().rev() {
            out[k] = rem % a.count;
            rem /= a.count;
        }
        out
    }

    pub fn index(&self, coords: [usize; 5]) -> usize {
        self.axes().iter().zip(coords).fold(0, |acc, (a, c)| acc * a.count + c)
    }

    pub fn node_state(&self, index: usize) -> ReducedState {
        let c = self.coords(index);
        ReducedState {
            d: self.d.value(c[0]),
            xi: self.xi.value(c[1]),
            v_y: self.v_y.value(c[2]),
            r: self.r.value(c[3]),
            kappa: self.kappa.value(c[4]),
        }
    }

    /// Axis-ordered coordinates `(d, xi, v_y, r, kappa)` of a reduced state.
    pub fn axis_values(x: &ReducedState) -> [f64; 5] {
        [x.d, x.xi, x.v_y, x.r, x.kappa]
    }
}

/// All grid nodes in lexicographic order.
pub fn enumerate_nodes(spec: &GridSpec) -> Vec<ReducedState> {
    (0..spec.node_count()).map(|i| spec.node_state(i)).collect()
}

/// Everything needed to reproduce a library build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub version: u32,
    pub spec: GridSpec,
    pub params: VehicleParams,
    pub grid: TimeGrid,
    pub uncertainty: UncertaintyBox,
    pub d_max: f64,
    /// Evaluations per node and per search (robust and nominal each).
    pub budget: usize,
    pub population_size: usize,
    pub mutation_scale: f64,
    pub base_seed: u64,
}

impl LibraryManifest {
    pub fn new(spec: GridSpec, budget: usize, base_seed: u64) -> Self {
        Self {
            version: FORMAT_VERSION,
            spec,
            params: VehicleParams::default(),
            grid: CarProblem::default_grid(),
            uncertainty: UncertaintyBox::symmetric(0.25, 21).expect("static box"),
            d_max: crate::vehicle::DEFAULT_D_MAX,
            budget,
            population_size: 100,
            mutation_scale: 0.1,
            base_seed,
        }
    }

    pub fn node_seed(&self, index: usize) -> u64 {
        self.base_seed ^ index as u64
    }

    pub fn problem(&self, x0: ReducedState) -> Result<CarProblem> {
        CarProblem::new(self.params, x0, self.grid, self.d_max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

/// A stored efficient solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub controls: Vec<f64>,
    pub sup_point: Vec<f64>,
    pub worst_case: RealizationSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeStatus {
    Solved,
    /// No robust-feasible candidate was found; carries the smallest worst-case violation seen.
    Infeasible { best_violation: f64 },
    Failed { message: String },
}

/// Efficient set of one node under one uncertainty model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFront {
    pub status: NodeStatus,
    pub entries: Vec<LibraryEntry>,
}

impl NodeFront {
    pub fn from_archive(archive: &Archive, best_violation: f64) -> Self {
        if archive.is_empty() {
            return Self { status: NodeStatus::Infeasible { best_violation }, entries: vec![] };
        }
        let entries = archive
            .iter()
            .map(|e| LibraryEntry {
                controls: e.decision.values.clone(),
                sup_point: e.sup_point.as_slice().to_vec(),
                worst_case: e.worst_case.clone(),
            })
            .collect();
        Self { status: NodeStatus::Solved, entries }
    }

    pub fn failed(message: String) -> Self {
        Self { status: NodeStatus::Failed { message }, entries: vec![] }
    }

    /// Pairwise set-nondominance of the stored worst-case sets.
    pub fn is_mutually_nondominated(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries.iter().enumerate().all(|(j, b)| {
                i == j || !crate::moo::set_dominates(&a.worst_case, &b.worst_case).unwrap_or(true)
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryNode {
    pub index: usize,
    pub state: ReducedState,
    pub seed: u64,
    pub budget: usize,
    /// Set-based robust efficient set under the manifest's uncertainty box.
    pub robust: NodeFront,
    /// Efficient set of the nominal problem (no uncertainty).
    pub nominal: NodeFront,
}

impl LibraryNode {
    pub fn front(&self, robust: bool) -> &NodeFront {
        if robust {
            &self.robust
        } else {
            &self.nominal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Library {
    pub manifest: LibraryManifest,
    /// Solved nodes sorted by index.
    pub nodes: Vec<LibraryNode>,
}

impl Library {
    pub fn spec(&self) -> &GridSpec {
        &self.manifest.spec
    }

    pub fn node(&self, index: usize) -> Option<&LibraryNode> {
        self.nodes
            .binary_search_by_key(&index, |n| n.index)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn failed_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.robust.status, NodeStatus::Failed { .. }) || matches!(n.nominal.status, NodeStatus::Failed { .. }))
            .map(|n| n.index)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.nodes.len() == self.spec().node_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NeighborStrategy {
    /// The `2^5` corners of the enclosing grid cell.
    #[default]
    CellCorners,
    /// The nearest node's two neighbours along each axis (`2 * 5`), plus the
    /// nearest node itself when the query lies exactly on it.
    Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// `(node index, Euclidean distance in normalized grid coordinates)`.
    pub nodes: Vec<(usize, f64)>,
    /// The query was outside the grid hull and was clamped onto it.
    pub clamped: bool,
}

/// Grid nodes around `x` under `strategy`. Queries outside the hull are clamped.
pub fn neighbors(spec: &GridSpec, x: &ReducedState, strategy: NeighborStrategy) -> Neighborhood {
    let axes = spec.axes();
    let raw = GridSpec::axis_values(x);
    let mut clamped = false;
    let mut pos = [0.0; 5];
    for k in 0..5 {
        let n = axes[k].normalized(raw[k]);
        let hi = (axes[k].count - 1) as f64;
        let c = if n.is_nan() { 0.0 } else { n.clamp(0.0, hi) };
        if c != n && (c - n).abs() > 1e-9 {
            clamped = true;
        }
        // Snap rounding noise so queries on a node hit it exactly.
        pos[k] = if (c - c.round()).abs() <= 1e-9 { c.round() } else { c };
    }
    let bracket = |k: usize| -> (usize, usize) {
        let count = axes[k].count;
        if count == 1 {
            return (0, 0);
        }
        let lo = (pos[k].floor() as usize).min(count - 2);
        (lo, lo + 1)
    };
    let dist = |c: [usize; 5]| -> f64 {
        (0..5).map(|k| (c[k] as f64 - pos[k]).powi(2)).sum::<f64>().sqrt()
    };
    let mut coords: Vec<[usize; 5]> = Vec::new();
    match strategy {
        NeighborStrategy::CellCorners => {
            let brackets: Vec<(usize, usize)> = (0..5).map(bracket).collect();
            for mask in 0..32u32 {
                let mut c = [0usize; 5];
                for k in 0..5 {
                    c[k] = if mask & (1 << k) == 0 { brackets[k].0 } else { brackets[k].1 };
                }
                if !coords.contains(&c) {
                    coords.push(c);
                }
            }
        }
        NeighborStrategy::Axis => {
            let nearest: [usize; 5] = std::array::from_fn(|k| pos[k].round() as usize);
            if dist(nearest) == 0.0 {
                coords.push(nearest);
            }
            for k in 0..5 {
                let c = nearest[k];
                for v in [c.checked_sub(1), Some(c + 1).filter(|&v| v < axes[k].count)].into_iter().flatten() {
                    let mut n = nearest;
                    n[k] = v;
                    coords.push(n);
                }
            }
        }
    }
    let nodes = coords.into_iter().map(|c| (spec.index(c), dist(c))).collect();
    Neighborhood { nodes, clamped }
}
