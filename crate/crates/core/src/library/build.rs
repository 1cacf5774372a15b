use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use super::io::{checksum64, decode_node, encode_node};
use super::{Library, LibraryManifest, LibraryNode, NodeFront};
use crate::error::{Error, Result};
use crate::moo::{stochastic_search, Evaluation, SearchConfig};
use crate::ocp::{evaluate_robust, is_feasible_violation, UncertaintyBox};

const JOURNAL_MAGIC: &[u8; 8] = b"MOMPCJNL";

/// Solves single library nodes for a fixed manifest.
#[derive(Debug, Clone)]
pub struct NodeSolver {
    manifest: LibraryManifest,
    config: SearchConfig,
}

impl NodeSolver {
    pub fn new(manifest: LibraryManifest) -> Result<Self> {
        manifest.spec.validate()?;
        let mut config = SearchConfig::with_budget(manifest.budget, manifest.population_size, 0);
        config.mutation_scale = manifest.mutation_scale;
        config.validate()?;
        Ok(Self { manifest, config })
    }

    pub fn manifest(&self) -> &LibraryManifest {
        &self.manifest
    }

    pub fn solve(&self, index: usize) -> Result<LibraryNode> {
        let m = &self.manifest;
        if index >= m.spec.node_count() {
            return Err(Error::InvalidInput(format!("node index {index} out of range")));
        }
        let state = m.spec.node_state(index);
        let problem = m.problem(state)?;
        let bounds = problem.bounds();
        let seeds = [vec![0.0; bounds.dim()]];
        let config = SearchConfig { seed: m.node_seed(index), ..self.config };

        let front = |unc: &UncertaintyBox| -> Result<NodeFront> {
            let mut best = f64::INFINITY;
            let archive = stochastic_search(&bounds, &config, &seeds, |u| {
                let (realizations, violation) = evaluate_robust(&problem, u, unc)?;
                best = best.min(violation);
                Ok(Evaluation { realizations, feasible: is_feasible_violation(violation) })
            })?;
            Ok(NodeFront::from_archive(&archive, best))
        };
        let robust = front(&m.uncertainty)?;
        let nominal = front(&UncertaintyBox::nominal(m.uncertainty.dim()))?;
        Ok(LibraryNode { index, state, seed: config.seed, budget: config.budget(), robust, nominal })
    }
}

/// Solves one node of `manifest`'s grid.
pub fn solve_node(manifest: &LibraryManifest, index: usize) -> Result<LibraryNode> {
    NodeSolver::new(manifest.clone())?.solve(index)
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Worker threads; zero means one per available core.
    pub workers: usize,
    /// Append-only record of finished nodes, used to resume an interrupted build.
    pub journal: Option<PathBuf>,
    /// Continue from the nodes already in `journal`.
    pub resume: bool,
    /// Stop after this many newly solved nodes and return a partial library.
    pub stop_after: Option<usize>,
}

fn solve_with_retry(solver: &NodeSolver, index: usize) -> LibraryNode {
    let attempt = || match catch_unwind(AssertUnwindSafe(|| solver.solve(index))) {
        Ok(r) => r.map_err(|e| e.to_string()),
        Err(_) => Err("worker panicked".to_string()),
    };
    match attempt().or_else(|first| {
        log::warn!("node {index} failed ({first}); retrying");
        attempt()
    }) {
        Ok(node) => node,
        Err(message) => {
            log::error!("node {index} failed twice: {message}");
            let m = solver.manifest();
            LibraryNode {
                index,
                state: m.spec.node_state(index),
                seed: m.node_seed(index),
                budget: m.budget,
                robust: NodeFront::failed(message.clone()),
                nominal: NodeFront::failed(message),
            }
        }
    }
}

fn read_journal(path: &PathBuf, manifest: &LibraryManifest) -> Result<BTreeMap<usize, LibraryNode>> {
    let (done, valid_len) = scan_journal(path, manifest)?;
    // Drop a torn final record so later appends follow the last good one.
    OpenOptions::new().write(true).open(path)?.set_len(valid_len)?;
    Ok(done)
}

fn scan_journal(path: &PathBuf, manifest: &LibraryManifest) -> Result<(BTreeMap<usize, LibraryNode>, u64)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut done = BTreeMap::new();
    if bytes.len() < 12 || &bytes[..8] != JOURNAL_MAGIC {
        return Err(Error::Format(format!("{} is not a build journal", path.display())));
    }
    let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header = bytes
        .get(12..12 + mlen)
        .ok_or_else(|| Error::Format("truncated journal header".into()))?;
    if header != manifest.to_json().as_bytes() {
        return Err(Error::InvalidInput(format!(
            "journal {} was written for a different manifest",
            path.display()
        )));
    }
    let mut pos = 12 + mlen;
    while let Some(len_bytes) = bytes.get(pos..pos + 4) {
        let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        let Some(record) = bytes.get(pos + 4..pos + 4 + len) else { break };
        let Some(sum) = bytes.get(pos + 4 + len..pos + 12 + len) else { break };
        if checksum64(record) != u64::from_le_bytes(sum.try_into().unwrap()) {
            break;
        }
        let node = decode_node(&mut &record[..])?;
        done.insert(node.index, node);
        pos += 12 + len;
    }
    Ok((done, pos as u64))
}

fn open_journal(path: &PathBuf, manifest: &LibraryManifest, append: bool) -> Result<BufWriter<File>> {
    if append {
        return Ok(BufWriter::new(OpenOptions::new().append(true).open(path)?));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let json = manifest.to_json();
    w.write_all(JOURNAL_MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(json.as_bytes())?;
    w.flush()?;
    Ok(w)
}

/// Solves every grid node with a pool of workers pulling from a shared queue.
///
/// Each node's result depends only on the manifest and the node index, so the
/// library is identical for any worker count and across resumed builds.
pub fn build_library(manifest: &LibraryManifest, options: &BuildOptions) -> Result<Library> {
    let solver = NodeSolver::new(manifest.clone())?;
    let total = manifest.spec.node_count();

    let mut done = match (&options.journal, options.resume) {
        (Some(path), true) if path.exists() => read_journal(path, manifest)?,
        _ => BTreeMap::new(),
    };
    let mut journal = match &options.journal {
        Some(path) => Some(open_journal(path, manifest, options.resume && path.exists())?),
        None => None,
    };
    if !done.is_empty() {
        log::info!("resuming: {} of {total} nodes already solved", done.len());
    }

    let pending: Vec<usize> = (0..total).filter(|i| !done.contains_key(i)).collect();
    let limit = options.stop_after.unwrap_or(usize::MAX).min(pending.len());
    let workers = match options.workers {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        n => n,
    }
    .min(limit.max(1));

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<LibraryNode>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (solver, pending, next, stop) = (&solver, &pending, &next, &stop);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= limit {
                    break;
                }
                if tx.send(solve_with_retry(solver, pending[k])).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut buf = Vec::new();
        for (count, node) in rx.iter().enumerate() {
            if let Some(w) = journal.as_mut() {
                buf.clear();
                encode_node(&node, &mut buf);
                let written = w
                    .write_all(&(buf.len() as u32).to_le_bytes())
                    .and_then(|_| w.write_all(&buf))
                    .and_then(|_| w.write_all(&checksum64(&buf).to_le_bytes()))
                    .and_then(|_| w.flush());
                if let Err(e) = written {
                    stop.store(true, Ordering::Relaxed);
                    return Err(e.into());
                }
            }
            done.insert(node.index, node);
            if (count + 1) % 100 == 0 || count + 1 == limit {
                log::info!("solved {}/{total} nodes", done.len());
            }
        }
        Ok(())
    })?;

    Ok(Library { manifest: manifest.clone(), nodes: done.into_values().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{GridAxis, GridSpec, NodeStatus};

    fn tiny_manifest() -> LibraryManifest {
        let spec = GridSpec {
            d: GridAxis::new(0.0, 10.0, 3).unwrap(),
            xi: GridAxis::point(0.0),
            v_y: GridAxis::point(0.0),
            r: GridAxis::new(-1.0, 1.0, 2).unwrap(),
            kappa: GridAxis::point(0.0),
        };
        let mut m = LibraryManifest::new(spec, 40, 7);
        m.population_size = 20;
        m.uncertainty = UncertaintyBox::symmetric(0.25, 3).unwrap();
        m
    }

    #[test]
    fn node_fronts_are_nondominated_and_seeded() {
        let m = tiny_manifest();
        let node = solve_node(&m, 0).unwrap();
        assert_eq!(node.state, m.spec.node_state(0));
        assert_eq!(node.seed, 7);
        assert_eq!(node.robust.status, NodeStatus::Solved);
        assert!(node.robust.is_mutually_nondominated());
        assert!(node.nominal.is_mutually_nondominated());
        assert!(node.robust.entries.iter().all(|e| e.controls.len() == 11));
    }

    #[test]
    fn boundary_nodes_are_robust_infeasible_only() {
        let m = tiny_manifest();
        // d = 10 sits on the limit: shifting it outward by alpha violates the constraint.
        let node = solve_node(&m, m.spec.index([2, 0, 0, 0, 0])).unwrap();
        match node.robust.status {
            NodeStatus::Infeasible { best_violation } => assert!(best_violation > 0.0),
            ref s => panic!("expected infeasible, got {s:?}"),
        }
        assert!(!node.nominal.entries.is_empty());
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let m = tiny_manifest();
        let one = build_library(&m, &BuildOptions { workers: 1, ..Default::default() }).unwrap();
        let three = build_library(&m, &BuildOptions { workers: 3, ..Default::default() }).unwrap();
        assert!(one.is_complete());
        assert_eq!(one, three);
    }

    #[test]
    fn resume_matches_uninterrupted_build() {
        let m = tiny_manifest();
        let dir = tempfile::tempdir().unwrap();
        let journal = dir.path().join("build.journal");
        let full = build_library(&m, &BuildOptions { workers: 1, ..Default::default() }).unwrap();
        let half = build_library(
            &m,
            &BuildOptions { workers: 2, journal: Some(journal.clone()), stop_after: Some(3), ..Default::default() },
        )
        .unwrap();
        assert_eq!(half.nodes.len(), 3);
        assert!(!half.is_complete());
        let resumed = build_library(
            &m,
            &BuildOptions { workers: 2, journal: Some(journal.clone()), resume: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(resumed, full);

        let mut other = m.clone();
        other.base_seed = 8;
        let err = build_library(&other, &BuildOptions { journal: Some(journal), resume: true, ..Default::default() });
        assert!(err.is_err());
    }
}
