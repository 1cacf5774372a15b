use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dominance::{dominates_slice, sup_vector, worst_case_set, weakly_dominated_slice};
use super::{DecisionPoint, ObjectiveVector, RealizationSet};
use crate::error::{check_dim, Result};

/// A decision together with its realization set and the cached quantities
/// needed for fast dominance tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub decision: DecisionPoint,
    pub realizations: RealizationSet,
    pub worst_case: RealizationSet,
    pub sup_point: ObjectiveVector,
}

impl ArchiveEntry {
    pub fn new(decision: DecisionPoint, realizations: RealizationSet) -> Self {
        let worst_case = worst_case_set(&realizations);
        let sup_point = sup_vector(&realizations);
        Self { decision, realizations, worst_case, sup_point }
    }

    pub fn objective_dim(&self) -> usize {
        self.realizations.dim()
    }

    /// Same relation as `set_dominates(self.realizations, other.realizations)`.
    ///
    /// Only maximal points matter on both sides: a point below a maximal point
    /// of `self` inherits its dominator, and a maximal point of `other` is
    /// above every point of `other` it is comparable with.
    pub fn set_dominates(&self, other: &ArchiveEntry) -> bool {
        if !weakly_dominated_slice(self.sup_point.as_slice(), other.sup_point.as_slice()) {
            return false;
        }
        self.worst_case
            .points()
            .all(|a| other.worst_case.points().any(|b| dominates_slice(a, b)))
    }
}

/// Mutually set-nondominated entries, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    pub entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.entries.iter()
    }

    /// Offers one candidate. Returns whether it was admitted.
    pub fn offer(&mut self, p: ArchiveEntry) -> bool {
        let rejected = self
            .entries
            .iter()
            .any(|a| a.set_dominates(&p) || (a.sup_point == p.sup_point && a.realizations.same_set(&p.realizations)));
        if rejected {
            return false;
        }
        self.entries.retain(|a| !p.set_dominates(a));
        self.entries.push(p);
        true
    }

    /// Checks the pairwise nondominance invariant.
    pub fn is_mutually_nondominated(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.set_dominates(b))
        })
    }

    pub fn decisions(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.decision.values.clone()).collect()
    }
}

/// Streams `population` through the archive: a candidate is admitted when no
/// member set-dominates it, after which every member it set-dominates leaves.
/// A candidate whose realization set equals a member's is not admitted, so the
/// first-seen representative is retained.
pub fn archive_update(population: Vec<ArchiveEntry>, archive: Archive) -> Result<Archive> {
    let mut archive = archive;
    let dim = archive
        .entries
        .first()
        .or(population.first())
        .map(ArchiveEntry::objective_dim);
    if let Some(dim) = dim {
        for e in archive.entries.iter().chain(&population) {
            check_dim(dim, e.objective_dim())?;
        }
    }
    for p in population {
        archive.offer(p);
    }
    Ok(archive)
}

/// Writes one line per entry: decision coordinates, sup point, worst-case
/// points, separated by ` | ` and with worst-case points joined by ` ; `.
pub fn write_archive<W: Write>(archive: &Archive, mut out: W) -> std::io::Result<()> {
    fn join(v: &[f64]) -> String {
        v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ")
    }
    for e in &archive.entries {
        let wc: Vec<String> = e.worst_case.points().map(join).collect();
        writeln!(
            out,
            "{} | {} | {}",
            join(&e.decision.values),
            join(e.sup_point.as_slice()),
            wc.join(" ; ")
        )?;
    }
    Ok(())
}
