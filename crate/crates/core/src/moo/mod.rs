//! Set-based minmax robust dominance, archiving, stochastic search and set distances.
//!
//! Everything here is independent of any dynamics: a decision is a point in a
//! box, and its quality is a [`RealizationSet`], the finite collection of
//! objective vectors it attains over the sampled uncertainty scenarios.

mod archive;
mod dominance;
mod metrics;
mod search;

pub use archive::{archive_update, write_archive, Archive, ArchiveEntry};
pub use dominance::{
    pareto_dominates, set_dominates, sup_vector, worst_case_set, ObjectiveVector, RealizationSet,
};
pub use metrics::{d_inf, delta_p, delta_p_with, hausdorff, hausdorff_with, Norm};
pub use search::{stochastic_search, Bounds, DecisionPoint, Evaluation, SearchConfig};


