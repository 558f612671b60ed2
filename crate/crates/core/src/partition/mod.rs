//! Size- and count-constrained partitioning of a stage level into buckets: naive, Smart Cut,
//! and exhaustive oracles.

mod mincut;
mod oracle;
mod sca;

pub use mincut::{min_cut_2, min_cut_value_exhaustive, Cut};
pub use oracle::{oracle_min_makespan, oracle_min_total_cost, path_union_cost, ORACLE_LIMIT};
pub use sca::{naive_buckets, reuse_graph, sca_buckets};
pub(crate) use sca::check_size;
