//! Reuse-tree based merging: RTMA (bucket size limit) and TRTMA (bucket count limit).

mod rtma;
mod single;
mod trtma;

pub use rtma::{rtma, rtma_with, RtmaOptions};
pub use single::{
    added_to, cost_without, project, shared_nodes, single_balance, single_balance_traced, single_balance_unpruned,
    Improvement,
};
pub use trtma::{
    fold_merge, fold_target, full_merge, full_merge_frontier, trtma, trtma_with, BalanceStep, BucketLedger,
    SmallSelection, TreeBucket, TrtmaOptions, TrtmaOutcome,
};
