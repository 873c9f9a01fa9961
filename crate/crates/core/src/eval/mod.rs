//! Metrics and the leave-one-out protocol.

mod loo;
mod metrics;

pub use loo::{loo_run, loo_run_on, LooRecord, LooReport, SkippedFold};
pub use metrics::{
    f1, f1_soft, macro_f1, soft_f1, vanilla_accuracy, ContingencyTable, SoftContingencyTable,
};
