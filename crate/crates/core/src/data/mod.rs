//! Datasets, loaders, client partitioners and per-client batch schedules.

mod dataset;
pub mod idx;
mod partition;
mod schedule;
mod synthetic;
mod tabular;

pub use dataset::{ClientDataset, Dataset};
pub use idx::load_idx;
pub use partition::{
    partition_iid, partition_manual, partition_noniid_l, PartitionKind, PartitionPlan,
};
pub use schedule::{batch_window, make_schedule, BatchSchedule, Window};
pub use synthetic::{synthetic, synthetic_with, SyntheticParams};
pub use tabular::load_csv;
