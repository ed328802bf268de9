//! Sequential tasks, exact oracles and dataset ingestion.

mod datasets;
mod gridworld;
mod idx;
mod oracle;
mod sequence;

pub use datasets::{class_incremental_split, synthetic_clusters, LabeledDataset};
pub use gridworld::{Action, GridConfig, GridWorld, Permutation, Step};
pub use idx::{
    encode_idx_images, encode_idx_labels, load_idx, parse_idx_images, parse_idx_labels, write_idx_file, IdxImages,
    IMAGE_MAGIC, LABEL_MAGIC,
};
pub use oracle::{greedy_return, value_iteration, QTable};
pub use sequence::{TaskSequence, TaskSpec};
