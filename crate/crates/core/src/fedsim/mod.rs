//! Federated training simulation: non-i.i.d. shards, Byzantine nodes, an
//! in-process partitioned queue feeding verification workers, and the three
//! aggregation defenses.

pub mod adversary;
pub mod defense;
pub mod partition;
pub mod queue;
pub mod report;
pub mod sim;

use thiserror::Error;

use crate::boosting::{HistogramError, SurrogateError};
use crate::config::ConfigError;
use crate::data::DataError;
use crate::r1cs::R1csError;
use crate::snark::SnarkError;

pub use adversary::{byzantine_perturb, Honesty};
pub use defense::{
    admit, aggregate, defense_median, defense_none, defense_zkp, median, median_influence,
    public_linear_check, DefenseOutcome, NodeUpdate,
};
pub use partition::partition_noniid;
pub use queue::PartitionedQueue;
pub use report::{rounds_csv, RoundReport, Summary, SummaryRecord};
pub use sim::{
    poison_success_metric, run_defense, run_experiment, run_prepared, DefenseRun, ExperimentResult,
    Prepared, ZkSetup,
};

#[derive(Debug, Error)]
pub enum FedError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{rows} rows cannot fill {nodes} shards")]
    DatasetTooSmall { rows: usize, nodes: usize },
    #[error("update shapes differ")]
    ShapeMismatch,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Circuit(#[from] R1csError),
    #[error(transparent)]
    Snark(#[from] SnarkError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
