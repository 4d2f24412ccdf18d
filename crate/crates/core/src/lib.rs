//! Federated gradient boosting where edge nodes prove, with a pairing-based
//! argument over an R1CS circuit, that their gradient statistics come from
//! the agreed loss.

pub mod bilinear;
pub mod boosting;
pub mod config;
pub mod data;
pub mod fedsim;
pub mod field;
pub mod poly;
pub mod r1cs;
pub mod snark;

pub use bilinear::{pairing, GroupElement, Side};
pub use boosting::{Ensemble, FeatureHistogram, GradientPair, Label, LossSpec};
pub use config::{Defense, DefenseChoice, ExperimentConfig};
pub use data::Dataset;
pub use fedsim::{run_experiment, FedError, Summary};
pub use field::FieldElement;
pub use r1cs::{ConstraintSystem, PublicInputs, Witness};
pub use snark::{prove, setup, verify, Crs, Proof, ProveMode};
