//! Generation, solving and time-to-solution benchmarking of higher-order
//! (up to three-local) Ising optimization problems.

pub mod error;
pub mod harness;
pub mod instance_gen;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod solvers;

pub use error::{HuboError, Result};
pub use model::{
    evaluate_energy, validate_instance, HuboInstance, InstanceDraft, InstanceMetadata, SpinConfig, Term,
    ValidationReport, VariableIndexTable, Violation,
};
