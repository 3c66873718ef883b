//! Cluster synchronization of coupled delayed neural networks under pinning
//! impulsive and hybrid finite-time control.

pub mod control;
pub mod criteria;
pub mod dde;
pub mod experiment;
pub mod linalg;
pub mod network;
pub mod simulation;

pub use control::{
    FutureMode, GainSequence, HybridConfig, PinSelection, PinnedSet, PinningImpulsiveConfig,
};
pub use criteria::{CriteriaReport, Theorem1Params, Theorem2Params};
pub use dde::{ImpulseSchedule, IntegratorConfig};
pub use network::{
    Activation, ActivationSpec, ClusterParams, ClusterPartition, DelayEvaluator, NetworkSpec,
    ValidatedNetwork,
};
pub use simulation::{Controller, InitialCondition, SimulationOptions, StateFormulation, Trajectory};
pub use experiment::{
    detect_settling, export_csv, load_config, parse_config, preset, run_case, ExperimentConfig,
    ExperimentError, RunSummary,
};
