//! Config-driven experiment runner: TOML schema, built-in presets, metrics
//! and CSV/JSON export.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::control::{FutureMode, GainSequence, HybridConfig, PinSelection, PinningImpulsiveConfig};
use crate::criteria::{self, CriteriaError, CriteriaReport, Theorem1Params, Theorem2Params};
use crate::dde::{DdeError, ImpulseSchedule, IntegratorConfig, Limit};
use crate::linalg;
use crate::network::{
    self, Activation, ActivationSpec, ClusterParams, ClusterPartition, DelayEvaluator, NetworkError, NetworkSpec,
    ValidatedNetwork,
};
use crate::simulation::{self, Controller, InitialCondition, PsiTreatment, SimulationError, SimulationOptions, StateFormulation, Trajectory};

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const PRESETS: [&str; 3] = ["case1", "case2", "case3"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("unknown preset `{0}` (expected case1, case2 or case3)")]
    UnknownPreset(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Engine(#[from] DdeError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ExperimentError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    pub controller: ControllerSection,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "CriteriaSection::is_empty")]
    pub criteria: CriteriaSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// State dimension of every node.
    pub n: usize,
    /// Cluster sizes; clusters are consecutive node ranges.
    pub clusters: Vec<usize>,
    #[serde(rename = "G")]
    pub coupling: Matrix,
    pub activation: ActivationConfig,
    pub delay: DelayConfig,
    #[serde(default)]
    pub strict_block_classes: bool,
    #[serde(rename = "cluster")]
    pub cluster_params: Vec<ClusterConfig>,
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(rename = "C")]
    pub c: Matrix,
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B")]
    pub b: Matrix,
    #[serde(rename = "I")]
    pub input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationConfig {
    /// `arctan`, `tanh` or `linear`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Per-cluster Lipschitz constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayConfig {
    Constant { tau: f64 },
    Logistic { amplitude: f64 },
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// One row per node.
    pub nodes: Matrix,
    /// One row per cluster leader.
    pub leaders: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSection {
    None,
    PinningImpulsive {
        /// Constant gain, or a list whose last entry repeats.
        d_k: GainConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        times: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<Vec<usize>>,
        /// Fixed pinned nodes per cluster (zero-based).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<Vec<Vec<usize>>>,
    },
    Hybrid {
        k: f64,
        k1: f64,
        g1: f64,
        #[serde(default = "default_mu_exp")]
        mu_exp: f64,
        #[serde(default)]
        future_mode: FutureModeConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        passes: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        psi_epsilon: Option<f64>,
        /// Boundary nodes per cluster (zero-based), overriding the ones
        /// derived from `G`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary: Option<Vec<Vec<usize>>>,
    },
}

fn default_mu_exp() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainConfig {
    Constant(f64),
    Sequence(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FutureModeConfig {
    #[default]
    Zero,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationConfig {
    #[default]
    ErrorSystem,
    NodeStates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub formulation: FormulationConfig,
    /// Integration of the `ψ` terms of the hybrid input.
    #[serde(default)]
    pub psi: PsiConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiConfig {
    #[default]
    SplitExact,
    Explicit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponential: Option<ExponentialCriteriaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_time: Option<FiniteTimeCriteriaConfig>,
}

impl CriteriaSection {
    pub fn is_empty(&self) -> bool {
        self.exponential.is_none() && self.finite_time.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialCriteriaConfig {
    #[serde(rename = "Q")]
    pub weight: Matrix,
    #[serde(rename = "E1")]
    pub e1: Matrix,
    #[serde(rename = "E2")]
    pub e2: Matrix,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteTimeCriteriaConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "E1")]
    pub e1: Matrix,
    #[serde(rename = "E2")]
    pub e2: Matrix,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    /// Settling tolerance on `max_i ‖e_i‖`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl OutputSection {
    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOLERANCE)
    }
}

/// Parses and validates a TOML config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExperimentError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ExperimentError::Parse {
        path: String::new(),
        message: e.to_string(),
    })?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let message = e.inner().message().to_string();
        // a missing key is reported against its parent table
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            if path == "." || path.is_empty() {
                path = field.to_string();
            } else {
                path = format!("{path}.{field}");
            }
        }
        ExperimentError::Parse { path, message }
    })?;
    config.build()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ExperimentError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    parse_config(&text)
}

pub fn write_config(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("config serializes to TOML")
}

/// Components assembled from a config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub network: ValidatedNetwork,
    pub controller: Controller,
    pub integrator: IntegratorConfig,
    pub initial: InitialCondition,
    pub options: SimulationOptions,
    pub exponential: Option<Theorem1Params>,
    pub finite_time: Option<Theorem2Params>,
}

fn matrix(rows: &Matrix, name: &str) -> Result<DMatrix<f64>, ExperimentError> {
    linalg::from_rows(rows).ok_or_else(|| ExperimentError::Validation(format!("{name} has ragged or empty rows")))
}

fn square(rows: &Matrix, n: usize, name: &str) -> Result<DMatrix<f64>, ExperimentError> {
    let m = matrix(rows, name)?;
    if m.shape() != (n, n) {
        return Err(ExperimentError::Validation(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn flatten(rows: &Matrix, count: usize, n: usize, name: &str) -> Result<Vec<f64>, ExperimentError> {
    if rows.len() != count || rows.iter().any(|r| r.len() != n) {
        return Err(ExperimentError::Validation(format!("{name} needs {count} rows of length {n}")));
    }
    Ok(rows.concat())
}

impl ExperimentConfig {
    /// Validates the config and assembles the network, controller and
    /// criteria parameters.
    pub fn build(&self) -> Result<Experiment, ExperimentError> {
        let net = &self.network;
        let n = net.n;
        let partition = ClusterPartition::from_sizes(&net.clusters)?;
        if net.cluster_params.len() != partition.num_clusters() {
            return Err(ExperimentError::Validation(format!(
                "{} cluster parameter tables for {} clusters",
                net.cluster_params.len(),
                partition.num_clusters()
            )));
        }
        let clusters = net
            .cluster_params
            .iter()
            .enumerate()
            .map(|(p, c)| {
                if c.input.len() != n {
                    return Err(ExperimentError::Validation(format!("network.cluster[{p}].I needs length {n}")));
                }
                Ok(ClusterParams {
                    c: square(&c.c, n, &format!("network.cluster[{p}].C"))?,
                    a: square(&c.a, n, &format!("network.cluster[{p}].A"))?,
                    b: square(&c.b, n, &format!("network.cluster[{p}].B"))?,
                    input: DVector::from_vec(c.input.clone()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let kind = match (net.activation.kind.as_str(), net.activation.slope) {
            ("arctan", None) => Activation::Arctan,
            ("tanh", None) => Activation::Tanh,
            ("linear", Some(slope)) => Activation::Linear { slope },
            ("linear", None) => return Err(ExperimentError::Validation("linear activation needs a slope".into())),
            (other @ ("arctan" | "tanh"), Some(_)) => {
                return Err(ExperimentError::Validation(format!("activation {other} takes no slope")))
            }
            (other, _) => return Err(ExperimentError::Validation(format!("unknown activation `{other}`"))),
        };
        let delay = match &net.delay {
            DelayConfig::Constant { tau } => DelayEvaluator::constant(*tau)?,
            DelayConfig::Logistic { amplitude } => DelayEvaluator::logistic(*amplitude)?,
            DelayConfig::Tabulated { times, values } => DelayEvaluator::tabulated(times.clone(), values.clone())?,
        };
        let spec = NetworkSpec {
            n,
            coupling: square(&net.coupling, partition.num_nodes(), "network.G")?,
            partition,
            clusters,
            activation: ActivationSpec {
                kind,
                lipschitz: net.activation.lipschitz.clone(),
            },
            delay,
            strict_block_classes: net.strict_block_classes,
        };
        let network = network::validate_network(spec)?;
        let initial = InitialCondition {
            nodes: flatten(&net.initial.nodes, network.num_nodes(), n, "network.initial.nodes")?,
            leaders: flatten(&net.initial.leaders, network.num_clusters(), n, "network.initial.leaders")?,
        };

        let controller = self.controller.build(&network)?;
        let integrator = IntegratorConfig {
            step: self.integrator.h,
            horizon: self.integrator.horizon,
            require_alignment: true,
        };
        integrator.validate()?;
        if let Controller::PinningImpulsive(cfg) = &controller {
            let times = cfg.schedule.times_until(integrator.horizon);
            integrator.impulse_indices(&times)?;
        }
        if let Some(tol) = self.output.tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(ExperimentError::Validation(format!("output.tol = {tol} must be positive")));
            }
        }

        let exponential = match &self.criteria.exponential {
            None => None,
            Some(c) => {
                if !matches!(controller, Controller::PinningImpulsive(_)) {
                    return Err(ExperimentError::Validation(
                        "criteria.exponential needs a pinning_impulsive controller".into(),
                    ));
                }
                Some(Theorem1Params {
                    weight: square(&c.weight, n, "criteria.exponential.Q")?,
                    e1: square(&c.e1, n, "criteria.exponential.E1")?,
                    e2: square(&c.e2, n, "criteria.exponential.E2")?,
                    alpha: c.alpha,
                    beta: c.beta,
                    lambda: c.lambda,
                    gamma: c.gamma,
                    razumikhin_q: c.q,
                    epsilon: c.epsilon,
                    mu: c.mu,
                    upsilon: c.upsilon,
                    sigma_rate: c.sigma_rate,
                    margin: c.margin.unwrap_or(1e-6),
                })
            }
        };
        let finite_time = match &self.criteria.finite_time {
            None => None,
            Some(c) => {
                if !matches!(controller, Controller::Hybrid(_)) {
                    return Err(ExperimentError::Validation(
                        "criteria.finite_time needs a hybrid controller".into(),
                    ));
                }
                Some(Theorem2Params {
                    alpha: c.alpha,
                    beta: c.beta,
                    e1: square(&c.e1, n, "criteria.finite_time.E1")?,
                    e2: square(&c.e2, n, "criteria.finite_time.E2")?,
                })
            }
        };
        let options = SimulationOptions {
            formulation: match self.integrator.formulation {
                FormulationConfig::ErrorSystem => StateFormulation::ErrorSystem,
                FormulationConfig::NodeStates => StateFormulation::NodeStates,
            },
            psi: match self.integrator.psi {
                PsiConfig::SplitExact => PsiTreatment::SplitExact,
                PsiConfig::Explicit => PsiTreatment::Explicit,
            },
            lyapunov_q: exponential.as_ref().map(|p| p.weight.clone()),
        };
        Ok(Experiment {
            network,
            controller,
            integrator,
            initial,
            options,
            exponential,
            finite_time,
        })
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes to JSON");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

impl ControllerSection {
    fn build(&self, net: &ValidatedNetwork) -> Result<Controller, ExperimentError> {
        Ok(match self {
            ControllerSection::None => Controller::None,
            ControllerSection::PinningImpulsive {
                d_k,
                delta,
                times,
                rho,
                nodes,
            } => {
                let gain = match d_k {
                    GainConfig::Constant(d) => GainSequence::Constant(*d),
                    GainConfig::Sequence(ds) => GainSequence::Sequence(ds.clone()),
                };
                let schedule = match (delta, times) {
                    (Some(delta), None) => ImpulseSchedule::arithmetic(*delta)?,
                    (None, Some(times)) => ImpulseSchedule::explicit(times.clone())?,
                    _ => {
                        return Err(ExperimentError::Validation(
                            "controller needs exactly one of `delta` and `times`".into(),
                        ))
                    }
                };
                let selection = match (rho, nodes) {
                    (Some(rho), None) => PinSelection::Counts(rho.clone()),
                    (None, Some(nodes)) => PinSelection::Fixed(nodes.clone()),
                    _ => {
                        return Err(ExperimentError::Validation(
                            "controller needs exactly one of `rho` and `nodes`".into(),
                        ))
                    }
                };
                let cfg = PinningImpulsiveConfig {
                    gain,
                    schedule,
                    selection,
                };
                cfg.validate(net.partition()).map_err(SimulationError::from)?;
                Controller::PinningImpulsive(cfg)
            }
            ControllerSection::Hybrid {
                k,
                k1,
                g1,
                mu_exp,
                future_mode,
                passes,
                psi_epsilon,
                boundary,
            } => {
                let mut cfg = HybridConfig::new(*k, *k1, *g1);
                cfg.mu_exp = *mu_exp;
                if let Some(eps) = psi_epsilon {
                    cfg.psi_epsilon = *eps;
                }
                cfg.future_mode = match (future_mode, passes) {
                    (FutureModeConfig::Zero, None) => FutureMode::ZeroFuture,
                    (FutureModeConfig::Zero, Some(_)) => {
                        return Err(ExperimentError::Validation("`passes` needs future_mode = \"iterative\"".into()))
                    }
                    (FutureModeConfig::Iterative, p) => FutureMode::Iterative { passes: p.unwrap_or(3) },
                };
                cfg.boundary = boundary.clone();
                cfg.validate(net.partition()).map_err(SimulationError::from)?;
                Controller::Hybrid(cfg)
            }
        })
    }
}

fn identity_rows(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn example_network() -> NetworkSection {
    let a1 = vec![vec![1.95, -0.1], vec![-5.0, 3.0]];
    let a2 = vec![vec![2.0, -0.11], vec![-5.1, 3.0]];
    let b1 = vec![vec![-1.5, -0.1], vec![-0.3, -2.41]];
    let b2 = vec![vec![-1.5, -0.1], vec![-0.2, -2.45]];
    NetworkSection {
        n: 2,
        clusters: vec![2, 3],
        coupling: vec![
            vec![-4.0, 2.0, 2.0, 0.5, -0.5],
            vec![2.0, -3.0, 1.0, 0.2, -0.2],
            vec![1.0, 1.0, -2.0, 0.3, -0.3],
            vec![0.5, 0.5, -1.0, -1.0, 1.0],
            vec![0.4, -0.4, 0.0, 1.0, -1.0],
        ],
        activation: ActivationConfig {
            kind: "arctan".into(),
            slope: None,
            lipschitz: None,
        },
        delay: DelayConfig::Logistic { amplitude: 1.7 },
        strict_block_classes: false,
        cluster_params: vec![
            ClusterConfig {
                c: identity_rows(2),
                a: a1,
                b: b1,
                input: vec![0.0, 0.0],
            },
            ClusterConfig {
                c: identity_rows(2),
                a: a2,
                b: b2,
                input: vec![0.0, 0.0],
            },
        ],
        initial: InitialConfig {
            nodes: vec![
                vec![10.0, -5.0],
                vec![10.0, -5.0],
                vec![8.0, -6.0],
                vec![8.0, -6.0],
                vec![8.0, -6.0],
            ],
            leaders: vec![vec![0.4, 0.6], vec![0.4, 0.6]],
        },
    }
}

/// Built-in configs of the two-neuron, five-node example: no control
/// (`case1`), pinning impulsive control (`case2`) and hybrid finite-time
/// control (`case3`).
pub fn preset(name: &str) -> Result<ExperimentConfig, ExperimentError> {
    let integrator = IntegratorSection {
        h: 1e-3,
        horizon: 5.0,
        formulation: FormulationConfig::ErrorSystem,
        psi: PsiConfig::SplitExact,
    };
    let (controller, criteria) = match name {
        "case1" => (ControllerSection::None, CriteriaSection::default()),
        "case2" => (
            ControllerSection::PinningImpulsive {
                d_k: GainConfig::Constant(-0.8),
                delta: Some(0.03),
                times: None,
                rho: Some(vec![1, 3]),
                nodes: None,
            },
            CriteriaSection {
                exponential: Some(ExponentialCriteriaConfig {
                    weight: identity_rows(2),
                    e1: identity_rows(2),
                    e2: identity_rows(2),
                    alpha: 0.16,
                    beta: 0.575,
                    lambda: 0.2,
                    gamma: None,
                    q: None,
                    epsilon: None,
                    mu: None,
                    upsilon: None,
                    sigma_rate: None,
                    margin: None,
                }),
                finite_time: None,
            },
        ),
        "case3" => (
            ControllerSection::Hybrid {
                k: 2.0,
                k1: 1.4,
                g1: 41.4,
                mu_exp: 0.5,
                future_mode: FutureModeConfig::Zero,
                passes: None,
                psi_epsilon: None,
                boundary: None,
            },
            CriteriaSection {
                exponential: None,
                finite_time: Some(FiniteTimeCriteriaConfig {
                    alpha: 0.2,
                    beta: 2.0,
                    e1: identity_rows(2),
                    e2: identity_rows(2),
                }),
            },
        ),
        other => return Err(ExperimentError::UnknownPreset(other.to_string())),
    };
    Ok(ExperimentConfig {
        network: example_network(),
        controller,
        integrator,
        criteria,
        output: OutputSection::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: f64,
    pub step: f64,
    pub tolerance: f64,
    pub final_max_error_norm: f64,
    /// Largest final error norm within each cluster.
    pub final_cluster_error_norms: Vec<f64>,
    /// First grid time after which `max_i ‖e_i‖ < tolerance` for the rest of
    /// the horizon.
    pub settling_time: Option<f64>,
    /// Finite-time estimate from the initial value of the hybrid functional.
    pub settling_estimate: Option<f64>,
    pub impulses: usize,
    pub min_leader_distance: Option<f64>,
    pub final_leader_distance: Option<f64>,
    pub block_class_findings: Vec<String>,
    pub criteria: Vec<CriteriaReport>,
    pub wall_clock_seconds: f64,
    pub config_digest: String,
}

/// Criteria reports for the parameters present in the config.
pub fn check_criteria(config: &ExperimentConfig) -> Result<Vec<CriteriaReport>, ExperimentError> {
    let exp = config.build()?;
    criteria_reports(&exp)
}

fn criteria_reports(exp: &Experiment) -> Result<Vec<CriteriaReport>, ExperimentError> {
    let mut reports = Vec::new();
    if let (Some(params), Controller::PinningImpulsive(cfg)) = (&exp.exponential, &exp.controller) {
        reports.push(criteria::check_theorem1(&exp.network, params, cfg, exp.integrator.horizon)?);
    }
    if let (Some(params), Controller::Hybrid(cfg)) = (&exp.finite_time, &exp.controller) {
        reports.push(criteria::check_theorem2(&exp.network, params, cfg.k1, cfg.g1)?);
    }
    Ok(reports)
}

/// Validates, simulates and summarizes one experiment.
pub fn run_case(config: &ExperimentConfig) -> Result<(Trajectory, RunSummary), ExperimentError> {
    let started = Instant::now();
    let exp = config.build()?;
    let traj = simulation::simulate(&exp.network, &exp.controller, &exp.integrator, &exp.initial, &exp.options)?;
    let reports = criteria_reports(&exp)?;
    let tolerance = config.output.tolerance();
    let last = traj.len() - 1;
    let partition = exp.network.partition();
    let final_cluster_error_norms = (0..partition.num_clusters())
        .map(|p| partition.nodes(p).map(|i| traj.norms(last)[i]).fold(0.0, f64::max))
        .collect();
    let settling_estimate = match &exp.controller {
        Controller::Hybrid(cfg) => Some(criteria::settling_time(traj.lyapunov[0], cfg.k, cfg.mu_exp)),
        _ => None,
    };
    let summary = RunSummary {
        horizon: exp.integrator.horizon,
        step: exp.integrator.step,
        tolerance,
        final_max_error_norm: traj.max_norm(last),
        final_cluster_error_norms,
        settling_time: detect_settling(&traj, tolerance),
        settling_estimate,
        impulses: traj.impulses.len(),
        min_leader_distance: leader_distances(&traj).map(|d| d.iter().copied().fold(f64::INFINITY, f64::min)),
        final_leader_distance: leader_distances(&traj).and_then(|d| d.last().copied()),
        block_class_findings: exp.network.block_violations().iter().map(|v| v.to_string()).collect(),
        criteria: reports,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config_digest: config.digest(),
    };
    Ok((traj, summary))
}

/// Smallest record time `t*` with `max_i ‖e_i(t)‖ < tol` at every record
/// `t ≥ t*`. When the first record below `tol` is the post-jump row of an
/// impulse whose pre-jump row is not, `t*` is the next record time.
pub fn detect_settling(traj: &Trajectory, tol: f64) -> Option<f64> {
    let mut first = None;
    for r in (0..traj.len()).rev() {
        if traj.max_norm(r) < tol {
            first = Some(r);
        } else {
            break;
        }
    }
    let mut r = first?;
    if r > 0 && traj.times[r - 1] == traj.times[r] {
        r += 1;
    }
    traj.times.get(r).copied()
}

/// Smallest pairwise distance between cluster leaders at every record;
/// `None` with fewer than two clusters.
pub fn leader_distances(traj: &Trajectory) -> Option<Vec<f64>> {
    if traj.num_clusters < 2 {
        return None;
    }
    let n = traj.n;
    Some(
        (0..traj.len())
            .map(|r| {
                let s = traj.leader(r);
                let mut best = f64::INFINITY;
                for p in 0..traj.num_clusters {
                    for q in p + 1..traj.num_clusters {
                        let d: f64 = (0..n).map(|c| (s[p * n + c] - s[q * n + c]).powi(2)).sum();
                        best = best.min(d.sqrt());
                    }
                }
                best
            })
            .collect(),
    )
}

/// Writes `t,e_norm_1..e_norm_N,V,limit`; `limit` is `+` on the
/// post-impulse row of a jump and `-` otherwise.
pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let mut header = String::from("t");
    for i in 1..=traj.num_nodes {
        header.push_str(&format!(",e_norm_{i}"));
    }
    header.push_str(",V,limit\n");
    out.write_all(header.as_bytes())?;
    let mut line = String::new();
    for r in 0..traj.len() {
        line.clear();
        line.push_str(&format!("{:.15e}", traj.times[r]));
        for v in traj.norms(r) {
            line.push_str(&format!(",{v:.15e}"));
        }
        let flag = match traj.limits[r] {
            Limit::Left => '-',
            Limit::Right => '+',
        };
        line.push_str(&format!(",{:.15e},{flag}\n", traj.lyapunov[r]));
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn export_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    write_csv(traj, io::BufWriter::new(file)).map_err(|e| ExperimentError::io(path, e))
}

pub fn write_summary(summary: &RunSummary, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(summary).expect("summary serializes to JSON");
    fs::write(path, json + "\n").map_err(|e| ExperimentError::io(path, e))
}
