//! Pinning impulsive controller and finite-time hybrid controller.

use thiserror::Error;

use crate::dde::{apply_impulse_event, CumulativeIntegral, DdeError, ImpulseSchedule};
use crate::network::ClusterPartition;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("cluster {cluster} has {size} nodes but {rho} are to be pinned")]
    RhoTooLarge { cluster: usize, rho: usize, size: usize },
    #[error("pin counts given for {given} clusters, network has {expected}")]
    RhoLength { given: usize, expected: usize },
    #[error("node {node} is not in cluster {cluster}")]
    NodeOutsideCluster { node: usize, cluster: usize },
    #[error("no previous pass to estimate the forward integral from")]
    NoPreviousPass,
    #[error("bad controller configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Engine(#[from] DdeError),
}

/// Impulse gains `d_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum GainSequence {
    Constant(f64),
    /// `d_1, d_2, …`; the last entry repeats once the list is exhausted.
    Sequence(Vec<f64>),
}

impl GainSequence {
    /// Gain of the impulse with zero-based ordinal `k`.
    pub fn gain(&self, k: usize) -> f64 {
        match self {
            GainSequence::Constant(d) => *d,
            GainSequence::Sequence(ds) => ds[k.min(ds.len() - 1)],
        }
    }
}

/// How pinned nodes are chosen at each impulse.
#[derive(Debug, Clone, PartialEq)]
pub enum PinSelection {
    /// `ρ_p` nodes per cluster, ranked by error norm at the impulse.
    Counts(Vec<usize>),
    /// The same listed nodes every time.
    Fixed(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinningImpulsiveConfig {
    pub gain: GainSequence,
    pub schedule: ImpulseSchedule,
    pub selection: PinSelection,
}

impl PinningImpulsiveConfig {
    pub fn validate(&self, partition: &ClusterPartition) -> Result<(), ControlError> {
        if let GainSequence::Sequence(ds) = &self.gain {
            if ds.is_empty() {
                return Err(ControlError::BadConfig("empty gain sequence".into()));
            }
        }
        match &self.selection {
            PinSelection::Counts(rho) => check_rho(partition, rho),
            PinSelection::Fixed(sets) => {
                if sets.len() != partition.num_clusters() {
                    return Err(ControlError::RhoLength {
                        given: sets.len(),
                        expected: partition.num_clusters(),
                    });
                }
                for (p, set) in sets.iter().enumerate() {
                    if let Some(&node) = set.iter().find(|i| !partition.nodes(p).contains(i)) {
                        return Err(ControlError::NodeOutsideCluster { node, cluster: p });
                    }
                }
                Ok(())
            }
        }
    }

    /// Pin counts per cluster, whichever selection is configured.
    pub fn rho(&self) -> Vec<usize> {
        match &self.selection {
            PinSelection::Counts(rho) => rho.clone(),
            PinSelection::Fixed(sets) => sets.iter().map(Vec::len).collect(),
        }
    }
}

fn check_rho(partition: &ClusterPartition, rho: &[usize]) -> Result<(), ControlError> {
    if rho.len() != partition.num_clusters() {
        return Err(ControlError::RhoLength {
            given: rho.len(),
            expected: partition.num_clusters(),
        });
    }
    for (p, &r) in rho.iter().enumerate() {
        let size = partition.cluster_size(p);
        if r > size {
            return Err(ControlError::RhoTooLarge {
                cluster: p,
                rho: r,
                size,
            });
        }
    }
    Ok(())
}

/// Nodes pinned at one impulse, per cluster in selection order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinnedSet {
    pub per_cluster: Vec<Vec<usize>>,
}

impl PinnedSet {
    pub fn nodes(&self) -> Vec<usize> {
        self.per_cluster.iter().flatten().copied().collect()
    }
}

/// Gains in `(−2, 0)` contract the pinned errors, so the largest errors are
/// pinned; any other gain pins the smallest. Ties go to the smaller index.
pub fn pins_largest(d_k: f64) -> bool {
    -2.0 < d_k && d_k < 0.0
}

/// Picks `rho[p]` nodes of cluster `p` ranked by `error_norms`, listed in
/// ascending index order.
pub fn select_pinned_nodes(
    error_norms: &[f64],
    partition: &ClusterPartition,
    d_k: f64,
    rho: &[usize],
) -> Result<PinnedSet, ControlError> {
    check_rho(partition, rho)?;
    let largest = pins_largest(d_k);
    let per_cluster = (0..partition.num_clusters())
        .map(|p| {
            let mut nodes: Vec<usize> = partition.nodes(p).collect();
            nodes.sort_by(|&a, &b| {
                let by_norm = if largest {
                    error_norms[b].total_cmp(&error_norms[a])
                } else {
                    error_norms[a].total_cmp(&error_norms[b])
                };
                by_norm.then(a.cmp(&b))
            });
            nodes.truncate(rho[p]);
            nodes.sort_unstable();
            nodes
        })
        .collect();
    Ok(PinnedSet { per_cluster })
}

/// Applies impulse number `k` (zero-based) to the row-major error state `e`:
/// selects the pinned nodes on the current error norms and scales their
/// rows by `1 + d_k`.
pub fn impulsive_control_jump(
    e: &mut [f64],
    n: usize,
    partition: &ClusterPartition,
    config: &PinningImpulsiveConfig,
    k: usize,
) -> Result<(PinnedSet, f64), ControlError> {
    let d_k = config.gain.gain(k);
    let pinned = match &config.selection {
        PinSelection::Counts(rho) => {
            let norms: Vec<f64> = e.chunks(n).map(crate::linalg::norm).collect();
            select_pinned_nodes(&norms, partition, d_k, rho)?
        }
        PinSelection::Fixed(sets) => PinnedSet {
            per_cluster: sets.clone(),
        },
    };
    apply_impulse_event(e, n, &pinned.nodes(), d_k);
    Ok((pinned, d_k))
}

/// Treatment of the forward-looking integral `∫_t^{t₁} e_iᵀe_i ds` of the
/// hybrid controller, which depends on the future of the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FutureMode {
    /// Drop the term.
    ZeroFuture,
    /// Re-simulate `passes` times, estimating the term from the previous
    /// pass (the first pass runs as zero-future).
    Iterative { passes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub k: f64,
    pub k1: f64,
    pub g1: f64,
    /// Power exponent in (0, 1).
    pub mu_exp: f64,
    /// `ψ` vanishes when the stacked error norm is at or below this.
    pub psi_epsilon: f64,
    pub future_mode: FutureMode,
    /// Explicit boundary node sets per cluster. Derived from the coupling
    /// matrix when absent.
    pub boundary: Option<Vec<Vec<usize>>>,
}

impl HybridConfig {
    pub fn new(k: f64, k1: f64, g1: f64) -> Self {
        Self {
            k,
            k1,
            g1,
            mu_exp: 0.5,
            psi_epsilon: 1e-10,
            future_mode: FutureMode::ZeroFuture,
            boundary: None,
        }
    }

    pub fn validate(&self, partition: &ClusterPartition) -> Result<(), ControlError> {
        if !(self.mu_exp > 0.0 && self.mu_exp < 1.0) {
            return Err(ControlError::BadConfig(format!(
                "exponent {} must lie in (0, 1)",
                self.mu_exp
            )));
        }
        for (name, v) in [("k", self.k), ("k1", self.k1), ("g1", self.g1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::BadConfig(format!("{name} = {v} must be positive")));
            }
        }
        if self.psi_epsilon.is_nan() || self.psi_epsilon < 0.0 {
            return Err(ControlError::BadConfig("psi guard must be non-negative".into()));
        }
        if let FutureMode::Iterative { passes: 0 } = self.future_mode {
            return Err(ControlError::BadConfig("iterative mode needs at least one pass".into()));
        }
        if let Some(sets) = &self.boundary {
            if sets.len() != partition.num_clusters() {
                return Err(ControlError::RhoLength {
                    given: sets.len(),
                    expected: partition.num_clusters(),
                });
            }
            for (p, set) in sets.iter().enumerate() {
                if let Some(&node) = set.iter().find(|i| !partition.nodes(p).contains(i)) {
                    return Err(ControlError::NodeOutsideCluster { node, cluster: p });
                }
            }
        }
        Ok(())
    }
}

/// `e_i / ‖e‖²` when `‖e‖ > epsilon`, zero otherwise.
pub fn psi(e_i: &[f64], norm_e: f64, epsilon: f64) -> Vec<f64> {
    if norm_e > epsilon {
        let s = 1.0 / (norm_e * norm_e);
        e_i.iter().map(|v| v * s).collect()
    } else {
        vec![0.0; e_i.len()]
    }
}

/// `sign(v)·|v|^μ`, with `sign(0) = 0`.
#[inline]
pub fn signed_power(v: f64, mu: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(mu)
    }
}

/// Hybrid control input of one node.
///
/// Boundary nodes get `−g₁e_i − φ_i`, interior nodes get
/// `−φ_i − 2k(g₁ I_fut)^{(1+μ)/2} ψ_i`, where
/// `φ_i = k·sign(e_i)|e_i|^μ + k(k₁ I_tau)^{(1+μ)/2} ψ_i`.
pub fn hybrid_control_input(
    e_i: &[f64],
    boundary: bool,
    norm_e: f64,
    i_tau: f64,
    i_fut: f64,
    config: &HybridConfig,
) -> Vec<f64> {
    let mut u = vec![0.0; e_i.len()];
    hybrid_control_into(e_i, boundary, norm_e, i_tau, i_fut, config, &mut u);
    u
}

/// Coefficient `c_i` of `ψ_i` in the hybrid input: `k(k₁ I_tau)^{(1+μ)/2}`,
/// plus `2k(g₁ I_fut)^{(1+μ)/2}` on interior nodes.
#[inline]
pub fn psi_gain(boundary: bool, i_tau: f64, i_fut: f64, config: &HybridConfig) -> f64 {
    let expo = 0.5 * (1.0 + config.mu_exp);
    let mut gain = config.k * (config.k1 * i_tau.max(0.0)).powf(expo);
    if !boundary {
        gain += 2.0 * config.k * (config.g1 * i_fut.max(0.0)).powf(expo);
    }
    gain
}

/// The hybrid input without its `ψ` terms, `−g₁e_i·[boundary] −
/// k·sign(e_i)|e_i|^μ`, added into `out`.
#[inline]
pub fn hybrid_regular_into(e_i: &[f64], boundary: bool, config: &HybridConfig, out: &mut [f64]) {
    let linear = if boundary { config.g1 } else { 0.0 };
    for (o, &v) in out.iter_mut().zip(e_i) {
        *o -= linear * v + config.k * signed_power(v, config.mu_exp);
    }
}

/// As [`hybrid_control_input`], adding the input into `out`.
#[inline]
pub fn hybrid_control_into(
    e_i: &[f64],
    boundary: bool,
    norm_e: f64,
    i_tau: f64,
    i_fut: f64,
    config: &HybridConfig,
    out: &mut [f64],
) {
    hybrid_regular_into(e_i, boundary, config, out);
    if norm_e > config.psi_epsilon {
        let scale = psi_gain(boundary, i_tau, i_fut, config) / (norm_e * norm_e);
        for (o, &v) in out.iter_mut().zip(e_i) {
            *o -= scale * v;
        }
    }
}

/// Advances `ė_i = −c_i e_i / ‖e‖²` exactly over `h` with the gains held
/// fixed, for a row-major error state with rows of length `n`.
///
/// In the rescaled time `ds = dt / ‖e‖²` each row decays as `e^{−c_i s}`;
/// `t(s) = Σ_i ‖e_i(0)‖² (1 − e^{−2c_i s}) / (2c_i)` is inverted by Newton's
/// method. Rows with `c_i > 0` reach zero once `h ≥ Σ_i ‖e_i‖²/(2c_i)`.
/// Nothing moves when `‖e‖ ≤ epsilon`.
pub fn psi_flow(e: &mut [f64], n: usize, gains: &[f64], h: f64, epsilon: f64) {
    let w: Vec<f64> = e.chunks(n).map(|r| r.iter().map(|v| v * v).sum()).collect();
    let total: f64 = w.iter().sum();
    if total.sqrt() <= epsilon || h <= 0.0 {
        return;
    }
    let extinction: f64 = w
        .iter()
        .zip(gains)
        .map(|(&wi, &c)| if c > 0.0 { wi / (2.0 * c) } else if wi > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    if extinction <= h {
        for (row, &c) in e.chunks_mut(n).zip(gains) {
            if c > 0.0 {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        return;
    }
    let elapsed = |s: f64| -> (f64, f64) {
        let mut t = 0.0;
        let mut rate = 0.0;
        for (&wi, &c) in w.iter().zip(gains) {
            if c > 0.0 {
                let decay = (-2.0 * c * s).exp();
                t -= wi * (-2.0 * c * s).exp_m1() / (2.0 * c);
                rate += wi * decay;
            } else {
                t += wi * s;
                rate += wi;
            }
        }
        (t, rate)
    };
    // t(s) is increasing and concave, so Newton from below stays below
    let mut s = h / total;
    for _ in 0..100 {
        let (t, rate) = elapsed(s);
        if rate <= 0.0 {
            break;
        }
        let step = (h - t) / rate;
        s += step;
        if step.abs() <= 1e-15 * s {
            break;
        }
    }
    for (row, &c) in e.chunks_mut(n).zip(gains) {
        let factor = (-c * s).exp();
        row.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Forward integral `∫_t^{t₁} e_iᵀe_i ds` for one node.
///
/// Zero-future mode returns 0. Iterative mode integrates the previous
/// pass's channel over `[t, min(t₁, end)]` and returns 0 once `t ≥ t₁`.
pub fn forward_integral_estimate(
    previous: Option<&CumulativeIntegral>,
    t: f64,
    t1_est: f64,
    mode: FutureMode,
) -> Result<f64, ControlError> {
    match mode {
        FutureMode::ZeroFuture => Ok(0.0),
        FutureMode::Iterative { .. } => {
            let channel = previous.ok_or(ControlError::NoPreviousPass)?;
            if t >= t1_est {
                return Ok(0.0);
            }
            let end = channel.end().unwrap_or(t).min(t1_est);
            if t >= end {
                return Ok(0.0);
            }
            Ok(channel.integral(t, end)?.max(0.0))
        }
    }
}
