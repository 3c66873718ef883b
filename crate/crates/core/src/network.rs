//! Coupled delayed neural network with a fixed cluster structure.
//!
//! Node and cluster indices are zero-based throughout the crate. States of
//! all nodes are stored flat, row-major: node `i` occupies
//! `state[i * n..(i + 1) * n]`.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

/// Relative tolerance for zero row sums and class membership of the coupling
/// matrix blocks.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("self-inhibition matrix C of cluster {cluster} is not symmetric positive definite")]
    NonPositiveDefiniteC { cluster: usize },
    #[error("coupling row {row} sums to {sum}, expected 0")]
    NonZeroRowSum { row: usize, sum: f64 },
    #[error("diagonal coupling block {block} is not in class A1 at row {row}, column {col}: {reason}")]
    ClassA1Violation {
        block: usize,
        row: usize,
        col: usize,
        reason: String,
    },
    #[error("off-diagonal coupling block ({from}, {to}) is not in class A2: row {row} sums to {sum}")]
    ClassA2Violation {
        from: usize,
        to: usize,
        row: usize,
        sum: f64,
    },
    #[error("node {node} out of range (network has {num_nodes} nodes)")]
    OutOfRange { node: usize, num_nodes: usize },
    #[error("activation has no known Lipschitz constant; declare one explicitly")]
    UnknownActivation,
    #[error("bad delay: {0}")]
    BadDelay(String),
}

/// Contiguous clusters `{v_{p-1}, …, v_p - 1}` given by boundaries
/// `0 = v_0 < v_1 < … < v_M = N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    boundaries: Vec<usize>,
}

impl ClusterPartition {
    /// `boundaries` must start at 0 and be strictly increasing.
    pub fn new(boundaries: Vec<usize>) -> Result<Self, NetworkError> {
        if boundaries.len() < 2 {
            return Err(NetworkError::BadPartition(
                "need at least one cluster".into(),
            ));
        }
        if boundaries[0] != 0 {
            return Err(NetworkError::BadPartition(format!(
                "first boundary must be 0, got {}",
                boundaries[0]
            )));
        }
        if let Some(w) = boundaries.windows(2).find(|w| w[0] >= w[1]) {
            return Err(NetworkError::BadPartition(format!(
                "boundaries must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { boundaries })
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self, NetworkError> {
        let mut boundaries = Vec::with_capacity(sizes.len() + 1);
        boundaries.push(0);
        let mut acc = 0;
        for &s in sizes {
            acc += s;
            boundaries.push(acc);
        }
        Self::new(boundaries)
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn num_nodes(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn num_clusters(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn nodes(&self, cluster: usize) -> Range<usize> {
        self.boundaries[cluster]..self.boundaries[cluster + 1]
    }

    pub fn cluster_size(&self, cluster: usize) -> usize {
        self.boundaries[cluster + 1] - self.boundaries[cluster]
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.num_clusters()).map(|p| self.cluster_size(p)).collect()
    }

    /// Cluster containing `node`.
    pub fn cluster_of(&self, node: usize) -> Result<usize, NetworkError> {
        if node >= self.num_nodes() {
            return Err(NetworkError::OutOfRange {
                node,
                num_nodes: self.num_nodes(),
            });
        }
        // first boundary strictly greater than node, minus one
        Ok(self.boundaries.partition_point(|&v| v <= node) - 1)
    }
}

/// Per-cluster matrices of the node dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    /// Self-inhibition, symmetric positive definite.
    pub c: DMatrix<f64>,
    pub a: DMatrix<f64>,
    /// Delayed connection weights.
    pub b: DMatrix<f64>,
    pub input: DVector<f64>,
}

/// Scalar activation applied componentwise.
#[derive(Clone)]
pub enum Activation {
    Arctan,
    Tanh,
    Linear { slope: f64 },
    Custom {
        map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lipschitz: Option<f64>,
    },
}

impl Activation {
    #[inline]
    pub fn apply(&self, r: f64) -> f64 {
        match self {
            Activation::Arctan => r.atan(),
            Activation::Tanh => r.tanh(),
            Activation::Linear { slope } => slope * r,
            Activation::Custom { map, .. } => map(r),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Arctan => "arctan",
            Activation::Tanh => "tanh",
            Activation::Linear { .. } => "linear",
            Activation::Custom { .. } => "custom",
        }
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Linear { slope } => write!(f, "Linear {{ slope: {slope} }}"),
            Activation::Custom { lipschitz, .. } => {
                write!(f, "Custom {{ lipschitz: {lipschitz:?} }}")
            }
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActivationSpec {
    pub kind: Activation,
    /// Per-cluster Lipschitz constants overriding the derived one.
    pub lipschitz: Option<Vec<f64>>,
}

impl ActivationSpec {
    pub fn new(kind: Activation) -> Self {
        Self {
            kind,
            lipschitz: None,
        }
    }
}

/// Lipschitz constant ξ_p of the activation for each of `num_clusters`
/// clusters.
pub fn lipschitz_bound(
    activation: &ActivationSpec,
    num_clusters: usize,
) -> Result<Vec<f64>, NetworkError> {
    if let Some(xi) = &activation.lipschitz {
        if xi.len() != num_clusters {
            return Err(NetworkError::DimensionMismatch(format!(
                "{} Lipschitz constants for {} clusters",
                xi.len(),
                num_clusters
            )));
        }
        return Ok(xi.clone());
    }
    let xi = match &activation.kind {
        Activation::Arctan | Activation::Tanh => 1.0,
        Activation::Linear { slope } => slope.abs(),
        Activation::Custom { lipschitz, .. } => lipschitz.ok_or(NetworkError::UnknownActivation)?,
    };
    Ok(vec![xi; num_clusters])
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelayForm {
    Constant(f64),
    /// `τ(t) = amplitude · eᵗ / (1 + eᵗ)`.
    Logistic { amplitude: f64 },
    /// Piecewise linear through `(times[j], values[j])`, held constant
    /// outside the table.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// Time-varying delay with its recorded bounds `τ(t) ≤ tau_bar` and
/// `τ̇(t) ≤ sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEvaluator {
    form: DelayForm,
    tau_bar: f64,
    sigma: f64,
}

impl DelayEvaluator {
    pub fn constant(tau: f64) -> Result<Self, NetworkError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(NetworkError::BadDelay(format!("constant delay {tau} must be positive")));
        }
        Ok(Self {
            form: DelayForm::Constant(tau),
            tau_bar: tau,
            sigma: 0.0,
        })
    }

    /// Logistic delay. Its supremum is the amplitude (approached as t → ∞)
    /// and its derivative `a eᵗ/(1+eᵗ)²` peaks at t = 0 with value a/4.
    pub fn logistic(amplitude: f64) -> Result<Self, NetworkError> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(NetworkError::BadDelay(format!(
                "logistic amplitude {amplitude} must be positive"
            )));
        }
        Ok(Self {
            form: DelayForm::Logistic { amplitude },
            tau_bar: amplitude,
            sigma: amplitude / 4.0,
        })
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self, NetworkError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(NetworkError::BadDelay(
                "tabulated delay needs matching, non-empty times and values".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NetworkError::BadDelay("tabulated times must increase".into()));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(NetworkError::BadDelay("tabulated delays must be positive".into()));
        }
        let tau_bar = values.iter().copied().fold(f64::MIN, f64::max);
        let sigma = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .fold(0.0, f64::max);
        Ok(Self {
            form: DelayForm::Tabulated { times, values },
            tau_bar,
            sigma,
        })
    }

    pub fn form(&self) -> &DelayForm {
        &self.form
    }

    pub fn tau_bar(&self) -> f64 {
        self.tau_bar
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            DelayForm::Constant(c) => *c,
            DelayForm::Logistic { amplitude } => amplitude / (1.0 + (-t).exp()),
            DelayForm::Tabulated { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[last] {
                    return values[last];
                }
                let j = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[j]) / (times[j + 1] - times[j]);
                values[j] + w * (values[j + 1] - values[j])
            }
        }
    }
}

/// Unvalidated description of the coupled network.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    /// State dimension per node.
    pub n: usize,
    pub partition: ClusterPartition,
    pub clusters: Vec<ClusterParams>,
    /// N×N coupling matrix.
    pub coupling: DMatrix<f64>,
    pub activation: ActivationSpec,
    pub delay: DelayEvaluator,
    /// Reject coupling matrices whose blocks leave the A1/A2 classes instead
    /// of only recording the findings.
    pub strict_block_classes: bool,
}

/// A block-structure finding on the coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockViolation {
    /// Diagonal block `block` has a negative off-diagonal entry or a
    /// non-zero row sum at (`row`, `col`) (global indices).
    ClassA1 {
        block: usize,
        row: usize,
        col: usize,
        reason: String,
    },
    /// Off-diagonal block (`from`, `to`) has a non-zero row sum.
    ClassA2 {
        from: usize,
        to: usize,
        row: usize,
        sum: f64,
    },
}

impl BlockViolation {
    fn into_error(self) -> NetworkError {
        match self {
            BlockViolation::ClassA1 {
                block,
                row,
                col,
                reason,
            } => NetworkError::ClassA1Violation {
                block,
                row,
                col,
                reason,
            },
            BlockViolation::ClassA2 { from, to, row, sum } => {
                NetworkError::ClassA2Violation { from, to, row, sum }
            }
        }
    }
}

impl fmt::Display for BlockViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.clone().into_error().to_string())
    }
}

/// Checks the diagonal blocks of `g` for class A1 (non-negative off-diagonal
/// entries, zero row sums) and the off-diagonal blocks for class A2 (zero
/// row sums).
pub fn block_class_violations(g: &DMatrix<f64>, partition: &ClusterPartition) -> Vec<BlockViolation> {
    let tol = ROW_SUM_TOL * (1.0 + g.amax());
    let mut out = Vec::new();
    for p in 0..partition.num_clusters() {
        for q in 0..partition.num_clusters() {
            for row in partition.nodes(p) {
                let sum: f64 = partition.nodes(q).map(|col| g[(row, col)]).sum();
                if p == q {
                    if let Some(col) = partition
                        .nodes(q)
                        .find(|&col| col != row && g[(row, col)] < -tol)
                    {
                        out.push(BlockViolation::ClassA1 {
                            block: p,
                            row,
                            col,
                            reason: format!("negative off-diagonal entry {}", g[(row, col)]),
                        });
                    } else if sum.abs() > tol {
                        out.push(BlockViolation::ClassA1 {
                            block: p,
                            row,
                            col: row,
                            reason: format!("row sum {sum}"),
                        });
                    }
                } else if sum.abs() > tol {
                    out.push(BlockViolation::ClassA2 {
                        from: p,
                        to: q,
                        row,
                        sum,
                    });
                }
            }
        }
    }
    out
}

/// Network whose invariants have been checked. Evaluates the leader, node and
/// error right-hand sides.
#[derive(Debug, Clone)]
pub struct ValidatedNetwork {
    spec: NetworkSpec,
    xi: Vec<f64>,
    block_violations: Vec<BlockViolation>,
    node_cluster: Vec<usize>,
}

/// Checks every invariant of `spec`, reporting the first one violated.
pub fn validate_network(spec: NetworkSpec) -> Result<ValidatedNetwork, NetworkError> {
    let n = spec.n;
    let num_nodes = spec.partition.num_nodes();
    let num_clusters = spec.partition.num_clusters();
    if n == 0 {
        return Err(NetworkError::DimensionMismatch("state dimension must be positive".into()));
    }
    if spec.clusters.len() != num_clusters {
        return Err(NetworkError::DimensionMismatch(format!(
            "{} cluster parameter sets for {} clusters",
            spec.clusters.len(),
            num_clusters
        )));
    }
    if spec.coupling.shape() != (num_nodes, num_nodes) {
        return Err(NetworkError::DimensionMismatch(format!(
            "coupling matrix is {:?}, expected {num_nodes}x{num_nodes}",
            spec.coupling.shape()
        )));
    }
    for (p, cp) in spec.clusters.iter().enumerate() {
        for (name, m) in [("C", &cp.c), ("A", &cp.a), ("B", &cp.b)] {
            if m.shape() != (n, n) {
                return Err(NetworkError::DimensionMismatch(format!(
                    "{name} of cluster {p} is {:?}, expected {n}x{n}",
                    m.shape()
                )));
            }
        }
        if cp.input.len() != n {
            return Err(NetworkError::DimensionMismatch(format!(
                "input of cluster {p} has length {}, expected {n}",
                cp.input.len()
            )));
        }
        if !linalg::is_positive_definite(&cp.c) {
            return Err(NetworkError::NonPositiveDefiniteC { cluster: p });
        }
    }
    let tol = ROW_SUM_TOL * (1.0 + spec.coupling.amax());
    for row in 0..num_nodes {
        let sum: f64 = spec.coupling.row(row).iter().sum();
        if sum.abs() > tol {
            return Err(NetworkError::NonZeroRowSum { row, sum });
        }
    }
    let block_violations = block_class_violations(&spec.coupling, &spec.partition);
    if spec.strict_block_classes {
        if let Some(v) = block_violations.first() {
            return Err(v.clone().into_error());
        }
    }
    let xi = lipschitz_bound(&spec.activation, num_clusters)?;
    if xi.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(NetworkError::DimensionMismatch(
            "Lipschitz constants must be finite and non-negative".into(),
        ));
    }
    if spec.delay.sigma() >= 1.0 {
        return Err(NetworkError::BadDelay(format!(
            "delay derivative bound {} must be below 1",
            spec.delay.sigma()
        )));
    }
    let node_cluster = (0..num_nodes)
        .map(|i| spec.partition.cluster_of(i))
        .collect::<Result<_, _>>()?;
    Ok(ValidatedNetwork {
        spec,
        xi,
        block_violations,
        node_cluster,
    })
}

impl ValidatedNetwork {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn num_nodes(&self) -> usize {
        self.spec.partition.num_nodes()
    }

    pub fn num_clusters(&self) -> usize {
        self.spec.partition.num_clusters()
    }

    pub fn partition(&self) -> &ClusterPartition {
        &self.spec.partition
    }

    pub fn cluster(&self, p: usize) -> &ClusterParams {
        &self.spec.clusters[p]
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.spec.coupling
    }

    pub fn delay(&self) -> &DelayEvaluator {
        &self.spec.delay
    }

    /// Per-cluster Lipschitz constants ξ_p.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_max(&self) -> f64 {
        self.xi.iter().copied().fold(0.0, f64::max)
    }

    /// A1/A2 findings on the coupling blocks (empty when the block structure
    /// is consistent with the partition).
    pub fn block_violations(&self) -> &[BlockViolation] {
        &self.block_violations
    }

    /// Cluster of each node, precomputed.
    pub fn node_cluster(&self, node: usize) -> usize {
        self.node_cluster[node]
    }

    #[inline]
    fn activate(&self, r: f64) -> f64 {
        self.spec.activation.kind.apply(r)
    }

    /// Isolated cluster dynamics `−C s + A f(s) + B f(s_delayed) + I`,
    /// accumulated into `out`.
    pub fn leader_rhs_into(&self, p: usize, s: &[f64], s_delayed: &[f64], out: &mut [f64]) {
        let cp = &self.spec.clusters[p];
        let fs: Vec<f64> = s.iter().map(|&r| self.activate(r)).collect();
        let fd: Vec<f64> = s_delayed.iter().map(|&r| self.activate(r)).collect();
        for (o, i) in out.iter_mut().zip(cp.input.iter()) {
            *o += i;
        }
        linalg::mat_vec_add(&cp.c, s, -1.0, out);
        linalg::mat_vec_add(&cp.a, &fs, 1.0, out);
        linalg::mat_vec_add(&cp.b, &fd, 1.0, out);
    }

    pub fn leader_rhs(&self, p: usize, s: &[f64], s_delayed: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.leader_rhs_into(p, s, s_delayed, &mut out);
        out
    }

    /// Node dynamics for all nodes: row `i` is
    /// `−C x_i + A f(x_i) + B f(x_i^delayed) + Σ_j g_ij x_j + I + u_i`.
    pub fn coupled_rhs(&self, x: &[f64], x_delayed: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        self.coupled_rhs_into(x, x_delayed, &mut out);
        out
    }

    /// As [`Self::coupled_rhs`], accumulating into `out` (which may hold the
    /// control input already).
    pub fn coupled_rhs_into(&self, x: &[f64], x_delayed: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..self.num_nodes() {
            let r = i * n..(i + 1) * n;
            self.leader_rhs_into(self.node_cluster[i], &x[r.clone()], &x_delayed[r.clone()], &mut out[r]);
        }
        self.add_coupling(x, out);
    }

    /// Error dynamics `−C e_i + A F(e_i) + B F(e_i^delayed) + Σ_j g_ij e_j`
    /// with `F(e_i) = f(s_p + e_i) − f(s_p)`, accumulated into `out`.
    /// `leaders` and `leaders_delayed` hold one state per cluster.
    pub fn error_rhs_into(
        &self,
        leaders: &[f64],
        leaders_delayed: &[f64],
        e: &[f64],
        e_delayed: &[f64],
        out: &mut [f64],
    ) {
        let n = self.n();
        let mut fe = vec![0.0; n];
        let mut fd = vec![0.0; n];
        for i in 0..self.num_nodes() {
            let p = self.node_cluster[i];
            let cp = &self.spec.clusters[p];
            let s = &leaders[p * n..(p + 1) * n];
            let sd = &leaders_delayed[p * n..(p + 1) * n];
            let ei = &e[i * n..(i + 1) * n];
            let edi = &e_delayed[i * n..(i + 1) * n];
            for j in 0..n {
                fe[j] = self.activate(s[j] + ei[j]) - self.activate(s[j]);
                fd[j] = self.activate(sd[j] + edi[j]) - self.activate(sd[j]);
            }
            let o = &mut out[i * n..(i + 1) * n];
            linalg::mat_vec_add(&cp.c, ei, -1.0, o);
            linalg::mat_vec_add(&cp.a, &fe, 1.0, o);
            linalg::mat_vec_add(&cp.b, &fd, 1.0, o);
        }
        self.add_coupling(e, out);
    }

    /// `out_i += Σ_j g_ij y_j`.
    fn add_coupling(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n();
        let g = &self.spec.coupling;
        for i in 0..self.num_nodes() {
            for j in 0..self.num_nodes() {
                let gij = g[(i, j)];
                if gij != 0.0 {
                    for c in 0..n {
                        out[i * n + c] += gij * y[j * n + c];
                    }
                }
            }
        }
    }

    /// `e_i = x_i − s_{p(i)}`.
    pub fn error_state(&self, x: &[f64], leaders: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut e = x.to_vec();
        for i in 0..self.num_nodes() {
            let p = self.node_cluster[i];
            for c in 0..n {
                e[i * n + c] -= leaders[p * n + c];
            }
        }
        e
    }

    /// Inverse of [`Self::error_state`].
    pub fn node_state(&self, e: &[f64], leaders: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut x = e.to_vec();
        for i in 0..self.num_nodes() {
            let p = self.node_cluster[i];
            for c in 0..n {
                x[i * n + c] += leaders[p * n + c];
            }
        }
        x
    }

    /// Nodes of cluster `p` that have a nonzero coupling entry (either
    /// direction) with a node outside the cluster.
    pub fn boundary_nodes(&self, p: usize) -> Vec<usize> {
        let g = &self.spec.coupling;
        let own = self.partition().nodes(p);
        own.clone()
            .filter(|&i| {
                (0..self.num_nodes())
                    .filter(|j| !own.contains(j))
                    .any(|j| g[(i, j)] != 0.0 || g[(j, i)] != 0.0)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    fn scalar_spec(c: f64, g: f64) -> NetworkSpec {
        NetworkSpec {
            n: 1,
            partition: ClusterPartition::from_sizes(&[1]).unwrap(),
            clusters: vec![ClusterParams {
                c: DMatrix::from_element(1, 1, c),
                a: DMatrix::zeros(1, 1),
                b: DMatrix::zeros(1, 1),
                input: DVector::zeros(1),
            }],
            coupling: DMatrix::from_element(1, 1, g),
            activation: ActivationSpec::new(Activation::Arctan),
            delay: DelayEvaluator::constant(1.0).unwrap(),
            strict_block_classes: false,
        }
    }

    #[test]
    fn cluster_lookup() {
        let part = ClusterPartition::from_sizes(&[2, 3]).unwrap();
        assert_eq!(part.cluster_of(0).unwrap(), 0);
        assert_eq!(part.cluster_of(2).unwrap(), 1);
        assert_eq!(part.cluster_of(4).unwrap(), 1);
        assert_eq!(
            part.cluster_of(5),
            Err(NetworkError::OutOfRange { node: 5, num_nodes: 5 })
        );
    }

    #[test]
    fn partition_rejects_bad_boundaries() {
        assert!(ClusterPartition::new(vec![0]).is_err());
        assert!(ClusterPartition::new(vec![1, 3]).is_err());
        assert!(ClusterPartition::new(vec![0, 2, 2, 5]).is_err());
        assert!(ClusterPartition::from_sizes(&[2, 0]).is_err());
    }

    #[test]
    fn scalar_linear_decay() {
        let net = validate_network(scalar_spec(1.0, 0.0)).unwrap();
        assert_eq!(net.coupled_rhs(&[2.0], &[0.0], &[0.0]), vec![-2.0]);
    }

    #[test]
    fn negative_c_rejected() {
        let mut spec = scalar_spec(1.0, 0.0);
        spec.n = 2;
        spec.clusters[0] = ClusterParams {
            c: -eye(2),
            a: eye(2),
            b: eye(2),
            input: DVector::zeros(2),
        };
        assert_eq!(
            validate_network(spec).unwrap_err(),
            NetworkError::NonPositiveDefiniteC { cluster: 0 }
        );
    }

    #[test]
    fn row_sum_rejected() {
        let mut spec = scalar_spec(1.0, 0.0);
        spec.partition = ClusterPartition::from_sizes(&[2]).unwrap();
        spec.coupling = DMatrix::from_row_slice(2, 2, &[-1.0, 1.1, 1.0, -1.0]);
        match validate_network(spec).unwrap_err() {
            NetworkError::NonZeroRowSum { row, sum } => {
                assert_eq!(row, 0);
                assert_abs_diff_eq!(sum, 0.1, epsilon = 1e-12);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn lipschitz_constants() {
        let xi = |k| lipschitz_bound(&ActivationSpec::new(k), 2);
        assert_eq!(xi(Activation::Arctan).unwrap(), vec![1.0, 1.0]);
        assert_eq!(xi(Activation::Linear { slope: 0.5 }).unwrap(), vec![0.5, 0.5]);
        let declared = Activation::Custom {
            map: Arc::new(|r: f64| 2.0 * r.sin()),
            lipschitz: Some(2.0),
        };
        assert_eq!(xi(declared).unwrap(), vec![2.0, 2.0]);
        let undeclared = Activation::Custom {
            map: Arc::new(f64::sin),
            lipschitz: None,
        };
        assert_eq!(xi(undeclared), Err(NetworkError::UnknownActivation));
    }

    #[test]
    fn logistic_delay_bounds() {
        let d = DelayEvaluator::logistic(1.7).unwrap();
        assert_eq!(d.tau_bar(), 1.7);
        assert_abs_diff_eq!(d.sigma(), 0.425, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eval(0.0), 0.85, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_delay() {
        let d = DelayEvaluator::tabulated(vec![0.0, 1.0, 2.0], vec![0.5, 0.8, 0.6]).unwrap();
        assert_abs_diff_eq!(d.eval(0.5), 0.65, epsilon = 1e-15);
        assert_eq!(d.eval(-3.0), 0.5);
        assert_eq!(d.eval(9.0), 0.6);
        assert_eq!(d.tau_bar(), 0.8);
        assert_abs_diff_eq!(d.sigma(), 0.3, epsilon = 1e-15);
        assert!(DelayEvaluator::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn fast_delay_rejected() {
        let mut spec = scalar_spec(1.0, 0.0);
        spec.delay = DelayEvaluator::logistic(4.0).unwrap();
        assert!(matches!(validate_network(spec), Err(NetworkError::BadDelay(_))));
    }
}
