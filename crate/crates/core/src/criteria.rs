//! Sufficient conditions for impulsive (exponential) and hybrid
//! (finite-time) cluster synchronization, their Lyapunov functions and the
//! settling-time estimate.
//!
//! Definiteness is decided from the smallest symmetric eigenvalue with
//! tolerance [`DEFINITENESS_TOL`].

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{pins_largest, ControlError, PinningImpulsiveConfig};
use crate::linalg::{self, DEFINITENESS_TOL};
use crate::network::{ClusterPartition, ValidatedNetwork};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("{0} is not symmetric positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("{0} is singular")]
    SingularE(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// Parameters of the exponential (impulsive) criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Params {
    /// Lyapunov weight `Q ≻ 0`.
    pub weight: DMatrix<f64>,
    pub e1: DMatrix<f64>,
    pub e2: DMatrix<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Target exponential rate λ.
    pub lambda: f64,
    /// Defaults to `max(1, 1/min η_k)`.
    pub gamma: Option<f64>,
    /// Razumikhin constant; defaults to `γ·e^{λτ̄}`.
    pub razumikhin_q: Option<f64>,
    /// Multiplier of υ in the rate condition; defaults to the Razumikhin
    /// constant.
    pub epsilon: Option<f64>,
    /// Overrides the derived growth bound μ.
    pub mu: Option<f64>,
    /// Overrides the derived delayed-term bound υ (derived value plus
    /// `margin` when absent).
    pub upsilon: Option<f64>,
    /// Growth-rate parameter of the Razumikhin impulsive lemma; defaults to
    /// `μ + qυ + λ + margin`.
    pub sigma_rate: Option<f64>,
    pub margin: f64,
}

impl Theorem1Params {
    /// Identity weights, unit α, β and all derived quantities left to the
    /// checker.
    pub fn identity(n: usize, lambda: f64) -> Self {
        Self {
            weight: DMatrix::identity(n, n),
            e1: DMatrix::identity(n, n),
            e2: DMatrix::identity(n, n),
            alpha: 1.0,
            beta: 1.0,
            lambda,
            gamma: None,
            razumikhin_q: None,
            epsilon: None,
            mu: None,
            upsilon: None,
            sigma_rate: None,
            margin: 1e-6,
        }
    }
}

/// Parameters of the finite-time (hybrid) criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Params {
    pub alpha: f64,
    pub beta: f64,
    pub e1: DMatrix<f64>,
    pub e2: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub name: String,
    pub description: String,
    pub lhs: f64,
    pub relation: String,
    pub rhs: f64,
    pub passed: bool,
}

impl ConditionRecord {
    fn new(name: impl Into<String>, description: impl Into<String>, lhs: f64, relation: &str, rhs: f64) -> Self {
        let passed = match relation {
            "<" => lhs < rhs,
            "<=" => lhs <= rhs,
            ">" => lhs > rhs,
            ">=" => lhs >= rhs,
            _ => unreachable!("unknown relation {relation}"),
        };
        Self {
            name: name.into(),
            description: description.into(),
            lhs,
            relation: relation.to_string(),
            rhs,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub criterion: String,
    pub conditions: Vec<ConditionRecord>,
    pub derived: BTreeMap<String, f64>,
    /// Per-impulse contraction factors (impulsive criterion only).
    pub eta: Vec<f64>,
    pub notes: Vec<String>,
}

impl CriteriaReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CriteriaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} criterion: {}", self.criterion, if self.passed() { "PASS" } else { "FAIL" })?;
        for c in &self.conditions {
            writeln!(
                f,
                "  [{}] {:<14} {:>16.9e} {:>2} {:<16.9e} {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.lhs,
                c.relation,
                c.rhs,
                c.description
            )?;
        }
        for (k, v) in &self.derived {
            writeln!(f, "  {k} = {v:.9e}")?;
        }
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        Ok(())
    }
}

fn require_pd(m: &DMatrix<f64>, n: usize, name: &'static str) -> Result<(), CriteriaError> {
    if m.shape() != (n, n) {
        return Err(CriteriaError::Dimension(format!("{name} is {:?}, expected {n}x{n}", m.shape())));
    }
    if !linalg::is_positive_definite(m) {
        return Err(CriteriaError::NotPositiveDefinite(name));
    }
    Ok(())
}

fn inverse(m: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>, CriteriaError> {
    let inv = m.clone().try_inverse().ok_or(CriteriaError::SingularE(name))?;
    if !inv.iter().all(|v| v.is_finite()) {
        return Err(CriteriaError::SingularE(name));
    }
    Ok(inv)
}

/// Quadratic bound matrix of one cluster,
/// `−QC − CᵀQ + αQAE₁⁻¹AᵀQ + βQBE₂⁻¹BᵀQ + α⁻¹ξ²E₁`.
pub fn cluster_bound_matrix(
    net: &ValidatedNetwork,
    params: &Theorem1Params,
    cluster: usize,
) -> Result<DMatrix<f64>, CriteriaError> {
    let q = &params.weight;
    let e1_inv = inverse(&params.e1, "E1")?;
    let e2_inv = inverse(&params.e2, "E2")?;
    let cp = net.cluster(cluster);
    let xi = net.xi()[cluster];
    Ok(-(q * &cp.c) - cp.c.transpose() * q
        + (q * &cp.a * &e1_inv * cp.a.transpose() * q) * params.alpha
        + (q * &cp.b * &e2_inv * cp.b.transpose() * q) * params.beta
        + &params.e1 * (xi * xi / params.alpha))
}

/// Growth bound μ and delayed-term bound υ such that, along the impulsive
/// error dynamics, `dV/dt ≤ μV(t) + υV(t − τ(t))` with `V = Σ e_iᵀQe_i`.
///
/// μ is the largest generalized eigenvalue of
/// `(blockdiag_i Φ_{p(i)} + G⊗Q + (G⊗Q)ᵀ, I_N ⊗ Q)` and υ that of
/// `(β⁻¹ξ_max²E₂, Q)`.
pub fn compute_mu_upsilon(net: &ValidatedNetwork, params: &Theorem1Params) -> Result<(f64, f64), CriteriaError> {
    let n = net.n();
    require_pd(&params.weight, n, "Q")?;
    require_pd(&params.e1, n, "E1")?;
    require_pd(&params.e2, n, "E2")?;
    if !(params.alpha > 0.0 && params.beta > 0.0) {
        return Err(CriteriaError::BadParameter("alpha and beta must be positive".into()));
    }
    let num_nodes = net.num_nodes();
    let blocks = (0..net.num_clusters())
        .map(|p| cluster_bound_matrix(net, params, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut m1 = DMatrix::zeros(num_nodes * n, num_nodes * n);
    for i in 0..num_nodes {
        m1.view_mut((i * n, i * n), (n, n))
            .copy_from(&blocks[net.node_cluster(i)]);
    }
    let gq = linalg::kron(net.coupling(), &params.weight);
    m1 += &gq + gq.transpose();
    let weight_all = linalg::kron(&DMatrix::identity(num_nodes, num_nodes), &params.weight);
    let mu = linalg::generalized_lambda_max(&m1, &weight_all).ok_or(CriteriaError::NotPositiveDefinite("Q"))?;
    let xi_max = net.xi_max();
    let delayed = &params.e2 * (xi_max * xi_max / params.beta);
    let upsilon =
        linalg::generalized_lambda_max(&delayed, &params.weight).ok_or(CriteriaError::NotPositiveDefinite("Q"))?;
    Ok((mu, upsilon))
}

/// Per-impulse contraction factor of `V = Σ e_iᵀQe_i`: the worst cluster of
/// `(1+d)² − d(2+d)·c_Q·(|C_p| − ρ_p)/|C_p|`, with `c_Q = λmax(Q)/λmin(Q)`
/// when the largest errors are pinned (`−2 < d < 0`) and its reciprocal
/// otherwise (then the unpinned nodes carry the largest errors and
/// `−d(2+d) ≤ 0`).
pub fn eta_k(weight: &DMatrix<f64>, d_k: f64, partition: &ClusterPartition, rho: &[usize]) -> f64 {
    let lmax = linalg::lambda_max(weight);
    let lmin = linalg::lambda_min(weight);
    let cond = if pins_largest(d_k) { lmax / lmin } else { lmin / lmax };
    let jump = (1.0 + d_k).powi(2);
    let spill = -d_k * (2.0 + d_k);
    (0..partition.num_clusters())
        .map(|p| {
            let size = partition.cluster_size(p) as f64;
            let free = size - rho[p] as f64;
            jump + spill * cond * free / size
        })
        .fold(f64::MIN, f64::max)
}

/// Checks the exponential criterion for the impulsive controller over the
/// impulses scheduled up to `horizon`.
pub fn check_theorem1(
    net: &ValidatedNetwork,
    params: &Theorem1Params,
    impulsive: &PinningImpulsiveConfig,
    horizon: f64,
) -> Result<CriteriaReport, CriteriaError> {
    impulsive.validate(net.partition())?;
    if params.lambda.is_nan() || params.lambda <= 0.0 {
        return Err(CriteriaError::BadParameter("lambda must be positive".into()));
    }
    let (mu_derived, upsilon_derived) = compute_mu_upsilon(net, params)?;
    let mu = params.mu.unwrap_or(mu_derived);
    let upsilon = params.upsilon.unwrap_or(upsilon_derived + params.margin);
    let rho = impulsive.rho();
    let gaps = impulsive.schedule.gaps_until(horizon);
    let eta: Vec<f64> = (0..gaps.len())
        .map(|k| eta_k(&params.weight, impulsive.gain.gain(k), net.partition(), &rho))
        .collect();
    let tau_bar = net.delay().tau_bar();
    let lambda = params.lambda;

    let eta_min = eta.iter().copied().fold(f64::INFINITY, f64::min);
    let eta_max = eta.iter().copied().fold(f64::MIN, f64::max);
    let gamma = params.gamma.unwrap_or_else(|| (1.0 / eta_min).max(1.0));
    let q_floor = gamma * (lambda * tau_bar).exp();
    let q = params.razumikhin_q.unwrap_or(q_floor);
    let epsilon = params.epsilon.unwrap_or(q);
    let growth = mu + q * upsilon;
    let sigma_rate = params
        .sigma_rate
        .unwrap_or_else(|| (growth + lambda + params.margin).max(params.margin));

    let xi_max = net.xi_max();
    let c9 = &params.weight * upsilon - &params.e2 * (xi_max * xi_max / params.beta);
    let c10_worst = eta
        .iter()
        .zip(&gaps)
        .map(|(e, gap)| e.ln() + (sigma_rate + lambda) * gap)
        .fold(f64::MIN, f64::max);

    let mut conditions = vec![
        ConditionRecord::new(
            "C9",
            "min eig of upsilon*Q - xi^2/beta*E2 (delayed term dominated)",
            linalg::lambda_min(&c9),
            ">",
            DEFINITENESS_TOL,
        ),
        ConditionRecord::new(
            "C11",
            "mu + epsilon*upsilon - (sigma_rate + lambda)",
            mu + epsilon * upsilon - (sigma_rate + lambda),
            "<",
            0.0,
        ),
        ConditionRecord::new("L1_q", "Razumikhin q vs gamma*exp(lambda*tau_bar)", q, ">=", q_floor),
        ConditionRecord::new(
            "L1_sigma",
            "sigma_rate - lambda vs growth bound mu + q*upsilon",
            sigma_rate - lambda,
            ">=",
            growth,
        ),
    ];
    if eta.is_empty() {
        conditions.push(ConditionRecord::new(
            "C10",
            "no impulse within the horizon",
            f64::INFINITY,
            "<=",
            0.0,
        ));
    } else {
        conditions.push(ConditionRecord::new(
            "C10",
            "worst ln(eta_k) + (sigma_rate + lambda)*gap_k over impulses",
            c10_worst,
            "<=",
            0.0,
        ));
        conditions.push(ConditionRecord::new("L1_eta_pos", "min eta_k > 0", eta_min, ">", 0.0));
        conditions.push(ConditionRecord::new("L1_eta_le1", "max eta_k <= 1", eta_max, "<=", 1.0));
        conditions.push(ConditionRecord::new(
            "L1_gamma",
            "gamma * min eta_k >= 1 (rounding allowance 1e-12)",
            gamma * eta_min,
            ">=",
            1.0 - 1e-12,
        ));
    }
    conditions.sort_by(|a, b| a.name.cmp(&b.name));

    let mut derived = BTreeMap::new();
    derived.insert("mu".into(), mu);
    derived.insert("mu_derived".into(), mu_derived);
    derived.insert("upsilon".into(), upsilon);
    derived.insert("upsilon_derived".into(), upsilon_derived);
    derived.insert("gamma".into(), gamma);
    derived.insert("razumikhin_q".into(), q);
    derived.insert("epsilon".into(), epsilon);
    derived.insert("sigma_rate".into(), sigma_rate);
    derived.insert("sigma_delay".into(), net.delay().sigma());
    derived.insert("tau_bar".into(), tau_bar);
    derived.insert("lambda".into(), lambda);
    derived.insert("error_rate_certificate".into(), lambda / 2.0);
    if !eta.is_empty() {
        derived.insert("eta_worst".into(), eta_max);
    }
    for (p, xi) in net.xi().iter().enumerate() {
        derived.insert(format!("xi_{p}"), *xi);
    }
    let mut notes = vec![
        "matrix condition assembled from the growth-bound chain (block-diagonal cluster terms plus G(x)Q + (G(x)Q)^T) instead of the dimensionally inconsistent printed block inequality".to_string(),
        format!("epsilon in the rate condition read as the Razumikhin constant q unless overridden (epsilon = {epsilon})"),
        "sigma_rate is the growth parameter of the Razumikhin impulsive lemma, distinct from the delay-derivative bound sigma_delay".to_string(),
    ];
    if !net.block_violations().is_empty() {
        notes.push(format!(
            "coupling blocks are not in classes A1/A2 for this partition ({} findings)",
            net.block_violations().len()
        ));
    }
    Ok(CriteriaReport {
        criterion: "exponential (pinning impulsive)".into(),
        conditions,
        derived,
        eta,
        notes,
    })
}

/// Checks the finite-time criterion of the hybrid controller with gains
/// `k1`, `g1`.
pub fn check_theorem2(
    net: &ValidatedNetwork,
    params: &Theorem2Params,
    k1: f64,
    g1: f64,
) -> Result<CriteriaReport, CriteriaError> {
    let n = net.n();
    require_pd(&params.e1, n, "E1")?;
    require_pd(&params.e2, n, "E2")?;
    if !(params.alpha > 0.0 && params.beta > 0.0) {
        return Err(CriteriaError::BadParameter("alpha and beta must be positive".into()));
    }
    let e1_inv = inverse(&params.e1, "E1")?;
    let e2_inv = inverse(&params.e2, "E2")?;
    let sigma = net.delay().sigma();
    let coupling = linalg::lambda_max(net.coupling());
    let e1_max = linalg::lambda_max(&params.e1);
    let e2_max = linalg::lambda_max(&params.e2);

    let mut conditions = Vec::new();
    let mut derived = BTreeMap::new();
    for p in 0..net.num_clusters() {
        let cp = net.cluster(p);
        let xi2 = net.xi()[p].powi(2);
        let delayed = xi2 * e2_max / params.beta + sigma;
        conditions.push(ConditionRecord::new(
            format!("T2_1[{p}]"),
            "xi^2/beta*lmax(E2) + sigma_delay",
            delayed,
            "<",
            1.0,
        ));
        let a_term = 0.5 * params.alpha * linalg::lambda_max(&(&cp.a * &e1_inv * cp.a.transpose()));
        let b_term = 0.5 * params.beta * linalg::lambda_max(&(&cp.b * &e2_inv * cp.b.transpose()));
        let growth = -linalg::lambda_min(&cp.c) + a_term + 0.5 * xi2 * e1_max / params.alpha + b_term + coupling
            + 0.5 * k1
            - g1;
        conditions.push(ConditionRecord::new(
            format!("T2_2[{p}]"),
            "instantaneous growth bound minus control strength g1",
            growth,
            "<",
            0.0,
        ));
        derived.insert(format!("growth_{p}"), growth);
    }
    derived.insert("sigma_delay".into(), sigma);
    derived.insert("coupling_lambda_max".into(), coupling);
    derived.insert("k1".into(), k1);
    derived.insert("g1".into(), g1);
    let notes = vec![
        "lambda_max(G(x)I) evaluated on the symmetric part of G, which bounds e^T (G(x)I) e".to_string(),
    ];
    Ok(CriteriaReport {
        criterion: "finite-time (hybrid)".into(),
        conditions,
        derived,
        eta: Vec::new(),
        notes,
    })
}

/// Settling-time offset `(2V₀)^{(1−μ)/2} / (k(1−μ))`.
pub fn settling_time(v0: f64, k: f64, mu_exp: f64) -> f64 {
    (2.0 * v0.max(0.0)).powf(0.5 * (1.0 - mu_exp)) / (k * (1.0 - mu_exp))
}

/// `Σ_i e_iᵀQe_i` over a row-major error state.
pub fn lyapunov_v1(e: &[f64], weight: &DMatrix<f64>) -> f64 {
    e.chunks(weight.nrows()).map(|ei| linalg::quad_form(weight, ei)).sum()
}

/// `½Σ‖e_i‖² + ½k₁Σ I_tau_i + g₁Σ I_fut_i` where `i_fut` lists the forward
/// integrals of the interior nodes only.
pub fn lyapunov_v2(e: &[f64], i_tau: &[f64], i_fut: &[f64], k1: f64, g1: f64) -> f64 {
    0.5 * e.iter().map(|v| v * v).sum::<f64>() + 0.5 * k1 * i_tau.iter().sum::<f64>() + g1 * i_fut.iter().sum::<f64>()
}

/// `(Σ‖x_i‖²)^{q/2} ≤ Σ‖x_i‖^q` for `0 < q < 2` (up to rounding).
pub fn power_mean_check(vectors: &[Vec<f64>], q: f64) -> bool {
    let squares: Vec<f64> = vectors.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
    let lhs = squares.iter().sum::<f64>().powf(q / 2.0);
    let rhs: f64 = squares.iter().map(|s| s.powf(q / 2.0)).sum();
    lhs <= rhs * (1.0 + 1e-12)
}

/// `2xᵀy ≤ ϖxᵀEx + ϖ⁻¹yᵀE⁻¹y` for `ϖ > 0`, `E ≻ 0` (up to rounding).
pub fn young_inequality_holds(x: &[f64], y: &[f64], varpi: f64, e: &DMatrix<f64>) -> bool {
    let Some(e_inv) = e.clone().try_inverse() else {
        return false;
    };
    let lhs = 2.0 * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let rhs = varpi * linalg::quad_form(e, x) + linalg::quad_form(&e_inv, y) / varpi;
    lhs <= rhs + 1e-12 * (1.0 + rhs.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn settling_time_examples() {
        assert_eq!(settling_time(0.0, 2.0, 0.5), 0.0);
        assert_eq!(settling_time(8.0, 2.0, 0.5), 2.0);
        assert_eq!(settling_time(0.5, 2.0, 0.5), 1.0);
    }

    #[test]
    fn eta_examples() {
        let part = ClusterPartition::from_sizes(&[2, 3]).unwrap();
        let q = DMatrix::identity(2, 2);
        assert_abs_diff_eq!(eta_k(&q, -0.8, &part, &[1, 3]), 0.52, epsilon = 1e-12);
        assert_abs_diff_eq!(eta_k(&q, -0.8, &part, &[2, 3]), 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(eta_k(&q, -1.0, &part, &[2, 3]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eta_form_b_uses_reciprocal_condition() {
        let part = ClusterPartition::from_sizes(&[2]).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        // d = 0.5: 2.25 - 1.25 * 0.5 * 0.5
        assert_abs_diff_eq!(eta_k(&q, 0.5, &part, &[1]), 2.25 - 1.25 * 0.25, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_examples() {
        let eye = DMatrix::identity(2, 2);
        assert_eq!(lyapunov_v1(&[0.0, 0.0], &eye), 0.0);
        assert_eq!(lyapunov_v1(&[3.0, 4.0], &eye), 25.0);
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(lyapunov_v1(&[1.0, 1.0], &q), 3.0);
        assert_eq!(lyapunov_v2(&[0.0, 0.0], &[0.0], &[], 1.4, 41.4), 0.0);
        assert_eq!(lyapunov_v2(&[1.0, 1.0], &[0.0], &[], 1.4, 41.4), 1.0);
        assert_abs_diff_eq!(lyapunov_v2(&[1.0, 1.0], &[2.0], &[], 1.4, 41.4), 2.4, epsilon = 1e-12);
        assert_abs_diff_eq!(lyapunov_v2(&[0.0], &[0.0], &[0.5], 1.4, 2.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn power_mean_examples() {
        assert!(power_mean_check(&[vec![3.0, 4.0]], 1.0));
        assert!(power_mean_check(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1.0));
        // fails for q > 2, as expected of the inequality
        assert!(!power_mean_check(&[vec![1.0, 0.0], vec![0.0, 1.0]], 3.0));
    }

    #[test]
    fn young_inequality_examples() {
        let e = DMatrix::identity(2, 2);
        assert!(young_inequality_holds(&[1.0, 2.0], &[1.0, 2.0], 1.0, &e));
        assert!(young_inequality_holds(&[1.0, -2.0], &[3.0, 0.5], 0.3, &e));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::control::select_pinned_nodes;
    use crate::dde::apply_impulse_event;
    use proptest::prelude::*;

    fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, 2), 1..6)
    }

    proptest! {
        #[test]
        fn power_mean_holds(xs in vectors(), q in prop::sample::select(vec![0.5, 1.0, 1.5])) {
            prop_assert!(power_mean_check(&xs, q));
        }

        #[test]
        fn young_inequality_holds_for_spd_weights(
            x in proptest::collection::vec(-5.0..5.0f64, 2),
            y in proptest::collection::vec(-5.0..5.0f64, 2),
            varpi in 0.01..10.0f64,
            a in -2.0..2.0f64,
            b in -2.0..2.0f64,
        ) {
            // L Lᵀ + 0.1 I is symmetric positive definite
            let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, a, b]);
            let e = &l * l.transpose() + DMatrix::identity(2, 2) * 0.1;
            prop_assert!(young_inequality_holds(&x, &y, varpi, &e));
        }

        #[test]
        fn settling_time_increases_with_initial_value(v in 0.0..1e3f64, dv in 1e-6..1e3f64, mu in 0.05..0.95f64) {
            prop_assert!(settling_time(v, 2.0, mu) < settling_time(v + dv, 2.0, mu));
        }

        #[test]
        fn impulse_contracts_quadratic_functional(
            e in proptest::collection::vec(-10.0..10.0f64, 10),
            d in -1.99..-0.01f64,
        ) {
            let part = ClusterPartition::from_sizes(&[2, 3]).unwrap();
            let q = DMatrix::identity(2, 2);
            let rho = [1, 2];
            let norms: Vec<f64> = e.chunks(2).map(|r| (r[0] * r[0] + r[1] * r[1]).sqrt()).collect();
            let set = select_pinned_nodes(&norms, &part, d, &rho).unwrap();
            let mut after = e.clone();
            apply_impulse_event(&mut after, 2, &set.nodes(), d);
            let eta = eta_k(&q, d, &part, &rho);
            prop_assert!(lyapunov_v1(&after, &q) <= eta * lyapunov_v1(&e, &q) + 1e-10);
        }
    }
}
