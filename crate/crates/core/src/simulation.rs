//! Controlled network simulation on top of the delay integrator.
//!
//! The integrated state is `[leaders | nodes | Z]` where the node block holds
//! either the synchronization errors or the raw node states (see
//! [`StateFormulation`]) and `Z_i(t) = ∫_0^t ‖e_i‖² ds` carries the running
//! integrals the hybrid controller and its Lyapunov functional need.
//! `Z_i` extends to negative times linearly with the initial history, so
//! `∫_{t−τ(t)}^{t} ‖e_i‖² = Z_i(t) − Z_i(t − τ(t))` holds from the start.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::control::{
    forward_integral_estimate, hybrid_control_into, hybrid_regular_into, impulsive_control_jump, psi_flow, psi_gain, ControlError, FutureMode,
    HybridConfig, PinnedSet, PinningImpulsiveConfig,
};
use crate::criteria::settling_time;
use crate::dde::{self, CumulativeIntegral, DdeError, DelaySystem, History, HistoryBuffer, InitialHistory, IntegratorConfig, Limit};
use crate::linalg;
use crate::network::ValidatedNetwork;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Engine(#[from] DdeError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("initial condition: {0}")]
    BadInitial(String),
}

/// What the node block of the integrated state holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateFormulation {
    /// Synchronization errors `e_i`, driven by the error dynamics with
    /// `F(e_i) = f(s_p + e_i) − f(s_p)` and coupling `Σ_j g_ij e_j`.
    #[default]
    ErrorSystem,
    /// Raw node states `x_i` with coupling `Σ_j g_ij x_j`; errors derived as
    /// `x_i − s_p`. Agrees with the error system when every coupling block
    /// has zero row sums.
    NodeStates,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    None,
    PinningImpulsive(PinningImpulsiveConfig),
    Hybrid(HybridConfig),
}

/// Constant initial functions on `[−τ̄, 0]`: one state per node and one per
/// cluster leader, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub nodes: Vec<f64>,
    pub leaders: Vec<f64>,
}

/// How the `ψ` terms of the hybrid input are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiTreatment {
    /// RK4 on the remaining dynamics, then the exact flow of the `ψ` terms
    /// over each step with their gains frozen at the step start.
    #[default]
    SplitExact,
    /// The `ψ` terms inside the RK4 stages. Overshoots once
    /// `‖e‖² < h·c_i`, so errors chatter at about `√(h·c_i)`.
    Explicit,
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    pub formulation: StateFormulation,
    pub psi: PsiTreatment,
    /// Weight of `V₁ = Σ e_iᵀ Q e_i`; identity when absent.
    pub lyapunov_q: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovKind {
    /// `Σ e_iᵀ Q e_i`.
    Quadratic,
    /// `½Σ‖e_i‖² + ½k₁Σ∫_{t−τ}^{t}‖e_i‖² + g₁Σ_interior ∫_t^{t₁}‖e_i‖²`.
    Functional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseLog {
    /// Zero-based impulse ordinal.
    pub k: usize,
    pub time: f64,
    pub pinned: PinnedSet,
    pub d_k: f64,
}

/// Simulation record: one entry per grid point plus one right-limit entry
/// after each impulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub num_nodes: usize,
    pub num_clusters: usize,
    pub times: Vec<f64>,
    pub limits: Vec<Limit>,
    /// `num_nodes · n` per record.
    pub errors: Vec<f64>,
    /// `num_clusters · n` per record.
    pub leaders: Vec<f64>,
    /// `num_nodes` per record.
    pub error_norms: Vec<f64>,
    /// `∫_{t−τ(t)}^{t} ‖e_i‖²`, `num_nodes` per record.
    pub delayed_integrals: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub lyapunov_kind: LyapunovKind,
    pub impulses: Vec<ImpulseLog>,
    /// Simulation passes run (more than one in iterative future mode).
    pub passes: usize,
    /// Settling estimate used for the forward integral, if any.
    pub t1_estimate: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn error(&self, record: usize) -> &[f64] {
        let w = self.num_nodes * self.n;
        &self.errors[record * w..(record + 1) * w]
    }

    pub fn leader(&self, record: usize) -> &[f64] {
        let w = self.num_clusters * self.n;
        &self.leaders[record * w..(record + 1) * w]
    }

    pub fn norms(&self, record: usize) -> &[f64] {
        &self.error_norms[record * self.num_nodes..(record + 1) * self.num_nodes]
    }

    pub fn max_norm(&self, record: usize) -> f64 {
        self.norms(record).iter().copied().fold(0.0, f64::max)
    }

    pub fn delayed_integral(&self, record: usize) -> &[f64] {
        &self.delayed_integrals[record * self.num_nodes..(record + 1) * self.num_nodes]
    }

    /// Node states `x_i = s_p + e_i` at a record.
    pub fn node_states(&self, network: &ValidatedNetwork, record: usize) -> Vec<f64> {
        network.node_state(self.error(record), self.leader(record))
    }

    /// `∫ ‖e_i‖²` channel of one node over the recorded grid, extended
    /// before `t = 0` with the initial value.
    pub fn energy_channel(&self, node: usize) -> CumulativeIntegral {
        let values: Vec<f64> = (0..self.len())
            .map(|r| self.norms(r)[node].powi(2))
            .collect();
        let before = values.first().copied().unwrap_or(0.0);
        CumulativeIntegral::new(self.times.clone(), values, before)
    }
}

struct HybridState<'a> {
    config: &'a HybridConfig,
    boundary: Vec<bool>,
    previous: Option<Vec<CumulativeIntegral>>,
    t1_est: f64,
}

struct NetworkSystem<'a> {
    net: &'a ValidatedNetwork,
    formulation: StateFormulation,
    psi: PsiTreatment,
    hybrid: Option<HybridState<'a>>,
}

impl NetworkSystem<'_> {
    fn leader_len(&self) -> usize {
        self.net.num_clusters() * self.net.n()
    }

    fn node_len(&self) -> usize {
        self.net.num_nodes() * self.net.n()
    }

    fn errors_of(&self, y: &[f64]) -> Vec<f64> {
        let (leaders, rest) = y.split_at(self.leader_len());
        let nodes = &rest[..self.node_len()];
        match self.formulation {
            StateFormulation::ErrorSystem => nodes.to_vec(),
            StateFormulation::NodeStates => self.net.error_state(nodes, leaders),
        }
    }

    fn set_errors(&self, y: &mut [f64], e: &[f64]) {
        let (leaders, rest) = y.split_at_mut(self.leader_len());
        let nodes = &mut rest[..self.node_len()];
        match self.formulation {
            StateFormulation::ErrorSystem => nodes.copy_from_slice(e),
            StateFormulation::NodeStates => nodes.copy_from_slice(&self.net.node_state(e, leaders)),
        }
    }
}

impl NetworkSystem<'_> {
    fn forward_integral(&self, h: &HybridState<'_>, node: usize, t: f64) -> f64 {
        match &h.previous {
            Some(channels) if !h.boundary[node] => {
                forward_integral_estimate(Some(&channels[node]), t, h.t1_est, h.config.future_mode).unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }
}

impl DelaySystem for NetworkSystem<'_> {
    fn dim(&self) -> usize {
        self.leader_len() + self.node_len() + self.net.num_nodes()
    }

    fn delay(&self, t: f64) -> f64 {
        self.net.delay().eval(t)
    }

    fn rhs(&self, t: f64, y: &[f64], yd: &[f64], dy: &mut [f64]) {
        let net = self.net;
        let n = net.n();
        let (ls, ns) = (self.leader_len(), self.node_len());
        let (s, sd) = (&y[..ls], &yd[..ls]);
        let (nodes, nodes_d) = (&y[ls..ls + ns], &yd[ls..ls + ns]);
        let (z, zd) = (&y[ls + ns..], &yd[ls + ns..]);

        let (ds, rest) = dy.split_at_mut(ls);
        let (dnodes, dz) = rest.split_at_mut(ns);
        for p in 0..net.num_clusters() {
            let r = p * n..(p + 1) * n;
            net.leader_rhs_into(p, &s[r.clone()], &sd[r.clone()], &mut ds[r]);
        }
        let e = self.errors_of(y);
        match self.formulation {
            StateFormulation::ErrorSystem => net.error_rhs_into(s, sd, nodes, nodes_d, dnodes),
            StateFormulation::NodeStates => net.coupled_rhs_into(nodes, nodes_d, dnodes),
        }
        if let Some(h) = &self.hybrid {
            let norm_e = linalg::norm(&e);
            for i in 0..net.num_nodes() {
                let r = i * n..(i + 1) * n;
                match self.psi {
                    PsiTreatment::SplitExact => {
                        hybrid_regular_into(&e[r.clone()], h.boundary[i], h.config, &mut dnodes[r])
                    }
                    PsiTreatment::Explicit => {
                        let i_fut = self.forward_integral(h, i, t);
                        let i_tau = z[i] - zd[i];
                        hybrid_control_into(&e[r.clone()], h.boundary[i], norm_e, i_tau, i_fut, h.config, &mut dnodes[r]);
                    }
                }
            }
        }
        for (i, d) in dz.iter_mut().enumerate() {
            *d = e[i * n..(i + 1) * n].iter().map(|v| v * v).sum();
        }
    }

    fn split_flow(&self, t: f64, step: f64, y_start: &[f64], y_delayed: &[f64], y: &mut [f64]) {
        let Some(h) = &self.hybrid else { return };
        if self.psi != PsiTreatment::SplitExact {
            return;
        }
        let z0 = self.leader_len() + self.node_len();
        let gains: Vec<f64> = (0..self.net.num_nodes())
            .map(|i| {
                let i_tau = y_start[z0 + i] - y_delayed[z0 + i];
                psi_gain(h.boundary[i], i_tau, self.forward_integral(h, i, t), h.config)
            })
            .collect();
        let mut e = self.errors_of(y);
        psi_flow(&mut e, self.net.n(), &gains, step, h.config.psi_epsilon);
        self.set_errors(y, &e);
    }
}

fn check_initial(net: &ValidatedNetwork, initial: &InitialCondition) -> Result<(), SimulationError> {
    let n = net.n();
    if initial.nodes.len() != net.num_nodes() * n {
        return Err(SimulationError::BadInitial(format!(
            "{} node values, expected {}",
            initial.nodes.len(),
            net.num_nodes() * n
        )));
    }
    if initial.leaders.len() != net.num_clusters() * n {
        return Err(SimulationError::BadInitial(format!(
            "{} leader values, expected {}",
            initial.leaders.len(),
            net.num_clusters() * n
        )));
    }
    if initial.nodes.iter().chain(&initial.leaders).any(|v| !v.is_finite()) {
        return Err(SimulationError::BadInitial("non-finite initial value".into()));
    }
    Ok(())
}

/// Boundary flag per node: explicit sets from the config, or nodes coupled
/// to another cluster.
pub fn boundary_flags(net: &ValidatedNetwork, config: &HybridConfig) -> Vec<bool> {
    let mut flags = vec![false; net.num_nodes()];
    for p in 0..net.num_clusters() {
        let set = match &config.boundary {
            Some(sets) => sets[p].clone(),
            None => net.boundary_nodes(p),
        };
        for i in set {
            flags[i] = true;
        }
    }
    flags
}

/// Runs the controlled network over `config.horizon`.
pub fn simulate(
    net: &ValidatedNetwork,
    controller: &Controller,
    config: &IntegratorConfig,
    initial: &InitialCondition,
    options: &SimulationOptions,
) -> Result<Trajectory, SimulationError> {
    check_initial(net, initial)?;
    match controller {
        Controller::None => run_pass(net, None, None, config, initial, options),
        Controller::PinningImpulsive(cfg) => {
            cfg.validate(net.partition())?;
            run_pass(net, Some(cfg), None, config, initial, options)
        }
        Controller::Hybrid(cfg) => {
            cfg.validate(net.partition())?;
            let boundary = boundary_flags(net, cfg);
            let passes = match cfg.future_mode {
                FutureMode::ZeroFuture => 1,
                FutureMode::Iterative { passes } => passes,
            };
            let mut state = HybridState {
                config: cfg,
                boundary,
                previous: None,
                t1_est: 0.0,
            };
            let mut trajectory = run_pass(net, None, Some(&state), config, initial, options)?;
            for pass in 2..=passes {
                let channels: Vec<CumulativeIntegral> =
                    (0..net.num_nodes()).map(|i| trajectory.energy_channel(i)).collect();
                // settling estimate from the previous pass's functional at t0
                let t1_prev = if pass == 2 {
                    settling_time(trajectory.lyapunov[0], cfg.k, cfg.mu_exp)
                } else {
                    state.t1_est
                };
                let forward: f64 = (0..net.num_nodes())
                    .filter(|&i| !state.boundary[i])
                    .map(|i| forward_integral_estimate(Some(&channels[i]), 0.0, t1_prev, cfg.future_mode))
                    .sum::<Result<f64, _>>()?;
                let v0 = zero_future_v2_at(&trajectory, cfg, 0) + cfg.g1 * forward;
                state.t1_est = settling_time(v0, cfg.k, cfg.mu_exp);
                state.previous = Some(channels);
                trajectory = run_pass(net, None, Some(&state), config, initial, options)?;
            }
            trajectory.passes = passes;
            Ok(trajectory)
        }
    }
}

fn zero_future_v2_at(traj: &Trajectory, cfg: &HybridConfig, record: usize) -> f64 {
    let quad: f64 = traj.norms(record).iter().map(|v| v * v).sum();
    let delayed: f64 = traj.delayed_integral(record).iter().sum();
    0.5 * quad + 0.5 * cfg.k1 * delayed
}

fn run_pass(
    net: &ValidatedNetwork,
    impulsive: Option<&PinningImpulsiveConfig>,
    hybrid: Option<&HybridState<'_>>,
    config: &IntegratorConfig,
    initial: &InitialCondition,
    options: &SimulationOptions,
) -> Result<Trajectory, SimulationError> {
    let n = net.n();
    let system = NetworkSystem {
        net,
        formulation: options.formulation,
        psi: options.psi,
        hybrid: hybrid.map(|h| HybridState {
            config: h.config,
            boundary: h.boundary.clone(),
            previous: h.previous.clone(),
            t1_est: h.t1_est,
        }),
    };

    let e0 = net.error_state(&initial.nodes, &initial.leaders);
    let energy0: Vec<f64> = e0.chunks(n).map(|r| r.iter().map(|v| v * v).sum()).collect();
    let node_block = match options.formulation {
        StateFormulation::ErrorSystem => e0.clone(),
        StateFormulation::NodeStates => initial.nodes.clone(),
    };
    let leaders0 = initial.leaders.clone();
    let history = move |t: f64, out: &mut [f64]| {
        let (l, rest) = out.split_at_mut(leaders0.len());
        l.copy_from_slice(&leaders0);
        let (nodes, z) = rest.split_at_mut(node_block.len());
        nodes.copy_from_slice(&node_block);
        for (zi, en) in z.iter_mut().zip(&energy0) {
            *zi = t.min(0.0) * en;
        }
    };

    let (impulse_times, impulse_steps) = match impulsive {
        Some(cfg) => {
            let times = cfg.schedule.times_until(config.horizon);
            let steps = config.impulse_indices(&times)?;
            (times, steps)
        }
        None => (Vec::new(), Vec::new()),
    };

    let mut log = Vec::new();
    let mut control_error = None;
    let (solution, buffer) = dde::integrate(&system, &history, config, &impulse_steps, |k, t, y| {
        let cfg = impulsive.expect("impulses only scheduled with an impulsive controller");
        let mut e = system.errors_of(y);
        match impulsive_control_jump(&mut e, n, net.partition(), cfg, k) {
            Ok((pinned, d_k)) => {
                system.set_errors(y, &e);
                log.push(ImpulseLog {
                    k,
                    time: t,
                    pinned,
                    d_k,
                });
                Ok(())
            }
            Err(err) => {
                control_error = Some(err);
                Err(DdeError::BadSchedule(format!("impulse {k} at t = {t} failed")))
            }
        }
    })
    .map_err(|e| match control_error.take() {
        Some(c) => SimulationError::Control(c),
        None => SimulationError::Engine(e),
    })?;
    debug_assert_eq!(log.len(), impulse_times.len());

    build_trajectory(&system, &history, &solution, &buffer, log, options, hybrid)
}

fn build_trajectory<H: InitialHistory>(
    system: &NetworkSystem<'_>,
    initial: &H,
    solution: &dde::Solution,
    buffer: &HistoryBuffer,
    impulses: Vec<ImpulseLog>,
    options: &SimulationOptions,
    hybrid: Option<&HybridState<'_>>,
) -> Result<Trajectory, SimulationError> {
    let net = system.net;
    let n = net.n();
    let num_nodes = net.num_nodes();
    let ls = system.leader_len();
    let zs = ls + system.node_len();
    let records = solution.len();
    let q = options
        .lyapunov_q
        .clone()
        .unwrap_or_else(|| DMatrix::identity(n, n));
    let history = History { initial, buffer };

    let mut traj = Trajectory {
        n,
        num_nodes,
        num_clusters: net.num_clusters(),
        times: solution.times.clone(),
        limits: solution.limits.clone(),
        errors: Vec::with_capacity(records * num_nodes * n),
        leaders: Vec::with_capacity(records * ls),
        error_norms: Vec::with_capacity(records * num_nodes),
        delayed_integrals: Vec::with_capacity(records * num_nodes),
        lyapunov: Vec::with_capacity(records),
        lyapunov_kind: if hybrid.is_some() {
            LyapunovKind::Functional
        } else {
            LyapunovKind::Quadratic
        },
        impulses,
        passes: 1,
        t1_estimate: hybrid.filter(|h| h.previous.is_some()).map(|h| h.t1_est),
    };
    let mut delayed = vec![0.0; system.dim()];
    for r in 0..records {
        let t = solution.times[r];
        let y = solution.state(r);
        let e = system.errors_of(y);
        traj.leaders.extend_from_slice(&y[..ls]);
        history.sample_into(t - net.delay().eval(t), &mut delayed)?;
        for i in 0..num_nodes {
            let ei = &e[i * n..(i + 1) * n];
            traj.error_norms.push(linalg::norm(ei));
            traj.delayed_integrals.push(y[zs + i] - delayed[zs + i]);
        }
        let v = match hybrid {
            None => e.chunks(n).map(|ei| linalg::quad_form(&q, ei)).sum(),
            Some(h) => {
                let quad: f64 = e.iter().map(|v| v * v).sum();
                let delayed_sum: f64 = traj.delayed_integral(r).iter().sum();
                let forward: f64 = match &h.previous {
                    Some(channels) => (0..num_nodes)
                        .filter(|&i| !h.boundary[i])
                        .map(|i| {
                            forward_integral_estimate(Some(&channels[i]), t, h.t1_est, h.config.future_mode)
                        })
                        .sum::<Result<f64, _>>()?,
                    None => 0.0,
                };
                0.5 * quad + 0.5 * h.config.k1 * delayed_sum + h.config.g1 * forward
            }
        };
        traj.lyapunov.push(v);
        traj.errors.extend_from_slice(&e);
    }
    Ok(traj)
}
