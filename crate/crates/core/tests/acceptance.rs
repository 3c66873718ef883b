//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use clustersync::control::{impulsive_control_jump, psi, GainSequence, PinSelection, PinningImpulsiveConfig};
use clustersync::criteria::{
    check_theorem2, eta_k, lyapunov_v1, power_mean_check, settling_time, young_inequality_holds, Theorem2Params,
};
use clustersync::dde::{integrate, ConstantHistory, DelaySystem, ImpulseSchedule, IntegratorConfig};
use clustersync::experiment::{self, write_csv};
use clustersync::network::ClusterPartition;
use clustersync::simulation::{simulate, Trajectory};
use clustersync::{detect_settling, preset, Controller, ExperimentConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn timed_run(config: &ExperimentConfig) -> (Trajectory, Duration) {
    let exp = config.build().expect("preset builds");
    let started = Instant::now();
    let traj = simulate(&exp.network, &exp.controller, &exp.integrator, &exp.initial, &exp.options)
        .expect("simulation succeeds");
    (traj, started.elapsed())
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uncontrolled() -> Outcome {
    let (traj, elapsed) = timed_run(&preset("case1").unwrap());
    let floor = (0..traj.len())
        .filter(|&r| traj.times[r] >= 4.0 && traj.times[r] <= 5.0)
        .map(|r| traj.max_norm(r))
        .fold(f64::INFINITY, f64::min);
    ensure(
        floor > 1e-2 && elapsed <= Duration::from_secs(5),
        format!("min over [4,5] of max|e_i| = {floor:.3e} (> 1e-2), runtime {:.2} s (<= 5 s)", elapsed.as_secs_f64()),
    )
}

fn impulsive() -> Outcome {
    let (traj, elapsed) = timed_run(&preset("case2").unwrap());
    let last = traj.len() - 1;
    let final_norm = traj.max_norm(last);
    let points: Vec<(f64, f64)> = (0..traj.len())
        .filter(|&r| traj.max_norm(r) > 0.0)
        .map(|r| (traj.times[r], traj.max_norm(r).ln()))
        .collect();
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    ensure(
        final_norm < 1e-3 && slope < 0.0 && elapsed <= Duration::from_secs(10),
        format!(
            "max|e_i(5)| = {final_norm:.3e} (< 1e-3), log-norm slope {slope:.3} (< 0), runtime {:.2} s (<= 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn hybrid() -> Outcome {
    let config = preset("case3").unwrap();
    let (traj, elapsed) = timed_run(&config);
    let exp = config.build().unwrap();
    let Controller::Hybrid(cfg) = &exp.controller else {
        return Err("case3 is not hybrid".into());
    };
    // constant initial functions: I_tau(0) = tau(0) |e_i(0)|^2 with tau(0) = 1.7/2
    let tau0 = 1.7 * 0.5;
    let init = &config.network.initial;
    let clusters = &config.network.clusters;
    let mut energy = 0.0;
    let mut node = 0;
    for (p, &size) in clusters.iter().enumerate() {
        for _ in 0..size {
            let e: f64 = init.nodes[node].iter().zip(&init.leaders[p]).map(|(x, s)| (x - s).powi(2)).sum();
            energy += e;
            node += 1;
        }
    }
    let v0 = 0.5 * energy + 0.5 * cfg.k1 * tau0 * energy;
    let bound = settling_time(v0, cfg.k, cfg.mu_exp) * 1.1;
    let settled = detect_settling(&traj, 1e-3);
    ensure(
        settled.is_some_and(|t| t <= bound) && elapsed <= Duration::from_secs(10),
        format!(
            "settled at {settled:?} (<= {bound:.4} = 1.1 x estimate from V2(0) = {v0:.3}), runtime {:.2} s (<= 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn contraction() -> Outcome {
    let part = ClusterPartition::from_sizes(&[2, 3]).unwrap();
    let q = DMatrix::identity(2, 2);
    let config = PinningImpulsiveConfig {
        gain: GainSequence::Constant(-0.8),
        schedule: ImpulseSchedule::arithmetic(0.03).unwrap(),
        selection: PinSelection::Counts(vec![1, 3]),
    };
    let eta = eta_k(&q, -0.8, &part, &[1, 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::MIN;
    for _ in 0..1000 {
        let e: Vec<f64> = (0..10).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut after = e.clone();
        impulsive_control_jump(&mut after, 2, &part, &config, 0).unwrap();
        worst = worst.max(lyapunov_v1(&after, &q) - eta * lyapunov_v1(&e, &q));
    }
    ensure(
        (eta - 0.52).abs() <= 1e-12 && worst <= 1e-10,
        format!("eta = {eta}, worst V1(E+) - eta V1(E) = {worst:.3e} over 1000 states"),
    )
}

struct Decay;

impl DelaySystem for Decay {
    fn dim(&self) -> usize {
        1
    }
    fn delay(&self, _t: f64) -> f64 {
        1.0
    }
    fn rhs(&self, _t: f64, y: &[f64], _yd: &[f64], dy: &mut [f64]) {
        dy[0] = -y[0];
    }
}

struct DelayedDecay;

impl DelaySystem for DelayedDecay {
    fn dim(&self) -> usize {
        1
    }
    fn delay(&self, _t: f64) -> f64 {
        1.0
    }
    fn rhs(&self, _t: f64, _y: &[f64], yd: &[f64], dy: &mut [f64]) {
        dy[0] = -yd[0];
    }
}

fn endpoint<S: DelaySystem>(system: &S, step: f64) -> f64 {
    let config = IntegratorConfig {
        step,
        horizon: 1.0,
        require_alignment: true,
    };
    let (solution, _) = integrate(system, &ConstantHistory(vec![1.0]), &config, &[], |_, _, _| Ok(())).unwrap();
    solution.state(solution.len() - 1)[0]
}

fn integrator_order() -> Outcome {
    let exact = (-1.0f64).exp();
    let coarse = (endpoint(&Decay, 1e-2) - exact).abs();
    let fine = (endpoint(&Decay, 5e-3) - exact).abs();
    let ratio = coarse / fine;
    let delayed = endpoint(&DelayedDecay, 1e-3);
    ensure(
        (12.0..=20.0).contains(&ratio) && delayed.abs() <= 1e-6,
        format!("error ratio {ratio:.3} (in [12, 20]), delayed x(1) = {delayed:.3e} (|.| <= 1e-6)"),
    )
}

fn criteria_checkers() -> Outcome {
    let net = preset("case1").unwrap().build().unwrap().network;
    let params = |beta| Theorem2Params {
        alpha: 0.2,
        beta,
        e1: DMatrix::identity(2, 2),
        e2: DMatrix::identity(2, 2),
    };
    let pass = check_theorem2(&net, &params(2.0), 1.4, 41.4).unwrap();
    let fail = check_theorem2(&net, &params(1.0), 1.4, 41.4).unwrap();
    let (p, f) = (pass.condition("T2_1[0]").unwrap(), fail.condition("T2_1[0]").unwrap());
    let t = settling_time(8.0, 2.0, 0.5);
    let part = ClusterPartition::from_sizes(&[2, 3]).unwrap();
    let q = DMatrix::identity(2, 2);
    let etas = [
        eta_k(&q, -0.8, &part, &[1, 3]),
        eta_k(&q, -0.8, &part, &[2, 3]),
        eta_k(&q, -1.0, &part, &[2, 3]),
    ];
    let eta_ok = (etas[0] - 0.52).abs() <= 1e-12 && (etas[1] - 0.04).abs() <= 1e-12 && etas[2].abs() <= 1e-12;
    ensure(
        (p.lhs - 0.925).abs() <= 1e-12 && p.passed && (f.lhs - 1.425).abs() <= 1e-12 && !f.passed && t == 2.0 && eta_ok,
        format!(
            "beta=2: {} ({}), beta=1: {} ({}), settling_time(8,2,0.5) = {t}, eta = {etas:?}",
            p.lhs,
            if p.passed { "pass" } else { "fail" },
            f.lhs,
            if f.passed { "pass" } else { "fail" },
        ),
    )
}

fn lemma_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut power_failures = 0;
    for q in [0.5, 1.0, 1.5] {
        for _ in 0..1000 {
            let count = rng.random_range(1..8);
            let xs: Vec<Vec<f64>> =
                (0..count).map(|_| (0..2).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
            if !power_mean_check(&xs, q) {
                power_failures += 1;
            }
        }
    }
    let mut young_failures = 0;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
        let l = DMatrix::from_fn(2, 2, |r, c| if c <= r { rng.random_range(-2.0..2.0) } else { 0.0 });
        let e = &l * l.transpose() + DMatrix::identity(2, 2) * 0.05;
        let varpi = rng.random_range(0.01..10.0);
        if !young_inequality_holds(&x, &y, varpi, &e) {
            young_failures += 1;
        }
    }
    let mut worst_psi: f64 = 0.0;
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.random_range(-5.5..1.0));
        let e: Vec<f64> = (0..10).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-6 {
            continue;
        }
        let total: f64 = e
            .chunks(2)
            .map(|ei| psi(ei, norm, 1e-10).iter().zip(ei).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        worst_psi = worst_psi.max((total - 1.0).abs());
    }
    ensure(
        power_failures == 0 && young_failures == 0 && worst_psi <= 1e-10,
        format!(
            "power-mean failures {power_failures}/3000, Young failures {young_failures}/1000, worst psi-stack deviation {worst_psi:.3e}"
        ),
    )
}

fn determinism() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in experiment::PRESETS {
        let config = preset(name).unwrap();
        let csv = || {
            let (traj, _) = timed_run(&config);
            let mut buf = Vec::new();
            write_csv(&traj, &mut buf).unwrap();
            buf
        };
        let (a, b) = (csv(), csv());
        ok &= a == b;
        details.push(format!("{name}: {} bytes {}", a.len(), if a == b { "identical" } else { "DIFFER" }));
    }
    ensure(ok, details.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 uncontrolled network does not synchronize", uncontrolled),
        ("2 pinning impulsive control synchronizes exponentially", impulsive),
        ("3 hybrid control settles within the estimate", hybrid),
        ("4 impulse contraction oracle", contraction),
        ("5 integrator order and delayed closed form", integrator_order),
        ("6 criteria checkers", criteria_checkers),
        ("7 lemma oracles", lemma_oracles),
        ("8 deterministic CSV output", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
