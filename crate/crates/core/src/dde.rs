//! Fixed-step method-of-steps integrator for delay differential equations
//! with scheduled jumps.
//!
//! The state is left continuous at jump instants: a query at `t_k` returns
//! the pre-jump value and interpolation on `(t_k, t_{k+1}]` starts from the
//! post-jump value.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdeError {
    #[error("time {t} outside history coverage [{start}, {end}]")]
    OutOfCoverage { t: f64, start: f64, end: f64 },
    #[error("impulse at t = {t} is not a multiple of the step {step}")]
    MisalignedImpulse { t: f64, step: f64 },
    #[error("bad impulse schedule: {0}")]
    BadSchedule(String),
    #[error("bad integrator configuration: {0}")]
    BadConfig(String),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
}

/// Which one-sided limit to read at a jump stamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Limit {
    Left,
    Right,
}

/// A recorded jump: the state just before and just after `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Interpolable record of past states on ascending stamps.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    /// `(stamp index, post-jump value)`, ascending by index.
    right_limits: Vec<(usize, Vec<f64>)>,
}

impl HistoryBuffer {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            times: Vec::new(),
            values: Vec::new(),
            right_limits: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn end(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Appends a stamp. Panics if `t` does not increase or `value` has the
    /// wrong length.
    pub fn push(&mut self, t: f64, value: &[f64]) {
        assert_eq!(value.len(), self.dim, "history value has wrong dimension");
        if let Some(last) = self.end() {
            assert!(t > last, "history stamps must increase ({t} after {last})");
        }
        self.times.push(t);
        self.values.extend_from_slice(value);
    }

    /// Records the post-jump value at the most recent stamp.
    pub fn push_jump(&mut self, right: &[f64]) {
        assert_eq!(right.len(), self.dim);
        let idx = self.times.len().checked_sub(1).expect("jump on empty history");
        match self.right_limits.last_mut() {
            Some((last, value)) if *last == idx => value.copy_from_slice(right),
            _ => self.right_limits.push((idx, right.to_vec())),
        }
    }

    pub fn jump_records(&self) -> Vec<JumpRecord> {
        self.right_limits
            .iter()
            .map(|(idx, right)| JumpRecord {
                time: self.times[*idx],
                left: self.left(*idx).to_vec(),
                right: right.clone(),
            })
            .collect()
    }

    fn left(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    fn right(&self, idx: usize) -> &[f64] {
        match self.right_limits.binary_search_by_key(&idx, |(i, _)| *i) {
            Ok(pos) => &self.right_limits[pos].1,
            Err(_) => self.left(idx),
        }
    }

    fn out_of_coverage(&self, t: f64) -> DdeError {
        DdeError::OutOfCoverage {
            t,
            start: self.start().unwrap_or(f64::NAN),
            end: self.end().unwrap_or(f64::NAN),
        }
    }

    /// Linear interpolation between bracketing stamps, honouring the
    /// left/right-limit convention at jump stamps.
    pub fn sample_into(&self, t: f64, limit: Limit, out: &mut [f64]) -> Result<(), DdeError> {
        let (Some(start), Some(end)) = (self.start(), self.end()) else {
            return Err(self.out_of_coverage(t));
        };
        if !(t >= start && t <= end) {
            return Err(self.out_of_coverage(t));
        }
        let j = self.times.partition_point(|&s| s <= t) - 1;
        if t == self.times[j] {
            let v = match limit {
                Limit::Left => self.left(j),
                Limit::Right => self.right(j),
            };
            out.copy_from_slice(v);
            return Ok(());
        }
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let w = (t - t0) / (t1 - t0);
        let a = self.right(j);
        let b = self.left(j + 1);
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = x + w * (y - x);
        }
        Ok(())
    }

    pub fn sample(&self, t: f64, limit: Limit) -> Result<Vec<f64>, DdeError> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(t, limit, &mut out)?;
        Ok(out)
    }
}

/// Free function form of [`HistoryBuffer::sample`] at the pointwise (left)
/// value.
pub fn sample_history(buffer: &HistoryBuffer, t: f64) -> Result<Vec<f64>, DdeError> {
    buffer.sample(t, Limit::Left)
}

/// Initial function on `[t0 − τ̄, t0)`.
pub trait InitialHistory {
    fn eval(&self, t: f64, out: &mut [f64]);
}

/// History identically equal to one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantHistory(pub Vec<f64>);

impl InitialHistory for ConstantHistory {
    fn eval(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

impl<F: Fn(f64, &mut [f64])> InitialHistory for F {
    fn eval(&self, t: f64, out: &mut [f64]) {
        self(t, out)
    }
}

/// Past states: the initial function before the first stamp and the buffer
/// afterwards.
pub struct History<'a, H: ?Sized> {
    pub initial: &'a H,
    pub buffer: &'a HistoryBuffer,
}

impl<H: InitialHistory + ?Sized> History<'_, H> {
    pub fn sample_into(&self, t: f64, out: &mut [f64]) -> Result<(), DdeError> {
        match self.buffer.start() {
            Some(start) if t >= start => self.buffer.sample_into(t, Limit::Left, out),
            _ => {
                self.initial.eval(t, out);
                Ok(())
            }
        }
    }
}

/// `ẏ(t) = F(t, y(t), y(t − τ(t)))`.
pub trait DelaySystem {
    fn dim(&self) -> usize;
    fn delay(&self, t: f64) -> f64;
    fn rhs(&self, t: f64, y: &[f64], y_delayed: &[f64], dy: &mut [f64]);

    /// Second half of a split step: advances `y` (already carried over the
    /// step by RK4) by a flow that the system integrates itself. `t` is the
    /// start of the step and `y_start`, `y_delayed` the state there and at
    /// `t − τ(t)`.
    fn split_flow(&self, _t: f64, _h: f64, _y_start: &[f64], _y_delayed: &[f64], _y: &mut [f64]) {}
}

/// One classical RK4 step from `(t, y)`. The delayed argument at each stage
/// time `t*` is read from history at `t* − τ(t*)`.
pub fn rk4_step<S, H>(
    system: &S,
    history: &History<'_, H>,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>, DdeError>
where
    S: DelaySystem + ?Sized,
    H: InitialHistory + ?Sized,
{
    let dim = y.len();
    let mut delayed = vec![0.0; dim];
    let mut stage = vec![0.0; dim];
    let mut ks = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let offsets = [0.0, 0.5 * h, 0.5 * h, h];
    for s in 0..4 {
        let ts = t + offsets[s];
        if s == 0 {
            stage.copy_from_slice(y);
        } else {
            let prev = &ks[s - 1];
            for ((st, y0), k) in stage.iter_mut().zip(y).zip(prev) {
                *st = y0 + offsets[s] * k;
            }
        }
        history.sample_into(ts - system.delay(ts), &mut delayed)?;
        let k = &mut ks[s];
        k.iter_mut().for_each(|v| *v = 0.0);
        system.rhs(ts, &stage, &delayed, k);
    }
    Ok((0..dim)
        .map(|i| y[i] + h / 6.0 * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i]))
        .collect())
}

/// Scale the selected rows of a row-major `rows × n` error state by
/// `1 + d_k`; all other rows are left as they are.
pub fn apply_impulse_event(e: &mut [f64], n: usize, pinned: &[usize], d_k: f64) {
    for &i in pinned {
        for v in &mut e[i * n..(i + 1) * n] {
            *v *= 1.0 + d_k;
        }
    }
}

/// Impulse instants `0 < t_1 < t_2 < …`.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpulseSchedule {
    /// `t_k = k · delta`, `k ≥ 1`.
    Arithmetic { delta: f64 },
    Explicit(Vec<f64>),
}

impl ImpulseSchedule {
    pub fn arithmetic(delta: f64) -> Result<Self, DdeError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(DdeError::BadSchedule(format!("impulse gap {delta} must be positive")));
        }
        Ok(Self::Arithmetic { delta })
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self, DdeError> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(DdeError::BadSchedule("impulse times must be finite".into()));
        }
        if times.first().is_some_and(|&t| t <= 0.0) {
            return Err(DdeError::BadSchedule("impulse times must be positive".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DdeError::BadSchedule("impulse times must strictly increase".into()));
        }
        Ok(Self::Explicit(times))
    }

    /// All impulse times in `(0, horizon]`.
    pub fn times_until(&self, horizon: f64) -> Vec<f64> {
        match self {
            ImpulseSchedule::Arithmetic { delta } => {
                let count = (horizon / delta + 1e-9).floor() as usize;
                (1..=count).map(|k| k as f64 * delta).collect()
            }
            ImpulseSchedule::Explicit(times) => {
                times.iter().copied().take_while(|&t| t <= horizon).collect()
            }
        }
    }

    /// Gaps `t_k − t_{k−1}` with `t_0 = 0`, for impulses up to `horizon`.
    pub fn gaps_until(&self, horizon: f64) -> Vec<f64> {
        let times = self.times_until(horizon);
        let mut prev = 0.0;
        times
            .into_iter()
            .map(|t| {
                let gap = t - prev;
                prev = t;
                gap
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub horizon: f64,
    /// Reject impulse times that are not grid points. When unset, an impulse
    /// is applied at the first grid point at or after its nominal time.
    pub require_alignment: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 5.0,
            require_alignment: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DdeError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(DdeError::BadConfig(format!("step {} must be positive", self.step)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(DdeError::BadConfig(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Number of steps covering the horizon.
    pub fn num_steps(&self) -> usize {
        let ratio = self.horizon / self.step;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    pub fn time_of(&self, step_index: usize) -> f64 {
        step_index as f64 * self.step
    }

    /// Grid index at which each impulse time is applied.
    pub fn impulse_indices(&self, times: &[f64]) -> Result<Vec<usize>, DdeError> {
        times
            .iter()
            .map(|&t| {
                let ratio = t / self.step;
                let nearest = ratio.round();
                if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
                    Ok(nearest as usize)
                } else if self.require_alignment {
                    Err(DdeError::MisalignedImpulse { t, step: self.step })
                } else {
                    Ok(ratio.ceil() as usize)
                }
            })
            .collect()
    }
}

/// Raw output of [`integrate`]: one record per grid point plus one
/// right-limit record after each jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub dim: usize,
    pub times: Vec<f64>,
    pub limits: Vec<Limit>,
    /// Flat, `dim` values per record.
    pub states: Vec<f64>,
}

impl Solution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, record: usize) -> &[f64] {
        &self.states[record * self.dim..(record + 1) * self.dim]
    }

    fn push(&mut self, t: f64, limit: Limit, y: &[f64]) {
        self.times.push(t);
        self.limits.push(limit);
        self.states.extend_from_slice(y);
    }
}

/// Integrates `system` from `t = 0` with initial function `initial` over the
/// configured horizon. At every grid index listed in `impulse_steps` the
/// jump map is called with the impulse ordinal, the time and the pre-jump
/// state, which it updates in place.
pub fn integrate<S, H, J>(
    system: &S,
    initial: &H,
    config: &IntegratorConfig,
    impulse_steps: &[usize],
    mut jump: J,
) -> Result<(Solution, HistoryBuffer), DdeError>
where
    S: DelaySystem + ?Sized,
    H: InitialHistory + ?Sized,
    J: FnMut(usize, f64, &mut [f64]) -> Result<(), DdeError>,
{
    config.validate()?;
    if impulse_steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DdeError::BadSchedule(
            "two impulses fall on the same grid point".into(),
        ));
    }
    let dim = system.dim();
    let steps = config.num_steps();
    let mut y = vec![0.0; dim];
    initial.eval(0.0, &mut y);

    let mut buffer = HistoryBuffer::new(dim);
    let mut solution = Solution {
        dim,
        times: Vec::with_capacity(steps + 1 + impulse_steps.len()),
        limits: Vec::with_capacity(steps + 1 + impulse_steps.len()),
        states: Vec::with_capacity((steps + 1 + impulse_steps.len()) * dim),
    };
    buffer.push(0.0, &y);
    solution.push(0.0, Limit::Left, &y);

    if impulse_steps.first() == Some(&0) {
        // an impulse at t = 0 would make the initial state two-valued
        return Err(DdeError::BadSchedule("impulse at t = 0".into()));
    }
    let mut next_impulse = impulse_steps.iter().copied().enumerate().peekable();
    let mut delayed = vec![0.0; dim];

    for step in 0..steps {
        let t = config.time_of(step);
        let t_next = config.time_of(step + 1);
        let history = History {
            initial,
            buffer: &buffer,
        };
        let mut y_next = rk4_step(system, &history, t, &y, t_next - t)?;
        history.sample_into(t - system.delay(t), &mut delayed)?;
        system.split_flow(t, t_next - t, &y, &delayed, &mut y_next);
        y = y_next;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(DdeError::NonFinite { t: t_next });
        }
        buffer.push(t_next, &y);
        solution.push(t_next, Limit::Left, &y);
        if let Some(&(k, _)) = next_impulse.peek().filter(|&&(_, s)| s == step + 1) {
            next_impulse.next();
            jump(k, t_next, &mut y)?;
            buffer.push_jump(&y);
            solution.push(t_next, Limit::Right, &y);
        }
    }
    Ok((solution, buffer))
}

/// Prefix integral of a sampled scalar channel by the trapezoid rule, with
/// linear interpolation inside segments. Repeated stamps (jumps) contribute
/// nothing. Before the first stamp the integrand is the constant `before`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeIntegral {
    times: Vec<f64>,
    values: Vec<f64>,
    prefix: Vec<f64>,
    before: f64,
}

impl CumulativeIntegral {
    pub fn new(times: Vec<f64>, values: Vec<f64>, before: f64) -> Self {
        assert_eq!(times.len(), values.len());
        let mut prefix = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        for j in 0..times.len() {
            if j > 0 {
                acc += 0.5 * (times[j] - times[j - 1]) * (values[j] + values[j - 1]);
            }
            prefix.push(acc);
        }
        Self {
            times,
            values,
            prefix,
            before,
        }
    }

    /// `∫_{t_0}^{t}` of the channel (negative for `t < t_0`).
    pub fn value_at(&self, t: f64) -> Result<f64, DdeError> {
        let (Some(&start), Some(&end)) = (self.times.first(), self.times.last()) else {
            return Err(DdeError::OutOfCoverage {
                t,
                start: f64::NAN,
                end: f64::NAN,
            });
        };
        if t < start {
            return Ok((t - start) * self.before);
        }
        if t > end {
            return Err(DdeError::OutOfCoverage { t, start, end });
        }
        // last stamp ≤ t; at a repeated stamp this is the post-jump record
        let j = self.times.partition_point(|&s| s <= t) - 1;
        if j + 1 == self.times.len() || t == self.times[j] {
            return Ok(self.prefix[j]);
        }
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        let vt = v0 + (t - t0) / (t1 - t0) * (v1 - v0);
        Ok(self.prefix[j] + 0.5 * (t - t0) * (v0 + vt))
    }

    pub fn integral(&self, from: f64, to: f64) -> Result<f64, DdeError> {
        Ok(self.value_at(to)? - self.value_at(from)?)
    }

    pub fn end(&self) -> Option<f64> {
        self.times.last().copied()
    }
}

/// `∫_{t−τ}^{t}` of the channel.
pub fn running_integral(channel: &CumulativeIntegral, t: f64, tau: f64) -> Result<f64, DdeError> {
    channel.integral(t - tau, t)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn impulse_scales_pinned_norms(
            e in proptest::collection::vec(-10.0..10.0f64, 8),
            d in -2.5..1.5f64,
            mask in proptest::collection::vec(any::<bool>(), 4),
        ) {
            let pinned: Vec<usize> = (0..4).filter(|&i| mask[i]).collect();
            let mut after = e.clone();
            apply_impulse_event(&mut after, 2, &pinned, d);
            for i in 0..4 {
                let before = (e[2 * i].powi(2) + e[2 * i + 1].powi(2)).sqrt();
                let now = (after[2 * i].powi(2) + after[2 * i + 1].powi(2)).sqrt();
                let expected = if mask[i] { (1.0 + d).abs() * before } else { before };
                prop_assert!((now - expected).abs() <= 1e-12 * (1.0 + before));
            }
        }
    }
}
