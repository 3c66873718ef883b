//! Benchmark fixtures.

use clustersync::dde::DelaySystem;
use clustersync::experiment::Experiment;
use clustersync::preset;

/// Builds a named preset experiment.
pub fn experiment(name: &str) -> Experiment {
    preset(name).and_then(|c| c.build()).expect("preset builds")
}

/// `x'(t) = -x(t - 1)`.
pub struct DelayedDecay;

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
