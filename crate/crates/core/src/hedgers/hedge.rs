use super::{
    check_alpha, check_len, rated_play, ActionDistribution, ConfidenceVector, GainVector, Hedger,
    Step,
};
use crate::error::{Error, Result};

/// Discounted Hedge: `p_i ∝ exp(η·G_i)` with `G_i ← (1−α)·G_i + g_i`.
///
/// Only the discounted gains are stored; weights are recomputed from them
/// every round. This is the same as damping the previous weights by the
/// power `1−α` before the multiplicative update.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    discounted_gains: Vec<f64>,
    alpha: f64,
    eta: f64,
    iteration: u64,
}

impl HedgeState {
    pub fn new(n_actions: usize, alpha: f64, eta: f64) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::invalid("n_actions", "need at least one action"));
        }
        check_alpha(alpha)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(
                "eta",
                format!("must be positive, got {eta}"),
            ));
        }
        Ok(Self {
            discounted_gains: vec![0.0; n_actions],
            alpha,
            eta,
            iteration: 0,
        })
    }

    pub fn from_gains(discounted_gains: Vec<f64>, alpha: f64, eta: f64) -> Result<Self> {
        let mut state = Self::new(discounted_gains.len(), alpha, eta)?;
        state.discounted_gains = discounted_gains;
        Ok(state)
    }

    pub fn discounted_gains(&self) -> &[f64] {
        &self.discounted_gains
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Softmax of `η·G`, shifted by the maximum before exponentiating.
    pub fn weights(&self) -> ActionDistribution {
        let top = self
            .discounted_gains
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let eta = self.eta;
        ActionDistribution::from_weights(
            self.discounted_gains
                .iter()
                .map(|&g| (eta * (g - top)).exp())
                .collect(),
        )
    }

    pub fn update(&mut self, gains: &GainVector) -> Result<f64> {
        Ok(self.step(gains, None)?.master_gain)
    }
}

impl Hedger for HedgeState {
    fn n_actions(&self) -> usize {
        self.discounted_gains.len()
    }

    fn distribution(&self) -> ActionDistribution {
        self.weights()
    }

    fn step(&mut self, gains: &GainVector, confidences: Option<&ConfidenceVector>) -> Result<Step> {
        check_len(self.discounted_gains.len(), gains.len())?;
        let base = self.weights();
        let keep = 1.0 - self.alpha;
        let (played, regret_scale) = match confidences {
            None => {
                for (acc, g) in self.discounted_gains.iter_mut().zip(gains.as_slice()) {
                    *acc = keep * *acc + g;
                }
                (base, None)
            }
            Some(conf) => {
                let (played, scale) = rated_play(&base, conf, gains)?;
                for ((acc, g), s) in self
                    .discounted_gains
                    .iter_mut()
                    .zip(gains.as_slice())
                    .zip(&scale)
                {
                    *acc = keep * *acc + s * g;
                }
                (played, Some(scale))
            }
        };
        let master_gain = played.expectation(gains.as_slice());
        self.iteration += 1;
        Ok(Step {
            played,
            master_gain,
            regret_scale,
        })
    }
}
