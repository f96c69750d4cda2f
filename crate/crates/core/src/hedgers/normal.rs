use super::{
    check_alpha, check_len, rated_play, ActionDistribution, ConfidenceVector, GainVector, Hedger,
    Step,
};
use crate::error::{Error, Result};
use crate::potential::{self, PotentialParams};

/// NormalHedge state: the discounted regrets `R_i` of the master to each
/// action.
///
/// The regret recursion is `R_i ← (1−α)·R_i + s_i·(g_i − g_A)` where
/// `s_i` is the expert's confidence (1 in the plain game).
#[derive(Debug, Clone, PartialEq)]
pub struct RegretState {
    regrets: Vec<f64>,
    alpha: f64,
    params: PotentialParams,
    iteration: u64,
}

impl RegretState {
    pub fn new(n_actions: usize, alpha: f64, params: PotentialParams) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::invalid("n_actions", "need at least one action"));
        }
        check_alpha(alpha)?;
        Ok(Self {
            regrets: vec![0.0; n_actions],
            alpha,
            params,
            iteration: 0,
        })
    }

    /// Builds a state from explicit regrets, e.g. to evaluate weights at a
    /// given point.
    pub fn from_regrets(regrets: Vec<f64>, alpha: f64, params: PotentialParams) -> Result<Self> {
        let mut state = Self::new(regrets.len(), alpha, params)?;
        if let Some(bad) = regrets.iter().find(|r| !r.is_finite()) {
            return Err(Error::invalid(
                "regrets",
                format!("non-finite regret {bad}"),
            ));
        }
        state.regrets = regrets;
        Ok(state)
    }

    pub fn regrets(&self) -> &[f64] {
        &self.regrets
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn max_regret(&self) -> f64 {
        self.regrets
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// NormalHedge weights: `p_i ∝ Φ'(√α·R_i)`, uniform if no regret is
    /// positive.
    ///
    /// Normalization happens in log space so large regrets cannot
    /// overflow.
    pub fn weights(&self) -> ActionDistribution {
        let scale = self.alpha.sqrt();
        let logs: Vec<f64> = self
            .regrets
            .iter()
            .map(|&r| potential::ln_phi_prime(scale * r, &self.params))
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return ActionDistribution::uniform(self.regrets.len());
        }
        ActionDistribution::from_weights(logs.into_iter().map(|l| (l - top).exp()).collect())
    }

    /// Average potential `Ψ = (1/N)·Σ Φ(√α·R_i)`, saturating at
    /// `f64::MAX`.
    pub fn avg_potential(&self) -> f64 {
        let scale = self.alpha.sqrt();
        let n = self.regrets.len() as f64;
        let phis = self
            .regrets
            .iter()
            .map(|&r| potential::phi_unchecked(scale * r, &self.params));
        let total: f64 = phis.clone().sum();
        if total.is_finite() {
            total / n
        } else {
            phis.map(|p| p / n).sum::<f64>().min(f64::MAX)
        }
    }

    /// True if some `Φ(√α·R_i)` evaluation has saturated.
    pub fn potential_saturated(&self) -> bool {
        let scale = self.alpha.sqrt();
        self.regrets
            .iter()
            .any(|&r| potential::saturates(scale * r, &self.params))
    }

    /// Applies one round of the regret recursion given the master gain and
    /// optional per-action regret multipliers.
    pub fn accumulate(
        &mut self,
        gains: &GainVector,
        master_gain: f64,
        scale: Option<&[f64]>,
    ) -> Result<()> {
        check_len(self.regrets.len(), gains.len())?;
        let keep = 1.0 - self.alpha;
        match scale {
            None => {
                for (r, g) in self.regrets.iter_mut().zip(gains.as_slice()) {
                    *r = keep * *r + (g - master_gain);
                }
            }
            Some(s) => {
                check_len(self.regrets.len(), s.len())?;
                for ((r, g), s) in self.regrets.iter_mut().zip(gains.as_slice()).zip(s) {
                    *r = keep * *r + s * (g - master_gain);
                }
            }
        }
        self.iteration += 1;
        Ok(())
    }

    /// One plain NormalHedge round; returns the master gain.
    pub fn update(&mut self, gains: &GainVector) -> Result<f64> {
        Ok(self.step(gains, None)?.master_gain)
    }
}

impl Hedger for RegretState {
    fn n_actions(&self) -> usize {
        self.regrets.len()
    }

    fn distribution(&self) -> ActionDistribution {
        self.weights()
    }

    fn step(&mut self, gains: &GainVector, confidences: Option<&ConfidenceVector>) -> Result<Step> {
        check_len(self.regrets.len(), gains.len())?;
        let base = self.weights();
        let (played, regret_scale) = match confidences {
            None => (base, None),
            Some(conf) => {
                let (played, scale) = rated_play(&base, conf, gains)?;
                (played, Some(scale))
            }
        };
        let master_gain = played.expectation(gains.as_slice());
        self.accumulate(gains, master_gain, regret_scale.as_deref())?;
        Ok(Step {
            played,
            master_gain,
            regret_scale,
        })
    }
}
