//! Hedging algorithms for the discounted allocation game.
//!
//! [`RegretState`] is NormalHedge: weights proportional to `Φ'(√α·R_i)`.
//! [`HedgeState`] is exponential weighting on discounted gains. Both
//! implement [`Hedger`] so the engine can drive either one.

mod bounds;
mod confidence;
mod hedge;
mod normal;

pub use bounds::{hedge_regret_bound, normalhedge_regret_bound, tuned_eta, EtaVariant};
pub use confidence::confidence_wrap;
pub use hedge::HedgeState;
pub use normal::RegretState;

use crate::error::{Error, Result};

/// Slack allowed beyond `[-1, 1]` before a gain is rejected.
pub const GAIN_RANGE_SLACK: f64 = 1e-9;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("must lie in (0, 1], got {alpha}"),
        ))
    }
}

/// Per-iteration gains of the `N` actions, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::invalid("gains", "need at least one action"));
        }
        for (index, &value) in gains.iter().enumerate() {
            if value.is_nan() || value.abs() > 1.0 + GAIN_RANGE_SLACK {
                return Err(Error::GainOutOfRange { index, value });
            }
        }
        Ok(Self(gains))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Confidence levels in `[0, 1]`; zero means the expert abstains.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceVector(Vec<f64>);

impl ConfidenceVector {
    pub fn new(confidences: Vec<f64>) -> Result<Self> {
        for &c in &confidences {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::invalid(
                    "confidence",
                    format!("{c} is outside [0, 1]"),
                ));
            }
        }
        Ok(Self(confidences))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A probability vector over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution(Vec<f64>);

impl ActionDistribution {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Normalizes non-negative weights. Falls back to uniform when every
    /// weight is zero.
    pub fn from_weights(mut weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|&w| w >= 0.0));
        let total: f64 = weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            weights.iter_mut().for_each(|w| *w /= total);
            Self(weights)
        } else {
            Self::uniform(weights.len())
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ p_i·v_i`.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), values.len());
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Total probability assigned to `range`.
    pub fn mass(&self, range: std::ops::Range<usize>) -> f64 {
        self.0[range].iter().sum()
    }
}

/// What a hedger played in one iteration.
#[derive(Debug, Clone)]
pub struct Step {
    /// The distribution the master actually used (after any confidence
    /// reweighting).
    pub played: ActionDistribution,
    /// `g_A = Σ played_i·g_i`.
    pub master_gain: f64,
    /// Multipliers applied to the instantaneous regrets `g_i − g_A`.
    /// `None` means all ones; all zeros when every expert abstained.
    pub regret_scale: Option<Vec<f64>>,
}

/// Common interface of the hedging algorithms.
pub trait Hedger: Send {
    fn n_actions(&self) -> usize;

    /// Distribution for the current iteration.
    fn distribution(&self) -> ActionDistribution;

    /// Reveals this iteration's gains, optionally with expert confidences,
    /// and advances the internal state.
    fn step(&mut self, gains: &GainVector, confidences: Option<&ConfidenceVector>) -> Result<Step>;
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// Distribution and regret multipliers for a confidence-rated step.
///
/// When every expert abstains the master plays uniformly and all regret
/// multipliers are zero, so the step only applies the discount.
pub(crate) fn rated_play(
    base: &ActionDistribution,
    confidences: &ConfidenceVector,
    gains: &GainVector,
) -> Result<(ActionDistribution, Vec<f64>)> {
    match confidence_wrap(base, confidences, gains) {
        Ok((played, _)) => Ok((played, confidences.as_slice().to_vec())),
        Err(Error::AllAbstain) => Ok((
            ActionDistribution::uniform(base.len()),
            vec![0.0; base.len()],
        )),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_vector_range_is_enforced() {
        assert!(GainVector::new(vec![1.0, -1.0, 0.3]).is_ok());
        assert!(GainVector::new(vec![1.0 + 5e-10]).is_ok());
        assert!(matches!(
            GainVector::new(vec![0.0, 1.01]),
            Err(Error::GainOutOfRange { index: 1, .. })
        ));
        assert!(GainVector::new(vec![f64::NAN]).is_err());
        assert!(GainVector::new(vec![]).is_err());
    }

    #[test]
    fn confidence_range_is_enforced() {
        assert!(ConfidenceVector::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(ConfidenceVector::new(vec![-0.1]).is_err());
        assert!(ConfidenceVector::new(vec![1.5]).is_err());
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let d = ActionDistribution::from_weights(vec![0.0; 4]);
        assert_eq!(d.as_slice(), &[0.25; 4]);
        let d = ActionDistribution::from_weights(vec![1.0, 3.0]);
        assert_eq!(d.as_slice(), &[0.25, 0.75]);
        assert_eq!(d.mass(1..2), 0.75);
    }
}
