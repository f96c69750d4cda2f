//! Online prediction of a binary sequence emitted by a hidden Markov model.
//!
//! Every candidate parameter vector runs its own forward filter. Each
//! (candidate, state) pair is a confidence-rated expert that predicts the
//! state's emission probability with confidence equal to the filter's
//! probability of that state. NormalHedge aggregates the experts under L1
//! loss; a Bayesian average over candidates is reported for contrast.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hedgers::{
    check_alpha, confidence_wrap, ActionDistribution, ConfidenceVector, GainVector, Hedger,
    RegretState,
};
use crate::potential::PotentialParams;
use crate::rng::SimRng;

/// Tolerance on row sums of stochastic matrices.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// Parameters of a stationary HMM over the alphabet `{0, 1}`.
///
/// `initial` is the law of the state before the first observation; the
/// first symbol is emitted after one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    transition: Vec<Vec<f64>>,
    /// `emission[s] = [P(x=0 | s), P(x=1 | s)]`.
    emission: Vec<[f64; 2]>,
    initial: Vec<f64>,
}

fn check_stochastic(name: &'static str, row: &[f64]) -> Result<()> {
    if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::invalid(
            name,
            format!("entries must be non-negative, got {row:?}"),
        ));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::invalid(name, format!("row sums to {sum}, not 1")));
    }
    Ok(())
}

impl HmmParams {
    pub fn new(
        transition: Vec<Vec<f64>>,
        emission: Vec<[f64; 2]>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let params = Self {
            transition,
            emission,
            initial,
        };
        params.validate()?;
        Ok(params)
    }

    /// Two states with self-transition probability `stay`, a uniform
    /// initial law and `P(x=1 | s) = emit_one[s]`.
    pub fn two_state(stay: f64, emit_one: [f64; 2]) -> Result<Self> {
        Self::new(
            vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
            emit_one.iter().map(|&p| [1.0 - p, p]).collect(),
            vec![0.5, 0.5],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.initial.len();
        if k == 0 {
            return Err(Error::invalid("k", "need at least one hidden state"));
        }
        check_stochastic("initial", &self.initial)?;
        if self.transition.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: self.transition.len(),
            });
        }
        for row in &self.transition {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            check_stochastic("transition", row)?;
        }
        if self.emission.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: self.emission.len(),
            });
        }
        for row in &self.emission {
            check_stochastic("emission", row)?;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.initial.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn emission(&self) -> &[[f64; 2]] {
        &self.emission
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `qᵀ = posteriorᵀ·transition`.
    pub fn predict_state(&self, posterior: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut q = vec![0.0; k];
        for (from, &w) in posterior.iter().enumerate() {
            for (to, qt) in q.iter_mut().enumerate() {
                *qt += w * self.transition[from][to];
            }
        }
        q
    }

    /// `P(x = 1)` under the state law `q`.
    pub fn symbol_probability(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.emission).map(|(w, e)| w * e[1]).sum()
    }

    /// Draws `len` observations.
    pub fn sample(&self, len: usize, rng: &mut SimRng) -> Vec<u8> {
        let mut state = rng.categorical(&self.initial);
        (0..len)
            .map(|_| {
                state = rng.categorical(&self.transition[state]);
                u8::from(rng.bernoulli(self.emission[state][1]))
            })
            .collect()
    }
}

fn check_bit(observation: u8) -> Result<()> {
    if observation > 1 {
        return Err(Error::invalid(
            "observation",
            format!("must be 0 or 1, got {observation}"),
        ));
    }
    Ok(())
}

/// Result of one forward-filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub posterior: Vec<f64>,
    /// `P(x_t | x_{1:t−1})`.
    pub likelihood: f64,
    /// The observation had zero probability; `posterior` is then the
    /// predicted state law.
    pub impossible: bool,
}

/// One predict-correct step of the forward algorithm.
pub fn filter_update(posterior: &[f64], params: &HmmParams, observation: u8) -> Result<FilterStep> {
    check_bit(observation)?;
    if posterior.len() != params.k() {
        return Err(Error::LengthMismatch {
            expected: params.k(),
            got: posterior.len(),
        });
    }
    check_distribution_loose(posterior)?;
    let q = params.predict_state(posterior);
    let o = observation as usize;
    let joint: Vec<f64> = q
        .iter()
        .zip(params.emission())
        .map(|(w, e)| w * e[o])
        .collect();
    let z: f64 = joint.iter().sum();
    if z > 0.0 {
        Ok(FilterStep {
            posterior: joint.into_iter().map(|j| j / z).collect(),
            likelihood: z,
            impossible: false,
        })
    } else {
        Ok(FilterStep {
            posterior: q,
            likelihood: 0.0,
            impossible: true,
        })
    }
}

/// Renormalized posteriors drift by a few ulps; allow that.
fn check_distribution_loose(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() < 1e-9 {
        Ok(())
    } else {
        Err(Error::invalid(
            "posterior",
            format!("not a distribution: {p:?}"),
        ))
    }
}

/// A candidate's running filter.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFilter {
    pub params: HmmParams,
    /// `P(S_{t} | x_{1:t})` after `t` observations.
    pub posterior: Vec<f64>,
    /// `ln P(x_{1:t})`; `-inf` once an impossible symbol was seen.
    pub log_likelihood: f64,
    /// Number of zero-likelihood observations.
    pub impossible_events: usize,
}

impl CandidateFilter {
    pub fn new(params: HmmParams) -> Self {
        let posterior = params.initial().to_vec();
        Self {
            params,
            posterior,
            log_likelihood: 0.0,
            impossible_events: 0,
        }
    }

    /// State law for the next observation.
    pub fn predictive_state(&self) -> Vec<f64> {
        self.params.predict_state(&self.posterior)
    }

    /// `P(x_{t+1} = 1 | x_{1:t})`.
    pub fn predict(&self) -> f64 {
        self.params.symbol_probability(&self.predictive_state())
    }

    pub fn observe(&mut self, observation: u8) -> Result<()> {
        let step = filter_update(&self.posterior, &self.params, observation)?;
        if step.impossible {
            self.impossible_events += 1;
            self.log_likelihood = f64::NEG_INFINITY;
        } else {
            self.log_likelihood += step.likelihood.ln();
        }
        self.posterior = step.posterior;
        Ok(())
    }
}

/// One confidence-rated expert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertOutput {
    /// Probability of symbol 1.
    pub prediction: f64,
    pub confidence: f64,
}

/// Filters for every candidate. Expert `m·k + s` is state `s` of
/// candidate `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBank {
    filters: Vec<CandidateFilter>,
    k: usize,
}

impl CandidateBank {
    pub fn new(candidates: Vec<HmmParams>) -> Result<Self> {
        let k = candidates
            .first()
            .ok_or_else(|| Error::invalid("bank", "need at least one candidate"))?
            .k();
        for c in &candidates {
            c.validate()?;
            if c.k() != k {
                return Err(Error::invalid(
                    "bank",
                    "every candidate must have the same number of states",
                ));
            }
        }
        Ok(Self {
            filters: candidates.into_iter().map(CandidateFilter::new).collect(),
            k,
        })
    }

    pub fn filters(&self) -> &[CandidateFilter] {
        &self.filters
    }

    pub fn n_candidates(&self) -> usize {
        self.filters.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_experts(&self) -> usize {
        self.filters.len() * self.k
    }

    /// Experts belonging to candidate `m`.
    pub fn experts_of(&self, m: usize) -> std::ops::Range<usize> {
        m * self.k..(m + 1) * self.k
    }

    pub fn observe(&mut self, observation: u8) -> Result<()> {
        self.filters
            .iter_mut()
            .try_for_each(|f| f.observe(observation))
    }
}

/// Outputs for the next symbol. Confidences are each candidate's
/// predictive state law, so a candidate's experts' confidences sum to 1.
pub fn expert_outputs(bank: &CandidateBank) -> Vec<ExpertOutput> {
    bank.filters
        .iter()
        .flat_map(|f| {
            f.predictive_state()
                .into_iter()
                .zip(f.params.emission())
                .map(|(confidence, e)| ExpertOutput {
                    prediction: e[1],
                    confidence: confidence.clamp(0.0, 1.0),
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `1 − 2ℓ` with L1 loss `ℓ = 1 − p(x)`, i.e. `2·p(x) − 1`.
pub fn l1_gain(prediction: f64, observation: u8) -> f64 {
    2.0 * probability_of(prediction, observation) - 1.0
}

/// `1 − p(x)`.
pub fn l1_loss(prediction: f64, observation: u8) -> f64 {
    1.0 - probability_of(prediction, observation)
}

fn probability_of(prediction: f64, observation: u8) -> f64 {
    if observation == 1 {
        prediction
    } else {
        1.0 - prediction
    }
}

/// `Σ (p_i·c_i/Z)·prediction_i`; uniform mixture if every expert abstains.
pub fn aggregate_predict(outputs: &[ExpertOutput], weights: &ActionDistribution) -> Result<f64> {
    let conf = ConfidenceVector::new(outputs.iter().map(|o| o.confidence).collect())?;
    let preds: Vec<f64> = outputs.iter().map(|o| o.prediction).collect();
    // Predictions are in [0,1], so they pass as gains.
    let as_gains = GainVector::new(preds.clone())?;
    match confidence_wrap(weights, &conf, &as_gains) {
        Ok((effective, _)) => Ok(effective.expectation(&preds)),
        Err(Error::AllAbstain) => Ok(ActionDistribution::uniform(preds.len()).expectation(&preds)),
        Err(e) => Err(e),
    }
}

/// Candidate posterior under a uniform prior, from log-likelihoods.
pub fn bayes_posterior(log_likelihoods: &[f64]) -> Result<Vec<f64>> {
    let top = log_likelihoods
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Err(Error::DegenerateBank);
    }
    let w: Vec<f64> = log_likelihoods.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Posterior-weighted average of each candidate's predictive probability.
pub fn bayes_average_predict(bank: &CandidateBank) -> Result<f64> {
    let lls: Vec<f64> = bank.filters.iter().map(|f| f.log_likelihood).collect();
    let post = bayes_posterior(&lls)?;
    Ok(post
        .iter()
        .zip(&bank.filters)
        .map(|(w, f)| w * f.predict())
        .sum())
}

/// Where the observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HmmSource {
    Sampled { truth: HmmParams },
    Sequence { observations: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmExperimentConfig {
    pub source: HmmSource,
    pub bank: Vec<HmmParams>,
    /// Index of the true model in `bank`, for the weight-mass trace.
    pub truth_candidate: Option<usize>,
    pub horizon: usize,
    pub alpha: f64,
    pub c: f64,
    pub seed: u64,
}

impl HmmExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        if let Some(t) = self.truth_candidate {
            if t >= self.bank.len() {
                return Err(Error::invalid(
                    "truth_candidate",
                    format!("{t} is not in a bank of {}", self.bank.len()),
                ));
            }
        }
        match &self.source {
            HmmSource::Sampled { truth } => truth.validate(),
            HmmSource::Sequence { observations } => {
                observations.iter().try_for_each(|&o| check_bit(o))?;
                if observations.len() < self.horizon {
                    return Err(Error::ScriptExhausted {
                        iteration: observations.len(),
                        rows: observations.len(),
                    });
                }
                Ok(())
            }
        }
    }
}

/// One step of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmStepRecord {
    pub iteration: usize,
    pub observation: u8,
    pub normalhedge_prediction: f64,
    pub normalhedge_loss: f64,
    pub bayes_prediction: f64,
    pub bayes_loss: f64,
    pub candidate_losses: Vec<f64>,
    /// Base NormalHedge weight on the true candidate's experts, before the
    /// step's update.
    pub truth_mass: Option<f64>,
    /// `max_i R_i` after the update.
    pub regret_best: f64,
    pub avg_potential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmReport {
    pub steps: Vec<HmmStepRecord>,
    pub cumulative_normalhedge_loss: f64,
    pub cumulative_bayes_loss: f64,
    pub cumulative_candidate_losses: Vec<f64>,
    /// `Σ_t (1−α)^{T−t}·ℓ_t` for each candidate.
    pub discounted_candidate_losses: Vec<f64>,
    pub discounted_normalhedge_loss: f64,
    /// Candidate with the smallest cumulative loss.
    pub best_candidate: usize,
    /// Base NormalHedge weight on the true candidate after the last step.
    pub final_truth_mass: Option<f64>,
    /// First iteration whose post-update truth mass reached 0.9.
    pub first_truth_mass_90: Option<usize>,
    pub impossible_events: Vec<usize>,
}

impl HmmReport {
    /// Per-step losses of the best candidate in hindsight.
    pub fn best_candidate_losses(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.candidate_losses[self.best_candidate])
            .collect()
    }
}

/// Runs the prediction experiment.
pub fn run_hmm_experiment(config: &HmmExperimentConfig) -> Result<HmmReport> {
    config.validate()?;
    let observations = match &config.source {
        HmmSource::Sampled { truth } => truth.sample(config.horizon, &mut SimRng::new(config.seed)),
        HmmSource::Sequence { observations } => observations[..config.horizon].to_vec(),
    };
    let mut bank = CandidateBank::new(config.bank.clone())?;
    let n = bank.n_experts();
    let mut hedger = RegretState::new(n, config.alpha, PotentialParams::new_unguarded(config.c)?)?;
    let truth_range = config.truth_candidate.map(|m| bank.experts_of(m));

    let keep = 1.0 - config.alpha;
    let mut steps = Vec::with_capacity(config.horizon);
    let mut cum_candidates = vec![0.0; bank.n_candidates()];
    let mut disc_candidates = vec![0.0; bank.n_candidates()];
    let (mut cum_nh, mut cum_bayes, mut disc_nh) = (0.0, 0.0, 0.0);
    let mut first_90 = None;

    for (j, &x) in observations.iter().enumerate() {
        let mut run = || -> Result<HmmStepRecord> {
            let outputs = expert_outputs(&bank);
            let base = hedger.weights();
            let truth_mass = truth_range.clone().map(|r| base.mass(r));
            let nh_pred = aggregate_predict(&outputs, &base)?;
            let bayes_pred = bayes_average_predict(&bank)?;
            let candidate_losses: Vec<f64> = bank
                .filters()
                .iter()
                .map(|f| l1_loss(f.predict(), x))
                .collect();

            let gains =
                GainVector::new(outputs.iter().map(|o| l1_gain(o.prediction, x)).collect())?;
            let conf = ConfidenceVector::new(outputs.iter().map(|o| o.confidence).collect())?;
            hedger.step(&gains, Some(&conf))?;
            bank.observe(x)?;
            Ok(HmmStepRecord {
                iteration: j,
                observation: x,
                normalhedge_prediction: nh_pred,
                normalhedge_loss: l1_loss(nh_pred, x),
                bayes_prediction: bayes_pred,
                bayes_loss: l1_loss(bayes_pred, x),
                candidate_losses,
                truth_mass,
                regret_best: hedger.max_regret(),
                avg_potential: hedger.avg_potential(),
            })
        };
        let rec = run().map_err(|e| e.at_iteration(j))?;
        cum_nh += rec.normalhedge_loss;
        cum_bayes += rec.bayes_loss;
        disc_nh = keep * disc_nh + rec.normalhedge_loss;
        for (m, &l) in rec.candidate_losses.iter().enumerate() {
            cum_candidates[m] += l;
            disc_candidates[m] = keep * disc_candidates[m] + l;
        }
        if first_90.is_none() {
            if let Some(r) = &truth_range {
                if hedger.weights().mass(r.clone()) >= 0.9 {
                    first_90 = Some(j);
                }
            }
        }
        steps.push(rec);
    }

    let best_candidate = cum_candidates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(m, _)| m)
        .unwrap_or(0);
    Ok(HmmReport {
        steps,
        cumulative_normalhedge_loss: cum_nh,
        cumulative_bayes_loss: cum_bayes,
        cumulative_candidate_losses: cum_candidates,
        discounted_candidate_losses: disc_candidates,
        discounted_normalhedge_loss: disc_nh,
        best_candidate,
        final_truth_mass: truth_range.map(|r| hedger.weights().mass(r)),
        first_truth_mass_90: first_90,
        impossible_events: bank.filters().iter().map(|f| f.impossible_events).collect(),
    })
}

/// The bank used by the convergence check: the truth (sticky, emissions
/// 0.1/0.9) first, then four misspecified alternatives that are never more
/// decisive than the truth.
pub fn convergence_fixture_bank() -> Vec<HmmParams> {
    [
        (0.95, [0.1, 0.9]),
        (0.95, [0.3, 0.7]),
        (0.6, [0.1, 0.9]),
        (0.95, [0.5, 0.5]),
        (0.8, [0.25, 0.6]),
    ]
    .into_iter()
    .map(|(stay, e)| HmmParams::two_state(stay, e).expect("valid fixture"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sticky() -> HmmParams {
        HmmParams::two_state(0.9, [0.2, 0.7]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(HmmParams::new(
            vec![vec![0.5, 0.6], vec![0.5, 0.5]],
            vec![[1.0, 0.0]; 2],
            vec![0.5, 0.5]
        )
        .is_err());
        assert!(HmmParams::new(vec![vec![1.0]], vec![[0.5, 0.5]], vec![0.5, 0.5]).is_err());
        assert!(HmmParams::new(vec![vec![1.0]], vec![[-0.1, 1.1]], vec![1.0]).is_err());
        assert!(HmmParams::new(vec![vec![1.0]], vec![[0.3, 0.7]], vec![1.0]).is_ok());
    }

    #[test]
    fn single_state_posterior_is_constant() {
        let p = HmmParams::new(vec![vec![1.0]], vec![[0.3, 0.7]], vec![1.0]).unwrap();
        for x in [0, 1, 1, 0] {
            assert_eq!(filter_update(&[1.0], &p, x).unwrap().posterior, vec![1.0]);
        }
    }

    #[test]
    fn deterministic_emission_collapses() {
        let p = HmmParams::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![[1.0, 0.0], [0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let s = filter_update(&[0.5, 0.5], &p, 0).unwrap();
        assert_eq!(s.posterior, vec![1.0, 0.0]);
        assert!(!s.impossible);
        let s = filter_update(&s.posterior, &p, 1).unwrap();
        assert!(s.impossible);
        assert_eq!(s.posterior, vec![1.0, 0.0]);
        assert!(filter_update(&[0.5, 0.5], &p, 2).is_err());
    }

    #[test]
    fn l1_gain_map() {
        assert_eq!(l1_gain(1.0, 1), 1.0);
        assert_eq!(l1_loss(1.0, 1), 0.0);
        assert_eq!(l1_gain(0.5, 0), 0.0);
        assert_eq!(l1_loss(0.5, 0), 0.5);
        assert_abs_diff_eq!(l1_loss(0.9, 0), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(l1_gain(0.9, 0), -0.8, epsilon = 1e-15);
    }

    #[test]
    fn expert_outputs_single_state() {
        let bank = CandidateBank::new(vec![HmmParams::new(
            vec![vec![1.0]],
            vec![[0.4, 0.6]],
            vec![1.0],
        )
        .unwrap()])
        .unwrap();
        assert_eq!(
            expert_outputs(&bank),
            vec![ExpertOutput {
                prediction: 0.6,
                confidence: 1.0
            }]
        );
    }

    /// Posteriors frozen from the mpmath oracle for a 2×2 bank after the
    /// sequence 1, 1, 0, 1.
    #[test]
    fn expert_outputs_fixture() {
        let mut bank = CandidateBank::new(vec![
            sticky(),
            HmmParams::two_state(0.6, [0.5, 0.95]).unwrap(),
        ])
        .unwrap();
        for x in [1, 1, 0, 1] {
            bank.observe(x).unwrap();
        }
        let out = expert_outputs(&bank);
        let preds: Vec<f64> = out.iter().map(|o| o.prediction).collect();
        assert_abs_diff_eq!(preds[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(preds[1], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(preds[2], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(preds[3], 0.95, epsilon = 1e-15);
        for (o, want) in out.iter().zip(HMM_FIXTURE_CONF) {
            assert_abs_diff_eq!(o.confidence, want, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(out[0].confidence + out[1].confidence, 1.0, epsilon = 1e-15);
    }

    const HMM_FIXTURE_CONF: [f64; 4] = [
        0.225_497_965_681_938_79,
        0.774_502_034_318_061_2,
        0.484_029_728_085_982_84,
        0.515_970_271_914_017_2,
    ];

    #[test]
    fn aggregate_predict_cases() {
        let one = [ExpertOutput {
            prediction: 0.3,
            confidence: 0.4,
        }];
        assert_abs_diff_eq!(
            aggregate_predict(&one, &ActionDistribution::uniform(1)).unwrap(),
            0.3,
            epsilon = 1e-15
        );
        let same = vec![
            ExpertOutput {
                prediction: 0.6,
                confidence: 0.2
            };
            4
        ];
        let w = ActionDistribution::from_weights(vec![0.1, 0.5, 0.3, 0.1]);
        assert_abs_diff_eq!(aggregate_predict(&same, &w).unwrap(), 0.6, epsilon = 1e-15);
        let abstain = vec![
            ExpertOutput {
                prediction: 0.2,
                confidence: 0.0,
            },
            ExpertOutput {
                prediction: 0.8,
                confidence: 0.0,
            },
        ];
        assert_abs_diff_eq!(
            aggregate_predict(&abstain, &ActionDistribution::uniform(2)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    /// `Σ p·c·pred / Σ p·c` for weights (0.5, 0.3, 0.2), confidences
    /// (0.9, 0.4, 0.7), predictions (0.1, 0.8, 0.6), from the oracle.
    #[test]
    fn aggregate_predict_three_expert_fixture() {
        let outputs: Vec<ExpertOutput> = [(0.1, 0.9), (0.8, 0.4), (0.6, 0.7)]
            .into_iter()
            .map(|(prediction, confidence)| ExpertOutput {
                prediction,
                confidence,
            })
            .collect();
        let w = ActionDistribution::from_weights(vec![0.5, 0.3, 0.2]);
        assert_abs_diff_eq!(
            aggregate_predict(&outputs, &w).unwrap(),
            AGGREGATE_FIXTURE,
            epsilon = 1e-15
        );
    }

    const AGGREGATE_FIXTURE: f64 = 0.316_901_408_450_704_2;

    #[test]
    fn bayes_average_cases() {
        let bank = CandidateBank::new(vec![sticky()]).unwrap();
        assert_abs_diff_eq!(
            bayes_average_predict(&bank).unwrap(),
            bank.filters()[0].predict(),
            epsilon = 1e-15
        );
        let a = HmmParams::two_state(0.9, [0.5, 0.5]).unwrap();
        let b = HmmParams::two_state(0.3, [0.5, 0.5]).unwrap();
        let mut bank = CandidateBank::new(vec![a, b]).unwrap();
        bank.observe(1).unwrap();
        // Both assign probability 1/2 to everything.
        assert_abs_diff_eq!(bayes_average_predict(&bank).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(
            bayes_posterior(&[f64::NEG_INFINITY; 3]),
            Err(Error::DegenerateBank)
        ));
    }

    /// Exhaustive sum over hidden paths `S_0..S_t`.
    fn brute_force(params: &HmmParams, xs: &[u8]) -> (Vec<f64>, f64) {
        let k = params.k();
        let t = xs.len();
        let mut joint_last = vec![0.0; k];
        let mut total = 0.0;
        for code in 0..k.pow(t as u32 + 1) {
            let mut path = Vec::with_capacity(t + 1);
            let mut c = code;
            for _ in 0..=t {
                path.push(c % k);
                c /= k;
            }
            let mut p = params.initial()[path[0]];
            for (i, &x) in xs.iter().enumerate() {
                p *= params.transition()[path[i]][path[i + 1]]
                    * params.emission()[path[i + 1]][x as usize];
            }
            joint_last[path[t]] += p;
            total += p;
        }
        (joint_last.iter().map(|j| j / total).collect(), total)
    }

    fn random_params(rng: &mut SimRng) -> HmmParams {
        let mut row = || {
            let a = 0.05 + 0.9 * rng.uniform();
            vec![a, 1.0 - a]
        };
        let transition = vec![row(), row()];
        let e: Vec<[f64; 2]> = (0..2)
            .map(|_| {
                let r = row();
                [r[0], r[1]]
            })
            .collect();
        let initial = row();
        HmmParams::new(transition, e, initial).unwrap()
    }

    #[test]
    fn filter_matches_path_enumeration() {
        let mut rng = SimRng::new(2024);
        for _ in 0..20 {
            let params = random_params(&mut rng);
            let xs = params.sample(10, &mut rng);
            let mut f = CandidateFilter::new(params.clone());
            for t in 1..=xs.len() {
                f.observe(xs[t - 1]).unwrap();
                let (post, lik) = brute_force(&params, &xs[..t]);
                for (a, b) in f.posterior.iter().zip(&post) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
                assert_abs_diff_eq!(f.log_likelihood, lik.ln(), epsilon = 1e-10);
                let (_, lik1) = brute_force(&params, &[&xs[..t], &[1]].concat());
                assert_abs_diff_eq!(f.predict(), lik1 / lik, epsilon = 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn posteriors_stay_distributions(seed in any::<u64>(), len in 1usize..60) {
            let mut rng = SimRng::new(seed);
            let params = random_params(&mut rng);
            let xs = params.sample(len, &mut rng);
            let mut bank = CandidateBank::new(vec![params, random_params(&mut rng)]).unwrap();
            for x in xs {
                let out = expert_outputs(&bank);
                let w = ActionDistribution::from_weights((0..4).map(|_| rng.uniform()).collect());
                let agg = aggregate_predict(&out, &w).unwrap();
                let lo = out.iter().map(|o| o.prediction).fold(f64::INFINITY, f64::min);
                let hi = out.iter().map(|o| o.prediction).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(agg >= lo - 1e-12 && agg <= hi + 1e-12);
                for m in 0..2 {
                    let s: f64 = out[bank.experts_of(m)].iter().map(|o| o.confidence).sum();
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
                bank.observe(x).unwrap();
                for f in bank.filters() {
                    prop_assert!(f.posterior.iter().all(|&p| (0.0..=1.0).contains(&p)));
                    prop_assert!((f.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
