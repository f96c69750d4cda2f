//! Gain-generating processes ("Nature").
//!
//! Random environments own a [`SimRng`] seeded per replica. Per iteration,
//! the good/bad environment draws one uniform for the shared good-set coin
//! and then fair signs for every bad expert in index order (see
//! [`SimRng::fair_signs`]); fair coins draw signs for every expert.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hedgers::{ConfidenceVector, GainVector};
use crate::rng::SimRng;

/// A source of per-iteration gains.
pub trait Environment: Send {
    fn n_actions(&self) -> usize;

    fn gains(&mut self, iteration: usize) -> Result<GainVector>;

    /// Confidences for the confidence-rated game, if this environment
    /// provides them.
    fn confidences(&mut self, _iteration: usize) -> Result<Option<ConfidenceVector>> {
        Ok(None)
    }
}

/// Shifting good/bad experts: all good experts share one biased coin with
/// mean gain `edge`; bad experts flip independent fair coins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodBadSpec {
    pub n_actions: usize,
    pub good_fraction: f64,
    pub edge: f64,
    /// Iterations between shifts of the good set.
    pub shift_period: usize,
    /// Index of the first good expert at iteration 0.
    #[serde(default)]
    pub start: usize,
}

impl GoodBadSpec {
    /// Environment with the shift period set to `⌈1/α⌉`.
    pub fn with_alpha(n_actions: usize, good_fraction: f64, edge: f64, alpha: f64) -> Self {
        Self {
            n_actions,
            good_fraction,
            edge,
            shift_period: default_shift_period(alpha),
            start: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_actions == 0 {
            return Err(Error::invalid("n_actions", "need at least one action"));
        }
        if !(self.good_fraction > 0.0 && self.good_fraction <= 1.0) {
            return Err(Error::invalid(
                "good_fraction",
                format!("must lie in (0, 1], got {}", self.good_fraction),
            ));
        }
        if !(self.edge > 0.0 && self.edge < 1.0) {
            return Err(Error::invalid(
                "edge",
                format!("must lie in (0, 1), got {}", self.edge),
            ));
        }
        if self.shift_period == 0 {
            return Err(Error::invalid("shift_period", "must be at least 1"));
        }
        Ok(())
    }

    /// `N_G = round(f·N)`, at least 1 and at most `N`.
    pub fn n_good(&self) -> usize {
        ((self.good_fraction * self.n_actions as f64).round() as usize).clamp(1, self.n_actions)
    }

    /// First index of the (cyclically contiguous) good set at `iteration`.
    pub fn good_offset(&self, iteration: usize) -> usize {
        let n = self.n_actions as u128;
        let shifts = (iteration / self.shift_period) as u128;
        ((self.start as u128 + shifts * self.n_good() as u128) % n) as usize
    }

    pub fn is_good(&self, action: usize, iteration: usize) -> bool {
        let n = self.n_actions;
        (action + n - self.good_offset(iteration)) % n < self.n_good()
    }

    pub fn good_set(&self, iteration: usize) -> Vec<usize> {
        let offset = self.good_offset(iteration);
        (0..self.n_good())
            .map(|m| (offset + m) % self.n_actions)
            .collect()
    }
}

/// `⌈1/α⌉`.
pub fn default_shift_period(alpha: f64) -> usize {
    // The small slack keeps 1/0.001 from rounding up to 1001.
    ((1.0 / alpha) - 1e-9).ceil().max(1.0) as usize
}

/// Draws one iteration of the good/bad environment.
pub fn good_bad_step(spec: &GoodBadSpec, iteration: usize, rng: &mut SimRng) -> GainVector {
    let n = spec.n_actions;
    let good_gain = if rng.bernoulli(0.5 + spec.edge / 2.0) {
        1.0
    } else {
        -1.0
    };
    let n_good = spec.n_good();
    let mut bad = vec![0.0; n - n_good];
    rng.fair_signs(&mut bad);
    let offset = spec.good_offset(iteration);
    let mut gains = vec![0.0; n];
    for m in 0..n_good {
        gains[(offset + m) % n] = good_gain;
    }
    // Bad experts in increasing index order.
    let mut next_bad = bad.into_iter();
    for (i, g) in gains.iter_mut().enumerate() {
        if (i + n - offset) % n >= n_good {
            *g = next_bad.next().expect("bad count matches");
        }
    }
    GainVector::new(gains).expect("±1 gains are in range")
}

/// A fixed gain matrix (`horizon × N`), optionally with confidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedSpec {
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidences: Option<Vec<Vec<f64>>>,
}

impl ScriptedSpec {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self {
            rows,
            confidences: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_confidences(mut self, confidences: Vec<Vec<f64>>) -> Result<Self> {
        self.confidences = Some(confidences);
        self.validate()?;
        Ok(self)
    }

    pub fn n_actions(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_actions();
        if n == 0 {
            return Err(Error::invalid(
                "script",
                "needs at least one row and one column",
            ));
        }
        for (j, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                }
                .at_iteration(j));
            }
            GainVector::new(row.clone()).map_err(|e| e.at_iteration(j))?;
        }
        if let Some(conf) = &self.confidences {
            if conf.len() != self.rows.len() {
                return Err(Error::LengthMismatch {
                    expected: self.rows.len(),
                    got: conf.len(),
                });
            }
            for (j, row) in conf.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: row.len(),
                    }
                    .at_iteration(j));
                }
                ConfidenceVector::new(row.clone()).map_err(|e| e.at_iteration(j))?;
            }
        }
        Ok(())
    }
}

pub fn scripted_step(spec: &ScriptedSpec, iteration: usize) -> Result<GainVector> {
    let row = spec.rows.get(iteration).ok_or(Error::ScriptExhausted {
        iteration,
        rows: spec.rows.len(),
    })?;
    GainVector::new(row.clone())
}

/// Serializable description of an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    GoodBad(GoodBadSpec),
    /// Every action flips an independent fair ±1 coin.
    FairCoins {
        n_actions: usize,
    },
    /// One action always gains +1, every other action −1.
    PersistentWinner {
        n_actions: usize,
        winner: usize,
    },
    Scripted(ScriptedSpec),
    /// The same gain vector at every iteration.
    Constant {
        gains: Vec<f64>,
    },
}

impl EnvironmentSpec {
    pub fn n_actions(&self) -> usize {
        match self {
            EnvironmentSpec::GoodBad(s) => s.n_actions,
            EnvironmentSpec::FairCoins { n_actions }
            | EnvironmentSpec::PersistentWinner { n_actions, .. } => *n_actions,
            EnvironmentSpec::Scripted(s) => s.n_actions(),
            EnvironmentSpec::Constant { gains } => gains.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentSpec::GoodBad(s) => s.validate(),
            EnvironmentSpec::FairCoins { n_actions } if *n_actions == 0 => {
                Err(Error::invalid("n_actions", "need at least one action"))
            }
            EnvironmentSpec::PersistentWinner { n_actions, winner } if winner >= n_actions => {
                Err(Error::invalid(
                    "winner",
                    format!("{winner} out of range for {n_actions} actions"),
                ))
            }
            EnvironmentSpec::Scripted(s) => s.validate(),
            EnvironmentSpec::Constant { gains } => GainVector::new(gains.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EnvironmentSpec::GoodBad(_) => "good_bad",
            EnvironmentSpec::FairCoins { .. } => "fair_coins",
            EnvironmentSpec::PersistentWinner { .. } => "persistent_winner",
            EnvironmentSpec::Scripted(_) => "scripted",
            EnvironmentSpec::Constant { .. } => "constant",
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment>> {
        self.validate()?;
        Ok(match self {
            EnvironmentSpec::GoodBad(spec) => Box::new(GoodBad {
                spec: spec.clone(),
                rng: SimRng::new(seed),
            }),
            EnvironmentSpec::FairCoins { n_actions } => Box::new(FairCoins {
                n_actions: *n_actions,
                rng: SimRng::new(seed),
            }),
            EnvironmentSpec::PersistentWinner { n_actions, winner } => Box::new(PersistentWinner {
                n_actions: *n_actions,
                winner: *winner,
            }),
            EnvironmentSpec::Scripted(spec) => Box::new(Scripted { spec: spec.clone() }),
            EnvironmentSpec::Constant { gains } => {
                Box::new(Constant(GainVector::new(gains.clone())?))
            }
        })
    }
}

pub struct GoodBad {
    spec: GoodBadSpec,
    rng: SimRng,
}

impl Environment for GoodBad {
    fn n_actions(&self) -> usize {
        self.spec.n_actions
    }

    fn gains(&mut self, iteration: usize) -> Result<GainVector> {
        Ok(good_bad_step(&self.spec, iteration, &mut self.rng))
    }
}

pub struct FairCoins {
    n_actions: usize,
    rng: SimRng,
}

impl Environment for FairCoins {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn gains(&mut self, _iteration: usize) -> Result<GainVector> {
        let mut g = vec![0.0; self.n_actions];
        self.rng.fair_signs(&mut g);
        GainVector::new(g)
    }
}

pub struct PersistentWinner {
    n_actions: usize,
    winner: usize,
}

impl Environment for PersistentWinner {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn gains(&mut self, _iteration: usize) -> Result<GainVector> {
        let mut g = vec![-1.0; self.n_actions];
        g[self.winner] = 1.0;
        GainVector::new(g)
    }
}

pub struct Constant(GainVector);

impl Environment for Constant {
    fn n_actions(&self) -> usize {
        self.0.len()
    }

    fn gains(&mut self, _iteration: usize) -> Result<GainVector> {
        Ok(self.0.clone())
    }
}

pub struct Scripted {
    spec: ScriptedSpec,
}

impl Environment for Scripted {
    fn n_actions(&self) -> usize {
        self.spec.n_actions()
    }

    fn gains(&mut self, iteration: usize) -> Result<GainVector> {
        scripted_step(&self.spec, iteration)
    }

    fn confidences(&mut self, iteration: usize) -> Result<Option<ConfidenceVector>> {
        match &self.spec.confidences {
            None => Ok(None),
            Some(rows) => {
                let row = rows.get(iteration).ok_or(Error::ScriptExhausted {
                    iteration,
                    rows: rows.len(),
                })?;
                Ok(Some(ConfidenceVector::new(row.clone())?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(n: usize, f: f64, edge: f64, period: usize) -> GoodBadSpec {
        GoodBadSpec {
            n_actions: n,
            good_fraction: f,
            edge,
            shift_period: period,
            start: 0,
        }
    }

    #[test]
    fn shift_period_default() {
        assert_eq!(default_shift_period(0.001), 1000);
        assert_eq!(default_shift_period(0.3), 4);
        assert_eq!(default_shift_period(1.0), 1);
    }

    #[test]
    fn good_set_shifts_by_block() {
        let s = spec(10, 0.3, 0.5, 5);
        assert_eq!(s.good_set(0), vec![0, 1, 2]);
        assert_eq!(s.good_set(4), vec![0, 1, 2]);
        assert_eq!(s.good_set(5), vec![3, 4, 5]);
        assert_eq!(s.good_set(15), vec![9, 0, 1]);
        assert!(s.is_good(0, 15) && s.is_good(9, 15) && !s.is_good(2, 15));
    }

    #[test]
    fn n_good_rounding() {
        assert_eq!(spec(1000, 0.001, 0.5, 1).n_good(), 1);
        assert_eq!(spec(10, 0.001, 0.5, 1).n_good(), 1);
        assert_eq!(spec(10, 0.25, 0.5, 1).n_good(), 3);
        assert_eq!(spec(10, 1.0, 0.5, 1).n_good(), 10);
    }

    #[test]
    fn good_experts_share_one_coin() {
        let s = spec(50, 0.2, 0.4, 7);
        let mut rng = SimRng::new(11);
        for j in 0..500 {
            let g = good_bad_step(&s, j, &mut rng);
            let set = s.good_set(j);
            let first = g.as_slice()[set[0]];
            assert!(set.iter().all(|&i| g.as_slice()[i] == first));
            assert!(g.as_slice().iter().all(|&x| x == 1.0 || x == -1.0));
        }
    }

    #[test]
    fn near_certain_edge() {
        // γ = 0.999999: P(−1) = 5·10⁻⁷, so ≤ 10 misses in 10⁵ draws is a
        // very wide band (expected 0.05).
        let s = spec(4, 0.5, 0.999_999, 10);
        let mut rng = SimRng::new(5);
        let plus = (0..100_000)
            .filter(|&j| good_bad_step(&s, j, &mut rng).as_slice()[s.good_set(j)[0]] == 1.0)
            .count();
        assert!(plus >= 99_990);
    }

    #[test]
    fn good_expert_mean_gain_is_edge() {
        let edge = 0.3;
        let s = spec(3, 0.34, edge, usize::MAX);
        let mut rng = SimRng::new(2024);
        let draws = 1_000_000;
        let total: f64 = (0..draws)
            .map(|j| good_bad_step(&s, j, &mut rng).as_slice()[0])
            .sum();
        let mean = total / draws as f64;
        // Per-draw variance 1 − γ² ≤ 1.
        assert!(
            (mean - edge).abs() < 5.0 * (1.0 / draws as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn clairvoyant_discounted_gain_approaches_edge_over_alpha() {
        let (alpha, edge) = (0.001, 0.8);
        let s = GoodBadSpec::with_alpha(20, 0.1, edge, alpha);
        let mut rng = SimRng::new(77);
        let mut discounted = 0.0;
        let mut sum = 0.0;
        let (burn_in, samples) = (20_000, 200_000);
        for j in 0..burn_in + samples {
            let g = good_bad_step(&s, j, &mut rng);
            let good = g.as_slice()[s.good_set(j)[0]];
            discounted = (1.0 - alpha) * discounted + good;
            if j >= burn_in {
                sum += discounted;
            }
        }
        let mean = sum / samples as f64;
        let target = edge / alpha;
        assert!(
            (mean - target).abs() < 0.05 * target,
            "mean {mean} vs {target}"
        );
    }

    #[test]
    fn scripted_rows_replay_verbatim() {
        let script = ScriptedSpec::new(vec![vec![0.0, 0.0], vec![0.5, -1.0]]).unwrap();
        assert_eq!(scripted_step(&script, 0).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(scripted_step(&script, 1).unwrap().as_slice(), &[0.5, -1.0]);
        assert!(matches!(
            scripted_step(&script, 2),
            Err(Error::ScriptExhausted { .. })
        ));
    }

    #[test]
    fn scripted_validation() {
        assert!(ScriptedSpec::new(vec![vec![0.0, 2.0]]).is_err());
        assert!(ScriptedSpec::new(vec![vec![0.0, 1.0], vec![0.0]]).is_err());
        assert!(ScriptedSpec::new(vec![]).is_err());
        let s = ScriptedSpec::new(vec![vec![0.0, 1.0]]).unwrap();
        assert!(s.clone().with_confidences(vec![vec![0.5, 1.5]]).is_err());
        assert!(s.with_confidences(vec![vec![0.5, 1.0]]).is_ok());
    }

    #[test]
    fn same_seed_same_stream() {
        let env = EnvironmentSpec::GoodBad(spec(30, 0.1, 0.6, 3));
        let mut a = env.build(99).unwrap();
        let mut b = env.build(99).unwrap();
        for j in 0..50 {
            assert_eq!(a.gains(j).unwrap(), b.gains(j).unwrap());
        }
    }

    #[test]
    fn persistent_winner_and_fair_coins() {
        let mut w = EnvironmentSpec::PersistentWinner {
            n_actions: 3,
            winner: 1,
        }
        .build(0)
        .unwrap();
        assert_eq!(w.gains(0).unwrap().as_slice(), &[-1.0, 1.0, -1.0]);
        assert!(EnvironmentSpec::PersistentWinner {
            n_actions: 3,
            winner: 3
        }
        .build(0)
        .is_err());
        let mut f = EnvironmentSpec::FairCoins { n_actions: 100 }
            .build(1)
            .unwrap();
        assert!(f
            .gains(0)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&x| x.abs() == 1.0));
    }

    proptest! {
        #[test]
        fn good_set_has_fixed_size_and_period(
            n in 1usize..60,
            f in 0.01f64..=1.0,
            period in 1usize..20,
            start in 0usize..60,
            j in 0usize..5_000,
        ) {
            let s = GoodBadSpec { n_actions: n, good_fraction: f, edge: 0.5, shift_period: period, start };
            let members = (0..n).filter(|&i| s.is_good(i, j)).count();
            prop_assert_eq!(members, s.n_good());
            let g = num_gcd(s.n_good(), n);
            let full_period = n / g * period;
            prop_assert_eq!(s.good_set(j), s.good_set(j + full_period));
        }
    }

    fn num_gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            num_gcd(b, a % b)
        }
    }
}
