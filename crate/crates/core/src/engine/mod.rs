//! The iterated game between a hedger and an environment.

mod monitor;
mod trace;

pub use monitor::{
    alpha_threshold, hedge_bound_check, potential_bound_monitor, Check, PotentialBoundReport,
    POTENTIAL_CAP,
};
pub use trace::{AveragedTrace, GameTrace, ReplicaSummary, TraceRow, TraceSummary};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::hedgers::{check_alpha, tuned_eta, EtaVariant, HedgeState, Hedger, RegretState};
use crate::potential::PotentialParams;
use crate::rng::{replica_seed, PRNG_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EtaChoice {
    Tuned { variant: EtaVariant },
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum HedgerSpec {
    NormalHedge { c: f64 },
    Hedge { eta: EtaChoice },
}

impl HedgerSpec {
    pub fn normalhedge(c: f64) -> Self {
        HedgerSpec::NormalHedge { c }
    }

    pub fn hedge_tuned(variant: EtaVariant) -> Self {
        HedgerSpec::Hedge {
            eta: EtaChoice::Tuned { variant },
        }
    }

    /// Short identifier used in file names and legends.
    pub fn label(&self) -> String {
        match self {
            HedgerSpec::NormalHedge { c } => format!("normalhedge_c{c}"),
            HedgerSpec::Hedge { .. } => "hedge".to_owned(),
        }
    }

    pub fn resolve_eta(&self, n_actions: usize, alpha: f64) -> Result<Option<f64>> {
        match self {
            HedgerSpec::NormalHedge { .. } => Ok(None),
            HedgerSpec::Hedge {
                eta: EtaChoice::Tuned { variant },
            } => tuned_eta(alpha, n_actions, *variant).map(Some),
            HedgerSpec::Hedge {
                eta: EtaChoice::Fixed { value },
            } => Ok(Some(*value)),
        }
    }

    pub fn build(&self, n_actions: usize, alpha: f64) -> Result<Box<dyn Hedger>> {
        Ok(match self {
            HedgerSpec::NormalHedge { c } => Box::new(RegretState::new(
                n_actions,
                alpha,
                PotentialParams::new_unguarded(*c)?,
            )?),
            HedgerSpec::Hedge { .. } => {
                let eta = self
                    .resolve_eta(n_actions, alpha)?
                    .expect("hedge has a learning rate");
                Box::new(HedgeState::new(n_actions, alpha, eta)?)
            }
        })
    }
}

fn one() -> usize {
    1
}

fn default_diagnostic_c() -> f64 {
    PotentialParams::DEFAULT_C
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_actions: usize,
    pub alpha: f64,
    pub horizon: usize,
    pub hedger: HedgerSpec,
    /// Use the environment's confidences, if it provides any.
    #[serde(default)]
    pub confidence_rated: bool,
    pub environment: EnvironmentSpec,
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: usize,
    /// Record every k-th row (and always the last). Monitors still see
    /// every iteration.
    #[serde(default = "one")]
    pub record_every: usize,
    /// Potential constant for the Ψ columns of non-NormalHedge runs.
    #[serde(default = "default_diagnostic_c")]
    pub diagnostic_c: f64,
}

impl GameConfig {
    pub fn new(
        hedger: HedgerSpec,
        environment: EnvironmentSpec,
        alpha: f64,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_actions: environment.n_actions(),
            alpha,
            horizon,
            hedger,
            confidence_rated: false,
            environment,
            seed,
            replicas: 1,
            record_every: 1,
            diagnostic_c: PotentialParams::DEFAULT_C,
        }
    }

    pub fn with_replicas(mut self, replicas: usize) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_actions == 0 {
            return Err(Error::invalid("n_actions", "need at least one action"));
        }
        check_alpha(self.alpha)?;
        if self.alpha >= 1.0 {
            return Err(Error::invalid("alpha", "must be below 1"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("replicas", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        self.environment.validate()?;
        if self.environment.n_actions() != self.n_actions {
            return Err(Error::LengthMismatch {
                expected: self.n_actions,
                got: self.environment.n_actions(),
            });
        }
        Ok(())
    }

    /// The potential used for Ψ diagnostics.
    pub fn diagnostic_params(&self) -> Result<PotentialParams> {
        match self.hedger {
            HedgerSpec::NormalHedge { c } => PotentialParams::new_unguarded(c),
            HedgerSpec::Hedge { .. } => PotentialParams::new_unguarded(self.diagnostic_c),
        }
    }
}

/// Plays one game. A pure function of `config` (replicas are ignored).
pub fn run_game(config: &GameConfig) -> Result<GameTrace> {
    config.validate()?;
    run_seeded(config, config.seed)
}

fn run_seeded(config: &GameConfig, seed: u64) -> Result<GameTrace> {
    let mut hedger = config.hedger.build(config.n_actions, config.alpha)?;
    let mut env = config.environment.build(seed)?;
    // Regrets are tracked outside the hedger so every algorithm gets the
    // same diagnostics.
    let mut tracker =
        RegretState::new(config.n_actions, config.alpha, config.diagnostic_params()?)?;

    let initial = tracker.avg_potential();
    let mut previous = initial;
    let mut summary = TraceSummary::start(initial);
    let mut rows = Vec::with_capacity(config.horizon / config.record_every + 1);

    for j in 0..config.horizon {
        let gains = env.gains(j).map_err(|e| e.at_iteration(j))?;
        let confidences = if config.confidence_rated {
            env.confidences(j).map_err(|e| e.at_iteration(j))?
        } else {
            None
        };
        let step = hedger
            .step(&gains, confidences.as_ref())
            .map_err(|e| e.at_iteration(j))?;
        tracker
            .accumulate(&gains, step.master_gain, step.regret_scale.as_deref())
            .map_err(|e| e.at_iteration(j))?;

        let potential = tracker.avg_potential();
        let row = TraceRow {
            iteration: j,
            master_gain: step.master_gain,
            regret_best: tracker.max_regret(),
            avg_potential: potential,
            delta_potential: potential - previous,
        };
        summary.observe(&row, tracker.potential_saturated());
        previous = potential;
        if j % config.record_every == 0 || j + 1 == config.horizon {
            rows.push(row);
        }
    }

    Ok(GameTrace {
        rows,
        initial_avg_potential: initial,
        final_regrets: tracker.regrets().to_vec(),
        summary,
        prng: PRNG_NAME.to_owned(),
    })
}

/// Plays `config.replicas` independent games and averages their traces.
///
/// Replica `r` is seeded with [`replica_seed`]`(config.seed, r)`. Games run
/// in parallel; the reduction runs in replica order, so the output does
/// not depend on scheduling.
pub fn run_replicas(config: &GameConfig) -> Result<AveragedTrace> {
    let (traces, _) = run_replicas_with_traces(config)?;
    Ok(traces)
}

/// Like [`run_replicas`] but also returns every replica's trace.
pub fn run_replicas_with_traces(config: &GameConfig) -> Result<(AveragedTrace, Vec<GameTrace>)> {
    config.validate()?;
    let traces = (0..config.replicas)
        .into_par_iter()
        .map(|r| run_seeded(config, replica_seed(config.seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let replicas = traces
        .iter()
        .enumerate()
        .map(|(index, t)| ReplicaSummary {
            index,
            seed: replica_seed(config.seed, index),
            final_regrets: t.final_regrets.clone(),
            final_regret_best: t.final_regret_best(),
            summary: t.summary,
        })
        .collect();
    let averaged = AveragedTrace {
        rows: trace::mean_rows(&traces),
        replicas,
        prng: PRNG_NAME.to_owned(),
    };
    Ok((averaged, traces))
}
