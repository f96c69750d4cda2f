//! Empirical checks of the NormalHedge potential bound and the discounted
//! Hedge regret bound.

use serde::{Deserialize, Serialize};

use super::trace::TraceSummary;
use crate::error::{Error, Result};
use crate::hedgers::{hedge_regret_bound, normalhedge_regret_bound};

/// The constant `C` bounding the average potential.
pub const POTENTIAL_CAP: f64 = 2.32;

/// `1 / (800·ln(C·N))`: the potential bound holds for `α` below this.
pub fn alpha_threshold(n_actions: usize, big_c: f64) -> Result<f64> {
    let cn = big_c * n_actions as f64;
    if cn.is_nan() || cn <= 1.0 {
        return Err(Error::invalid("C·N", format!("must exceed 1, got {cn}")));
    }
    Ok(1.0 / (800.0 * cn.ln()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub limit: f64,
    pub satisfied: bool,
}

impl Check {
    fn strictly_below(name: &str, observed: f64, limit: f64) -> Self {
        Self {
            name: name.to_owned(),
            observed,
            limit,
            satisfied: observed < limit,
        }
    }

    fn at_most(name: &str, observed: f64, limit: f64) -> Self {
        Self {
            name: name.to_owned(),
            observed,
            limit,
            satisfied: observed <= limit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialBoundReport {
    /// False when `c ≠ 4` or `α` is not below the threshold; the checks
    /// are then advisory.
    pub strict: bool,
    pub potential: Check,
    pub increase: Check,
    pub regret: Check,
    pub saturated_steps: usize,
}

impl PotentialBoundReport {
    pub fn checks(&self) -> [&Check; 3] {
        [&self.potential, &self.increase, &self.regret]
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks().iter().all(|c| c.satisfied)
    }

    /// A strict-mode violation.
    pub fn failed(&self) -> bool {
        self.strict && !self.all_satisfied()
    }
}

/// Checks `Ψ < 2.32`, `ΔΨ < (2/3)·α` and `max R ≤ √(8·ln(2.32N)/α)`
/// against the extremes of a run.
pub fn potential_bound_monitor(
    summary: &TraceSummary,
    n_actions: usize,
    alpha: f64,
    c: f64,
) -> Result<PotentialBoundReport> {
    let threshold = alpha_threshold(n_actions, POTENTIAL_CAP)?;
    let strict = c == 4.0 && alpha < threshold;
    Ok(PotentialBoundReport {
        strict,
        potential: Check::strictly_below("avg_potential", summary.max_potential, POTENTIAL_CAP),
        increase: Check::strictly_below(
            "delta_potential",
            summary.max_delta_potential,
            2.0 / 3.0 * alpha,
        ),
        regret: Check::at_most(
            "max_regret",
            summary.max_regret,
            normalhedge_regret_bound(alpha, n_actions)?,
        ),
        saturated_steps: summary.saturated_steps,
    })
}

/// `max R ≤ ln N/η + η/(4(α − α²/2))`.
pub fn hedge_bound_check(
    summary: &TraceSummary,
    n_actions: usize,
    alpha: f64,
    eta: f64,
) -> Result<Check> {
    Ok(Check::at_most(
        "hedge_max_regret",
        summary.max_regret,
        hedge_regret_bound(alpha, n_actions, eta)?,
    ))
}
