//! Closed-form learning rates and regret bounds.

use crate::error::{Error, Result};

/// Which learning-rate tuning to use for discounted Hedge.
///
/// The bound derivation and the simulations use tunings that differ by a
/// factor of two; both are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaVariant {
    /// `η = √(4(α − α²/2)·ln N)`, which minimizes [`hedge_regret_bound`].
    Analysis,
    /// `η = √((α − α²/2)·ln N)`.
    Simulation,
}

fn effective_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    Ok(alpha - alpha * alpha / 2.0)
}

fn ln_n(n_actions: usize) -> Result<f64> {
    if n_actions < 2 {
        return Err(Error::invalid(
            "n_actions",
            format!("need N >= 2, got {n_actions}"),
        ));
    }
    Ok((n_actions as f64).ln())
}

pub fn tuned_eta(alpha: f64, n_actions: usize, variant: EtaVariant) -> Result<f64> {
    let a = effective_alpha(alpha)?;
    let ln = ln_n(n_actions)?;
    Ok(match variant {
        EtaVariant::Analysis => (4.0 * a * ln).sqrt(),
        EtaVariant::Simulation => (a * ln).sqrt(),
    })
}

/// `ln N / η + η / (4(α − α²/2))`.
pub fn hedge_regret_bound(alpha: f64, n_actions: usize, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(
            "eta",
            format!("must be positive, got {eta}"),
        ));
    }
    let a = effective_alpha(alpha)?;
    let ln = ln_n(n_actions)?;
    Ok(ln / eta + eta / (4.0 * a))
}

/// `√(8·ln(2.32·N) / α)`.
pub fn normalhedge_regret_bound(alpha: f64, n_actions: usize) -> Result<f64> {
    effective_alpha(alpha)?;
    if n_actions == 0 {
        return Err(Error::invalid("n_actions", "need N >= 1"));
    }
    Ok((8.0 * (2.32 * n_actions as f64).ln() / alpha).sqrt())
}
