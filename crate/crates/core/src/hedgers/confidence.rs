use super::{check_len, ActionDistribution, ConfidenceVector, GainVector};
use crate::error::{Error, Result};

/// Reweights a base distribution by expert confidences.
///
/// Returns `p_i·c_i / Z` with `Z = Σ p_i·c_i`, and the scaled gains
/// `c_i·g_i`. Fails with [`Error::AllAbstain`] when `Z = 0`.
///
/// In the rated game the master earns `g_A = Σ (p_i·c_i/Z)·g_i` and the
/// regret to expert `i` moves by `c_i·(g_i − g_A)`: an expert is only
/// compared with the master while it is awake.
pub fn confidence_wrap(
    base: &ActionDistribution,
    confidences: &ConfidenceVector,
    gains: &GainVector,
) -> Result<(ActionDistribution, GainVector)> {
    check_len(base.len(), confidences.len())?;
    check_len(base.len(), gains.len())?;
    let c = confidences.as_slice();
    let z: f64 = base.as_slice().iter().zip(c).map(|(p, c)| p * c).sum();
    if z <= 0.0 {
        return Err(Error::AllAbstain);
    }
    let effective = base
        .as_slice()
        .iter()
        .zip(c)
        .map(|(p, c)| p * c / z)
        .collect();
    let scaled = gains.as_slice().iter().zip(c).map(|(g, c)| g * c).collect();
    Ok((ActionDistribution(effective), GainVector(scaled)))
}
