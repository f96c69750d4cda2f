//! The NormalHedge potential `Φ(x) = exp(x²/2c)` for `x > 0` (and `1`
//! otherwise), with its first two derivatives.
//!
//! All exponentials saturate at `f64::MAX` instead of overflowing. Callers
//! that care whether a value has saturated can ask [`saturates`].

use crate::error::{Error, Result};

/// Exponent `x²/2c` above which an evaluation is treated as saturated.
pub const SATURATION_EXPONENT: f64 = 700.0;

/// The shape constant `c` of the potential. Must exceed 1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialParams {
    c: f64,
}

impl PotentialParams {
    pub const DEFAULT_C: f64 = 4.0;

    pub fn new(c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 1.0 {
            return Err(Error::invalid(
                "c",
                format!("must be finite and > 1, got {c}"),
            ));
        }
        Ok(Self { c })
    }

    /// Builds params without the `c > 1` restriction. Only `c > 0` is
    /// required; used for the `c = 1` simulation runs, for which no
    /// guarantee is claimed.
    pub fn new_unguarded(c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::invalid(
                "c",
                format!("must be finite and > 0, got {c}"),
            ));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    #[inline]
    fn exponent(&self, x: f64) -> f64 {
        x * x / (2.0 * self.c)
    }
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self { c: Self::DEFAULT_C }
    }
}

#[inline]
fn saturate(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("x", format!("must be finite, got {x}")))
    }
}

/// `Φ(x)`: `exp(x²/2c)` for `x > 0`, `1` otherwise.
pub fn phi(x: f64, params: &PotentialParams) -> Result<f64> {
    check_finite(x)?;
    Ok(phi_unchecked(x, params))
}

/// `Φ'(x)`: `(x/c)·exp(x²/2c)` for `x > 0`, `0` otherwise.
pub fn phi_prime(x: f64, params: &PotentialParams) -> Result<f64> {
    check_finite(x)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(saturate(x / params.c * saturate(params.exponent(x).exp())))
}

/// `Φ''(x)`: `(1/c + x²/c²)·exp(x²/2c)` for `x > 0`, `0` for `x < 0`.
///
/// The second derivative jumps at the origin, so `x = 0` is rejected.
pub fn phi_double_prime(x: f64, params: &PotentialParams) -> Result<f64> {
    check_finite(x)?;
    if x == 0.0 {
        return Err(Error::UndefinedPoint);
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let c = params.c;
    Ok(saturate(
        (1.0 / c + x * x / (c * c)) * saturate(params.exponent(x).exp()),
    ))
}

/// `ln Φ'(x)`, or `-inf` for `x <= 0`. Never saturates; the hedger
/// normalizes weights in this domain.
#[inline]
pub(crate) fn ln_phi_prime(x: f64, params: &PotentialParams) -> f64 {
    if x > 0.0 {
        (x / params.c).ln() + params.exponent(x)
    } else {
        f64::NEG_INFINITY
    }
}

#[inline]
pub(crate) fn phi_unchecked(x: f64, params: &PotentialParams) -> f64 {
    if x > 0.0 {
        saturate(params.exponent(x).exp())
    } else {
        1.0
    }
}

/// True when `Φ(x)` would exceed the saturation exponent.
pub fn saturates(x: f64, params: &PotentialParams) -> bool {
    x > 0.0 && params.exponent(x) > SATURATION_EXPONENT
}
