//! Extended integrability exponents in `(0, ∞]`.
//!
//! `∞` is a distinguished variant rather than a float sentinel, so the norm
//! kernels never do arithmetic on infinities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exponent `p ∈ (0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// Validates `p > 0` (finite case) and returns the exponent.
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Exponent::Infinity);
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!(
                "exponent must lie in (0, ∞], got {p}"
            )));
        }
        Ok(Exponent::Finite(p))
    }

    pub const fn infinity() -> Self {
        Exponent::Infinity
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Finite value, or `None` for `∞`.
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::Config(format!("cannot parse exponent {other:?}")))?;
                Exponent::new(v)
            }
        }
    }
}

/// `ℓᵖ` (quasi-)norm of a slice; `p = ∞` is the max of absolute values.
pub fn lp_norm(values: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
        Exponent::Finite(p) => {
            if p == 2.0 {
                values.iter().map(|v| v * v).sum::<f64>().sqrt()
            } else if p == 1.0 {
                values.iter().map(|v| v.abs()).sum()
            } else {
                values
                    .iter()
                    .map(|v| v.abs().powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p)
            }
        }
    }
}
