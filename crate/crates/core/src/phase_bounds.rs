//! Closed-form bound surfaces and threshold calculators.
//!
//! Everything is evaluated in `log₂` domain first and only the final
//! clamped value is exponentiated, so surfaces remain exact down to
//! `log₂`-values of −1000 and far beyond.

use crate::critical_measure::GrowthConstants;
use crate::error::{Error, Result};

/// Parameters of the success-probability ceiling
/// `E_s(R, ε) = min{1, 2^{R − c·ε^{−1/s}}}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSurfaceParams {
    pub s: f64,
    pub c: f64,
    /// Whether to clamp with `min{1, ·}`.
    pub clamp: bool,
}

impl PhaseSurfaceParams {
    pub fn new(s: f64, c: f64, clamp: bool) -> Result<Self> {
        if !(s > 0.0 && c > 0.0 && s.is_finite() && c.is_finite()) {
            return Err(Error::Domain(format!(
                "need s, c > 0, got s = {s}, c = {c}"
            )));
        }
        Ok(PhaseSurfaceParams { s, c, clamp })
    }
}

/// `log₂ E_s(R, ε)`: `R − c·ε^{−1/s}`, clamped to ≤ 0 when requested.
pub fn e_surface_log2(params: &PhaseSurfaceParams, r: f64, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 || r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!(
            "need ε > 0 and R ≥ 0, got ε = {eps}, R = {r}"
        )));
    }
    let v = r - params.c * eps.powf(-1.0 / params.s);
    Ok(if params.clamp { v.min(0.0) } else { v })
}

/// `E_s(R, ε)`; underflows to 0 below roughly `2^{−1074}` while the log₂
/// variant stays exact.
pub fn e_surface(params: &PhaseSurfaceParams, r: f64, eps: f64) -> Result<f64> {
    Ok(2f64.powf(e_surface_log2(params, r, eps)?))
}

/// The certified ceiling for `Pr(‖x − D_R(E_R(x))‖ ≤ ε)` under a measure
/// with growth constants `g`. Only claimed for `ε ∈ (0, ε₀)`.
pub fn success_probability_bound(g: &GrowthConstants, r: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < g.eps0) {
        return Err(Error::Domain(format!(
            "bound certified only for ε ∈ (0, ε₀ = {}), got {eps}",
            g.eps0
        )));
    }
    let params = PhaseSurfaceParams::new(g.s, g.c, true)?;
    e_surface(&params, r, eps)
}

/// Minimal code length `R₀` such that
/// `Pr(error ≤ K·R^{−s}) ≤ 2^{−R}` for all `R ≥ R₀`, given growth
/// constants at the intermediate exponent `σ = (s + s₀)/2`.
///
/// `R₁ = ⌈(2K/ε₀)^{1/s}⌉` keeps `K·R^{−s}` inside the certificate range;
/// `R₂` is the smallest integer with `R − c·K^{−1/σ}·R^{s/σ} ≤ −R`.
pub fn min_code_length(s: f64, s0: f64, k: f64, growth: &GrowthConstants) -> Result<u64> {
    if !s.is_finite() || s <= s0 {
        return Err(Error::Domain(format!(
            "need s > s₀, got s = {s}, s₀ = {s0}"
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("need K > 0, got {k}")));
    }
    let sigma = growth.s;
    if !(sigma > s0 && sigma < s) {
        return Err(Error::Domain(format!(
            "growth constants must be taken at σ ∈ (s₀, s), got σ = {sigma}"
        )));
    }
    let r1 = (2.0 * k / growth.eps0).powf(1.0 / s).ceil().max(1.0) as u64;

    // R − c·K^{−1/σ}·R^{s/σ} ≤ −R  ⟺  2R ≤ c·K^{−1/σ}·R^{s/σ}; the
    // condition is upward closed since s/σ > 1.
    let coeff = growth.c * k.powf(-1.0 / sigma);
    let holds = |r: u64| -> bool {
        let rf = r as f64;
        2.0 * rf <= coeff * rf.powf(s / sigma)
    };
    let mut r2 = None;
    for r in 1..=(1u64 << 20) {
        if holds(r) {
            r2 = Some(r);
            break;
        }
    }
    let r2 = match r2 {
        Some(r) => r,
        None => {
            // Geometric bracketing beyond the scan window.
            let mut hi = 1u64 << 21;
            while !holds(hi) {
                hi = hi
                    .checked_mul(2)
                    .ok_or_else(|| Error::Domain("R₂ out of integer range".into()))?;
            }
            let mut lo = hi / 2;
            while lo + 1 < hi {
                let mid = lo + (hi - lo) / 2;
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    Ok(r1.max(r2))
}

/// `min{1, 2^{C·W·⌈log₂(1+W)⌉² − c·ε^{−1/s}}}`, the quantized-network
/// success ceiling at network size `W`.
pub fn nn_success_bound(c_cap: f64, c: f64, s: f64, w: u64, eps: f64) -> Result<f64> {
    if w == 0 {
        return Err(Error::Domain("need W ≥ 1".into()));
    }
    let params = PhaseSurfaceParams::new(s, c, true)?;
    let r = c_cap * w as f64 * ceil_log2_1p(w).pow(2) as f64;
    e_surface(&params, r, eps)
}

/// `⌈log₂(1 + w)⌉` as an integer.
pub fn ceil_log2_1p(w: u64) -> u32 {
    let v = w + 1;
    // ⌈log₂ v⌉ = bits(v − 1) for v ≥ 2.
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}
