//! Exact `ℓᵖ`-ball volumes, volume ratios, and exact uniform sampling on
//! `ℓᵖ` balls.
//!
//! The unit-ball volume is `2^m Γ(1+1/p)^m / Γ(1+m/p)` (with the cube
//! `(2r)^m` at `p = ∞`); everything is evaluated through `lgamma` so the
//! log-domain variants stay finite far beyond `m = 170`.
//!
//! Uniform samples come from the Schechtman–Zinn scheme: signed
//! generalized-Gaussian coordinates `ε_i·g_i` with density `∝ exp(−|t|^p)`,
//! scaled by `r · U^{1/m} / ‖g‖_p`. The generalized Gaussian is drawn as
//! `|g| = G^{1/p}` with `G ~ Gamma(1/p, 1)`, which is exact and
//! rejection-free.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};
use crate::mc::Rng;
use crate::stats::log2_gamma;

/// An `ℓᵖ` ball `B(0, radius; ℓᵖ([dim]))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    pub p: Exponent,
    pub dim: usize,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(p: Exponent, dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("ball dimension must be ≥ 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(BallSpec { p, dim, radius })
    }
}

/// `log₂` of the Lebesgue volume of the ball.
pub fn ball_volume_log2(spec: &BallSpec) -> f64 {
    let m = spec.dim as f64;
    let r = spec.radius;
    match spec.p {
        Exponent::Infinity => m * (2.0 * r).log2(),
        Exponent::Finite(p) => {
            m * r.log2() + m + m * log2_gamma(1.0 + 1.0 / p) - log2_gamma(1.0 + m / p)
        }
    }
}

/// Lebesgue volume of the ball. Overflows to `∞`/underflows to `0` outside
/// the representable range; use [`ball_volume_log2`] there.
pub fn ball_volume(spec: &BallSpec) -> f64 {
    2f64.powf(ball_volume_log2(spec))
}

/// `log₂` of `vol(B(0,1;ℓ²([m]))) / vol(B(0,1;ℓᵖ([m])))`.
pub fn volume_ratio_2_over_p_log2(p: Exponent, m: usize) -> f64 {
    let unit2 = BallSpec {
        p: Exponent::Finite(2.0),
        dim: m,
        radius: 1.0,
    };
    let unitp = BallSpec {
        p,
        dim: m,
        radius: 1.0,
    };
    ball_volume_log2(&unit2) - ball_volume_log2(&unitp)
}

/// `vol(B(0,1;ℓ²([m]))) / vol(B(0,1;ℓᵖ([m])))` via log-Gamma arithmetic.
pub fn volume_ratio_2_over_p(p: Exponent, m: usize) -> f64 {
    2f64.powf(volume_ratio_2_over_p_log2(p, m))
}

/// Numerically sharp constants `(c_p, C_p)` with
/// `c_p^m · m^{−m(1/2−1/p)} ≤ vol₂/volₚ ≤ C_p^m · m^{−m(1/2−1/p)}`,
/// computed as the min/max over `m ≤ 64` of the normalized ratio to the
/// power `1/m`.
pub fn volume_ratio_constants(p: Exponent) -> (f64, f64) {
    let expo = 0.5 - p.recip();
    let mut c_lo = f64::INFINITY;
    let mut c_hi = 0.0f64;
    for m in 1..=64usize {
        let mf = m as f64;
        // log₂ of ratio·m^{m(1/2−1/p)}, then divided by m.
        let v = (volume_ratio_2_over_p_log2(p, m) + mf * expo * mf.log2()) / mf;
        let v = 2f64.powf(v);
        c_lo = c_lo.min(v);
        c_hi = c_hi.max(v);
    }
    (c_lo, c_hi)
}

/// One exact uniform sample on the closed ball.
pub fn sample_uniform_ball(spec: &BallSpec, rng: &mut Rng) -> Vec<f64> {
    let m = spec.dim;
    let r = spec.radius;
    match spec.p {
        Exponent::Infinity => (0..m).map(|_| rng.random_range(-r..=r)).collect(),
        Exponent::Finite(p) => {
            let gamma = Gamma::new(1.0 / p, 1.0).expect("valid Gamma shape");
            let mut g: Vec<f64> = Vec::with_capacity(m);
            for _ in 0..m {
                let mag = gamma.sample(rng).powf(1.0 / p);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                g.push(sign * mag);
            }
            let norm = lp_norm(&g, spec.p);
            if norm == 0.0 {
                // Probability-zero event; the origin is a valid sample.
                return vec![0.0; m];
            }
            let u: f64 = rng.random_range(0.0..1.0f64);
            let scale = r * u.powf(1.0 / m as f64) / norm;
            g.iter_mut().for_each(|v| *v *= scale);
            g
        }
    }
}

/// Monte-Carlo volume estimate.
#[derive(Debug, Clone, Copy)]
pub struct McVolume {
    pub estimate: f64,
    pub stderr: f64,
    pub stages: usize,
}

/// Intermediate exponents of the rejection telescope, descending.
const TELESCOPE_LADDER: [f64; 6] = [3.0, 2.0, 1.4, 1.0, 0.75, 0.6];

/// Monte-Carlo volume by staged rejection. The first stage rejects from
/// the bounding cube; for small `p` the acceptance rate of a single stage
/// collapses like `m^{−m/p}`, so intermediate `ℓᵖ` balls (each sampled
/// exactly) split the telescope into stages with workable acceptance
/// rates. `samples` counts draws per stage.
pub fn mc_ball_volume(spec: &BallSpec, samples: usize, rng: &mut Rng) -> McVolume {
    let m = spec.dim;
    let r = spec.radius;
    let cube = 2f64.powf(m as f64 * (2.0 * r).log2());
    let mut exponents: Vec<Exponent> = vec![Exponent::Infinity];
    if let Exponent::Finite(p) = spec.p {
        for e in TELESCOPE_LADDER {
            if e > p {
                exponents.push(Exponent::Finite(e));
            }
        }
        exponents.push(Exponent::Finite(p));
    }
    let mut estimate = cube;
    let mut rel_var = 0.0f64;
    for pair in exponents.windows(2) {
        let from = BallSpec {
            p: pair[0],
            dim: m,
            radius: r,
        };
        let to = pair[1];
        let mut hits = 0usize;
        for _ in 0..samples {
            let x = sample_uniform_ball(&from, rng);
            if lp_norm(&x, to) <= r {
                hits += 1;
            }
        }
        let f = hits as f64 / samples as f64;
        let se = (f * (1.0 - f) / samples as f64).sqrt();
        estimate *= f;
        if f > 0.0 {
            rel_var += (se / f) * (se / f);
        } else {
            rel_var = f64::INFINITY;
        }
    }
    McVolume {
        estimate,
        stderr: estimate * rel_var.sqrt(),
        stages: exponents.len().max(1) - 1,
    }
}
