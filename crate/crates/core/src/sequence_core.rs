//! Index partitions, mixed-norm sequence spaces, norms, and embedding
//! constants.
//!
//! A countable index set is blocked into groups of sizes `n_m ≍ 2^{dm}`.
//! The mixed norm weights block `m` by `w_m = m^θ · 2^{αm}`, takes `ℓᵖ`
//! inside each block and `ℓ^q` across blocks:
//!
//! ```text
//! ‖x‖ = ‖ ( w_m · ‖x_m‖_{ℓᵖ} )_m ‖_{ℓ^q}
//! ```
//!
//! Infinite sequences are represented by their first `M` stored blocks;
//! indices are enumerated block-major (all results here are invariant under
//! permutations inside a block).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};

/// Total coefficient budget across all blocks of one partition. Keeps
/// accidental `(d, M)` choices from requesting terabytes of signal.
pub const MAX_TOTAL_COEFFS: u64 = u32::MAX as u64;

/// A `d`-regular partition of a countable index set, stored as the block
/// sizes `n_m` with regularity certificates `a·2^{dm} ≤ n_m ≤ A·2^{dm}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    d: u32,
    block_sizes: Vec<usize>,
    a: f64,
    big_a: f64,
}

impl PartitionSpec {
    /// Builds a partition from explicit block sizes, fitting the tightest
    /// regularity constants.
    pub fn from_block_sizes(d: u32, block_sizes: Vec<usize>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension exponent d must be ≥ 1".into()));
        }
        if block_sizes.is_empty() {
            return Err(Error::Domain("partition needs at least one block".into()));
        }
        if block_sizes.contains(&0) {
            return Err(Error::Domain("block sizes must be positive".into()));
        }
        let total: u64 = block_sizes.iter().map(|&n| n as u64).sum();
        if total > MAX_TOTAL_COEFFS {
            return Err(Error::Size(format!(
                "total coefficient count {total} exceeds the supported budget {MAX_TOTAL_COEFFS}"
            )));
        }
        let mut a = f64::INFINITY;
        let mut big_a = 0.0f64;
        for (i, &n) in block_sizes.iter().enumerate() {
            let eta = n as f64 / 2f64.powi(d as i32 * (i as i32 + 1));
            a = a.min(eta);
            big_a = big_a.max(eta);
        }
        Ok(PartitionSpec {
            d,
            block_sizes,
            a,
            big_a,
        })
    }

    /// The exactly dyadic partition `n_m = 2^{dm}`, `m = 1..M_max`, with
    /// `a = A = 1`.
    pub fn dyadic(d: u32, m_max: u32) -> Result<Self> {
        if d == 0 || m_max == 0 {
            return Err(Error::Domain("d and M_max must be ≥ 1".into()));
        }
        let mut sizes = Vec::with_capacity(m_max as usize);
        let mut total: u64 = 0;
        for m in 1..=m_max as u64 {
            let bits = d as u64 * m;
            if bits >= 32 {
                return Err(Error::Size(format!(
                    "block size 2^{bits} exceeds the supported budget"
                )));
            }
            let n = 1u64 << bits;
            total += n;
            if total > MAX_TOTAL_COEFFS {
                return Err(Error::Size(format!(
                    "total coefficient count {total} exceeds the supported budget {MAX_TOTAL_COEFFS}"
                )));
            }
            sizes.push(n as usize);
        }
        Ok(PartitionSpec {
            d,
            block_sizes: sizes,
            a: 1.0,
            big_a: 1.0,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Number of stored blocks `M`.
    pub fn block_count(&self) -> usize {
        self.block_sizes.len()
    }

    /// `n_m` for 1-based block index `m`.
    pub fn block_size(&self, m: usize) -> usize {
        self.block_sizes[m - 1]
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// `η_m = n_m / 2^{dm} ∈ [a, A]`.
    pub fn eta(&self, m: usize) -> f64 {
        self.block_size(m) as f64 / 2f64.powi(self.d as i32 * m as i32)
    }

    pub fn regularity(&self) -> (f64, f64) {
        (self.a, self.big_a)
    }

    pub fn total_len(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

/// Parameters `(𝒫, p, q, α, θ)` of a mixed-norm sequence space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub partition: PartitionSpec,
    pub p: Exponent,
    pub q: Exponent,
    pub alpha: f64,
    pub theta: f64,
}

impl SpaceSpec {
    pub fn new(
        partition: PartitionSpec,
        p: Exponent,
        q: Exponent,
        alpha: f64,
        theta: f64,
    ) -> Result<Self> {
        if !alpha.is_finite() || !theta.is_finite() {
            return Err(Error::Domain("α and θ must be finite".into()));
        }
        Ok(SpaceSpec {
            partition,
            p,
            q,
            alpha,
            theta,
        })
    }

    /// Block weight `w_m = m^θ · 2^{αm}`.
    pub fn weight(&self, m: usize) -> f64 {
        (m as f64).powf(self.theta) * 2f64.powf(self.alpha * m as f64)
    }

    /// `s* = α/d − (1/2 − 1/p)`, the optimal compression rate of the unit
    /// ball in `ℓ²`.
    pub fn s_star(&self) -> f64 {
        self.alpha / self.partition.d() as f64 - (0.5 - self.p.recip())
    }

    /// Whether `α > d · (1/2 − 1/p)₊`, the compactness region where the
    /// critical measure exists.
    pub fn is_valid_alpha(&self) -> bool {
        self.alpha > self.partition.d() as f64 * (0.5 - self.p.recip()).max(0.0)
    }
}

/// A finitely truncated coefficient sequence organized by blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    spec: SpaceSpec,
    blocks: Vec<Vec<f64>>,
}

impl Signal {
    /// Wraps blocks after checking lengths against the partition and that
    /// all entries are finite.
    pub fn new(spec: SpaceSpec, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() > spec.partition.block_count() {
            return Err(Error::Shape(format!(
                "{} blocks provided but the partition stores {}",
                blocks.len(),
                spec.partition.block_count()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            let want = spec.partition.block_size(i + 1);
            if b.len() != want {
                return Err(Error::Shape(format!(
                    "block {} has {} entries, expected {want}",
                    i + 1,
                    b.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!(
                    "block {} contains a non-finite entry",
                    i + 1
                )));
            }
        }
        Ok(Signal { spec, blocks })
    }

    /// The zero signal with all `M` blocks stored.
    pub fn zero(spec: SpaceSpec) -> Self {
        let blocks = spec
            .partition
            .block_sizes()
            .iter()
            .map(|&n| vec![0.0; n])
            .collect();
        Signal { spec, blocks }
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    /// Number of stored blocks (the truncation level `M`).
    pub fn truncation_level(&self) -> usize {
        self.blocks.len()
    }

    /// Coefficients of block `m` (1-based).
    pub fn block(&self, m: usize) -> &[f64] {
        &self.blocks[m - 1]
    }

    pub fn block_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.blocks[m - 1]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn scale(&self, lambda: f64) -> Signal {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|v| lambda * v).collect())
            .collect();
        Signal {
            spec: self.spec.clone(),
            blocks,
        }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.check_compatible(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Signal {
            spec: self.spec.clone(),
            blocks,
        })
    }

    fn check_compatible(&self, other: &Signal) -> Result<()> {
        if self.spec != other.spec || self.blocks.len() != other.blocks.len() {
            return Err(Error::Shape(
                "signals live in different spaces or truncations".into(),
            ));
        }
        Ok(())
    }
}

/// The mixed norm `‖(w_m · ‖x_m‖_{ℓᵖ})_m‖_{ℓ^q}` over stored blocks.
pub fn mixed_norm(x: &Signal) -> f64 {
    mixed_norm_at(x, x.spec().theta, x.spec().q)
}

/// Mixed norm of the same coefficients re-weighted with `θ'` and measured
/// in `ℓ^{q'}` across blocks. Used by the embedding tests and the critical
/// measure construction.
pub fn mixed_norm_at(x: &Signal, theta: f64, q: Exponent) -> f64 {
    let spec = x.spec();
    let terms = (1..=x.truncation_level()).map(|m| {
        let w = (m as f64).powf(theta) * 2f64.powf(spec.alpha * m as f64);
        w * lp_norm(x.block(m), spec.p)
    });
    match q {
        Exponent::Infinity => terms.fold(0.0f64, f64::max),
        Exponent::Finite(q) => {
            if q == 2.0 {
                terms.map(|t| t * t).sum::<f64>().sqrt()
            } else if q == 1.0 {
                terms.sum()
            } else {
                terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }
}

/// Euclidean norm of the concatenated blocks.
pub fn l2_norm(x: &Signal) -> f64 {
    x.blocks()
        .iter()
        .flat_map(|b| b.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance of two signals sharing spec and truncation level.
pub fn l2_distance(x: &Signal, y: &Signal) -> Result<f64> {
    x.check_compatible(y)?;
    let mut acc = 0.0;
    for (a, b) in x.blocks().iter().zip(y.blocks()) {
        for (u, v) in a.iter().zip(b) {
            let dlt = u - v;
            acc += dlt * dlt;
        }
    }
    Ok(acc.sqrt())
}

/// Embedding constant `κ = κ(q, r, ϑ)` with
/// `‖x‖_{θ,r} ≤ κ · ‖x‖_{θ+ϑ,q}` for all θ (Hölder).
///
/// For `q < ∞` this is `‖(m^{−ϑ})_m‖_{ℓ^{rq/(q−r)}}`, for `q = ∞` it is
/// `‖(m^{−ϑ})_m‖_{ℓ^r}`; the series is summed until the integral tail bound
/// drops below `1e-12` relative.
pub fn embedding_constant(q: Exponent, r: Exponent, vartheta: f64) -> Result<f64> {
    let r_fin = match r {
        Exponent::Finite(v) => v,
        Exponent::Infinity => {
            return Err(Error::Domain(
                "embedding target exponent r must be finite".into(),
            ))
        }
    };
    let q_recip = q.recip();
    if let Exponent::Finite(qv) = q {
        if qv <= r_fin {
            return Err(Error::Domain(format!(
                "need q > r, got q = {qv}, r = {r_fin}"
            )));
        }
    }
    if vartheta <= 1.0 / r_fin - q_recip {
        return Err(Error::Domain(format!(
            "need ϑ > 1/r − 1/q = {}, got {vartheta}",
            1.0 / r_fin - q_recip
        )));
    }
    // Exponent of the scalar series Σ m^{−ϑt}.
    let t = match q {
        Exponent::Infinity => r_fin,
        Exponent::Finite(qv) => r_fin * qv / (qv - r_fin),
    };
    let s = vartheta * t;
    debug_assert!(s > 1.0);
    Ok(zeta_tail_sum(s).powf(1.0 / t))
}

/// `Σ_{m≥1} m^{−s}` for `s > 1` by partial sums plus an Euler–Maclaurin
/// tail, accurate to well below 1e-12 relative.
fn zeta_tail_sum(s: f64) -> f64 {
    let cut = 200_000u64;
    let mut acc = 0.0f64;
    for m in 1..=cut {
        acc += (m as f64).powf(-s);
    }
    // ∫_{M}^{∞} x^{−s} dx + ½ M^{−s} + (s/12) M^{−s−1}
    let mf = cut as f64;
    let tail = mf.powf(1.0 - s) / (s - 1.0) - 0.5 * mf.powf(-s) + s / 12.0 * mf.powf(-s - 1.0);
    acc + tail
}

// --- serialization -----------------------------------------------------

/// Flat binary signal format, dyadic partitions only:
/// `d:u32 | M:u32 | p:tag+f64 | q:tag+f64 | α:f64 | θ:f64 | blocks as LE f64`.
/// Tag byte 0 marks a finite exponent, 1 marks `∞` (value field ignored).
pub fn signal_to_bytes(x: &Signal) -> Result<Vec<u8>> {
    let spec = x.spec();
    let d = spec.partition.d();
    let m = x.truncation_level() as u32;
    let dyadic = PartitionSpec::dyadic(d, spec.partition.block_count() as u32)?;
    if dyadic.block_sizes() != spec.partition.block_sizes() {
        return Err(Error::Config(
            "the flat binary format covers dyadic partitions only".into(),
        ));
    }
    let mut out = Vec::new();
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&m.to_le_bytes());
    let put_exp = |out: &mut Vec<u8>, e: Exponent| match e {
        Exponent::Finite(v) => {
            out.push(0);
            out.extend_from_slice(&v.to_le_bytes());
        }
        Exponent::Infinity => {
            out.push(1);
            out.extend_from_slice(&0f64.to_le_bytes());
        }
    };
    put_exp(&mut out, spec.p);
    put_exp(&mut out, spec.q);
    out.extend_from_slice(&spec.alpha.to_le_bytes());
    out.extend_from_slice(&spec.theta.to_le_bytes());
    for b in x.blocks() {
        for v in b {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Inverse of [`signal_to_bytes`].
pub fn signal_from_bytes(bytes: &[u8]) -> Result<Signal> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Decode("truncated signal payload".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let d = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let m = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let get_exp = |pos: &mut usize| -> Result<Exponent> {
        let tag = take(pos, 1)?[0];
        let v = f64::from_le_bytes(take(pos, 8)?.try_into().unwrap());
        match tag {
            0 => Exponent::new(v),
            1 => Ok(Exponent::Infinity),
            t => Err(Error::Decode(format!("unknown exponent tag {t}"))),
        }
    };
    let p = get_exp(&mut pos)?;
    let q = get_exp(&mut pos)?;
    let alpha = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let theta = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let partition = PartitionSpec::dyadic(d, m)?;
    let spec = SpaceSpec::new(partition, p, q, alpha, theta)?;
    let mut blocks = Vec::with_capacity(m as usize);
    for bm in 1..=m as usize {
        let n = spec.partition.block_size(bm);
        let mut block = Vec::with_capacity(n);
        for _ in 0..n {
            block.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        blocks.push(block);
    }
    if pos != bytes.len() {
        return Err(Error::Decode("trailing bytes after signal payload".into()));
    }
    Signal::new(spec, blocks)
}
