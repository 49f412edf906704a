//! Encoder/decoder pairs at a fixed code length `R`, distortion
//! measurement, a constructive block quantizer attaining the optimal rate
//! exponent, empirical entropy-number estimates, Lipschitz transfer of
//! codecs, and the countable-class fixture where per-element rates beat the
//! class rate.
//!
//! # The block quantizer
//!
//! Given a space and a bit budget `R`, the scheme picks the largest cutoff
//! `m₀` whose cost fits in `R` and quantizes every coefficient of block
//! `μ ≤ m₀` on a uniform grid over `[−ρ_μ, ρ_μ]` with an odd number
//! `2^{b_μ} − 1` of cells, so 0 is always a codeword and blocks beyond `m₀`
//! decode to zero exactly.
//!
//! Per-coefficient budgets decrease linearly with depth,
//! `b_μ = round(log₂(√n_μ · ρ_μ / δ(m₀))) + b_base`, where `δ(m₀)` is the
//! `ℓ²`-tail radius of the class beyond `m₀`; this balances every quantized
//! block against the truncation error, and leftover budget is spread
//! uniformly (at most one extra bit per coefficient). The grid half-range
//! `ρ_μ` shrinks the class radius `w_μ⁻¹` by `min{1, √((2 ln n_μ + 50)/n_μ)}`
//! for finite `p`: coefficients of an `ℓᵖ`-ball signal concentrate well
//! below the block radius, and entries past the grid edge are clamped (the
//! round-trip contract is "within half a cell of the clamped value").
//!
//! Bit layout: blocks in order, coefficients in index order, big-endian
//! within a coefficient; unused trailing bits are zero.

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::mc::{run_sharded, Rng};
use crate::sequence_core::{l2_distance, Signal, SpaceSpec};

/// Shrink safety margin: per-coefficient clamp probability for a uniform
/// ball sample is below `e^{−SAFETY/2}`.
const SHRINK_SAFETY: f64 = 50.0;
/// Extra bits per coefficient beyond the tail-balancing budget.
const B_BASE: u32 = 2;
/// Hard cap on per-coefficient bits (f64 resolution).
const B_MAX: u32 = 52;
/// Largest rate for which nearest-codeword enumeration is allowed.
pub const ENUMERATION_MAX_RATE: usize = 24;

// --- bitstrings ---------------------------------------------------------

/// A packed bitstring of exact length `R ≥ 1`, MSB-first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitstring {
    len: usize,
    bytes: Vec<u8>,
}

impl Bitstring {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Domain("bitstring length must be ≥ 1".into()));
        }
        Ok(Bitstring {
            len,
            bytes: vec![0u8; len.div_ceil(8)],
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len);
        let mask = 1u8 << (7 - i % 8);
        if v {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Result<Self> {
        if len == 0 || bytes.len() != len.div_ceil(8) {
            return Err(Error::Decode("bitstring length/byte mismatch".into()));
        }
        let mut bs = Bitstring { len, bytes };
        // Normalize padding bits so equality is structural.
        for i in len..bs.bytes.len() * 8 {
            let mask = 1u8 << (7 - i % 8);
            bs.bytes[i / 8] &= !mask;
        }
        Ok(bs)
    }

    /// Interprets the lowest `len` bits of `value` as the bitstring,
    /// MSB-first. Used by the enumeration helpers.
    pub fn from_value(len: usize, value: u64) -> Result<Self> {
        let mut bs = Bitstring::zeros(len)?;
        for i in 0..len {
            bs.set(i, value >> (len - 1 - i) & 1 == 1);
        }
        Ok(bs)
    }
}

/// Sequential big-endian bit writer over a [`Bitstring`].
pub struct BitWriter {
    bits: Bitstring,
    pos: usize,
}

impl BitWriter {
    pub fn new(len: usize) -> Result<Self> {
        Ok(BitWriter {
            bits: Bitstring::zeros(len)?,
            pos: 0,
        })
    }

    pub fn write(&mut self, value: u64, n: u32) -> Result<()> {
        if n > 64 || self.pos + n as usize > self.bits.len() {
            return Err(Error::Size("bit budget exceeded".into()));
        }
        for i in (0..n).rev() {
            let bit = value >> i & 1 == 1;
            self.bits.set(self.pos, bit);
            self.pos += 1;
        }
        Ok(())
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn finish(self) -> Bitstring {
        self.bits
    }
}

/// Sequential big-endian bit reader.
pub struct BitReader<'a> {
    bits: &'a Bitstring,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a Bitstring) -> Self {
        BitReader { bits, pos: 0 }
    }

    pub fn read(&mut self, n: u32) -> Result<u64> {
        if n > 64 || self.pos + n as usize > self.bits.len() {
            return Err(Error::Decode("bitstring exhausted".into()));
        }
        let mut v = 0u64;
        for _ in 0..n {
            v = v << 1 | self.bits.get(self.pos) as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

// --- codec trait ---------------------------------------------------------

/// An encode/decode pair of fixed code length.
pub trait SignalCodec: Sync {
    fn rate(&self) -> usize;
    fn encode(&self, x: &Signal) -> Result<Bitstring>;
    fn decode(&self, bits: &Bitstring) -> Result<Signal>;
}

/// Max `ℓ²` round-trip error over a sample set: an empirical lower bound
/// of the sup-distortion over the class.
pub fn distortion(codec: &dyn SignalCodec, samples: &[Signal]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("distortion needs at least one sample".into()));
    }
    let mut worst = 0.0f64;
    for x in samples {
        let y = codec.decode(&codec.encode(x)?)?;
        worst = worst.max(l2_distance(x, &y)?);
    }
    Ok(worst)
}

// --- block quantizer ------------------------------------------------------

/// Scheme parameters recorded alongside a built quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerMeta {
    /// Linear budget slope in the block index, `α − d/2`.
    pub beta: f64,
    pub b_base: u32,
    /// Bits actually consumed by coefficients (`≤ rate`).
    pub used_bits: usize,
    /// Tail radius `δ(m₀)` the budgets were balanced against.
    pub tail_radius: f64,
}

/// Deterministic uniform block quantizer at code length `rate`.
#[derive(Debug, Clone)]
pub struct BlockQuantizer {
    space: SpaceSpec,
    rate: usize,
    m0: usize,
    budgets: Vec<u32>,
    ranges: Vec<f64>,
    meta: QuantizerMeta,
}

/// `ℓ²`-radius of block `m` of the unit ball: `n^{(1/2−1/p)₊} · w_m⁻¹`.
fn block_l2_radius(space: &SpaceSpec, m: usize) -> f64 {
    let n = space.partition.block_size(m) as f64;
    n.powf((0.5 - space.p.recip()).max(0.0)) / space.weight(m)
}

/// Class tail radius beyond `m0`; extrapolates one block of geometric
/// decay when the partition is exhausted.
fn tail_radius(space: &SpaceSpec, m0: usize) -> f64 {
    let m_max = space.partition.block_count();
    if m0 < m_max {
        let sum: f64 = (m0 + 1..=m_max)
            .map(|m| block_l2_radius(space, m).powi(2))
            .sum();
        sum.sqrt()
    } else {
        let last = block_l2_radius(space, m_max);
        let ratio = if m_max >= 2 {
            last / block_l2_radius(space, m_max - 1)
        } else {
            0.5
        };
        last * ratio.min(0.99)
    }
}

fn grid_shrink(space: &SpaceSpec, m: usize) -> f64 {
    match space.p {
        Exponent::Infinity => 1.0,
        Exponent::Finite(_) => {
            let n = space.partition.block_size(m) as f64;
            ((2.0 * n.ln() + SHRINK_SAFETY) / n).sqrt().min(1.0)
        }
    }
}

fn budget(space: &SpaceSpec, m: usize, delta: f64) -> u32 {
    let n = space.partition.block_size(m) as f64;
    let rho = grid_shrink(space, m) / space.weight(m);
    let raw = (n.sqrt() * rho / delta).log2().round() as i64 + B_BASE as i64;
    raw.clamp(2, B_MAX as i64) as u32
}

fn cost(space: &SpaceSpec, m0: usize) -> usize {
    let delta = tail_radius(space, m0);
    (1..=m0)
        .map(|m| space.partition.block_size(m) * budget(space, m, delta) as usize)
        .sum()
}

impl BlockQuantizer {
    pub fn new(space: &SpaceSpec, rate: usize) -> Result<Self> {
        if !space.is_valid_alpha() {
            return Err(Error::Domain(format!(
                "α > d(1/2 − 1/p)₊ violated: α = {}, d = {}, p = {}",
                space.alpha,
                space.partition.d(),
                space.p
            )));
        }
        let r_min = cost(space, 1);
        if rate < r_min {
            return Err(Error::Config(format!(
                "code length {rate} below scheme minimum R_min = {r_min}"
            )));
        }
        let mut m0 = 1;
        for cand in 2..=space.partition.block_count() {
            if cost(space, cand) <= rate {
                m0 = cand;
            } else {
                break;
            }
        }
        let delta = tail_radius(space, m0);
        let mut budgets: Vec<u32> = (1..=m0).map(|m| budget(space, m, delta)).collect();
        let ranges: Vec<f64> = (1..=m0)
            .map(|m| grid_shrink(space, m) / space.weight(m))
            .collect();
        // Leftover bits are spread uniformly over all quantized
        // coefficients; the cost ladder roughly doubles per cutoff step, so
        // the bonus stays at 0 or 1 bit in practice.
        let coeffs: usize = (1..=m0).map(|m| space.partition.block_size(m)).sum();
        let base_cost: usize = (1..=m0)
            .map(|m| space.partition.block_size(m) * budgets[m - 1] as usize)
            .sum();
        let bonus = (((rate - base_cost) / coeffs) as u32).min(1);
        budgets
            .iter_mut()
            .for_each(|b| *b = (*b + bonus).min(B_MAX));
        let used_bits = (1..=m0)
            .map(|m| space.partition.block_size(m) * budgets[m - 1] as usize)
            .sum();
        let meta = QuantizerMeta {
            beta: space.alpha - space.partition.d() as f64 / 2.0,
            b_base: B_BASE,
            used_bits,
            tail_radius: delta,
        };
        Ok(BlockQuantizer {
            space: space.clone(),
            rate,
            m0,
            budgets,
            ranges,
            meta,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.m0
    }

    pub fn meta(&self) -> &QuantizerMeta {
        &self.meta
    }

    pub fn budgets(&self) -> &[u32] {
        &self.budgets
    }

    /// Smallest admissible code length for this space.
    pub fn minimum_rate(space: &SpaceSpec) -> usize {
        cost(space, 1)
    }

    fn cell_width(&self, m: usize) -> f64 {
        let cells = (1u64 << self.budgets[m - 1]) - 1;
        2.0 * self.ranges[m - 1] / cells as f64
    }
}

impl SignalCodec for BlockQuantizer {
    fn rate(&self) -> usize {
        self.rate
    }

    fn encode(&self, x: &Signal) -> Result<Bitstring> {
        if x.spec() != &self.space {
            return Err(Error::Shape("signal spec differs from codec space".into()));
        }
        let mut w = BitWriter::new(self.rate)?;
        for m in 1..=self.m0.min(x.truncation_level()) {
            let b = self.budgets[m - 1];
            let rho = self.ranges[m - 1];
            let cells = (1u64 << b) - 1;
            let width = self.cell_width(m);
            for &v in x.block(m) {
                let t = v.clamp(-rho, rho);
                let k = (((t + rho) / width).floor() as i64).clamp(0, cells as i64 - 1) as u64;
                w.write(k, b)?;
            }
        }
        // Blocks the signal does not store are zeros; the zero cell index
        // keeps the layout aligned.
        for m in x.truncation_level() + 1..=self.m0 {
            let b = self.budgets[m - 1];
            let zero_cell = (1u64 << (b - 1)) - 1;
            for _ in 0..self.space.partition.block_size(m) {
                w.write(zero_cell, b)?;
            }
        }
        Ok(w.finish())
    }

    fn decode(&self, bits: &Bitstring) -> Result<Signal> {
        if bits.len() != self.rate {
            return Err(Error::Decode(format!(
                "bitstring length {} differs from code length {}",
                bits.len(),
                self.rate
            )));
        }
        let mut r = BitReader::new(bits);
        let mut out = Signal::zero(self.space.clone());
        for m in 1..=self.m0 {
            let b = self.budgets[m - 1];
            let rho = self.ranges[m - 1];
            let cells = (1u64 << b) - 1;
            let width = self.cell_width(m);
            for v in out.block_mut(m).iter_mut() {
                let k = r.read(b)?.min(cells - 1);
                *v = -rho + (k as f64 + 0.5) * width;
            }
        }
        Ok(out)
    }
}

/// A codec given by an explicit codebook: encode is exact nearest-codeword
/// search (ties resolved toward the lexicographically smallest bitstring),
/// decode indexes the codebook and maps out-of-range bitstrings to the
/// last codeword.
pub struct EnumeratedCodec {
    rate: usize,
    codebook: Vec<Signal>,
}

impl EnumeratedCodec {
    pub fn new(rate: usize, codebook: Vec<Signal>) -> Result<Self> {
        if codebook.is_empty() {
            return Err(Error::Config("codebook must be non-empty".into()));
        }
        if rate == 0 || rate > ENUMERATION_MAX_RATE {
            return Err(Error::Config(format!(
                "enumerated codec rate must lie in 1..={ENUMERATION_MAX_RATE}"
            )));
        }
        if codebook.len() > 1usize << rate {
            return Err(Error::Config(format!(
                "codebook of {} entries does not fit {} bits",
                codebook.len(),
                rate
            )));
        }
        Ok(EnumeratedCodec { rate, codebook })
    }
}

impl SignalCodec for EnumeratedCodec {
    fn rate(&self) -> usize {
        self.rate
    }

    fn encode(&self, x: &Signal) -> Result<Bitstring> {
        let mut best = (f64::INFINITY, 0usize);
        for (i, c) in self.codebook.iter().enumerate() {
            let d = l2_distance(x, c)?;
            if d < best.0 {
                best = (d, i);
            }
        }
        Bitstring::from_value(self.rate, best.1 as u64)
    }

    fn decode(&self, bits: &Bitstring) -> Result<Signal> {
        if bits.len() != self.rate {
            return Err(Error::Decode("bitstring length mismatch".into()));
        }
        let mut idx = 0usize;
        for i in 0..bits.len() {
            idx = idx << 1 | bits.get(i) as usize;
        }
        Ok(self.codebook[idx.min(self.codebook.len() - 1)].clone())
    }
}

// --- empirical entropy numbers -------------------------------------------

/// An empirical upper estimate of the entropy number `e_{R+1}` of the
/// truncated class: the block-quantizer distortion on the given samples.
#[derive(Debug, Clone, Copy)]
pub struct EntropyEstimate {
    pub rate: usize,
    pub value: f64,
    /// Always true: the estimate is sample-based, not certified.
    pub empirical: bool,
}

pub fn entropy_number_upper(
    space: &SpaceSpec,
    rate: usize,
    samples: &[Signal],
) -> Result<EntropyEstimate> {
    let codec = BlockQuantizer::new(space, rate)?;
    Ok(EntropyEstimate {
        rate,
        value: distortion(&codec, samples)?,
        empirical: true,
    })
}

/// Sup-distortion of the block quantizer on `n_samples` critical samples
/// at every rate of `r_grid`, plus the least-squares slope of
/// `log₂ distortion` against `log₂ R`. The shared engine behind the slope
/// acceptance runs and the `codec-eval` experiment.
pub fn fitted_distortion_slope(
    measure: &crate::critical_measure::MeasureSpec,
    r_grid: &[usize],
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<(f64, Vec<(usize, f64)>)> {
    if r_grid.len() < 2 {
        return Err(Error::Domain(
            "need at least two rates to fit a slope".into(),
        ));
    }
    let m_blocks = measure.space().partition.block_count();
    let space = measure.space().clone();
    let curve: Vec<(usize, f64)> = {
        let mut codecs = Vec::with_capacity(r_grid.len());
        for &r in r_grid {
            codecs.push(BlockQuantizer::new(&space, r)?);
        }
        let per_shard: Vec<Vec<f64>> = run_sharded(n_samples, seed, threads, |_, count, rng| {
            let mut worst = vec![0.0f64; codecs.len()];
            for _ in 0..count {
                let x = sample_critical_panicking(measure, m_blocks, rng);
                for (i, codec) in codecs.iter().enumerate() {
                    let y = codec.decode(&codec.encode(&x).unwrap()).unwrap();
                    worst[i] = worst[i].max(l2_distance(&x, &y).unwrap());
                }
            }
            worst
        });
        let mut worst = vec![0.0f64; r_grid.len()];
        for shard in per_shard {
            for (w, v) in worst.iter_mut().zip(shard) {
                *w = w.max(v);
            }
        }
        r_grid.iter().copied().zip(worst).collect()
    };
    let xs: Vec<f64> = curve.iter().map(|(r, _)| (*r as f64).log2()).collect();
    let ys: Vec<f64> = curve.iter().map(|(_, d)| d.log2()).collect();
    Ok((crate::stats::ls_slope(&xs, &ys), curve))
}

fn sample_critical_panicking(
    measure: &crate::critical_measure::MeasureSpec,
    m_blocks: usize,
    rng: &mut Rng,
) -> Signal {
    crate::critical_measure::sample_critical(measure, m_blocks, rng)
        .expect("sampler on validated measure")
}

// --- Lipschitz transfer ----------------------------------------------------

/// Map from a decoded source signal into the target space.
pub type ForwardMap<'a> = Box<dyn Fn(&Signal) -> Vec<f64> + Sync + 'a>;
/// Nearest-point map into the source class at a given tolerance.
pub type ProjectMap<'a> = Box<dyn Fn(&Signal, f64) -> Signal + Sync + 'a>;

/// A codec pushed through a Lipschitz map: decoding becomes
/// `forward ∘ project_{R^{−s}} ∘ D_R`, encoding is nearest-codeword search
/// in the target space (or re-use of a source-side encode when the source
/// point is known).
pub struct TransferredCodec<'a> {
    base: &'a dyn SignalCodec,
    forward: ForwardMap<'a>,
    lipschitz: f64,
    project: ProjectMap<'a>,
    rate_hint: f64,
}

impl<'a> TransferredCodec<'a> {
    pub fn new(
        base: &'a dyn SignalCodec,
        forward: ForwardMap<'a>,
        lipschitz: f64,
        project: ProjectMap<'a>,
        rate_hint: f64,
    ) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::Config(format!(
                "transfer requires a verified Lipschitz constant, got {lipschitz}"
            )));
        }
        if !rate_hint.is_finite() || rate_hint <= 0.0 {
            return Err(Error::Config("rate hint s must be positive".into()));
        }
        Ok(TransferredCodec {
            base,
            forward,
            lipschitz,
            project,
            rate_hint,
        })
    }

    pub fn rate(&self) -> usize {
        self.base.rate()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Projection tolerance `R^{−s}` used on decoded source points.
    pub fn projection_tolerance(&self) -> f64 {
        (self.base.rate() as f64).powf(-self.rate_hint)
    }

    /// `D*_R = forward ∘ project ∘ D_R`.
    pub fn decode(&self, bits: &Bitstring) -> Result<Vec<f64>> {
        let x = self.base.decode(bits)?;
        Ok((self.forward)(&(self.project)(
            &x,
            self.projection_tolerance(),
        )))
    }

    /// Encodes a target point whose source preimage is known, by encoding
    /// the preimage. Error ≤ L·(source round-trip error + projection slack).
    pub fn encode_from_source(&self, x: &Signal) -> Result<Bitstring> {
        self.base.encode(x)
    }

    /// Exact nearest-codeword re-encoding by full enumeration; ties keep
    /// the lexicographically smallest bitstring. Only available for rates
    /// up to [`ENUMERATION_MAX_RATE`].
    pub fn encode_nearest(&self, y: &[f64]) -> Result<Bitstring> {
        let r = self.base.rate();
        if r > ENUMERATION_MAX_RATE {
            return Err(Error::Config(format!(
                "nearest-codeword enumeration limited to R ≤ {ENUMERATION_MAX_RATE}, got {r}"
            )));
        }
        let mut best: Option<(f64, Bitstring)> = None;
        for v in 0..1u64 << r {
            let bits = Bitstring::from_value(r, v)?;
            let z = self.decode(&bits)?;
            if z.len() != y.len() {
                return Err(Error::Shape("target dimension mismatch".into()));
            }
            let d: f64 = y
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, bits));
            }
        }
        Ok(best.expect("non-empty codebook").1)
    }
}

// --- countable-class fixture ------------------------------------------------

/// The codec `E_n/D_n` on the countable class
/// `{0} ∪ {x_m = (log₂(m+1))^{−s}·e_m}`: indices below `2^n` round-trip
/// exactly, everything else falls back to the zero element.
///
/// The class distortion is `(log₂(2^n+1))^{−s} ≤ n^{−s}`, yet each fixed
/// element is reproduced at *every* polynomial rate `σ` with constant
/// `(log₂(m+1))^σ`.
#[derive(Debug, Clone, Copy)]
pub struct G2Codec {
    s: f64,
    rate: u32,
}

impl G2Codec {
    pub fn new(s: f64, rate: u32) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("need s > 0, got {s}")));
        }
        if rate == 0 || rate > 64 {
            return Err(Error::Domain("G2 rate must lie in 1..=64".into()));
        }
        Ok(G2Codec { s, rate })
    }

    pub fn rate(&self) -> u32 {
        self.rate
    }

    fn codebook_limit(&self) -> u64 {
        if self.rate == 64 {
            u64::MAX
        } else {
            (1u64 << self.rate) - 1
        }
    }

    /// `‖x_m‖ = (log₂(m+1))^{−s}`, with `x_0 = 0`.
    pub fn element_norm(&self, m: u64) -> f64 {
        if m == 0 {
            0.0
        } else {
            ((m + 1) as f64).log2().powf(-self.s)
        }
    }

    pub fn encode_index(&self, m: u64) -> Bitstring {
        let stored = if m <= self.codebook_limit() { m } else { 0 };
        Bitstring::from_value(self.rate as usize, stored).expect("rate ≥ 1")
    }

    pub fn decode_index(&self, bits: &Bitstring) -> Result<u64> {
        if bits.len() != self.rate as usize {
            return Err(Error::Decode("bitstring length mismatch".into()));
        }
        BitReader::new(bits).read(self.rate)
    }

    /// `‖x_m − D_n(E_n(x_m))‖`.
    pub fn roundtrip_error(&self, m: u64) -> f64 {
        if m <= self.codebook_limit() {
            0.0
        } else {
            self.element_norm(m)
        }
    }

    /// Exact sup-distortion over the whole (countable) class: the first
    /// uncovered element is `m = 2^n`, so the value is
    /// `(log₂(2^n + 1))^{−s}`, evaluated without forming `2^n`.
    pub fn class_distortion(&self) -> f64 {
        let n = self.rate as f64;
        let log2_m_plus_1 = n + 2f64.powf(-n).ln_1p() * crate::stats::LOG2_E;
        log2_m_plus_1.powf(-self.s)
    }
}

// --- payload container --------------------------------------------------------

pub const PAYLOAD_MAGIC: [u8; 4] = *b"RDX1";
pub const SCHEME_BLOCK_QUANTIZER: u16 = 1;
pub const SCHEME_G2: u16 = 2;

/// `magic | scheme:u16 LE | R:u64 LE | packed bits`.
pub fn write_payload(scheme: u16, bits: &Bitstring) -> Vec<u8> {
    let mut out = Vec::with_capacity(14 + bits.as_bytes().len());
    out.extend_from_slice(&PAYLOAD_MAGIC);
    out.extend_from_slice(&scheme.to_le_bytes());
    out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    out.extend_from_slice(bits.as_bytes());
    out
}

pub fn read_payload(bytes: &[u8]) -> Result<(u16, Bitstring)> {
    if bytes.len() < 14 || bytes[..4] != PAYLOAD_MAGIC {
        return Err(Error::Decode("bad payload magic".into()));
    }
    let scheme = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    let rate = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    let body = bytes[14..].to_vec();
    Ok((scheme, Bitstring::from_bytes(rate, body)?))
}
