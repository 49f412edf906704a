//! Quantized feed-forward networks, their exact bit serialization,
//! capacity bounds, forward evaluation, and a heuristic minimal-size
//! search.
//!
//! A `(σ, W)`-quantized network keeps every weight and bias in
//! `[−W^{σ⌈log₂W⌉}, W^{σ⌈log₂W⌉}] ∩ 2^{−σ⌈log₂W⌉²}·ℤ`. Note the exponent
//! uses `⌈log₂ W⌉` (so the `W = 1` grid degenerates to `{−1, 0, 1}`),
//! while all bit-length bounds use `⌈log₂(1+W)⌉`.
//!
//! Serialization is layer-major with sparse `(position, value)` records;
//! the concrete layout constant `C₀` such that every bitstream has length
//! `≤ C₀·σ·W·⌈log₂(1+W)⌉²` is computed from the layout in
//! [`layout_c0`], not assumed.

use crate::codec::{BitReader, BitWriter, Bitstring};
use crate::error::{Error, Result};
use crate::phase_bounds::ceil_log2_1p;
use rand::Rng as _;

/// Grid parameters of a `(σ, W)` quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantGrid {
    pub sigma: u32,
    pub w_cap: u64,
}

impl QuantGrid {
    pub fn new(sigma: u32, w_cap: u64) -> Result<Self> {
        if sigma == 0 || w_cap == 0 {
            return Err(Error::Domain("σ and W must be positive integers".into()));
        }
        if sigma > 8 || w_cap > 1 << 20 {
            return Err(Error::Size("σ ≤ 8 and W ≤ 2^20 supported".into()));
        }
        Ok(QuantGrid { sigma, w_cap })
    }

    /// `⌈log₂ W⌉` (0 for W = 1).
    pub fn log_w(&self) -> u32 {
        if self.w_cap <= 1 {
            0
        } else {
            64 - (self.w_cap - 1).leading_zeros()
        }
    }

    /// Grid spacing `2^{−σ⌈log₂W⌉²}`.
    pub fn spacing_log2(&self) -> i32 {
        -((self.sigma * self.log_w() * self.log_w()) as i32)
    }

    /// Magnitude bound `W^{σ⌈log₂W⌉}`.
    pub fn magnitude_bound(&self) -> f64 {
        (self.w_cap as f64).powi((self.sigma * self.log_w()) as i32)
    }

    /// Whether `v` lies on the grid.
    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() || v.abs() > self.magnitude_bound() {
            return false;
        }
        if v == 0.0 {
            return true;
        }
        // v·2^{σ⌈log₂W⌉²} must be an integer: its exponent must clear the
        // scale.
        let scaled = v * 2f64.powi(-self.spacing_log2());
        if scaled.abs() >= 2f64.powi(63) {
            // Coarser than integer resolution: necessarily integral if it
            // is a finite f64 of that magnitude.
            return true;
        }
        scaled.fract() == 0.0
    }

    /// Nearest grid point; negative zero normalizes to 0.
    pub fn quantize(&self, v: f64) -> f64 {
        let bound = self.magnitude_bound();
        let scale = 2f64.powi(-self.spacing_log2());
        let q = (v.clamp(-bound, bound) * scale).round() / scale;
        if q == 0.0 {
            0.0
        } else {
            q
        }
    }
}

/// A feed-forward network with declared architecture and quantized
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedNetwork {
    /// `(A_ℓ, b_ℓ)` with `A_ℓ` stored row-major as `N_ℓ × N_{ℓ−1}`.
    layers: Vec<(Vec<f64>, Vec<f64>)>,
    dims: Vec<usize>,
    grid: QuantGrid,
}

impl QuantizedNetwork {
    pub fn new(
        dims: Vec<usize>,
        layers: Vec<(Vec<f64>, Vec<f64>)>,
        grid: QuantGrid,
    ) -> Result<Self> {
        if dims.len() < 2 || layers.len() != dims.len() - 1 {
            return Err(Error::Shape(
                "need dims = [N₀..N_L] and L = dims.len()−1 layers".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::Shape("layer widths must be positive".into()));
        }
        for (l, (a, b)) in layers.iter().enumerate() {
            if a.len() != dims[l + 1] * dims[l] || b.len() != dims[l + 1] {
                return Err(Error::Shape(format!(
                    "layer {l} has wrong matrix/bias shape"
                )));
            }
            for &v in a.iter().chain(b.iter()) {
                if !grid.contains(v) {
                    return Err(Error::Quantization(format!(
                        "entry {v} is off the (σ={}, W={}) grid",
                        grid.sigma, grid.w_cap
                    )));
                }
            }
        }
        let net = QuantizedNetwork { layers, dims, grid };
        if net.weight_count() > grid.w_cap {
            return Err(Error::Quantization(format!(
                "network has {} nonzeros, cap is {}",
                net.weight_count(),
                grid.w_cap
            )));
        }
        Ok(net)
    }

    /// All-zero single-layer network of shape `d_in → d_out`.
    pub fn zero(d_in: usize, d_out: usize, grid: QuantGrid) -> Self {
        QuantizedNetwork {
            layers: vec![(vec![0.0; d_out * d_in], vec![0.0; d_out])],
            dims: vec![d_in, d_out],
            grid,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn grid(&self) -> QuantGrid {
        self.grid
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.layers
    }

    pub fn d_in(&self) -> usize {
        self.dims[0]
    }

    pub fn d_out(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// `W(Φ)`: number of nonzero matrix and bias entries.
    pub fn weight_count(&self) -> u64 {
        self.layers
            .iter()
            .map(|(a, b)| {
                a.iter().filter(|v| **v != 0.0).count() + b.iter().filter(|v| **v != 0.0).count()
            })
            .sum::<usize>() as u64
    }

    /// `N(Φ)`: total neuron count.
    pub fn neuron_count(&self) -> usize {
        self.dims.iter().sum()
    }
}

/// Exact forward pass: activation componentwise on all but the last
/// layer. The activation must fix 0 (checked once per call on the handle).
pub fn forward(
    net: &QuantizedNetwork,
    activation: &dyn Fn(f64) -> f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != net.d_in() {
        return Err(Error::Shape(format!(
            "input has {} entries, network expects {}",
            x.len(),
            net.d_in()
        )));
    }
    if activation(0.0) != 0.0 {
        return Err(Error::Domain("activation must satisfy ϱ(0) = 0".into()));
    }
    let mut cur = x.to_vec();
    let last = net.layers.len() - 1;
    for (l, (a, b)) in net.layers.iter().enumerate() {
        let (n_out, n_in) = (net.dims[l + 1], net.dims[l]);
        let mut next = vec![0.0f64; n_out];
        for i in 0..n_out {
            let mut acc = b[i];
            let row = &a[i * n_in..(i + 1) * n_in];
            for (w, v) in row.iter().zip(&cur) {
                acc += w * v;
            }
            next[i] = if l < last { activation(acc) } else { acc };
        }
        cur = next;
    }
    Ok(cur)
}

// --- serialization ---------------------------------------------------------

/// Field widths of the serialization layout for a given context.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub grid: QuantGrid,
    pub d_in: usize,
    /// Bits of the `L` field and of per-layer record counts.
    pub b_count: u32,
    /// Bits per declared dimension.
    pub b_dim: u32,
    /// Bits per value record.
    pub b_value: u32,
}

impl Layout {
    pub fn new(grid: QuantGrid, d_in: usize) -> Layout {
        let b_w = ceil_log2_1p(grid.w_cap);
        let b_d = ceil_log2_1p(d_in as u64);
        Layout {
            grid,
            d_in,
            b_count: b_w + 1,
            b_dim: b_w + b_d + 1,
            b_value: 2 * grid.sigma * b_w * b_w + 2,
        }
    }

    /// Maximum encodable layer count: layers beyond `W+1` carry no
    /// information that survives pruning, so the field is sized for that.
    pub fn max_layers(&self) -> u64 {
        (1u64 << self.b_count) - 1
    }

    pub fn max_dim(&self) -> u64 {
        (1u64 << self.b_dim.min(32)) - 1
    }

    /// Upper bound on the bitstream length of any encodable network.
    pub fn length_bound(&self) -> u64 {
        let w = self.grid.w_cap;
        let l_max = w + 1;
        // L field + dims + per-layer counts + W sparse records.
        self.b_count as u64
            + (l_max + 1) * self.b_dim as u64
            + l_max * self.b_count as u64
            + w * (2 * self.b_dim as u64 + self.b_value as u64)
    }
}

/// The layout constant `C₀ = C₀(d)` with
/// `length_bound(σ, W, d) ≤ C₀·σ·W·⌈log₂(1+W)⌉²` for all `σ, W ≥ 1`,
/// computed by maximizing the exact layout bound over the supported
/// parameter range.
pub fn layout_c0(d_in: usize) -> u64 {
    let mut c0 = 0.0f64;
    for sigma in 1..=8u32 {
        for log_w in 0..=20u32 {
            let w = 1u64 << log_w;
            for w in [w, w + w / 2] {
                if w == 0 || w > 1 << 20 {
                    continue;
                }
                let grid = QuantGrid { sigma, w_cap: w };
                let layout = Layout::new(grid, d_in);
                let b_w = ceil_log2_1p(w) as f64;
                let ratio = layout.length_bound() as f64 / (sigma as f64 * w as f64 * b_w * b_w);
                c0 = c0.max(ratio);
            }
        }
    }
    c0.ceil() as u64
}

/// `log₂ |𝒩𝒩_{d,W}^{σ,ϱ}|` upper bound: the serialization length bound of
/// the layout (injectivity argument).
pub fn capacity_log2(w: u64, sigma: u32, d_in: usize) -> Result<f64> {
    let grid = QuantGrid::new(sigma, w)?;
    Ok(Layout::new(grid, d_in).length_bound() as f64)
}

/// Serializes the network. Injective on valid networks; decoding is the
/// exact inverse.
pub fn encode_network(net: &QuantizedNetwork) -> Result<Bitstring> {
    let layout = Layout::new(net.grid, net.d_in());
    let l = net.layer_count() as u64;
    if l > layout.max_layers() || l > net.grid.w_cap + 1 {
        return Err(Error::Config(format!(
            "layer count {l} exceeds the encodable bound; prune trivial layers first"
        )));
    }
    for &n in net.dims() {
        if n as u64 > layout.max_dim() {
            return Err(Error::Config(format!(
                "layer width {n} exceeds the encodable bound"
            )));
        }
    }
    let mut w = BitWriter::new(layout.length_bound() as usize)?;
    w.write(l, layout.b_count)?;
    for &n in &net.dims[1..] {
        w.write(n as u64, layout.b_dim)?;
    }
    for (li, (a, b)) in net.layers.iter().enumerate() {
        let (n_out, n_in) = (net.dims[li + 1], net.dims[li]);
        let pos_bits = bits_for(n_out as u64 * (n_in as u64 + 1));
        let mut records: Vec<(u64, f64)> = Vec::new();
        for i in 0..n_out {
            for j in 0..n_in {
                let v = a[i * n_in + j];
                if v != 0.0 {
                    records.push(((i * (n_in + 1) + j) as u64, v));
                }
            }
            if b[i] != 0.0 {
                records.push(((i * (n_in + 1) + n_in) as u64, b[i]));
            }
        }
        w.write(records.len() as u64, layout.b_count)?;
        for (pos, v) in records {
            w.write(pos, pos_bits)?;
            write_grid_value(&mut w, v, &layout)?;
        }
    }
    let used = w.position();
    let mut bits = w.finish();
    // Truncate the zero tail: re-pack to the used length.
    if used < bits.len() {
        let mut packed = Bitstring::zeros(used.max(1))?;
        for i in 0..used {
            packed.set(i, bits.get(i));
        }
        std::mem::swap(&mut bits, &mut packed);
    }
    Ok(bits)
}

/// Inverse of [`encode_network`]; `grid` and `d_in` are carried as
/// context, the architecture travels in the header.
pub fn decode_network(bits: &Bitstring, grid: QuantGrid, d_in: usize) -> Result<QuantizedNetwork> {
    let layout = Layout::new(grid, d_in);
    let mut r = BitReader::new(bits);
    let l = r.read(layout.b_count)? as usize;
    if l == 0 {
        return Err(Error::Decode("empty architecture".into()));
    }
    let mut dims = vec![d_in];
    for _ in 0..l {
        let n = r.read(layout.b_dim)? as usize;
        if n == 0 {
            return Err(Error::Decode("zero layer width".into()));
        }
        dims.push(n);
    }
    let mut layers = Vec::with_capacity(l);
    for li in 0..l {
        let (n_out, n_in) = (dims[li + 1], dims[li]);
        let pos_bits = bits_for(n_out as u64 * (n_in as u64 + 1));
        let count = r.read(layout.b_count)? as usize;
        let mut a = vec![0.0f64; n_out * n_in];
        let mut b = vec![0.0f64; n_out];
        for _ in 0..count {
            let pos = r.read(pos_bits)?;
            let v = read_grid_value(&mut r, &layout)?;
            let row = (pos / (n_in as u64 + 1)) as usize;
            let col = (pos % (n_in as u64 + 1)) as usize;
            if row >= n_out {
                return Err(Error::Decode("record position out of range".into()));
            }
            if col == n_in {
                b[row] = v;
            } else {
                a[row * n_in + col] = v;
            }
        }
        layers.push((a, b));
    }
    QuantizedNetwork::new(dims, layers, grid)
}

fn bits_for(count: u64) -> u32 {
    // ⌈log₂ count⌉, at least 1.
    ceil_log2_1p(count.saturating_sub(1)).max(1)
}

/// Writes one grid value in `b_value` bits. Small grids use the plain
/// offset index `k + K`; huge grids (where the index would overflow u64
/// arithmetic) store the raw IEEE-754 pattern, which the budget always
/// accommodates since `b_value ≥ 64` exactly in that regime.
fn write_grid_value(w: &mut BitWriter, v: f64, layout: &Layout) -> Result<()> {
    if !layout.grid.contains(v) {
        return Err(Error::Quantization(format!("value {v} is off the grid")));
    }
    if layout.b_value < 64 {
        // b_value < 64 implies σ⌈log₂(1+W)⌉² < 31, so the full index range
        // 2K + 1 ≤ 2^{2σ⌈log₂W⌉²+1}·W^... fits comfortably in u64.
        let scale = 2f64.powi(-layout.grid.spacing_log2());
        let k = (v * scale).round() as i64;
        let big_k = (layout.grid.magnitude_bound() * scale).round() as u64;
        let idx = (k + big_k as i64) as u64;
        w.write(idx, layout.b_value)?;
        Ok(())
    } else {
        w.write(v.to_bits(), 64)?;
        let mut pad = layout.b_value - 64;
        while pad > 0 {
            let chunk = pad.min(64);
            w.write(0, chunk)?;
            pad -= chunk;
        }
        Ok(())
    }
}

fn read_grid_value(r: &mut BitReader, layout: &Layout) -> Result<f64> {
    if layout.b_value < 64 {
        let scale = 2f64.powi(-layout.grid.spacing_log2());
        let big_k = (layout.grid.magnitude_bound() * scale) as u64;
        let idx = r.read(layout.b_value)?;
        if idx > 2 * big_k {
            return Err(Error::Decode("grid index out of range".into()));
        }
        Ok((idx as i64 - big_k as i64) as f64 / scale)
    } else {
        let bits = r.read(64)?;
        let mut pad = layout.b_value - 64;
        while pad > 0 {
            let chunk = pad.min(64);
            let z = r.read(chunk)?;
            if z != 0 {
                return Err(Error::Decode("nonzero padding in value record".into()));
            }
            pad -= chunk;
        }
        let v = f64::from_bits(bits);
        if !layout.grid.contains(v) {
            return Err(Error::Decode("decoded value off the grid".into()));
        }
        Ok(v)
    }
}

// --- heuristic W_ε search -----------------------------------------------------

/// A sampled approximation target on a quadrature grid.
#[derive(Debug, Clone)]
pub struct GridTarget {
    /// Evaluation points, one row per point.
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Quadrature weight per point.
    pub weights: Vec<f64>,
}

impl GridTarget {
    /// Uniform grid on `[0,1]` with midpoint weights.
    pub fn on_unit_interval(f: impl Fn(f64) -> f64, n: usize) -> GridTarget {
        let h = 1.0 / n as f64;
        let points: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 + 0.5) * h]).collect();
        let values = points.iter().map(|p| f(p[0])).collect();
        GridTarget {
            points,
            values,
            weights: vec![h; n],
        }
    }

    fn error(&self, net: &QuantizedNetwork, activation: &dyn Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for ((p, &v), &w) in self.points.iter().zip(&self.values).zip(&self.weights) {
            let out = forward(net, activation, p).expect("dims fixed by search");
            let d = out[0] - v;
            acc += w * d * d;
        }
        acc.sqrt()
    }

    fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Result of the heuristic search: an upper bound for `W_ε`, never a
/// certificate of optimality.
#[derive(Debug, Clone)]
pub struct WSearchResult {
    pub w: u64,
    pub error: f64,
    pub net: QuantizedNetwork,
    /// Always true.
    pub heuristic: bool,
}

/// Randomized + coordinate-descent search for the smallest `W ≤ w_max`
/// whose best found `(σ,W)`-quantized net reaches quadrature error ≤ ε.
/// The candidate schedule for each `W` is a deterministic function of
/// `(seed, W)`, so shrinking ε can only increase the returned `W`.
pub fn w_eps_search(
    target: &GridTarget,
    activation: &dyn Fn(f64) -> f64,
    sigma: u32,
    eps: f64,
    w_max: u64,
    seed: u64,
) -> Result<Option<WSearchResult>> {
    if eps <= 0.0 {
        return Err(Error::Domain("need ε > 0".into()));
    }
    let d_in = target.points.first().map(|p| p.len()).unwrap_or(1);
    if d_in == 0 || target.points.len() != target.values.len() {
        return Err(Error::Shape("malformed target grid".into()));
    }
    // W(Φ) = 0: the zero network.
    let zero = QuantizedNetwork::zero(d_in, 1, QuantGrid::new(sigma, 1)?);
    if target.norm() <= eps {
        return Ok(Some(WSearchResult {
            w: 0,
            error: target.error(&zero, activation),
            net: zero,
            heuristic: true,
        }));
    }
    for w_cap in 1..=w_max {
        let grid = QuantGrid::new(sigma, w_cap)?;
        let (err, net) = best_net_for_w(target, activation, grid, seed);
        if err <= eps {
            return Ok(Some(WSearchResult {
                w: w_cap,
                error: err,
                net,
                heuristic: true,
            }));
        }
    }
    Ok(None)
}

fn best_net_for_w(
    target: &GridTarget,
    activation: &dyn Fn(f64) -> f64,
    grid: QuantGrid,
    seed: u64,
) -> (f64, QuantizedNetwork) {
    let d_in = target.points[0].len();
    let mut best: Option<(f64, QuantizedNetwork)> = None;
    let consider = |net: QuantizedNetwork, best: &mut Option<(f64, QuantizedNetwork)>| {
        if net.weight_count() <= grid.w_cap {
            let e = target.error(&net, activation);
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                *best = Some((e, net));
            }
        }
    };

    // Affine least-squares fit, snapped to the grid and trimmed to the cap
    // (single layer, no activation).
    if d_in == 1 {
        let xs: Vec<f64> = target.points.iter().map(|p| p[0]).collect();
        let slope = crate::stats::ls_slope(&xs, &target.values);
        let intercept = crate::stats::mean(&target.values) - slope * crate::stats::mean(&xs);
        let mut a = grid.quantize(slope);
        let mut b = grid.quantize(intercept);
        if grid.w_cap < 2 {
            // Keep the single most useful coefficient.
            if a.abs() * 0.5 >= b.abs() {
                b = 0.0;
            } else {
                a = 0.0;
            }
        }
        if let Ok(net) = QuantizedNetwork::new(vec![1, 1], vec![(vec![a], vec![b])], grid) {
            consider(net, &mut best);
        }
    }

    // Random sparse one-hidden-layer nets plus grid coordinate descent.
    let mut rng = crate::mc::shard_rng(seed, grid.w_cap);
    let hidden = (grid.w_cap as usize / 3).clamp(1, 8);
    let restarts = 6;
    for _ in 0..restarts {
        let dims = vec![d_in, hidden, 1];
        let mut layers = vec![
            (vec![0.0; hidden * d_in], vec![0.0; hidden]),
            (vec![0.0; hidden], vec![0.0; 1]),
        ];
        let spacing = 2f64.powi(grid.spacing_log2());
        let budget = grid.w_cap as usize;
        for _ in 0..budget {
            // Scatter a few nonzeros at random positions.
            let layer = rng.random_range(0..2usize);
            let (a, b) = &mut layers[layer];
            let scale = 4.0f64.min(grid.magnitude_bound());
            let v = grid.quantize(rng.random_range(-scale..scale));
            if rng.random_range(0..4usize) == 0 {
                let i = rng.random_range(0..b.len());
                b[i] = v;
            } else {
                let i = rng.random_range(0..a.len());
                a[i] = v;
            }
        }
        let Ok(mut net) = QuantizedNetwork::new(dims.clone(), layers, grid) else {
            continue;
        };
        // Coordinate descent over the nonzero entries.
        for _ in 0..3 {
            let mut improved = false;
            for l in 0..net.layers.len() {
                for slot in 0..net.layers[l].0.len() + net.layers[l].1.len() {
                    let read = |n: &QuantizedNetwork| {
                        let (a, b) = &n.layers[l];
                        if slot < a.len() {
                            a[slot]
                        } else {
                            b[slot - a.len()]
                        }
                    };
                    let cur = read(&net);
                    let base_err = target.error(&net, activation);
                    let mut local_best = (base_err, cur);
                    for cand in [
                        cur + spacing,
                        cur - spacing,
                        cur * 2.0,
                        cur / 2.0,
                        0.0,
                        grid.quantize(cur + 1.0),
                        grid.quantize(cur - 1.0),
                    ] {
                        let cand = grid.quantize(cand);
                        if cand == cur {
                            continue;
                        }
                        let mut trial = net.clone();
                        {
                            let (a, b) = &mut trial.layers[l];
                            if slot < a.len() {
                                a[slot] = cand;
                            } else {
                                let k = slot - a.len();
                                b[k] = cand;
                            }
                        }
                        if trial.weight_count() > grid.w_cap {
                            continue;
                        }
                        let e = target.error(&trial, activation);
                        if e < local_best.0 {
                            local_best = (e, cand);
                        }
                    }
                    if local_best.1 != cur {
                        let (a, b) = &mut net.layers[l];
                        if slot < a.len() {
                            a[slot] = local_best.1;
                        } else {
                            let k = slot - a.len();
                            b[k] = local_best.1;
                        }
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        consider(net, &mut best);
    }

    let (e, net) = best.expect("at least one candidate considered");
    (e, net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{shard_rng, Rng};
    use std::collections::HashSet;

    fn relu(x: f64) -> f64 {
        x.max(0.0)
    }

    fn random_net(grid: QuantGrid, rng: &mut Rng) -> QuantizedNetwork {
        let l_cap = 3usize.min(grid.w_cap as usize + 1);
        let l = rng.random_range(1..=l_cap);
        let mut dims = vec![rng.random_range(1..=3usize)];
        for _ in 0..l {
            dims.push(rng.random_range(1..=4usize));
        }
        let mut remaining = grid.w_cap;
        let mut layers = Vec::new();
        for li in 0..l {
            let (n_out, n_in) = (dims[li + 1], dims[li]);
            let mut a = vec![0.0f64; n_out * n_in];
            let mut b = vec![0.0f64; n_out];
            let slots = a.len() + b.len();
            for s in 0..slots {
                if remaining == 0 || rng.random_range(0..3u32) == 0 {
                    continue;
                }
                let v = grid.quantize(rng.random_range(-3.0..3.0f64));
                if v == 0.0 {
                    continue;
                }
                if s < a.len() {
                    a[s] = v;
                } else {
                    b[s - a.len()] = v;
                }
                remaining -= 1;
            }
            layers.push((a, b));
        }
        QuantizedNetwork::new(dims, layers, grid).unwrap()
    }

    #[test]
    fn forward_examples() {
        let grid = QuantGrid::new(1, 4).unwrap();
        // All-zero weights: output 0 through ϱ(0) = 0.
        let net = QuantizedNetwork::zero(3, 1, grid);
        assert_eq!(forward(&net, &relu, &[1.0, -2.0, 3.0]).unwrap(), vec![0.0]);

        // Identity-on-grid single layer with ReLU and x ≥ 0.
        let ident = QuantizedNetwork::new(
            vec![2, 2],
            vec![(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0])],
            grid,
        )
        .unwrap();
        assert_eq!(forward(&ident, &relu, &[0.5, 2.0]).unwrap(), vec![0.5, 2.0]);

        // Two-layer ReLU hat function: hat(x) = relu(x) − 2relu(x − 1/2).
        let hat = QuantizedNetwork::new(
            vec![1, 2, 1],
            vec![
                (vec![1.0, 1.0], vec![0.0, -0.5]),
                (vec![1.0, -2.0], vec![0.0]),
            ],
            QuantGrid::new(1, 8).unwrap(),
        )
        .unwrap();
        for i in 0..100 {
            let x = i as f64 / 99.0;
            let direct = relu(x) - 2.0 * relu(x - 0.5);
            let out = forward(&hat, &relu, &[x]).unwrap()[0];
            assert!((out - direct).abs() < 1e-12);
        }

        // Activation not fixing 0 is rejected.
        assert!(forward(&net, &|x| x + 1.0, &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn grid_membership_and_w1_degeneracy() {
        // W = 1: ⌈log₂ 1⌉ = 0, grid = [−1,1] ∩ ℤ.
        let g1 = QuantGrid::new(1, 1).unwrap();
        assert!(g1.contains(0.0) && g1.contains(1.0) && g1.contains(-1.0));
        assert!(!g1.contains(0.5) && !g1.contains(2.0));

        let g = QuantGrid::new(2, 4).unwrap();
        // spacing 2^{−2·4} = 1/256, bound 4⁸.
        assert_eq!(g.spacing_log2(), -8);
        assert!(g.contains(3.0 / 256.0));
        assert!(!g.contains(1.0 / 512.0));
        assert_eq!(g.quantize(0.3), (0.3f64 * 256.0).round() / 256.0);
    }

    #[test]
    fn roundtrip_200_random_nets() {
        let mut rng = shard_rng(51, 0);
        for i in 0..200 {
            let sigma = 1 + (i % 3) as u32;
            let w_cap = [1u64, 2, 7, 16, 64][i % 5];
            let grid = QuantGrid::new(sigma, w_cap).unwrap();
            let net = random_net(grid, &mut rng);
            let bits = encode_network(&net).unwrap();
            let back = decode_network(&bits, grid, net.d_in()).unwrap();
            assert_eq!(net, back, "roundtrip failed for σ={sigma} W={w_cap}");
            let b_w = ceil_log2_1p(w_cap) as u64;
            let bound = layout_c0(net.d_in()) * sigma as u64 * w_cap * b_w * b_w;
            assert!(
                (bits.len() as u64) <= bound,
                "bitstream {} exceeds C₀σW⌈log₂(1+W)⌉² = {bound}",
                bits.len()
            );
        }
    }

    #[test]
    fn empty_net_is_header_only() {
        let grid = QuantGrid::new(1, 4).unwrap();
        let net = QuantizedNetwork::zero(2, 1, grid);
        assert_eq!(net.weight_count(), 0);
        let bits = encode_network(&net).unwrap();
        let layout = Layout::new(grid, 2);
        assert_eq!(
            bits.len() as u32,
            layout.b_count + layout.b_dim + layout.b_count
        );
        let back = decode_network(&bits, grid, 2).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn encode_rejects_off_grid_and_truncated_decode_errors() {
        let grid = QuantGrid::new(1, 2).unwrap();
        assert!(matches!(
            QuantizedNetwork::new(vec![1, 1], vec![(vec![0.3], vec![0.0])], grid),
            Err(Error::Quantization(_))
        ));
        let net = QuantizedNetwork::new(vec![1, 1], vec![(vec![1.5], vec![-0.5])], grid).unwrap();
        let bits = encode_network(&net).unwrap();
        let truncated = Bitstring::from_value(bits.len() - 4, 0).unwrap();
        assert!(decode_network(&truncated, grid, 1).is_err());
    }

    #[test]
    fn injectivity_hash_check() {
        let mut rng = shard_rng(52, 0);
        let grid = QuantGrid::new(2, 16).unwrap();
        let mut nets = HashSet::new();
        let mut streams = HashSet::new();
        for _ in 0..10_000 {
            let net = random_net(grid, &mut rng);
            let bits = encode_network(&net).unwrap();
            let key = format!("{:?}{:?}", net.dims(), net.layers());
            if nets.insert(key) {
                // d_in is decode context, so the stream space is per-d_in.
                assert!(
                    streams.insert((net.d_in(), bits.len(), bits.as_bytes().to_vec())),
                    "distinct nets collided in bitstream space"
                );
            }
        }
    }

    #[test]
    fn capacity_monotone_and_micro_enumeration() {
        let d = 1usize;
        // Monotone in W and σ.
        let mut prev = 0.0;
        for w in [1u64, 2, 4, 8, 64, 512] {
            let c = capacity_log2(w, 1, d).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        assert!(capacity_log2(8, 2, d).unwrap() > capacity_log2(8, 1, d).unwrap());
        // Definitional tie to the layout bound.
        let grid = QuantGrid::new(1, 2).unwrap();
        assert_eq!(
            capacity_log2(2, 1, d).unwrap(),
            Layout::new(grid, d).length_bound() as f64
        );

        // Micro scale brute force: one layer, d_in = 1, W = 2, σ = 1.
        // Grid: [−2, 2] ∩ ½ℤ → 9 values for each of (a, b).
        let mut functions = HashSet::new();
        let probe: Vec<f64> = (0..16).map(|i| i as f64 / 5.0 - 1.5).collect();
        for ai in -4i32..=4 {
            for bi in -4i32..=4 {
                let (a, b) = (ai as f64 / 2.0, bi as f64 / 2.0);
                let net =
                    QuantizedNetwork::new(vec![1, 1], vec![(vec![a], vec![b])], grid).unwrap();
                let fingerprint: Vec<u64> = probe
                    .iter()
                    .map(|x| forward(&net, &relu, &[*x]).unwrap()[0].to_bits())
                    .collect();
                functions.insert(fingerprint);
            }
        }
        assert!((functions.len() as f64).log2() <= capacity_log2(2, 1, d).unwrap());
    }

    #[test]
    fn w_search_edges_and_monotonicity() {
        // Zero target: the zero network at W = 0 with error 0.
        let zero = GridTarget::on_unit_interval(|_| 0.0, 64);
        let res = w_eps_search(&zero, &relu, 1, 0.01, 8, 61).unwrap().unwrap();
        assert_eq!(res.w, 0);
        assert_eq!(res.error, 0.0);
        assert!(res.heuristic);

        // Grid-representable affine target found at machine precision.
        let affine = GridTarget::on_unit_interval(|x| 1.5 * x - 0.5, 64);
        let res = w_eps_search(&affine, &relu, 2, 1e-9, 8, 62)
            .unwrap()
            .unwrap();
        assert!(res.w <= 4, "affine target needed W = {}", res.w);
        assert!(res.error <= 1e-9);

        // Shrinking ε never decreases the returned W on the same schedule.
        let target = GridTarget::on_unit_interval(|x| (2.0 * x - 0.7).max(0.0), 48);
        let mut prev_w = 0u64;
        for eps in [0.5, 0.2, 0.05, 0.01] {
            match w_eps_search(&target, &relu, 1, eps, 10, 63).unwrap() {
                Some(r) => {
                    assert!(r.w >= prev_w, "W decreased when ε shrank");
                    prev_w = r.w;
                }
                None => {
                    prev_w = u64::MAX; // budget exhausted; stays exhausted
                }
            }
        }
    }
}
