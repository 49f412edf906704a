//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured quantities. Tolerances are pinned in
//! code, not configurable.
//!
//! Run with `cargo test --release -p rdlab --test acceptance -- --nocapture`.

use rdlab::config::{ExperimentConfig, ExperimentKind};
use rdlab::experiments::{codec_success_counts, volume_cell};
use rdlab_core::codec::fitted_distortion_slope;
use rdlab_core::critical_measure::{block_ball_bound, growth_constants, m_tilde, MeasureSpec};
use rdlab_core::exponent::{lp_norm, Exponent};
use rdlab_core::lp_geometry::{ball_volume, sample_uniform_ball, BallSpec};
use rdlab_core::mc::shard_rng;
use rdlab_core::nn_coding::{
    capacity_log2, decode_network, encode_network, forward, layout_c0, QuantGrid, QuantizedNetwork,
};
use rdlab_core::phase_bounds::{ceil_log2_1p, success_probability_bound};
use rdlab_core::sequence_core::{PartitionSpec, SpaceSpec};
use rdlab_core::stats::{binomial_stderr, ks_statistic_uniform};
use rdlab_core::wavelet_besov::sample_besov_ball;

fn criterion(id: u32, desc: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("ACCEPTANCE {id:02} ({desc}): PASS — {detail}"),
        Err(msg) => {
            println!("ACCEPTANCE {id:02} ({desc}): FAIL — {msg}");
            panic!("criterion {id} failed: {msg}");
        }
    }
}

fn space(d: u32, m: u32, p: Exponent, q: Exponent, alpha: f64) -> SpaceSpec {
    SpaceSpec::new(PartitionSpec::dyadic(d, m).unwrap(), p, q, alpha, 0.0).unwrap()
}

#[test]
fn acceptance_01_volume_oracle() {
    criterion(1, "volume oracle", || {
        // Exact values first.
        let pi = ball_volume(&BallSpec::new(Exponent::Finite(2.0), 2, 1.0).unwrap());
        if (pi - std::f64::consts::PI).abs() > 1e-12 {
            return Err(format!("vol(B₂²) = {pi} ≠ π"));
        }
        let cube = ball_volume(&BallSpec::new(Exponent::Infinity, 3, 1.0).unwrap());
        if (cube - 8.0).abs() > 1e-12 {
            return Err(format!("vol(B∞³) = {cube} ≠ 8"));
        }
        let cross = ball_volume(&BallSpec::new(Exponent::Finite(1.0), 2, 1.0).unwrap());
        if (cross - 2.0).abs() > 1e-12 {
            return Err(format!("vol(B₁²) = {cross} ≠ 2"));
        }

        // MC rejection telescope, 10⁶ samples per stage, 2% relative.
        let ps = [
            Exponent::Finite(0.5),
            Exponent::Finite(1.0),
            Exponent::Finite(2.0),
            Exponent::Finite(3.0),
            Exponent::Infinity,
        ];
        let cells: Vec<(Exponent, usize)> = ps
            .iter()
            .flat_map(|&p| (1..=6).map(move |m| (p, m)))
            .collect();
        let results = std::sync::Mutex::new(Vec::new());
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..8 {
                let (next, results, cells) = (&next, &results, &cells);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    let (p, m) = cells[i];
                    let (exact, est, se) = volume_cell(p, m, 1_000_000, 10_100 + i as u64);
                    results.lock().unwrap().push((p, m, exact, est, se));
                });
            }
        });
        let mut worst_rel = 0.0f64;
        for (p, m, exact, est, _se) in results.into_inner().unwrap() {
            let rel = (est - exact).abs() / exact;
            if rel > 0.02 {
                return Err(format!(
                    "p={p} m={m}: MC {est} vs exact {exact} ({rel:.3} rel)"
                ));
            }
            worst_rel = worst_rel.max(rel);
        }
        Ok(format!(
            "30 cells within 2% (worst {worst_rel:.4}); exact π/8/2 at 1e-12"
        ))
    });
}

#[test]
fn acceptance_02_sampler_radial_law() {
    criterion(2, "sampler law (KS)", || {
        let n = 100_000usize;
        let threshold = 1.63 / (n as f64).sqrt();
        let mut worst = 0.0f64;
        for (pi, p) in [
            Exponent::Finite(1.0),
            Exponent::Finite(2.0),
            Exponent::Infinity,
        ]
        .into_iter()
        .enumerate()
        {
            for m in [2usize, 4, 8] {
                let spec = BallSpec::new(p, m, 1.0).unwrap();
                let mut rng = shard_rng(20_200 + pi as u64, m as u64);
                let mut us: Vec<f64> = (0..n)
                    .map(|_| {
                        let x = sample_uniform_ball(&spec, &mut rng);
                        lp_norm(&x, p).powi(m as i32)
                    })
                    .collect();
                let d = ks_statistic_uniform(&mut us);
                if d >= threshold {
                    return Err(format!("p={p} m={m}: KS {d:.5} ≥ {threshold:.5}"));
                }
                worst = worst.max(d);
            }
        }
        Ok(format!(
            "9 cells at N=10⁵, worst KS {worst:.5} < {threshold:.5}"
        ))
    });
}

#[test]
fn acceptance_03_codec_slope() {
    criterion(3, "optimal-rate codec slope", || {
        // Both spaces of the criterion have optimal rate s* = α/d − (1/2 − 1/p).
        // For p = ∞ the stated rate 1.5 corresponds to α = 2; the literal
        // α = 1 gives s* = 0.5 and is checked at that derived rate.
        let configs = [
            (
                "p=2 q=2 α=1.5",
                Exponent::Finite(2.0),
                Exponent::Finite(2.0),
                1.5,
            ),
            ("p=∞ q=∞ α=1", Exponent::Infinity, Exponent::Infinity, 1.0),
            ("p=∞ q=∞ α=2", Exponent::Infinity, Exponent::Infinity, 2.0),
        ];
        let grid: Vec<usize> = (6..=14).map(|k| 1usize << k).collect();
        let mut report = String::new();
        for (name, p, q, alpha) in configs {
            let sp = space(1, 14, p, q, alpha);
            let s_star = sp.s_star();
            let measure = MeasureSpec::new(sp).unwrap();
            let (slope, _) = fitted_distortion_slope(&measure, &grid, 200, 30_303, 8)
                .map_err(|e| e.to_string())?;
            if !((-s_star - 0.25)..=(-s_star + 0.25)).contains(&slope) {
                return Err(format!("{name}: slope {slope:.4} outside −{s_star}±0.25"));
            }
            report.push_str(&format!("{name}: {slope:.3} (s*={s_star}); "));
        }
        Ok(report)
    });
}

#[test]
fn acceptance_04_phase_transition_bound() {
    criterion(4, "phase-transition bound", || {
        let sp = space(1, 8, Exponent::Finite(2.0), Exponent::Finite(2.0), 1.5);
        let measure = MeasureSpec::new(sp.clone()).unwrap();
        let s = sp.s_star() + 0.25;
        let gc = growth_constants(&measure, s).map_err(|e| e.to_string())?;
        let r_grid = [8usize, 16, 32, 64, 128];
        let eps_grid: Vec<f64> = [0.15, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|f| f * gc.eps0)
            .collect();
        let n = 10_000usize;
        let counts = codec_success_counts(&measure, &r_grid, &eps_grid, n, 40_404, 8)
            .map_err(|e| e.to_string())?;
        let mut max_frac = 0.0f64;
        for (ri, &r) in r_grid.iter().enumerate() {
            for (ei, &eps) in eps_grid.iter().enumerate() {
                let frac = counts[ri][ei] as f64 / n as f64;
                let bound =
                    success_probability_bound(&gc, r as f64, eps).map_err(|e| e.to_string())?;
                let limit = bound + 3.0 * binomial_stderr(frac, n);
                if frac > limit {
                    return Err(format!(
                        "R={r} ε={eps:.2e}: fraction {frac} exceeds bound {bound} + 3se"
                    ));
                }
                max_frac = max_frac.max(frac);
            }
        }
        Ok(format!(
            "25 cells at 10⁴ samples: max success fraction {max_frac}, c={:.4}, ε₀={:.3e}",
            gc.c, gc.eps0
        ))
    });
}

#[test]
fn acceptance_05_block_bound_chain() {
    criterion(5, "single-block bound chain", || {
        let sp = space(1, 8, Exponent::Finite(2.0), Exponent::Infinity, 1.0);
        let measure = MeasureSpec::new(sp).unwrap();
        let n = 100_000usize;
        let mut checked = 0usize;
        for m in 1..=3usize {
            let dim = measure.space().partition.block_size(m);
            let radius = measure.block_radius(m);
            let center = vec![0.0f64; dim];
            let mut rng = shard_rng(50_500, m as u64);
            // Pre-draw distances once per block, reuse across the ε grid.
            let ball = BallSpec::new(Exponent::Finite(2.0), dim, radius).unwrap();
            let dists: Vec<f64> = (0..n)
                .map(|_| {
                    let y = sample_uniform_ball(&ball, &mut rng);
                    y.iter().map(|v| v * v).sum::<f64>().sqrt()
                })
                .collect();
            for i in 0..10 {
                let eps = radius * (i as f64 + 0.5) / 10.0;
                let est = dists.iter().filter(|&&d| d <= eps).count() as f64 / n as f64;
                if est <= 1e-3 {
                    continue;
                }
                let bound =
                    block_ball_bound(&measure, eps, m, &center).map_err(|e| e.to_string())?;
                let se = binomial_stderr(est, n);
                if est > bound + 3.0 * se {
                    return Err(format!("m={m} ε={eps:.3e}: MC {est} > bound {bound} + 3se"));
                }
                checked += 1;
            }
        }
        // The chain must also be attested against the growth certificate.
        let sp = space(1, 12, Exponent::Finite(2.0), Exponent::Finite(2.0), 1.5);
        let measure = MeasureSpec::new(sp).unwrap();
        let gc = growth_constants(&measure, 1.75).map_err(|e| e.to_string())?;
        if m_tilde(&measure, 1.75, measure.kappa() * gc.eps0) < 1.0 {
            return Err("m̃(ε₀) < 1: certificate region broken".into());
        }
        Ok(format!(
            "{checked} (m, ε) cells with MC mass > 1e-3 all dominated"
        ))
    });
}

#[test]
fn acceptance_06_figure1_surface() {
    criterion(6, "figure-1 surface CSV", || {
        let dir = std::env::temp_dir().join("rdlab_acceptance_phase_surface");
        let _ = std::fs::remove_dir_all(&dir);
        let mut config = ExperimentConfig::new(ExperimentKind::PhaseSurface);
        config.seed = Some(7);
        config.out = Some(dir.clone());
        config.s = Some(2.002);
        config.c = Some(1.0);
        config.r_grid = Some((0..=100).collect());
        let mut inv: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        inv.extend_from_slice(&[1.0e4, 2.0e5, 1.2e6]);
        config.inv_eps_grid = Some(inv);
        rdlab::run(&config).map_err(|e| e.to_string())?;
        let csv = std::fs::read_to_string(dir.join("surface.csv")).map_err(|e| e.to_string())?;
        let mut rows = 0usize;
        let mut deepest = 0.0f64;
        for line in csv.lines().skip(2) {
            let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
            let (r, inv_eps, value, log2) = (fields[0], fields[1], fields[2], fields[3]);
            let expected_log2 = (r - inv_eps.powf(1.0 / 2.002)).min(0.0);
            if (log2 - expected_log2).abs() > 1e-12 * expected_log2.abs().max(1.0) {
                return Err(format!(
                    "log₂ mismatch at R={r}, 1/ε={inv_eps}: {log2} vs {expected_log2}"
                ));
            }
            let expected_value = 2f64.powf(expected_log2);
            if (value - expected_value).abs() > 1e-12 * expected_value.max(1e-300) {
                return Err(format!("value mismatch at R={r}, 1/ε={inv_eps}"));
            }
            if !log2.is_finite() {
                return Err("non-finite log₂ value".into());
            }
            deepest = deepest.min(log2);
            rows += 1;
        }
        if rows != 101 * 103 {
            return Err(format!("expected {} rows, found {rows}", 101 * 103));
        }
        if deepest > -1000.0 {
            return Err(format!("deepest log₂ value {deepest} does not reach −1000"));
        }
        // Critical-curve overlay: exponent crosses zero on R = c·(1/ε)^{1/s}.
        let curve =
            std::fs::read_to_string(dir.join("critical_curve.csv")).map_err(|e| e.to_string())?;
        for line in curve.lines().skip(2) {
            let (ie, r) = line.split_once(',').unwrap();
            let (ie, r): (f64, f64) = (ie.parse().unwrap(), r.parse().unwrap());
            let expected = ie.powf(1.0 / 2.002);
            if (r - expected).abs() > 1e-12 * expected {
                return Err(format!("critical curve at 1/ε={ie}: {r} vs {expected}"));
            }
        }
        Ok(format!(
            "{rows} nodes equal the closed form at 1e-12; deepest log₂ = {deepest:.1}"
        ))
    });
}

#[test]
fn acceptance_07_wavelet_checks() {
    criterion(7, "wavelet checks", || {
        let dir = std::env::temp_dir().join("rdlab_acceptance_wavelet");
        let _ = std::fs::remove_dir_all(&dir);
        let mut config = ExperimentConfig::new(ExperimentKind::WaveletCheck);
        config.seed = Some(7);
        config.out = Some(dir.clone());
        rdlab::run(&config).map_err(|e| e.to_string())?;
        let csv =
            std::fs::read_to_string(dir.join("wavelet_checks.csv")).map_err(|e| e.to_string())?;
        let mut gram = f64::NAN;
        let mut parseval = f64::NAN;
        for line in csv.lines().skip(2) {
            let (name, value) = line.split_once(',').unwrap();
            let value: f64 = value.parse().unwrap();
            if name == "partition_of_unity_dev" && value.abs() > 1e-6 {
                return Err(format!("partition of unity deviates by {value}"));
            }
            if name.starts_with("psi_moment") && value.abs() > 1e-6 {
                return Err(format!("{name} = {value} exceeds 1e-6"));
            }
            if name.starts_with("gram_dev") {
                gram = value;
                if !name.contains("_50_") {
                    return Err(format!("Gram check ran on {name}, expected 50 wavelets"));
                }
                if value > 1e-3 {
                    return Err(format!("Gram deviation {value} exceeds 1e-3"));
                }
            }
            if name == "parseval_dev" {
                parseval = value;
                if value > 1e-3 {
                    return Err(format!("Parseval deviation {value} exceeds 1e-3"));
                }
            }
        }
        Ok(format!(
            "unity/moments at fp precision; gram dev {gram:.2e}; parseval dev {parseval:.2e}"
        ))
    });
}

#[test]
fn acceptance_08_besov_pushforward() {
    criterion(8, "Besov pushforward", || {
        let mut rng = shard_rng(80_808, 0);
        let mut worst_cert = 0.0f64;
        for i in 0..1000 {
            let s = sample_besov_ball(
                1.5,
                Exponent::Finite(2.0),
                Exponent::Finite(2.0),
                1,
                6,
                None,
                &mut rng,
            )
            .map_err(|e| e.to_string())?;
            if s.certificate_norm > 1.0 {
                return Err(format!("sample {i}: certificate {}", s.certificate_norm));
            }
            let s_star = s.alpha / 1.0 - (0.5 - 0.5);
            if (s_star - 1.5).abs() > 1e-12 {
                return Err(format!("α/d − (1/2−1/p) = {s_star} ≠ τ/d = 1.5"));
            }
            worst_cert = worst_cert.max(s.certificate_norm);
        }
        Ok(format!(
            "10³ samples certified ≤ 1 (max {worst_cert:.4}); rate identity at 1e-12"
        ))
    });
}

#[test]
fn acceptance_09_nn_serialization() {
    criterion(9, "network serialization", || {
        let nn = rdlab::config::NnConfig {
            sigma_max: 3,
            w_max: 64,
            count: 200,
            d_in: 2,
        };
        let c0 = layout_c0(nn.d_in);
        let mut rng = shard_rng(90_909, 0);
        for i in 0..nn.count {
            let net = rdlab::experiments::random_quantized_net(&nn, i, &mut rng);
            let grid = net.grid();
            let bits = encode_network(&net).map_err(|e| e.to_string())?;
            let back = decode_network(&bits, grid, net.d_in()).map_err(|e| e.to_string())?;
            if back != net {
                return Err(format!(
                    "net {i} (σ={}, W={}) did not round-trip",
                    grid.sigma, grid.w_cap
                ));
            }
            let b_w = ceil_log2_1p(grid.w_cap) as u64;
            let bound = c0 * grid.sigma as u64 * grid.w_cap * b_w * b_w;
            if bits.len() as u64 > bound {
                return Err(format!(
                    "net {i}: {} bits exceeds C₀σW⌈log₂(1+W)⌉² = {bound}",
                    bits.len()
                ));
            }
        }

        // Micro-scale brute force: one layer, d_in = 1, W = 2, σ = 1.
        let grid = QuantGrid::new(1, 2).unwrap();
        let cap = capacity_log2(2, 1, 1).map_err(|e| e.to_string())?;
        let mut functions = std::collections::HashSet::new();
        let probe: Vec<f64> = (0..16).map(|i| i as f64 / 5.0 - 1.5).collect();
        let relu = |x: f64| x.max(0.0);
        for ai in -4i32..=4 {
            for bi in -4i32..=4 {
                let net = QuantizedNetwork::new(
                    vec![1, 1],
                    vec![(vec![ai as f64 / 2.0], vec![bi as f64 / 2.0])],
                    grid,
                )
                .unwrap();
                let fp: Vec<u64> = probe
                    .iter()
                    .map(|x| forward(&net, &relu, &[*x]).unwrap()[0].to_bits())
                    .collect();
                functions.insert(fp);
            }
        }
        if (functions.len() as f64).log2() > cap {
            return Err(format!(
                "{} functions exceed capacity 2^{cap}",
                functions.len()
            ));
        }
        Ok(format!(
            "200 exact round trips under C₀ = {c0}; micro enumeration {} ≤ 2^{cap}",
            functions.len()
        ))
    });
}

#[test]
fn acceptance_10_g2_fixture() {
    criterion(10, "countable-class fixture", || {
        use rdlab_core::codec::G2Codec;
        let sigma = 3.0f64;
        for n in 1..=64u32 {
            let codec = G2Codec::new(1.0, n).map_err(|e| e.to_string())?;
            let class = codec.class_distortion();
            if class.is_nan() || class > (n as f64).powf(-1.0) {
                return Err(format!("n={n}: class distortion {class} > n⁻¹"));
            }
            let x5 = codec.roundtrip_error(5);
            let bound = 6f64.log2().powf(sigma) * (n as f64).powf(-sigma);
            if x5.is_nan() || x5 > bound {
                return Err(format!("n={n}: x₅ error {x5} > per-element bound {bound}"));
            }
        }
        Ok("class ≤ n⁻¹ and x₅ ≤ (log₂6)³·n⁻³ exactly for n = 1..64".into())
    });
}
