//! Experiment configuration: a JSON file plus flag overrides; flags win.
//!
//! The seed is mandatory — there is no wall-clock fallback, so every run
//! is reproducible by construction.

use std::path::PathBuf;
use std::str::FromStr;

use rdlab_core::sequence_core::{PartitionSpec, SpaceSpec};
use rdlab_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sample,
    CodecEval,
    PhaseSurface,
    BallProb,
    WaveletCheck,
    NnRoundtrip,
    G2Demo,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::CodecEval => "codec-eval",
            ExperimentKind::PhaseSurface => "phase-surface",
            ExperimentKind::BallProb => "ball-prob",
            ExperimentKind::WaveletCheck => "wavelet-check",
            ExperimentKind::NnRoundtrip => "nn-roundtrip",
            ExperimentKind::G2Demo => "g2-demo",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(ExperimentKind::Sample),
            "codec-eval" => Ok(ExperimentKind::CodecEval),
            "phase-surface" => Ok(ExperimentKind::PhaseSurface),
            "ball-prob" => Ok(ExperimentKind::BallProb),
            "wavelet-check" => Ok(ExperimentKind::WaveletCheck),
            "nn-roundtrip" => Ok(ExperimentKind::NnRoundtrip),
            "g2-demo" => Ok(ExperimentKind::G2Demo),
            other => Err(Error::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Mixed-norm space parameters; exponents accept numbers or "inf".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub d: u32,
    pub blocks: u32,
    pub p: String,
    pub q: String,
    pub alpha: f64,
    #[serde(default)]
    pub theta: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            d: 1,
            blocks: 8,
            p: "2".into(),
            q: "2".into(),
            alpha: 1.5,
            theta: 0.0,
        }
    }
}

impl SpaceConfig {
    pub fn build(&self) -> Result<SpaceSpec> {
        let partition = PartitionSpec::dyadic(self.d, self.blocks)?;
        SpaceSpec::new(
            partition,
            self.p.parse()?,
            self.q.parse()?,
            self.alpha,
            self.theta,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveletConfig {
    /// Vanishing moments of the system under test.
    pub k: usize,
    pub j_max: u32,
    /// Dyadic grid level for quadrature checks.
    pub grid_level: u32,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            k: 4,
            j_max: 7,
            grid_level: 12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnConfig {
    pub sigma_max: u32,
    pub w_max: u64,
    pub count: usize,
    pub d_in: usize,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            sigma_max: 3,
            w_max: 64,
            count: 200,
            d_in: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Mandatory: runs never read the clock or OS entropy.
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub space: Option<SpaceConfig>,
    #[serde(default)]
    pub r_grid: Option<Vec<u64>>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub inv_eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Rate exponent (phase-surface `s`, g2 `s`, or the growth exponent of
    /// ball-prob; defaults are experiment-specific).
    #[serde(default)]
    pub s: Option<f64>,
    /// Phase-surface constant `c`.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub wavelet: Option<WaveletConfig>,
    #[serde(default)]
    pub nn: Option<NnConfig>,
    /// Largest code length of the g2-demo sweep.
    #[serde(default)]
    pub n_max: Option<u32>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            seed: None,
            out: None,
            threads: None,
            space: None,
            r_grid: None,
            eps_grid: None,
            inv_eps_grid: None,
            samples: None,
            s: None,
            c: None,
            wavelet: None,
            nn: None,
            n_max: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config JSON: {e}")))
    }

    /// Validates the cross-cutting invariants (seed present, grids sorted
    /// and nonempty where given).
    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::Config(
                "seed is mandatory; pass --seed or set it in the config".into(),
            ));
        }
        if let Some(g) = &self.r_grid {
            if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(
                    "r_grid must be nonempty and strictly increasing".into(),
                ));
            }
        }
        for (name, g) in [
            ("eps_grid", &self.eps_grid),
            ("inv_eps_grid", &self.inv_eps_grid),
        ] {
            if let Some(g) = g {
                if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config(format!(
                        "{name} must be nonempty and strictly increasing"
                    )));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!("{name} contains a non-finite value")));
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }
}
