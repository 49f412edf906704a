//! `rdlab` — deterministic rate-distortion experiments.
//!
//! Usage:
//!   rdlab <experiment> [--config FILE] [--seed N] [--out DIR] [--threads N]
//!
//! Experiments: sample | codec-eval | phase-surface | ball-prob |
//! wavelet-check | nn-roundtrip | g2-demo.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric-domain error.

use std::process::ExitCode;

use rdlab::config::{ExperimentConfig, ExperimentKind};
use rdlab_core::Error;

fn usage() -> String {
    "usage: rdlab <experiment> [--config FILE] [--seed N] [--out DIR] [--threads N]\n\
     experiments: sample codec-eval phase-surface ball-prob wavelet-check nn-roundtrip g2-demo"
        .to_string()
}

fn parse_args(args: &[String]) -> Result<ExperimentConfig, Error> {
    let kind_str = args.first().ok_or_else(|| Error::Config(usage()))?;
    let kind: ExperimentKind = kind_str.parse()?;
    let mut config: Option<ExperimentConfig> = None;
    let mut seed: Option<u64> = None;
    let mut out: Option<std::path::PathBuf> = None;
    let mut threads: Option<usize> = None;
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut value = |name: &str| {
            it.next()
                .cloned()
                .ok_or_else(|| Error::Config(format!("{name} expects a value")))
        };
        match flag.as_str() {
            "--config" => {
                let path = value("--config")?;
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
                config = Some(ExperimentConfig::from_json(&text)?);
            }
            "--seed" => {
                seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|e| Error::Config(format!("bad --seed: {e}")))?,
                );
            }
            "--out" => out = Some(value("--out")?.into()),
            "--threads" => {
                threads = Some(
                    value("--threads")?
                        .parse()
                        .map_err(|e| Error::Config(format!("bad --threads: {e}")))?,
                );
            }
            other => return Err(Error::Config(format!("unknown flag {other}\n{}", usage()))),
        }
    }
    let mut config = config.unwrap_or_else(|| ExperimentConfig::new(kind));
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "config declares experiment {:?} but the command line says {kind_str}",
            config.experiment.as_str()
        )));
    }
    // Flags win over the config file.
    if seed.is_some() {
        config.seed = seed;
    }
    if out.is_some() {
        config.out = out;
    }
    if threads.is_some() {
        config.threads = threads;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = match parse_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("rdlab: {e}");
            return ExitCode::from(2);
        }
    };
    match rdlab::run(&config) {
        Ok(outputs) => {
            for path in outputs {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rdlab: {e}");
            match e {
                Error::Domain(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
