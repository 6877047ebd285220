//! Configuration-driven experiment runner on top of `cellscope-core`.
//!
//! [`compute`] evaluates every experiment of a [`Config`] into in-memory
//! files; [`run`] additionally writes them with a manifest.

pub mod config;
pub mod experiment;
pub mod model;
pub mod output;

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;

pub use config::{Config, ExperimentKind, Scale, ValidationError};
pub use output::{OutputFile, RunManifest};

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: usize,
    pub scale: Scale,
    /// Restrict the run to one experiment kind.
    pub only: Option<ExperimentKind>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: None,
            threads: 1,
            scale: Scale::Desk,
            only: None,
        }
    }
}

/// Evaluate the experiments into files, in config order.
pub fn compute(config: &Config, options: &RunOptions) -> Result<Vec<OutputFile>> {
    let selected: Vec<_> = config
        .experiments
        .iter()
        .filter(|e| options.only.map_or(true, |k| e.kind() == k))
        .cloned()
        .collect();
    if selected.is_empty() {
        anyhow::bail!(ValidationError::new(
            "experiment",
            format!(
                "no experiment of kind {}",
                options.only.map_or("any", |k| k.name())
            ),
        ));
    }
    let model = model::Model::build(&config.model)?;
    experiment::validate_against_model(&model, &selected)?;
    let ctx = experiment::Context {
        model: &model,
        seed: options.seed.or(config.seed).unwrap_or(0),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.max(1))
        .build()?;
    let per_experiment: Vec<Vec<OutputFile>> = pool.install(|| {
        selected
            .par_iter()
            .enumerate()
            .map(|(i, e)| experiment::run(&ctx, i, e))
            .collect::<Result<_>>()
    })?;
    Ok(per_experiment.into_iter().flatten().collect())
}

/// Evaluate, then write the files and `manifest.json` into `out`.
pub fn run(config: &Config, options: &RunOptions, out: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let files = compute(config, options)?;
    let manifest = RunManifest {
        version: output::VERSION,
        config: serde_json::to_value(config)?,
        scale: options.scale,
        seed: options.seed.or(config.seed).unwrap_or(0),
        threads: options.threads.max(1),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: output::entries(&files),
    };
    output::write_all(out, &files, &manifest)?;
    Ok(manifest)
}

const PROBE: &str = r#"
seed = 11

[model]
kind = "kicked_rotor"
kick = 4.7
cells = 6

[[experiment]]
kind = "classical_section"
samples = 50
iterations = 40

[[experiment]]
kind = "quantum_section"
n_steps = 5

[[experiment]]
kind = "otoc_curve"
points = [[0.35, 0.7], [0.2, 0.2], [0.5, 0.0]]
thermal = true
n_steps = 5

[[experiment]]
kind = "spread_map"
points = [[0.35, 0.7]]
n_steps = 3
"#;

/// Runs a small mixed config with one and with three worker threads and
/// reports whether every output byte matches.
pub fn determinism_probe() -> Result<bool> {
    let config = config::parse(PROBE, Scale::Desk)?;
    let one = compute(
        &config,
        &RunOptions {
            threads: 1,
            ..Default::default()
        },
    )?;
    let three = compute(
        &config,
        &RunOptions {
            threads: 3,
            ..Default::default()
        },
    )?;
    Ok(!one.is_empty() && one == three)
}
