//! Command-line laboratory for the one-phase nonlocal free boundary problem.

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use config::{Config, ConfigError, Experiment};
use output::{write_outcome, Check, Outcome};
use verify::{run_suite, suite_table, Scale};

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub quick: bool,
}

/// Exit codes: 0 success, 1 failed invariant or numerical error, 2 bad configuration.
pub fn run_app(experiment: Experiment, overrides: &Overrides) -> i32 {
    let config = match load(experiment, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    if let Ok(threads) = std::env::var("NLFB_THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t > 0 => {
                // a second call in the same process keeps the first pool
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
            _ => {
                eprintln!("config error: NLFB_THREADS must be a positive integer, got {threads:?}");
                return 2;
            }
        }
    }
    let outcome = if experiment == Experiment::Verify {
        Ok(verify_outcome(
            &config,
            overrides.quick || config.verify.quick,
        ))
    } else {
        experiments::run(experiment, &config)
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error ({}): {e}", e.kind());
            return 1;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&config.output_dir)
        .and_then(|_| write_outcome(&config.output_dir, experiment.name(), &config, &outcome))
    {
        eprintln!("error (io): {}: {e}", config.output_dir.display());
        return 1;
    }
    for c in &outcome.checks {
        println!("{:<6} {:<10} {}", c.status(), c.kind(), c.name);
    }
    let failures = outcome.failures();
    for c in &failures {
        eprintln!("invariant failed: {}", c.name);
    }
    i32::from(!failures.is_empty())
}

fn load(experiment: Experiment, overrides: &Overrides) -> Result<Config, ConfigError> {
    let mut config = match &overrides.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(named) = config.experiment {
        if named != experiment {
            return Err(ConfigError {
                message: format!(
                    "config names experiment {:?} but the subcommand is {:?}",
                    named.name(),
                    experiment.name()
                ),
                location: None,
            });
        }
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.output_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

/// Runs the property suite and folds it into one outcome; check names carry
/// their criterion number.
pub fn verify_outcome(config: &Config, quick: bool) -> Outcome {
    let scale = if quick { Scale::Quick } else { Scale::Full };
    let results = run_suite(scale, &config.tolerances, config.seed);
    let mut outcome = Outcome::default();
    let mut timings = serde_json::Map::new();
    for r in &results {
        timings.insert(
            format!("{:02}-{}", r.id, r.title.replace(' ', "-")),
            serde_json::json!({ "seconds": r.elapsed_secs, "budget_seconds": r.budget_secs }),
        );
        outcome.checks.extend(r.checks.iter().map(|c| Check {
            name: format!("{}:{}", r.id, c.name),
            ..c.clone()
        }));
    }
    outcome.tables.push(suite_table(&results));
    outcome.extra.insert(
        "scale".into(),
        (if quick { "quick" } else { "full" }).into(),
    );
    outcome.extra.insert("timings".into(), timings.into());
    outcome
}

/// Reads a configuration file for callers outside the binary.
pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let config = Config::load(path)?;
    config.validate()?;
    Ok(config)
}
