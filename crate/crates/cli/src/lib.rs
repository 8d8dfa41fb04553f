//! Experiment runner: reads a JSON run configuration, executes the selected
//! verification suites and writes CSV tables plus a JSON report.

pub mod config;
pub mod emit;
pub mod suites;

use std::path::Path;

pub use config::{load_config, parse_config, ConfigError, EffectiveConfig, RunConfig, Suite};
pub use emit::Artifacts;

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    ToleranceFailure = 1,
    ConfigError = 2,
}

fn probe_writable(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(probe)
}

/// Resolves, runs and emits. Messages go to stderr; the artifacts are
/// returned for callers that want them in memory.
pub fn run(config: &RunConfig) -> (Status, Option<Artifacts>) {
    let cfg = match config.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return (Status::ConfigError, None);
        }
    };
    if let Err(e) = probe_writable(&cfg.output_dir) {
        eprintln!("error: config key `output_dir`: cannot write to {}: {e}", cfg.output_dir.display());
        return (Status::ConfigError, None);
    }
    let artifacts = suites::run_suites(&cfg);
    if let Err(e) = emit::write_all(&cfg.output_dir, &cfg, &artifacts) {
        eprintln!("error: config key `output_dir`: writing artifacts failed: {e}");
        return (Status::ConfigError, None);
    }
    for c in &artifacts.checks {
        let tag = if c.pass() { "pass" } else { "FAIL" };
        eprintln!("{tag} {}: {:.3e} (required {:.3e})", c.name, c.achieved, c.required);
    }
    let status = if artifacts.all_pass() {
        Status::Pass
    } else {
        Status::ToleranceFailure
    };
    (status, Some(artifacts))
}
