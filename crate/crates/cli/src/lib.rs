//! Command-line front end: configuration, parallel experiment runs and
//! persistence of CSV rows, JSON summaries and a hashed manifest.

pub mod catalog;
pub mod config;
pub mod failure;
pub mod output;
pub mod runner;

use clap::{Args, Parser, Subcommand};
use config::{Overrides, Preset, ResolvedRun, RunConfig};
use failure::{ExitKind, Failure};
use hodgelab::probes::{run_experiment, ExperimentOutput};
use output::{Manifest, ManifestEntry};
use rayon::prelude::*;
use runner::RayonRunner;
use std::path::PathBuf;
use std::time::Instant;

/// Every flag of `run` can also be set through the environment variable
/// `HODGELAB_<FLAG>` (for example `HODGELAB_WORKERS=4`).
pub const ENV_PREFIX: &str = "HODGELAB_";

#[derive(Debug, Parser)]
#[command(name = "hodgelab", version, about = "Numerical experiments for perturbed Hodge-Dirac operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiments of a config file.
    Run(RunArgs),
    /// List builtin operators, experiments and dictionary functions.
    List {
        #[arg(value_enum)]
        section: Option<catalog::Section>,
    },
    /// Describe an operator, experiment or function: `describe elliptic-2`,
    /// `describe psi "rational(1,1)"`.
    Describe {
        #[arg(required = true, num_args = 1..)]
        name: Vec<String>,
    },
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, env = "HODGELAB_CONFIG")]
    pub config: PathBuf,
    /// Output directory (default `hodgelab-out`).
    #[arg(long, env = "HODGELAB_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "HODGELAB_SEED")]
    pub seed: Option<u64>,
    /// Worker threads shared by experiments and trials.
    #[arg(long, env = "HODGELAB_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, value_enum, env = "HODGELAB_PRESET")]
    pub preset: Option<Preset>,
    /// Exit with the invariant code when any attached check fails.
    #[arg(long, env = "HODGELAB_STRICT")]
    pub strict: bool,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            workers: self.workers,
            preset: self.preset,
            strict: self.strict,
        }
    }
}

/// One finished experiment.
pub struct Completed {
    pub output: ExperimentOutput,
    pub entry: ManifestEntry,
}

/// Outcome of a run whose artifacts were written.
pub struct RunReport {
    pub run: ResolvedRun,
    pub completed: Vec<Completed>,
    pub manifest: PathBuf,
}

impl RunReport {
    pub fn failed_checks(&self) -> usize {
        self.completed.iter().map(|c| c.output.failed_checks.len()).sum()
    }
}

/// Loads, resolves and runs a config file.
pub fn run(args: &RunArgs) -> Result<RunReport, Failure> {
    let (cfg, bytes) = RunConfig::load(&args.config)?;
    let run = cfg.resolve(&args.overrides())?;
    execute(run, output::sha256_hex(&bytes))
}

/// Runs every experiment on a pool of `run.workers` threads and writes the
/// artifacts in config order. Artifacts of successful experiments are written
/// even when another experiment fails; the first failure in config order is
/// returned. In strict mode failed checks turn into an invariant failure.
pub fn execute(run: ResolvedRun, config_sha256: String) -> Result<RunReport, Failure> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let results: Vec<(Result<ExperimentOutput, Failure>, f64)> = pool.install(|| {
        run.experiments
            .par_iter()
            .map(|spec| {
                let t0 = Instant::now();
                log::info!("running {}", spec.name);
                let r = run_experiment(spec, &RayonRunner).map_err(|e| Failure::from_lib(&spec.name, &e));
                (r, t0.elapsed().as_secs_f64())
            })
            .collect()
    });
    std::fs::create_dir_all(&run.out).map_err(|e| Failure::io(format!("creating {}: {e}", run.out.display())))?;
    let mut completed = Vec::new();
    let mut first_failure = None;
    for (spec, (result, seconds)) in run.experiments.iter().zip(results) {
        match result {
            Ok(output) => {
                let entry = output::write_experiment(&run.out, spec, &output, seconds)?;
                for c in &output.failed_checks {
                    log::warn!(
                        "{}: check {} failed at m = {}, trial {}: {:.3e} > {:.1e}",
                        spec.name,
                        c.name,
                        c.points,
                        c.trial,
                        c.value,
                        c.tol
                    );
                }
                completed.push(Completed { output, entry });
            }
            Err(f) if first_failure.is_some() => log::error!("{f}"),
            Err(f) => first_failure = Some(f),
        }
    }
    let manifest = Manifest {
        schema_version: output::SCHEMA_VERSION,
        tool: "hodgelab",
        tool_version: env!("CARGO_PKG_VERSION"),
        config_sha256,
        resolved_sha256: output::resolved_hash(&run),
        seed: run.seed,
        preset: run.preset,
        workers: run.workers,
        strict: run.strict,
        experiments: completed.iter().map(|c| c.entry.clone()).collect(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest = output::write_manifest(&run.out, &manifest)?;
    if let Some(f) = first_failure {
        return Err(f);
    }
    let report = RunReport { run, completed, manifest };
    let failed = report.failed_checks();
    if report.run.strict && failed > 0 {
        return Err(Failure::new(ExitKind::Invariant, "probes", format!("{failed} attached checks failed (strict mode)")));
    }
    Ok(report)
}

/// Human-readable per-group report lines.
pub fn render(report: &RunReport) -> String {
    let mut s = String::new();
    for c in &report.completed {
        let o = &c.output;
        s.push_str(&format!("{} ({}, m = {}, {} rows, {:.2} s)\n", o.name, o.kind, o.points, o.rows.len(), c.entry.seconds));
        for g in &o.reports {
            let r = &g.report;
            let drift = r.drift.map(|d| format!("  drift {d:.3}")).unwrap_or_default();
            s.push_str(&format!(
                "  p = {} q = {}: c = {:.6e}  C = {:.6e}  C/c = {:.4}  n = {}{}\n",
                g.p, g.q, r.lower, r.upper, r.spread, r.samples, drift
            ));
        }
        if !o.failed_checks.is_empty() {
            s.push_str(&format!("  {} failed checks\n", o.failed_checks.len()));
        }
    }
    s.push_str(&format!("manifest: {}\n", report.manifest.display()));
    s
}
