//! CSV rows, JSON summaries and the run manifest.

use crate::config::ResolvedRun;
use crate::failure::Failure;
use hodgelab::probes::{
    empirical_p_interval, ExperimentKind, ExperimentOutput, ExperimentSpec, FailedCheck, GroupReport,
};
use hodgelab::resolvent::PlanStats;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Version of the summary and manifest layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Ceiling on `C/c` used for the empirical `p` interval of Kato and Riesz runs.
pub const P_INTERVAL_CEILING: f64 = 100.0;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip decimal, switching to exponent form far from 1.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Fixed leading columns; extras follow in order of first appearance, then
/// one `check_<name>`, `check_<name>_tol`, `check_<name>_pass` triple per check.
pub const FIXED_COLUMNS: [&str; 22] = [
    "experiment",
    "kind",
    "seed",
    "points",
    "p",
    "q",
    "m_power",
    "ntilde",
    "trial",
    "label",
    "value",
    "reference",
    "ratio",
    "t_min",
    "t_max",
    "grid_ratio",
    "grid_len",
    "aperture",
    "band",
    "solver",
    "solver_tol",
    "quadrature_tol",
];

fn first_seen<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.iter().any(|o| o == n) {
            out.push(n.to_string());
        }
    }
    out
}

/// Renders the CSV of one experiment.
pub fn csv_bytes(spec: &ExperimentSpec, out: &ExperimentOutput) -> Result<Vec<u8>, Failure> {
    let extras = first_seen(out.rows.iter().flat_map(|r| r.extras.iter().map(|(n, _)| n.as_str())));
    let checks = first_seen(out.rows.iter().flat_map(|r| r.checks.iter().map(|c| c.name.as_str())));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(extras.iter().cloned());
    for c in &checks {
        header.extend([format!("check_{c}"), format!("check_{c}_tol"), format!("check_{c}_pass")]);
    }
    let csv_err = |e: csv::Error| Failure::io(format!("{}: csv: {e}", out.name));
    w.write_record(&header).map_err(csv_err)?;
    let grid = &out.grid;
    let solver = serde_json::to_value(spec.operator.solver).ok().and_then(|v| v.as_str().map(String::from));
    for r in &out.rows {
        let mut rec = vec![
            out.name.clone(),
            out.kind.name().to_string(),
            out.seed.to_string(),
            r.points.to_string(),
            fmt_f64(r.p),
            opt(r.q.map(fmt_f64)),
            opt(r.m_power),
            opt(r.ntilde),
            r.trial.to_string(),
            r.label.clone(),
            fmt_f64(r.value),
            fmt_f64(r.reference),
            fmt_f64(r.ratio),
            fmt_f64(grid.t_min()),
            fmt_f64(grid.t_max()),
            fmt_f64(grid.ratio()),
            grid.len().to_string(),
            fmt_f64(spec.params.aperture),
            out.band.to_string(),
            solver.clone().unwrap_or_default(),
            fmt_f64(spec.operator.solver_options.tol),
            fmt_f64(spec.params.quadrature.tol),
        ];
        rec.extend(extras.iter().map(|e| opt(r.extra_value(e).map(fmt_f64))));
        for name in &checks {
            match r.checks.iter().find(|c| &c.name == name) {
                Some(c) => rec.extend([fmt_f64(c.value), fmt_f64(c.tol), c.passed().to_string()]),
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Failure::io(format!("{}: csv: {e}", out.name)))
}

#[derive(Serialize)]
pub struct GridSummary {
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
    pub len: usize,
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub name: &'a str,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub spec: &'a ExperimentSpec,
    pub points: usize,
    pub refined_points: Option<usize>,
    pub grid: GridSummary,
    pub band: usize,
    pub rows: usize,
    pub reports: &'a [GroupReport],
    pub refined_reports: &'a [GroupReport],
    /// Kato and Riesz sweeps over `p`: sampled interval with `C/c ≤ ceiling`.
    pub p_interval: Option<PInterval>,
    pub failed_checks: &'a [FailedCheck],
    pub stats: PlanStats,
}

#[derive(Serialize)]
pub struct PInterval {
    pub ceiling: f64,
    pub lower: f64,
    pub upper: f64,
    pub note: &'static str,
}

pub fn summary<'a>(spec: &'a ExperimentSpec, out: &'a ExperimentOutput) -> Summary<'a> {
    let p_interval = matches!(out.kind, ExperimentKind::Kato | ExperimentKind::Riesz)
        .then(|| {
            let pts: Vec<(f64, f64)> = out.reports.iter().map(|g| (g.p, g.report.spread)).collect();
            empirical_p_interval(&pts, P_INTERVAL_CEILING)
        })
        .flatten()
        .map(|(lower, upper)| PInterval {
            ceiling: P_INTERVAL_CEILING,
            lower,
            upper,
            note: "empirical estimate over the sampled exponents and coefficients",
        });
    Summary {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        name: &out.name,
        kind: out.kind,
        seed: out.seed,
        spec,
        points: out.points,
        refined_points: out.refined_points,
        grid: GridSummary { t_min: out.grid.t_min(), t_max: out.grid.t_max(), ratio: out.grid.ratio(), len: out.grid.len() },
        band: out.band,
        rows: out.rows.len(),
        reports: &out.reports,
        refined_reports: &out.refined_reports,
        p_interval,
        failed_checks: &out.failed_checks,
        stats: out.stats,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: ExperimentKind,
    pub csv: String,
    pub csv_sha256: String,
    pub summary: String,
    pub summary_sha256: String,
    pub rows: usize,
    pub failed_checks: usize,
    pub seconds: f64,
}

#[derive(Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    /// Hash of the config file as read.
    pub config_sha256: String,
    /// Hash of the resolved experiment specs, after presets and overrides.
    pub resolved_sha256: String,
    pub seed: u64,
    pub preset: Option<crate::config::Preset>,
    pub workers: usize,
    pub strict: bool,
    pub experiments: Vec<ManifestEntry>,
    pub total_seconds: f64,
}

pub fn resolved_hash(run: &ResolvedRun) -> String {
    let json = serde_json::to_vec(&run.experiments).expect("specs serialize");
    sha256_hex(&json)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::io(format!("writing {}: {e}", path.display())))
}

/// Writes `<name>.csv` and `<name>.summary.json`; returns the manifest entry.
pub fn write_experiment(
    dir: &Path,
    spec: &ExperimentSpec,
    out: &ExperimentOutput,
    seconds: f64,
) -> Result<ManifestEntry, Failure> {
    let csv = csv_bytes(spec, out)?;
    let mut json = serde_json::to_vec_pretty(&summary(spec, out)).map_err(|e| Failure::io(e.to_string()))?;
    json.push(b'\n');
    let csv_name = format!("{}.csv", out.name);
    let summary_name = format!("{}.summary.json", out.name);
    write(&dir.join(&csv_name), &csv)?;
    write(&dir.join(&summary_name), &json)?;
    Ok(ManifestEntry {
        name: out.name.clone(),
        kind: out.kind,
        csv: csv_name,
        csv_sha256: sha256_hex(&csv),
        summary: summary_name,
        summary_sha256: sha256_hex(&json),
        rows: out.rows.len(),
        failed_checks: out.failed_checks.len(),
        seconds,
    })
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf, Failure> {
    let path = dir.join("manifest.json");
    let mut json = serde_json::to_vec_pretty(manifest).map_err(|e| Failure::io(e.to_string()))?;
    json.push(b'\n');
    write(&path, &json)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.0, 0.1, 2.5e-7, 123456.75, -3.0e20, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1e-10), "1e-10");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn first_seen_keeps_order() {
        assert_eq!(first_seen(["b", "a", "b", "c"].into_iter()), vec!["b", "a", "c"]);
    }
}
