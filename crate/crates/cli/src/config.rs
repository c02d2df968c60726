//! Run configuration.
//!
//! A run is described by one TOML file. Operator and experiment parameters
//! are resolved by deep-merging tables, later layers winning:
//!
//! - operator: `[torus]`, then `[operator]`, then `[experiment.operator]`;
//! - parameters: the preset, then `[defaults]`, then `[tolerances]`, then
//!   `[experiment.params]`.
//!
//! The merged tables are deserialized into the library's spec types, which
//! reject unknown keys. Command-line flags override the top-level scalars.

use crate::failure::Failure;
use hodgelab::probes::{ExperimentKind, ExperimentSpec, OperatorSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use toml::{Table, Value};

/// Bumped whenever the layout of this file changes incompatibly.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `M = Ñ = 10n` and 16 trials.
    Paper,
    /// 4 trials on a coarser time grid.
    Fast,
}

impl Preset {
    /// Parameter defaults for an operator of dimension `n`.
    pub fn params(self, n: usize) -> Table {
        let mut t = Table::new();
        match self {
            Preset::Paper => {
                t.insert("m_power".into(), Value::Integer(10 * n as i64));
                t.insert("ntilde".into(), Value::Integer(10 * n as i64));
                t.insert("trials".into(), Value::Integer(16));
            }
            Preset::Fast => {
                t.insert("trials".into(), Value::Integer(4));
                let mut grid = Table::new();
                grid.insert("ratio".into(), Value::Float(std::f64::consts::SQRT_2));
                t.insert("time_grid".into(), Value::Table(grid));
            }
        }
        t
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub points: Option<usize>,
    pub period: Option<f64>,
}

/// Tolerance overrides applied to every experiment.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual of resolvent solves.
    pub solver: Option<f64>,
    /// Contour quadrature refinement tolerance.
    pub quadrature: Option<f64>,
    /// `sgn` quadrature refinement tolerance.
    pub sgn: Option<f64>,
    /// Tolerance of the checks attached to rows.
    pub check: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    pub kind: ExperimentKind,
    /// Output file stem; defaults to the kind.
    pub name: Option<String>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub operator: Table,
    #[serde(default)]
    pub params: Table,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub preset: Option<Preset>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub torus: TorusConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub operator: Table,
    #[serde(default)]
    pub defaults: Table,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentEntry>,
}

/// Values given on the command line or through the environment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub preset: Option<Preset>,
    pub strict: bool,
}

/// A fully resolved run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedRun {
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub preset: Option<Preset>,
    pub strict: bool,
    pub experiments: Vec<ExperimentSpec>,
}

pub const DEFAULT_OUT: &str = "hodgelab-out";

/// Deep merge: tables merge key by key, anything else is replaced.
pub fn merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn table(entries: impl IntoIterator<Item = (&'static str, Value)>) -> Table {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))?;
        if let Some(v) = cfg.schema_version {
            if v != CONFIG_SCHEMA_VERSION {
                return Err(Failure::config(format!(
                    "config schema_version {v} unsupported (expected {CONFIG_SCHEMA_VERSION})"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), Failure> {
        let bytes = std::fs::read(path).map_err(|e| Failure::io(format!("reading {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Failure::config(format!("{} is not UTF-8", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    fn tolerance_layer(&self) -> Table {
        let t = &self.tolerances;
        let mut layer = Table::new();
        if let Some(x) = t.check {
            layer.insert("check_tol".into(), Value::Float(x));
        }
        for (key, val) in [("quadrature", t.quadrature), ("sgn", t.sgn)] {
            if let Some(x) = val {
                layer.insert(key.into(), Value::Table(table([("tol", Value::Float(x))])));
            }
        }
        if let Some(x) = t.quadrature {
            let q = table([("tol", Value::Float(x))]);
            layer.insert("regularization".into(), Value::Table(table([("quadrature", Value::Table(q))])));
        }
        layer
    }

    fn operator_table(&self, entry: &ExperimentEntry) -> Table {
        let mut op = Table::new();
        if let Some(m) = self.torus.points {
            op.insert("points".into(), Value::Integer(m as i64));
        }
        if let Some(l) = self.torus.period {
            op.insert("period".into(), Value::Float(l));
        }
        merge(&mut op, &self.operator);
        merge(&mut op, &entry.operator);
        if let Some(tol) = self.tolerances.solver {
            merge(&mut op, &table([("solver_options", Value::Table(table([("tol", Value::Float(tol))])))]));
        }
        op
    }

    /// Applies overrides and builds one validated spec per experiment.
    pub fn resolve(&self, ov: &Overrides) -> Result<ResolvedRun, Failure> {
        if self.experiments.is_empty() {
            return Err(Failure::config("no [[experiment]] entries"));
        }
        let seed = ov.seed.or(self.seed).unwrap_or(0);
        let preset = ov.preset.or(self.preset);
        let workers = ov
            .workers
            .or(self.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(Failure::config("workers must be positive"));
        }
        let mut experiments = Vec::with_capacity(self.experiments.len());
        for entry in &self.experiments {
            let name = entry.name.clone().unwrap_or_else(|| entry.kind.name().to_string());
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Failure::config(format!("experiment name {name:?} must be [A-Za-z0-9_-]+")));
            }
            if experiments.iter().any(|s: &ExperimentSpec| s.name == name) {
                return Err(Failure::config(format!("duplicate experiment name '{name}'")));
            }
            let operator: OperatorSpec = Value::Table(self.operator_table(entry))
                .try_into()
                .map_err(|e| Failure::config(format!("{name}: operator: {e}")))?;
            let n = operator.dim().map_err(|e| Failure::from_lib(&name, &e))?;
            let mut params = preset.map(|p| p.params(n)).unwrap_or_default();
            merge(&mut params, &self.defaults);
            merge(&mut params, &self.tolerance_layer());
            merge(&mut params, &entry.params);
            let params =
                Value::Table(params).try_into().map_err(|e| Failure::config(format!("{name}: params: {e}")))?;
            let mut spec = ExperimentSpec::new(entry.kind, operator, params, entry.seed.unwrap_or(seed));
            spec.name = name.clone();
            spec.validate().map_err(|e| Failure::from_lib(&name, &e))?;
            experiments.push(spec);
        }
        Ok(ResolvedRun {
            seed,
            out: ov.out.clone().or_else(|| self.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            workers,
            preset,
            strict: ov.strict || self.strict,
            experiments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::ExitKind;
    use hodgelab::probes::Builtin;

    const BASE: &str = r#"
seed = 5
[torus]
points = 16
[operator]
builtin = "elliptic-2"
[defaults]
trials = 3
p = [1.5, 2.0]
[tolerances]
solver = 1e-9
check = 1e-3
[[experiment]]
kind = "kato"
[[experiment]]
kind = "sq_equiv"
name = "sq_fine"
seed = 11
operator = { builtin = "dirac1d", points = 32 }
params = { trials = 2, quadrature = { max_refinements = 2 } }
"#;

    #[test]
    fn layers_merge_in_order() {
        let run = RunConfig::parse(BASE).unwrap().resolve(&Overrides::default()).unwrap();
        let [kato, sq] = &run.experiments[..] else { panic!("two experiments") };
        assert_eq!((kato.name.as_str(), kato.seed, kato.params.trials), ("kato", 5, 3));
        assert_eq!(kato.operator.builtin, Some(Builtin::Elliptic(2)));
        assert_eq!(kato.operator.points, 16);
        assert_eq!(kato.operator.solver_options.tol, 1e-9);
        assert_eq!(kato.params.check_tol, Some(1e-3));
        assert_eq!((sq.name.as_str(), sq.seed, sq.params.trials), ("sq_fine", 11, 2));
        assert_eq!(sq.operator.builtin, Some(Builtin::Dirac1d));
        assert_eq!(sq.operator.points, 32);
        assert_eq!(sq.params.p, vec![1.5, 2.0]);
        assert_eq!(sq.params.quadrature.max_refinements, 2);
    }

    #[test]
    fn presets_and_overrides() {
        let cfg = RunConfig::parse(BASE).unwrap();
        let ov = Overrides { seed: Some(9), preset: Some(Preset::Paper), workers: Some(2), strict: true, ..Default::default() };
        let run = cfg.resolve(&ov).unwrap();
        assert_eq!((run.seed, run.workers, run.strict), (9, 2, true));
        let kato = &run.experiments[0];
        assert_eq!((kato.params.m_power, kato.params.ntilde), (20, 20));
        assert_eq!(kato.params.trials, 3, "[defaults] beats the preset");
        let sq = &run.experiments[1];
        assert_eq!((sq.params.m_power, sq.seed), (10, 11));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [
            "bogus = 1\n[[experiment]]\nkind = \"kato\"",
            "[operator]\nbuiltin = \"elliptic-1\"\nwat = 2\n[[experiment]]\nkind = \"kato\"",
            "[operator]\nbuiltin = \"dirac1d\"\n[[experiment]]\nkind = \"sgn\"\nparams = { trails = 3 }",
            "[[experiment]]\nkind = \"nope\"",
            "[operator]\nbuiltin = \"dirac1d\"\n[[experiment]]\nkind = \"kato\"",
            "[operator]\nbuiltin = \"dirac1d\"",
            "schema_version = 7\n[[experiment]]\nkind = \"sgn\"",
        ] {
            let err = RunConfig::parse(bad).and_then(|c| c.resolve(&Overrides::default())).unwrap_err();
            assert_eq!(err.kind, ExitKind::Config, "{bad}: {err}");
        }
    }

    #[test]
    fn merge_is_deep() {
        let mut a: Table = toml::from_str("x = 1\n[t]\na = 1\nb = 2").unwrap();
        let b: Table = toml::from_str("y = 2\n[t]\nb = 3").unwrap();
        merge(&mut a, &b);
        assert_eq!(a, toml::from_str::<Table>("x = 1\ny = 2\n[t]\na = 1\nb = 3").unwrap());
    }
}
