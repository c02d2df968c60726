use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hodgelab"));
    for (k, _) in std::env::vars() {
        if k.starts_with("HODGELAB_") {
            c.env_remove(k);
        }
    }
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn describe_and_list() {
    let o = bin().args(["describe", "psi", "rational(1,1)"]).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("ψ(z) = z/(1+z²), class Ψ¹₁"), "{}", stdout(&o));
    let o = bin().args(["describe", "elliptic-2"]).output().unwrap();
    assert!(stdout(&o).contains("Pi_B    = [[0, -a div A], [grad, 0]]"));
    let o = bin().args(["list", "experiments"]).output().unwrap();
    for name in ["sq_equiv", "low_freq", "high_freq", "kato", "riesz", "offdiag", "schur", "factorization"] {
        assert!(stdout(&o).contains(name), "{name}");
    }
    let o = bin().args(["describe", "nonsense"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kato_identity_config_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(configs().join("kato_identity.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("kato.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    let report = &summary["reports"][0]["report"];
    for key in ["lower", "upper"] {
        let r = report[key].as_f64().unwrap();
        assert!((r - 1.0).abs() <= 1e-6, "{key} = {r}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let csv = std::fs::read(dir.path().join("kato.csv")).unwrap();
    assert_eq!(manifest["experiments"][0]["csv_sha256"], hodgelab_cli::output::sha256_hex(&csv));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn non_accretive_coefficients_exit_with_the_accretivity_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(configs().join("non_accretive.toml"))
        .env("HODGELAB_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("accretivity audit failed [dirac]"));
}

#[test]
fn config_errors_and_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[[experiment]]\nkind = \"sgn\"\nsurprise = 1\n").unwrap();
    let o = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("configuration error"), "{}", stderr(&o));

    let o = bin().args(["run", "--config"]).arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(9));

    // A tolerance no computation can meet: checks fail, strict turns that into exit 8.
    let cfg = dir.path().join("strict.toml");
    std::fs::write(
        &cfg,
        "[operator]\nbuiltin = \"dirac1d\"\npoints = 16\n[tolerances]\ncheck = 0.0\n\
         [[experiment]]\nkind = \"hodge\"\nparams = { trials = 2 }\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let lenient = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(lenient.status.success(), "{}", stderr(&lenient));
    let strict = bin().args(["run", "--strict", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(strict.status.code(), Some(8), "{}", stderr(&strict));
    let env = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).env("HODGELAB_STRICT", "true").output().unwrap();
    assert_eq!(env.status.code(), Some(8));
}

#[test]
fn reruns_are_byte_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[operator]\nbuiltin = \"dirac1d\"\npoints = 16\nperturbation = { amplitude = 0.3, roughness = { kind = \"smooth\", band = 2 } }\n\
         [[experiment]]\nkind = \"sq_equiv\"\nparams = { trials = 3 }\n",
    )
    .unwrap();
    let run = |name: &str, seed: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("HODGELAB_SEED", seed)
            .env("HODGELAB_WORKERS", workers)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("sq_equiv.csv")).unwrap()
    };
    let a = run("a", "3", "1");
    assert_eq!(a, run("b", "3", "3"));
    assert_ne!(a, run("c", "4", "2"));
}
