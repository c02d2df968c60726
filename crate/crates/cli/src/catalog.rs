//! Text for the `list` and `describe` subcommands.

use crate::failure::Failure;
use hodgelab::funcalc::{dictionary, PsiFunction};
use hodgelab::probes::{Builtin, ExperimentKind};
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Section {
    Operators,
    Experiments,
    Psi,
}

pub fn list(section: Option<Section>) -> String {
    let mut s = String::new();
    let all = section.is_none();
    if all || section == Some(Section::Operators) {
        s.push_str("operators:\n");
        for name in Builtin::NAMES {
            let _ = writeln!(s, "  {name}");
        }
    }
    if all || section == Some(Section::Experiments) {
        s.push_str("experiments:\n");
        for k in ExperimentKind::ALL {
            let _ = writeln!(s, "  {}", k.describe());
        }
    }
    if all || section == Some(Section::Psi) {
        s.push_str("psi dictionary:\n");
        for f in dictionary() {
            let _ = writeln!(s, "  {}", f.describe());
        }
        s.push_str("  q_p_power(M,N)  (any M ≥ 1, N ≥ 0)\n");
    }
    s
}

/// `describe NAME` or `describe psi ID`.
pub fn describe(words: &[String]) -> Result<String, Failure> {
    let joined = words.join(" ");
    let (kind, name) = match words {
        [k, rest @ ..] if !rest.is_empty() && ["psi", "operator", "experiment"].contains(&k.as_str()) => {
            (Some(k.as_str()), rest.join(""))
        }
        _ => (None, joined.clone()),
    };
    let name = name.trim().trim_matches('"').to_string();
    let unknown = || Failure::config(format!("unknown name '{joined}' (see `hodgelab list`)"));
    if matches!(kind, None | Some("operator")) {
        if let Ok(b) = name.parse::<Builtin>() {
            return Ok(b.describe());
        }
    }
    if matches!(kind, None | Some("experiment")) {
        if let Ok(k) = ExperimentKind::parse(&name) {
            return Ok(k.describe().to_string());
        }
    }
    if matches!(kind, None | Some("psi")) {
        if let Ok(f) = PsiFunction::parse(&name) {
            return Ok(f.describe());
        }
    }
    Err(unknown())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn listing_covers_required_names() {
        let s = list(None);
        for name in ["dirac1d", "elliptic-n", "forms-n", "da"] {
            assert!(s.contains(name), "{name}");
        }
        for name in ["sq_equiv", "low_freq", "high_freq", "kato", "riesz", "offdiag", "schur", "factorization"] {
            assert!(s.contains(name), "{name}");
        }
        assert!(s.contains("rational(1,1)"));
        assert!(!list(Some(Section::Psi)).contains("operators:"));
    }

    #[test]
    fn describe_lookups() {
        let psi = describe(&words("psi rational(1,1)")).unwrap();
        assert!(psi.contains("ψ(z) = z/(1+z²), class Ψ¹₁"), "{psi}");
        assert_eq!(describe(&words("psi \"rational(1,1)\"")).unwrap(), psi);
        assert_eq!(describe(&words("psi rational(1, 1)")).unwrap(), psi);
        let ell = describe(&words("elliptic-2")).unwrap();
        assert!(ell.contains("a div A"), "{ell}");
        assert!(describe(&words("kato")).unwrap().starts_with("kato:"));
        let err = describe(&words("nothing")).unwrap_err();
        assert_eq!(err.code(), 2);
        assert!(describe(&words("psi kato")).is_err());
    }
}
