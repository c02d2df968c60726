//! Exit codes and the error type reported by the command-line front end.

use hodgelab::Error;
use std::fmt;

/// Process exit status by failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Nilpotency,
    Coercivity,
    Accretivity,
    Structural,
    Solver,
    Invariant,
    Io,
}

impl ExitKind {
    pub const ALL: [ExitKind; 8] = [
        ExitKind::Config,
        ExitKind::Nilpotency,
        ExitKind::Coercivity,
        ExitKind::Accretivity,
        ExitKind::Structural,
        ExitKind::Solver,
        ExitKind::Invariant,
        ExitKind::Io,
    ];

    pub fn code(self) -> u8 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Nilpotency => 3,
            ExitKind::Coercivity => 4,
            ExitKind::Accretivity => 5,
            ExitKind::Structural => 6,
            ExitKind::Solver => 7,
            ExitKind::Invariant => 8,
            ExitKind::Io => 9,
        }
    }

    pub fn headline(self) -> &'static str {
        match self {
            ExitKind::Config => "configuration error",
            ExitKind::Nilpotency => "nilpotency audit failed",
            ExitKind::Coercivity => "coercivity audit failed",
            ExitKind::Accretivity => "accretivity audit failed",
            ExitKind::Structural => "structural audit failed",
            ExitKind::Solver => "solver failure",
            ExitKind::Invariant => "invariant breach",
            ExitKind::Io => "i/o error",
        }
    }
}

/// A failure with its exit class, the module that raised it and a message.
#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub module: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(kind: ExitKind, module: &'static str, message: impl Into<String>) -> Self {
        Self { kind, module, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Config, "config", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Io, "io", message)
    }

    /// Classifies a library error raised while running `context`.
    pub fn from_lib(context: &str, e: &Error) -> Self {
        let (kind, module) = classify(e);
        Self::new(kind, module, format!("{context}: {e}"))
    }

    pub fn code(&self) -> u8 {
        self.kind.code()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}", self.kind.headline(), self.module, self.message)
    }
}

impl std::error::Error for Failure {}

/// Exit class and raising module of a library error. Ellipticity of the
/// elliptic block is the accretivity condition for that family, so it shares
/// the accretivity code.
pub fn classify(e: &Error) -> (ExitKind, &'static str) {
    use ExitKind::*;
    match e {
        Error::InvalidArgument(_) => (Config, "config"),
        Error::InvalidTorus(_) | Error::DimensionMismatch(_) | Error::EmptySet | Error::LevelTooLarge { .. } => {
            (Config, "lattice")
        }
        Error::Format(_) | Error::Io(_) => (Io, "lattice"),
        Error::Nilpotency { .. } => (Nilpotency, "dirac"),
        Error::Coercivity { .. } => (Coercivity, "dirac"),
        Error::Accretivity { .. } | Error::Ellipticity(_) => (Accretivity, "dirac"),
        Error::Structural { .. } => (Structural, "dirac"),
        Error::SolveFailed { .. } | Error::SolverMode(_) | Error::NullProjection { .. } | Error::OutsideRange { .. } => {
            (Solver, "resolvent")
        }
        Error::Quadrature { .. } | Error::SgnNullInput { .. } | Error::Regularization { .. } => (Solver, "funcalc"),
        Error::Aperture { .. } | Error::DyadicRange(_) => (Config, "tent"),
        Error::BelowNoiseFloor { .. } | Error::Oracle(_) => (Solver, "probes"),
        Error::Invariant { .. } => (Invariant, "probes"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_distinct() {
        let mut codes: Vec<u8> = ExitKind::ALL.iter().map(|k| k.code()).collect();
        codes.dedup();
        assert_eq!(codes, vec![2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn audit_errors_map_to_their_codes() {
        let acc = Error::Accretivity { which: "B1", kappa: -1.0, omega: 3.0 };
        assert_eq!(classify(&acc), (ExitKind::Accretivity, "dirac"));
        assert_eq!(classify(&Error::Ellipticity("x".into())).0, ExitKind::Accretivity);
        assert_eq!(classify(&Error::Nilpotency { j: 0, k: 0, norm: 1.0 }).0, ExitKind::Nilpotency);
        let inv = Error::Invariant { what: "w".into(), value: 1.0, tol: 0.0 };
        let f = Failure::from_lib("high_freq", &inv);
        assert_eq!(f.code(), 8);
        assert!(f.to_string().starts_with("invariant breach [probes] high_freq"));
    }
}
