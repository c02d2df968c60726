use crate::dirac::{
    da_generators, dirac1d_symbol, elliptic_symbol, make_conjugated, make_da, make_elliptic, make_forms, DiracSymbol,
    PerturbedDirac,
};
use crate::lattice::{Field, MatrixField, Torus};
use crate::random::{band_limited, trial_rng, CoefficientSpec, TrialRng};
use crate::resolvent::{range_gamma_projection, ResolventPlan, SolverMode, SolverOptions};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Decorrelates operator draws from field draws under the same seed.
const OPERATOR_STREAM_SALT: u64 = 0x6f70_6572_6174_6f72;
/// Largest dimension for the dimension-indexed builtins.
const MAX_DIM: usize = 3;

/// Named operator families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// First-order model on `ℂ²` in one dimension.
    Dirac1d,
    /// `L = −a div A∇` block operator in `n` dimensions.
    Elliptic(usize),
    /// Exterior derivative on forms in `n` dimensions.
    Forms(usize),
    /// DA system with Pauli generators in `n` dimensions.
    Da(usize),
}

impl Builtin {
    /// Generic names as listed to users.
    pub const NAMES: [&'static str; 4] = ["dirac1d", "elliptic-n", "forms-n", "da-n"];

    /// Every concrete instance, for listings.
    pub fn all() -> Vec<Builtin> {
        let mut v = vec![Builtin::Dirac1d];
        for n in 1..=MAX_DIM {
            v.extend([Builtin::Elliptic(n), Builtin::Forms(n), Builtin::Da(n)]);
        }
        v
    }

    pub fn dim(&self) -> usize {
        match *self {
            Builtin::Dirac1d => 1,
            Builtin::Elliptic(n) | Builtin::Forms(n) | Builtin::Da(n) => n,
        }
    }

    pub fn is_elliptic(&self) -> bool {
        matches!(self, Builtin::Elliptic(_))
    }

    pub fn symbol(&self) -> Result<DiracSymbol> {
        match *self {
            Builtin::Dirac1d => Ok(dirac1d_symbol()),
            Builtin::Elliptic(n) => elliptic_symbol(n),
            Builtin::Forms(n) => make_forms(n),
            Builtin::Da(n) => {
                let torus = Torus::new(n, 4, 1.0)?;
                let k = da_generators(n)?[0].nrows();
                Ok(make_da(torus, &da_generators(n)?, &MatrixField::identity(torus, k))?.symbol().clone())
            }
        }
    }

    /// Block structure of the operator and of its perturbation.
    pub fn describe(&self) -> String {
        match *self {
            Builtin::Dirac1d => "dirac1d: first-order model on C^2 in one dimension\n\
                 Gamma = [[0, 0], [d/dx, 0]],  symbol Pi(xi) = xi * sigma_x\n\
                 Pi_B = Gamma + B1 Gamma* B2 with B1 = I + rho1, B2 = I + rho2 diagonal\n\
                 Pi_B = [[0, -(B1)_00 d/dx (B2)_11], [d/dx, 0]]"
                .to_string(),
            Builtin::Elliptic(n) => format!(
                "elliptic-{n}: block operator for L = -a div A grad on C^(1+{n}) in {n} dimension(s)\n\
                 Gamma   = [[0, 0], [grad, 0]]\n\
                 Gamma*  = [[0, -div], [0, 0]]\n\
                 B1 = diag(a, 0),  B2 = diag(0, A)\n\
                 Pi_B    = [[0, -a div A], [grad, 0]]\n\
                 Pi_B^2  = diag(L, -grad a div A)\n\
                 sgn(Pi_B) = [[0, -L^(-1/2) a div A], [grad L^(-1/2), 0]]\n\
                 (Pi_B^2)^(1/2) acts as L^(1/2) on the scalar component"
            ),
            Builtin::Forms(n) => format!(
                "forms-{n}: exterior derivative d on the exterior algebra of C^{n} (fibre {})\n\
                 Gamma = d,  Gamma* = d*, basis ordered by degree\n\
                 B1 = B^(-1),  B2 = B with B = I + rho\n\
                 Pi_B = d + B^(-1) d* B",
                1usize << n
            ),
            Builtin::Da(n) => {
                let k = if n == 1 { 1 } else { 2 };
                format!(
                    "da-{n}: first-order system on C^{} in {n} dimension(s), D with D(xi)^2 = |xi|^2 (Pauli generators)\n\
                     Gamma = [[0, 0], [D, 0]]\n\
                     B1 = diag(A, 0),  B2 = diag(0, A) with A = I + rho ({k}x{k})\n\
                     Pi_B  = [[0, A D A], [D, 0]]",
                    2 * k
                )
            }
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Dirac1d => write!(f, "dirac1d"),
            Builtin::Elliptic(n) => write!(f, "elliptic-{n}"),
            Builtin::Forms(n) => write!(f, "forms-{n}"),
            Builtin::Da(n) => write!(f, "da-{n}"),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    /// Accepts `dirac1d`, `elliptic-n`, `forms-n`, `da-n` and bare `da` (two dimensions).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "dirac1d" {
            return Ok(Builtin::Dirac1d);
        }
        if s == "da" {
            return Ok(Builtin::Da(2));
        }
        let (family, n) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("unknown operator '{s}'")))?;
        let n: usize = n
            .parse()
            .ok()
            .filter(|n| (1..=MAX_DIM).contains(n))
            .ok_or_else(|| Error::InvalidArgument(format!("operator '{s}': dimension must be 1..={MAX_DIM}")))?;
        match family {
            "elliptic" => Ok(Builtin::Elliptic(n)),
            "forms" => Ok(Builtin::Forms(n)),
            "da" => Ok(Builtin::Da(n)),
            _ => Err(Error::InvalidArgument(format!("unknown operator '{s}'"))),
        }
    }
}

impl Serialize for Builtin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Builtin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Frequency-diagonal for constant coefficients, iterative otherwise.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// An operator family and how to instantiate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSpec {
    pub builtin: Option<Builtin>,
    /// Explicit symbol generators `Γ̂_j` as rows of `[re, im]` pairs; the
    /// perturbation then acts by conjugation, `Π_B = Γ + B⁻¹Γ*B`.
    pub generators: Option<Vec<Vec<Vec<[f64; 2]>>>>,
    pub points: usize,
    pub period: f64,
    /// Random `I + ρ`; absent means `B = I`.
    pub perturbation: Option<CoefficientSpec>,
    /// Multiplies the coefficient by `e^{i·phase}`; above `π/2` the
    /// coefficient is no longer accretive.
    pub phase: f64,
    /// Elliptic only: also perturb the scalar `a`.
    pub scalar_a: bool,
    pub solver: SolverChoice,
    pub solver_options: SolverOptions,
    pub audit_trials: usize,
    /// Smallest admissible audited accretivity constant.
    pub min_kappa: f64,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        Self {
            builtin: None,
            generators: None,
            points: 64,
            period: 1.0,
            perturbation: None,
            phase: 0.0,
            scalar_a: false,
            solver: SolverChoice::Auto,
            solver_options: SolverOptions::default(),
            audit_trials: 8,
            min_kappa: 0.0,
        }
    }
}

impl OperatorSpec {
    pub fn builtin(b: Builtin, points: usize) -> Self {
        Self { builtin: Some(b), points, ..Self::default() }
    }

    pub fn perturbed(mut self, spec: CoefficientSpec) -> Self {
        self.perturbation = Some(spec);
        self
    }

    pub fn with_solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_points(&self, points: usize) -> Self {
        Self { points, ..self.clone() }
    }

    fn explicit_symbol(&self) -> Result<Option<DiracSymbol>> {
        let Some(gens) = &self.generators else { return Ok(None) };
        let mats = gens
            .iter()
            .map(|rows| {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidArgument("generator matrices must be square".into()));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            })
            .collect::<Result<Vec<_>>>()?;
        DiracSymbol::new(mats).map(Some)
    }

    pub fn dim(&self) -> Result<usize> {
        match (&self.builtin, &self.generators) {
            (_, Some(g)) => Ok(g.len()),
            (Some(b), None) => Ok(b.dim()),
            (None, None) => Err(Error::InvalidArgument("operator needs a builtin or generators".into())),
        }
    }

    pub fn torus(&self) -> Result<Torus> {
        Torus::new(self.dim()?, self.points, self.period)
    }

    pub fn is_perturbed(&self) -> bool {
        self.perturbation.is_some() || self.phase != 0.0
    }

    /// Validates the combination of fields without sampling.
    pub fn validate(&self) -> Result<()> {
        if self.builtin.is_some() && self.generators.is_some() {
            return Err(Error::InvalidArgument("give either a builtin or explicit generators, not both".into()));
        }
        if self.scalar_a && !self.builtin.is_some_and(|b| b.is_elliptic()) {
            return Err(Error::InvalidArgument("scalar_a applies to elliptic operators only".into()));
        }
        if self.audit_trials == 0 {
            return Err(Error::InvalidArgument("audit_trials must be positive".into()));
        }
        self.torus()?;
        Ok(())
    }

    /// `e^{iφ}(I + ρ)`, or `e^{iφ}I` without a perturbation.
    fn coefficient(&self, torus: &Torus, n: usize, diagonal: bool, rng: &mut TrialRng) -> Result<MatrixField> {
        let base = match &self.perturbation {
            Some(spec) => {
                let spec = if diagonal { spec.diagonal() } else { *spec };
                spec.sample(torus, n, rng)?
            }
            None => MatrixField::identity(*torus, n),
        };
        if self.phase == 0.0 {
            return Ok(base);
        }
        let c = C64::from_polar(1.0, self.phase);
        MatrixField::from_fn(*torus, n, n, |p| base.matrix_at(p) * c)
    }

    /// Instantiates the operator for `(seed, trial)`, runs the audits and
    /// enforces `min_kappa`.
    pub fn build(&self, seed: u64, trial: u64) -> Result<PerturbedDirac> {
        self.validate()?;
        let torus = self.torus()?;
        let mut rng = trial_rng(seed ^ OPERATOR_STREAM_SALT, trial);
        let perturbed = self.is_perturbed();
        let op = if let Some(sym) = self.explicit_symbol()? {
            sym.coercivity_audit(&torus)?;
            if perturbed {
                let b = self.coefficient(&torus, sym.fiber(), false, &mut rng)?;
                let op = make_conjugated(sym, &b)?;
                op.structural_audit(self.audit_trials, seed, 1e-8)?;
                op
            } else {
                PerturbedDirac::unperturbed(sym, torus)?
            }
        } else {
            let b = self.builtin.expect("validated");
            match b {
                Builtin::Dirac1d if perturbed => {
                    let b1 = self.coefficient(&torus, 2, true, &mut rng)?;
                    let b2 = self.coefficient(&torus, 2, true, &mut rng)?;
                    PerturbedDirac::new(dirac1d_symbol(), torus, b1, b2)?
                }
                Builtin::Forms(_) if perturbed => {
                    let sym = b.symbol()?;
                    let coef = self.coefficient(&torus, sym.fiber(), false, &mut rng)?;
                    make_conjugated(sym, &coef)?
                }
                Builtin::Dirac1d | Builtin::Forms(_) => PerturbedDirac::unperturbed(b.symbol()?, torus)?,
                Builtin::Elliptic(n) => {
                    let big_a = self.coefficient(&torus, n, false, &mut rng)?;
                    let a = match (&self.perturbation, self.scalar_a) {
                        (Some(spec), true) => {
                            let s = spec.sample(&torus, 1, &mut rng)?;
                            Field::from_vec(torus, 1, (0..torus.num_points()).map(|p| s.at(p)[0]).collect())?
                        }
                        _ => Field::constant(torus, &[C64::new(1.0, 0.0)]),
                    };
                    make_elliptic(&a, &big_a)?
                }
                Builtin::Da(n) => {
                    let gens = da_generators(n)?;
                    let big_a = self.coefficient(&torus, gens[0].nrows(), false, &mut rng)?;
                    make_da(torus, &gens, &big_a)?
                }
            }
        };
        if !perturbed && op.is_unperturbed() {
            return Ok(op);
        }
        let op = op.audited(self.audit_trials, seed ^ trial)?;
        let acc = op.accretivity().expect("audited");
        let kappa = acc.kappa1.min(acc.kappa2);
        if kappa < self.min_kappa {
            let (which, omega) = if acc.kappa1 <= acc.kappa2 { ("B1", acc.omega1) } else { ("B2", acc.omega2) };
            return Err(Error::Accretivity { which, kappa, omega });
        }
        Ok(op)
    }

    pub fn plan(&self, op: PerturbedDirac) -> Result<ResolventPlan> {
        let mode = match self.solver {
            SolverChoice::Auto if op.constant_symbol().is_some() => SolverMode::FrequencyDiagonal,
            SolverChoice::Auto | SolverChoice::Iterative => SolverMode::Iterative,
            SolverChoice::Dense => SolverMode::Dense,
        };
        ResolventPlan::new(op, mode, self.solver_options)
    }

    /// [`build`](Self::build) followed by [`plan`](Self::plan).
    pub fn build_plan(&self, seed: u64, trial: u64) -> Result<ResolventPlan> {
        self.plan(self.build(seed, trial)?)
    }
}

/// Where random inputs are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    /// `R(Γ)`.
    RangeGamma,
    /// `R(Γ*_B) = B₁R(Γ*)`.
    RangeGammaStarB,
    /// `R(Π_B) = R(Γ) ⊕ R(Γ*_B)`.
    #[default]
    RangePi,
    /// Unprojected random fields.
    Full,
}

/// Random band-limited field in `sub`, normalised to `‖u‖₂ = 1`.
///
/// `R(Γ)` uses the exact per-frequency projection; `R(Γ*_B)` applies `B₁`
/// to the exact projection onto `R(Γ*)`.
pub fn sample_subspace(op: &PerturbedDirac, sub: Subspace, band: usize, rng: &mut TrialRng) -> Result<Field> {
    let v = band_limited(op.torus(), op.fiber(), band, rng)?;
    let u = match sub {
        Subspace::Full => v,
        Subspace::RangeGamma => range_gamma_projection(op, &v)?,
        Subspace::RangeGammaStarB => op.b1().apply(&range_gamma_projection(&op.underline(), &v)?)?,
        Subspace::RangePi => {
            let mut u = range_gamma_projection(op, &v)?;
            u.axpy(C64::new(1.0, 0.0), &op.b1().apply(&range_gamma_projection(&op.underline(), &v)?)?);
            u
        }
    };
    let n = u.norm2();
    if n <= 1e-12 {
        return Err(Error::InvalidArgument(format!("subspace {sub:?} is trivial for this operator")));
    }
    Ok(u.scaled(C64::new(1.0 / n, 0.0)))
}
