//! Hodge-Dirac operators `Π = Γ + Γ*` and their perturbations
//! `Π_B = Γ + B₁Γ*B₂`, with audits of nilpotency, coercivity, accretivity and
//! the structural range conditions.

mod builders;
mod symbol;

pub use builders::{
    da_generators, dirac1d_symbol, elliptic_symbol, make_conjugated, make_da, make_elliptic, make_forms, random_da,
    random_dirac1d, random_elliptic, random_forms,
};
pub use symbol::{Coercivity, DiracSymbol};

use crate::lattice::{Field, MatrixField, Spectral, Torus};
use crate::random::{band_limited, trial_rng};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::fmt;

/// Sampled accretivity constants of `B₁` on `R(Γ*)` and `B₂` on `R(Γ)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Accretivity {
    pub kappa1: f64,
    pub kappa2: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// `(ω₁ + ω₂)/2`.
    pub omega: f64,
}

/// `Π_B = Γ + B₁Γ*B₂` on a torus.
#[derive(Clone)]
pub struct PerturbedDirac {
    symbol: DiracSymbol,
    torus: Torus,
    b1: MatrixField,
    b2: MatrixField,
    underline: bool,
    accretivity: Option<Accretivity>,
    spectral: Spectral,
}

impl fmt::Debug for PerturbedDirac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbedDirac")
            .field("torus", &self.torus)
            .field("fiber", &self.fiber())
            .field("underline", &self.underline)
            .field("accretivity", &self.accretivity)
            .finish()
    }
}

impl PerturbedDirac {
    pub fn new(symbol: DiracSymbol, torus: Torus, b1: MatrixField, b2: MatrixField) -> Result<Self> {
        let n = symbol.fiber();
        if symbol.dim() != torus.dim() {
            return Err(Error::DimensionMismatch(format!("{}-d symbol on {}-d torus", symbol.dim(), torus.dim())));
        }
        for b in [&b1, &b2] {
            if b.rows() != n || b.cols() != n || b.torus() != &torus {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient {}x{} for fibre {n}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self { symbol, torus, b1, b2, underline: false, accretivity: None, spectral: Spectral::new(torus) })
    }

    /// `B₁ = B₂ = I`.
    pub fn unperturbed(symbol: DiracSymbol, torus: Torus) -> Result<Self> {
        let n = symbol.fiber();
        Self::new(symbol, torus, MatrixField::identity(torus, n), MatrixField::identity(torus, n))
    }

    /// The swapped operator `Γ* + B₂ΓB₁`.
    pub fn underline(&self) -> PerturbedDirac {
        PerturbedDirac {
            symbol: self.symbol.adjoint(),
            torus: self.torus,
            b1: self.b2.clone(),
            b2: self.b1.clone(),
            underline: !self.underline,
            accretivity: self.accretivity.map(|a| Accretivity {
                kappa1: a.kappa2,
                kappa2: a.kappa1,
                omega1: a.omega2,
                omega2: a.omega1,
                omega: a.omega,
            }),
            spectral: self.spectral.clone(),
        }
    }

    pub fn symbol(&self) -> &DiracSymbol {
        &self.symbol
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn fiber(&self) -> usize {
        self.symbol.fiber()
    }

    /// Total number of unknowns `mⁿ·N`.
    pub fn total_dim(&self) -> usize {
        self.torus.num_points() * self.fiber()
    }

    pub fn b1(&self) -> &MatrixField {
        &self.b1
    }

    pub fn b2(&self) -> &MatrixField {
        &self.b2
    }

    pub fn is_underline(&self) -> bool {
        self.underline
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn accretivity(&self) -> Option<&Accretivity> {
        self.accretivity.as_ref()
    }

    /// Audited angle `ω`, zero for the unperturbed operator.
    pub fn omega(&self) -> f64 {
        match (&self.accretivity, self.is_unperturbed()) {
            (_, true) => 0.0,
            (Some(a), false) => a.omega,
            (None, false) => 0.0,
        }
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.torus() != &self.torus || u.fiber() != self.fiber() {
            return Err(Error::DimensionMismatch(format!(
                "field of fibre {} for operator of fibre {}",
                u.fiber(),
                self.fiber()
            )));
        }
        Ok(())
    }

    fn symbol_apply(&self, u: &Field, adjoint: bool) -> Field {
        let sym = &self.symbol;
        self.spectral.multiplier(u, self.fiber(), |xi, x, out| sym.apply_hat(xi, x, out, adjoint))
    }

    /// `Γu`.
    pub fn apply_gamma(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Ok(self.symbol_apply(u, false))
    }

    /// `Γ*u`.
    pub fn apply_gamma_star(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Ok(self.symbol_apply(u, true))
    }

    /// `Πu = Γu + Γ*u` (unperturbed).
    pub fn apply_pi(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let sym = &self.symbol;
        let n = self.fiber();
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        Ok(self.spectral.multiplier(u, n, |xi, x, out| {
            sym.apply_hat(xi, x, out, false);
            sym.apply_hat(xi, x, &mut tmp, true);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
        }))
    }

    /// `Γ*_B u = B₁Γ*(B₂u)`.
    pub fn apply_gamma_star_b(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let v = self.b2.apply(u)?;
        self.b1.apply(&self.symbol_apply(&v, true))
    }

    /// `Π_B u = Γu + B₁Γ*(B₂u)`.
    pub fn apply_pi_b(&self, u: &Field) -> Result<Field> {
        let mut out = self.apply_gamma(u)?;
        out.axpy(C64::new(1.0, 0.0), &self.apply_gamma_star_b(u)?);
        Ok(out)
    }

    /// `(B₁, B₂)` if both are spatially constant.
    pub fn constant_coefficients(&self) -> Option<(DMatrix<C64>, DMatrix<C64>)> {
        Some((self.b1.constant_value()?, self.b2.constant_value()?))
    }

    /// Symbol `Γ̂(ξ) + B₁Γ̂(ξ)ᴴB₂` when the coefficients are constant.
    pub fn constant_symbol(&self) -> Option<ConstantSymbol> {
        let (b1, b2) = self.constant_coefficients()?;
        Some(ConstantSymbol::new(self.symbol.clone(), b1, b2))
    }

    /// True when `B₁Γ̂_jᴴB₂ = Γ̂_jᴴ` for every generator, i.e. `Π_B = Π`.
    pub fn is_unperturbed(&self) -> bool {
        let Some((b1, b2)) = self.constant_coefficients() else {
            return false;
        };
        self.symbol.generators().iter().all(|g| {
            let ga = g.adjoint();
            let diff = &b1 * &ga * &b2 - &ga;
            diff.norm() <= 1e-14 * ga.norm().max(1.0)
        })
    }

    /// Spatial means of the coefficients.
    pub fn mean_coefficients(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        (self.b1.mean(), self.b2.mean())
    }

    /// Samples `κ₁ = inf Re⟨B₁Γ*u, Γ*u⟩/‖Γ*u‖²`, `ω₁ = sup|arg⟨B₁Γ*u, Γ*u⟩|`
    /// and the analogous `κ₂, ω₂` for `B₂` on `Γu`, over `trials` random
    /// full-band fields.
    pub fn accretivity_audit(&self, trials: usize, seed: u64) -> Result<Accretivity> {
        if trials == 0 {
            return Err(Error::InvalidArgument("accretivity audit needs at least one trial".into()));
        }
        let (mut k1, mut k2) = (f64::INFINITY, f64::INFINITY);
        let (mut w1, mut w2): (f64, f64) = (0.0, 0.0);
        let band = self.torus.points_per_axis();
        for trial in 0..trials {
            let mut rng = trial_rng(seed, trial as u64);
            let u = band_limited(&self.torus, self.fiber(), band, &mut rng)?;
            for (b, g, k, w) in [
                (&self.b1, self.apply_gamma_star(&u)?, &mut k1, &mut w1),
                (&self.b2, self.apply_gamma(&u)?, &mut k2, &mut w2),
            ] {
                let gg = g.inner(&g).re;
                if gg <= 1e-24 {
                    continue;
                }
                let z = b.apply(&g)?.inner(&g);
                *k = k.min(z.re / gg);
                *w = w.max(z.arg().abs());
            }
        }
        // An empty sampled range imposes nothing.
        let k1 = if k1.is_finite() { k1 } else { 1.0 };
        let k2 = if k2.is_finite() { k2 } else { 1.0 };
        if k1 <= 0.0 {
            return Err(Error::Accretivity { which: "B1", kappa: k1, omega: w1 });
        }
        if k2 <= 0.0 {
            return Err(Error::Accretivity { which: "B2", kappa: k2, omega: w2 });
        }
        Ok(Accretivity { kappa1: k1, kappa2: k2, omega1: w1, omega2: w2, omega: 0.5 * (w1 + w2) })
    }

    /// Runs the accretivity audit and records the result on the operator.
    pub fn audited(mut self, trials: usize, seed: u64) -> Result<Self> {
        self.accretivity = Some(self.accretivity_audit(trials, seed)?);
        Ok(self)
    }

    /// Relative residuals of `Γ*(B₂B₁Γ*u)` and `Γ(B₁B₂Γu)` over random `u`;
    /// fails above `tol`.
    pub fn structural_audit(&self, trials: usize, seed: u64, tol: f64) -> Result<(f64, f64)> {
        let scale = self.torus.max_frequency() * self.symbol.generators().iter().map(|g| g.norm()).fold(0.0, f64::max);
        let (mut r1, mut r2): (f64, f64) = (0.0, 0.0);
        for trial in 0..trials.max(1) {
            let mut rng = trial_rng(seed, trial as u64);
            let u = band_limited(&self.torus, self.fiber(), self.torus.points_per_axis(), &mut rng)?;
            let w = self.b2.apply(&self.b1.apply(&self.apply_gamma_star(&u)?)?)?;
            let wn = w.norm2();
            if wn > 0.0 {
                r1 = r1.max(self.apply_gamma_star(&w)?.norm2() / (scale * wn));
            }
            let w = self.b1.apply(&self.b2.apply(&self.apply_gamma(&u)?)?)?;
            let wn = w.norm2();
            if wn > 0.0 {
                r2 = r2.max(self.apply_gamma(&w)?.norm2() / (scale * wn));
            }
        }
        if r1 > tol {
            return Err(Error::Structural { which: "R(B2 B1 Gamma*) in N(Gamma*)", residual: r1 });
        }
        if r2 > tol {
            return Err(Error::Structural { which: "R(B1 B2 Gamma) in N(Gamma)", residual: r2 });
        }
        Ok((r1, r2))
    }

    /// Dense matrix of `Π_B` in the point-major field basis.
    pub fn assemble_dense(&self) -> Result<DMatrix<C64>> {
        let d = self.total_dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = Field::zeros(self.torus, self.fiber());
        for k in 0..d {
            e.data_mut()[k] = C64::new(1.0, 0.0);
            let col = self.apply_pi_b(&e)?;
            e.data_mut()[k] = C64::new(0.0, 0.0);
            for (i, v) in col.data().iter().enumerate() {
                m[(i, k)] = *v;
            }
        }
        Ok(m)
    }

    /// Window `[λ_lo, λ_hi]` containing the nonzero spectrum magnitudes, up to
    /// the audited constants. Used to size quadrature windows.
    pub fn spectral_window(&self) -> Result<(f64, f64)> {
        let c = self.symbol.coercivity_audit(&self.torus)?;
        if c.is_vacuous() {
            return Ok((self.torus.min_frequency(), self.torus.max_frequency()));
        }
        let n1 = self.b1.sup_norm();
        let n2 = self.b2.sup_norm();
        let (k1, k2) = match (&self.accretivity, self.is_unperturbed()) {
            (_, true) => (1.0, 1.0),
            (Some(a), false) => (a.kappa1, a.kappa2),
            (None, false) => (0.5, 0.5),
        };
        let lo = c.kappa * self.torus.min_frequency() * k1.min(k2).min(1.0) / n1.max(n2).max(1.0);
        let hi = c.max_norm * (1.0 + n1 * n2).max(2.0) / 2.0;
        Ok((lo, hi))
    }
}

/// Symbol of a constant-coefficient `Π_B`: `Σ_j ξ_j C_j` with
/// `C_j = Γ̂_j + B₁Γ̂_jᴴB₂`.
#[derive(Clone, Debug)]
pub struct ConstantSymbol {
    fiber: usize,
    terms: Vec<Vec<C64>>,
}

impl ConstantSymbol {
    /// From explicit constant coefficients.
    pub fn new(symbol: DiracSymbol, b1: DMatrix<C64>, b2: DMatrix<C64>) -> Self {
        let fiber = symbol.fiber();
        let terms = symbol
            .generators()
            .iter()
            .map(|g| {
                let c = g + &b1 * g.adjoint() * &b2;
                (0..fiber).flat_map(|i| (0..fiber).map(move |j| (i, j))).map(|(i, j)| c[(i, j)]).collect()
            })
            .collect();
        Self { fiber, terms }
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    /// Writes `Σ_j ξ_j C_j` row-major into `out`.
    pub fn write_at(&self, xi: &[f64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (t, &x) in self.terms.iter().zip(xi) {
            if x != 0.0 {
                out.iter_mut().zip(t).for_each(|(o, c)| *o += c * x);
            }
        }
    }

    /// `Γ̂(ξ) + B₁Γ̂(ξ)ᴴB₂`.
    pub fn at(&self, xi: &[f64]) -> DMatrix<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.fiber * self.fiber];
        self.write_at(xi, &mut buf);
        DMatrix::from_row_slice(self.fiber, self.fiber, &buf)
    }
}

/// Audit helper used by the constructors: pointwise accretivity of a matrix field.
pub(crate) fn pointwise_accretivity(b: &MatrixField) -> f64 {
    (0..b.torus().num_points())
        .map(|p| {
            let m = b.matrix_at(p);
            let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v))
        })
        .fold(f64::INFINITY, f64::min)
}
