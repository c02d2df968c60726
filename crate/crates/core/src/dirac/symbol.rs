use crate::lattice::Torus;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

/// Constant-coefficient nilpotent operator `Γ = -i Σ Γ̂_j ∂_j` given by its
/// generator matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracSymbol {
    fiber: usize,
    generators: Vec<DMatrix<C64>>,
    // Row-major copies for the per-frequency hot loop.
    flat: Vec<Vec<C64>>,
    flat_adjoint: Vec<Vec<C64>>,
}

/// Outcome of the coercivity audit.
#[derive(Clone, Debug, PartialEq)]
pub struct Coercivity {
    /// `min_ξ σ_min(Π̂(ξ)|_{R(Π̂(ξ))}) / |ξ|`; `+∞` if every `Π̂(ξ)` vanishes.
    pub kappa: f64,
    /// Frequency attaining the minimum.
    pub worst_xi: Option<Vec<f64>>,
    /// `max_ξ ‖Π̂(ξ)‖` over the grid.
    pub max_norm: f64,
}

impl Coercivity {
    pub fn is_vacuous(&self) -> bool {
        self.kappa.is_infinite()
    }
}

fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let (r, c) = m.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect()
}

impl DiracSymbol {
    /// Validates shapes and nilpotency of the generators (anticommutators below `1e-12`).
    pub fn new(generators: Vec<DMatrix<C64>>) -> Result<Self> {
        let sym = Self::unchecked(generators)?;
        sym.check_nilpotency(1e-12)?;
        Ok(sym)
    }

    fn unchecked(generators: Vec<DMatrix<C64>>) -> Result<Self> {
        let first = generators.first().ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
        let fiber = first.nrows();
        if !(1..=3).contains(&generators.len()) {
            return Err(Error::InvalidArgument(format!("{} generators, expected 1..=3", generators.len())));
        }
        if generators.iter().any(|g| g.shape() != (fiber, fiber)) {
            return Err(Error::DimensionMismatch("generators must be square of equal size".into()));
        }
        let flat = generators.iter().map(row_major).collect();
        let flat_adjoint = generators.iter().map(|g| row_major(&g.adjoint())).collect();
        Ok(Self { fiber, generators, flat, flat_adjoint })
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn generators(&self) -> &[DMatrix<C64>] {
        &self.generators
    }

    /// Checks `‖Γ̂_jΓ̂_k + Γ̂_kΓ̂_j‖ ≤ tol·max‖Γ̂‖²` for all `j, k`.
    pub fn check_nilpotency(&self, tol: f64) -> Result<()> {
        let scale = self.generators.iter().map(|g| g.norm()).fold(0.0, f64::max).powi(2).max(1.0);
        for j in 0..self.dim() {
            for k in j..self.dim() {
                let a = &self.generators[j] * &self.generators[k] + &self.generators[k] * &self.generators[j];
                let norm = a.norm();
                if norm > tol * scale {
                    return Err(Error::Nilpotency { j, k, norm });
                }
            }
        }
        Ok(())
    }

    /// The symbol of `Γ*`: generators replaced by their adjoints.
    pub fn adjoint(&self) -> DiracSymbol {
        Self::unchecked(self.generators.iter().map(|g| g.adjoint()).collect())
            .expect("adjoint of a valid symbol is valid")
    }

    /// `Γ̂(ξ) = Σ_j Γ̂_j ξ_j`.
    pub fn gamma_hat(&self, xi: &[f64]) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.fiber, self.fiber);
        for (g, &x) in self.generators.iter().zip(xi) {
            m += g * C64::new(x, 0.0);
        }
        m
    }

    /// `Π̂(ξ) = Γ̂(ξ) + Γ̂(ξ)ᴴ`.
    pub fn pi_hat(&self, xi: &[f64]) -> DMatrix<C64> {
        let g = self.gamma_hat(xi);
        &g + g.adjoint()
    }

    /// `out = Γ̂(ξ)x` (or `Γ̂(ξ)ᴴx`) without allocation.
    pub(crate) fn apply_hat(&self, xi: &[f64], x: &[C64], out: &mut [C64], adjoint: bool) {
        let n = self.fiber;
        let gens = if adjoint { &self.flat_adjoint } else { &self.flat };
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (g, &s) in gens.iter().zip(xi) {
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let row = &g[i * n..(i + 1) * n];
                let acc: C64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                out[i] += acc * s;
            }
        }
    }

    /// Coercivity audit over the grid frequencies of `torus`.
    ///
    /// For each `ξ ≠ 0`, takes the smallest singular value of `Π̂(ξ)` above the
    /// rank threshold `1e-10·‖Π̂(ξ)‖`, divided by `|ξ|`.
    pub fn coercivity_audit(&self, torus: &Torus) -> Result<Coercivity> {
        self.check_nilpotency(1e-12)?;
        if torus.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{}-d symbol on {}-d torus", self.dim(), torus.dim())));
        }
        let mut kappa = f64::INFINITY;
        let mut worst = None;
        let mut max_norm: f64 = 0.0;
        // Π̂ is homogeneous of degree one, so only directions matter; still
        // every grid frequency is visited to keep the audit exhaustive.
        for p in 1..torus.num_points() {
            let xi = torus.frequency(p);
            let xi = &xi[..torus.dim()];
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let sv = self.pi_hat(xi).singular_values();
            let smax = sv.iter().fold(0.0, |a: f64, &b| a.max(b));
            max_norm = max_norm.max(smax);
            if smax == 0.0 {
                continue;
            }
            let smin = sv.iter().filter(|&&s| s > 1e-10 * smax).fold(f64::INFINITY, |a, &b| a.min(b));
            let ratio = smin / r;
            if ratio < kappa {
                kappa = ratio;
                worst = Some(xi.to_vec());
            }
        }
        if kappa <= 1e-8 {
            return Err(Error::Coercivity { xi: worst.unwrap_or_default(), ratio: kappa });
        }
        Ok(Coercivity { kappa, worst_xi: worst, max_norm })
    }
}
