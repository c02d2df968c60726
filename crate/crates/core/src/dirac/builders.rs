use super::{pointwise_accretivity, DiracSymbol, PerturbedDirac};
use crate::lattice::{Field, MatrixField, Torus};
use crate::random::CoefficientSpec;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rand::Rng;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// First-order model on `ℂ²`: `Γ̂₁ = [[0,0],[1,0]]`, so `Π̂(ξ) = ξσ_x`.
pub fn dirac1d_symbol() -> DiracSymbol {
    let mut g = DMatrix::zeros(2, 2);
    g[(1, 0)] = C64::new(1.0, 0.0);
    DiracSymbol::new(vec![g]).expect("model symbol is nilpotent")
}

/// Gradient block on `ℂ^{1+n}`: `Γ = [[0,0],[∇,0]]`, `Γ̂_j = i·E_{j,0}`.
pub fn elliptic_symbol(n: usize) -> Result<DiracSymbol> {
    let gens = (0..n)
        .map(|j| {
            let mut g = DMatrix::zeros(1 + n, 1 + n);
            g[(1 + j, 0)] = I;
            g
        })
        .collect();
    DiracSymbol::new(gens)
}

/// Exterior derivative on `Λℂⁿ` (dimension `2ⁿ`), basis ordered by degree
/// then lexicographically; `Γ̂_j = i·ε_j` with `ε_j` exterior multiplication by `dx_j`.
pub fn make_forms(n: usize) -> Result<DiracSymbol> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("forms need 1 <= n <= 3, got {n}")));
    }
    let mut basis: Vec<u32> = (0..1u32 << n).collect();
    basis.sort_by_key(|&s| (s.count_ones(), (0..n).map(|k| (s >> k) & 1 == 0).collect::<Vec<_>>()));
    let pos = |s: u32| basis.iter().position(|&b| b == s).expect("subset in basis");
    let dim = basis.len();
    let gens = (0..n)
        .map(|j| {
            let mut g = DMatrix::zeros(dim, dim);
            for &s in &basis {
                if s & (1 << j) != 0 {
                    continue;
                }
                let below = (s & ((1u32 << j) - 1)).count_ones();
                let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
                g[(pos(s | (1 << j)), pos(s))] = I * sign;
            }
            g
        })
        .collect();
    DiracSymbol::new(gens)
}

/// `Π_B = Γ + B⁻¹Γ*B`, the conjugated perturbation that satisfies the
/// structural conditions for any symbol (`B₂B₁ = B₁B₂ = I`).
pub fn make_conjugated(symbol: DiracSymbol, b: &MatrixField) -> Result<PerturbedDirac> {
    let torus = *b.torus();
    PerturbedDirac::new(symbol, torus, b.inverse()?, b.clone())
}

/// Elliptic block operator for `L = -a div A∇`: `B₁ = diag(a, 0)`, `B₂ = diag(0, A)`.
///
/// Requires `Re a > 0` and `Re A > 0` pointwise.
pub fn make_elliptic(a: &Field, big_a: &MatrixField) -> Result<PerturbedDirac> {
    let torus = *a.torus();
    let n = torus.dim();
    if a.fiber() != 1 || big_a.rows() != n || big_a.cols() != n || big_a.torus() != &torus {
        return Err(Error::DimensionMismatch("elliptic coefficients: scalar a and n×n A".into()));
    }
    let min_a = a.data().iter().fold(f64::INFINITY, |m, z| m.min(z.re));
    if min_a <= 0.0 {
        return Err(Error::Ellipticity(format!("min Re a = {min_a:.3e}")));
    }
    let min_big = pointwise_accretivity(big_a);
    if min_big <= 0.0 {
        return Err(Error::Ellipticity(format!("min Re A = {min_big:.3e}")));
    }
    let a_block = MatrixField::from_fn(torus, 1, 1, |p| DMatrix::from_element(1, 1, a.data()[p]))?;
    let zero_n = MatrixField::constant(torus, &DMatrix::zeros(n, n));
    let zero_1 = MatrixField::constant(torus, &DMatrix::zeros(1, 1));
    let b1 = MatrixField::block_diagonal(&[&a_block, &zero_n])?;
    let b2 = MatrixField::block_diagonal(&[&zero_1, big_a])?;
    PerturbedDirac::new(elliptic_symbol(n)?, torus, b1, b2)
}

/// Hermitian generators `D̂_j` with `D̂(ξ)² = |ξ|²`: `[1]` in 1D, Pauli
/// matrices in 2D and 3D.
pub fn da_generators(n: usize) -> Result<Vec<DMatrix<C64>>> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    match n {
        1 => Ok(vec![DMatrix::from_element(1, 1, c(1., 0.))]),
        2 => Ok(vec![sx, sy]),
        3 => Ok(vec![sx, sy, sz]),
        _ => Err(Error::InvalidArgument(format!("no DA generators for n = {n}"))),
    }
}

/// DA system: `Γ = [[0,0],[D,0]]`, `B₁ = diag(A, 0)`, `B₂ = diag(0, A)`, so
/// `Π_B = [[0, ADA],[D, 0]]`. `D` is given by Hermitian generators.
pub fn make_da(torus: Torus, d_generators: &[DMatrix<C64>], big_a: &MatrixField) -> Result<PerturbedDirac> {
    let k = d_generators.first().ok_or_else(|| Error::InvalidArgument("no D generators".into()))?.nrows();
    for g in d_generators {
        if g.shape() != (k, k) || (g - g.adjoint()).norm() > 1e-12 * g.norm().max(1.0) {
            return Err(Error::InvalidArgument("D generators must be Hermitian and equally sized".into()));
        }
    }
    if big_a.rows() != k || big_a.cols() != k {
        return Err(Error::DimensionMismatch(format!("A must be {k}x{k}")));
    }
    let min_big = pointwise_accretivity(big_a);
    if min_big <= 0.0 {
        return Err(Error::Ellipticity(format!("min Re A = {min_big:.3e}")));
    }
    let gens = d_generators
        .iter()
        .map(|d| {
            let mut g = DMatrix::zeros(2 * k, 2 * k);
            g.view_mut((k, 0), (k, k)).copy_from(d);
            g
        })
        .collect();
    let zero = MatrixField::constant(torus, &DMatrix::zeros(k, k));
    let b1 = MatrixField::block_diagonal(&[big_a, &zero])?;
    let b2 = MatrixField::block_diagonal(&[&zero, big_a])?;
    PerturbedDirac::new(DiracSymbol::new(gens)?, torus, b1, b2)
}

/// `B₁ = I + ρ₁`, `B₂ = I + ρ₂` with diagonal `ρ`'s, which keeps the model's
/// structural conditions (`Γ̂₁` has a single off-diagonal entry).
pub fn random_dirac1d<R: Rng + ?Sized>(torus: Torus, spec: &CoefficientSpec, rng: &mut R) -> Result<PerturbedDirac> {
    let spec = spec.diagonal();
    let b1 = spec.sample(&torus, 2, rng)?;
    let b2 = spec.sample(&torus, 2, rng)?;
    PerturbedDirac::new(dirac1d_symbol(), torus, b1, b2)
}

/// Elliptic block with `A = I + ρ` and, when `scalar_a`, `a = 1 + ρ₀`.
pub fn random_elliptic<R: Rng + ?Sized>(
    torus: Torus,
    spec: &CoefficientSpec,
    scalar_a: bool,
    rng: &mut R,
) -> Result<PerturbedDirac> {
    let big_a = spec.sample(&torus, torus.dim(), rng)?;
    let a = if scalar_a {
        let s = spec.sample(&torus, 1, rng)?;
        Field::from_vec(torus, 1, (0..torus.num_points()).map(|p| s.at(p)[0]).collect())?
    } else {
        Field::constant(torus, &[C64::new(1.0, 0.0)])
    };
    make_elliptic(&a, &big_a)
}

/// Forms operator conjugated by `B = I + ρ`.
pub fn random_forms<R: Rng + ?Sized>(torus: Torus, spec: &CoefficientSpec, rng: &mut R) -> Result<PerturbedDirac> {
    let sym = make_forms(torus.dim())?;
    let b = spec.sample(&torus, sym.fiber(), rng)?;
    make_conjugated(sym, &b)
}

/// DA system with the standard generators and `A = I + ρ`.
pub fn random_da<R: Rng + ?Sized>(torus: Torus, spec: &CoefficientSpec, rng: &mut R) -> Result<PerturbedDirac> {
    let gens = da_generators(torus.dim())?;
    let big_a = spec.sample(&torus, gens[0].nrows(), rng)?;
    make_da(torus, &gens, &big_a)
}
