use super::{combine_pq, ResolventPlan};
use crate::dirac::{DiracSymbol, PerturbedDirac};
use crate::lattice::{Field, Spectral, Torus};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

/// `u = u_N + u_RΓ + u_RΓ*B`.
#[derive(Clone, Debug)]
pub struct HodgeSplit {
    /// Component in `N(Π_B)`.
    pub null: Field,
    /// Component in `R(Γ)`.
    pub range_gamma: Field,
    /// Component in `R(Γ*_B)`.
    pub range_gamma_star_b: Field,
    /// For the limit path: `‖u_N(t) - u_N(4t)‖/‖u‖` of the last two
    /// extrapolated null projections; zero for the exact path.
    pub stabilization: f64,
}

impl HodgeSplit {
    pub fn sum(&self) -> Field {
        let mut s = &self.null + &self.range_gamma;
        s.axpy(C64::new(1.0, 0.0), &self.range_gamma_star_b);
        s
    }
}

/// Orthonormal basis of `R(M)`, rank cut at `1e-10·σ_max`.
fn range_basis(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().fold(0.0, |a: f64, &b| a.max(b));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > 1e-10 * smax)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Applies per-frequency projections onto `R(Γ̂(ξ))` and `R(Γ̂(ξ)ᴴ)`.
fn exact_split(sym: &DiracSymbol, torus: &Torus, u: &Field) -> (Field, Field, Field) {
    let spectral = Spectral::new(*torus);
    let hat = spectral.forward(u);
    let n = sym.fiber();
    let mut rg = Field::zeros(*torus, n);
    let mut rs = Field::zeros(*torus, n);
    for p in 0..torus.num_points() {
        let xi = torus.frequency(p);
        let g = sym.gamma_hat(&xi[..torus.dim()]);
        let x = DVector::from_column_slice(hat.at(p));
        let ug = range_basis(&g);
        let us = range_basis(&g.adjoint());
        let pg = &ug * ug.ad_mul(&x);
        let ps = &us * us.ad_mul(&x);
        rg.at_mut(p).copy_from_slice(pg.as_slice());
        rs.at_mut(p).copy_from_slice(ps.as_slice());
    }
    let range_gamma = spectral.inverse(&rg);
    let range_star = spectral.inverse(&rs);
    let mut null = u - &range_gamma;
    null.axpy(C64::new(-1.0, 0.0), &range_star);
    (null, range_gamma, range_star)
}

/// Orthogonal projection onto `R(Γ)`; exact per frequency and independent of `B`.
pub fn range_gamma_projection(op: &PerturbedDirac, u: &Field) -> Result<Field> {
    if u.fiber() != op.fiber() || u.torus() != op.torus() {
        return Err(Error::DimensionMismatch("field does not match the operator".into()));
    }
    Ok(exact_split(op.symbol(), op.torus(), u).1)
}

/// Hodge decomposition `L² = N(Π_B) ⊕ R(Γ) ⊕ R(Γ*_B)`.
///
/// For the unperturbed operator the three projections are exact orthogonal
/// projections per frequency. Otherwise `u_N = lim P_t u` is extrapolated from
/// `t ∈ {2^10, 2^12, 2^14}·ℓ` with the two-point Richardson rule
/// `(16 P_{4t} - P_t)/15`, and `u_RΓ = ΓΠ_B⁻¹(u - u_N)` with `Π_B⁻¹` on the
/// range realised as the same extrapolation of `tQ_t u`.
pub fn hodge_projections(plan: &ResolventPlan, u: &Field) -> Result<HodgeSplit> {
    let op = plan.operator();
    if op.is_unperturbed() {
        let (null, range_gamma, range_gamma_star_b) = exact_split(op.symbol(), op.torus(), u);
        return Ok(HodgeSplit { null, range_gamma, range_gamma_star_b, stabilization: 0.0 });
    }
    let ell = op.torus().period();
    let un = u.norm2();
    let mut nulls = Vec::with_capacity(3);
    let mut inverses = Vec::with_capacity(3);
    for k in 0..3 {
        let t = ell * 2f64.powi(10 + 2 * k);
        let (rp, rm) = plan.resolvent_pair(t, u)?;
        let (p, mut q) = combine_pq(&rp, &rm);
        q.scale_mut(C64::new(t, 0.0));
        nulls.push(p);
        inverses.push(q);
    }
    let richardson = |a: &Field, b: &Field| {
        let mut r = b.scaled(C64::new(16.0 / 15.0, 0.0));
        r.axpy(C64::new(-1.0 / 15.0, 0.0), a);
        r
    };
    let n_coarse = richardson(&nulls[0], &nulls[1]);
    let null = richardson(&nulls[1], &nulls[2]);
    let diff = (&null - &n_coarse).norm2() / un.max(f64::MIN_POSITIVE);
    if diff > 1e-8 {
        return Err(Error::NullProjection { difference: diff });
    }
    let x = richardson(&inverses[1], &inverses[2]);
    let range_gamma = op.apply_gamma(&x)?;
    let mut range_gamma_star_b = u - &null;
    range_gamma_star_b.axpy(C64::new(-1.0, 0.0), &range_gamma);
    Ok(HodgeSplit { null, range_gamma, range_gamma_star_b, stabilization: diff })
}

/// A potential `f` with `Γf = u`.
#[derive(Clone, Debug)]
pub struct Potential {
    pub field: Field,
    /// `‖∇f‖₂`, computed from the symbol.
    pub gradient_norm: f64,
}

/// `S_Γ u`: per frequency `f̂(ξ) = Γ̂(ξ)⁺û(ξ)`, rank cut at `1e-10·σ_max`.
///
/// Fails if `u` has a component outside `R(Γ)` above `1e-9·‖u‖`.
pub fn potential_map(sym: &DiracSymbol, torus: &Torus, u: &Field) -> Result<Potential> {
    if u.fiber() != sym.fiber() || u.torus() != torus {
        return Err(Error::DimensionMismatch("field does not match the symbol".into()));
    }
    let spectral = Spectral::new(*torus);
    let hat = spectral.forward(u);
    let n = sym.fiber();
    let mut out = Field::zeros(*torus, n);
    let mut outside = 0.0;
    let mut grad2 = 0.0;
    for p in 0..torus.num_points() {
        let xi = torus.frequency(p);
        let xi = &xi[..torus.dim()];
        let g = sym.gamma_hat(xi);
        let x = DVector::from_column_slice(hat.at(p));
        let svd = g.clone().svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0, |a: f64, &b| a.max(b));
        let f = if smax > 0.0 {
            svd.pseudo_inverse(1e-10 * smax).map(|pinv| pinv * &x).unwrap_or_else(|_| DVector::zeros(n))
        } else {
            DVector::zeros(n)
        };
        let back = &g * &f;
        outside += (&x - back).norm_squared();
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        grad2 += r2 * f.norm_squared();
        out.at_mut(p).copy_from_slice(f.as_slice());
    }
    let un = u.norm2() / torus.cell_volume().sqrt();
    let residual = outside.sqrt() / un.max(f64::MIN_POSITIVE);
    if un > 0.0 && residual > 1e-9 {
        return Err(Error::OutsideRange { residual });
    }
    Ok(Potential { field: spectral.inverse(&out), gradient_norm: (grad2 * torus.cell_volume()).sqrt() })
}
