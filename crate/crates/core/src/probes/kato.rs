//! Square-root and Riesz-transform ratios for the elliptic block operator.

use super::report::TrialRecord;
use crate::funcalc::{apply_sgn_projected, sqrt_pib2, SgnOptions};
use crate::lattice::Field;
use crate::resolvent::ResolventPlan;
use crate::{Error, Result, C64};

fn lift(plan: &ResolventPlan, f: &Field) -> Result<Field> {
    let op = plan.operator();
    if f.fiber() != 1 || op.fiber() != 1 + op.torus().dim() {
        return Err(Error::DimensionMismatch("scalar field and elliptic block operator expected".into()));
    }
    let zero = Field::zeros(*f.torus(), op.torus().dim());
    Field::from_components(&[f.clone(), zero])
}

/// `L^{1/2}f`, the scalar component of `(Π_B²)^{1/2}(f, 0)`.
pub fn sqrt_l(plan: &ResolventPlan, f: &Field, opts: &SgnOptions) -> Result<Field> {
    Ok(sqrt_pib2(plan, &lift(plan, f)?, opts)?.component(0))
}

/// `∇f`, the vector component of `Γ(f, 0)`.
pub fn gradient(plan: &ResolventPlan, f: &Field) -> Result<Field> {
    let op = plan.operator();
    Ok(op.apply_gamma(&lift(plan, f)?)?.components(1..op.fiber()))
}

/// `‖L^{1/2}f‖_p / ‖∇f‖_p` per `p`; the reciprocal is the reverse bound.
pub fn kato_trial(plan: &ResolventPlan, f: &Field, ps: &[f64], opts: &SgnOptions, trial: usize) -> Result<Vec<TrialRecord>> {
    let root = sqrt_l(plan, f, opts)?;
    let grad = gradient(plan, f)?;
    let points = f.torus().points_per_axis();
    ps.iter()
        .map(|&p| Ok(TrialRecord::new("kato", points, p, trial, root.lp_norm(p)?, grad.lp_norm(p)?)))
        .collect()
}

/// `‖∇L^{−1/2}g‖_p / ‖g‖_p` for `g = L^{1/2}f`, with `∇L^{−1/2}g` read off
/// the vector component of `sgn(Π_B)(g, 0)`.
///
/// Applying `sgn` twice must return `g` in the scalar component; the
/// relative deviation is attached as the `involution` check.
pub fn riesz_trial(
    plan: &ResolventPlan,
    f: &Field,
    ps: &[f64],
    opts: &SgnOptions,
    tol: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let op = plan.operator();
    let g = sqrt_l(plan, f, opts)?;
    let s = apply_sgn_projected(plan, &lift(plan, &g)?, opts)?;
    let riesz = s.components(1..op.fiber());
    let back = apply_sgn_projected(plan, &s, opts)?.component(0);
    let involution = (&back - &g).norm2() / g.norm2().max(f64::MIN_POSITIVE);
    let lower = s.component(0).norm2() / g.norm2().max(f64::MIN_POSITIVE);
    let points = f.torus().points_per_axis();
    ps.iter()
        .map(|&p| {
            Ok(TrialRecord::new("riesz", points, p, trial, riesz.lp_norm(p)?, g.lp_norm(p)?)
                .extra("scalar_leak", lower)
                .check("involution", involution, tol))
        })
        .collect()
}

/// Random scalar input for the elliptic experiments: band-limited with the
/// mean removed, normalised in `L²`.
pub fn scalar_input(f: Field) -> Field {
    let torus = *f.torus();
    let mean = f.data().iter().sum::<C64>() / torus.num_points() as f64;
    let mut g = f;
    for z in g.data_mut() {
        *z -= mean;
    }
    let n = g.norm2().max(f64::MIN_POSITIVE);
    g.scaled(C64::new(1.0 / n, 0.0))
}
