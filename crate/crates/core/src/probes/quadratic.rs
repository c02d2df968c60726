//! Square-function ratios and the algebraic probes that accompany them.

use super::report::TrialRecord;
use crate::funcalc::{apply_sgn, calculus_bound_estimate, PsiFunction, RegularizationOptions, SgnOptions};
use crate::lattice::Field;
use crate::resolvent::{hodge_projections, ResolventPlan};
use crate::tent::{principal_split, tent_norm, vertical_norm, PrincipalPart, TentField, TimeGrid};
use crate::{Error, Result, C64};

/// Relative error allowed in the high-frequency factorisation identity on
/// top of the solver's own relative tolerance.
pub const HIGH_FREQ_IDENTITY_TOL: f64 = 1e-9;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `‖F‖_{T^{p,2}_α}` against `‖u‖_p` for each `p`.
fn tent_rows(
    name: &str,
    f: &TentField,
    u: &Field,
    ps: &[f64],
    aperture: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let points = f.torus().points_per_axis();
    ps.iter()
        .map(|&p| Ok(TrialRecord::new(name, points, p, trial, tent_norm(f, p, aperture)?, u.lp_norm(p)?)))
        .collect()
}

/// `(t, x) ↦ Q_t^M u(x)` in `T^{p,2}` against `‖u‖_p`.
pub fn sq_equiv_trial(
    plan: &ResolventPlan,
    grid: &TimeGrid,
    u: &Field,
    m_power: usize,
    ps: &[f64],
    aperture: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let f = TentField::from_fn(grid.clone(), |_, t| plan.q_t_power(t, m_power, u))?;
    let rows = tent_rows("sq_equiv", &f, u, ps, aperture, trial)?;
    let vertical = vertical_norm(&f, 2.0)?;
    Ok(rows
        .into_iter()
        .map(|r| r.with_powers(Some(m_power), None).extra("vertical_2", vertical))
        .collect())
}

/// `(t, x) ↦ Q_t^M P_t^Ñ u(x)`; with a principal part, also the norms of the
/// three terms of `Q_tP_t^Ñu = [Q_tP_t^Ñu − γ_tA_tP_t^Ñu] + γ_tA_tP_t^Ñu`
/// at `p = 2`.
#[allow(clippy::too_many_arguments)]
pub fn low_freq_trial(
    plan: &ResolventPlan,
    grid: &TimeGrid,
    u: &Field,
    m_power: usize,
    ntilde: usize,
    ps: &[f64],
    aperture: f64,
    principal: Option<&PrincipalPart>,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let f = TentField::from_fn(grid.clone(), |_, t| {
        let v = plan.p_t_power(t, ntilde, u)?;
        plan.q_t_power(t, m_power, &v)
    })?;
    let mut rows: Vec<TrialRecord> = tent_rows("low_freq", &f, u, ps, aperture, trial)?
        .into_iter()
        .map(|r| r.with_powers(Some(m_power), Some(ntilde)))
        .collect();
    if let Some(gamma) = principal {
        let split = principal_split(plan, gamma, u, ntilde)?;
        let full = tent_norm(&split.full, 2.0, aperture)?;
        let err = tent_norm(&split.approx_err, 2.0, aperture)?;
        let main = tent_norm(&split.principal, 2.0, aperture)?;
        let reassembly = split.approx_err.add(&split.principal)?.sub(&split.full)?.max_abs()
            / split.full.max_abs().max(f64::MIN_POSITIVE);
        rows = rows
            .into_iter()
            .map(|r| {
                r.extra("split_full", full)
                    .extra("split_approx_err", err)
                    .extra("split_principal", main)
                    .check("split_reassembly", reassembly, 1e-12)
            })
            .collect();
    }
    Ok(rows)
}

/// Relative error of `(I − P_t^Ñ)u = tΓ(Σ_{k<Ñ} P_t^k)Q_t u` for `u ∈ R(Γ)`.
pub fn high_freq_identity_error(plan: &ResolventPlan, t: f64, u: &Field, ntilde: usize) -> Result<f64> {
    let lhs = u - &plan.p_t_power(t, ntilde, u)?;
    let mut term = plan.q_t(t, u)?;
    let mut sum = term.clone();
    for _ in 1..ntilde {
        term = plan.p_t(t, &term)?;
        sum.axpy(c(1.0), &term);
    }
    let rhs = plan.operator().apply_gamma(&sum)?.scaled(c(t));
    Ok((&lhs - &rhs).norm2() / u.norm2().max(f64::MIN_POSITIVE))
}

/// `(t, x) ↦ Q_t^M (I − P_t^Ñ)u(x)` for `u ∈ R(Γ)`.
///
/// The factorisation identity is checked at every time and a violation is
/// an error: the estimate is only meaningful when the identity holds.
#[allow(clippy::too_many_arguments)]
pub fn high_freq_trial(
    plan: &ResolventPlan,
    grid: &TimeGrid,
    u: &Field,
    m_power: usize,
    ntilde: usize,
    ps: &[f64],
    aperture: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let tol = HIGH_FREQ_IDENTITY_TOL.max(10.0 * ntilde as f64 * plan.options().tol);
    let mut worst: f64 = 0.0;
    for &t in grid.times() {
        worst = worst.max(high_freq_identity_error(plan, t, u, ntilde)?);
    }
    if !(worst <= tol) {
        return Err(Error::Invariant { what: "high-frequency factorisation".into(), value: worst, tol });
    }
    let f = TentField::from_fn(grid.clone(), |_, t| {
        let v = u - &plan.p_t_power(t, ntilde, u)?;
        plan.q_t_power(t, m_power, &v)
    })?;
    Ok(tent_rows("high_freq", &f, u, ps, aperture, trial)?
        .into_iter()
        .map(|r| r.with_powers(Some(m_power), Some(ntilde)).extra("identity_error", worst))
        .collect())
}

/// `(h Σ|u|^r)^{1/r}`, a quasi-norm for `r < 1`.
fn lebesgue(u: &Field, r: f64) -> f64 {
    let h = u.torus().cell_volume();
    (h * u.pointwise_norms().iter().map(|v| v.powf(r)).sum::<f64>()).powf(1.0 / r)
}

/// `sup_t ‖tR_t u‖_p / ‖u‖_{p*}` with `p* = np/(n + p)`, for `u ∈ R(Γ)`.
///
/// When `p* ≤ 1` the denominator is the `L^{p*}` quasi-norm and the row is
/// flagged with `meaningful = 0`.
pub fn sobolev_trial(plan: &ResolventPlan, grid: &TimeGrid, u: &Field, ps: &[f64], trial: usize) -> Result<Vec<TrialRecord>> {
    let torus = *u.torus();
    let n = torus.dim() as f64;
    let resolvents: Vec<(f64, Field)> =
        grid.times().iter().map(|&t| Ok((t, plan.resolvent(t, u)?))).collect::<Result<_>>()?;
    ps.iter()
        .map(|&p| {
            let p_star = n * p / (n + p);
            let mut best: f64 = 0.0;
            let mut t_best = f64::NAN;
            for (t, r) in &resolvents {
                let v = t * r.lp_norm(p)?;
                if v > best {
                    best = v;
                    t_best = *t;
                }
            }
            Ok(TrialRecord::new("sobolev", torus.points_per_axis(), p, trial, best, lebesgue(u, p_star))
                .extra("p_star", p_star)
                .extra("t_sup", t_best)
                .extra("meaningful", if p_star > 1.0 { 1.0 } else { 0.0 }))
        })
        .collect()
}

/// Component-sum and idempotency errors of the Hodge projections.
pub fn hodge_trial(plan: &ResolventPlan, u: &Field, tol: f64, trial: usize) -> Result<Vec<TrialRecord>> {
    let un = u.norm2();
    let split = hodge_projections(plan, u)?;
    let sum_err = (&split.sum() - u).norm2() / un;
    let mut idem: f64 = 0.0;
    for (k, part) in [&split.null, &split.range_gamma, &split.range_gamma_star_b].into_iter().enumerate() {
        let again = hodge_projections(plan, part)?;
        for (j, comp) in [&again.null, &again.range_gamma, &again.range_gamma_star_b].into_iter().enumerate() {
            let e = if j == k { (comp - part).norm2() } else { comp.norm2() };
            idem = idem.max(e / un);
        }
    }
    let points = u.torus().points_per_axis();
    Ok(vec![TrialRecord::new("hodge", points, 2.0, trial, sum_err.max(idem), 1.0)
        .extra("sum_error", sum_err)
        .extra("idempotency_error", idem)
        .extra("stabilization", split.stabilization)
        .check("sum", sum_err, tol)
        .check("idempotency", idem, tol)])
}

/// `‖sgn(Π_B)²u − u‖/‖u‖` for `u ∈ R(Π_B)`.
pub fn sgn_trial(plan: &ResolventPlan, u: &Field, opts: &SgnOptions, tol: f64, trial: usize) -> Result<Vec<TrialRecord>> {
    let s = apply_sgn(plan, u, opts)?;
    let s2 = apply_sgn(plan, &s, opts)?;
    let err = (&s2 - u).norm2() / u.norm2();
    let points = u.torus().points_per_axis();
    Ok(vec![TrialRecord::new("sgn", points, 2.0, trial, err, 1.0)
        .extra("norm_ratio", s.norm2() / u.norm2())
        .check("involution", err, tol)])
}

/// `‖f(Π_B)u‖_p/‖u‖_p` over a function dictionary normalised on the sector.
pub fn calculus_trial(
    plan: &ResolventPlan,
    fns: &[PsiFunction],
    ps: &[f64],
    opts: &RegularizationOptions,
    seed: u64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let points = plan.operator().torus().points_per_axis();
    let mut rows = Vec::new();
    for &p in ps {
        let est = calculus_bound_estimate(plan, p, fns, 1, seed ^ trial as u64, opts)?;
        for s in est.samples {
            rows.push(
                TrialRecord::new("calculus", points, p, trial, s.ratio, 1.0)
                    .with_label(s.function)
                    .extra("theta", est.theta),
            );
        }
    }
    Ok(rows)
}
