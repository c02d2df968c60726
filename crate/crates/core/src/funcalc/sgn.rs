use super::{apply_psi_family, Contour, PsiFunction, QuadratureOptions};
use crate::lattice::Field;
use crate::random::{band_limited, default_band, trial_rng};
use crate::resolvent::{combine_pq, ResolventPlan};
use crate::{Error, Result, C64};
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// Quadrature of `sgn(Π_B)u = (2/π)∫₀^∞ Q_t u dt/t`, trapezoid in `ln t`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnOptions {
    /// Truncation window; defaults to `[10⁻⁸/λ_hi, 10⁸/λ_lo]`.
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    /// Approximate base step in `ln t`.
    pub step: f64,
    pub tol: f64,
    pub max_refinements: u32,
    /// Largest admissible `‖P_{t_max}u‖/‖u‖` for the checked variant.
    pub null_tol: f64,
}

impl Default for SgnOptions {
    fn default() -> Self {
        Self { t_min: None, t_max: None, step: 0.25, tol: 1e-6, max_refinements: 3, null_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct SgnReport {
    pub value: Field,
    pub level: u32,
    pub change: f64,
    /// `‖P_{t_max}u‖/‖u‖`, the size of the null component seen by the quadrature.
    pub null_fraction: f64,
    pub window: (f64, f64),
    pub solves: usize,
}

/// Runs the nested `ln t` quadrature; with `check_null`, fails on inputs with
/// a null component above `null_tol` (where `sgn(0) = 0` makes the result
/// discard part of `u`).
pub fn sgn_quadrature(plan: &ResolventPlan, u: &Field, opts: &SgnOptions, check_null: bool) -> Result<SgnReport> {
    let (lo, hi) = plan.spectral_window()?;
    let t_min = opts.t_min.unwrap_or(1e-8 / hi);
    let t_max = opts.t_max.unwrap_or(1e8 / lo);
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("sgn window [{t_min}, {t_max}] invalid")));
    }
    let ln4 = 2.0 * LN_2;
    let h0 = ln4 / (ln4 / opts.step).ceil();
    let range = |level: u32| {
        let h = h0 / 2f64.powi(level as i32);
        let widen = level as f64 * ln4;
        (((t_min.ln() - widen) / h).floor() as i64, ((t_max.ln() + widen) / h).ceil() as i64)
    };
    let un = u.norm2();
    let mut sum = Field::zeros(*u.torus(), u.fiber());
    let mut prev: Option<Field> = None;
    let mut null_fraction = f64::NAN;
    let mut solves = 0;
    let mut change = f64::INFINITY;
    let mut value = sum.clone();
    for level in 0..=opts.max_refinements {
        let (klo, khi) = range(level);
        let prev_range = level.checked_sub(1).map(range);
        let h = h0 / 2f64.powi(level as i32);
        // Descending, so the null check happens at the first node.
        for k in (klo..=khi).rev() {
            if let Some((plo, phi)) = prev_range {
                if k % 2 == 0 && (plo..=phi).contains(&(k / 2)) {
                    continue;
                }
            }
            let t = (k as f64 * h).exp();
            let (rp, rm) = plan.resolvent_pair(t, u)?;
            solves += 2;
            let (p, q) = combine_pq(&rp, &rm);
            if level == 0 && k == khi {
                null_fraction = if un > 0.0 { p.norm2() / un } else { 0.0 };
                if check_null && null_fraction > opts.null_tol {
                    return Err(Error::SgnNullInput { null: null_fraction });
                }
            }
            sum.axpy(C64::new(1.0, 0.0), &q);
        }
        value = sum.scaled(C64::new(2.0 * h / PI, 0.0));
        if let Some(p) = &prev {
            change = (&value - p).norm2() / value.norm2().max(1e-10 * un).max(f64::MIN_POSITIVE);
            if change <= opts.tol {
                return Ok(SgnReport { value, level, change, null_fraction, window: (t_min, t_max), solves });
            }
        }
        prev = Some(value.clone());
    }
    if opts.max_refinements == 0 {
        return Ok(SgnReport { value, level: 0, change, null_fraction, window: (t_min, t_max), solves });
    }
    Err(Error::Quadrature { change })
}

/// `sgn(Π_B)u` for `u` in the closure of `R(Π_B)`.
pub fn apply_sgn(plan: &ResolventPlan, u: &Field, opts: &SgnOptions) -> Result<Field> {
    Ok(sgn_quadrature(plan, u, opts, true)?.value)
}

/// `sgn(Π_B)u` with the null component sent to zero (`sgn(0) = 0`).
pub fn apply_sgn_projected(plan: &ResolventPlan, u: &Field, opts: &SgnOptions) -> Result<Field> {
    Ok(sgn_quadrature(plan, u, opts, false)?.value)
}

/// `(Π_B²)^{1/2}u = sgn(Π_B)Π_B u`.
pub fn sqrt_pib2(plan: &ResolventPlan, u: &Field, opts: &SgnOptions) -> Result<Field> {
    let v = plan.operator().apply_pi_b(u)?;
    apply_sgn_projected(plan, &v, opts)
}

/// Controls for bounded (non-decaying) functions.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationOptions {
    /// Accepted change between successive extrapolated values.
    pub tol: f64,
    /// Uses `n = 4, 16, …, 4^levels`.
    pub levels: u32,
    pub quadrature: QuadratureOptions,
}

impl Default for RegularizationOptions {
    fn default() -> Self {
        Self { tol: 1e-4, levels: 7, quadrature: QuadratureOptions::default() }
    }
}

/// `ψ_n(z) = f(z)·n²w²/((1 + n²w²)(1 + w²/n²))`, `w = z/s₀`: in `Ψ_2^2` and
/// tending to `f` away from `0` and `∞` with error `O(n⁻²)`.
fn regularized(f: &PsiFunction, n: f64, s0: f64) -> PsiFunction {
    let g = f.clone();
    PsiFunction::new(format!("{}[n={n}]", f.name()), 2.0, 2.0, f.mu(), move |z| {
        let w = z / s0;
        let one = C64::new(1.0, 0.0);
        let nw2 = w * w * (n * n);
        g.eval(z) * nw2 / ((one + nw2) * (one + w * w / (n * n)))
    })
    .expect("valid class")
    .with_scales(s0 / n, s0 * n)
}

/// Applies bounded functions on `R(Π_B)` (the null component maps to zero),
/// sharing resolvent solves across functions and regularisation levels.
fn regularized_family(
    plan: &ResolventPlan,
    fs: &[PsiFunction],
    u: &Field,
    opts: &RegularizationOptions,
) -> Result<Vec<Field>> {
    if opts.levels < 3 {
        return Err(Error::InvalidArgument("regularisation needs at least 3 levels".into()));
    }
    let (lo, hi) = plan.spectral_window()?;
    let s0 = (lo * hi).sqrt();
    let ns: Vec<f64> = (1..=opts.levels).map(|k| 4f64.powi(k as i32)).collect();
    let family: Vec<PsiFunction> = fs.iter().flat_map(|f| ns.iter().map(move |&n| regularized(f, n, s0))).collect();
    let contour = Contour::for_functions(plan, &family, &opts.quadrature)?;
    let q = apply_psi_family(plan, &family, &contour, u, &opts.quadrature)?;
    let un = u.norm2();
    let k = ns.len();
    q.values
        .chunks(k)
        .map(|vals| {
            let extrap: Vec<Field> = vals
                .windows(2)
                .map(|w| {
                    let mut e = w[1].scaled(C64::new(16.0 / 15.0, 0.0));
                    e.axpy(C64::new(-1.0 / 15.0, 0.0), &w[0]);
                    e
                })
                .collect();
            let mut diff = f64::INFINITY;
            for j in 1..extrap.len() {
                diff = (&extrap[j] - &extrap[j - 1]).norm2() / extrap[j].norm2().max(1e-10 * un).max(f64::MIN_POSITIVE);
                if diff <= opts.tol {
                    return Ok(extrap[j].clone());
                }
            }
            Err(Error::Regularization { difference: diff })
        })
        .collect()
}

/// `f(Π_B)u` for a bounded `f` by regularisation.
pub fn apply_bounded(plan: &ResolventPlan, f: &PsiFunction, u: &Field, opts: &RegularizationOptions) -> Result<Field> {
    Ok(regularized_family(plan, std::slice::from_ref(f), u, opts)?.remove(0))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CalculusSample {
    pub function: String,
    pub trial: usize,
    pub ratio: f64,
}

/// Empirical `sup ‖f(Π_B)u‖_p/‖u‖_p` over a dictionary normalised to
/// `sup_{S_θ}|f| = 1`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CalculusBound {
    pub max_ratio: f64,
    pub worst_function: String,
    pub worst_trial: usize,
    pub theta: f64,
    pub samples: Vec<CalculusSample>,
}

pub fn calculus_bound_estimate(
    plan: &ResolventPlan,
    p: f64,
    fns: &[PsiFunction],
    trials: usize,
    seed: u64,
    opts: &RegularizationOptions,
) -> Result<CalculusBound> {
    let omega = plan.operator().omega();
    let mu = fns.iter().map(|f| f.mu()).fold(FRAC_PI_2, f64::min);
    let theta = opts.quadrature.theta.unwrap_or(0.5 * (omega + mu));
    let mut opts = *opts;
    opts.quadrature.theta = Some(theta);
    let normalised: Vec<PsiFunction> = fns.iter().map(|f| f.scaled(f.sup_norm(theta))).collect();
    let (decaying, bounded): (Vec<PsiFunction>, Vec<PsiFunction>) =
        normalised.into_iter().partition(|f| f.is_decaying());
    let op = plan.operator();
    let mut samples = Vec::new();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let u = band_limited(op.torus(), op.fiber(), default_band(op.torus()), &mut rng)?;
        let un = u.lp_norm(p)?;
        let mut outs: Vec<(String, Field)> = Vec::new();
        if !decaying.is_empty() {
            let contour = Contour::for_functions(plan, &decaying, &opts.quadrature)?;
            let q = apply_psi_family(plan, &decaying, &contour, &u, &opts.quadrature)?;
            outs.extend(decaying.iter().map(|f| f.name().to_string()).zip(q.values));
        }
        if !bounded.is_empty() {
            let vals = regularized_family(plan, &bounded, &u, &opts)?;
            outs.extend(bounded.iter().map(|f| f.name().to_string()).zip(vals));
        }
        for (name, v) in outs {
            samples.push(CalculusSample { function: name, trial, ratio: v.lp_norm(p)? / un });
        }
    }
    let worst = samples
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or_else(|| Error::InvalidArgument("calculus bound needs trials and functions".into()))?;
    Ok(CalculusBound {
        max_ratio: worst.ratio,
        worst_function: worst.function.clone(),
        worst_trial: worst.trial,
        theta,
        samples,
    })
}
