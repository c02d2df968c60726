use super::PsiFunction;
use crate::lattice::Field;
use crate::resolvent::ResolventPlan;
use crate::{Error, Result, C64};
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// Quadrature controls shared by every contour evaluation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOptions {
    /// Relative change allowed between successive refinements.
    pub tol: f64,
    /// Refinements after the base level; each halves the step and widens the
    /// radial window by 4 at both ends.
    pub max_refinements: u32,
    /// Sector angle; `None` picks `(ω + min(μ, π/2))/2`.
    pub theta: Option<f64>,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_refinements: 4, theta: None }
    }
}

/// Four rays `±re^{±iθ}`, `r ∈ [r_min, r_max]`, trapezoid in `ln r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contour {
    theta: f64,
    r_min: f64,
    r_max: f64,
    step: f64,
}

/// Base step in `ln r`: `ln 4/q` so that a widening by 4 adds whole nodes.
fn base_step() -> f64 {
    let ln4 = 2.0 * LN_2;
    ln4 / (ln4 / 0.15).ceil()
}

impl Contour {
    pub fn new(theta: f64, r_min: f64, r_max: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("contour angle {theta} outside (0, π/2)")));
        }
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("radial window [{r_min}, {r_max}] invalid")));
        }
        let c = Self { theta, r_min, r_max, step: base_step() };
        if c.nodes_per_ray(0) < 8 {
            return Err(Error::InvalidArgument("contour needs at least 8 nodes per ray".into()));
        }
        Ok(c)
    }

    /// Window covering the operator's spectral range and the functions'
    /// scales, padded so the truncated tails are below `tol`: by `tol^{1/α}`
    /// towards zero and `tol^{-1/β}` towards infinity.
    pub fn for_functions(plan: &ResolventPlan, fns: &[PsiFunction], opts: &QuadratureOptions) -> Result<Self> {
        let (lo, hi) = plan.spectral_window()?;
        let mut r_min = f64::INFINITY;
        let mut r_max: f64 = 0.0;
        let mut mu = FRAC_PI_2;
        for f in fns {
            if !f.is_decaying() {
                return Err(Error::InvalidArgument(format!("{} is not a decaying function", f.name())));
            }
            let (slo, shi) = f.scales();
            r_min = r_min.min(lo.min(slo) * opts.tol.powf(1.0 / f.alpha()));
            r_max = r_max.max(hi.max(shi) * opts.tol.powf(-1.0 / f.beta()));
            mu = mu.min(f.mu());
        }
        if fns.is_empty() {
            r_min = lo;
            r_max = hi;
        }
        let omega = plan.operator().omega();
        let theta = opts.theta.unwrap_or(0.5 * (omega + mu));
        if theta <= omega || theta >= mu.min(FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "contour angle {theta:.4} must lie strictly between ω = {omega:.4} and μ = {mu:.4}"
            )));
        }
        Self::new(theta, r_min, r_max)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn window(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    /// Node index range `k_lo..=k_hi` at a level; node `k` sits at `ln r = k·h_L`.
    fn index_range(&self, level: u32) -> (i64, i64) {
        let h = self.step / 2f64.powi(level as i32);
        let widen = level as f64 * 2.0 * LN_2;
        let lo = ((self.r_min.ln() - widen) / h).floor() as i64;
        let hi = ((self.r_max.ln() + widen) / h).ceil() as i64;
        (lo, hi)
    }

    pub fn nodes_per_ray(&self, level: u32) -> usize {
        let (lo, hi) = self.index_range(level);
        (hi - lo + 1) as usize
    }

    /// `(z, sign)` on the four rays; the sign carries the orientation.
    fn ray_points(&self, r: f64) -> [(C64, f64); 4] {
        let e = C64::from_polar(r, self.theta);
        [(e.conj(), 1.0), (e, -1.0), (-e.conj(), 1.0), (-e, -1.0)]
    }
}

/// Result of a refined contour evaluation.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub values: Vec<Field>,
    /// Refinement level of the returned values.
    pub level: u32,
    /// Largest relative change at the last refinement.
    pub change: f64,
    pub solves: usize,
}

/// `ψ(Π_B)u` by contour quadrature, refined until successive levels agree.
pub fn apply_psi(plan: &ResolventPlan, psi: &PsiFunction, contour: &Contour, u: &Field) -> Result<Field> {
    let q = apply_psi_family(plan, std::slice::from_ref(psi), contour, u, &QuadratureOptions::default())?;
    Ok(q.values.into_iter().next().expect("one function"))
}

/// Applies several functions with one set of resolvent solves.
///
/// Level `L` uses step `h/2^L` on a window widened by `4^L`; its nodes contain
/// those of level `L-1`, so each refinement only solves at new nodes.
pub fn apply_psi_family(
    plan: &ResolventPlan,
    fns: &[PsiFunction],
    contour: &Contour,
    u: &Field,
    opts: &QuadratureOptions,
) -> Result<Quadrature> {
    let zero = Field::zeros(*u.torus(), u.fiber());
    let mut sums = vec![zero; fns.len()];
    let mut prev: Option<Vec<Field>> = None;
    let mut solves = 0;
    let inv_2pi_i = C64::new(0.0, -0.5 / PI);
    let un = u.norm2();
    let mut vals = Vec::new();
    let mut change = f64::INFINITY;
    for level in 0..=opts.max_refinements {
        let (lo, hi) = contour.index_range(level);
        let prev_range = level.checked_sub(1).map(|l| contour.index_range(l));
        let h = contour.step / 2f64.powi(level as i32);
        for k in lo..=hi {
            // Skip nodes already summed at the previous level.
            if let Some((plo, phi)) = prev_range {
                if k % 2 == 0 && (plo..=phi).contains(&(k / 2)) {
                    continue;
                }
            }
            let r = (k as f64 * h).exp();
            for (z, sign) in contour.ray_points(r) {
                let coeffs: Vec<C64> = fns.iter().map(|f| f.eval(z) * sign * inv_2pi_i).collect();
                if coeffs.iter().all(|c| *c == C64::new(0.0, 0.0)) {
                    continue;
                }
                let x = plan.solve(-C64::new(1.0, 0.0) / z, u)?;
                solves += 1;
                for (s, c) in sums.iter_mut().zip(&coeffs) {
                    s.axpy(*c, &x);
                }
            }
        }
        vals = sums.iter().map(|s| s.scaled(C64::new(h, 0.0))).collect();
        if let Some(p) = &prev {
            change = vals
                .iter()
                .zip(p)
                .map(|(v, w)| (v - w).norm2() / v.norm2().max(1e-10 * un).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            if change <= opts.tol {
                return Ok(Quadrature { values: vals, level, change, solves });
            }
        }
        prev = Some(vals.clone());
    }
    if fns.is_empty() || opts.max_refinements == 0 {
        return Ok(Quadrature { values: vals, level: opts.max_refinements, change, solves });
    }
    Err(Error::Quadrature { change })
}
