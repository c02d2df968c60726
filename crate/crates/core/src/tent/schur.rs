use super::{TentField, TimeGrid};
use crate::lattice::{Field, Torus};
use crate::random::{band_limited, default_band, trial_rng};
use crate::resolvent::ResolventPlan;
use crate::{Error, Result, C64};

/// Operator-valued kernel `K(t, s)` acting on lattice fields.
pub trait TimeKernel: Sync {
    fn apply(&self, t: f64, s: f64, v: &Field) -> Result<Field>;

    /// Whether [`TimeKernel::apply_adjoint`] is available.
    fn has_adjoint(&self) -> bool {
        false
    }

    /// `K(t, s)*v` in `L²`.
    fn apply_adjoint(&self, _t: f64, _s: f64, _v: &Field) -> Result<Field> {
        Err(Error::InvalidArgument("kernel has no adjoint".into()))
    }
}

/// `K(t, s) = I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityKernel;

impl TimeKernel for IdentityKernel {
    fn apply(&self, _t: f64, _s: f64, v: &Field) -> Result<Field> {
        Ok(v.clone())
    }

    fn has_adjoint(&self) -> bool {
        true
    }

    fn apply_adjoint(&self, _t: f64, _s: f64, v: &Field) -> Result<Field> {
        Ok(v.clone())
    }
}

/// `K(t, s) = (I − P_t^Ñ) P_s Q_s^{Ñ−1}`.
pub struct CalderonKernel<'a> {
    plan: &'a ResolventPlan,
    ntilde: usize,
}

impl<'a> CalderonKernel<'a> {
    pub fn new(plan: &'a ResolventPlan, ntilde: usize) -> Result<Self> {
        if ntilde == 0 {
            return Err(Error::InvalidArgument("Ñ must be at least 1".into()));
        }
        Ok(Self { plan, ntilde })
    }

    fn high_pass(&self, t: f64, v: &Field) -> Result<Field> {
        Ok(v - &self.plan.p_t_power(t, self.ntilde, v)?)
    }
}

impl TimeKernel for CalderonKernel<'_> {
    fn apply(&self, t: f64, s: f64, v: &Field) -> Result<Field> {
        let w = self.plan.q_t_power(s, self.ntilde - 1, v)?;
        let w = self.plan.p_t(s, &w)?;
        self.high_pass(t, &w)
    }

    /// Self-adjoint factors when `Π_B` is unperturbed.
    fn has_adjoint(&self) -> bool {
        self.plan.operator().is_unperturbed()
    }

    fn apply_adjoint(&self, t: f64, s: f64, v: &Field) -> Result<Field> {
        if !self.has_adjoint() {
            return Err(Error::InvalidArgument("adjoint needs an unperturbed operator".into()));
        }
        let w = self.high_pass(t, v)?;
        let w = self.plan.p_t(s, &w)?;
        self.plan.q_t_power(s, self.ntilde - 1, &w)
    }
}

/// Truncations of `K`: `K⁻_α(t,s) = 1_{s>t}(t/s)^α K(t,s)` and
/// `K⁺_z(t,s) = 1_{t>s}(s/t)^z K(t,s)` with `z = β + iγ`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum SchurVariant {
    Minus { alpha: f64 },
    Plus { beta: f64, gamma: f64 },
}

impl SchurVariant {
    /// Coefficient of `K(t_i, s_j)F(s_j)` in `(T_K F)(t_i)`: the trapezoid rule
    /// in `ln s` on the truncated range (`[t_i, t_max]` or `[t_min, t_i]`).
    fn coefficient(&self, grid: &TimeGrid, i: usize, j: usize) -> C64 {
        let (t, s) = (grid.times()[i], grid.times()[j]);
        let last = grid.len() - 1;
        let lr = grid.ratio().ln();
        let (inside, end) = match self {
            SchurVariant::Minus { .. } => (j >= i && i < last, j == last),
            SchurVariant::Plus { .. } => (j <= i && i > 0, j == 0),
        };
        if !inside {
            return C64::new(0.0, 0.0);
        }
        let w = if j == i || end { 0.5 * lr } else { lr };
        match *self {
            SchurVariant::Minus { alpha } => C64::new(w * (t / s).powf(alpha), 0.0),
            SchurVariant::Plus { beta, gamma } => (C64::new(beta, gamma) * (s / t).ln()).exp() * w,
        }
    }
}

/// `T_K F(t) = ∫ a(t, s) K(t, s) F(s) ds/s` over the grid of `F`, trapezoid in
/// `ln s`.
pub fn schur_apply(kernel: &dyn TimeKernel, variant: SchurVariant, f: &TentField) -> Result<TentField> {
    let grid = f.grid();
    TentField::from_fn(grid.clone(), |i, t| {
        let mut out = Field::zeros(*f.torus(), f.fiber());
        for (j, &s) in grid.times().iter().enumerate() {
            let a = variant.coefficient(grid, i, j);
            if a != C64::new(0.0, 0.0) {
                out.axpy(a, &kernel.apply(t, s, f.slice(j))?);
            }
        }
        Ok(out)
    })
}

/// Adjoint of [`schur_apply`] for the inner product `Σ_i w_i⟨F_i, G_i⟩`.
pub(super) fn schur_adjoint(kernel: &dyn TimeKernel, variant: SchurVariant, g: &TentField) -> Result<TentField> {
    let grid = g.grid();
    let weights = grid.weights();
    TentField::from_fn(grid.clone(), |j, s| {
        let mut out = Field::zeros(*g.torus(), g.fiber());
        for (i, &t) in grid.times().iter().enumerate() {
            let a = variant.coefficient(grid, i, j);
            if a != C64::new(0.0, 0.0) {
                out.axpy(a.conj() * (weights[i] / weights[j]), &kernel.apply_adjoint(t, s, g.slice(i))?);
            }
        }
        Ok(out)
    })
}

/// `‖F‖_{T^{2,2}}/√c_n`, from the Fubini identity.
fn l2(f: &TentField) -> f64 {
    f.grid().weights().iter().zip(f.slices()).map(|(w, s)| w * s.norm2().powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SchurNorm {
    /// Estimated `T^{2,2} → T^{2,2}` norm (a lower bound).
    pub norm: f64,
    /// Change of the estimate over the last iteration, relative.
    pub change: f64,
    /// Power iteration on `T*T` if the kernel has an adjoint, random probing otherwise.
    pub power_iteration: bool,
}

/// Estimates the `T^{2,2}` operator norm of `T_K` on tent fields over
/// `(grid, torus, fiber)`.
pub fn schur_norm_estimate(
    kernel: &dyn TimeKernel,
    variant: SchurVariant,
    grid: &TimeGrid,
    torus: &Torus,
    fiber: usize,
    iterations: usize,
    seed: u64,
) -> Result<SchurNorm> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("at least one iteration".into()));
    }
    let random = |stream: u64| -> Result<TentField> {
        let mut rng = trial_rng(seed, stream);
        TentField::from_fn(grid.clone(), |_, _| band_limited(torus, fiber, default_band(torus), &mut rng))
    };
    let mut norm = 0.0;
    let mut change = f64::INFINITY;
    if kernel.has_adjoint() {
        let mut f = random(0)?;
        f = f.scaled(C64::new(1.0 / l2(&f), 0.0));
        for _ in 0..iterations {
            let tf = schur_apply(kernel, variant, &f)?;
            let next = l2(&tf);
            change = (next - norm).abs() / next.max(f64::MIN_POSITIVE);
            norm = next;
            let g = schur_adjoint(kernel, variant, &tf)?;
            let gn = l2(&g);
            if gn == 0.0 {
                change = 0.0;
                break;
            }
            f = g.scaled(C64::new(1.0 / gn, 0.0));
        }
        return Ok(SchurNorm { norm, change, power_iteration: true });
    }
    for k in 0..iterations {
        let f = random(k as u64)?;
        let r = l2(&schur_apply(kernel, variant, &f)?) / l2(&f);
        change = (r - norm).max(0.0) / r.max(f64::MIN_POSITIVE);
        norm = norm.max(r);
    }
    Ok(SchurNorm { norm, change, power_iteration: false })
}

/// `C = (∫₀^∞ (τ/(1+τ²))^{2Ñ} dτ/τ)⁻¹`, the constant in `u = C∫ Q_s^{2Ñ}u ds/s`.
pub fn calderon_constant(ntilde: usize) -> Result<f64> {
    if ntilde == 0 {
        return Err(Error::InvalidArgument("Ñ must be at least 1".into()));
    }
    // In σ = ln τ the integrand is (2 cosh σ)^{-2Ñ}: analytic and
    // exponentially decaying, so the trapezoid rule converges geometrically.
    let h = 0.01;
    let k = (40.0 / h) as i64;
    let integral: f64 = (-k..=k).map(|i| (2.0 * (i as f64 * h).cosh()).powi(-2 * ntilde as i32)).sum::<f64>() * h;
    Ok(1.0 / integral)
}
