//! Holomorphic functional calculus of `Π_B`.
//!
//! Decaying functions `ψ ∈ Ψ_α^β` are applied by trapezoid quadrature of the
//! Cauchy integral over the boundary of a double sector; `sgn(Π_B)` by the
//! integral `(2/π)∫ Q_t dt/t`; bounded non-decaying functions by regularised
//! `ψ_n → f` with Richardson extrapolation in `n`.

mod contour;
mod sgn;

pub use contour::{apply_psi, apply_psi_family, Contour, Quadrature, QuadratureOptions};
pub use sgn::{
    apply_bounded, apply_sgn, apply_sgn_projected, calculus_bound_estimate, sgn_quadrature, sqrt_pib2,
    CalculusBound, RegularizationOptions, SgnOptions, SgnReport,
};

use crate::{Error, Result, C64};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

type Evaluator = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// A scalar function on a double sector, with its declared decay class.
///
/// `α, β > 0` declares `|ψ(z)| ≲ |z|^α/(1 + |z|^{α+β})` (a `Ψ_α^β` function);
/// `α = β = 0` declares a bounded function that is applied by regularisation.
#[derive(Clone)]
pub struct PsiFunction {
    name: String,
    alpha: f64,
    beta: f64,
    mu: f64,
    /// Radii where the function varies: the quadrature window always covers
    /// `[scale_lo, scale_hi]` besides the spectrum.
    scale_lo: f64,
    scale_hi: f64,
    f: Evaluator,
}

impl fmt::Debug for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiFunction")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("mu", &self.mu)
            .finish()
    }
}

/// `[z] = √(z²)`: `z` on the right half plane, `-z` on the left.
pub fn sector_abs(z: C64) -> C64 {
    if z.re >= 0.0 {
        z
    } else {
        -z
    }
}

impl PsiFunction {
    pub fn new(
        name: impl Into<String>,
        alpha: f64,
        beta: f64,
        mu: f64,
        f: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) || (alpha > 0.0) != (beta > 0.0) {
            return Err(Error::InvalidArgument(format!("decay class ({alpha}, {beta}) must be both positive or both zero")));
        }
        if !(mu > 0.0 && mu <= FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("angle μ = {mu} outside (0, π/2]")));
        }
        Ok(Self { name: name.into(), alpha, beta, mu, scale_lo: 1.0, scale_hi: 1.0, f: Arc::new(f) })
    }

    /// Replaces the characteristic radii (defaults `1, 1`).
    pub fn with_scales(mut self, lo: f64, hi: f64) -> Self {
        self.scale_lo = lo;
        self.scale_hi = hi;
        self
    }

    /// `ψ(tz)`; same class, scales divided by `t`.
    pub fn dilated(&self, t: f64) -> Self {
        let f = self.f.clone();
        Self {
            name: format!("{}(t={t})", self.name),
            alpha: self.alpha,
            beta: self.beta,
            mu: self.mu,
            scale_lo: self.scale_lo / t,
            scale_hi: self.scale_hi / t,
            f: Arc::new(move |z| f(z * t)),
        }
    }

    /// Pointwise product; the classes add.
    pub fn product(&self, other: &PsiFunction) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        Self {
            name: format!("{}*{}", self.name, other.name),
            alpha: self.alpha + other.alpha,
            beta: self.beta + other.beta,
            mu: self.mu.min(other.mu),
            scale_lo: self.scale_lo.min(other.scale_lo),
            scale_hi: self.scale_hi.max(other.scale_hi),
            f: Arc::new(move |z| f(z) * g(z)),
        }
    }

    /// `f/c`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self { f: Arc::new(move |z| f(z) / c), ..self.clone() }
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.f)(z)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn scales(&self) -> (f64, f64) {
        (self.scale_lo, self.scale_hi)
    }

    /// True for `Ψ_α^β` functions with `α, β > 0`.
    pub fn is_decaying(&self) -> bool {
        self.alpha > 0.0
    }

    /// `ψ(z) = z[z]^{α-1}/(1 + z²)^{(α+β)/2}`, in `Ψ_α^β(S_{π/2})`;
    /// `rational(1, 1) = z/(1 + z²)`.
    pub fn rational(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidArgument("rational ψ needs α, β > 0".into()));
        }
        let name = format!("rational({alpha},{beta})");
        Self::new(name, alpha, beta, FRAC_PI_2, move |z| {
            let one = C64::new(1.0, 0.0);
            z * sector_abs(z).powf(alpha - 1.0) / (one + z * z).powf(0.5 * (alpha + beta))
        })
    }

    /// `(1 + iaz)⁻¹ - (1 + ibz)⁻¹`, so that `ψ(Π_B) = R_a - R_b`.
    pub fn resolvent_pair(a: f64, b: f64) -> Result<Self> {
        if a == b || a == 0.0 || b == 0.0 {
            return Err(Error::InvalidArgument("resolvent pair needs distinct nonzero a, b".into()));
        }
        let name = format!("resolvent_pair({a},{b})");
        Ok(Self::new(name, 1.0, 1.0, FRAC_PI_2, move |z| {
            let one = C64::new(1.0, 0.0);
            let i = C64::new(0.0, 1.0);
            one / (one + i * a * z) - one / (one + i * b * z)
        })?
        .with_scales(1.0 / a.abs().max(b.abs()), 1.0 / a.abs().min(b.abs())))
    }

    /// `(z/(1 + z²))^M (1 + z²)^{-Ñ}`: the symbol of `Q_1^M P_1^Ñ`.
    pub fn q_p_power(m: u32, n_tilde: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("M must be at least 1".into()));
        }
        let name = format!("q_p_power({m},{n_tilde})");
        Self::new(name, m as f64, (m + 2 * n_tilde) as f64, FRAC_PI_2, move |z| {
            let w = C64::new(1.0, 0.0) + z * z;
            (z / w).powu(m) / w.powu(n_tilde)
        })
    }

    /// Bounded `exp(iτ·tanh z)`.
    pub fn phase(tau: f64) -> Self {
        Self::new(format!("phase({tau})"), 0.0, 0.0, 1.4, move |z| (C64::new(0.0, tau) * stable_tanh(z)).exp())
            .expect("valid class")
    }

    /// Bounded `f ≡ 1`.
    pub fn one() -> Self {
        Self::new("one", 0.0, 0.0, FRAC_PI_2, |_| C64::new(1.0, 0.0)).expect("valid class")
    }

    /// Bounded `sgn(z) = ±1` on the right/left sector.
    pub fn sgn() -> Self {
        Self::new("sgn", 0.0, 0.0, FRAC_PI_2, |z| C64::new(if z.re >= 0.0 { 1.0 } else { -1.0 }, 0.0))
            .expect("valid class")
    }

    /// Sampled `sup |ψ|` over the closed double sector `S_θ`, taken on the
    /// boundary rays and the real axis.
    pub fn sup_norm(&self, theta: f64) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..=1600 {
            let r = 10f64.powf(-8.0 + 16.0 * k as f64 / 1600.0);
            for phi in [0.0, theta, -theta] {
                for sign in [1.0, -1.0] {
                    best = best.max(self.eval(C64::from_polar(sign * r, phi)).norm());
                }
            }
        }
        best
    }

    /// Sampled constant `C` in `|ψ(z)| ≤ C|z|^α/(1 + |z|^{α+β})` on `S_θ`.
    pub fn class_constant(&self, theta: f64) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..=800 {
            let r = 10f64.powf(-6.0 + 12.0 * k as f64 / 800.0);
            let bound = r.powf(self.alpha) / (1.0 + r.powf(self.alpha + self.beta));
            for phi in [0.0, 0.5 * theta, theta, -theta] {
                for sign in [1.0, -1.0] {
                    best = best.max(self.eval(C64::from_polar(sign * r, phi)).norm() / bound);
                }
            }
        }
        best
    }

    /// Parses a dictionary id: `rational(a,b)`, `resolvent_pair(a,b)`,
    /// `q_p_power(M,N)`, `phase(tau)`, `one`, `sgn`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        let bad = || Error::InvalidArgument(format!("unknown function id {id:?}"));
        let (head, args) = match id.find('(') {
            Some(i) if id.ends_with(')') => (&id[..i], &id[i + 1..id.len() - 1]),
            Some(_) => return Err(bad()),
            None => (id, ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
        };
        match (head, nums.as_slice()) {
            ("rational", [a, b]) => Self::rational(*a, *b),
            ("resolvent_pair", [a, b]) => Self::resolvent_pair(*a, *b),
            ("q_p_power", [m, n]) if m.fract() == 0.0 && n.fract() == 0.0 && *m >= 0.0 && *n >= 0.0 => {
                Self::q_p_power(*m as u32, *n as u32)
            }
            ("phase", [tau]) => Ok(Self::phase(*tau)),
            ("one", []) => Ok(Self::one()),
            ("sgn", []) => Ok(Self::sgn()),
            _ => Err(bad()),
        }
    }

    /// One-line formula and class, for listings.
    pub fn describe(&self) -> String {
        let head = self.name.split('(').next().unwrap_or("");
        let formula = match head {
            "rational" => rational_formula(self.alpha, self.beta),
            "resolvent_pair" => "(1+iaz)^-1 - (1+ibz)^-1".to_string(),
            "q_p_power" => "(z/(1+z²))^M (1+z²)^-N".to_string(),
            "phase" => "exp(iτ tanh z)".to_string(),
            "one" => "1".to_string(),
            "sgn" => "±1 on the right/left sector".to_string(),
            _ => "custom".to_string(),
        };
        if self.is_decaying() {
            let plain = format!("Ψ_{}^{}", self.alpha, self.beta);
            let sym = class_symbol(self.alpha, self.beta);
            let class = if sym == plain { plain } else { format!("{sym} ({plain})") };
            format!("{}: ψ(z) = {formula}, class {class} on S_{:.4}", self.name, self.mu)
        } else {
            format!("{}: f(z) = {formula}, bounded on S_{:.4}", self.name, self.mu)
        }
    }
}

fn rational_formula(alpha: f64, beta: f64) -> String {
    let num = if alpha == 1.0 { "z".to_string() } else { format!("z[z]^{}", alpha - 1.0) };
    let e = 0.5 * (alpha + beta);
    let den = if e == 1.0 { "(1+z²)".to_string() } else { format!("(1+z²)^{e}") };
    format!("{num}/{den}")
}

/// `Ψ` with `α` as subscript and `β` as superscript, in Unicode digits when both
/// are small integers.
fn class_symbol(alpha: f64, beta: f64) -> String {
    const SUP: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    const SUB: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    let digits = |x: f64, table: &[char; 10]| -> Option<String> {
        (x.fract() == 0.0 && (0.0..1e6).contains(&x))
            .then(|| (x as u64).to_string().chars().map(|c| table[c as usize - '0' as usize]).collect())
    };
    match (digits(beta, &SUP), digits(alpha, &SUB)) {
        (Some(b), Some(a)) => format!("Ψ{b}{a}"),
        _ => format!("Ψ_{alpha}^{beta}"),
    }
}

/// The default dictionary used by calculus-bound estimates.
pub fn dictionary() -> Vec<PsiFunction> {
    let mut d = vec![
        PsiFunction::rational(1.0, 1.0).expect("valid"),
        PsiFunction::rational(0.5, 1.5).expect("valid"),
        PsiFunction::rational(2.0, 1.0).expect("valid"),
        PsiFunction::resolvent_pair(0.1, 1.0).expect("valid"),
    ];
    d.extend([PsiFunction::phase(1.0), PsiFunction::phase(4.0), PsiFunction::one(), PsiFunction::sgn()]);
    d
}

#[cfg(test)]
mod tests;

/// `tanh z` via `e^{-2|Re z|}`, finite for large `|Re z|`.
fn stable_tanh(z: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    if z.re >= 0.0 {
        let e = (-2.0 * z).exp();
        (one - e) / (one + e)
    } else {
        -stable_tanh(-z)
    }
}
