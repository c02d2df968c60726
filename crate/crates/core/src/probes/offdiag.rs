//! Off-diagonal decay orders `‖1_E U_t 1_F u‖ ≲ (1 + d(E,F)/t)^{−M}‖u‖`.

use crate::lattice::{Ball, Field, GridSet, Torus};
use crate::random::{complex_normal, trial_rng};
use crate::{Error, Result, C64};
use serde::Serialize;
use std::f64::consts::PI;

/// Norms below this (relative to `‖u‖ = 1`) are treated as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Least-squares fit at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffDiagPoint {
    pub t: f64,
    /// `−slope` of `ln‖1_E U_t 1_F u‖` against `ln(1 + d/t)`.
    pub order: f64,
    /// Root-mean-square residual of the fit in `ln` units.
    pub residual: f64,
    /// `(d/t, ‖1_E U_t 1_F u‖)` pairs; censored values are reported as 0.
    pub norms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffDiagFit {
    /// Smallest fitted order over the uncensored times.
    pub order: f64,
    pub residual: f64,
    pub points: Vec<OffDiagPoint>,
    /// Times where fewer than two separations stayed above the noise floor.
    pub censored: usize,
}

fn slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - b * (x - mx)).powi(2)).sum();
    (b, (rss / n).sqrt())
}

fn restricted_norm(v: &Field, set: &GridSet) -> f64 {
    let h = v.torus().cell_volume();
    let s: f64 = set.indices().map(|p| v.at(p).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    (h * s).sqrt()
}

/// Fits the decay order of `U_t` from `F = B(0, t)` to `E = {x : d(x, F) ≥ d}`
/// for `d = r·t`, `r ∈ ratios`. The input is `u = w·c` with a random
/// `c ∈ ℂ^N` and the window `w(x) = cos²(π|x|/2t)` on `F`, which keeps the
/// grid-scale content of `u` small; a sharp cutoff would excite the
/// Nyquist mode, whose algebraic tail hides the decay at the short times
/// that fit in the torus.
///
/// Needs at least four ratios and `t(1 + max r) ≤ ℓ/2`. If every time is
/// censored by the noise floor, the error carries the order the floor
/// certifies, `ln(1/floor)/ln(1 + min r)`.
pub fn offdiag_order(
    family: &dyn Fn(f64, &Field) -> Result<Field>,
    torus: &Torus,
    fiber: usize,
    times: &[f64],
    ratios: &[f64],
    seed: u64,
) -> Result<OffDiagFit> {
    if ratios.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 separations, got {}", ratios.len())));
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("no times given".into()));
    }
    let r_max = ratios.iter().copied().fold(0.0, f64::max);
    let r_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if !(r_min > 0.0) {
        return Err(Error::InvalidArgument("separations must be positive".into()));
    }
    let half = torus.period() / 2.0;
    let origin = [0.0; 3];
    let mut points = Vec::new();
    let mut censored = 0;
    for (k, &t) in times.iter().enumerate() {
        if !(t > 0.0) || t * (1.0 + r_max) > half * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("time {t}: separations reach past half the period")));
        }
        let f_set = GridSet::ball(*torus, &Ball::new(&origin[..torus.dim()], t));
        if f_set.is_empty() {
            return Err(Error::InvalidArgument(format!("time {t} below the grid resolution")));
        }
        let mut rng = trial_rng(seed, k as u64);
        let dir: Vec<C64> = (0..fiber).map(|_| complex_normal(&mut rng)).collect();
        let mut u = Field::from_fn(*torus, fiber, |x, out| {
            let r = torus.distance(x, &origin[..torus.dim()]);
            let w = if r < t { (0.5 * PI * r / t).cos().powi(2) } else { 0.0 };
            for (o, d) in out.iter_mut().zip(&dir) {
                *o = d * w;
            }
        });
        let n = u.norm2();
        u.scale_mut(C64::new(1.0 / n, 0.0));
        let v = family(t, &u)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut norms = Vec::new();
        for &r in ratios {
            let e = f_set.far_from(r * t);
            let val = if e.is_empty() { 0.0 } else { restricted_norm(&v, &e) };
            if val > NOISE_FLOOR {
                xs.push((1.0 + r).ln());
                ys.push(val.ln());
                norms.push((r, val));
            } else {
                norms.push((r, 0.0));
            }
        }
        if xs.len() < 2 {
            censored += 1;
            continue;
        }
        let (b, residual) = slope(&xs, &ys);
        points.push(OffDiagPoint { t, order: -b, residual, norms });
    }
    if points.is_empty() {
        return Err(Error::BelowNoiseFloor { lower_bound: (1.0 / NOISE_FLOOR).ln() / (1.0 + r_min).ln() });
    }
    let worst = points.iter().min_by(|a, b| a.order.total_cmp(&b.order)).expect("nonempty");
    let (order, residual) = (worst.order, worst.residual);
    Ok(OffDiagFit { order, residual, points, censored })
}
