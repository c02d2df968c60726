use super::TentField;
use crate::lattice::Torus;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Volume of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("tori have dimension 1..=3"),
    }
}

/// A discrete ball `B(0, r)`: lattice offsets with the exact volume of
/// `B(0, r) ∩ cell`, and whether the cell centre lies inside.
#[derive(Clone, Debug)]
pub struct BallStencil {
    radius: f64,
    entries: Vec<([i64; 3], f64, bool)>,
}

impl BallStencil {
    /// Requires `r ≤ ℓ/2` so that the ball does not wrap onto itself.
    pub fn new(torus: &Torus, radius: f64) -> Result<Self> {
        let half = torus.period() / 2.0;
        if !(radius > 0.0) || radius > half * (1.0 + 1e-12) {
            return Err(Error::Aperture { reach: radius, half });
        }
        let n = torus.dim();
        let h = torus.spacing();
        let reach = (radius / h + 0.5 * (n as f64).sqrt()).ceil() as i64;
        let range = |a: usize| if a < n { -reach..=reach } else { 0..=0 };
        let mut entries = Vec::new();
        for k0 in range(0) {
            for k1 in range(1) {
                for k2 in range(2) {
                    let k = [k0, k1, k2];
                    let lo: Vec<f64> = (0..n).map(|a| (k[a] as f64 - 0.5) * h).collect();
                    let hi: Vec<f64> = (0..n).map(|a| (k[a] as f64 + 0.5) * h).collect();
                    let v = box_ball_volume(&lo, &hi, radius);
                    if v > 0.0 {
                        let d2: f64 = (0..n).map(|a| (k[a] as f64 * h).powi(2)).sum();
                        entries.push((k, v, d2.sqrt() < radius));
                    }
                }
            }
        }
        // Exact in 1D and 2D up to rounding; corrects the 3D quadrature.
        let total: f64 = entries.iter().map(|e| e.1).sum();
        let scale = unit_ball_volume(n) * radius.powi(n as i32) / total;
        for e in &mut entries {
            e.1 *= scale;
        }
        Ok(Self { radius, entries })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `Σ_y |B(x,r) ∩ cell(y)|·d(y)` for every grid point `x`.
    pub fn integrate(&self, torus: &Torus, d: &[f64]) -> Vec<f64> {
        (0..torus.num_points())
            .map(|x| {
                let c = torus.coords(x);
                self.entries
                    .iter()
                    .map(|(k, v, _)| {
                        let y = torus.index(&[c[0] as i64 + k[0], c[1] as i64 + k[1], c[2] as i64 + k[2]]);
                        v * d[y]
                    })
                    .sum()
            })
            .collect()
    }

    /// `max_{|y-x|<r} d(y)` over cell centres, for every grid point `x`.
    pub fn supremum(&self, torus: &Torus, d: &[f64]) -> Vec<f64> {
        (0..torus.num_points())
            .map(|x| {
                let c = torus.coords(x);
                self.entries
                    .iter()
                    .filter(|e| e.2)
                    .map(|(k, _, _)| d[torus.index(&[c[0] as i64 + k[0], c[1] as i64 + k[1], c[2] as i64 + k[2]])])
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// `|[lo, hi] ∩ B(0, r)|` for a box in dimension 1, 2 or 3.
fn box_ball_volume(lo: &[f64], hi: &[f64], r: f64) -> f64 {
    match lo.len() {
        1 => (hi[0].min(r) - lo[0].max(-r)).max(0.0),
        2 => rect_disk_area(lo[0], hi[0], lo[1], hi[1], r),
        _ => {
            let (z0, z1) = (lo[2].max(-r), hi[2].min(r));
            if z0 >= z1 {
                return 0.0;
            }
            // The slice area is smooth between the heights where the slice
            // radius crosses an edge or a corner of the rectangle.
            let mut cuts = vec![z0, z1];
            for &x in &[lo[0], hi[0]] {
                for &y in &[lo[1], hi[1], 0.0] {
                    let d2 = x * x + y * y;
                    for v in [d2, x * x, y * y] {
                        if v < r * r {
                            let z = (r * r - v).sqrt();
                            cuts.extend([z, -z]);
                        }
                    }
                }
            }
            cuts.retain(|z| *z >= z0 && *z <= z1);
            cuts.sort_by(f64::total_cmp);
            cuts.windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| {
                    gauss_legendre(w[0], w[1], 4, |z| {
                        rect_disk_area(lo[0], hi[0], lo[1], hi[1], (r * r - z * z).max(0.0).sqrt())
                    })
                })
                .sum()
        }
    }
}

/// Area of `[0,x]×[0,y] ∩ B(0,r)` for `x, y ≥ 0`.
fn quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    let (x, y) = (x.min(r), y.min(r));
    if x * x + y * y <= r * r {
        return x * y;
    }
    let prim = |s: f64| 0.5 * (s * (r * r - s * s).max(0.0).sqrt() + r * r * (s / r).clamp(-1.0, 1.0).asin());
    let xc = (r * r - y * y).max(0.0).sqrt();
    y * xc + prim(x) - prim(xc)
}

fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let g = |x: f64, y: f64| x.signum() * y.signum() * quadrant_area(x.abs(), y.abs(), r);
    (g(x1, y1) - g(x0, y1) - g(x1, y0) + g(x0, y0)).max(0.0)
}

/// Composite 5-point Gauss–Legendre on `pieces` equal subintervals.
fn gauss_legendre(a: f64, b: f64, pieces: usize, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] =
        [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let step = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * step;
            X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * step * x)).sum::<f64>() * 0.5 * step
        })
        .sum()
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} = {p} outside [1, ∞)")));
    }
    Ok(())
}

/// `(Σ_x hⁿ v(x)^p)^{1/p}` for nonnegative pointwise values.
fn lp(torus: &Torus, v: &[f64], p: f64) -> f64 {
    (torus.cell_volume() * v.iter().map(|x| x.powf(p)).sum::<f64>()).powf(1.0 / p)
}

fn densities_q(f: &TentField, q: f64) -> Vec<Vec<f64>> {
    f.slices().iter().map(|s| s.pointwise_norms().iter().map(|v| v.powf(q)).collect()).collect()
}

fn stencils(f: &TentField, aperture: f64) -> Result<Vec<BallStencil>> {
    if !(aperture >= 1.0) {
        return Err(Error::InvalidArgument(format!("aperture {aperture} below 1")));
    }
    let torus = f.torus();
    let reach = aperture * f.grid().t_max();
    let half = torus.period() / 2.0;
    if reach > half * (1.0 + 1e-12) {
        return Err(Error::Aperture { reach, half });
    }
    f.grid().times().iter().map(|&t| BallStencil::new(torus, aperture * t)).collect()
}

/// `‖F‖_{T^{p,2}_α}`: cone integrals `Σ_i w_i t_i^{-n} ∫_{B(x,αt_i)} |F(t_i,y)|² dy`,
/// then `Lᵖ` in `x`.
pub fn tent_norm(f: &TentField, p: f64, aperture: f64) -> Result<f64> {
    tent_norm_q(f, p, 2.0, aperture)
}

/// `‖F‖_{T^{p,q}_α}` with inner exponent `q`.
pub fn tent_norm_q(f: &TentField, p: f64, q: f64, aperture: f64) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let torus = f.torus();
    let n = torus.dim() as i32;
    let dens = densities_q(f, q);
    let balls = stencils(f, aperture)?;
    let mut cone = vec![0.0; torus.num_points()];
    for (i, ball) in balls.iter().enumerate() {
        let c = f.grid().weights()[i] / f.grid().times()[i].powi(n);
        for (acc, v) in cone.iter_mut().zip(ball.integrate(torus, &dens[i])) {
            *acc += c * v;
        }
    }
    let a: Vec<f64> = cone.iter().map(|v| v.powf(1.0 / q)).collect();
    Ok(lp(torus, &a, p))
}

/// `T^{∞,2}` norm: `sup_{x, r} (r^{-n} ∫_0^r ∫_{B(x,r)} |F|² dy dt/t)^{1/2}`
/// over grid centres and radii `r = t_j`.
pub fn carleson_norm(f: &TentField) -> Result<f64> {
    carleson_norm_q(f, 2.0)
}

pub fn carleson_norm_q(f: &TentField, q: f64) -> Result<f64> {
    check_exponent("q", q)?;
    let torus = f.torus();
    let n = torus.dim() as i32;
    let dens = densities_q(f, q);
    let mut cumulative = vec![0.0; torus.num_points()];
    let mut best: f64 = 0.0;
    for (j, &r) in f.grid().times().iter().enumerate() {
        let w = f.grid().weights()[j];
        for (acc, d) in cumulative.iter_mut().zip(&dens[j]) {
            *acc += w * d;
        }
        let ball = BallStencil::new(torus, r)?;
        let m = ball.integrate(torus, &cumulative).into_iter().fold(0.0, f64::max);
        best = best.max(m / r.powi(n));
    }
    Ok(best.powf(1.0 / q))
}

/// `‖F‖_{T^{p,∞}_α}`: the non-tangential maximal function
/// `sup_{|y-x|<αt} |F(t,y)|` in `Lᵖ`.
pub fn nontangential(f: &TentField, p: f64, aperture: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let torus = f.torus();
    let balls = stencils(f, aperture)?;
    let mut sup = vec![0.0f64; torus.num_points()];
    for (slice, ball) in f.slices().iter().zip(&balls) {
        let d = slice.pointwise_norms();
        for (acc, v) in sup.iter_mut().zip(ball.supremum(torus, &d)) {
            *acc = acc.max(v);
        }
    }
    Ok(lp(torus, &sup, p))
}

/// `‖(Σ_i w_i |F(t_i,·)|²)^{1/2}‖_p`.
pub fn vertical_norm(f: &TentField, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let torus = f.torus();
    let mut acc = vec![0.0; torus.num_points()];
    for (w, d) in f.grid().weights().iter().zip(f.densities()) {
        for (a, v) in acc.iter_mut().zip(d) {
            *a += w * v;
        }
    }
    let v: Vec<f64> = acc.iter().map(|x| x.sqrt()).collect();
    Ok(lp(torus, &v, p))
}

/// `‖F·G‖_{T^{p,q}}` against `‖F‖_{T^{p,∞}}·‖G‖_{T^{∞,q}}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Factorization {
    pub lhs: f64,
    pub f_norm: f64,
    pub g_norm: f64,
    pub rhs: f64,
    /// `lhs/rhs`, and 0 when `lhs = 0`.
    pub ratio: f64,
}

pub fn factorization_check(f: &TentField, g: &TentField, p: f64, q: f64) -> Result<Factorization> {
    for (name, e) in [("p", p), ("q", q)] {
        if !(e > 1.0 && e.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {e} outside (1, ∞)")));
        }
    }
    let lhs = tent_norm_q(&f.product(g)?, p, q, 1.0)?;
    let f_norm = nontangential(f, p, 1.0)?;
    let g_norm = carleson_norm_q(g, q)?;
    let rhs = f_norm * g_norm;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(Factorization { lhs, f_norm, g_norm, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_volumes() {
        let r = 0.7;
        assert!((rect_disk_area(-1.0, 1.0, -1.0, 1.0, r) - PI * r * r).abs() < 1e-14);
        assert!((rect_disk_area(0.0, 1.0, 0.0, 1.0, r) - PI * r * r / 4.0).abs() < 1e-14);
        assert!((rect_disk_area(0.0, 1.0, -1.0, 1.0, r) - PI * r * r / 2.0).abs() < 1e-14);
        assert!((rect_disk_area(-0.1, 0.1, -0.1, 0.1, r) - 0.04).abs() < 1e-15);
        assert_eq!(rect_disk_area(0.8, 1.0, 0.0, 0.1, r), 0.0);
        let ball = box_ball_volume(&[-1.0; 3], &[1.0; 3], r);
        assert!((ball - 4.0 * PI * r.powi(3) / 3.0).abs() < 1e-8);
        // Splitting a box into two halves preserves the volume.
        let a = box_ball_volume(&[-0.2, 0.1, -0.3], &[0.5, 0.6, 0.4], r);
        let b = box_ball_volume(&[-0.2, 0.1, -0.3], &[0.5, 0.6, 0.05], r)
            + box_ball_volume(&[-0.2, 0.1, 0.05], &[0.5, 0.6, 0.4], r);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn stencil_volumes_are_exact() {
        for (n, m) in [(1, 32), (2, 32), (3, 16)] {
            let torus = Torus::new(n, m, 1.0).unwrap();
            for r in [0.03, 0.1, 0.25, 0.5] {
                let s = BallStencil::new(&torus, r).unwrap();
                let total: f64 = s.entries.iter().map(|e| e.1).sum();
                let exact = unit_ball_volume(n) * r.powi(n as i32);
                assert!((total - exact).abs() <= 1e-13 * exact);
                // Raw cell fractions are never above the cell volume.
                assert!(s.entries.iter().all(|e| e.1 <= torus.cell_volume() * (1.0 + 1e-6)));
            }
        }
        let torus = Torus::new(2, 16, 1.0).unwrap();
        assert!(matches!(BallStencil::new(&torus, 0.6), Err(Error::Aperture { .. })));
    }
}
