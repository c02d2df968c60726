use super::cones::{nontangential, BallStencil};
use super::{TentField, TimeGrid};
use crate::lattice::{Field, MatrixField, Torus};
use crate::resolvent::ResolventPlan;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

/// Level `j` of the dyadic cubes used at time `t`: `2^{j-1}h < t ≤ 2^j h`.
pub fn dyadic_level(torus: &Torus, t: f64) -> Result<u32> {
    let ratio = t / torus.spacing();
    if !(ratio > 0.5) || !ratio.is_finite() {
        return Err(Error::DyadicRange(t));
    }
    // Snap times that are powers of two up to rounding.
    let j = (ratio.log2() - 1e-9).ceil().max(0.0) as u32;
    if (1usize << j.min(63)) > torus.points_per_axis() {
        return Err(Error::DyadicRange(t));
    }
    Ok(j)
}

/// `A_t u`: the mean of `u` over the dyadic cube of level [`dyadic_level`]
/// containing each point.
pub fn dyadic_average(u: &Field, t: f64) -> Result<Field> {
    let torus = *u.torus();
    let j = dyadic_level(&torus, t)?;
    let per_axis = torus.points_per_axis() >> j;
    let cube_of = |p: usize| {
        let c = torus.coords(p);
        (0..torus.dim()).fold(0usize, |acc, a| acc * per_axis + (c[a] >> j))
    };
    let fiber = u.fiber();
    let cubes = per_axis.pow(torus.dim() as u32);
    let mut sums = vec![C64::new(0.0, 0.0); cubes * fiber];
    for p in 0..torus.num_points() {
        let q = cube_of(p);
        for (s, v) in sums[q * fiber..(q + 1) * fiber].iter_mut().zip(u.at(p)) {
            *s += v;
        }
    }
    let size = (1usize << j).pow(torus.dim() as u32) as f64;
    let mut out = Field::zeros(torus, fiber);
    for p in 0..torus.num_points() {
        let q = cube_of(p);
        for (o, s) in out.at_mut(p).iter_mut().zip(&sums[q * fiber..(q + 1) * fiber]) {
            *o = s / size;
        }
    }
    Ok(out)
}

/// `γ_t(x)w = (Q_t w)(x)` for constant `w`, one `N×N` matrix field per time.
#[derive(Clone, Debug)]
pub struct PrincipalPart {
    grid: TimeGrid,
    gamma: Vec<MatrixField>,
}

impl PrincipalPart {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn slice(&self, i: usize) -> &MatrixField {
        &self.gamma[i]
    }

    /// `γ_{t_i}(x)w(x)`.
    pub fn apply(&self, i: usize, w: &Field) -> Result<Field> {
        self.gamma[i].apply(w)
    }

    /// Column `k`, i.e. `(t, x) ↦ Q_t e_k(x)`.
    pub fn column(&self, k: usize) -> Result<TentField> {
        let slices = self
            .gamma
            .iter()
            .map(|g| {
                let torus = *g.torus();
                let data = (0..torus.num_points())
                    .flat_map(|p| {
                        let m = g.matrix_at(p);
                        (0..m.nrows()).map(move |r| m[(r, k)])
                    })
                    .collect();
                Field::from_vec(torus, g.rows(), data)
            })
            .collect::<Result<Vec<_>>>()?;
        TentField::new(self.grid.clone(), slices)
    }
}

pub fn principal_part(plan: &ResolventPlan, grid: &TimeGrid) -> Result<PrincipalPart> {
    let op = plan.operator();
    let torus = *op.torus();
    grid.check_torus(&torus)?;
    let n = op.fiber();
    let basis: Vec<Field> = (0..n)
        .map(|k| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[k] = C64::new(1.0, 0.0);
            Field::constant(torus, &e)
        })
        .collect();
    let gamma = grid
        .times()
        .iter()
        .map(|&t| {
            let cols = basis.iter().map(|e| plan.q_t(t, e)).collect::<Result<Vec<_>>>()?;
            MatrixField::from_fn(torus, n, n, |p| DMatrix::from_fn(n, n, |r, c| cols[c].at(p)[r]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrincipalPart { grid: grid.clone(), gamma })
}

/// `Q_t P_t^Ñ u = [Q_t P_t^Ñ u − γ_t A_t P_t^Ñ u] + γ_t A_t P_t^Ñ u`.
#[derive(Clone, Debug)]
pub struct PrincipalSplit {
    pub full: TentField,
    pub approx_err: TentField,
    pub principal: TentField,
}

pub fn principal_split(plan: &ResolventPlan, gamma: &PrincipalPart, u: &Field, ntilde: usize) -> Result<PrincipalSplit> {
    if ntilde == 0 {
        return Err(Error::InvalidArgument("Ñ must be at least 1".into()));
    }
    let grid = gamma.grid().clone();
    let mut full = Vec::with_capacity(grid.len());
    let mut principal = Vec::with_capacity(grid.len());
    let mut err = Vec::with_capacity(grid.len());
    for (i, &t) in grid.times().iter().enumerate() {
        let v = plan.p_t_power(t, ntilde, u)?;
        let q = plan.q_t(t, &v)?;
        let g = gamma.apply(i, &dyadic_average(&v, t)?)?;
        err.push(&q - &g);
        full.push(q);
        principal.push(g);
    }
    Ok(PrincipalSplit {
        full: TentField::new(grid.clone(), full)?,
        approx_err: TentField::new(grid.clone(), err)?,
        principal: TentField::new(grid, principal)?,
    })
}

/// `M_q u(x) = sup_r (⨍_{B(x,r)} |u|^q)^{1/q}` over radii `r`.
pub fn maximal_q(u: &Field, q: f64, radii: &[f64]) -> Result<Vec<f64>> {
    let torus = u.torus();
    let n = torus.dim();
    let d: Vec<f64> = u.pointwise_norms().iter().map(|v| v.powf(q)).collect();
    let mut out = vec![0.0f64; torus.num_points()];
    for &r in radii {
        let ball = BallStencil::new(torus, r)?;
        let vol = super::cones::unit_ball_volume(n) * r.powi(n as i32);
        for (o, v) in out.iter_mut().zip(ball.integrate(torus, &d)) {
            *o = o.max(v / vol);
        }
    }
    Ok(out.into_iter().map(|v| v.powf(1.0 / q)).collect())
}

/// `‖A_t T_t u‖_{T^{p,∞}}` with the maximal-function comparison `‖M_q u‖_p`,
/// `q = max(1, p/2)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NontangentialMax {
    pub norm: f64,
    pub maximal_norm: f64,
    pub q: f64,
}

pub fn nontangential_max(
    u: &Field,
    family: &dyn Fn(f64, &Field) -> Result<Field>,
    p: f64,
    grid: &TimeGrid,
) -> Result<NontangentialMax> {
    let f = TentField::from_fn(grid.clone(), |_, t| dyadic_average(&family(t, u)?, t))?;
    let norm = nontangential(&f, p, 1.0)?;
    let q = (p / 2.0).max(1.0);
    let m = maximal_q(u, q, grid.times())?;
    let maximal_norm = (u.torus().cell_volume() * m.iter().map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p);
    Ok(NontangentialMax { norm, maximal_norm, q })
}
