//! Tent spaces over the discretised upper half-space `(0, ∞) × 𝕋ⁿ`.
//!
//! A [`TentField`] stores one lattice field per time of a geometric
//! [`TimeGrid`]. Norms use exact cell-fraction weights for balls, so the
//! `T^{2,2}` Fubini identity holds to rounding.

mod cones;
mod dyadic;
mod schur;

pub use cones::{
    carleson_norm, carleson_norm_q, factorization_check, nontangential, tent_norm, tent_norm_q, vertical_norm,
    unit_ball_volume, BallStencil, Factorization,
};
pub use dyadic::{
    dyadic_average, dyadic_level, maximal_q, nontangential_max, principal_part, principal_split, NontangentialMax,
    PrincipalPart, PrincipalSplit,
};
pub use schur::{
    calderon_constant, schur_apply, schur_norm_estimate, CalderonKernel, IdentityKernel, SchurNorm, SchurVariant,
    TimeKernel,
};

use crate::lattice::io::{read_f64, read_header, read_u32, read_values, write_header, write_values};
use crate::lattice::{Field, Torus};
use crate::{Error, Result, C64};
use std::io::{Read, Write};

/// Geometric times `t_i = t_min·ρ^i` with log-trapezoid weights for `dt/t`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    weights: Vec<f64>,
    ratio: f64,
}

impl TimeGrid {
    /// Default ratio `2^{1/4}`.
    pub const DEFAULT_RATIO: f64 = 1.189_207_115_002_721;

    /// All `t_min·ρ^i ≤ t_max` (up to rounding); at least two times.
    pub fn geometric(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max.is_finite() && ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("time grid [{t_min}, {t_max}] with ratio {ratio}")));
        }
        let steps = ((t_max / t_min).ln() / ratio.ln() + 1e-9).floor();
        if steps < 1.0 {
            return Err(Error::InvalidArgument(format!("time grid [{t_min}, {t_max}] holds fewer than two times")));
        }
        let k = steps as usize + 1;
        let times = (0..k).map(|i| t_min * ratio.powi(i as i32)).collect();
        Ok(Self::with_times(times, ratio))
    }

    fn with_times(times: Vec<f64>, ratio: f64) -> Self {
        let k = times.len();
        let lr = ratio.ln();
        let weights = (0..k).map(|i| if i == 0 || i + 1 == k { 0.5 * lr } else { lr }).collect();
        Self { times, weights, ratio }
    }

    /// `[h, ℓ/8]`: wide enough for the quadratic estimates, narrow enough
    /// for apertures up to 4.
    pub fn default_for(torus: &Torus) -> Result<Self> {
        Self::geometric(torus.spacing(), torus.period() / 8.0, Self::DEFAULT_RATIO)
    }

    /// Same window with `ρ` replaced by `√ρ`.
    pub fn refined(&self) -> Result<Self> {
        Self::geometric(self.t_min(), self.t_max(), self.ratio.sqrt())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Checks the window lies in `[h, ℓ/4]`.
    pub fn check_torus(&self, torus: &Torus) -> Result<()> {
        let (lo, hi) = (torus.spacing() * (1.0 - 1e-12), torus.period() / 4.0 * (1.0 + 1e-12));
        if self.t_min() < lo || self.t_max() > hi {
            return Err(Error::InvalidArgument(format!(
                "time window [{}, {}] outside [h, ℓ/4] = [{}, {}]",
                self.t_min(),
                self.t_max(),
                torus.spacing(),
                torus.period() / 4.0
            )));
        }
        Ok(())
    }
}

/// Values `F(t_i, x)` on a time grid and a torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TentField {
    grid: TimeGrid,
    slices: Vec<Field>,
}

impl TentField {
    pub fn new(grid: TimeGrid, slices: Vec<Field>) -> Result<Self> {
        if slices.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} slices for {} times", slices.len(), grid.len())));
        }
        let first = &slices[0];
        grid.check_torus(first.torus())?;
        for s in &slices[1..] {
            first.check_compatible(s)?;
        }
        if slices.iter().any(|s| s.data().iter().any(|z| !z.is_finite())) {
            return Err(Error::InvalidArgument("tent field has non-finite values".into()));
        }
        Ok(Self { grid, slices })
    }

    /// Fills slice `i` with `f(i, t_i)`.
    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(usize, f64) -> Result<Field>) -> Result<Self> {
        let slices = grid.times().iter().enumerate().map(|(i, &t)| f(i, t)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, slices)
    }

    pub fn zeros(grid: TimeGrid, torus: Torus, fiber: usize) -> Result<Self> {
        let slices = vec![Field::zeros(torus, fiber); grid.len()];
        Self::new(grid, slices)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn torus(&self) -> &Torus {
        self.slices[0].torus()
    }

    pub fn fiber(&self) -> usize {
        self.slices[0].fiber()
    }

    pub fn slice(&self, i: usize) -> &Field {
        &self.slices[i]
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<Field> {
        self.slices
    }

    fn check_compatible(&self, other: &TentField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("tent fields on different time grids".into()));
        }
        self.slices[0].check_compatible(&other.slices[0])
    }

    pub fn scaled(&self, a: C64) -> TentField {
        TentField { grid: self.grid.clone(), slices: self.slices.iter().map(|s| s.scaled(a)).collect() }
    }

    pub fn add(&self, other: &TentField) -> Result<TentField> {
        self.check_compatible(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a + b).collect();
        Ok(TentField { grid: self.grid.clone(), slices })
    }

    pub fn sub(&self, other: &TentField) -> Result<TentField> {
        self.check_compatible(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a - b).collect();
        Ok(TentField { grid: self.grid.clone(), slices })
    }

    /// Pointwise product; a scalar field (fibre 1) multiplies every component,
    /// otherwise the fibres must match and the product is componentwise.
    pub fn product(&self, other: &TentField) -> Result<TentField> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("tent fields on different time grids".into()));
        }
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| {
                if a.fiber() == 1 {
                    b.mul_scalar_field(a)
                } else if b.fiber() == 1 {
                    a.mul_scalar_field(b)
                } else {
                    a.check_compatible(b)?;
                    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
                    Field::from_vec(*a.torus(), a.fiber(), data)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        TentField::new(self.grid.clone(), slices)
    }

    /// `|F(t_i, x)|²` summed over the fibre, per slice.
    pub(crate) fn densities(&self) -> Vec<Vec<f64>> {
        self.slices.iter().map(|s| s.pointwise_norms().iter().map(|v| v * v).collect()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().map(Field::max_abs).fold(0.0, f64::max)
    }

    /// Binary record: `K: u32`, the ratio, the `K` times, the torus header,
    /// then the `K` slice blocks (see [`crate::lattice::io`]).
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.grid.len() as u32).to_le_bytes())?;
        w.write_all(&self.grid.ratio.to_le_bytes())?;
        for t in self.grid.times() {
            w.write_all(&t.to_le_bytes())?;
        }
        write_header(w, self.torus(), self.fiber())?;
        for s in &self.slices {
            write_values(w, s)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let k = read_u32(r)? as usize;
        if k < 2 {
            return Err(Error::Format(format!("time grid with {k} times")));
        }
        let ratio = read_f64(r)?;
        let times = (0..k).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        let geometric = times.windows(2).all(|w| w[1] > w[0] && (w[1] / w[0] / ratio - 1.0).abs() <= 1e-12);
        if !(ratio > 1.0 && geometric) {
            return Err(Error::Format("time grid is not geometric".into()));
        }
        let grid = TimeGrid::with_times(times, ratio);
        let (torus, fiber) = read_header(r)?;
        let slices = (0..k).map(|_| read_values(r, torus, fiber)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, slices)
    }
}

#[cfg(test)]
mod tests;
