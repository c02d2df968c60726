//! Periodic grids, `ℂ^N`-valued fields, spectral transforms, norms and set geometry.
//!
//! Grid points are stored row-major (last axis fastest). A [`Field`] stores the
//! fibre components of one point contiguously, so `data[p * N + c]` is component
//! `c` at point `p`.

mod field;
mod geometry;
pub mod io;
mod spectral;

pub use field::{Field, MatrixField};
pub use geometry::{dyadic_cube_of, dyadic_cubes, periodic_distance, shell, Ball, DyadicCube, GridSet};
pub use spectral::{forward_transform, inverse_transform, Spectral};

use crate::{Error, Result};
use std::f64::consts::PI;

/// A periodic grid `(ℝ/ℓℤ)^n` sampled with `m` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Torus {
    dim: usize,
    m: usize,
    period: f64,
}

impl Torus {
    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidTorus(format!("dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 4 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidTorus(format!(
                "points per axis {points_per_axis} must be a power of two >= 4"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidTorus(format!("period {period} must be positive")));
        }
        Ok(Self { dim, m: points_per_axis, period })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Grid spacing `h = ℓ/m`.
    pub fn spacing(&self) -> f64 {
        self.period / self.m as f64
    }

    pub fn num_points(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    /// Volume `ℓ^n` of the torus.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Quadrature weight `h^n` of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Lattice coordinates of a flat index; unused axes are zero.
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut rest = idx;
        for a in (0..self.dim).rev() {
            c[a] = rest % self.m;
            rest /= self.m;
        }
        c
    }

    /// Flat index of lattice coordinates, reduced modulo `m`.
    pub fn index(&self, coords: &[i64]) -> usize {
        let m = self.m as i64;
        coords[..self.dim]
            .iter()
            .fold(0usize, |acc, &c| acc * self.m + c.rem_euclid(m) as usize)
    }

    /// Physical position `x = h·i` of a grid point.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let h = self.spacing();
        [c[0] as f64 * h, c[1] as f64 * h, c[2] as f64 * h]
    }

    /// Signed integer frequency of FFT bin `j`: `j` for `j < m/2`, else `j - m`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j < self.m / 2 {
            j as i64
        } else {
            j as i64 - self.m as i64
        }
    }

    /// Angular frequency vector `ξ = 2πk/ℓ` of a flat spectral index.
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let scale = 2.0 * PI / self.period;
        let mut xi = [0.0; 3];
        for a in 0..self.dim {
            xi[a] = scale * self.wavenumber(c[a]) as f64;
        }
        xi
    }

    /// Largest frequency magnitude on the grid, `√n·πm/ℓ`.
    pub fn max_frequency(&self) -> f64 {
        (self.dim as f64).sqrt() * PI * self.m as f64 / self.period
    }

    /// Smallest nonzero frequency magnitude, `2π/ℓ`.
    pub fn min_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Periodic Euclidean distance between two positions.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = (a[k] - b[k]).rem_euclid(self.period);
            let d = d.min(self.period - d);
            s += d * d;
        }
        s.sqrt()
    }

    /// Same torus with `m` replaced.
    pub fn with_points(&self, points_per_axis: usize) -> Result<Self> {
        Self::new(self.dim, points_per_axis, self.period)
    }
}

#[cfg(test)]
mod tests;
