//! Seeded random fields and coefficient perturbations.
//!
//! Band-limited fields are defined by coefficients on a fixed set of low
//! frequencies, drawn in an order that does not depend on the grid size. The
//! same `(band, rng state)` therefore produces the same physical function on
//! every grid with `m ≥ band`, which is what refinement comparisons need.

use crate::lattice::{Field, MatrixField, Spectral, Torus};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type TrialRng = ChaCha8Rng;

/// Independent stream for `(seed, stream)`; parallel and serial runs agree.
pub fn trial_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian with `E|z|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Default band for a grid: the lowest `m/4` frequencies per axis.
pub fn default_band(torus: &Torus) -> usize {
    (torus.points_per_axis() / 4).max(2)
}

/// Signed wavenumbers `-band/2 .. band/2` per axis, in draw order.
fn band_modes(dim: usize, band: usize) -> Vec<[i64; 3]> {
    let half = (band / 2) as i64;
    let range: Vec<i64> = (-half..half.max(1)).collect();
    let mut modes = vec![[0i64; 3]];
    for a in 0..dim {
        let mut next = Vec::with_capacity(modes.len() * range.len());
        for m in &modes {
            for &k in &range {
                let mut v = *m;
                v[a] = k;
                next.push(v);
            }
        }
        modes = next;
    }
    modes
}

/// Complex Gaussian field on the given band with unit mean-square amplitude.
pub fn band_limited<R: Rng + ?Sized>(torus: &Torus, fiber: usize, band: usize, rng: &mut R) -> Result<Field> {
    let m = torus.points_per_axis();
    if band == 0 || band > m {
        return Err(Error::InvalidArgument(format!("band {band} outside 1..={m}")));
    }
    let modes = band_modes(torus.dim(), band);
    let scale = (torus.num_points() as f64 / modes.len() as f64).sqrt();
    let mut hat = Field::zeros(*torus, fiber);
    for mode in &modes {
        let idx = torus.index(&mode[..]);
        for c in 0..fiber {
            hat.at_mut(idx)[c] = complex_normal(rng) * scale;
        }
    }
    Ok(Spectral::new(*torus).inverse(&hat))
}

/// Real-valued band-limited scalar field with unit mean-square amplitude.
pub fn band_limited_real<R: Rng + ?Sized>(torus: &Torus, band: usize, rng: &mut R) -> Result<Field> {
    let f = band_limited(torus, 1, band, rng)?;
    let data = f.data().iter().map(|z| C64::new(z.re * std::f64::consts::SQRT_2, 0.0)).collect();
    Field::from_vec(*torus, 1, data)
}

/// How a coefficient perturbation `B = I + ρ` varies in space.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Roughness {
    /// Smooth: `ρ` band-limited to `band` frequencies per axis.
    Smooth { band: usize },
    /// Rough: `ρ` piecewise constant on a `cells^n` partition.
    Rough { cells: usize },
}

/// Random perturbation `B(x) = I + ρ(x)` with `sup_x ‖ρ(x)‖ = amplitude`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub amplitude: f64,
    pub roughness: Roughness,
    /// Keep only the diagonal of `ρ`.
    #[serde(default)]
    pub diagonal: bool,
    /// Keep `ρ` real.
    #[serde(default)]
    pub real: bool,
}

impl CoefficientSpec {
    pub fn smooth(amplitude: f64, band: usize) -> Self {
        Self { amplitude, roughness: Roughness::Smooth { band }, diagonal: false, real: false }
    }

    pub fn rough(amplitude: f64, cells: usize) -> Self {
        Self { amplitude, roughness: Roughness::Rough { cells }, diagonal: false, real: false }
    }

    pub fn diagonal(mut self) -> Self {
        self.diagonal = true;
        self
    }

    /// Samples `I + ρ` on `torus` with an `n×n` fibre.
    ///
    /// The sup-norm normalisation of smooth `ρ` is computed on a fixed
    /// reference grid (`8·band` points per axis, at least 32), so the sampled
    /// function is the same on every grid that resolves the band.
    pub fn sample<R: Rng + ?Sized>(&self, torus: &Torus, n: usize, rng: &mut R) -> Result<MatrixField> {
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(Error::InvalidArgument(format!("amplitude {} outside [0,1)", self.amplitude)));
        }
        let entries: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| !self.diagonal || i == j)
            .collect();
        let rho = match self.roughness {
            Roughness::Smooth { band } => {
                let reference = torus.with_points((8 * band).next_power_of_two().max(32))?;
                let mut parts_ref = Vec::new();
                let mut parts = Vec::new();
                for _ in &entries {
                    let seed = rng.random::<u64>();
                    let draw = |t: &Torus| -> Result<Field> {
                        let mut local = trial_rng(seed, 0);
                        let f = if self.real {
                            band_limited_real(t, band, &mut local)?
                        } else {
                            band_limited(t, 1, band, &mut local)?
                        };
                        Ok(f)
                    };
                    parts_ref.push(draw(&reference)?);
                    parts.push(draw(torus)?);
                }
                let sup_ref = assemble(&reference, n, &entries, &parts_ref)?.sup_norm();
                let scale = if sup_ref > 0.0 { self.amplitude / sup_ref } else { 0.0 };
                scale_entries(&mut parts, scale);
                assemble(torus, n, &entries, &parts)?
            }
            Roughness::Rough { cells } => {
                let m = torus.points_per_axis();
                if cells == 0 || !m.is_multiple_of(cells) {
                    return Err(Error::InvalidArgument(format!("{cells} cells do not divide {m} points")));
                }
                let per = m / cells;
                let ncells = cells.pow(torus.dim() as u32);
                let mats: Vec<DMatrix<C64>> = (0..ncells)
                    .map(|_| {
                        let mut mat = DMatrix::zeros(n, n);
                        for &(i, j) in &entries {
                            let z = complex_normal(rng);
                            mat[(i, j)] = if self.real { C64::new(z.re, 0.0) } else { z };
                        }
                        let norm = crate::linalg::spectral_norm(&mat);
                        if norm > 0.0 {
                            mat.scale_mut(self.amplitude / norm);
                        }
                        mat
                    })
                    .collect();
                MatrixField::from_fn(*torus, n, n, |p| {
                    let c = torus.coords(p);
                    let cell = (0..torus.dim()).fold(0, |acc, a| acc * cells + c[a] / per);
                    mats[cell].clone()
                })?
            }
        };
        MatrixField::from_fn(*torus, n, n, |p| DMatrix::identity(n, n) + rho.matrix_at(p))
    }
}

fn scale_entries(parts: &mut [Field], s: f64) {
    for f in parts {
        f.scale_mut(C64::new(s, 0.0));
    }
}

fn assemble(torus: &Torus, n: usize, entries: &[(usize, usize)], parts: &[Field]) -> Result<MatrixField> {
    MatrixField::from_fn(*torus, n, n, |p| {
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), f) in entries.iter().zip(parts) {
            m[(i, j)] = f.data()[p];
        }
        m
    })
}
