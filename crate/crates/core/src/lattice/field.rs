use super::{GridSet, Torus};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::ops::{Add, Sub};

/// A `ℂ^N`-valued function sampled on a torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    torus: Torus,
    fiber: usize,
    data: Vec<C64>,
}

impl Field {
    pub fn zeros(torus: Torus, fiber: usize) -> Self {
        Self { torus, fiber, data: vec![C64::new(0.0, 0.0); torus.num_points() * fiber] }
    }

    pub fn from_vec(torus: Torus, fiber: usize, data: Vec<C64>) -> Result<Self> {
        if fiber == 0 || data.len() != torus.num_points() * fiber {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} points of fibre {}",
                data.len(),
                torus.num_points(),
                fiber
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite entries".into()));
        }
        Ok(Self { torus, fiber, data })
    }

    /// Samples `f(x, out)` at every grid point.
    pub fn from_fn(torus: Torus, fiber: usize, mut f: impl FnMut(&[f64], &mut [C64])) -> Self {
        let mut field = Self::zeros(torus, fiber);
        for p in 0..torus.num_points() {
            let x = torus.position(p);
            f(&x[..torus.dim()], &mut field.data[p * fiber..(p + 1) * fiber]);
        }
        field
    }

    pub fn constant(torus: Torus, value: &[C64]) -> Self {
        let fiber = value.len();
        let mut data = Vec::with_capacity(torus.num_points() * fiber);
        for _ in 0..torus.num_points() {
            data.extend_from_slice(value);
        }
        Self { torus, fiber, data }
    }

    /// Assembles a field from scalar components.
    pub fn from_components(parts: &[Field]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("no components".into()))?;
        let torus = first.torus;
        let fiber: usize = parts.iter().map(|f| f.fiber).sum();
        let mut out = Self::zeros(torus, fiber);
        let mut offset = 0;
        for part in parts {
            if part.torus != torus {
                return Err(Error::DimensionMismatch("components on different tori".into()));
            }
            for p in 0..torus.num_points() {
                out.data[p * fiber + offset..p * fiber + offset + part.fiber]
                    .copy_from_slice(part.at(p));
            }
            offset += part.fiber;
        }
        Ok(out)
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn num_points(&self) -> usize {
        self.torus.num_points()
    }

    /// Fibre vector at grid point `p`.
    pub fn at(&self, p: usize) -> &[C64] {
        &self.data[p * self.fiber..(p + 1) * self.fiber]
    }

    pub fn at_mut(&mut self, p: usize) -> &mut [C64] {
        &mut self.data[p * self.fiber..(p + 1) * self.fiber]
    }

    /// Scalar field holding component `c`.
    pub fn component(&self, c: usize) -> Field {
        let data = (0..self.num_points()).map(|p| self.data[p * self.fiber + c]).collect();
        Field { torus: self.torus, fiber: 1, data }
    }

    /// Field holding components `range` of every fibre.
    pub fn components(&self, range: std::ops::Range<usize>) -> Field {
        let width = range.len();
        let mut data = Vec::with_capacity(self.num_points() * width);
        for p in 0..self.num_points() {
            data.extend_from_slice(&self.at(p)[range.clone()]);
        }
        Field { torus: self.torus, fiber: width, data }
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.torus != other.torus || self.fiber != other.fiber {
            return Err(Error::DimensionMismatch(format!(
                "fibre {} on {:?} vs fibre {} on {:?}",
                self.fiber, self.torus, other.fiber, other.torus
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, a: C64) -> Field {
        Field { torus: self.torus, fiber: self.fiber, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn scale_mut(&mut self, a: C64) {
        self.data.iter_mut().for_each(|z| *z *= a);
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: C64, x: &Field) {
        debug_assert_eq!(self.data.len(), x.data.len());
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y += a * v;
        }
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar_field(&self, s: &Field) -> Result<Field> {
        if s.fiber != 1 || s.torus != self.torus {
            return Err(Error::DimensionMismatch("multiplier must be scalar on the same torus".into()));
        }
        let mut out = self.clone();
        for p in 0..self.num_points() {
            let w = s.data[p];
            out.at_mut(p).iter_mut().for_each(|z| *z *= w);
        }
        Ok(out)
    }

    /// Zero outside `set`.
    pub fn restrict(&self, set: &GridSet) -> Field {
        let mut out = self.clone();
        for p in 0..self.num_points() {
            if !set.contains(p) {
                out.at_mut(p).iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            }
        }
        out
    }

    /// Grid inner product `h^n Σ_x ⟨u(x), v(x)⟩`, linear in `self`.
    pub fn inner(&self, other: &Field) -> C64 {
        let s: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        s * self.torus.cell_volume()
    }

    /// Euclidean fibre norm at every point.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        (0..self.num_points())
            .map(|p| self.at(p).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// `L²` norm with quadrature weight `h^n`.
    pub fn norm2(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.torus.cell_volume()).sqrt()
    }

    /// `Lᵖ` norm by Riemann sum; `p = ∞` gives the pointwise maximum.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_of(&self.pointwise_norms(), &self.torus, p)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `Lᵖ` norm of nonnegative point values.
pub(crate) fn lp_norm_of(values: &[f64], torus: &Torus, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lp exponent {p} < 1")));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m: f64, &v| m.max(v)));
    }
    let s: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.powf(p)).sum()
    };
    Ok((s * torus.cell_volume()).powf(1.0 / p))
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), rhs);
        out
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), rhs);
        out
    }
}

/// An `r×c` matrix at every grid point, stored row-major per point.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    torus: Torus,
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl MatrixField {
    pub fn constant(torus: Torus, m: &DMatrix<C64>) -> Self {
        let (rows, cols) = m.shape();
        let block: Vec<C64> = (0..rows).flat_map(|i| (0..cols).map(move |j| m[(i, j)])).collect();
        let mut data = Vec::with_capacity(torus.num_points() * rows * cols);
        for _ in 0..torus.num_points() {
            data.extend_from_slice(&block);
        }
        Self { torus, rows, cols, data }
    }

    pub fn identity(torus: Torus, n: usize) -> Self {
        Self::constant(torus, &DMatrix::identity(n, n))
    }

    /// Builds from a per-point matrix generator.
    pub fn from_fn(torus: Torus, rows: usize, cols: usize, mut f: impl FnMut(usize) -> DMatrix<C64>) -> Result<Self> {
        let mut data = Vec::with_capacity(torus.num_points() * rows * cols);
        for p in 0..torus.num_points() {
            let m = f(p);
            if m.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch(format!("matrix {:?} vs {rows}x{cols}", m.shape())));
            }
            for i in 0..rows {
                for j in 0..cols {
                    data.push(m[(i, j)]);
                }
            }
        }
        Ok(Self { torus, rows, cols, data })
    }

    /// Diagonal matrix field from scalar fields.
    pub fn diagonal(parts: &[Field]) -> Result<Self> {
        let torus = *parts.first().ok_or_else(|| Error::InvalidArgument("no diagonal entries".into()))?.torus();
        let n = parts.len();
        Self::from_fn(torus, n, n, |p| {
            DMatrix::from_fn(n, n, |i, j| if i == j { parts[i].data[p] } else { C64::new(0.0, 0.0) })
        })
    }

    /// Block-diagonal assembly; blocks must live on the same torus.
    pub fn block_diagonal(blocks: &[&MatrixField]) -> Result<Self> {
        let torus = blocks.first().ok_or_else(|| Error::InvalidArgument("no blocks".into()))?.torus;
        if blocks.iter().any(|b| b.torus != torus) {
            return Err(Error::DimensionMismatch("blocks on different tori".into()));
        }
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        Self::from_fn(torus, rows, cols, |p| {
            let mut m = DMatrix::zeros(rows, cols);
            let (mut r0, mut c0) = (0, 0);
            for b in blocks {
                m.view_mut((r0, c0), (b.rows, b.cols)).copy_from(&b.matrix_at(p));
                r0 += b.rows;
                c0 += b.cols;
            }
            m
        })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entries at point `p`.
    pub fn at(&self, p: usize) -> &[C64] {
        let sz = self.rows * self.cols;
        &self.data[p * sz..(p + 1) * sz]
    }

    pub fn matrix_at(&self, p: usize) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, self.at(p))
    }

    /// Pointwise `B(x)u(x)`.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        if u.torus() != &self.torus || u.fiber() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix field applied to fibre {}",
                self.rows,
                self.cols,
                u.fiber()
            )));
        }
        let mut out = Field::zeros(self.torus, self.rows);
        for p in 0..self.torus.num_points() {
            let b = self.at(p);
            let x = u.at(p);
            let y = out.at_mut(p);
            for i in 0..self.rows {
                let row = &b[i * self.cols..(i + 1) * self.cols];
                y[i] = row.iter().zip(x).map(|(a, v)| a * v).sum();
            }
        }
        Ok(out)
    }

    /// Pointwise product `self(x)·other(x)`.
    pub fn mul(&self, other: &MatrixField) -> Result<MatrixField> {
        if self.cols != other.rows || self.torus != other.torus {
            return Err(Error::DimensionMismatch("matrix field product shapes".into()));
        }
        Self::from_fn(self.torus, self.rows, other.cols, |p| self.matrix_at(p) * other.matrix_at(p))
    }

    /// Pointwise inverse; fails if some matrix is singular.
    pub fn inverse(&self) -> Result<MatrixField> {
        let mut failed = false;
        let out = Self::from_fn(self.torus, self.rows, self.cols, |p| {
            self.matrix_at(p).try_inverse().unwrap_or_else(|| {
                failed = true;
                DMatrix::zeros(self.rows, self.cols)
            })
        })?;
        if failed {
            return Err(Error::InvalidArgument("singular coefficient matrix".into()));
        }
        Ok(out)
    }

    /// The common value if the field is spatially constant.
    pub fn constant_value(&self) -> Option<DMatrix<C64>> {
        let first = self.at(0);
        (0..self.torus.num_points())
            .all(|p| self.at(p) == first)
            .then(|| DMatrix::from_row_slice(self.rows, self.cols, first))
    }

    /// Spatial mean.
    pub fn mean(&self) -> DMatrix<C64> {
        let sz = self.rows * self.cols;
        let mut acc = vec![C64::new(0.0, 0.0); sz];
        for p in 0..self.torus.num_points() {
            for (a, v) in acc.iter_mut().zip(self.at(p)) {
                *a += v;
            }
        }
        let n = self.torus.num_points() as f64;
        DMatrix::from_row_slice(self.rows, self.cols, &acc).map(|z| z / n)
    }

    /// `sup_x ‖B(x)‖` in the spectral norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.torus.num_points())
            .map(|p| crate::linalg::spectral_norm(&self.matrix_at(p)))
            .fold(0.0, f64::max)
    }
}
