//! Dense small-grid oracle for `f(Π_B)u`, independent of the resolvent and
//! quadrature code paths.

use crate::dirac::PerturbedDirac;
use crate::lattice::Field;
use crate::resolvent::DENSE_LIMIT;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

/// Eigenbases with condition number above this use the Schur–Parlett path.
const MAX_EIGEN_CONDITION: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Hermitian,
    Eigen,
    SchurParlett,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub value: Field,
    pub method: OracleMethod,
    /// Condition number of the eigenbasis on `R(Π_B)` (1 for the Hermitian path).
    pub condition: f64,
    pub null_dim: usize,
    pub range_dim: usize,
}

/// `f(Π_B)u` by dense diagonalisation on `R(Π_B)` and `f(0)` on `N(Π_B)`.
///
/// A non-finite `f(0)` (e.g. `[z]^{α-1}` with `α < 1`) is taken as `0`, the
/// limit for every decaying function.
pub fn dense_oracle(op: &PerturbedDirac, f: &dyn Fn(C64) -> C64, u: &Field) -> Result<Field> {
    Ok(dense_oracle_report(op, f, u)?.value)
}

pub fn dense_oracle_report(op: &PerturbedDirac, f: &dyn Fn(C64) -> C64, u: &Field) -> Result<OracleReport> {
    let d = op.total_dim();
    if d > DENSE_LIMIT {
        return Err(Error::SolverMode(format!("dense oracle limited to {DENSE_LIMIT} unknowns, got {d}")));
    }
    if u.torus() != op.torus() || u.fiber() != op.fiber() {
        return Err(Error::DimensionMismatch("field does not match the operator".into()));
    }
    let a = op.assemble_dense()?;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let thr = 1e-9 * smax.max(f64::MIN_POSITIVE);
    let uu = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᴴ");
    let range: Vec<usize> = (0..d).filter(|&k| svd.singular_values[k] > thr).collect();
    let null: Vec<usize> = (0..d).filter(|&k| svd.singular_values[k] <= thr).collect();
    let u_r = DMatrix::from_fn(d, range.len(), |i, j| uu[(i, range[j])]);
    let w_n = DMatrix::from_fn(d, null.len(), |i, j| vt[(null[j], i)].conj());
    let mut basis = DMatrix::zeros(d, d);
    basis.view_mut((0, 0), (d, null.len())).copy_from(&w_n);
    basis.view_mut((0, null.len()), (d, range.len())).copy_from(&u_r);
    let coef = basis
        .lu()
        .solve(&DVector::from_column_slice(u.data()))
        .ok_or_else(|| Error::Oracle("null space and range are not complementary".into()))?;
    let a_n = coef.rows(0, null.len()).into_owned();
    let b = coef.rows(null.len(), range.len()).into_owned();

    let f0 = f(C64::new(0.0, 0.0));
    let f0 = if f0.is_finite() { f0 } else { C64::new(0.0, 0.0) };
    let mut out = (&w_n * a_n) * f0;
    let (fb, method, condition) = if range.is_empty() {
        (DVector::zeros(0), OracleMethod::Hermitian, 1.0)
    } else {
        let c = u_r.adjoint() * &a * &u_r;
        function_of(&c, f, f0, &b)?
    };
    out += &u_r * fb;
    Ok(OracleReport {
        value: Field::from_vec(*u.torus(), u.fiber(), out.as_slice().to_vec())?,
        method,
        condition,
        null_dim: null.len(),
        range_dim: range.len(),
    })
}

fn snap(z: C64, scale: f64) -> C64 {
    if z.norm() <= 1e-12 * scale {
        C64::new(0.0, 0.0)
    } else {
        z
    }
}

fn eval(f: &dyn Fn(C64) -> C64, f0: C64, z: C64) -> C64 {
    if z == C64::new(0.0, 0.0) {
        f0
    } else {
        f(z)
    }
}

/// `f(C)b` for a square `C` with no zero eigenvalue (up to rounding).
fn function_of(
    c: &DMatrix<C64>,
    f: &dyn Fn(C64) -> C64,
    f0: C64,
    b: &DVector<C64>,
) -> Result<(DVector<C64>, OracleMethod, f64)> {
    let n = c.nrows();
    let scale = c.norm();
    if (c - c.adjoint()).norm() <= 1e-12 * scale {
        let h = (c + c.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let fl = DVector::from_fn(n, |k, _| eval(f, f0, snap(C64::new(eig.eigenvalues[k], 0.0), scale)));
        let y = eig.eigenvectors.adjoint() * b;
        let y = y.component_mul(&fl);
        return Ok((&eig.eigenvectors * y, OracleMethod::Hermitian, 1.0));
    }
    let (z, t) = c.clone().schur().unpack();
    // Eigenvectors of the triangular factor by back substitution.
    let mut vt = DMatrix::<C64>::zeros(n, n);
    let tiny = f64::EPSILON * scale;
    for k in 0..n {
        vt[(k, k)] = C64::new(1.0, 0.0);
        let lk = t[(k, k)];
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in j + 1..=k {
                s += t[(j, l)] * vt[(l, k)];
            }
            let mut den = t[(j, j)] - lk;
            if den.norm() < tiny {
                den = C64::new(tiny, 0.0);
            }
            vt[(j, k)] = -s / den;
        }
        let nk = vt.column(k).norm();
        vt.column_mut(k).unscale_mut(nk);
    }
    let v = &z * &vt;
    let sv = v.singular_values();
    let cond = sv.max() / sv.min().max(f64::MIN_POSITIVE);
    if cond <= MAX_EIGEN_CONDITION {
        let y = v
            .clone()
            .lu()
            .solve(b)
            .ok_or_else(|| Error::Oracle("singular eigenbasis".into()))?;
        let fl = DVector::from_fn(n, |k, _| eval(f, f0, snap(t[(k, k)], scale)));
        return Ok((&v * y.component_mul(&fl), OracleMethod::Eigen, cond));
    }
    // Schur–Parlett recurrence on the triangular factor.
    let mut ft = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        ft[(i, i)] = eval(f, f0, snap(t[(i, i)], scale));
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let den = t[(j, j)] - t[(i, i)];
            if den.norm() <= 1e-8 * scale {
                return Err(Error::Oracle(format!(
                    "eigenbasis condition {cond:.2e} and nearly repeated eigenvalues; Schur–Parlett fallback failed"
                )));
            }
            let mut s = t[(i, j)] * (ft[(j, j)] - ft[(i, i)]);
            for k in i + 1..j {
                s += ft[(i, k)] * t[(k, j)] - t[(i, k)] * ft[(k, j)];
            }
            ft[(i, j)] = s / den;
        }
    }
    let y = z.adjoint() * b;
    Ok((&z * (ft * y), OracleMethod::SchurParlett, cond))
}
