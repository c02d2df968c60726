//! Small dense helpers on top of nalgebra.

use crate::C64;
use nalgebra::{DMatrix, DVector};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub(crate) fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a: f64, &b| a.max(b))
}

/// Solves `a x = b` in place for a row-major `n×n` matrix, partial pivoting.
/// Returns `false` on an exactly singular pivot.
pub(crate) fn solve_small(n: usize, a: &mut [C64], b: &mut [C64]) -> bool {
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].norm();
        for r in k + 1..n {
            let v = a[r * n + k].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return false;
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for r in k + 1..n {
            let l = a[r * n + k] / d;
            if l == ZERO {
                continue;
            }
            for c in k..n {
                let v = a[k * n + c];
                a[r * n + c] -= l * v;
            }
            let bk = b[k];
            b[r] -= l * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    true
}

/// Orthogonal Hessenberg form `A = Q H Qᴴ`, used to solve `(I + sA)x = b` in
/// `O(D²)` per shift.
pub(crate) struct HessenbergSolver {
    q: DMatrix<C64>,
    h: DMatrix<C64>,
}

impl HessenbergSolver {
    pub(crate) fn new(a: DMatrix<C64>) -> Self {
        let (q, h) = a.hessenberg().unpack();
        Self { q, h }
    }

    pub(crate) fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Solves `(I + sA)x = b`; `None` on a singular shifted matrix.
    pub(crate) fn solve(&self, s: C64, b: &DVector<C64>) -> Option<DVector<C64>> {
        let n = self.dim();
        let mut y = self.q.ad_mul(b);
        // Working copy of I + sH, row-major, upper Hessenberg.
        let mut w = vec![ZERO; n * n];
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                w[i * n + j] = s * self.h[(i, j)];
            }
            w[i * n + i] += C64::new(1.0, 0.0);
        }
        for k in 0..n.saturating_sub(1) {
            let (r0, r1) = (k * n, (k + 1) * n);
            if w[r1 + k].norm() > w[r0 + k].norm() {
                for c in k..n {
                    w.swap(r0 + c, r1 + c);
                }
                y.swap_rows(k, k + 1);
            }
            let d = w[r0 + k];
            if d == ZERO {
                return None;
            }
            let l = w[r1 + k] / d;
            if l != ZERO {
                for c in k..n {
                    let v = w[r0 + c];
                    w[r1 + c] -= l * v;
                }
                let yk = y[k];
                y[k + 1] -= l * yk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = y[k];
            for c in k + 1..n {
                acc -= w[k * n + c] * y[c];
            }
            let d = w[k * n + k];
            if d == ZERO {
                return None;
            }
            y[k] = acc / d;
        }
        Some(&self.q * y)
    }
}
