//! Restarted GMRES with right preconditioning, on flat complex vectors.

use crate::C64;

#[derive(Clone, Copy, Debug)]
pub(crate) struct GmresConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct GmresOutcome {
    pub iterations: usize,
    /// Final true residual `‖b - Ax‖`.
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` with right preconditioner `M⁻¹`, starting from `x = M⁻¹b`.
///
/// `accept(‖r‖, x, Ax)` decides convergence from the true residual; it lets
/// the caller add a rounding floor that depends on `x` and `Ax`.
#[allow(clippy::type_complexity)]
pub(crate) fn gmres(
    apply: &dyn Fn(&[C64]) -> Vec<C64>,
    precond: &dyn Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    cfg: GmresConfig,
    accept: &dyn Fn(f64, &[C64], &[C64]) -> bool,
) -> (Vec<C64>, GmresOutcome) {
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (vec![zero; n], GmresOutcome { iterations: 0, residual: 0.0, converged: true });
    }
    let mut x = precond(b);
    let mut iterations = 0;
    let restart = cfg.restart.max(1).min(n.max(1));
    loop {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= cfg.tol * bnorm || accept(beta, &x, &ax) {
            return (x, GmresOutcome { iterations, residual: beta, converged: true });
        }
        if iterations >= cfg.max_iter {
            return (x, GmresOutcome { iterations, residual: beta, converged: false });
        }
        // Arnoldi with modified Gram-Schmidt and Givens rotations.
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(restart + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h = vec![vec![zero; restart]; restart + 1];
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![zero; restart];
        let mut g = vec![zero; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            let z = precond(&v[k]);
            let mut w = apply(&z);
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(vj, &w);
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hj * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for j in 0..k {
                let t = C64::new(cs[j], 0.0) * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j].conj() * h[j][k] + C64::new(cs[j], 0.0) * h[j + 1][k];
                h[j][k] = t;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = zero;
            } else if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = (bb / bb.norm()).conj();
            } else {
                cs[k] = a.norm() / denom;
                sn[k] = (a / a.norm()) * bb.conj() / denom;
            }
            h[k][k] = C64::new(cs[k], 0.0) * a + sn[k] * bb;
            h[k + 1][k] = zero;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            let est = g[k + 1].norm();
            if hn == 0.0 || est <= 0.5 * cfg.tol * bnorm || iterations >= cfg.max_iter {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] == zero { zero } else { s / h[i][i] };
        }
        let mut update = vec![zero; n];
        for (yj, vj) in y.iter().zip(&v) {
            for (u, vi) in update.iter_mut().zip(vj) {
                *u += yj * vi;
            }
        }
        let dz = precond(&update);
        for (xi, d) in x.iter_mut().zip(&dz) {
            *xi += d;
        }
    }
}
