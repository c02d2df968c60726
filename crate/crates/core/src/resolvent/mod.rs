//! Resolvents `R_t = (I + itΠ_B)⁻¹` and the derived families
//! `P_t = ½(R_t + R_{-t})`, `Q_t = (1/2i)(R_{-t} - R_t)`, plus Hodge
//! projections and potential maps.
//!
//! Every solve goes through [`ResolventPlan::solve`], which handles a general
//! complex shift `(I + sΠ_B)x = u`; `R_t` is the case `s = it`, and contour
//! quadrature uses `s = -1/z`.

mod gmres;
mod hodge;

pub use hodge::{hodge_projections, potential_map, range_gamma_projection, HodgeSplit, Potential};

use crate::dirac::{ConstantSymbol, PerturbedDirac};
use crate::lattice::Field;
use crate::linalg::{solve_small, HessenbergSolver};
use crate::{Error, Result, C64};
use gmres::{gmres, GmresConfig};
use nalgebra::DVector;
use std::sync::{Mutex, OnceLock};

/// Largest total dimension `mⁿ·N` accepted by the dense solver.
pub const DENSE_LIMIT: usize = 4096;

/// How shifted systems are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Exact per-frequency solve; constant coefficients only.
    FrequencyDiagonal,
    /// Restarted GMRES preconditioned by the mean-coefficient operator.
    Iterative,
    /// Hessenberg reduction once, then an `O(D²)` solve per shift.
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Precondition GMRES with the constant-coefficient operator at the same shift.
    pub precondition: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 3000, restart: 60, precondition: true }
    }
}

/// Statistics of one solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `‖(I + sΠ_B)x - u‖/‖u‖`.
    pub residual: f64,
}

/// Accumulated statistics of a plan.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct PlanStats {
    pub solves: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

/// A perturbed operator together with its solver configuration.
pub struct ResolventPlan {
    op: PerturbedDirac,
    mode: SolverMode,
    options: SolverOptions,
    exact: Option<ConstantSymbol>,
    precond: ConstantSymbol,
    dense: OnceLock<HessenbergSolver>,
    window: OnceLock<(f64, f64)>,
    stats: Mutex<PlanStats>,
}

impl std::fmt::Debug for ResolventPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResolventPlan").field("op", &self.op).field("mode", &self.mode).finish()
    }
}

impl ResolventPlan {
    pub fn new(op: PerturbedDirac, mode: SolverMode, options: SolverOptions) -> Result<Self> {
        let exact = op.constant_symbol();
        match mode {
            SolverMode::FrequencyDiagonal if exact.is_none() => {
                return Err(Error::SolverMode("frequency-diagonal mode needs constant coefficients".into()))
            }
            SolverMode::Dense if op.total_dim() > DENSE_LIMIT => {
                return Err(Error::SolverMode(format!(
                    "dense mode limited to {DENSE_LIMIT} unknowns, operator has {}",
                    op.total_dim()
                )))
            }
            _ => {}
        }
        let (b1, b2) = op.mean_coefficients();
        let precond = ConstantSymbol::new(op.symbol().clone(), b1, b2);
        Ok(Self {
            op,
            mode,
            options,
            exact,
            precond,
            dense: OnceLock::new(),
            window: OnceLock::new(),
            stats: Mutex::new(PlanStats::default()),
        })
    }

    /// Frequency-diagonal for constant coefficients, iterative otherwise.
    pub fn automatic(op: PerturbedDirac) -> Result<Self> {
        let mode = if op.constant_symbol().is_some() { SolverMode::FrequencyDiagonal } else { SolverMode::Iterative };
        Self::new(op, mode, SolverOptions::default())
    }

    pub fn operator(&self) -> &PerturbedDirac {
        &self.op
    }

    pub fn mode(&self) -> SolverMode {
        self.mode
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn stats(&self) -> PlanStats {
        *self.stats.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Cached [`PerturbedDirac::spectral_window`].
    pub fn spectral_window(&self) -> Result<(f64, f64)> {
        if let Some(w) = self.window.get() {
            return Ok(*w);
        }
        let w = self.op.spectral_window()?;
        Ok(*self.window.get_or_init(|| w))
    }

    fn record(&self, s: SolveStats) {
        let mut st = self.stats.lock().unwrap_or_else(|e| e.into_inner());
        st.solves += 1;
        st.total_iterations += s.iterations;
        st.max_iterations = st.max_iterations.max(s.iterations);
        st.max_residual = st.max_residual.max(s.residual);
    }

    /// Solves `(I + sΠ_B)x = u`.
    pub fn solve(&self, s: C64, u: &Field) -> Result<Field> {
        Ok(self.solve_with_stats(s, u)?.0)
    }

    pub fn solve_with_stats(&self, s: C64, u: &Field) -> Result<(Field, SolveStats)> {
        if u.torus() != self.op.torus() || u.fiber() != self.op.fiber() {
            return Err(Error::DimensionMismatch("field does not match the operator".into()));
        }
        if s == C64::new(0.0, 0.0) {
            return Ok((u.clone(), SolveStats::default()));
        }
        let (x, stats) = match self.mode {
            SolverMode::FrequencyDiagonal => {
                let sym = self.exact.as_ref().expect("checked at construction");
                (frequency_solve(&self.op, sym, s, u)?, SolveStats::default())
            }
            SolverMode::Dense => self.dense_solve(s, u)?,
            SolverMode::Iterative => self.iterative_solve(s, u)?,
        };
        self.record(stats);
        Ok((x, stats))
    }

    fn dense_solve(&self, s: C64, u: &Field) -> Result<(Field, SolveStats)> {
        let solver = match self.dense.get() {
            Some(d) => d,
            None => {
                let m = self.op.assemble_dense()?;
                self.dense.get_or_init(|| HessenbergSolver::new(m))
            }
        };
        let b = DVector::from_column_slice(u.data());
        let x = solver
            .solve(s, &b)
            .ok_or(Error::SolveFailed { shift: s, residual: f64::INFINITY, iterations: 0 })?;
        let x = Field::from_vec(*u.torus(), u.fiber(), x.as_slice().to_vec())?;
        let residual = self.residual(s, &x, u)?;
        Ok((x, SolveStats { iterations: 0, residual }))
    }

    fn iterative_solve(&self, s: C64, u: &Field) -> Result<(Field, SolveStats)> {
        let torus = *u.torus();
        let fiber = u.fiber();
        let op = &self.op;
        let apply = |v: &[C64]| -> Vec<C64> {
            let f = Field::from_vec(torus, fiber, v.to_vec()).expect("shape preserved");
            let mut out = op.apply_pi_b(&f).expect("shape preserved");
            out.scale_mut(s);
            out.axpy(C64::new(1.0, 0.0), &f);
            out.into_data()
        };
        let pre = &self.precond;
        let use_pre = self.options.precondition;
        let precond = |v: &[C64]| -> Vec<C64> {
            if !use_pre {
                return v.to_vec();
            }
            let f = Field::from_vec(torus, fiber, v.to_vec()).expect("shape preserved");
            frequency_solve(op, pre, s, &f).map(Field::into_data).unwrap_or_else(|_| v.to_vec())
        };
        // Rounding floor: the FFT-based product sΠ_B x carries absolute error
        // ~ε|s|‖Π_B‖‖x‖, so a residual at that level is backward stable.
        let pi_norm = self.spectral_window()?.1;
        let floor = |beta: f64, x: &[C64], ax: &[C64]| -> bool {
            let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let spi: f64 = x.iter().zip(ax).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>().sqrt();
            let bn = u.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            beta <= 128.0 * f64::EPSILON * (bn + (1.0 + s.norm() * pi_norm) * norm(x) + spi)
        };
        let cfg = GmresConfig { tol: self.options.tol, max_iter: self.options.max_iter, restart: self.options.restart };
        let (x, out) = gmres(&apply, &precond, u.data(), cfg, &floor);
        let bn = u.norm2() / torus.cell_volume().sqrt();
        let rel = if bn > 0.0 { out.residual / bn } else { 0.0 };
        if !out.converged {
            return Err(Error::SolveFailed { shift: s, residual: rel, iterations: out.iterations });
        }
        Ok((Field::from_vec(torus, fiber, x)?, SolveStats { iterations: out.iterations, residual: rel }))
    }

    /// Relative residual `‖(I + sΠ_B)x - u‖/‖u‖`.
    pub fn residual(&self, s: C64, x: &Field, u: &Field) -> Result<f64> {
        let mut r = self.op.apply_pi_b(x)?;
        r.scale_mut(s);
        r.axpy(C64::new(1.0, 0.0), x);
        r.axpy(C64::new(-1.0, 0.0), u);
        let un = u.norm2();
        Ok(if un > 0.0 { r.norm2() / un } else { r.norm2() })
    }

    /// `R_t u = (I + itΠ_B)⁻¹u`. `t = 0` returns `u` with a warning.
    pub fn resolvent(&self, t: f64, u: &Field) -> Result<Field> {
        if t == 0.0 {
            log::warn!("resolvent at t = 0 is the identity");
        }
        self.solve(C64::new(0.0, t), u)
    }

    /// `(R_t u, R_{-t} u)`.
    pub fn resolvent_pair(&self, t: f64, u: &Field) -> Result<(Field, Field)> {
        Ok((self.resolvent(t, u)?, self.resolvent(-t, u)?))
    }

    /// `(P_t u, Q_t u)` from one pair of resolvent solves.
    pub fn pq(&self, t: f64, u: &Field) -> Result<(Field, Field)> {
        check_positive(t)?;
        let (rp, rm) = self.resolvent_pair(t, u)?;
        Ok(combine_pq(&rp, &rm))
    }

    /// `P_t u = ½(R_t + R_{-t})u = (I + t²Π_B²)⁻¹u`.
    pub fn p_t(&self, t: f64, u: &Field) -> Result<Field> {
        Ok(self.pq(t, u)?.0)
    }

    /// `Q_t u = (1/2i)(R_{-t} - R_t)u = tΠ_B(I + t²Π_B²)⁻¹u`.
    pub fn q_t(&self, t: f64, u: &Field) -> Result<Field> {
        Ok(self.pq(t, u)?.1)
    }

    /// `(Q_t)^M u`.
    pub fn q_t_power(&self, t: f64, power: usize, u: &Field) -> Result<Field> {
        let mut v = u.clone();
        for _ in 0..power {
            v = self.q_t(t, &v)?;
        }
        Ok(v)
    }

    /// `(P_t)^k u`.
    pub fn p_t_power(&self, t: f64, power: usize, u: &Field) -> Result<Field> {
        let mut v = u.clone();
        for _ in 0..power {
            v = self.p_t(t, &v)?;
        }
        Ok(v)
    }
}

fn check_positive(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    Ok(())
}

/// `P = ½(R_+ + R_-)`, `Q = (1/2i)(R_- - R_+)`.
pub(crate) fn combine_pq(rp: &Field, rm: &Field) -> (Field, Field) {
    let mut p = rp + rm;
    p.scale_mut(C64::new(0.5, 0.0));
    let mut q = rm - rp;
    q.scale_mut(C64::new(0.0, -0.5));
    (p, q)
}

/// Per-frequency solve of `(I + s·sym(ξ))x̂ = û`.
fn frequency_solve(op: &PerturbedDirac, sym: &ConstantSymbol, s: C64, u: &Field) -> Result<Field> {
    let n = sym.fiber();
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    let mut singular = false;
    let out = op.spectral().multiplier(u, n, |xi, x, out| {
        sym.write_at(xi, &mut a);
        a.iter_mut().for_each(|z| *z *= s);
        for i in 0..n {
            a[i * n + i] += C64::new(1.0, 0.0);
        }
        out.copy_from_slice(x);
        if !solve_small(n, &mut a, out) {
            singular = true;
        }
    });
    if singular {
        return Err(Error::SolveFailed { shift: s, residual: f64::INFINITY, iterations: 0 });
    }
    Ok(out)
}
