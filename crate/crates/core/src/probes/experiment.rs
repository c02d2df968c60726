//! Experiment specifications and the trial loop shared by every experiment.

use super::kato::{kato_trial, riesz_trial, scalar_input};
use super::offdiag::offdiag_order;
use super::operator::{sample_subspace, OperatorSpec, Subspace};
use super::quadratic::{
    calculus_trial, high_freq_trial, hodge_trial, low_freq_trial, sgn_trial, sobolev_trial, sq_equiv_trial,
};
use super::report::{RatioReport, TrialRecord};
use crate::funcalc::{dictionary, PsiFunction, QuadratureOptions, RegularizationOptions, SgnOptions};
use crate::lattice::{Field, Torus};
use crate::random::{band_limited, default_band, trial_rng};
use crate::resolvent::{PlanStats, ResolventPlan};
use crate::tent::{
    dyadic_average, factorization_check, principal_part, schur_norm_estimate, CalderonKernel, SchurVariant, TentField,
    TimeGrid,
};
use crate::{Error, Result, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SqEquiv,
    LowFreq,
    HighFreq,
    Kato,
    Riesz,
    Offdiag,
    Schur,
    Factorization,
    Sobolev,
    Hodge,
    Sgn,
    Calculus,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::SqEquiv,
        ExperimentKind::LowFreq,
        ExperimentKind::HighFreq,
        ExperimentKind::Kato,
        ExperimentKind::Riesz,
        ExperimentKind::Offdiag,
        ExperimentKind::Schur,
        ExperimentKind::Factorization,
        ExperimentKind::Sobolev,
        ExperimentKind::Hodge,
        ExperimentKind::Sgn,
        ExperimentKind::Calculus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SqEquiv => "sq_equiv",
            ExperimentKind::LowFreq => "low_freq",
            ExperimentKind::HighFreq => "high_freq",
            ExperimentKind::Kato => "kato",
            ExperimentKind::Riesz => "riesz",
            ExperimentKind::Offdiag => "offdiag",
            ExperimentKind::Schur => "schur",
            ExperimentKind::Factorization => "factorization",
            ExperimentKind::Sobolev => "sobolev",
            ExperimentKind::Hodge => "hodge",
            ExperimentKind::Sgn => "sgn",
            ExperimentKind::Calculus => "calculus",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{name}'")))
    }

    /// What one row measures.
    pub fn describe(&self) -> &'static str {
        match self {
            ExperimentKind::SqEquiv => {
                "sq_equiv: ||(t,x) -> Q_t^M u(x)||_{T^{p,2}} / ||u||_p for u in the chosen subspace \
                 (R(Gamma), R(Gamma*_B) or R(Pi_B)); both directions of the equivalence from c = min, C = max"
            }
            ExperimentKind::LowFreq => {
                "low_freq: ||Q_t^M P_t^N u||_{T^{p,2}} / ||u||_p on R(Pi_B), with the principal-part split \
                 Q_t P_t^N u = [Q_t P_t^N u - gamma_t A_t P_t^N u] + gamma_t A_t P_t^N u as extra columns"
            }
            ExperimentKind::HighFreq => {
                "high_freq: ||Q_t^M (I - P_t^N) u||_{T^{p,2}} / ||u||_p on R(Gamma); each trial asserts \
                 (I - P_t^N) u = t Gamma (sum_{k<N} P_t^k) Q_t u"
            }
            ExperimentKind::Kato => {
                "kato: ||L^{1/2} f||_p / ||grad f||_p for L = -a div A grad, with L^{1/2} = (Pi_B^2)^{1/2} \
                 on the scalar component of the elliptic block operator"
            }
            ExperimentKind::Riesz => {
                "riesz: ||grad L^{-1/2} g||_p / ||g||_p for g = L^{1/2} f, read off sgn(Pi_B)(g, 0); \
                 checks sgn(Pi_B)^2 (g, 0) = (g, 0)"
            }
            ExperimentKind::Offdiag => {
                "offdiag: fitted order M in ||1_E U_t 1_F u|| <~ (1 + d(E,F)/t)^{-M} ||u|| for \
                 U_t in {R_t, P_t, Q_t, A_t}"
            }
            ExperimentKind::Schur => {
                "schur: T^{2,2} norm estimates of the Schur operator with kernel \
                 (s/t)^{beta + i gamma} (I - P_t^N) P_s Q_s^{N-1} on s <= t, one row per gamma"
            }
            ExperimentKind::Factorization => {
                "factorization: ||F G||_{T^{p,q}} / (||F||_{T^{p,inf}} ||G||_{T^{inf,q}}) over random tent fields"
            }
            ExperimentKind::Sobolev => {
                "sobolev: sup_t ||t R_t u||_p / ||u||_{p*}, p* = np/(n+p), for u in R(Gamma)"
            }
            ExperimentKind::Hodge => "hodge: component-sum and idempotency errors of the Hodge projections",
            ExperimentKind::Sgn => "sgn: involution error ||sgn(Pi_B)^2 u - u|| / ||u|| on R(Pi_B)",
            ExperimentKind::Calculus => {
                "calculus: ||f(Pi_B) u||_p / ||u||_p over a dictionary normalised to sup |f| = 1 on the sector"
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Time window; unset ends default to `[h, ℓ/8]` of the base grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub ratio: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { t_min: None, t_max: None, ratio: TimeGrid::DEFAULT_RATIO }
    }
}

impl GridParams {
    pub fn resolve(&self, torus: &Torus) -> Result<TimeGrid> {
        let t_min = self.t_min.unwrap_or(torus.spacing());
        let t_max = self.t_max.unwrap_or(torus.period() / 8.0);
        TimeGrid::geometric(t_min, t_max, self.ratio)
    }
}

/// Families `U_t` for the off-diagonal experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffDiagFamily {
    #[default]
    Resolvent,
    P,
    Q,
    Dyadic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffDiagParams {
    pub family: OffDiagFamily,
    /// Times; empty means those of `{2h, 3h}` (base grid) with
    /// `t(1 + max ratio) ≤ ℓ/2`, or that bound itself when neither fits.
    pub times: Vec<f64>,
    /// Separations `d/t`.
    pub ratios: Vec<f64>,
}

impl Default for OffDiagParams {
    fn default() -> Self {
        Self { family: OffDiagFamily::Resolvent, times: Vec::new(), ratios: vec![1.0, 2.0, 4.0, 8.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchurParams {
    pub beta: f64,
    pub gammas: Vec<f64>,
    pub iterations: usize,
}

impl Default for SchurParams {
    fn default() -> Self {
        Self { beta: 0.5, gammas: vec![0.0, 1.0, -1.0, 10.0, -10.0], iterations: 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub p: Vec<f64>,
    /// Inner exponents (factorization only).
    pub q: Vec<f64>,
    /// `M`, the power of `Q_t`.
    pub m_power: usize,
    /// `Ñ`, the power of `P_t`.
    pub ntilde: usize,
    pub trials: usize,
    /// Band of random inputs; defaults to `m/4` of the base grid.
    pub band: Option<usize>,
    /// Input subspace for `sq_equiv`.
    pub subspace: Subspace,
    pub aperture: f64,
    pub time_grid: GridParams,
    /// Also run on the grid with twice the points and compare reports.
    pub refine: bool,
    /// Principal-part split columns for `low_freq`.
    pub principal: bool,
    /// Tolerance for attached checks; defaults per experiment.
    pub check_tol: Option<f64>,
    /// Dictionary ids for `calculus`; empty means the built-in dictionary.
    pub functions: Vec<String>,
    pub quadrature: QuadratureOptions,
    pub sgn: SgnOptions,
    pub regularization: RegularizationOptions,
    pub offdiag: OffDiagParams,
    pub schur: SchurParams,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            p: vec![2.0],
            q: vec![2.0],
            m_power: 2,
            ntilde: 2,
            trials: 8,
            band: None,
            subspace: Subspace::RangePi,
            aperture: 1.0,
            time_grid: GridParams::default(),
            refine: false,
            principal: true,
            check_tol: None,
            functions: Vec::new(),
            quadrature: QuadratureOptions::default(),
            sgn: SgnOptions::default(),
            regularization: RegularizationOptions::default(),
            offdiag: OffDiagParams::default(),
            schur: SchurParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub operator: OperatorSpec,
    pub params: ExperimentParams,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, operator: OperatorSpec, params: ExperimentParams, seed: u64) -> Self {
        Self { name: kind.name().to_string(), kind, operator, params, seed }
    }

    pub fn trial_count(&self) -> usize {
        match self.kind {
            ExperimentKind::Schur => self.params.schur.gammas.len(),
            _ => self.params.trials,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.operator.validate()?;
        let p = &self.params;
        if p.p.is_empty() || p.p.iter().any(|&x| !(x >= 1.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!("{}: p values must be finite and at least 1", self.name)));
        }
        if self.kind == ExperimentKind::Factorization
            && (p.q.is_empty() || p.p.iter().chain(&p.q).any(|&x| !(x > 1.0 && x.is_finite())))
        {
            return Err(Error::InvalidArgument(format!("{}: p and q must lie in (1, inf)", self.name)));
        }
        if p.m_power == 0 || p.ntilde == 0 {
            return Err(Error::InvalidArgument(format!("{}: M and N must be positive", self.name)));
        }
        if self.trial_count() == 0 {
            return Err(Error::InvalidArgument(format!("{}: no trials", self.name)));
        }
        if matches!(self.kind, ExperimentKind::Kato | ExperimentKind::Riesz)
            && !self.operator.builtin.is_some_and(|b| b.is_elliptic())
        {
            return Err(Error::InvalidArgument(format!("{}: needs an elliptic-n operator", self.name)));
        }
        if !(p.aperture >= 1.0) {
            return Err(Error::InvalidArgument(format!("{}: aperture below 1", self.name)));
        }
        Ok(())
    }
}

/// Records and solver statistics of one trial.
#[derive(Clone, Debug, Default)]
pub struct TrialOutput {
    pub records: Vec<TrialRecord>,
    pub stats: PlanStats,
}

/// Maps trials in order; implementations may run them concurrently but must
/// return results indexed by trial.
pub trait TrialRunner: Sync {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Result<TrialOutput> + Sync)) -> Vec<Result<TrialOutput>>;
}

/// Runs trials one after the other.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl TrialRunner for Sequential {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Result<TrialOutput> + Sync)) -> Vec<Result<TrialOutput>> {
        (0..n).map(f).collect()
    }
}

/// Report for one `(p, q)` group at one grid size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupReport {
    pub points: usize,
    pub p: f64,
    pub q: f64,
    pub report: RatioReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailedCheck {
    pub points: usize,
    pub trial: usize,
    pub p: f64,
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub points: usize,
    pub refined_points: Option<usize>,
    pub grid: TimeGrid,
    pub band: usize,
    pub rows: Vec<TrialRecord>,
    /// Base-grid reports, compared against the refined grid when refining.
    pub reports: Vec<GroupReport>,
    pub refined_reports: Vec<GroupReport>,
    pub failed_checks: Vec<FailedCheck>,
    pub stats: PlanStats,
}

/// Quantities fixed on the base grid so that refinement compares the same
/// physical problem.
struct Setup {
    grid: TimeGrid,
    band: usize,
    offdiag_times: Vec<f64>,
}

fn merge(a: &mut PlanStats, b: &PlanStats) {
    a.solves += b.solves;
    a.total_iterations += b.total_iterations;
    a.max_iterations = a.max_iterations.max(b.max_iterations);
    a.max_residual = a.max_residual.max(b.max_residual);
}

fn kappa_of(plan: &ResolventPlan) -> f64 {
    plan.operator().accretivity().map_or(1.0, |a| a.kappa1.min(a.kappa2))
}

fn sup_norm_of(plan: &ResolventPlan) -> f64 {
    let op = plan.operator();
    op.b1().sup_norm().max(op.b2().sup_norm())
}

/// Random tent fields `F, G` with slices `(t/t_max)^a·f_i`, `a ∈ [0, 1)`.
pub fn random_tent_pair(torus: &Torus, grid: &TimeGrid, band: usize, seed: u64, trial: usize) -> Result<(TentField, TentField)> {
    let mut rng = trial_rng(seed, trial as u64);
    let a_f: f64 = rng.random();
    let a_g: f64 = rng.random();
    let t_max = grid.t_max();
    let mut draw = |a: f64| {
        TentField::from_fn(grid.clone(), |_, t| {
            Ok(band_limited(torus, 1, band, &mut rng)?.scaled(C64::new((t / t_max).powf(a), 0.0)))
        })
    };
    let f = draw(a_f)?;
    let g = draw(a_g)?;
    Ok((f, g))
}

fn run_trial(spec: &ExperimentSpec, op_spec: &OperatorSpec, setup: &Setup, trial: usize) -> Result<TrialOutput> {
    let params = &spec.params;
    let seed = spec.seed;
    let ps = &params.p;
    let grid = &setup.grid;
    let band = setup.band;
    let name = spec.kind.name();
    let torus = op_spec.torus()?;
    let m = torus.points_per_axis();

    if spec.kind == ExperimentKind::Factorization {
        let (f, g) = random_tent_pair(&torus, grid, band, seed, trial)?;
        let mut records = Vec::new();
        for &p in ps {
            for &q in &params.q {
                let fc = factorization_check(&f, &g, p, q)?;
                let mut r = TrialRecord::new(name, m, p, trial, fc.lhs, fc.rhs)
                    .with_q(q)
                    .extra("f_norm", fc.f_norm)
                    .extra("g_norm", fc.g_norm);
                r.ratio = fc.ratio;
                records.push(r);
            }
        }
        return Ok(TrialOutput { records, stats: PlanStats::default() });
    }

    let op_trial = if spec.kind == ExperimentKind::Schur { 0 } else { trial as u64 };
    let plan = op_spec.build_plan(seed, op_trial)?;
    let op = plan.operator();
    let mut rng = trial_rng(seed, trial as u64);
    let records = match spec.kind {
        ExperimentKind::SqEquiv => {
            let u = sample_subspace(op, params.subspace, band, &mut rng)?;
            sq_equiv_trial(&plan, grid, &u, params.m_power, ps, params.aperture, trial)?
        }
        ExperimentKind::LowFreq => {
            let u = sample_subspace(op, Subspace::RangePi, band, &mut rng)?;
            let gamma = if params.principal { Some(principal_part(&plan, grid)?) } else { None };
            low_freq_trial(&plan, grid, &u, params.m_power, params.ntilde, ps, params.aperture, gamma.as_ref(), trial)?
        }
        ExperimentKind::HighFreq => {
            let u = sample_subspace(op, Subspace::RangeGamma, band, &mut rng)?;
            high_freq_trial(&plan, grid, &u, params.m_power, params.ntilde, ps, params.aperture, trial)?
        }
        ExperimentKind::Kato => {
            let f = scalar_input(band_limited(&torus, 1, band, &mut rng)?);
            kato_trial(&plan, &f, ps, &params.sgn, trial)?
        }
        ExperimentKind::Riesz => {
            let f = scalar_input(band_limited(&torus, 1, band, &mut rng)?);
            riesz_trial(&plan, &f, ps, &params.sgn, params.check_tol.unwrap_or(1e-4), trial)?
        }
        ExperimentKind::Sobolev => {
            let u = sample_subspace(op, Subspace::RangeGamma, band, &mut rng)?;
            sobolev_trial(&plan, grid, &u, ps, trial)?
        }
        ExperimentKind::Hodge => {
            let u = sample_subspace(op, Subspace::Full, band, &mut rng)?;
            let tol = params.check_tol.unwrap_or(if op.is_unperturbed() { 1e-6 } else { 1e-4 });
            hodge_trial(&plan, &u, tol, trial)?
        }
        ExperimentKind::Sgn => {
            let u = sample_subspace(op, Subspace::RangePi, band, &mut rng)?;
            sgn_trial(&plan, &u, &params.sgn, params.check_tol.unwrap_or(1e-4), trial)?
        }
        ExperimentKind::Calculus => {
            let fns = if params.functions.is_empty() {
                dictionary()
            } else {
                params.functions.iter().map(|s| PsiFunction::parse(s)).collect::<Result<Vec<_>>>()?
            };
            calculus_trial(&plan, &fns, ps, &params.regularization, seed, trial)?
        }
        ExperimentKind::Offdiag => {
            let od = &params.offdiag;
            let family = |t: f64, u: &Field| -> Result<Field> {
                match od.family {
                    OffDiagFamily::Resolvent => plan.resolvent(t, u),
                    OffDiagFamily::P => plan.p_t(t, u),
                    OffDiagFamily::Q => plan.q_t(t, u),
                    OffDiagFamily::Dyadic => dyadic_average(u, t),
                }
            };
            let label = format!("{:?}", od.family).to_lowercase();
            let stream_seed = seed ^ (trial as u64).rotate_left(32);
            let base = |value: f64| TrialRecord::new(name, m, 2.0, trial, value, 1.0).with_label(label.clone());
            match offdiag_order(&family, &torus, op.fiber(), &setup.offdiag_times, &od.ratios, stream_seed) {
                Ok(fit) => vec![base(fit.order)
                    .extra("residual", fit.residual)
                    .extra("censored", fit.censored as f64)
                    .extra("noise_floor_bound", f64::NAN)],
                Err(Error::BelowNoiseFloor { lower_bound }) => vec![base(lower_bound)
                    .extra("residual", 0.0)
                    .extra("censored", setup.offdiag_times.len() as f64)
                    .extra("noise_floor_bound", lower_bound)],
                Err(e) => return Err(e),
            }
        }
        ExperimentKind::Schur => {
            let gamma = params.schur.gammas[trial];
            let kernel = CalderonKernel::new(&plan, params.ntilde)?;
            let variant = SchurVariant::Plus { beta: params.schur.beta, gamma };
            let est = schur_norm_estimate(&kernel, variant, grid, &torus, op.fiber(), params.schur.iterations, seed)?;
            vec![TrialRecord::new(name, m, 2.0, trial, est.norm, 1.0)
                .with_label(format!("gamma={gamma}"))
                .with_powers(None, Some(params.ntilde))
                .extra("beta", params.schur.beta)
                .extra("gamma", gamma)
                .extra("change", est.change)
                .extra("power_iteration", if est.power_iteration { 1.0 } else { 0.0 })]
        }
        ExperimentKind::Factorization => unreachable!("handled above"),
    };
    let kappa = kappa_of(&plan);
    let sup = sup_norm_of(&plan);
    let records = records.into_iter().map(|r| r.extra("kappa", kappa).extra("b_sup", sup)).collect();
    Ok(TrialOutput { records, stats: plan.stats() })
}

fn run_level(
    spec: &ExperimentSpec,
    op_spec: &OperatorSpec,
    setup: &Setup,
    runner: &dyn TrialRunner,
) -> Result<(Vec<TrialRecord>, PlanStats)> {
    let outs = runner.map(spec.trial_count(), &|i| run_trial(spec, op_spec, setup, i));
    let mut rows = Vec::new();
    let mut stats = PlanStats::default();
    for out in outs {
        let out = out?;
        rows.extend(out.records);
        merge(&mut stats, &out.stats);
    }
    Ok((rows, stats))
}

fn group_reports(rows: &[TrialRecord], points: usize) -> Vec<GroupReport> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !keys.contains(&r.group()) {
            keys.push(r.group());
        }
    }
    keys.into_iter()
        .map(|(p, q)| GroupReport {
            points,
            p,
            q,
            report: RatioReport::from_records(rows.iter().filter(|r| r.group() == (p, q))),
        })
        .collect()
}

/// Runs every trial of `spec` (and the refined grid when requested).
pub fn run_experiment(spec: &ExperimentSpec, runner: &dyn TrialRunner) -> Result<ExperimentOutput> {
    spec.validate()?;
    let torus = spec.operator.torus()?;
    let grid = spec.params.time_grid.resolve(&torus)?;
    grid.check_torus(&torus)?;
    let h = torus.spacing();
    let setup = Setup {
        grid: grid.clone(),
        band: spec.params.band.unwrap_or_else(|| default_band(&torus)),
        offdiag_times: if spec.params.offdiag.times.is_empty() {
            let r_max = spec.params.offdiag.ratios.iter().copied().fold(0.0, f64::max);
            let cap = 0.5 * torus.period() / (1.0 + r_max);
            let mut times: Vec<f64> = [2.0 * h, 3.0 * h].into_iter().filter(|&t| t <= cap).collect();
            if times.is_empty() {
                times.push(cap);
            }
            times
        } else {
            spec.params.offdiag.times.clone()
        },
    };
    let points = torus.points_per_axis();
    let (mut rows, mut stats) = run_level(spec, &spec.operator, &setup, runner)?;
    let mut reports = group_reports(&rows, points);
    let mut refined_reports = Vec::new();
    let mut refined_points = None;
    if spec.params.refine {
        let fine = spec.operator.with_points(2 * points);
        let (fine_rows, fine_stats) = run_level(spec, &fine, &setup, runner)?;
        refined_reports = group_reports(&fine_rows, 2 * points);
        for (coarse, refined) in reports.iter_mut().zip(&refined_reports) {
            coarse.report.compare(&refined.report);
        }
        rows.extend(fine_rows);
        merge(&mut stats, &fine_stats);
        refined_points = Some(2 * points);
    }
    let failed_checks = rows
        .iter()
        .flat_map(|r| {
            r.checks.iter().filter(|c| !c.passed()).map(move |c| FailedCheck {
                points: r.points,
                trial: r.trial,
                p: r.p,
                name: c.name.clone(),
                value: c.value,
                tol: c.tol,
            })
        })
        .collect();
    Ok(ExperimentOutput {
        name: spec.name.clone(),
        kind: spec.kind,
        seed: spec.seed,
        points,
        refined_points,
        grid,
        band: setup.band,
        rows,
        reports,
        refined_reports,
        failed_checks,
        stats,
    })
}
