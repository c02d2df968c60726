use serde::Serialize;

/// Relative drift between two grid levels above which a report is flagged
/// as not refinement-stable.
pub const DRIFT_TOL: f64 = 0.10;

/// A soft check attached to a trial: passes when `value ≤ tol`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn new(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.to_string(), value, tol }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

/// One measured row: `value / reference = ratio`, plus named extras.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub points: usize,
    pub p: f64,
    pub q: Option<f64>,
    pub m_power: Option<usize>,
    pub ntilde: Option<usize>,
    pub trial: usize,
    pub label: String,
    pub value: f64,
    pub reference: f64,
    pub ratio: f64,
    pub extras: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl TrialRecord {
    /// Row with `ratio = value / reference` (NaN when the reference vanishes).
    pub fn new(experiment: &str, points: usize, p: f64, trial: usize, value: f64, reference: f64) -> Self {
        let ratio = if reference > 0.0 { value / reference } else { f64::NAN };
        Self {
            experiment: experiment.to_string(),
            points,
            p,
            q: None,
            m_power: None,
            ntilde: None,
            trial,
            label: String::new(),
            value,
            reference,
            ratio,
            extras: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn with_powers(mut self, m_power: Option<usize>, ntilde: Option<usize>) -> Self {
        self.m_power = m_power;
        self.ntilde = ntilde;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn extra(mut self, name: &str, value: f64) -> Self {
        self.extras.push((name.to_string(), value));
        self
    }

    pub fn check(mut self, name: &str, value: f64, tol: f64) -> Self {
        self.checks.push(Check::new(name, value, tol));
        self
    }

    pub fn extra_value(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Grouping key for reports: `(p, q)` with `q` defaulting to 2.
    pub fn group(&self) -> (f64, f64) {
        (self.p, self.q.unwrap_or(2.0))
    }
}

/// Spread of a family of ratios: `c = min`, `C = max`.
///
/// Non-finite ratios (vanishing reference, e.g. an input in the null space)
/// are excluded and counted in `excluded`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub samples: usize,
    pub excluded: usize,
    pub lower: f64,
    pub upper: f64,
    /// `C/c`; infinite when `c = 0`, NaN when there are no samples.
    pub spread: f64,
    pub mean: f64,
    /// Relative drift of `c` and `C` against the refined grid, the larger
    /// of the two; `None` until compared.
    pub drift: Option<f64>,
    /// Relative drift of `C` alone.
    pub upper_drift: Option<f64>,
    /// `drift ≤ DRIFT_TOL`.
    pub stable: Option<bool>,
}

impl RatioReport {
    pub fn from_ratios(ratios: &[f64]) -> Self {
        let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
        let excluded = ratios.len() - finite.len();
        if finite.is_empty() {
            return Self {
                samples: 0,
                excluded,
                lower: f64::NAN,
                upper: f64::NAN,
                spread: f64::NAN,
                mean: f64::NAN,
                drift: None,
                upper_drift: None,
                stable: None,
            };
        }
        let lower = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = if lower > 0.0 { upper / lower } else { f64::INFINITY };
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        Self { samples: finite.len(), excluded, lower, upper, spread, mean, drift: None, upper_drift: None, stable: None }
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> Self {
        let r: Vec<f64> = records.into_iter().map(|t| t.ratio).collect();
        Self::from_ratios(&r)
    }

    /// Records the drift `max(|C'/C − 1|, |c'/c − 1|)` against a report on
    /// the refined grid.
    pub fn compare(&mut self, refined: &RatioReport) {
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (b / a - 1.0).abs() };
        let finite = |d: f64| if d.is_nan() { f64::INFINITY } else { d };
        let upper = finite(rel(self.upper, refined.upper));
        let drift = upper.max(finite(rel(self.lower, refined.lower)));
        self.drift = Some(drift);
        self.upper_drift = Some(upper);
        self.stable = Some(drift <= DRIFT_TOL);
    }
}

/// Largest interval of `p` values, among those sampled, over which every
/// spread stays at or below `ceiling`; `points` are `(p, C/c)` pairs.
///
/// The result is an empirical estimate on the sampled grid of exponents and
/// coefficients, not an identification of the true interval.
pub fn empirical_p_interval(points: &[(f64, f64)], ceiling: f64) -> Option<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, f64)> = None;
    let mut start: Option<f64> = None;
    let mut last = f64::NAN;
    for &(p, s) in &pts {
        if s <= ceiling {
            start.get_or_insert(p);
            last = p;
        } else {
            start = None;
        }
        if let Some(a) = start {
            if best.is_none_or(|(lo, hi)| last - a > hi - lo) {
                best = Some((a, last));
            }
        }
    }
    best
}
