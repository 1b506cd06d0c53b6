//! Factor prediction: polynomial regression, the linear discrete-time
//! dynamical model, and discretized prediction through the potential method.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{DiagnosticsError, ExperienceTable, LogicVector, PotentialModel};
use crate::kb::NumericTable;
use crate::lsq::{self, LsqError};

pub const DEFAULT_SEGMENTS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictionError {
    #[error("no samples")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("degree ≥ 1 required")]
    Degree,
    #[error("insufficient history: {found} points, order {order} needs {needed}")]
    InsufficientHistory { found: usize, order: usize, needed: usize },
    #[error("exogenous series {series} has {found} points, expected {expected}")]
    Misaligned {
        series: usize,
        expected: usize,
        found: usize,
    },
    #[error("seed history of {found} points, model needs {needed}")]
    ShortSeed { found: usize, needed: usize },
    #[error("exogenous scenario covers {found} steps of {needed}; supply values or choose hold-last")]
    MissingScenario { found: usize, needed: usize },
    #[error("k ≥ 2 required")]
    Segments,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Lsq(#[from] LsqError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

type Result<T> = std::result::Result<T, PredictionError>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Mean squared residual.
    pub residual_variance: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub coefficients: usize,
    /// Pearson correlation of each input with y (0 when either is constant).
    pub correlations: Vec<f64>,
    /// Fewer samples than coefficients.
    pub underdetermined: bool,
    pub ridge_fallback: bool,
}

/// Residual variances at or below this count as an exact fit.
const EXACT_FIT: f64 = 1e-12;

fn fit_diagnostics(y: &[f64], fitted: &[f64], inputs: &[Vec<f64>], coefficients: usize, ridge: bool) -> FitDiagnostics {
    let n = y.len();
    let ssr: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let residual_variance = ssr / n as f64;
    let r_squared = if residual_variance <= EXACT_FIT {
        1.0
    } else if sst == 0.0 {
        0.0
    } else {
        (1.0 - ssr / sst).clamp(0.0, 1.0 - f64::EPSILON)
    };
    FitDiagnostics {
        residual_variance: if residual_variance <= EXACT_FIT {
            0.0
        } else {
            residual_variance
        },
        r_squared,
        samples: n,
        coefficients,
        correlations: inputs.iter().map(|x| correlation(x, y)).collect(),
        underdetermined: n < coefficients,
        ridge_fallback: ridge,
    }
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// y = [c] + Σ a_k · monomial_k(x) over monomials of degree 1..=d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub dim: usize,
    pub degree: u32,
    pub intercept: bool,
    /// Intercept first when enabled, then monomial coefficients.
    pub coefficients: Vec<f64>,
    /// Training range of each input.
    pub ranges: Vec<(f64, f64)>,
}

impl RegressionModel {
    fn features(&self, x: &[f64]) -> Vec<f64> {
        design_row(x, &lsq::monomials(self.dim, self.degree), self.intercept)
    }
}

fn design_row(x: &[f64], monos: &[Vec<u32>], intercept: bool) -> Vec<f64> {
    let mut r = Vec::with_capacity(monos.len() + 1);
    if intercept {
        r.push(1.0);
    }
    r.extend(lsq::expand(x, monos));
    r
}

pub fn fit_regression(
    samples: &[(Vec<f64>, f64)],
    degree: u32,
    intercept: bool,
) -> Result<(RegressionModel, FitDiagnostics)> {
    if samples.is_empty() {
        return Err(PredictionError::Empty);
    }
    if degree == 0 {
        return Err(PredictionError::Degree);
    }
    let dim = samples[0].0.len();
    for (x, y) in samples {
        if x.len() != dim {
            return Err(PredictionError::Dimension {
                expected: dim,
                found: x.len(),
            });
        }
        if let Some(v) = x.iter().chain(std::iter::once(y)).find(|v| !v.is_finite()) {
            return Err(PredictionError::NonFinite(*v));
        }
    }
    let monos = lsq::monomials(dim, degree);
    let rows: Vec<Vec<f64>> = samples.iter().map(|(x, _)| design_row(x, &monos, intercept)).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let sol = lsq::least_squares(&rows, &ys)?;
    let ranges = (0..dim)
        .map(|j| {
            samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                    (lo.min(x[j]), hi.max(x[j]))
                })
        })
        .collect();
    let model = RegressionModel {
        dim,
        degree,
        intercept,
        coefficients: sol.coefficients,
        ranges,
    };
    let fitted: Vec<f64> = rows.iter().map(|r| lsq::dot(r, &model.coefficients)).collect();
    let inputs: Vec<Vec<f64>> = (0..dim).map(|j| samples.iter().map(|s| s.0[j]).collect()).collect();
    let diag = fit_diagnostics(&ys, &fitted, &inputs, model.coefficients.len(), sol.ridge);
    Ok((model, diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// Some input lies outside its training range.
    pub extrapolated: bool,
}

pub fn predict_regression(model: &RegressionModel, x: &[f64]) -> Result<Prediction> {
    if x.len() != model.dim {
        return Err(PredictionError::Dimension {
            expected: model.dim,
            found: x.len(),
        });
    }
    let value = lsq::dot(&model.features(x), &model.coefficients);
    let extrapolated = x.iter().zip(&model.ranges).any(|(v, (lo, hi))| v < lo || v > hi);
    Ok(Prediction { value, extrapolated })
}

/// y(t+1) = Σ_{i=0..m} a_i y(t−i) + Σ_j b_j v_j(t) [+ c].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalModel {
    /// a_0 … a_m.
    pub ar: Vec<f64>,
    /// b_1 … b_n.
    pub exo: Vec<f64>,
    /// Constant term, present only when fitted with an intercept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
}

impl DynamicalModel {
    pub fn order(&self) -> usize {
        self.ar.len() - 1
    }

    pub fn inputs(&self) -> usize {
        self.exo.len()
    }

    /// One application of the recurrence. `lags[i]` is y(t−i).
    pub fn step(&self, lags: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, y) in self.ar.iter().zip(lags) {
            acc += a * y;
        }
        for (b, x) in self.exo.iter().zip(v) {
            acc += b * x;
        }
        if let Some(c) = self.intercept {
            acc += c;
        }
        acc
    }

    /// One-step-ahead values ŷ(t+1) for t = m … len−2, computed with `step`.
    pub fn fitted_values(&self, history: &[f64], exogenous: &[Vec<f64>]) -> Vec<f64> {
        let m = self.order();
        (m..history.len().saturating_sub(1))
            .map(|t| {
                let lags: Vec<f64> = (0..=m).map(|i| history[t - i]).collect();
                let v: Vec<f64> = exogenous.iter().map(|s| s[t]).collect();
                self.step(&lags, &v)
            })
            .collect()
    }
}

/// `exogenous[j]` is the series v_j aligned with `history`.
pub fn fit_dynamical(
    history: &[f64],
    exogenous: &[Vec<f64>],
    order: usize,
    intercept: bool,
) -> Result<(DynamicalModel, FitDiagnostics)> {
    let needed = order + 2;
    if history.len() < needed {
        return Err(PredictionError::InsufficientHistory {
            found: history.len(),
            order,
            needed,
        });
    }
    for (j, s) in exogenous.iter().enumerate() {
        if s.len() != history.len() {
            return Err(PredictionError::Misaligned {
                series: j + 1,
                expected: history.len(),
                found: s.len(),
            });
        }
    }
    if let Some(v) = history
        .iter()
        .chain(exogenous.iter().flatten())
        .find(|v| !v.is_finite())
    {
        return Err(PredictionError::NonFinite(*v));
    }
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for t in order..history.len() - 1 {
        let mut r: Vec<f64> = (0..=order).map(|i| history[t - i]).collect();
        r.extend(exogenous.iter().map(|s| s[t]));
        if intercept {
            r.push(1.0);
        }
        rows.push(r);
        ys.push(history[t + 1]);
    }
    let sol = lsq::least_squares(&rows, &ys)?;
    let mut c = sol.coefficients;
    let constant = if intercept { c.pop() } else { None };
    let exo = c.split_off(order + 1);
    let model = DynamicalModel {
        ar: c,
        exo,
        intercept: constant,
    };
    let fitted = model.fitted_values(history, exogenous);
    let inputs: Vec<Vec<f64>> = (0..rows[0].len() - usize::from(intercept))
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect();
    let k = rows[0].len();
    let diag = fit_diagnostics(&ys, &fitted, &inputs, k, sol.ridge);
    Ok((model, diag))
}

/// Future values of the exogenous inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExogenousScenario {
    /// `series[j][s]` is v_j at future step s.
    Explicit(Vec<Vec<f64>>),
    /// Repeat these values at every step.
    HoldLast(Vec<f64>),
}

/// Iterates the recurrence `horizon` times from the end of `seed`, feeding
/// predictions back as lagged values.
pub fn simulate_dynamical(
    model: &DynamicalModel,
    seed: &[f64],
    scenario: &ExogenousScenario,
    horizon: usize,
) -> Result<Vec<f64>> {
    let m = model.order();
    if seed.len() < m + 1 {
        return Err(PredictionError::ShortSeed {
            found: seed.len(),
            needed: m + 1,
        });
    }
    let n = model.inputs();
    match scenario {
        ExogenousScenario::Explicit(series) if n > 0 => {
            if series.len() != n {
                return Err(PredictionError::Dimension {
                    expected: n,
                    found: series.len(),
                });
            }
            if let Some(short) = series.iter().map(Vec::len).min().filter(|&l| l < horizon) {
                return Err(PredictionError::MissingScenario {
                    found: short,
                    needed: horizon,
                });
            }
        }
        ExogenousScenario::HoldLast(v) if v.len() != n => {
            return Err(PredictionError::Dimension {
                expected: n,
                found: v.len(),
            });
        }
        _ => {}
    }
    let mut ys: Vec<f64> = seed.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for s in 0..horizon {
        let t = ys.len() - 1;
        let lags: Vec<f64> = (0..=m).map(|i| ys[t - i]).collect();
        let v: Vec<f64> = match scenario {
            ExogenousScenario::Explicit(series) => series.iter().map(|x| x[s]).collect(),
            ExogenousScenario::HoldLast(v) => v.clone(),
        };
        let next = model.step(&lags, &v);
        ys.push(next);
        out.push(next);
    }
    Ok(out)
}

/// Equal-width segmentation of the y range with a potential-method
/// classifier over the inputs. Segment indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub lo: f64,
    pub hi: f64,
    pub segments: usize,
    /// Segment of each training sample, parallel to the classifier rows.
    pub assignments: Vec<usize>,
    pub classifier: PotentialModel,
    /// All y equal: the model predicts that constant.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Discretizer {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.segments as f64
    }

    pub fn lower_bound(&self, i: usize) -> f64 {
        if i == self.segments {
            return self.hi;
        }
        self.lo + i as f64 * self.width()
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        if self.degenerate {
            return self.lo;
        }
        let mid = (self.lower_bound(i) + self.lower_bound(i + 1)) / 2.0;
        mid.clamp(self.lo, self.hi)
    }

    /// Boundary values go to the higher segment; `hi` goes to the last one.
    pub fn segment_of(&self, y: f64) -> usize {
        if self.degenerate || y <= self.lo {
            return 0;
        }
        let k = self.segments;
        if y >= self.hi {
            return k - 1;
        }
        let mut i = (((y - self.lo) / (self.hi - self.lo)) * k as f64).floor() as usize;
        i = i.min(k - 1);
        while i > 0 && y < self.lower_bound(i) {
            i -= 1;
        }
        while i + 1 < k && y >= self.lower_bound(i + 1) {
            i += 1;
        }
        i
    }
}

pub fn fit_discretized(samples: &[(LogicVector, f64)], segments: usize, epsilon: f64) -> Result<Discretizer> {
    if segments < 2 {
        return Err(PredictionError::Segments);
    }
    if samples.is_empty() {
        return Err(PredictionError::Empty);
    }
    if let Some(v) = samples.iter().map(|s| s.1).find(|v| !v.is_finite()) {
        return Err(PredictionError::NonFinite(v));
    }
    let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let degenerate = lo == hi;
    let mut disc = Discretizer {
        lo,
        hi,
        segments: if degenerate { 1 } else { segments },
        assignments: Vec::new(),
        classifier: PotentialModel {
            dim: 0,
            classes: 0,
            rows: Vec::new(),
            epsilon,
            margin: crate::diagnostics::DEFAULT_MARGIN,
        },
        degenerate,
        warnings: Vec::new(),
    };
    if degenerate {
        disc.warnings.push(format!("all y equal {lo}; single-segment model"));
    }
    disc.assignments = samples.iter().map(|s| disc.segment_of(s.1)).collect();
    let table = ExperienceTable::from_rows(
        samples
            .iter()
            .zip(&disc.assignments)
            .map(|((x, _), &i)| (x.clone(), i + 1))
            .collect(),
    )?;
    disc.classifier = PotentialModel::with_classes(&table, disc.segments, epsilon, crate::diagnostics::DEFAULT_MARGIN)?;
    Ok(disc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub value: f64,
    pub segment: usize,
}

/// Segment with the largest summed potential (ties to the lowest index).
pub fn predict_discretized(disc: &Discretizer, x: &LogicVector) -> Result<SegmentPrediction> {
    let sums = disc.classifier.class_sums(x)?;
    let mut best = 0;
    for (i, s) in sums.iter().enumerate() {
        if *s > sums[best] {
            best = i;
        }
    }
    Ok(SegmentPrediction {
        value: disc.midpoint(best),
        segment: best,
    })
}

fn target_column(t: &NumericTable) -> Result<usize> {
    if t.rows.is_empty() {
        return Err(PredictionError::Empty);
    }
    Ok(t.column("y").unwrap_or(0))
}

/// `(inputs, y)` pairs from a table: the `y` column (else the first) is the
/// target, the rest are inputs.
pub fn regression_samples(t: &NumericTable) -> Result<Vec<(Vec<f64>, f64)>> {
    let y = target_column(t)?;
    Ok(t.rows
        .iter()
        .map(|r| {
            let x = r.iter().enumerate().filter(|(i, _)| *i != y).map(|(_, v)| *v).collect();
            (x, r[y])
        })
        .collect())
}

/// Splits a time-ordered table into the target series and one series per
/// exogenous column. A `t` column, if present, is ignored.
pub fn series_from_table(t: &NumericTable) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let y = target_column(t)?;
    let skip = t.column("t");
    let exo_cols: Vec<usize> = (0..t.columns.len()).filter(|&i| i != y && Some(i) != skip).collect();
    let ys = t.rows.iter().map(|r| r[y]).collect();
    let exo = exo_cols
        .iter()
        .map(|&c| t.rows.iter().map(|r| r[c]).collect())
        .collect();
    Ok((ys, exo))
}

/// `(logic vector, y)` pairs: `y` is the target, the other columns are
/// components in {-1, 0, 1}.
pub fn discretized_samples(t: &NumericTable) -> Result<Vec<(LogicVector, f64)>> {
    regression_samples(t)?
        .into_iter()
        .map(|(x, y)| Ok((LogicVector::from_f64(&x)?, y)))
        .collect()
}
