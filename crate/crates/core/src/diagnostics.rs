//! Pattern-recognition classifiers over ternary characteristic vectors:
//! separating plane and polynomial surface (least squares), the frequencies
//! method, and the potential-function method.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::NumericTable;
use crate::lsq::{self, LsqError};

/// Default half-width of the undecided band around zero.
pub const DEFAULT_MARGIN: f64 = 1e-6;
/// Default floor for the squared distance in the potential function.
pub const DEFAULT_POTENTIAL_EPS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("empty characteristic list")]
    EmptyVector,
    #[error("component {index} is {value}, expected -1, 0 or 1")]
    BadComponent { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("two classes required")]
    TwoClassesRequired,
    #[error("class {0} has no rows")]
    EmptyClass(usize),
    #[error("class labels start at 1")]
    ZeroLabel,
    #[error("class label {0} is not a positive integer")]
    Label(f64),
    #[error("degree ≥ 1 required")]
    Degree,
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("margin must be positive, got {0}")]
    Margin(f64),
    #[error("empty training set")]
    EmptyModel,
    #[error("least squares: {0}")]
    Lsq(#[from] LsqError),
}

type Result<T> = std::result::Result<T, DiagnosticsError>;

/// Answer about one characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Present,
    Absent,
    Unknown,
}

/// Components in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct LogicVector(Vec<i8>);

impl LogicVector {
    pub fn new(components: Vec<i8>) -> Result<Self> {
        if components.is_empty() {
            return Err(DiagnosticsError::EmptyVector);
        }
        if let Some((index, &v)) = components.iter().enumerate().find(|(_, v)| !(-1..=1).contains(*v)) {
            return Err(DiagnosticsError::BadComponent { index, value: v as f64 });
        }
        Ok(LogicVector(components))
    }

    /// Accepts reals that are exactly -1, 0 or 1.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for (index, &v) in values.iter().enumerate() {
            let c = if v == 1.0 {
                1
            } else if v == -1.0 {
                -1
            } else if v == 0.0 {
                0
            } else {
                return Err(DiagnosticsError::BadComponent { index, value: v });
            };
            out.push(c);
        }
        LogicVector::new(out)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl TryFrom<Vec<i8>> for LogicVector {
    type Error = DiagnosticsError;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        LogicVector::new(v)
    }
}

impl From<LogicVector> for Vec<i8> {
    fn from(v: LogicVector) -> Self {
        v.0
    }
}

impl fmt::Display for LogicVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub fn encode_logic_vector(answers: &[Tri]) -> Result<LogicVector> {
    LogicVector::new(
        answers
            .iter()
            .map(|a| match a {
                Tri::Present => 1,
                Tri::Absent => -1,
                Tri::Unknown => 0,
            })
            .collect(),
    )
}

/// Labeled training vectors; labels are 1-based class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceTable {
    dim: usize,
    rows: Vec<(LogicVector, usize)>,
}

impl ExperienceTable {
    pub fn new(dim: usize) -> Self {
        ExperienceTable { dim, rows: Vec::new() }
    }

    pub fn from_rows(rows: Vec<(LogicVector, usize)>) -> Result<Self> {
        let dim = rows.first().map(|r| r.0.dim()).ok_or(DiagnosticsError::EmptyModel)?;
        let mut t = ExperienceTable::new(dim);
        for (x, c) in rows {
            t.push(x, c)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, x: LogicVector, class: usize) -> Result<()> {
        check_dim(self.dim, &x)?;
        if class == 0 {
            return Err(DiagnosticsError::ZeroLabel);
        }
        self.rows.push((x, class));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reads a numeric table whose `class` column (the first column when
    /// none is named so) holds labels and whose other columns are components.
    pub fn from_table(t: &NumericTable) -> Result<Self> {
        let label = t.column("class").unwrap_or(0);
        if t.columns.len() < 2 {
            return Err(DiagnosticsError::EmptyVector);
        }
        let mut out = ExperienceTable::new(t.columns.len() - 1);
        for row in &t.rows {
            let c = row[label];
            if c < 1.0 || c.fract() != 0.0 {
                return Err(DiagnosticsError::Label(c));
            }
            let x: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != label)
                .map(|(_, v)| *v)
                .collect();
            out.push(LogicVector::from_f64(&x)?, c as usize)?;
        }
        Ok(out)
    }

    pub fn rows(&self) -> &[(LogicVector, usize)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Highest label present.
    pub fn class_count(&self) -> usize {
        self.rows.iter().map(|r| r.1).max().unwrap_or(0)
    }

    fn class_sizes(&self) -> Vec<usize> {
        let mut n = vec![0; self.class_count()];
        for (_, c) in &self.rows {
            n[c - 1] += 1;
        }
        n
    }

    /// Rows of a two-class table with targets +1 (class 1) / −1 (class 2).
    fn two_class_targets(&self) -> Result<Vec<f64>> {
        let sizes = self.class_sizes();
        if sizes.len() != 2 || sizes.contains(&0) {
            return Err(DiagnosticsError::TwoClassesRequired);
        }
        Ok(self
            .rows
            .iter()
            .map(|(_, c)| if *c == 1 { 1.0 } else { -1.0 })
            .collect())
    }
}

fn check_dim(expected: usize, x: &LogicVector) -> Result<()> {
    if x.dim() != expected {
        return Err(DiagnosticsError::Dimension {
            expected,
            found: x.dim(),
        });
    }
    Ok(())
}

/// Details of a least-squares fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub residual_ss: f64,
    pub ridge_fallback: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "class")]
pub enum Outcome {
    /// 1-based class index.
    Class(usize),
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDecision {
    pub outcome: Outcome,
    /// Φ for two-class decisions, Φ_j per class otherwise.
    pub scores: Vec<f64>,
}

fn threshold(phi: f64, margin: f64) -> ClassDecision {
    let outcome = if phi > margin {
        Outcome::Class(1)
    } else if phi < -margin {
        Outcome::Class(2)
    } else {
        Outcome::Undecided
    };
    ClassDecision {
        outcome,
        scores: vec![phi],
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// A scalar decision function Φ(x) with an undecided band.
pub trait DecisionFunction {
    fn dim(&self) -> usize;
    fn margin(&self) -> f64;
    fn score(&self, x: &LogicVector) -> Result<f64>;
}

/// Φ = a_0 + Σ a_i x_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    /// a_0, a_1 … a_n.
    pub coefficients: Vec<f64>,
    pub margin: f64,
    #[serde(default)]
    pub meta: FitMeta,
}

impl PlaneModel {
    pub fn new(coefficients: Vec<f64>, margin: f64) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(DiagnosticsError::EmptyVector);
        }
        if !(margin > 0.0) {
            return Err(DiagnosticsError::Margin(margin));
        }
        Ok(PlaneModel {
            coefficients,
            margin,
            meta: FitMeta::default(),
        })
    }
}

impl DecisionFunction for PlaneModel {
    fn dim(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn margin(&self) -> f64 {
        self.margin
    }

    fn score(&self, x: &LogicVector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(self.coefficients[0] + lsq::dot(&self.coefficients[1..], &x.to_f64()))
    }
}

/// Φ = a_0 + Σ over monomials of total degree 1..=d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub dim: usize,
    pub degree: u32,
    /// Constant term first, then monomials in graded lexicographic order.
    pub coefficients: Vec<f64>,
    pub margin: f64,
    #[serde(default)]
    pub meta: FitMeta,
}

impl SurfaceModel {
    pub fn monomials(&self) -> Vec<Vec<u32>> {
        lsq::monomials(self.dim, self.degree)
    }
}

impl DecisionFunction for SurfaceModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn margin(&self) -> f64 {
        self.margin
    }

    fn score(&self, x: &LogicVector) -> Result<f64> {
        check_dim(self.dim, x)?;
        let feats = lsq::expand(&x.to_f64(), &self.monomials());
        Ok(self.coefficients[0] + lsq::dot(&self.coefficients[1..], &feats))
    }
}

fn fit_expanded(table: &ExperienceTable, degree: u32) -> Result<(Vec<f64>, FitMeta)> {
    let targets = table.two_class_targets()?;
    let monos = lsq::monomials(table.dim(), degree);
    let rows: Vec<Vec<f64>> = table
        .rows()
        .iter()
        .map(|(x, _)| {
            let mut r = vec![1.0];
            r.extend(lsq::expand(&x.to_f64(), &monos));
            r
        })
        .collect();
    let mut meta = FitMeta::default();
    if rows[0].len() > rows.len() {
        meta.warnings.push(format!(
            "{} coefficients fitted from {} rows",
            rows[0].len(),
            rows.len()
        ));
    }
    let sol = lsq::least_squares(&rows, &targets)?;
    meta.residual_ss = sol.residual_ss;
    meta.ridge_fallback = sol.ridge;
    Ok((sol.coefficients, meta))
}

pub fn fit_separating_plane(table: &ExperienceTable, margin: f64) -> Result<PlaneModel> {
    if !(margin > 0.0) {
        return Err(DiagnosticsError::Margin(margin));
    }
    let (coefficients, meta) = fit_expanded(table, 1)?;
    Ok(PlaneModel {
        coefficients,
        margin,
        meta,
    })
}

pub fn fit_separating_surface(table: &ExperienceTable, degree: u32, margin: f64) -> Result<SurfaceModel> {
    if degree == 0 {
        return Err(DiagnosticsError::Degree);
    }
    if !(margin > 0.0) {
        return Err(DiagnosticsError::Margin(margin));
    }
    let (coefficients, meta) = fit_expanded(table, degree)?;
    Ok(SurfaceModel {
        dim: table.dim(),
        degree,
        coefficients,
        margin,
        meta,
    })
}

/// Φ > margin → class 1, Φ < −margin → class 2, otherwise undecided.
pub fn classify_geometric(model: &impl DecisionFunction, x: &LogicVector) -> Result<ClassDecision> {
    Ok(threshold(model.score(x)?, model.margin()))
}

/// Sum of squared errors of `coefficients` (plane layout) against ±1 targets.
pub fn plane_residual(table: &ExperienceTable, coefficients: &[f64]) -> Result<f64> {
    let targets = table.two_class_targets()?;
    Ok(table
        .rows()
        .iter()
        .zip(targets)
        .map(|((x, _), t)| {
            let phi = coefficients[0] + lsq::dot(&coefficients[1..], &x.to_f64());
            (phi - t) * (phi - t)
        })
        .sum())
}

/// Per-class log-odds scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequenciesModel {
    pub dim: usize,
    /// p_i^j, indexed `[class - 1][i]`.
    pub frequencies: Vec<Vec<f64>>,
    /// a_i^j = ln(p / (1 − p)).
    pub coefficients: Vec<Vec<f64>>,
}

impl FrequenciesModel {
    pub fn from_coefficients(coefficients: Vec<Vec<f64>>) -> Result<Self> {
        let dim = coefficients.first().map(Vec::len).ok_or(DiagnosticsError::EmptyModel)?;
        for c in &coefficients {
            if c.len() != dim {
                return Err(DiagnosticsError::Dimension {
                    expected: dim,
                    found: c.len(),
                });
            }
        }
        let frequencies = coefficients
            .iter()
            .map(|c| c.iter().map(|a| 1.0 / (1.0 + (-a).exp())).collect())
            .collect();
        Ok(FrequenciesModel {
            dim,
            frequencies,
            coefficients,
        })
    }

    pub fn class_count(&self) -> usize {
        self.coefficients.len()
    }
}

/// Laplace-smoothed frequency of x_i = +1 within class j.
pub fn smoothed_frequency(appearances: usize, rows: usize) -> f64 {
    (appearances as f64 + 1.0) / (rows as f64 + 2.0)
}

pub fn log_odds(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn fit_frequencies(table: &ExperienceTable) -> Result<FrequenciesModel> {
    if table.is_empty() {
        return Err(DiagnosticsError::EmptyModel);
    }
    let m = table.class_count().max(2);
    let n = table.dim();
    let mut counts = vec![vec![0usize; n]; m];
    let mut sizes = vec![0usize; m];
    for (x, c) in table.rows() {
        sizes[c - 1] += 1;
        for (i, &v) in x.components().iter().enumerate() {
            if v == 1 {
                counts[c - 1][i] += 1;
            }
        }
    }
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(DiagnosticsError::EmptyClass(j + 1));
    }
    let frequencies: Vec<Vec<f64>> = counts
        .iter()
        .zip(&sizes)
        .map(|(k, &size)| k.iter().map(|&k| smoothed_frequency(k, size)).collect())
        .collect();
    let coefficients = frequencies
        .iter()
        .map(|p| p.iter().map(|&p| log_odds(p)).collect())
        .collect();
    Ok(FrequenciesModel {
        dim: n,
        frequencies,
        coefficients,
    })
}

/// argmax_j Σ_i a_i^j x_i, ties to the lowest class.
pub fn classify_frequencies(model: &FrequenciesModel, x: &LogicVector) -> Result<ClassDecision> {
    check_dim(model.dim, x)?;
    let xf = x.to_f64();
    let scores: Vec<f64> = model.coefficients.iter().map(|a| lsq::dot(a, &xf)).collect();
    Ok(ClassDecision {
        outcome: Outcome::Class(argmax(&scores) + 1),
        scores,
    })
}

/// φ(x, a) = 1/ρ² with ρ² floored at ε.
pub fn potential_value(x: &LogicVector, a: &LogicVector, eps: f64) -> Result<f64> {
    check_dim(a.dim(), x)?;
    if !(eps > 0.0) {
        return Err(DiagnosticsError::Epsilon(eps));
    }
    Ok(potential_raw(x.components(), a.components(), eps))
}

fn potential_raw(x: &[i8], a: &[i8], eps: f64) -> f64 {
    let rho2: i32 = x
        .iter()
        .zip(a)
        .map(|(&p, &q)| {
            let d = (p - q) as i32;
            d * d
        })
        .sum();
    let rho2 = rho2 as f64;
    if rho2 >= eps {
        1.0 / rho2
    } else {
        1.0 / eps
    }
}

/// The training set kept verbatim; classes are 1-based labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub dim: usize,
    pub classes: usize,
    pub rows: Vec<(LogicVector, usize)>,
    pub epsilon: f64,
    pub margin: f64,
}

impl PotentialModel {
    pub fn fit(table: &ExperienceTable, epsilon: f64, margin: f64) -> Result<Self> {
        Self::with_classes(table, table.class_count().max(2), epsilon, margin)
    }

    /// Like `fit` but with an explicit class count; classes may be empty.
    pub fn with_classes(table: &ExperienceTable, classes: usize, epsilon: f64, margin: f64) -> Result<Self> {
        if table.is_empty() {
            return Err(DiagnosticsError::EmptyModel);
        }
        if !(epsilon > 0.0) {
            return Err(DiagnosticsError::Epsilon(epsilon));
        }
        if !(margin > 0.0) {
            return Err(DiagnosticsError::Margin(margin));
        }
        Ok(PotentialModel {
            dim: table.dim(),
            classes: classes.max(table.class_count()),
            rows: table.rows().to_vec(),
            epsilon,
            margin,
        })
    }

    /// S_j = Σ over rows of class j of φ(x, x^i).
    pub fn class_sums(&self, x: &LogicVector) -> Result<Vec<f64>> {
        if self.rows.is_empty() {
            return Err(DiagnosticsError::EmptyModel);
        }
        check_dim(self.dim, x)?;
        let mut s = vec![0.0; self.classes];
        for (a, c) in &self.rows {
            s[c - 1] += potential_raw(x.components(), a.components(), self.epsilon);
        }
        Ok(s)
    }

    /// One-vs-rest Φ_j = Σ_{i∈j} φ − Σ_{i∉j} φ.
    pub fn scores(&self, x: &LogicVector) -> Result<Vec<f64>> {
        let s = self.class_sums(x)?;
        let total: f64 = s.iter().sum();
        Ok(s.iter().map(|sj| sj - (total - sj)).collect())
    }

    /// Whether 1/ε exceeds, for every training row, the summed potential of
    /// all other rows. When it does and the vectors are pairwise distinct,
    /// every training row is classified into its own class.
    pub fn epsilon_dominates(&self) -> bool {
        let cap = 1.0 / self.epsilon;
        self.rows.iter().enumerate().all(|(i, (x, _))| {
            let others: f64 = self
                .rows
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, (a, _))| potential_raw(x.components(), a.components(), self.epsilon))
                .sum();
            cap > others
        })
    }
}

/// Two classes: Φ = Σ γ_i φ(x, x^i) with γ = +1 for class 1, thresholded at
/// ±margin. More classes: argmax of the one-vs-rest scores.
pub fn classify_potential(model: &PotentialModel, x: &LogicVector) -> Result<ClassDecision> {
    if model.classes == 2 {
        let s = model.class_sums(x)?;
        Ok(threshold(s[0] - s[1], model.margin))
    } else {
        let scores = model.scores(x)?;
        Ok(ClassDecision {
            outcome: Outcome::Class(argmax(&scores) + 1),
            scores,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(v: &[i8]) -> LogicVector {
        LogicVector::new(v.to_vec()).unwrap()
    }

    fn table(rows: &[(&[i8], usize)]) -> ExperienceTable {
        ExperienceTable::from_rows(rows.iter().map(|(x, c)| (lv(x), *c)).collect()).unwrap()
    }

    #[test]
    fn encode() {
        use Tri::*;
        assert_eq!(
            encode_logic_vector(&[Present, Absent, Unknown]).unwrap(),
            lv(&[1, -1, 0])
        );
        assert_eq!(encode_logic_vector(&[]), Err(DiagnosticsError::EmptyVector));
        assert_eq!(encode_logic_vector(&[Present]).unwrap(), lv(&[1]));
    }

    #[test]
    fn plane_two_symmetric_points() {
        let t = table(&[(&[1], 1), (&[-1], 2)]);
        let m = fit_separating_plane(&t, DEFAULT_MARGIN).unwrap();
        assert!(m.coefficients[0].abs() < 1e-12);
        assert!((m.coefficients[1] - 1.0).abs() < 1e-12);
        assert!(m.meta.residual_ss < 1e-20);
        let s = fit_separating_surface(&t, 1, DEFAULT_MARGIN).unwrap();
        assert_eq!(s.coefficients, m.coefficients);
    }

    #[test]
    fn plane_needs_two_classes() {
        let t = table(&[(&[1], 1), (&[-1], 1)]);
        assert_eq!(
            fit_separating_plane(&t, DEFAULT_MARGIN).unwrap_err().to_string(),
            "two classes required"
        );
    }

    #[test]
    fn surface_degree_zero_rejected() {
        let t = table(&[(&[1], 1), (&[-1], 2)]);
        assert_eq!(
            fit_separating_surface(&t, 0, DEFAULT_MARGIN).unwrap_err().to_string(),
            "degree ≥ 1 required"
        );
    }

    #[test]
    fn xor_needs_degree_two() {
        let t = table(&[(&[1, 1], 2), (&[-1, -1], 2), (&[1, -1], 1), (&[-1, 1], 1)]);
        let m = fit_separating_surface(&t, 2, 1e-6).unwrap();
        assert!(m.meta.ridge_fallback);
        for (x, c) in t.rows() {
            let d = classify_geometric(&m, x).unwrap();
            assert_eq!(d.outcome, Outcome::Class(*c), "{x}");
            // Φ ≈ −x1·x2
            let xf = x.to_f64();
            assert!((d.scores[0] + xf[0] * xf[1]).abs() < 1e-6);
        }
        let p = fit_separating_plane(&t, 1e-6).unwrap();
        assert!(t
            .rows()
            .iter()
            .any(|(x, c)| classify_geometric(&p, x).unwrap().outcome != Outcome::Class(*c)));
    }

    #[test]
    fn geometric_threshold() {
        let m = PlaneModel::new(vec![0.0, 1.0], 0.01).unwrap();
        let d = classify_geometric(&m, &lv(&[1])).unwrap();
        assert_eq!((d.outcome, d.scores[0]), (Outcome::Class(1), 1.0));
        assert_eq!(classify_geometric(&m, &lv(&[0])).unwrap().outcome, Outcome::Undecided);
        assert_eq!(classify_geometric(&m, &lv(&[-1])).unwrap().outcome, Outcome::Class(2));
        assert!(matches!(
            classify_geometric(&m, &lv(&[1, 1])),
            Err(DiagnosticsError::Dimension { .. })
        ));
    }

    #[test]
    fn frequencies_examples() {
        let t = table(&[
            (&[1], 1),
            (&[1], 1),
            (&[-1], 1),
            (&[0], 1),
            (&[1], 2),
            (&[1], 2),
            (&[1], 2),
            (&[1], 2),
        ]);
        let m = fit_frequencies(&t).unwrap();
        assert_eq!(m.frequencies[0][0], 0.5);
        assert_eq!(m.coefficients[0][0], 0.0);
        assert!((m.frequencies[1][0] - 5.0 / 6.0).abs() < 1e-15);
        assert!((m.coefficients[1][0] - 5f64.ln()).abs() < 1e-12);
        assert!((m.coefficients[1][0] - 1.60944).abs() < 1e-5);

        let only_two = table(&[(&[1], 2)]);
        assert_eq!(fit_frequencies(&only_two), Err(DiagnosticsError::EmptyClass(1)));
    }

    #[test]
    fn frequencies_classify() {
        let m = FrequenciesModel::from_coefficients(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = classify_frequencies(&m, &lv(&[1, -1])).unwrap();
        assert_eq!(d.outcome, Outcome::Class(1));
        assert_eq!(d.scores, vec![1.0, -1.0]);
        let tie = FrequenciesModel::from_coefficients(vec![vec![0.3, 0.2]; 2]).unwrap();
        assert_eq!(
            classify_frequencies(&tie, &lv(&[1, 0])).unwrap().outcome,
            Outcome::Class(1)
        );
        assert!(classify_frequencies(&m, &lv(&[1])).is_err());
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential_value(&lv(&[1, 0]), &lv(&[1, 0]), 1e-3).unwrap(), 1000.0);
        assert_eq!(potential_value(&lv(&[1, -1]), &lv(&[1, 1]), 0.001).unwrap(), 0.25);
        assert_eq!(
            potential_value(&lv(&[1]), &lv(&[1]), 0.0),
            Err(DiagnosticsError::Epsilon(0.0))
        );

        let t = table(&[(&[1], 1), (&[-1], 2)]);
        let m = PotentialModel::fit(&t, 0.01, 0.01).unwrap();
        let d = classify_potential(&m, &lv(&[1])).unwrap();
        assert_eq!(d.outcome, Outcome::Class(1));
        assert!((d.scores[0] - 99.75).abs() < 1e-12);
        let d = classify_potential(&m, &lv(&[-1])).unwrap();
        assert_eq!(d.outcome, Outcome::Class(2));
        assert!((d.scores[0] + 99.75).abs() < 1e-12);
        assert_eq!(
            PotentialModel::fit(&ExperienceTable::new(1), 0.01, 0.01),
            Err(DiagnosticsError::EmptyModel)
        );
    }

    #[test]
    fn multiclass_potential_one_vs_rest() {
        let t = table(&[(&[1, 1], 1), (&[-1, -1], 2), (&[1, -1], 3)]);
        let m = PotentialModel::fit(&t, 1e-3, 1e-6).unwrap();
        for (x, c) in t.rows() {
            assert_eq!(classify_potential(&m, x).unwrap().outcome, Outcome::Class(*c));
        }
    }

    fn tri() -> impl Strategy<Value = i8> {
        -1i8..=1
    }

    proptest! {
        #[test]
        fn potential_symmetric_and_bounded(
            x in prop::collection::vec(tri(), 1..10),
            seed in prop::collection::vec(tri(), 10),
            eps in 1e-6f64..2.0,
        ) {
            let a = lv(&seed[..x.len()]);
            let x = lv(&x);
            let p = potential_value(&x, &a, eps).unwrap();
            prop_assert_eq!(p, potential_value(&a, &x, eps).unwrap());
            prop_assert!(p <= 1.0 / eps);
        }

        #[test]
        fn log_odds_monotone(p in 0.001f64..0.999, q in 0.001f64..0.999) {
            if p < q {
                prop_assert!(log_odds(p) < log_odds(q));
            }
        }

        #[test]
        fn frequencies_argmax_shift_and_permutation(
            coeffs in prop::collection::vec(prop::collection::vec(-3f64..3.0, 3), 2..5),
            x in prop::collection::vec(tri(), 3),
            shift in -5f64..5.0,
            rot in 0usize..5,
        ) {
            let x = lv(&x);
            let m = FrequenciesModel::from_coefficients(coeffs.clone()).unwrap();
            let base = classify_frequencies(&m, &x).unwrap();
            let Outcome::Class(k) = base.outcome else { unreachable!() };
            let shifted: Vec<f64> = base.scores.iter().map(|s| s + shift).collect();
            prop_assert_eq!(argmax(&shifted) + 1, k);

            // Rotate class order, classify, map the answer back.
            let n = coeffs.len();
            let r = rot % n;
            let mut perm = coeffs.clone();
            perm.rotate_left(r);
            let pm = FrequenciesModel::from_coefficients(perm).unwrap();
            let Outcome::Class(pk) = classify_frequencies(&pm, &x).unwrap().outcome else { unreachable!() };
            let back = (pk - 1 + r) % n + 1;
            // Equal with the original unless the permutation changed a tie.
            let best = base.scores[k - 1];
            let ties = base.scores.iter().filter(|s| **s == best).count();
            if ties == 1 {
                prop_assert_eq!(back, k);
            } else {
                prop_assert_eq!(base.scores[back - 1], best);
            }
        }
    }
}
