//! Choice among decision variants: Decision-Situation tables with the
//! pessimistic, optimistic and pragmatic principles, Bayes' formula, event
//! trees, and the Altman Z-score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{Atom, FactStore, Term};

/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("empty table")]
    Empty,
    #[error("table shape: {0}")]
    Shape(String),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("probabilities required")]
    MissingProbabilities,
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("probabilities sum {0}")]
    ProbabilitySum(f64),
    #[error("likelihood {0} outside [0, 1]")]
    Likelihood(f64),
    #[error("evidence impossible under all hypotheses")]
    ImpossibleEvidence,
    #[error("event tree: {0}")]
    Tree(String),
}

type Result<T> = std::result::Result<T, DecisionError>;

fn check_distribution(p: &[f64]) -> Result<()> {
    for &v in p {
        if !v.is_finite() {
            return Err(DecisionError::NonFinite(v));
        }
        if v < 0.0 {
            return Err(DecisionError::NegativeProbability(v));
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(DecisionError::ProbabilitySum(round_for_display(sum)));
    }
    Ok(())
}

/// Strips float noise like 0.8999999999999999 from messages.
fn round_for_display(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// Preference values V_ij over variants (rows) and situations (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTable {
    pub variants: Vec<String>,
    pub situations: Vec<String>,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
}

impl DecisionTable {
    pub fn new(
        variants: Vec<String>,
        situations: Vec<String>,
        values: Vec<Vec<f64>>,
        probabilities: Option<Vec<f64>>,
    ) -> Result<Self> {
        let t = DecisionTable {
            variants,
            situations,
            values,
            probabilities,
        };
        t.validate()?;
        Ok(t)
    }

    /// Unlabelled table; variants are `v1…`, situations `s1…`.
    pub fn from_values(values: Vec<Vec<f64>>, probabilities: Option<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        let m = values.first().map_or(0, Vec::len);
        Self::new(
            (1..=n).map(|i| format!("v{i}")).collect(),
            (1..=m).map(|j| format!("s{j}")).collect(),
            values,
            probabilities,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() || self.situations.is_empty() {
            return Err(DecisionError::Empty);
        }
        if self.values.len() != self.variants.len() {
            return Err(DecisionError::Shape(format!(
                "{} rows for {} variants",
                self.values.len(),
                self.variants.len()
            )));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.situations.len() {
                return Err(DecisionError::Shape(format!(
                    "row {} has {} values for {} situations",
                    i + 1,
                    row.len(),
                    self.situations.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(DecisionError::NonFinite(*v));
            }
        }
        if let Some(p) = &self.probabilities {
            if p.len() != self.situations.len() {
                return Err(DecisionError::Shape(format!(
                    "{} probabilities for {} situations",
                    p.len(),
                    self.situations.len()
                )));
            }
            check_distribution(p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Pessimistic,
    Optimistic,
    Pragmatic,
}

impl Criterion {
    pub fn parse(s: &str) -> Option<Criterion> {
        match s {
            "pessimistic" | "minimax" | "maximin" => Some(Criterion::Pessimistic),
            "optimistic" | "maximax" => Some(Criterion::Optimistic),
            "pragmatic" | "expected" => Some(Criterion::Pragmatic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Pessimistic => "pessimistic",
            Criterion::Optimistic => "optimistic",
            Criterion::Pragmatic => "pragmatic",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceResult {
    /// 0-based index of the chosen variant.
    pub index: usize,
    pub variant: String,
    pub value: f64,
    pub criterion: Criterion,
    /// Criterion value of every variant.
    pub values: Vec<f64>,
}

fn pick(table: &DecisionTable, criterion: Criterion, values: Vec<f64>) -> ChoiceResult {
    let mut index = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[index] {
            index = i;
        }
    }
    ChoiceResult {
        index,
        variant: table.variants[index].clone(),
        value: values[index],
        criterion,
        values,
    }
}

/// w = max_i min_j V_ij.
pub fn choose_pessimistic(table: &DecisionTable) -> Result<ChoiceResult> {
    table.validate()?;
    let v = table
        .values
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    Ok(pick(table, Criterion::Pessimistic, v))
}

/// w = max_i max_j V_ij.
pub fn choose_optimistic(table: &DecisionTable) -> Result<ChoiceResult> {
    table.validate()?;
    let v = table
        .values
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(pick(table, Criterion::Optimistic, v))
}

/// w = max_i Σ_j P_j V_ij.
pub fn choose_pragmatic(table: &DecisionTable) -> Result<ChoiceResult> {
    table.validate()?;
    let p = table
        .probabilities
        .as_ref()
        .ok_or(DecisionError::MissingProbabilities)?;
    let v = table
        .values
        .iter()
        .map(|r| r.iter().zip(p).map(|(v, p)| v * p).sum())
        .collect();
    Ok(pick(table, Criterion::Pragmatic, v))
}

pub fn choose(table: &DecisionTable, criterion: Criterion) -> Result<ChoiceResult> {
    match criterion {
        Criterion::Pessimistic => choose_pessimistic(table),
        Criterion::Optimistic => choose_optimistic(table),
        Criterion::Pragmatic => choose_pragmatic(table),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesInput {
    pub hypotheses: Vec<String>,
    pub priors: Vec<f64>,
    /// P(E | H_i).
    pub likelihoods: Vec<f64>,
    #[serde(default)]
    pub evidence: String,
}

/// P(H_i | E) = P(H_i) P(E|H_i) / Σ_j P(H_j) P(E|H_j).
pub fn bayes_posterior(input: &BayesInput) -> Result<Vec<f64>> {
    let n = input.priors.len();
    if n == 0 {
        return Err(DecisionError::Empty);
    }
    if input.likelihoods.len() != n || (!input.hypotheses.is_empty() && input.hypotheses.len() != n) {
        return Err(DecisionError::Shape(format!(
            "{} hypotheses, {} priors, {} likelihoods",
            input.hypotheses.len(),
            n,
            input.likelihoods.len()
        )));
    }
    check_distribution(&input.priors)?;
    for &l in &input.likelihoods {
        if !(0.0..=1.0).contains(&l) {
            return Err(DecisionError::Likelihood(l));
        }
    }
    let joint: Vec<f64> = input
        .priors
        .iter()
        .zip(&input.likelihoods)
        .map(|(p, l)| p * l)
        .collect();
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(DecisionError::ImpossibleEvidence);
    }
    Ok(joint.iter().map(|j| j / total).collect())
}

/// Branching probability model; leaves carry an outcome class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTree {
    /// node → [(child, probability)] in insertion order.
    pub branches: BTreeMap<String, Vec<(String, f64)>>,
    pub outcomes: BTreeMap<String, String>,
}

impl EventTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn branch(mut self, node: &str, child: &str, p: f64) -> Self {
        self.branches
            .entry(node.to_string())
            .or_default()
            .push((child.to_string(), p));
        self
    }

    pub fn outcome(mut self, leaf: &str, class: &str) -> Self {
        self.outcomes.insert(leaf.to_string(), class.to_string());
        self
    }

    /// Reads `branch(Node, Child, P)` and `outcome(Leaf, Class)` facts.
    pub fn from_store(store: &FactStore) -> Result<Self> {
        let mut t = EventTree::new();
        let key = |term: &Term| -> Result<String> {
            term.as_sym()
                .map(str::to_string)
                .or_else(|| term.as_text().map(str::to_string))
                .ok_or_else(|| DecisionError::Tree(format!("node name expected, got {term}")))
        };
        for a in store.relation("branch") {
            if a.arity() != 3 {
                continue;
            }
            let p = a.args[2]
                .as_num()
                .ok_or_else(|| DecisionError::Tree(format!("probability expected in {a}")))?;
            t = t.branch(&key(&a.args[0])?, &key(&a.args[1])?, p);
        }
        for a in store.relation("outcome") {
            if a.arity() == 2 {
                t = t.outcome(&key(&a.args[0])?, &key(&a.args[1])?);
            }
        }
        Ok(t)
    }

    pub fn to_facts(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        for (n, bs) in &self.branches {
            for (c, p) in bs {
                out.push(Atom::new("branch", vec![Term::sym(n), Term::sym(c), Term::num(*p)]));
            }
        }
        for (l, c) in &self.outcomes {
            out.push(Atom::new("outcome", vec![Term::sym(l), Term::sym(c)]));
        }
        out
    }

    /// The unique node that is never a child.
    pub fn root(&self) -> Result<&str> {
        let children: BTreeSet<&str> = self.branches.values().flatten().map(|(c, _)| c.as_str()).collect();
        let roots: Vec<&str> = self
            .branches
            .keys()
            .map(String::as_str)
            .filter(|n| !children.contains(n))
            .collect();
        match roots.as_slice() {
            [r] => Ok(r),
            [] => Err(DecisionError::Tree("no root (empty tree or cycle)".into())),
            many => Err(DecisionError::Tree(format!("several roots: {}", many.join(", ")))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let root = self.root()?;
        for (node, bs) in &self.branches {
            let ps: Vec<f64> = bs.iter().map(|b| b.1).collect();
            check_distribution(&ps).map_err(|e| DecisionError::Tree(format!("node {node}: {e}")))?;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![root.to_string()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                return Err(DecisionError::Tree(format!("node {n} reached twice")));
            }
            match self.branches.get(&n) {
                Some(bs) => stack.extend(bs.iter().map(|b| b.0.clone())),
                None if !self.outcomes.contains_key(&n) => {
                    return Err(DecisionError::Tree(format!("leaf {n} has no outcome")))
                }
                None => {}
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> BTreeSet<&str> {
        self.outcomes.values().map(String::as_str).collect()
    }
}

/// Σ over root-to-leaf paths ending in `class` of the product of branch
/// probabilities.
pub fn event_tree_probability(tree: &EventTree, class: &str) -> Result<f64> {
    tree.validate()?;
    fn walk(t: &EventTree, node: &str, class: &str) -> f64 {
        match t.branches.get(node) {
            Some(bs) => bs.iter().map(|(c, p)| p * walk(t, c, class)).sum(),
            None => {
                if t.outcomes.get(node).is_some_and(|c| c == class) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
    Ok(walk(tree, tree.root()?, class))
}

/// The five ratios X1…X5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinancialProfile {
    pub working_capital_to_assets: f64,
    pub retained_earnings_to_assets: f64,
    pub ebit_to_assets: f64,
    pub equity_to_liabilities: f64,
    pub sales_to_assets: f64,
}

impl FinancialProfile {
    pub fn from_array(x: [f64; 5]) -> Self {
        FinancialProfile {
            working_capital_to_assets: x[0],
            retained_earnings_to_assets: x[1],
            ebit_to_assets: x[2],
            equity_to_liabilities: x[3],
            sales_to_assets: x[4],
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.working_capital_to_assets,
            self.retained_earnings_to_assets,
            self.ebit_to_assets,
            self.equity_to_liabilities,
            self.sales_to_assets,
        ]
    }
}

/// Coefficients and zone thresholds of the classical public-company score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltmanConfig {
    pub coefficients: [f64; 5],
    /// Below this: distress.
    pub distress_below: f64,
    /// At or above this: safe.
    pub safe_from: f64,
}

impl Default for AltmanConfig {
    fn default() -> Self {
        AltmanConfig {
            coefficients: [1.2, 1.4, 3.3, 0.6, 1.0],
            distress_below: 1.81,
            safe_from: 2.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Distress,
    Grey,
    Safe,
}

impl Zone {
    pub fn name(self) -> &'static str {
        match self {
            Zone::Distress => "distress",
            Zone::Grey => "grey",
            Zone::Safe => "safe",
        }
    }
}

pub fn altman_z(profile: &FinancialProfile) -> Result<(f64, Zone)> {
    altman_z_with(profile, &AltmanConfig::default())
}

pub fn altman_z_with(profile: &FinancialProfile, cfg: &AltmanConfig) -> Result<(f64, Zone)> {
    let x = profile.as_array();
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(DecisionError::NonFinite(*v));
    }
    let z: f64 = x.iter().zip(cfg.coefficients).map(|(x, c)| x * c).sum();
    let zone = if z < cfg.distress_below {
        Zone::Distress
    } else if z >= cfg.safe_from {
        Zone::Safe
    } else {
        Zone::Grey
    };
    Ok((z, zone))
}
