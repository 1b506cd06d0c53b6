//! Response scenarios for production, market and regional events.
//!
//! Each category ships a knowledge-base package whose top goal `adapt`
//! splits into the scenario's subgoals; the subgoals call the operations in
//! this module through builtins. Enterprise data (measure templates, assets,
//! contracts, prices, cost structures, plans) is supplied as facts and tables
//! alongside the package.

mod builtins;
pub mod event;
pub mod market;
pub mod money;
pub mod production;
pub mod regional;
mod run;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::DecisionError;
use crate::inference::{SolveError, TraceNode};
use crate::prediction::PredictionError;

pub use builtins::scenario_registry;
pub use event::{kb_symbol, Category, CriticalEvent, EventStatus, FieldError, Measurement};
pub use money::{sum_expense_sheets, ExpenseSheet, LineItem, Money};
pub use production::{ThreatLevel, ThreatThresholds};
pub use run::{
    evaluate_market_event, evaluate_regional_event, goal_names, package_for, run_scenario, Package, QuestionRecord,
    ScenarioOutcome, ScenarioReport, SubgoalReport, SCHEMA_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid event: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Schema(Vec<FieldError>),
    #[error("no KB package for {category}/{subtype}")]
    NoPackage { category: String, subtype: String },
    #[error("unknown package {0:?}")]
    UnknownPackage(String),
    #[error("package {name}: {message}")]
    PackageParse { name: String, message: String },
    #[error("{0}")]
    Money(String),
    #[error("mixed currencies {0} and {1}")]
    MixedCurrency(String, String),
    #[error("cyclic prerequisites: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Inference(#[from] SolveError),
    /// An inference error during a scenario run, with the partial goal tree.
    #[error("{error}")]
    Run { error: SolveError, trace: Box<TraceNode> },
    #[error("the top goal could not be proven")]
    NoProof { trace: Option<Box<TraceNode>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropositionKind {
    PlanCorrection,
    ReliabilityImprovement,
    NewTechnology,
    Other,
}

impl PropositionKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match kb_symbol(s).as_str() {
            "plan_correction" => PropositionKind::PlanCorrection,
            "reliability_improvement" => PropositionKind::ReliabilityImprovement,
            "new_technology" => PropositionKind::NewTechnology,
            "other" => PropositionKind::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposition {
    pub kind: PropositionKind,
    pub description: String,
    /// Goal-tree nodes (`node:<id>`), causes (`cause:<name>`) and report
    /// sections (`report:<key>`) that support it. Never empty.
    pub evidence: Vec<String>,
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.description)
    }
}

/// Named configuration; none of these appear in the knowledge bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub thresholds: ThreatThresholds,
    /// Competitor consumer value above this multiple of ours calls for new
    /// technology.
    pub new_technology_factor: f64,
    /// Used when the data declares no `currency/1` fact.
    pub currency: String,
    pub max_depth: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            thresholds: ThreatThresholds::default(),
            new_technology_factor: 1.2,
            currency: "USD".into(),
            max_depth: crate::inference::DEFAULT_MAX_DEPTH,
        }
    }
}

#[cfg(test)]
mod tests;
