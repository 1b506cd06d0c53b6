//! Scenario dispatcher: poses `adapt` for an event against a package and
//! turns the proof into a report.

use std::collections::BTreeSet;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::inference::{Answer, AnswerKind, GoalTree, Question, SolveError, SolveLimits, Solver, TraceNode};
use crate::kb::{Atom, FactStore, KnowledgeBase};
use crate::lang::parse_kb_named;

use super::event::{kb_symbol, Category, CriticalEvent, EventStatus};
use super::{scenario_registry, Proposition, ScenarioConfig, ScenarioError};

pub const SCHEMA_VERSION: &str = "1";

const PRODUCTION_KB: &str = include_str!("../../packages/production.kb");
const MARKET_KB: &str = include_str!("../../packages/market.kb");
const REGION_KB: &str = include_str!("../../packages/region.kb");

/// A knowledge base with its tables and facts, ready to run scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct Package {
    pub name: String,
    pub kb: KnowledgeBase,
    pub store: FactStore,
}

impl Package {
    pub const SHIPPED: [&'static str; 3] = ["production", "market", "region"];

    /// One of the shipped packages. `region` includes `production`, whose
    /// emergency response it reuses.
    pub fn builtin(name: &str) -> Result<Package, ScenarioError> {
        let sources: &[(&str, &str)] = match name {
            "production" => &[("production.kb", PRODUCTION_KB)],
            "market" => &[("market.kb", MARKET_KB)],
            "region" => &[("region.kb", REGION_KB), ("production.kb", PRODUCTION_KB)],
            _ => return Err(ScenarioError::UnknownPackage(name.to_string())),
        };
        Package::from_sources(name, sources)
    }

    pub fn builtin_source(name: &str) -> Option<&'static str> {
        match name {
            "production" => Some(PRODUCTION_KB),
            "market" => Some(MARKET_KB),
            "region" => Some(REGION_KB),
            _ => None,
        }
    }

    /// Parses and concatenates `(file name, text)` sources.
    pub fn from_sources(name: &str, sources: &[(&str, &str)]) -> Result<Package, ScenarioError> {
        let mut p = Package {
            name: name.to_string(),
            kb: KnowledgeBase::new(),
            store: FactStore::new(),
        };
        for (file, text) in sources {
            p.add_source(file, text)?;
        }
        Ok(p)
    }

    pub fn from_files<P: AsRef<Path>>(name: &str, paths: &[P]) -> Result<Package, ScenarioError> {
        let mut p = Package::from_sources(name, &[])?;
        for path in paths {
            p.add_file(path)?;
        }
        Ok(p)
    }

    /// Appends clauses, facts and tables from more source text.
    pub fn add_source(&mut self, file: &str, text: &str) -> Result<(), ScenarioError> {
        let parsed = parse_kb_named(file, text);
        if parsed.has_errors() {
            let message = parsed.errors().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
            return Err(ScenarioError::PackageParse {
                name: self.name.clone(),
                message,
            });
        }
        let (kb, store, _) = parsed.into_parts();
        self.kb.extend(kb);
        self.store.merge(&store);
        Ok(())
    }

    pub fn add_file(&mut self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::PackageParse {
            name: self.name.clone(),
            message: format!("{}: {e}", path.display()),
        })?;
        self.add_source(&path.display().to_string(), &text)
    }
}

/// Name of the shipped package handling the event, or `NoPackage` when
/// the subtype is not one the category's package knows.
pub fn package_for(event: &CriticalEvent) -> Result<&'static str, ScenarioError> {
    let sub = kb_symbol(&event.subtype);
    if event.category.subtypes().iter().any(|s| kb_symbol(s) == sub) {
        Ok(event.category.name())
    } else {
        Err(ScenarioError::NoPackage {
            category: event.category.name().into(),
            subtype: event.subtype.clone(),
        })
    }
}

const PRODUCTION_GOALS: &[(&str, &str)] = &[
    ("phi", "emergency_response"),
    ("phi1", "estimate_threat"),
    ("phi2", "react_to_threat"),
    ("psi1", "assess_threat_consequences"),
    ("psi2", "propose_preventive_measures"),
    ("phi3", "analyze_event"),
    ("phi4", "react_to_event"),
    ("omega1", "assess_restoration_measures"),
    ("omega2", "analyze_emergency_causes"),
    ("omega3", "assess_consequences"),
    ("omega4", "correct_production_plans"),
    ("omega5", "propose_reliability_improvements"),
];

/// Scenario goal labels and the predicates that carry them in the shipped
/// packages, for the event's category and subtype.
pub fn goal_names(category: Category, subtype: &str) -> &'static [(&'static str, &'static str)] {
    match (category, kb_symbol(subtype).as_str()) {
        (Category::Production, _) | (Category::Region, "ecocatastrophe") => PRODUCTION_GOALS,
        (Category::Market, "new_competitive_goods") => &[
            ("phi", "market_response"),
            ("phi1", "assess_consumer_value"),
            ("phi2", "assess_sales_influence"),
            ("phi3", "prepare_plan_information"),
            ("phi4", "propose_new_technology"),
        ],
        (Category::Market, "new_segment") => &[
            ("phi", "market_response"),
            ("phi1", "analyze_segment"),
            ("phi2", "assess_segment_sales"),
            ("phi3", "prepare_plan_information"),
        ],
        (Category::Market, "partner_financial_change") => &[
            ("phi", "market_response"),
            ("phi1", "assess_financial_state"),
            ("phi2", "assess_partner_consequences"),
            ("phi3", "prepare_plan_information"),
            ("phi4", "prepare_other_propositions"),
        ],
        (Category::Region, _) => &[
            ("phi", "regional_response"),
            ("phi1", "predict_radical_change"),
            ("phi2", "assess_change_consequences"),
        ],
        _ => &[],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub id: String,
    pub category: Category,
    pub subtype: String,
    pub status: EventStatus,
    pub timestamp: String,
    pub title: String,
    /// Stored verbatim.
    pub narrative: String,
    pub tags: Vec<String>,
    pub assets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgoalReport {
    pub label: String,
    pub predicate: String,
    /// `proven` or `absent` (not on the proof).
    pub status: String,
    /// Goal-tree node ids of the subgoal on the proof.
    pub nodes: Vec<usize>,
    /// Output keys produced below the subgoal.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: u64,
    pub text: String,
    pub kind: AnswerKind,
    pub answer: Option<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: String,
    pub package: String,
    pub event: EventSummary,
    /// `threat` or `event` for the emergency response, else the subtype.
    pub branch: String,
    pub subgoals: Vec<SubgoalReport>,
    /// Builtin results keyed by output name; a name produced more than once
    /// holds an array in proof order.
    pub outputs: IndexMap<String, serde_json::Value>,
    pub propositions: Vec<Proposition>,
    pub questions: Vec<QuestionRecord>,
    pub warnings: Vec<String>,
    pub goal_tree: TraceNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ScenarioOutcome {
    Done {
        report: Box<ScenarioReport>,
    },
    Awaiting {
        question: Question,
        questions: Vec<QuestionRecord>,
        trace: TraceNode,
    },
}

impl ScenarioOutcome {
    pub fn report(&self) -> Option<&ScenarioReport> {
        match self {
            ScenarioOutcome::Done { report } => Some(report),
            ScenarioOutcome::Awaiting { .. } => None,
        }
    }
}

fn question_records(qs: &[Question], answers: &[Answer]) -> Vec<QuestionRecord> {
    qs.iter()
        .enumerate()
        .map(|(i, q)| QuestionRecord {
            id: q.id,
            text: q.text.clone(),
            kind: q.kind,
            answer: answers.get(i).and_then(|a| a.coerce(q.kind)),
        })
        .collect()
}

/// Runs the event's scenario with answers given in the order questions
/// arise. Stops at the first question without an answer.
pub fn run_scenario(
    event: &CriticalEvent,
    package: &Package,
    answers: &[Answer],
    config: &ScenarioConfig,
) -> Result<ScenarioOutcome, ScenarioError> {
    package_for(event)?;
    let mut store = package.store.clone();
    store.merge(&event.to_facts());
    let registry = scenario_registry(event, config)?;
    let limits = SolveLimits {
        max_depth: config.max_depth,
        max_solutions: Some(1),
    };
    let goal = Atom::new("adapt", vec![]);
    let mut solver = Solver::new(&package.kb, &store, &registry, &goal, limits)?.with_answers(answers.to_vec());
    match solver.next_solution() {
        Ok(Some(sol)) => {
            let questions = question_records(solver.questions(), answers);
            Ok(ScenarioOutcome::Done {
                report: Box::new(build_report(event, package, &sol.tree, &sol.artifacts, questions)),
            })
        }
        Ok(None) => Err(ScenarioError::NoProof {
            trace: solver.failure_tree().map(|t| Box::new(t.to_trace())),
        }),
        Err(SolveError::Suspended(q)) => Ok(ScenarioOutcome::Awaiting {
            question: q,
            questions: question_records(solver.questions(), answers),
            trace: solver.current_tree().to_trace(),
        }),
        Err(error) => Err(ScenarioError::Run {
            error,
            trace: Box::new(solver.current_tree().to_trace()),
        }),
    }
}

fn run_category(
    category: Category,
    event: &CriticalEvent,
    package: &Package,
    answers: &[Answer],
    config: &ScenarioConfig,
) -> Result<ScenarioOutcome, ScenarioError> {
    if event.category != category {
        return Err(ScenarioError::Data(format!(
            "expected a {category} event, got {}",
            event.category
        )));
    }
    run_scenario(event, package, answers, config)
}

/// Market scenarios: competing goods, new segment, partner's finances.
pub fn evaluate_market_event(
    event: &CriticalEvent,
    package: &Package,
    config: &ScenarioConfig,
) -> Result<ScenarioOutcome, ScenarioError> {
    run_category(Category::Market, event, package, &[], config)
}

/// Regional scenarios. The political crisis asks one question.
pub fn evaluate_regional_event(
    event: &CriticalEvent,
    package: &Package,
    answers: &[Answer],
    config: &ScenarioConfig,
) -> Result<ScenarioOutcome, ScenarioError> {
    run_category(Category::Region, event, package, answers, config)
}

fn is_below(tree: &GoalTree, mut node: usize, ancestor: usize) -> bool {
    loop {
        if node == ancestor {
            return true;
        }
        match tree.nodes[node].parent {
            Some(p) => node = p,
            None => return false,
        }
    }
}

fn collect_warnings(key: &str, v: &serde_json::Value, out: &mut Vec<String>) {
    let Some(obj) = v.as_object() else { return };
    if let Some(w) = obj.get("warning").and_then(|w| w.as_str()) {
        out.push(format!("{key}: {w}"));
    }
    if let Some(ws) = obj.get("warnings").and_then(|w| w.as_array()) {
        out.extend(ws.iter().filter_map(|w| w.as_str()).map(|w| format!("{key}: {w}")));
    }
    if let Some(ext) = obj.get("extrapolated").and_then(|e| e.as_bool()) {
        if ext {
            out.push(format!("{key}: prediction outside the range of the fitted data"));
        }
    }
}

fn build_report(
    event: &CriticalEvent,
    package: &Package,
    tree: &GoalTree,
    artifacts: &[crate::inference::Artifact],
    questions: Vec<QuestionRecord>,
) -> ScenarioReport {
    let mut grouped: IndexMap<String, Vec<serde_json::Value>> = IndexMap::new();
    let mut propositions = Vec::new();
    let mut warnings = Vec::new();
    for a in artifacts {
        if a.key == "proposition" {
            if let Ok(mut p) = serde_json::from_value::<Proposition>(a.value.clone()) {
                p.evidence.push(format!("node:{}", a.node));
                propositions.push(p);
            }
            continue;
        }
        collect_warnings(&a.key, &a.value, &mut warnings);
        grouped.entry(a.key.clone()).or_default().push(a.value.clone());
    }
    let outputs: IndexMap<String, serde_json::Value> = grouped
        .into_iter()
        .map(|(k, mut vs)| {
            let v = if vs.len() == 1 {
                vs.remove(0)
            } else {
                serde_json::Value::Array(vs)
            };
            (k, v)
        })
        .collect();

    let names = goal_names(event.category, &event.subtype);
    let subgoals = names
        .iter()
        .map(|&(label, pred)| {
            let nodes: Vec<usize> = tree.find(&[pred]).map(|(i, _)| i).collect();
            let mut keys: BTreeSet<&str> = BTreeSet::new();
            let mut ordered = Vec::new();
            for a in artifacts {
                if a.key != "proposition" && nodes.iter().any(|&n| is_below(tree, a.node, n)) && keys.insert(&a.key) {
                    ordered.push(a.key.clone());
                }
            }
            SubgoalReport {
                label: label.into(),
                predicate: pred.into(),
                status: if nodes.is_empty() { "absent" } else { "proven" }.into(),
                nodes,
                outputs: ordered,
            }
        })
        .collect();

    let branch = if tree.find(&["estimate_threat"]).next().is_some() {
        "threat".to_string()
    } else if tree.find(&["analyze_event"]).next().is_some() {
        "event".to_string()
    } else {
        kb_symbol(&event.subtype)
    };

    ScenarioReport {
        schema_version: SCHEMA_VERSION.into(),
        package: package.name.clone(),
        event: EventSummary {
            id: event.id.clone(),
            category: event.category,
            subtype: event.subtype.clone(),
            status: event.status,
            timestamp: event.timestamp.clone(),
            title: event.title.clone(),
            narrative: event.narrative.clone(),
            tags: event.tags.clone(),
            assets: event.assets.clone(),
        },
        branch,
        subgoals,
        outputs,
        propositions,
        questions,
        warnings,
        goal_tree: tree.to_trace(),
    }
}
