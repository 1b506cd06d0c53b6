//! One-shot runs with answers supplied up front.

use serde::Serialize;
use serde_json::json;

use crate::inference::{Answer, TraceNode};
use crate::scenarios::{
    package_for, run_scenario, CriticalEvent, Package, ScenarioConfig, ScenarioError, ScenarioOutcome,
};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    /// Unreadable input files or bad arguments.
    Usage,
    /// The run needs an answer the answers file does not have.
    AnswersExhausted,
    /// The knowledge base failed to parse or a goal raised an error.
    KbError,
    /// The event document is malformed.
    Schema,
    /// The top goal has no proof.
    NoProof,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Usage => 2,
            RunStatus::AnswersExhausted => 3,
            RunStatus::KbError => 4,
            RunStatus::Schema => 5,
            RunStatus::NoProof => 6,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HeadlessOptions {
    /// `(file name, text)` of every knowledge-base file, in load order.
    pub kb_sources: Vec<(String, String)>,
    /// Shipped package loaded before the sources. Without one, the package
    /// for the event's category is loaded unless the sources define `adapt`.
    pub package: Option<String>,
    pub event_json: String,
    pub answers: Vec<Answer>,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct HeadlessOutcome {
    pub status: RunStatus,
    /// Pretty JSON for stdout: the report on success, the pending question
    /// when answers ran out, an error object otherwise. Ends with a newline.
    pub output: String,
    pub trace: Option<TraceNode>,
}

/// Answers file: a JSON array, or one answer per line (`#` comments).
pub fn parse_answers(text: &str) -> Result<Vec<Answer>, GatewayError> {
    let t = text.trim_start();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| GatewayError::BadRequest(format!("answers: {e}")));
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(Answer::parse)
        .collect())
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"));
    s.push('\n');
    s
}

fn failure(status: RunStatus, err: &GatewayError, trace: Option<TraceNode>) -> HeadlessOutcome {
    let mut body = json!({ "code": err.code(), "message": err.to_string() });
    if let GatewayError::Schema(f) = err {
        body["fields"] = json!(f);
    }
    HeadlessOutcome {
        status,
        output: pretty(&json!({ "status": status, "error": body })),
        trace,
    }
}

fn build_package(opts: &HeadlessOptions, event: &CriticalEvent) -> Result<Package, ScenarioError> {
    let mut data = Package::from_sources("data", &[])?;
    for (file, text) in &opts.kb_sources {
        data.add_source(file, text)?;
    }
    let base = match &opts.package {
        Some(p) => Some(p.clone()),
        None if data.kb.defines("adapt", 0) => None,
        None => Some(package_for(event)?.to_string()),
    };
    let Some(base) = base else {
        return Ok(data);
    };
    let mut pkg = Package::builtin(&base)?;
    for (file, text) in &opts.kb_sources {
        pkg.add_source(file, text)?;
    }
    Ok(pkg)
}

/// Runs the event to a report without an operator. Same inputs give
/// byte-identical output.
pub fn run_headless(opts: &HeadlessOptions) -> HeadlessOutcome {
    let event = match CriticalEvent::from_json(&opts.event_json) {
        Ok(e) => e,
        Err(e) => return failure(RunStatus::Schema, &e.into(), None),
    };
    let pkg = match build_package(opts, &event) {
        Ok(p) => p,
        Err(e @ ScenarioError::NoPackage { .. }) => return failure(RunStatus::Schema, &e.into(), None),
        Err(e @ ScenarioError::UnknownPackage(_)) => return failure(RunStatus::Usage, &e.into(), None),
        Err(e) => return failure(RunStatus::KbError, &e.into(), None),
    };
    match run_scenario(&event, &pkg, &opts.answers, &opts.config) {
        Ok(ScenarioOutcome::Done { report }) => HeadlessOutcome {
            status: RunStatus::Success,
            output: pretty(&report),
            trace: Some(report.goal_tree.clone()),
        },
        Ok(ScenarioOutcome::Awaiting {
            question,
            questions,
            trace,
        }) => HeadlessOutcome {
            status: RunStatus::AnswersExhausted,
            output: pretty(&json!({
                "status": RunStatus::AnswersExhausted,
                "question": question,
                "answered": questions,
            })),
            trace: Some(trace),
        },
        Err(ScenarioError::NoProof { trace }) => {
            let e = GatewayError::Scenario(ScenarioError::NoProof { trace: trace.clone() });
            failure(RunStatus::NoProof, &e, trace.map(|t| *t))
        }
        Err(ScenarioError::Run { error, trace }) => {
            let t = (*trace).clone();
            failure(
                RunStatus::KbError,
                &GatewayError::Scenario(ScenarioError::Run { error, trace }),
                Some(t),
            )
        }
        Err(e @ ScenarioError::NoPackage { .. }) => failure(RunStatus::Schema, &e.into(), None),
        Err(e) => failure(RunStatus::KbError, &e.into(), None),
    }
}
