//! Backward chaining over Horn clauses with a goal tree, forward chaining over
//! propositional rules with an operator dialogue, and the builtin predicate
//! registry that connects rules to the fact store and the analytic kernels.

mod builtins;
mod expr;
mod forward;
mod solve;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::kb::{unify, unify_atoms, Substitution};
pub use builtins::{
    standard_registry, Builtin, BuiltinError, BuiltinFn, BuiltinRegistry, CallContext, Mode, RegistryError,
};
pub use expr::{eval_expression, eval_term, ExprError};
pub use forward::{dialogue_step, forward_chain, DialogueOutcome, DialogueState, PendingQuestion};
pub use solve::{solve, Artifact, Solution, SolveLimits, Solver, DEFAULT_MAX_DEPTH};
pub use tree::{ClauseSource, GoalNode, GoalStatus, GoalTree, TraceNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    YesNo,
    Number,
    Text,
}

/// A question raised by `ask/2` and friends. Ids count distinct questions
/// from 1 in the order they are first met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: u64,
    pub text: String,
    pub kind: AnswerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Answer {
    pub fn yes() -> Self {
        Answer::Bool(true)
    }

    pub fn no() -> Self {
        Answer::Bool(false)
    }

    /// Reads `yes`/`no`/`true`/`false`, numbers, or falls back to text.
    pub fn parse(s: &str) -> Answer {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "yes" | "y" | "true" => return Answer::Bool(true),
            "no" | "n" | "false" => return Answer::Bool(false),
            _ => {}
        }
        match t.parse::<f64>() {
            Ok(n) if n.is_finite() => Answer::Number(n),
            _ => Answer::Text(t.to_string()),
        }
    }

    /// Normalizes the answer for a question of the given kind, or `None`
    /// when the types are incompatible.
    pub fn coerce(&self, kind: AnswerKind) -> Option<Answer> {
        match (kind, self) {
            (AnswerKind::YesNo, Answer::Bool(_)) => Some(self.clone()),
            (AnswerKind::YesNo, Answer::Text(t)) => match Answer::parse(t) {
                b @ Answer::Bool(_) => Some(b),
                _ => None,
            },
            (AnswerKind::Number, Answer::Number(_)) => Some(self.clone()),
            (AnswerKind::Number, Answer::Text(t)) => match Answer::parse(t) {
                n @ Answer::Number(_) => Some(n),
                _ => None,
            },
            (AnswerKind::Text, Answer::Text(_)) => Some(self.clone()),
            (AnswerKind::Text, Answer::Bool(b)) => Some(Answer::Text(if *b { "yes" } else { "no" }.into())),
            (AnswerKind::Text, Answer::Number(n)) => Some(Answer::Text(n.to_string())),
            _ => None,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Bool(true) => f.write_str("yes"),
            Answer::Bool(false) => f.write_str("no"),
            Answer::Number(n) => write!(f, "{n}"),
            Answer::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("depth limit {limit} exceeded at goal {goal}")]
    Depth { goal: String, limit: usize },
    #[error("{pred}/{arity}: argument {arg} must be bound")]
    Mode { pred: String, arity: usize, arg: usize },
    #[error("{pred}/{arity}: {message}")]
    Builtin {
        pred: String,
        arity: usize,
        message: String,
    },
    #[error("builtin {0} is also defined by knowledge-base clauses")]
    Redefined(String),
    #[error("awaiting answer to question {}: {}", .0.id, .0.text)]
    Suspended(Question),
}
