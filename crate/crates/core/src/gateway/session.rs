use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::inference::{Answer, Question, TraceNode};
use crate::scenarios::{
    run_scenario, CriticalEvent, Package, ScenarioConfig, ScenarioError, ScenarioOutcome, ScenarioReport,
};

use super::GatewayError;

/// Source of journal timestamps; injected so runs can be reproduced.
pub trait Clock: Send + Sync {
    fn now(&self) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Running,
    AwaitingAnswer,
    Done,
    Failed,
}

impl SessionState {
    pub fn name(self) -> &'static str {
        match self {
            SessionState::Running => "running",
            SessionState::AwaitingAnswer => "awaiting-answer",
            SessionState::Done => "done",
            SessionState::Failed => "failed",
        }
    }

    /// running → awaiting-answer ↔ running → done | failed.
    pub fn can_move_to(self, next: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, next),
            (Running, AwaitingAnswer) | (Running, Done) | (Running, Failed) | (AwaitingAnswer, Running)
        )
    }

    pub fn is_final(self) -> bool {
        matches!(self, SessionState::Done | SessionState::Failed)
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub session_id: String,
    pub question_id: u64,
    pub answer: Answer,
    pub timestamp: String,
}

/// One line of a session journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum JournalEntry {
    Created {
        session: String,
        package: String,
        event: CriticalEvent,
        at: String,
    },
    Question {
        question: Question,
        at: String,
    },
    Answer {
        question_id: u64,
        answer: Answer,
        at: String,
    },
    Result {
        state: SessionState,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        at: String,
    },
}

/// A scenario run carried through the operator dialogue.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub package: String,
    pub event: CriticalEvent,
    pub created_at: String,
    state: SessionState,
    pending: Option<Question>,
    answers: Vec<AnswerRecord>,
    report: Option<ScenarioReport>,
    trace: Option<TraceNode>,
    error: Option<String>,
    /// Every state the session has been in, in order.
    history: Vec<SessionState>,
    journal: Vec<JournalEntry>,
    kb: Arc<Package>,
    config: ScenarioConfig,
}

/// What the API returns for a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub package: String,
    pub state: SessionState,
    pub event: CriticalEvent,
    pub created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_question: Option<Question>,
    pub answers: Vec<AnswerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ScenarioReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Session {
    /// Creates the session and runs it to completion or to its first
    /// unanswered question.
    pub fn start(
        id: String,
        package_name: &str,
        kb: Arc<Package>,
        event: CriticalEvent,
        config: ScenarioConfig,
        clock: &dyn Clock,
    ) -> Session {
        let at = clock.now();
        let mut s = Session {
            id: id.clone(),
            package: package_name.to_string(),
            event: event.clone(),
            created_at: at.clone(),
            state: SessionState::Running,
            pending: None,
            answers: Vec::new(),
            report: None,
            trace: None,
            error: None,
            history: vec![SessionState::Running],
            journal: vec![JournalEntry::Created {
                session: id,
                package: package_name.to_string(),
                event,
                at,
            }],
            kb,
            config,
        };
        s.advance(clock);
        s
    }

    /// Rebuilds a session from its journal by replaying the recorded
    /// answers. Runs are deterministic, so the state matches the journal.
    pub fn replay(entries: &[JournalEntry], kb: Arc<Package>, config: ScenarioConfig) -> Result<Session, GatewayError> {
        let Some(JournalEntry::Created {
            session,
            package,
            event,
            at,
        }) = entries.first()
        else {
            return Err(GatewayError::Journal(
                "journal does not start with a created entry".into(),
            ));
        };
        let clock = FixedClock(at.clone());
        let mut s = Session::start(session.clone(), package, kb, event.clone(), config, &clock);
        for e in &entries[1..] {
            if let JournalEntry::Answer {
                question_id,
                answer,
                at,
            } = e
            {
                s.submit(*question_id, answer.clone(), &FixedClock(at.clone()))?;
            }
        }
        // Keep the journal as written. If the process stopped before the
        // outcome of the last step was recorded, add the re-derived one.
        let derived = std::mem::take(&mut s.journal);
        s.journal = entries.to_vec();
        let settled = matches!(
            entries.last(),
            Some(JournalEntry::Question { .. } | JournalEntry::Result { .. })
        );
        if !settled {
            let start = derived
                .iter()
                .rposition(|e| matches!(e, JournalEntry::Answer { .. } | JournalEntry::Created { .. }))
                .map_or(0, |i| i + 1);
            s.journal.extend_from_slice(&derived[start..]);
        }
        Ok(s)
    }

    fn set_state(&mut self, next: SessionState) {
        debug_assert!(self.state.can_move_to(next), "{} -> {}", self.state, next);
        self.state = next;
        self.history.push(next);
    }

    fn advance(&mut self, clock: &dyn Clock) {
        let answers: Vec<Answer> = self.answers.iter().map(|a| a.answer.clone()).collect();
        match run_scenario(&self.event, &self.kb, &answers, &self.config) {
            Ok(ScenarioOutcome::Done { report }) => {
                self.trace = Some(report.goal_tree.clone());
                self.report = Some(*report);
                self.pending = None;
                self.set_state(SessionState::Done);
                self.journal.push(JournalEntry::Result {
                    state: SessionState::Done,
                    error: None,
                    at: clock.now(),
                });
            }
            Ok(ScenarioOutcome::Awaiting { question, trace, .. }) => {
                self.trace = Some(trace);
                self.journal.push(JournalEntry::Question {
                    question: question.clone(),
                    at: clock.now(),
                });
                self.pending = Some(question);
                self.set_state(SessionState::AwaitingAnswer);
            }
            Err(e) => {
                self.trace = match &e {
                    ScenarioError::Run { trace, .. } => Some((**trace).clone()),
                    ScenarioError::NoProof { trace } => trace.as_deref().cloned(),
                    _ => None,
                };
                self.pending = None;
                self.error = Some(e.to_string());
                self.set_state(SessionState::Failed);
                self.journal.push(JournalEntry::Result {
                    state: SessionState::Failed,
                    error: Some(e.to_string()),
                    at: clock.now(),
                });
            }
        }
    }

    /// Answers the pending question and resumes the run.
    pub fn submit(&mut self, question_id: u64, answer: Answer, clock: &dyn Clock) -> Result<(), GatewayError> {
        if self.state != SessionState::AwaitingAnswer {
            return Err(GatewayError::NotAwaiting(self.state));
        }
        let q = self.pending.as_ref().ok_or(GatewayError::NotAwaiting(self.state))?;
        if q.id != question_id {
            return Err(GatewayError::StaleQuestion {
                expected: q.id,
                got: question_id,
            });
        }
        let coerced = answer.coerce(q.kind).ok_or_else(|| GatewayError::AnswerType {
            expected: q.kind,
            answer: answer.to_string(),
        })?;
        let at = clock.now();
        self.journal.push(JournalEntry::Answer {
            question_id,
            answer: coerced.clone(),
            at: at.clone(),
        });
        self.answers.push(AnswerRecord {
            session_id: self.id.clone(),
            question_id,
            answer: coerced,
            timestamp: at,
        });
        self.pending = None;
        self.set_state(SessionState::Running);
        self.advance(clock);
        Ok(())
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn pending_question(&self) -> Option<&Question> {
        self.pending.as_ref()
    }

    pub fn report(&self) -> Option<&ScenarioReport> {
        self.report.as_ref()
    }

    pub fn trace(&self) -> Option<&TraceNode> {
        self.trace.as_ref()
    }

    pub fn error(&self) -> Option<&str> {
        self.error.as_deref()
    }

    pub fn answers(&self) -> &[AnswerRecord] {
        &self.answers
    }

    pub fn history(&self) -> &[SessionState] {
        &self.history
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            package: self.package.clone(),
            state: self.state,
            event: self.event.clone(),
            created_at: self.created_at.clone(),
            pending_question: self.pending.clone(),
            answers: self.answers.clone(),
            report: self.report.clone(),
            error: self.error.clone(),
        }
    }
}
