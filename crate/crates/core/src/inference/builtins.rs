use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::decision::{self, BayesInput, Criterion, DecisionTable};
use crate::diagnostics::{self, ExperienceTable, LogicVector, Outcome, PotentialModel};
use crate::kb::{Atom, FactStore, KnowledgeBase, NumericTable, Term};
use crate::prediction::{self, ExogenousScenario};

use super::expr::eval_term;
use super::{Answer, AnswerKind, Question};

/// Argument mode: `In` arguments must be bound when the builtin is called.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    In,
    Out,
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinError {
    /// A genuine error, reported with the predicate name.
    Fail(String),
    /// Needs an operator answer that has not been supplied yet.
    Suspend(Question),
}

macro_rules! fail_from {
    ($($t:ty),*) => {$(
        impl From<$t> for BuiltinError {
            fn from(e: $t) -> Self {
                BuiltinError::Fail(e.to_string())
            }
        }
    )*};
}

fail_from!(
    super::ExprError,
    diagnostics::DiagnosticsError,
    prediction::PredictionError,
    decision::DecisionError
);

/// Returns the argument tuples to unify with the call, one per solution;
/// an empty vector means the call fails.
type StdFn = fn(&[Term], &mut CallContext<'_>) -> Result<Vec<Vec<Term>>, BuiltinError>;

pub type BuiltinFn = dyn Fn(&[Term], &mut CallContext<'_>) -> Result<Vec<Vec<Term>>, BuiltinError> + Send + Sync;

#[derive(Clone)]
pub struct Builtin {
    pub name: String,
    pub arity: usize,
    pub modes: Vec<Mode>,
    pub handler: Arc<BuiltinFn>,
}

impl fmt::Debug for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} {:?}", self.name, self.arity, self.modes)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("builtin {0}/{1} already registered")]
    Duplicate(String, usize),
    #[error("{0}/{1}: {2} modes declared")]
    Modes(String, usize, usize),
}

#[derive(Debug, Clone, Default)]
pub struct BuiltinRegistry {
    map: BTreeMap<(String, usize), Builtin>,
    revision: u64,
}

impl BuiltinRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_builtin<F>(
        &mut self,
        name: &str,
        arity: usize,
        modes: &[Mode],
        handler: F,
    ) -> Result<u64, RegistryError>
    where
        F: Fn(&[Term], &mut CallContext<'_>) -> Result<Vec<Vec<Term>>, BuiltinError> + Send + Sync + 'static,
    {
        if modes.len() != arity {
            return Err(RegistryError::Modes(name.into(), arity, modes.len()));
        }
        let key = (name.to_string(), arity);
        if self.map.contains_key(&key) {
            return Err(RegistryError::Duplicate(name.into(), arity));
        }
        self.map.insert(
            key,
            Builtin {
                name: name.into(),
                arity,
                modes: modes.to_vec(),
                handler: Arc::new(handler),
            },
        );
        self.revision += 1;
        Ok(self.revision)
    }

    pub fn contains(&self, name: &str, arity: usize) -> bool {
        self.map.contains_key(&(name.to_string(), arity))
    }

    pub fn get(&self, name: &str, arity: usize) -> Option<&Builtin> {
        self.map.get(&(name.to_string(), arity))
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, usize)> {
        self.map.keys().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }
}

#[derive(Debug, Default)]
pub(crate) struct DialogueLog {
    pub answers: Vec<Answer>,
    pub asked: Vec<Question>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawArtifact {
    pub serial: u64,
    pub key: String,
    pub value: serde_json::Value,
}

/// What a builtin can see while it runs.
pub struct CallContext<'a> {
    pub kb: &'a KnowledgeBase,
    pub store: &'a FactStore,
    pub(crate) dialogue: &'a mut DialogueLog,
    pub(crate) artifacts: &'a mut Vec<RawArtifact>,
    pub(crate) serial: u64,
}

impl CallContext<'_> {
    /// The answer to `text`, asking it if it has not been met before.
    pub fn ask(&mut self, text: &str, kind: AnswerKind) -> Result<Answer, BuiltinError> {
        let idx = match self
            .dialogue
            .asked
            .iter()
            .position(|q| q.text == text && q.kind == kind)
        {
            Some(i) => i,
            None => {
                self.dialogue.asked.push(Question {
                    id: self.dialogue.asked.len() as u64 + 1,
                    text: text.to_string(),
                    kind,
                });
                self.dialogue.asked.len() - 1
            }
        };
        match self.dialogue.answers.get(idx) {
            Some(a) => a.coerce(kind).ok_or_else(|| {
                BuiltinError::Fail(format!("answer {} ({a}) does not fit question {:?}", idx + 1, text))
            }),
            None => Err(BuiltinError::Suspend(self.dialogue.asked[idx].clone())),
        }
    }

    /// Attaches data to the current goal; kept only if the goal ends up on
    /// the proof.
    pub fn emit(&mut self, key: &str, value: serde_json::Value) {
        self.artifacts.push(RawArtifact {
            serial: self.serial,
            key: key.to_string(),
            value,
        });
    }

    /// Ground facts of `pred/arity` from the knowledge base, then the store.
    pub fn facts(&self, pred: &str, arity: usize) -> Vec<Atom> {
        let mut out: Vec<Atom> = self.kb.facts(pred, arity).cloned().collect();
        out.extend(self.store.relation(pred).iter().filter(|a| a.arity() == arity).cloned());
        out
    }

    pub fn table(&self, name: &Term) -> Result<&NumericTable, BuiltinError> {
        let n = name_of(name)?;
        self.store
            .table(n)
            .ok_or_else(|| BuiltinError::Fail(format!("no table named {n}")))
    }
}

pub(crate) fn name_of(t: &Term) -> Result<&str, BuiltinError> {
    t.as_sym()
        .or_else(|| t.as_text())
        .ok_or_else(|| BuiltinError::Fail(format!("name expected, got {t}")))
}

pub(crate) fn num_of(t: &Term) -> Result<f64, BuiltinError> {
    t.as_num()
        .ok_or_else(|| BuiltinError::Fail(format!("number expected, got {t}")))
}

pub(crate) fn nums_of(t: &Term) -> Result<Vec<f64>, BuiltinError> {
    t.as_list()
        .ok_or_else(|| BuiltinError::Fail(format!("list expected, got {t}")))?
        .iter()
        .map(num_of)
        .collect()
}

pub(crate) fn list_of(t: &Term) -> Result<Vec<Term>, BuiltinError> {
    t.as_list()
        .ok_or_else(|| BuiltinError::Fail(format!("proper list expected, got {t}")))
}

fn num_list(v: &[f64]) -> Term {
    Term::list(v.iter().map(|x| Term::num(*x)))
}

fn one(args: Vec<Term>) -> Result<Vec<Vec<Term>>, BuiltinError> {
    Ok(vec![args])
}

fn test(ok: bool, args: &[Term]) -> Result<Vec<Vec<Term>>, BuiltinError> {
    Ok(if ok { vec![args.to_vec()] } else { vec![] })
}

fn experience_table(t: &NumericTable) -> Result<ExperienceTable, BuiltinError> {
    Ok(ExperienceTable::from_table(t)?)
}

fn compare(args: &[Term], op: fn(f64, f64) -> bool) -> Result<Vec<Vec<Term>>, BuiltinError> {
    let a = eval_term(&args[0])?;
    let b = eval_term(&args[1])?;
    test(op(a, b), args)
}

/// The standard predicates: database selection, arithmetic, comparison,
/// lists, dialogue, and the analytic kernels.
pub fn standard_registry() -> BuiltinRegistry {
    use Mode::*;
    let mut r = BuiltinRegistry::new();
    let mut add = |name: &str, modes: &[Mode], f: StdFn| {
        r.register_builtin(name, modes.len(), modes, f)
            .expect("standard builtins are distinct");
    };

    add("select", &[In, Any, Out], |a, ctx| {
        let rel = name_of(&a[0])?;
        let pattern =
            Atom::from_term(&a[1]).ok_or_else(|| BuiltinError::Fail(format!("atom pattern expected, got {}", a[1])))?;
        if pattern.pred != rel {
            return Ok(vec![]);
        }
        Ok(ctx
            .store
            .match_facts(&pattern)
            .into_iter()
            .map(|(f, _)| vec![a[0].clone(), f.to_term(), f.to_term()])
            .collect())
    });
    add("eval", &[In, Out], |a, _| {
        one(vec![a[0].clone(), Term::num(eval_term(&a[0])?)])
    });
    add("lt", &[In, In], |a, _| compare(a, |x, y| x < y));
    add("le", &[In, In], |a, _| compare(a, |x, y| x <= y));
    add("gt", &[In, In], |a, _| compare(a, |x, y| x > y));
    add("ge", &[In, In], |a, _| compare(a, |x, y| x >= y));
    add("eq", &[In, In], |a, _| match (eval_term(&a[0]), eval_term(&a[1])) {
        (Ok(x), Ok(y)) => test(x == y, a),
        _ => test(a[0] == a[1], a),
    });
    add("ne", &[In, In], |a, _| match (eval_term(&a[0]), eval_term(&a[1])) {
        (Ok(x), Ok(y)) => test(x != y, a),
        _ => test(a[0] != a[1], a),
    });
    add("length", &[In, Out], |a, _| {
        let n = list_of(&a[0])?.len();
        one(vec![a[0].clone(), Term::num(n as f64)])
    });
    add("nth", &[In, In, Out], |a, _| {
        let i = num_of(&a[0])?;
        let items = list_of(&a[1])?;
        if i.fract() != 0.0 || i < 1.0 || i as usize > items.len() {
            return Ok(vec![]);
        }
        one(vec![a[0].clone(), a[1].clone(), items[i as usize - 1].clone()])
    });
    add("append", &[Any, Any, Any], |a, _| {
        if let (Some(x), Some(y)) = (a[0].as_list(), a[1].as_list()) {
            let joined = Term::list(x.into_iter().chain(y));
            return one(vec![a[0].clone(), a[1].clone(), joined]);
        }
        if let Some(z) = a[2].as_list() {
            return Ok((0..=z.len())
                .map(|k| {
                    vec![
                        Term::list(z[..k].iter().cloned()),
                        Term::list(z[k..].iter().cloned()),
                        a[2].clone(),
                    ]
                })
                .collect());
        }
        Err(BuiltinError::Fail(
            "first two arguments or the third must be proper lists".into(),
        ))
    });
    add("member", &[Any, In], |a, _| {
        Ok(list_of(&a[1])?.into_iter().map(|x| vec![x, a[1].clone()]).collect())
    });
    add("ask", &[In, Out], |a, ctx| {
        let q = name_of(&a[0])?;
        let Answer::Bool(b) = ctx.ask(q, AnswerKind::YesNo)? else {
            unreachable!("coerced to yes/no")
        };
        one(vec![a[0].clone(), Term::sym(if b { "yes" } else { "no" })])
    });
    add("ask_number", &[In, Out], |a, ctx| {
        let q = name_of(&a[0])?;
        let Answer::Number(n) = ctx.ask(q, AnswerKind::Number)? else {
            unreachable!("coerced to number")
        };
        one(vec![a[0].clone(), Term::num(n)])
    });
    add("ask_text", &[In, Out], |a, ctx| {
        let q = name_of(&a[0])?;
        let answer = ctx.ask(q, AnswerKind::Text)?;
        one(vec![a[0].clone(), Term::str(answer.to_string())])
    });
    add("classify", &[In, In, Out], classify);
    add("predict", &[In, In, Out], predict);
    add("choose", &[In, In, Any, Out], choose);
    add("bayes", &[In, In, Out], |a, _| {
        let input = BayesInput {
            hypotheses: vec![],
            priors: nums_of(&a[0])?,
            likelihoods: nums_of(&a[1])?,
            evidence: String::new(),
        };
        let post = decision::bayes_posterior(&input)?;
        one(vec![a[0].clone(), a[1].clone(), num_list(&post)])
    });
    r
}

/// `classify(Method, Vector, Class)`: Method is `plane(T)`, `surface(T, D)`,
/// `freq(T)` or `potential(T)` over the experience table `T` in the store.
fn classify(a: &[Term], ctx: &mut CallContext<'_>) -> Result<Vec<Vec<Term>>, BuiltinError> {
    let Term::Compound(method, margs) = &a[0] else {
        return Err(BuiltinError::Fail(format!("classifier expected, got {}", a[0])));
    };
    let table = experience_table(ctx.table(&margs[0])?)?;
    let x = LogicVector::from_f64(&nums_of(&a[1])?)?;
    let decision = match (method.as_str(), margs.len()) {
        ("plane", 1) => {
            let m = diagnostics::fit_separating_plane(&table, diagnostics::DEFAULT_MARGIN)?;
            diagnostics::classify_geometric(&m, &x)?
        }
        ("surface", 2) => {
            let d = num_of(&margs[1])?;
            let m = diagnostics::fit_separating_surface(&table, d as u32, diagnostics::DEFAULT_MARGIN)?;
            diagnostics::classify_geometric(&m, &x)?
        }
        ("freq" | "frequencies", 1) => {
            let m = diagnostics::fit_frequencies(&table)?;
            diagnostics::classify_frequencies(&m, &x)?
        }
        ("potential", 1) => {
            let m = PotentialModel::fit(&table, diagnostics::DEFAULT_POTENTIAL_EPS, diagnostics::DEFAULT_MARGIN)?;
            diagnostics::classify_potential(&m, &x)?
        }
        _ => return Err(BuiltinError::Fail(format!("unknown classifier {}", a[0]))),
    };
    let class = match decision.outcome {
        Outcome::Class(c) => Term::num(c as f64),
        Outcome::Undecided => Term::sym("undecided"),
    };
    ctx.emit(
        "classification",
        serde_json::json!({ "method": method, "input": x.components(), "outcome": decision.outcome, "scores": decision.scores }),
    );
    one(vec![a[0].clone(), a[1].clone(), class])
}

/// `predict(Model, Input, Y)`: `regression(T[, D])` with an input list,
/// `dynamical(T, Order)` with a horizon (hold-last exogenous values), or
/// `discretized(T[, K])` with a logic vector.
fn predict(a: &[Term], ctx: &mut CallContext<'_>) -> Result<Vec<Vec<Term>>, BuiltinError> {
    let Term::Compound(kind, margs) = &a[0] else {
        return Err(BuiltinError::Fail(format!("model expected, got {}", a[0])));
    };
    let table = ctx.table(&margs[0])?;
    let y = match (kind.as_str(), margs.len()) {
        ("regression", 1 | 2) => {
            let degree = margs.get(1).map(num_of).transpose()?.unwrap_or(1.0) as u32;
            let samples = prediction::regression_samples(table)?;
            let (m, _) = prediction::fit_regression(&samples, degree, true)?;
            let p = prediction::predict_regression(&m, &nums_of(&a[1])?)?;
            ctx.emit(
                "prediction",
                serde_json::json!({ "model": "regression", "value": p.value, "extrapolated": p.extrapolated }),
            );
            Term::num(p.value)
        }
        ("dynamical", 2) => {
            let order = num_of(&margs[1])? as usize;
            let h = num_of(&a[1])?;
            let (ys, exo) = prediction::series_from_table(table)?;
            let (m, _) = prediction::fit_dynamical(&ys, &exo, order, false)?;
            let last: Vec<f64> = exo.iter().map(|s| *s.last().unwrap_or(&0.0)).collect();
            let out = prediction::simulate_dynamical(&m, &ys, &ExogenousScenario::HoldLast(last), h as usize)?;
            ctx.emit("prediction", serde_json::json!({ "model": "dynamical", "series": out }));
            num_list(&out)
        }
        ("discretized", 1 | 2) => {
            let k = margs
                .get(1)
                .map(num_of)
                .transpose()?
                .unwrap_or(prediction::DEFAULT_SEGMENTS as f64) as usize;
            let samples = prediction::discretized_samples(table)?;
            let d = prediction::fit_discretized(&samples, k, diagnostics::DEFAULT_POTENTIAL_EPS)?;
            let x = LogicVector::from_f64(&nums_of(&a[1])?)?;
            let p = prediction::predict_discretized(&d, &x)?;
            ctx.emit(
                "prediction",
                serde_json::json!({ "model": "discretized", "value": p.value, "segment": p.segment }),
            );
            Term::num(p.value)
        }
        _ => return Err(BuiltinError::Fail(format!("unknown model {}", a[0]))),
    };
    one(vec![a[0].clone(), a[1].clone(), y])
}

/// Builds a decision table from `preference(T, Variant, Situation, V)` facts,
/// falling back to a numeric table named `T`. Probabilities come from the
/// third argument when it is a list, else from `probability(T, Situation, P)`.
pub(crate) fn decision_table(ctx: &CallContext<'_>, name: &Term, probs: &Term) -> Result<DecisionTable, BuiltinError> {
    let prefs: Vec<Atom> = ctx
        .facts("preference", 4)
        .into_iter()
        .filter(|f| &f.args[0] == name)
        .collect();
    let mut table = if prefs.is_empty() {
        let t = ctx.table(name)?;
        DecisionTable::new(
            (1..=t.rows.len()).map(|i| format!("v{i}")).collect(),
            t.columns.clone(),
            t.rows.clone(),
            None,
        )?
    } else {
        let mut variants: Vec<String> = Vec::new();
        let mut situations: Vec<String> = Vec::new();
        for f in &prefs {
            let v = f.args[1].to_string();
            let s = f.args[2].to_string();
            if !variants.contains(&v) {
                variants.push(v);
            }
            if !situations.contains(&s) {
                situations.push(s);
            }
        }
        let mut values = vec![vec![f64::NAN; situations.len()]; variants.len()];
        for f in &prefs {
            let i = variants.iter().position(|v| *v == f.args[1].to_string()).unwrap_or(0);
            let j = situations.iter().position(|s| *s == f.args[2].to_string()).unwrap_or(0);
            values[i][j] = num_of(&f.args[3])?;
        }
        if values.iter().flatten().any(|v| v.is_nan()) {
            return Err(BuiltinError::Fail(format!("decision table {name} has missing cells")));
        }
        DecisionTable::new(variants, situations, values, None)?
    };
    let p = if probs.as_list().is_some() && !probs.is_nil() {
        Some(nums_of(probs)?)
    } else {
        let facts: Vec<Atom> = ctx
            .facts("probability", 3)
            .into_iter()
            .filter(|f| &f.args[0] == name)
            .collect();
        if facts.is_empty() {
            None
        } else {
            let mut p = vec![0.0; table.situations.len()];
            for f in facts {
                let s = f.args[1].to_string();
                let j = table
                    .situations
                    .iter()
                    .position(|x| *x == s)
                    .ok_or_else(|| BuiltinError::Fail(format!("probability for unknown situation {s}")))?;
                p[j] = num_of(&f.args[2])?;
            }
            Some(p)
        }
    };
    table.probabilities = p;
    table.validate()?;
    Ok(table)
}

/// `choose(Table, Criterion, Probabilities, Variant)`.
fn choose(a: &[Term], ctx: &mut CallContext<'_>) -> Result<Vec<Vec<Term>>, BuiltinError> {
    let crit = name_of(&a[1])?;
    let criterion = Criterion::parse(crit).ok_or_else(|| BuiltinError::Fail(format!("unknown criterion {crit}")))?;
    let table = decision_table(ctx, &a[0], &a[2])?;
    let r = decision::choose(&table, criterion)?;
    ctx.emit(
        "choice",
        serde_json::json!({
            "table": a[0].to_string(),
            "criterion": criterion,
            "variants": table.variants,
            "values": r.values,
            "chosen": r.variant,
            "value": r.value,
        }),
    );
    let probs = table.probabilities.as_deref().map(num_list).unwrap_or_else(Term::nil);
    let variant = crate::lang::parse_atom(&r.variant)
        .map(|at| at.to_term())
        .unwrap_or_else(|_| Term::sym(r.variant.clone()));
    one(vec![a[0].clone(), a[1].clone(), probs, variant])
}
