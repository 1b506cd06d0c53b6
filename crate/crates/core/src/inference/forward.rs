use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kb::PropRule;

/// Least fixpoint of the rules over `known`. Returns only the newly derived
/// propositions.
pub fn forward_chain(rules: &[PropRule], known: &BTreeSet<String>) -> BTreeSet<String> {
    let mut all = known.clone();
    let mut fired = vec![false; rules.len()];
    loop {
        let mut changed = false;
        for (i, r) in rules.iter().enumerate() {
            if fired[i] || !r.antecedent_names().all(|a| all.contains(a)) {
                continue;
            }
            fired[i] = true;
            changed |= all.insert(r.consequent.clone());
        }
        if !changed {
            break;
        }
    }
    all.difference(known).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingQuestion {
    pub prop: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueState {
    pub true_set: BTreeSet<String>,
    pub false_set: BTreeSet<String>,
    pub pending: Option<PendingQuestion>,
    pub derived: BTreeSet<String>,
}

impl DialogueState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Answers the pending question. Returns the proposition answered, or
    /// `None` when nothing was pending.
    pub fn answer(&mut self, yes: bool) -> Option<String> {
        let q = self.pending.take()?;
        self.set(&q.prop, yes);
        Some(q.prop)
    }

    /// Records a known value, moving the proposition out of the other set.
    pub fn set(&mut self, prop: &str, value: bool) {
        let (add, remove) = if value {
            (&mut self.true_set, &mut self.false_set)
        } else {
            (&mut self.false_set, &mut self.true_set)
        };
        remove.remove(prop);
        add.insert(prop.to_string());
        if self.pending.as_ref().is_some_and(|p| p.prop == prop) {
            self.pending = None;
        }
    }

    pub fn is_answered(&self, prop: &str) -> bool {
        self.true_set.contains(prop) || self.false_set.contains(prop)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DialogueOutcome {
    Proven,
    Refuted { unprovable: bool },
    Question(PendingQuestion),
}

/// Question text per proposition: the first one given anywhere in the rules.
fn question_texts(rules: &[PropRule]) -> BTreeMap<&str, &str> {
    let mut out = BTreeMap::new();
    for r in rules {
        for a in &r.antecedents {
            if let Some(q) = &a.question {
                out.entry(a.name.as_str()).or_insert(q.as_str());
            }
        }
    }
    out
}

fn derivable(rules: &[PropRule], base: &BTreeSet<String>, target: &str) -> bool {
    base.contains(target) || forward_chain(rules, base).contains(target)
}

/// One move of the operator dialogue for `target`.
///
/// The answers so far are forward chained. If that settles the target the
/// outcome is final. Otherwise the engine looks for the unanswered askable
/// propositions that could still make the target true, collected depth-first
/// over the target's rules in body order, drops any that are not needed for
/// the others to prove the target, and asks the first one left. Every
/// question asked can therefore flip the outcome, and each is asked at most
/// once.
pub fn dialogue_step(rules: &[PropRule], state: &DialogueState, target: &str) -> (DialogueState, DialogueOutcome) {
    let mut st = state.clone();
    st.pending = None;
    st.derived = forward_chain(rules, &st.true_set);
    if st.true_set.contains(target) || st.derived.contains(target) {
        return (st, DialogueOutcome::Proven);
    }
    if st.false_set.contains(target) {
        return (st, DialogueOutcome::Refuted { unprovable: false });
    }

    let questions = question_texts(rules);
    let open: BTreeSet<String> = questions
        .keys()
        .filter(|p| !st.is_answered(p))
        .map(|p| p.to_string())
        .collect();

    // Everything that could still become true if every open question got "yes".
    let mut possible: BTreeSet<String> = st.true_set.union(&open).cloned().collect();
    possible.extend(forward_chain(rules, &possible));
    for f in &st.false_set {
        possible.remove(f);
    }
    if !possible.contains(target) {
        let unprovable = !questions.contains_key(target) && !rules.iter().any(|r| r.consequent == target);
        return (st, DialogueOutcome::Refuted { unprovable });
    }

    let mut order = Vec::new();
    let mut seen = BTreeSet::new();
    collect_open(rules, &open, &possible, target, &mut seen, &mut order);

    // Greedy minimization, latest first, so earlier questions are preferred.
    let mut needed = order.clone();
    for a in order.iter().rev() {
        let mut base = st.true_set.clone();
        base.extend(needed.iter().filter(|x| *x != a).cloned());
        if derivable(rules, &base, target) {
            needed.retain(|x| x != a);
        }
    }

    let prop = needed
        .first()
        .cloned()
        .expect("a possible target needs at least one open question");
    let q = PendingQuestion {
        text: questions[prop.as_str()].to_string(),
        prop,
    };
    st.pending = Some(q.clone());
    (st, DialogueOutcome::Question(q))
}

/// Open askable propositions under `p`, depth-first over rules that can still
/// fire, in rule and body order.
fn collect_open(
    rules: &[PropRule],
    open: &BTreeSet<String>,
    possible: &BTreeSet<String>,
    p: &str,
    seen: &mut BTreeSet<String>,
    out: &mut Vec<String>,
) {
    if !seen.insert(p.to_string()) {
        return;
    }
    if open.contains(p) {
        out.push(p.to_string());
    }
    for r in rules.iter().filter(|r| r.consequent == p) {
        if r.antecedent_names().all(|a| possible.contains(a)) {
            for a in r.antecedent_names() {
                collect_open(rules, open, possible, a, seen, out);
            }
        }
    }
}
