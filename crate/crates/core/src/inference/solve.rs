//! SLD resolution: depth-first, left-to-right, clauses in listed order,
//! chronological backtracking. Bindings and goal-tree changes are recorded
//! on a trail so choice points only store lengths.

use std::collections::HashMap;
use std::sync::Arc;

use crate::kb::{Atom, FactStore, HornClause, KnowledgeBase, Substitution, Term};

use super::builtins::{BuiltinError, BuiltinRegistry, CallContext, DialogueLog, Mode, RawArtifact};
use super::tree::{ClauseSource, GoalNode, GoalStatus, GoalTree};
use super::{Answer, Question, SolveError};

pub const DEFAULT_MAX_DEPTH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveLimits {
    pub max_depth: usize,
    pub max_solutions: Option<usize>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_depth: DEFAULT_MAX_DEPTH,
            max_solutions: None,
        }
    }
}

/// Data recorded by a builtin on the proof of a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// Goal-tree node of the builtin call.
    pub node: usize,
    pub key: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Bindings of the query's variables, fully resolved.
    pub subst: Substitution,
    pub tree: GoalTree,
    /// Artifacts emitted by builtins on this proof, in emission order.
    pub artifacts: Vec<Artifact>,
}

impl Solution {
    pub fn artifacts_named<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Artifact> + 'a {
        self.artifacts.iter().filter(move |a| a.key == key)
    }
}

#[derive(Debug, Clone)]
struct NodeRec {
    call: Atom,
    parent: Option<usize>,
    depth: usize,
    children: Vec<usize>,
    clause: Option<usize>,
    source: Option<ClauseSource>,
    visit: Option<usize>,
    serial: u64,
}

type Goals = Option<Arc<GoalCell>>;

#[derive(Debug)]
struct GoalCell {
    node: usize,
    next: Goals,
}

enum TrailEntry {
    Bind(String),
    Visited(usize),
    Expanded(usize),
}

#[derive(Debug, Clone, Copy)]
enum Candidate {
    Kb(usize),
    Store(usize),
}

enum Alternatives {
    Clauses(Arc<Vec<Candidate>>),
    Builtin(Arc<Vec<Vec<Term>>>),
}

impl Alternatives {
    fn len(&self) -> usize {
        match self {
            Alternatives::Clauses(c) => c.len(),
            Alternatives::Builtin(b) => b.len(),
        }
    }
}

struct ChoicePoint {
    node: usize,
    atom: Atom,
    alts: Alternatives,
    next: usize,
    trail_len: usize,
    arena_len: usize,
    goals: Goals,
    visits: usize,
}

/// Enumerates solutions of one query. Also an iterator over
/// `Result<Solution, SolveError>`.
pub struct Solver<'a> {
    kb: &'a KnowledgeBase,
    store: &'a FactStore,
    registry: &'a BuiltinRegistry,
    limits: SolveLimits,
    index: HashMap<(String, usize), Vec<usize>>,
    goal_vars: Vec<String>,
    subst: Substitution,
    nodes: Vec<NodeRec>,
    goals: Goals,
    visits: usize,
    trail: Vec<TrailEntry>,
    choices: Vec<ChoicePoint>,
    renames: u64,
    serials: u64,
    dialogue: DialogueLog,
    artifacts: Vec<RawArtifact>,
    failure: Option<GoalTree>,
    started: bool,
    exhausted: bool,
    found: usize,
    error: bool,
}

pub fn solve<'a>(
    kb: &'a KnowledgeBase,
    store: &'a FactStore,
    registry: &'a BuiltinRegistry,
    goal: &Atom,
    limits: SolveLimits,
) -> Result<Solver<'a>, SolveError> {
    Solver::new(kb, store, registry, goal, limits)
}

impl<'a> Solver<'a> {
    pub fn new(
        kb: &'a KnowledgeBase,
        store: &'a FactStore,
        registry: &'a BuiltinRegistry,
        goal: &Atom,
        limits: SolveLimits,
    ) -> Result<Self, SolveError> {
        let mut index: HashMap<(String, usize), Vec<usize>> = HashMap::new();
        for (i, c) in kb.clauses.iter().enumerate() {
            let key = c.head.key();
            if registry.contains(&key.0, key.1) {
                return Err(SolveError::Redefined(format!("{}/{}", key.0, key.1)));
            }
            index.entry(key).or_default().push(i);
        }
        let root = NodeRec {
            call: goal.clone(),
            parent: None,
            depth: 0,
            children: Vec::new(),
            clause: None,
            source: None,
            visit: None,
            serial: 0,
        };
        Ok(Solver {
            kb,
            store,
            registry,
            limits,
            index,
            goal_vars: goal.vars(),
            subst: Substitution::new(),
            nodes: vec![root],
            goals: Some(Arc::new(GoalCell { node: 0, next: None })),
            visits: 0,
            trail: Vec::new(),
            choices: Vec::new(),
            renames: 0,
            serials: 1,
            dialogue: DialogueLog::default(),
            artifacts: Vec::new(),
            failure: None,
            started: false,
            exhausted: false,
            found: 0,
            error: false,
        })
    }

    /// Answers consumed by dialogue builtins in the order questions arise.
    pub fn with_answers(mut self, answers: Vec<Answer>) -> Self {
        self.dialogue.answers = answers;
        self
    }

    /// Questions met so far, in order.
    pub fn questions(&self) -> &[Question] {
        &self.dialogue.asked
    }

    /// Number of supplied answers that have been used.
    pub fn answers_used(&self) -> usize {
        self.dialogue.asked.len().min(self.dialogue.answers.len())
    }

    /// Tree of the most recent failed goal, with its ancestors marked failed.
    pub fn failure_tree(&self) -> Option<&GoalTree> {
        self.failure.as_ref()
    }

    /// Snapshot of the current partial proof (pending goals marked pending).
    pub fn current_tree(&self) -> GoalTree {
        self.snapshot(None)
    }

    pub fn next_solution(&mut self) -> Result<Option<Solution>, SolveError> {
        if self.exhausted || self.error {
            return Ok(None);
        }
        if self.limits.max_solutions.is_some_and(|m| self.found >= m) {
            self.exhausted = true;
            return Ok(None);
        }
        if self.started && !self.backtrack()? {
            self.exhausted = true;
            return Ok(None);
        }
        self.started = true;
        loop {
            let Some(cell) = self.goals.clone() else {
                self.found += 1;
                return Ok(Some(self.build_solution()));
            };
            self.goals = cell.next.clone();
            let ok = match self.resolve(cell.node) {
                Ok(ok) => ok,
                Err(e) => {
                    self.error = true;
                    return Err(e);
                }
            };
            if !ok {
                self.record_failure(cell.node);
                if !self.backtrack()? {
                    self.exhausted = true;
                    return Ok(None);
                }
            }
        }
    }

    /// Collects all remaining solutions.
    pub fn collect_all(&mut self) -> Result<Vec<Solution>, SolveError> {
        let mut out = Vec::new();
        while let Some(s) = self.next_solution()? {
            out.push(s);
        }
        Ok(out)
    }

    fn resolve(&mut self, g: usize) -> Result<bool, SolveError> {
        let atom = self.subst.apply_atom(&self.nodes[g].call);
        if self.nodes[g].depth > self.limits.max_depth {
            return Err(SolveError::Depth {
                goal: atom.to_string(),
                limit: self.limits.max_depth,
            });
        }
        self.nodes[g].visit = Some(self.visits);
        self.nodes[g].serial = self.serials;
        self.serials += 1;
        self.visits += 1;
        self.trail.push(TrailEntry::Visited(g));

        let alts = if let Some(b) = self.registry.get(&atom.pred, atom.arity()) {
            for (i, m) in b.modes.iter().enumerate() {
                if *m == Mode::In && atom.args[i].is_var() {
                    return Err(SolveError::Mode {
                        pred: atom.pred.clone(),
                        arity: atom.arity(),
                        arg: i + 1,
                    });
                }
            }
            let mut ctx = CallContext {
                kb: self.kb,
                store: self.store,
                dialogue: &mut self.dialogue,
                artifacts: &mut self.artifacts,
                serial: self.nodes[g].serial,
            };
            match (b.handler)(&atom.args, &mut ctx) {
                Ok(tuples) => Alternatives::Builtin(Arc::new(tuples)),
                Err(BuiltinError::Suspend(q)) => return Err(SolveError::Suspended(q)),
                Err(BuiltinError::Fail(message)) => {
                    return Err(SolveError::Builtin {
                        pred: atom.pred.clone(),
                        arity: atom.arity(),
                        message,
                    })
                }
            }
        } else {
            let mut cands: Vec<Candidate> = self
                .index
                .get(&atom.key())
                .map(|v| v.iter().map(|&i| Candidate::Kb(i)).collect())
                .unwrap_or_default();
            cands.extend(
                self.store
                    .relation(&atom.pred)
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.arity() == atom.arity())
                    .map(|(i, _)| Candidate::Store(i)),
            );
            Alternatives::Clauses(Arc::new(cands))
        };
        let cp = ChoicePoint {
            node: g,
            atom,
            alts,
            next: 0,
            trail_len: self.trail.len(),
            arena_len: self.nodes.len(),
            goals: self.goals.clone(),
            visits: self.visits,
        };
        Ok(self.try_alternatives(cp))
    }

    /// Tries alternatives from `cp.next`; on success pushes the choice point
    /// back if any alternatives remain.
    fn try_alternatives(&mut self, mut cp: ChoicePoint) -> bool {
        while cp.next < cp.alts.len() {
            let i = cp.next;
            cp.next += 1;
            if self.attempt(&cp, i) {
                if cp.next < cp.alts.len() {
                    self.choices.push(cp);
                }
                return true;
            }
            self.restore(&cp);
        }
        false
    }

    fn attempt(&mut self, cp: &ChoicePoint, i: usize) -> bool {
        let g = cp.node;
        match &cp.alts {
            Alternatives::Builtin(tuples) => {
                if !self.unify_args(&cp.atom.args, &tuples[i]) {
                    return false;
                }
                self.expand(g, None, ClauseSource::Builtin, &[]);
                true
            }
            Alternatives::Clauses(cands) => match cands[i] {
                Candidate::Kb(ci) => {
                    let clause = self.rename(&self.kb.clauses[ci]);
                    if !self.unify_args(&cp.atom.args, &clause.head.args) {
                        return false;
                    }
                    self.expand(g, Some(ci), ClauseSource::Kb, &clause.body);
                    true
                }
                Candidate::Store(si) => {
                    let fact = &self.store.relation(&cp.atom.pred)[si];
                    let args = fact.args.clone();
                    if !self.unify_args(&cp.atom.args, &args) {
                        return false;
                    }
                    self.expand(g, Some(si), ClauseSource::Store, &[]);
                    true
                }
            },
        }
    }

    fn unify_args(&mut self, a: &[Term], b: &[Term]) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let mut bound = Vec::new();
        let ok = a.iter().zip(b).all(|(x, y)| self.subst.unify_trailed(x, y, &mut bound));
        self.trail.extend(bound.into_iter().map(TrailEntry::Bind));
        ok
    }

    fn expand(&mut self, g: usize, clause: Option<usize>, source: ClauseSource, body: &[Atom]) {
        let depth = self.nodes[g].depth + 1;
        let first = self.nodes.len();
        for a in body {
            self.nodes.push(NodeRec {
                call: a.clone(),
                parent: Some(g),
                depth,
                children: Vec::new(),
                clause: None,
                source: None,
                visit: None,
                serial: 0,
            });
        }
        let ids: Vec<usize> = (first..self.nodes.len()).collect();
        let n = &mut self.nodes[g];
        n.clause = clause;
        n.source = Some(source);
        n.children = ids.clone();
        self.trail.push(TrailEntry::Expanded(g));
        for id in ids.into_iter().rev() {
            self.goals = Some(Arc::new(GoalCell {
                node: id,
                next: self.goals.take(),
            }));
        }
    }

    fn rename(&mut self, c: &HornClause) -> HornClause {
        self.renames += 1;
        let suffix = self.renames;
        let map = |t: &Term| rename_term(t, suffix);
        HornClause {
            head: Atom::new(c.head.pred.clone(), c.head.args.iter().map(map).collect()),
            body: c
                .body
                .iter()
                .map(|a| Atom::new(a.pred.clone(), a.args.iter().map(map).collect()))
                .collect(),
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            match self.trail.pop() {
                Some(TrailEntry::Bind(v)) => self.subst.unbind(&v),
                Some(TrailEntry::Visited(g)) => self.nodes[g].visit = None,
                Some(TrailEntry::Expanded(g)) => {
                    let n = &mut self.nodes[g];
                    n.children.clear();
                    n.clause = None;
                    n.source = None;
                }
                None => break,
            }
        }
    }

    fn restore(&mut self, cp: &ChoicePoint) {
        self.undo_to(cp.trail_len);
        self.nodes.truncate(cp.arena_len);
        self.goals = cp.goals.clone();
        self.visits = cp.visits;
    }

    fn backtrack(&mut self) -> Result<bool, SolveError> {
        while let Some(cp) = self.choices.pop() {
            self.restore(&cp);
            let g = cp.node;
            if self.try_alternatives(cp) {
                return Ok(true);
            }
            self.record_failure(g);
        }
        Ok(false)
    }

    fn record_failure(&mut self, g: usize) {
        if self.nodes.len() <= 100_000 {
            self.failure = Some(self.snapshot(Some(g)));
        }
    }

    fn snapshot(&self, failed: Option<usize>) -> GoalTree {
        let n = self.nodes.len();
        let mut status = vec![GoalStatus::Pending; n];
        // Children always have larger ids than their parent.
        for i in (0..n).rev() {
            let r = &self.nodes[i];
            let resolved = r.visit.is_some() && r.source.is_some();
            if resolved && r.children.iter().all(|&c| status[c] == GoalStatus::Proven) {
                status[i] = GoalStatus::Proven;
            }
        }
        let mut cur = failed;
        while let Some(i) = cur {
            status[i] = GoalStatus::Failed;
            cur = self.nodes[i].parent;
        }
        GoalTree {
            nodes: self
                .nodes
                .iter()
                .zip(status)
                .map(|(r, status)| GoalNode {
                    atom: self.subst.apply_atom(&r.call),
                    status,
                    clause: r.clause,
                    source: r.source,
                    parent: r.parent,
                    children: r.children.clone(),
                    visit: r.visit,
                })
                .collect(),
        }
    }

    fn build_solution(&self) -> Solution {
        let tree = self.snapshot(None);
        let by_serial: HashMap<u64, usize> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, r)| r.visit.is_some())
            .map(|(i, r)| (r.serial, i))
            .collect();
        let artifacts = self
            .artifacts
            .iter()
            .filter_map(|a| {
                by_serial.get(&a.serial).map(|&node| Artifact {
                    node,
                    key: a.key.clone(),
                    value: a.value.clone(),
                })
            })
            .collect();
        Solution {
            subst: self.subst.restrict(&self.goal_vars),
            tree,
            artifacts,
        }
    }
}

impl Iterator for Solver<'_> {
    type Item = Result<Solution, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_solution().transpose()
    }
}

fn rename_term(t: &Term, suffix: u64) -> Term {
    match t {
        Term::Var(v) => {
            let base = v.split('#').next().unwrap_or(v);
            Term::Var(format!("{base}#{suffix}"))
        }
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| rename_term(a, suffix)).collect()),
        other => other.clone(),
    }
}
