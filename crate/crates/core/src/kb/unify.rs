use std::collections::BTreeMap;
use std::fmt;

use super::term::{Atom, Term};

/// Variable bindings. Stored in triangular form while solving; [`Substitution::normalized`]
/// produces the idempotent form in which no bound variable occurs in any binding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Binds without checks. Callers must ensure `var` is unbound and the
    /// binding passes the occurs check.
    pub(crate) fn bind(&mut self, var: String, term: Term) {
        self.bindings.insert(var, term);
    }

    /// Follows variable chains until a non-variable or an unbound variable.
    pub fn walk<'a>(&'a self, term: &'a Term) -> &'a Term {
        let mut cur = term;
        while let Term::Var(v) = cur {
            match self.bindings.get(v) {
                Some(t) => cur = t,
                None => break,
            }
        }
        cur
    }

    /// Fully applies the substitution.
    pub fn apply(&self, term: &Term) -> Term {
        match self.walk(term) {
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| self.apply(a)).collect()),
            t => t.clone(),
        }
    }

    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom::new(atom.pred.clone(), atom.args.iter().map(|a| self.apply(a)).collect())
    }

    /// Idempotent form: every binding fully resolved.
    pub fn normalized(&self) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .keys()
                .map(|k| (k.clone(), self.apply(&Term::Var(k.clone()))))
                .collect(),
        }
    }

    /// Resolved bindings restricted to the given variables (unbound ones omitted).
    pub fn restrict(&self, vars: &[String]) -> Substitution {
        let mut out = Substitution::new();
        for v in vars {
            let t = self.apply(&Term::Var(v.clone()));
            if t != Term::Var(v.clone()) {
                out.bind(v.clone(), t);
            }
        }
        out
    }

    fn occurs(&self, var: &str, term: &Term) -> bool {
        match self.walk(term) {
            Term::Var(v) => v == var,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(var, a)),
            _ => false,
        }
    }

    fn unify_in_place(&mut self, a: &Term, b: &Term) -> bool {
        let mut trail = Vec::new();
        self.unify_trailed(a, b, &mut trail)
    }

    /// Unifies in place, recording every newly bound variable in `trail` so
    /// the caller can undo the bindings with [`Substitution::unbind`]. On
    /// failure some bindings may already have been made.
    pub(crate) fn unify_trailed(&mut self, a: &Term, b: &Term, trail: &mut Vec<String>) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if self.occurs(x, t) {
                    return false;
                }
                self.bind(x.clone(), t.clone());
                trail.push(x.clone());
                true
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify_trailed(x, y, trail))
            }
            (x, y) => x == y,
        }
    }

    pub(crate) fn unbind(&mut self, var: &str) {
        self.bindings.remove(var);
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        write!(f, "}}")
    }
}

/// Most general unifier of two terms extending `s`, with occurs check.
pub fn unify(a: &Term, b: &Term, s: &Substitution) -> Option<Substitution> {
    let mut out = s.clone();
    out.unify_in_place(a, b).then_some(out)
}

/// Unifies two atoms: same predicate, same arity, pairwise unifiable arguments.
pub fn unify_atoms(a: &Atom, b: &Atom, s: &Substitution) -> Option<Substitution> {
    if a.pred != b.pred || a.args.len() != b.args.len() {
        return None;
    }
    let mut out = s.clone();
    a.args
        .iter()
        .zip(&b.args)
        .all(|(x, y)| out.unify_in_place(x, y))
        .then_some(out)
}
