use std::fmt;
use std::hash::{Hash, Hasher};

/// Functor used for list cells; `[]` is the empty list symbol.
pub const CONS: &str = ".";
pub const NIL: &str = "[]";

/// A logical term.
///
/// Variables are distinguished from constant symbols by a leading uppercase
/// letter in source text. Variables introduced by clause renaming carry a
/// `#<n>` suffix that the parser cannot produce, so they never collide with
/// user variables.
#[derive(Debug, Clone)]
pub enum Term {
    Sym(String),
    Num(f64),
    Str(String),
    Var(String),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn sym(s: impl Into<String>) -> Self {
        Term::Sym(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Var(s.into())
    }

    pub fn str(s: impl Into<String>) -> Self {
        Term::Str(s.into())
    }

    /// Builds a number term. Negative zero is normalized so equal numbers hash equally.
    pub fn num(n: f64) -> Self {
        Term::Num(if n == 0.0 { 0.0 } else { n })
    }

    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Self {
        Term::Compound(functor.into(), args)
    }

    pub fn nil() -> Self {
        Term::Sym(NIL.to_string())
    }

    pub fn cons(head: Term, tail: Term) -> Self {
        Term::Compound(CONS.to_string(), vec![head, tail])
    }

    pub fn list<I: IntoIterator<Item = Term>>(items: I) -> Self {
        Self::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail<I: IntoIterator<Item = Term>>(items: I, tail: Term) -> Self {
        let items: Vec<Term> = items.into_iter().collect();
        items.into_iter().rev().fold(tail, |acc, item| Term::cons(item, acc))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Sym(s) if s == NIL)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Term::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Term::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// Symbol or string contents.
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Term::Sym(s) | Term::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Elements of a proper list, or `None` for anything else (including partial lists).
    pub fn as_list(&self) -> Option<Vec<Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                t if t.is_nil() => return Some(out),
                Term::Compound(f, args) if f == CONS && args.len() == 2 => {
                    out.push(args[0].clone());
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Variables in first-occurrence order, without duplicates.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    /// Nesting depth: atomic terms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Compound(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Sym(a), Term::Sym(b)) => a == b,
            (Term::Num(a), Term::Num(b)) => a.to_bits() == b.to_bits() || a == b,
            (Term::Str(a), Term::Str(b)) => a == b,
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Compound(f, a), Term::Compound(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Term::Sym(s) | Term::Str(s) | Term::Var(s) => s.hash(state),
            Term::Num(n) => {
                let n = if *n == 0.0 { 0.0 } else { *n };
                n.to_bits().hash(state)
            }
            Term::Compound(f, args) => {
                f.hash(state);
                args.hash(state);
            }
        }
    }
}

/// True for identifiers that may be written unquoted as constant symbols.
pub fn is_plain_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str, quote: char) -> fmt::Result {
    write!(f, "{quote}")?;
    for c in s.chars() {
        match c {
            '\\' => write!(f, "\\\\")?,
            '\n' => write!(f, "\\n")?,
            '\t' => write!(f, "\\t")?,
            c if c == quote => write!(f, "\\{c}")?,
            c => write!(f, "{c}")?,
        }
    }
    write!(f, "{quote}")
}

pub(crate) fn write_symbol(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_plain_symbol(s) || s == NIL {
        write!(f, "{s}")
    } else {
        write_quoted(f, s, '\'')
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) => write_symbol(f, s),
            Term::Num(n) => write!(f, "{n}"),
            Term::Str(s) => write_quoted(f, s, '"'),
            Term::Var(v) => write!(f, "{v}"),
            Term::Compound(functor, args) if functor == CONS && args.len() == 2 => {
                write!(f, "[{}", args[0])?;
                let mut tail = &args[1];
                loop {
                    match tail {
                        Term::Compound(g, a) if g == CONS && a.len() == 2 => {
                            write!(f, ", {}", a[0])?;
                            tail = &a[1];
                        }
                        t if t.is_nil() => break,
                        t => {
                            write!(f, " | {t}")?;
                            break;
                        }
                    }
                }
                write!(f, "]")
            }
            Term::Compound(functor, args) => {
                write_symbol(f, functor)?;
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A predicate applied to arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn key(&self) -> (String, usize) {
        (self.pred.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    /// The atom viewed as a term (`p` for zero arity, `p(..)` otherwise).
    pub fn to_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Sym(self.pred.clone())
        } else {
            Term::Compound(self.pred.clone(), self.args.clone())
        }
    }

    pub fn from_term(term: &Term) -> Option<Atom> {
        match term {
            Term::Sym(s) if s != NIL => Some(Atom::new(s.clone(), vec![])),
            Term::Compound(f, args) if f != CONS => Some(Atom::new(f.clone(), args.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_term(), f)
    }
}

/// `head <- body.`; an empty body makes the clause a fact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornClause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl HornClause {
    pub fn fact(head: Atom) -> Self {
        HornClause { head, body: vec![] }
    }

    pub fn rule(head: Atom, body: Vec<Atom>) -> Self {
        HornClause { head, body }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for atom in std::iter::once(&self.head).chain(&self.body) {
            atom.args.iter().for_each(|a| a.collect_vars(&mut out));
        }
        out
    }
}

impl fmt::Display for HornClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " <- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
        }
        write!(f, ".")
    }
}

/// A proposition with optional question text for the operator dialogue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropLiteral {
    pub name: String,
    pub question: Option<String>,
}

impl PropLiteral {
    pub fn new(name: impl Into<String>) -> Self {
        PropLiteral {
            name: name.into(),
            question: None,
        }
    }

    pub fn asking(name: impl Into<String>, question: impl Into<String>) -> Self {
        PropLiteral {
            name: name.into(),
            question: Some(question.into()),
        }
    }
}

/// `A_1 & ... & A_n -> B` over propositions. Question texts live on antecedents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropRule {
    pub antecedents: Vec<PropLiteral>,
    pub consequent: String,
}

impl PropRule {
    /// Plain rule without question texts. Panics on an invalid rule; use
    /// [`PropRule::try_new`] for untrusted input.
    pub fn new(antecedents: &[&str], consequent: &str) -> Self {
        Self::try_new(
            antecedents.iter().map(|a| PropLiteral::new(*a)).collect(),
            consequent.to_string(),
        )
        .expect("invalid propositional rule")
    }

    pub fn try_new(antecedents: Vec<PropLiteral>, consequent: String) -> Result<Self, String> {
        if antecedents.is_empty() {
            return Err("propositional rule needs at least one antecedent".into());
        }
        if antecedents.iter().any(|a| a.name == consequent) {
            return Err(format!(
                "proposition {consequent} appears as both antecedent and consequent"
            ));
        }
        Ok(PropRule {
            antecedents,
            consequent,
        })
    }

    pub fn antecedent_names(&self) -> impl Iterator<Item = &str> {
        self.antecedents.iter().map(|a| a.name.as_str())
    }
}

impl fmt::Display for PropRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn lit(f: &mut fmt::Formatter<'_>, l: &PropLiteral) -> fmt::Result {
            write!(f, "{}", l.name)?;
            if let Some(q) = &l.question {
                write!(f, " ? ")?;
                write_quoted(f, q, '"')?;
            }
            Ok(())
        }
        write!(f, "prop ")?;
        for (i, a) in self.antecedents.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            lit(f, a)?;
        }
        write!(f, " -> {}.", self.consequent)
    }
}

/// Ordered Horn clauses and propositional rules. Immutable once loaded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub name: Option<String>,
    pub version: Option<String>,
    pub clauses: Vec<HornClause>,
    pub prop_rules: Vec<PropRule>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_clauses(clauses: Vec<HornClause>) -> Self {
        KnowledgeBase {
            clauses,
            ..Default::default()
        }
    }

    /// Clauses defining `pred/arity`, in listed order, with their indices.
    pub fn clauses_for<'a>(
        &'a self,
        pred: &'a str,
        arity: usize,
    ) -> impl Iterator<Item = (usize, &'a HornClause)> + 'a {
        self.clauses
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.head.pred == pred && c.head.args.len() == arity)
    }

    /// Ground facts of `pred/arity` stated directly in the knowledge base.
    pub fn facts<'a>(&'a self, pred: &'a str, arity: usize) -> impl Iterator<Item = &'a Atom> + 'a {
        self.clauses_for(pred, arity)
            .filter(|(_, c)| c.is_fact() && c.head.is_ground())
            .map(|(_, c)| &c.head)
    }

    pub fn defines(&self, pred: &str, arity: usize) -> bool {
        self.clauses_for(pred, arity).next().is_some()
    }

    /// Appends another knowledge base (file concatenation).
    pub fn extend(&mut self, other: KnowledgeBase) {
        if self.name.is_none() {
            self.name = other.name;
        }
        if self.version.is_none() {
            self.version = other.version;
        }
        self.clauses.extend(other.clauses);
        self.prop_rules.extend(other.prop_rules);
    }
}
