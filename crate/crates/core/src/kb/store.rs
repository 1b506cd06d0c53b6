use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

use super::term::Atom;
use super::unify::{unify_atoms, Substitution};
use crate::lang;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unbound variable {variable} in fact {fact}")]
    NonGround { variable: String, fact: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("table {table}: {message}")]
    Table { table: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Rows of numbers under a fixed set of column labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn new(columns: Vec<String>) -> Self {
        NumericTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<(), String> {
        if row.len() != self.columns.len() {
            return Err(format!(
                "row has {} values, header has {} columns",
                row.len(),
                self.columns.len()
            ));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(format!("non-finite value {v}"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column_values(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Monotonically increasing mutation counter of a [`FactStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Revision(pub u64);

/// Ground facts grouped by relation name (bag semantics) plus numeric tables.
///
/// Relations and tables keep first-insertion order; atoms within a relation
/// keep insertion order. Duplicate asserts accumulate.
#[derive(Debug, Clone, Default)]
pub struct FactStore {
    relations: IndexMap<String, Vec<Atom>>,
    tables: IndexMap<String, NumericTable>,
    revision: u64,
}

impl PartialEq for FactStore {
    fn eq(&self, other: &Self) -> bool {
        self.relations == other.relations && self.tables == other.tables
    }
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> Revision {
        Revision(self.revision)
    }

    pub fn assert_fact(&mut self, fact: Atom) -> Result<Revision, StoreError> {
        if let Some(variable) = fact.vars().into_iter().next() {
            return Err(StoreError::NonGround {
                variable,
                fact: fact.to_string(),
            });
        }
        self.relations.entry(fact.pred.clone()).or_default().push(fact);
        self.revision += 1;
        Ok(self.revision())
    }

    /// Removes every atom unifying with `pattern`; returns the count removed.
    pub fn retract_fact(&mut self, pattern: &Atom) -> usize {
        let Some(rel) = self.relations.get_mut(&pattern.pred) else {
            return 0;
        };
        let before = rel.len();
        rel.retain(|a| unify_atoms(pattern, a, &Substitution::new()).is_none());
        let removed = before - rel.len();
        if rel.is_empty() {
            self.relations.shift_remove(&pattern.pred);
        }
        if removed > 0 {
            self.revision += 1;
        }
        removed
    }

    /// Every stored atom unifying with `pattern`, in insertion order, with the unifier.
    pub fn match_facts(&self, pattern: &Atom) -> Vec<(Atom, Substitution)> {
        self.relation(&pattern.pred)
            .iter()
            .filter_map(|a| unify_atoms(pattern, a, &Substitution::new()).map(|s| (a.clone(), s.normalized())))
            .collect()
    }

    pub fn relation(&self, name: &str) -> &[Atom] {
        self.relations.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &[Atom])> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn fact_count(&self) -> usize {
        self.relations.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count() == 0 && self.tables.is_empty()
    }

    pub fn insert_table(&mut self, name: impl Into<String>, table: NumericTable) -> Result<(), StoreError> {
        let name = name.into();
        let width = table.columns.len();
        if let Some(r) = table.rows.iter().find(|r| r.len() != width) {
            return Err(StoreError::Table {
                table: name,
                message: format!("row of width {} under {} columns", r.len(), width),
            });
        }
        self.tables.insert(name, table);
        self.revision += 1;
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&NumericTable> {
        self.tables.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = (&str, &NumericTable)> {
        self.tables.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Adds every fact and table of `other` (tables with the same name are replaced).
    pub fn merge(&mut self, other: &FactStore) {
        for (_, atoms) in other.relations() {
            for a in atoms {
                self.relations.entry(a.pred.clone()).or_default().push(a.clone());
            }
        }
        for (name, t) in other.tables() {
            self.tables.insert(name.to_string(), t.clone());
        }
        self.revision += 1;
    }

    /// Text form: one ground atom per line, then `table <name>:` CSV blocks.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# fact store\n");
        for (_, atoms) in self.relations() {
            for a in atoms {
                let _ = writeln!(out, "{a}.");
            }
        }
        for (name, t) in self.tables() {
            let _ = writeln!(out, "\ntable {name}:");
            let _ = writeln!(out, "{}", t.columns.join(","));
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<FactStore, StoreError> {
        let parsed = lang::parse_kb(text);
        if let Some(d) = parsed.diagnostics.iter().find(|d| d.is_error()) {
            return Err(StoreError::Parse {
                line: d.span.start_line,
                message: d.message.clone(),
            });
        }
        let mut store = parsed.store;
        for (i, clause) in parsed.kb.clauses.iter().enumerate() {
            let line = parsed.clause_spans[i].start_line;
            if !clause.is_fact() {
                return Err(StoreError::Parse {
                    line,
                    message: "rules are not allowed in a fact store".into(),
                });
            }
            store.assert_fact(clause.head.clone()).map_err(|e| StoreError::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        if let Some(span) = parsed.prop_spans.first() {
            return Err(StoreError::Parse {
                line: span.start_line,
                message: "propositional rules are not allowed in a fact store".into(),
            });
        }
        Ok(store)
    }
}

pub fn load_store(path: impl AsRef<Path>) -> Result<FactStore, StoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    FactStore::from_text(&text)
}

pub fn save_store(store: &FactStore, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    std::fs::write(path, store.to_text()).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Term;

    fn parent(a: &str, b: &str) -> Atom {
        Atom::new("parent", vec![Term::sym(a), Term::sym(b)])
    }

    #[test]
    fn assert_then_match() {
        let mut s = FactStore::new();
        s.assert_fact(parent("tom", "bob")).unwrap();
        let m = s.match_facts(&Atom::new("parent", vec![Term::sym("tom"), Term::var("X")]));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].0, parent("tom", "bob"));
        assert_eq!(m[0].1.get("X"), Some(&Term::sym("bob")));
    }

    #[test]
    fn non_ground_assert_names_the_variable() {
        let mut s = FactStore::new();
        let err = s
            .assert_fact(Atom::new("parent", vec![Term::var("X"), Term::sym("bob")]))
            .unwrap_err();
        assert!(err.to_string().contains("unbound variable X"), "{err}");
    }

    #[test]
    fn duplicates_accumulate() {
        let mut s = FactStore::new();
        s.assert_fact(parent("tom", "bob")).unwrap();
        s.assert_fact(parent("tom", "bob")).unwrap();
        assert_eq!(s.match_facts(&parent("tom", "bob")).len(), 2);
    }

    #[test]
    fn retract_counts() {
        let mut s = FactStore::new();
        s.assert_fact(parent("tom", "bob")).unwrap();
        s.assert_fact(parent("ann", "bob")).unwrap();
        let mut t = s.clone();
        assert_eq!(
            s.retract_fact(&Atom::new("parent", vec![Term::sym("tom"), Term::var("X")])),
            1
        );
        assert_eq!(
            t.retract_fact(&Atom::new("parent", vec![Term::var("X"), Term::var("Y")])),
            2
        );
        assert_eq!(FactStore::new().retract_fact(&Atom::new("q", vec![Term::num(1.0)])), 0);
    }

    #[test]
    fn repeated_variable_pattern_needs_equal_args() {
        let mut s = FactStore::new();
        s.assert_fact(Atom::new("parent", vec![Term::sym("a"), Term::sym("a")]))
            .unwrap();
        s.assert_fact(Atom::new("parent", vec![Term::sym("a"), Term::sym("b")]))
            .unwrap();
        let m = s.match_facts(&Atom::new("parent", vec![Term::var("X"), Term::var("X")]));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].0.args[1], Term::sym("a"));
    }

    #[test]
    fn text_round_trip_with_table() {
        let mut s = FactStore::new();
        s.assert_fact(parent("tom", "bob")).unwrap();
        s.assert_fact(Atom::new("w", vec![Term::num(2.5), Term::str("x y")]))
            .unwrap();
        s.assert_fact(parent("ann", "bob")).unwrap();
        let mut t = NumericTable::new(vec!["y".into(), "x1".into()]);
        t.push_row(vec![1.0, -0.5]).unwrap();
        s.insert_table("data", t).unwrap();
        let back = FactStore::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = "a(1).\nb(2).\n\n# c\nc(3).\nd(4).\nbroken(.\n";
        match FactStore::from_text(text) {
            Err(StoreError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_text_is_empty_store() {
        assert!(FactStore::from_text("").unwrap().is_empty());
    }

    #[test]
    fn rules_rejected_in_store_text() {
        assert!(FactStore::from_text("p(X) <- q(X).").is_err());
    }
}
