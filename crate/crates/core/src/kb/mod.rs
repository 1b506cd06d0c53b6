//! Knowledge representation: terms, atoms, Horn clauses, propositional rules
//! and the fact store that builtins select from.

mod store;
mod term;
mod unify;

pub use store::{load_store, save_store, FactStore, NumericTable, Revision, StoreError};
pub use term::{is_plain_symbol, Atom, HornClause, KnowledgeBase, PropLiteral, PropRule, Term, CONS, NIL};
pub use unify::{unify, unify_atoms, Substitution};
