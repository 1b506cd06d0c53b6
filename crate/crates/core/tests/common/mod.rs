//! Oracles, generators and fixture helpers shared by the integration tests.
//! Every oracle here is written from the definitions, independently of the
//! library code it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use ace_core::kb::{Atom, HornClause, KnowledgeBase, PropLiteral, PropRule, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

// decision criteria

/// Chosen index and criterion value by plain enumeration: scan every row,
/// keep the first row whose value is strictly larger than all before it.
pub fn brute_choice(values: &[Vec<f64>], score: impl Fn(&[f64]) -> f64) -> (usize, f64) {
    let scores: Vec<f64> = values.iter().map(|r| score(r)).collect();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = scores.iter().position(|s| *s == best).unwrap();
    (k, best)
}

pub fn row_min(r: &[f64]) -> f64 {
    r.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn row_max(r: &[f64]) -> f64 {
    r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Random table up to 8×8 with small integer values so ties are common,
/// plus a probability vector that sums to 1 exactly in binary.
pub fn random_decision_table(r: &mut impl Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = r.gen_range(1..=8);
    let m = r.gen_range(1..=8);
    let values = (0..n)
        .map(|_| (0..m).map(|_| r.gen_range(-4..=4) as f64).collect())
        .collect();
    // Dyadic weights: integer counts over a power-of-two total.
    let mut counts = vec![0u32; m];
    for _ in 0..64 {
        counts[r.gen_range(0..m)] += 1;
    }
    let probs = counts.iter().map(|c| *c as f64 / 64.0).collect();
    (values, probs)
}

// logic programs

/// Naive bottom-up fixpoint over function-free clauses.
pub fn bottom_up(clauses: &[HornClause]) -> HashSet<Atom> {
    let mut facts: HashSet<Atom> = HashSet::new();
    loop {
        let mut new = Vec::new();
        for c in clauses {
            let mut envs: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
            for b in &c.body {
                let mut next = Vec::new();
                for env in &envs {
                    for f in facts
                        .iter()
                        .filter(|f| f.pred == b.pred && f.args.len() == b.args.len())
                    {
                        let mut e = env.clone();
                        let ok = b.args.iter().zip(&f.args).all(|(p, v)| match p {
                            Term::Var(x) => match e.get(x) {
                                Some(t) => t == v,
                                None => {
                                    e.insert(x.clone(), v.clone());
                                    true
                                }
                            },
                            _ => p == v,
                        });
                        if ok {
                            next.push(e);
                        }
                    }
                }
                envs = next;
            }
            for e in envs {
                let args: Option<Vec<Term>> = c
                    .head
                    .args
                    .iter()
                    .map(|a| match a {
                        Term::Var(x) => e.get(x).cloned(),
                        t => Some(t.clone()),
                    })
                    .collect();
                if let Some(args) = args {
                    let a = Atom::new(c.head.pred.clone(), args);
                    if !facts.contains(&a) && !new.contains(&a) {
                        new.push(a);
                    }
                }
            }
        }
        if new.is_empty() {
            return facts;
        }
        facts.extend(new);
    }
}

pub const PREDS: [&str; 4] = ["p0", "p1", "p2", "p3"];
const CONSTS: [&str; 4] = ["a", "b", "c", "d"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

fn const_term(r: &mut impl Rng) -> Term {
    Term::sym(CONSTS[r.gen_range(0..CONSTS.len())])
}

/// Random function-free KB with ≤ 8 rules and ≤ 12 facts over binary
/// predicates. Rules for `p_i` only call `p_j` with j < i, so depth-first
/// search terminates and must find every answer.
pub fn random_hierarchical_kb(r: &mut impl Rng) -> Vec<HornClause> {
    let mut out = Vec::new();
    for _ in 0..r.gen_range(1..=12) {
        let p = PREDS[r.gen_range(0..PREDS.len())];
        out.push(HornClause::fact(Atom::new(p, vec![const_term(r), const_term(r)])));
    }
    for _ in 0..r.gen_range(0..=8) {
        let h = r.gen_range(1..PREDS.len());
        let body: Vec<Atom> = (0..r.gen_range(1..=3))
            .map(|_| {
                let p = PREDS[r.gen_range(0..h)];
                let arg = |r: &mut ChaCha8Rng| {
                    if r.gen_bool(0.75) {
                        Term::var(VARS[r.gen_range(0..VARS.len())])
                    } else {
                        const_term(r)
                    }
                };
                let mut rr = ChaCha8Rng::seed_from_u64(r.gen());
                Atom::new(p, vec![arg(&mut rr), arg(&mut rr)])
            })
            .collect();
        let mut bound = Vec::new();
        for a in &body {
            for t in &a.args {
                t.collect_vars(&mut bound);
            }
        }
        let head_arg = |r: &mut ChaCha8Rng| {
            if !bound.is_empty() && r.gen_bool(0.8) {
                Term::var(bound[r.gen_range(0..bound.len())].clone())
            } else {
                const_term(r)
            }
        };
        let mut rr = ChaCha8Rng::seed_from_u64(r.gen());
        let head = Atom::new(PREDS[h], vec![head_arg(&mut rr), head_arg(&mut rr)]);
        out.push(HornClause::rule(head, body));
    }
    out.shuffle(r);
    out
}

/// Preorder of a tree given as child lists, from node 0.
pub fn preorder(children: &[Vec<usize>]) -> Vec<usize> {
    fn walk(n: usize, ch: &[Vec<usize>], out: &mut Vec<usize>) {
        out.push(n);
        for &c in &ch[n] {
            walk(c, ch, out);
        }
    }
    let mut out = Vec::new();
    if !children.is_empty() {
        walk(0, children, &mut out);
    }
    out
}

// rule-language generator

fn gen_symbol(r: &mut impl Rng) -> String {
    const PLAIN: [&str; 6] = ["a", "bob", "tom_2", "x9", "nil_like", "zeta"];
    const QUOTED: [&str; 5] = ["Hello", "two words", "it's", "a-b", "back\\slash"];
    if r.gen_bool(0.8) {
        PLAIN[r.gen_range(0..PLAIN.len())].to_string()
    } else {
        QUOTED[r.gen_range(0..QUOTED.len())].to_string()
    }
}

fn gen_number(r: &mut impl Rng) -> f64 {
    match r.gen_range(0..4) {
        0 => r.gen_range(-1000..1000) as f64,
        1 => r.gen_range(-64..64) as f64 / 8.0,
        2 => r.gen_range(-1.0e6..1.0e6),
        _ => r.gen_range(0.0..1.0e-3),
    }
}

fn gen_string(r: &mut impl Rng) -> String {
    const S: [&str; 6] = ["", "plain text", "say \"hi\"", "tab\there", "line\nbreak", "ünïcödé ✓"];
    S[r.gen_range(0..S.len())].to_string()
}

/// Term of compound depth ≤ `depth`.
pub fn gen_term(r: &mut impl Rng, depth: usize) -> Term {
    let choice = if depth == 0 {
        r.gen_range(0..4)
    } else {
        r.gen_range(0..6)
    };
    match choice {
        0 => Term::sym(gen_symbol(r)),
        1 => Term::num(gen_number(r)),
        2 => Term::str(gen_string(r)),
        3 => Term::var(["X", "Y", "Long_Name", "V2"][r.gen_range(0..4)]),
        4 => {
            let n = r.gen_range(1..=3);
            let args = (0..n).map(|_| gen_term(r, depth - 1)).collect();
            Term::compound(gen_symbol(r), args)
        }
        _ => {
            let n = r.gen_range(0..=3);
            let items: Vec<Term> = (0..n).map(|_| gen_term(r, depth - 1)).collect();
            if n > 0 && r.gen_bool(0.3) {
                Term::list_with_tail(items, Term::var("T"))
            } else {
                Term::list(items)
            }
        }
    }
}

fn gen_atom(r: &mut impl Rng) -> Atom {
    const P: [&str; 6] = ["p", "q", "edge", "has_tag", "r2", "plan"];
    let pred = P[r.gen_range(0..P.len())];
    // Fixed arity per predicate keeps the documents free of arity warnings.
    let arity = pred.len() % 5;
    Atom::new(pred, (0..arity).map(|_| gen_term(r, 3)).collect())
}

/// Random well-formed KB: ≤ 20 clauses, arity ≤ 4, compound depth ≤ 3, plus
/// a few propositional rules with questions.
pub fn random_kb(r: &mut impl Rng) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    for _ in 0..r.gen_range(0..=20) {
        let head = gen_atom(r);
        let c = if r.gen_bool(0.4) {
            HornClause::fact(head)
        } else {
            HornClause::rule(head, (0..r.gen_range(1..=3)).map(|_| gen_atom(r)).collect())
        };
        kb.clauses.push(c);
    }
    const PROPS: [&str; 5] = ["A", "B", "overheat", "Pressure_low", "alarm"];
    for _ in 0..r.gen_range(0..=3) {
        let n = r.gen_range(1..=3);
        let lits: Vec<PropLiteral> = (0..n)
            .map(|_| {
                let name = PROPS[r.gen_range(0..PROPS.len())];
                if r.gen_bool(0.5) {
                    PropLiteral::asking(name, gen_string(r) + "?")
                } else {
                    PropLiteral::new(name)
                }
            })
            .collect();
        let free: Vec<&str> = PROPS
            .iter()
            .copied()
            .filter(|p| lits.iter().all(|l| l.name != *p))
            .collect();
        let concl = free[r.gen_range(0..free.len())].to_string();
        kb.prop_rules
            .push(PropRule::try_new(lits, concl).expect("valid prop rule"));
    }
    kb
}

// numeric data

/// Pairwise distinct random ternary vectors.
pub fn distinct_vectors(r: &mut impl Rng, rows: usize, dim: usize) -> Vec<Vec<i8>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < rows {
        let v: Vec<i8> = (0..dim).map(|_| r.gen_range(-1..=1)).collect();
        if seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
