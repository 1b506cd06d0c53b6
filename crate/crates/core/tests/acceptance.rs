//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Runs as a plain binary (`harness = false`) so every criterion reports
//! even when an earlier one fails; the process exits nonzero on any failure.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ace_core::decision::{
    bayes_posterior, choose_optimistic, choose_pessimistic, choose_pragmatic, BayesInput, DecisionTable,
};
use ace_core::diagnostics::{
    classify_frequencies, classify_geometric, classify_potential, encode_logic_vector, fit_frequencies,
    fit_separating_plane, fit_separating_surface, potential_value, ExperienceTable, FrequenciesModel, LogicVector,
    Outcome, PlaneModel, PotentialModel, Tri,
};
use ace_core::gateway::{run_headless, HeadlessOptions, RunStatus};
use ace_core::inference::{standard_registry, GoalStatus, SolveLimits, Solver};
use ace_core::kb::{Atom, FactStore, KnowledgeBase, Term};
use ace_core::lang::{parse_kb, serialize_kb};
use ace_core::lsq::monomials;
use ace_core::prediction::{fit_discretized, fit_dynamical, fit_regression, predict_discretized};
use common::*;
use rand::Rng;
use serde_json::Value;

type Check = Result<String, String>;
/// Name, check and time budget of one criterion.
type Criterion = (&'static str, fn() -> Check, Duration);
type Expected = &'static [(&'static str, &'static str, &'static str)];

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn lv(v: &[i8]) -> LogicVector {
    LogicVector::new(v.to_vec()).expect("ternary vector")
}

fn table(rows: &[(Vec<i8>, usize)]) -> ExperienceTable {
    ExperienceTable::from_rows(rows.iter().map(|(x, c)| (lv(x), *c)).collect()).expect("table")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// classifiers

fn plane_residual(rows: &[(Vec<i8>, usize)], a: &[f64]) -> f64 {
    rows.iter()
        .map(|(x, c)| {
            let phi = a[0] + x.iter().zip(&a[1..]).map(|(xi, ai)| *xi as f64 * ai).sum::<f64>();
            let t = if *c == 1 { 1.0 } else { -1.0 };
            (phi - t).powi(2)
        })
        .sum()
}

fn hand_potential(x: &[i8], a: &[i8], eps: f64) -> f64 {
    let rho2: f64 = x.iter().zip(a).map(|(p, q)| ((p - q) as f64).powi(2)).sum();
    if rho2 >= eps {
        1.0 / rho2
    } else {
        1.0 / eps
    }
}

fn classifier_suite() -> Check {
    let e = |e: ace_core::diagnostics::DiagnosticsError| e.to_string();
    // Tri-state encoding.
    let v = encode_logic_vector(&[Tri::Present, Tri::Absent, Tri::Unknown]).map_err(e)?;
    ensure!(v.components() == [1, -1, 0], "encoding gave {:?}", v.components());

    // Two symmetric points are interpolated exactly by a = (0, 1).
    let two = vec![(vec![1], 1), (vec![-1], 2)];
    let plane = fit_separating_plane(&table(&two), 1e-6).map_err(e)?;
    ensure!(
        max_abs_diff(&plane.coefficients, &[0.0, 1.0]) < 1e-12,
        "two-point plane {:?}",
        plane.coefficients
    );
    ensure!(plane_residual(&two, &plane.coefficients) < 1e-20, "two-point residual");
    let surf = fit_separating_surface(&table(&two), 1, 1e-6).map_err(e)?;
    ensure!(
        max_abs_diff(&surf.coefficients, &plane.coefficients) < 1e-10,
        "degree-1 surface differs from plane"
    );

    // Least-squares optimality probes on random tables.
    let mut r = rng(1);
    for _ in 0..10 {
        let w: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let rows: Vec<(Vec<i8>, usize)> = (0..20)
            .map(|k| {
                let x: Vec<i8> = (0..3).map(|_| r.gen_range(-1..=1)).collect();
                let s = w[0] + x.iter().zip(&w[1..]).map(|(a, b)| *a as f64 * b).sum::<f64>();
                // Alternate forced labels keep both classes present.
                let c = if k == 0 {
                    1
                } else if k == 1 {
                    2
                } else if s > 0.0 {
                    1
                } else {
                    2
                };
                (x, c)
            })
            .collect();
        let m = fit_separating_plane(&table(&rows), 1e-6).map_err(e)?;
        let best = plane_residual(&rows, &m.coefficients);
        for i in 0..4 {
            for d in [-1e-3, 1e-3] {
                let mut a = m.coefficients.clone();
                a[i] += d;
                ensure!(
                    best <= plane_residual(&rows, &a) + 1e-12,
                    "perturbation beats the fitted plane"
                );
            }
        }
        for _ in 0..100 {
            let a: Vec<f64> = (0..4).map(|_| r.gen_range(-3.0..3.0)).collect();
            ensure!(
                best <= plane_residual(&rows, &a) + 1e-12,
                "random vector beats the fitted plane"
            );
        }
        let s1 = fit_separating_surface(&table(&rows), 1, 1e-6).map_err(e)?;
        ensure!(
            max_abs_diff(&s1.coefficients, &m.coefficients) < 1e-10,
            "degree-1 surface differs from plane"
        );
    }

    // XOR: Φ = x1·x2 fits all four points exactly, so every least-squares
    // solution reproduces the targets.
    let xor = vec![(vec![1, 1], 1), (vec![-1, -1], 1), (vec![1, -1], 2), (vec![-1, 1], 2)];
    let s2 = fit_separating_surface(&table(&xor), 2, 1e-6).map_err(e)?;
    for (x, c) in &xor {
        let d = classify_geometric(&s2, &lv(x)).map_err(e)?;
        ensure!(d.outcome == Outcome::Class(*c), "XOR point {x:?} -> {:?}", d.outcome);
        let t = if *c == 1 { 1.0 } else { -1.0 };
        ensure!(close(d.scores[0], t, 1e-6), "XOR score {} for target {t}", d.scores[0]);
    }

    // Geometric thresholding.
    let m = PlaneModel::new(vec![0.0, 1.0], 0.01).map_err(e)?;
    let d = classify_geometric(&m, &lv(&[1])).map_err(e)?;
    ensure!(
        d.outcome == Outcome::Class(1) && d.scores[0] == 1.0,
        "a=(0,1), x=(1) -> {d:?}"
    );
    let d = classify_geometric(&m, &lv(&[0])).map_err(e)?;
    ensure!(d.outcome == Outcome::Undecided, "a=(0,1), x=(0) -> {d:?}");

    // Frequencies: hand values, then a counting oracle on random tables.
    let f = fit_frequencies(&table(&[
        (vec![1], 1),
        (vec![1], 1),
        (vec![1], 1),
        (vec![1], 1),
        (vec![1], 2),
        (vec![1], 2),
        (vec![-1], 2),
        (vec![0], 2),
    ]))
    .map_err(e)?;
    ensure!(
        close(f.coefficients[0][0], 5f64.ln(), 1e-12),
        "4/4 coefficient {}",
        f.coefficients[0][0]
    );
    ensure!(f.coefficients[1][0] == 0.0, "2/4 coefficient {}", f.coefficients[1][0]);
    let fm = FrequenciesModel::from_coefficients(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).map_err(e)?;
    ensure!(
        classify_frequencies(&fm, &lv(&[1, -1])).map_err(e)?.outcome == Outcome::Class(1),
        "Φ=(1,-1) case"
    );
    let tie = FrequenciesModel::from_coefficients(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).map_err(e)?;
    ensure!(
        classify_frequencies(&tie, &lv(&[1, 0])).map_err(e)?.outcome == Outcome::Class(1),
        "tie must go to class 1"
    );
    for _ in 0..20 {
        let classes = r.gen_range(2..=4);
        let dim = r.gen_range(1..=6);
        let mut rows: Vec<(Vec<i8>, usize)> = (1..=classes)
            .map(|c| ((0..dim).map(|_| r.gen_range(-1..=1)).collect(), c))
            .collect();
        for _ in 0..20 {
            rows.push((
                (0..dim).map(|_| r.gen_range(-1..=1)).collect(),
                r.gen_range(1..=classes),
            ));
        }
        let model = fit_frequencies(&table(&rows)).map_err(e)?;
        let mut hand = vec![vec![0.0; dim]; classes];
        for (j, hj) in hand.iter_mut().enumerate() {
            let mine: Vec<&Vec<i8>> = rows.iter().filter(|(_, c)| *c == j + 1).map(|(x, _)| x).collect();
            for (i, h) in hj.iter_mut().enumerate() {
                let k = mine.iter().filter(|x| x[i] == 1).count() as f64;
                let p = (k + 1.0) / (mine.len() as f64 + 2.0);
                *h = (p / (1.0 - p)).ln();
            }
        }
        for (j, (got, want)) in model.coefficients.iter().zip(&hand).enumerate() {
            ensure!(max_abs_diff(got, want) < 1e-12, "frequencies class {} differs", j + 1);
        }
        for (x, _) in &rows {
            let scores: Vec<f64> = hand
                .iter()
                .map(|a| a.iter().zip(x).map(|(a, x)| a * *x as f64).sum())
                .collect();
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let want = scores.iter().position(|s| (s - best).abs() < 1e-12).unwrap() + 1;
            let got = classify_frequencies(&model, &lv(x)).map_err(e)?.outcome;
            ensure!(got == Outcome::Class(want), "argmax {got:?} vs {want}");
        }
    }

    // Potential functions.
    ensure!(
        potential_value(&lv(&[1, 0]), &lv(&[1, 0]), 0.001).map_err(e)? == 1000.0,
        "self potential"
    );
    ensure!(
        potential_value(&lv(&[1, -1]), &lv(&[1, 1]), 0.001).map_err(e)? == 0.25,
        "ρ²=4 potential"
    );
    let pm = PotentialModel::fit(&table(&two), 0.01, 0.01).map_err(e)?;
    let d = classify_potential(&pm, &lv(&[1])).map_err(e)?;
    ensure!(
        d.outcome == Outcome::Class(1) && close(d.scores[0], 99.75, 1e-12),
        "query (1) -> {d:?}"
    );
    let d = classify_potential(&pm, &lv(&[-1])).map_err(e)?;
    ensure!(
        d.outcome == Outcome::Class(2) && close(d.scores[0], -99.75, 1e-12),
        "query (-1) -> {d:?}"
    );

    // Training-set consistency on 100 random tables, 50 rows, dim 8.
    let eps = 1e-3;
    for t in 0..100 {
        let xs = distinct_vectors(&mut r, 50, 8);
        let rows: Vec<(Vec<i8>, usize)> = xs
            .into_iter()
            .enumerate()
            .map(|(k, x)| (x, if k < 2 { k + 1 } else { r.gen_range(1..=2) }))
            .collect();
        // The bound that makes consistency a theorem.
        for (i, (x, _)) in rows.iter().enumerate() {
            let others: f64 = rows
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, (a, _))| hand_potential(x, a, eps))
                .sum();
            ensure!(1.0 / eps > others, "table {t}: ε-dominance bound fails");
        }
        let model = PotentialModel::fit(&table(&rows), eps, 1e-6).map_err(e)?;
        for (x, c) in &rows {
            let got = classify_potential(&model, &lv(x)).map_err(e)?.outcome;
            ensure!(
                got == Outcome::Class(*c),
                "table {t}: training row {x:?} class {c} -> {got:?}"
            );
        }
    }
    Ok("worked examples, 20 frequency tables, 100 potential tables".into())
}

// least squares

fn lsq_recovery() -> Check {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        if inst % 2 == 0 {
            let dim = r.gen_range(1..=3);
            let degree = r.gen_range(1..=2);
            let monos = monomials(dim, degree);
            let k = monos.len() + 1;
            let truth: Vec<f64> = (0..k).map(|_| r.gen_range(-2.0..2.0)).collect();
            let samples: Vec<(Vec<f64>, f64)> = (0..3 * k + 2)
                .map(|_| {
                    let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect();
                    let mut y = truth[0];
                    for (c, m) in truth[1..].iter().zip(&monos) {
                        y += c * m.iter().zip(&x).map(|(p, xi)| xi.powi(*p as i32)).product::<f64>();
                    }
                    (x, y)
                })
                .collect();
            let (model, _) = fit_regression(&samples, degree, true).map_err(|e| e.to_string())?;
            let err = max_abs_diff(&model.coefficients, &truth);
            worst = worst.max(err);
            ensure!(err <= 1e-6, "regression instance {inst}: error {err:e}");
        } else {
            let order = r.gen_range(0..=2);
            let inputs = r.gen_range(0..=2);
            let ar: Vec<f64> = (0..=order).map(|_| r.gen_range(-2.0..2.0)).collect();
            let exo: Vec<f64> = (0..inputs).map(|_| r.gen_range(-2.0..2.0)).collect();
            let c = r.gen_range(-2.0..2.0);
            let k = ar.len() + exo.len() + 1;
            let len = 3 * k + order + 1;
            let v: Vec<Vec<f64>> = (0..inputs)
                .map(|_| (0..len).map(|_| r.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut y: Vec<f64> = (0..=order).map(|_| r.gen_range(-1.0..1.0)).collect();
            while y.len() < len {
                let t = y.len() - 1;
                let mut next = c;
                for (i, a) in ar.iter().enumerate() {
                    next += a * y[t - i];
                }
                for (j, b) in exo.iter().enumerate() {
                    next += b * v[j][t];
                }
                y.push(next);
            }
            let (model, _) = fit_dynamical(&y, &v, order, true).map_err(|e| e.to_string())?;
            let got: Vec<f64> = model
                .ar
                .iter()
                .chain(&model.exo)
                .cloned()
                .chain(model.intercept)
                .collect();
            let want: Vec<f64> = ar.iter().chain(&exo).cloned().chain(Some(c)).collect();
            let err = max_abs_diff(&got, &want);
            worst = worst.max(err);
            ensure!(
                err <= 1e-6,
                "dynamical instance {inst} (order {order}, inputs {inputs}): error {err:e}"
            );
        }
    }
    Ok(format!("100 instances, max coefficient error {worst:.1e}"))
}

fn discretized() -> Check {
    let mut r = rng(3);
    let eps = 1e-3;
    let mut checked = 0;
    for set in 0..20 {
        let dim = r.gen_range(5..=8);
        let xs = distinct_vectors(&mut r, 40, dim);
        let w: Vec<f64> = (0..dim).map(|_| r.gen_range(-10.0..10.0)).collect();
        let samples: Vec<(LogicVector, f64)> = xs
            .iter()
            .map(|x| (lv(x), 50.0 + x.iter().zip(&w).map(|(a, b)| *a as f64 * b).sum::<f64>()))
            .collect();
        let disc = fit_discretized(&samples, 100, eps).map_err(|e| e.to_string())?;
        let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let half = (hi - lo) / 100.0 / 2.0;
        ensure!(
            close(half / (hi - lo), 0.005, 1e-15),
            "half width is not 0.5% of the range"
        );
        let consistent = xs.iter().enumerate().all(|(i, x)| {
            let others: f64 = xs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, a)| hand_potential(x, a, eps))
                .sum();
            1.0 / eps > others
        });
        ensure!(consistent, "dataset {set}: classifier is not training-consistent");
        for (x, y) in &samples {
            let p = predict_discretized(&disc, x).map_err(|e| e.to_string())?;
            ensure!(
                (p.value - y).abs() <= half * (1.0 + 1e-9),
                "dataset {set}: y={y} predicted {} (half width {half})",
                p.value
            );
            checked += 1;
        }
    }
    Ok(format!(
        "20 datasets, {checked} training points within half a segment (k=100)"
    ))
}

// decisions

fn decision_criteria() -> Check {
    let e = |e: ace_core::decision::DecisionError| e.to_string();
    let mut r = rng(4);
    for t in 0..1000 {
        let (values, probs) = random_decision_table(&mut r);
        let table = DecisionTable::from_values(values.clone(), Some(probs.clone())).map_err(e)?;
        let pes = choose_pessimistic(&table).map_err(e)?;
        let opt = choose_optimistic(&table).map_err(e)?;
        let pra = choose_pragmatic(&table).map_err(e)?;
        let want_p = brute_choice(&values, row_min);
        let want_o = brute_choice(&values, row_max);
        let want_e = brute_choice(&values, |row| row.iter().zip(&probs).map(|(v, p)| v * p).sum());
        ensure!(
            (pes.index, pes.value) == want_p,
            "table {t}: pessimistic {:?} vs {want_p:?}",
            (pes.index, pes.value)
        );
        ensure!(
            (opt.index, opt.value) == want_o,
            "table {t}: optimistic {:?} vs {want_o:?}",
            (opt.index, opt.value)
        );
        ensure!(
            (pra.index, pra.value) == want_e,
            "table {t}: pragmatic {:?} vs {want_e:?}",
            (pra.index, pra.value)
        );
        ensure!(pes.value <= opt.value, "table {t}: w(pessimistic) > w(optimistic)");
        for (k, row) in values.iter().enumerate() {
            let ev: f64 = row.iter().zip(&probs).map(|(v, p)| v * p).sum();
            ensure!(
                row_min(row) <= ev && ev <= row_max(row),
                "table {t} row {k}: expectation outside [min,max]"
            );
        }
    }
    let post = bayes_posterior(&BayesInput {
        hypotheses: vec![],
        priors: vec![0.5, 0.5],
        likelihoods: vec![0.8, 0.2],
        evidence: String::new(),
    })
    .map_err(e)?;
    ensure!(max_abs_diff(&post, &[0.8, 0.2]) < 1e-12, "posterior {post:?}");
    for k in 0..1000 {
        let n = r.gen_range(1..=6);
        let raw: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let priors: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let likelihoods: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..1.0)).collect();
        let post = bayes_posterior(&BayesInput {
            hypotheses: vec![],
            priors: priors.clone(),
            likelihoods: likelihoods.clone(),
            evidence: String::new(),
        })
        .map_err(e)?;
        let total: f64 = post.iter().sum();
        ensure!((total - 1.0).abs() <= 1e-12, "posterior {k} sums to {total}");
        let den: f64 = priors.iter().zip(&likelihoods).map(|(p, l)| p * l).sum();
        let hand: Vec<f64> = priors.iter().zip(&likelihoods).map(|(p, l)| p * l / den).collect();
        ensure!(
            max_abs_diff(&post, &hand) < 1e-12,
            "posterior {k} differs from the hand formula"
        );
    }
    Ok("1000 tables agree with enumeration; 1000 posteriors sum to 1".into())
}

// inference

fn tree_in_preorder(tree: &ace_core::inference::GoalTree) -> Result<(), String> {
    let children: Vec<Vec<usize>> = tree.nodes.iter().map(|n| n.children.clone()).collect();
    let pre = preorder(&children);
    ensure!(pre.len() == tree.nodes.len(), "tree has unreachable nodes");
    for n in &tree.nodes {
        ensure!(n.status == GoalStatus::Proven, "unproven node {} in a proof", n.atom);
    }
    let mut by_visit: Vec<(usize, usize)> = tree
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| n.visit.map(|v| (v, i)).ok_or(format!("node {} never visited", n.atom)))
        .collect::<Result<_, _>>()?;
    by_visit.sort();
    let order: Vec<usize> = by_visit.into_iter().map(|(_, i)| i).collect();
    ensure!(order == pre, "visit order {order:?} is not preorder {pre:?}");
    Ok(())
}

fn inference_engine() -> Check {
    let reg = standard_registry();
    let store = FactStore::new();
    let limits = SolveLimits {
        max_depth: 200,
        max_solutions: None,
    };
    let mut r = rng(5);
    let mut proofs = 0;
    for k in 0..200 {
        let clauses = random_hierarchical_kb(&mut r);
        let oracle = bottom_up(&clauses);
        let kb = KnowledgeBase::from_clauses(clauses);
        for p in PREDS {
            let goal = Atom::new(p, vec![Term::var("U"), Term::var("V")]);
            let sols = Solver::new(&kb, &store, &reg, &goal, limits)
                .and_then(|mut s| s.collect_all())
                .map_err(|e| format!("kb {k}: {e}"))?;
            let got: BTreeSet<String> = sols.iter().map(|s| s.subst.apply_atom(&goal).to_string()).collect();
            let want: BTreeSet<String> = oracle.iter().filter(|a| a.pred == p).map(|a| a.to_string()).collect();
            ensure!(got == want, "kb {k}, {p}: SLD {got:?} vs fixpoint {want:?}");
            for s in &sols {
                tree_in_preorder(&s.tree).map_err(|m| format!("kb {k}: {m}"))?;
                proofs += 1;
            }
        }
    }
    let parsed = parse_kb("phi <- phi1, phi2.\nphi <- phi3, phi4.\nphi3.\nphi4.\n");
    ensure!(!parsed.has_errors(), "two-clause fixture does not parse");
    let goal = Atom::new("phi", vec![]);
    let sols = Solver::new(&parsed.kb, &store, &reg, &goal, SolveLimits::default())
        .and_then(|mut s| s.collect_all())
        .map_err(|e| e.to_string())?;
    ensure!(sols.len() == 1, "two-clause fixture: {} solutions", sols.len());
    ensure!(
        sols[0].tree.root().clause == Some(1),
        "phi proven via clause {:?}",
        sols[0].tree.root().clause
    );
    let body: Vec<String> = sols[0]
        .tree
        .root()
        .children
        .iter()
        .map(|&c| sols[0].tree.nodes[c].atom.to_string())
        .collect();
    ensure!(body == ["phi3", "phi4"], "phi proof body {body:?}");
    tree_in_preorder(&sols[0].tree)?;
    Ok(format!(
        "200 KBs equal the fixpoint, {proofs} proof trees in preorder, backtracking fixture ok"
    ))
}

// rule language

fn rule_language() -> Check {
    let mut r = rng(6);
    for k in 0..500 {
        let kb = random_kb(&mut r);
        let text = serialize_kb(&kb);
        let back = parse_kb(&text);
        ensure!(
            !back.has_errors(),
            "kb {k}: serialized text does not parse: {:?}\n{text}",
            back.diagnostics
        );
        ensure!(back.kb == kb, "kb {k}: round trip differs\n{text}");
        ensure!(serialize_kb(&back.kb) == text, "kb {k}: serialization is not stable");
    }
    let cases: Vec<Value> = serde_json::from_str(&read_fixture("syntax_errors.json")).map_err(|e| e.to_string())?;
    for c in &cases {
        let text = c["text"].as_str().unwrap();
        let p = parse_kb(text);
        let first = p.errors().next().ok_or(format!("{text:?}: no error"))?;
        let at = (first.span.start_line, first.span.start_col, first.span.slice(text));
        let want = (
            c["line"].as_u64().unwrap() as usize,
            c["col"].as_u64().unwrap() as usize,
            c["slice"].as_str().unwrap(),
        );
        ensure!(at == want, "{text:?}: error at {at:?}, expected {want:?}");
    }
    Ok(format!("500 round trips, {} syntax-error fixtures", cases.len()))
}

// scenarios

fn cents(v: &Value) -> Result<i64, String> {
    let s = v.as_str().ok_or(format!("money {v} is not a string"))?;
    let (neg, s) = s.strip_prefix('-').map_or((false, s), |r| (true, r));
    let (int, frac) = s.split_once('.').ok_or(format!("money {s} has no cents"))?;
    ensure!(frac.len() == 2, "money {s} needs two decimals");
    let c = int.parse::<i64>().map_err(|e| e.to_string())? * 100 + frac.parse::<i64>().map_err(|e| e.to_string())?;
    Ok(if neg { -c } else { c })
}

fn headless(kb: &str, event: &str, answers: &[&str]) -> Result<(RunStatus, String), String> {
    let out = run_headless(&HeadlessOptions {
        kb_sources: vec![(kb.to_string(), read_fixture(kb))],
        event_json: read_fixture(event),
        answers: answers.iter().map(|a| ace_core::inference::Answer::parse(a)).collect(),
        ..Default::default()
    });
    Ok((out.status, out.output))
}

/// The restoration measures listed for the blast-furnace accident, in the
/// order they are given.
const MEASURES: [&str; 8] = [
    "to pump out water from constructions",
    "to restore the waterway",
    "to restore and start the electric substation",
    "to restore and start the pump station of the first blast furnace",
    "to restore the tank assigned for oil discharge and the heating main from the second pump station",
    "to restore all tuyeres of the first and fourth blast furnaces",
    "to start the first and fourth blast furnaces",
    "to restore the gas pipeline, electrical cables of the third blast furnace",
];

fn end_to_end() -> Check {
    let (status, first) = headless("metallurgy.kb", "blast_furnace.json", &[])?;
    ensure!(
        status == RunStatus::Success && status.exit_code() == 0,
        "status {status:?}: {first}"
    );
    let (_, second) = headless("metallurgy.kb", "blast_furnace.json", &[])?;
    ensure!(first == second, "two runs differ");
    let report: Value = serde_json::from_str(&first).map_err(|e| e.to_string())?;
    let out = &report["outputs"];

    let measures = out["measures"]["measures"].as_array().ok_or("no measure list")?;
    let texts: Vec<&str> = measures.iter().filter_map(|m| m["description"].as_str()).collect();
    ensure!(texts.len() == 8, "{} measures", texts.len());
    let want: BTreeSet<&str> = MEASURES.into_iter().collect();
    ensure!(
        texts.iter().copied().collect::<BTreeSet<_>>() == want,
        "measure set differs: {texts:?}"
    );
    ensure!(texts[0] == MEASURES[0], "first measure is {:?}", texts[0]);

    // Prerequisites as declared by the enterprise data.
    let data = parse_kb(&read_fixture("metallurgy.kb"));
    let ids: Vec<&str> = measures.iter().filter_map(|m| m["id"].as_str()).collect();
    for c in data
        .kb
        .clauses
        .iter()
        .filter(|c| c.head.pred == "measure_requires" && c.is_fact())
    {
        let (m, pre) = (c.head.args[0].to_string(), c.head.args[1].to_string());
        let (Some(i), Some(j)) = (ids.iter().position(|x| *x == m), ids.iter().position(|x| *x == pre)) else {
            return Err(format!("{m} or {pre} missing from the plan"));
        };
        ensure!(j < i, "{m} listed before its prerequisite {pre}");
        let start = measures[i]["start_day"].as_f64().unwrap_or(-1.0);
        let done = measures[j]["finish_day"].as_f64().unwrap_or(f64::MAX);
        ensure!(
            start >= done,
            "{m} starts on day {start} before {pre} finishes on day {done}"
        );
    }

    // Expense aggregate versus the individual sheets.
    let mut sheets = 0;
    for m in measures {
        let sheet = &m["expenses"];
        let lines: i64 = sheet["items"]
            .as_array()
            .ok_or("sheet without items")?
            .iter()
            .map(|i| cents(&i["amount"]))
            .sum::<Result<_, _>>()?;
        ensure!(lines == cents(&sheet["total"])?, "sheet of {} does not add up", m["id"]);
        sheets += lines;
    }
    let total = cents(&out["expenses"]["total"])?;
    ensure!(total == sheets, "aggregate {total} vs sheets {sheets}");

    // The three consequence factor groups.
    let cons = out["consequences"].as_object().ok_or("no consequence report")?;
    let groups: Vec<&str> = cons
        .iter()
        .filter(|(_, v)| v.get("items").is_some() && v.get("total").is_some())
        .map(|(k, _)| k.as_str())
        .collect();
    ensure!(
        groups == ["sale_volume_change", "penalty_sanctions", "account_payable_increase"],
        "factor groups {groups:?}"
    );
    let goods: Vec<&str> = cons["sale_volume_change"]["items"]
        .as_array()
        .ok_or("no sale items")?
        .iter()
        .filter_map(|i| i["label"].as_str())
        .collect();
    ensure!(
        goods == ["slabs", "pipes", "rolled_stock"],
        "sale volume goods {goods:?}"
    );
    for g in &groups {
        let sum: i64 = cons[*g]["items"]
            .as_array()
            .unwrap()
            .iter()
            .map(|i| cents(&i["amount"]))
            .sum::<Result<_, _>>()?;
        ensure!(
            sum == cents(&cons[*g]["total"])?,
            "{g} total is not the sum of its items"
        );
    }

    let duster = report["propositions"]
        .as_array()
        .ok_or("no propositions")?
        .iter()
        .any(|p| p["kind"] == "reliability-improvement" && p["description"] == "change the construction of duster");
    ensure!(duster, "reliability proposition missing");
    Ok(format!(
        "8 measures, expenses {}, byte-identical",
        out["expenses"]["total"]
    ))
}

/// Field structure of a JSON value. Arrays contribute the union of their
/// element shapes, so an empty array is compatible with any element type.
/// Maps keyed by data (measurement names) contribute their value shape under
/// `{}` instead of their keys.
fn shape(v: &Value, path: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) if path.ends_with(".measurements") => {
            for x in m.values() {
                shape(x, &format!("{path}{{}}"), out);
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                let p = format!("{path}.{k}");
                out.insert(p.clone());
                shape(x, &p, out);
            }
        }
        Value::Array(a) => {
            for x in a {
                shape(x, &format!("{path}[]"), out);
            }
        }
        _ => {}
    }
}

/// Paths present on one side only, ignoring those below an array that is
/// empty on the other side.
fn schema_mismatch(a: &Value, b: &Value) -> Vec<String> {
    let (mut sa, mut sb) = (BTreeSet::new(), BTreeSet::new());
    shape(a, "outputs", &mut sa);
    shape(b, "outputs", &mut sb);
    let empty_arrays = |v: &Value| {
        let mut out = BTreeSet::new();
        fn walk(v: &Value, path: &str, out: &mut BTreeSet<String>) {
            match v {
                Value::Object(m) => m.iter().for_each(|(k, x)| walk(x, &format!("{path}.{k}"), out)),
                Value::Array(a) if a.is_empty() => {
                    out.insert(format!("{path}[]"));
                }
                Value::Array(a) => a.iter().for_each(|x| walk(x, &format!("{path}[]"), out)),
                _ => {}
            }
        }
        walk(v, "outputs", &mut out);
        out
    };
    let (ea, eb) = (empty_arrays(a), empty_arrays(b));
    let unexplained = |p: &String, empty: &BTreeSet<String>| !empty.iter().any(|e| p.starts_with(e.as_str()));
    sa.symmetric_difference(&sb)
        .filter(|p| {
            if sa.contains(*p) {
                unexplained(p, &eb)
            } else {
                unexplained(p, &ea)
            }
        })
        .cloned()
        .collect()
}

fn subgoals(report: &Value) -> Vec<(String, String, String)> {
    report["subgoals"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|s| {
                    (
                        s["label"].as_str().unwrap_or("").to_string(),
                        s["predicate"].as_str().unwrap_or("").to_string(),
                        s["status"].as_str().unwrap_or("").to_string(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

fn scenario_coverage() -> Check {
    // (fixture data, event, answers, [(label, predicate, output key)])
    type Case = (&'static str, &'static str, &'static [&'static str], Expected);
    const MARKET_19: &[(&str, &str, &str)] = &[
        ("phi1", "assess_consumer_value", "consumer_value"),
        ("phi2", "assess_sales_influence", "sales_influence"),
        ("phi3", "prepare_plan_information", "plan_information"),
        ("phi4", "propose_new_technology", "new_technology"),
    ];
    const MARKET_20: &[(&str, &str, &str)] = &[
        ("phi1", "analyze_segment", "segment_analysis"),
        ("phi2", "assess_segment_sales", "segment_sales"),
        ("phi3", "prepare_plan_information", "plan_information"),
    ];
    const MARKET_21: &[(&str, &str, &str)] = &[
        ("phi1", "assess_financial_state", "financial_state"),
        ("phi2", "assess_partner_consequences", "choice"),
        ("phi3", "prepare_plan_information", "plan_information"),
        ("phi4", "prepare_other_propositions", "other_propositions"),
    ];
    const FX_22: &[(&str, &str, &str)] = &[
        ("phi1", "predict_radical_change", "fx_forecast"),
        ("phi2", "assess_change_consequences", "unit_costs"),
    ];
    const RATE_22: &[(&str, &str, &str)] = &[
        ("phi1", "predict_radical_change", "radical_change"),
        ("phi2", "assess_change_consequences", "unit_costs"),
    ];
    const CRISIS_22: &[(&str, &str, &str)] = &[
        ("phi1", "predict_radical_change", "radical_change"),
        ("phi2", "assess_change_consequences", "political_consequences"),
    ];
    let cases: [Case; 8] = [
        ("pipe_market.kb", "market_competitive.json", &[], MARKET_19),
        ("pipe_market.kb", "market_segment.json", &[], MARKET_20),
        ("pipe_market.kb", "market_partner.json", &[], MARKET_21),
        ("region_costs.kb", "fx_change.json", &[], FX_22),
        ("region_costs.kb", "customs_change.json", &[], RATE_22),
        ("region_costs.kb", "tax_change.json", &[], RATE_22),
        ("region_costs.kb", "energy_crisis.json", &[], RATE_22),
        ("region_costs.kb", "political_crisis.json", &["no"], CRISIS_22),
    ];
    for (kb, event, answers, want) in cases {
        let (status, text) = headless(kb, event, answers)?;
        ensure!(status == RunStatus::Success, "{event}: {status:?}\n{text}");
        let report: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        for (label, pred, key) in want {
            let s = report["subgoals"]
                .as_array()
                .and_then(|a| a.iter().find(|s| s["label"] == *label))
                .ok_or(format!("{event}: no subgoal {label}"))?;
            ensure!(s["predicate"] == *pred, "{event}: {label} is {}", s["predicate"]);
            ensure!(s["status"] == "proven", "{event}: {label} is {}", s["status"]);
            let listed = s["outputs"].as_array().is_some_and(|a| a.iter().any(|k| k == *key));
            ensure!(listed, "{event}: {label} lacks output {key}");
            ensure!(
                report["outputs"].get(key).is_some(),
                "{event}: report lacks output {key}"
            );
        }
    }

    let (s1, eco) = headless("metallurgy.kb", "ecocatastrophe.json", &[])?;
    let (s2, bf) = headless("metallurgy.kb", "blast_furnace.json", &[])?;
    ensure!(
        s1 == RunStatus::Success && s2 == RunStatus::Success,
        "ecocatastrophe {s1:?}, blast furnace {s2:?}"
    );
    let eco: Value = serde_json::from_str(&eco).map_err(|e| e.to_string())?;
    let bf: Value = serde_json::from_str(&bf).map_err(|e| e.to_string())?;
    ensure!(subgoals(&eco) == subgoals(&bf), "subgoal tables differ");
    let diff = schema_mismatch(&eco["outputs"], &bf["outputs"]);
    ensure!(diff.is_empty(), "output schemas differ: {diff:?}");
    let top = |v: &Value| {
        v.as_object()
            .map(|m| m.keys().cloned().collect::<Vec<_>>())
            .unwrap_or_default()
    };
    ensure!(top(&eco) == top(&bf), "report keys differ");
    Ok("8 subtype fixtures complete; ecocatastrophe schema equals production".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("classifier oracle suite", classifier_suite, Duration::from_secs(5)),
        ("least-squares recovery", lsq_recovery, Duration::from_secs(5)),
        ("discretized prediction", discretized, Duration::MAX),
        ("decision criteria", decision_criteria, Duration::MAX),
        ("inference engine", inference_engine, Duration::MAX),
        ("rule language", rule_language, Duration::MAX),
        ("end-to-end blast furnace", end_to_end, Duration::from_secs(10)),
        ("scenario coverage", scenario_coverage, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let took = t.elapsed();
        let result = match result {
            Ok(_) if took > budget => Err(format!("took {took:.2?}, budget {budget:.0?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS  {name:<26} {took:>9.2?}  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<26} {took:>9.2?}  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
