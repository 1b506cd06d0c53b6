use super::*;
use crate::inference::{Answer, GoalStatus, SolveError};

const METALLURGY: &str = include_str!("../../tests/fixtures/metallurgy.kb");
const MARKET: &str = include_str!("../../tests/fixtures/pipe_market.kb");
const REGION: &str = include_str!("../../tests/fixtures/region_costs.kb");

fn package(name: &str) -> Package {
    let mut p = Package::builtin(name).unwrap();
    match name {
        "market" => p.add_source("pipe_market.kb", MARKET).unwrap(),
        "region" => {
            p.add_source("region_costs.kb", REGION).unwrap();
            p.add_source("metallurgy.kb", METALLURGY).unwrap();
        }
        _ => p.add_source("metallurgy.kb", METALLURGY).unwrap(),
    }
    p
}

fn fixture(name: &str) -> CriticalEvent {
    let path = format!("{}/tests/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    CriticalEvent::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(pkg: &str, name: &str, answers: &[Answer]) -> ScenarioReport {
    match run_scenario(&fixture(name), &package(pkg), answers, &ScenarioConfig::default()).unwrap() {
        ScenarioOutcome::Done { report } => *report,
        other => panic!("{name} not done: {other:?}"),
    }
}

fn proven(r: &ScenarioReport, label: &str) -> bool {
    r.subgoals.iter().any(|s| s.label == label && s.status == "proven")
}

#[test]
fn threat_signal_takes_the_first_alternative() {
    let r = run("production", "gas_threat", &[]);
    assert_eq!(r.branch, "threat");
    for l in ["phi1", "phi2", "psi1", "psi2"] {
        assert!(proven(&r, l), "{l}");
    }
    for l in ["phi3", "phi4", "omega1", "omega5"] {
        assert!(!proven(&r, l), "{l}");
    }
    assert_eq!(r.outputs["threat"]["probability"], 0.1);
    assert_eq!(r.outputs["threat"]["level"], "elevated");
    assert_eq!(r.outputs["threat_consequences"]["expected_loss"], "240000.00");
    assert_eq!(r.propositions.len(), 2);
    assert!(r.propositions.iter().all(|p| p.evidence.len() >= 2));
}

#[test]
fn bayes_threat_and_threshold_override() {
    let mut e = fixture("gas_threat");
    e.subtype = "equipment-damage".into();
    let p = package("production");
    let r = run_scenario(&e, &p, &[], &ScenarioConfig::default()).unwrap();
    let t = &r.report().unwrap().outputs["threat"];
    assert!((t["probability"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(t["level"], "high");
    assert_eq!(t["method"], "bayes");

    let cfg = ScenarioConfig {
        thresholds: ThreatThresholds {
            elevated: 0.9,
            high: 0.95,
        },
        ..Default::default()
    };
    let r = run_scenario(&e, &p, &[], &cfg).unwrap();
    assert_eq!(r.report().unwrap().outputs["threat"]["level"], "low");
}

#[test]
fn blast_furnace_event_branch() {
    let r = run("production", "blast_furnace", &[]);
    assert_eq!(r.branch, "event");
    for l in ["phi3", "phi4", "omega1", "omega2", "omega3", "omega4", "omega5"] {
        assert!(proven(&r, l), "{l}");
    }
    let ids: Vec<&str> = r.outputs["measures"]["measures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8"]);
    assert_eq!(
        r.outputs["causes"]["ranking"],
        serde_json::json!(["gas_mixture_explosion"])
    );
    assert_eq!(r.outputs["causes"]["versions"][2]["status"], "undeterminable");
    let duster = r
        .propositions
        .iter()
        .find(|p| p.kind == PropositionKind::ReliabilityImprovement)
        .unwrap();
    assert_eq!(duster.description, "change the construction of duster");
    assert!(duster.evidence.iter().any(|e| e == "cause:gas_mixture_explosion"));
    assert!(r.propositions.iter().any(|p| p.kind == PropositionKind::PlanCorrection));
    // 25 days at furnaces 1 and 4, 12 at furnace 3; slabs are due on day 20.
    let c = &r.outputs["consequences"];
    assert_eq!(c["penalty_sanctions"]["total"], "75000.00");
    assert_eq!(c["account_payable_increase"]["total"], "105403.20");
}

#[test]
fn exactly_one_alternative_is_on_every_proof() {
    for (pkg, name) in [
        ("production", "gas_threat"),
        ("production", "blast_furnace"),
        ("region", "ecocatastrophe"),
    ] {
        let r = run(pkg, name, &[]);
        let threat = proven(&r, "phi1") || proven(&r, "phi2");
        let event = proven(&r, "phi3") || proven(&r, "phi4");
        assert!(threat != event, "{name}");
    }
}

#[test]
fn unknown_subtype_has_no_package() {
    let mut e = fixture("blast_furnace");
    e.subtype = "meteorite".into();
    let err = run_scenario(&e, &package("production"), &[], &ScenarioConfig::default()).unwrap_err();
    assert!(err.to_string().contains("no KB package"), "{err}");
    assert!(matches!(package_for(&e), Err(ScenarioError::NoPackage { .. })));
    assert!(matches!(Package::builtin("x"), Err(ScenarioError::UnknownPackage(_))));
}

#[test]
fn political_crisis_asks_about_logistics() {
    let e = fixture("political_crisis");
    let p = package("region");
    let cfg = ScenarioConfig::default();
    match evaluate_regional_event(&e, &p, &[], &cfg).unwrap() {
        ScenarioOutcome::Awaiting {
            question,
            questions,
            trace,
        } => {
            assert_eq!(question.id, 1);
            assert!(question.text.contains("logistic routes"));
            assert_eq!(questions.len(), 1);
            assert_eq!(questions[0].answer, None);
            assert_eq!(trace.status, GoalStatus::Pending);
        }
        other => panic!("{other:?}"),
    }
    let r = evaluate_regional_event(&e, &p, &[Answer::no()], &cfg).unwrap();
    let r = r.report().unwrap();
    assert_eq!(
        r.outputs["political_consequences"]["consequences"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
    assert_eq!(r.questions[0].answer, Some(Answer::no()));
    let r = evaluate_regional_event(&e, &p, &[Answer::yes()], &cfg).unwrap();
    assert_eq!(r.report().unwrap().propositions.len(), 2);
}

#[test]
fn market_subtypes_produce_their_outputs() {
    let p = package("market");
    let cfg = ScenarioConfig::default();
    let cases: [(&str, &[&str]); 3] = [
        (
            "market_competitive",
            &[
                "consumer_value",
                "sales_influence",
                "plan_information",
                "new_technology",
            ],
        ),
        (
            "market_segment",
            &["segment_analysis", "segment_sales", "plan_information"],
        ),
        (
            "market_partner",
            &["financial_state", "choice", "plan_information", "other_propositions"],
        ),
    ];
    for (name, keys) in cases {
        let o = evaluate_market_event(&fixture(name), &p, &cfg).unwrap();
        let r = o.report().unwrap();
        for k in keys {
            assert!(r.outputs.contains_key(*k), "{name}: {k}");
        }
        assert!(r.subgoals.iter().all(|s| s.status == "proven"), "{name}");
    }
    let r = evaluate_market_event(&fixture("market_competitive"), &p, &cfg).unwrap();
    let r = r.report().unwrap();
    assert_eq!(r.outputs["new_technology"]["needed"], true);
    assert!(r.propositions.iter().any(|p| p.kind == PropositionKind::NewTechnology));

    let wrong = evaluate_market_event(&fixture("fx_change"), &p, &cfg);
    assert!(matches!(wrong, Err(ScenarioError::Data(_))));
}

#[test]
fn fx_forecast_flags_unprofitable_goods() {
    let r = run("region", "fx_change", &[]);
    let rate = r.outputs["fx_forecast"]["rate"].as_f64().unwrap();
    assert!((rate - 1.61051).abs() < 1e-9);
    assert_eq!(r.outputs["unit_costs"]["unprofitable"], serde_json::json!(["widget"]));
    let widget = &r.outputs["unit_costs"]["products"][1];
    assert!((widget["new_cost"].as_f64().unwrap() - (3.0 + 5.0 * 1.61051 + 0.5 + 1.0)).abs() < 1e-9);
}

#[test]
fn ecocatastrophe_reuses_the_emergency_response() {
    let eco = run("region", "ecocatastrophe", &[]);
    let prod = run("production", "blast_furnace", &[]);
    let keys = |r: &ScenarioReport| r.outputs.keys().cloned().collect::<Vec<_>>();
    assert_eq!(keys(&eco), keys(&prod));
    assert_eq!(eco.branch, "event");
    let labels = |r: &ScenarioReport| r.subgoals.iter().map(|s| s.label.clone()).collect::<Vec<_>>();
    assert_eq!(labels(&eco), labels(&prod));
}

#[test]
fn builtin_errors_carry_the_goal_tree() {
    // The market package without its data cannot value goods.
    let p = Package::builtin("market").unwrap();
    match run_scenario(&fixture("market_competitive"), &p, &[], &ScenarioConfig::default()) {
        Err(ScenarioError::Run {
            error: SolveError::Builtin { pred, .. },
            trace,
        }) => {
            assert_eq!(pred, "consumer_value");
            assert_eq!(trace.atom, "adapt");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&run("production", "blast_furnace", &[])).unwrap();
    let b = serde_json::to_string(&run("production", "blast_furnace", &[])).unwrap();
    assert_eq!(a, b);
}

#[test]
fn shipped_packages_parse() {
    for n in Package::SHIPPED {
        let p = Package::builtin(n).unwrap();
        assert!(p.kb.defines("adapt", 0), "{n}");
    }
}
