mod common;

use std::sync::Arc;

use ace_core::gateway::http::router;
use ace_core::gateway::{
    parse_answers, run_headless, FixedClock, GatewayError, HeadlessOptions, RunStatus, Service, SessionState, TableKind,
};
use ace_core::inference::Answer;
use ace_core::scenarios::ScenarioConfig;
use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use proptest::prelude::*;
use serde_json::{json, Value};
use tower::ServiceExt;

fn event(name: &str) -> Value {
    serde_json::from_str(&common::read_fixture(name)).unwrap()
}

fn service() -> Service {
    Service::new(ScenarioConfig::default()).with_clock(FixedClock("2026-06-05T09:00:00Z".into()))
}

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, v)
}

#[tokio::test]
async fn question_answer_report_over_http() {
    let app = router(Arc::new(service()));
    let (st, created) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        Some(json!({ "event": event("political_crisis.json") })),
    )
    .await;
    assert_eq!(st, StatusCode::CREATED, "{created}");
    assert_eq!(created["state"], "awaiting-answer");
    let id = created["id"].as_str().unwrap().to_string();

    let (st, q) = call(&app, Method::GET, &format!("/v1/sessions/{id}/question"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(q["kind"], "yes_no");
    let qid = q["id"].as_u64().unwrap();

    let (st, err) = call(&app, Method::GET, &format!("/v1/sessions/{id}/report"), None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "not_done");

    let answer = |qid: u64, a: Value| Some(json!({ "question_id": qid, "answer": a }));
    let (st, err) = call(
        &app,
        Method::POST,
        &format!("/v1/sessions/{id}/answer"),
        answer(qid + 7, json!("yes")),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "stale_question");
    let (st, err) = call(
        &app,
        Method::POST,
        &format!("/v1/sessions/{id}/answer"),
        answer(qid, json!(3.5)),
    )
    .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["code"], "answer_type");

    let (st, done) = call(
        &app,
        Method::POST,
        &format!("/v1/sessions/{id}/answer"),
        answer(qid, json!("yes")),
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{done}");
    assert_eq!(done["state"], "done");
    let (st, err) = call(
        &app,
        Method::POST,
        &format!("/v1/sessions/{id}/answer"),
        answer(qid, json!("yes")),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "not_awaiting");

    let (st, report) = call(&app, Method::GET, &format!("/v1/sessions/{id}/report"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert!(report["outputs"]["political_consequences"].is_object(), "{report}");
    assert_eq!(report["questions"][0]["answer"], true);

    let (_, trace) = call(&app, Method::GET, &format!("/v1/sessions/{id}/trace"), None).await;
    assert_eq!(trace, report["goal_tree"]);

    let (_, journal) = call(&app, Method::GET, &format!("/v1/sessions/{id}/journal"), None).await;
    let kinds: Vec<&str> = journal
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["type"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["created", "question", "answer", "result"]);

    let (_, list) = call(&app, Method::GET, "/v1/sessions", None).await;
    assert_eq!(list, json!([{ "id": id, "state": "done" }]));
}

#[tokio::test]
async fn errors_have_codes_and_statuses() {
    let app = router(Arc::new(service()));
    let (st, e) = call(&app, Method::GET, "/v1/sessions/s999999", None).await;
    assert_eq!(
        (st, e["error"]["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("not_found"))
    );

    let (st, e) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        Some(json!({ "package": "nope", "event": event("fx_change.json") })),
    )
    .await;
    assert_eq!(
        (st, e["error"]["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_package"))
    );

    let (st, e) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        Some(json!({ "event": { "id": "x", "category": "weather" } })),
    )
    .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    let fields: Vec<&str> = e["error"]["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap())
        .collect();
    assert!(fields.contains(&"category"), "{e}");

    let req = Request::post("/v1/sessions").body(Body::from("{not json")).unwrap();
    assert_eq!(
        app.clone().oneshot(req).await.unwrap().status(),
        StatusCode::BAD_REQUEST
    );

    let (st, _) = call(&app, Method::POST, "/v1/data/tables?name=t", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn packages_and_tables() {
    let app = router(Arc::new(service()));
    let (_, pk) = call(&app, Method::GET, "/v1/packages", None).await;
    let names: Vec<&str> = pk
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    for n in ["production", "market", "region"] {
        assert!(names.contains(&n), "{names:?}");
    }

    let csv = "x1,x2,class\n1,-1,1\n-1,1,2\n";
    let req = Request::post("/v1/data/tables?name=faults&kind=experience")
        .body(Body::from(csv))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::CREATED);
    let req = Request::post("/v1/data/tables?name=bad&kind=experience")
        .body(Body::from("x1,class\n1,zz\n"))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
    let (_, tables) = call(&app, Method::GET, "/v1/data/tables", None).await;
    assert_eq!(tables.as_array().unwrap().len(), 1);
    assert_eq!(tables[0]["name"], "faults");
}

#[test]
fn journal_survives_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (id, before) = {
        let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
        let v = svc.create_session("region", event("political_crisis.json")).unwrap();
        (v.id.clone(), svc.journal(&v.id).unwrap())
    };
    let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
    assert_eq!(svc.state(&id).unwrap(), SessionState::AwaitingAnswer);
    assert_eq!(svc.journal(&id).unwrap(), before);
    let q = svc.question(&id).unwrap();
    svc.answer(&id, q.id, Answer::no()).unwrap();
    let report = svc.report(&id).unwrap();

    let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
    assert_eq!(svc.state(&id).unwrap(), SessionState::Done);
    assert_eq!(svc.report(&id).unwrap(), report);
    // New sessions do not reuse ids.
    let next = svc.create_session("region", event("political_crisis.json")).unwrap();
    assert_ne!(next.id, id);
}

#[test]
fn a_torn_journal_line_is_dropped_and_the_step_rederived() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
        let v = svc.create_session("region", event("political_crisis.json")).unwrap();
        let q = svc.question(&v.id).unwrap();
        svc.answer(&v.id, q.id, Answer::yes()).unwrap();
        v.id
    };
    let path = dir.path().join("sessions").join(format!("{id}.jsonl"));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    // Crash after the answer was written, halfway through the result line.
    let torn = &lines[3][..lines[3].len() / 2];
    lines[3] = torn;
    std::fs::write(&path, lines.join("\n")).unwrap();

    let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
    assert_eq!(svc.state(&id).unwrap(), SessionState::Done);
    let kinds: Vec<String> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["type"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(kinds, ["created", "question", "answer", "result"]);
}

#[test]
fn uploaded_tables_persist() {
    let dir = tempfile::tempdir().unwrap();
    {
        let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
        svc.upload_table("rates", TableKind::TimeSeries, "t,rate\n1,1.0\n2,1.1\n3,1.2\n")
            .unwrap();
    }
    let svc = Service::open(dir.path(), ScenarioConfig::default()).unwrap();
    let t = svc.tables();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].name, "rates");
}

#[test]
fn headless_exit_codes() {
    let run = |kb: Option<&str>, ev: &str, answers: Vec<Answer>| {
        run_headless(&HeadlessOptions {
            kb_sources: kb
                .map(|k| vec![(k.to_string(), common::read_fixture(k))])
                .unwrap_or_default(),
            event_json: common::read_fixture(ev),
            answers,
            ..Default::default()
        })
    };
    assert_eq!(
        run(Some("metallurgy.kb"), "blast_furnace.json", vec![]).status,
        RunStatus::Success
    );
    let out = run(None, "political_crisis.json", vec![]);
    assert_eq!((out.status, out.status.exit_code()), (RunStatus::AnswersExhausted, 3));
    assert_eq!(
        run(None, "political_crisis.json", vec![Answer::yes()])
            .status
            .exit_code(),
        0
    );

    let bad_event = run_headless(&HeadlessOptions {
        event_json: r#"{"id": "x"}"#.into(),
        ..Default::default()
    });
    assert_eq!((bad_event.status, bad_event.status.exit_code()), (RunStatus::Schema, 5));

    let bad_kb = run_headless(&HeadlessOptions {
        kb_sources: vec![("broken.kb".into(), "adapt <- (.".into())],
        event_json: common::read_fixture("fx_change.json"),
        ..Default::default()
    });
    assert_eq!((bad_kb.status, bad_kb.status.exit_code()), (RunStatus::KbError, 4));
    assert!(bad_kb.output.contains("broken.kb:1:"), "{}", bad_kb.output);

    let no_proof = run_headless(&HeadlessOptions {
        kb_sources: vec![("own.kb".into(), "adapt <- fail.\n".into())],
        event_json: common::read_fixture("fx_change.json"),
        ..Default::default()
    });
    assert_eq!((no_proof.status, no_proof.status.exit_code()), (RunStatus::NoProof, 6));
}

#[test]
fn answers_file_formats() {
    let a = parse_answers("# logistics\nyes\n12.5\nport closed\n").unwrap();
    assert_eq!(
        a,
        [
            Answer::Bool(true),
            Answer::Number(12.5),
            Answer::Text("port closed".into())
        ]
    );
    let b = parse_answers(r#"[true, 12.5, "port closed"]"#).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any sequence of submissions keeps the session on legal transitions and
    /// the journal consistent with the accepted answers.
    #[test]
    fn session_state_machine(subs in prop::collection::vec((0u64..3, prop_oneof![
        Just(json!("yes")), Just(json!("no")), Just(json!(true)), Just(json!(2.0)), Just(json!("maybe"))
    ]), 0..6)) {
        let svc = service();
        let id = svc.create_session("region", event("political_crisis.json")).unwrap().id;
        let mut accepted = 0;
        for (qid, a) in subs {
            let before = svc.state(&id).unwrap();
            let answer: Answer = serde_json::from_value(a).unwrap();
            match svc.answer(&id, qid, answer) {
                Ok(v) => {
                    prop_assert_eq!(before, SessionState::AwaitingAnswer);
                    prop_assert!(v.state.is_final());
                    accepted += 1;
                }
                Err(GatewayError::NotAwaiting(s)) => prop_assert!(s.is_final()),
                Err(GatewayError::StaleQuestion { .. } | GatewayError::AnswerType { .. }) => {
                    prop_assert_eq!(svc.state(&id).unwrap(), before);
                }
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }
        prop_assert!(accepted <= 1);
        let journal = svc.journal(&id).unwrap();
        let answers = journal.iter().filter(|e| matches!(e, ace_core::gateway::JournalEntry::Answer { .. })).count();
        prop_assert_eq!(answers, accepted);
        let view = svc.session(&id).unwrap();
        prop_assert_eq!(view.answers.len(), accepted);
    }
}
