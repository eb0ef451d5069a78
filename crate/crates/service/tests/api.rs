use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use irm_core::data::{GenKind, GenSpec};
use irm_core::{
    run_stream, ComparisonOutcome, Dataset64, EngineConfig, FilterKind, Oracle, SimOracle64, Tuple64,
};
use irm_service::{
    router, Answer, AnswerRecord, Created, DatasetSource, ErrorBody, Progress, QueryView, ResultView,
    ServiceConfig, Session, SessionRecord, SessionSpec, Status, Store,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Records every comparison an engine run asks for.
struct Recorder {
    inner: SimOracle64,
    log: Vec<AnswerRecord>,
}

impl Oracle<f64> for Recorder {
    fn compare(&mut self, a: &Tuple64, b: &Tuple64) -> irm_core::Result<ComparisonOutcome> {
        let o = self.inner.compare(a, b)?;
        self.log.push(AnswerRecord { first: a.id, second: b.id, outcome: o.into() });
        Ok(o)
    }
    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }
    fn tie_count(&self) -> u64 {
        self.inner.tie_count()
    }
    fn hidden_utility(&self) -> Option<&[f64]> {
        self.inner.hidden_utility()
    }
}

fn app_with(config: ServiceConfig) -> Router {
    router(Arc::new(Store::new(config)))
}

fn app() -> Router {
    app_with(ServiceConfig::default())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value, Option<String>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let retry = res.headers().get(header::RETRY_AFTER).map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, v, retry)
}

fn sphere(n: usize, d: usize, seed: u64) -> GenSpec {
    GenSpec { kind: GenKind::Sphere, n, d, num_clusters: 5, sigma: 0.1, seed }
}

fn spec(gen: GenSpec, kind: FilterKind, ties: bool, seed: u64) -> SessionSpec {
    SessionSpec {
        dataset: DatasetSource::Synthetic(gen),
        config: EngineConfig { filter_kind: kind, epsilon: 0.1, seed, ..EngineConfig::default() },
        ties,
    }
}

async fn create(app: &Router, s: &SessionSpec) -> Created {
    let (st, v, _) = call(app, Method::POST, "/sessions", Some(serde_json::to_value(s).unwrap())).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    serde_json::from_value(v).unwrap()
}

async fn get_query(app: &Router, id: &str) -> QueryView {
    let (st, v, _) = call(app, Method::GET, &format!("/sessions/{id}/query"), None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    serde_json::from_value(v).unwrap()
}

/// Answers every query from `oracle` until the session is done; returns the
/// number of answers posted.
async fn drive(app: &Router, id: &str, ds: &Dataset64, oracle: &mut SimOracle64) -> usize {
    let mut answered = 0;
    loop {
        match get_query(app, id).await {
            QueryView::Done { .. } => return answered,
            QueryView::AwaitingAnswer { query_id, first, second, .. } => {
                let o = oracle.compare(&ds.tuples[first.id], &ds.tuples[second.id]).unwrap();
                let body = json!({"outcome": Answer::from(o), "query_id": query_id});
                let (st, v, _) = call(app, Method::POST, &format!("/sessions/{id}/answer"), Some(body)).await;
                assert_eq!(st, StatusCode::OK, "{v}");
                answered += 1;
            }
        }
    }
}

fn oracle(d: usize, seed: u64) -> SimOracle64 {
    SimOracle64::random(d, 0.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[tokio::test]
async fn scripted_client_reproduces_run_stream() {
    let app = app();
    for (kind, ties, d) in [
        (FilterKind::ListQp, false, 3),
        (FilterKind::ListQp, true, 4),
        (FilterKind::ListLp, false, 2),
        (FilterKind::PairQp, true, 3),
        (FilterKind::HpLp, false, 3),
    ] {
        let gen = sphere(800, d, 21);
        let s = spec(gen.clone(), kind, ties, 9);
        let ds: Dataset64 = gen.generate().unwrap();
        let mut rec = Recorder { inner: oracle(d, 33), log: Vec::new() };
        let expected = run_stream(&Session::effective_config(&s), &ds, &mut rec, 9).unwrap();

        let created = create(&app, &s).await;
        let answered = drive(&app, &created.id, &ds, &mut oracle(d, 33)).await;
        let (st, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", created.id), None).await;
        assert_eq!(st, StatusCode::OK);
        let r: ResultView = serde_json::from_value(v).unwrap();
        assert_eq!(r.winner.id, expected.winner.id, "{kind}");
        assert_eq!(r.comparisons as u64, expected.comparisons, "{kind}");
        assert_eq!(answered, r.comparisons);
        assert_eq!(r.answer_log, rec.log, "{kind}: transcript differs");
    }
}

#[tokio::test]
async fn replaying_the_answer_log_gives_the_same_winner() {
    let app = app();
    let gen = sphere(500, 3, 4);
    let ds: Dataset64 = gen.generate().unwrap();
    let s = spec(gen, FilterKind::TiedLp, true, 2);
    let a = create(&app, &s).await;
    drive(&app, &a.id, &ds, &mut oracle(3, 8)).await;
    let (_, v, _) = call(&app, Method::GET, &format!("/sessions/{}/record", a.id), None).await;
    let record: SessionRecord = serde_json::from_value(v).unwrap();
    let (_, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", a.id), None).await;
    let first: ResultView = serde_json::from_value(v).unwrap();
    assert_eq!(record.answers, first.answer_log);

    // Over HTTP: a fresh session fed the logged outcomes in order.
    let b = create(&app, &record.spec).await;
    for (i, ans) in record.answers.iter().enumerate() {
        match get_query(&app, &b.id).await {
            QueryView::AwaitingAnswer { first, second, .. } => {
                assert_eq!((first.id, second.id), (ans.first, ans.second), "answer {i}");
            }
            QueryView::Done { .. } => panic!("finished early at answer {i}"),
        }
        let body = json!({"outcome": ans.outcome});
        let (st, _, _) = call(&app, Method::POST, &format!("/sessions/{}/answer", b.id), Some(body)).await;
        assert_eq!(st, StatusCode::OK);
    }
    let (_, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", b.id), None).await;
    let second: ResultView = serde_json::from_value(v).unwrap();
    assert_eq!(second.winner, first.winner);

    // In process.
    let replayed = Session::replay(&record, usize::MAX).unwrap();
    assert_eq!(replayed.result().unwrap().winner, first.winner);
}

#[tokio::test]
async fn replay_rejects_a_foreign_log() {
    let gen = sphere(300, 3, 1);
    let mut record = SessionRecord { spec: spec(gen, FilterKind::ListQp, true, 0), answers: vec![], stopped_after: None };
    record.answers.push(AnswerRecord { first: 100_000, second: 1, outcome: Answer::First });
    assert!(Session::replay(&record, usize::MAX).is_err());
}

#[tokio::test]
async fn query_is_idempotent_and_double_submit_conflicts() {
    let app = app();
    let c = create(&app, &spec(sphere(400, 3, 5), FilterKind::ListQp, true, 1)).await;
    let q1 = get_query(&app, &c.id).await;
    let q2 = get_query(&app, &c.id).await;
    assert_eq!(q1, q2);
    let QueryView::AwaitingAnswer { query_id, .. } = q1 else { panic!("expected a query") };
    assert_eq!(query_id, 0);

    let uri = format!("/sessions/{}/answer", c.id);
    let body = json!({"outcome": "first", "query_id": query_id});
    let (st, v, _) = call(&app, Method::POST, &uri, Some(body.clone())).await;
    assert_eq!(st, StatusCode::OK);
    let after: Progress = serde_json::from_value(v).unwrap();
    assert_eq!(after.comparisons, 1);
    let q3 = get_query(&app, &c.id).await;

    let (st, v, _) = call(&app, Method::POST, &uri, Some(body)).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(serde_json::from_value::<ErrorBody>(v).unwrap().code, "conflict");
    assert_eq!(get_query(&app, &c.id).await, q3, "state changed by a rejected answer");
}

#[tokio::test]
async fn unknown_ids_and_bad_bodies() {
    let app = app();
    for path in ["query", "progress", "result", "record"] {
        let (st, v, _) = call(&app, Method::GET, &format!("/sessions/nope/{path}"), None).await;
        assert_eq!(st, StatusCode::NOT_FOUND);
        assert_eq!(v["code"], "not_found");
    }
    let (st, _, _) = call(&app, Method::POST, "/sessions/nope/answer", Some(json!({"outcome": "tie"}))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);

    let (st, v, _) = call(&app, Method::POST, "/sessions", Some(json!({"dataset": 3}))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "bad_request");

    let bad_cfg = json!({"dataset": {"synthetic": {"kind": "sphere", "n": 10, "d": 2}}, "config": {"epsilon": -1.0}});
    let (st, _, _) = call(&app, Method::POST, "/sessions", Some(bad_cfg)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let c = create(&app, &spec(sphere(50, 2, 0), FilterKind::ListQp, true, 0)).await;
    let (st, _, _) = call(&app, Method::POST, &format!("/sessions/{}/answer", c.id), Some(json!({"outcome": "maybe"}))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn single_tuple_dataset_is_done_at_once() {
    let app = app();
    let s = SessionSpec {
        dataset: DatasetSource::Csv { text: "name,a,b\nonly,3,4\n".into(), id_column: Some("name".into()) },
        config: EngineConfig::default(),
        ties: true,
    };
    let c = create(&app, &s).await;
    assert_eq!(c.progress.status, Status::Done);
    let QueryView::Done { winner, .. } = get_query(&app, &c.id).await else { panic!("not done") };
    assert_eq!(winner.id, 0);
    assert_eq!(winner.label.as_deref(), Some("only"));
    let (st, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", c.id), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["comparisons"], 0);
    let (st, _, _) = call(&app, Method::POST, &format!("/sessions/{}/answer", c.id), Some(json!({"outcome": "first"}))).await;
    assert_eq!(st, StatusCode::CONFLICT);
}

#[tokio::test]
async fn malformed_csv_reports_position() {
    let app = app();
    let body = json!({"dataset": {"csv": {"text": "a,b\n1,2\n3,oops\n"}}});
    let (st, v, _) = call(&app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let e: ErrorBody = serde_json::from_value(v).unwrap();
    assert_eq!((e.code.as_str(), e.row, e.column), ("bad_dataset", Some(3), Some(2)));
}

#[tokio::test]
async fn queries_carry_attribute_names_and_raw_values() {
    let app = app();
    let mut text = String::from("car,price,mpg\n");
    for i in 0..40 {
        text.push_str(&format!("car{i},{},{}\n", 10 + i * 3, 50 - i));
    }
    let s = SessionSpec {
        dataset: DatasetSource::Csv { text, id_column: Some("car".into()) },
        config: EngineConfig { pool_size: 5, ..EngineConfig::default() },
        ties: true,
    };
    let c = create(&app, &s).await;
    let QueryView::AwaitingAnswer { first, second, .. } = get_query(&app, &c.id).await else { panic!("done early") };
    for t in [first, second] {
        let i = t.id as f64;
        assert_eq!(t.label, Some(format!("car{}", t.id)));
        let names: Vec<&str> = t.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["price", "mpg"]);
        assert!((t.attributes[0].value - (10.0 + i * 3.0)).abs() < 1e-9);
        assert!((t.attributes[1].value - (50.0 - i)).abs() < 1e-9);
    }
}

#[tokio::test]
async fn ties_route_to_tie_tolerant_filters() {
    let app = app();
    let c = create(&app, &spec(sphere(300, 3, 2), FilterKind::ListQp, true, 0)).await;
    assert_eq!(c.progress.filter_kind, FilterKind::TiedQp);
    let (st, v, _) = call(&app, Method::POST, &format!("/sessions/{}/answer", c.id), Some(json!({"outcome": "tie"}))).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["ties"], 1);

    let strict = create(&app, &spec(sphere(300, 3, 2), FilterKind::ListQp, false, 0)).await;
    assert_eq!(strict.progress.filter_kind, FilterKind::ListQp);
    let uri = format!("/sessions/{}/answer", strict.id);
    let (st, v, _) = call(&app, Method::POST, &uri, Some(json!({"outcome": "tie"}))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "unprocessable");
    let (_, v, _) = call(&app, Method::GET, &format!("/sessions/{}/progress", strict.id), None).await;
    assert_eq!(v["comparisons"], 0);
}

#[tokio::test]
async fn result_conflicts_until_done() {
    let app = app();
    let c = create(&app, &spec(sphere(300, 2, 3), FilterKind::ListQp, true, 0)).await;
    let (st, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", c.id), None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["code"], "conflict");
}

#[tokio::test]
async fn stop_finishes_with_the_best_seen_tuple() {
    let app = app();
    let gen = sphere(3000, 3, 6);
    let ds: Dataset64 = gen.generate().unwrap();
    let c = create(&app, &spec(gen, FilterKind::ListQp, true, 4)).await;
    let mut o = oracle(3, 12);
    let u = o.utility_vector().to_vec();
    for _ in 0..15 {
        let QueryView::AwaitingAnswer { first, second, .. } = get_query(&app, &c.id).await else { panic!() };
        let a = Answer::from(o.compare(&ds.tuples[first.id], &ds.tuples[second.id]).unwrap());
        call(&app, Method::POST, &format!("/sessions/{}/answer", c.id), Some(json!({"outcome": a}))).await;
    }
    let (st, v, _) = call(&app, Method::POST, &format!("/sessions/{}/stop", c.id), None).await;
    assert_eq!(st, StatusCode::OK);
    let p: Progress = serde_json::from_value(v).unwrap();
    assert!(p.stopped_early);
    let seen = p.tuples_seen as usize;
    assert!(seen < 3000);
    drive(&app, &c.id, &ds, &mut o).await;
    let (_, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", c.id), None).await;
    let r: ResultView = serde_json::from_value(v).unwrap();
    assert!(r.stopped_early);

    // The winner is near-best among the tuples streamed before the stop.
    let order = irm_core::engine::stream_order(3000, 4);
    let util = |i: usize| ds.tuples[i].coords.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
    let best = order[..seen].iter().map(|&i| util(i)).fold(f64::NEG_INFINITY, f64::max);
    assert!(order[..seen].contains(&r.winner.id));
    assert!(best - util(r.winner.id) <= 0.1 + 1e-6);

    let (_, v, _) = call(&app, Method::GET, &format!("/sessions/{}/record", c.id), None).await;
    let record: SessionRecord = serde_json::from_value(v).unwrap();
    assert_eq!(record.stopped_after, Some(15));
    assert_eq!(Session::replay(&record, usize::MAX).unwrap().result().unwrap().winner, r.winner);
    // Stopping again is harmless.
    let (st, _, _) = call(&app, Method::POST, &format!("/sessions/{}/stop", c.id), None).await;
    assert_eq!(st, StatusCode::OK);
}

#[tokio::test]
async fn capacity_is_retryable() {
    let app = app_with(ServiceConfig { max_sessions: 2, ..ServiceConfig::default() });
    let s = spec(sphere(100, 2, 0), FilterKind::ListQp, true, 0);
    let a = create(&app, &s).await;
    create(&app, &s).await;
    let (st, v, retry) = call(&app, Method::POST, "/sessions", Some(serde_json::to_value(&s).unwrap())).await;
    assert_eq!(st, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["code"], "capacity");
    assert!(retry.is_some());
    let (st, _, _) = call(&app, Method::DELETE, &format!("/sessions/{}", a.id), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    create(&app, &s).await;
}

#[tokio::test]
async fn idle_sessions_expire() {
    let app = app_with(ServiceConfig { idle_timeout: Duration::from_millis(30), ..ServiceConfig::default() });
    let c = create(&app, &spec(sphere(100, 2, 0), FilterKind::ListQp, true, 0)).await;
    get_query(&app, &c.id).await;
    tokio::time::sleep(Duration::from_millis(80)).await;
    let (st, v, _) = call(&app, Method::GET, &format!("/sessions/{}/result", c.id), None).await;
    assert_eq!(st, StatusCode::GONE);
    assert_eq!(v["code"], "expired");
    let (st, _, _) = call(&app, Method::GET, &format!("/sessions/{}/query", c.id), None).await;
    assert_eq!(st, StatusCode::GONE);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig { state_dir: Some(dir.path().to_path_buf()), ..ServiceConfig::default() };
    let gen = sphere(400, 3, 9);
    let ds: Dataset64 = gen.generate().unwrap();
    let app = router(Arc::new(Store::open(config.clone()).unwrap()));
    let c = create(&app, &spec(gen, FilterKind::PairLp, true, 3)).await;
    let mut o = oracle(3, 5);
    for _ in 0..4 {
        let QueryView::AwaitingAnswer { first, second, .. } = get_query(&app, &c.id).await else { panic!() };
        let a = Answer::from(o.compare(&ds.tuples[first.id], &ds.tuples[second.id]).unwrap());
        call(&app, Method::POST, &format!("/sessions/{}/answer", c.id), Some(json!({"outcome": a}))).await;
    }
    let before = get_query(&app, &c.id).await;
    drop(app);

    let restarted = router(Arc::new(Store::open(config).unwrap()));
    assert_eq!(get_query(&restarted, &c.id).await, before);
    let (st, _, _) = call(&restarted, Method::DELETE, &format!("/sessions/{}", c.id), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
