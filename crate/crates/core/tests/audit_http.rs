use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use curate_core::audit;
use curate_core::pipeline::{read_input, run_pipeline, PipelineConfig};

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_corpus.jsonl")
}

fn start(log: Option<PathBuf>) -> String {
    let docs = read_input(&golden()).unwrap();
    let (tx, rx) = mpsc::channel::<SocketAddr>();
    thread::spawn(move || {
        audit::run("127.0.0.1:0".parse().unwrap(), &docs, log, |addr| tx.send(addr).unwrap()).unwrap();
    });
    format!("http://{}", rx.recv().unwrap())
}

fn post(c: &Client, base: &str, body: &str) -> (StatusCode, Value) {
    let r = c.post(format!("{base}/verdict")).header("content-type", "application/json").body(body.to_string()).send().unwrap();
    let status = r.status();
    (status, r.json().unwrap())
}

#[test]
fn audit_loop_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let base = start(Some(dir.path().join("verdicts.jsonl")));
    let c = Client::new();

    let langs: Vec<Value> = c.get(format!("{base}/languages")).send().unwrap().json().unwrap();
    let codes: Vec<&str> = langs.iter().map(|l| l["lang"].as_str().unwrap()).collect();
    assert_eq!(codes[0], "en");
    assert!(codes.contains(&"ru") && codes.contains(&"hi"));
    assert!(langs.iter().all(|l| l["audited"] == false));
    let counts: Vec<u64> = langs.iter().map(|l| l["doc_count"].as_u64().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));

    let s: Value = c.get(format!("{base}/sample?lang=ru&n=5&seed=3")).send().unwrap().json().unwrap();
    let docs = s["documents"].as_array().unwrap();
    assert_eq!(docs.len(), 5);
    assert!(docs.iter().all(|d| d["lang"] == "ru"));
    let again: Value = c.get(format!("{base}/sample?lang=ru&n=5&seed=3")).send().unwrap().json().unwrap();
    assert_eq!(s, again);
    let id = docs[0]["id"].as_str().unwrap();
    let d: Value = c.get(format!("{base}/doc?id={id}")).send().unwrap().json().unwrap();
    assert_eq!(d["id"], id);

    assert_eq!(c.get(format!("{base}/sample?lang=de")).send().unwrap().status(), StatusCode::NOT_FOUND);
    assert_eq!(c.get(format!("{base}/sample?lang=a--b")).send().unwrap().status(), StatusCode::BAD_REQUEST);
    assert_eq!(c.get(format!("{base}/doc?id=nope")).send().unwrap().status(), StatusCode::NOT_FOUND);

    assert_eq!(post(&c, &base, "not json").0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&c, &base, r#"{"lang":"hi","decision":"rename"}"#).0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&c, &base, r#"{"lang":"de","decision":"keep"}"#).0, StatusCode::NOT_FOUND);

    let (st, v) = post(&c, &base, &json!({"lang": "ru", "decision": "remove", "issues": ["noise"], "auditor": "a"}).to_string());
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(v["id"], "v000001");
    let (st, _) = post(&c, &base, &json!({"lang": "hi", "decision": "rename", "target": "mr", "auditor": "a"}).to_string());
    assert_eq!(st, StatusCode::CREATED);
    let (st, _) = post(&c, &base, &json!({"lang": "en", "decision": "keep", "auditor": "a"}).to_string());
    assert_eq!(st, StatusCode::CREATED);

    let export: Value = c.get(format!("{base}/export")).send().unwrap().json().unwrap();
    assert_eq!(export["ru"]["decision"], "remove");
    assert_eq!(export["hi"]["decision"], "rename");
    assert_eq!(export["hi"]["target"], "mr");
    assert_eq!(export["en"]["decision"], "keep");
    assert_eq!(export.as_object().unwrap().len(), 3);

    let langs: Vec<Value> = c.get(format!("{base}/languages")).send().unwrap().json().unwrap();
    let ru = langs.iter().find(|l| l["lang"] == "ru").unwrap();
    assert_eq!(ru["audited"], true);
    assert_eq!(ru["decision"], "remove");

    let g = c.get(format!("{base}/guidelines")).send().unwrap();
    assert!(g.headers()["content-type"].to_str().unwrap().starts_with("text/plain"));
    assert!(!g.text().unwrap().is_empty());

    let decisions = dir.path().join("decisions.json");
    std::fs::write(&decisions, export.to_string()).unwrap();
    let cfg = PipelineConfig {
        input: golden(),
        output: dir.path().join("out"),
        audit_decisions: Some(decisions),
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&cfg).unwrap();
    let langs: std::collections::BTreeSet<&str> = run.documents.iter().map(|d| d.lang.code.as_str()).collect();
    assert!(!langs.contains("ru"));
    assert!(!langs.contains("hi"));
    assert!(langs.contains("mr"));
    assert!(langs.contains("en"));
    let gate = run.reports.iter().find(|r| r.stage == "audit_gate").unwrap();
    assert!(gate.drop_reasons["audit_remove"] > 0);
}

#[test]
fn verdict_log_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("verdicts.jsonl");
    let c = Client::new();
    let base = start(Some(log.clone()));
    let (st, _) = post(&c, &base, r#"{"lang":"fr","decision":"filter-note","issues":["short_docs"]}"#);
    assert_eq!(st, StatusCode::CREATED);

    let base = start(Some(log));
    let export: Value = c.get(format!("{base}/export")).send().unwrap().json().unwrap();
    assert_eq!(export["fr"]["decision"], "filter-note");
    assert_eq!(export["fr"]["issues"], json!(["short_docs"]));
    let (_, v) = post(&c, &base, r#"{"lang":"fr","decision":"keep"}"#);
    assert_eq!(v["id"], "v000002");
}
