use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

use liverlp::classifier::{builtin_soft_fragment, Classifier, BUILTIN_ID};
use liverlp::schema::Schema;
use liverlp::service::{router, seed, AppState};
use liverlp::store::Store;

struct Api {
    _dir: TempDir,
    app: Router,
}

impl Api {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let store = Store::open(dir.path()).unwrap();
        seed(&store).unwrap();
        let app = router(AppState {
            store: Arc::new(store),
            schema: Arc::new(Schema::canonical()),
        });
        Api { _dir: dir, app }
    }

    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header(header::CONTENT_TYPE, "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn json(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.send(method, uri, body).await;
        let v = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, v)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.json(Method::GET, uri, None).await
    }

    async fn post(&self, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.json(Method::POST, uri, body).await
    }
}

fn bmi_classifier(id: &str) -> Value {
    json!({
        "id": id,
        "name": "BMI only",
        "rules": [{
            "id": "bmi_gt_35",
            "label": "bmi_gt_35",
            "value": 2,
            "phase": "SOFT",
            "conditions": [{ "attribute": "bmi", "comparator": ">", "operand": 35 }]
        }],
        "bands": [
            { "name": "low", "min": 0, "max": 5 },
            { "name": "high", "min": 6 }
        ]
    })
}

fn scores_by_case(run: &Value) -> Vec<(i64, i64, i64, String)> {
    run["scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            (
                s["case_id"].as_i64().unwrap(),
                s["psoft_score"].as_i64().unwrap(),
                s["soft_score"].as_i64().unwrap(),
                s["risk"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[tokio::test]
async fn schema_lists_the_canonical_attributes() {
    let api = Api::new();
    let (status, v) = api.get("/api/v1/schema").await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = v["attributes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, Schema::canonical().names().collect::<Vec<_>>());
}

#[tokio::test]
async fn create_then_read_returns_the_document_with_timestamps() {
    let api = Api::new();
    let (status, created) = api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["version"], 1);
    assert!(created["created"].is_string());
    assert_eq!(created["created"], created["modified"]);

    let (status, read) = api.get("/api/v1/classifiers/bmi").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(read, created);
    let sent = bmi_classifier("bmi");
    for field in ["id", "name", "rules", "bands"] {
        assert_eq!(read[field], sent[field], "{field}");
    }

    let (_, list) = api.get("/api/v1/classifiers").await;
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec!["bmi", BUILTIN_ID]);
}

#[tokio::test]
async fn creating_an_existing_id_conflicts() {
    let api = Api::new();
    assert_eq!(api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await.0, StatusCode::CREATED);
    let (status, body) = api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn update_bumps_the_version_and_keeps_creation_time() {
    let api = Api::new();
    let (_, created) = api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    let mut doc = bmi_classifier("bmi");
    doc["name"] = json!("renamed");
    let (status, updated) = api.json(Method::PUT, "/api/v1/classifiers/bmi", Some(doc)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(updated["version"], 2);
    assert_eq!(updated["name"], "renamed");
    assert_eq!(updated["created"], created["created"]);
}

#[tokio::test]
async fn invalid_documents_are_rejected_with_findings() {
    let api = Api::new();
    let mut doc = bmi_classifier("bad");
    doc["rules"][0]["conditions"][0]["attribute"] = json!("height");
    let (status, body) = api.post("/api/v1/classifiers", Some(doc.clone())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let findings = body["findings"].as_array().unwrap();
    assert!(findings.iter().any(|f| f["kind"] == "unknown_attribute" && f["rule"] == "bmi_gt_35"));
    assert_eq!(api.get("/api/v1/classifiers/bad").await.0, StatusCode::NOT_FOUND);

    let (status, body) = api.post("/api/v1/validate", Some(doc)).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!body["findings"].as_array().unwrap().is_empty());

    let mut doc = bmi_classifier("bmi");
    doc["bands"] = json!([{ "name": "low", "min": 0, "max": 1 }, { "name": "high", "min": 5 }]);
    api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    let (status, body) = api.json(Method::PUT, "/api/v1/classifiers/bmi", Some(doc)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["findings"].as_array().unwrap().iter().any(|f| f["kind"] == "band_gap"));
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let api = Api::new();
    for uri in [
        "/api/v1/classifiers/nope",
        "/api/v1/classifiers/nope/compiled",
        "/api/v1/runs/run-9999",
        "/api/v1/runs/run-9999/report",
        "/api/v1/datasets/nope",
        "/api/v1/transplants/12345",
        "/api/v1/transplants?dataset=nope",
    ] {
        assert_eq!(api.get(uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    assert_eq!(
        api.post("/api/v1/transplants/686/apply/nope", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.post("/api/v1/transplants/12345/apply/soft-fragment", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.post("/api/v1/classifiers/nope/run", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.post("/api/v1/classifiers/soft-fragment/run?dataset=nope", None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn editing_a_clone_leaves_the_original_unchanged() {
    let api = Api::new();
    let (_, before) = api.get("/api/v1/classifiers/soft-fragment").await;

    let (status, copy) = api.post("/api/v1/classifiers/soft-fragment/clone", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(copy["id"], "copy-of-soft-fragment");
    assert_eq!(copy["rules"], before["rules"]);
    assert_eq!(copy["version"], 1);

    let mut edited = copy.clone();
    edited["rules"].as_array_mut().unwrap().push(json!({
        "id": "icu_extra",
        "label": "icu_extra",
        "value": 4,
        "phase": "SOFT",
        "conditions": [{ "attribute": "icu_pretransplant", "comparator": "=", "operand": true }]
    }));
    let (status, after_edit) = api
        .json(Method::PUT, "/api/v1/classifiers/copy-of-soft-fragment", Some(edited))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after_edit["rules"].as_array().unwrap().len(), 9);
    assert_eq!(after_edit["version"], 2);

    let (_, after) = api.get("/api/v1/classifiers/soft-fragment").await;
    assert_eq!(after, before);

    let (status, named) = api
        .post(
            "/api/v1/classifiers/soft-fragment/clone",
            Some(json!({ "id": "variant", "name": "Variant" })),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(named["name"], "Variant");
    assert_eq!(
        api.post("/api/v1/classifiers/soft-fragment/clone", Some(json!({ "id": "variant" }))).await.0,
        StatusCode::CONFLICT
    );
}

#[tokio::test]
async fn deleting_a_referenced_classifier_needs_force() {
    let api = Api::new();
    api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    assert_eq!(
        api.json(Method::DELETE, "/api/v1/classifiers/bmi", None).await.0,
        StatusCode::NO_CONTENT
    );
    assert_eq!(api.get("/api/v1/classifiers/bmi").await.0, StatusCode::NOT_FOUND);

    api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    assert_eq!(api.post("/api/v1/classifiers/bmi/run", None).await.0, StatusCode::CREATED);
    let (status, body) = api.json(Method::DELETE, "/api/v1/classifiers/bmi", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("run-0001"));
    assert_eq!(api.get("/api/v1/classifiers/bmi").await.0, StatusCode::OK);
    assert_eq!(
        api.json(Method::DELETE, "/api/v1/classifiers/bmi?force=true", None).await.0,
        StatusCode::NO_CONTENT
    );
    assert_eq!(api.get("/api/v1/classifiers/bmi").await.0, StatusCode::NOT_FOUND);
    assert_eq!(api.get("/api/v1/runs/run-0001").await.0, StatusCode::OK);
}

#[tokio::test]
async fn running_the_builtin_over_the_demo_dataset() {
    let api = Api::new();
    let (status, run) = api.post("/api/v1/classifiers/soft-fragment/run?dataset=demo", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(run["run_id"], "run-0001");
    assert_eq!(run["classifier_id"], BUILTIN_ID);
    assert_eq!(run["classifier_version"], 1);
    assert_eq!(run["dataset_id"], "demo");
    assert!(run["failures"].as_array().unwrap().is_empty());

    let scores = scores_by_case(&run);
    assert_eq!(scores.len(), 76);
    assert!(scores.contains(&(686, 0, 0, "low".into())));
    assert!(scores.contains(&(763, 20, 22, "high_moderate".into())));
    assert_eq!(run["explanations"].as_array().unwrap().len(), 76);

    let (status, case) = api.get("/api/v1/runs/run-0001/cases/763").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(case["score"]["soft_score"], 22);
    assert!(case["trees"]
        .as_str()
        .unwrap()
        .starts_with("* Risk level of 763 is high_moderate because SOFT score is 22\n"));
    assert_eq!(api.get("/api/v1/runs/run-0001/cases/1").await.0, StatusCode::NOT_FOUND);

    let (_, runs) = api.get("/api/v1/runs").await;
    assert_eq!(runs.as_array().unwrap().len(), 1);
    assert_eq!(runs[0]["run_id"], "run-0001");
}

#[tokio::test]
async fn stored_runs_are_reread_byte_for_byte() {
    let api = Api::new();
    api.post("/api/v1/classifiers/soft-fragment/run", None).await;
    let (_, first) = api.send(Method::GET, "/api/v1/runs/run-0001", None).await;
    api.post("/api/v1/classifiers", Some(bmi_classifier("bmi"))).await;
    api.post("/api/v1/classifiers/bmi/run", None).await;
    let mut c: Value = api.get("/api/v1/classifiers/soft-fragment").await.1;
    c["name"] = json!("edited");
    api.json(Method::PUT, "/api/v1/classifiers/soft-fragment", Some(c)).await;
    let (_, second) = api.send(Method::GET, "/api/v1/runs/run-0001", None).await;
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[tokio::test]
async fn rerunning_reproduces_scores_and_explanations() {
    let api = Api::new();
    let (_, a) = api.post("/api/v1/classifiers/soft-fragment/run", None).await;
    let (_, b) = api.post("/api/v1/classifiers/soft-fragment/run", None).await;
    assert_eq!(a["run_id"], "run-0001");
    assert_eq!(b["run_id"], "run-0002");
    assert_eq!(a["scores"], b["scores"]);
    assert_eq!(a["explanations"], b["explanations"]);
}

#[tokio::test]
async fn report_filters_by_band() {
    let api = Api::new();
    api.post("/api/v1/classifiers/soft-fragment/run", None).await;
    let (_, run) = api.get("/api/v1/runs/run-0001").await;
    let scores = scores_by_case(&run);
    let expected: Vec<i64> = scores
        .iter()
        .filter(|s| s.3 == "high_moderate")
        .map(|s| s.0)
        .collect();
    assert!(expected.contains(&763));

    let (status, html) = api
        .send(Method::GET, "/api/v1/runs/run-0001/report?risk=high_moderate", None)
        .await;
    assert_eq!(status, StatusCode::OK);
    let html = String::from_utf8(html).unwrap();
    let shown: Vec<i64> = html
        .match_indices("<tr data-case=\"")
        .map(|(i, m)| {
            let rest = &html[i + m.len()..];
            rest[..rest.find('"').unwrap()].parse().unwrap()
        })
        .collect();
    assert_eq!(shown, expected);
    assert!(html.contains(&format!("{} of 76 cases shown.", expected.len())));
    assert!(!html.contains("id=\"case-686\""));

    let (_, html) = api
        .send(Method::GET, "/api/v1/runs/run-0001/report?rule=cold_ischemia_0_6h&min=&max=0", None)
        .await;
    let html = String::from_utf8(html).unwrap();
    assert!(html.contains("<tr data-case=\"686\""));
    assert!(!html.contains("<tr data-case=\"763\""));

    let (_, html) = api.send(Method::GET, "/api/v1/runs/run-0001/report", None).await;
    let html = String::from_utf8(html).unwrap();
    assert!(html.contains("76 of 76 cases shown."));
    assert!(!html.contains("http"));
    assert!(!html.contains("src="));
}

#[tokio::test]
async fn applying_to_the_pinned_low_case() {
    let api = Api::new();
    let (status, r) = api.post("/api/v1/transplants/686/apply/soft-fragment", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["score"]["soft_score"], 0);
    assert_eq!(r["score"]["risk"], "low");
    let activated: Vec<(String, i64)> = r["score"]["activated"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["rule"].as_str().unwrap().to_string(), a["weight"].as_i64().unwrap()))
        .collect();
    assert_eq!(
        activated,
        vec![("cold_ischemia_0_6h".to_string(), -3), ("donor_age2_gt_60".to_string(), 3)]
    );
    assert_eq!(api.get("/api/v1/runs").await.1, json!([]));
}

#[tokio::test]
async fn applying_to_a_case_without_attributes() {
    let api = Api::new();
    let (status, _) = api
        .post(
            "/api/v1/datasets",
            Some(json!({ "id": "blank", "name": "blank", "records": [{ "case_id": 1, "values": {} }] })),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, r) = api
        .post("/api/v1/transplants/1/apply/soft-fragment?dataset=blank", None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["score"]["soft_score"], 0);
    assert_eq!(r["score"]["psoft_score"], 0);
    assert_eq!(r["score"]["risk"], "low");
    assert_eq!(r["score"]["activated"], json!([]));
}

#[tokio::test]
async fn transplants_are_listed_in_ascending_case_order() {
    let api = Api::new();
    let (status, page) = api.get("/api/v1/transplants").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["dataset"], "demo");
    assert_eq!(page["total"], 76);
    let ids: Vec<i64> = page["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["case_id"].as_i64().unwrap())
        .collect();
    assert_eq!(ids.len(), 76);
    assert!(ids.windows(2).all(|w| w[0] < w[1]));

    let (_, page) = api.get("/api/v1/transplants?offset=10&limit=5").await;
    let window: Vec<i64> = page["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["case_id"].as_i64().unwrap())
        .collect();
    assert_eq!(window, ids[10..15]);

    let (status, one) = api.get("/api/v1/transplants/763").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(one["values"]["bmi"], 28);
}

#[tokio::test]
async fn csv_import_and_bad_rows() {
    let api = Api::new();
    let csv = "case_id,bmi,icu_pretransplant\n2,40,true\n1,20,\n";
    let (status, d) = api
        .json_text(Method::POST, "/api/v1/datasets/small/csv?name=Small", csv)
        .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(d["name"], "Small");
    assert_eq!(d["records"][0]["case_id"], 1);

    let (_, list) = api.get("/api/v1/datasets").await;
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec!["demo", "small"]);

    let (status, run) = api
        .post("/api/v1/classifiers/soft-fragment/run?dataset=small", None)
        .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(run["scores"][0]["soft_score"], 0);
    assert_eq!(run["scores"][1]["psoft_score"], 6);
    assert_eq!(run["scores"][1]["soft_score"], 8);

    let (status, body) = api
        .json_text(Method::POST, "/api/v1/datasets/broken/csv", "case_id,bmi\n1,heavy\n")
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("bmi"));
}

#[tokio::test]
async fn compiled_text_and_rule_preview() {
    let api = Api::new();
    let (status, text) = api.send(Method::GET, "/api/v1/classifiers/soft-fragment/compiled", None).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(text).unwrap();
    assert!(text.contains("#explain risk(P) :- case(P)."));

    let rule = json!({
        "id": "donor_age_10_20",
        "label": "donor_age_10_20",
        "value": -2,
        "phase": "SOFT",
        "conditions": [
            { "attribute": "donor_age", "comparator": ">=", "operand": 10 },
            { "attribute": "donor_age", "comparator": "<=", "operand": 20 }
        ]
    });
    let (status, preview) = api.post("/api/v1/preview", Some(rule)).await;
    assert_eq!(status, StatusCode::OK);
    let line = preview["line"].as_str().unwrap();
    assert_eq!(
        line,
        "\"donor_age_10_20 \\t[-2]\" :: cat_val(P, donor_age_10_20) := -2 :- donor_age(P)>=10, donor_age(P)<=20."
    );
    assert!(text.lines().any(|l| l == line));
    assert_eq!(preview["findings"], json!([]));

    let builtin: Classifier = serde_json::from_value(api.get("/api/v1/classifiers/soft-fragment").await.1).unwrap();
    for r in &builtin.rules {
        let (_, p) = api.post("/api/v1/preview", Some(serde_json::to_value(r).unwrap())).await;
        let line = p["line"].as_str().unwrap();
        assert!(text.lines().any(|l| l == line), "{line}");
    }
    assert_eq!(builtin.rules, builtin_soft_fragment().rules);

    let bad = json!({
        "id": "weird",
        "label": "weird",
        "value": 1,
        "phase": "SOFT",
        "conditions": [{ "attribute": "bmi", "comparator": ">", "operand": true }]
    });
    let (_, p) = api.post("/api/v1/preview", Some(bad)).await;
    assert!(p["findings"].as_array().unwrap().iter().any(|f| f["kind"] == "type_mismatch"));
}

impl Api {
    async fn json_text(&self, method: Method, uri: &str, body: &str) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header(header::CONTENT_TYPE, "text/csv")
            .body(Body::from(body.to_string()))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }
}
