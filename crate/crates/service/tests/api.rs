use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use maud_core::assessment::Session;
use maud_core::evaluation::{compare_modes, evaluate};
use maud_core::fixtures;
use maud_service::documents::{EvaluateResponse, EvaluationOutput, StoredProfile};
use maud_service::{router, Store};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Api {
    app: Router,
    _dir: TempDir,
}

struct Reply {
    status: StatusCode,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).expect("response is JSON")
    }
}

impl Api {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        Api {
            app: router(store),
            _dir: dir,
        }
    }

    async fn send(&self, method: Method, uri: &str, body: impl Into<Vec<u8>>) -> Reply {
        let request = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.into()))
            .unwrap();
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply { status, bytes }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, Vec::new()).await
    }

    async fn post(&self, uri: &str, body: &Value) -> Reply {
        self.send(Method::POST, uri, serde_json::to_vec(body).unwrap())
            .await
    }

    async fn store_kb(&self, bytes: &[u8]) -> String {
        let r = self.send(Method::POST, "/kbs", bytes.to_vec()).await;
        assert_eq!(
            r.status,
            StatusCode::CREATED,
            "{}",
            String::from_utf8_lossy(&r.bytes)
        );
        r.json()["id"].as_str().unwrap().to_string()
    }

    async fn store_profile(&self, profile: &maud_core::UserProfile) -> String {
        let r = self.post("/profiles", &json!({"profile": profile})).await;
        assert_eq!(r.status, StatusCode::CREATED);
        r.json()["id"].as_str().unwrap().to_string()
    }
}

fn attributes() -> Value {
    serde_json::from_str(fixtures::BUMPER_ATTRIBUTES_JSON).unwrap()
}

/// Mid-range answers: the CE domain midpoint and a fixed probability.
fn answer_for(question: &Value) -> f64 {
    if question["kind"] == "certainty_equivalent" {
        let (lo, hi) = (
            question["domain"]["min"].as_f64().unwrap(),
            question["domain"]["max"].as_f64().unwrap(),
        );
        lo + 0.4 * (hi - lo)
    } else {
        0.15 + 0.1 * question["attribute_index"].as_f64().unwrap()
    }
}

#[tokio::test]
async fn session_lifecycle() {
    let api = Api::new();
    let created = api
        .post(
            "/sessions",
            &json!({"attributes": attributes(), "owner": "ana"}),
        )
        .await;
    assert_eq!(created.status, StatusCode::CREATED);
    let view = created.json();
    let id = view["id"].as_str().unwrap().to_string();
    assert_eq!(view["question"]["index"], 0);
    assert_eq!(view["question"]["kind"], "certainty_equivalent");
    assert_eq!(view["question_count"], 8);

    let early = api
        .post(&format!("/sessions/{id}/finalize"), &json!({}))
        .await;
    assert_eq!(early.status, StatusCode::CONFLICT);
    assert_eq!(early.json()["code"], "session_incomplete");
    assert_eq!(early.json()["details"]["remaining"], 8);

    let stale = api
        .post(
            &format!("/sessions/{id}/answers"),
            &json!({"index": 3, "value": 100.0}),
        )
        .await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    assert_eq!(stale.json()["code"], "sequence");

    let outside = api
        .post(
            &format!("/sessions/{id}/answers"),
            &json!({"index": 0, "value": 1000.0}),
        )
        .await;
    assert_eq!(outside.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = outside.json();
    assert_eq!(err["code"], "answer_domain");
    assert_eq!(err["field"], "value");
    let (min, max) = (
        err["details"]["min"].as_f64().unwrap(),
        err["details"]["max"].as_f64().unwrap(),
    );
    assert!(min >= 20.0 && max <= 200.0 && min < max);

    let mut direct = Session::start(fixtures::bumper_attributes()).unwrap();
    loop {
        let view = api.get(&format!("/sessions/{id}/question")).await.json();
        if view["complete"] == true {
            assert!(view["question"].is_null());
            break;
        }
        let question = &view["question"];
        let index = question["index"].as_u64().unwrap() as usize;
        let value = answer_for(question);
        let r = api
            .post(
                &format!("/sessions/{id}/answers"),
                &json!({"index": index, "value": value}),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK);
        assert_eq!(r.json()["accepted"]["value"], value);
        direct.submit_answer(index, value).unwrap();
    }
    let late = api
        .post(
            &format!("/sessions/{id}/answers"),
            &json!({"index": 8, "value": 0.5}),
        )
        .await;
    assert_eq!(late.status, StatusCode::CONFLICT);
    assert_eq!(late.json()["code"], "session_complete");

    let finalized = api
        .send(Method::POST, &format!("/sessions/{id}/finalize"), "")
        .await;
    assert_eq!(finalized.status, StatusCode::CREATED);
    let stored: StoredProfile = serde_json::from_slice(&finalized.bytes).unwrap();
    assert_eq!(stored.owner.as_deref(), Some("ana"));
    // the API adds no numeric behaviour
    let expected = direct.finalize().unwrap();
    assert_eq!(stored.profile, expected);
    assert_eq!(stored.fingerprint, expected.fingerprint());
    assert_eq!(stored.session.as_ref().unwrap().replay().unwrap(), expected);

    let again = api
        .post(&format!("/sessions/{id}/finalize"), &json!({}))
        .await;
    assert_eq!(again.status, StatusCode::OK);
    assert_eq!(again.bytes, finalized.bytes);

    let fetched = api.get(&format!("/profiles/{}", stored.id)).await;
    assert_eq!(fetched.bytes, finalized.bytes);
    let list = api.get("/profiles").await.json();
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["fingerprint"], stored.fingerprint.as_str());
    let view = api.get(&format!("/sessions/{id}/question")).await.json();
    assert_eq!(view["profile_id"], stored.id.as_str());
}

#[tokio::test]
async fn session_creation_is_validated() {
    let api = Api::new();
    let one = json!({"attributes": [attributes()[0].clone()]});
    let r = api.post("/sessions", &one).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "unsupported_profile");

    let r = api.send(Method::POST, "/sessions", "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["code"], "malformed_json");

    let r = api
        .post(
            "/sessions",
            &json!({"attributes": attributes(), "colour": 1}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "malformed_document");
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let api = Api::new();
    let missing = uuid_like();
    for uri in [
        format!("/sessions/{missing}/question"),
        format!("/profiles/{missing}"),
        format!("/kbs/{missing}"),
        "/profiles/not-an-id".to_string(),
        "/kbs/..%2Findex".to_string(),
    ] {
        let r = api.get(&uri).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(r.json()["code"], "not_found");
    }
    let r = api
        .post(
            &format!("/sessions/{missing}/answers"),
            &json!({"index": 0, "value": 1.0}),
        )
        .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = api
        .post(&format!("/sessions/{missing}/finalize"), &json!({}))
        .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let kb = api.store_kb(fixtures::BUMPER_KB_JSON.as_bytes()).await;
    let facts: Value = serde_json::from_str(fixtures::TRUCK_FACTS_JSON).unwrap();
    let r = api
        .post(
            "/evaluate",
            &json!({"kb_id": kb, "profile_id": missing, "facts": facts}),
        )
        .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert!(r.json()["message"].as_str().unwrap().contains("profile"));
}

fn uuid_like() -> &'static str {
    "9b2f4c1e-8d3a-4e5f-a6b7-c8d9e0f1a2b3"
}

#[tokio::test]
async fn knowledge_bases_round_trip_and_list_in_order() {
    let api = Api::new();
    let first = api.store_kb(fixtures::BUMPER_KB_JSON.as_bytes()).await;
    let mut renamed: Value = serde_json::from_str(fixtures::BUMPER_KB_JSON).unwrap();
    renamed["name"] = "second".into();
    let second_bytes = serde_json::to_vec_pretty(&renamed).unwrap();
    let second = api.store_kb(&second_bytes).await;

    let fetched = api.get(&format!("/kbs/{first}")).await;
    assert_eq!(fetched.status, StatusCode::OK);
    assert_eq!(fetched.bytes, fixtures::BUMPER_KB_JSON.as_bytes());
    assert_eq!(api.get(&format!("/kbs/{second}")).await.bytes, second_bytes);

    let list = api.get("/kbs").await.json();
    let ids: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, [first.as_str(), second.as_str()]);
    assert_eq!(list[1]["label"], "second");
    assert_eq!(
        list[0]["fingerprint"],
        maud_core::content_fingerprint(fixtures::BUMPER_KB_JSON.as_bytes())
    );
}

#[tokio::test]
async fn invalid_knowledge_base_rejected_before_storage() {
    let api = Api::new();
    let mut doc: Value = serde_json::from_str(fixtures::BUMPER_KB_JSON).unwrap();
    doc["rules"][0]["effect"] = json!({"forbid": {"slot": "fascia", "material": "granite"}});
    let r = api.post("/kbs", &doc).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = r.json();
    assert_eq!(err["code"], "schema");
    assert!(!err["details"]["violations"].as_array().unwrap().is_empty());
    assert!(err["field"].as_str().unwrap().starts_with("rules"));
    assert_eq!(api.get("/kbs").await.json(), json!([]));
}

async fn evaluate_setup(api: &Api, profile: &maud_core::UserProfile) -> (String, String, Value) {
    let kb = api.store_kb(fixtures::BUMPER_KB_JSON.as_bytes()).await;
    let profile = api.store_profile(profile).await;
    let facts = serde_json::from_str(fixtures::TRUCK_FACTS_JSON).unwrap();
    (kb, profile, facts)
}

#[tokio::test]
async fn evaluate_matches_direct_module_calls() {
    let api = Api::new();
    for (profile, agree) in [
        (fixtures::typical_profile(), true),
        (fixtures::atypical_profile(), false),
    ] {
        let (kb, pid, facts) = evaluate_setup(&api, &profile).await;
        let r = api
            .post(
                "/evaluate",
                &json!({"kb_id": kb, "profile_id": pid, "facts": facts, "mode": "compare"}),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK);
        let response: EvaluateResponse = serde_json::from_slice(&r.bytes).unwrap();
        let direct =
            compare_modes(&fixtures::bumper_kb(), &fixtures::truck_facts(), &profile).unwrap();
        assert_eq!(direct.agree(), agree);
        let EvaluationOutput::Compare(report) = &response.result else {
            panic!("compare mode returns a comparison");
        };
        assert_eq!(report.differing_slots, direct.differing_slots);
        assert_eq!(
            serde_json::to_value(&response.result).unwrap(),
            serde_json::to_value(&direct).unwrap()
        );
        assert!(!report.evaluation.trace.is_empty());

        let r = api
            .post(
                "/evaluate",
                &json!({"kb_id": kb, "profile_id": pid, "facts": facts}),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK);
        let body = r.json();
        assert_eq!(body["mode"], "integrated");
        let direct = evaluate(&fixtures::bumper_kb(), &fixtures::truck_facts(), &profile).unwrap();
        assert_eq!(body["result"], serde_json::to_value(&direct).unwrap());
    }
}

#[tokio::test]
async fn malformed_facts_report_field_path() {
    let api = Api::new();
    let (kb, pid, mut facts) = evaluate_setup(&api, &fixtures::typical_profile()).await;
    facts["vehicle_type"] = "hovercraft".into();
    let r = api
        .post(
            "/evaluate",
            &json!({"kb_id": kb, "profile_id": pid, "facts": facts}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = r.json();
    assert_eq!(err["code"], "invalid_facts");
    assert_eq!(err["field"], "facts.vehicle_type");

    facts["vehicle_type"] = "pickup_truck".into();
    facts["curb_weight_lbs"] = json!(-5);
    let r = api
        .post(
            "/evaluate",
            &json!({"kb_id": kb, "profile_id": pid, "facts": facts}),
        )
        .await;
    assert_eq!(r.json()["field"], "facts.curb_weight_lbs");
}

#[tokio::test]
async fn infeasible_design_names_slot_and_rules() {
    let api = Api::new();
    let mut doc: Value = serde_json::from_str(fixtures::BUMPER_KB_JSON).unwrap();
    let rules = doc["rules"].as_array_mut().unwrap();
    for m in ["none", "thermoplastic", "thermoset"] {
        rules.push(json!({
            "id": format!("ban_{m}"), "category": "restriction", "objectivity": "objective",
            "effect": {"forbid": {"slot": "fascia", "material": m}}
        }));
    }
    let kb = api.store_kb(&serde_json::to_vec(&doc).unwrap()).await;
    let pid = api.store_profile(&fixtures::typical_profile()).await;
    let facts: Value = serde_json::from_str(fixtures::TRUCK_FACTS_JSON).unwrap();
    let r = api
        .post(
            "/evaluate",
            &json!({"kb_id": kb, "profile_id": pid, "facts": facts}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = r.json();
    assert_eq!(err["code"], "infeasible_design");
    assert_eq!(err["details"]["slot"], "fascia");
    let named: Vec<&str> = err["details"]["rules"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_str().unwrap())
        .collect();
    for m in ["none", "thermoplastic", "thermoset"] {
        assert!(named.contains(&format!("ban_{m}").as_str()), "{named:?}");
    }
}

#[tokio::test]
async fn fit_beta_endpoint() {
    let api = Api::new();
    let r = api
        .post(
            "/fit-beta",
            &json!({"lower": 10, "upper": 100, "p": 1.1, "mode": 18, "samples": 11}),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    let body = r.json();
    assert!((body["spec"]["q"].as_f64().unwrap() - 2.025).abs() < 1e-12);
    assert!((body["mean"].as_f64().unwrap() - 41.68).abs() < 1e-9);
    assert_eq!(body["density"].as_array().unwrap().len(), 11);

    let r = api
        .post(
            "/fit-beta",
            &json!({"lower": 10, "upper": 100, "p": 1.1, "mode": 180}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = r.json();
    assert_eq!(err["code"], "infeasible_fit");
    assert!(err["details"]["feasible_min"].is_number());

    let r = api
        .post("/fit-beta", &json!({"lower": 10, "upper": 100, "mode": 18}))
        .await;
    assert_eq!(r.json()["code"], "invalid_beta");
}

#[tokio::test]
async fn profile_upload_checks_session_log() {
    let api = Api::new();
    let created = api
        .post("/sessions", &json!({"attributes": attributes()}))
        .await
        .json();
    let id = created["id"].as_str().unwrap();
    loop {
        let view = api.get(&format!("/sessions/{id}/question")).await.json();
        if view["complete"] == true {
            break;
        }
        let q = &view["question"];
        api.post(
            &format!("/sessions/{id}/answers"),
            &json!({"index": q["index"], "value": answer_for(q)}),
        )
        .await;
    }
    let stored: StoredProfile = serde_json::from_slice(
        &api.post(&format!("/sessions/{id}/finalize"), &json!({}))
            .await
            .bytes,
    )
    .unwrap();

    let upload = json!({"owner": "bo", "profile": stored.profile, "session": stored.session});
    let r = api.post("/profiles", &upload).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let copy: StoredProfile = serde_json::from_slice(&r.bytes).unwrap();
    assert_eq!(copy.fingerprint, stored.fingerprint);
    assert_ne!(copy.id, stored.id);

    let mut tampered = upload.clone();
    let log = tampered["session"]["responses"].as_array_mut().unwrap();
    let last = log
        .iter_mut()
        .rev()
        .find(|r| r["kind"] == "probability_equivalence")
        .unwrap();
    last["value"] = json!(0.61);
    let r = api.post("/profiles", &tampered).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "replay_mismatch");
    assert_eq!(
        api.get("/profiles").await.json().as_array().unwrap().len(),
        2
    );

    let mut invalid = serde_json::to_value(fixtures::typical_profile()).unwrap();
    invalid["scaling_constants"][0] = json!(1.5);
    let r = api.post("/profiles", &json!({"profile": invalid})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["field"], "profile");
}
