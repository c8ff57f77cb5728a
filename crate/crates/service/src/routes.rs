use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use maud_core::assessment::Session;
use maud_core::error::parse_document;
use maud_core::evaluation::{compare_modes, evaluate};
use maud_core::rules::{load_knowledge_base, FactSet, KnowledgeBase};
use maud_core::{content_fingerprint, UserProfile};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::documents::{
    AnswerRequest, AnswerResponse, CreateSession, EvaluateRequest, EvaluateResponse,
    EvaluationMode, EvaluationOutput, FinalizeRequest, FitBetaReport, FitBetaRequest,
    ProfileUpload, SessionLog, SessionRecord, SessionView, StoredProfile,
};
use crate::error::ApiError;
use crate::store::{Collection, IndexEntry, Store};

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<Store>,
}

impl From<std::io::Error> for ApiError {
    fn from(err: std::io::Error) -> Self {
        ApiError::storage(err)
    }
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/question", get(session_question))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/finalize", post(finalize_session))
        .route("/profiles", get(list_profiles).post(upload_profile))
        .route("/profiles/{id}", get(fetch_profile))
        .route("/kbs", get(list_kbs).post(upload_kb))
        .route("/kbs/{id}", get(fetch_kb))
        .route("/evaluate", post(evaluate_request))
        .route("/fit-beta", post(fit_beta_request))
        .with_state(AppState { store })
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    Ok(parse_document(body)?)
}

fn encode<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("documents serialize")
}

fn raw_json(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn create_session(
    State(app): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let request: CreateSession = parse(&body)?;
    let session = Session::start_with(request.attributes, request.ce_questions)?;
    let record = SessionRecord {
        owner: request.owner.clone(),
        created: chrono::Utc::now(),
        profile_id: None,
        session,
    };
    // session ids are the store's document ids
    let mut view = None;
    app.store
        .insert(Collection::Sessions, request.owner, |id, created| {
            let mut record = record.clone();
            record.session.id = id.to_string();
            record.created = created;
            view = Some(SessionView::of(&record));
            (encode(&record), String::new())
        })?;
    Ok((
        StatusCode::CREATED,
        Json(view.expect("insert ran the builder")),
    ))
}

fn load_session(app: &AppState, id: &str) -> ApiResult<SessionRecord> {
    let bytes = app
        .store
        .get(Collection::Sessions, id)?
        .ok_or_else(|| ApiError::not_found("session", id))?;
    parse(&bytes)
}

async fn session_question(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    Ok(Json(SessionView::of(&load_session(&app, &id)?)))
}

async fn submit_answer(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<AnswerResponse>> {
    let answer: AnswerRequest = parse(&body)?;
    let response = app
        .store
        .update(Collection::Sessions, &id, |bytes| {
            let mut record: SessionRecord = parse(bytes)?;
            record.session.submit_answer(answer.index, answer.value)?;
            let accepted = record
                .session
                .responses
                .last()
                .cloned()
                .expect("an accepted answer is logged");
            let view = SessionView::of(&record);
            Ok::<_, ApiError>((
                Some(encode(&record)),
                AnswerResponse {
                    accepted,
                    session: view,
                },
            ))
        })?
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    Ok(Json(response))
}

fn store_profile(
    app: &AppState,
    owner: Option<String>,
    profile: UserProfile,
    session: Option<SessionLog>,
) -> ApiResult<Vec<u8>> {
    let fingerprint = profile.fingerprint();
    let mut stored = None;
    app.store
        .insert(Collection::Profiles, owner.clone(), |id, created| {
            let doc = StoredProfile {
                id: id.to_string(),
                owner,
                created,
                fingerprint: fingerprint.clone(),
                profile,
                session,
            };
            let bytes = encode(&doc);
            stored = Some(bytes.clone());
            (bytes, fingerprint)
        })?;
    Ok(stored.expect("insert ran the builder"))
}

/// Finalizing twice returns the profile stored the first time.
async fn finalize_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let request: FinalizeRequest = if body.iter().all(u8::is_ascii_whitespace) {
        FinalizeRequest::default()
    } else {
        parse(&body)?
    };
    let outcome = app
        .store
        .update(Collection::Sessions, &id, |bytes| {
            let mut record: SessionRecord = parse(bytes)?;
            if let Some(profile_id) = &record.profile_id {
                let existing = app
                    .store
                    .get(Collection::Profiles, profile_id)?
                    .ok_or_else(|| ApiError::not_found("profile", profile_id))?;
                return Ok::<_, ApiError>((None, (StatusCode::OK, existing)));
            }
            let profile = record.session.finalize()?;
            let owner = request.owner.clone().or_else(|| record.owner.clone());
            let stored =
                store_profile(&app, owner, profile, Some(SessionLog::of(&record.session)))?;
            let doc: StoredProfile = parse(&stored)?;
            record.profile_id = Some(doc.id);
            Ok((Some(encode(&record)), (StatusCode::CREATED, stored)))
        })?
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    let (status, bytes) = outcome;
    Ok((status, raw_json(bytes)).into_response())
}

async fn list_profiles(State(app): State<AppState>) -> ApiResult<Json<Vec<IndexEntry>>> {
    Ok(Json(app.store.list(Collection::Profiles)?))
}

/// A profile upload may carry the session log it came from; the log must
/// replay to exactly the uploaded profile.
async fn upload_profile(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let upload: ProfileUpload = parse(&body)?;
    if let Some(log) = &upload.session {
        let replayed = log.replay()?;
        if replayed != upload.profile {
            return Err(ApiError::new(
                "replay_mismatch",
                "the session log does not replay to the uploaded profile",
            )
            .with_field("session"));
        }
    }
    let stored = store_profile(&app, upload.owner, upload.profile, upload.session)?;
    Ok((StatusCode::CREATED, raw_json(stored)).into_response())
}

async fn fetch_profile(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = app
        .store
        .get(Collection::Profiles, &id)?
        .ok_or_else(|| ApiError::not_found("profile", &id))?;
    Ok(raw_json(bytes))
}

async fn list_kbs(State(app): State<AppState>) -> ApiResult<Json<Vec<IndexEntry>>> {
    Ok(Json(app.store.list(Collection::Kbs)?))
}

/// Stores the document bytes exactly as uploaded, after validation.
async fn upload_kb(
    State(app): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<IndexEntry>)> {
    let kb = load_knowledge_base(&body)?;
    let fingerprint = content_fingerprint(&body);
    let entry = app
        .store
        .insert(Collection::Kbs, Some(kb.document.name.clone()), |_, _| {
            (body.to_vec(), fingerprint)
        })?;
    Ok((StatusCode::CREATED, Json(entry)))
}

async fn fetch_kb(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = app
        .store
        .get(Collection::Kbs, &id)?
        .ok_or_else(|| ApiError::not_found("knowledge base", &id))?;
    Ok(raw_json(bytes))
}

fn load_kb(app: &AppState, id: &str) -> ApiResult<KnowledgeBase> {
    let bytes = app
        .store
        .get(Collection::Kbs, id)?
        .ok_or_else(|| ApiError::not_found("knowledge base", id))?;
    Ok(load_knowledge_base(&bytes)?)
}

fn load_profile(app: &AppState, id: &str) -> ApiResult<UserProfile> {
    let bytes = app
        .store
        .get(Collection::Profiles, id)?
        .ok_or_else(|| ApiError::not_found("profile", id))?;
    Ok(parse::<StoredProfile>(&bytes)?.profile)
}

async fn evaluate_request(
    State(app): State<AppState>,
    body: Bytes,
) -> ApiResult<Json<EvaluateResponse>> {
    let request: EvaluateRequest = parse(&body)?;
    let kb = load_kb(&app, &request.kb_id)?;
    let profile = load_profile(&app, &request.profile_id)?;
    let facts = FactSet::from_json(&encode(&request.facts))?;
    let result = match request.mode {
        EvaluationMode::Integrated => {
            EvaluationOutput::Integrated(evaluate(&kb, &facts, &profile)?)
        }
        EvaluationMode::Compare => {
            EvaluationOutput::Compare(Box::new(compare_modes(&kb, &facts, &profile)?))
        }
    };
    Ok(Json(EvaluateResponse {
        mode: request.mode,
        kb_id: request.kb_id,
        profile_id: request.profile_id,
        result,
    }))
}

async fn fit_beta_request(body: Bytes) -> ApiResult<Json<FitBetaReport>> {
    let request: FitBetaRequest = parse(&body)?;
    Ok(Json(request.run()?))
}
