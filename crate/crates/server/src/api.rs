//! HTTP endpoints.
//!
//! Members authenticate with `Authorization: Bearer <session>`; moderators with
//! `Authorization: Moderator <id>:<secret>`. Errors are `{"error": "..."}`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use axum::extract::{FromRequestParts, MatchedPath, Path, Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use slowvoice_core::access::{AccessError, ACCESS_ACKNOWLEDGEMENT};
use slowvoice_core::content::{
    BrowseFilter, BrowseSort, Category, ContentError, ExportRecord, MessageId, MessageKind, Submission,
    TallyView, VoteDirection,
};
use slowvoice_core::moderation::{
    ChallengeKind, DecisionInput, ModerationError, ModerationSession, ModerationSessionId, ModeratorId,
    Rationale, Reason, Resolution, Round, SessionState, SessionSummary, Vote,
};
use slowvoice_core::release::PublishLabel;
use slowvoice_core::{Board, BoardError, WorklistItem};

use crate::state::AppState;

// --- errors ---

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "not signed in")
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

fn content_error(e: ContentError) -> ApiError {
    use ContentError::*;
    match e {
        SessionExpired => ApiError::unauthorized(),
        // Pending and unknown posts look the same from outside.
        UnknownPost | PostNotPublished => ApiError::not_found("post"),
        UnknownMessage => ApiError::not_found("message"),
        NotPending | NotApproved => ApiError::new(StatusCode::CONFLICT, e.to_string()),
        DuplicateCategory(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        _ => ApiError::new(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

fn moderation_error(e: ModerationError) -> ApiError {
    use ModerationError::*;
    if let Content(c) = e {
        return content_error(c);
    }
    let status = match &e {
        UnknownModerator(_) | NotPresent(_) => StatusCode::FORBIDDEN,
        UnknownSession | NotInWorklist => StatusCode::NOT_FOUND,
        DuplicateSession | SessionClosed | AlreadyDecided | Undecided(_) | RosterFloor => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    };
    ApiError::new(status, e.to_string())
}

impl From<BoardError> for ApiError {
    fn from(e: BoardError) -> Self {
        match e {
            BoardError::Access(AccessError::MalformedAddress) => {
                ApiError::new(StatusCode::BAD_REQUEST, "malformed email address")
            }
            BoardError::Access(AccessError::InvalidToken) => {
                ApiError::new(StatusCode::UNAUTHORIZED, AccessError::InvalidToken.to_string())
            }
            BoardError::Access(AccessError::Unauthorized) => ApiError::unauthorized(),
            BoardError::Access(AccessError::PseudonymSpaceExhausted) => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no pseudonyms available, try later")
            }
            BoardError::Content(c) => content_error(c),
            BoardError::Moderation(m) => moderation_error(m),
            BoardError::Schedule(s) => ApiError::new(StatusCode::BAD_REQUEST, s.to_string()),
            other => {
                tracing::error!(error = %other, "internal error");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error")
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

// --- authentication ---

/// A member's session id from a bearer header. Validity is checked by the board.
pub struct Member(String);

impl FromRequestParts<AppState> for Member {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _state: &AppState) -> Result<Self, Self::Rejection> {
        parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|h| h.to_str().ok())
            .and_then(|h| h.strip_prefix("Bearer "))
            .map(|s| Member(s.trim().to_string()))
            .ok_or_else(ApiError::unauthorized)
    }
}

pub struct Moderator(ModeratorId);

impl FromRequestParts<AppState> for Moderator {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|h| h.to_str().ok())
            .and_then(|h| state.moderators().authenticate(h))
            .map(Moderator)
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "moderator credentials required"))
    }
}

// --- wire records ---

#[derive(Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub now: DateTime<Utc>,
    pub timezone: String,
    pub release_times: Vec<String>,
    pub next_release: DateTime<Utc>,
    pub next_label: PublishLabel,
}

#[derive(Serialize, Deserialize)]
pub struct AccessRequest {
    pub email: String,
}

#[derive(Serialize, Deserialize)]
pub struct Acknowledgement {
    pub message: String,
}

#[derive(Serialize, Deserialize)]
pub struct RedeemRequest {
    pub token: String,
}

#[derive(Serialize, Deserialize)]
pub struct SessionResponse {
    pub session: String,
    pub pseudonym: String,
    pub expires_at: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
pub struct NewPost {
    pub category: String,
    #[serde(default)]
    pub title: Option<String>,
    pub body: String,
}

#[derive(Serialize, Deserialize)]
pub struct NewComment {
    pub body: String,
}

#[derive(Serialize, Deserialize)]
pub struct SubmitReceipt {
    pub id: MessageId,
    pub kind: MessageKind,
    pub pseudonym: String,
    pub state: String,
    pub next_release: DateTime<Utc>,
    pub next_label: PublishLabel,
}

#[derive(Serialize, Deserialize)]
pub struct VoteRequest {
    pub direction: VoteDirection,
}

#[derive(Serialize, Deserialize)]
pub struct Votes {
    pub up: u64,
    pub down: u64,
    pub net: i64,
}

impl From<TallyView> for Votes {
    fn from(t: TallyView) -> Self {
        Votes {
            up: t.up,
            down: t.down,
            net: t.net,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct PostView {
    #[serde(flatten)]
    pub record: ExportRecord,
    pub votes: Votes,
    pub comment_count: usize,
}

#[derive(Serialize, Deserialize)]
pub struct ThreadView {
    pub post: PostView,
    pub comments: Vec<ExportRecord>,
}

#[derive(Deserialize)]
pub struct BrowseQuery {
    pub category: Option<String>,
    pub q: Option<String>,
    #[serde(default)]
    pub sort: BrowseSort,
}

#[derive(Serialize, Deserialize)]
pub struct OpenSessionRequest {
    pub present: BTreeSet<ModeratorId>,
    #[serde(default)]
    pub target_release: Option<DateTime<Utc>>,
}

/// A session as moderators see it. Votes are never attributed.
#[derive(Serialize, Deserialize)]
pub struct SessionView {
    pub id: ModerationSessionId,
    pub target_release: DateTime<Utc>,
    pub label: PublishLabel,
    pub state: SessionState,
    pub moderators_present: BTreeSet<ModeratorId>,
    pub worklist: usize,
    pub undecided: usize,
    pub held: Vec<MessageId>,
    pub summary: Option<SessionSummary>,
}

#[derive(Serialize, Deserialize)]
pub struct RationaleBody {
    pub reason: Reason,
    pub note: String,
}

#[derive(Serialize, Deserialize)]
pub struct DecisionRequest {
    pub message_id: MessageId,
    pub votes: BTreeMap<ModeratorId, Vote>,
    pub challenge: ChallengeKind,
    #[serde(default)]
    pub final_body: Option<String>,
    #[serde(default)]
    pub rationale: Option<RationaleBody>,
}

#[derive(Serialize, Deserialize)]
pub struct DecisionView {
    pub message_id: MessageId,
    pub outcome: Resolution,
    pub round: Round,
    pub approvals: usize,
    pub challenges: usize,
}

#[derive(Serialize, Deserialize)]
pub struct CloseResponse {
    pub summary: SessionSummary,
    pub summary_post: MessageId,
    pub release_at: DateTime<Utc>,
    pub label: PublishLabel,
    pub queued: usize,
}

fn parse_id(raw: &str) -> ApiResult<MessageId> {
    raw.parse().map_err(|_| ApiError::not_found("post"))
}

fn session_view(board: &Board, s: &ModerationSession) -> SessionView {
    SessionView {
        id: s.id,
        target_release: s.target_release,
        label: board.schedule().label(s.target_release),
        state: s.state,
        moderators_present: s.moderators_present.clone(),
        worklist: s.worklist.len(),
        undecided: s.undecided().len(),
        held: s
            .holds
            .iter()
            .map(|d| d.message_id)
            .filter(|id| s.decision_for(*id).is_none())
            .collect(),
        summary: s.summary.clone(),
    }
}

fn post_view(board: &Board, record: ExportRecord, tally: TallyView) -> PostView {
    let comment_count = board.comment_count(record.id);
    PostView {
        record,
        votes: tally.into(),
        comment_count,
    }
}

// --- public and member handlers ---

async fn health(State(state): State<AppState>) -> Json<HealthResponse> {
    let board = state.board();
    let schedule = board.schedule();
    let next = board.next_release();
    Json(HealthResponse {
        status: "ok".into(),
        now: board.now(),
        timezone: schedule.timezone().name().to_string(),
        release_times: schedule.time_strings(),
        next_release: next,
        next_label: schedule.label(next),
    })
}

fn acknowledgement() -> (StatusCode, Json<Acknowledgement>) {
    (
        StatusCode::ACCEPTED,
        Json(Acknowledgement {
            message: ACCESS_ACKNOWLEDGEMENT.into(),
        }),
    )
}

async fn request_access(State(state): State<AppState>, Json(req): Json<AccessRequest>) -> ApiResult<impl IntoResponse> {
    match state.board().request_access(&req.email) {
        Ok(_) => {}
        // A delivery failure only happens for eligible addresses, so it must look like success.
        Err(BoardError::Access(AccessError::Delivery)) => tracing::warn!("login mail delivery failed"),
        Err(e) => return Err(e.into()),
    }
    Ok(acknowledgement())
}

async fn redeem(State(state): State<AppState>, Json(req): Json<RedeemRequest>) -> ApiResult<Json<SessionResponse>> {
    let session = state.board().redeem(&req.token)?;
    state.persist();
    Ok(Json(SessionResponse {
        session: session.id.to_string(),
        pseudonym: session.pseudonym.to_string(),
        expires_at: session.expires_at,
    }))
}

async fn alternate_address(
    State(state): State<AppState>,
    Member(session): Member,
    Json(req): Json<AccessRequest>,
) -> ApiResult<impl IntoResponse> {
    if state.board().register_alternate_address(&session, &req.email)? {
        state.write_whitelist();
    }
    Ok(acknowledgement())
}

async fn categories(State(state): State<AppState>) -> Json<Vec<Category>> {
    Json(state.board().categories())
}

async fn moderators(State(state): State<AppState>) -> Json<Vec<ModeratorId>> {
    Json(state.board().roster().members().cloned().collect())
}

async fn browse(State(state): State<AppState>, Query(q): Query<BrowseQuery>) -> ApiResult<Json<Vec<PostView>>> {
    let board = state.board();
    let filter = BrowseFilter {
        category: q.category.filter(|c| !c.is_empty()),
        query: q.q.filter(|s| !s.trim().is_empty()),
        sort: q.sort,
    };
    let posts = board.browse(&filter)?;
    Ok(Json(posts.into_iter().map(|(r, t)| post_view(board, r, t)).collect()))
}

async fn thread(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ThreadView>> {
    let board = state.board();
    let t = board.thread(parse_id(&id)?)?;
    let post = post_view(board, t.post, t.tally);
    Ok(Json(ThreadView {
        post,
        comments: t.comments,
    }))
}

fn receipt(state: &AppState, submitted: slowvoice_core::content::Message) -> (StatusCode, Json<SubmitReceipt>) {
    let board = state.board();
    let next = board.next_release();
    (
        StatusCode::ACCEPTED,
        Json(SubmitReceipt {
            id: submitted.id,
            kind: submitted.kind,
            pseudonym: submitted.author.to_string(),
            state: "pending".into(),
            next_release: next,
            next_label: board.schedule().label(next),
        }),
    )
}

async fn submit_post(
    State(state): State<AppState>,
    Member(session): Member,
    Json(req): Json<NewPost>,
) -> ApiResult<impl IntoResponse> {
    let m = state.board().submit(
        &session,
        Submission::Post {
            category: req.category,
            title: req.title,
            body: req.body,
        },
    )?;
    state.persist();
    Ok(receipt(&state, m))
}

async fn submit_comment(
    State(state): State<AppState>,
    Member(session): Member,
    Path(id): Path<String>,
    Json(req): Json<NewComment>,
) -> ApiResult<impl IntoResponse> {
    let post = parse_id(&id)?;
    let m = state.board().submit(&session, Submission::Comment { post, body: req.body })?;
    state.persist();
    Ok(receipt(&state, m))
}

async fn vote(
    State(state): State<AppState>,
    Member(session): Member,
    Path(id): Path<String>,
    Json(req): Json<VoteRequest>,
) -> ApiResult<Json<TallyView>> {
    let tally = state.board().vote(&session, parse_id(&id)?, req.direction)?;
    state.persist();
    Ok(Json(tally))
}

// --- moderator handlers ---

fn require_present(board: &Board, sid: ModerationSessionId, who: &ModeratorId) -> ApiResult<ModerationSession> {
    let session = board.moderation_session(sid)?;
    if !session.moderators_present.contains(who) {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "not present in this session"));
    }
    Ok(session)
}

async fn open_session(
    State(state): State<AppState>,
    Moderator(who): Moderator,
    Json(req): Json<OpenSessionRequest>,
) -> ApiResult<impl IntoResponse> {
    if !req.present.contains(&who) {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "the opening moderator must be present"));
    }
    let board = state.board();
    let s = board.open_session(req.present, req.target_release)?;
    state.persist();
    Ok((StatusCode::CREATED, Json(session_view(board, &s))))
}

async fn list_sessions(State(state): State<AppState>, Moderator(_): Moderator) -> Json<Vec<SessionView>> {
    let board = state.board();
    Json(board.moderation_sessions().iter().map(|s| session_view(board, s)).collect())
}

async fn get_session(
    State(state): State<AppState>,
    Moderator(_): Moderator,
    Path(sid): Path<u64>,
) -> ApiResult<Json<SessionView>> {
    let board = state.board();
    let s = board.moderation_session(ModerationSessionId(sid))?;
    Ok(Json(session_view(board, &s)))
}

async fn worklist(
    State(state): State<AppState>,
    Moderator(who): Moderator,
    Path(sid): Path<u64>,
) -> ApiResult<Json<Vec<WorklistItem>>> {
    let sid = ModerationSessionId(sid);
    require_present(state.board(), sid, &who)?;
    Ok(Json(state.board().worklist(sid)?))
}

async fn worklist_message(
    State(state): State<AppState>,
    Moderator(who): Moderator,
    Path((sid, mid)): Path<(u64, String)>,
) -> ApiResult<Json<WorklistItem>> {
    let sid = ModerationSessionId(sid);
    require_present(state.board(), sid, &who)?;
    let mid: MessageId = mid.parse().map_err(|_| ApiError::not_found("message"))?;
    state
        .board()
        .worklist(sid)?
        .into_iter()
        .find(|item| item.id == mid)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("message"))
}

async fn decide(
    State(state): State<AppState>,
    Moderator(who): Moderator,
    Path(sid): Path<u64>,
    Json(req): Json<DecisionRequest>,
) -> ApiResult<Json<DecisionView>> {
    let sid = ModerationSessionId(sid);
    require_present(state.board(), sid, &who)?;
    let decision = state.board().record_decision(
        sid,
        req.message_id,
        DecisionInput {
            votes: req.votes,
            challenge: req.challenge,
            final_body: req.final_body,
            rationale: req.rationale.map(|r| Rationale::new(r.reason, r.note)),
        },
    )?;
    state.persist();
    let approvals = decision.approvals();
    Ok(Json(DecisionView {
        message_id: decision.message_id,
        outcome: decision.outcome,
        round: decision.round,
        approvals,
        challenges: decision.votes.len() - approvals,
    }))
}

async fn close(
    State(state): State<AppState>,
    Moderator(who): Moderator,
    Path(sid): Path<u64>,
) -> ApiResult<Json<CloseResponse>> {
    let sid = ModerationSessionId(sid);
    require_present(state.board(), sid, &who)?;
    let board = state.board();
    let (closed, slot) = board.close_session(sid)?;
    state.persist();
    Ok(Json(CloseResponse {
        label: board.schedule().label(slot),
        summary: closed.summary,
        summary_post: closed.summary_post,
        release_at: slot,
        queued: closed.approved.len(),
    }))
}

// --- exports ---

fn ndjson<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Response {
    let body: String = rows
        .into_iter()
        .map(|r| serde_json::to_string(&r).expect("rows serialize") + "\n")
        .collect();
    ([(CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn export_corpus(State(state): State<AppState>, Moderator(_): Moderator) -> Response {
    ndjson(state.board().export_corpus())
}

async fn export_votes(State(state): State<AppState>, Moderator(_): Moderator) -> Response {
    ndjson(state.board().export_votes())
}

async fn export_events(State(state): State<AppState>, Moderator(_): Moderator) -> Response {
    ndjson(state.board().export_events().events().to_vec())
}

async fn export_audit(State(state): State<AppState>, Moderator(_): Moderator) -> Response {
    ndjson(state.board().export_audit())
}

async fn fallback() -> ApiError {
    ApiError::not_found("endpoint")
}

// Logs method, route template and status only: no bodies, queries or client addresses.
async fn access_log(matched: Option<MatchedPath>, req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let route = matched.map(|m| m.as_str().to_string()).unwrap_or_else(|| "-".into());
    let started = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        %method,
        route,
        status = response.status().as_u16(),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "request"
    );
    response
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/access", post(request_access))
        .route("/api/redeem", post(redeem))
        .route("/api/alternate-address", post(alternate_address))
        .route("/api/categories", get(categories))
        .route("/api/moderators", get(moderators))
        .route("/api/posts", get(browse).post(submit_post))
        .route("/api/posts/{id}", get(thread))
        .route("/api/posts/{id}/comments", post(submit_comment))
        .route("/api/posts/{id}/vote", post(vote))
        .route("/api/moderation/sessions", get(list_sessions).post(open_session))
        .route("/api/moderation/sessions/{sid}", get(get_session))
        .route("/api/moderation/sessions/{sid}/worklist", get(worklist))
        .route("/api/moderation/sessions/{sid}/messages/{mid}", get(worklist_message))
        .route("/api/moderation/sessions/{sid}/decisions", post(decide))
        .route("/api/moderation/sessions/{sid}/close", post(close))
        .route("/api/export/corpus", get(export_corpus))
        .route("/api/export/votes", get(export_votes))
        .route("/api/export/events", get(export_events))
        .route("/api/export/audit", get(export_audit))
        .fallback(fallback)
        .layer(axum::middleware::from_fn(access_log))
        .with_state(state)
}
