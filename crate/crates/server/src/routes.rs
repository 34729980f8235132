//! Endpoint handlers. Every mutating handler performs exactly one engine
//! operation; the views only reshape engine state for JSON.

use std::convert::Infallible;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::HeaderMap;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::Json;
use dab_core::agent::AgentDecision;
use dab_core::engine::{AssistantReply, CycleOutcome};
use dab_core::governor::{Action, DefeatReason, Proposal, ProposalState, Support};
use dab_core::ledger::{Block, Call, CallOutput, Receipt};
use dab_core::reservation::Booking;
use dab_core::sim::{ApplianceLevels, EnvState};
use dab_core::types::{Address, Hash32, NativeAmount};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;

use crate::error::ApiError;
use crate::state::{ApiSession, AppState, EventEnvelope};

pub const SESSION_HEADER: &str = "x-session-id";

type ApiResult<T> = Result<Json<T>, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    Ok(payload?.0)
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    Ok(q?.0)
}

fn amount(v: u128) -> String {
    v.to_string()
}

impl FromRequestParts<AppState> for ApiSession {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let id = parts
            .headers
            .get(SESSION_HEADER)
            .and_then(|v| v.to_str().ok())
            .ok_or(ApiError::NoSession)?;
        state.session(id)
    }
}

// ---- sessions --------------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct OpenSession {
    /// Configured account name or hex address.
    pub account: String,
}

pub async fn open_session(State(state): State<AppState>, payload: Result<Json<OpenSession>, JsonRejection>) -> ApiResult<ApiSession> {
    let req = body(payload)?;
    let account = state.resolve_account(&req.account)?;
    Ok(Json(state.open_session(account)))
}

pub async fn current_session(session: ApiSession) -> Json<ApiSession> {
    Json(session)
}

// ---- chain reads -----------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct BlockQuery {
    #[serde(default)]
    pub from: u64,
    pub limit: Option<usize>,
}

pub async fn blocks(State(state): State<AppState>, q: Result<Query<BlockQuery>, QueryRejection>) -> ApiResult<Vec<Block>> {
    let q = query(q)?;
    let inner = state.read();
    let limit = q.limit.unwrap_or(100).min(1000);
    Ok(Json(inner.engine.chain().blocks().iter().filter(|b| b.number >= q.from).take(limit).cloned().collect()))
}

#[derive(Debug, Serialize)]
pub struct AccountView {
    pub address: Address,
    pub name: Option<String>,
    pub native_balance: NativeAmount,
    pub token_balance: String,
    pub votes: String,
    pub delegate: Option<Address>,
    pub member: bool,
    pub bookings: Vec<Booking>,
}

pub async fn account(State(state): State<AppState>, Path(who): Path<String>) -> ApiResult<AccountView> {
    let address = state.resolve_account(&who)?;
    let inner = state.read();
    let chain = inner.engine.chain();
    let token = chain.token();
    Ok(Json(AccountView {
        address,
        name: chain.name_of(&address).map(str::to_string),
        native_balance: chain.balance_of(&address),
        token_balance: amount(token.balance_of(&address)),
        votes: amount(token.votes(&address)),
        delegate: token.delegate_of(&address),
        member: chain.governor().is_member(&address),
        bookings: chain.reservations().bookings_history(&address),
    }))
}

#[derive(Debug, Serialize)]
pub struct TokenHolder {
    pub address: Address,
    pub name: Option<String>,
    pub balance: String,
    pub votes: String,
    pub delegate: Option<Address>,
}

pub async fn token_balances(State(state): State<AppState>) -> Json<Value> {
    let inner = state.read();
    let chain = inner.engine.chain();
    let token = chain.token();
    let holders: Vec<TokenHolder> = token
        .balances()
        .map(|(address, balance)| TokenHolder {
            address,
            name: chain.name_of(&address).map(str::to_string),
            balance: amount(balance),
            votes: amount(token.votes(&address)),
            delegate: token.delegate_of(&address),
        })
        .collect();
    Json(json!({
        "total_supply": amount(token.total_supply()),
        "circulating_supply": amount(token.circulating_supply()),
        "reserve": token.reserve(),
        "holders": holders,
    }))
}

// ---- governor --------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ProposalView {
    #[serde(flatten)]
    pub proposal: Proposal,
    pub state: ProposalState,
    pub defeat_reason: Option<DefeatReason>,
    /// Votes needed for quorum, once the snapshot block is in the past.
    pub quorum: Option<String>,
}

fn proposal_view(state: &AppState, id: &Hash32) -> Result<ProposalView, ApiError> {
    let inner = state.read();
    let chain = inner.engine.chain();
    let gov = chain.governor();
    let (clock, token) = (chain.clock(), chain.token());
    let lookup = |e| ApiError::NotFound(format!("{e}"));
    Ok(ProposalView {
        proposal: gov.proposal(id).map_err(lookup)?.clone(),
        state: gov.state(id, clock, token).map_err(lookup)?,
        defeat_reason: gov.defeat_reason(id, clock, token).map_err(lookup)?,
        quorum: gov.quorum(id, clock, token).map_err(lookup)?.map(amount),
    })
}

fn proposal_id(raw: &str) -> Result<Hash32, ApiError> {
    raw.parse().map_err(|e| ApiError::BadRequest(format!("{e}")))
}

pub async fn proposals(State(state): State<AppState>) -> ApiResult<Vec<ProposalView>> {
    let ids: Vec<Hash32> = state.read().engine.chain().governor().proposals().iter().map(|p| p.id).collect();
    Ok(Json(ids.iter().map(|id| proposal_view(&state, id)).collect::<Result<_, _>>()?))
}

pub async fn proposal(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<ProposalView> {
    Ok(Json(proposal_view(&state, &proposal_id(&id)?)?))
}

#[derive(Debug, Serialize)]
pub struct TxResult {
    pub receipt: Receipt,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal: Option<Hash32>,
}

impl From<Receipt> for TxResult {
    fn from(receipt: Receipt) -> Self {
        let proposal = match &receipt.output {
            Some(CallOutput::ProposalId { id }) => Some(*id),
            _ => None,
        };
        Self { receipt, proposal }
    }
}

fn send(state: &AppState, sender: Address, call: Call, value: NativeAmount) -> ApiResult<TxResult> {
    Ok(Json(state.transact(|e| e.call(sender, call, value))?.into()))
}

#[derive(Debug, Deserialize)]
pub struct ProposeRequest {
    pub actions: Vec<Action>,
    pub description: String,
}

pub async fn propose(
    State(state): State<AppState>,
    session: ApiSession,
    payload: Result<Json<ProposeRequest>, JsonRejection>,
) -> ApiResult<TxResult> {
    let req = body(payload)?;
    send(&state, session.account, Call::Propose { actions: req.actions, description: req.description }, NativeAmount::ZERO)
}

#[derive(Debug, Deserialize)]
pub struct VoteRequest {
    pub support: Support,
}

pub async fn vote(
    State(state): State<AppState>,
    session: ApiSession,
    Path(id): Path<String>,
    payload: Result<Json<VoteRequest>, JsonRejection>,
) -> ApiResult<TxResult> {
    let req = body(payload)?;
    let proposal = proposal_id(&id)?;
    send(&state, session.account, Call::CastVote { proposal, support: req.support }, NativeAmount::ZERO)
}

pub async fn queue(State(state): State<AppState>, session: ApiSession, Path(id): Path<String>) -> ApiResult<TxResult> {
    send(&state, session.account, Call::Queue { proposal: proposal_id(&id)? }, NativeAmount::ZERO)
}

pub async fn execute(State(state): State<AppState>, session: ApiSession, Path(id): Path<String>) -> ApiResult<TxResult> {
    send(&state, session.account, Call::Execute { proposal: proposal_id(&id)? }, NativeAmount::ZERO)
}

// ---- reservations ----------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct ReservationQuery {
    pub user: Option<String>,
}

pub async fn reservations(
    State(state): State<AppState>,
    q: Result<Query<ReservationQuery>, QueryRejection>,
) -> ApiResult<Value> {
    let q = query(q)?;
    let user = q.user.as_deref().map(|u| state.resolve_account(u)).transpose()?;
    let inner = state.read();
    let res = inner.engine.chain().reservations();
    let bookings: Vec<Booking> = match user {
        Some(u) => res.bookings_history(&u),
        None => res.live_bookings().cloned().collect(),
    };
    Ok(Json(json!({ "booking_fee": res.booking_fee(), "rooms": res.rooms(), "bookings": bookings })))
}

#[derive(Debug, Deserialize)]
pub struct ReserveRequest {
    pub room: String,
    pub slot: String,
    /// Attached value in base units; defaults to the booking fee.
    pub value: Option<NativeAmount>,
}

pub async fn reserve(
    State(state): State<AppState>,
    session: ApiSession,
    payload: Result<Json<ReserveRequest>, JsonRejection>,
) -> ApiResult<TxResult> {
    let req = body(payload)?;
    let value = req.value.unwrap_or_else(|| state.read().engine.chain().reservations().booking_fee());
    send(&state, session.account, Call::BookRoom { room: req.room, slot: req.slot }, value)
}

#[derive(Debug, Deserialize)]
pub struct CancelRequest {
    pub booking_id: u64,
}

pub async fn cancel(
    State(state): State<AppState>,
    session: ApiSession,
    payload: Result<Json<CancelRequest>, JsonRejection>,
) -> ApiResult<TxResult> {
    let req = body(payload)?;
    send(&state, session.account, Call::CancelBooking { booking_id: req.booking_id }, NativeAmount::ZERO)
}

// ---- twin and agent --------------------------------------------------------

pub async fn thresholds(State(state): State<AppState>) -> Json<Value> {
    let t = state.read().engine.chain().registry().get_all();
    let deci = |v: i64| v as f64 / 10.0;
    Json(json!({
        "temperature": [deci(t.temperature[0]), deci(t.temperature[1])],
        "humidity": t.humidity,
        "luminance": t.luminance,
        "co": t.co,
        "stored": t,
    }))
}

#[derive(Debug, Serialize)]
pub struct TwinView {
    pub environment: EnvState,
    pub levels: ApplianceLevels,
    pub energy_kwh: String,
}

pub async fn environment(State(state): State<AppState>) -> Json<TwinView> {
    let inner = state.read();
    let sim = inner.engine.sim();
    Json(TwinView { environment: sim.read_sensors(), levels: sim.levels(), energy_kwh: sim.read_energy().to_string() })
}

#[derive(Debug, Deserialize)]
pub struct RoomQuery {
    pub slot: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RoomView {
    pub room: String,
    pub status: &'static str,
    pub bookings: Vec<Booking>,
}

pub async fn rooms(State(state): State<AppState>, q: Result<Query<RoomQuery>, QueryRejection>) -> ApiResult<Vec<RoomView>> {
    let q = query(q)?;
    let inner = state.read();
    Ok(Json(
        inner
            .engine
            .room_map(q.slot.as_deref())
            .into_iter()
            .map(|r| RoomView { room: r.room, status: if r.occupied { "Occupied" } else { "Free" }, bookings: r.bookings })
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
pub struct DecisionQuery {
    #[serde(default)]
    pub since: usize,
}

pub async fn decisions(
    State(state): State<AppState>,
    q: Result<Query<DecisionQuery>, QueryRejection>,
) -> ApiResult<Vec<AgentDecision>> {
    let q = query(q)?;
    Ok(Json(state.read().engine.decisions().iter().skip(q.since).cloned().collect()))
}

// ---- assistant -------------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct MessageRequest {
    pub text: String,
}

pub async fn assistant_message(
    State(state): State<AppState>,
    session: ApiSession,
    payload: Result<Json<MessageRequest>, JsonRejection>,
) -> ApiResult<AssistantReply> {
    let req = body(payload)?;
    Ok(Json(state.write(|e| e.assistant_message(session.account, &req.text))?))
}

#[derive(Debug, Deserialize)]
pub struct SignRequest {
    pub pending_id: String,
}

pub async fn assistant_sign(
    State(state): State<AppState>,
    session: ApiSession,
    payload: Result<Json<SignRequest>, JsonRejection>,
) -> ApiResult<TxResult> {
    let req = body(payload)?;
    Ok(Json(state.transact(|e| e.assistant_sign(session.account, &req.pending_id))?.into()))
}

// ---- admin -----------------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct TickRequest {
    pub seconds: i64,
    /// Also run the control loop at every loop-period boundary.
    #[serde(default)]
    pub agent: bool,
}

#[derive(Debug, Serialize)]
pub struct TickResult {
    pub environment: EnvState,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cycles: Vec<CycleOutcome>,
}

pub async fn sim_tick(State(state): State<AppState>, payload: Result<Json<TickRequest>, JsonRejection>) -> ApiResult<TickResult> {
    let req = body(payload)?;
    let (environment, cycles) = state.write(|e| {
        if req.agent {
            let seconds = u64::try_from(req.seconds).ok().filter(|s| *s > 0).ok_or(dab_core::sim::SimError::NonPositiveStep)?;
            let cycles = e.run_for(seconds)?;
            Ok((e.sim().read_sensors(), cycles))
        } else {
            Ok((e.tick_sim(req.seconds)?, Vec::new()))
        }
    })?;
    Ok(Json(TickResult { environment, cycles }))
}

#[derive(Debug, Deserialize)]
pub struct OccupancyRequest {
    pub count: i64,
}

pub async fn sim_occupancy(
    State(state): State<AppState>,
    payload: Result<Json<OccupancyRequest>, JsonRejection>,
) -> ApiResult<EnvState> {
    let req = body(payload)?;
    Ok(Json(state.write(|e| {
        e.set_occupancy(req.count)?;
        Ok(e.sim().read_sensors())
    })?))
}

#[derive(Debug, Deserialize)]
pub struct AdvanceRequest {
    pub blocks: Option<u64>,
    /// Advance until the latest block timestamp reaches this chain time.
    pub until: Option<u64>,
}

pub async fn chain_advance(
    State(state): State<AppState>,
    payload: Result<Json<AdvanceRequest>, JsonRejection>,
) -> ApiResult<Value> {
    let req = body(payload)?;
    let (head, now) = match (req.blocks, req.until) {
        (Some(n), None) => state.write(|e| e.advance_blocks(n).map(|_| (e.chain().head(), e.chain().now())))?,
        (None, Some(t)) => state.write(|e| e.advance_until(t).map(|_| (e.chain().head(), e.chain().now())))?,
        _ => return Err(ApiError::BadRequest("give exactly one of `blocks` or `until`".into())),
    };
    Ok(Json(json!({ "head": head, "now": now })))
}

// ---- events ----------------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct EventQuery {
    /// First sequence number to deliver.
    pub from: Option<u64>,
}

struct Subscription {
    state: AppState,
    backlog: std::collections::VecDeque<EventEnvelope>,
    live: tokio::sync::broadcast::Receiver<EventEnvelope>,
    last: u64,
}

impl Subscription {
    async fn next(mut self) -> Option<(EventEnvelope, Self)> {
        loop {
            if let Some(env) = self.backlog.pop_front() {
                if env.sequence <= self.last {
                    continue;
                }
                self.last = env.sequence;
                return Some((env, self));
            }
            match self.live.recv().await {
                Ok(env) => self.backlog.push_back(env),
                Err(RecvError::Lagged(_)) => {
                    // Catch up from the buffer; give up if the gap was evicted,
                    // so the client reconnects and learns SequenceTooOld.
                    let missed = self.state.read().events.replay_from(self.last + 1).ok()?;
                    self.backlog.extend(missed);
                }
                Err(RecvError::Closed) => return None,
            }
        }
    }
}

pub async fn events(
    State(state): State<AppState>,
    headers: HeaderMap,
    q: Result<Query<EventQuery>, QueryRejection>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let q = query(q)?;
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .map(|v| v.trim().parse::<u64>().map(|last| last + 1))
        .transpose()
        .map_err(|_| ApiError::BadRequest("Last-Event-ID must be a sequence number".into()))?;
    let from = q.from.or(resume);
    let (backlog, live) = state.subscribe(from)?;
    let last = backlog.first().map_or(0, |e| e.sequence.saturating_sub(1));
    let sub = Subscription { state, backlog: backlog.into(), live, last };
    let stream = stream::unfold(sub, |sub| async move {
        let (env, sub) = sub.next().await?;
        let event = Event::default()
            .id(env.sequence.to_string())
            .event(env.kind.clone())
            .json_data(&env)
            .unwrap_or_else(|_| Event::default().id(env.sequence.to_string()).event("error"));
        Some((Ok(event), sub))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}
