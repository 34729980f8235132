//! Shared service state: the engine behind a single writer lock, the
//! sequenced event buffer and the dev-mode session table.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, RwLock, RwLockReadGuard};

use dab_core::engine::{Engine, EngineError, EngineEvent};
use dab_core::ledger::Receipt;
use dab_core::types::Address;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::error::ApiError;

/// Events kept for replay to reconnecting subscribers.
pub const DEFAULT_EVENT_BUFFER: usize = 10_000;

const LIVE_CHANNEL: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub sequence: u64,
    pub kind: String,
    pub payload: EngineEvent,
}

/// Bounded, gap-free event history plus live fan-out.
#[derive(Debug)]
pub struct EventLog {
    buffer: VecDeque<EventEnvelope>,
    next: u64,
    capacity: usize,
    live: broadcast::Sender<EventEnvelope>,
}

impl EventLog {
    fn new(capacity: usize) -> Self {
        let (live, _) = broadcast::channel(LIVE_CHANNEL);
        Self { buffer: VecDeque::with_capacity(capacity.min(DEFAULT_EVENT_BUFFER)), next: 1, capacity: capacity.max(1), live }
    }

    fn push(&mut self, event: EngineEvent) {
        let env = EventEnvelope { sequence: self.next, kind: event.kind().to_string(), payload: event };
        self.next += 1;
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(env.clone());
        // No receivers is not an error: nobody is listening yet.
        let _ = self.live.send(env);
    }

    /// Sequence number the next event will carry.
    pub fn next_sequence(&self) -> u64 {
        self.next
    }

    fn oldest(&self) -> u64 {
        self.buffer.front().map_or(self.next, |e| e.sequence)
    }

    /// Buffered events with `sequence >= from`, or an error when `from`
    /// has already been evicted or lies in the future.
    pub fn replay_from(&self, from: u64) -> Result<Vec<EventEnvelope>, ApiError> {
        if from > self.next {
            return Err(ApiError::FutureSequence { requested: from, next: self.next });
        }
        let oldest = self.oldest();
        // Sequences start at 1; anything below the oldest buffered event is
        // only a problem once events have actually been evicted.
        if from < oldest && oldest > 1 {
            return Err(ApiError::SequenceTooOld { requested: from, oldest });
        }
        Ok(self.buffer.iter().filter(|e| e.sequence >= from).cloned().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Member,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSession {
    pub session_id: String,
    pub account: Address,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Derived from governor membership at the time of the request.
    pub role: Role,
}

pub struct Inner {
    pub engine: Engine,
    pub events: EventLog,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<RwLock<Inner>>,
    sessions: Arc<RwLock<HashMap<String, Address>>>,
}

impl AppState {
    pub fn new(engine: Engine) -> Self {
        Self::with_event_buffer(engine, DEFAULT_EVENT_BUFFER)
    }

    pub fn with_event_buffer(mut engine: Engine, capacity: usize) -> Self {
        let mut events = EventLog::new(capacity);
        for e in engine.drain_events() {
            events.push(e);
        }
        Self { inner: Arc::new(RwLock::new(Inner { engine, events })), sessions: Arc::default() }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|p| p.into_inner())
    }

    /// Runs one engine command under the writer lock, publishes the events
    /// it produced and re-checks the supply identities.
    pub fn write<T>(&self, f: impl FnOnce(&mut Engine) -> Result<T, EngineError>) -> Result<T, ApiError> {
        let mut guard = self.inner.write().unwrap_or_else(|p| p.into_inner());
        let Inner { engine, events } = &mut *guard;
        let result = f(engine);
        for e in engine.drain_events() {
            events.push(e);
        }
        engine.check_conservation()?;
        Ok(result?)
    }

    /// Like [`AppState::write`], turning a reverted receipt into an error.
    pub fn transact(&self, f: impl FnOnce(&mut Engine) -> Result<Receipt, EngineError>) -> Result<Receipt, ApiError> {
        let receipt = self.write(f)?;
        match receipt.revert_code() {
            None => Ok(receipt),
            Some(code) => {
                let reason = match &receipt.status {
                    dab_core::ledger::TxStatus::Reverted { reason, .. } => reason.clone(),
                    dab_core::ledger::TxStatus::Success => String::new(),
                };
                Err(ApiError::Reverted { code: code.to_string(), reason, receipt: Box::new(receipt) })
            }
        }
    }

    /// Current replay backlog from `from` plus a live receiver, taken
    /// atomically so that nothing falls between the two.
    pub fn subscribe(&self, from: Option<u64>) -> Result<(Vec<EventEnvelope>, broadcast::Receiver<EventEnvelope>), ApiError> {
        let inner = self.read();
        let from = from.unwrap_or(inner.events.next_sequence());
        let backlog = inner.events.replay_from(from)?;
        Ok((backlog, inner.events.live.subscribe()))
    }

    /// Resolves a configured account name or a hex address.
    pub fn resolve_account(&self, who: &str) -> Result<Address, ApiError> {
        if let Ok(addr) = who.parse::<Address>() {
            return Ok(addr);
        }
        Ok(self.read().engine.account(who)?)
    }

    pub fn open_session(&self, account: Address) -> ApiSession {
        let mut sessions = self.sessions.write().unwrap_or_else(|p| p.into_inner());
        let session_id = format!("s{}", sessions.len() + 1);
        sessions.insert(session_id.clone(), account);
        drop(sessions);
        self.describe_session(session_id, account)
    }

    pub fn session(&self, session_id: &str) -> Result<ApiSession, ApiError> {
        let account = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(session_id)
            .copied()
            .ok_or_else(|| ApiError::UnknownSession(session_id.to_string()))?;
        Ok(self.describe_session(session_id.to_string(), account))
    }

    fn describe_session(&self, session_id: String, account: Address) -> ApiSession {
        let inner = self.read();
        let chain = inner.engine.chain();
        let role = if chain.governor().is_member(&account) { Role::Member } else { Role::User };
        ApiSession { session_id, account, name: chain.name_of(&account).map(str::to_string), role }
    }
}
