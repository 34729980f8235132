//! Two-phase transactions: the assistant prepares a ledger call, and only an
//! explicit signature from the same account submits it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::Call;
use crate::types::{Address, NativeAmount};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssistantError {
    #[error("pending transaction {0} does not exist")]
    UnknownPending(String),
    #[error("pending transaction belongs to {expected}, not {signer}")]
    WrongSigner { expected: Address, signer: Address },
    #[error("pending transaction {0} was already submitted")]
    AlreadySubmitted(String),
    #[error("pending transaction {0} expired")]
    Expired(String),
    #[error("{0} is not a DAO member")]
    Unauthorized(Address),
}

impl AssistantError {
    pub fn code(&self) -> &'static str {
        match self {
            AssistantError::UnknownPending(_) => "UnknownPending",
            AssistantError::WrongSigner { .. } => "WrongSigner",
            AssistantError::AlreadySubmitted(_) => "AlreadySubmitted",
            AssistantError::Expired(_) => "Expired",
            AssistantError::Unauthorized(_) => "Unauthorized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PendingState {
    AwaitingSignature,
    Submitted,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingTransaction {
    pub id: String,
    pub sender: Address,
    pub call: Call,
    pub value: NativeAmount,
    /// Chain time (seconds) at preparation.
    pub created_at: u64,
    pub state: PendingState,
    /// Human-readable description shown on the signing card.
    pub summary: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PendingStore {
    ttl: u64,
    next_id: u64,
    items: BTreeMap<String, PendingTransaction>,
}

impl PendingStore {
    pub const DEFAULT_TTL: u64 = 600;

    pub fn new(ttl: u64) -> Self {
        Self { ttl, next_id: 1, items: BTreeMap::new() }
    }

    pub fn ttl(&self) -> u64 {
        self.ttl
    }

    pub fn prepare(
        &mut self,
        sender: Address,
        call: Call,
        value: NativeAmount,
        now: u64,
        summary: String,
    ) -> PendingTransaction {
        let id = format!("ptx-{}", self.next_id);
        self.next_id += 1;
        let p = PendingTransaction {
            id: id.clone(),
            sender,
            call,
            value,
            created_at: now,
            state: PendingState::AwaitingSignature,
            summary,
        };
        self.items.insert(id, p.clone());
        p
    }

    pub fn get(&self, id: &str) -> Option<&PendingTransaction> {
        self.items.get(id)
    }

    pub fn all(&self) -> impl Iterator<Item = &PendingTransaction> {
        self.items.values()
    }

    /// Validates a signature attempt and marks the entry submitted.
    pub fn sign(&mut self, id: &str, signer: Address, now: u64) -> Result<PendingTransaction, AssistantError> {
        let ttl = self.ttl;
        let p = self.items.get_mut(id).ok_or_else(|| AssistantError::UnknownPending(id.to_string()))?;
        match p.state {
            PendingState::Submitted => return Err(AssistantError::AlreadySubmitted(id.to_string())),
            PendingState::Expired => return Err(AssistantError::Expired(id.to_string())),
            PendingState::AwaitingSignature => {}
        }
        if p.sender != signer {
            return Err(AssistantError::WrongSigner { expected: p.sender, signer });
        }
        if now.saturating_sub(p.created_at) > ttl {
            p.state = PendingState::Expired;
            return Err(AssistantError::Expired(id.to_string()));
        }
        p.state = PendingState::Submitted;
        Ok(p.clone())
    }
}

impl Default for PendingStore {
    fn default() -> Self {
        Self::new(Self::DEFAULT_TTL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with_one() -> (PendingStore, String, Address) {
        let mut s = PendingStore::default();
        let alice = Address::derive("alice");
        let p = s.prepare(
            alice,
            Call::TransferNative { to: Address::derive("bob") },
            NativeAmount(1),
            100,
            "send".into(),
        );
        (s, p.id, alice)
    }

    #[test]
    fn sign_once_by_sender() {
        let (mut s, id, alice) = store_with_one();
        let err = s.sign(&id, Address::derive("bob"), 101).unwrap_err();
        assert_eq!(err.code(), "WrongSigner");
        assert_eq!(s.sign(&id, alice, 101).unwrap().state, PendingState::Submitted);
        assert_eq!(s.sign(&id, alice, 102), Err(AssistantError::AlreadySubmitted(id.clone())));
    }

    #[test]
    fn stale_pending_expires() {
        let (mut s, id, alice) = store_with_one();
        assert_eq!(s.sign(&id, alice, 100 + 601), Err(AssistantError::Expired(id.clone())));
        assert_eq!(s.get(&id).unwrap().state, PendingState::Expired);
        assert_eq!(s.sign(&id, alice, 0), Err(AssistantError::Expired(id)));
    }

    #[test]
    fn unknown_id() {
        let mut s = PendingStore::default();
        assert!(matches!(s.sign("ptx-9", Address::derive("a"), 0), Err(AssistantError::UnknownPending(_))));
    }
}
