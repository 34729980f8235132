//! Deterministic keyword-and-slot grammar mapping user text to intents.
//!
//! Matching is case-insensitive; captured free text (rooms, slots, alert
//! messages) keeps the user's casing. Every intent renders to a canonical
//! phrase that parses back to the same intent.

use std::fmt;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::governor::{Action, Support};
use crate::registry::ThresholdKey;
use crate::sim::ApplianceKind;
use crate::types::{Address, Hash32, NativeAmount};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntentError {
    #[error("empty message")]
    Empty,
    #[error("no command recognized in {0:?}")]
    Unrecognized(String),
    #[error("{intent} request is missing the {slot}")]
    MissingSlot { intent: &'static str, slot: &'static str },
    #[error("invalid {slot} {value:?}")]
    InvalidSlot { slot: &'static str, value: String },
}

impl IntentError {
    pub fn code(&self) -> &'static str {
        match self {
            IntentError::Empty => "EmptyMessage",
            IntentError::Unrecognized(_) => "Unrecognized",
            IntentError::MissingSlot { .. } => "MissingSlot",
            IntentError::InvalidSlot { .. } => "InvalidSlot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hint {
    TooDark,
    TooBright,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "intent", rename_all = "snake_case")]
pub enum Intent {
    DeviceOn { device: ApplianceKind },
    DeviceOff { device: ApplianceKind },
    SetLevel { device: ApplianceKind, level: u8 },
    QueryEnvironment,
    Alert { message: String },
    Propose { action: Action },
    Vote { proposal: Hash32, support: Support },
    Queue { proposal: Hash32 },
    Execute { proposal: Hash32 },
    Reserve { room: String, slot: String },
    CheckAvailability { room: String, slot: String },
    TransferNative { to: Address, amount: NativeAmount },
    TransferTokens {
        to: Address,
        #[serde(with = "crate::types::u128_string")]
        amount: u128,
    },
    ContextHint { hint: Hint },
}

impl Intent {
    pub fn name(&self) -> &'static str {
        match self {
            Intent::DeviceOn { .. } => "device_on",
            Intent::DeviceOff { .. } => "device_off",
            Intent::SetLevel { .. } => "set_level",
            Intent::QueryEnvironment => "query_environment",
            Intent::Alert { .. } => "alert",
            Intent::Propose { .. } => "propose",
            Intent::Vote { .. } => "vote",
            Intent::Queue { .. } => "queue",
            Intent::Execute { .. } => "execute",
            Intent::Reserve { .. } => "reserve",
            Intent::CheckAvailability { .. } => "check_availability",
            Intent::TransferNative { .. } => "transfer_native",
            Intent::TransferTokens { .. } => "transfer_tokens",
            Intent::ContextHint { .. } => "context_hint",
        }
    }

    /// Intents that change ledger state and therefore need a signature.
    pub fn mutates_ledger(&self) -> bool {
        matches!(
            self,
            Intent::Propose { .. }
                | Intent::Vote { .. }
                | Intent::Queue { .. }
                | Intent::Execute { .. }
                | Intent::Reserve { .. }
                | Intent::TransferNative { .. }
                | Intent::TransferTokens { .. }
        )
    }

    /// Intents restricted to DAO members.
    pub fn is_governance(&self) -> bool {
        matches!(self, Intent::Propose { .. } | Intent::Vote { .. } | Intent::Queue { .. } | Intent::Execute { .. })
    }

    /// Canonical phrase that parses back to `self`.
    pub fn to_phrase(&self) -> String {
        match self {
            Intent::DeviceOn { device } => format!("turn on the {device}"),
            Intent::DeviceOff { device } => format!("turn off the {device}"),
            Intent::SetLevel { device, level } => format!("set the {device} to {level}"),
            Intent::QueryEnvironment => "show the environment".to_string(),
            Intent::Alert { message } => format!("send an alert: {message}"),
            Intent::Propose { action } => format!("propose to {}", action_phrase(action)),
            Intent::Vote { proposal, support } => format!("vote {support} on proposal {proposal}"),
            Intent::Queue { proposal } => format!("queue proposal {proposal}"),
            Intent::Execute { proposal } => format!("execute proposal {proposal}"),
            Intent::Reserve { room, slot } => format!("reserve room {room} at {slot}"),
            Intent::CheckAvailability { room, slot } => format!("is room {room} available at {slot}"),
            Intent::TransferNative { to, amount } => format!("transfer {} ether to {to}", amount.eth_string()),
            Intent::TransferTokens { to, amount } => format!("transfer {amount} tokens to {to}"),
            Intent::ContextHint { hint: Hint::TooDark } => "the room is too dark".to_string(),
            Intent::ContextHint { hint: Hint::TooBright } => "the room is too bright".to_string(),
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_phrase())
    }
}

fn action_phrase(action: &Action) -> String {
    match action {
        Action::SendNative { to, amount } => format!("send {} ether to {to}", amount.eth_string()),
        Action::TransferGovernanceTokens { to, amount } => format!("send {amount} tokens to {to}"),
        Action::AddMember { addr, token_grant } => format!("add member {addr} with {token_grant} tokens"),
        Action::RemoveMember { addr } => format!("remove member {addr}"),
        Action::SetThreshold { key, value } => format!("set {key} to {}", key.format_physical(*value)),
    }
}

/// Maps free text to an intent. Implementations must be pure.
pub trait IntentParser: Send + Sync {
    fn parse(&self, text: &str) -> Result<Intent, IntentError>;
}

/// The built-in rule grammar.
#[derive(Debug, Clone, Copy, Default)]
pub struct GrammarParser;

impl IntentParser for GrammarParser {
    fn parse(&self, text: &str) -> Result<Intent, IntentError> {
        parse_intent(text)
    }
}

const AMOUNT: &str = r"(?P<amount>\d+(?:\.\d+)?)";
const ADDR: &str = r"(?P<addr>0x[0-9a-f]{40})";
const PROPOSAL: &str = r"(?P<id>0x[0-9a-f]{64})";

struct Rules {
    device_on_off: Regex,
    device_on_off_suffix: Regex,
    set_level: Regex,
    query: Regex,
    alert: Regex,
    propose: Regex,
    p_threshold: Regex,
    p_native: Regex,
    p_tokens: Regex,
    p_add: Regex,
    p_remove: Regex,
    vote: Regex,
    vote_any: Regex,
    queue_exec: Regex,
    reserve: Regex,
    available: Regex,
    transfer: Regex,
    transfer_any: Regex,
    hint: Regex,
    address: Regex,
    number: Regex,
}

fn re(pattern: &str) -> Regex {
    Regex::new(&format!("(?i){pattern}")).expect("static grammar compiles")
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        device_on_off: re(r"^turn\s+(?P<state>on|off)\s+(?:the\s+)?(?P<dev>[a-z ]+?)$"),
        device_on_off_suffix: re(r"^turn\s+(?:the\s+)?(?P<dev>[a-z ]+?)\s+(?P<state>on|off)$"),
        set_level: re(
            r"^(?:set|adjust|change)\s+(?:the\s+)?(?P<dev>[a-z ]+?)\s+(?:to|at)\s+(?:level\s+|speed\s+(?:level\s+)?|brightness\s+)?(?P<n>\d+)\s*%?(?:\s+brightness)?$",
        ),
        query: re(
            r"^(?:show|what(?:'s| is)|how(?:'s| is)|read|get)\b.*\b(?:environment|conditions|temperature|humidity|luminance|co2?|air quality|sensors?|readings?)\b",
        ),
        alert: re(r"^send\s+an\s+alert\s*:\s*(?P<msg>.+)$"),
        propose: re(r"^propose\s+(?:to\s+)?(?P<rest>.*)$"),
        p_threshold: re(r"^set\s+(?:the\s+)?(?P<key>[a-z_ ]+?)\s+to\s+(?P<val>-?\d+(?:\.\d+)?)$"),
        p_native: re(&format!(r"^(?:send|pay)\s+{AMOUNT}\s+(?:ether|eth)\s+to\s+{ADDR}$")),
        p_tokens: re(&format!(r"^(?:send|transfer)\s+(?P<amount>\d+)\s+tokens?\s+to\s+{ADDR}$")),
        p_add: re(&format!(r"^add\s+member\s+{ADDR}(?:\s+with\s+(?P<amount>\d+)\s+tokens?)?$")),
        p_remove: re(&format!(r"^remove\s+member\s+{ADDR}$")),
        vote: re(&format!(r"^vote\s+(?P<support>for|against|abstain)\s+(?:on\s+)?(?:proposal\s+)?{PROPOSAL}$")),
        vote_any: re(r"^vote\b"),
        queue_exec: re(r"^(?P<verb>queue|execute)\b(?:\s+the)?(?:\s+proposal)?(?:\s+(?P<id>0x[0-9a-f]{64}))?$"),
        reserve: re(r"^(?:reserve|book)\s+(?:the\s+)?(?:room\s+)?(?P<room>\S+)(?:\s+(?:at|for|on)\s+(?P<slot>.+))?$"),
        available: re(
            r"^is\s+(?:the\s+)?(?:room\s+)?(?P<room>\S+)\s+(?:available|free|booked)(?:\s+(?:at|for|on)\s+(?P<slot>.+))?$",
        ),
        transfer: re(&format!(r"^(?:transfer|send)\s+{AMOUNT}\s+(?P<unit>ether|eth|tokens?)\s+to\s+{ADDR}$")),
        transfer_any: re(r"^(?:transfer|send)\b"),
        hint: re(r"\btoo\s+(?P<which>dark|bright)\b"),
        address: re(r"0x[0-9a-f]{40}"),
        number: re(r"\d+(?:\.\d+)?"),
    })
}

fn device(caps: &Captures<'_>) -> Result<ApplianceKind, IntentError> {
    let raw = caps["dev"].trim();
    let raw = raw.strip_prefix("smart ").unwrap_or(raw);
    raw.parse().map_err(|_| IntentError::InvalidSlot { slot: "device", value: raw.to_string() })
}

fn address(s: &str) -> Result<Address, IntentError> {
    s.parse().map_err(|_| IntentError::InvalidSlot { slot: "address", value: s.to_string() })
}

fn proposal(s: &str) -> Result<Hash32, IntentError> {
    s.parse().map_err(|_| IntentError::InvalidSlot { slot: "proposal_id", value: s.to_string() })
}

fn ether(s: &str) -> Result<NativeAmount, IntentError> {
    NativeAmount::from_eth_str(s).map_err(|_| IntentError::InvalidSlot { slot: "amount", value: s.to_string() })
}

fn whole_tokens(s: &str) -> Result<u128, IntentError> {
    s.parse().map_err(|_| IntentError::InvalidSlot { slot: "amount", value: s.to_string() })
}

/// Parses one user message into exactly one intent.
pub fn parse_intent(text: &str) -> Result<Intent, IntentError> {
    let text = text.trim().trim_end_matches(['.', '!', '?']).trim();
    let text = strip_politeness(text);
    if text.is_empty() {
        return Err(IntentError::Empty);
    }
    let r = rules();

    if let Some(c) = r.alert.captures(text) {
        return Ok(Intent::Alert { message: c["msg"].trim().to_string() });
    }
    if let Some(c) = r.propose.captures(text) {
        return parse_proposal(c.name("rest").map_or("", |m| m.as_str()).trim());
    }
    if let Some(c) = r.vote.captures(text) {
        let support = c["support"].parse().expect("grammar admits only known options");
        return Ok(Intent::Vote { proposal: proposal(&c["id"])?, support });
    }
    if r.vote_any.is_match(text) {
        let lower = text.to_ascii_lowercase();
        let slot = if ["for", "against", "abstain"].iter().any(|w| lower.split_whitespace().any(|t| t == *w)) {
            "proposal_id"
        } else {
            "support"
        };
        return Err(IntentError::MissingSlot { intent: "vote", slot });
    }
    if let Some(c) = r.queue_exec.captures(text) {
        let verb = c["verb"].to_ascii_lowercase();
        let intent = if verb == "queue" { "queue" } else { "execute" };
        let id = c.name("id").ok_or(IntentError::MissingSlot { intent, slot: "proposal_id" })?;
        let proposal = proposal(id.as_str())?;
        return Ok(if verb == "queue" { Intent::Queue { proposal } } else { Intent::Execute { proposal } });
    }
    if let Some(c) = r.transfer.captures(text) {
        let to = address(&c["addr"])?;
        return if c["unit"].to_ascii_lowercase().starts_with("token") {
            Ok(Intent::TransferTokens { to, amount: whole_tokens(&c["amount"])? })
        } else {
            Ok(Intent::TransferNative { to, amount: ether(&c["amount"])? })
        };
    }
    if r.transfer_any.is_match(text) && (r.address.is_match(text) || r.number.is_match(text)) {
        let slot = if !r.address.is_match(text) { "address" } else { "amount" };
        let intent = if text.to_ascii_lowercase().contains("token") { "transfer_tokens" } else { "transfer_native" };
        return Err(IntentError::MissingSlot { intent, slot });
    }
    if let Some(c) = r.reserve.captures(text) {
        let slot = c.name("slot").ok_or(IntentError::MissingSlot { intent: "reserve", slot: "slot" })?;
        return Ok(Intent::Reserve { room: c["room"].to_string(), slot: slot.as_str().trim().to_string() });
    }
    if let Some(c) = r.available.captures(text) {
        let slot = c.name("slot").ok_or(IntentError::MissingSlot { intent: "check_availability", slot: "slot" })?;
        return Ok(Intent::CheckAvailability { room: c["room"].to_string(), slot: slot.as_str().trim().to_string() });
    }
    if let Some(c) = r.device_on_off.captures(text).or_else(|| r.device_on_off_suffix.captures(text)) {
        let device = device(&c)?;
        return Ok(if c["state"].eq_ignore_ascii_case("on") {
            Intent::DeviceOn { device }
        } else {
            Intent::DeviceOff { device }
        });
    }
    if let Some(c) = r.set_level.captures(text) {
        let device = device(&c)?;
        let level =
            c["n"].parse().map_err(|_| IntentError::InvalidSlot { slot: "level", value: c["n"].to_string() })?;
        return Ok(Intent::SetLevel { device, level });
    }
    if let Some(c) = r.hint.captures(text) {
        let hint = if c["which"].eq_ignore_ascii_case("dark") { Hint::TooDark } else { Hint::TooBright };
        return Ok(Intent::ContextHint { hint });
    }
    if r.query.is_match(text) {
        return Ok(Intent::QueryEnvironment);
    }
    Err(IntentError::Unrecognized(text.to_string()))
}

fn strip_politeness(text: &str) -> &str {
    let mut t = text;
    for prefix in ["please ", "can you ", "could you ", "i want to ", "i'd like to "] {
        if let Some(head) = t.get(..prefix.len()) {
            if head.eq_ignore_ascii_case(prefix) {
                t = t[prefix.len()..].trim_start();
            }
        }
    }
    t
}

fn parse_proposal(rest: &str) -> Result<Intent, IntentError> {
    const INTENT: &str = "propose";
    if rest.is_empty() {
        return Err(IntentError::MissingSlot { intent: INTENT, slot: "action" });
    }
    let r = rules();
    let action = if let Some(c) = r.p_threshold.captures(rest) {
        let raw_key = c["key"].trim();
        let key: ThresholdKey =
            raw_key.parse().map_err(|_| IntentError::InvalidSlot { slot: "threshold", value: raw_key.to_string() })?;
        let physical: f64 = c["val"].parse().expect("grammar admits only numbers");
        Action::SetThreshold { key, value: key.to_stored(physical) }
    } else if let Some(c) = r.p_native.captures(rest) {
        Action::SendNative { to: address(&c["addr"])?, amount: ether(&c["amount"])? }
    } else if let Some(c) = r.p_tokens.captures(rest) {
        Action::TransferGovernanceTokens { to: address(&c["addr"])?, amount: whole_tokens(&c["amount"])? }
    } else if let Some(c) = r.p_add.captures(rest) {
        let grant = c.name("amount").map_or(Ok(0), |m| whole_tokens(m.as_str()))?;
        Action::AddMember { addr: address(&c["addr"])?, token_grant: grant }
    } else if let Some(c) = r.p_remove.captures(rest) {
        Action::RemoveMember { addr: address(&c["addr"])? }
    } else {
        let lower = rest.to_ascii_lowercase();
        let needs_addr = ["send", "pay", "add member", "remove member"].iter().any(|w| lower.starts_with(w));
        if needs_addr && !r.address.is_match(rest) {
            return Err(IntentError::MissingSlot { intent: INTENT, slot: "address" });
        }
        if lower.starts_with("set") {
            return Err(IntentError::MissingSlot { intent: INTENT, slot: "value" });
        }
        if needs_addr {
            return Err(IntentError::MissingSlot { intent: INTENT, slot: "amount" });
        }
        return Err(IntentError::Unrecognized(format!("propose to {rest}")));
    };
    Ok(Intent::Propose { action })
}
