//! The engine couples the ledger, the room simulation and the agent behind a
//! single serialized command surface, and collects a unified event outbox.

use std::collections::BTreeMap;
use std::sync::Arc;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::{
    combined_cycle, hint_brightness, Actuators, AgentDecision, AssistantError, Cause, Decision, GrammarParser, Intent,
    IntentError, IntentParser, PendingStore, PendingTransaction, PolicyError,
};
use crate::config::{ConfigError, EngineConfig};
use crate::governor::ProposalState;
use crate::ledger::{Call, Chain, ChainEvent, LedgerError, Receipt, Transaction};
use crate::registry::{ThresholdKey, ThresholdSet};
use crate::reservation::{Booking, SlotStatus};
use crate::sim::{ApplianceKind, EnergyMeter, EnvState, Sim, SimError};
use crate::types::{Address, Hash32, NativeAmount};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Assistant(#[from] AssistantError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown account {0:?}")]
    UnknownAccount(String),
    #[error("engine invariant violated: {0}")]
    Invariant(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Ledger(e) => e.code(),
            EngineError::Sim(SimError::NonPositiveStep) => "NonPositiveStep",
            EngineError::Sim(SimError::LevelOutOfRange { .. }) => "LevelOutOfRange",
            EngineError::Sim(SimError::NegativeOccupancy(_)) => "NegativeOccupancy",
            EngineError::Sim(SimError::InvalidConfig(_)) => "InvalidSimConfig",
            EngineError::Sim(SimError::UnknownAppliance(_)) => "UnknownAppliance",
            EngineError::Policy(PolicyError::InvertedThresholds) => "InvertedThresholds",
            EngineError::Policy(PolicyError::InvalidConfig(_)) => "InvalidPolicyConfig",
            EngineError::Intent(e) => e.code(),
            EngineError::Assistant(e) => e.code(),
            EngineError::Config(_) => "InvalidConfig",
            EngineError::UnknownAccount(_) => "UnknownAccount",
            EngineError::Invariant(_) => "InvariantViolated",
        }
    }

    /// Whether the error is the caller's fault (as opposed to an engine bug).
    pub fn is_client_error(&self) -> bool {
        !matches!(self, EngineError::Invariant(_))
    }
}

/// Where the control loop reads thresholds from.
pub trait ThresholdSource {
    fn read_thresholds(&self) -> Result<ThresholdSet, String>;
}

impl ThresholdSource for Chain {
    fn read_thresholds(&self) -> Result<ThresholdSet, String> {
        Ok(self.registry().get_all())
    }
}

/// A source that always fails, for exercising the loop's fail-safe path.
#[derive(Debug, Clone)]
pub struct UnreachableSource(pub String);

impl ThresholdSource for UnreachableSource {
    fn read_thresholds(&self) -> Result<ThresholdSet, String> {
        Err(self.0.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineEvent {
    Block { number: u64, timestamp: u64, receipts: usize },
    ProposalState { id: Hash32, state: ProposalState },
    Booking { booking_id: u64, room: String, slot: String, user: Address, booked: bool },
    ThresholdChanged { key: ThresholdKey, value: i64 },
    EnvTick { environment: EnvState, energy_kwh: Decimal },
    AgentDecision { decision: AgentDecision },
}

impl EngineEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineEvent::Block { .. } => "block",
            EngineEvent::ProposalState { .. } => "proposal_state",
            EngineEvent::Booking { .. } => "booking",
            EngineEvent::ThresholdChanged { .. } => "threshold_changed",
            EngineEvent::EnvTick { .. } => "env_tick",
            EngineEvent::AgentDecision { .. } => "agent_decision",
        }
    }
}

impl From<ChainEvent> for EngineEvent {
    fn from(e: ChainEvent) -> Self {
        match e {
            ChainEvent::Block { number, timestamp, receipts } => EngineEvent::Block { number, timestamp, receipts },
            ChainEvent::ProposalState { id, state } => EngineEvent::ProposalState { id, state },
            ChainEvent::Booking { booking_id, room, slot, user, booked } => {
                EngineEvent::Booking { booking_id, room, slot, user, booked }
            }
            ChainEvent::ThresholdChanged { key, value } => EngineEvent::ThresholdChanged { key, value },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CycleOutcome {
    Applied { thresholds: ThresholdSet, decisions: Vec<AgentDecision> },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistantReply {
    pub intent: Intent,
    pub reply: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pending: Option<PendingTransaction>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub decisions: Vec<AgentDecision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomStatus {
    pub room: String,
    pub occupied: bool,
    pub bookings: Vec<Booking>,
}

/// Level a device takes when simply switched on.
pub fn on_level(kind: ApplianceKind) -> u8 {
    match kind {
        ApplianceKind::Light => 100,
        _ => 1,
    }
}

#[derive(Clone)]
pub struct Engine {
    config: EngineConfig,
    seed: u64,
    chain: Chain,
    sim: Sim,
    cold_alert: bool,
    decisions: Vec<AgentDecision>,
    pending: PendingStore,
    parser: Arc<dyn IntentParser>,
    accounts: BTreeMap<String, Address>,
    outbox: Vec<EngineEvent>,
    last_thresholds: Option<ThresholdSet>,
    skipped_cycles: u64,
}

impl Engine {
    pub fn new(config: EngineConfig, seed: u64) -> Result<Self, EngineError> {
        config.validate()?;
        let chain = Chain::genesis(&config.genesis_config())?;
        let sim = Sim::reset(config.sim.clone(), seed)?;
        let accounts = config.accounts.iter().map(|a| (a.name.clone(), a.resolved_address())).collect();
        let mut engine = Self {
            pending: PendingStore::new(config.agent.pending_ttl),
            config,
            seed,
            chain,
            sim,
            cold_alert: false,
            decisions: Vec::new(),
            parser: Arc::new(GrammarParser),
            accounts,
            outbox: Vec::new(),
            last_thresholds: None,
            skipped_cycles: 0,
        };
        engine.collect_chain_events();
        Ok(engine)
    }

    /// Swaps the intent parser, e.g. for a language-model backend.
    pub fn with_parser(mut self, parser: Arc<dyn IntentParser>) -> Self {
        self.parser = parser;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn sim(&self) -> &Sim {
        &self.sim
    }

    pub fn decisions(&self) -> &[AgentDecision] {
        &self.decisions
    }

    pub fn pending(&self) -> &PendingStore {
        &self.pending
    }

    pub fn accounts(&self) -> &BTreeMap<String, Address> {
        &self.accounts
    }

    pub fn account(&self, name: &str) -> Result<Address, EngineError> {
        self.accounts.get(name).copied().ok_or_else(|| EngineError::UnknownAccount(name.to_string()))
    }

    /// Thresholds used by the most recent completed control cycle.
    pub fn last_cycle_thresholds(&self) -> Option<ThresholdSet> {
        self.last_thresholds
    }

    pub fn skipped_cycles(&self) -> u64 {
        self.skipped_cycles
    }

    pub fn chain_digest(&self) -> Hash32 {
        self.chain.chain_digest()
    }

    /// Digest over the chain plus the room twin and the decision log.
    pub fn state_digest(&self) -> Hash32 {
        let twin = serde_json::json!({
            "environment": self.sim.read_sensors(),
            "levels": self.sim.levels(),
            "meter": self.sim.meter(),
            "decisions": self.decisions,
        });
        let mut h = Sha256::new();
        h.update(self.chain.chain_digest().0);
        h.update(serde_json::to_vec(&twin).expect("twin state serializes"));
        Hash32(h.finalize().into())
    }

    fn collect_chain_events(&mut self) {
        self.outbox.extend(self.chain.drain_events().into_iter().map(EngineEvent::from));
    }

    /// Removes and returns all events emitted since the last drain.
    pub fn drain_events(&mut self) -> Vec<EngineEvent> {
        std::mem::take(&mut self.outbox)
    }

    // ---- ledger ----------------------------------------------------------

    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt, EngineError> {
        let result = self.chain.submit_tx(tx);
        self.collect_chain_events();
        Ok(result?)
    }

    /// Submits `call` from `sender` at the default gas price.
    pub fn call(&mut self, sender: Address, call: Call, value: NativeAmount) -> Result<Receipt, EngineError> {
        let tx = Transaction::signed(sender, call, value, self.chain.default_gas_price());
        self.submit(tx)
    }

    pub fn advance_blocks(&mut self, n: u64) -> Result<u64, EngineError> {
        let dt = self.chain.block_time();
        let head = self.chain.advance_block(n, dt);
        self.collect_chain_events();
        Ok(head?)
    }

    /// Advances the chain until its latest block timestamp reaches `t`.
    pub fn advance_until(&mut self, t: u64) -> Result<u64, EngineError> {
        let now = self.chain.now();
        if t > now {
            let n = (t - now).div_ceil(self.chain.block_time());
            self.advance_blocks(n)?;
        }
        Ok(self.chain.head())
    }

    pub fn room_map(&self, slot: Option<&str>) -> Vec<RoomStatus> {
        let res = self.chain.reservations();
        res.rooms()
            .into_iter()
            .map(|room| {
                let bookings: Vec<Booking> = res.live_bookings().filter(|b| b.room == room).cloned().collect();
                let occupied = match slot {
                    Some(s) => matches!(res.booking_status(&room, s), SlotStatus::Occupied { .. }),
                    None => !bookings.is_empty(),
                };
                RoomStatus { room, occupied, bookings }
            })
            .collect()
    }

    /// Native and token supply identities that must hold in every state.
    pub fn check_conservation(&self) -> Result<(), EngineError> {
        let native = self.chain.native_supply();
        let genesis = self.chain.genesis_total();
        if native != genesis {
            return Err(EngineError::Invariant(format!("native supply {native:?} != genesis {genesis:?}")));
        }
        let token = self.chain.token();
        if token.balance_sum() != token.total_supply() {
            return Err(EngineError::Invariant(format!(
                "token balances {} != supply {}",
                token.balance_sum(),
                token.total_supply()
            )));
        }
        if token.vote_sum() != token.delegated_balance_sum() {
            return Err(EngineError::Invariant(format!(
                "votes {} != delegated balances {}",
                token.vote_sum(),
                token.delegated_balance_sum()
            )));
        }
        Ok(())
    }

    // ---- simulation ------------------------------------------------------

    pub fn tick_sim(&mut self, dt: i64) -> Result<EnvState, EngineError> {
        let env = self.sim.tick(dt)?;
        self.outbox.push(EngineEvent::EnvTick { environment: env, energy_kwh: self.sim.read_energy() });
        Ok(env)
    }

    pub fn set_occupancy(&mut self, n: i64) -> Result<(), EngineError> {
        Ok(self.sim.set_occupancy(n)?)
    }

    /// Replaces the energy meter, e.g. to resume from a recorded reading.
    pub fn load_meter(&mut self, meter: EnergyMeter) {
        self.sim.load_meter(meter);
    }

    pub fn use_occupancy_stream(&mut self) {
        self.sim.use_occupancy_stream();
    }

    pub fn set_environment(&mut self, temperature: f64, humidity: f64, natural_lux: f64, co: f64) {
        self.sim.set_environment(temperature, humidity, natural_lux, co);
    }

    /// Directly sets a device level; a change is logged with `cause`.
    pub fn set_appliance(&mut self, kind: ApplianceKind, level: i64, cause: Cause) -> Result<Vec<AgentDecision>, EngineError> {
        let level = kind.validate(level)?;
        if self.sim.levels().get(kind) == level {
            return Ok(Vec::new());
        }
        let d = AgentDecision::set(kind, level, cause, self.sim.read_sensors().sim_time);
        self.apply_decisions(std::slice::from_ref(&d))?;
        Ok(vec![d])
    }

    fn apply_decisions(&mut self, decisions: &[AgentDecision]) -> Result<(), EngineError> {
        for d in decisions {
            match &d.decision {
                Decision::SetLevel { device, new_level } => {
                    self.sim.set_appliance(*device, *new_level as i64)?;
                }
                Decision::Alert { .. } => self.cold_alert = true,
            }
            self.decisions.push(d.clone());
            self.outbox.push(EngineEvent::AgentDecision { decision: d.clone() });
        }
        Ok(())
    }

    // ---- agent loop ------------------------------------------------------

    /// One control-loop iteration against the on-chain registry.
    pub fn run_agent_cycle(&mut self) -> Result<CycleOutcome, EngineError> {
        let read = self.chain.read_thresholds();
        self.cycle(read)
    }

    /// One iteration reading thresholds from `source` instead of the chain.
    pub fn run_agent_cycle_with(&mut self, source: &dyn ThresholdSource) -> Result<CycleOutcome, EngineError> {
        let read = source.read_thresholds();
        self.cycle(read)
    }

    fn cycle(&mut self, read: Result<ThresholdSet, String>) -> Result<CycleOutcome, EngineError> {
        let thresholds = match read {
            Ok(t) => t,
            Err(reason) => {
                self.skipped_cycles += 1;
                return Ok(CycleOutcome::Skipped { reason });
            }
        };
        let env = self.sim.read_sensors();
        if env.temperature >= thresholds.min_temperature_c() {
            self.cold_alert = false;
        }
        let actuators = Actuators { levels: self.sim.levels(), cold_alert: self.cold_alert };
        let decisions = combined_cycle(&thresholds, &env, &actuators, &self.config.policy)?;
        self.apply_decisions(&decisions)?;
        self.last_thresholds = Some(thresholds);
        Ok(CycleOutcome::Applied { thresholds, decisions })
    }

    /// Runs the room for `seconds`, with a control cycle every loop period.
    pub fn run_for(&mut self, seconds: u64) -> Result<Vec<CycleOutcome>, EngineError> {
        let period = self.config.agent.loop_period;
        let mut remaining = seconds;
        let mut outcomes = Vec::new();
        while remaining > 0 {
            let t = self.sim.read_sensors().sim_time;
            let to_boundary = period - t % period;
            let step = to_boundary.min(remaining);
            self.tick_sim(step as i64)?;
            remaining -= step;
            if self.sim.read_sensors().sim_time.is_multiple_of(period) {
                outcomes.push(self.run_agent_cycle()?);
            }
        }
        Ok(outcomes)
    }

    // ---- assistant -------------------------------------------------------

    pub fn parse(&self, text: &str) -> Result<Intent, IntentError> {
        self.parser.parse(text)
    }

    /// Handles one chat message from `sender`. Device and query intents act
    /// immediately; ledger intents return a transaction awaiting signature.
    pub fn assistant_message(&mut self, sender: Address, text: &str) -> Result<AssistantReply, EngineError> {
        let intent = self.parser.parse(text)?;
        self.execute_intent(sender, intent)
    }

    pub fn execute_intent(&mut self, sender: Address, intent: Intent) -> Result<AssistantReply, EngineError> {
        if intent.is_governance() && !self.chain.governor().is_member(&sender) {
            return Err(AssistantError::Unauthorized(sender).into());
        }
        let reply = |intent: Intent, reply: String, decisions: Vec<AgentDecision>| AssistantReply {
            intent,
            reply,
            pending: None,
            decisions,
        };
        match &intent {
            Intent::DeviceOn { device } | Intent::DeviceOff { device } => {
                let level = if matches!(intent, Intent::DeviceOn { .. }) { on_level(*device) } else { 0 };
                let d = self.set_appliance(*device, level as i64, Cause::UserCommand)?;
                let text = format!("The {device} is now {}.", if level == 0 { "off".into() } else { format!("at level {level}") });
                Ok(reply(intent, text, d))
            }
            Intent::SetLevel { device, level } => {
                let d = self.set_appliance(*device, *level as i64, Cause::UserCommand)?;
                Ok(reply(intent.clone(), format!("The {device} is set to {level}."), d))
            }
            Intent::ContextHint { hint } => {
                let target = hint_brightness(self.sim.levels().light, *hint, &self.config.policy);
                let d = self.set_appliance(ApplianceKind::Light, target as i64, Cause::UserHint { hint: *hint })?;
                Ok(reply(intent, format!("Light brightness adjusted to {target}%."), d))
            }
            Intent::QueryEnvironment => {
                let e = self.sim.read_sensors();
                let text = format!(
                    "Temperature {:.1} °C, humidity {:.0} %, luminance {:.0} lux, CO {:.0} ppm, occupancy {}; energy {} kWh.",
                    e.temperature,
                    e.humidity,
                    e.luminance,
                    e.co,
                    e.occupancy,
                    self.sim.read_energy().normalize()
                );
                Ok(reply(intent, text, Vec::new()))
            }
            Intent::Alert { message } => {
                let d = AgentDecision {
                    decision: Decision::Alert { message: message.clone() },
                    cause: Cause::UserCommand,
                    timestamp: self.sim.read_sensors().sim_time,
                };
                self.decisions.push(d.clone());
                self.outbox.push(EngineEvent::AgentDecision { decision: d.clone() });
                Ok(reply(intent, "Alert raised.".into(), vec![d]))
            }
            Intent::CheckAvailability { room, slot } => {
                let text = match self.chain.reservations().booking_status(room, slot) {
                    SlotStatus::Free => format!("{room} is available at {slot}."),
                    SlotStatus::Occupied { booking_id } => format!("{room} is booked at {slot} (booking {booking_id})."),
                };
                Ok(reply(intent, text, Vec::new()))
            }
            _ => {
                let (call, value) = self.intent_call(&intent);
                let summary = intent.to_phrase();
                let pending = self.pending.prepare(sender, call, value, self.chain.now(), summary.clone());
                let text = format!("Prepared \"{summary}\"; sign {} to submit.", pending.id);
                Ok(AssistantReply { intent, reply: text, pending: Some(pending), decisions: Vec::new() })
            }
        }
    }

    fn intent_call(&self, intent: &Intent) -> (Call, NativeAmount) {
        match intent {
            Intent::Propose { action } => {
                (Call::Propose { actions: vec![action.clone()], description: intent.to_phrase() }, NativeAmount::ZERO)
            }
            Intent::Vote { proposal, support } => {
                (Call::CastVote { proposal: *proposal, support: *support }, NativeAmount::ZERO)
            }
            Intent::Queue { proposal } => (Call::Queue { proposal: *proposal }, NativeAmount::ZERO),
            Intent::Execute { proposal } => (Call::Execute { proposal: *proposal }, NativeAmount::ZERO),
            Intent::Reserve { room, slot } => (
                Call::BookRoom { room: room.clone(), slot: slot.clone() },
                self.chain.reservations().booking_fee(),
            ),
            Intent::TransferNative { to, amount } => (Call::TransferNative { to: *to }, *amount),
            Intent::TransferTokens { to, amount } => {
                (Call::TransferTokens { to: *to, amount: *amount }, NativeAmount::ZERO)
            }
            other => unreachable!("{} does not touch the ledger", other.name()),
        }
    }

    /// Signs and submits a prepared transaction.
    pub fn assistant_sign(&mut self, signer: Address, pending_id: &str) -> Result<Receipt, EngineError> {
        let p = self.pending.sign(pending_id, signer, self.chain.now())?;
        let tx = Transaction::signed(p.sender, p.call, p.value, self.chain.default_gas_price());
        self.submit(tx)
    }
}
