//! Data-driven scenario scripts and their deterministic runner.
//!
//! A script is an ordered list of steps: account actions, chain and clock
//! advances, simulation commands, and assertions over observable state. Each
//! run starts from a fresh genesis; conservation is checked after every step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::{Cause, Decision};
use crate::config::{account_address, EngineConfig};
use crate::costs::expense_workflow;
use crate::engine::{CycleOutcome, Engine, EngineError};
use crate::governor::{Action, ActionKind, DefeatReason, ProposalState, Support};
use crate::ledger::{Call, CallOutput, Receipt};
use crate::registry::ThresholdKey;
use crate::sim::{ApplianceKind, EnergyMeter};
use crate::types::{Address, Hash32, NativeAmount};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("malformed scenario script: {0}")]
    Script(#[from] serde_json::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

const BUILTIN: [(&str, &str); 7] = [
    ("1", include_str!("../scenarios/1-space-reservation.json")),
    ("2", include_str!("../scenarios/2-expense-management.json")),
    ("3", include_str!("../scenarios/3-threshold-governance.json")),
    ("4", include_str!("../scenarios/4-assistant-transfer.json")),
    ("5", include_str!("../scenarios/5-assistant-devices.json")),
    ("6", include_str!("../scenarios/6-autonomous-operation.json")),
    ("governance", include_str!("../scenarios/governance-replay.json")),
];

/// Identifiers of the bundled scripts, in suite order.
pub fn builtin_ids() -> Vec<&'static str> {
    BUILTIN.iter().map(|(id, _)| *id).collect()
}

pub fn builtin(id: &str) -> Result<ScenarioScript, ScenarioError> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(k, _)| *k == id)
        .ok_or_else(|| ScenarioError::UnknownScenario(id.to_string()))?;
    parse_script(text)
}

/// Parses a scenario script from its JSON form.
pub fn parse_script(text: &str) -> Result<ScenarioScript, ScenarioError> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub id: String,
    #[serde(default)]
    pub number: Option<u8>,
    pub name: String,
    pub description: String,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptAction {
    SendNative { to: String, amount_eth: Decimal },
    TransferGovernanceTokens { to: String, amount: u64 },
    AddMember { addr: String, token_grant: u64 },
    RemoveMember { addr: String },
    /// `value` in physical units (°C, %, lux, ppm).
    SetThreshold { key: ThresholdKey, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedDecision {
    #[serde(default)]
    pub device: Option<ApplianceKind>,
    #[serde(default)]
    pub level: Option<u8>,
    #[serde(default)]
    pub alert: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Note {
        text: String,
    },
    /// Records every balance under `label` for later delta assertions.
    Snapshot {
        label: String,
    },
    Book {
        #[serde(rename = "as")]
        sender: String,
        room: String,
        slot: String,
        #[serde(default)]
        fee_eth: Option<Decimal>,
        #[serde(default)]
        expect_error: Option<String>,
    },
    Cancel {
        #[serde(rename = "as")]
        sender: String,
        booking_id: u64,
        #[serde(default)]
        expect_error: Option<String>,
    },
    TransferNative {
        #[serde(rename = "as")]
        sender: String,
        to: String,
        amount_eth: Decimal,
        #[serde(default)]
        expect_error: Option<String>,
    },
    TransferTokens {
        #[serde(rename = "as")]
        sender: String,
        to: String,
        amount: u64,
        #[serde(default)]
        expect_error: Option<String>,
    },
    Delegate {
        #[serde(rename = "as")]
        sender: String,
        to: String,
        #[serde(default)]
        expect_error: Option<String>,
    },
    Propose {
        #[serde(rename = "as")]
        sender: String,
        label: String,
        actions: Vec<ScriptAction>,
        description: String,
        #[serde(default)]
        expect_error: Option<String>,
    },
    /// Proposes payment of the metered energy bill (or of `kwh` if given).
    ProposeExpense {
        #[serde(rename = "as")]
        sender: String,
        label: String,
        provider: String,
        #[serde(default)]
        kwh: Option<Decimal>,
    },
    Vote {
        #[serde(rename = "as")]
        sender: String,
        label: String,
        support: Support,
        #[serde(default)]
        expect_error: Option<String>,
    },
    Queue {
        #[serde(rename = "as")]
        sender: String,
        label: String,
        #[serde(default)]
        expect_error: Option<String>,
    },
    Execute {
        #[serde(rename = "as")]
        sender: String,
        label: String,
        #[serde(default)]
        expect_error: Option<String>,
    },
    AdvanceBlocks {
        n: u64,
    },
    AdvanceSeconds {
        seconds: u64,
    },
    /// Advances until the proposal's voting window has closed.
    EndVoting {
        label: String,
    },
    /// Advances until the next block may execute the queued proposal.
    AwaitEta {
        label: String,
    },
    SetEnvironment {
        temperature: f64,
        humidity: f64,
        lux: f64,
        co: f64,
    },
    SetOccupancy {
        n: i64,
    },
    OccupancyStream,
    SetAppliance {
        device: ApplianceKind,
        level: i64,
        #[serde(default)]
        expect_error: Option<String>,
    },
    LoadMeter {
        raw_kwh: Decimal,
    },
    Tick {
        seconds: i64,
    },
    RunFor {
        seconds: u64,
    },
    AgentCycle,
    /// Sends a chat message; `sign` immediately signs any prepared transaction.
    Say {
        #[serde(rename = "as")]
        sender: String,
        text: String,
        #[serde(default)]
        sign: bool,
        #[serde(default)]
        expect_error: Option<String>,
    },
    /// Signs the most recently prepared transaction.
    Sign {
        #[serde(rename = "as")]
        sender: String,
        #[serde(default)]
        expect_error: Option<String>,
    },
    AssertBalanceDelta {
        account: String,
        since: String,
        delta_eth: Decimal,
    },
    AssertBalance {
        account: String,
        eth: Decimal,
    },
    AssertState {
        label: String,
        state: ProposalState,
    },
    AssertDefeatReason {
        label: String,
        reason: DefeatReason,
    },
    AssertThreshold {
        key: ThresholdKey,
        value: f64,
    },
    AssertAgentThreshold {
        key: ThresholdKey,
        value: f64,
    },
    AssertLevels {
        #[serde(default)]
        fan: Option<u8>,
        #[serde(default)]
        purifier: Option<u8>,
        #[serde(default)]
        humidifier: Option<u8>,
        #[serde(default)]
        light: Option<u8>,
    },
    /// Exact decision set of the most recent agent cycle, in any order.
    AssertLastCycle {
        decisions: Vec<ExpectedDecision>,
    },
    AssertMember {
        account: String,
        member: bool,
    },
    AssertTokens {
        account: String,
        amount: u64,
    },
    AssertRoom {
        room: String,
        #[serde(default)]
        slot: Option<String>,
        occupied: bool,
    },
    AssertBookings {
        account: String,
        count: usize,
    },
    AssertEnergy {
        kwh: Decimal,
    },
    AssertProposalOutcomes {
        passed: usize,
        defeated_by_quorum: usize,
        defeated_by_majority: usize,
    },
}

impl Step {
    pub fn op(&self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.get("op").and_then(|o| o.as_str()).map(str::to_string))
            .unwrap_or_default()
    }

    pub fn is_assertion(&self) -> bool {
        self.op().starts_with("assert_")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLog {
    pub index: usize,
    pub op: String,
    pub detail: String,
    pub assertion: bool,
    #[serde(flatten)]
    pub status: StepStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub executed_actions: BTreeSet<ActionKind>,
    pub proposal_states: BTreeSet<ProposalState>,
    pub occupancy_cycle: bool,
    pub control_cycle: bool,
}

impl Coverage {
    pub fn merge(&mut self, other: &Coverage) {
        self.executed_actions.extend(other.executed_actions.iter().copied());
        self.proposal_states.extend(other.proposal_states.iter().copied());
        self.occupancy_cycle |= other.occupancy_cycle;
        self.control_cycle |= other.control_cycle;
    }

    /// Everything the suite is required to exercise but did not.
    pub fn missing(&self) -> Vec<String> {
        let mut out = Vec::new();
        for k in ActionKind::ALL {
            if !self.executed_actions.contains(&k) {
                out.push(format!("action {k:?}"));
            }
        }
        for s in ProposalState::ALL {
            if !self.proposal_states.contains(&s) {
                out.push(format!("proposal state {s:?}"));
            }
        }
        if !self.occupancy_cycle {
            out.push("occupancy cycle".into());
        }
        if !self.control_cycle {
            out.push("control cycle".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: String,
    pub number: Option<u8>,
    pub name: String,
    pub seed: u64,
    pub steps: Vec<StepLog>,
    pub passed: bool,
    pub assertions: usize,
    pub failures: usize,
    pub chain_digest: Hash32,
    /// Chain digest combined with the room twin and the agent's decision log.
    pub state_digest: Hash32,
    pub genesis_native_supply: NativeAmount,
    pub native_supply: NativeAmount,
    pub token_supply: u64,
    pub proposals: Vec<ProposalSummary>,
    pub coverage: Coverage,
}

/// Final standing of one proposal created during a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalSummary {
    pub label: Option<String>,
    pub id: Hash32,
    pub description: String,
    pub state: ProposalState,
    pub defeat_reason: Option<DefeatReason>,
}

impl ScenarioReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let title = match self.number {
            Some(n) => format!("scenario {n}: {}", self.name),
            None => format!("scenario {}: {}", self.id, self.name),
        };
        let _ = writeln!(out, "== {title} (seed {})", self.seed);
        for s in &self.steps {
            let mark = match &s.status {
                StepStatus::Ok if s.assertion => "PASS",
                StepStatus::Ok => " ok ",
                StepStatus::Failed { .. } => "FAIL",
            };
            let _ = write!(out, "[{mark}] {:>3} {:<24} {}", s.index, s.op, s.detail);
            if let StepStatus::Failed { reason } = &s.status {
                let _ = write!(out, " -- {reason}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "== {} assertions, {} failures, digest {} -> {}",
            self.assertions,
            self.failures,
            self.state_digest,
            if self.passed { "PASSED" } else { "FAILED" }
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub scenarios: Vec<ScenarioReport>,
    pub coverage: Coverage,
    pub coverage_missing: Vec<String>,
    /// SHA-256 over every scenario's final state digest, in order.
    pub suite_digest: Hash32,
    pub passed: bool,
}

impl SuiteReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.scenarios {
            out.push_str(&s.render());
            out.push('\n');
        }
        if self.coverage_missing.is_empty() {
            out.push_str("coverage: every action kind, proposal state and agent cycle exercised\n");
        } else {
            let _ = writeln!(out, "coverage missing: {}", self.coverage_missing.join(", "));
        }
        let _ = writeln!(
            out,
            "suite digest {} -> {}",
            self.suite_digest,
            if self.passed { "PASSED" } else { "FAILED" }
        );
        out
    }
}

/// Runs every bundled script against its own fresh genesis.
pub fn run_all(config: &EngineConfig, seed: u64) -> Result<SuiteReport, ScenarioError> {
    let mut scenarios = Vec::new();
    let mut coverage = Coverage::default();
    let mut hasher = Sha256::new();
    for id in builtin_ids() {
        let report = run_script(&builtin(id)?, config, seed)?;
        coverage.merge(&report.coverage);
        hasher.update(report.state_digest.0);
        scenarios.push(report);
    }
    let coverage_missing = coverage.missing();
    let passed = scenarios.iter().all(|s| s.passed) && coverage_missing.is_empty();
    Ok(SuiteReport {
        seed,
        scenarios,
        coverage,
        coverage_missing,
        suite_digest: Hash32(hasher.finalize().into()),
        passed,
    })
}

pub fn run_builtin(id: &str, config: &EngineConfig, seed: u64) -> Result<ScenarioReport, ScenarioError> {
    run_script(&builtin(id)?, config, seed)
}

pub fn run_script(script: &ScenarioScript, config: &EngineConfig, seed: u64) -> Result<ScenarioReport, ScenarioError> {
    Ok(run_script_with_engine(script, config, seed)?.0)
}

/// Like [`run_script`], also returning the engine in its final state.
pub fn run_script_with_engine(
    script: &ScenarioScript,
    config: &EngineConfig,
    seed: u64,
) -> Result<(ScenarioReport, Engine), ScenarioError> {
    let mut runner = Runner::new(Engine::new(config.clone(), seed)?);
    let mut steps = Vec::new();
    for (i, step) in script.steps.iter().enumerate() {
        let (detail, result) = match runner.step(step) {
            Ok(detail) => (detail, Ok(())),
            Err(StepFailure { detail, reason }) => (detail, Err(reason)),
        };
        let result = result.and_then(|()| runner.engine.check_conservation().map_err(|e| e.to_string()));
        runner.observe();
        steps.push(StepLog {
            index: i + 1,
            op: step.op(),
            detail,
            assertion: step.is_assertion(),
            status: match result {
                Ok(()) => StepStatus::Ok,
                Err(reason) => StepStatus::Failed { reason },
            },
        });
    }
    runner.finish_coverage();
    let proposals = runner.summaries();
    let failures = steps.iter().filter(|s| matches!(s.status, StepStatus::Failed { .. })).count();
    let chain = runner.engine.chain();
    let report = ScenarioReport {
        id: script.id.clone(),
        number: script.number,
        name: script.name.clone(),
        seed,
        assertions: steps.iter().filter(|s| s.assertion).count(),
        failures,
        passed: failures == 0,
        steps,
        chain_digest: chain.chain_digest(),
        state_digest: runner.engine.state_digest(),
        genesis_native_supply: chain.genesis_total(),
        native_supply: chain.native_supply(),
        proposals,
        token_supply: chain.token().balance_sum() as u64,
        coverage: runner.coverage,
    };
    Ok((report, runner.engine))
}

struct StepFailure {
    detail: String,
    reason: String,
}

type StepResult = Result<String, StepFailure>;

fn fail(detail: impl Into<String>, reason: impl Into<String>) -> StepFailure {
    StepFailure { detail: detail.into(), reason: reason.into() }
}

struct Runner {
    engine: Engine,
    labels: BTreeMap<String, Hash32>,
    snapshots: BTreeMap<String, BTreeMap<Address, NativeAmount>>,
    last_pending: Option<String>,
    last_cycle: Option<CycleOutcome>,
    coverage: Coverage,
}

/// Result of a submission: the receipt, or the code of a pre-execution rejection.
enum Outcome {
    Receipt(Receipt),
    Rejected(String),
}

fn eth(amount: NativeAmount) -> String {
    amount.eth_string()
}

fn to_native(d: Decimal) -> Result<NativeAmount, String> {
    NativeAmount::from_eth_decimal(d).ok_or_else(|| format!("{d} is not a valid ETH amount"))
}

impl Runner {
    fn new(engine: Engine) -> Self {
        Self {
            engine,
            labels: BTreeMap::new(),
            snapshots: BTreeMap::new(),
            last_pending: None,
            last_cycle: None,
            coverage: Coverage::default(),
        }
    }

    fn resolve(&self, name: &str) -> Result<Address, String> {
        if let Ok(a) = self.engine.account(name) {
            return Ok(a);
        }
        let chain = self.engine.chain();
        match name {
            "treasury" => Ok(chain.treasury()),
            "fee_sink" => Ok(chain.contracts().fee_sink),
            _ if name.starts_with("0x") => name.parse().map_err(|e| format!("{e}")),
            _ if name.starts_with('@') => Ok(account_address(&name[1..])),
            _ => Err(format!("unknown account {name:?}")),
        }
    }

    fn label(&self, label: &str) -> Result<Hash32, String> {
        self.labels.get(label).copied().ok_or_else(|| format!("no proposal labelled {label:?}"))
    }

    fn submit(&mut self, sender: Address, call: Call, value: NativeAmount) -> Outcome {
        match self.engine.call(sender, call, value) {
            Ok(r) => Outcome::Receipt(r),
            Err(e) => Outcome::Rejected(e.code().to_string()),
        }
    }

    /// Compares an outcome with the script's expectation.
    fn judge(detail: String, outcome: &Outcome, expect: &Option<String>) -> StepResult {
        let got = match outcome {
            Outcome::Receipt(r) => r.revert_code().map(str::to_string),
            Outcome::Rejected(code) => Some(code.clone()),
        };
        match (expect, got) {
            (None, None) => Ok(detail),
            (Some(want), Some(got)) if *want == got => Ok(format!("{detail} -> {got} (expected)")),
            (Some(want), None) => Err(fail(detail, format!("expected {want} but the call succeeded"))),
            (Some(want), Some(got)) => Err(fail(detail, format!("expected {want}, got {got}"))),
            (None, Some(got)) => Err(fail(detail, format!("unexpected error {got}"))),
        }
    }

    fn script_action(&self, a: &ScriptAction) -> Result<Action, String> {
        Ok(match a {
            ScriptAction::SendNative { to, amount_eth } => {
                Action::SendNative { to: self.resolve(to)?, amount: to_native(*amount_eth)? }
            }
            ScriptAction::TransferGovernanceTokens { to, amount } => {
                Action::TransferGovernanceTokens { to: self.resolve(to)?, amount: *amount as u128 }
            }
            ScriptAction::AddMember { addr, token_grant } => {
                Action::AddMember { addr: self.resolve(addr)?, token_grant: *token_grant as u128 }
            }
            ScriptAction::RemoveMember { addr } => Action::RemoveMember { addr: self.resolve(addr)? },
            ScriptAction::SetThreshold { key, value } => Action::SetThreshold { key: *key, value: key.to_stored(*value) },
        })
    }

    fn propose(&mut self, sender: Address, label: &str, actions: Vec<Action>, description: String, expect: &Option<String>, detail: String) -> StepResult {
        let outcome = self.submit(sender, Call::Propose { actions, description }, NativeAmount::ZERO);
        if let Outcome::Receipt(r) = &outcome {
            if let Some(CallOutput::ProposalId { id }) = &r.output {
                self.labels.insert(label.to_string(), *id);
            }
        }
        let detail = match self.labels.get(label) {
            Some(id) if expect.is_none() => format!("{detail} -> {id}"),
            _ => detail,
        };
        Self::judge(detail, &outcome, expect)
    }

    fn step(&mut self, step: &Step) -> StepResult {
        let e = |detail: &str| {
            let detail = detail.to_string();
            move |reason: String| fail(detail, reason)
        };
        match step {
            Step::Note { text } => Ok(text.clone()),
            Step::Snapshot { label } => {
                self.snapshots.insert(label.clone(), self.engine.chain().balances().clone());
                Ok(format!("balances recorded as {label:?}"))
            }
            Step::Book { sender, room, slot, fee_eth, expect_error } => {
                let detail = format!("{sender} books {room} @ {slot}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let fee = match fee_eth {
                    Some(f) => to_native(*f).map_err(e(&detail))?,
                    None => self.engine.chain().reservations().booking_fee(),
                };
                let outcome = self.submit(who, Call::BookRoom { room: room.clone(), slot: slot.clone() }, fee);
                let detail = format!("{detail} paying {} ETH", eth(fee));
                Self::judge(detail, &outcome, expect_error)
            }
            Step::Cancel { sender, booking_id, expect_error } => {
                let detail = format!("{sender} cancels booking {booking_id}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let outcome = self.submit(who, Call::CancelBooking { booking_id: *booking_id }, NativeAmount::ZERO);
                Self::judge(detail, &outcome, expect_error)
            }
            Step::TransferNative { sender, to, amount_eth, expect_error } => {
                let detail = format!("{sender} sends {amount_eth} ETH to {to}");
                let (from, to) = (self.resolve(sender).map_err(e(&detail))?, self.resolve(to).map_err(e(&detail))?);
                let amount = to_native(*amount_eth).map_err(e(&detail))?;
                let outcome = self.submit(from, Call::TransferNative { to }, amount);
                Self::judge(detail, &outcome, expect_error)
            }
            Step::TransferTokens { sender, to, amount, expect_error } => {
                let detail = format!("{sender} sends {amount} tokens to {to}");
                let (from, to) = (self.resolve(sender).map_err(e(&detail))?, self.resolve(to).map_err(e(&detail))?);
                let outcome = self.submit(from, Call::TransferTokens { to, amount: *amount as u128 }, NativeAmount::ZERO);
                Self::judge(detail, &outcome, expect_error)
            }
            Step::Delegate { sender, to, expect_error } => {
                let detail = format!("{sender} delegates to {to}");
                let (from, to) = (self.resolve(sender).map_err(e(&detail))?, self.resolve(to).map_err(e(&detail))?);
                let outcome = self.submit(from, Call::Delegate { to }, NativeAmount::ZERO);
                Self::judge(detail, &outcome, expect_error)
            }
            Step::Propose { sender, label, actions, description, expect_error } => {
                let detail = format!("{sender} proposes {label}: {description}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let actions =
                    actions.iter().map(|a| self.script_action(a)).collect::<Result<Vec<_>, _>>().map_err(e(&detail))?;
                self.propose(who, label, actions, description.clone(), expect_error, detail)
            }
            Step::ProposeExpense { sender, label, provider, kwh } => {
                let detail = format!("{sender} proposes energy bill payment {label}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let provider = self.resolve(provider).map_err(e(&detail))?;
                let kwh = kwh.unwrap_or_else(|| self.engine.sim().read_energy());
                let econ = &self.engine.config().economics;
                let expense =
                    expense_workflow(kwh, econ.usd_per_kwh, econ.eth_usd, provider).map_err(|x| fail(&detail, x.to_string()))?;
                let detail = format!(
                    "{detail}: {} kWh -> {} USD -> {} ETH",
                    kwh.normalize(),
                    expense.usd,
                    expense.eth.normalize()
                );
                self.propose(who, label, vec![expense.action], expense.description, &None, detail)
            }
            Step::Vote { sender, label, support, expect_error } => {
                let detail = format!("{sender} votes {support} on {label}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let id = self.label(label).map_err(e(&detail))?;
                let outcome = self.submit(who, Call::CastVote { proposal: id, support: *support }, NativeAmount::ZERO);
                let detail = match &outcome {
                    Outcome::Receipt(Receipt { output: Some(CallOutput::Weight { weight }), .. }) => {
                        format!("{detail} with weight {weight}")
                    }
                    _ => detail,
                };
                Self::judge(detail, &outcome, expect_error)
            }
            Step::Queue { sender, label, expect_error } => {
                let detail = format!("{sender} queues {label}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let id = self.label(label).map_err(e(&detail))?;
                let outcome = self.submit(who, Call::Queue { proposal: id }, NativeAmount::ZERO);
                Self::judge(detail, &outcome, expect_error)
            }
            Step::Execute { sender, label, expect_error } => {
                let detail = format!("{sender} executes {label}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let id = self.label(label).map_err(e(&detail))?;
                let outcome = self.submit(who, Call::Execute { proposal: id }, NativeAmount::ZERO);
                Self::judge(detail, &outcome, expect_error)
            }
            Step::AdvanceBlocks { n } => {
                let head = self.engine.advance_blocks(*n).map_err(|x| fail("advance", x.to_string()))?;
                Ok(format!("advanced {n} blocks to head {head}"))
            }
            Step::AdvanceSeconds { seconds } => {
                let target = self.engine.chain().now() + seconds;
                let head = self.engine.advance_until(target).map_err(|x| fail("advance", x.to_string()))?;
                Ok(format!("advanced {seconds} s to head {head}"))
            }
            Step::EndVoting { label } => {
                let detail = format!("close voting on {label}");
                let id = self.label(label).map_err(e(&detail))?;
                let end = self.engine.chain().governor().proposal(&id).map_err(|x| fail(&detail, x.to_string()))?.vote_end_block;
                let clock = self.engine.chain().clock();
                if end + 1 > clock {
                    self.engine.advance_blocks(end + 1 - clock).map_err(|x| fail(&detail, x.to_string()))?;
                }
                Ok(format!("{detail} (window ended at block {end}, head {})", self.engine.chain().head()))
            }
            Step::AwaitEta { label } => {
                let detail = format!("wait for the timelock on {label}");
                let id = self.label(label).map_err(e(&detail))?;
                let eta = self
                    .engine
                    .chain()
                    .governor()
                    .proposal(&id)
                    .map_err(|x| fail(&detail, x.to_string()))?
                    .eta
                    .ok_or_else(|| fail(&detail, "proposal is not queued"))?;
                let bt = self.engine.chain().block_time();
                self.engine.advance_until(eta.saturating_sub(bt)).map_err(|x| fail(&detail, x.to_string()))?;
                Ok(format!("{detail} (eta {eta}, now {})", self.engine.chain().now()))
            }
            Step::SetEnvironment { temperature, humidity, lux, co } => {
                self.engine.set_environment(*temperature, *humidity, *lux, *co);
                Ok(format!("room at {temperature} °C, {humidity} %RH, {lux} lux natural, {co} ppm"))
            }
            Step::SetOccupancy { n } => {
                self.engine.set_occupancy(*n).map_err(|x| fail("occupancy", x.to_string()))?;
                Ok(format!("occupancy {n}"))
            }
            Step::OccupancyStream => {
                self.engine.use_occupancy_stream();
                Ok(format!("seeded occupancy stream (first value {})", self.engine.sim().read_sensors().occupancy))
            }
            Step::SetAppliance { device, level, expect_error } => {
                let detail = format!("set {device} to {level}");
                let outcome = match self.engine.set_appliance(*device, *level, Cause::UserCommand) {
                    Ok(_) => None,
                    Err(x) => Some(x.code().to_string()),
                };
                match (expect_error, outcome) {
                    (None, None) => Ok(detail),
                    (Some(w), Some(g)) if *w == g => Ok(format!("{detail} -> {g} (expected)")),
                    (w, g) => Err(fail(detail, format!("expected {w:?}, got {g:?}"))),
                }
            }
            Step::LoadMeter { raw_kwh } => {
                let factor = self.engine.config().sim.energy_scaling_factor;
                let meter = EnergyMeter::from_raw_kwh(*raw_kwh, factor)
                    .ok_or_else(|| fail("load meter", format!("{raw_kwh} kWh is not representable")))?;
                self.engine.load_meter(meter);
                Ok(format!("meter holds {raw_kwh} kWh raw, reads {} kWh", self.engine.sim().read_energy().normalize()))
            }
            Step::Tick { seconds } => {
                let env = self.engine.tick_sim(*seconds).map_err(|x| fail("tick", x.to_string()))?;
                Ok(format!("ticked {seconds} s: {:.2} °C, {:.0} ppm", env.temperature, env.co))
            }
            Step::RunFor { seconds } => {
                let outcomes = self.engine.run_for(*seconds).map_err(|x| fail("run", x.to_string()))?;
                let n: usize = outcomes
                    .iter()
                    .map(|o| match o {
                        CycleOutcome::Applied { decisions, .. } => decisions.len(),
                        CycleOutcome::Skipped { .. } => 0,
                    })
                    .sum();
                let detail = format!("ran {seconds} s: {} cycles, {n} decisions", outcomes.len());
                self.last_cycle = outcomes.into_iter().last();
                Ok(detail)
            }
            Step::AgentCycle => {
                let outcome = self.engine.run_agent_cycle().map_err(|x| fail("agent cycle", x.to_string()))?;
                let detail = match &outcome {
                    CycleOutcome::Applied { decisions, .. } => {
                        let parts: Vec<String> = decisions.iter().map(describe_decision).collect();
                        format!("agent cycle: [{}]", parts.join(", "))
                    }
                    CycleOutcome::Skipped { reason } => format!("agent cycle skipped: {reason}"),
                };
                self.last_cycle = Some(outcome);
                Ok(detail)
            }
            Step::Say { sender, text, sign, expect_error } => {
                let detail = format!("{sender}: {text:?}");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let reply = match self.engine.assistant_message(who, text) {
                    Ok(r) => r,
                    Err(x) => {
                        return Self::judge(detail, &Outcome::Rejected(x.code().to_string()), expect_error);
                    }
                };
                let mut detail = format!("{detail} -> {}", reply.reply);
                if let Some(p) = &reply.pending {
                    self.last_pending = Some(p.id.clone());
                    if *sign {
                        let outcome = match self.engine.assistant_sign(who, &p.id) {
                            Ok(r) => Outcome::Receipt(r),
                            Err(x) => Outcome::Rejected(x.code().to_string()),
                        };
                        detail.push_str(" [signed]");
                        if let Outcome::Receipt(Receipt { output: Some(CallOutput::ProposalId { id }), .. }) = &outcome {
                            detail.push_str(&format!(" proposal {id}"));
                        }
                        return Self::judge(detail, &outcome, expect_error);
                    }
                }
                match expect_error {
                    None => Ok(detail),
                    Some(want) => Err(fail(detail, format!("expected {want} but the message was accepted"))),
                }
            }
            Step::Sign { sender, expect_error } => {
                let detail = format!("{sender} signs the pending transaction");
                let who = self.resolve(sender).map_err(e(&detail))?;
                let id = self.last_pending.clone().ok_or_else(|| fail(&detail, "nothing pending"))?;
                let outcome = match self.engine.assistant_sign(who, &id) {
                    Ok(r) => Outcome::Receipt(r),
                    Err(x) => Outcome::Rejected(x.code().to_string()),
                };
                Self::judge(format!("{detail} {id}"), &outcome, expect_error)
            }
            Step::AssertBalanceDelta { account, since, delta_eth } => {
                let detail = format!("{account} balance changed by {delta_eth} ETH since {since:?}");
                let who = self.resolve(account).map_err(e(&detail))?;
                let before = self
                    .snapshots
                    .get(since)
                    .ok_or_else(|| fail(&detail, format!("no snapshot {since:?}")))?
                    .get(&who)
                    .copied()
                    .unwrap_or(NativeAmount::ZERO);
                let after = self.engine.chain().balance_of(&who);
                let delta = after.0 as i128 - before.0 as i128;
                let want = delta_eth * Decimal::from(crate::types::WEI_PER_ETH as u64);
                if want.fract() != Decimal::ZERO {
                    return Err(fail(detail, "delta is finer than one base unit"));
                }
                let want = i128::try_from(want).map_err(|_| fail(&detail, "delta out of range"))?;
                if delta == want {
                    Ok(format!("{detail} (exactly {delta} base units)"))
                } else {
                    Err(fail(detail, format!("actual delta {delta} base units, expected {want}")))
                }
            }
            Step::AssertBalance { account, eth: want } => {
                let detail = format!("{account} holds {want} ETH");
                let who = self.resolve(account).map_err(e(&detail))?;
                let want = to_native(*want).map_err(e(&detail))?;
                let got = self.engine.chain().balance_of(&who);
                check(detail, got == want, || format!("holds {} ETH", eth(got)))
            }
            Step::AssertState { label, state } => {
                let detail = format!("{label} is {state:?}");
                let id = self.label(label).map_err(e(&detail))?;
                let got = self.engine.chain().proposal_state(&id).map_err(|x| fail(&detail, x.to_string()))?;
                check(detail, got == *state, || format!("state is {got:?}"))
            }
            Step::AssertDefeatReason { label, reason } => {
                let detail = format!("{label} defeated: {reason:?}");
                let id = self.label(label).map_err(e(&detail))?;
                let chain = self.engine.chain();
                let got = chain
                    .governor()
                    .defeat_reason(&id, chain.clock(), chain.token())
                    .map_err(|x| fail(&detail, x.to_string()))?;
                check(detail, got == Some(*reason), || format!("defeat reason {got:?}"))
            }
            Step::AssertThreshold { key, value } => {
                let detail = format!("registry {key} = {value}");
                let got = self.engine.chain().registry().get_threshold(*key);
                check(detail, got == key.to_stored(*value), || format!("registry holds {}", key.format_physical(got)))
            }
            Step::AssertAgentThreshold { key, value } => {
                let detail = format!("agent's last cycle used {key} = {value}");
                let got = self.engine.last_cycle_thresholds().map(|t| t.get(*key));
                check(detail, got == Some(key.to_stored(*value)), || match got {
                    Some(g) => format!("agent used {}", key.format_physical(g)),
                    None => "no completed cycle".into(),
                })
            }
            Step::AssertLevels { fan, purifier, humidifier, light } => {
                let levels = self.engine.sim().levels();
                let mut wrong = Vec::new();
                let mut parts = Vec::new();
                for (k, want) in [
                    (ApplianceKind::Fan, fan),
                    (ApplianceKind::Purifier, purifier),
                    (ApplianceKind::Humidifier, humidifier),
                    (ApplianceKind::Light, light),
                ] {
                    if let Some(w) = want {
                        parts.push(format!("{k}={w}"));
                        if levels.get(k) != *w {
                            wrong.push(format!("{k} is {}", levels.get(k)));
                        }
                    }
                }
                check(format!("levels {}", parts.join(" ")), wrong.is_empty(), || wrong.join(", "))
            }
            Step::AssertLastCycle { decisions } => {
                let detail = format!("last cycle decided exactly {} change(s)", decisions.len());
                let got = match &self.last_cycle {
                    Some(CycleOutcome::Applied { decisions, .. }) => decisions.clone(),
                    Some(CycleOutcome::Skipped { reason }) => return Err(fail(detail, format!("cycle skipped: {reason}"))),
                    None => return Err(fail(detail, "no agent cycle has run")),
                };
                let mut got_set: Vec<ExpectedDecision> = got
                    .iter()
                    .map(|d| match &d.decision {
                        Decision::SetLevel { device, new_level } => {
                            ExpectedDecision { device: Some(*device), level: Some(*new_level), alert: false }
                        }
                        Decision::Alert { .. } => ExpectedDecision { device: None, level: None, alert: true },
                    })
                    .collect();
                let mut want = decisions.clone();
                let key = |d: &ExpectedDecision| (d.alert, d.device, d.level);
                got_set.sort_by_key(key);
                want.sort_by_key(key);
                let shown: Vec<String> = got.iter().map(describe_decision).collect();
                check(format!("{detail}: [{}]", shown.join(", ")), got_set == want, || "decision set differs".into())
            }
            Step::AssertMember { account, member } => {
                let detail = format!("{account} member = {member}");
                let who = self.resolve(account).map_err(e(&detail))?;
                let got = self.engine.chain().governor().is_member(&who);
                check(detail, got == *member, || format!("member = {got}"))
            }
            Step::AssertTokens { account, amount } => {
                let detail = format!("{account} holds {amount} tokens");
                let who = self.resolve(account).map_err(e(&detail))?;
                let got = self.engine.chain().token().balance_of(&who);
                check(detail, got == *amount as u128, || format!("holds {got}"))
            }
            Step::AssertRoom { room, slot, occupied } => {
                let detail = match slot {
                    Some(s) => format!("{room} @ {s} occupied = {occupied}"),
                    None => format!("{room} occupied = {occupied}"),
                };
                let map = self.engine.room_map(slot.as_deref());
                let got = map.iter().find(|r| r.room == *room).map(|r| r.occupied).unwrap_or(false);
                check(detail, got == *occupied, || format!("occupied = {got}"))
            }
            Step::AssertBookings { account, count } => {
                let detail = format!("{account} has {count} live bookings");
                let who = self.resolve(account).map_err(e(&detail))?;
                let got = self.engine.chain().reservations().bookings_history(&who).len();
                check(detail, got == *count, || format!("has {got}"))
            }
            Step::AssertEnergy { kwh } => {
                let got = self.engine.sim().read_energy();
                check(format!("energy readout {kwh} kWh"), got == *kwh, || format!("reads {got}"))
            }
            Step::AssertProposalOutcomes { passed, defeated_by_quorum, defeated_by_majority } => {
                let detail = format!(
                    "{passed} passed, {defeated_by_quorum} defeated by quorum, {defeated_by_majority} by majority"
                );
                let (p, q, m) = self.outcome_counts();
                check(detail, (p, q, m) == (*passed, *defeated_by_quorum, *defeated_by_majority), || {
                    format!("{p} passed, {q} quorum, {m} majority")
                })
            }
        }
    }

    fn outcome_counts(&self) -> (usize, usize, usize) {
        let chain = self.engine.chain();
        let (mut passed, mut quorum, mut majority) = (0, 0, 0);
        for p in chain.governor().proposals() {
            match chain.proposal_state(&p.id) {
                Ok(ProposalState::Succeeded | ProposalState::Queued | ProposalState::Executed) => passed += 1,
                Ok(ProposalState::Defeated) => {
                    match chain.governor().defeat_reason(&p.id, chain.clock(), chain.token()) {
                        Ok(Some(DefeatReason::QuorumNotReached)) => quorum += 1,
                        _ => majority += 1,
                    }
                }
                _ => {}
            }
        }
        (passed, quorum, majority)
    }

    fn summaries(&self) -> Vec<ProposalSummary> {
        let chain = self.engine.chain();
        chain
            .governor()
            .proposals()
            .iter()
            .map(|p| ProposalSummary {
                label: self.labels.iter().find(|(_, id)| **id == p.id).map(|(l, _)| l.clone()),
                id: p.id,
                description: p.description.clone(),
                state: chain.proposal_state(&p.id).expect("listed proposals exist"),
                defeat_reason: chain.governor().defeat_reason(&p.id, chain.clock(), chain.token()).ok().flatten(),
            })
            .collect()
    }

    /// Records proposal states visible after a step.
    fn observe(&mut self) {
        let chain = self.engine.chain();
        for p in chain.governor().proposals() {
            if let Ok(s) = chain.proposal_state(&p.id) {
                self.coverage.proposal_states.insert(s);
            }
        }
    }

    fn finish_coverage(&mut self) {
        let gov = self.engine.chain().governor();
        for p in gov.proposals().iter().filter(|p| p.executed_at.is_some()) {
            self.coverage.executed_actions.extend(p.actions.iter().map(Action::kind));
        }
        for d in self.engine.decisions() {
            match d.cause {
                Cause::Occupancy { .. } => self.coverage.occupancy_cycle = true,
                Cause::ThresholdViolation { .. } => self.coverage.control_cycle = true,
                _ => {}
            }
        }
    }
}

fn check(detail: String, ok: bool, actual: impl FnOnce() -> String) -> StepResult {
    if ok {
        Ok(detail)
    } else {
        let reason = actual();
        Err(StepFailure { detail, reason })
    }
}

fn describe_decision(d: &crate::agent::AgentDecision) -> String {
    match &d.decision {
        Decision::SetLevel { device, new_level } => format!("{device}->{new_level}"),
        Decision::Alert { message } => format!("alert({message})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scripts_parse() {
        for id in builtin_ids() {
            let s = builtin(id).unwrap();
            assert_eq!(s.id, id);
            assert!(!s.steps.is_empty());
        }
        assert!(matches!(builtin("9"), Err(ScenarioError::UnknownScenario(_))));
    }

    #[test]
    fn step_names_are_snake_case() {
        assert_eq!(Step::AgentCycle.op(), "agent_cycle");
        assert!(Step::AssertEnergy { kwh: Decimal::ONE }.is_assertion());
    }
}
