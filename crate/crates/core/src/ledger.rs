//! Single-node block ledger hosting the token, governor, timelock treasury,
//! reservation and automation-registry contracts.
//!
//! Every submitted transaction seals its own block. The fee
//! (`schedule[kind] × gas_price`) moves from the sender to the fee sink whether
//! the call succeeds or reverts; the call itself runs against a scratch copy of
//! the contract state that is committed only on success.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canon::{Canonical, Encoder};
use crate::governor::{Action, Governor, GovernorConfig, GovernorError, ProposalState, Support};
use crate::registry::{AutomationRegistry, RegistryError, ThresholdKey, ThresholdSet};
use crate::reservation::{Booking, ReservationConfig, ReservationError, Reservations};
use crate::token::{GovernanceToken, TokenConfig, TokenError};
use crate::types::{Address, Hash32, NativeAmount, WEI_PER_GWEI};

/// Operation kinds with an entry in the gas schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    DeployGovernor,
    DeployTimelock,
    DeployToken,
    DeployAutomation,
    DeployReservation,
    AddMember,
    RemoveMember,
    Reservation,
    CancelReservation,
    Propose,
    Vote,
    Queue,
    Execute,
    TokenTransfer,
    NativeTransfer,
    Delegate,
    ThresholdWrite,
}

impl OpKind {
    pub const ALL: [OpKind; 17] = [
        OpKind::DeployGovernor,
        OpKind::DeployTimelock,
        OpKind::DeployToken,
        OpKind::DeployAutomation,
        OpKind::DeployReservation,
        OpKind::AddMember,
        OpKind::RemoveMember,
        OpKind::Reservation,
        OpKind::CancelReservation,
        OpKind::Propose,
        OpKind::Vote,
        OpKind::Queue,
        OpKind::Execute,
        OpKind::TokenTransfer,
        OpKind::NativeTransfer,
        OpKind::Delegate,
        OpKind::ThresholdWrite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::DeployGovernor => "deploy_governor",
            OpKind::DeployTimelock => "deploy_timelock",
            OpKind::DeployToken => "deploy_token",
            OpKind::DeployAutomation => "deploy_automation",
            OpKind::DeployReservation => "deploy_reservation",
            OpKind::AddMember => "add_member",
            OpKind::RemoveMember => "remove_member",
            OpKind::Reservation => "reservation",
            OpKind::CancelReservation => "cancel_reservation",
            OpKind::Propose => "propose",
            OpKind::Vote => "vote",
            OpKind::Queue => "queue",
            OpKind::Execute => "execute",
            OpKind::TokenTransfer => "token_transfer",
            OpKind::NativeTransfer => "native_transfer",
            OpKind::Delegate => "delegate",
            OpKind::ThresholdWrite => "threshold_write",
        }
    }

    /// Which contract the operation is addressed to.
    pub fn contract(self) -> &'static str {
        match self {
            OpKind::DeployGovernor
            | OpKind::AddMember
            | OpKind::RemoveMember
            | OpKind::Propose
            | OpKind::Vote
            | OpKind::Queue
            | OpKind::Execute => "DAO Governor",
            OpKind::DeployTimelock | OpKind::NativeTransfer => "Timelock controller",
            OpKind::DeployToken | OpKind::TokenTransfer | OpKind::Delegate => "GovernanceToken",
            OpKind::DeployAutomation | OpKind::ThresholdWrite => "Facilities automation",
            OpKind::DeployReservation | OpKind::Reservation | OpKind::CancelReservation => "Space reservation",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gas units charged per operation kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GasSchedule(BTreeMap<OpKind, u64>);

impl Default for GasSchedule {
    fn default() -> Self {
        use OpKind::*;
        GasSchedule(BTreeMap::from([
            (DeployGovernor, 3_880_388),
            (DeployTimelock, 1_909_795),
            (DeployToken, 1_971_098),
            (DeployAutomation, 488_638),
            (DeployReservation, 1_662_788),
            (AddMember, 73_610),
            (Reservation, 181_123),
            (Propose, 108_168),
            (Vote, 93_186),
            (Queue, 123_769),
            (Execute, 132_563),
            (TokenTransfer, 72_954),
            (NativeTransfer, 21_055),
            // not metered in the reference deployment
            (RemoveMember, 35_000),
            (CancelReservation, 45_000),
            (Delegate, 70_000),
            (ThresholdWrite, 30_000),
        ]))
    }
}

impl GasSchedule {
    /// Default schedule with `overrides` applied on top.
    pub fn with_overrides(overrides: &BTreeMap<OpKind, u64>) -> Self {
        let mut s = Self::default();
        s.0.extend(overrides.iter().map(|(k, v)| (*k, *v)));
        s
    }

    pub fn gas(&self, kind: OpKind) -> u64 {
        self.0[&kind]
    }

    pub fn entries(&self) -> impl Iterator<Item = (OpKind, u64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        for kind in OpKind::ALL {
            match self.0.get(&kind) {
                Some(&g) if g > 0 => {}
                _ => return Err(LedgerError::InvalidGasSchedule(kind)),
            }
        }
        Ok(())
    }
}

/// Dev-mode authorization: a per-account shared secret derived from the address.
pub fn dev_auth_token(addr: &Address) -> String {
    let mut h = Sha256::new();
    h.update(b"dab-dev-auth:");
    h.update(addr.as_bytes());
    hex::encode(&h.finalize()[..16])
}

/// Transaction payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "call", rename_all = "snake_case")]
pub enum Call {
    /// Sends the attached value to `to`.
    TransferNative { to: Address },
    TransferTokens {
        to: Address,
        #[serde(with = "crate::types::u128_string")]
        amount: u128,
    },
    Delegate { to: Address },
    Propose { actions: Vec<Action>, description: String },
    CastVote { proposal: Hash32, support: Support },
    Queue { proposal: Hash32 },
    Execute { proposal: Hash32 },
    /// The attached value must equal the booking fee.
    BookRoom { room: String, slot: String },
    CancelBooking { booking_id: u64 },
    /// Direct registry write; only the governor may perform it.
    SetThreshold { key: ThresholdKey, value: i64 },
    /// Direct treasury debit; only the governor may perform it.
    TreasuryWithdraw { to: Address, amount: NativeAmount },
}

impl Call {
    pub fn op_kind(&self) -> OpKind {
        match self {
            Call::TransferNative { .. } | Call::TreasuryWithdraw { .. } => OpKind::NativeTransfer,
            Call::TransferTokens { .. } => OpKind::TokenTransfer,
            Call::Delegate { .. } => OpKind::Delegate,
            Call::Propose { .. } => OpKind::Propose,
            Call::CastVote { .. } => OpKind::Vote,
            Call::Queue { .. } => OpKind::Queue,
            Call::Execute { .. } => OpKind::Execute,
            Call::BookRoom { .. } => OpKind::Reservation,
            Call::CancelBooking { .. } => OpKind::CancelReservation,
            Call::SetThreshold { .. } => OpKind::ThresholdWrite,
        }
    }

    /// Resolves a call name as used by external callers.
    pub fn kind_from_name(name: &str) -> Result<OpKind, LedgerError> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| LedgerError::UnknownAction(name.to_string()))
    }

    fn encode(&self, enc: &mut Encoder) {
        let json = serde_json::to_vec(self).expect("calls always serialize");
        enc.bytes(&json);
    }
}

fn action_op_kind(action: &Action) -> OpKind {
    match action {
        Action::SendNative { .. } => OpKind::NativeTransfer,
        Action::TransferGovernanceTokens { .. } => OpKind::TokenTransfer,
        Action::AddMember { .. } => OpKind::AddMember,
        Action::RemoveMember { .. } => OpKind::RemoveMember,
        Action::SetThreshold { .. } => OpKind::ThresholdWrite,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    pub call: Call,
    #[serde(default)]
    pub value: NativeAmount,
    pub gas_price: NativeAmount,
    pub auth: String,
}

impl Transaction {
    /// Builds a transaction carrying the sender's dev-mode authorization.
    pub fn signed(sender: Address, call: Call, value: NativeAmount, gas_price: NativeAmount) -> Self {
        Self { sender, call, value, gas_price, auth: dev_auth_token(&sender) }
    }
}

/// Why a call reverted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error(transparent)]
    Governor(#[from] GovernorError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Reservation(#[from] ReservationError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("treasury holds {available:?}, cannot send {requested:?}")]
    InsufficientTreasury { available: NativeAmount, requested: NativeAmount },
    #[error("caller is not authorized for this call")]
    Unauthorized,
    #[error("action {index} of the proposal failed: {source}")]
    ActionFailed {
        index: usize,
        #[source]
        source: Box<ContractError>,
    },
}

impl ContractError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::Governor(e) => match e {
                GovernorError::BelowProposalThreshold { .. } => "BelowProposalThreshold",
                GovernorError::EmptyActions => "EmptyActions",
                GovernorError::DuplicateProposal(_) => "DuplicateProposal",
                GovernorError::DescriptionTooLong => "DescriptionTooLong",
                GovernorError::UnknownProposal(_) => "UnknownProposal",
                GovernorError::NotActive(_) => "NotActive",
                GovernorError::AlreadyVoted(_) => "AlreadyVoted",
                GovernorError::ZeroWeight => "ZeroWeight",
                GovernorError::NotSucceeded(_) => "NotSucceeded",
                GovernorError::NotQueued(_) => "NotQueued",
                GovernorError::TimelockNotElapsed { .. } => "TimelockNotElapsed",
                GovernorError::NotMember(_) => "NotMember",
                GovernorError::AlreadyMember(_) => "AlreadyMember",
                GovernorError::InvalidQuorumFraction => "InvalidQuorumFraction",
                GovernorError::InvalidVotingPeriod => "InvalidVotingPeriod",
            },
            ContractError::Token(e) => match e {
                TokenError::InsufficientTokens { .. } => "InsufficientTokens",
                TokenError::AllocationsExceedSupply { .. } => "AllocationsExceedSupply",
                TokenError::FutureBlock { .. } => "FutureBlock",
                TokenError::ReserveCannotDelegate => "ReserveCannotDelegate",
            },
            ContractError::Reservation(e) => match e {
                ReservationError::IncorrectFee { .. } => "IncorrectFee",
                ReservationError::SlotTaken { .. } => "SlotTaken",
                ReservationError::UnknownBooking(_) => "UnknownBooking",
                ReservationError::NotBookingOwner => "NotBookingOwner",
                ReservationError::EmptyRoomOrSlot => "EmptyRoomOrSlot",
            },
            ContractError::Registry(e) => match e {
                RegistryError::Unauthorized => "Unauthorized",
                RegistryError::InvertedRange { .. } => "InvertedRange",
                RegistryError::UnknownKey(_) => "UnknownKey",
            },
            ContractError::InsufficientTreasury { .. } => "InsufficientTreasury",
            ContractError::Unauthorized => "Unauthorized",
            ContractError::ActionFailed { source, .. } => source.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("sender needs {needed:?} but holds {available:?}")]
    InsufficientBalance { needed: NativeAmount, available: NativeAmount },
    #[error("authorization token does not match the sender")]
    Unauthorized,
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("gas price must be positive")]
    ZeroGasPrice,
    #[error("must advance by at least one block")]
    ZeroBlocks,
    #[error("genesis accounts must be non-empty and distinct")]
    DuplicateOrEmptyAccounts,
    #[error("genesis must fund at least one account")]
    ZeroFunding,
    #[error("gas schedule lacks a positive entry for {0}")]
    InvalidGasSchedule(OpKind),
    #[error("genesis: {0}")]
    Genesis(String),
    #[error("chain import: {0}")]
    Import(String),
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::InsufficientBalance { .. } => "InsufficientBalance",
            LedgerError::Unauthorized => "Unauthorized",
            LedgerError::UnknownAction(_) => "UnknownAction",
            LedgerError::ZeroGasPrice => "ZeroGasPrice",
            LedgerError::ZeroBlocks => "ZeroBlocks",
            LedgerError::DuplicateOrEmptyAccounts => "DuplicateOrEmptyAccounts",
            LedgerError::ZeroFunding => "ZeroFunding",
            LedgerError::InvalidGasSchedule(_) => "InvalidGasSchedule",
            LedgerError::Genesis(_) => "Genesis",
            LedgerError::Import(_) => "Import",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TxStatus {
    Success,
    Reverted { code: String, reason: String },
}

/// Value returned by a successful call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case")]
pub enum CallOutput {
    None,
    ProposalId { id: Hash32 },
    Weight {
        #[serde(with = "crate::types::u128_string")]
        weight: u128,
    },
    Eta { eta: u64 },
    BookingId { booking_id: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_id: Hash32,
    pub block_number: u64,
    pub sender: Address,
    pub kind: OpKind,
    #[serde(flatten)]
    pub status: TxStatus,
    pub gas_used: u64,
    pub gas_price: NativeAmount,
    pub fee: NativeAmount,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<CallOutput>,
}

impl Receipt {
    pub fn is_success(&self) -> bool {
        self.status == TxStatus::Success
    }

    pub fn revert_code(&self) -> Option<&str> {
        match &self.status {
            TxStatus::Reverted { code, .. } => Some(code),
            TxStatus::Success => None,
        }
    }
}

impl Canonical for Receipt {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(&self.tx_id).u64(self.block_number).address(&self.sender).str(self.kind.name());
        match &self.status {
            TxStatus::Success => enc.u8(0),
            TxStatus::Reverted { code, .. } => enc.u8(1).str(code),
        };
        enc.u64(self.gas_used).amount(self.gas_price).amount(self.fee);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub timestamp: u64,
    pub parent_digest: Hash32,
    pub receipts: Vec<Receipt>,
}

impl Canonical for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.number).u64(self.timestamp).hash(&self.parent_digest);
        self.receipts.encode(enc);
    }
}

/// Addresses of the deployed contracts and the fee sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contracts {
    pub token: Address,
    pub governor: Address,
    /// The timelock holds the DAO treasury.
    pub timelock: Address,
    pub reservation: Address,
    pub registry: Address,
    pub fee_sink: Address,
}

impl Default for Contracts {
    fn default() -> Self {
        Self {
            token: Address::derive("dab:contract:governance-token"),
            governor: Address::derive("dab:contract:governor"),
            timelock: Address::derive("dab:contract:timelock"),
            reservation: Address::derive("dab:contract:reservation"),
            registry: Address::derive("dab:contract:automation"),
            fee_sink: Address::derive("dab:fee-sink"),
        }
    }
}

/// Administrative rights over contracts; after genesis all are held by the governor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminRights {
    pub token_admin: Address,
    pub timelock_admin: Address,
    pub timelock_proposer: Address,
    pub registry_writer: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisAccount {
    pub name: String,
    pub address: Address,
    pub funding: NativeAmount,
    /// Whole governance tokens allocated at genesis; holders become members.
    #[serde(default, with = "crate::types::u128_string")]
    pub tokens: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub accounts: Vec<GenesisAccount>,
    pub token: TokenConfig,
    pub governor: GovernorConfig,
    pub reservation: ReservationConfig,
    pub thresholds: ThresholdSet,
    pub gas: GasSchedule,
    pub default_gas_price: NativeAmount,
    /// Seconds between consecutive blocks.
    pub block_time: u64,
    pub genesis_timestamp: u64,
    /// Account charged for the five deployments in block 0, if any.
    #[serde(default)]
    pub deployer: Option<Address>,
}

impl Default for GenesisConfig {
    fn default() -> Self {
        Self {
            accounts: Vec::new(),
            token: TokenConfig::default(),
            governor: GovernorConfig::default(),
            reservation: ReservationConfig::default(),
            thresholds: ThresholdSet::default(),
            gas: GasSchedule::default(),
            default_gas_price: NativeAmount(WEI_PER_GWEI),
            block_time: 12,
            genesis_timestamp: 1_726_300_800,
            deployer: None,
        }
    }
}

/// Notifications produced while sealing blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainEvent {
    Block { number: u64, timestamp: u64, receipts: usize },
    ProposalState { id: Hash32, state: ProposalState },
    Booking { booking_id: u64, room: String, slot: String, user: Address, booked: bool },
    ThresholdChanged { key: ThresholdKey, value: i64 },
}

/// Contract state plus native balances; the unit of atomic commit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct World {
    balances: BTreeMap<Address, NativeAmount>,
    token: GovernanceToken,
    governor: Governor,
    reservations: Reservations,
    registry: AutomationRegistry,
}

struct Ctx {
    sender: Address,
    value: NativeAmount,
    clock: u64,
    now: u64,
}

impl World {
    fn balance(&self, a: &Address) -> NativeAmount {
        self.balances.get(a).copied().unwrap_or_default()
    }

    fn move_native(&mut self, from: Address, to: Address, amount: NativeAmount) {
        if amount.0 == 0 || from == to {
            return;
        }
        let src = self.balances.get_mut(&from).expect("debited account exists");
        *src = src.checked_sub(amount).expect("debit checked by caller");
        let dst = self.balances.entry(to).or_default();
        *dst = dst.checked_add(amount).expect("supply fits in u128");
    }

    fn apply(&mut self, c: &Contracts, ctx: &Ctx, call: &Call) -> Result<CallOutput, ContractError> {
        match call {
            Call::TransferNative { to } => {
                self.move_native(ctx.sender, *to, ctx.value);
                Ok(CallOutput::None)
            }
            Call::TransferTokens { to, amount } => {
                self.token.transfer(ctx.sender, *to, *amount, ctx.clock)?;
                Ok(CallOutput::None)
            }
            Call::Delegate { to } => {
                self.token.delegate(ctx.sender, *to, ctx.clock)?;
                Ok(CallOutput::None)
            }
            Call::Propose { actions, description } => {
                let votes = self.token.votes(&ctx.sender);
                let id = self.governor.propose(
                    ctx.sender,
                    votes,
                    actions.clone(),
                    description.clone(),
                    ctx.clock,
                    &self.token,
                )?;
                Ok(CallOutput::ProposalId { id })
            }
            Call::CastVote { proposal, support } => {
                let weight = self.governor.cast_vote(ctx.sender, proposal, *support, ctx.clock, &self.token)?;
                Ok(CallOutput::Weight { weight })
            }
            Call::Queue { proposal } => {
                let eta = self.governor.queue(proposal, ctx.clock, ctx.now, &self.token)?;
                Ok(CallOutput::Eta { eta })
            }
            Call::Execute { proposal } => {
                let actions = self.governor.check_executable(proposal, ctx.clock, ctx.now, &self.token)?;
                for (index, action) in actions.iter().enumerate() {
                    self.apply_action(c, ctx, proposal, action)
                        .map_err(|e| ContractError::ActionFailed { index, source: Box::new(e) })?;
                }
                self.governor.mark_executed(proposal, ctx.clock, ctx.now)?;
                Ok(CallOutput::None)
            }
            Call::BookRoom { room, slot } => {
                let booking_id = self.reservations.book_room(ctx.sender, room, slot, ctx.value)?;
                self.move_native(ctx.sender, c.timelock, ctx.value);
                Ok(CallOutput::BookingId { booking_id })
            }
            Call::CancelBooking { booking_id } => {
                let booking = self.reservations.cancel_booking(ctx.sender, *booking_id)?;
                if self.reservations.config().refund_on_cancel {
                    let fee = self.reservations.booking_fee();
                    self.treasury_send_native(c, c.governor, booking.user, fee)?;
                }
                Ok(CallOutput::None)
            }
            Call::SetThreshold { key, value } => {
                self.registry.set_threshold(ctx.sender, *key, *value, ctx.clock, Hash32::default())?;
                Ok(CallOutput::None)
            }
            Call::TreasuryWithdraw { to, amount } => {
                self.treasury_send_native(c, ctx.sender, *to, *amount)?;
                Ok(CallOutput::None)
            }
        }
    }

    /// Debits the treasury. Only the governor (acting through an executed
    /// proposal) may call this.
    fn treasury_send_native(
        &mut self,
        c: &Contracts,
        caller: Address,
        to: Address,
        amount: NativeAmount,
    ) -> Result<(), ContractError> {
        if caller != c.governor {
            return Err(ContractError::Unauthorized);
        }
        let available = self.balance(&c.timelock);
        if available < amount {
            return Err(ContractError::InsufficientTreasury { available, requested: amount });
        }
        self.move_native(c.timelock, to, amount);
        Ok(())
    }

    fn apply_action(&mut self, c: &Contracts, ctx: &Ctx, proposal: &Hash32, action: &Action) -> Result<(), ContractError> {
        match action {
            Action::SendNative { to, amount } => self.treasury_send_native(c, c.governor, *to, *amount),
            Action::TransferGovernanceTokens { to, amount } => {
                self.token.transfer(c.token, *to, *amount, ctx.clock)?;
                Ok(())
            }
            Action::AddMember { addr, token_grant } => {
                self.governor.add_member(*addr)?;
                self.token.allocate(*addr, *token_grant, ctx.clock)?;
                Ok(())
            }
            Action::RemoveMember { addr } => {
                self.governor.remove_member(*addr)?;
                Ok(())
            }
            Action::SetThreshold { key, value } => {
                self.registry.set_threshold(c.governor, *key, *value, ctx.clock, *proposal)?;
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    contracts: Contracts,
    admin: AdminRights,
    gas: GasSchedule,
    default_gas_price: NativeAmount,
    block_time: u64,
    blocks: Vec<Block>,
    world: World,
    nonces: BTreeMap<Address, u64>,
    genesis_total: NativeAmount,
    names: BTreeMap<Address, String>,
    outbox: Vec<ChainEvent>,
    /// Last announced state per proposal (by creation index).
    announced: Vec<ProposalState>,
}

impl Chain {
    pub fn genesis(config: &GenesisConfig) -> Result<Self, LedgerError> {
        let contracts = Contracts::default();
        let mut seen = BTreeSet::new();
        if config.accounts.is_empty()
            || !config.accounts.iter().all(|a| seen.insert(a.address))
        {
            return Err(LedgerError::DuplicateOrEmptyAccounts);
        }
        let reserved = [
            contracts.token,
            contracts.governor,
            contracts.timelock,
            contracts.reservation,
            contracts.registry,
            contracts.fee_sink,
        ];
        if config.accounts.iter().any(|a| reserved.contains(&a.address)) {
            return Err(LedgerError::DuplicateOrEmptyAccounts);
        }
        let total: u128 = config.accounts.iter().map(|a| a.funding.0).sum();
        if total == 0 {
            return Err(LedgerError::ZeroFunding);
        }
        config.gas.validate()?;
        if config.default_gas_price.0 == 0 {
            return Err(LedgerError::ZeroGasPrice);
        }
        config.governor.validate().map_err(|e| LedgerError::Genesis(e.to_string()))?;
        if config.reservation.booking_fee.0 == 0 {
            return Err(LedgerError::Genesis("booking fee must be positive".into()));
        }
        if !config.thresholds.is_well_formed() {
            return Err(LedgerError::Genesis("threshold ranges must satisfy min <= max".into()));
        }

        let allocations: Vec<(Address, u128)> = config
            .accounts
            .iter()
            .filter(|a| a.tokens > 0)
            .map(|a| (a.address, a.tokens))
            .collect();
        let token = GovernanceToken::mint_initial(&config.token, contracts.token, &allocations, 0)
            .map_err(|e| LedgerError::Genesis(e.to_string()))?;
        let governor = Governor::new(config.governor.clone(), allocations.iter().map(|(a, _)| *a));
        let world = World {
            balances: config.accounts.iter().map(|a| (a.address, a.funding)).collect(),
            token,
            governor,
            reservations: Reservations::new(config.reservation.clone()),
            registry: AutomationRegistry::new(contracts.governor, config.thresholds),
        };

        let mut chain = Chain {
            contracts,
            // deployment hands every administrative role to the governor
            admin: AdminRights {
                token_admin: contracts.governor,
                timelock_admin: contracts.governor,
                timelock_proposer: contracts.governor,
                registry_writer: contracts.governor,
            },
            gas: config.gas.clone(),
            default_gas_price: config.default_gas_price,
            block_time: config.block_time,
            blocks: Vec::new(),
            world,
            nonces: BTreeMap::new(),
            genesis_total: NativeAmount(total),
            names: config.accounts.iter().map(|a| (a.address, a.name.clone())).collect(),
            outbox: Vec::new(),
            announced: Vec::new(),
        };
        for (addr, name) in [
            (contracts.token, "token"),
            (contracts.governor, "governor"),
            (contracts.timelock, "treasury"),
            (contracts.reservation, "reservation"),
            (contracts.registry, "registry"),
            (contracts.fee_sink, "fee_sink"),
        ] {
            chain.names.insert(addr, name.to_string());
        }

        let mut receipts = Vec::new();
        if let Some(deployer) = config.deployer {
            let kinds = [
                OpKind::DeployToken,
                OpKind::DeployTimelock,
                OpKind::DeployGovernor,
                OpKind::DeployAutomation,
                OpKind::DeployReservation,
            ];
            let needed: u128 = kinds.iter().map(|k| chain.gas.gas(*k) as u128 * config.default_gas_price.0).sum();
            let available = chain.world.balance(&deployer);
            if available.0 < needed {
                return Err(LedgerError::InsufficientBalance { needed: NativeAmount(needed), available });
            }
            for kind in kinds {
                let gas_used = chain.gas.gas(kind);
                let fee = NativeAmount(gas_used as u128 * config.default_gas_price.0);
                chain.world.move_native(deployer, contracts.fee_sink, fee);
                let mut enc = Encoder::new();
                enc.str("deploy").address(&deployer).str(kind.name());
                receipts.push(Receipt {
                    tx_id: enc.digest(),
                    block_number: 0,
                    sender: deployer,
                    kind,
                    status: TxStatus::Success,
                    gas_used,
                    gas_price: config.default_gas_price,
                    fee,
                    output: None,
                });
            }
        }
        chain.push_block(config.genesis_timestamp, receipts);
        Ok(chain)
    }

    pub fn contracts(&self) -> &Contracts {
        &self.contracts
    }

    pub fn admin_rights(&self) -> &AdminRights {
        &self.admin
    }

    pub fn treasury(&self) -> Address {
        self.contracts.timelock
    }

    pub fn gas_schedule(&self) -> &GasSchedule {
        &self.gas
    }

    pub fn default_gas_price(&self) -> NativeAmount {
        self.default_gas_price
    }

    pub fn block_time(&self) -> u64 {
        self.block_time
    }

    /// Number of the latest sealed block.
    pub fn head(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    /// Number of the block currently being built; past-vote queries must
    /// reference earlier blocks.
    pub fn clock(&self) -> u64 {
        self.head() + 1
    }

    /// Timestamp of the latest sealed block.
    pub fn now(&self) -> u64 {
        self.blocks.last().expect("genesis block exists").timestamp
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn balance_of(&self, addr: &Address) -> NativeAmount {
        self.world.balance(addr)
    }

    pub fn balances(&self) -> &BTreeMap<Address, NativeAmount> {
        &self.world.balances
    }

    pub fn native_supply(&self) -> NativeAmount {
        NativeAmount(self.world.balances.values().map(|b| b.0).sum())
    }

    pub fn genesis_total(&self) -> NativeAmount {
        self.genesis_total
    }

    pub fn name_of(&self, addr: &Address) -> Option<&str> {
        self.names.get(addr).map(String::as_str)
    }

    pub fn token(&self) -> &GovernanceToken {
        &self.world.token
    }

    pub fn governor(&self) -> &Governor {
        &self.world.governor
    }

    pub fn reservations(&self) -> &Reservations {
        &self.world.reservations
    }

    pub fn registry(&self) -> &AutomationRegistry {
        &self.world.registry
    }

    pub fn proposal_state(&self, id: &Hash32) -> Result<ProposalState, GovernorError> {
        self.world.governor.state(id, self.clock(), &self.world.token)
    }

    pub fn get_past_votes(&self, addr: &Address, block: u64) -> Result<u128, TokenError> {
        self.world.token.get_past_votes(addr, block, self.clock())
    }

    /// Fee for `call` including the per-action fees an execution would incur.
    pub fn fee_for(&self, call: &Call, gas_price: NativeAmount) -> NativeAmount {
        let mut gas = self.gas.gas(call.op_kind()) as u128;
        if let Call::Execute { proposal } = call {
            if let Ok(p) = self.world.governor.proposal(proposal) {
                gas += p.actions.iter().map(|a| self.gas.gas(action_op_kind(a)) as u128).sum::<u128>();
            }
        }
        NativeAmount(gas * gas_price.0)
    }

    /// Applies `tx` in a new block and returns its receipt. Reverted calls
    /// still produce a receipt and pay their fee; `Err` means nothing changed.
    pub fn submit_tx(&mut self, tx: Transaction) -> Result<Receipt, LedgerError> {
        if tx.gas_price.0 == 0 {
            return Err(LedgerError::ZeroGasPrice);
        }
        if tx.auth != dev_auth_token(&tx.sender) {
            return Err(LedgerError::Unauthorized);
        }
        let kind = tx.call.op_kind();
        let gas_used = self.gas.gas(kind);
        let fee = NativeAmount(gas_used as u128 * tx.gas_price.0);
        let needed = self
            .fee_for(&tx.call, tx.gas_price)
            .checked_add(tx.value)
            .ok_or(LedgerError::InsufficientBalance { needed: NativeAmount(u128::MAX), available: self.balance_of(&tx.sender) })?;
        let available = self.balance_of(&tx.sender);
        if available < needed {
            return Err(LedgerError::InsufficientBalance { needed, available });
        }

        let number = self.clock();
        let timestamp = self.now() + self.block_time;
        let nonce = self.nonces.entry(tx.sender).or_insert(0);
        let mut enc = Encoder::new();
        enc.address(&tx.sender).u64(*nonce).amount(tx.value).amount(tx.gas_price);
        tx.call.encode(&mut enc);
        let tx_id = enc.digest();
        *nonce += 1;

        self.world.move_native(tx.sender, self.contracts.fee_sink, fee);

        let cancelled = match &tx.call {
            Call::CancelBooking { booking_id } => self.world.reservations.get(*booking_id).cloned(),
            _ => None,
        };
        let ctx = Ctx { sender: tx.sender, value: tx.value, clock: number, now: timestamp };
        let mut scratch = self.world.clone();
        let result = scratch.apply(&self.contracts, &ctx, &tx.call);
        let mut receipts = Vec::new();
        let (status, output) = match result {
            Ok(output) => {
                self.world = scratch;
                (TxStatus::Success, Some(output))
            }
            Err(e) => (TxStatus::Reverted { code: e.code().to_string(), reason: e.to_string() }, None),
        };
        let success = status == TxStatus::Success;
        receipts.push(Receipt {
            tx_id,
            block_number: number,
            sender: tx.sender,
            kind,
            status,
            gas_used,
            gas_price: tx.gas_price,
            fee,
            output,
        });

        if success {
            self.after_success(&tx, number, tx_id, cancelled, &mut receipts);
        }
        let receipt = receipts[0].clone();
        self.push_block(timestamp, receipts);
        Ok(receipt)
    }

    /// Charges per-action fees for executions and queues contract events.
    fn after_success(
        &mut self,
        tx: &Transaction,
        number: u64,
        tx_id: Hash32,
        cancelled: Option<Booking>,
        receipts: &mut Vec<Receipt>,
    ) {
        match &tx.call {
            Call::Execute { proposal } => {
                let actions = self.world.governor.proposal(proposal).expect("just executed").actions.clone();
                for (i, action) in actions.iter().enumerate() {
                    let kind = action_op_kind(action);
                    let gas_used = self.gas.gas(kind);
                    let fee = NativeAmount(gas_used as u128 * tx.gas_price.0);
                    self.world.move_native(tx.sender, self.contracts.fee_sink, fee);
                    let mut enc = Encoder::new();
                    enc.hash(&tx_id).u32(i as u32);
                    receipts.push(Receipt {
                        tx_id: enc.digest(),
                        block_number: number,
                        sender: tx.sender,
                        kind,
                        status: TxStatus::Success,
                        gas_used,
                        gas_price: tx.gas_price,
                        fee,
                        output: None,
                    });
                    if let Action::SetThreshold { key, value } = action {
                        self.outbox.push(ChainEvent::ThresholdChanged { key: *key, value: *value });
                    }
                }
            }
            Call::CastVote { proposal, .. } if receipts[0].is_success() => {
                // The tally changed even though the state may not have.
                let state = self.world.governor.state(proposal, self.clock(), &self.world.token).expect("voted proposal");
                self.outbox.push(ChainEvent::ProposalState { id: *proposal, state });
            }
            Call::BookRoom { .. } => {
                if let Some(CallOutput::BookingId { booking_id }) = receipts[0].output {
                    let b = self.world.reservations.get(booking_id).expect("just booked");
                    self.outbox.push(ChainEvent::Booking {
                        booking_id,
                        room: b.room.clone(),
                        slot: b.slot.clone(),
                        user: b.user,
                        booked: true,
                    });
                }
            }
            Call::CancelBooking { .. } => {
                if let Some(b) = cancelled {
                    self.outbox.push(ChainEvent::Booking {
                        booking_id: b.booking_id,
                        room: b.room,
                        slot: b.slot,
                        user: b.user,
                        booked: false,
                    });
                }
            }
            _ => {}
        }
    }

    fn push_block(&mut self, timestamp: u64, receipts: Vec<Receipt>) {
        let parent_digest = self.blocks.last().map(Canonical::canonical_digest).unwrap_or_default();
        let number = self.blocks.len() as u64;
        let count = receipts.len();
        self.blocks.push(Block { number, timestamp, parent_digest, receipts });
        self.outbox.push(ChainEvent::Block { number, timestamp, receipts: count });
        self.announce_proposal_states();
    }

    fn announce_proposal_states(&mut self) {
        let clock = self.clock();
        let gov = &self.world.governor;
        for (i, p) in gov.proposals().iter().enumerate() {
            // superseded entries (re-proposed ids) are no longer addressable
            if gov.proposal(&p.id).map(|latest| !std::ptr::eq(latest, p)).unwrap_or(true) {
                continue;
            }
            let state = gov.state(&p.id, clock, &self.world.token).expect("indexed proposal");
            if self.announced.get(i) != Some(&state) {
                if i >= self.announced.len() {
                    self.announced.resize(i + 1, state);
                }
                self.announced[i] = state;
                self.outbox.push(ChainEvent::ProposalState { id: p.id, state });
            }
        }
    }

    /// Appends `n` empty blocks, `dt` seconds apart; returns the new head.
    pub fn advance_block(&mut self, n: u64, dt: u64) -> Result<u64, LedgerError> {
        if n == 0 {
            return Err(LedgerError::ZeroBlocks);
        }
        for _ in 0..n {
            let ts = self.now() + dt;
            self.push_block(ts, Vec::new());
        }
        Ok(self.head())
    }

    /// Removes and returns queued notifications.
    pub fn drain_events(&mut self) -> Vec<ChainEvent> {
        std::mem::take(&mut self.outbox)
    }

    /// SHA-256 over the canonical encoding of every block and every balance.
    pub fn chain_digest(&self) -> Hash32 {
        let mut enc = Encoder::new();
        self.blocks.encode(&mut enc);
        enc.len(self.world.balances.len());
        for (addr, bal) in &self.world.balances {
            enc.address(addr).amount(*bal);
        }
        enc.digest()
    }

    /// Digest of all contract state and balances, ignoring the balances of
    /// `exclude` (used to compare state across a fee-paying revert).
    pub fn state_digest_excluding(&self, exclude: &[Address]) -> Hash32 {
        let mut view = self.world.clone();
        view.balances.retain(|a, _| !exclude.contains(a));
        Hash32::of(&serde_json::to_vec(&view).expect("world serializes"))
    }

    /// One JSON document per block, newline-terminated.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&serde_json::to_string(b).expect("blocks serialize"));
            out.push('\n');
        }
        out
    }
}

/// Parses and validates an exported block stream.
pub fn import_jsonl(text: &str) -> Result<Vec<Block>, LedgerError> {
    let mut blocks: Vec<Block> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let block: Block = serde_json::from_str(line).map_err(|e| LedgerError::Import(format!("line {}: {e}", i + 1)))?;
        let expected_parent = blocks.last().map(Canonical::canonical_digest).unwrap_or_default();
        if block.number != blocks.len() as u64 {
            return Err(LedgerError::Import(format!("block {} out of sequence", block.number)));
        }
        if block.parent_digest != expected_parent {
            return Err(LedgerError::Import(format!("block {} parent digest mismatch", block.number)));
        }
        if blocks.last().is_some_and(|p| p.timestamp > block.timestamp) {
            return Err(LedgerError::Import(format!("block {} timestamp decreases", block.number)));
        }
        for r in &block.receipts {
            if r.fee.0 != r.gas_used as u128 * r.gas_price.0 {
                return Err(LedgerError::Import(format!("receipt {} fee mismatch", r.tx_id)));
            }
        }
        blocks.push(block);
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::WEI_PER_ETH;

    fn member(n: &str) -> GenesisAccount {
        GenesisAccount { name: n.into(), address: Address::derive(n), funding: NativeAmount(WEI_PER_ETH), tokens: 10_000 }
    }

    fn plain(n: &str) -> GenesisAccount {
        GenesisAccount { tokens: 0, ..member(n) }
    }

    fn config() -> GenesisConfig {
        GenesisConfig {
            accounts: vec![member("m1"), member("m2"), member("m3"), plain("candidate"), plain("occupant")],
            ..Default::default()
        }
    }

    fn tx(chain: &Chain, who: &str, call: Call, value: NativeAmount) -> Transaction {
        Transaction::signed(Address::derive(who), call, value, chain.default_gas_price())
    }

    #[test]
    fn genesis_funds_accounts_and_hands_admin_to_governor() {
        let chain = Chain::genesis(&config()).unwrap();
        assert_eq!(chain.head(), 0);
        for n in ["m1", "m2", "m3", "candidate", "occupant"] {
            assert_eq!(chain.balance_of(&Address::derive(n)).0, WEI_PER_ETH);
        }
        let gov = chain.contracts().governor;
        assert_eq!(chain.admin_rights().token_admin, gov);
        assert_eq!(chain.admin_rights().timelock_admin, gov);
        assert_eq!(chain.governor().member_count(), 3);
        assert_eq!(chain.balance_of(&Address::derive("never-seen")), NativeAmount::ZERO);
    }

    #[test]
    fn genesis_rejects_degenerate_account_lists() {
        let empty = GenesisConfig::default();
        assert_eq!(Chain::genesis(&empty).unwrap_err(), LedgerError::DuplicateOrEmptyAccounts);
        let dup = GenesisConfig { accounts: vec![member("m1"), member("m1")], ..Default::default() };
        assert_eq!(Chain::genesis(&dup).unwrap_err(), LedgerError::DuplicateOrEmptyAccounts);
        let unfunded = GenesisConfig {
            accounts: vec![GenesisAccount { funding: NativeAmount::ZERO, ..member("m1") }],
            ..Default::default()
        };
        assert_eq!(Chain::genesis(&unfunded).unwrap_err(), LedgerError::ZeroFunding);
    }

    #[test]
    fn deployer_pays_deployment_gas() {
        let mut cfg = config();
        cfg.deployer = Some(Address::derive("m1"));
        let chain = Chain::genesis(&cfg).unwrap();
        let receipts = &chain.blocks()[0].receipts;
        assert_eq!(receipts.len(), 5);
        let gas: u128 = receipts.iter().map(|r| r.gas_used as u128).sum();
        assert_eq!(chain.balance_of(&Address::derive("m1")).0, WEI_PER_ETH - gas * WEI_PER_GWEI);
        assert_eq!(chain.native_supply(), chain.genesis_total());
    }

    #[test]
    fn proposal_fee_at_one_gwei() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let call = Call::Propose {
            actions: vec![Action::SetThreshold { key: ThresholdKey::MinTemperature, value: 170 }],
            description: "heating floor".into(),
        };
        let t = tx(&chain, "m1", call, NativeAmount::ZERO);
        let r = chain.submit_tx(t).unwrap();
        assert!(r.is_success());
        assert_eq!(r.gas_used, 108_168);
        assert_eq!(r.fee.0, 108_168 * WEI_PER_GWEI);
        assert_eq!(r.fee.eth_string(), "0.000108168");
        assert_eq!(chain.balance_of(&chain.contracts().fee_sink), r.fee);
    }

    #[test]
    fn unfunded_sender_changes_nothing() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let digest = chain.chain_digest();
        let t = tx(&chain, "ghost", Call::Delegate { to: Address::derive("ghost") }, NativeAmount::ZERO);
        assert!(matches!(chain.submit_tx(t), Err(LedgerError::InsufficientBalance { .. })));
        assert_eq!(chain.chain_digest(), digest);
    }

    #[test]
    fn wrong_auth_is_rejected() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let mut t = tx(&chain, "m1", Call::Delegate { to: Address::derive("m2") }, NativeAmount::ZERO);
        t.auth = dev_auth_token(&Address::derive("m2"));
        assert_eq!(chain.submit_tx(t), Err(LedgerError::Unauthorized));
        assert_eq!(chain.head(), 0);
    }

    #[test]
    fn reverted_call_still_pays_and_changes_nothing_else() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let sender = Address::derive("m1");
        let sink = chain.contracts().fee_sink;
        let before_state = chain.state_digest_excluding(&[sender, sink]);
        let before_balance = chain.balance_of(&sender);
        let call = Call::TransferTokens { to: Address::derive("m2"), amount: 50_000 };
        let r = chain.submit_tx(tx(&chain, "m1", call, NativeAmount::ZERO)).unwrap();
        assert_eq!(r.revert_code(), Some("InsufficientTokens"));
        assert_eq!(r.fee.0, 72_954 * WEI_PER_GWEI);
        assert_eq!(chain.balance_of(&sender).0, before_balance.0 - r.fee.0);
        assert_eq!(chain.state_digest_excluding(&[sender, sink]), before_state);
        assert_eq!(chain.native_supply(), chain.genesis_total());
    }

    #[test]
    fn direct_treasury_and_registry_calls_are_unauthorized() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let call = Call::TreasuryWithdraw { to: Address::derive("m1"), amount: NativeAmount(1) };
        let r = chain.submit_tx(tx(&chain, "m1", call, NativeAmount::ZERO)).unwrap();
        assert_eq!(r.revert_code(), Some("Unauthorized"));
        let call = Call::SetThreshold { key: ThresholdKey::MinTemperature, value: 170 };
        let r = chain.submit_tx(tx(&chain, "m1", call, NativeAmount::ZERO)).unwrap();
        assert_eq!(r.revert_code(), Some("Unauthorized"));
        assert_eq!(chain.registry().get_threshold(ThresholdKey::MinTemperature), 200);
    }

    #[test]
    fn booking_fee_reaches_treasury() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let fee = chain.reservations().booking_fee();
        let call = Call::BookRoom { room: "BFH-201".into(), slot: "2024-09-15T10:00".into() };
        let r = chain.submit_tx(tx(&chain, "occupant", call, fee)).unwrap();
        assert_eq!(r.output, Some(CallOutput::BookingId { booking_id: 1 }));
        assert_eq!(chain.balance_of(&chain.treasury()).0, 10u128.pow(16));
        let call = Call::BookRoom { room: "BFH-201".into(), slot: "2024-09-15T10:00".into() };
        let r = chain.submit_tx(tx(&chain, "m1", call, fee)).unwrap();
        assert_eq!(r.revert_code(), Some("SlotTaken"));
        assert_eq!(chain.balance_of(&chain.treasury()).0, 10u128.pow(16));
    }

    #[test]
    fn advance_block_moves_clock() {
        let mut chain = Chain::genesis(&config()).unwrap();
        chain.advance_block(3, 12).unwrap();
        let t0 = chain.now();
        assert_eq!(chain.advance_block(1, 12).unwrap(), 4);
        assert_eq!(chain.now(), t0 + 12);
        assert_eq!(chain.advance_block(0, 12), Err(LedgerError::ZeroBlocks));
        let t1 = chain.now();
        chain.advance_block(50, 12).unwrap();
        assert_eq!(chain.now(), t1 + 600);
    }

    #[test]
    fn digests_are_deterministic_and_sensitive() {
        let mut a = Chain::genesis(&config()).unwrap();
        let b = Chain::genesis(&config()).unwrap();
        assert_eq!(a.chain_digest(), b.chain_digest());
        a.advance_block(1, 12).unwrap();
        assert_ne!(a.chain_digest(), b.chain_digest());
    }

    #[test]
    fn export_import_round_trip_and_tamper_detection() {
        let mut chain = Chain::genesis(&config()).unwrap();
        let fee = chain.reservations().booking_fee();
        let call = Call::BookRoom { room: "A".into(), slot: "s".into() };
        chain.submit_tx(tx(&chain, "occupant", call, fee)).unwrap();
        chain.advance_block(2, 12).unwrap();
        let text = chain.export_jsonl();
        assert!(text.contains("\"fee\":\"181123000000000\""));
        let blocks = import_jsonl(&text).unwrap();
        assert_eq!(blocks, chain.blocks());
        let tampered = text.replacen("\"timestamp\":", "\"timestamp\":9", 2);
        assert!(import_jsonl(&tampered).is_err());
    }

    #[test]
    fn unknown_action_name() {
        assert_eq!(Call::kind_from_name("propose"), Ok(OpKind::Propose));
        assert!(matches!(Call::kind_from_name("selfdestruct"), Err(LedgerError::UnknownAction(_))));
    }
}
