//! Proposal lifecycle, token-quorum counting and timelock scheduling.
//!
//! The governor does not touch balances itself: the ledger applies an
//! executed proposal's actions against the other contracts and only then
//! marks the proposal executed. All lifecycle checks take an explicit
//! `clock`, the number of the block currently being built.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{Canonical, Encoder};
use crate::registry::ThresholdKey;
use crate::token::GovernanceToken;
use crate::types::{Address, Hash32, NativeAmount};

pub const MAX_DESCRIPTION_BYTES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GovernorError {
    #[error("proposer holds {votes} votes, below the proposal threshold of {threshold}")]
    BelowProposalThreshold { votes: u128, threshold: u128 },
    #[error("a proposal needs at least one action")]
    EmptyActions,
    #[error("proposal {0} is already live")]
    DuplicateProposal(Hash32),
    #[error("description exceeds {MAX_DESCRIPTION_BYTES} bytes")]
    DescriptionTooLong,
    #[error("unknown proposal {0}")]
    UnknownProposal(Hash32),
    #[error("proposal is {0}, not active")]
    NotActive(ProposalState),
    #[error("{0} has already voted")]
    AlreadyVoted(Address),
    #[error("voter has no voting power at the snapshot block")]
    ZeroWeight,
    #[error("proposal is {0}, not succeeded")]
    NotSucceeded(ProposalState),
    #[error("proposal is {0}, not queued")]
    NotQueued(ProposalState),
    #[error("timelock not elapsed: eta {eta}, now {now}")]
    TimelockNotElapsed { eta: u64, now: u64 },
    #[error("{0} is not a DAO member")]
    NotMember(Address),
    #[error("{0} is already a DAO member")]
    AlreadyMember(Address),
    #[error("quorum fraction must lie in [0, 1] with a non-zero denominator")]
    InvalidQuorumFraction,
    #[error("voting period must be at least one block")]
    InvalidVotingPeriod,
}

/// Exact rational in [0, 1], written as `"1/2"` or a decimal such as `"0.5"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl Fraction {
    pub const HALF: Fraction = Fraction { numerator: 1, denominator: 2 };

    pub fn new(numerator: u64, denominator: u64) -> Result<Self, GovernorError> {
        if denominator == 0 || numerator > denominator {
            return Err(GovernorError::InvalidQuorumFraction);
        }
        Ok(Self { numerator, denominator })
    }

    /// `amount >= basis × fraction`, evaluated without rounding.
    pub fn is_met(&self, amount: u128, basis: u128) -> bool {
        amount * self.denominator as u128 >= basis * self.numerator as u128
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Fraction {
    type Err = GovernorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| GovernorError::InvalidQuorumFraction)?;
            let d = d.trim().parse().map_err(|_| GovernorError::InvalidQuorumFraction)?;
            return Fraction::new(n, d);
        }
        let dec = rust_decimal::Decimal::from_str(s).map_err(|_| GovernorError::InvalidQuorumFraction)?;
        let dec = dec.normalize();
        let numerator = u64::try_from(dec.mantissa()).map_err(|_| GovernorError::InvalidQuorumFraction)?;
        Fraction::new(numerator, 10u64.pow(dec.scale()))
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Num(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Num(x) => x.to_string().parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuorumBasis {
    TotalSupply,
    /// Tokens held outside the token reserve at the snapshot block.
    CirculatingMemberSupply,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GovernorConfig {
    /// Blocks between proposal creation and the snapshot.
    pub voting_delay: u64,
    /// Blocks during which votes are accepted after the snapshot.
    pub voting_period: u64,
    pub quorum_fraction: Fraction,
    pub quorum_basis: QuorumBasis,
    /// Seconds between queueing and earliest execution.
    pub timelock_min_delay: u64,
    /// Whole tokens of current voting power needed to propose.
    #[serde(with = "crate::types::u128_string")]
    pub proposal_threshold: u128,
}

impl Default for GovernorConfig {
    fn default() -> Self {
        Self {
            voting_delay: 1,
            voting_period: 50,
            quorum_fraction: Fraction::HALF,
            quorum_basis: QuorumBasis::CirculatingMemberSupply,
            timelock_min_delay: 120,
            proposal_threshold: 1,
        }
    }
}

impl GovernorConfig {
    pub fn validate(&self) -> Result<(), GovernorError> {
        if self.voting_period == 0 {
            return Err(GovernorError::InvalidVotingPeriod);
        }
        Fraction::new(self.quorum_fraction.numerator, self.quorum_fraction.denominator)?;
        Ok(())
    }
}

/// A governed effect, applied by the treasury/timelock on execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    SendNative { to: Address, amount: NativeAmount },
    TransferGovernanceTokens {
        to: Address,
        #[serde(with = "crate::types::u128_string")]
        amount: u128,
    },
    AddMember {
        addr: Address,
        #[serde(with = "crate::types::u128_string")]
        token_grant: u128,
    },
    RemoveMember { addr: Address },
    /// `value` is in the key's stored units (deci-degrees for temperature).
    SetThreshold { key: ThresholdKey, value: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    SendNative,
    TransferGovernanceTokens,
    AddMember,
    RemoveMember,
    SetThreshold,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] = [
        ActionKind::SendNative,
        ActionKind::TransferGovernanceTokens,
        ActionKind::AddMember,
        ActionKind::RemoveMember,
        ActionKind::SetThreshold,
    ];
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::SendNative { .. } => ActionKind::SendNative,
            Action::TransferGovernanceTokens { .. } => ActionKind::TransferGovernanceTokens,
            Action::AddMember { .. } => ActionKind::AddMember,
            Action::RemoveMember { .. } => ActionKind::RemoveMember,
            Action::SetThreshold { .. } => ActionKind::SetThreshold,
        }
    }
}

impl Canonical for Action {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            Action::SendNative { to, amount } => {
                enc.u8(0).address(to).amount(*amount);
            }
            Action::TransferGovernanceTokens { to, amount } => {
                enc.u8(1).address(to).u128(*amount);
            }
            Action::AddMember { addr, token_grant } => {
                enc.u8(2).address(addr).u128(*token_grant);
            }
            Action::RemoveMember { addr } => {
                enc.u8(3).address(addr);
            }
            Action::SetThreshold { key, value } => {
                enc.u8(4).str(key.name()).i64(*value);
            }
        }
    }
}

/// Content hash identifying a proposal: SHA-256 over the encoded actions and
/// the SHA-256 of the description.
pub fn proposal_id(actions: &[Action], description: &str) -> Hash32 {
    let mut enc = Encoder::new();
    actions.encode(&mut enc);
    enc.hash(&Hash32::of(description.as_bytes()));
    enc.digest()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalState {
    Pending,
    Active,
    Defeated,
    Succeeded,
    Queued,
    Executed,
}

impl ProposalState {
    pub const ALL: [ProposalState; 6] = [
        ProposalState::Pending,
        ProposalState::Active,
        ProposalState::Defeated,
        ProposalState::Succeeded,
        ProposalState::Queued,
        ProposalState::Executed,
    ];

    pub fn is_final(self) -> bool {
        matches!(self, ProposalState::Defeated | ProposalState::Executed)
    }
}

impl fmt::Display for ProposalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProposalState::Pending => "pending",
            ProposalState::Active => "active",
            ProposalState::Defeated => "defeated",
            ProposalState::Succeeded => "succeeded",
            ProposalState::Queued => "queued",
            ProposalState::Executed => "executed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefeatReason {
    QuorumNotReached,
    MajorityNotReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Against,
    For,
    Abstain,
}

impl FromStr for Support {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "for" | "yes" | "yea" => Ok(Support::For),
            "against" | "no" | "nay" => Ok(Support::Against),
            "abstain" => Ok(Support::Abstain),
            other => Err(format!("unknown vote option {other:?}")),
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Support::For => "for",
            Support::Against => "against",
            Support::Abstain => "abstain",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    #[serde(with = "crate::types::u128_string")]
    pub for_votes: u128,
    #[serde(with = "crate::types::u128_string")]
    pub against_votes: u128,
    #[serde(with = "crate::types::u128_string")]
    pub abstain_votes: u128,
}

impl Tally {
    fn add(&mut self, support: Support, weight: u128) {
        match support {
            Support::For => self.for_votes += weight,
            Support::Against => self.against_votes += weight,
            Support::Abstain => self.abstain_votes += weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteBallot {
    pub voter: Address,
    pub support: Support,
    #[serde(with = "crate::types::u128_string")]
    pub weight: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: Hash32,
    pub proposer: Address,
    pub actions: Vec<Action>,
    pub description: String,
    pub created_block: u64,
    pub snapshot_block: u64,
    /// Votes are accepted in blocks strictly after this one ...
    pub vote_start_block: u64,
    /// ... up to and including this one.
    pub vote_end_block: u64,
    pub tally: Tally,
    pub ballots: BTreeMap<Address, VoteBallot>,
    pub eta: Option<u64>,
    pub executed_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub proposal: Hash32,
    pub block: u64,
    pub timestamp: u64,
    pub eta: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Governor {
    config: GovernorConfig,
    /// Every proposal ever created, in creation order.
    proposals: Vec<Proposal>,
    /// Latest proposal index per id.
    index: BTreeMap<Hash32, usize>,
    members: BTreeSet<Address>,
    executions: Vec<ExecutionRecord>,
}

impl Governor {
    pub fn new(config: GovernorConfig, members: impl IntoIterator<Item = Address>) -> Self {
        Self {
            config,
            proposals: Vec::new(),
            index: BTreeMap::new(),
            members: members.into_iter().collect(),
            executions: Vec::new(),
        }
    }

    pub fn config(&self) -> &GovernorConfig {
        &self.config
    }

    pub fn is_member(&self, addr: &Address) -> bool {
        self.members.contains(addr)
    }

    pub fn members(&self) -> impl Iterator<Item = &Address> {
        self.members.iter()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn add_member(&mut self, addr: Address) -> Result<(), GovernorError> {
        if !self.members.insert(addr) {
            return Err(GovernorError::AlreadyMember(addr));
        }
        Ok(())
    }

    pub fn remove_member(&mut self, addr: Address) -> Result<(), GovernorError> {
        if !self.members.remove(&addr) {
            return Err(GovernorError::NotMember(addr));
        }
        Ok(())
    }

    pub fn proposal(&self, id: &Hash32) -> Result<&Proposal, GovernorError> {
        self.index
            .get(id)
            .map(|&i| &self.proposals[i])
            .ok_or(GovernorError::UnknownProposal(*id))
    }

    fn proposal_mut(&mut self, id: &Hash32) -> Result<&mut Proposal, GovernorError> {
        match self.index.get(id) {
            Some(&i) => Ok(&mut self.proposals[i]),
            None => Err(GovernorError::UnknownProposal(*id)),
        }
    }

    pub fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    pub fn executions(&self) -> &[ExecutionRecord] {
        &self.executions
    }

    /// `proposer_votes` is the proposer's current voting power.
    pub fn propose(
        &mut self,
        proposer: Address,
        proposer_votes: u128,
        actions: Vec<Action>,
        description: String,
        clock: u64,
        token: &GovernanceToken,
    ) -> Result<Hash32, GovernorError> {
        if proposer_votes < self.config.proposal_threshold {
            return Err(GovernorError::BelowProposalThreshold {
                votes: proposer_votes,
                threshold: self.config.proposal_threshold,
            });
        }
        if !self.is_member(&proposer) {
            return Err(GovernorError::NotMember(proposer));
        }
        if actions.is_empty() {
            return Err(GovernorError::EmptyActions);
        }
        if description.len() > MAX_DESCRIPTION_BYTES {
            return Err(GovernorError::DescriptionTooLong);
        }
        let id = proposal_id(&actions, &description);
        if self.index.contains_key(&id) && !self.state(&id, clock, token)?.is_final() {
            return Err(GovernorError::DuplicateProposal(id));
        }
        let snapshot_block = clock + self.config.voting_delay;
        self.proposals.push(Proposal {
            id,
            proposer,
            actions,
            description,
            created_block: clock,
            snapshot_block,
            vote_start_block: snapshot_block,
            vote_end_block: snapshot_block + self.config.voting_period,
            tally: Tally::default(),
            ballots: BTreeMap::new(),
            eta: None,
            executed_at: None,
        });
        self.index.insert(id, self.proposals.len() - 1);
        Ok(id)
    }

    pub fn state(&self, id: &Hash32, clock: u64, token: &GovernanceToken) -> Result<ProposalState, GovernorError> {
        let p = self.proposal(id)?;
        if p.executed_at.is_some() {
            return Ok(ProposalState::Executed);
        }
        if p.eta.is_some() {
            return Ok(ProposalState::Queued);
        }
        if clock <= p.vote_start_block {
            return Ok(ProposalState::Pending);
        }
        if clock <= p.vote_end_block {
            return Ok(ProposalState::Active);
        }
        Ok(match self.defeat_reason_of(p, clock, token) {
            None => ProposalState::Succeeded,
            Some(_) => ProposalState::Defeated,
        })
    }

    /// Why a closed proposal failed; `None` when it passed or is still open.
    pub fn defeat_reason(&self, id: &Hash32, clock: u64, token: &GovernanceToken) -> Result<Option<DefeatReason>, GovernorError> {
        let p = self.proposal(id)?;
        if clock <= p.vote_end_block {
            return Ok(None);
        }
        Ok(self.defeat_reason_of(p, clock, token))
    }

    fn defeat_reason_of(&self, p: &Proposal, clock: u64, token: &GovernanceToken) -> Option<DefeatReason> {
        let basis = self.quorum_basis(p.snapshot_block, clock, token);
        let participating = p.tally.for_votes + p.tally.abstain_votes;
        if !self.config.quorum_fraction.is_met(participating, basis) {
            Some(DefeatReason::QuorumNotReached)
        } else if p.tally.for_votes <= p.tally.against_votes {
            Some(DefeatReason::MajorityNotReached)
        } else {
            None
        }
    }

    fn quorum_basis(&self, snapshot: u64, clock: u64, token: &GovernanceToken) -> u128 {
        let r = match self.config.quorum_basis {
            QuorumBasis::TotalSupply => token.past_total_supply(snapshot, clock),
            QuorumBasis::CirculatingMemberSupply => token.past_circulating_supply(snapshot, clock),
        };
        r.expect("snapshot precedes the clock once voting has closed")
    }

    /// Votes needed for quorum on proposal `id` (rounded up to whole tokens).
    pub fn quorum(&self, id: &Hash32, clock: u64, token: &GovernanceToken) -> Result<Option<u128>, GovernorError> {
        let p = self.proposal(id)?;
        if clock <= p.snapshot_block {
            return Ok(None);
        }
        let basis = self.quorum_basis(p.snapshot_block, clock, token);
        let f = self.config.quorum_fraction;
        let num = basis * f.numerator as u128;
        Ok(Some(num.div_ceil(f.denominator as u128)))
    }

    pub fn cast_vote(
        &mut self,
        voter: Address,
        id: &Hash32,
        support: Support,
        clock: u64,
        token: &GovernanceToken,
    ) -> Result<u128, GovernorError> {
        let state = self.state(id, clock, token)?;
        if state != ProposalState::Active {
            return Err(GovernorError::NotActive(state));
        }
        let p = self.proposal(id)?;
        if p.ballots.contains_key(&voter) {
            return Err(GovernorError::AlreadyVoted(voter));
        }
        if !self.is_member(&voter) {
            return Err(GovernorError::NotMember(voter));
        }
        let weight = token
            .get_past_votes(&voter, p.snapshot_block, clock)
            .expect("snapshot precedes the clock while active");
        if weight == 0 {
            return Err(GovernorError::ZeroWeight);
        }
        let p = self.proposal_mut(id)?;
        p.tally.add(support, weight);
        p.ballots.insert(voter, VoteBallot { voter, support, weight });
        Ok(weight)
    }

    /// Schedules a succeeded proposal; returns the eta timestamp.
    pub fn queue(&mut self, id: &Hash32, clock: u64, now: u64, token: &GovernanceToken) -> Result<u64, GovernorError> {
        let state = self.state(id, clock, token)?;
        if state != ProposalState::Succeeded {
            return Err(GovernorError::NotSucceeded(state));
        }
        let eta = now + self.config.timelock_min_delay;
        self.proposal_mut(id)?.eta = Some(eta);
        Ok(eta)
    }

    /// Checks that `id` may execute now and returns its actions.
    pub fn check_executable(&self, id: &Hash32, clock: u64, now: u64, token: &GovernanceToken) -> Result<Vec<Action>, GovernorError> {
        let state = self.state(id, clock, token)?;
        if state != ProposalState::Queued {
            return Err(GovernorError::NotQueued(state));
        }
        let p = self.proposal(id)?;
        let eta = p.eta.expect("queued proposals carry an eta");
        if now < eta {
            return Err(GovernorError::TimelockNotElapsed { eta, now });
        }
        Ok(p.actions.clone())
    }

    pub fn mark_executed(&mut self, id: &Hash32, clock: u64, now: u64) -> Result<(), GovernorError> {
        let p = self.proposal_mut(id)?;
        let eta = p.eta.ok_or(GovernorError::NotQueued(ProposalState::Succeeded))?;
        p.executed_at = Some(now);
        self.executions.push(ExecutionRecord { proposal: *id, block: clock, timestamp: now, eta });
        Ok(())
    }
}
