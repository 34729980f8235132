//! Governance token with delegation and per-block vote checkpoints.
//!
//! Amounts cross the public API as whole tokens; balances and checkpoints are
//! kept internally in sub-units (`TOKEN_SCALE` per token).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Address, TOKEN_SCALE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("insufficient tokens: balance {balance}, requested {requested}")]
    InsufficientTokens { balance: u128, requested: u128 },
    #[error("allocations of {allocated} tokens exceed the supply of {supply}")]
    AllocationsExceedSupply { allocated: u128, supply: u128 },
    #[error("block {requested} is not yet final (current block {current})")]
    FutureBlock { requested: u64, current: u64 },
    #[error("the token reserve cannot delegate")]
    ReserveCannotDelegate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenConfig {
    /// Whole tokens minted at genesis.
    #[serde(with = "crate::types::u128_string")]
    pub total_supply: u128,
    /// Self-delegate every account that receives an allocation.
    pub auto_self_delegate: bool,
}

impl Default for TokenConfig {
    fn default() -> Self {
        Self { total_supply: 1_000_000, auto_self_delegate: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub block: u64,
    /// Sub-units.
    pub votes: u128,
}

/// Ordered (block, value) history with at most one entry per block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointSeries(Vec<Checkpoint>);

impl CheckpointSeries {
    pub fn latest(&self) -> u128 {
        self.0.last().map_or(0, |c| c.votes)
    }

    /// Value as of the end of `block`.
    pub fn at(&self, block: u64) -> u128 {
        let idx = self.0.partition_point(|c| c.block <= block);
        if idx == 0 {
            0
        } else {
            self.0[idx - 1].votes
        }
    }

    fn push(&mut self, block: u64, votes: u128) {
        match self.0.last_mut() {
            Some(last) if last.block == block => last.votes = votes,
            Some(last) => {
                debug_assert!(last.block < block, "checkpoint written into the past");
                self.0.push(Checkpoint { block, votes });
            }
            None => self.0.push(Checkpoint { block, votes }),
        }
    }

    pub fn entries(&self) -> &[Checkpoint] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GovernanceToken {
    reserve: Address,
    supply: u128,
    auto_self_delegate: bool,
    balances: BTreeMap<Address, u128>,
    delegates: BTreeMap<Address, Address>,
    checkpoints: BTreeMap<Address, CheckpointSeries>,
    /// Supply outside the reserve, by block.
    circulating: CheckpointSeries,
}

fn whole(sub: u128) -> u128 {
    sub / TOKEN_SCALE
}

impl GovernanceToken {
    /// Mints the full supply into `reserve` and distributes `allocations` at
    /// `block`.
    pub fn mint_initial(
        config: &TokenConfig,
        reserve: Address,
        allocations: &[(Address, u128)],
        block: u64,
    ) -> Result<Self, TokenError> {
        let allocated: u128 = allocations.iter().map(|(_, n)| *n).sum();
        if allocated > config.total_supply {
            return Err(TokenError::AllocationsExceedSupply {
                allocated,
                supply: config.total_supply,
            });
        }
        let supply = config.total_supply * TOKEN_SCALE;
        let mut token = Self {
            reserve,
            supply,
            auto_self_delegate: config.auto_self_delegate,
            balances: BTreeMap::from([(reserve, supply)]),
            delegates: BTreeMap::new(),
            checkpoints: BTreeMap::new(),
            circulating: CheckpointSeries::default(),
        };
        token.circulating.push(block, 0);
        for (holder, amount) in allocations {
            token.allocate(*holder, *amount, block)?;
        }
        Ok(token)
    }

    pub fn reserve(&self) -> Address {
        self.reserve
    }

    /// Moves `amount` whole tokens out of the reserve, self-delegating the
    /// recipient when auto-delegation is on and it has no delegatee yet.
    pub fn allocate(&mut self, to: Address, amount: u128, block: u64) -> Result<(), TokenError> {
        self.transfer(self.reserve, to, amount, block)?;
        if self.auto_self_delegate && to != self.reserve && !self.delegates.contains_key(&to) {
            self.delegate(to, to, block)?;
        }
        Ok(())
    }

    pub fn transfer(
        &mut self,
        from: Address,
        to: Address,
        amount: u128,
        block: u64,
    ) -> Result<(), TokenError> {
        let sub = amount * TOKEN_SCALE;
        let balance = self.balances.get(&from).copied().unwrap_or(0);
        if balance < sub {
            return Err(TokenError::InsufficientTokens {
                balance: whole(balance),
                requested: amount,
            });
        }
        if sub == 0 || from == to {
            return Ok(());
        }
        *self.balances.get_mut(&from).expect("balance checked above") -= sub;
        if self.balances[&from] == 0 && from != self.reserve {
            self.balances.remove(&from);
        }
        *self.balances.entry(to).or_insert(0) += sub;

        if from == self.reserve {
            let v = self.circulating.latest() + sub;
            self.circulating.push(block, v);
        } else if to == self.reserve {
            let v = self.circulating.latest() - sub;
            self.circulating.push(block, v);
        }

        let src = self.delegates.get(&from).copied();
        let dst = self.delegates.get(&to).copied();
        self.move_votes(src, dst, sub, block);
        Ok(())
    }

    pub fn delegate(
        &mut self,
        delegator: Address,
        delegatee: Address,
        block: u64,
    ) -> Result<(), TokenError> {
        if delegator == self.reserve {
            return Err(TokenError::ReserveCannotDelegate);
        }
        let old = self.delegates.insert(delegator, delegatee);
        let weight = self.balances.get(&delegator).copied().unwrap_or(0);
        self.move_votes(old, Some(delegatee), weight, block);
        Ok(())
    }

    fn move_votes(&mut self, src: Option<Address>, dst: Option<Address>, sub: u128, block: u64) {
        if sub == 0 || src == dst {
            return;
        }
        if let Some(src) = src {
            let series = self.checkpoints.entry(src).or_default();
            let v = series.latest() - sub;
            series.push(block, v);
        }
        if let Some(dst) = dst {
            let series = self.checkpoints.entry(dst).or_default();
            let v = series.latest() + sub;
            series.push(block, v);
        }
    }

    /// Whole-token balance.
    pub fn balance_of(&self, holder: &Address) -> u128 {
        whole(self.balances.get(holder).copied().unwrap_or(0))
    }

    pub fn delegate_of(&self, holder: &Address) -> Option<Address> {
        self.delegates.get(holder).copied()
    }

    /// Current voting power in whole tokens.
    pub fn votes(&self, addr: &Address) -> u128 {
        whole(self.checkpoints.get(addr).map_or(0, CheckpointSeries::latest))
    }

    /// Voting power at the end of `block`; `current` is the latest sealed block.
    pub fn get_past_votes(&self, addr: &Address, block: u64, current: u64) -> Result<u128, TokenError> {
        if block >= current {
            return Err(TokenError::FutureBlock { requested: block, current });
        }
        Ok(whole(self.checkpoints.get(addr).map_or(0, |s| s.at(block))))
    }

    pub fn total_supply(&self) -> u128 {
        whole(self.supply)
    }

    pub fn past_total_supply(&self, block: u64, current: u64) -> Result<u128, TokenError> {
        if block >= current {
            return Err(TokenError::FutureBlock { requested: block, current });
        }
        Ok(self.total_supply())
    }

    /// Supply held outside the reserve at the end of `block`.
    pub fn past_circulating_supply(&self, block: u64, current: u64) -> Result<u128, TokenError> {
        if block >= current {
            return Err(TokenError::FutureBlock { requested: block, current });
        }
        Ok(whole(self.circulating.at(block)))
    }

    pub fn circulating_supply(&self) -> u128 {
        whole(self.circulating.latest())
    }

    pub fn balances(&self) -> impl Iterator<Item = (Address, u128)> + '_ {
        self.balances.iter().map(|(a, b)| (*a, whole(*b)))
    }

    pub fn checkpoints(&self, addr: &Address) -> &[Checkpoint] {
        self.checkpoints.get(addr).map_or(&[], |s| s.entries())
    }

    /// Every account that has ever held a checkpoint.
    pub fn voters(&self) -> impl Iterator<Item = &Address> {
        self.checkpoints.keys()
    }

    /// Sum of sub-unit balances; equals the minted supply at all times.
    pub fn balance_sum(&self) -> u128 {
        whole(self.balances.values().sum())
    }

    /// Sum of current votes across all delegatees.
    pub fn vote_sum(&self) -> u128 {
        whole(self.checkpoints.values().map(CheckpointSeries::latest).sum())
    }

    /// Sum of balances held by accounts that have chosen a delegatee.
    pub fn delegated_balance_sum(&self) -> u128 {
        whole(
            self.delegates
                .keys()
                .map(|a| self.balances.get(a).copied().unwrap_or(0))
                .sum(),
        )
    }
}
