//! Engine configuration, loadable from TOML. Every section and field is
//! optional; omitted values take their defaults.

use std::collections::BTreeMap;
use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::PolicyConfig;
use crate::governor::GovernorConfig;
use crate::ledger::{GasSchedule, GenesisAccount, GenesisConfig, OpKind};
use crate::registry::ThresholdSet;
use crate::reservation::ReservationConfig;
use crate::sim::SimConfig;
use crate::token::TokenConfig;
use crate::types::{Address, NativeAmount, WEI_PER_GWEI};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasConfig {
    /// Gas price in gwei.
    pub price_gwei: Decimal,
    /// Seconds between blocks.
    pub block_time: u64,
    /// Per-operation gas overrides, keyed by operation name.
    pub overrides: BTreeMap<OpKind, u64>,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self { price_gwei: Decimal::ONE, block_time: 12, overrides: BTreeMap::new() }
    }
}

impl GasConfig {
    pub fn gas_price(&self) -> Option<NativeAmount> {
        let wei = self.price_gwei.checked_mul(Decimal::from(WEI_PER_GWEI as u64))?;
        if wei.fract() != Decimal::ZERO || wei <= Decimal::ZERO {
            return None;
        }
        u128::try_from(wei).ok().map(NativeAmount)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Economics {
    /// USD per ETH-equivalent.
    pub eth_usd: Decimal,
    /// Electricity tariff in USD per kWh.
    pub usd_per_kwh: Decimal,
}

impl Default for Economics {
    fn default() -> Self {
        Self { eth_usd: Decimal::from(2400), usd_per_kwh: Decimal::new(169_475, 6) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Seconds of simulated time between control-loop iterations.
    pub loop_period: u64,
    /// Seconds a prepared transaction stays signable.
    pub pending_ttl: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { loop_period: 600, pending_ttl: 600 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountSpec {
    pub name: String,
    /// Derived from the name when omitted.
    #[serde(default)]
    pub address: Option<Address>,
    /// Native funding in ETH-equivalent.
    #[serde(default = "one")]
    pub funding_eth: Decimal,
    /// Whole governance tokens; holders start as DAO members.
    #[serde(default)]
    pub tokens: u64,
}

fn one() -> Decimal {
    Decimal::ONE
}

impl AccountSpec {
    pub fn new(name: &str, tokens: u64) -> Self {
        Self { name: name.to_string(), address: None, funding_eth: Decimal::ONE, tokens }
    }

    pub fn resolved_address(&self) -> Address {
        self.address.unwrap_or_else(|| account_address(&self.name))
    }
}

/// Deterministic dev-mode address for a named account.
pub fn account_address(name: &str) -> Address {
    Address::derive(&format!("dab:account:{name}"))
}

fn default_accounts() -> Vec<AccountSpec> {
    vec![
        AccountSpec::new("member1", 10_000),
        AccountSpec::new("member2", 10_000),
        AccountSpec::new("member3", 10_000),
        AccountSpec::new("candidate", 0),
        AccountSpec::new("occupant", 0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub governor: GovernorConfig,
    pub gas: GasConfig,
    pub sim: SimConfig,
    pub policy: PolicyConfig,
    pub reservation: ReservationConfig,
    pub economics: Economics,
    pub token: TokenConfig,
    pub agent: AgentConfig,
    pub thresholds: ThresholdSet,
    pub accounts: Vec<AccountSpec>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            governor: GovernorConfig::default(),
            gas: GasConfig::default(),
            sim: SimConfig::default(),
            policy: PolicyConfig::default(),
            reservation: ReservationConfig::default(),
            economics: Economics::default(),
            token: TokenConfig::default(),
            agent: AgentConfig::default(),
            thresholds: ThresholdSet::default(),
            accounts: default_accounts(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: EngineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.governor.validate().map_err(|e| invalid(&e))?;
        self.sim.validate().map_err(|e| invalid(&e))?;
        self.policy.validate().map_err(|e| invalid(&e))?;
        GasSchedule::with_overrides(&self.gas.overrides).validate().map_err(|e| invalid(&e))?;
        if self.gas.gas_price().is_none() {
            return Err(ConfigError::Invalid("gas price must be a positive whole number of wei".into()));
        }
        if self.gas.block_time == 0 {
            return Err(ConfigError::Invalid("block_time must be positive".into()));
        }
        if self.economics.eth_usd <= Decimal::ZERO || self.economics.usd_per_kwh <= Decimal::ZERO {
            return Err(ConfigError::Invalid("economics prices must be positive".into()));
        }
        if self.agent.loop_period == 0 {
            return Err(ConfigError::Invalid("agent loop_period must be positive".into()));
        }
        if !self.thresholds.is_well_formed() {
            return Err(ConfigError::Invalid("thresholds must satisfy min <= max".into()));
        }
        for a in &self.accounts {
            if NativeAmount::from_eth_decimal(a.funding_eth).is_none() {
                return Err(ConfigError::Invalid(format!("account {} has invalid funding", a.name)));
            }
        }
        Ok(())
    }

    pub fn genesis_config(&self) -> GenesisConfig {
        let accounts = self
            .accounts
            .iter()
            .map(|a| GenesisAccount {
                name: a.name.clone(),
                address: a.resolved_address(),
                funding: NativeAmount::from_eth_decimal(a.funding_eth).expect("validated"),
                tokens: a.tokens as u128,
            })
            .collect();
        GenesisConfig {
            accounts,
            token: self.token.clone(),
            governor: self.governor.clone(),
            reservation: self.reservation.clone(),
            thresholds: self.thresholds,
            gas: GasSchedule::with_overrides(&self.gas.overrides),
            default_gas_price: self.gas.gas_price().expect("validated"),
            block_time: self.gas.block_time,
            ..GenesisConfig::default()
        }
    }
}
