//! Identifiers and exact amounts shared by every contract on the ledger.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Base units per one ETH-equivalent.
pub const WEI_PER_ETH: u128 = 1_000_000_000_000_000_000;
/// Base units per gwei.
pub const WEI_PER_GWEI: u128 = 1_000_000_000;
/// Token sub-units per whole governance token.
pub const TOKEN_SCALE: u128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid address {0:?}: expected 0x followed by 40 hex digits")]
    Address(String),
    #[error("invalid hash {0:?}: expected 0x followed by 64 hex digits")]
    Hash(String),
    #[error("invalid amount {0:?}")]
    Amount(String),
}

/// 20-byte account or contract identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    /// Deterministic address for a named role or contract.
    pub fn derive(label: &str) -> Self {
        let digest = Sha256::digest(label.as_bytes());
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Address {
    type Err = ParseError;

    /// Accepts mixed-case (checksummed) input; rendering is always lowercase.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .ok_or_else(|| ParseError::Address(s.to_string()))?;
        if body.len() != 40 {
            return Err(ParseError::Address(s.to_string()));
        }
        let mut out = [0u8; 20];
        hex::decode_to_slice(body, &mut out).map_err(|_| ParseError::Address(s.to_string()))?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// SHA-256 digest, rendered as 0x + 64 hex digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub fn of(bytes: &[u8]) -> Self {
        Hash32(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Hash32 {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .ok_or_else(|| ParseError::Hash(s.to_string()))?;
        if body.len() != 64 {
            return Err(ParseError::Hash(s.to_string()));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(body, &mut out).map_err(|_| ParseError::Hash(s.to_string()))?;
        Ok(Hash32(out))
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Native currency in base units (10^18 per ETH-equivalent). Serialized as a
/// decimal string of base units.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NativeAmount(pub u128);

impl NativeAmount {
    pub const ZERO: NativeAmount = NativeAmount(0);

    pub const fn wei(v: u128) -> Self {
        NativeAmount(v)
    }

    pub const fn gwei(v: u128) -> Self {
        NativeAmount(v * WEI_PER_GWEI)
    }

    pub const fn base_units(self) -> u128 {
        self.0
    }

    /// Parses a decimal ETH quantity such as `"0.01"` exactly.
    pub fn from_eth_str(s: &str) -> Result<Self, ParseError> {
        let d = Decimal::from_str(s.trim()).map_err(|_| ParseError::Amount(s.to_string()))?;
        Self::from_eth_decimal(d).ok_or_else(|| ParseError::Amount(s.to_string()))
    }

    /// Exact conversion; `None` for negatives or more than 18 fractional digits.
    pub fn from_eth_decimal(d: Decimal) -> Option<Self> {
        if d.is_sign_negative() && !d.is_zero() {
            return None;
        }
        let d = d.normalize();
        if d.scale() > 18 {
            return None;
        }
        let mantissa = u128::try_from(d.mantissa()).ok()?;
        let factor = 10u128.pow(18 - d.scale());
        mantissa.checked_mul(factor).map(NativeAmount)
    }

    /// Value in ETH as an exact decimal (may lose digits past 28 significant figures).
    pub fn to_eth_decimal(self) -> Decimal {
        let whole = Decimal::from(self.0 / WEI_PER_ETH);
        let frac = Decimal::from_i128_with_scale((self.0 % WEI_PER_ETH) as i128, 18);
        (whole + frac).normalize()
    }

    /// Exact ETH rendering without trailing zeros, e.g. `0.000108168`.
    pub fn eth_string(self) -> String {
        let whole = self.0 / WEI_PER_ETH;
        let frac = self.0 % WEI_PER_ETH;
        if frac == 0 {
            return whole.to_string();
        }
        let digits = format!("{frac:018}");
        format!("{whole}.{}", digits.trim_end_matches('0'))
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        self.0.checked_add(rhs.0).map(NativeAmount)
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.0.checked_sub(rhs.0).map(NativeAmount)
    }
}

impl fmt::Display for NativeAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ETH", self.eth_string())
    }
}

impl fmt::Debug for NativeAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}wei", self.0)
    }
}

impl Serialize for NativeAmount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NativeAmount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<u128>()
            .map(NativeAmount)
            .map_err(|_| serde::de::Error::custom(format!("invalid base-unit amount {s:?}")))
    }
}

/// Serde helper for whole-token counts carried as decimal strings.
pub mod u128_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Num(u64),
        }
        match Repr::deserialize(d)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Num(n) => Ok(n as u128),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_renders_lowercase_and_round_trips() {
        let a: Address = "0x3aF5647E366fb51C89e4c43Bc8C173dAa018AFf6".parse().unwrap();
        assert_eq!(a.to_string(), "0x3af5647e366fb51c89e4c43bc8c173daa018aff6");
        assert_eq!(a.to_string().parse::<Address>().unwrap(), a);
    }

    #[test]
    fn address_rejects_wrong_length_and_prefix() {
        assert!("0x1234".parse::<Address>().is_err());
        assert!("3aF5647E366fb51C89e4c43Bc8C173dAa018AFf6".parse::<Address>().is_err());
        assert!("0xzzF5647E366fb51C89e4c43Bc8C173dAa018AFf6".parse::<Address>().is_err());
    }

    #[test]
    fn eth_parsing_is_exact() {
        assert_eq!(NativeAmount::from_eth_str("0.01").unwrap().0, 10u128.pow(16));
        assert_eq!(NativeAmount::from_eth_str("1").unwrap().0, WEI_PER_ETH);
        assert_eq!(NativeAmount::from_eth_str("0.0016").unwrap().0, 1_600_000_000_000_000);
        assert!(NativeAmount::from_eth_str("-1").is_err());
        assert!(NativeAmount::from_eth_str("0.0000000000000000001").is_err());
    }

    #[test]
    fn eth_string_trims() {
        assert_eq!(NativeAmount(108_168 * WEI_PER_GWEI).eth_string(), "0.000108168");
        assert_eq!(NativeAmount(9 * 10u128.pow(16)).eth_string(), "0.09");
        assert_eq!(NativeAmount(0).eth_string(), "0");
    }

    #[test]
    fn amount_serializes_as_string() {
        let json = serde_json::to_string(&NativeAmount(WEI_PER_ETH)).unwrap();
        assert_eq!(json, "\"1000000000000000000\"");
    }
}
