//! Comfort-threshold store. Writes are accepted only from the governor.
//!
//! Temperature is kept in deci-degrees Celsius; every other quantity is an
//! integer in its physical unit (% RH, lux, ppm).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Address, Hash32};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("only the governor may write thresholds")]
    Unauthorized,
    #[error("{key} = {value} would invert the range (partner {partner} = {partner_value})")]
    InvertedRange { key: ThresholdKey, value: i64, partner: ThresholdKey, partner_value: i64 },
    #[error("unknown threshold key {0:?}")]
    UnknownKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKey {
    MinTemperature,
    MaxTemperature,
    MinHumidity,
    MaxHumidity,
    MinLuminance,
    MaxLuminance,
    MinCo,
    MaxCo,
}

impl ThresholdKey {
    pub const ALL: [ThresholdKey; 8] = [
        ThresholdKey::MinTemperature,
        ThresholdKey::MaxTemperature,
        ThresholdKey::MinHumidity,
        ThresholdKey::MaxHumidity,
        ThresholdKey::MinLuminance,
        ThresholdKey::MaxLuminance,
        ThresholdKey::MinCo,
        ThresholdKey::MaxCo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThresholdKey::MinTemperature => "min_temperature",
            ThresholdKey::MaxTemperature => "max_temperature",
            ThresholdKey::MinHumidity => "min_humidity",
            ThresholdKey::MaxHumidity => "max_humidity",
            ThresholdKey::MinLuminance => "min_luminance",
            ThresholdKey::MaxLuminance => "max_luminance",
            ThresholdKey::MinCo => "min_co",
            ThresholdKey::MaxCo => "max_co",
        }
    }

    pub fn partner(self) -> ThresholdKey {
        use ThresholdKey::*;
        match self {
            MinTemperature => MaxTemperature,
            MaxTemperature => MinTemperature,
            MinHumidity => MaxHumidity,
            MaxHumidity => MinHumidity,
            MinLuminance => MaxLuminance,
            MaxLuminance => MinLuminance,
            MinCo => MaxCo,
            MaxCo => MinCo,
        }
    }

    pub fn is_min(self) -> bool {
        use ThresholdKey::*;
        matches!(self, MinTemperature | MinHumidity | MinLuminance | MinCo)
    }

    /// Stored integer units per physical unit.
    pub fn scale(self) -> i64 {
        match self {
            ThresholdKey::MinTemperature | ThresholdKey::MaxTemperature => 10,
            _ => 1,
        }
    }

    pub fn unit(self) -> &'static str {
        use ThresholdKey::*;
        match self {
            MinTemperature | MaxTemperature => "°C",
            MinHumidity | MaxHumidity => "%",
            MinLuminance | MaxLuminance => "lux",
            MinCo | MaxCo => "ppm",
        }
    }

    /// Converts a physical value to stored units, rounding half away from zero.
    pub fn to_stored(self, physical: f64) -> i64 {
        (physical * self.scale() as f64).round() as i64
    }

    pub fn to_physical(self, stored: i64) -> f64 {
        stored as f64 / self.scale() as f64
    }

    /// Stored value rendered in physical units, e.g. `17` or `17.5`.
    pub fn format_physical(self, stored: i64) -> String {
        let scale = self.scale();
        if stored % scale == 0 {
            (stored / scale).to_string()
        } else {
            let sign = if stored < 0 { "-" } else { "" };
            let a = stored.abs();
            format!("{sign}{}.{}", a / scale, a % scale)
        }
    }
}

impl fmt::Display for ThresholdKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdKey {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ThresholdKey::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| RegistryError::UnknownKey(s.to_string()))
    }
}

/// All eight thresholds in stored units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdSet {
    /// Deci-degrees Celsius.
    pub temperature: [i64; 2],
    pub humidity: [i64; 2],
    pub luminance: [i64; 2],
    pub co: [i64; 2],
}

impl Default for ThresholdSet {
    fn default() -> Self {
        Self { temperature: [200, 270], humidity: [40, 100], luminance: [50, 150], co: [400, 1000] }
    }
}

impl ThresholdSet {
    pub fn get(&self, key: ThresholdKey) -> i64 {
        use ThresholdKey::*;
        match key {
            MinTemperature => self.temperature[0],
            MaxTemperature => self.temperature[1],
            MinHumidity => self.humidity[0],
            MaxHumidity => self.humidity[1],
            MinLuminance => self.luminance[0],
            MaxLuminance => self.luminance[1],
            MinCo => self.co[0],
            MaxCo => self.co[1],
        }
    }

    fn slot(&mut self, key: ThresholdKey) -> &mut i64 {
        use ThresholdKey::*;
        match key {
            MinTemperature => &mut self.temperature[0],
            MaxTemperature => &mut self.temperature[1],
            MinHumidity => &mut self.humidity[0],
            MaxHumidity => &mut self.humidity[1],
            MinLuminance => &mut self.luminance[0],
            MaxLuminance => &mut self.luminance[1],
            MinCo => &mut self.co[0],
            MaxCo => &mut self.co[1],
        }
    }

    pub fn is_well_formed(&self) -> bool {
        [self.temperature, self.humidity, self.luminance, self.co].iter().all(|[lo, hi]| lo <= hi)
    }

    pub fn min_temperature_c(&self) -> f64 {
        ThresholdKey::MinTemperature.to_physical(self.temperature[0])
    }

    pub fn max_temperature_c(&self) -> f64 {
        ThresholdKey::MaxTemperature.to_physical(self.temperature[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdChange {
    pub key: ThresholdKey,
    pub old: i64,
    pub new: i64,
    pub block: u64,
    /// The executed proposal that performed the write.
    pub proposal: Hash32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomationRegistry {
    governor: Address,
    values: ThresholdSet,
    changes: Vec<ThresholdChange>,
}

impl AutomationRegistry {
    pub fn new(governor: Address, initial: ThresholdSet) -> Self {
        Self { governor, values: initial, changes: Vec::new() }
    }

    pub fn set_threshold(
        &mut self,
        caller: Address,
        key: ThresholdKey,
        value: i64,
        block: u64,
        proposal: Hash32,
    ) -> Result<(), RegistryError> {
        if caller != self.governor {
            return Err(RegistryError::Unauthorized);
        }
        let partner = key.partner();
        let partner_value = self.values.get(partner);
        let inverted = if key.is_min() { value > partner_value } else { value < partner_value };
        if inverted {
            return Err(RegistryError::InvertedRange { key, value, partner, partner_value });
        }
        let slot = self.values.slot(key);
        let old = *slot;
        *slot = value;
        self.changes.push(ThresholdChange { key, old, new: value, block, proposal });
        Ok(())
    }

    pub fn get_threshold(&self, key: ThresholdKey) -> i64 {
        self.values.get(key)
    }

    /// Lookup by name, for callers holding untyped keys.
    pub fn get_threshold_by_name(&self, key: &str) -> Result<i64, RegistryError> {
        Ok(self.values.get(key.parse()?))
    }

    pub fn get_all(&self) -> ThresholdSet {
        self.values
    }

    pub fn changes(&self) -> &[ThresholdChange] {
        &self.changes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> (AutomationRegistry, Address) {
        let gov = Address::derive("governor");
        (AutomationRegistry::new(gov, ThresholdSet::default()), gov)
    }

    #[test]
    fn defaults_match_comfort_band() {
        let (r, _) = registry();
        let all = r.get_all();
        assert_eq!(all.temperature, [200, 270]);
        assert_eq!(all.humidity, [40, 100]);
        assert_eq!(all.luminance, [50, 150]);
        assert_eq!(all.co, [400, 1000]);
    }

    #[test]
    fn governor_write_is_stored_and_logged() {
        let (mut r, gov) = registry();
        let key = ThresholdKey::MinTemperature;
        r.set_threshold(gov, key, key.to_stored(17.0), 9, Hash32::default()).unwrap();
        assert_eq!(r.get_threshold(key), 170);
        assert_eq!(key.format_physical(r.get_threshold(key)), "17");
        assert_eq!(r.changes().len(), 1);
        assert_eq!(r.changes()[0].old, 200);
    }

    #[test]
    fn outsiders_are_rejected() {
        let (mut r, _) = registry();
        let err = r
            .set_threshold(Address::derive("mallory"), ThresholdKey::MinCo, 10, 1, Hash32::default())
            .unwrap_err();
        assert_eq!(err, RegistryError::Unauthorized);
        assert_eq!(r.get_all(), ThresholdSet::default());
    }

    #[test]
    fn inverted_range_is_rejected() {
        let (mut r, gov) = registry();
        let err = r
            .set_threshold(gov, ThresholdKey::MinTemperature, 300, 1, Hash32::default())
            .unwrap_err();
        assert!(matches!(err, RegistryError::InvertedRange { partner_value: 270, .. }));
        // equal bounds are allowed
        r.set_threshold(gov, ThresholdKey::MaxCo, 400, 1, Hash32::default()).unwrap();
    }

    #[test]
    fn unknown_key_by_name() {
        let (r, _) = registry();
        assert!(matches!(r.get_threshold_by_name("max_noise"), Err(RegistryError::UnknownKey(_))));
        assert_eq!(r.get_threshold_by_name("max_luminance").unwrap(), 150);
    }

    #[test]
    fn reads_are_stable() {
        let (r, _) = registry();
        assert_eq!(r.get_all(), r.get_all());
    }
}
