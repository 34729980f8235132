//! Discrete-time room model: first-order relaxation of temperature, humidity
//! and CO toward ambient, appliance effects, occupancy loads and an exact
//! energy meter.
//!
//! Dynamics are integrated with 1-second explicit Euler sub-steps, so every
//! rate must stay at or below 1/s for the relaxation to be monotone.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliwatt-seconds per kWh.
const MWS_PER_KWH: u128 = 3_600_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step must be positive")]
    NonPositiveStep,
    #[error("{kind} level {level} is out of range")]
    LevelOutOfRange { kind: ApplianceKind, level: i64 },
    #[error("occupancy cannot be negative ({0})")]
    NegativeOccupancy(i64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("unknown appliance {0:?}")]
    UnknownAppliance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplianceKind {
    Fan,
    Purifier,
    Humidifier,
    Light,
}

impl ApplianceKind {
    pub const ALL: [ApplianceKind; 4] =
        [ApplianceKind::Fan, ApplianceKind::Purifier, ApplianceKind::Humidifier, ApplianceKind::Light];

    pub fn max_level(self) -> u8 {
        match self {
            ApplianceKind::Fan => 3,
            ApplianceKind::Purifier => 7,
            ApplianceKind::Humidifier => 3,
            ApplianceKind::Light => 100,
        }
    }

    pub fn step(self) -> u8 {
        match self {
            ApplianceKind::Light => 10,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ApplianceKind::Fan => "fan",
            ApplianceKind::Purifier => "purifier",
            ApplianceKind::Humidifier => "humidifier",
            ApplianceKind::Light => "light",
        }
    }

    pub fn validate(self, level: i64) -> Result<u8, SimError> {
        if level < 0 || level > self.max_level() as i64 || level % self.step() as i64 != 0 {
            return Err(SimError::LevelOutOfRange { kind: self, level });
        }
        Ok(level as u8)
    }

    pub fn is_valid(self, level: u8) -> bool {
        self.validate(level as i64).is_ok()
    }
}

impl fmt::Display for ApplianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ApplianceKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fan" | "smart fan" => Ok(ApplianceKind::Fan),
            "purifier" | "air purifier" => Ok(ApplianceKind::Purifier),
            "humidifier" => Ok(ApplianceKind::Humidifier),
            "light" | "lights" | "lamp" | "light bulb" | "bulb" | "smart light" => Ok(ApplianceKind::Light),
            other => Err(SimError::UnknownAppliance(other.to_string())),
        }
    }
}

/// Current setting of every appliance. Light is brightness in percent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplianceLevels {
    pub fan: u8,
    pub purifier: u8,
    pub humidifier: u8,
    pub light: u8,
}

impl ApplianceLevels {
    pub fn get(&self, kind: ApplianceKind) -> u8 {
        match kind {
            ApplianceKind::Fan => self.fan,
            ApplianceKind::Purifier => self.purifier,
            ApplianceKind::Humidifier => self.humidifier,
            ApplianceKind::Light => self.light,
        }
    }

    pub fn set(&mut self, kind: ApplianceKind, level: u8) {
        match kind {
            ApplianceKind::Fan => self.fan = level,
            ApplianceKind::Purifier => self.purifier = level,
            ApplianceKind::Humidifier => self.humidifier = level,
            ApplianceKind::Light => self.light = level,
        }
    }
}

/// Electrical draw in milliwatts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerTable {
    pub fan_mw: [u64; 4],
    pub purifier_mw_per_level: u64,
    pub humidifier_mw: [u64; 4],
    /// Per brightness percentage point.
    pub light_mw_per_percent: u64,
}

impl Default for PowerTable {
    fn default() -> Self {
        Self {
            fan_mw: [0, 15_000, 30_000, 45_000],
            purifier_mw_per_level: 8_000,
            humidifier_mw: [0, 10_000, 20_000, 30_000],
            light_mw_per_percent: 90,
        }
    }
}

impl PowerTable {
    pub fn power_mw(&self, kind: ApplianceKind, level: u8) -> u64 {
        match kind {
            ApplianceKind::Fan => self.fan_mw[level as usize],
            ApplianceKind::Purifier => self.purifier_mw_per_level * level as u64,
            ApplianceKind::Humidifier => self.humidifier_mw[level as usize],
            ApplianceKind::Light => self.light_mw_per_percent * level as u64,
        }
    }

    pub fn total_mw(&self, levels: &ApplianceLevels) -> u64 {
        ApplianceKind::ALL.iter().map(|k| self.power_mw(*k, levels.get(*k))).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub ambient_temperature: f64,
    pub ambient_humidity: f64,
    /// Hourly natural-light profile in lux, repeating; one entry means constant.
    pub natural_lux: Vec<f64>,
    pub ambient_co: f64,
    /// Relaxation rates, per second.
    pub k_temperature: f64,
    pub k_humidity: f64,
    pub k_co: f64,
    /// °C/s per fan level.
    pub fan_cooling: f64,
    /// %RH/s per humidifier level.
    pub humidifier_gain: f64,
    /// Lux per brightness percent.
    pub light_gain: f64,
    /// °C/s per occupant.
    pub occupant_heat: f64,
    /// ppm/s per occupant.
    pub occupant_co: f64,
    /// ppm/s per purifier level.
    pub purifier_removal: f64,
    pub power: PowerTable,
    pub energy_scaling_factor: u32,
    /// Seconds between occupancy refreshes in stream mode.
    pub occupancy_period: u64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ambient_temperature: 24.0,
            ambient_humidity: 45.0,
            natural_lux: vec![34.0],
            ambient_co: 420.0,
            k_temperature: 0.0002,
            k_humidity: 0.0001,
            k_co: 0.0001,
            fan_cooling: 0.0003,
            humidifier_gain: 0.002,
            light_gain: 1.5,
            occupant_heat: 0.00005,
            occupant_co: 0.02,
            purifier_removal: 0.03,
            power: PowerTable::default(),
            energy_scaling_factor: 4,
            occupancy_period: 600,
            seed: 7,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [
            ("k_temperature", self.k_temperature),
            ("k_humidity", self.k_humidity),
            ("k_co", self.k_co),
            ("fan_cooling", self.fan_cooling),
            ("humidifier_gain", self.humidifier_gain),
            ("light_gain", self.light_gain),
            ("occupant_heat", self.occupant_heat),
            ("occupant_co", self.occupant_co),
            ("purifier_removal", self.purifier_removal),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be a non-negative number")));
            }
        }
        for (name, k) in [("k_temperature", self.k_temperature), ("k_humidity", self.k_humidity), ("k_co", self.k_co)] {
            if k > 1.0 {
                return Err(SimError::InvalidConfig(format!("{name} must not exceed 1/s")));
            }
        }
        if self.natural_lux.is_empty() || self.natural_lux.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(SimError::InvalidConfig("natural_lux needs non-negative entries".into()));
        }
        if !(0.0..=100.0).contains(&self.ambient_humidity) {
            return Err(SimError::InvalidConfig("ambient_humidity must lie in [0, 100]".into()));
        }
        if self.energy_scaling_factor == 0 || self.occupancy_period == 0 {
            return Err(SimError::InvalidConfig("scaling factor and occupancy period must be positive".into()));
        }
        Ok(())
    }

    pub fn natural_light_at(&self, sim_time: u64) -> f64 {
        let hour = (sim_time / 3600) as usize;
        self.natural_lux[hour % self.natural_lux.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// °C
    pub temperature: f64,
    /// % RH
    pub humidity: f64,
    /// lux
    pub luminance: f64,
    /// ppm
    pub co: f64,
    pub occupancy: u32,
    /// Seconds since reset.
    pub sim_time: u64,
}

/// Cumulative metered energy, kept in exact milliwatt-seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyMeter {
    pub milliwatt_seconds: u128,
    pub scaling_factor: u32,
}

impl EnergyMeter {
    pub fn new(scaling_factor: u32) -> Self {
        Self { milliwatt_seconds: 0, scaling_factor }
    }

    /// Meter preloaded with an exact raw reading.
    pub fn from_raw_kwh(raw: Decimal, scaling_factor: u32) -> Option<Self> {
        let mws = raw.checked_mul(Decimal::from(MWS_PER_KWH as u64))?;
        if mws.fract() != Decimal::ZERO || mws.is_sign_negative() {
            return None;
        }
        Some(Self { milliwatt_seconds: u128::try_from(mws).ok()?, scaling_factor })
    }

    pub fn raw_kwh(&self) -> Decimal {
        Decimal::from(self.milliwatt_seconds) / Decimal::from(MWS_PER_KWH as u64)
    }

    /// Raw consumption multiplied by the scaling factor.
    pub fn readout_kwh(&self) -> Decimal {
        Decimal::from(self.milliwatt_seconds * self.scaling_factor as u128) / Decimal::from(MWS_PER_KWH as u64)
    }

    fn accumulate(&mut self, milliwatts: u64, seconds: u64) {
        self.milliwatt_seconds += milliwatts as u128 * seconds as u128;
    }
}

/// Seeded uniform occupancy in [1, 10], refreshed every `period` seconds.
#[derive(Debug, Clone)]
pub struct OccupancyStream {
    period: u64,
    rng: ChaCha8Rng,
    values: Vec<u32>,
}

impl OccupancyStream {
    pub fn new(seed: u64, period: u64) -> Self {
        Self { period: period.max(1), rng: ChaCha8Rng::seed_from_u64(seed), values: Vec::new() }
    }

    pub fn at(&mut self, sim_time: u64) -> u32 {
        let idx = (sim_time / self.period) as usize;
        while self.values.len() <= idx {
            self.values.push(self.rng.gen_range(1..=10));
        }
        self.values[idx]
    }

    /// First `n` values of the schedule.
    pub fn schedule(seed: u64, period: u64, n: usize) -> Vec<u32> {
        let mut s = Self::new(seed, period);
        (0..n as u64).map(|i| s.at(i * s.period)).collect()
    }
}

#[derive(Debug, Clone)]
enum Occupancy {
    Fixed,
    Stream(Box<OccupancyStream>),
}

#[derive(Debug, Clone)]
pub struct Sim {
    config: SimConfig,
    state: EnvState,
    levels: ApplianceLevels,
    meter: EnergyMeter,
    occupancy: Occupancy,
}

impl Sim {
    /// Fresh simulation at ambient conditions with the meter zeroed.
    pub fn reset(config: SimConfig, seed: u64) -> Result<Self, SimError> {
        config.validate()?;
        let state = EnvState {
            temperature: config.ambient_temperature,
            humidity: config.ambient_humidity,
            luminance: config.natural_light_at(0),
            co: config.ambient_co,
            occupancy: 0,
            sim_time: 0,
        };
        let meter = EnergyMeter::new(config.energy_scaling_factor);
        let mut config = config;
        config.seed = seed;
        Ok(Self { config, state, levels: ApplianceLevels::default(), meter, occupancy: Occupancy::Fixed })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn levels(&self) -> ApplianceLevels {
        self.levels
    }

    /// Sets a level, effective from the next tick. Returns the previous level.
    pub fn set_appliance(&mut self, kind: ApplianceKind, level: i64) -> Result<u8, SimError> {
        let level = kind.validate(level)?;
        let prev = self.levels.get(kind);
        self.levels.set(kind, level);
        self.refresh_luminance();
        Ok(prev)
    }

    pub fn set_occupancy(&mut self, n: i64) -> Result<(), SimError> {
        if n < 0 {
            return Err(SimError::NegativeOccupancy(n));
        }
        self.occupancy = Occupancy::Fixed;
        self.state.occupancy = n as u32;
        Ok(())
    }

    /// Switches to the seeded occupancy stream.
    pub fn use_occupancy_stream(&mut self) {
        let mut stream = OccupancyStream::new(self.config.seed, self.config.occupancy_period);
        self.state.occupancy = stream.at(self.state.sim_time);
        self.occupancy = Occupancy::Stream(Box::new(stream));
    }

    /// Overrides the environment readings (not the clock or meter).
    pub fn set_environment(&mut self, temperature: f64, humidity: f64, natural_lux: f64, co: f64) {
        self.state.temperature = temperature;
        self.state.humidity = humidity.clamp(0.0, 100.0);
        self.config.natural_lux = vec![natural_lux];
        self.state.co = co;
        self.refresh_luminance();
    }

    /// Replaces the energy meter, e.g. to replay a recorded reading.
    pub fn load_meter(&mut self, meter: EnergyMeter) {
        self.meter = meter;
    }

    fn refresh_luminance(&mut self) {
        self.state.luminance =
            self.config.natural_light_at(self.state.sim_time) + self.config.light_gain * self.levels.light as f64;
    }

    pub fn tick(&mut self, dt: i64) -> Result<EnvState, SimError> {
        if dt <= 0 {
            return Err(SimError::NonPositiveStep);
        }
        let dt = dt as u64;
        let c = &self.config;
        let power = c.power.total_mw(&self.levels);
        for _ in 0..dt {
            if let Occupancy::Stream(stream) = &mut self.occupancy {
                self.state.occupancy = stream.at(self.state.sim_time);
            }
            let s = &mut self.state;
            let occ = s.occupancy as f64;
            s.temperature += c.k_temperature * (c.ambient_temperature - s.temperature) + c.occupant_heat * occ
                - c.fan_cooling * self.levels.fan as f64;
            s.humidity += c.humidifier_gain * self.levels.humidifier as f64
                - c.k_humidity * (s.humidity - c.ambient_humidity);
            s.humidity = s.humidity.clamp(0.0, 100.0);
            s.co += c.occupant_co * occ
                - c.purifier_removal * self.levels.purifier as f64
                - c.k_co * (s.co - c.ambient_co);
            s.co = s.co.max(c.ambient_co);
            s.sim_time += 1;
        }
        if let Occupancy::Stream(stream) = &mut self.occupancy {
            self.state.occupancy = stream.at(self.state.sim_time);
        }
        self.meter.accumulate(power, dt);
        self.refresh_luminance();
        Ok(self.state)
    }

    pub fn read_sensors(&self) -> EnvState {
        self.state
    }

    /// Scaled energy readout in kWh.
    pub fn read_energy(&self) -> Decimal {
        self.meter.readout_kwh()
    }

    pub fn meter(&self) -> EnergyMeter {
        self.meter
    }
}
