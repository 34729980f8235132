//! Autonomous control: threshold-driven and occupancy-driven policies.
//!
//! Both cycles are pure functions of their inputs; the caller applies the
//! returned decisions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::intent::Hint;
use crate::registry::{ThresholdKey, ThresholdSet};
use crate::sim::{ApplianceKind, ApplianceLevels, EnvState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("thresholds are inverted (min > max)")]
    InvertedThresholds,
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub fan: u8,
    pub purifier: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Temperature excess (°C) above max that drives the fan to full speed.
    pub fan_full_scale_delta: f64,
    pub light_gain: f64,
    pub light_base: f64,
    /// CO excess (ppm) above max that drives the purifier to full level.
    pub purifier_full_scale_co: f64,
    /// Humidity deficit (% RH) below min that drives the humidifier to full level.
    pub humidity_full_scale: f64,
    /// Brightness change for a "too dark" / "too bright" hint, in percentage points.
    pub hint_step: u8,
    /// Occupancy at or above this count selects the high profile.
    pub high_occupancy_min: u32,
    pub low_profile: Profile,
    pub high_profile: Profile,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            fan_full_scale_delta: 1.0,
            light_gain: 125.0,
            light_base: 50.0,
            purifier_full_scale_co: 200.0,
            humidity_full_scale: 10.0,
            hint_step: 30,
            high_occupancy_min: 5,
            low_profile: Profile { fan: 1, purifier: 1 },
            high_profile: Profile { fan: 3, purifier: 7 },
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let gains = [
            ("fan_full_scale_delta", self.fan_full_scale_delta),
            ("light_gain", self.light_gain),
            ("purifier_full_scale_co", self.purifier_full_scale_co),
            ("humidity_full_scale", self.humidity_full_scale),
        ];
        for (name, g) in gains {
            if !(g.is_finite() && g > 0.0) {
                return Err(PolicyError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.light_base.is_finite() && (0.0..=100.0).contains(&self.light_base)) {
            return Err(PolicyError::InvalidConfig("light_base must lie in [0, 100]".into()));
        }
        if self.hint_step == 0 || self.hint_step > 100 {
            return Err(PolicyError::InvalidConfig("hint_step must lie in [1, 100]".into()));
        }
        if self.high_occupancy_min < 2 {
            return Err(PolicyError::InvalidConfig("high_occupancy_min must be at least 2".into()));
        }
        for p in [self.low_profile, self.high_profile] {
            if !ApplianceKind::Fan.is_valid(p.fan) || !ApplianceKind::Purifier.is_valid(p.purifier) {
                return Err(PolicyError::InvalidConfig("occupancy profile out of device range".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cause {
    ThresholdViolation { key: ThresholdKey, reading: f64 },
    Occupancy { count: u32 },
    UserHint { hint: Hint },
    UserCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Decision {
    SetLevel { device: ApplianceKind, new_level: u8 },
    Alert { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    #[serde(flatten)]
    pub decision: Decision,
    pub cause: Cause,
    /// Simulation time in seconds.
    pub timestamp: u64,
}

impl AgentDecision {
    pub fn set(device: ApplianceKind, new_level: u8, cause: Cause, timestamp: u64) -> Self {
        Self { decision: Decision::SetLevel { device, new_level }, cause, timestamp }
    }

    pub fn device(&self) -> Option<ApplianceKind> {
        match self.decision {
            Decision::SetLevel { device, .. } => Some(device),
            Decision::Alert { .. } => None,
        }
    }

    pub fn new_level(&self) -> Option<u8> {
        match self.decision {
            Decision::SetLevel { new_level, .. } => Some(new_level),
            Decision::Alert { .. } => None,
        }
    }
}

/// What the agent believes the actuators are doing. The alert latch keeps a
/// standing cold-room alert from being re-emitted every cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actuators {
    pub levels: ApplianceLevels,
    pub cold_alert: bool,
}

impl Actuators {
    pub fn new(levels: ApplianceLevels) -> Self {
        Self { levels, cold_alert: false }
    }

    pub fn apply(&mut self, decisions: &[AgentDecision]) {
        for d in decisions {
            match &d.decision {
                Decision::SetLevel { device, new_level } => self.levels.set(*device, *new_level),
                Decision::Alert { .. } => self.cold_alert = true,
            }
        }
    }
}

/// Round half up to the nearest multiple of 10.
fn round_to_10(x: f64) -> f64 {
    (x / 10.0 + 0.5).floor() * 10.0
}

fn scaled_level(max: u8, ratio: f64) -> u8 {
    (max as f64 * ratio.clamp(0.0, 1.0)).ceil() as u8
}

/// Compares sensor readings with the thresholds and returns the actuations
/// needed to restore comfort. In-band variables produce nothing.
pub fn control_cycle(
    thresholds: &ThresholdSet,
    env: &EnvState,
    current: &Actuators,
    config: &PolicyConfig,
) -> Result<Vec<AgentDecision>, PolicyError> {
    if !thresholds.is_well_formed() {
        return Err(PolicyError::InvertedThresholds);
    }
    let ts = env.sim_time;
    let mut out = Vec::new();
    let mut push = |device: ApplianceKind, level: u8, key: ThresholdKey, reading: f64| {
        if current.levels.get(device) != level {
            out.push(AgentDecision::set(device, level, Cause::ThresholdViolation { key, reading }, ts));
        }
    };

    let (t_min, t_max) = (thresholds.min_temperature_c(), thresholds.max_temperature_c());
    let t = env.temperature;
    let mut cold = false;
    if t > t_max {
        let level = scaled_level(3, (t - t_max) / config.fan_full_scale_delta);
        push(ApplianceKind::Fan, level, ThresholdKey::MaxTemperature, t);
    } else if t < t_min {
        push(ApplianceKind::Fan, 0, ThresholdKey::MinTemperature, t);
        cold = true;
    }

    let [l_min, l_max] = thresholds.luminance.map(|v| v as f64);
    let l = env.luminance;
    if l < l_min {
        let target = round_to_10(config.light_base + config.light_gain * (l_min - l) / l_min.max(1.0));
        push(ApplianceKind::Light, target.clamp(10.0, 100.0) as u8, ThresholdKey::MinLuminance, l);
    } else if l > l_max {
        let target = round_to_10(config.light_base - config.light_gain * (l - l_max) / l_max.max(1.0));
        push(ApplianceKind::Light, target.clamp(0.0, 100.0) as u8, ThresholdKey::MaxLuminance, l);
    }

    let co_max = thresholds.co[1] as f64;
    if env.co > co_max {
        let level = scaled_level(7, (env.co - co_max) / config.purifier_full_scale_co);
        push(ApplianceKind::Purifier, level, ThresholdKey::MaxCo, env.co);
    }

    let [rh_min, rh_max] = thresholds.humidity.map(|v| v as f64);
    let rh = env.humidity;
    if rh < rh_min {
        let level = scaled_level(3, (rh_min - rh) / config.humidity_full_scale);
        push(ApplianceKind::Humidifier, level, ThresholdKey::MinHumidity, rh);
    } else if rh > rh_max {
        push(ApplianceKind::Humidifier, 0, ThresholdKey::MaxHumidity, rh);
    }

    if cold && !current.cold_alert {
        out.push(AgentDecision {
            decision: Decision::Alert {
                message: format!("temperature {t:.1} °C is below the minimum of {t_min:.1} °C"),
            },
            cause: Cause::ThresholdViolation { key: ThresholdKey::MinTemperature, reading: t },
            timestamp: ts,
        });
    }
    Ok(out)
}

/// Selects an appliance profile from the head count.
pub fn occupancy_cycle(
    occupancy: u32,
    current: &ApplianceLevels,
    config: &PolicyConfig,
    timestamp: u64,
) -> Vec<AgentDecision> {
    let cause = Cause::Occupancy { count: occupancy };
    let mut targets: Vec<(ApplianceKind, u8)> = Vec::new();
    if occupancy == 0 {
        targets.extend(ApplianceKind::ALL.iter().map(|k| (*k, 0)));
    } else {
        let p = if occupancy >= config.high_occupancy_min { config.high_profile } else { config.low_profile };
        targets.push((ApplianceKind::Fan, p.fan));
        targets.push((ApplianceKind::Purifier, p.purifier));
    }
    targets
        .into_iter()
        .filter(|(k, level)| current.get(*k) != *level)
        .map(|(k, level)| AgentDecision::set(k, level, cause.clone(), timestamp))
        .collect()
}

/// Brightness after a user comfort hint, clamped and snapped to the light's grid.
pub fn hint_brightness(current: u8, hint: Hint, config: &PolicyConfig) -> u8 {
    let step = config.hint_step as f64;
    let target = match hint {
        Hint::TooDark => current as f64 + step,
        Hint::TooBright => current as f64 - step,
    };
    round_to_10(target).clamp(0.0, 100.0) as u8
}

/// One loop iteration: occupancy first, then threshold control on the
/// resulting levels. When both target the same device the threshold decision
/// wins. Only changes relative to `current` are returned.
pub fn combined_cycle(
    thresholds: &ThresholdSet,
    env: &EnvState,
    current: &Actuators,
    config: &PolicyConfig,
) -> Result<Vec<AgentDecision>, PolicyError> {
    let occupancy = occupancy_cycle(env.occupancy, &current.levels, config, env.sim_time);
    let mut staged = *current;
    staged.apply(&occupancy);
    let control = control_cycle(thresholds, env, &staged, config)?;

    let overridden: Vec<ApplianceKind> = control.iter().filter_map(|d| d.device()).collect();
    let mut out: Vec<AgentDecision> =
        occupancy.into_iter().filter(|d| d.device().is_some_and(|k| !overridden.contains(&k))).collect();
    out.extend(
        control
            .into_iter()
            .filter(|d| !matches!((d.device(), d.new_level()), (Some(k), Some(l)) if current.levels.get(k) == l)),
    );
    Ok(out)
}
