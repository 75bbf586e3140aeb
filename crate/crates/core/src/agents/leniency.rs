//! Leniency arithmetic shared by the learners.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Refined TD error: `e * delta` for positive errors, `(1 - l) * e * delta`
/// otherwise.
pub fn refine_td(delta: f64, importance: f64, leniency: f64) -> f64 {
    lenient_weight(delta, importance, leniency) * delta
}

/// The multiplier [`refine_td`] applies to `delta`.
#[inline]
pub fn lenient_weight(delta: f64, importance: f64, leniency: f64) -> f64 {
    if delta > 0.0 {
        importance
    } else {
        (1.0 - leniency) * importance
    }
}

/// LDQN update gate: keep the sample when the error is positive or the
/// uniform draw `x` exceeds the stored leniency.
pub fn ldqn_apply_update(delta: f64, leniency: f64, x: f64) -> bool {
    delta > 0.0 || x > leniency
}

/// Hash key for a state: every component rounded to the nearest integer.
pub fn state_hash(obs: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in obs {
        (v.round() as i64).hash(&mut h);
    }
    h.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdqnConfig {
    pub initial_temperature: f64,
    /// Leniency moderation factor `K`.
    pub moderation: f64,
    /// Per-visit multiplicative temperature decay.
    pub temperature_decay: f64,
}

impl Default for LdqnConfig {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            moderation: 2.0,
            temperature_decay: 0.95,
        }
    }
}

/// Per (state, action) temperatures for LDQN.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TemperatureTable {
    config: LdqnConfig,
    temperatures: HashMap<(u64, usize), f64>,
}

impl TemperatureTable {
    pub fn new(config: LdqnConfig) -> Self {
        Self {
            config,
            temperatures: HashMap::new(),
        }
    }

    pub fn temperature(&self, state: u64, action: usize) -> f64 {
        self.temperatures
            .get(&(state, action))
            .copied()
            .unwrap_or(self.config.initial_temperature)
    }

    /// Returns `1 - exp(-K * T)` for the key's current temperature, then
    /// cools that key by one visit.
    pub fn leniency(&mut self, state: u64, action: usize) -> f64 {
        let t = self.temperature(state, action);
        let l = 1.0 - (-self.config.moderation * t).exp();
        self.temperatures
            .insert((state, action), t * self.config.temperature_decay);
        l
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }
}
