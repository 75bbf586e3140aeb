//! Non-learning signal controllers: a fixed cycle and self-organizing
//! traffic lights (SOTL).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traffic::{Env, Phase, N_PHASES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedTimeConfig {
    /// Control steps each phase is held, in phase order.
    pub dwell: [u32; N_PHASES],
}

impl Default for FixedTimeConfig {
    fn default() -> Self {
        Self {
            dwell: [3; N_PHASES],
        }
    }
}

/// Phase of a fixed cycle at control step `t`.
pub fn fixedtime_action(t: u32, dwell: &[u32; N_PHASES]) -> Result<usize> {
    if dwell.contains(&0) {
        return Err(Error::config(format!(
            "fixed-time dwell must be at least 1, got {dwell:?}"
        )));
    }
    let cycle: u32 = dwell.iter().sum();
    let mut offset = t % cycle;
    for (phase, &d) in dwell.iter().enumerate() {
        if offset < d {
            return Ok(phase);
        }
        offset -= d;
    }
    unreachable!("offset is below the cycle length")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SotlConfig {
    /// Waiting vehicles on a red lane group that trigger a switch.
    pub threshold: usize,
    pub min_green_steps: u32,
}

impl Default for SotlConfig {
    fn default() -> Self {
        Self {
            threshold: 5,
            min_green_steps: 2,
        }
    }
}

/// Per-intersection SOTL controller state.
#[derive(Clone, Debug)]
pub struct Sotl {
    config: SotlConfig,
    /// Steps the current phase has been applied, per intersection.
    held: Vec<u32>,
}

impl Sotl {
    pub fn new(config: SotlConfig, n_intersections: usize) -> Result<Self> {
        if config.threshold == 0 || config.min_green_steps == 0 {
            return Err(Error::config(
                "SOTL threshold and minimum green must be positive",
            ));
        }
        Ok(Self {
            config,
            held: vec![0; n_intersections],
        })
    }

    pub fn reset(&mut self) {
        self.held.iter_mut().for_each(|h| *h = 0);
    }

    /// Decides every intersection's next phase and records it as applied.
    pub fn act(&mut self, env: &Env) -> Vec<usize> {
        (0..env.n_intersections())
            .map(|i| {
                let current = env.phase(i).index();
                let next = sotl_action(env, i, &self.config, self.held[i]);
                self.held[i] = if next == current { self.held[i] + 1 } else { 1 };
                next
            })
            .collect()
    }
}

/// Keeps the current phase until it has been held `min_green_steps` and
/// some red lane group has more than `threshold` waiting vehicles; then
/// serves the red group with the most waiting vehicles (lowest phase on
/// ties).
pub fn sotl_action(env: &Env, i: usize, config: &SotlConfig, held: u32) -> usize {
    let current = env.phase(i).index();
    if held < config.min_green_steps {
        return current;
    }
    let waits = env.lane_waits(i);
    let mut best: Option<(usize, usize)> = None;
    for phase in Phase::ALL {
        if phase.index() == current {
            continue;
        }
        let demand: usize = phase.green_lanes().iter().map(|l| waits[l.index()]).sum();
        if demand > config.threshold && best.is_none_or(|(_, d)| demand > d) {
            best = Some((phase.index(), demand));
        }
    }
    best.map_or(current, |(phase, _)| phase)
}
