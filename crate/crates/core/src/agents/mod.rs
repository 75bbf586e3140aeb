//! Independent Double-DQN learners.
//!
//! One [`Agent`] type covers the three learners; they differ only in how
//! each sampled TD error is weighted before the squared loss:
//!
//! | kind      | weight of a sample with TD error `delta`                  |
//! |-----------|-----------------------------------------------------------|
//! | `CilDdqn` | `e` if `delta > 0`, else `(1 - l) * e`                    |
//! | `Iddqn`   | `1`                                                       |
//! | `Ldqn`    | `1` if `delta > 0` or `x > l(s, a)`, else `0`, `x ~ U(0,1)` |
//!
//! `e` is the experience's importance (decayed at every episode boundary)
//! and `l` is a leniency that decays linearly with environment steps.

mod leniency;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{self, Adam, Network, NetworkCheckpoint, Sample};
use crate::replay::ReplayMemory;

pub use leniency::{
    ldqn_apply_update, lenient_weight, refine_td, state_hash, LdqnConfig, TemperatureTable,
};

pub const AGENT_CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    CilDdqn,
    Iddqn,
    Ldqn,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::CilDdqn => "cil-ddqn",
            AgentKind::Iddqn => "iddqn",
            AgentKind::Ldqn => "ldqn",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cil-ddqn" => Ok(AgentKind::CilDdqn),
            "iddqn" => Ok(AgentKind::Iddqn),
            "ldqn" => Ok(AgentKind::Ldqn),
            other => Err(Error::config(format!("unknown learner `{other}`"))),
        }
    }
}

/// Learner hyperparameters. Defaults are the full-scale values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub memory_capacity: usize,
    pub tau: f64,
    pub batch_size: usize,
    pub hidden_layers: Vec<usize>,
    pub epsilon_initial: f64,
    pub epsilon_final: f64,
    /// Subtracted from epsilon once per environment step.
    pub epsilon_decay: f64,
    pub leniency_initial: f64,
    pub leniency_final: f64,
    /// Subtracted from the leniency once per environment step.
    pub leniency_decay: f64,
    /// Importance multiplier applied at every episode boundary.
    pub importance_decay: f64,
    pub ldqn: LdqnConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            gamma: 0.9,
            memory_capacity: 200_000,
            tau: 0.001,
            batch_size: 32,
            hidden_layers: vec![200, 200],
            epsilon_initial: 0.8,
            epsilon_final: 0.001,
            epsilon_decay: 0.8 / 360_000.0,
            leniency_initial: 0.5,
            leniency_final: 0.0,
            leniency_decay: 0.5 / 800_000.0,
            importance_decay: 0.995,
            ldqn: LdqnConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(msg.to_string()))
            }
        };
        check(self.learning_rate > 0.0, "learning rate must be positive")?;
        check((0.0..1.0).contains(&self.gamma), "gamma must lie in [0, 1)")?;
        check(self.memory_capacity > 0, "memory capacity must be positive")?;
        check((0.0..=1.0).contains(&self.tau), "tau must lie in [0, 1]")?;
        check(self.batch_size > 0, "batch size must be positive")?;
        check(
            self.batch_size <= self.memory_capacity,
            "batch size cannot exceed memory capacity",
        )?;
        check(
            !self.hidden_layers.contains(&0),
            "hidden layer sizes must be positive",
        )?;
        check(
            0.0 <= self.epsilon_final
                && self.epsilon_final <= self.epsilon_initial
                && self.epsilon_initial <= 1.0,
            "epsilon schedule needs 0 <= final <= initial <= 1",
        )?;
        check(
            0.0 <= self.leniency_final
                && self.leniency_final <= self.leniency_initial
                && self.leniency_initial <= 1.0,
            "leniency schedule needs 0 <= final <= initial <= 1",
        )?;
        check(
            self.epsilon_decay >= 0.0 && self.leniency_decay >= 0.0,
            "schedule decrements must be non-negative",
        )?;
        check(
            self.importance_decay > 0.0 && self.importance_decay <= 1.0,
            "importance decay must lie in (0, 1]",
        )?;
        check(
            self.ldqn.moderation > 0.0 && self.ldqn.initial_temperature > 0.0,
            "LDQN moderation and initial temperature must be positive",
        )?;
        Ok(())
    }

    /// Compresses the epsilon and leniency schedules to a run of
    /// `total_steps` environment steps: both decrements are multiplied by
    /// the factor that makes epsilon reach its floor after
    /// `fraction * total_steps` steps. Decrements keep their ratio, so a
    /// leniency decrement set in full-scale units stays comparable.
    /// A constant epsilon (zero decrement) leaves the config unchanged.
    pub fn scaled_to(mut self, total_steps: u64, fraction: f64) -> Self {
        if self.epsilon_decay <= 0.0 {
            return self;
        }
        let horizon = (total_steps as f64 * fraction).max(1.0);
        let full = (self.epsilon_initial - self.epsilon_final) / self.epsilon_decay;
        let factor = full / horizon;
        self.epsilon_decay *= factor;
        self.leniency_decay *= factor;
        self
    }
}

/// An independent learner owning its networks, replay memory and schedules.
#[derive(Clone, Debug)]
pub struct Agent {
    kind: AgentKind,
    config: AgentConfig,
    n_actions: usize,
    online: Network,
    target: Network,
    optimizer: Adam,
    memory: ReplayMemory,
    epsilon: f64,
    leniency: f64,
    temperatures: TemperatureTable,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(
        kind: AgentKind,
        config: AgentConfig,
        obs_dim: usize,
        n_actions: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(&config.hidden_layers);
        sizes.push(n_actions);
        let online = Network::new(&sizes, seed)?;
        let target = online.clone();
        let optimizer = Adam::new(&online, config.learning_rate);
        let memory = ReplayMemory::new(config.memory_capacity, obs_dim)?;
        Ok(Self {
            kind,
            n_actions,
            target,
            optimizer,
            memory,
            epsilon: config.epsilon_initial,
            leniency: config.leniency_initial,
            temperatures: TemperatureTable::new(config.ldqn.clone()),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            online,
            config,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn leniency(&self) -> f64 {
        self.leniency
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }

    pub fn set_leniency(&mut self, leniency: f64) {
        self.leniency = leniency;
    }

    pub fn temperatures(&self) -> &TemperatureTable {
        &self.temperatures
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.online.forward(obs)
    }

    pub fn greedy_action(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.online.forward(obs)?))
    }

    /// Epsilon-greedy action. One uniform draw decides exploration; a second
    /// picks the random action when exploring.
    pub fn select_action(&mut self, obs: &[f64]) -> Result<usize> {
        let q = self.online.forward(obs)?;
        if self.rng.random::<f64>() < self.epsilon {
            Ok(self.rng.random_range(0..self.n_actions))
        } else {
            Ok(argmax(&q))
        }
    }

    /// Double-DQN target: the online network picks the next action, the
    /// target network evaluates it.
    pub fn ddqn_target(&self, reward: f64, next_obs: &[f64], done: bool) -> Result<f64> {
        if done {
            return Ok(reward);
        }
        let best = argmax(&self.online.forward(next_obs)?);
        Ok(reward + self.config.gamma * self.target.forward(next_obs)?[best])
    }

    /// Stores a transition with importance 1. LDQN also records the
    /// state-action leniency, cooling that key's temperature.
    pub fn observe(
        &mut self,
        obs: Vec<f64>,
        action: usize,
        reward: f64,
        next_obs: Vec<f64>,
        done: bool,
    ) -> Result<()> {
        let leniency = match self.kind {
            AgentKind::Ldqn => self.temperatures.leniency(state_hash(&obs), action),
            _ => 0.0,
        };
        self.memory
            .push_with_leniency(obs, action, reward, next_obs, done, leniency)
    }

    /// Samples a batch and performs one update plus one soft target update.
    /// Returns `Ok(None)` while the memory holds fewer than `batch_size`
    /// experiences.
    pub fn train(&mut self) -> Result<Option<f64>> {
        if self.memory.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch = self.memory.sample(self.config.batch_size, &mut self.rng)?;
        let mut targets = Vec::with_capacity(batch.len());
        for exp in &batch {
            targets.push(self.ddqn_target(exp.reward, &exp.next_obs, exp.done)?);
        }
        let samples: Vec<Sample<'_>> = batch
            .iter()
            .zip(&targets)
            .map(|(exp, &target)| Sample {
                input: &exp.obs,
                action: exp.action,
                target,
            })
            .collect();
        let leniency = self.leniency;
        let loss = match self.kind {
            AgentKind::CilDdqn => nn::train_step_with(
                &mut self.online,
                &mut self.optimizer,
                &samples,
                |i, delta| lenient_weight(delta, batch[i].importance, leniency),
            )?,
            AgentKind::Iddqn => {
                nn::train_step_with(&mut self.online, &mut self.optimizer, &samples, |_, _| 1.0)?
            }
            AgentKind::Ldqn => {
                let draws: Vec<f64> = (0..batch.len()).map(|_| self.rng.random::<f64>()).collect();
                nn::train_step_with(
                    &mut self.online,
                    &mut self.optimizer,
                    &samples,
                    |i, delta| {
                        if ldqn_apply_update(delta, batch[i].leniency, draws[i]) {
                            1.0
                        } else {
                            0.0
                        }
                    },
                )?
            }
        };
        self.target.soft_update(&self.online, self.config.tau)?;
        Ok(Some(loss))
    }

    /// One linear decrement of epsilon and leniency, clamped at their floors.
    pub fn step_schedules(&mut self) {
        self.epsilon = (self.epsilon - self.config.epsilon_decay).max(self.config.epsilon_final);
        self.leniency =
            (self.leniency - self.config.leniency_decay).max(self.config.leniency_final);
    }

    /// Episode boundary: CIL-DDQN forgets by decaying every stored
    /// importance. The other learners keep unit importance.
    pub fn end_episode(&mut self) -> Result<()> {
        if self.kind == AgentKind::CilDdqn {
            self.memory.decay_importance(self.config.importance_decay)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            version: AGENT_CHECKPOINT_VERSION,
            kind: self.kind,
            config: self.config.clone(),
            n_actions: self.n_actions,
            online: NetworkCheckpoint::new(self.online.clone(), Some(self.optimizer.clone())),
            target: self.target.clone(),
            epsilon: self.epsilon,
            leniency: self.leniency,
            rng: self.rng.clone(),
        }
    }

    /// Rebuilds an agent from a checkpoint. The replay memory starts empty.
    pub fn from_checkpoint(ckpt: AgentCheckpoint) -> Result<Self> {
        if ckpt.version != AGENT_CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported agent checkpoint version {}",
                ckpt.version
            )));
        }
        let online = ckpt.online.network;
        if online.layer_sizes() != ckpt.target.layer_sizes()
            || online.output_dim() != ckpt.n_actions
        {
            return Err(Error::Checkpoint(
                "online and target networks disagree".into(),
            ));
        }
        let optimizer = ckpt
            .online
            .optimizer
            .unwrap_or_else(|| Adam::new(&online, ckpt.config.learning_rate));
        let memory = ReplayMemory::new(ckpt.config.memory_capacity, online.input_dim())?;
        Ok(Self {
            kind: ckpt.kind,
            n_actions: ckpt.n_actions,
            target: ckpt.target,
            optimizer,
            memory,
            epsilon: ckpt.epsilon,
            leniency: ckpt.leniency,
            temperatures: TemperatureTable::new(ckpt.config.ldqn.clone()),
            rng: ckpt.rng,
            online,
            config: ckpt.config,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub version: u32,
    pub kind: AgentKind,
    pub config: AgentConfig,
    pub n_actions: usize,
    pub online: NetworkCheckpoint,
    pub target: Network,
    pub epsilon: f64,
    pub leniency: f64,
    pub rng: ChaCha8Rng,
}

impl AgentCheckpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
