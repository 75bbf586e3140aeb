use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentKind};
use crate::baselines::{FixedTimeConfig, SotlConfig};
use crate::error::{Error, Result};
use crate::traffic::{ArrivalSpec, RewardMode, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    CilDdqn,
    Iddqn,
    Ldqn,
    Fixedtime,
    Sotl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::CilDdqn,
        Algorithm::Iddqn,
        Algorithm::Ldqn,
        Algorithm::Fixedtime,
        Algorithm::Sotl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CilDdqn => "cil-ddqn",
            Algorithm::Iddqn => "iddqn",
            Algorithm::Ldqn => "ldqn",
            Algorithm::Fixedtime => "fixedtime",
            Algorithm::Sotl => "sotl",
        }
    }

    /// The learner behind this algorithm, if it learns at all.
    pub fn learner(self) -> Option<AgentKind> {
        match self {
            Algorithm::CilDdqn => Some(AgentKind::CilDdqn),
            Algorithm::Iddqn => Some(AgentKind::Iddqn),
            Algorithm::Ldqn => Some(AgentKind::Ldqn),
            Algorithm::Fixedtime | Algorithm::Sotl => None,
        }
    }
}

impl From<AgentKind> for Algorithm {
    fn from(kind: AgentKind) -> Self {
        match kind {
            AgentKind::CilDdqn => Algorithm::CilDdqn,
            AgentKind::Iddqn => Algorithm::Iddqn,
            AgentKind::Ldqn => Algorithm::Ldqn,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm `{s}`")))
    }
}

/// Everything needed to reproduce a set of training runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Scenario file to load instead of the inline `scenario` table,
    /// relative to the experiment file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    pub reward_mode: RewardMode,
    pub episodes: u32,
    pub seeds: Vec<u64>,
    pub agent: AgentConfig,
    /// When set, the agent schedules are compressed so that epsilon reaches
    /// its floor after this fraction of the planned training steps.
    pub schedule_fraction: Option<f64>,
    /// Greedy episodes evaluated after training.
    pub eval_episodes: u32,
    pub fixedtime: FixedTimeConfig,
    pub sotl: SotlConfig,
    /// Also write a per-step, per-intersection log of every episode.
    pub log_steps: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::CilDdqn,
            scenario_file: None,
            scenario: desk_scenario(),
            reward_mode: RewardMode::Local,
            episodes: 300,
            seeds: (0..5).collect(),
            agent: desk_agent(),
            schedule_fraction: Some(0.8),
            eval_episodes: 1,
            fixedtime: FixedTimeConfig::default(),
            sotl: SotlConfig::default(),
            log_steps: false,
            output: None,
        }
    }
}

/// The 4x4 synthetic grid at desk scale: a 20-minute episode with an
/// arrival wave peaking mid-episode.
pub fn desk_scenario() -> ScenarioConfig {
    let mut scenario = ScenarioConfig::synthetic(4, 4);
    scenario.horizon = 120;
    scenario.arrivals = ArrivalSpec::Gaussian {
        mean: 4.0,
        std: 1.5,
        window_steps: 6,
    };
    scenario
}

/// Table II learner settings with smaller networks and batches.
pub fn desk_agent() -> AgentConfig {
    AgentConfig {
        hidden_layers: vec![32, 32],
        batch_size: 16,
        ..AgentConfig::default()
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seed list is empty"));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes must be at least 1"));
        }
        if let Some(f) = self.schedule_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::config(format!(
                    "schedule fraction must be positive, got {f}"
                )));
            }
        }
        self.scenario.validate()?;
        self.agent.validate()
    }

    /// Reads an experiment file, resolving `scenario_file` against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading experiment config {}", path.display()), e))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(file) = config.scenario_file.take() {
            let resolved = path.parent().unwrap_or(Path::new(".")).join(file);
            config.scenario = ScenarioConfig::load(&resolved)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Parses an experiment file. A partial `[agent]` table only overrides
    /// the fields it names; the rest keep their desk-scale values.
    pub fn from_toml(text: &str) -> Result<Self> {
        let err = |e: &dyn fmt::Display| Error::config(format!("experiment config: {e}"));
        let mut table: toml::Table = toml::from_str(text).map_err(|e| err(&e))?;
        if let Some(toml::Value::Table(agent)) = table.remove("agent") {
            let mut merged = toml::Table::try_from(desk_agent()).map_err(|e| err(&e))?;
            merged.extend(agent);
            table.insert("agent".into(), toml::Value::Table(merged));
        }
        table.try_into().map_err(|e| err(&e))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("experiment config: {e}")))
    }

    /// Agent settings after schedule compression for this run's budget.
    pub fn resolved_agent(&self) -> AgentConfig {
        match self.schedule_fraction {
            Some(fraction) => {
                let steps = u64::from(self.episodes) * u64::from(self.scenario.horizon);
                self.agent.clone().scaled_to(steps, fraction)
            }
            None => self.agent.clone(),
        }
    }
}
