//! Reward-mode ablation and decay-rate sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::output::{create_dir, write_csv};
use super::training::{run_training, SeedRun};
use crate::error::{Error, Result};
use crate::traffic::RewardMode;

/// Seed-averaged travel time of one algorithm under one reward mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub algorithm: Algorithm,
    pub reward_mode: RewardMode,
    pub seeds: usize,
    pub travel_time: f64,
    pub travel_time_std: f64,
}

impl AblationRow {
    pub fn from_runs(algorithm: Algorithm, reward_mode: RewardMode, runs: &[SeedRun]) -> Self {
        let n = runs.len() as f64;
        let mean = runs.iter().map(|r| r.eval.travel_time).sum::<f64>() / n;
        let var = runs
            .iter()
            .map(|r| (r.eval.travel_time - mean).powi(2))
            .sum::<f64>()
            / n;
        Self {
            algorithm,
            reward_mode,
            seeds: runs.len(),
            travel_time: mean,
            travel_time_std: var.sqrt(),
        }
    }
}

/// Trains CIL-DDQN and IDDQN under each reward mode and tabulates the
/// final greedy travel times (`ablation.csv`, one row per pair).
pub fn run_reward_ablation(config: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for algorithm in [Algorithm::CilDdqn, Algorithm::Iddqn] {
        for reward_mode in RewardMode::ALL {
            let mut run = config.clone();
            run.algorithm = algorithm;
            run.reward_mode = reward_mode;
            run.output = config
                .output
                .as_ref()
                .map(|o| o.join(format!("{algorithm}_{reward_mode}")));
            let runs = run_training(&run)?;
            rows.push(AblationRow::from_runs(algorithm, reward_mode, &runs));
        }
    }
    if let Some(out) = &config.output {
        create_dir(out)?;
        write_csv(&out.join("ablation.csv"), &rows)?;
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyParameter {
    /// Importance decay `d_e` applied at every episode boundary.
    ImportanceDecay,
    /// Per-step leniency decrement `d_l`, in full-scale units: under
    /// schedule compression it is rescaled by the same factor as the
    /// default decrements.
    LeniencyDecay,
}

impl StudyParameter {
    pub fn name(self) -> &'static str {
        match self {
            StudyParameter::ImportanceDecay => "d-e",
            StudyParameter::LeniencyDecay => "d-l",
        }
    }

    pub fn apply(self, config: &mut ExperimentConfig, value: f64) {
        match self {
            StudyParameter::ImportanceDecay => config.agent.importance_decay = value,
            StudyParameter::LeniencyDecay => config.agent.leniency_decay = value,
        }
    }
}

impl fmt::Display for StudyParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d-e" | "d_e" => Ok(StudyParameter::ImportanceDecay),
            "d-l" | "d_l" => Ok(StudyParameter::LeniencyDecay),
            _ => Err(Error::config(format!(
                "unknown study parameter `{s}` (expected d-e or d-l)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub parameter: StudyParameter,
    pub value: f64,
    pub episode: u32,
    /// Averaged over seeds.
    pub mean_cumulative_reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyCurve {
    pub value: f64,
    pub points: Vec<CurvePoint>,
    /// Mean reward over the last tenth of training (at least one episode).
    pub final_mean_reward: f64,
}

impl StudyCurve {
    pub fn from_runs(parameter: StudyParameter, value: f64, runs: &[SeedRun]) -> Self {
        let episodes = runs.iter().map(|r| r.curve.len()).min().unwrap_or(0);
        let points: Vec<CurvePoint> = (0..episodes)
            .map(|e| CurvePoint {
                parameter,
                value,
                episode: e as u32,
                mean_cumulative_reward: runs
                    .iter()
                    .map(|r| r.curve[e].mean_cumulative_reward)
                    .sum::<f64>()
                    / runs.len() as f64,
            })
            .collect();
        let tail = (episodes / 10).max(1).min(episodes);
        let final_mean_reward = points[episodes - tail..]
            .iter()
            .map(|p| p.mean_cumulative_reward)
            .sum::<f64>()
            / tail as f64;
        Self {
            value,
            points,
            final_mean_reward,
        }
    }
}

/// One set of training runs per value; writes `curve_<value>.csv` for
/// each, with per-seed artifacts under `value_<value>/`.
pub fn run_param_study(
    config: &ExperimentConfig,
    parameter: StudyParameter,
    values: &[f64],
) -> Result<Vec<StudyCurve>> {
    if values.is_empty() {
        return Err(Error::config("parameter study needs at least one value"));
    }
    let mut curves = Vec::with_capacity(values.len());
    for &value in values {
        let mut run = config.clone();
        parameter.apply(&mut run, value);
        run.output = config
            .output
            .as_ref()
            .map(|o| o.join(format!("value_{value}")));
        let curve = StudyCurve::from_runs(parameter, value, &run_training(&run)?);
        if let Some(out) = &config.output {
            write_csv(&out.join(format!("curve_{value}.csv")), &curve.points)?;
        }
        curves.push(curve);
    }
    Ok(curves)
}
