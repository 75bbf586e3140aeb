//! Training two independent learners on the two-step game.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::output::{create_dir, write_csv};
use crate::agents::{Agent, AgentConfig, AgentKind};
use crate::error::{Error, Result};
use crate::matrix_game::{Action, GameSpec, GameState, TwoStepGame, N_ACTIONS, OBS_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoStepConfig {
    pub algorithm: AgentKind,
    pub episodes: u32,
    pub seeds: Vec<u64>,
    pub game: GameSpec,
    pub agent: AgentConfig,
    /// When set, epsilon reaches its floor after this fraction of the
    /// run's steps (leniency proportionally later); otherwise the agent's
    /// decrements are used as given.
    pub schedule_fraction: Option<f64>,
}

impl Default for TwoStepConfig {
    fn default() -> Self {
        Self {
            algorithm: AgentKind::CilDdqn,
            episodes: 5000,
            seeds: (0..20).collect(),
            game: GameSpec::default(),
            agent: AgentConfig {
                hidden_layers: vec![32, 32],
                ..AgentConfig::default()
            },
            schedule_fraction: Some(1.0),
        }
    }
}

/// Learned Q values of both agents in the three decision states, indexed
/// `[state][action]` with states in order 1, 2A, 2B.
pub type QTable = [[f64; N_ACTIONS]; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepRun {
    pub seed: u64,
    pub algorithm: AgentKind,
    /// Greedy first action of agent 1 and second-step actions of both.
    pub greedy_actions: [Action; 3],
    pub greedy_return: f64,
    pub q_agent1: QTable,
    pub q_agent2: QTable,
}

const STATES: [GameState; 3] = [GameState::Step1, GameState::Step2A, GameState::Step2B];

/// Trains two independent learners for `config.episodes` episodes and
/// reports the final greedy joint policy.
pub fn run_two_step(config: &TwoStepConfig, seed: u64) -> Result<TwoStepRun> {
    if config.episodes == 0 {
        return Err(Error::config("episodes must be at least 1"));
    }
    let mut game = TwoStepGame::new(config.game.clone());
    let agent_config = match config.schedule_fraction {
        Some(fraction) => config
            .agent
            .clone()
            .scaled_to(2 * u64::from(config.episodes), fraction),
        None => config.agent.clone(),
    };
    let new_agent = |i| {
        Agent::new(
            config.algorithm,
            agent_config.clone(),
            OBS_DIM,
            N_ACTIONS,
            derive_seed(seed, i),
        )
    };
    let (mut a1, mut a2) = (new_agent(0)?, new_agent(1)?);
    let terminal = vec![0.0; OBS_DIM];
    for _ in 0..config.episodes {
        let mut obs = game.reset();
        loop {
            let u1 = a1.select_action(&obs[0])?;
            let u2 = a2.select_action(&obs[1])?;
            let out = game.step(Action::from_index(u1)?, Action::from_index(u2)?)?;
            let next = out
                .observations
                .unwrap_or_else(|| [terminal.clone(), terminal.clone()]);
            let [o1, o2] = obs;
            a1.observe(o1, u1, out.reward, next[0].clone(), out.done)?;
            a2.observe(o2, u2, out.reward, next[1].clone(), out.done)?;
            for agent in [&mut a1, &mut a2] {
                agent.train()?;
                agent.step_schedules();
            }
            if out.done {
                break;
            }
            obs = next;
        }
        a1.end_episode()?;
        a2.end_episode()?;
    }

    let q_table = |agent: &Agent| -> Result<QTable> {
        let mut table = [[0.0; N_ACTIONS]; 3];
        for (row, state) in table.iter_mut().zip(STATES) {
            let q = agent.q_values(&state.observation().expect("decision state"))?;
            row.copy_from_slice(&q);
        }
        Ok(table)
    };
    let greedy = |agent: &Agent, state: GameState| -> Result<Action> {
        Action::from_index(agent.greedy_action(&state.observation().expect("decision state"))?)
    };
    let first = greedy(&a1, GameState::Step1)?;
    let second = if first == Action::A {
        GameState::Step2A
    } else {
        GameState::Step2B
    };
    let (s1, s2) = (greedy(&a1, second)?, greedy(&a2, second)?);
    let mut replay = TwoStepGame::new(config.game.clone());
    replay.reset();
    replay.step(first, greedy(&a2, GameState::Step1)?)?;
    let greedy_return = replay.step(s1, s2)?.reward;
    Ok(TwoStepRun {
        seed,
        algorithm: config.algorithm,
        greedy_actions: [first, s1, s2],
        greedy_return,
        q_agent1: q_table(&a1)?,
        q_agent2: q_table(&a2)?,
    })
}

/// Flat summary of a run for `two_step.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepRow {
    pub algorithm: AgentKind,
    pub seed: u64,
    pub first: Action,
    pub second_agent1: Action,
    pub second_agent2: Action,
    pub greedy_return: f64,
}

impl From<&TwoStepRun> for TwoStepRow {
    fn from(run: &TwoStepRun) -> Self {
        let [first, second_agent1, second_agent2] = run.greedy_actions;
        Self {
            algorithm: run.algorithm,
            seed: run.seed,
            first,
            second_agent1,
            second_agent2,
            greedy_return: run.greedy_return,
        }
    }
}

/// Runs every configured seed in parallel. With an output directory,
/// writes `two_step.csv` and the learned values to `q_values.json`.
pub fn run_two_step_seeds(config: &TwoStepConfig, out: Option<&Path>) -> Result<Vec<TwoStepRun>> {
    if config.seeds.is_empty() {
        return Err(Error::config("seed list is empty"));
    }
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| run_two_step(config, seed))
        .collect::<Result<Vec<_>>>()?;
    if let Some(out) = out {
        create_dir(out)?;
        let rows: Vec<TwoStepRow> = runs.iter().map(TwoStepRow::from).collect();
        write_csv(&out.join("two_step.csv"), &rows)?;
        let path = out.join("q_values.json");
        std::fs::write(&path, serde_json::to_string_pretty(&runs)?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(runs)
}
