//! Two-step cooperative matrix game and its exhaustive analysis.
//!
//! In the first step agent 1 picks which 2x2 game is played next (`A` leads
//! to state 2A, `B` to state 2B); agent 2's first action has no effect. In
//! the second step both agents act and share the payoff of that state's
//! matrix. Folding both decisions into a combined strategy gives a 4x4
//! team game whose rows are agent 1's `(first, second)` actions and whose
//! columns are agent 2's `(action in 2A, action in 2B)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of non-terminal states, also the observation length.
pub const OBS_DIM: usize = 3;
pub const N_ACTIONS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    A,
    B,
}

impl Action {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Action::A),
            1 => Ok(Action::B),
            _ => Err(Error::config(format!(
                "two-step game action {i} is not A or B"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameState {
    Step1,
    Step2A,
    Step2B,
    Terminal,
}

impl GameState {
    /// One-hot observation; `None` for the terminal state.
    pub fn observation(self) -> Option<Vec<f64>> {
        let slot = match self {
            GameState::Step1 => 0,
            GameState::Step2A => 1,
            GameState::Step2B => 2,
            GameState::Terminal => return None,
        };
        let mut obs = vec![0.0; OBS_DIM];
        obs[slot] = 1.0;
        Some(obs)
    }
}

/// Combined strategy labels, in row/column index order.
pub const STRATEGY_LABELS: [&str; 4] = ["AA", "AB", "BA", "BB"];

pub type Payoff = [[f64; 2]; 2];

/// Payoff matrices of the two second-step states, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub payoff_2a: Payoff,
    pub payoff_2b: Payoff,
}

impl Default for GameSpec {
    fn default() -> Self {
        Self {
            payoff_2a: [[7.0, 7.0], [7.0, 7.0]],
            payoff_2b: [[0.0, 1.0], [1.0, 8.0]],
        }
    }
}

impl GameSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("game file: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// Per-agent next observations, or `None` once the game has ended.
    pub observations: Option<[Vec<f64>; 2]>,
    /// Shared team reward.
    pub reward: f64,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepGame {
    spec: GameSpec,
    state: GameState,
}

impl TwoStepGame {
    pub fn new(spec: GameSpec) -> Self {
        Self {
            spec,
            state: GameState::Step1,
        }
    }

    pub fn canonical() -> Self {
        Self::new(GameSpec::default())
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn state(&self) -> GameState {
        self.state
    }

    pub fn reset(&mut self) -> [Vec<f64>; 2] {
        self.state = GameState::Step1;
        let obs = self.state.observation().expect("step 1 is not terminal");
        [obs.clone(), obs]
    }

    pub fn step(&mut self, a1: Action, a2: Action) -> Result<StepOutcome> {
        let (next, reward) = match self.state {
            GameState::Step1 => match a1 {
                Action::A => (GameState::Step2A, 0.0),
                Action::B => (GameState::Step2B, 0.0),
            },
            GameState::Step2A => (
                GameState::Terminal,
                self.spec.payoff_2a[a1.index()][a2.index()],
            ),
            GameState::Step2B => (
                GameState::Terminal,
                self.spec.payoff_2b[a1.index()][a2.index()],
            ),
            GameState::Terminal => {
                return Err(Error::State("two-step game already terminated".into()));
            }
        };
        self.state = next;
        let observations = next.observation().map(|o| [o.clone(), o]);
        Ok(StepOutcome {
            observations,
            reward,
            done: next == GameState::Terminal,
        })
    }

    /// Folds the two decisions into the 4x4 combined-strategy team game.
    pub fn equivalent_matrix(&self) -> EquivalentMatrix {
        let mut payoff = [[0.0; 4]; 4];
        for (row, cells) in payoff.iter_mut().enumerate() {
            let (first, second) = (row / 2, row % 2);
            for (col, cell) in cells.iter_mut().enumerate() {
                let (in_2a, in_2b) = (col / 2, col % 2);
                *cell = if first == 0 {
                    self.spec.payoff_2a[second][in_2a]
                } else {
                    self.spec.payoff_2b[second][in_2b]
                };
            }
        }
        EquivalentMatrix { payoff }
    }

    /// Agent 1 plays its combined strategy `row`, agent 2 its combined
    /// strategy `col`; returns the episode's shared return.
    pub fn play(&self, row: usize, col: usize) -> Result<f64> {
        let mut game = Self::new(self.spec.clone());
        game.reset();
        let first = Action::from_index(row / 2)?;
        game.step(first, Action::A)?;
        let a2 = match game.state {
            GameState::Step2A => col / 2,
            _ => col % 2,
        };
        Ok(game
            .step(Action::from_index(row % 2)?, Action::from_index(a2)?)?
            .reward)
    }
}

/// Team payoff over combined strategies: `payoff[row][col]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalentMatrix {
    pub payoff: [[f64; 4]; 4],
}

impl EquivalentMatrix {
    pub fn max_payoff(&self) -> f64 {
        self.payoff
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl fmt::Display for EquivalentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "    ")?;
        for label in STRATEGY_LABELS {
            write!(f, "{label:>6}")?;
        }
        writeln!(f)?;
        for (label, row) in STRATEGY_LABELS.iter().zip(&self.payoff) {
            write!(f, "{label:>4}")?;
            for v in row {
                write!(f, "{v:>6}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A joint pure strategy `(row, col)`.
pub type Cell = (usize, usize);

/// Pure Nash equilibria: cells where neither player gains by deviating alone.
pub fn nash_equilibria(matrix: &EquivalentMatrix) -> Vec<Cell> {
    let m = &matrix.payoff;
    let mut out = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            let v = m[r][c];
            let row_player_stays = (0..4).all(|r2| m[r2][c] <= v);
            let col_player_stays = (0..4).all(|c2| m[r][c2] <= v);
            if row_player_stays && col_player_stays {
                out.push((r, c));
            }
        }
    }
    out
}

/// Pareto-optimal equilibria. Both players share one payoff, so these are
/// the equilibria with the largest payoff.
pub fn pareto_optimal_nes(matrix: &EquivalentMatrix, nes: &[Cell]) -> Vec<Cell> {
    let best = nes
        .iter()
        .map(|&(r, c)| matrix.payoff[r][c])
        .fold(f64::NEG_INFINITY, f64::max);
    nes.iter()
        .copied()
        .filter(|&(r, c)| matrix.payoff[r][c] == best)
        .collect()
}

/// Theoretical per-agent values over combined strategies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyValues {
    pub agent1: [f64; 4],
    pub agent2: [f64; 4],
}

impl StrategyValues {
    /// Joint strategy the two greedy learners would play (lowest index on
    /// ties).
    pub fn greedy_joint(&self) -> Cell {
        (
            crate::agents::argmax(&self.agent1),
            crate::agents::argmax(&self.agent2),
        )
    }
}

/// Values learned from uniformly explored experience with equal weights:
/// agent 1 sees row averages, agent 2 column averages.
pub fn expected_q_uniform(game: &TwoStepGame) -> StrategyValues {
    let m = game.equivalent_matrix().payoff;
    let mut values = StrategyValues {
        agent1: [0.0; 4],
        agent2: [0.0; 4],
    };
    for i in 0..4 {
        values.agent1[i] = m[i].iter().sum::<f64>() / 4.0;
        values.agent2[i] = (0..4).map(|r| m[r][i]).sum::<f64>() / 4.0;
    }
    values
}

/// The fully lenient limit: an agent that ignores every below-average
/// outcome values each strategy by the best response of its teammate.
pub fn expected_q_lenient(game: &TwoStepGame) -> StrategyValues {
    let m = game.equivalent_matrix().payoff;
    let mut values = StrategyValues {
        agent1: [0.0; 4],
        agent2: [0.0; 4],
    };
    for i in 0..4 {
        values.agent1[i] = m[i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        values.agent2[i] = (0..4).map(|r| m[r][i]).fold(f64::NEG_INFINITY, f64::max);
    }
    values
}
