use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::derive_seed;
use super::output::{create_dir, write_csv, write_manifest, CsvLog};
use crate::agents::{Agent, AgentCheckpoint};
use crate::baselines::{fixedtime_action, Sotl};
use crate::error::{Error, Result};
use crate::traffic::{Env, EpisodeMetrics, RewardMode, ScenarioConfig, N_PHASES, OBS_DIM};

/// Metrics of one episode plus the mean over agents of each agent's
/// cumulative reward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub throughput: usize,
    pub travel_time: f64,
    pub queue_length: f64,
    pub cumulative_reward: f64,
}

/// One row of a training curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u32,
    pub mean_cumulative_reward: f64,
    pub throughput: usize,
    pub travel_time: f64,
    pub queue_length: f64,
    pub epsilon: f64,
    pub leniency: f64,
}

/// One row of a step log: what an intersection did and received.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: u32,
    pub step: u32,
    pub intersection: usize,
    pub phase: usize,
    pub waiting: usize,
    pub reward: f64,
}

/// Greedy evaluation of one seed averaged over episodes; one row of a
/// results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub algorithm: Algorithm,
    pub reward_mode: RewardMode,
    pub seed: u64,
    pub episodes: u32,
    pub travel_time: f64,
    pub queue_length: f64,
    pub throughput: f64,
    pub cumulative_reward: f64,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub curve: Vec<EpisodeRecord>,
    pub eval: EvalRow,
    /// Final agents, empty for the non-learning controllers.
    pub checkpoints: Vec<AgentCheckpoint>,
    pub dir: Option<PathBuf>,
}

/// How the signals are driven during an episode.
enum Controller {
    Learners(Vec<Agent>),
    Fixed([u32; N_PHASES]),
    Sotl(Sotl),
}

impl Controller {
    fn new(config: &ExperimentConfig, env: &Env, seed: u64) -> Result<Self> {
        Ok(match config.algorithm.learner() {
            Some(kind) => {
                let agent_config = config.resolved_agent();
                let agents = (0..env.n_intersections())
                    .map(|i| {
                        Agent::new(
                            kind,
                            agent_config.clone(),
                            OBS_DIM,
                            N_PHASES,
                            derive_seed(seed, i as u64),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Controller::Learners(agents)
            }
            None if config.algorithm == Algorithm::Fixedtime => {
                fixedtime_action(0, &config.fixedtime.dwell)?;
                Controller::Fixed(config.fixedtime.dwell)
            }
            None => Controller::Sotl(Sotl::new(config.sotl.clone(), env.n_intersections())?),
        })
    }

    fn begin_episode(&mut self) {
        if let Controller::Sotl(sotl) = self {
            sotl.reset();
        }
    }

    fn act(&mut self, env: &Env, obs: &[Vec<f64>], explore: bool) -> Result<Vec<usize>> {
        match self {
            Controller::Learners(agents) => agents
                .iter_mut()
                .zip(obs)
                .map(|(agent, o)| {
                    if explore {
                        agent.select_action(o)
                    } else {
                        agent.greedy_action(o)
                    }
                })
                .collect(),
            Controller::Fixed(dwell) => {
                let phase = fixedtime_action(env.clock(), dwell)?;
                Ok(vec![phase; env.n_intersections()])
            }
            Controller::Sotl(sotl) => Ok(sotl.act(env)),
        }
    }

    fn schedules(&self) -> (f64, f64) {
        match self {
            Controller::Learners(agents) if !agents.is_empty() => {
                (agents[0].epsilon(), agents[0].leniency())
            }
            _ => (0.0, 0.0),
        }
    }
}

/// Runs one episode. With `learn` set, learners explore, store every
/// transition and train after each step.
fn run_episode(
    env: &mut Env,
    controller: &mut Controller,
    learn: bool,
    episode: u32,
    mut log: Option<&mut CsvLog<StepRecord>>,
) -> Result<MetricsRecord> {
    let mut obs = env.reset();
    controller.begin_episode();
    let mut cumulative = vec![0.0; env.n_intersections()];
    while !env.is_done() {
        let step = env.clock();
        let actions = controller.act(env, &obs, learn)?;
        let out = env.step(&actions)?;
        for (c, r) in cumulative.iter_mut().zip(&out.rewards) {
            *c += r;
        }
        if let Some(log) = log.as_deref_mut() {
            for (i, (&phase, &reward)) in actions.iter().zip(&out.rewards).enumerate() {
                log.write(&StepRecord {
                    episode,
                    step,
                    intersection: i,
                    phase,
                    waiting: env.lane_waits(i).iter().sum(),
                    reward,
                })?;
            }
        }
        if let (true, Controller::Learners(agents)) = (learn, &mut *controller) {
            // Episodes end at a time limit, not in a terminal state, so
            // targets always bootstrap.
            for (i, agent) in agents.iter_mut().enumerate() {
                agent.observe(
                    obs[i].clone(),
                    actions[i],
                    out.rewards[i],
                    out.observations[i].clone(),
                    false,
                )?;
                agent.train()?;
                agent.step_schedules();
            }
        }
        obs = out.observations;
    }
    if let (true, Controller::Learners(agents)) = (learn, &mut *controller) {
        for agent in agents.iter_mut() {
            agent.end_episode()?;
        }
    }
    let EpisodeMetrics {
        throughput,
        travel_time,
        queue_length,
        ..
    } = env.metrics()?;
    Ok(MetricsRecord {
        throughput,
        travel_time,
        queue_length,
        cumulative_reward: cumulative.iter().sum::<f64>() / cumulative.len() as f64,
    })
}

fn evaluate(
    env: &mut Env,
    controller: &mut Controller,
    episodes: u32,
) -> Result<Vec<MetricsRecord>> {
    if episodes == 0 {
        return Err(Error::config("evaluation needs at least one episode"));
    }
    (0..episodes)
        .map(|e| run_episode(env, controller, false, e, None))
        .collect()
}

/// Averages evaluation episodes into one table row.
pub fn summarize(
    algorithm: Algorithm,
    reward_mode: RewardMode,
    seed: u64,
    records: &[MetricsRecord],
) -> EvalRow {
    let n = records.len() as f64;
    let mean = |f: fn(&MetricsRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    EvalRow {
        algorithm,
        reward_mode,
        seed,
        episodes: records.len() as u32,
        travel_time: mean(|r| r.travel_time),
        queue_length: mean(|r| r.queue_length),
        throughput: mean(|r| r.throughput as f64),
        cumulative_reward: mean(|r| r.cumulative_reward),
    }
}

/// Directory holding the files of one seed.
pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn train_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let mut env = Env::new(config.scenario.clone())?.with_reward_mode(config.reward_mode);
    let mut controller = Controller::new(config, &env, seed)?;
    let dir = match &config.output {
        Some(out) => {
            let dir = seed_dir(out, seed);
            create_dir(&dir)?;
            write_manifest(&dir.join("manifest.toml"), config, Some(seed))?;
            Some(dir)
        }
        None => None,
    };
    let mut curve_log = dir
        .as_ref()
        .map(|d| CsvLog::create(&d.join("curve.csv")))
        .transpose()?;
    let mut step_log = match (&dir, config.log_steps) {
        (Some(d), true) => Some(CsvLog::create(&d.join("steps.csv"))?),
        _ => None,
    };

    let mut curve = Vec::with_capacity(config.episodes as usize);
    for episode in 0..config.episodes {
        let metrics = run_episode(&mut env, &mut controller, true, episode, step_log.as_mut())
            .map_err(|e| Error::State(format!("seed {seed}, episode {episode}: {e}")))?;
        let (epsilon, leniency) = controller.schedules();
        let record = EpisodeRecord {
            episode,
            mean_cumulative_reward: metrics.cumulative_reward,
            throughput: metrics.throughput,
            travel_time: metrics.travel_time,
            queue_length: metrics.queue_length,
            epsilon,
            leniency,
        };
        if let Some(log) = curve_log.as_mut() {
            log.write(&record)?;
            log.flush()?;
        }
        curve.push(record);
    }
    if let Some(log) = step_log.as_mut() {
        log.flush()?;
    }

    let records = evaluate(&mut env, &mut controller, config.eval_episodes.max(1))?;
    let eval = summarize(config.algorithm, config.reward_mode, seed, &records);
    let checkpoints = match &controller {
        Controller::Learners(agents) => agents.iter().map(Agent::checkpoint).collect(),
        _ => Vec::new(),
    };
    if let Some(dir) = &dir {
        write_csv(&dir.join("eval.csv"), std::slice::from_ref(&eval))?;
        if !checkpoints.is_empty() {
            save_checkpoints(&dir.join("checkpoints"), &checkpoints)?;
        }
    }
    Ok(SeedRun {
        seed,
        curve,
        eval,
        checkpoints,
        dir,
    })
}

/// Trains one independent run per seed (in parallel) and evaluates the
/// final greedy policies. With an output directory, every seed gets its
/// own `seed_<n>/` with `manifest.toml`, `curve.csv`, `eval.csv`,
/// optional `steps.csv` and `checkpoints/`, and the directory receives an
/// `eval.csv` with one row per seed.
pub fn run_training(config: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    config.validate()?;
    if let Some(out) = &config.output {
        create_dir(out)?;
        write_manifest(&out.join("manifest.toml"), config, None)?;
    }
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| train_seed(config, seed))
        .collect::<Result<Vec<_>>>()?;
    if let Some(out) = &config.output {
        let rows: Vec<EvalRow> = runs.iter().map(|r| r.eval.clone()).collect();
        write_csv(&out.join("eval.csv"), &rows)?;
    }
    Ok(runs)
}

pub fn save_checkpoints(dir: &Path, checkpoints: &[AgentCheckpoint]) -> Result<()> {
    create_dir(dir)?;
    for (i, ckpt) in checkpoints.iter().enumerate() {
        let path = dir.join(format!("agent_{i}.json"));
        std::fs::write(&path, ckpt.to_json()?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(())
}

/// Loads `agent_0.json`, `agent_1.json`, ... until the first missing index.
pub fn load_checkpoints(dir: &Path) -> Result<Vec<AgentCheckpoint>> {
    let mut checkpoints = Vec::new();
    loop {
        let path = dir.join(format!("agent_{}.json", checkpoints.len()));
        if !path.exists() {
            break;
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        checkpoints.push(AgentCheckpoint::from_json(&text)?);
    }
    if checkpoints.is_empty() {
        return Err(Error::Checkpoint(format!(
            "no agent checkpoints in {}",
            dir.display()
        )));
    }
    Ok(checkpoints)
}

/// Greedy evaluation of saved agents on a scenario. No learning happens.
pub fn run_eval(
    checkpoints: &[AgentCheckpoint],
    scenario: &ScenarioConfig,
    reward_mode: RewardMode,
    episodes: u32,
) -> Result<Vec<MetricsRecord>> {
    let mut env = Env::new(scenario.clone())?.with_reward_mode(reward_mode);
    if checkpoints.len() != env.n_intersections() {
        return Err(Error::Dimension {
            what: "agent checkpoints per intersection",
            expected: env.n_intersections(),
            actual: checkpoints.len(),
        });
    }
    let agents = checkpoints
        .iter()
        .map(|c| {
            let agent = Agent::from_checkpoint(c.clone())?;
            let (inputs, outputs) = (agent.online().input_dim(), agent.online().output_dim());
            if inputs != OBS_DIM {
                return Err(Error::Dimension {
                    what: "checkpoint observation size",
                    expected: OBS_DIM,
                    actual: inputs,
                });
            }
            if outputs != N_PHASES {
                return Err(Error::Dimension {
                    what: "checkpoint action count",
                    expected: N_PHASES,
                    actual: outputs,
                });
            }
            Ok(agent)
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate(&mut env, &mut Controller::Learners(agents), episodes)
}

/// Greedy evaluation of any algorithm's untrained controller, e.g. the
/// fixed cycle or SOTL, under `config`'s scenario.
pub fn run_baseline_eval(config: &ExperimentConfig, seed: u64) -> Result<EvalRow> {
    config.validate()?;
    let mut env = Env::new(config.scenario.clone())?.with_reward_mode(config.reward_mode);
    let mut controller = Controller::new(config, &env, seed)?;
    let records = evaluate(&mut env, &mut controller, config.eval_episodes.max(1))?;
    Ok(summarize(
        config.algorithm,
        config.reward_mode,
        seed,
        &records,
    ))
}
