use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use signal_marl::harness::{
    load_checkpoints, run_baseline_eval, run_eval, run_param_study, run_reward_ablation,
    run_training, run_two_step_seeds, summarize, write_csv, Algorithm, ExperimentConfig,
    StudyParameter, TwoStepConfig,
};
use signal_marl::matrix_game::TwoStepGame;
use signal_marl::traffic::{RewardMode, ScenarioConfig};
use signal_marl::{AgentKind, Error, Result};

#[derive(Parser)]
#[command(
    name = "signal-marl",
    version,
    about = "Train and evaluate independent traffic-signal learners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and evaluate the final greedy policies.
    Train(Common),
    /// Evaluate saved agents, or a fixed-time/SOTL controller, greedily.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory with agent_<i>.json files from a training run.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
    /// Train CIL-DDQN and IDDQN under every reward mode.
    AblateReward(Common),
    /// Sweep the importance decay (d-e) or the leniency decrement (d-l).
    ParamStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: StudyParameter,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Train two learners on the two-step cooperative game.
    TwoStep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    reward_mode: Option<RewardMode>,
    #[arg(long)]
    episodes: Option<u32>,
    /// Seeds as a list (`0,1,2`) or half-open range (`0..5`).
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let bad = |e: std::num::ParseIntError| format!("bad seed list `{s}`: {e}");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (
            a.parse::<u64>().map_err(bad)?,
            b.parse::<u64>().map_err(bad)?,
        );
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(bad))
        .collect::<std::result::Result<_, _>>()
        .map(Seeds)
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(algo) = self.algo {
            config.algorithm = algo;
        }
        if let Some(path) = &self.scenario {
            config.scenario = ScenarioConfig::load(path)?;
        }
        if let Some(mode) = self.reward_mode {
            config.reward_mode = mode;
        }
        if let Some(episodes) = self.episodes {
            config.episodes = episodes;
        }
        if let Some(Seeds(seeds)) = &self.seeds {
            config.seeds = seeds.clone();
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        config.validate()?;
        Ok(config)
    }

    fn two_step(&self) -> Result<TwoStepConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    context: format!("reading {}", path.display()),
                    source: e,
                })?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("two-step config: {e}")))?
            }
            None => TwoStepConfig::default(),
        };
        if let Some(algo) = self.algo {
            config.algorithm = algo.learner().ok_or_else(|| {
                Error::Config(format!(
                    "{algo} does not learn; pick cil-ddqn, iddqn or ldqn"
                ))
            })?;
        }
        if let Some(episodes) = self.episodes {
            config.episodes = episodes;
        }
        if let Some(Seeds(seeds)) = &self.seeds {
            config.seeds = seeds.clone();
        }
        Ok(config)
    }
}

fn train(common: &Common) -> Result<()> {
    let config = common.experiment()?;
    println!("algorithm,reward_mode,seed,travel_time,queue_length,throughput");
    for run in run_training(&config)? {
        let e = &run.eval;
        println!(
            "{},{},{},{:.2},{:.4},{}",
            e.algorithm, e.reward_mode, e.seed, e.travel_time, e.queue_length, e.throughput
        );
    }
    Ok(())
}

fn eval(common: &Common, checkpoints: Option<&Path>) -> Result<()> {
    let config = common.experiment()?;
    let rows = match checkpoints {
        Some(dir) => {
            let agents = load_checkpoints(dir)?;
            let algorithm = Algorithm::from(agents[0].kind);
            let records = run_eval(
                &agents,
                &config.scenario,
                config.reward_mode,
                config.eval_episodes.max(1),
            )?;
            vec![summarize(algorithm, config.reward_mode, 0, &records)]
        }
        None if config.algorithm.learner().is_some() => {
            return Err(Error::Config(
                "evaluating a learner needs --checkpoints".into(),
            ));
        }
        None => config
            .seeds
            .iter()
            .map(|&seed| run_baseline_eval(&config, seed))
            .collect::<Result<Vec<_>>>()?,
    };
    if let Some(out) = &config.output {
        std::fs::create_dir_all(out).map_err(|e| Error::Io {
            context: format!("creating {}", out.display()),
            source: e,
        })?;
        write_csv(&out.join("eval.csv"), &rows)?;
    }
    for r in rows {
        println!(
            "{} {}: travel time {:.2} s, queue {:.4} veh/lane, throughput {}",
            r.algorithm, r.reward_mode, r.travel_time, r.queue_length, r.throughput
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => train(&common),
        Command::Eval {
            common,
            checkpoints,
        } => eval(&common, checkpoints.as_deref()),
        Command::AblateReward(common) => {
            for row in run_reward_ablation(&common.experiment()?)? {
                println!(
                    "{} {}: travel time {:.2} ± {:.2} s over {} seeds",
                    row.algorithm, row.reward_mode, row.travel_time, row.travel_time_std, row.seeds
                );
            }
            Ok(())
        }
        Command::ParamStudy {
            common,
            param,
            values,
        } => {
            for curve in run_param_study(&common.experiment()?, param, &values)? {
                println!(
                    "{param} = {}: final mean reward {:.2}",
                    curve.value, curve.final_mean_reward
                );
            }
            Ok(())
        }
        Command::TwoStep(common) => {
            let config = common.two_step()?;
            let runs = run_two_step_seeds(&config, common.out.as_deref())?;
            let max_payoff = TwoStepGame::new(config.game.clone())
                .equivalent_matrix()
                .max_payoff();
            let best = runs
                .iter()
                .filter(|r| r.greedy_return >= max_payoff)
                .count();
            for r in &runs {
                println!(
                    "seed {}: greedy {:?} -> {}",
                    r.seed, r.greedy_actions, r.greedy_return
                );
            }
            println!(
                "{}: {best}/{} seeds reach the maximal payoff {}",
                AgentKind::name(config.algorithm),
                runs.len(),
                max_payoff
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
