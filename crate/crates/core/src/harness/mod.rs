//! Experiment orchestration: training and evaluation loops, studies,
//! seeding and result files.
//!
//! All result tables are CSV with a header row:
//!
//! | file | columns |
//! |------|---------|
//! | `curve.csv` | `episode, mean_cumulative_reward, throughput, travel_time, queue_length, epsilon, leniency` |
//! | `eval.csv` | `algorithm, reward_mode, seed, episodes, travel_time, queue_length, throughput, cumulative_reward` |
//! | `steps.csv` | `episode, step, intersection, phase, waiting, reward` |
//! | `ablation.csv` | `algorithm, reward_mode, seeds, travel_time, travel_time_std` |
//! | `curve_<value>.csv` | `parameter, value, episode, mean_cumulative_reward` |
//! | `two_step.csv` | `algorithm, seed, first, second_agent1, second_agent2, greedy_return` |

mod config;
mod output;
mod studies;
mod training;
mod two_step;

pub use config::{desk_agent, desk_scenario, Algorithm, ExperimentConfig};
pub use output::{write_csv, write_manifest, VERSION_STAMP};
pub use studies::{
    run_param_study, run_reward_ablation, AblationRow, CurvePoint, StudyCurve, StudyParameter,
};
pub use training::{
    load_checkpoints, run_baseline_eval, run_eval, run_training, save_checkpoints, seed_dir,
    summarize, EpisodeRecord, EvalRow, MetricsRecord, SeedRun, StepRecord,
};
pub use two_step::{
    run_two_step, run_two_step_seeds, QTable, TwoStepConfig, TwoStepRow, TwoStepRun,
};

/// Independent seed for worker `index` of run `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
