//! Experiment runner: policy × task × seed grids, per-step logs, summaries
//! and rank tables.
//!
//! Output layout under the run directory:
//!
//! ```text
//! manifest.json
//! summary.csv                      algorithm,task,seeds,mean_cum_reward,stderr,rank
//! regret.csv                       algorithm,task,t,mean_regret,stderr
//! <algorithm>/<task>/seed-<n>.csv  seed,t,action,reward,cum_reward,optimal_reward
//! ```

mod config;
mod runner;
mod summary;

pub use config::{
    parse_seeds, GlcbParams, LinearTsParams, ModeName, PolicySpec, RunConfig, UniformParams, DEFAULT_SEED_COUNT,
};
pub use runner::{
    build_policy, execute, prepare, read_steps, run, run_episode, step_file, write_steps, Episode, LoadedTask,
    Manifest, RunOutput, StepRecord, MANIFEST_FILE,
};
pub use summary::{
    assign_ranks, mean_stderr, rank_table, read_summary, summarize, write_summary, RankTable, RegretPoint, SummaryRow,
    REGRET_FILE, SUMMARY_FILE,
};
