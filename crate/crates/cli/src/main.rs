use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use glcb::harness::{self, RunConfig, SummaryRow};

#[derive(Parser)]
#[command(name = "glcb", version, about = "Gated linear contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy on every task for every seed.
    Run {
        /// Run config (TOML, or JSON with a .json extension).
        #[arg(long)]
        config: PathBuf,
        /// Seeds as `a..b`, `a..=b` or `1,2,3`; overrides the config.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute summary.csv and regret.csv for a run directory.
    Summarize { dir: PathBuf },
    /// Rank algorithms per task across one or more summary files.
    Rank {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<16} {:<16} {:>5} {:>12} {:>9} {:>4}",
        "algorithm", "task", "seeds", "mean", "stderr", "rank"
    );
    for r in rows {
        println!(
            "{:<16} {:<16} {:>5} {:>12.2} {:>9.2} {:>4}",
            r.algorithm, r.task, r.seeds, r.mean_cum_reward, r.stderr, r.rank
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let mut cfg = RunConfig::load(&config).with_context(|| format!("loading config {}", config.display()))?;
            if let Some(s) = seeds {
                cfg.seeds = harness::parse_seeds(&s)?;
            }
            if let Some(dir) = out {
                cfg.out = dir;
            }
            cfg.validate()?;
            let output = harness::run(&cfg)?;
            print_summary(&output.summary);
            println!("wrote {}", output.dir.display());
        }
        Command::Summarize { dir } => {
            let rows = harness::summarize(&dir).with_context(|| format!("summarizing {}", dir.display()))?;
            print_summary(&rows);
        }
        Command::Rank { summaries } => {
            let mut rows = Vec::new();
            for path in &summaries {
                rows.extend(harness::read_summary(path).with_context(|| format!("reading {}", path.display()))?);
            }
            print!("{}", harness::rank_table(&rows)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
