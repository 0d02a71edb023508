use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use maskdict::TrainConfig;
use maskdict_cli::commands::{self, Theorem};
use maskdict_cli::config::{self, ExperimentConfig, GenConfig};
use maskdict_cli::error::{CliError, CliResult, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY_FAILED};

#[derive(Parser)]
#[command(name = "maskdict", version, about = "Sparse dictionary learning experiments")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, env = "MASKDICT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoremArg {
    Overfit,
    Masking,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Gen {
        /// Dataset configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one dictionary on a dataset file.
    Train {
        /// Dataset file written by `gen`.
        #[arg(long)]
        dataset: PathBuf,
        /// Training configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the training seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a multi-seed sweep from a config file or a named preset.
    Sweep {
        /// Experiment configuration (JSON).
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// scale_overrealization, scale_all or noise_sweep.
        #[arg(long)]
        preset: Option<String>,
        /// Use the full-size preset (several hours of compute).
        #[arg(long, requires = "preset")]
        paper_scale: bool,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check one of the theoretical claims numerically.
    Verify {
        #[arg(value_enum)]
        theorem: TheoremArg,
        /// Verification parameters (JSON); defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Treat unmet preconditions as failures.
        #[arg(long)]
        strict: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report recovery error, coherence and RIP constants of saved matrices.
    Metrics {
        /// Reference dictionary: dataset file, run file or matrix JSON.
        #[arg(long)]
        a: PathBuf,
        /// Learned dictionary: dataset file, run file or matrix JSON.
        #[arg(long)]
        b: PathBuf,
        /// RIP order.
        #[arg(long, default_value_t = 2)]
        s: usize,
        /// Supports examined per RIP estimate.
        #[arg(long, default_value_t = 10_000)]
        rip_budget: u64,
        /// Seed for sampled RIP supports.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write metrics.json to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Gen { config, seed, out } => {
            let cfg: GenConfig = config::read_json(&config)?;
            let path = commands::cmd_gen(cfg, seed, &out)?;
            println!("{}", path.display());
        }
        Command::Train {
            dataset,
            config,
            seed,
            out,
        } => {
            let cfg: TrainConfig = config::read_json(&config)?;
            let run = commands::cmd_train(&dataset, cfg, seed, &out)?;
            println!(
                "final d_r_cosine {} d_r_euclidean {} loss {}",
                run.result.final_d_r_cosine(),
                run.result.final_d_r_euclidean(),
                run.result.final_loss()
            );
        }
        Command::Sweep {
            config,
            preset,
            paper_scale,
            seed,
            out,
        } => {
            let mut cfg: ExperimentConfig = match (config, preset) {
                (Some(path), _) => config::read_json(&path)?,
                (None, Some(name)) => config::preset(&name, paper_scale)?,
                (None, None) => return Err(CliError::config("either --config or --preset is required")),
            };
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let result = commands::cmd_sweep(&cfg, cli.threads, &out)?;
            for a in &result.aggregates {
                println!(
                    "{} {} {}: d_r_cosine {:.5} ± {:.5} (n = {})",
                    a.axis_value,
                    a.algorithm.as_str(),
                    a.init.as_str(),
                    a.final_d_r_cosine.mean,
                    a.final_d_r_cosine.std,
                    a.count
                );
            }
        }
        Command::Verify {
            theorem,
            config,
            seed,
            strict,
            out,
        } => {
            let theorem = match theorem {
                TheoremArg::Overfit => Theorem::Overfit,
                TheoremArg::Masking => Theorem::Masking,
            };
            let report = commands::cmd_verify(theorem, config.as_deref(), seed, strict, &out)?;
            if let Some(e) = &report.precondition_error {
                eprintln!("precondition not met: {e}");
            }
            println!("{}: {}", theorem.as_str(), if report.passed { "pass" } else { "FAIL" });
            if !report.passed {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
        Command::Metrics {
            a,
            b,
            s,
            rip_budget,
            seed,
            out,
        } => {
            let report = commands::cmd_metrics(&a, &b, s, rip_budget, seed, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
