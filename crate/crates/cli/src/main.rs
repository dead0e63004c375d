//! Command-line experiment runner.
//!
//! Verbs: `run` executes every cell of a configured experiment, `report`
//! aggregates a finished run into CSV matrices, `validate-config` checks a
//! config without doing any work, and `synth` writes synthetic credit
//! datasets to disk. The output directory and parallelism degree can also
//! come from the CIEX_OUT and CIEX_JOBS environment variables; explicit
//! flags win.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ciex_core::data::{ColumnData, Dataset};
use ciex_core::experiment::{report, run_experiment, ExperimentConfig};
use ciex_core::synth::{synth_credit, SynthSpec};

#[derive(Parser)]
#[command(name = "ciex", about = "Reject-inference experiment runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config and CIEX_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent cells; overrides CIEX_JOBS. Defaults to the CPU count.
    #[arg(long)]
    jobs: Option<usize>,
    /// Added to every seed in the config's seed list.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    n_accept: usize,
    #[arg(long, default_value_t = 10000)]
    n_reject: usize,
    #[arg(long, default_value_t = 0.5)]
    bias: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving accepts.csv, rejects.csv, hidden.csv and the
    /// schema files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file.
    Run(RunArgs),
    /// Aggregate a run directory into report CSVs.
    Report {
        /// Run directory (the `run` output).
        #[arg(long)]
        dir: PathBuf,
    },
    /// Parse and validate a config file, reporting problems.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit synthetic credit datasets as CSV files.
    Synth(SynthArgs),
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os("CIEX_OUT").map(PathBuf::from)
}

fn env_jobs() -> Option<usize> {
    std::env::var("CIEX_JOBS").ok().and_then(|v| v.parse().ok())
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(out) = args.out.or_else(env_out) {
        config.output_dir = out;
    }
    if args.seed_offset != 0 {
        for seed in &mut config.seeds {
            *seed = seed.wrapping_add(args.seed_offset);
        }
    }
    config.validate().context("invalid config")?;
    let jobs = args
        .jobs
        .or_else(env_jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let dir = run_experiment(&config, jobs)?;
    println!("run complete: {}", dir.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let out = args
        .out
        .or_else(env_out)
        .unwrap_or_else(|| PathBuf::from("synth"));
    std::fs::create_dir_all(&out)?;
    let spec = SynthSpec::new(args.n_accept, args.n_reject, args.bias, args.seed);
    let data = synth_credit(&spec)?;

    let to_csv = |ds: &Dataset, with_label: bool| -> String {
        let mut header: Vec<String> = ds.columns().iter().map(|c| c.name.clone()).collect();
        if with_label {
            header.push("target".into());
        }
        let mut text = header.join(",");
        text.push('\n');
        for i in 0..ds.rows() {
            let mut fields: Vec<String> = ds
                .columns()
                .iter()
                .enumerate()
                .map(|(j, _)| match ds.column_data(j) {
                    ColumnData::Numeric(v) => format!("{}", v[i]),
                    ColumnData::Categorical(v) => v[i].clone().unwrap_or_default(),
                })
                .collect();
            if with_label {
                fields.push(format!("{}", ds.labels().unwrap()[i]));
            }
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        text
    };

    std::fs::write(out.join("accepts.csv"), to_csv(&data.accepted, true))?;
    std::fs::write(out.join("rejects.csv"), to_csv(&data.rejects, false))?;
    std::fs::write(out.join("hidden.csv"), to_csv(&data.hidden_truth, true))?;
    let schema: String = data
        .accepted
        .columns()
        .iter()
        .map(|c| format!("{},numeric\n", c.name))
        .collect();
    std::fs::write(out.join("schema.txt"), schema)?;
    println!(
        "wrote {} accepted and {} rejected rows to {}",
        args.n_accept,
        args.n_reject,
        out.display()
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Report { dir } => {
            let report_dir = report(&dir)?;
            println!("report written: {}", report_dir.display());
            Ok(())
        }
        Command::ValidateConfig { config } => {
            let parsed = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Err(e) = parsed.validate() {
                bail!("invalid config: {e}");
            }
            println!(
                "config ok: {} methods, {} conditions, {} seeds",
                parsed.methods.len(),
                parsed.conditions().len(),
                parsed.seeds.len()
            );
            Ok(())
        }
        Command::Synth(args) => cmd_synth(args),
    }
}
