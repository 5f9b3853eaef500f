use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rulegen::{audit, gen, run, score, write_reports, CliError, RunConfig, RunDir, RunOptions};

#[derive(Parser)]
#[command(
    name = "rulegen",
    version,
    about = "Compositionality of rule programs written by language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the datasets of a config without querying any model.
    Gen(ConfigArgs),
    /// Run every cell of a config and write records and reports.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Serve every call from the cache.
        #[arg(long)]
        offline: bool,
        /// Worker threads (default: sum of the models' in-flight ceilings).
        #[arg(short, long)]
        jobs: Option<usize>,
    },
    /// Re-score a run directory from its cache, without network access.
    Score {
        #[arg(short, long)]
        run: PathBuf,
        #[arg(short, long)]
        jobs: Option<usize>,
    },
    /// Rebuild reports from the stored records.
    Report {
        #[arg(short, long)]
        run: PathBuf,
    },
    /// Print how one record was scored.
    Audit {
        #[arg(short, long)]
        run: PathBuf,
        record_id: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => args.load().and_then(|cfg| gen(&cfg)).map(|m| {
            println!("datasets written for {} setting(s)", m.settings.len());
            false
        }),
        Command::Run {
            config,
            offline,
            jobs,
        } => config.load().and_then(|cfg| {
            let opts = RunOptions {
                offline: offline.then_some(true),
                jobs,
            };
            run(&cfg, &opts).map(|o| summarize(&o, &cfg.output_dir))
        }),
        Command::Score { run, jobs } => score(
            &RunDir::new(&run),
            &RunOptions {
                offline: Some(true),
                jobs,
            },
        )
        .map(|o| summarize(&o, &run)),
        Command::Report { run } => write_reports(&RunDir::new(&run)).map(|r| {
            print!("{}", r.summary_txt);
            false
        }),
        Command::Audit { run, record_id } => audit(&RunDir::new(&run), &record_id).map(|t| {
            print!("{t}");
            false
        }),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Prints a one-screen summary; returns whether a hard failure occurred.
fn summarize(o: &rulegen::RunOutcome, dir: &std::path::Path) -> bool {
    let m = &o.manifest;
    println!(
        "{} cells, {} records under {}",
        m.cells,
        o.records.len(),
        dir.display()
    );
    if let Some(c) = m.cache {
        println!(
            "cache: {} hits, {} misses, {} writes",
            c.hits, c.misses, c.writes
        );
    }
    for (mode, n) in &m.failure_modes {
        println!("  {mode}: {n}");
    }
    if m.hard_failure {
        eprintln!(
            "{} cell(s) failed at the provider; see reports/failures.txt",
            m.provider_failures.len()
        );
    }
    m.hard_failure
}
