use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csrminer::pipeline::{
    cmd_clean, cmd_evaluate, cmd_run, cmd_score, cmd_sensitivity, cmd_synth, cmd_train, RunConfig,
    StageError, CONFIG_ENV,
};
use csrminer::scoring::EvaluationKind;
use csrminer::Error;

/// Call-center agent performance mining.
///
/// Settings come from command-line flags first, then the config file
/// (--config or $CSRMINER_CONFIG), then built-in defaults.
#[derive(Parser, Debug)]
#[command(name = "csrminer", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML config file
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed for every random stream
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Quality column to predict: customer-service (cs) or business-need (bn)
    #[arg(long, global = true)]
    target: Option<EvaluationKind>,
    /// Comma-separated model kinds, e.g. linear,bp,bp/cg,pnn,cart,hybrid,svm
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Run work items one at a time
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with planted effects
    Synth {
        /// Number of records (defaults to the published census size)
        #[arg(long)]
        n: Option<usize>,
        /// Ignore any [synth] table and use the published census for --target
        #[arg(long)]
        paper_defaults: bool,
    },
    /// Turn per-call question scores into monthly scores and categories
    Score { input: PathBuf },
    /// Clean and scale a record CSV
    Clean { input: PathBuf },
    /// Train every configured model for every retained class
    Train { input: PathBuf },
    /// Per-class accuracy of every configured model
    Evaluate { input: PathBuf },
    /// Rank inputs by the error their removal causes
    Sensitivity { input: PathBuf },
    /// Everything: clean, train, evaluate, sensitivity, manifest
    Run {
        /// Record CSV; generated from the config when omitted
        input: Option<PathBuf>,
    },
}

fn resolve(global: &Global) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(global.config.as_deref())?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.out = out.clone();
    }
    if let Some(target) = global.target {
        cfg.target = target;
    }
    if let Some(models) = &global.models {
        cfg.models = models.clone();
    }
    if global.sequential {
        cfg.execution = csrminer::Execution::Sequential;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage_error() {
        1
    } else if e.is_data_error() {
        2
    } else {
        3
    }
}

fn execute(cli: Cli) -> Result<(), StageError> {
    let mut cfg = resolve(&cli.global).map_err(|source| StageError {
        stage: "config",
        source,
    })?;
    let with_input = |cfg: &mut RunConfig, input: PathBuf| cfg.input = Some(input);
    match cli.command {
        Command::Synth { n, paper_defaults } => {
            if paper_defaults {
                cfg.synth = None;
            }
            let out = cmd_synth(&cfg, n)?;
            println!("wrote {} records to {}", out.records, out.csv.display());
        }
        Command::Score { input } => {
            with_input(&mut cfg, input);
            let (months, _) = cmd_score(&cfg)?;
            println!(
                "scored {} agent-months into {}",
                months.len(),
                cfg.out.join("scores.csv").display()
            );
        }
        Command::Clean { input } => {
            with_input(&mut cfg, input);
            let out = cmd_clean(&cfg)?;
            println!(
                "kept {} records, rejected {}",
                out.dataset.len(),
                out.rejected
            );
            for (class, n) in &out.dataset.class_census {
                println!("  {:<12} {n}", class.name());
            }
        }
        Command::Train { input } => {
            with_input(&mut cfg, input);
            let cleaned = cmd_clean(&cfg)?;
            let artifacts = cmd_train(&cfg, &cleaned.dataset)?;
            print!("{artifacts}");
        }
        Command::Evaluate { input } => {
            with_input(&mut cfg, input);
            let cleaned = cmd_clean(&cfg)?;
            cmd_evaluate(&cfg, &cleaned.dataset)?;
            let text = std::fs::read_to_string(cfg.out.join("evaluation.txt")).map_err(|e| {
                StageError {
                    stage: "evaluate",
                    source: Error::Io {
                        path: cfg.out.join("evaluation.txt"),
                        source: e,
                    },
                }
            })?;
            print!("{text}");
        }
        Command::Sensitivity { input } => {
            with_input(&mut cfg, input);
            let cleaned = cmd_clean(&cfg)?;
            let (grid, _) = cmd_sensitivity(&cfg, &cleaned.dataset)?;
            print!("{}", grid.to_text("Ranking of the Inputs (importance)"));
        }
        Command::Run { input } => {
            if let Some(input) = input {
                with_input(&mut cfg, input);
            }
            let manifest = cmd_run(&cfg)?;
            println!(
                "{} records, {} rejected, {} artifacts in {} (config {})",
                manifest.records,
                manifest.rejected,
                manifest.artifacts.len() + 1,
                cfg.out.display(),
                &manifest.config_hash[..12]
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e.source))
        }
    }
}
