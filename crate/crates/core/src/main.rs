use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use alignlab::config::AppConfig;
use alignlab::eval::RenderFormat;
use alignlab::gateway::Backend;
use alignlab::{commands, Result};

/// Persona-grounded preference data toolchain: grow persona pools, build
/// tree-structured multi-turn preference datasets, export SFT/DPO records,
/// and benchmark endpoints with judge-rated conversations.
#[derive(Parser)]
#[command(name = "alignlab", version)]
struct Cli {
    /// Configuration file (defaults to alignlab.toml when present)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured global random seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Force every provider onto one backend
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,

    /// Verbose logging (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Mock,
    Http,
}

impl From<BackendArg> for Backend {
    fn from(value: BackendArg) -> Self {
        match value {
            BackendArg::Mock => Backend::Mock,
            BackendArg::Http => Backend::Http,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Plotdata,
}

impl From<FormatArg> for RenderFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Table => RenderFormat::Table,
            FormatArg::Csv => RenderFormat::Csv,
            FormatArg::Plotdata => RenderFormat::Plotdata,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grow persona pools from seed files and assemble personas
    GenPersonas {
        /// Personas to assemble from the pool cross product
        #[arg(long)]
        count: Option<usize>,
        /// Growth iterations per pool
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Build the tree-structured multi-turn preference dataset
    BuildDataset {
        /// Conversation turns per persona
        #[arg(long)]
        max_turns: Option<usize>,
        /// Concurrent conversations
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Export supervised fine-tuning records from the dataset
    ExportSft {
        /// Messages-format corpus to interleave with the exported records
        #[arg(long)]
        agent_mix: Option<PathBuf>,
    },
    /// Export preference pairs from the dataset
    ExportDpo,
    /// Run judge-rated conversations against the configured endpoint
    Evaluate {
        /// Benchmark cases file
        #[arg(long)]
        cases: Option<PathBuf>,
        /// Name for the run directory
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Summarize a persisted evaluation run
    Report {
        /// Run directory containing ratings.jsonl
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
    /// Agreement between two rating files
    Kappa { file_a: PathBuf, file_b: PathBuf },
}

fn load_config(cli: &Cli) -> Result<AppConfig> {
    let explicit = cli.config.is_some();
    let path = cli
        .config
        .clone()
        .unwrap_or_else(|| PathBuf::from("alignlab.toml"));
    let mut config = AppConfig::load_or_default(&path, explicit)?;
    if let Some(seed) = cli.seed {
        config.global_seed = seed;
    }
    if let Some(backend) = cli.backend {
        config.override_backend(backend.into());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::GenPersonas {
            count,
            max_iterations,
        } => {
            let mut config = load_config(&cli)?;
            if let Some(count) = count {
                config.pool.count = *count;
            }
            if let Some(iterations) = max_iterations {
                config.pool.max_iterations = *iterations;
            }
            config.validate()?;
            commands::gen_personas(&config)
        }
        Command::BuildDataset {
            max_turns,
            parallelism,
        } => {
            let mut config = load_config(&cli)?;
            if let Some(turns) = max_turns {
                config.build.max_turns = *turns;
            }
            if let Some(parallelism) = parallelism {
                config.build.parallelism = *parallelism;
            }
            config.validate()?;
            commands::build_dataset(&config)
        }
        Command::ExportSft { agent_mix } => {
            let config = load_config(&cli)?;
            commands::export_sft(&config, agent_mix.as_deref())
        }
        Command::ExportDpo => {
            let config = load_config(&cli)?;
            commands::export_dpo(&config)
        }
        Command::Evaluate { cases, run_id } => {
            let config = load_config(&cli)?;
            commands::evaluate(&config, cases.as_deref(), run_id.clone())
        }
        Command::Report { run_dir, format } => commands::report(run_dir, (*format).into()),
        Command::Kappa { file_a, file_b } => commands::kappa(file_a, file_b),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
