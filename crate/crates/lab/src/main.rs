use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rehearsal_lab::config::describe_keys;
use rehearsal_lab::{parse_config, resolve_out_dir, run_to_dir, LabError};

#[derive(Parser)]
#[command(name = "rehearsal-lab", version, about = "Run lifelong-RL replay-memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Overrides the config's first seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config `out`, then $REHEARSAL_LAB_OUT, then ./lab-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Parse a config file and report problems without running anything.
    Validate { config: PathBuf },
    /// List every config key with its default.
    Keys,
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Run { config, seed, out, jobs } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = resolve_out_dir(out.as_deref(), &cfg);
            let summary = run_to_dir(&cfg, &dir, jobs)?;
            println!("wrote {} ({} rows)", summary.csv.display(), summary.output.rows.len());
            for p in &summary.charts {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", summary.manifest.display());
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            println!("{}: ok ({})", config.display(), cfg.experiment.name());
        }
        Command::Keys => print!("{}", describe_keys()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
