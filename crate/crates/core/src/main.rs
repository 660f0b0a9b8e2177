use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rsma_core::cli::{load_config, run};

#[derive(Parser)]
#[command(name = "rsma-sim", version, about = "RSMA / SDMA / NOMA downlink simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        drops: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        seed,
        drops,
        out,
        workers,
    } = Args::parse().command;

    let result = load_config(&config).and_then(|mut cfg| {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(d) = drops {
            cfg.n_drops = d;
        }
        if let Some(o) = out {
            cfg.output_path = o;
        }
        if let Some(w) = workers {
            cfg.workers = w;
        }
        run(&cfg)
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
