use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qualm_lab::experiments::{exit_code, run_command, Command, ExperimentConfig, Overrides};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Moments,
    Wg,
    Distinguish,
    TvdScan,
    IncoherentVsCoherent,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Moments => Command::Moments,
            Cmd::Wg => Command::Wg,
            Cmd::Distinguish => Command::Distinguish,
            Cmd::TvdScan => Command::TvdScan,
            Cmd::IncoherentVsCoherent => Command::IncoherentVsCoherent,
        }
    }
}

/// Run a lab-oracle experiment from a JSON config.
#[derive(Parser)]
#[command(name = "qualm-lab", version)]
struct Cli {
    command: Cmd,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let result = ExperimentConfig::load(&cli.config).and_then(|mut cfg| {
        cfg.apply(&Overrides { seed: cli.seed, ell: cli.ell, k: cli.k, trials: cli.trials, output_dir: cli.out });
        run_command(command, &cfg, cli.threads)
    });
    match &result {
        Ok(report) => {
            for c in &report.checks {
                let tag = match (c.passed, c.informational) {
                    (true, _) => "PASS",
                    (false, true) => "NOTE",
                    (false, false) => "FAIL",
                };
                println!("{tag}  {}  {}", c.name, c.detail);
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => eprintln!("qualm-lab {command}: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
