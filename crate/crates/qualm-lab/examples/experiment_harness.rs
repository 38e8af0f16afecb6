//! Drives the experiment harness from code: build a config, run a command,
//! and read back the checks and the CSV it wrote.

use qualm_lab::error::Result;
use qualm_lab::experiments::{run_command, Command, Experiment, ExperimentConfig};

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::TvdScan, 4);
    cfg.output_dir = std::env::temp_dir().join("qualm-lab-example");
    let report = run_command(Command::TvdScan, &cfg, Some(1))?;
    for check in &report.checks {
        println!("{:<5} {}  {}", if check.passed { "ok" } else { "no" }, check.name, check.detail);
    }
    for r in report.records.iter().filter(|r| r.metric == "U/tvd") {
        println!("ℓ={} tvd={:.6}", r.ell, r.value);
    }
    println!("files: {:?}; exit code {}", report.files, report.exit_code());
    Ok(())
}
