use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stripcs_cli::{execute, ExperimentConfig, Kind, Settings, EXIT_CONFIG, EXIT_FAILED_CHECK, EXIT_OK};

#[derive(Parser)]
#[command(name = "stripcs", version, about = "Statistical isometry experiments for deterministic sensing matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural certificate (row orthogonality, closure, column sums).
    Certify(Settings),
    /// Monte-Carlo distortion of random k-sparse signals against delta.
    Strip(Settings),
    /// Coherence of random supports with a probe column against its tail bound.
    Coherence(Settings),
    /// Condition numbers of random k-column submatrices.
    Condition(Settings),
    /// One reconstruction with its iteration log.
    Recon(Settings),
    /// Reconstruction success rate as a function of k.
    ReconSweep(Settings),
    /// Empirical tails of bounded-difference functions of distinct tuples.
    Mcdiarmid(Settings),
    /// Norm preservation under measurement noise.
    Noise(Settings),
    /// Closed-form failure probabilities.
    Bounds(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, settings) = match cli.command {
        Command::Certify(s) => (Kind::Certify, s),
        Command::Strip(s) => (Kind::Strip, s),
        Command::Coherence(s) => (Kind::Coherence, s),
        Command::Condition(s) => (Kind::Condition, s),
        Command::Recon(s) => (Kind::Recon, s),
        Command::ReconSweep(s) => (Kind::ReconSweep, s),
        Command::Mcdiarmid(s) => (Kind::Mcdiarmid, s),
        Command::Noise(s) => (Kind::Noise, s),
        Command::Bounds(s) => (Kind::Bounds, s),
    };
    let cfg = match settings.with_file().and_then(|s| ExperimentConfig::resolve(kind, &s)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(threads) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match execute(&cfg) {
        Ok((outcome, files)) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            for f in &files {
                println!("wrote {}", f.display());
            }
            println!("config hash {}  {}", cfg.hash(), if outcome.pass { "PASS" } else { "FAIL" });
            ExitCode::from(if outcome.pass { EXIT_OK } else { EXIT_FAILED_CHECK })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
