use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use confmac::{run, validate, CliError, Experiment, Overrides};

#[derive(Parser)]
#[command(name = "confmac", version, about = "Capacity regions of conferencing FSM-MACs with delayed CSI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the Gaussian conferencing region for each link pair.
    RegionGaussian(Common),
    /// Policy-search inner bound of a discrete channel's region.
    RegionDiscrete(Common),
    /// Gaussian sum rate against symmetric link capacity.
    SweepSumrate(Common),
    /// Optimal input correlation against SNR (scalar, single state).
    SweepCorrelation(Common),
    /// Monte Carlo error rates of the random coding scheme.
    Simulate(Common),
    /// Closed-form critical SNR and high-SNR correlation.
    Asymptotics(Common),
    /// Parse and resolve a config, print it, and exit.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_plots: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::RegionGaussian(c) => (Some(Experiment::RegionGaussian), c),
        Command::RegionDiscrete(c) => (Some(Experiment::RegionDiscrete), c),
        Command::SweepSumrate(c) => (Some(Experiment::SweepSumrate), c),
        Command::SweepCorrelation(c) => (Some(Experiment::SweepCorrelation), c),
        Command::Simulate(c) => (Some(Experiment::Simulate), c),
        Command::Asymptotics(c) => (Some(Experiment::Asymptotics), c),
        Command::Validate(c) => (None, c),
    };
    match execute(kind, &common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: Option<Experiment>, c: &Common) -> Result<(), CliError> {
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let ov = Overrides { seed: c.seed, out: c.out.clone(), no_plots: c.no_plots };
    match kind {
        None => {
            print!("{}", validate(&c.config, &ov)?);
        }
        Some(k) => {
            let art = run(k, &c.config, &ov)?;
            for f in &art.files {
                println!("wrote {}", f.display());
            }
            for n in &art.notes {
                println!("note: {n}");
            }
        }
    }
    Ok(())
}
