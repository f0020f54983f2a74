use clap::{Parser, Subcommand};
use lsred::cli::{exit_code, run, ExperimentConfig, Status};
use lsred::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Used by `verify` when no --config is given.
const VERIFY_DEFAULT: &str = "[problem]\nn = 2\np = 4.0\n[manifold]\nkind = \"flat-torus\"\n";

#[derive(Parser)]
#[command(name = "lsred", version, about = "Concentrating solutions of -eps^2 div(c grad u) + a u = b u^(p-1) on compact manifolds")]
struct Cli {
    /// TOML experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed (overrides output.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated eps schedule, e.g. 0.2,0.1,0.05.
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon_override: Option<Vec<f64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radial ground state U and the constant C_p.
    GroundState,
    /// Reduced energy on a sample grid of centers, per eps.
    Landscape,
    /// Newton continuation of the full problem along the eps schedule.
    Solve,
    /// Warped-product lift or harmonic-morphism checks.
    Lift,
    /// The invariant suite.
    Verify {
        /// Inject a known fault; the suite must then fail.
        #[arg(long, value_parser = ["gamma-exponent"])]
        fault: Option<String>,
        /// Double the mesh resolution.
        #[arg(long)]
        halve_mesh: bool,
    },
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::GroundState => "ground-state",
        Command::Landscape => "landscape",
        Command::Solve => "solve",
        Command::Lift => "lift",
        Command::Verify { .. } => "verify",
    }
}

fn configure(cli: &Cli) -> lsred::Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Command::Verify { .. }) => ExperimentConfig::from_toml(VERIFY_DEFAULT)?,
        (None, _) => return Err(Error::Config("--config is required".into())),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(s) = cli.seed {
        cfg.output.seed = s;
    }
    if let Some(eps) = &cli.epsilon_override {
        cfg.override_schedule(eps.clone())?;
    }
    if let Command::Verify { fault, halve_mesh } = &cli.command {
        if fault.is_some() {
            cfg.verify.fault = fault.clone();
        }
        cfg.verify.halve_mesh |= *halve_mesh;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = configure(&cli).and_then(|cfg| run(name(&cli.command), &cfg));
    match result {
        Ok(o) if o.status == Status::Success => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
