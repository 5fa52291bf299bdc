use std::path::PathBuf;
use std::process::ExitCode;

use alh_cli::commands::{cmd_boost, cmd_catalog, cmd_check, cmd_mass};
use alh_cli::{configure_threads, exit};
use clap::{Parser, Subcommand};

/// Mass, energy-momentum and hypothesis checks for asymptotically locally
/// hyperbolic metrics.
#[derive(Parser)]
#[command(name = "alh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mass or energy-momentum; writes <stem>.mass.json and <stem>.convergence.csv.
    Mass {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Scalar and boundary mean curvature margins, curvature decay, boundary metric.
    Check {
        spec: PathBuf,
        /// Write <stem>.check.json here instead of printing the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy-momentum before and after pulling back by a boost.
    Boost {
        spec: PathBuf,
        /// Boost axis, 1..=n.
        #[arg(long)]
        dir: usize,
        /// Rapidity.
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List catalog backgrounds.
    Catalog {
        #[arg(long, default_value_t = 3)]
        dimension: usize,
    },
}

fn main() -> ExitCode {
    // Usage errors are input errors; clap's own code would collide with 2.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(e) = configure_threads(std::env::var("ALH_THREADS").ok().as_deref()) {
        eprintln!("alh: {e}");
        return ExitCode::from(exit::INPUT as u8);
    }
    let result = match &cli.command {
        Command::Mass { spec, out } => cmd_mass(spec, out),
        Command::Check { spec, out } => cmd_check(spec, out.as_deref()),
        Command::Boost { spec, dir, beta, out } => cmd_boost(spec, *dir, *beta, out.as_deref()),
        Command::Catalog { dimension } => cmd_catalog(*dimension),
    };
    match result {
        Ok(outcome) => {
            match &outcome.report {
                Some(doc) => {
                    eprint!("{}", outcome.summary);
                    print!("{doc}");
                }
                None => print!("{}", outcome.summary),
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(f) => {
            eprintln!("alh: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
