//! Command-line front end: runs verification suites, derives Euler–Lagrange
//! equations and conservation laws, and integrates the semi-discrete NLS
//! system.

/// println! that stays quiet when stdout is closed early (e.g. piped into
/// `head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_frames::catalog::SUITES;
use lattice_frames::harness::{SamplePlan, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "lattice-frames", version, about = "Moving frames and Noether laws on lattices")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Seed for random sample points.
    #[arg(long, global = true, env = "LATTICE_FRAMES_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Sample points per identity check.
    #[arg(long, global = true, default_value_t = 50)]
    pub points: usize,
    /// Override every check tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

impl Global {
    pub fn plan(&self) -> SamplePlan {
        let p = SamplePlan::default().seed(self.seed).points(self.points);
        match self.tol {
            Some(t) => p.tol(t),
            None => p,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a catalog example.
    Verify {
        example: String,
        #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
    },
    /// Print E_u(L) for each dependent field.
    EulerLagrange(commands::ElArgs),
    /// Print a conservation law in original, invariant and equivariant form.
    Noether {
        example: String,
        /// 1-based generator index.
        #[arg(long)]
        r: usize,
    },
    /// Integrate the semi-discrete NLS system and monitor its lattice sums.
    Integrate(commands::IntegrateArgs),
    /// Invariantize an expression on the example's frame.
    Invariantize { example: String, expr: String },
    /// Print syzygies and the differential syzygy operators H.
    Syzygy { example: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let outcome = match cli.command {
        Command::Verify { example, suite } => commands::verify(g, &example, &suite),
        Command::EulerLagrange(a) => commands::euler_lagrange(g, &a),
        Command::Noether { example, r } => commands::noether(g, &example, r),
        Command::Integrate(a) => commands::integrate(g, &a),
        Command::Invariantize { example, expr } => commands::invariantize(g, &example, &expr),
        Command::Syzygy { example } => commands::syzygy(g, &example),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
