//! `fattorini` — spectral controllability tests and finite-rank feedback
//! stabilization for semidiscretized parabolic systems.

mod config;
mod pipeline;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use pipeline::Stage;

#[derive(Parser)]
#[command(
    name = "fattorini",
    about = "Spectral controllability tests and finite-rank feedback stabilization",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output (files are still written).
    #[arg(long, global = true)]
    quiet: bool,
    /// Output directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration (see the book for the schema).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the spectrum and report multiplicities and Jordan depths.
    Spectrum(ConfigArg),
    /// Run the eigenvector-visibility and admissibility rank tests.
    Check(ConfigArg),
    /// Synthesize the finite-rank feedback and verify the closed loop.
    Synthesize(ConfigArg),
    /// Synthesize, then integrate the closed loop and fit its decay rate.
    Simulate(ConfigArg),
    /// Eigenvalue multiplicities and actuator counts for the square/cube,
    /// or the simple-spectrum collision scan.
    Rect {
        #[arg(long)]
        sigma: Option<f64>,
        /// Scale factor of the eigenvalues `-c^2 |alpha|^2`.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        d: Option<u32>,
        /// Comma-separated side weights `1/c_i^2` for the collision scan.
        #[arg(long, value_delimiter = ',')]
        inv_c2: Option<Vec<f64>>,
        #[arg(long)]
        alpha_max: Option<u64>,
    },
    /// Coupled two-block heat system: Jordan clusters, second-block
    /// actuation, synthesis at sigma = 5 after a +2 shift.
    DemoCoupledHeat,
    /// Shifted reaction-diffusion with three unstable modes, stabilized
    /// by a single aggregated actuator at sigma = 1.
    DemoReactionDiffusion,
}

fn load_config(path: &PathBuf) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

fn demo_coupled_heat() -> RunConfig {
    serde_json::from_value(serde_json::json!({
        "model": {
            "family": "coupled_heat",
            "n": 10,
            "length": std::f64::consts::PI,
            "shift": 2.0,
            "omega": [4, 7]
        },
        "actuators": "auto",
        "sigma": 5.0,
        "eps": 0.5,
        "method": "lqr",
        "simulate": {"t_final": 4.0, "dt": 0.001, "scheme": "implicit_euler", "y0": "random-seeded", "window": [1.0, 4.0]},
        "seed": 0
    }))
    .expect("demo config is valid")
}

fn demo_reaction_diffusion() -> RunConfig {
    serde_json::from_value(serde_json::json!({
        "model": {
            "family": "reaction_diffusion",
            "n": 50,
            "length": std::f64::consts::PI,
            "shift": 12.0,
            "omega": [16, 30]
        },
        "actuators": {"vectors": [[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]]},
        "sigma": 1.0,
        "eps": 0.5,
        "method": "lqr",
        "simulate": {"t_final": 5.0, "dt": 0.001, "scheme": "implicit_euler", "y0": "random-seeded", "window": [1.0, 5.0]},
        "seed": 0
    }))
    .expect("demo config is valid")
}

fn main() -> ExitCode {
    // Single-threaded BLAS keeps runs byte-reproducible.
    unsafe {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves status 2, which this tool uses for criterion
            // failures; usage problems are operational errors
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("fattorini_out"));
    let quiet = cli.quiet;

    let run_with = |mut cfg: RunConfig, stage: Stage| -> u8 {
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("fattorini_out"));
        pipeline::run(&cfg, stage, &out, quiet) as u8
    };

    let code: u8 = match &cli.command {
        Command::Spectrum(arg) | Command::Check(arg) | Command::Synthesize(arg)
        | Command::Simulate(arg) => {
            let stage = match &cli.command {
                Command::Spectrum(_) => Stage::Spectrum,
                Command::Check(_) => Stage::Check,
                Command::Synthesize(_) => Stage::Synthesize,
                _ => Stage::Simulate,
            };
            match load_config(&arg.config) {
                Ok(cfg) => run_with(cfg, stage),
                Err(msg) => {
                    eprintln!("{msg}");
                    1
                }
            }
        }
        Command::Rect {
            sigma,
            c,
            d,
            inv_c2,
            alpha_max,
        } => pipeline::run_rect(
            *sigma,
            *c,
            *d,
            inv_c2.clone(),
            *alpha_max,
            &out_dir,
            quiet,
        ) as u8,
        Command::DemoCoupledHeat => run_with(demo_coupled_heat(), Stage::Simulate),
        Command::DemoReactionDiffusion => run_with(demo_reaction_diffusion(), Stage::Simulate),
    };
    ExitCode::from(code)
}
