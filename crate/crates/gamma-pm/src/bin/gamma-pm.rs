//! Batch CLI over the experiment pipelines. One experiment per process;
//! prints a JSON summary on stdout and a machine-readable error JSON on
//! stderr. Exit codes: 0 success, 2 invalid configuration, 3 numerical
//! failure.

use clap::{Args, Parser, Subcommand};
use gamma_pm::config::{
    self, Command as Cmd, DensityParams, ExperimentConfig, FlowParams, Gamma1dParams,
    Gamma2dParams, ProfileParams, SlicingParams,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gamma-pm", version, about = "Transition-profile and jump-energy experiments")]
struct Cli {
    /// Load the whole experiment config from a JSON file (overrides flags).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve the 1D optimal transition profile and estimate sigma_a.
    Profile(ProfileArgs),
    /// Sweep of clamped 1D minimizations over a list of nu values.
    Gamma1d(Gamma1dArgs),
    /// Signed-distance recovery field on a 2D grid with its energy.
    Gamma2d(Gamma2dArgs),
    /// Line-slicing identity check on a polygonal partition.
    Slicing(SlicingArgs),
    /// Lattice density pipeline on a polygonal partition.
    Density(DensityArgs),
    /// Semi-implicit gradient flow in 1D.
    Flow(FlowArgs),
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct Gamma1dArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    s: f64,
    /// Comma-separated list, e.g. 0.1,0.05,0.025
    #[arg(long, value_delimiter = ',')]
    nus: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct Gamma2dArgs {
    /// halfplane | disk
    #[arg(long)]
    shape: String,
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, default_value = "field.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SlicingArgs {
    #[arg(long)]
    input: PathBuf,
    /// Direction, e.g. 1,0
    #[arg(long, value_delimiter = ',', num_args = 2)]
    xi: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    nlines: usize,
    #[arg(long, default_value = "slicing.json")]
    out: PathBuf,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    /// sqrt | power:<exponent>
    #[arg(long, default_value = "sqrt")]
    theta: String,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long)]
    nu: f64,
    #[arg(long = "T")]
    t_end: f64,
    /// periodic | neumann
    #[arg(long, default_value = "neumann")]
    bc: String,
    /// ramp | sine | step
    #[arg(long, default_value = "ramp")]
    init: String,
    #[arg(long, default_value = "flow.csv")]
    out: PathBuf,
}

fn to_config(cli: Cli) -> Result<ExperimentConfig, String> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("config file: {e}"))?;
        return serde_json::from_str(&text).map_err(|e| format!("config file: {e}"));
    }
    let Some(sub) = cli.command else {
        return Err("missing subcommand (or --config <file>)".into());
    };
    let (command, out) = match sub {
        Sub::Profile(a) => (
            Cmd::Profile(ProfileParams {
                a: a.a,
                s: a.s,
                n: a.n,
            }),
            a.out,
        ),
        Sub::Gamma1d(a) => (
            Cmd::Gamma1d(Gamma1dParams {
                a: a.a,
                s: a.s,
                nus: a.nus,
                length: a.length,
            }),
            a.out,
        ),
        Sub::Gamma2d(a) => (
            Cmd::Gamma2d(Gamma2dParams {
                shape: a.shape,
                nu: a.nu,
                grid: a.grid,
            }),
            a.out,
        ),
        Sub::Slicing(a) => (
            Cmd::Slicing(SlicingParams {
                input: a.input,
                xi: [a.xi[0], a.xi[1]],
                nlines: a.nlines,
            }),
            a.out,
        ),
        Sub::Density(a) => (
            Cmd::Density(DensityParams {
                input: a.input,
                eps: a.eps,
                delta: a.delta,
                theta: a.theta,
                samples: a.samples,
                margin: None,
            }),
            a.out,
        ),
        Sub::Flow(a) => (
            Cmd::Flow(FlowParams {
                n: a.n,
                nu: a.nu,
                t_end: a.t_end,
                bc: a.bc,
                init: a.init,
            }),
            a.out,
        ),
    };
    Ok(ExperimentConfig {
        command,
        seed: cli.seed,
        out,
    })
}

fn error_json(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": { "kind": kind, "message": message } })
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // keep clap's helpful text for --help/--version on stdout
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            error_json("validation", &e.to_string());
            return ExitCode::from(2);
        }
    };
    let config = match to_config(cli) {
        Ok(c) => c,
        Err(msg) => {
            error_json("validation", &msg);
            return ExitCode::from(2);
        }
    };
    match config::run_experiment(&config) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            error_json(e.kind(), &e.to_string());
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
