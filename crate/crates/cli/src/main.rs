#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod settings;

use clap::{Parser, Subcommand};
use settings::{GridArgs, ModelArgs, NumericsArgs};
use ssr_core::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "ssr", version, about = "Skew-stickiness ratio term structures, smiles and calibration")]
struct Cli {
    /// Write the primary output here instead of stdout.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SSR, skew and beta of an affine forward variance model.
    SsrAfv {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        num: NumericsArgs,
        /// Repeat for each initial variance (comma-separated); adds a leading v0 column.
        #[arg(long = "v0-sweep")]
        v0_sweep: Option<String>,
    },
    /// SSR, skew and beta of classical Heston from the closed form.
    SsrHeston {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        num: NumericsArgs,
    },
    /// Second-order and next-to-leading forest expansions (lambda = 0, flat curve).
    SsrForest {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Use the classical Heston tree catalog (alpha = 1).
        #[arg(long)]
        heston: bool,
    },
    /// Numeric SSR against the forest expansion for a sweep of H.
    SsrCompare {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        num: NumericsArgs,
        #[arg(long = "hurst-sweep", default_value = "0.1,0.3,0.5")]
        hursts: String,
    },
    /// Implied-vol smiles of an AFV model.
    Smile {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        num: NumericsArgs,
        /// Comma-separated maturities; all must be nodes of the Riccati grid on [0, max].
        #[arg(long, default_value = "0.08333333333333333,0.25,0.5,1")]
        maturities: String,
        #[arg(long, default_value_t = 11)]
        strikes: usize,
        /// Strikes span +- width * sigma_atm * sqrt(tau).
        #[arg(long, default_value_t = 2.0)]
        width: f64,
    },
    /// Fit (H, nu) at fixed lambda to smiles of a lambda = 0 reference model.
    Calibrate {
        /// Fixed lambda, or a comma-separated list.
        #[arg(long, default_value = "0,1,2")]
        lambda: String,
        #[arg(long = "reference-hurst", default_value_t = 0.1)]
        reference_hurst: f64,
        #[arg(long = "reference-nu", default_value_t = 0.4)]
        reference_nu: f64,
        #[arg(long, default_value_t = -0.65, allow_negative_numbers = true)]
        rho: f64,
        /// Flat forward variance level.
        #[arg(long, default_value_t = 0.025)]
        xi: f64,
        /// Starting point `H,nu` for every lambda.
        #[arg(long)]
        init: Option<String>,
        #[arg(long = "max-evals")]
        max_evals: Option<usize>,
        #[arg(long = "riccati-steps")]
        riccati_steps: Option<usize>,
        /// CSV of target and fitted smiles.
        #[arg(long = "smiles-out", value_name = "FILE")]
        smiles_out: Option<PathBuf>,
        /// CSV of the fitted models' SSR term structures.
        #[arg(long = "ssr-out", value_name = "FILE")]
        ssr_out: Option<PathBuf>,
        #[arg(long = "ssr-maturities", default_value = "0.05,0.1,0.25,0.5,0.75,1")]
        ssr_maturities: String,
        /// Whose SSR goes to --ssr-out: the fitted sets or the quoted reference sets.
        #[arg(long = "ssr-of", value_enum, default_value = "fitted")]
        ssr_of: SsrOf,
    },
    /// Bias of a beta estimated over a finite window, power-law kernel.
    Discreteness {
        /// Kernel exponent(s), comma-separated.
        #[arg(long)]
        gamma: String,
        /// Window over maturity, comma-separated.
        #[arg(long)]
        epsilon: String,
    },
    /// SSR at a short maturity against the H + 3/2 limit.
    Limits {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        num: NumericsArgs,
        #[arg(long = "hurst-sweep", default_value = "0.05,0.1,0.3,0.5")]
        hursts: String,
        #[arg(long, default_value_t = 1e-4)]
        tau: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SsrOf {
    Fitted,
    Reference,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Io(_) | Error::Unsupported(_) => 2,
        _ => 3,
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let out = cli.output.as_deref();
    let text = match &cli.command {
        Command::SsrAfv { model, grid, num, v0_sweep } => commands::ssr_afv_cmd(model, grid, num, v0_sweep.as_deref())?,
        Command::SsrHeston { model, grid, num } => commands::ssr_heston_cmd(model, grid, num)?,
        Command::SsrForest { model, grid, heston } => commands::ssr_forest_cmd(model, grid, *heston)?,
        Command::SsrCompare { model, grid, num, hursts } => commands::ssr_compare_cmd(model, grid, num, hursts)?,
        Command::Smile { model, num, maturities, strikes, width } => {
            commands::smile_cmd(model, num, &commands::SmileArgs { maturities, strikes: *strikes, width: *width })?
        }
        Command::Calibrate {
            lambda,
            reference_hurst,
            reference_nu,
            rho,
            xi,
            init,
            max_evals,
            riccati_steps,
            smiles_out,
            ssr_out,
            ssr_maturities,
            ssr_of,
        } => {
            let cal = commands::calibrate_cmd(&commands::CalibrateArgs {
                lambdas: lambda,
                reference: (*reference_hurst, *reference_nu),
                rho: *rho,
                xi: *xi,
                init: init.as_deref(),
                max_evals: *max_evals,
                riccati_steps: *riccati_steps,
                ssr_of_reference: *ssr_of == SsrOf::Reference,
                ssr_maturities: if ssr_out.is_some() { settings::parse_list("ssr-maturities", ssr_maturities)? } else { vec![] },
            })?;
            if let Some(p) = smiles_out {
                emit(Some(p), &cal.smiles_csv)?;
            }
            if let Some(p) = ssr_out {
                emit(Some(p), &cal.ssr_csv)?;
            }
            cal.report
        }
        Command::Discreteness { gamma, epsilon } => commands::discreteness_cmd(gamma, epsilon)?,
        Command::Limits { model, num, hursts, tau } => commands::limits_cmd(model, num, hursts, *tau)?,
    };
    emit(out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ssr: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
