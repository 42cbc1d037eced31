use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibbs_spectra::shift::DEFAULT_WORD_CAP;

mod commands;
mod error;
mod model;

use commands::{render, write_output, Grid};
use error::CliError;
use model::Model;

/// Pressure, Gibbs measures and entropy spectra of locally constant
/// potentials on subshifts of finite type.
#[derive(Debug, Parser)]
#[command(name = "gibbs-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    qmin: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    qmax: f64,
    #[arg(long, default_value_t = 0.25)]
    qstep: f64,
}

impl From<&GridArgs> for Grid {
    fn from(g: &GridArgs) -> Self {
        Grid {
            qmin: g.qmin,
            qmax: g.qmax,
            qstep: g.qstep,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pressure and Perron data of the model's potential.
    Pressure {
        model: PathBuf,
        /// Cross-check against preimage sums of this depth.
        #[arg(long)]
        oracle_depth: Option<usize>,
    },
    /// Entropy spectrum on a q grid: summary JSON on stdout, curve as CSV.
    Spectrum {
        model: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// CSV destination (columns q, alpha, beta, E, flags); `-` for stdout,
        /// in which case the summary goes to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decides whether two models have the same entropy spectrum.
    Compare {
        f: PathBuf,
        g: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Rigidity report, G_n membership and condition (A.1).
    Classify { model: PathBuf },
    /// Checks the Gibbs inequality on every cylinder up to the given depth.
    GibbsAudit {
        model: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Largest number of words the audit may enumerate.
        #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
        cap: u128,
    },
    /// Monte-Carlo distribution of -(1/n) log mu([w|n]) along sampled paths.
    Sample {
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        buckets: usize,
        /// Histogram CSV destination (bucket_low, bucket_high, count).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emits the equivalent order-2 model, recoding to blocks if needed.
    Recode {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stdout_json(value: &serde_json::Value) -> Result<(), CliError> {
    write_output(std::path::Path::new("-"), &render(value))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Pressure {
            model,
            oracle_depth,
        } => {
            let model = Model::load(&model)?;
            stdout_json(&commands::pressure(&model, oracle_depth)?)
        }
        Command::Spectrum { model, grid, out } => {
            let model = Model::load(&model)?;
            let output = commands::spectrum(&model, (&grid).into())?;
            match out {
                Some(path) if path.as_os_str() == "-" => {
                    write_output(&path, &output.csv)?;
                    eprint!("{}", render(&output.summary));
                    Ok(())
                }
                Some(path) => {
                    write_output(&path, &output.csv)?;
                    stdout_json(&output.summary)
                }
                None => stdout_json(&output.summary),
            }
        }
        Command::Compare { f, g, tol, grid } => {
            let (f, g) = (Model::load(&f)?, Model::load(&g)?);
            stdout_json(&commands::compare(&f, &g, tol, (&grid).into())?)
        }
        Command::Classify { model } => {
            stdout_json(&commands::classify_model(&Model::load(&model)?)?)
        }
        Command::GibbsAudit { model, depth, cap } => {
            let (report, violation) = commands::gibbs_audit(&Model::load(&model)?, depth, cap)?;
            stdout_json(&report)?;
            violation.map_or(Ok(()), Err)
        }
        Command::Sample {
            model,
            n,
            trials,
            seed,
            buckets,
            out,
        } => {
            let output = commands::sample(&Model::load(&model)?, n, trials, seed, buckets)?;
            if let Some(path) = out {
                write_output(&path, &output.csv)?;
            }
            stdout_json(&output.summary)
        }
        Command::Recode { model, out } => {
            let text = render(&commands::recode(&Model::load(&model)?)?);
            write_output(&out.unwrap_or_else(|| PathBuf::from("-")), &text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
