//! Command-line front end for the estimator: JSON problem files, runs,
//! parameter sweeps and noise studies written as CSV or JSON lines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod problem;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sincheb_core::{FormulaOrder, Overrides};

pub use commands::{cmd_noise, cmd_run, cmd_show_plan, cmd_sweep, Axis, Outcome, RunConfig};
pub use error::CliError;
pub use output::{write_records, Field, Format, Record};
pub use problem::{emit_problem, parse_problem, parse_problem_str, ProblemSpec};

#[derive(Debug, Parser)]
#[command(
    name = "sincheb",
    version,
    about = "Trotterized amplitude estimation with sinc and Chebyshev interpolation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the amplitude and report error, parameters and cost.
    Run {
        #[command(flatten)]
        common: Common,
        /// Per-component standard deviation of Gaussian noise added to every sample.
        #[arg(long, default_value_t = 0.0)]
        sample_noise: f64,
    },
    /// One run per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Monte-Carlo study of sample noise propagation.
    Noise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Print the chosen parameters without sampling.
    ShowPlan {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file (JSON).
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Double the node count until successive estimates agree to eps/4.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long)]
    pub override_p: Option<u32>,
    #[arg(long)]
    pub override_g: Option<u64>,
    #[arg(long)]
    pub override_n: Option<usize>,
    #[arg(long)]
    pub override_q: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Rescale stages whose term norms sum above 1, stretching their time to match.
    #[arg(long)]
    pub auto_normalize: bool,
}

impl Common {
    pub fn config(&self, sample_noise: f64) -> Result<RunConfig, CliError> {
        let p = self.override_p.map(FormulaOrder::new).transpose()?;
        Ok(RunConfig {
            eps: self.eps,
            overrides: Overrides {
                p,
                g: self.override_g,
                n: self.override_n,
                q: self.override_q,
                r_disc: None,
            },
            adaptive: self.adaptive,
            seed: self.seed,
            sample_noise,
            format: self.format,
        })
    }
}

fn execute(command: &Command) -> Result<(Outcome, &Common), CliError> {
    let (common, sample_noise) = match command {
        Command::Run {
            common,
            sample_noise,
        } => (common, *sample_noise),
        Command::Sweep { common, .. }
        | Command::Noise { common, .. }
        | Command::ShowPlan { common } => (common, 0.0),
    };
    let config = common.config(sample_noise)?;
    let problem = parse_problem(&common.problem, common.auto_normalize)?;
    let outcome = match command {
        Command::Run { .. } => cmd_run(&problem, &config)?,
        Command::Sweep { axis, values, .. } => cmd_sweep(&problem, &config, *axis, values)?,
        Command::Noise { sigma, trials, .. } => cmd_noise(&problem, &config, *sigma, *trials)?,
        Command::ShowPlan { .. } => cmd_show_plan(&problem, &config)?,
    };
    Ok((outcome, common))
}

fn emit(outcome: &Outcome, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &common.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_records(&mut file, common.format, &outcome.records)
        }
        None => write_records(stdout, common.format, &outcome.records),
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 on success, 1 on invalid input, 2 when an estimate did not converge.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = execute(&cli.command).and_then(|(outcome, common)| {
        emit(&outcome, common, stdout)?;
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => {
            if code == 2 {
                let _ = writeln!(stderr, "warning: adaptive node doubling did not converge");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
