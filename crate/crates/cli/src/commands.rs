use std::f64::consts::PI;
use std::time::Instant;

use clap::ValueEnum;
use sincheb_core::pipeline::{
    analytic_query_count, choose_parameters, estimate_with_parameters, max_depth, noise_study,
    noisy_estimate,
};
use sincheb_core::{EstimateReport, EvolutionProblem, EvolutionStage, Overrides, ParameterChoice};

use crate::error::CliError;
use crate::output::{float_list, Field, Format, Record};

/// Exact amplitudes are only computed up to this dimension.
pub const EXACT_DIM_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub overrides: Overrides,
    pub adaptive: bool,
    pub seed: u64,
    /// Per-component standard deviation of noise added to every sample.
    pub sample_noise: f64,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            overrides: Overrides::default(),
            adaptive: false,
            seed: 0,
            sample_noise: 0.0,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(CliError::Validation(format!(
                "--eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !(self.sample_noise >= 0.0) || !self.sample_noise.is_finite() {
            return Err(CliError::Validation(
                "--sample-noise must be finite and nonnegative".into(),
            ));
        }
        if let Some(n) = self.overrides.n {
            if n < 2 || n % 2 != 0 {
                return Err(CliError::Validation(format!(
                    "--override-n must be even and at least 2, got {n}"
                )));
            }
        }
        if self.overrides.g == Some(0) || self.overrides.q == Some(0) {
            return Err(CliError::Validation(
                "--override-g and --override-q must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Records plus whether every estimate converged.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub converged: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

fn parameter_record(params: &ParameterChoice) -> Record {
    let mut r = Record::default();
    r.push("p", Field::Int(params.p.get().into()))
        .push("g", Field::Int(params.g))
        .push("n", Field::Int(params.n as u64))
        .push("q", Field::Int(params.q as u64))
        .push("eps", Field::Float(params.eps))
        .push("eps_cheb", Field::Float(params.eps_cheb))
        .push("eps_sinc", Field::Float(params.eps_sinc))
        .push("r_disc", Field::Float(params.r_disc))
        .push("alpha_max", Field::Float(params.alpha_max))
        .push("t_max", Field::Float(params.t_max))
        .push(
            "predicted_cheb_error",
            Field::Float(params.predicted_cheb_error),
        )
        .push(
            "predicted_sinc_error",
            Field::Float(params.predicted_sinc_error),
        )
        .push("g_fallback", Field::Bool(params.g_fallback))
        .push("g_step_limited", Field::Bool(params.g_step_limited))
        .push("alpha_fallback", Field::Bool(params.alpha_fallback));
    r
}

fn report_record(
    report: &EstimateReport,
    config: &RunConfig,
    noisy: Option<num_complex::Complex64>,
) -> Record {
    let mut r = Record::default();
    r.push("value_re", Field::Float(report.value.re))
        .push("value_im", Field::Float(report.value.im))
        .push(
            "exact_re",
            Field::opt_float(report.exact_value.map(|z| z.re)),
        )
        .push(
            "exact_im",
            Field::opt_float(report.exact_value.map(|z| z.im)),
        )
        .push("abs_error", Field::opt_float(report.abs_error()));
    r.extend(parameter_record(&report.parameters));
    r.push("query_count", Field::Int(report.query_count))
        .push("total_query_count", Field::Int(report.total_query_count))
        .push("max_depth", Field::Int(report.max_depth))
        .push("converged", Field::Bool(report.converged))
        .push(
            "inverse_powers_used",
            Field::Bool(report.inverse_powers_used),
        )
        .push("seed", Field::Int(config.seed))
        .push("sample_noise", Field::Float(config.sample_noise))
        .push("noisy_re", Field::opt_float(noisy.map(|z| z.re)))
        .push("noisy_im", Field::opt_float(noisy.map(|z| z.im)));
    r
}

fn estimate(
    problem: &EvolutionProblem,
    config: &RunConfig,
) -> Result<(EstimateReport, Record), CliError> {
    config.validate()?;
    let params = choose_parameters(problem, config.eps, &config.overrides)?;
    let with_exact = problem.dim() <= EXACT_DIM_LIMIT;
    let report = estimate_with_parameters(problem, &params, config.adaptive, with_exact)?;
    let noisy = if config.sample_noise > 0.0 {
        Some(noisy_estimate(
            problem,
            &report.parameters,
            config.sample_noise,
            config.seed,
        )?)
    } else {
        None
    };
    let record = report_record(&report, config, noisy);
    Ok((report, record))
}

pub fn cmd_run(problem: &EvolutionProblem, config: &RunConfig) -> Result<Outcome, CliError> {
    let (report, record) = estimate(problem, config)?;
    Ok(Outcome {
        records: vec![record],
        converged: report.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Q,
    N,
    #[value(name = "T", alias = "t")]
    T,
    Eps,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Q => "q",
            Axis::N => "n",
            Axis::T => "T",
            Axis::Eps => "eps",
        }
    }
}

fn integral(axis: Axis, value: f64) -> Result<usize, CliError> {
    if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
        Ok(value as usize)
    } else {
        Err(CliError::Validation(format!(
            "{} sweep values must be positive integers, got {value}",
            axis.name()
        )))
    }
}

/// Problem with every stage time scaled so that the longest equals `t_max`.
pub fn with_max_time(problem: &EvolutionProblem, t_max: f64) -> Result<EvolutionProblem, CliError> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(CliError::Validation(format!(
            "T sweep values must be positive, got {t_max}"
        )));
    }
    let current = problem.max_time();
    if current == 0.0 {
        return Err(CliError::Validation(
            "cannot rescale a problem whose stage times are all zero".into(),
        ));
    }
    let scale = t_max / current;
    let stages = problem
        .stages()
        .iter()
        .map(|s| EvolutionStage::new(s.v().clone(), s.hamiltonian().clone(), s.time() * scale))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvolutionProblem::new(
        stages,
        problem.psi1().clone(),
        problem.psi2().clone(),
    )?)
}

/// One row per axis value. The `n` axis disables adaptive doubling.
pub fn cmd_sweep(
    problem: &EvolutionProblem,
    config: &RunConfig,
    axis: Axis,
    values: &[f64],
) -> Result<Outcome, CliError> {
    if values.is_empty() {
        return Err(CliError::Validation(
            "sweep needs at least one value".into(),
        ));
    }
    let mut records = Vec::with_capacity(values.len());
    let mut converged = true;
    for &value in values {
        let mut cfg = config.clone();
        let mut target = None;
        match axis {
            Axis::Q => cfg.overrides.q = Some(integral(axis, value)?),
            Axis::N => {
                cfg.overrides.n = Some(integral(axis, value)?);
                cfg.adaptive = false;
            }
            Axis::T => target = Some(with_max_time(problem, value)?),
            Axis::Eps => cfg.eps = value,
        }
        let start = Instant::now();
        let (report, row) = estimate(target.as_ref().unwrap_or(problem), &cfg)?;
        let elapsed = start.elapsed().as_secs_f64();
        converged &= report.converged;
        let mut r = Record::default();
        r.push("axis", Field::Text(axis.name().into()))
            .push("axis_value", Field::Float(value));
        r.extend(row);
        r.push(
            "error_bound",
            Field::Float(
                report.parameters.predicted_cheb_error + report.parameters.predicted_sinc_error,
            ),
        )
        .push("wall_time_s", Field::Float(elapsed));
        records.push(r);
    }
    Ok(Outcome { records, converged })
}

pub fn cmd_noise(
    problem: &EvolutionProblem,
    config: &RunConfig,
    sigma_noise: f64,
    trials: usize,
) -> Result<Outcome, CliError> {
    config.validate()?;
    let params = choose_parameters(problem, config.eps, &config.overrides)?;
    let stats = noise_study(problem, &params, sigma_noise, trials, config.seed)?;
    let linf_factor = 3.0 + 2.0 / PI * (2.0 * params.q as f64).ln();
    let mut r = Record::default();
    r.push("sigma_noise", Field::Float(sigma_noise))
        .push("trials", Field::Int(trials as u64))
        .push("seed", Field::Int(config.seed))
        .push("p", Field::Int(params.p.get().into()))
        .push("g", Field::Int(params.g))
        .push("n", Field::Int(params.n as u64))
        .push("q", Field::Int(params.q as u64))
        .push("clean_re", Field::Float(stats.clean_value.re))
        .push("clean_im", Field::Float(stats.clean_value.im))
        .push("mean_re", Field::Float(stats.moments.mean.re))
        .push("mean_im", Field::Float(stats.moments.mean.im))
        .push("var_re", Field::Float(stats.moments.var_re))
        .push("var_im", Field::Float(stats.moments.var_im))
        .push("linf_factor", Field::Float(linf_factor))
        .push("linf_bound", Field::Float(stats.linf_bound))
        .push(
            "variance_factor",
            Field::Float(sincheb_core::sinc::VARIANCE_FACTOR),
        )
        .push(
            "sinc_variance_bound",
            Field::Float(stats.sinc_variance_bound),
        )
        .push("pipeline_std_bound", Field::Float(stats.pipeline_std_bound))
        .push("pass", Field::Bool(stats.within_bound()));
    Ok(Outcome {
        records: vec![r],
        converged: true,
    })
}

pub fn cmd_show_plan(problem: &EvolutionProblem, config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let params = choose_parameters(problem, config.eps, &config.overrides)?;
    let mut r = parameter_record(&params);
    r.push("t_js", float_list(&params.t_js))
        .push("alphas", float_list(&params.alphas))
        .push(
            "query_count",
            Field::Int(analytic_query_count(problem, &params)?),
        )
        .push("max_depth", Field::Int(max_depth(problem, &params)?));
    Ok(Outcome {
        records: vec![r],
        converged: true,
    })
}
