//! End-to-end estimation of `⟨ψ₁| ∏_j V_j e^{i T_j H_j} |ψ₂⟩`.
//!
//! Each stage time is split as `T_j = g t_j`. At every Chebyshev node `s_k`
//! the amplitude of `∏_j V_j S_j(s_k t_j)^{g/s_k}` is obtained from integer
//! powers by windowed sinc interpolation, and the node values are then
//! extrapolated to `s = 0`, where the product formula becomes exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::cheb::{choose_n, extrapolate_to_zero, ChebPlan, DEFAULT_R_DISC};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    eig_hermitian, eig_unitary, is_unitary, pow_unsigned, ComplexMatrix, NormalEigen, StateVector,
};
use crate::sinc::{
    assemble, choose_q, interp_error_for_q, uncertainty_bound_linf, variance_bound, SincPlan,
    VARIANCE_FACTOR,
};
use crate::trotter::{
    alpha_commutator, alpha_upper_bound, stage_count, suzuki_formula, DecomposedHamiltonian,
    FormulaOrder,
};

/// Tolerance for the unitarity of the interleaved `V_j`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest power taken by repeated squaring; beyond it `S` is diagonalised.
pub const SQUARING_LIMIT: u64 = 64;
/// Node-count ceiling for adaptive doubling.
pub const ADAPTIVE_N_CAP: usize = 64;
/// `Σ_j t_j` may not exceed this, keeping every sampled frequency inside the band.
pub const STEP_SUM_LIMIT: f64 = PI / 2.0;

#[derive(Debug, Clone)]
pub struct EvolutionStage {
    v: ComplexMatrix,
    h: DecomposedHamiltonian,
    time: f64,
}

impl EvolutionStage {
    pub fn new(v: ComplexMatrix, h: DecomposedHamiltonian, time: f64) -> Result<Self> {
        if v.nrows() != v.ncols() || v.nrows() != h.dim() {
            return invalid(format!(
                "V is {}x{} but H acts on dimension {}",
                v.nrows(),
                v.ncols(),
                h.dim()
            ));
        }
        if !is_unitary(&v, UNITARY_TOL) {
            return invalid("V must be unitary");
        }
        if !(time >= 0.0) || !time.is_finite() {
            return invalid(format!(
                "evolution time must be finite and nonnegative, got {time}"
            ));
        }
        Ok(Self { v, h, time })
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn hamiltonian(&self) -> &DecomposedHamiltonian {
        &self.h
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// Ordered stages and the two boundary states.
#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    stages: Vec<EvolutionStage>,
    psi1: StateVector,
    psi2: StateVector,
}

impl EvolutionProblem {
    pub fn new(stages: Vec<EvolutionStage>, psi1: StateVector, psi2: StateVector) -> Result<Self> {
        if stages.is_empty() {
            return invalid("at least one stage is required");
        }
        let dim = psi2.dim();
        if psi1.dim() != dim {
            return invalid(format!("state dimensions differ: {} vs {dim}", psi1.dim()));
        }
        if let Some(bad) = stages.iter().find(|s| s.h.dim() != dim) {
            return invalid(format!(
                "stage of dimension {} does not match states of dimension {dim}",
                bad.h.dim()
            ));
        }
        Ok(Self { stages, psi1, psi2 })
    }

    pub fn stages(&self) -> &[EvolutionStage] {
        &self.stages
    }

    pub fn psi1(&self) -> &StateVector {
        &self.psi1
    }

    pub fn psi2(&self) -> &StateVector {
        &self.psi2
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn dim(&self) -> usize {
        self.psi2.dim()
    }

    pub fn times(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.time).collect()
    }

    pub fn total_time(&self) -> f64 {
        self.stages.iter().map(|s| s.time).sum()
    }

    pub fn max_time(&self) -> f64 {
        self.stages.iter().map(|s| s.time).fold(0.0, f64::max)
    }

    /// `ψ₁† M ψ₂` where `M = ∏_j V_j F_j`, applied right to left.
    fn contract(&self, mut factor: impl FnMut(usize) -> ComplexMatrix) -> Complex64 {
        let mut v = self.psi2.as_vector().clone();
        for (j, stage) in self.stages.iter().enumerate().rev() {
            v = &stage.v * (factor(j) * v);
        }
        self.psi1.as_vector().dotc(&v)
    }
}

/// Exact amplitude by diagonalising each `Σ_γ H_{j,γ}`.
pub fn exact_amplitude(problem: &EvolutionProblem) -> Result<Complex64> {
    let exps = problem
        .stages
        .iter()
        .map(|s| Ok(eig_hermitian(&s.h.total())?.exp_i(Complex64::new(s.time, 0.0))))
        .collect::<Result<Vec<_>>>()?;
    Ok(problem.contract(|j| exps[j].clone()))
}

/// Explicit values that replace the automatic choices.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub p: Option<FormulaOrder>,
    pub g: Option<u64>,
    pub n: Option<usize>,
    pub q: Option<usize>,
    pub r_disc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterChoice {
    pub p: FormulaOrder,
    pub g: u64,
    pub n: usize,
    pub q: usize,
    pub t_js: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_max: f64,
    pub t_max: f64,
    pub eps: f64,
    pub eps_cheb: f64,
    pub eps_sinc: f64,
    pub r_disc: f64,
    /// Bernstein bound for the chosen `n`.
    pub predicted_cheb_error: f64,
    /// Interpolation error estimate for the chosen `q`.
    pub predicted_sinc_error: f64,
    /// The `g` formula degenerated (`α_max = 0` or `p = 1`).
    pub g_fallback: bool,
    /// `g` was set by `Σ_j t_j <= π/2` rather than by the formula.
    pub g_step_limited: bool,
    /// Some `α_j` is the crude upper bound instead of the exact sum.
    pub alpha_fallback: bool,
}

/// Nearest admissible order to `√(ln(M T_max / ln(1/ε)) / ln 5)`, or 1 when
/// the logarithm is not positive.
pub fn select_order(num_stages: usize, t_max: f64, eps: f64) -> FormulaOrder {
    let ratio = num_stages as f64 * t_max / (1.0 / eps).ln();
    if !(ratio > 1.0) {
        return FormulaOrder::FIRST;
    }
    let x = (ratio.ln() / 5f64.ln()).sqrt();
    if x <= 1.5 {
        FormulaOrder::FIRST
    } else {
        let even = (2.0 * (x / 2.0).round()).max(2.0) as u32;
        FormulaOrder::new(even).expect("even order")
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    Ok(())
}

/// Parameter selection from explicit `α_j` (already evaluated for `order`).
pub fn parameters_from_alphas(
    order: FormulaOrder,
    times: &[f64],
    alphas: &[f64],
    eps: f64,
    overrides: &Overrides,
) -> Result<ParameterChoice> {
    check_eps(eps)?;
    if times.is_empty() || times.len() != alphas.len() {
        return invalid("one α per stage time is required");
    }
    if times
        .iter()
        .chain(alphas)
        .any(|x| !(*x >= 0.0) || !x.is_finite())
    {
        return invalid("stage times and α must be finite and nonnegative");
    }
    let r_disc = overrides.r_disc.unwrap_or(DEFAULT_R_DISC);
    let eps_cheb = eps / 2.0;
    let eps_sinc = eps / 2.0;
    let m = times.len() as f64;
    let p = order.get();
    let alpha_max = alphas.iter().copied().fold(0.0, f64::max);
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let total: f64 = times.iter().sum();

    let g_formula = if p == 1 || alpha_max == 0.0 || t_max == 0.0 {
        None
    } else {
        let p_fact: f64 = (1..=p + 1).map(f64::from).product();
        let inner = (p - 1) as f64 * m * alpha_max * t_max.powi(p as i32 + 1)
            / (p_fact * (1.0 / eps_cheb).ln());
        Some(((r_disc * inner.powf(1.0 / p as f64)).ceil() as u64).max(1))
    };
    let g_step = ((total / STEP_SUM_LIMIT) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    let g = match overrides.g {
        Some(0) => return invalid("g must be at least 1"),
        Some(g) => {
            if total / g as f64 > STEP_SUM_LIMIT * (1.0 + 1e-12) {
                return invalid(format!("g = {g} gives Σ t_j = {} > π/2", total / g as f64));
            }
            g
        }
        None => g_formula.unwrap_or(1).max(g_step),
    };
    let g_step_limited = overrides.g.is_none() && g_step > g_formula.unwrap_or(1);
    let t_js: Vec<f64> = times.iter().map(|t| t / g as f64).collect();

    let budget = choose_n(eps_cheb, g as f64, order, alphas, &t_js, r_disc)?;
    let n = match overrides.n {
        Some(n) if n < 2 || n % 2 != 0 => {
            return invalid(format!("n must be even and at least 2, got {n}"))
        }
        Some(n) => n,
        None => budget.n,
    };
    let predicted_cheb_error =
        crate::cheb::bernstein_error_bound(budget.log_c_est.exp(), budget.rho, n)?;
    let q = match overrides.q {
        Some(0) => return invalid("q must be at least 1"),
        Some(q) => q,
        None => choose_q(eps_sinc)?.q,
    };

    Ok(ParameterChoice {
        p: order,
        g,
        n,
        q,
        t_js,
        alphas: alphas.to_vec(),
        alpha_max,
        t_max,
        eps,
        eps_cheb,
        eps_sinc,
        r_disc,
        predicted_cheb_error,
        predicted_sinc_error: interp_error_for_q(q),
        g_fallback: g_formula.is_none(),
        g_step_limited,
        alpha_fallback: false,
    })
}

/// `α_j` for every stage, falling back to [`alpha_upper_bound`] when exact
/// enumeration is out of reach. The flag reports whether that happened.
pub fn stage_alphas(problem: &EvolutionProblem, order: FormulaOrder) -> Result<(Vec<f64>, bool)> {
    let mut fallback = false;
    let alphas = problem
        .stages
        .iter()
        .map(|s| match alpha_commutator(&s.h, order) {
            Ok(a) => Ok(a),
            Err(Error::Capability(_)) => {
                fallback = true;
                Ok(alpha_upper_bound(&s.h, order))
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((alphas, fallback))
}

pub fn choose_parameters(
    problem: &EvolutionProblem,
    eps: f64,
    overrides: &Overrides,
) -> Result<ParameterChoice> {
    check_eps(eps)?;
    let order = overrides
        .p
        .unwrap_or_else(|| select_order(problem.num_stages(), problem.max_time(), eps));
    let (alphas, alpha_fallback) = stage_alphas(problem, order)?;
    let mut choice = parameters_from_alphas(order, &problem.times(), &alphas, eps, overrides)?;
    choice.alpha_fallback = alpha_fallback;
    Ok(choice)
}

/// Chebyshev plan and one sinc plan per node for `params`.
pub fn sampling_plan(params: &ParameterChoice) -> Result<(ChebPlan, Vec<SincPlan>)> {
    let cheb = ChebPlan::new(params.n)?;
    let sinc = cheb
        .nodes()
        .iter()
        .map(|&s| SincPlan::new(params.q, params.g as f64 / s))
        .collect::<Result<Vec<_>>>()?;
    Ok((cheb, sinc))
}

fn stage_costs(problem: &EvolutionProblem, order: FormulaOrder) -> Vec<u64> {
    problem
        .stages
        .iter()
        .map(|s| stage_count(s.h.len(), order))
        .collect()
}

/// `Σ_k Σ_{o=-q}^{q} Σ_j stages_j |m_k + o|`, evaluated without sampling.
pub fn analytic_query_count(problem: &EvolutionProblem, params: &ParameterChoice) -> Result<u64> {
    let per_power: u64 = stage_costs(problem, params.p).iter().sum();
    let (_, plans) = sampling_plan(params)?;
    Ok(plans
        .iter()
        .map(|plan| plan.sample_powers().map(|k| k.unsigned_abs()).sum::<u64>() * per_power)
        .sum())
}

/// `max_k Σ_j stages_j (|m_k| + q)`: the deepest single circuit.
pub fn max_depth(problem: &EvolutionProblem, params: &ParameterChoice) -> Result<u64> {
    let per_power: u64 = stage_costs(problem, params.p).iter().sum();
    let (_, plans) = sampling_plan(params)?;
    Ok(plans
        .iter()
        .map(|plan| (plan.m().unsigned_abs() + params.q as u64) * per_power)
        .max()
        .unwrap_or(0))
}

/// One sampled amplitude with its cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: Complex64,
    /// Product-formula stage applications spent on this sample.
    pub queries: u64,
    /// The power was negative and realised through `S†`.
    pub inverse: bool,
}

/// Product formulas `S_j(s t_j)` at one Chebyshev node.
struct NodeSampler<'a> {
    problem: &'a EvolutionProblem,
    formulas: Vec<ComplexMatrix>,
    eigens: Vec<Option<NormalEigen>>,
    costs: Vec<u64>,
}

impl<'a> NodeSampler<'a> {
    fn new(problem: &'a EvolutionProblem, params: &ParameterChoice, s: f64) -> Result<Self> {
        let formulas = problem
            .stages
            .iter()
            .zip(&params.t_js)
            .map(|(stage, t)| suzuki_formula(&stage.h, params.p, Complex64::new(s * t, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let eigens = vec![None; formulas.len()];
        Ok(Self {
            problem,
            formulas,
            eigens,
            costs: stage_costs(problem, params.p),
        })
    }

    fn power(&mut self, j: usize, k: i64) -> Result<ComplexMatrix> {
        let mag = k.unsigned_abs();
        if mag <= SQUARING_LIMIT {
            return Ok(if k >= 0 {
                pow_unsigned(&self.formulas[j], mag)
            } else {
                pow_unsigned(&self.formulas[j].adjoint(), mag)
            });
        }
        if self.eigens[j].is_none() {
            self.eigens[j] = Some(eig_unitary(&self.formulas[j])?);
        }
        Ok(self.eigens[j].as_ref().expect("cached").powi(k))
    }

    fn sample(&mut self, k: i64) -> Result<Sample> {
        let powers = (0..self.formulas.len())
            .map(|j| self.power(j, k))
            .collect::<Result<Vec<_>>>()?;
        let value = self.problem.contract(|j| powers[j].clone());
        let queries = self.costs.iter().sum::<u64>() * k.unsigned_abs();
        Ok(Sample {
            value,
            queries,
            inverse: k < 0,
        })
    }
}

/// `⟨ψ₁| ∏_j V_j S_j(s_k t_j)^{m_k + o} |ψ₂⟩` for node `k` (zero based).
pub fn sample_amplitude(
    problem: &EvolutionProblem,
    params: &ParameterChoice,
    node: usize,
    offset: i64,
) -> Result<Sample> {
    let (cheb, plans) = sampling_plan(params)?;
    let Some(plan) = plans.get(node) else {
        return invalid(format!(
            "node index {node} out of range for n = {}",
            params.n
        ));
    };
    if offset.unsigned_abs() > params.q as u64 {
        return invalid(format!("offset {offset} outside [-{q}, {q}]", q = params.q));
    }
    NodeSampler::new(problem, params, cheb.nodes()[node])?.sample(plan.m() + offset)
}

struct NodeSamples {
    samples: Vec<Complex64>,
    queries: u64,
    inverse: bool,
}

fn sample_nodes(
    problem: &EvolutionProblem,
    params: &ParameterChoice,
) -> Result<(ChebPlan, Vec<SincPlan>, Vec<NodeSamples>)> {
    let (cheb, plans) = sampling_plan(params)?;
    let nodes = cheb
        .nodes()
        .par_iter()
        .zip(plans.par_iter())
        .map(|(&s, plan)| {
            let mut sampler = NodeSampler::new(problem, params, s)?;
            let mut out = NodeSamples {
                samples: Vec::with_capacity(plan.len()),
                queries: 0,
                inverse: false,
            };
            for k in plan.sample_powers() {
                let sample = sampler.sample(k)?;
                out.samples.push(sample.value);
                out.queries += sample.queries;
                out.inverse |= sample.inverse;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cheb, plans, nodes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    pub adaptive: bool,
    pub overrides: Overrides,
    /// Compute the exact amplitude for comparison.
    pub with_exact: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            adaptive: false,
            overrides: Overrides::default(),
            with_exact: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub value: Complex64,
    pub exact_value: Option<Complex64>,
    pub eps_cheb: f64,
    pub eps_sinc: f64,
    /// Stage applications for the final parameters.
    pub query_count: u64,
    /// Stage applications summed over every adaptive round.
    pub total_query_count: u64,
    pub max_depth: u64,
    pub parameters: ParameterChoice,
    /// False when adaptive doubling hit the cap without settling.
    pub converged: bool,
    /// `(n, estimate)` for every round, in order.
    pub n_history: Vec<(usize, Complex64)>,
    /// Some sample used a negative power.
    pub inverse_powers_used: bool,
}

impl EstimateReport {
    pub fn abs_error(&self) -> Option<f64> {
        self.exact_value.map(|e| (self.value - e).norm())
    }
}

struct Round {
    value: Complex64,
    queries: u64,
    inverse: bool,
}

fn estimate_once(problem: &EvolutionProblem, params: &ParameterChoice) -> Result<Round> {
    let (cheb, plans, nodes) = sample_nodes(problem, params)?;
    Ok(Round {
        value: assemble_nodes(&cheb, &plans, &nodes, None)?,
        queries: nodes.iter().map(|n| n.queries).sum(),
        inverse: nodes.iter().any(|n| n.inverse),
    })
}

/// Runs the estimator for explicit parameters. With `adaptive`, `n` is
/// doubled until successive estimates differ by less than `eps / 4`.
pub fn estimate_with_parameters(
    problem: &EvolutionProblem,
    params: &ParameterChoice,
    adaptive: bool,
    with_exact: bool,
) -> Result<EstimateReport> {
    let mut params = params.clone();
    let mut round = estimate_once(problem, &params)?;
    let mut history = vec![(params.n, round.value)];
    let mut total_queries = round.queries;
    let mut inverse = round.inverse;
    let mut converged = true;
    if adaptive {
        converged = false;
        while 2 * params.n <= ADAPTIVE_N_CAP {
            let mut next = params.clone();
            next.n *= 2;
            let next_round = estimate_once(problem, &next)?;
            total_queries += next_round.queries;
            inverse |= next_round.inverse;
            history.push((next.n, next_round.value));
            let settled = (next_round.value - round.value).norm() < params.eps / 4.0;
            params = next;
            round = next_round;
            if settled {
                converged = true;
                break;
            }
        }
    }
    let exact_value = if with_exact {
        Some(exact_amplitude(problem)?)
    } else {
        None
    };
    Ok(EstimateReport {
        value: round.value,
        exact_value,
        eps_cheb: params.eps_cheb,
        eps_sinc: params.eps_sinc,
        query_count: round.queries,
        total_query_count: total_queries,
        max_depth: max_depth(problem, &params)?,
        parameters: params,
        converged,
        n_history: history,
        inverse_powers_used: inverse,
    })
}

pub fn full_estimate(
    problem: &EvolutionProblem,
    eps: f64,
    options: &EstimateOptions,
) -> Result<EstimateReport> {
    let params = choose_parameters(problem, eps, &options.overrides)?;
    estimate_with_parameters(problem, &params, options.adaptive, options.with_exact)
}

/// Empirical moments of a complex estimator under noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMoments {
    pub mean: Complex64,
    pub var_re: f64,
    pub var_im: f64,
}

fn moments(values: &[Complex64]) -> NoiseMoments {
    // shifted by the first value so identical inputs give exactly zero
    let n = values.len() as f64;
    let shift = values[0];
    let d: Vec<Complex64> = values.iter().map(|v| v - shift).collect();
    let d_mean: Complex64 = d.iter().sum::<Complex64>() / n;
    let denom = (n - 1.0).max(1.0);
    let var_re = d.iter().map(|v| (v.re - d_mean.re).powi(2)).sum::<f64>() / denom;
    let var_im = d.iter().map(|v| (v.im - d_mean.im).powi(2)).sum::<f64>() / denom;
    NoiseMoments {
        mean: shift + d_mean,
        var_re,
        var_im,
    }
}

pub const MIN_TRIALS: usize = 100;

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn noise_dist(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return invalid(format!(
            "noise level must be finite and nonnegative, got {sigma}"
        ));
    }
    Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return invalid(format!(
            "at least {MIN_TRIALS} trials are required, got {trials}"
        ));
    }
    Ok(())
}

fn noisy(rng: &mut ChaCha8Rng, dist: &Normal<f64>, clean: Complex64) -> Complex64 {
    clean + Complex64::new(rng.sample(dist), rng.sample(dist))
}

/// Moments of `Σ_n c_n X_n` with `X_n` carrying i.i.d. complex Gaussian
/// noise of per-component standard deviation `sigma` around `clean_n`.
pub fn linear_noise_study(
    coefficients: &[f64],
    clean: &[Complex64],
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<NoiseMoments> {
    check_trials(trials)?;
    if coefficients.len() != clean.len() {
        return invalid("one coefficient per sample is required");
    }
    let dist = noise_dist(sigma)?;
    let values: Vec<Complex64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            coefficients
                .iter()
                .zip(clean)
                .map(|(c, x)| noisy(&mut rng, &dist, *x) * c)
                .sum()
        })
        .collect();
    Ok(moments(&values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStatistics {
    pub sigma_noise: f64,
    pub trials: usize,
    pub moments: NoiseMoments,
    /// Noise-free estimate.
    pub clean_value: Complex64,
    /// Sup-norm amplification bound of one sinc stage: `σ (3 + (2/π) ln 2q)`.
    pub linf_bound: f64,
    /// Variance bound of one unwindowed sinc stage: `(3 + 4/π²) σ²`.
    pub sinc_variance_bound: f64,
    /// Per-component standard deviation bound of the final estimate:
    /// `σ Σ_k |d_k| / min_k w(r_k) √(3 + 4/π²)`.
    pub pipeline_std_bound: f64,
}

impl NoiseStatistics {
    /// Both component standard deviations respect the pipeline bound, with
    /// a `3/√trials` allowance for sampling error.
    pub fn within_bound(&self) -> bool {
        let slack = 1.0 + 3.0 / (self.trials as f64).sqrt();
        let limit = self.pipeline_std_bound * slack;
        self.moments.var_re.sqrt() <= limit && self.moments.var_im.sqrt() <= limit
    }
}

fn assemble_nodes(
    cheb: &ChebPlan,
    plans: &[SincPlan],
    nodes: &[NodeSamples],
    mut noise: Option<(&mut ChaCha8Rng, &Normal<f64>)>,
) -> Result<Complex64> {
    let values: Vec<Complex64> = nodes
        .iter()
        .zip(plans)
        .map(|(n, plan)| match noise.as_mut() {
            None => assemble(&n.samples, plan),
            Some((rng, dist)) => {
                let perturbed: Vec<Complex64> =
                    n.samples.iter().map(|x| noisy(rng, dist, *x)).collect();
                assemble(&perturbed, plan)
            }
        })
        .collect();
    extrapolate_to_zero(&values, cheb)
}

/// A single estimate with Gaussian noise on every amplitude sample, as
/// trial 0 of [`noise_study`] with the same seed.
pub fn noisy_estimate(
    problem: &EvolutionProblem,
    params: &ParameterChoice,
    sigma_noise: f64,
    seed: u64,
) -> Result<Complex64> {
    let dist = noise_dist(sigma_noise)?;
    let (cheb, plans, nodes) = sample_nodes(problem, params)?;
    assemble_nodes(
        &cheb,
        &plans,
        &nodes,
        Some((&mut trial_rng(seed, 0), &dist)),
    )
}

/// Repeats the assembly with Gaussian noise on every amplitude sample.
/// Deterministic in `seed`; trial `i` draws from stream `i`.
pub fn noise_study(
    problem: &EvolutionProblem,
    params: &ParameterChoice,
    sigma_noise: f64,
    trials: usize,
    seed: u64,
) -> Result<NoiseStatistics> {
    check_trials(trials)?;
    let dist = noise_dist(sigma_noise)?;
    let (cheb, plans, nodes) = sample_nodes(problem, params)?;
    let clean_value = assemble_nodes(&cheb, &plans, &nodes, None)?;
    let values = (0..trials)
        .into_par_iter()
        .map(|trial| {
            assemble_nodes(
                &cheb,
                &plans,
                &nodes,
                Some((&mut trial_rng(seed, trial), &dist)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let w_min = plans
        .iter()
        .map(|p| p.window_at_r())
        .fold(f64::INFINITY, f64::min);
    Ok(NoiseStatistics {
        sigma_noise,
        trials,
        moments: moments(&values),
        clean_value,
        linf_bound: uncertainty_bound_linf(params.q, sigma_noise)?,
        sinc_variance_bound: variance_bound(sigma_noise * sigma_noise),
        pipeline_std_bound: sigma_noise * cheb.weight_l1() / w_min * VARIANCE_FACTOR.sqrt(),
    })
}
