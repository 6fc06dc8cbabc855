//! Chebyshev extrapolation of sampled amplitudes to zero step size.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::trotter::FormulaOrder;

/// Disc radius used when none is given; `ρ = 2 + √3`.
pub const DEFAULT_R_DISC: f64 = 2.0;

fn check_even(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return invalid(format!("node count must be even and at least 2, got {n}"));
    }
    Ok(())
}

/// `s_k = cos((2k-1)π/(2n))`, `k = 1..=n`, descending.
pub fn cheb_nodes(n: usize) -> Result<Vec<f64>> {
    check_even(n)?;
    Ok((1..=n)
        .map(|k| ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos())
        .collect())
}

/// Weights `d_k = (1/n)(-1)^{k+n/2} tan((2k-1)π/(2n))` with
/// `Σ_k d_k f(s_k)` equal to the degree-`(n-1)` interpolant at zero.
pub fn cheb_weights_at_zero(n: usize) -> Result<Vec<f64>> {
    check_even(n)?;
    Ok((1..=n)
        .map(|k| {
            let sign = if (k + n / 2).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * ((2 * k - 1) as f64 * PI / (2 * n) as f64).tan() / n as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebPlan {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebPlan {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            n,
            nodes: cheb_nodes(n)?,
            weights: cheb_weights_at_zero(n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_k |d_k|`, the amplification of per-node errors.
    pub fn weight_l1(&self) -> f64 {
        self.weights.iter().map(|d| d.abs()).sum()
    }
}

/// `Σ_k d_k f(s_k)`.
pub fn extrapolate_to_zero(samples: &[Complex64], plan: &ChebPlan) -> Result<Complex64> {
    if samples.len() != plan.n {
        return invalid(format!(
            "expected {} node samples, got {}",
            plan.n,
            samples.len()
        ));
    }
    Ok(samples.iter().zip(&plan.weights).map(|(f, d)| f * d).sum())
}

/// `4 C ρ^{-n} / (ρ - 1)`.
pub fn bernstein_error_bound(c: f64, rho: f64, n: usize) -> Result<f64> {
    if !(rho > 1.0) {
        return Err(Error::Domain(format!(
            "Bernstein parameter must exceed 1, got {rho}"
        )));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(4.0 * c * rho.powi(-(n as i32)) / (rho - 1.0))
}

/// Bernstein parameter of the ellipse inscribed in the disc of radius `r`.
pub fn rho_from_disc(r_disc: f64) -> f64 {
    r_disc + (r_disc * r_disc - 1.0).sqrt()
}

/// Node count chosen by [`choose_n`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeBudget {
    pub n: usize,
    pub predicted_error: f64,
    pub rho: f64,
    pub r_disc: f64,
    /// `ln C_est`, the log of the amplitude bound on the ellipse.
    pub log_c_est: f64,
}

/// Smallest even `n` whose Bernstein bound with
/// `C_est = exp(g/(p+1)! Σ_j α_j t_j (r t_j)^p)` is at most `eps_cheb`.
pub fn choose_n(
    eps_cheb: f64,
    g: f64,
    order: FormulaOrder,
    alphas: &[f64],
    ts: &[f64],
    r_disc: f64,
) -> Result<NodeBudget> {
    if !(eps_cheb > 0.0) || !eps_cheb.is_finite() {
        return invalid(format!(
            "Chebyshev tolerance must be positive, got {eps_cheb}"
        ));
    }
    if !(r_disc > 1.0) || !r_disc.is_finite() {
        return invalid(format!("disc radius must exceed 1, got {r_disc}"));
    }
    if !(g > 0.0) {
        return invalid(format!("g must be positive, got {g}"));
    }
    if alphas.len() != ts.len() {
        return invalid("one α per stage time is required");
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && **t <= PI)) {
        return Err(Error::Domain(format!("stage time {t} outside [0, π]")));
    }
    let p = order.get() as i32;
    let p_plus_one_fact: f64 = (1..=p + 1).map(f64::from).product();
    let exponent: f64 = alphas
        .iter()
        .zip(ts)
        .map(|(a, t)| a * t * (r_disc * t).powi(p))
        .sum();
    let log_c_est = g / p_plus_one_fact * exponent;
    let rho = rho_from_disc(r_disc);
    let log_target = (4.0f64).ln() + log_c_est - (rho - 1.0).ln() - eps_cheb.ln();
    let half = (log_target / (2.0 * rho.ln())).ceil().max(1.0);
    let n = 2 * half as usize;
    let predicted_error = (log_target + eps_cheb.ln() - n as f64 * rho.ln()).exp();
    Ok(NodeBudget {
        n,
        predicted_error,
        rho,
        r_disc,
        log_c_est,
    })
}
