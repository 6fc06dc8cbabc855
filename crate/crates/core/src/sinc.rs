//! Fractional queries by Gaussian-windowed cardinal-sine interpolation.
//!
//! Given amplitudes `x̃(n)` of integer powers `U^{m+n}`, `n ∈ [-q, q]`, the
//! fractional power `U^{m+r}` is estimated as
//!
//! ```text
//! x̃(r) ≈ Σ_n sinc(r - n) w(n) x̃(n) / w(r)
//! ```
//!
//! with `w` a normalized Gaussian of width `σ`. The module also carries the
//! closed-form error and noise-propagation bounds that go with it.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Normalized cardinal sine `sin(πx)/(πx)`; exactly zero at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// `w(t) = exp(-t²/(2σ²)) / (σ √(2π))`.
pub fn gaussian_window(t: f64, sigma: f64) -> f64 {
    (-t * t / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Window width that balances the spectral and truncation exponents.
pub fn balanced_sigma(q: usize) -> f64 {
    ((q as f64 + 2.0) / PI).sqrt()
}

fn q_bound_constant() -> f64 {
    (4.0 * (2.0 * PI).sqrt() + 8.0) / (PI * (1.0 / 3.0 + PI / 12.0).exp())
}

/// Interpolation error guaranteed for half-width `q`: the `ε̃` at which the
/// sample-count bound of [`choose_q`] is met with equality.
pub fn interp_error_for_q(q: usize) -> f64 {
    q_bound_constant() * (-PI * q as f64 / 6.0).exp()
}

/// Result of [`choose_q`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QChoice {
    pub q: usize,
    /// Tolerance was `>= 1`, so `q` was pinned to 1.
    pub clamped: bool,
    /// The precondition `π²ε²/(e^{π/2}(4√(2π)+8)²) <= 1/e` of the bound holds.
    pub validity_holds: bool,
}

/// Smallest `q >= 1` with `q >= (6/π) ln((4√(2π)+8) / (π e^{1/3+π/12} ε))`.
pub fn choose_q(eps_interp: f64) -> Result<QChoice> {
    if !(eps_interp > 0.0) || !eps_interp.is_finite() {
        return invalid(format!(
            "interpolation tolerance must be positive and finite, got {eps_interp}"
        ));
    }
    let c = 4.0 * (2.0 * PI).sqrt() + 8.0;
    let validity_holds = PI * PI * eps_interp * eps_interp / ((PI / 2.0).exp() * c * c) <= 1.0 / E;
    if eps_interp >= 1.0 {
        return Ok(QChoice {
            q: 1,
            clamped: true,
            validity_holds,
        });
    }
    let bound = 6.0 / PI * (q_bound_constant() / eps_interp).ln();
    let q = (bound.ceil() as usize).max(1);
    Ok(QChoice {
        q,
        clamped: false,
        validity_holds,
    })
}

/// Sample window and weights for one fractional query at `position = m + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SincPlan {
    q: usize,
    sigma: f64,
    sigma_f: f64,
    m: i64,
    r: f64,
    /// `sinc(r - n) w(n)` for `n = -q..=q`.
    windowed: Vec<f64>,
    window_at_r: f64,
}

impl SincPlan {
    /// Plan with the balanced width `σ = √((q+2)/π)`.
    pub fn new(q: usize, position: f64) -> Result<Self> {
        Self::with_sigma(q, position, balanced_sigma(q))
    }

    /// Plan with an explicit window width.
    pub fn with_sigma(q: usize, position: f64, sigma: f64) -> Result<Self> {
        if q == 0 {
            return invalid("sinc half-width q must be at least 1");
        }
        if !position.is_finite() {
            return invalid("fractional query position must be finite");
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid(format!("window width must be positive, got {sigma}"));
        }
        let m = position.floor();
        let r = position - m;
        let windowed = (-(q as i64)..=q as i64)
            .map(|n| sinc(r - n as f64) * gaussian_window(n as f64, sigma))
            .collect();
        Ok(Self {
            q,
            sigma,
            sigma_f: 1.0 / (4.0 * PI * sigma),
            m: m as i64,
            r,
            windowed,
            window_at_r: gaussian_window(r, sigma),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `1/(4πσ)`.
    pub fn sigma_f(&self) -> f64 {
        self.sigma_f
    }

    /// Integer base power `⌊position⌋`.
    pub fn m(&self) -> i64 {
        self.m
    }

    /// Fractional offset in `[0, 1)`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// `w(r)`.
    pub fn window_at_r(&self) -> f64 {
        self.window_at_r
    }

    pub fn len(&self) -> usize {
        self.windowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windowed.is_empty()
    }

    /// Effective per-sample weights `sinc(r - n) w(n) / w(r)`.
    pub fn weights(&self) -> Vec<f64> {
        self.windowed.iter().map(|w| w / self.window_at_r).collect()
    }

    /// `Σ_n |weight_n|`, the noise amplification in the sup norm.
    pub fn weight_l1(&self) -> f64 {
        self.windowed.iter().map(|w| w.abs()).sum::<f64>() / self.window_at_r
    }

    /// Powers `m + n` at which samples are required, in window order.
    pub fn sample_powers(&self) -> impl Iterator<Item = i64> + '_ {
        let q = self.q as i64;
        (-q..=q).map(move |n| self.m + n)
    }
}

/// Sinc plan for the fractional query `g / s_k`, with `σ = √((q+2)/π)`.
pub fn build_sinc_plan(q: usize, g_over_sk: f64) -> Result<SincPlan> {
    SincPlan::new(q, g_over_sk)
}

/// Amplitudes at consecutive integer powers `base_power - q ..= base_power + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    base_power: i64,
    samples: Vec<Complex64>,
    variances: Option<Vec<f64>>,
}

impl AmplitudeSeries {
    const MODULUS_SLACK: f64 = 1e-9;

    pub fn new(base_power: i64, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len().is_multiple_of(2) {
            return invalid(format!(
                "series length must be odd (2q+1), got {}",
                samples.len()
            ));
        }
        if let Some(z) = samples
            .iter()
            .find(|z| !(z.norm() <= 1.0 + Self::MODULUS_SLACK))
        {
            return invalid(format!("amplitude {z} exceeds unit modulus"));
        }
        Ok(Self {
            base_power,
            samples,
            variances: None,
        })
    }

    /// Series without the unit-modulus check, for noisy estimates.
    pub fn new_unchecked(base_power: i64, samples: Vec<Complex64>) -> Self {
        Self {
            base_power,
            samples,
            variances: None,
        }
    }

    pub fn with_variances(mut self, variances: Vec<f64>) -> Result<Self> {
        if variances.len() != self.samples.len() {
            return invalid("one variance per sample is required");
        }
        if variances.iter().any(|v| !(*v >= 0.0)) {
            return invalid("variances must be nonnegative");
        }
        self.variances = Some(variances);
        Ok(self)
    }

    pub fn base_power(&self) -> i64 {
        self.base_power
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn variances(&self) -> Option<&[f64]> {
        self.variances.as_deref()
    }
}

/// `Σ_n sinc(r - n) w(n) x̃(n) / w(r)`. At `r = 0` the centre sample is
/// returned unchanged.
pub fn sinc_estimate(series: &AmplitudeSeries, plan: &SincPlan) -> Result<Complex64> {
    if series.samples.len() != plan.len() {
        return invalid(format!(
            "series has {} samples, plan expects {}",
            series.samples.len(),
            plan.len()
        ));
    }
    if series.base_power != plan.m {
        return invalid(format!(
            "series base power {} does not match plan base {}",
            series.base_power, plan.m
        ));
    }
    Ok(assemble(&series.samples, plan))
}

pub(crate) fn assemble(samples: &[Complex64], plan: &SincPlan) -> Complex64 {
    if plan.r == 0.0 {
        return samples[plan.q];
    }
    let sum: Complex64 = samples.iter().zip(&plan.windowed).map(|(x, w)| x * w).sum();
    sum / plan.window_at_r
}

/// Aliasing error bound `(8/√(2π) + 2) exp(-π²σ²/2)`, valid for `σ >= 1/(4π)`.
pub fn spectral_error_bound(sigma: f64) -> Result<f64> {
    if !(sigma >= 1.0 / (4.0 * PI)) {
        return Err(Error::Domain(format!(
            "spectral bound needs σ >= 1/(4π), got {sigma}"
        )));
    }
    Ok((8.0 / (2.0 * PI).sqrt() + 2.0) * (-PI * PI * sigma * sigma / 2.0).exp())
}

/// Truncation error bound `2 exp(-(q+2)²/(2σ²))`.
pub fn truncation_error_bound(q: usize, sigma: f64) -> f64 {
    let shift = q as f64 + 2.0;
    2.0 * (-shift * shift / (2.0 * sigma * sigma)).exp()
}

/// Sup-norm error propagation: `ε (3 + (2/π) ln(2q))`.
pub fn uncertainty_bound_linf(q: usize, eps_estimate: f64) -> Result<f64> {
    if q == 0 {
        return invalid("q must be at least 1");
    }
    Ok(eps_estimate * (3.0 + 2.0 / PI * (2.0 * q as f64).ln()))
}

/// `3 + 4/π²`, the worst-case `Σ_n sinc²(t - n)` constant.
pub const VARIANCE_FACTOR: f64 = 3.0 + 4.0 / (PI * PI);

/// Gaussian noise propagation: `(3 + 4/π²) max_n σ_n²`.
pub fn variance_bound(max_variance: f64) -> f64 {
    VARIANCE_FACTOR * max_variance
}

/// `Σ_{n=-q}^{q} |sinc(t - n)|`.
pub fn sinc_l1_norm(t: f64, q: usize) -> f64 {
    let q = q as i64;
    (-q..=q).map(|n| sinc(t - n as f64).abs()).sum()
}

/// `Σ_{n=-q}^{q} sinc²(t - n)`.
pub fn sinc_l2_norm_sq(t: f64, q: usize) -> f64 {
    let q = q as i64;
    (-q..=q).map(|n| sinc(t - n as f64).powi(2)).sum()
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn series(values: &[(f64, f64)]) -> Vec<Complex64> {
        values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
    }

    proptest! {
        #[test]
        fn estimate_is_linear(
            xs in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 11),
            ys in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 11),
            a in -1.0f64..1.0, b in -1.0f64..1.0, pos in -20.0f64..20.0,
        ) {
            let plan = SincPlan::new(5, pos).unwrap();
            let (x, y) = (series(&xs), series(&ys));
            let combo: Vec<Complex64> = x.iter().zip(&y).map(|(u, v)| u * a + v * b).collect();
            let est = |s: Vec<Complex64>| sinc_estimate(&AmplitudeSeries::new_unchecked(plan.m(), s), &plan).unwrap();
            let lhs = est(combo);
            let rhs = est(x) * a + est(y) * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn reproduces_centre_sample_at_integers(xs in prop::collection::vec((-0.7f64..0.7, -0.7f64..0.7), 9), m in -50i64..50) {
            let plan = SincPlan::new(4, m as f64).unwrap();
            let s = series(&xs);
            let est = sinc_estimate(&AmplitudeSeries::new(m, s.clone()).unwrap(), &plan).unwrap();
            prop_assert_eq!(est, s[4]);
        }

        #[test]
        fn l1_and_l2_weight_bounds(t in -60.0f64..60.0, q in 1usize..50) {
            prop_assert!(sinc_l1_norm(t, q) <= uncertainty_bound_linf(q, 1.0).unwrap());
            prop_assert!(sinc_l2_norm_sq(t, q) <= VARIANCE_FACTOR);
        }
    }
}
