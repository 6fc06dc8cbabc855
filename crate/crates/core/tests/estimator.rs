use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sincheb_core::cheb::extrapolate_to_zero;
use sincheb_core::linalg::{identity, matrix_exp, operator_norm};
use sincheb_core::pipeline::{
    analytic_query_count, choose_parameters, exact_amplitude, full_estimate, noise_study,
    sampling_plan,
};
use sincheb_core::sinc::sinc_estimate;
use sincheb_core::{
    AmplitudeSeries, ChebPlan, Complex64, ComplexMatrix, DecomposedHamiltonian, EstimateOptions,
    EvolutionProblem, EvolutionStage, FormulaOrder, Overrides, SincPlan, StateVector,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * c(0.5, 0.0)
}

fn problem(seed: u64, dim: usize, times: &[f64]) -> EvolutionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages = times
        .iter()
        .map(|&t| {
            let raw: Vec<ComplexMatrix> = (0..2).map(|_| random_hermitian(&mut rng, dim)).collect();
            let total: f64 = raw.iter().map(|m| operator_norm(m).unwrap()).sum();
            let h = DecomposedHamiltonian::new(
                raw.into_iter().map(|m| m / c(total, 0.0)).collect(),
                "h",
            )
            .unwrap();
            let v = matrix_exp(&(random_hermitian(&mut rng, dim) * c(0.0, 1.0))).unwrap();
            EvolutionStage::new(v, h, t).unwrap()
        })
        .collect();
    let mut state = || {
        StateVector::normalized(
            (0..dim)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    };
    let (psi1, psi2) = (state(), state());
    EvolutionProblem::new(stages, psi1, psi2).unwrap()
}

/// Composing the two interpolation stages by hand on `f(s) = e^{i θ(s) x}`,
/// where the fractional power `x = g/s` makes `f(s) = e^{i g θ(s)/s}`.
#[test]
fn double_interpolation_on_an_analytic_phase() {
    let g = 3.0;
    let theta = |s: f64| 0.4 * s + 0.05 * s.powi(3);
    let cheb = ChebPlan::new(16).unwrap();
    let node_values: Vec<Complex64> = cheb
        .nodes()
        .iter()
        .map(|&s| {
            let plan = SincPlan::new(30, g / s).unwrap();
            let samples = plan
                .sample_powers()
                .map(|k| Complex64::from_polar(1.0, theta(s) * k as f64))
                .collect();
            sinc_estimate(&AmplitudeSeries::new(plan.m(), samples).unwrap(), &plan).unwrap()
        })
        .collect();
    let value = extrapolate_to_zero(&node_values, &cheb).unwrap();
    // θ(s)/s → 0.4 as s → 0
    let limit = Complex64::from_polar(1.0, g * 0.4);
    assert!((value - limit).norm() < 1e-6, "{value} vs {limit}");
}

#[test]
fn budget_holds_across_orders_and_stage_counts() {
    for (seed, times, p) in [(1, vec![1.0], 1), (2, vec![1.5, 0.5], 2), (3, vec![2.0], 4)] {
        let prob = problem(seed, 4, &times);
        let options = EstimateOptions {
            adaptive: true,
            overrides: Overrides {
                p: Some(FormulaOrder::new(p).unwrap()),
                ..Default::default()
            },
            ..Default::default()
        };
        let report = full_estimate(&prob, 1e-4, &options).unwrap();
        assert!(report.converged);
        assert!(
            report.abs_error().unwrap() <= 1e-4,
            "p={p}: {:?}",
            report.abs_error()
        );
        assert_eq!(
            report.query_count,
            analytic_query_count(&prob, &report.parameters).unwrap()
        );
    }
}

#[test]
fn step_sum_stays_in_band() {
    let prob = problem(4, 2, &[2.0, 3.0, 1.0]);
    let params = choose_parameters(&prob, 1e-3, &Overrides::default()).unwrap();
    assert!(params.t_js.iter().sum::<f64>() <= PI / 2.0 + 1e-12);
    for (t, big) in params.t_js.iter().zip(prob.times()) {
        assert!((t * params.g as f64 - big).abs() < 1e-12);
    }
    let (cheb, plans) = sampling_plan(&params).unwrap();
    for (s, plan) in cheb.nodes().iter().zip(&plans) {
        assert_eq!(plan.m(), (params.g as f64 / s).floor() as i64);
        assert!((0.0..1.0).contains(&plan.r()));
    }
}

#[test]
fn identity_evolution_returns_overlap() {
    let zero = StateVector::basis(2, 0).unwrap();
    let plus = StateVector::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    let z =
        ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
    let h = DecomposedHamiltonian::new(vec![z], "z").unwrap();
    let stage = EvolutionStage::new(identity(2), h, 0.0).unwrap();
    let prob = EvolutionProblem::new(vec![stage], plus.clone(), zero.clone()).unwrap();
    assert!((exact_amplitude(&prob).unwrap() - plus.inner(&zero)).norm() < 1e-15);
    let report = full_estimate(&prob, 1e-3, &EstimateOptions::default()).unwrap();
    assert!((report.value - plus.inner(&zero)).norm() < 1e-12);
}

#[test]
fn noise_statistics_are_seeded() {
    let prob = problem(5, 2, &[1.0]);
    let params = choose_parameters(&prob, 1e-3, &Overrides::default()).unwrap();
    let a = noise_study(&prob, &params, 1e-2, 500, 1).unwrap();
    let b = noise_study(&prob, &params, 1e-2, 500, 2).unwrap();
    assert_ne!(a.moments, b.moments);
    assert!(a.within_bound() && b.within_bound());
    assert_eq!(a.clean_value, b.clean_value);
}
