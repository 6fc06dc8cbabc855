//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sincheb_core::cheb::{cheb_nodes, cheb_weights_at_zero};
use sincheb_core::linalg::{matrix_exp, operator_norm};
use sincheb_core::pipeline::{full_estimate, linear_noise_study};
use sincheb_core::sinc::{
    choose_q, interp_error_for_q, sinc, sinc_estimate, sinc_l1_norm, VARIANCE_FACTOR,
};
use sincheb_core::trotter::effective_hamiltonian;
use sincheb_core::{
    AmplitudeSeries, ComplexMatrix, DecomposedHamiltonian, EstimateOptions, EvolutionProblem,
    EvolutionStage, FormulaOrder, Overrides, SincPlan, StateVector,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn criterion(id: u32, title: &str, limit: Duration, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let verdict = check();
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let pass = verdict.pass && in_time;
    let timing = if in_time {
        String::new()
    } else {
        format!(", over the {limit:?} limit")
    };
    println!(
        "criterion {id}: {} {title} ({}; {:.2}s{timing})",
        if pass { "PASS" } else { "FAIL" },
        verdict.detail,
        elapsed.as_secs_f64()
    );
    pass
}

/// Pure-phase samples `e^{2πiμn}` around base 7, interpolated at `7 + r`.
fn phase_error(mu: f64, r: f64, q: usize) -> f64 {
    let base = 7i64;
    let plan = SincPlan::new(q, base as f64 + r).unwrap();
    let phase = |x: f64| Complex64::from_polar(1.0, 2.0 * PI * mu * x);
    let samples = plan.sample_powers().map(|k| phase(k as f64)).collect();
    let series = AmplitudeSeries::new(base, samples).unwrap();
    (sinc_estimate(&series, &plan).unwrap() - phase(base as f64 + r)).norm()
}

fn sinc_convergence() -> Verdict {
    const FLOOR: f64 = 1e-13;
    let mut violations = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for mu in [-0.25, 0.25, 0.1, 0.2] {
        for r in [0.1, 0.37, 0.5, 0.9] {
            for q in [8, 16, 24, 32] {
                let err = phase_error(mu, r, q);
                let bound = interp_error_for_q(q);
                if err > bound {
                    violations.push(format!("μ={mu} r={r} q={q}: {err:.3e} > {bound:.3e}"));
                }
            }
            let errs: Vec<f64> = (8..=32).step_by(4).map(|q| phase_error(mu, r, q)).collect();
            for w in errs.windows(2) {
                if w[1] > FLOOR {
                    worst_ratio = worst_ratio.max(w[1] / w[0]);
                }
            }
        }
    }
    let pass = violations.is_empty() && worst_ratio <= 0.5;
    let mut detail = format!(
        "worst decay ratio per Δq=4 {worst_ratio:.3}; {} bound violations",
        violations.len()
    );
    if !violations.is_empty() {
        detail.push_str(&format!(" [{}]", violations.join("; ")));
    }
    Verdict { pass, detail }
}

fn choose_q_values() -> Verdict {
    let oracle = |eps: f64| {
        let num = 4.0 * (2.0 * PI).sqrt() + 8.0;
        let den = PI * (1.0 / 3.0 + PI / 12.0).exp() * eps;
        (6.0 / PI * (num / den).ln()).ceil() as usize
    };
    let got = (choose_q(1e-6).unwrap().q, choose_q(1e-3).unwrap().q);
    let pass = got == (29, 16) && oracle(1e-6) == 29 && oracle(1e-3) == 16;
    Verdict {
        pass,
        detail: format!("q(1e-6)={}, q(1e-3)={}", got.0, got.1),
    }
}

/// `V c = e_k` in the orthonormal Chebyshev basis, evaluated at zero.
fn weights_by_solve(n: usize) -> Vec<f64> {
    let nodes = cheb_nodes(n).unwrap();
    let basis = |j: usize, s: f64| {
        let scale = if j == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        scale * (j as f64 * s.acos()).cos()
    };
    let v = ComplexMatrix::from_fn(n, n, |k, j| c(basis(j, nodes[k]), 0.0));
    let inv = v.try_inverse().unwrap();
    (0..n)
        .map(|k| (0..n).map(|j| inv[(j, k)].re * basis(j, 0.0)).sum())
        .collect()
}

fn chebyshev_exactness() -> Verdict {
    let mut worst_moment: f64 = 0.0;
    for n in (2..=32).step_by(2) {
        let d = cheb_weights_at_zero(n).unwrap();
        let s = cheb_nodes(n).unwrap();
        for j in 0..n {
            let m: f64 = d.iter().zip(&s).map(|(d, s)| d * s.powi(j as i32)).sum();
            worst_moment = worst_moment.max((m - if j == 0 { 1.0 } else { 0.0 }).abs());
        }
    }
    let mut worst_solve: f64 = 0.0;
    for n in [2, 4, 8] {
        for (a, b) in cheb_weights_at_zero(n)
            .unwrap()
            .iter()
            .zip(weights_by_solve(n))
        {
            worst_solve = worst_solve.max((a - b).abs());
        }
    }
    Verdict {
        pass: worst_moment <= 1e-10 && worst_solve <= 1e-10,
        detail: format!(
            "max moment error {worst_moment:.2e}, max solve mismatch {worst_solve:.2e}"
        ),
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * c(0.5, 0.0)
}

fn random_decomposition(rng: &mut ChaCha8Rng, dim: usize, terms: usize) -> DecomposedHamiltonian {
    let raw: Vec<ComplexMatrix> = (0..terms).map(|_| random_hermitian(rng, dim)).collect();
    let total: f64 = raw.iter().map(|t| operator_norm(t).unwrap()).sum();
    DecomposedHamiltonian::new(
        raw.into_iter().map(|t| t / c(total, 0.0)).collect(),
        "random",
    )
    .unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    StateVector::normalized(
        (0..dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

fn trotter_order() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = random_decomposition(&mut rng, 4, 2);
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1, 2, 4] {
        let order = FormulaOrder::new(p).unwrap();
        let defect = |tau: f64| {
            effective_hamiltonian(&h, order, c(tau, 0.0))
                .unwrap()
                .defect_norm
        };
        let measured = (defect(0.2) / defect(0.1)).log2();
        pass &= (measured - p as f64).abs() <= 0.5;
        parts.push(format!("p={p}: {measured:.3}"));
    }
    Verdict {
        pass,
        detail: format!("measured orders {}", parts.join(", ")),
    }
}

fn random_problem(rng: &mut ChaCha8Rng, qubits: u32, stages: usize) -> EvolutionProblem {
    let dim = 1usize << qubits;
    let list = (0..stages)
        .map(|_| {
            let terms = rng.random_range(2..=3);
            let h = random_decomposition(rng, dim, terms);
            let v = matrix_exp(&(random_hermitian(rng, dim) * c(0.0, 1.0))).unwrap();
            EvolutionStage::new(v, h, rng.random_range(0.5..3.0)).unwrap()
        })
        .collect();
    let psi1 = random_state(rng, dim);
    let psi2 = random_state(rng, dim);
    EvolutionProblem::new(list, psi1, psi2).unwrap()
}

fn end_to_end() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let problems: Vec<EvolutionProblem> = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]
        .iter()
        .map(|&(q, m)| random_problem(&mut rng, q, m))
        .collect();
    let options = EstimateOptions {
        adaptive: true,
        ..Default::default()
    };
    let mut pass = true;
    let mut worst = Vec::new();
    for eps in [1e-3, 1e-5] {
        let mut max_ratio: f64 = 0.0;
        for p in &problems {
            let report = full_estimate(p, eps, &options).unwrap();
            let err = report.abs_error().unwrap();
            pass &= err <= eps;
            max_ratio = max_ratio.max(err / eps);
        }
        worst.push(format!("ε={eps:e}: max |error|/ε {max_ratio:.2e}"));
    }
    Verdict {
        pass,
        detail: format!("{} problems; {}", problems.len(), worst.join(", ")),
    }
}

fn pauli(entries: [Complex64; 4]) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &entries)
}

fn cost_scaling() -> Verdict {
    let (o, i) = (c(0.0, 0.0), c(1.0, 0.0));
    let x = pauli([o, i, i, o]);
    let z = pauli([i, o, o, -i]);
    let id = pauli([i, o, o, i]);
    let h = DecomposedHamiltonian::new(
        vec![
            x.kronecker(&x) * c(0.6, 0.0),
            z.kronecker(&id) * c(0.4, 0.0),
        ],
        "XX+ZI",
    )
    .unwrap();
    let psi1 = StateVector::basis(4, 0).unwrap();
    let psi2 = StateVector::normalized(vec![i, i, o, i]).unwrap();
    let options = EstimateOptions {
        overrides: Overrides {
            p: Some(FormulaOrder::SECOND),
            ..Default::default()
        },
        with_exact: false,
        ..Default::default()
    };
    let times = [2.0, 4.0, 8.0, 16.0];
    let mut points = Vec::new();
    for t in times {
        let stage = EvolutionStage::new(sincheb_core::linalg::identity(4), h.clone(), t).unwrap();
        let problem = EvolutionProblem::new(vec![stage], psi1.clone(), psi2.clone()).unwrap();
        let report = full_estimate(&problem, 1e-4, &options).unwrap();
        points.push((t.ln(), (report.query_count as f64).ln(), report.query_count));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let counts: Vec<String> = points.iter().map(|p| p.2.to_string()).collect();
    Verdict {
        pass: slope <= 1.3,
        detail: format!("slope {slope:.3}, query counts [{}]", counts.join(", ")),
    }
}

fn linf_stability() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [5usize, 10, 20, 40] {
        let bound = 3.0 + 2.0 / PI * (2.0 * q as f64).ln();
        let max = (0..10_000)
            .map(|i| -(q as f64) + 2.0 * q as f64 * i as f64 / 9_999.0)
            .map(|t| sinc_l1_norm(t, q))
            .fold(0.0, f64::max);
        pass &= max <= bound;
        parts.push(format!("q={q}: {max:.4} <= {bound:.4}"));
    }
    Verdict {
        pass,
        detail: parts.join(", "),
    }
}

fn variance_bound() -> Verdict {
    let trials = 100_000;
    let q = 10i64;
    let limit = VARIANCE_FACTOR * (1.0 + 3.0 / (trials as f64).sqrt());
    let clean = vec![c(0.0, 0.0); 2 * q as usize + 1];
    let mut worst: f64 = 0.0;
    for (i, t) in [0.1, 0.37, 0.5, 0.9].into_iter().enumerate() {
        let coeffs: Vec<f64> = (-q..=q).map(|n| sinc(t - n as f64)).collect();
        let m = linear_noise_study(&coeffs, &clean, 1.0, trials, i as u64).unwrap();
        worst = worst.max(m.var_re).max(m.var_im);
    }
    Verdict {
        pass: worst <= limit,
        detail: format!("max empirical variance {worst:.4} <= {limit:.4}"),
    }
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("sincheb-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let problem = dir.join("problem.json");
    std::fs::write(
        &problem,
        r#"{"qubits": 2, "stages": [{"v": {"gates": [{"gate": "H", "qubits": [1]}]},
            "hamiltonian": [{"coeff": 0.5, "pauli": "XY"}, {"coeff": 0.5, "pauli": "ZX"}], "time": 3.0}],
            "psi1": {"basis": "11"}, "psi2": {"basis": "01"}}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sincheb"))
            .args([
                "run",
                problem.to_str().unwrap(),
                "--seed",
                "42",
                "--sample-noise",
                "1e-3",
                "--adaptive",
            ])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        (status.code(), std::fs::read(out).unwrap_or_default())
    };
    let (code_a, a) = run("a.csv");
    let (code_b, b) = run("b.csv");
    let _ = std::fs::remove_dir_all(&dir);
    Verdict {
        pass: code_a == Some(0) && code_b == Some(0) && !a.is_empty() && a == b,
        detail: format!(
            "exit codes {code_a:?}/{code_b:?}, {} bytes, identical: {}",
            a.len(),
            a == b
        ),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(
            1,
            "sinc fractional queries meet the inverted error bound",
            secs(1),
            sinc_convergence,
        ),
        criterion(2, "choose_q closed form", secs(1), choose_q_values),
        criterion(
            3,
            "Chebyshev weights exactness",
            secs(1),
            chebyshev_exactness,
        ),
        criterion(4, "product formula order", secs(5), trotter_order),
        criterion(5, "end-to-end accuracy", secs(60), end_to_end),
        criterion(6, "quasi-linear query cost in T", secs(120), cost_scaling),
        criterion(7, "sup-norm noise amplification", secs(1), linf_stability),
        criterion(8, "Gaussian noise variance", secs(30), variance_bound),
        criterion(9, "byte-identical reruns", secs(60), determinism),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
