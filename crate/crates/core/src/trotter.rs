//! Suzuki–Trotter product formulas.
//!
//! A formula is expanded once into a flat, ordered list of [`Stage`]s (term
//! index and time coefficient). The matrix `S_p(t)` is the left-to-right
//! product of `exp(i c t H_term)` over that list.

use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    eig_hermitian, identity, is_hermitian, matrix_log_general, matrix_log_principal, operator_norm,
    validate_square, ComplexMatrix, HermitianEigen, I,
};

/// Formula order: 1, or any even number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaOrder(u32);

impl FormulaOrder {
    pub fn new(p: u32) -> Result<Self> {
        if p == 1 || (p >= 2 && p.is_multiple_of(2)) {
            Ok(Self(p))
        } else {
            invalid(format!("formula order must be 1 or even, got {p}"))
        }
    }

    pub const FIRST: Self = Self(1);
    pub const SECOND: Self = Self(2);

    pub fn get(self) -> u32 {
        self.0
    }

    /// Even orders give time-symmetric formulas, `S(-t) = S(t)^{-1}`.
    pub fn is_symmetric(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

impl fmt::Display for FormulaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sum of Hermitian terms with `Σ ‖H_γ‖ <= 1`.
#[derive(Debug, Clone)]
pub struct DecomposedHamiltonian {
    terms: Vec<ComplexMatrix>,
    eigens: Vec<HermitianEigen>,
    norms: Vec<f64>,
    label: String,
}

const NORM_SUM_SLACK: f64 = 1e-12;

impl DecomposedHamiltonian {
    pub fn new(terms: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return invalid("a decomposed Hamiltonian needs at least one term");
        };
        let dim = first.nrows();
        let mut eigens = Vec::with_capacity(terms.len());
        let mut norms = Vec::with_capacity(terms.len());
        for (idx, term) in terms.iter().enumerate() {
            validate_square(term)?;
            if term.nrows() != dim {
                return invalid(format!(
                    "term {idx} has dimension {}, expected {dim}",
                    term.nrows()
                ));
            }
            if !is_hermitian(term, 1e-10) {
                return invalid(format!("term {idx} is not Hermitian"));
            }
            eigens.push(eig_hermitian(term)?);
            norms.push(operator_norm(term)?);
        }
        let sum: f64 = norms.iter().sum();
        if sum > 1.0 + NORM_SUM_SLACK {
            return invalid(format!("sum of term norms is {sum}, must not exceed 1"));
        }
        Ok(Self {
            terms,
            eigens,
            norms,
            label: label.into(),
        })
    }

    pub fn terms(&self) -> &[ComplexMatrix] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn term_norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn norm_sum(&self) -> f64 {
        self.norms.iter().sum()
    }

    /// `Σ_γ H_γ`.
    pub fn total(&self) -> ComplexMatrix {
        let mut sum = ComplexMatrix::zeros(self.dim(), self.dim());
        for t in &self.terms {
            sum += t;
        }
        sum
    }

    /// `exp(i tau H_γ)` from the cached eigendecomposition.
    pub fn term_exp(&self, term: usize, tau: Complex64) -> ComplexMatrix {
        self.eigens[term].exp_i(tau)
    }
}

/// One exponential `exp(i · coefficient · t · H_term)` of a product formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub term: usize,
    pub coefficient: f64,
}

/// `u_k = (4 - 4^{1/(2k-1)})^{-1}`.
pub fn suzuki_coefficient(k: u32) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * k as f64 - 1.0)))
}

/// Flat stage list of the order-`p` formula for `num_terms` terms, in the
/// written (left-to-right) order of the product.
///
/// The two middle half-steps of the second-order formula are merged, so
/// `S_2` has `2m - 1` stages; copies in the higher-order recursion are not
/// merged with each other.
pub fn formula_stages(num_terms: usize, order: FormulaOrder) -> Vec<Stage> {
    if order.get() == 1 {
        return (0..num_terms)
            .map(|term| Stage {
                term,
                coefficient: 1.0,
            })
            .collect();
    }
    let mut stages = second_order_stages(num_terms);
    for k in 2..=order.get() / 2 {
        let u = suzuki_coefficient(k);
        let scaled = |c: f64| {
            stages.iter().map(move |s| Stage {
                term: s.term,
                coefficient: s.coefficient * c,
            })
        };
        let mut next = Vec::with_capacity(stages.len() * 5);
        next.extend(scaled(u));
        next.extend(scaled(u));
        next.extend(scaled(1.0 - 4.0 * u));
        next.extend(scaled(u));
        next.extend(scaled(u));
        stages = next;
    }
    stages
}

fn second_order_stages(m: usize) -> Vec<Stage> {
    let mut stages: Vec<Stage> = (0..m.saturating_sub(1))
        .map(|term| Stage {
            term,
            coefficient: 0.5,
        })
        .collect();
    stages.push(Stage {
        term: m - 1,
        coefficient: 1.0,
    });
    stages.extend((0..m.saturating_sub(1)).rev().map(|term| Stage {
        term,
        coefficient: 0.5,
    }));
    stages
}

/// Number of exponentials per formula application: `m` for `p = 1` and
/// `5^{p/2 - 1} (2m - 1)` for even `p`.
pub fn stage_count(num_terms: usize, order: FormulaOrder) -> u64 {
    let m = num_terms as u64;
    match order.get() {
        1 => m,
        p => 5u64.pow(p / 2 - 1) * (2 * m - 1),
    }
}

/// `S_p(t)` as an exact product of matrix exponentials. `t` may be complex.
pub fn suzuki_formula(
    h: &DecomposedHamiltonian,
    order: FormulaOrder,
    t: Complex64,
) -> Result<ComplexMatrix> {
    if !t.re.is_finite() || !t.im.is_finite() {
        return invalid("time step must be finite");
    }
    if t.norm() > std::f64::consts::PI * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("|t| = {} exceeds π", t.norm())));
    }
    let mut product = identity(h.dim());
    for stage in formula_stages(h.len(), order) {
        product *= h.term_exp(stage.term, t * stage.coefficient);
    }
    Ok(product)
}

/// Generator of a product formula and its distance from the exact Hamiltonian.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonianResult {
    pub h_tilde: ComplexMatrix,
    pub tau: Complex64,
    /// `‖H̃ - H‖`.
    pub defect_norm: f64,
}

/// `H̃(τ) = log(S_p(τ)) / (iτ)` with the principal logarithm.
pub fn effective_hamiltonian(
    h: &DecomposedHamiltonian,
    order: FormulaOrder,
    tau: Complex64,
) -> Result<EffectiveHamiltonianResult> {
    let total = h.total();
    if tau == Complex64::new(0.0, 0.0) {
        return Ok(EffectiveHamiltonianResult {
            h_tilde: total,
            tau,
            defect_norm: 0.0,
        });
    }
    let s = suzuki_formula(h, order, tau)?;
    let log = if tau.im == 0.0 {
        matrix_log_principal(&s)?
    } else {
        matrix_log_general(&s)?
    };
    let h_tilde = log / (I * tau);
    let defect_norm = operator_norm(&(&h_tilde - &total))?;
    Ok(EffectiveHamiltonianResult {
        h_tilde,
        tau,
        defect_norm,
    })
}

pub const ALPHA_MAX_TERMS: usize = 6;
pub const ALPHA_MAX_ORDER: u32 = 4;

fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Commutator quantity `α` of an order-`p` formula.
///
/// For every stage `ℓ` of the flat formula, with `B` its term and
/// `A_1, …, A_s` the terms of the stages that follow it, this adds
///
/// ```text
/// Σ_{q_1+…+q_s = p} (p; q_1 … q_s) ‖ad_{A_s}^{q_s} ⋯ ad_{A_1}^{q_1} B‖
/// ```
///
/// The nested commutator only depends on the word `A_1^{q_1} ⋯ A_s^{q_s}`
/// of term indices, so the multinomial weights are accumulated per word and
/// each distinct commutator norm is evaluated once.
pub fn alpha_commutator(h: &DecomposedHamiltonian, order: FormulaOrder) -> Result<f64> {
    let m = h.len();
    let p = order.get();
    if m > ALPHA_MAX_TERMS || p > ALPHA_MAX_ORDER {
        return Err(Error::Capability(format!(
            "exact α enumeration supports at most {ALPHA_MAX_TERMS} terms and order {ALPHA_MAX_ORDER} \
             (got {m} terms, order {p}); use alpha_upper_bound instead"
        )));
    }
    let stages = formula_stages(m, order);
    let words = m.pow(p);
    // weights[b][w]: accumulated multinomial weight of word w acting on term b
    let mut weights = vec![vec![0.0; words]; m];
    for (pos, stage) in stages.iter().enumerate() {
        let word_weights = word_weights(&stages[pos + 1..], m, p);
        for (acc, w) in weights[stage.term].iter_mut().zip(word_weights) {
            *acc += w;
        }
    }
    let scale = factorial(p);
    let mut alpha = 0.0;
    for (b, row) in weights.iter().enumerate() {
        for (code, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let mut nested = h.terms()[b].clone();
            for letter in decode_word(code, m, p) {
                nested = commutator(&h.terms()[letter], &nested);
            }
            alpha += scale * w * operator_norm(&nested)?;
        }
    }
    Ok(alpha)
}

/// Σ over compositions of `Π 1/q_i!`, keyed by the resulting full-length word.
fn word_weights(following: &[Stage], m: usize, p: u32) -> Vec<f64> {
    let p = p as usize;
    // table[len][code] for partial words of length len
    let mut table: Vec<Vec<f64>> = (0..=p).map(|len| vec![0.0; m.pow(len as u32)]).collect();
    table[0][0] = 1.0;
    for stage in following {
        for len in (0..p).rev() {
            for code in 0..table[len].len() {
                let w = table[len][code];
                if w == 0.0 {
                    continue;
                }
                let mut extended = code;
                let mut inv_fact = 1.0;
                for q in 1..=(p - len) {
                    extended = extended * m + stage.term;
                    inv_fact /= q as f64;
                    table[len + q][extended] += w * inv_fact;
                }
            }
        }
    }
    table.pop().unwrap_or_default()
}

/// Letters of a word code, first-applied first.
fn decode_word(mut code: usize, m: usize, p: u32) -> Vec<usize> {
    let mut letters = vec![0; p as usize];
    for slot in letters.iter_mut().rev() {
        *slot = code % m;
        code /= m;
    }
    letters
}

/// Cheap upper bound on [`alpha_commutator`] from `‖ad_A X‖ <= 2‖A‖‖X‖`:
/// `Σ_ℓ (2 Σ_{i>ℓ} ‖A_i‖)^p ‖B_ℓ‖`. Valid for any size.
pub fn alpha_upper_bound(h: &DecomposedHamiltonian, order: FormulaOrder) -> f64 {
    let stages = formula_stages(h.len(), order);
    let norms = h.term_norms();
    let mut tail = 0.0_f64;
    let mut bound = 0.0;
    for stage in stages.iter().rev() {
        bound += (2.0 * tail).powi(order.get() as i32) * norms[stage.term];
        tail += norms[stage.term];
    }
    bound
}



#[cfg(test)]
mod props {
    use super::test_support::*;
    use super::*;
    use crate::linalg::{is_unitary, max_abs};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unitary_and_symmetric(seed in 0u64..1000, t in -3.0f64..3.0, p_idx in 0usize..4) {
            let order = FormulaOrder::new([1, 2, 4, 6][p_idx]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_decomposition(&mut rng, 4, 3);
            let s = suzuki_formula(&h, order, Complex64::new(t, 0.0)).unwrap();
            prop_assert!(max_abs(&(s.adjoint() * &s - identity(4))) <= 1e-9);
            if order.is_symmetric() {
                let back = suzuki_formula(&h, order, Complex64::new(-t, 0.0)).unwrap();
                prop_assert!(max_abs(&(back - s.adjoint())) <= 1e-11);
            }
        }

        #[test]
        fn effective_hamiltonian_is_hermitian(seed in 0u64..1000, tau in 0.05f64..1.0, p_idx in 0usize..3) {
            let order = FormulaOrder::new([1, 2, 4][p_idx]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_decomposition(&mut rng, 4, 2);
            let r = effective_hamiltonian(&h, order, Complex64::new(tau, 0.0)).unwrap();
            prop_assert!(is_hermitian(&r.h_tilde, 1e-8));
            prop_assert!(is_unitary(&suzuki_formula(&h, order, Complex64::new(tau, 0.0)).unwrap(), 1e-9));
        }

        #[test]
        fn order_scaling(seed in 0u64..1000, p_idx in 0usize..3) {
            let p = [1, 2, 4][p_idx];
            let order = FormulaOrder::new(p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_decomposition(&mut rng, 4, 2);
            let mut tau = 0.2;
            while effective_hamiltonian(&h, order, Complex64::new(tau, 0.0)).unwrap().defect_norm > 1e-2 {
                tau /= 2.0;
            }
            let big = effective_hamiltonian(&h, order, Complex64::new(tau, 0.0)).unwrap().defect_norm;
            let small = effective_hamiltonian(&h, order, Complex64::new(tau / 2.0, 0.0)).unwrap().defect_norm;
            let measured = (big / small).log2();
            prop_assert!((measured - p as f64).abs() <= 0.5, "p={} measured={}", p, measured);
        }
    }
}
