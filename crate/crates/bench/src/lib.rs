//! Fixtures shared by the benchmarks.

use num_complex::Complex64;
use sincheb_core::linalg::identity;
use sincheb_core::{
    ComplexMatrix, DecomposedHamiltonian, EvolutionProblem, EvolutionStage, StateVector,
};

fn pauli(label: char) -> ComplexMatrix {
    let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let entries = match label {
        'X' => [o, i, i, o],
        'Y' => [o, -Complex64::i(), Complex64::i(), o],
        'Z' => [i, o, o, -i],
        _ => [i, o, o, i],
    };
    ComplexMatrix::from_row_slice(2, 2, &entries)
}

/// Transverse-field Ising chain on `qubits` sites: `ZZ` couplings plus `X`
/// fields, each term weighted so the norms sum to one.
pub fn ising_chain(qubits: usize) -> DecomposedHamiltonian {
    assert!(qubits >= 2);
    let site = |ops: &[(usize, char)]| {
        (0..qubits).fold(
            ComplexMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
            |acc, q| {
                let p = ops.iter().find(|(k, _)| *k == q).map_or('I', |(_, l)| *l);
                acc.kronecker(&pauli(p))
            },
        )
    };
    let zz: ComplexMatrix = (0..qubits - 1)
        .map(|q| site(&[(q, 'Z'), (q + 1, 'Z')]))
        .sum();
    let x: ComplexMatrix = (0..qubits).map(|q| site(&[(q, 'X')])).sum();
    let weight = Complex64::new(1.0 / (2 * qubits - 1) as f64, 0.0);
    DecomposedHamiltonian::new(vec![zz * weight, x * weight], "ising").unwrap()
}

/// `⟨0…0| e^{iTH} |0…0⟩` for the Ising chain.
pub fn ising_problem(qubits: usize, time: f64) -> EvolutionProblem {
    let h = ising_chain(qubits);
    let dim = h.dim();
    let stage = EvolutionStage::new(identity(dim), h, time).unwrap();
    let zero = StateVector::basis(dim, 0).unwrap();
    EvolutionProblem::new(vec![stage], zero.clone(), zero).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_normalized() {
        for q in 2..=4 {
            let h = ising_chain(q);
            assert!((h.norm_sum() - 1.0).abs() < 1e-12);
            assert_eq!(h.dim(), 1 << q);
        }
    }
}
