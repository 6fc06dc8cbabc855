//! JSON problem files.
//!
//! ```json
//! {
//!   "qubits": 2,
//!   "stages": [
//!     {
//!       "v": {"gates": [{"gate": "H", "qubits": [0]}, {"gate": "CX", "qubits": [0, 1]}]},
//!       "hamiltonian": [{"coeff": 0.4, "pauli": "XX"}, {"coeff": 0.3, "pauli": "ZI"}],
//!       "time": 2.0
//!     }
//!   ],
//!   "psi1": {"basis": "00"},
//!   "psi2": {"amplitudes": [[0.6, 0.0], [0.0, 0.8], [0.0, 0.0], [0.0, 0.0]]}
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Qubit 0 is the leftmost Pauli
//! character and the most significant bit of a basis index. Gates are listed
//! in the order they act, so `V = G_last ⋯ G_first`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sincheb_core::linalg::identity;
use sincheb_core::{
    ComplexMatrix, DecomposedHamiltonian, EvolutionProblem, EvolutionStage, StateVector,
};

use crate::error::CliError;

/// Terms whose norms sum to more than this are rejected or rescaled.
const NORM_SLACK: f64 = 1e-12;

type Entry = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub stages: Vec<StageSpec>,
    pub psi1: StateSpec,
    pub psi2: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    #[serde(default = "UnitarySpec::identity")]
    pub v: UnitarySpec,
    pub hamiltonian: Vec<TermSpec>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitarySpec {
    /// Only `"identity"` is recognised.
    Named(String),
    Matrix {
        matrix: Vec<Vec<Entry>>,
    },
    Gates {
        gates: Vec<GateSpec>,
    },
}

impl UnitarySpec {
    fn identity() -> Self {
        Self::Named("identity".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub gate: String,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermSpec {
    Pauli { coeff: f64, pauli: String },
    Matrix { matrix: Vec<Vec<Entry>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    /// Bitstring, qubit 0 first.
    Basis {
        basis: String,
    },
    Index {
        index: usize,
    },
    Amplitudes {
        amplitudes: Vec<Entry>,
    },
}

fn invalid(field: impl AsRef<str>, msg: impl AsRef<str>) -> CliError {
    CliError::Validation(format!("{}: {}", field.as_ref(), msg.as_ref()))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix_from_entries(
    field: &str,
    rows: &[Vec<Entry>],
    dim: usize,
) -> Result<ComplexMatrix, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid(field, format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(field, "matrix entries must be finite"));
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

fn matrix_to_entries(m: &ComplexMatrix) -> Vec<Vec<Entry>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn pauli_matrix(ch: char) -> Option<ComplexMatrix> {
    let (o, i) = (c(0.0, 0.0), c(1.0, 0.0));
    let entries = match ch {
        'I' => [i, o, o, i],
        'X' => [o, i, i, o],
        'Y' => [o, c(0.0, -1.0), c(0.0, 1.0), o],
        'Z' => [i, o, o, -i],
        _ => return None,
    };
    Some(ComplexMatrix::from_row_slice(2, 2, &entries))
}

/// `coeff` times the tensor product of the string's Paulis, qubit 0 leftmost.
pub fn pauli_string(
    field: &str,
    coeff: f64,
    pauli: &str,
    qubits: usize,
) -> Result<ComplexMatrix, CliError> {
    if pauli.chars().count() != qubits {
        return Err(invalid(
            field,
            format!(
                "Pauli string {pauli:?} has length {} but there are {qubits} qubits",
                pauli.chars().count()
            ),
        ));
    }
    if !coeff.is_finite() {
        return Err(invalid(field, "coefficient must be finite"));
    }
    let mut out = ComplexMatrix::from_element(1, 1, c(coeff, 0.0));
    for ch in pauli.chars() {
        let p = pauli_matrix(ch.to_ascii_uppercase())
            .ok_or_else(|| invalid(field, format!("unknown Pauli {ch:?}")))?;
        out = out.kronecker(&p);
    }
    Ok(out)
}

fn single_qubit_gate(name: &str) -> Option<ComplexMatrix> {
    let (o, i) = (c(0.0, 0.0), c(1.0, 0.0));
    let h = c(FRAC_1_SQRT_2, 0.0);
    let entries = match name {
        "H" => [h, h, h, -h],
        "X" => [o, i, i, o],
        "Y" => [o, c(0.0, -1.0), c(0.0, 1.0), o],
        "Z" => [i, o, o, -i],
        "S" => [i, o, o, c(0.0, 1.0)],
        "T" => [
            i,
            o,
            o,
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
        ],
        _ => return None,
    };
    Some(ComplexMatrix::from_row_slice(2, 2, &entries))
}

fn bit(index: usize, qubit: usize, qubits: usize) -> usize {
    (index >> (qubits - 1 - qubit)) & 1
}

fn gate_matrix(field: &str, gate: &GateSpec, qubits: usize) -> Result<ComplexMatrix, CliError> {
    let name = gate.gate.to_ascii_uppercase();
    if let Some(&q) = gate.qubits.iter().find(|&&q| q >= qubits) {
        return Err(invalid(
            field,
            format!("qubit {q} out of range for {qubits} qubits"),
        ));
    }
    let dim = 1usize << qubits;
    if let Some(g) = single_qubit_gate(&name) {
        let [q] = gate.qubits[..] else {
            return Err(invalid(field, format!("{name} acts on exactly one qubit")));
        };
        let mut out = identity(1 << q).kronecker(&g);
        out = out.kronecker(&identity(1 << (qubits - q - 1)));
        return Ok(out);
    }
    let [a, b] = gate.qubits[..] else {
        return Err(invalid(field, format!("{name} acts on exactly two qubits")));
    };
    if a == b {
        return Err(invalid(field, "two-qubit gate needs distinct qubits"));
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        match name.as_str() {
            "CX" | "CNOT" => {
                let row = if bit(col, a, qubits) == 1 {
                    col ^ (1 << (qubits - 1 - b))
                } else {
                    col
                };
                out[(row, col)] = c(1.0, 0.0);
            }
            "CZ" => {
                let sign = if bit(col, a, qubits) & bit(col, b, qubits) == 1 {
                    -1.0
                } else {
                    1.0
                };
                out[(col, col)] = c(sign, 0.0);
            }
            _ => return Err(invalid(field, format!("unknown gate {:?}", gate.gate))),
        }
    }
    Ok(out)
}

fn unitary(
    field: &str,
    spec: &UnitarySpec,
    dim: usize,
    qubits: Option<usize>,
) -> Result<ComplexMatrix, CliError> {
    match spec {
        UnitarySpec::Named(name) if name.eq_ignore_ascii_case("identity") => Ok(identity(dim)),
        UnitarySpec::Named(name) => Err(invalid(field, format!("unknown unitary {name:?}"))),
        UnitarySpec::Matrix { matrix } => matrix_from_entries(field, matrix, dim),
        UnitarySpec::Gates { gates } => {
            let qubits = qubits.ok_or_else(|| invalid(field, "gate lists need \"qubits\""))?;
            gates
                .iter()
                .enumerate()
                .try_fold(identity(dim), |acc, (i, g)| {
                    Ok(gate_matrix(&format!("{field}.gates[{i}]"), g, qubits)? * acc)
                })
        }
    }
}

fn state(
    field: &str,
    spec: &StateSpec,
    dim: usize,
    qubits: Option<usize>,
) -> Result<StateVector, CliError> {
    let wrap = |e: sincheb_core::Error| invalid(field, e.to_string());
    match spec {
        StateSpec::Basis { basis } => {
            let qubits =
                qubits.ok_or_else(|| invalid(field, "bitstring states need \"qubits\""))?;
            if basis.len() != qubits || !basis.chars().all(|ch| ch == '0' || ch == '1') {
                return Err(invalid(
                    field,
                    format!("expected a {qubits}-character bitstring, got {basis:?}"),
                ));
            }
            let index =
                usize::from_str_radix(basis, 2).map_err(|e| invalid(field, e.to_string()))?;
            StateVector::basis(dim, index).map_err(wrap)
        }
        StateSpec::Index { index } => StateVector::basis(dim, *index).map_err(wrap),
        StateSpec::Amplitudes { amplitudes } => {
            if amplitudes.len() != dim {
                return Err(invalid(
                    field,
                    format!("expected {dim} amplitudes, got {}", amplitudes.len()),
                ));
            }
            StateVector::new(amplitudes.iter().map(|a| c(a[0], a[1])).collect()).map_err(wrap)
        }
    }
}

impl ProblemSpec {
    fn dims(&self) -> Result<(usize, Option<usize>), CliError> {
        match (self.qubits, self.dim) {
            (Some(q), None) if (1..=10).contains(&q) => Ok((1 << q, Some(q))),
            (Some(q), Some(d)) if (1..=10).contains(&q) && d == 1 << q => Ok((d, Some(q))),
            (None, Some(d)) if (1..=sincheb_core::linalg::MAX_DIM).contains(&d) => Ok((d, None)),
            (None, None) => Err(invalid(
                "problem",
                "one of \"qubits\" or \"dim\" is required",
            )),
            _ => Err(invalid(
                "problem",
                "\"qubits\" must be in 1..=10 and agree with \"dim\"",
            )),
        }
    }

    /// Validated problem. With `auto_normalize`, a stage whose term norms sum
    /// to `Σ > 1` has its terms divided by `Σ` and its time multiplied by `Σ`.
    pub fn to_problem(&self, auto_normalize: bool) -> Result<EvolutionProblem, CliError> {
        let (dim, qubits) = self.dims()?;
        let mut stages = Vec::with_capacity(self.stages.len());
        for (j, st) in self.stages.iter().enumerate() {
            let field = format!("stages[{j}]");
            let mut terms = Vec::with_capacity(st.hamiltonian.len());
            for (g, term) in st.hamiltonian.iter().enumerate() {
                let tf = format!("{field}.hamiltonian[{g}]");
                terms.push(match term {
                    TermSpec::Pauli { coeff, pauli } => {
                        let q =
                            qubits.ok_or_else(|| invalid(&tf, "Pauli terms need \"qubits\""))?;
                        pauli_string(&tf, *coeff, pauli, q)?
                    }
                    TermSpec::Matrix { matrix } => matrix_from_entries(&tf, matrix, dim)?,
                });
            }
            if terms.is_empty() {
                return Err(invalid(&field, "hamiltonian needs at least one term"));
            }
            let mut time = st.time;
            let norm_sum: f64 = terms
                .iter()
                .map(sincheb_core::linalg::operator_norm)
                .sum::<Result<f64, _>>()
                .map_err(|e| invalid(&field, e.to_string()))?;
            if norm_sum > 1.0 + NORM_SLACK {
                if !auto_normalize {
                    return Err(invalid(
                        &field,
                        format!(
                            "term norms sum to {norm_sum} > 1 (rescale or pass --auto-normalize)"
                        ),
                    ));
                }
                let scale = c(1.0 / norm_sum, 0.0);
                terms.iter_mut().for_each(|t| *t *= scale);
                time *= norm_sum;
            }
            let h = DecomposedHamiltonian::new(terms, format!("stage {j}"))
                .map_err(|e| invalid(&field, e.to_string()))?;
            let v = unitary(&format!("{field}.v"), &st.v, dim, qubits)?;
            stages
                .push(EvolutionStage::new(v, h, time).map_err(|e| invalid(&field, e.to_string()))?);
        }
        let psi1 = state("psi1", &self.psi1, dim, qubits)?;
        let psi2 = state("psi2", &self.psi2, dim, qubits)?;
        EvolutionProblem::new(stages, psi1, psi2).map_err(|e| invalid("problem", e.to_string()))
    }

    /// Explicit-matrix description of a validated problem.
    pub fn from_problem(problem: &EvolutionProblem) -> Self {
        let amps = |s: &StateVector| s.amplitudes().iter().map(|a| [a.re, a.im]).collect();
        Self {
            qubits: None,
            dim: Some(problem.dim()),
            stages: problem
                .stages()
                .iter()
                .map(|s| StageSpec {
                    v: UnitarySpec::Matrix {
                        matrix: matrix_to_entries(s.v()),
                    },
                    hamiltonian: s
                        .hamiltonian()
                        .terms()
                        .iter()
                        .map(|t| TermSpec::Matrix {
                            matrix: matrix_to_entries(t),
                        })
                        .collect(),
                    time: s.time(),
                })
                .collect(),
            psi1: StateSpec::Amplitudes {
                amplitudes: amps(problem.psi1()),
            },
            psi2: StateSpec::Amplitudes {
                amplitudes: amps(problem.psi2()),
            },
        }
    }
}

pub fn parse_problem_str(text: &str, auto_normalize: bool) -> Result<EvolutionProblem, CliError> {
    let spec: ProblemSpec =
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    spec.to_problem(auto_normalize)
}

pub fn parse_problem(path: &Path, auto_normalize: bool) -> Result<EvolutionProblem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_problem_str(&text, auto_normalize).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn emit_problem(problem: &EvolutionProblem) -> String {
    serde_json::to_string_pretty(&ProblemSpec::from_problem(problem))
        .expect("problem specs always serialize")
}
