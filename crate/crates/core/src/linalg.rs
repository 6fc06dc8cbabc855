//! Dense complex linear algebra at desk scale.
//!
//! Everything here operates on [`ComplexMatrix`] (a dense `nalgebra` matrix of
//! `Complex64`). Hermitian eigenproblems go through `SymmetricEigen`, unitary
//! (normal) eigenproblems through the complex Schur form, whose triangular
//! factor is diagonal for normal input.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 1 << 10;

/// Angular distance from `-1` below which an eigenvalue is treated as sitting
/// on the branch cut of the principal logarithm.
pub const BRANCH_CUT_GUARD: f64 = 1e-6;

const UNITARY_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Checks the carrier invariants: square, `1 <= dim <= MAX_DIM`, finite.
pub fn validate_square(a: &ComplexMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return invalid(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        ));
    }
    if a.nrows() == 0 {
        return invalid("matrix has dimension zero");
    }
    if a.nrows() > MAX_DIM {
        return invalid(format!(
            "dimension {} exceeds the maximum {MAX_DIM}",
            a.nrows()
        ));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("matrix has non-finite entries");
    }
    Ok(())
}

/// Largest entry modulus.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    a.is_square() && max_abs(&(a - a.adjoint())) <= tol
}

pub fn is_anti_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    a.is_square() && max_abs(&(a + a.adjoint())) <= tol
}

pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> bool {
    a.is_square() && max_abs(&(a.adjoint() * a - identity(a.nrows()))) <= tol
}

fn norm_1(a: &ComplexMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigendecomposition `A = Q diag(values) Q†` of a Hermitian matrix, with
/// eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `Q diag(f(λ)) Q†`.
    pub fn map<F: Fn(f64) -> Complex64>(&self, f: F) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(&self.values) {
            col *= f(lambda);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| Complex64::new(l, 0.0))
    }

    /// `exp(i tau A)`; `tau` may be complex.
    pub fn exp_i(&self, tau: Complex64) -> ComplexMatrix {
        self.map(|l| (I * tau * l).exp())
    }
}

pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    validate_square(a)?;
    let scale = max_abs(a).max(1.0);
    if !is_hermitian(a, HERMITIAN_TOL * scale) {
        return invalid("eig_hermitian requires a Hermitian matrix");
    }
    let sym = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors =
        ComplexMatrix::from_fn(a.nrows(), a.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigendecomposition of a normal matrix read off its complex Schur form.
#[derive(Debug, Clone)]
pub struct NormalEigen {
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
}

impl NormalEigen {
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(&self.values) {
            col *= f(lambda);
        }
        scaled * self.vectors.adjoint()
    }

    /// Integer power `A^k`, negative `k` included.
    pub fn powi(&self, k: i64) -> ComplexMatrix {
        self.map(|l| l.powi(k as i32))
    }
}

fn schur(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    Schur::try_new(a.clone(), 1e-15, 10_000)
        .map(Schur::unpack)
        .ok_or_else(|| Error::Convergence("complex Schur decomposition".into()))
}

/// Eigendecomposition of a unitary matrix. Eigenvalues are projected onto
/// the unit circle.
pub fn eig_unitary(u: &ComplexMatrix) -> Result<NormalEigen> {
    validate_square(u)?;
    if !is_unitary(u, UNITARY_TOL) {
        return invalid("eig_unitary requires a unitary matrix");
    }
    let (q, t) = schur(u)?;
    let values = (0..u.nrows())
        .map(|i| t[(i, i)] / t[(i, i)].norm())
        .collect();
    Ok(NormalEigen { values, vectors: q })
}

fn check_branch_cut(lambda: Complex64) -> Result<()> {
    let phase = lambda.arg();
    if std::f64::consts::PI - phase.abs() < BRANCH_CUT_GUARD {
        return Err(Error::BranchCut {
            phase,
            guard: BRANCH_CUT_GUARD,
        });
    }
    Ok(())
}

/// Principal logarithm of a unitary matrix: `exp(L) = U` with every
/// eigenvalue of `-iL` in `(-π, π)`.
pub fn matrix_log_principal(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_unitary(u)?;
    for &lambda in &eig.values {
        check_branch_cut(lambda)?;
    }
    Ok(eig.map(|l| I * l.arg()))
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrt_denman_beavers(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let half = Complex64::new(0.5, 0.0);
    let mut y = a.clone();
    let mut z = identity(a.nrows());
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Convergence("singular iterate".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Convergence("singular iterate".into()))?;
        let y_next = (&y + z_inv) * half;
        let z_next = (&z + y_inv) * half;
        let delta = norm_1(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * norm_1(&y) {
            return Ok(y);
        }
    }
    Err(Error::Convergence("Denman-Beavers square root".into()))
}

/// Principal logarithm of a general (possibly non-normal) invertible matrix by
/// inverse scaling and squaring. Used for complex time steps, where product
/// formulas are no longer unitary.
pub fn matrix_log_general(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    validate_square(a)?;
    let (_, t) = schur(a)?;
    for i in 0..a.nrows() {
        let lambda = t[(i, i)];
        if lambda.norm() < 1e-300 {
            return invalid("matrix is singular");
        }
        check_branch_cut(lambda)?;
    }
    let n = a.nrows();
    let id = identity(n);
    let mut root = a.clone();
    let mut squarings = 0;
    while norm_1(&(&root - &id)) > 0.25 {
        if squarings == 64 {
            return Err(Error::Convergence(
                "too many square roots in matrix log".into(),
            ));
        }
        root = sqrt_denman_beavers(&root)?;
        squarings += 1;
    }
    let x = &root - &id;
    let mut power = x.clone();
    let mut sum = x.clone();
    for j in 2..200 {
        power = &power * &x;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let term = &power * Complex64::new(sign / j as f64, 0.0);
        sum += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    Ok(sum * Complex64::new(2f64.powi(squarings), 0.0))
}

/// Matrix exponential.
///
/// Hermitian and anti-Hermitian inputs go through the Hermitian
/// eigendecomposition, so `exp` of an anti-Hermitian matrix is unitary to
/// rounding. Everything else uses Taylor scaling and squaring.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    validate_square(a)?;
    let tol = 1e-14 * max_abs(a).max(1.0);
    if is_anti_hermitian(a, tol) {
        let h = -a * I;
        return Ok(eig_hermitian(&h)?.map(|l| (I * l).exp()));
    }
    if is_hermitian(a, tol) {
        return Ok(eig_hermitian(a)?.map(|l| Complex64::new(l.exp(), 0.0)));
    }
    Ok(exp_taylor_scaled(a))
}

fn exp_taylor_scaled(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let norm = norm_1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * Complex64::new(2f64.powi(-squarings), 0.0);
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..40 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Integer power by repeated squaring; negative exponents need an invertible
/// matrix and go through its inverse.
pub fn matrix_power(a: &ComplexMatrix, k: i64) -> Result<ComplexMatrix> {
    validate_square(a)?;
    let base = if k < 0 {
        a.clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("negative power of a singular matrix".into()))?
    } else {
        a.clone()
    };
    Ok(pow_unsigned(&base, k.unsigned_abs()))
}

pub(crate) fn pow_unsigned(a: &ComplexMatrix, mut k: u64) -> ComplexMatrix {
    let mut result = identity(a.nrows());
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    validate_square(a)?;
    Ok(a.clone().singular_values().max())
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    const NORM_TOL: f64 = 1e-12;

    /// Wraps amplitudes that are already unit-normalized.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        if v.is_empty() {
            return invalid("state vector is empty");
        }
        if (v.norm() - 1.0).abs() > Self::NORM_TOL {
            return invalid(format!("state vector has norm {}, expected 1", v.norm()));
        }
        Ok(Self(v))
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return invalid("cannot normalize an empty, zero or non-finite vector");
        }
        Ok(Self(v.unscale(norm)))
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            ));
        }
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }
}
