//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Matrices are plain `nalgebra` dense matrices over `Complex64`. States
//! and measurements are thin validated wrappers around them. Comparisons
//! are tolerance based; state comparisons use the fidelity `|<u|v>|^2`
//! so global phases never matter.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Tolerance for construction checks (normalization, trace, Hermiticity).
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for positivity and completeness checks.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance for eigensystem reconstruction.
pub const EIGEN_TOL: f64 = 1e-9;

/// Relative tie window used when picking among (near) degenerate top eigenvalues.
const TIE_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Largest absolute entry-wise difference; infinite when shapes differ.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    max_abs_diff(a, b) <= tol
}

/// `max |m(i,j) - conj(m(j,i))|`; infinite for non-square input.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn require_hermitian(m: &ComplexMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let deviation = hermiticity_defect(m);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Kronecker product; entry `(i*rb + k, j*cb + l)` is `a(i,j) * b(k,l)`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    ComplexMatrix::from_fn(ra * rb, ca * cb, |r, col| {
        a[(r / rb, col / cb)] * b[(r % rb, col % cb)]
    })
}

/// Trace over the first tensor factor of an operator on `dim_a * dim_b`.
pub fn partial_trace_a(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    let total = dim_a * dim_b;
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: m.nrows(),
        });
    }
    Ok(ComplexMatrix::from_fn(dim_b, dim_b, |k, l| {
        (0..dim_a)
            .map(|i| m[(i * dim_b + k, i * dim_b + l)])
            .sum()
    }))
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: Vec<PureState>,
}

impl Eigensystem {
    /// `sum_k lambda_k |v_k><v_k|`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.vectors.first().map_or(0, PureState::dim);
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (value, vector) in self.values.iter().zip(&self.vectors) {
            out += vector.projector() * Complex64::from(*value);
        }
        out
    }
}

pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<Eigensystem> {
    require_hermitian(m, PSD_TOL)?;
    let hermitized = (m + m.adjoint()) * Complex64::from(0.5);
    let eigen = hermitized.symmetric_eigen();

    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[i].total_cmp(&eigen.eigenvalues[j]));

    let values = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| PureState::normalized(eigen.eigenvectors.column(i).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Eigensystem { values, vectors })
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let system = hermitian_eigensystem(m)?;
    Ok(system.values.first().copied().unwrap_or(0.0))
}

/// Eigenvector of the largest eigenvalue.
///
/// When several eigenvalues sit within a relative `1e-12` window of the
/// maximum, the one with the smallest index in ascending order wins.
pub fn principal_eigenvector(m: &ComplexMatrix) -> Result<PureState> {
    let system = hermitian_eigensystem(m)?;
    let top = *system
        .values
        .last()
        .ok_or(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        })?;
    let window = TIE_TOL * top.abs().max(1.0);
    let index = system
        .values
        .iter()
        .position(|&v| v >= top - window)
        .unwrap_or(system.values.len() - 1);
    Ok(system.vectors[index].clone())
}

/// Normalized state vector. Global phase carries no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
}

impl PureState {
    /// Accepts amplitudes whose squared norm is 1 within `1e-12`.
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        let norm_sq = amplitudes.norm_squared();
        if amplitudes.is_empty() || (norm_sq - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sq} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(ComplexVector::from_column_slice(amplitudes))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = ComplexVector::zeros(dim);
        amplitudes[index] = Complex64::from(1.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `|psi><psi|`
    pub fn projector(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// `<psi|m|psi>`, real part only (callers pass Hermitian `m`).
    pub fn expectation(&self, m: &ComplexMatrix) -> f64 {
        self.amplitudes.dotc(&(m * &self.amplitudes)).re
    }

    /// Component-wise complex conjugate in the computational basis.
    pub fn conjugate(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|z| z.conj()),
        }
    }
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.amplitudes.iter())
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        require_hermitian(&matrix, CONSTRUCTION_TOL)?;
        let trace = matrix.trace();
        if (trace - Complex64::from(1.0)).norm() > CONSTRUCTION_TOL {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let lowest = min_eigenvalue(&matrix)?;
        if lowest < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "smallest eigenvalue {lowest:e} is negative"
            )));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; callers guarantee the invariants up to rounding.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            matrix: state.projector(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            matrix: tensor_product(&self.matrix, &other.matrix),
        }
    }

    pub fn partial_trace_a(&self, dim_a: usize, dim_b: usize) -> Result<DensityMatrix> {
        partial_trace_a(&self.matrix, dim_a, dim_b).map(|matrix| Self { matrix })
    }
}

/// A measurement: PSD effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = effects
            .first()
            .map(ComplexMatrix::nrows)
            .ok_or_else(|| Error::InvalidMeasurement("no effects".into()))?;
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (k, effect) in effects.iter().enumerate() {
            if effect.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: effect.nrows(),
                });
            }
            require_hermitian(effect, PSD_TOL)?;
            let lowest = min_eigenvalue(effect)?;
            if lowest < -PSD_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "effect {k} has eigenvalue {lowest:e}"
                )));
            }
            total += effect;
        }
        let defect = max_abs_diff(&total, &identity(dim));
        if defect > PSD_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "effects sum to identity only within {defect:e}"
            )));
        }
        Ok(Self { effects })
    }

    /// Rank-one projective measurement onto an orthonormal basis.
    pub fn projective(basis: &[PureState]) -> Result<Self> {
        Self::new(basis.iter().map(PureState::projector).collect())
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }
}
