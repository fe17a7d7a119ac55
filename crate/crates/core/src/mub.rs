//! Mutually unbiased bases.
//!
//! Supported families:
//!
//! * any `d`, `n <= 2`: computational basis plus the discrete Fourier basis;
//! * `d = 2`, `n <= 3`: the Z, X and Y eigenbases;
//! * odd prime `d`, `n <= d + 1`: computational basis plus the quadratic-phase
//!   bases `<j|phi_k^a> = exp(2 pi i (k j^2 + a j) / d) / sqrt(d)`, `k = 0..d`.
//!   Basis index `x >= 1` uses `k = x - 1`, so basis 1 is always the Fourier basis.
//!
//! Basis index 0 is always the computational basis. Prime powers `p^k` with
//! `k > 1` are not constructed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmath::{ComplexVector, PureState};

/// `n` bases of `d` vectors each. Vectors are stored raw so that
/// corrupted families can be represented and rejected by [`verify_mub`].
#[derive(Debug, Clone, Serialize)]
pub struct MubSet {
    d: usize,
    n: usize,
    #[serde(serialize_with = "serialize_bases")]
    bases: Vec<Vec<ComplexVector>>,
}

fn serialize_bases<S: serde::Serializer>(
    bases: &[Vec<ComplexVector>],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    let plain: Vec<Vec<Vec<Complex64>>> = bases
        .iter()
        .map(|basis| basis.iter().map(|v| v.iter().copied().collect()).collect())
        .collect();
    plain.serialize(serializer)
}

impl MubSet {
    /// Wraps raw vectors after checking only the shape (`n` bases of `d`
    /// vectors of length `d`). Use [`verify_mub`] to check unbiasedness.
    pub fn from_vectors(bases: Vec<Vec<ComplexVector>>) -> Result<Self> {
        let n = bases.len();
        let d = bases.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("empty basis family".into()));
        }
        for basis in &bases {
            if basis.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: basis.len() });
            }
            if let Some(v) = basis.iter().find(|v| v.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        Ok(Self { d, n, bases })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Raw amplitudes of `|phi_x^a>`. Panics on out-of-range indices.
    pub fn vector(&self, x: usize, a: usize) -> &ComplexVector {
        &self.bases[x][a]
    }

    pub fn state(&self, x: usize, a: usize) -> Result<PureState> {
        self.check_index(x, a)?;
        let v = &self.bases[x][a];
        PureState::new(v.clone()).or_else(|_| PureState::normalized(v.clone()))
    }

    pub fn basis(&self, x: usize) -> Result<Vec<PureState>> {
        (0..self.d).map(|a| self.state(x, a)).collect()
    }

    pub(crate) fn check_index(&self, x: usize, a: usize) -> Result<()> {
        if x >= self.n {
            return Err(Error::IndexOutOfRange { what: "basis", index: x, len: self.n });
        }
        if a >= self.d {
            return Err(Error::IndexOutOfRange { what: "outcome", index: a, len: self.d });
        }
        Ok(())
    }
}

pub fn is_prime(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    (2..).take_while(|k| k * k <= d).all(|k| !d.is_multiple_of(k))
}

pub fn is_supported(d: usize, n: usize) -> bool {
    d >= 2 && n >= 1 && (n <= 2 || (d == 2 && n <= 3) || (d % 2 == 1 && is_prime(d) && n <= d + 1))
}

fn computational(d: usize) -> Vec<ComplexVector> {
    (0..d).map(|a| PureState::basis(d, a).amplitudes().clone()).collect()
}

/// `<j|phi^a> = exp(2 pi i (k j^2 + a j) / d) / sqrt(d)`; `k = 0` is the Fourier basis.
fn quadratic_phase(d: usize, k: usize) -> Vec<ComplexVector> {
    let scale = (1.0 / d as f64).sqrt();
    (0..d)
        .map(|a| {
            ComplexVector::from_fn(d, |j, _| root_of_unity((k * j * j + a * j) % d, d) * scale)
        })
        .collect()
}

/// `exp(2 pi i k / d)`, exact at quarter turns.
fn root_of_unity(k: usize, d: usize) -> Complex64 {
    if (4 * k).is_multiple_of(d) {
        return match 4 * k / d {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

fn pauli_y(d: usize) -> Vec<ComplexVector> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    debug_assert_eq!(d, 2);
    vec![
        ComplexVector::from_column_slice(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]),
        ComplexVector::from_column_slice(&[Complex64::new(s, 0.0), Complex64::new(0.0, -s)]),
    ]
}

pub fn build_mub(d: usize, n: usize) -> Result<MubSet> {
    if !is_supported(d, n) {
        return Err(Error::UnsupportedMub { d, n });
    }
    let mut bases = vec![computational(d)];
    for x in 1..n {
        let basis = if d == 2 && x == 2 { pauli_y(d) } else { quadratic_phase(d, x - 1) };
        bases.push(basis);
    }
    MubSet::from_vectors(bases)
}

/// A single pair `(x, a)`, `(y, b)` whose overlap misses its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MubViolation {
    pub x: usize,
    pub a: usize,
    pub y: usize,
    pub b: usize,
    pub overlap: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MubReport {
    pub d: usize,
    pub n: usize,
    pub tol: f64,
    pub pass: bool,
    pub max_deviation: f64,
    pub violations: Vec<MubViolation>,
}

/// Checks `|<phi_x^a|phi_y^b>|` against `delta_ab` (same basis, including
/// normalization) and `1/sqrt(d)` (different bases) for every ordered pair
/// with `(x, a) <= (y, b)`.
pub fn verify_mub(set: &MubSet, tol: f64) -> MubReport {
    let d = set.d;
    let unbiased = 1.0 / (d as f64).sqrt();
    let mut max_deviation = 0.0_f64;
    let mut violations = Vec::new();
    for x in 0..set.n {
        for y in x..set.n {
            for a in 0..d {
                let start = if x == y { a } else { 0 };
                for b in start..d {
                    let overlap = set.bases[x][a].dotc(&set.bases[y][b]).norm();
                    let expected = match (x == y, a == b) {
                        (true, true) => 1.0,
                        (true, false) => 0.0,
                        (false, _) => unbiased,
                    };
                    let deviation = (overlap - expected).abs();
                    if deviation.is_nan() || deviation > tol {
                        violations.push(MubViolation { x, a, y, b, overlap, expected });
                    }
                    max_deviation = max_deviation.max(if deviation.is_nan() { f64::INFINITY } else { deviation });
                }
            }
        }
    }
    MubReport {
        d,
        n: set.n,
        tol,
        pass: violations.is_empty(),
        max_deviation,
        violations,
    }
}

/// `|phi*_x^c> = sum_i <phi_x^c|i> |i>`: the component-wise conjugate basis.
pub fn conjugate_basis(set: &MubSet, x: usize) -> Result<Vec<PureState>> {
    if x >= set.n {
        return Err(Error::IndexOutOfRange { what: "basis", index: x, len: set.n });
    }
    set.basis(x).map(|basis| basis.iter().map(PureState::conjugate).collect())
}
