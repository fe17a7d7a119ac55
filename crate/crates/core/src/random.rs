//! Seeded random states, bases and measurements.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::qmath::{ComplexMatrix, ComplexVector, DensityMatrix, Povm, PureState};

/// Independent ChaCha stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(dim, |_, _| gaussian(rng))
}

/// Haar-distributed pure state.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    loop {
        if let Ok(state) = PureState::normalized(gaussian_vector(dim, rng)) {
            return state;
        }
    }
}

/// `G G^dagger / Tr(G G^dagger)` with `G` a `dim x rank` Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(dim, rank.max(1), |_, _| gaussian(rng));
    let mut m = &g * g.adjoint();
    let trace = m.trace();
    m /= trace;
    let m = (&m + m.adjoint()) * Complex64::from(0.5);
    DensityMatrix::new(m).expect("Ginibre construction yields a density matrix")
}

/// Orthonormal basis from Gram-Schmidt on Gaussian vectors (Haar unitary columns).
pub fn random_basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<PureState> {
    let mut basis: Vec<PureState> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = gaussian_vector(dim, rng);
        // two passes keep the basis orthonormal to machine precision
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.amplitudes().dotc(&v);
                v -= b.amplitudes() * overlap;
            }
        }
        if v.norm() > 1e-6 {
            basis.push(PureState::normalized(v).expect("non-zero vector"));
        }
    }
    basis
}

pub fn random_projective_povm<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Povm {
    Povm::projective(&random_basis(dim, rng)).expect("orthonormal basis gives a valid POVM")
}

/// Uniform sample from the probability simplex.
pub fn random_probability_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
