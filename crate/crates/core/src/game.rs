//! The work-extraction game.
//!
//! Bob picks `x` uniformly, Alice measures `M_x` on her half of the shared
//! state and announces `a`. Bob's conditional state `rho_{a|x}` is quenched to
//! `H_{a|x} = -omega |phi_x^a><phi_x^a|`, thermalized at inverse temperature
//! `beta`, and quenched back. The net work of one round is
//! `-Tr(H rho) + Tr(H gamma)`, and the game value is the average over `x`
//! and `a`.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, serialize_beta};
use crate::error::{Error, Result};
use crate::mub::{build_mub, conjugate_basis, MubSet};
use crate::qmath::{
    hermitian_eigensystem, max_abs_diff, ComplexMatrix, ComplexVector, DensityMatrix, Povm,
    PSD_TOL,
};
use crate::random::stream_rng;

/// Outcomes below this probability are skipped; their normalized state is undefined.
pub const MIN_PROBABILITY: f64 = 1e-14;

/// Tolerance for the assemblage invariants and protocol checks.
pub const ASSEMBLAGE_TOL: f64 = 1e-10;

const SHOTS_PER_BATCH: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    pub d: usize,
    pub n: usize,
    pub omega: f64,
    /// Inverse temperature; `f64::INFINITY` selects zero temperature.
    pub beta: f64,
    /// Monte Carlo rounds; 0 selects exact mode.
    pub shots: u64,
    pub seed: u64,
}

impl GameConfig {
    pub fn new(d: usize, n: usize, omega: f64, beta: f64) -> Self {
        Self { d, n, omega, beta, shots: 0, seed: 0 }
    }

    pub fn with_shots(self, shots: u64, seed: u64) -> Self {
        Self { shots, seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "the game needs at least two bases, got {}",
                self.n
            )));
        }
        bounds::validate_parameters(self.d, self.n, self.omega, self.beta)
    }
}

/// Bob's unnormalized conditional states `sigma[x][a]` and `p(a|x) = Tr sigma`.
#[derive(Debug, Clone)]
pub struct Assemblage {
    dim: usize,
    sigma: Vec<Vec<ComplexMatrix>>,
    p: Vec<Vec<f64>>,
}

impl Assemblage {
    /// Builds and validates an assemblage from `sigma[x][a]`.
    pub fn new(sigma: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let dim = sigma
            .first()
            .and_then(|row| row.first())
            .map(ComplexMatrix::nrows)
            .ok_or_else(|| Error::InvalidParameter("empty assemblage".into()))?;
        let p = sigma
            .iter()
            .map(|row| row.iter().map(|s| s.trace().re).collect())
            .collect();
        let asm = Self { dim, sigma, p };
        asm.validate()?;
        Ok(asm)
    }

    pub fn validate(&self) -> Result<()> {
        let mut reference: Option<ComplexMatrix> = None;
        for (x, row) in self.sigma.iter().enumerate() {
            let mut marginal = ComplexMatrix::zeros(self.dim, self.dim);
            for (a, s) in row.iter().enumerate() {
                if s.shape() != (self.dim, self.dim) {
                    return Err(Error::DimensionMismatch { expected: self.dim, found: s.nrows() });
                }
                let trace = s.trace();
                if trace.im.abs() > ASSEMBLAGE_TOL || (trace.re - self.p[x][a]).abs() > ASSEMBLAGE_TOL {
                    return Err(Error::Invariant(format!("p({a}|{x}) does not match Tr sigma")));
                }
                if self.p[x][a] < -1e-12 {
                    return Err(Error::Invariant(format!("p({a}|{x}) = {} is negative", self.p[x][a])));
                }
                marginal += s;
            }
            let total: f64 = self.p[x].iter().sum();
            if (total - 1.0).abs() > ASSEMBLAGE_TOL {
                return Err(Error::Invariant(format!("outcome probabilities for x = {x} sum to {total}")));
            }
            match &reference {
                None => reference = Some(marginal),
                Some(first) => {
                    let defect = max_abs_diff(first, &marginal);
                    if defect > ASSEMBLAGE_TOL {
                        return Err(Error::Invariant(format!(
                            "marginal for x = {x} differs from x = 0 by {defect:e} (signalling)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Dimension of Bob's system.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> usize {
        self.sigma.len()
    }

    pub fn outcomes(&self, x: usize) -> usize {
        self.sigma[x].len()
    }

    pub fn sigma(&self, x: usize, a: usize) -> &ComplexMatrix {
        &self.sigma[x][a]
    }

    pub fn probability(&self, x: usize, a: usize) -> f64 {
        self.p[x][a]
    }

    /// `sigma / p`, or `None` when `p < MIN_PROBABILITY`.
    pub fn conditional_state(&self, x: usize, a: usize) -> Option<DensityMatrix> {
        let p = self.p[x][a];
        if p < MIN_PROBABILITY {
            return None;
        }
        let m = self.sigma[x][a].unscale(p);
        let m = (&m + m.adjoint()) * Complex64::from(0.5);
        Some(DensityMatrix::from_matrix_unchecked(m))
    }

    /// `sum_a sigma_{a|x}`
    pub fn marginal(&self, x: usize) -> ComplexMatrix {
        self.sigma[x]
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, s| acc + s)
    }
}

/// `|psi> = sum_i |ii> / sqrt(d)` as a density matrix on `d * d`.
pub fn maximally_entangled(d: usize) -> DensityMatrix {
    let mut psi = ComplexVector::zeros(d * d);
    let amp = Complex64::from(1.0 / (d as f64).sqrt());
    for i in 0..d {
        psi[i * d + i] = amp;
    }
    DensityMatrix::from_matrix_unchecked(&psi * psi.adjoint())
}

/// `sigma_{a|x} = Tr_A[(M_x^a (x) I_B) rho_AB]`
pub fn measure_assemblage(rho_ab: &DensityMatrix, povms: &[Povm]) -> Result<Assemblage> {
    let dim_a = povms
        .first()
        .map(Povm::dim)
        .ok_or_else(|| Error::InvalidParameter("no measurements".into()))?;
    if let Some(p) = povms.iter().find(|p| p.dim() != dim_a) {
        return Err(Error::DimensionMismatch { expected: dim_a, found: p.dim() });
    }
    let total = rho_ab.dim();
    if !total.is_multiple_of(dim_a) {
        return Err(Error::DimensionMismatch { expected: dim_a, found: total });
    }
    let dim_b = total / dim_a;
    let rho = rho_ab.matrix();

    let sigma = povms
        .iter()
        .map(|povm| {
            povm.effects()
                .iter()
                .map(|m| {
                    // sigma(k,l) = sum_{i,j} M(i,j) rho(j*dB + k, i*dB + l)
                    ComplexMatrix::from_fn(dim_b, dim_b, |k, l| {
                        let mut acc = Complex64::from(0.0);
                        for i in 0..dim_a {
                            for j in 0..dim_a {
                                acc += m[(i, j)] * rho[(j * dim_b + k, i * dim_b + l)];
                            }
                        }
                        acc
                    })
                })
                .collect()
        })
        .collect();
    Assemblage::new(sigma)
}

/// `H_{a|x} = -omega |phi_x^a><phi_x^a|`
pub fn hamiltonian(set: &MubSet, a: usize, x: usize, omega: f64) -> Result<ComplexMatrix> {
    set.check_index(x, a)?;
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    Ok(set.state(x, a)?.projector() * Complex64::from(-omega))
}

/// Gibbs state `e^{-beta H} / Tr e^{-beta H}`; at `beta = inf` the uniform
/// mixture over the ground eigenspace.
pub fn thermal_state(h: &ComplexMatrix, beta: f64) -> Result<DensityMatrix> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    let system = hermitian_eigensystem(h)?;
    let ground = system.values[0];
    let weights: Vec<f64> = if beta.is_infinite() {
        let window = PSD_TOL * ground.abs().max(1.0);
        system
            .values
            .iter()
            .map(|&v| if v - ground <= window { 1.0 } else { 0.0 })
            .collect()
    } else {
        // shifted by the ground energy so the largest weight is exactly 1
        system.values.iter().map(|&v| (-beta * (v - ground)).exp()).collect()
    };
    let z: f64 = weights.iter().sum();
    let dim = h.nrows();
    let mut gibbs = ComplexMatrix::zeros(dim, dim);
    for (w, v) in weights.iter().zip(&system.vectors) {
        if *w > 0.0 {
            gibbs += v.projector() * Complex64::from(w / z);
        }
    }
    let gibbs = (&gibbs + gibbs.adjoint()) * Complex64::from(0.5);
    Ok(DensityMatrix::from_matrix_unchecked(gibbs))
}

fn real_trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    // Tr(AB) = sum_ij A(i,j) B(j,i)
    let trace: Complex64 = a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum();
    if trace.im.abs() > PSD_TOL {
        return Err(Error::NotHermitian { deviation: trace.im.abs() });
    }
    Ok(trace.re)
}

/// Energy of the thermal state of `h`: `Tr(H gamma)`.
pub fn thermal_energy(h: &ComplexMatrix, beta: f64) -> Result<f64> {
    real_trace_of_product(h, thermal_state(h, beta)?.matrix())
}

/// Net work of one round: `-Tr(H rho) + Tr(H gamma)`.
pub fn work_term(rho_hat: &DensityMatrix, h: &ComplexMatrix, beta: f64) -> Result<f64> {
    let extracted = -real_trace_of_product(h, rho_hat.matrix())?;
    Ok(extracted + thermal_energy(h, beta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkReport {
    pub d: usize,
    pub n: usize,
    pub omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    pub beta: f64,
    pub mode: Mode,
    pub shots: u64,
    pub seed: u64,
    pub average: f64,
    /// Standard error of the Monte Carlo mean (needs at least two shots).
    pub stderr: Option<f64>,
    pub w_classical: f64,
    pub w_quantum: f64,
    pub xi: Option<f64>,
    /// `per_round[x][a]`; `None` for outcomes that never occur.
    pub per_round: Vec<Vec<Option<f64>>>,
}

/// Exact game value `(1/n) sum_{a,x} p(a|x) W(rho_{a|x}, H_{a|x})`.
pub fn average_work(asm: &Assemblage, set: &MubSet, omega: f64, beta: f64) -> Result<WorkReport> {
    let (d, n) = (set.d(), set.n());
    if asm.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: asm.dim() });
    }
    if asm.inputs() != n {
        return Err(Error::DimensionMismatch { expected: n, found: asm.inputs() });
    }
    let mut per_round = Vec::with_capacity(n);
    let mut total = 0.0;
    for x in 0..n {
        if asm.outcomes(x) != d {
            return Err(Error::DimensionMismatch { expected: d, found: asm.outcomes(x) });
        }
        let mut row = Vec::with_capacity(d);
        for a in 0..d {
            let value = match asm.conditional_state(x, a) {
                Some(rho_hat) => {
                    let h = hamiltonian(set, a, x, omega)?;
                    let w = work_term(&rho_hat, &h, beta)?;
                    total += asm.probability(x, a) * w;
                    Some(w)
                }
                None => None,
            };
            row.push(value);
        }
        per_round.push(row);
    }
    Ok(WorkReport {
        d,
        n,
        omega,
        beta,
        mode: Mode::Exact,
        shots: 0,
        seed: 0,
        average: total / n as f64,
        stderr: None,
        w_classical: bounds::w_classical(d, n, omega, beta),
        w_quantum: bounds::w_quantum(d, omega, beta),
        xi: bounds::xi(d, n, omega, beta).ok(),
        per_round,
    })
}

/// Alice's conjugate-basis measurements on the maximally entangled state.
pub fn quantum_protocol_assemblage(set: &MubSet) -> Result<Assemblage> {
    let povms = (0..set.n())
        .map(|x| Povm::projective(&conjugate_basis(set, x)?))
        .collect::<Result<Vec<_>>>()?;
    measure_assemblage(&maximally_entangled(set.d()), &povms)
}

/// Worst `|<phi_x^a| rho_{a|x} |phi_x^a> - 1|` and worst `|p(a|x) - 1/d|`.
pub fn steering_defects(set: &MubSet, asm: &Assemblage) -> Result<(f64, f64)> {
    let uniform = 1.0 / set.d() as f64;
    let mut fidelity_defect = 0.0_f64;
    let mut probability_defect = 0.0_f64;
    for x in 0..set.n() {
        for a in 0..set.d() {
            probability_defect = probability_defect.max((asm.probability(x, a) - uniform).abs());
            let fidelity = match asm.conditional_state(x, a) {
                Some(rho) => set.state(x, a)?.expectation(rho.matrix()),
                None => 0.0,
            };
            fidelity_defect = fidelity_defect.max((fidelity - 1.0).abs());
        }
    }
    Ok((fidelity_defect, probability_defect))
}

/// The steering protocol evaluated exactly; must reach `w_quantum`.
pub fn run_exact_quantum(config: &GameConfig) -> Result<WorkReport> {
    config.validate()?;
    let set = build_mub(config.d, config.n)?;
    let asm = quantum_protocol_assemblage(&set)?;
    let (fidelity_defect, probability_defect) = steering_defects(&set, &asm)?;
    if fidelity_defect >= ASSEMBLAGE_TOL || probability_defect > ASSEMBLAGE_TOL {
        return Err(Error::Invariant(format!(
            "steered states deviate from the MUB vectors (fidelity {fidelity_defect:e}, probability {probability_defect:e})"
        )));
    }
    let report = average_work(&asm, &set, config.omega, config.beta)?;
    if (report.average - report.w_quantum).abs() > ASSEMBLAGE_TOL {
        return Err(Error::Invariant(format!(
            "protocol work {} differs from the quantum bound {}",
            report.average, report.w_quantum
        )));
    }
    Ok(report)
}

/// The steering protocol sampled round by round.
pub fn run_monte_carlo(config: &GameConfig) -> Result<WorkReport> {
    config.validate()?;
    let set = build_mub(config.d, config.n)?;
    let asm = quantum_protocol_assemblage(&set)?;
    sample_work(&asm, &set, config.omega, config.beta, config.shots, config.seed)
}

#[derive(Debug, Clone, Copy, Default)]
struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    fn merge(self, other: RunningStats) -> RunningStats {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        RunningStats { count, mean, m2 }
    }
}

/// Plays `shots` rounds of the game on an arbitrary assemblage.
///
/// Shots are grouped in fixed batches; batch `k` draws from ChaCha stream `k`
/// under `seed`, and batch statistics are merged in batch order, so the
/// report does not depend on thread scheduling.
pub fn sample_work(
    asm: &Assemblage,
    set: &MubSet,
    omega: f64,
    beta: f64,
    shots: u64,
    seed: u64,
) -> Result<WorkReport> {
    if shots == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one shot".into()));
    }
    let exact = average_work(asm, set, omega, beta)?;
    let samplers = (0..set.n())
        .map(|x| {
            let weights: Vec<f64> = (0..set.d())
                .map(|a| {
                    let p = asm.probability(x, a);
                    if p >= MIN_PROBABILITY { p } else { 0.0 }
                })
                .collect();
            WeightedIndex::new(weights)
                .map_err(|e| Error::Invariant(format!("outcome distribution for x = {x}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let batches = shots.div_ceil(SHOTS_PER_BATCH);
    let partials: Vec<RunningStats> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = stream_rng(seed, batch);
            let count = SHOTS_PER_BATCH.min(shots - batch * SHOTS_PER_BATCH);
            let mut stats = RunningStats::default();
            for _ in 0..count {
                let x = rng.random_range(0..set.n());
                let a = samplers[x].sample(&mut rng);
                stats.push(exact.per_round[x][a].unwrap_or(0.0));
            }
            stats
        })
        .collect();
    let stats = partials.into_iter().fold(RunningStats::default(), RunningStats::merge);

    let stderr = (stats.count >= 2)
        .then(|| (stats.m2 / (stats.count - 1) as f64).max(0.0).sqrt() / (stats.count as f64).sqrt());
    Ok(WorkReport {
        mode: Mode::MonteCarlo,
        shots,
        seed,
        average: stats.mean,
        stderr,
        ..exact
    })
}
