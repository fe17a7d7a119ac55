//! Local-hidden-state models and the single-state overlap optimizer.
//!
//! An LHS model is a finite ensemble `{p(l), rho_l}` with a response table
//! `p(a|x,l)`. The work it can deliver against `H_{a|x} = -omega |phi_x^a><phi_x^a|`
//! is linear in the model, so its supremum is reached by one pure state
//! with a deterministic response: `a_x = argmax_a |<phi_x^a|psi>|^2`. The
//! quantity to maximize is therefore
//!
//! ```text
//! f(psi) = (1/n) sum_x max_a |<phi_x^a|psi>|^2
//! ```
//!
//! which is attacked by alternating maximization (fix the argmax choices,
//! then take the principal eigenvector of the averaged projectors) from
//! random starts, and at `d = 2` cross-checked by a Bloch-sphere grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, serialize_beta};
use crate::error::{Error, Result};
use crate::game::{average_work, Assemblage};
use crate::mub::{build_mub, MubSet};
use crate::qmath::{principal_eigenvector, ComplexMatrix, ComplexVector, DensityMatrix, PureState};
use crate::random::{random_density_matrix, random_probability_vector, random_pure_state, stream_rng};

const MODEL_TOL: f64 = 1e-12;

/// A decrease larger than this between iterations is reported as a bug.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LhsModel {
    d: usize,
    n: usize,
    states: Vec<DensityMatrix>,
    weights: Vec<f64>,
    /// `response[l][x][a] = p(a|x,l)`
    response: Vec<Vec<Vec<f64>>>,
}

impl LhsModel {
    pub fn new(
        states: Vec<DensityMatrix>,
        weights: Vec<f64>,
        response: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let d = states
            .first()
            .map(DensityMatrix::dim)
            .ok_or_else(|| Error::InvalidParameter("LHS model needs at least one hidden state".into()))?;
        if weights.len() != states.len() || response.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: weights.len().min(response.len()) });
        }
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: s.dim() });
        }
        check_distribution(&weights, "hidden-state weights")?;
        let n = response[0].len();
        for table in &response {
            if table.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: table.len() });
            }
            for row in table {
                if row.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: row.len() });
                }
                check_distribution(row, "response row")?;
            }
        }
        Ok(Self { d, n, states, weights, response })
    }

    /// One hidden state, answering `choices[x]` with certainty.
    pub fn deterministic(state: DensityMatrix, choices: &[usize]) -> Result<Self> {
        let d = state.dim();
        let table = choices
            .iter()
            .map(|&a| {
                if a >= d {
                    return Err(Error::IndexOutOfRange { what: "outcome", index: a, len: d });
                }
                let mut row = vec![0.0; d];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vec![state], vec![1.0], vec![table])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `sum_l p(l) rho_l`
    pub fn average_state(&self) -> ComplexMatrix {
        self.states
            .iter()
            .zip(&self.weights)
            .fold(ComplexMatrix::zeros(self.d, self.d), |acc, (s, &w)| acc + s.matrix() * Complex64::from(w))
    }
}

fn check_distribution(values: &[f64], what: &str) -> Result<()> {
    let total: f64 = values.iter().sum();
    if values.iter().any(|&v| v < -MODEL_TOL || !v.is_finite()) || (total - 1.0).abs() > MODEL_TOL {
        return Err(Error::Invariant(format!("{what} do not form a probability vector (sum {total})")));
    }
    Ok(())
}

/// `sigma_{a|x} = sum_l p(l) p(a|x,l) rho_l`
pub fn assemblage_from_model(model: &LhsModel) -> Result<Assemblage> {
    let sigma = (0..model.n)
        .map(|x| {
            (0..model.d)
                .map(|a| {
                    model
                        .states
                        .iter()
                        .zip(&model.weights)
                        .zip(&model.response)
                        .fold(ComplexMatrix::zeros(model.d, model.d), |acc, ((state, &w), table)| {
                            acc + state.matrix() * Complex64::from(w * table[x][a])
                        })
                })
                .collect()
        })
        .collect();
    Assemblage::new(sigma)
}

pub fn lhs_work(model: &LhsModel, set: &MubSet, omega: f64, beta: f64) -> Result<f64> {
    if model.d != set.d() || model.n != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), found: model.n });
    }
    Ok(average_work(&assemblage_from_model(model)?, set, omega, beta)?.average)
}

/// Random finite LHS model: 1 to 4 hidden states of random rank, each with
/// either a deterministic or a random stochastic response.
pub fn random_lhs_model<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> LhsModel {
    let count = rng.random_range(1..=4);
    let states = (0..count)
        .map(|_| {
            let rank = rng.random_range(1..=d);
            random_density_matrix(d, rank, rng)
        })
        .collect();
    let weights = random_probability_vector(count, rng);
    let response = (0..count)
        .map(|_| {
            let deterministic = rng.random_bool(0.5);
            (0..n)
                .map(|_| {
                    if deterministic {
                        let mut row = vec![0.0; d];
                        row[rng.random_range(0..d)] = 1.0;
                        row
                    } else {
                        random_probability_vector(d, rng)
                    }
                })
                .collect()
        })
        .collect();
    LhsModel::new(states, weights, response).expect("random model satisfies its invariants")
}

/// `(1/n) sum_x max_a |<phi_x^a|psi>|^2` and the maximizing `a` per basis
/// (ties go to the smallest `a`).
pub fn overlap_objective(set: &MubSet, psi: &PureState) -> (f64, Vec<usize>) {
    let mut total = 0.0;
    let mut choices = Vec::with_capacity(set.n());
    for x in 0..set.n() {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..set.d() {
            let overlap = set.vector(x, a).dotc(psi.amplitudes()).norm_sqr();
            if overlap > best.1 {
                best = (a, overlap);
            }
        }
        total += best.1;
        choices.push(best.0);
    }
    (total / set.n() as f64, choices)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub restarts: usize,
    /// Stop when one iteration gains less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { restarts: 32, tol: 1e-12, max_iter: 500, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerResult {
    pub best_state: PureState,
    pub objective: f64,
    pub restarts_used: usize,
    /// Iterations spent by the winning run.
    pub iterations: usize,
    pub converged: bool,
    /// Maximizing outcome per basis at `best_state`.
    pub choices: Vec<usize>,
}

/// One alternating-maximization run.
#[derive(Debug, Clone)]
pub struct AscentRun {
    pub state: PureState,
    pub objective: f64,
    pub choices: Vec<usize>,
    /// Objective after each iteration, starting with the initial state.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn alternating_maximization(
    set: &MubSet,
    start: PureState,
    tol: f64,
    max_iter: usize,
) -> Result<AscentRun> {
    if start.dim() != set.d() {
        return Err(Error::DimensionMismatch { expected: set.d(), found: start.dim() });
    }
    let weight = Complex64::from(1.0 / set.n() as f64);
    let mut state = start;
    let (mut objective, mut choices) = overlap_objective(set, &state);
    let mut history = vec![objective];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut averaged = ComplexMatrix::zeros(set.d(), set.d());
        for (x, &a) in choices.iter().enumerate() {
            let v = set.vector(x, a);
            averaged += v * v.adjoint() * weight;
        }
        let candidate = principal_eigenvector(&averaged)?;
        let (value, next_choices) = overlap_objective(set, &candidate);
        if value < objective - MONOTONE_SLACK {
            return Err(Error::Invariant(format!(
                "alternating maximization decreased the objective from {objective} to {value}"
            )));
        }
        let gain = value - objective;
        if value >= objective {
            state = candidate;
            objective = value;
            choices = next_choices;
        }
        history.push(objective);
        if gain < tol {
            converged = true;
            break;
        }
    }
    Ok(AscentRun { state, objective, choices, history, iterations, converged })
}

/// Best of `settings.restarts` alternating-maximization runs from random
/// pure states. Restart `r` draws its start from stream `r` of the seed;
/// ties keep the lowest restart index.
pub fn optimize_single_state(set: &MubSet, settings: &OptimizerSettings) -> Result<OptimizerResult> {
    if settings.restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let runs = (0..settings.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(settings.seed, r as u64);
            let start = random_pure_state(set.d(), &mut rng);
            alternating_maximization(set, start, settings.tol, settings.max_iter)
        })
        .collect::<Result<Vec<_>>>()?;

    let best = runs
        .into_iter()
        .reduce(|best, run| if run.objective > best.objective { run } else { best })
        .expect("at least one restart");
    Ok(OptimizerResult {
        best_state: best.state,
        objective: best.objective,
        restarts_used: settings.restarts,
        iterations: best.iterations,
        converged: best.converged,
        choices: best.choices,
    })
}

fn bloch_state(theta: f64, phi: f64) -> PureState {
    let amplitudes = ComplexVector::from_column_slice(&[
        Complex64::from((theta / 2.0).cos()),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]);
    PureState::normalized(amplitudes).expect("Bloch parametrization is normalized")
}

const REFINE_ROUNDS: usize = 60;
const REFINE_HALF_WIDTH: i32 = 4;

/// Brute-force maximization over the qubit Bloch sphere.
///
/// Evaluates `f` on a `resolution x resolution` grid in `(theta, phi)` and
/// then repeatedly re-grids a shrinking window around the best point.
pub fn bloch_grid_search(set: &MubSet, resolution: usize) -> Result<OptimizerResult> {
    if set.d() != 2 {
        return Err(Error::InvalidParameter(format!(
            "Bloch grid search needs d = 2, got d = {}",
            set.d()
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let value = |theta: f64, phi: f64| overlap_objective(set, &bloch_state(theta, phi)).0;

    let mut step_theta = PI / (resolution - 1) as f64;
    let mut step_phi = 2.0 * PI / resolution as f64;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..resolution {
        let theta = i as f64 * step_theta;
        for j in 0..resolution {
            let phi = j as f64 * step_phi;
            let f = value(theta, phi);
            if f > best.2 {
                best = (theta, phi, f);
            }
        }
    }

    for _ in 0..REFINE_ROUNDS {
        let (theta0, phi0, _) = best;
        let h = REFINE_HALF_WIDTH as f64;
        for i in -REFINE_HALF_WIDTH..=REFINE_HALF_WIDTH {
            for j in -REFINE_HALF_WIDTH..=REFINE_HALF_WIDTH {
                let theta = theta0 + step_theta * i as f64 / h;
                let phi = phi0 + step_phi * j as f64 / h;
                let f = value(theta, phi);
                if f > best.2 {
                    best = (theta, phi, f);
                }
            }
        }
        step_theta *= 0.5;
        step_phi *= 0.5;
    }

    let state = bloch_state(best.0, best.1);
    let (objective, choices) = overlap_objective(set, &state);
    Ok(OptimizerResult {
        best_state: state,
        objective,
        restarts_used: 0,
        iterations: REFINE_ROUNDS,
        converged: true,
        choices,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LhsSupWork {
    pub d: usize,
    pub n: usize,
    pub omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    pub beta: f64,
    /// Work of the best deterministic single-state model found.
    pub achievable: f64,
    /// The classical bound.
    pub bound: f64,
    pub gap: f64,
    pub optimizer: OptimizerResult,
}

/// Lower estimate (from the optimizer) and upper bound of the LHS work supremum.
pub fn lhs_sup_work(
    d: usize,
    n: usize,
    omega: f64,
    beta: f64,
    settings: &OptimizerSettings,
) -> Result<LhsSupWork> {
    bounds::validate_parameters(d, n, omega, beta)?;
    let set = build_mub(d, n)?;
    let optimizer = optimize_single_state(&set, settings)?;
    let model = LhsModel::deterministic(DensityMatrix::from_pure(&optimizer.best_state), &optimizer.choices)?;
    let achievable = lhs_work(&model, &set, omega, beta)?;
    let bound = bounds::w_classical(d, n, omega, beta);
    if achievable > bound + 1e-8 {
        return Err(Error::Invariant(format!(
            "LHS model extracts {achievable}, above the classical bound {bound}"
        )));
    }
    Ok(LhsSupWork {
        d,
        n,
        omega,
        beta,
        achievable,
        bound,
        gap: bound - achievable,
        optimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{rastegin_bound, w_classical};
    use crate::game::measure_assemblage;
    use crate::qmath::{approx_eq, Povm};
    use crate::random::random_projective_povm;

    const QUBIT_THREE_BASES: f64 = 0.788675134594812882254574390251;
    const QUBIT_TWO_BASES: f64 = 0.853553390593273762200422181052;

    fn thermal_population(d: usize, omega: f64, beta: f64) -> f64 {
        let boltz = (beta * omega).exp();
        boltz / (boltz + d as f64 - 1.0)
    }

    #[test]
    fn deterministic_single_state_assemblage() {
        let psi = DensityMatrix::from_pure(&PureState::basis(3, 1));
        let model = LhsModel::deterministic(psi.clone(), &[2, 0]).unwrap();
        let asm = assemblage_from_model(&model).unwrap();
        assert!(approx_eq(asm.sigma(0, 2), psi.matrix(), 0.0));
        assert!(approx_eq(asm.sigma(1, 0), psi.matrix(), 0.0));
        assert_eq!(asm.probability(0, 0), 0.0);
        assert!(LhsModel::deterministic(psi, &[3]).is_err());
    }

    #[test]
    fn model_validation() {
        let s = DensityMatrix::maximally_mixed(2);
        let row = vec![vec![0.5, 0.5]];
        assert!(LhsModel::new(vec![s.clone()], vec![0.9], vec![row.clone()]).is_err());
        assert!(LhsModel::new(vec![s.clone()], vec![1.0], vec![vec![vec![0.7, 0.7]]]).is_err());
        assert!(LhsModel::new(vec![s.clone(), s.clone()], vec![1.0], vec![row.clone()]).is_err());
        assert!(LhsModel::new(vec![s], vec![1.0], vec![row]).is_ok());
    }

    #[test]
    fn model_reproduces_separable_state_measurements() {
        // rho_AB = sum_l p_l rho_A^l (x) rho_B^l measured by M_x gives the
        // LHS model with hidden states rho_B^l and response Tr(M_x^a rho_A^l).
        let mut rng = stream_rng(4, 0);
        let weights = vec![0.2, 0.5, 0.3];
        let alice: Vec<_> = (0..3).map(|_| random_density_matrix(2, 2, &mut rng)).collect();
        let bob: Vec<_> = (0..3).map(|_| random_density_matrix(3, 2, &mut rng)).collect();
        let povms: Vec<_> = (0..2).map(|_| random_projective_povm(2, &mut rng)).collect();

        let mut rho = ComplexMatrix::zeros(6, 6);
        for l in 0..3 {
            rho += alice[l].tensor(&bob[l]).into_matrix() * Complex64::from(weights[l]);
        }
        let measured = measure_assemblage(&DensityMatrix::new(rho).unwrap(), &povms).unwrap();

        // Alice's two-outcome measurement on a 3-outcome-indexed model: pad with zeros.
        let response = alice
            .iter()
            .map(|ra| {
                povms
                    .iter()
                    .map(|p: &Povm| {
                        let mut row: Vec<f64> = p.effects().iter().map(|m| (m * ra.matrix()).trace().re).collect();
                        row.push(0.0);
                        row
                    })
                    .collect()
            })
            .collect();
        let model = LhsModel::new(bob.clone(), weights, response).unwrap();
        let modelled = assemblage_from_model(&model).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                assert!(approx_eq(modelled.sigma(x, a), measured.sigma(x, a), 1e-10));
            }
            assert!(approx_eq(&modelled.marginal(x), &model.average_state(), 1e-12));
        }
    }

    #[test]
    fn trivial_model_work() {
        for d in [2, 3, 5] {
            let set = build_mub(d, 2).unwrap();
            let model = LhsModel::new(
                vec![DensityMatrix::maximally_mixed(d)],
                vec![1.0],
                vec![vec![vec![1.0 / d as f64; d]; 2]],
            )
            .unwrap();
            let w = lhs_work(&model, &set, 1.0, 0.7).unwrap();
            let expected = 1.0 / d as f64 - thermal_population(d, 1.0, 0.7);
            assert!((w - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn random_models_respect_classical_bound() {
        let mut rng = stream_rng(99, 0);
        for (d, n) in [(2, 3), (3, 4), (5, 6), (3, 2)] {
            let set = build_mub(d, n).unwrap();
            for _ in 0..50 {
                let model = random_lhs_model(d, n, &mut rng);
                let w = lhs_work(&model, &set, 1.0, 1.0).unwrap();
                assert!(w <= w_classical(d, n, 1.0, 1.0) + 1e-8);
            }
        }
    }

    #[test]
    fn ascent_is_monotone() {
        let set = build_mub(5, 6).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..10 {
            let run = alternating_maximization(&set, random_pure_state(5, &mut rng), 1e-12, 500).unwrap();
            assert!(run.history.windows(2).all(|w| w[1] >= w[0]));
            assert!(run.objective <= rastegin_bound(5, 6) + 1e-8);
            assert!(run.objective >= 0.2 - 1e-10);
        }
    }

    #[test]
    fn qubit_optimum() {
        let set = build_mub(2, 3).unwrap();
        let result = optimize_single_state(&set, &OptimizerSettings::default()).unwrap();
        assert!((result.objective - QUBIT_THREE_BASES).abs() < 1e-9);
        assert!(result.converged);
        // Bloch vector along (+-1, +-1, +-1)/sqrt(3)
        let psi = result.best_state.amplitudes();
        let (a0, a1) = (psi[0], psi[1]);
        let bloch = [
            2.0 * (a0.conj() * a1).re,
            2.0 * (a0.conj() * a1).im,
            a0.norm_sqr() - a1.norm_sqr(),
        ];
        for component in bloch {
            assert!((component.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn single_basis_objective_is_one() {
        let set = build_mub(3, 1).unwrap();
        let result = optimize_single_state(&set, &OptimizerSettings { restarts: 4, ..Default::default() }).unwrap();
        assert!((result.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qutrit_objective_below_rastegin() {
        let set = build_mub(3, 4).unwrap();
        let result = optimize_single_state(&set, &OptimizerSettings::default()).unwrap();
        assert!(result.objective <= rastegin_bound(3, 4) + 1e-8);
        // (3 + sqrt 5)/8, found independently by the same ascent in numpy
        assert!((result.objective - (3.0 + 5f64.sqrt()) / 8.0).abs() < 1e-9);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let set = build_mub(5, 4).unwrap();
        let settings = OptimizerSettings { restarts: 8, seed: 17, ..Default::default() };
        let a = optimize_single_state(&set, &settings).unwrap();
        let b = optimize_single_state(&set, &settings).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.best_state, b.best_state);
        assert!(optimize_single_state(&set, &OptimizerSettings { restarts: 0, ..settings }).is_err());
    }

    #[test]
    fn grid_search_values() {
        let set = build_mub(2, 3).unwrap();
        let grid = bloch_grid_search(&set, 500).unwrap();
        assert!((grid.objective - QUBIT_THREE_BASES).abs() < 1e-6);
        let opt = optimize_single_state(&set, &OptimizerSettings::default()).unwrap();
        assert!(grid.objective <= opt.objective + 1e-6);

        let grid = bloch_grid_search(&build_mub(2, 2).unwrap(), 500).unwrap();
        assert!((grid.objective - QUBIT_TWO_BASES).abs() < 1e-6);

        let coarse = bloch_grid_search(&set, 7).unwrap();
        assert!(coarse.objective <= opt.objective + 1e-6);

        assert!(bloch_grid_search(&build_mub(3, 2).unwrap(), 10).is_err());
        assert!(bloch_grid_search(&set, 1).is_err());
    }

    #[test]
    fn qubit_supremum_is_tight() {
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let sup = lhs_sup_work(2, 3, 1.0, beta, &OptimizerSettings::default()).unwrap();
            assert!(sup.gap.abs() < 1e-6, "beta={beta}: gap {}", sup.gap);
        }
    }

    #[test]
    fn supremum_at_infinite_temperature() {
        let sup = lhs_sup_work(3, 4, 2.0, 0.0, &OptimizerSettings::default()).unwrap();
        assert!((sup.achievable - 2.0 * (sup.optimizer.objective - 1.0 / 3.0)).abs() < 1e-12);
        assert!(sup.achievable <= sup.bound + 1e-8);
        assert!(sup.gap > 0.0);
    }
}
