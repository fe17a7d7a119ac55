//! Closed-form work bounds and the advantage ratio.
//!
//! Units: `k_B = hbar = 1`. Every expression depends on `beta * omega`
//! only through the thermal ground-state population
//! `e^{b w} / (e^{b w} + d - 1)`, which is evaluated as
//! `1 / (1 + (d - 1) e^{-b w})` so no exponential can overflow.
//! `beta = f64::INFINITY` is the zero-temperature limit.

use serde::Serialize;

use crate::error::{Error, Result};

/// Population of the `-omega` level of `H = -omega |phi><phi|` in its Gibbs state.
pub fn thermal_ground_population(d: usize, omega: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        return 1.0;
    }
    1.0 / (1.0 + (d as f64 - 1.0) * (-beta * omega).exp())
}

/// `(1/d) (1 + (d - 1)/sqrt(n))`: the largest average overlap of one state
/// with `n` mutually unbiased bases.
pub fn rastegin_bound(d: usize, n: usize) -> f64 {
    let d = d as f64;
    (1.0 + (d - 1.0) / (n as f64).sqrt()) / d
}

/// Upper bound on extractable work for unsteerable assemblages.
pub fn w_classical(d: usize, n: usize, omega: f64, beta: f64) -> f64 {
    omega * rastegin_bound(d, n) - omega * thermal_ground_population(d, omega, beta)
}

/// Largest average work reachable with any assemblage.
pub fn w_quantum(d: usize, omega: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    // omega * (1 - p) written without cancellation
    let excited = (d as f64 - 1.0) * (-beta * omega).exp();
    omega * excited / (1.0 + excited)
}

/// `w_quantum / w_classical`, defined only while the classical bound is positive.
pub fn xi(d: usize, n: usize, omega: f64, beta: f64) -> Result<f64> {
    let classical = w_classical(d, n, omega, beta);
    if classical <= 0.0 {
        return Err(Error::XiDomain { w_classical: classical });
    }
    Ok(w_quantum(d, omega, beta) / classical)
}

/// `d sqrt(n) / (sqrt(n) + d - 1) > 1`
pub fn advantage_condition(d: usize, n: usize) -> bool {
    let (d, root_n) = (d as f64, (n as f64).sqrt());
    d * root_n / (root_n + d - 1.0) > 1.0
}

/// JSON has no infinity; `beta = inf` is written as the string `"inf"`.
pub(crate) fn serialize_beta<S: serde::Serializer>(
    beta: &f64,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    if beta.is_infinite() {
        serializer.serialize_str("inf")
    } else {
        serializer.serialize_f64(*beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSet {
    pub d: usize,
    pub n: usize,
    pub omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    pub beta: f64,
    pub w_classical: f64,
    pub w_quantum: f64,
    /// `None` when the classical bound is not positive.
    pub xi: Option<f64>,
    pub rastegin: f64,
    pub advantage: bool,
}

impl BoundSet {
    pub fn evaluate(d: usize, n: usize, omega: f64, beta: f64) -> Result<Self> {
        validate_parameters(d, n, omega, beta)?;
        Ok(Self {
            d,
            n,
            omega,
            beta,
            w_classical: w_classical(d, n, omega, beta),
            w_quantum: w_quantum(d, omega, beta),
            xi: xi(d, n, omega, beta).ok(),
            rastegin: rastegin_bound(d, n),
            advantage: advantage_condition(d, n),
        })
    }
}

pub(crate) fn validate_parameters(d: usize, n: usize, omega: f64, beta: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("basis count must be >= 1".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be positive and finite, got {omega}")));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    Ok(())
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Frozen from a 30-digit evaluation of the closed forms.
    const W_QUANTUM_D2: f64 = 0.268941421369995120748840758178;
    const W_CLASSICAL_D2_N3: f64 = 0.0576165559648080030034151484292;
    const XI_D2_N3: f64 = 4.66778023896922316737161069859;
    const W_CLASSICAL_D3_N4: f64 = 0.0905497819008375568083477430281;
    const XI_D3_N4: f64 = 4.6812163026341878528153734146;

    #[test]
    fn rastegin_values() {
        assert!((rastegin_bound(2, 3) - 0.788675134594812882).abs() < 1e-15);
        assert_eq!(rastegin_bound(7, 1), 1.0);
        assert!((rastegin_bound(100, 101) - 0.108508681830788924).abs() < 1e-15);
        assert!((rastegin_bound(3, 4) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn classical_bound_values() {
        assert!((w_classical(2, 3, 1.0, 1.0) - W_CLASSICAL_D2_N3).abs() < 1e-14);
        assert!((w_classical(3, 4, 1.0, 1.0) - W_CLASSICAL_D3_N4).abs() < 1e-14);
        assert!((w_classical(2, 3, 1.0, 0.0) - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        let cold = w_classical(2, 3, 1.0, f64::INFINITY);
        assert!((cold - (rastegin_bound(2, 3) - 1.0)).abs() < 1e-15);
        assert!(cold < 0.0);
    }

    #[test]
    fn quantum_bound_values() {
        assert!((w_quantum(2, 1.0, 1.0) - W_QUANTUM_D2).abs() < 1e-15);
        assert_eq!(w_quantum(4, 2.0, f64::INFINITY), 0.0);
        assert!((w_quantum(5, 3.0, 0.0) - 3.0 * 0.8).abs() < 1e-15);
        // very cold but finite: no overflow, tends to zero
        let w = w_quantum(3, 1.0, 1e4);
        assert!((0.0..1e-300).contains(&w));
    }

    #[test]
    fn xi_values() {
        assert!((xi(2, 3, 1.0, 1.0).unwrap() - XI_D2_N3).abs() < 1e-12);
        assert!((xi(3, 4, 1.0, 1.0).unwrap() - XI_D3_N4).abs() < 1e-12);
        match xi(2, 3, 1.0, f64::INFINITY) {
            Err(Error::XiDomain { w_classical }) => assert!(w_classical < 0.0),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn xi_at_infinite_temperature_is_sqrt_n() {
        for d in 2..12 {
            for n in 1..14 {
                for omega in [0.1, 1.0, 7.5] {
                    let ratio = xi(d, n, omega, 0.0).unwrap();
                    assert!((ratio - (n as f64).sqrt()).abs() < 1e-12, "d={d} n={n}");
                }
            }
        }
    }

    #[test]
    fn advantage_cases() {
        assert!(!advantage_condition(2, 1));
        assert!(advantage_condition(2, 3));
        assert!((2..=64).all(|d| advantage_condition(d, 2)));
    }

    #[test]
    fn quantum_beats_classical_when_n_at_least_two() {
        for d in 2..=30 {
            for n in 2..=d + 1 {
                for beta in [0.0, 0.1, 1.0, 3.0, 20.0] {
                    assert!(w_quantum(d, 1.3, beta) > w_classical(d, n, 1.3, beta));
                }
            }
        }
    }

    #[test]
    fn bound_set_invariants() {
        let set = BoundSet::evaluate(2, 1, 1.0, 1.0).unwrap();
        assert!(!set.advantage);
        assert_eq!(set.rastegin, 1.0);
        let set = BoundSet::evaluate(5, 6, 1.0, 2.0).unwrap();
        assert!(set.advantage && set.w_quantum >= set.w_classical);
        assert!(set.rastegin > 1.0 / 5.0 && set.rastegin <= 1.0);
        assert!(BoundSet::evaluate(1, 1, 1.0, 1.0).is_err());
        assert!(BoundSet::evaluate(2, 2, -1.0, 1.0).is_err());
        assert!(BoundSet::evaluate(2, 2, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn json_encodes_infinite_beta() {
        let json = serde_json::to_value(BoundSet::evaluate(2, 3, 1.0, f64::INFINITY).unwrap()).unwrap();
        assert_eq!(json["beta"], "inf");
        assert!(json["xi"].is_null());
    }
}
