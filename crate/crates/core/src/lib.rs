//! Work extraction from steerable quantum correlations.
//!
//! Bob extracts work from his half of a shared state by quenching to
//! `H_{a|x} = -omega |phi_x^a><phi_x^a|`, where `phi_x^a` runs over `n`
//! mutually unbiased bases and `(x, a)` is Alice's announced measurement
//! setting and outcome. This crate provides:
//!
//! * [`qmath`]: dense complex linear algebra for small systems;
//! * [`mub`]: construction and verification of mutually unbiased bases;
//! * [`game`]: the game itself, exactly and by seeded sampling;
//! * [`bounds`]: closed-form classical / quantum bounds and their ratio;
//! * [`lhs`]: local-hidden-state models and a numerical certificate of
//!   the classical bound;
//! * [`cli`]: the `steerwork` command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod game;
pub mod lhs;
pub mod mub;
pub mod qmath;
pub mod random;

pub use error::{Error, Result};
