//! Stochastic lattice dynamical systems driven by fractional Brownian motion.
//!
//! The system on the truncated lattice `{−N, …, N}` is
//!
//! ```text
//! du = (−κ A u − λ u + f(u) + g) dt + Σ σ_i dω_i(t) e^i
//! ```
//!
//! with `A` the discrete negative Laplacian, `f` a dissipative Nemytskii
//! nonlinearity and `ω_i` independent two-sided fBm paths with Hurst
//! index `H ∈ (1/2, 1)`. The noise is removed by the substitution
//! `v = u − W`, leaving a random ODE that is integrated pathwise.

pub mod attractor;
pub mod error;
pub mod fbm;
pub mod lattice;
pub mod noise;
pub mod seed;
pub mod solver;
pub mod stats;
pub mod trajectory;

pub use attractor::{
    absorbing_radius, absorption_check, contraction_experiment, forward_stationarity_check,
    pullback_experiment, random_equilibrium, ContractionReport, EquilibriumEstimate, EquilibriumOptions,
};
pub use error::{Error, Result};
pub use fbm::{reanchor, sample_fbm, two_sided_sample, HurstParameter, ScalarPath, TimeGrid};
pub use lattice::{
    apply_a, apply_b, apply_bstar, eval_f, Boundary, LatticeParams, LatticeVector, NonlinearityKind,
    NonlinearitySpec,
};
pub use noise::{build_noise_field, shift_noise, stationary_ou, NoiseField, OuProcess};
pub use solver::{cocycle_check, cocycle_map, integrate, Scheme, SolverConfig};
pub use trajectory::{Representation, Trajectory};
