//! Resonant-state expansion of quantum decay in finite-range 1D potentials.
//!
//! The library builds the full pipeline for studying the survival probability
//! S(t) = |⟨ψ(0)|ψ(t)⟩|² of a state initially confined to a piecewise-constant
//! potential region [0, L]:
//!
//! 1. [`potential`] — piecewise-constant potentials, transfer matrices and the
//!    Jost-type outgoing-wave condition f(k);
//! 2. [`poles`] — complex momenta κₙ where f(κₙ) = 0, found by
//!    argument-principle certified search plus asymptotic continuation;
//! 3. [`states`] — normalized resonant (Gamow) states uₙ(x);
//! 4. [`initial`] — the cutoff-Gaussian and sinusoidal initial states;
//! 5. [`coefficients`] — expansion coefficients Cₙ = ∫ψuₙ and their sum rules;
//! 6. [`dynamics`] — survival amplitude A_N(t), evolving wavefunction,
//!    moment ladders μ_N(j), Hamiltonian moments and the Zeno time;
//! 7. [`shorttime`] — the cubic-sum classifier (t² vs t^{3/2} law) and the
//!    short-time fits S ≈ 1 − (t/τ*)^ϑ;
//! 8. [`oracle`] — an independent Crank–Nicolson grid propagation used to
//!    cross-validate the expansion.
//!
//! Everything is deterministic: summation orders are fixed, parallel maps
//! preserve ordering, and the optional `parallel` feature (rayon) produces
//! bitwise-identical results to the sequential fallback.
//!
//! Units are nm / fs / eV throughout; see [`units`].

pub mod cache;
pub mod coefficients;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod faddeyeva;
pub mod initial;
pub mod kahan;
pub mod oracle;
pub mod par;
pub mod poles;
pub mod potential;
pub mod shorttime;
pub mod states;
pub mod units;

pub use error::{Error, Result};

/// Library version, embedded in CSV artifact headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
