//! Numerical building blocks for privacy-utility funnel optimization and the
//! game-theoretic solvers built on top of it.
//!
//! The crate is organized around a small set of subsystems:
//!
//! - [`prob`]: finite-alphabet distributions, channels, Markov-chain
//!   composition, and information measures (entropy, mutual information, KL).
//! - [`funnel`]: the leakage-minimizing channel design problem
//!   (min I(S;Y) under a utility constraint) with an alternating-minimization
//!   solver and a greedy coordinate-search baseline.
//! - [`frac`]: fractional-order calculus with a Gamma function, the
//!   Grünwald–Letnikov time derivative, and a power-law-memory gradient.
//! - [`mfg`]: coupled HJB/FPK fixed-point solver on 1-D or 2-D grids with an
//!   optional fractional time derivative, plus saddle-point and stability
//!   diagnostics.
//! - [`bankruptcy`]: cooperative bankruptcy games with the characteristic
//!   function, exact Shapley allocation, and allocation validity checks.
//! - [`kuramoto`]: phase-oscillator network with mean-field sinusoidal
//!   coupling and the order-parameter coherence diagnostic.
//! - [`nested`]: the bi-level discrete mean-field game with ADMM-style
//!   measure consensus, and its tri-level variant where a Kuramoto phase game
//!   drives the consensus step; includes operation counters and CDF helpers.
//! - [`fuzzy`]: fuzzy clustering of probability vectors under a KL
//!   divergence objective via alternating optimization.
//! - [`io`]: plain-text CSV serialization shared by the library and the
//!   experiment harness.
//!
//! All randomized routines take explicit seeds and use a counter-based
//! generator, so identical inputs produce identical outputs.

pub mod bankruptcy;
pub mod error;
pub mod frac;
pub mod funnel;
pub mod fuzzy;
pub mod io;
pub mod kuramoto;
pub mod mfg;
pub mod nested;
pub mod prob;

pub use error::{Error, Result};
