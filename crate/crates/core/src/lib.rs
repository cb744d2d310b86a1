//! Steady states of translationally invariant quasi-free bosonic and
//! fermionic lattice models under quasi-local Markovian noise.
//!
//! The pipeline works in momentum space: finite-range stencils become 2x2
//! matrix-valued trigonometric symbols, the steady-state covariance solves a
//! 2x2 fixed-point equation per quasi-momentum, and real-space correlation
//! blocks follow by inverse Fourier transform. On top of that sit pole-based
//! correlation lengths and noise-driven critical exponents, stability
//! diagnostics, Gaussian entanglement measures, and brute-force oracles
//! (dense finite rings, exact master equations on tiny chains) that pin the
//! conventions.

pub mod criticality;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod steady;
pub mod symbol;

pub use error::{Error, Result};
