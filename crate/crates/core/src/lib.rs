//! Numerical laboratory for the Ricci–Bourguignon flow
//! `∂g/∂t = −2(Ric − ρRg)` on closed model manifolds.
//!
//! The crate evolves round Einstein spheres, conformal metrics on the flat
//! torus and the round 2-sphere, and left-invariant metrics on SU(2); it
//! computes the spectra of −Δ and −Δ + cR along the flow and audits the
//! monotonicity and comparison statements those spectra are expected to
//! satisfy.

pub mod curvature;
pub mod error;
pub mod families;
pub mod flow;
pub mod harness;
pub mod monitor;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
