//! Simulator and verification suite for one-dimensional pressureless
//! alignment hydrodynamics with mixed-sign nonlocal interaction kernels:
//! strong short-range alignment, integrable long-range (mis)alignment.
//!
//! The state is evolved in the `(rho, G)` form, where both fields satisfy
//! continuity equations and the velocity is reconstructed spectrally from
//! mean-free primitives plus the conserved momentum. Every quantitative
//! structure of the underlying theory is monitored at runtime: conserved
//! integrals, explicit density envelopes, transported maximum principles,
//! the operator-symbol sandwich bounds, and the modulus-of-continuity
//! parameter chain with its dissipation lower bounds.

pub mod burgers;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod dynamics;
pub mod field;
pub mod kernel;
pub mod moc;
pub mod quad;
pub mod rng;
pub mod snapshot;
pub mod sweep;
pub mod symbol;
