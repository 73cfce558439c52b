//! Supersymmetric partners of free-fermion and free-boson lattice models.
//!
//! A supercharge `q(k)` on the Brillouin zone, constrained by the intrinsic
//! particle-hole relation `X q(k)* X = q(-k)`, generates the fermionic BdG
//! Hamiltonian `h_f = q Z q†` and the bosonic one `h_b = q† q`, which share a
//! one-particle spectrum. This crate builds supercharges for gapped target
//! Hamiltonians (general, two-band, and strictly local symmetry-class
//! constructions), transports them along gapped homotopies, gauge-transforms
//! them to number-conserving partners, and evaluates the physics that hangs
//! off the identification maps: locality profiles, topological invariants,
//! and the fermion/boson entanglement duality of the Gaussian ground states.
//!
//! ```
//! use susy_band::models;
//! use susy_band::susy_pair::{build_pair, spectral_duality_report};
//!
//! let model = models::kitaev_chain(1.0, 0.7, 16).unwrap();
//! let pair = build_pair(model.q, 1e-10).unwrap();
//! // The fermionic and bosonic dynamical matrices share one spectrum.
//! assert!(spectral_duality_report(&pair).unwrap() < 1e-10);
//! assert!((pair.spectrum[0][0] - 2.4).abs() < 1e-12);
//! ```

pub mod bloch;
pub mod cli;
pub mod config;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod models;
pub mod numerics;
pub mod supercharge;
pub mod susy_pair;
pub mod topology;

pub use error::{Result, SusyError};

/// Eigenvalues below this floor make `|h_f|^{-1/2}` meaningless; operations
/// that would divide by them fail loudly instead of clamping.
pub const DEFAULT_GAP_FLOOR: f64 = 1e-10;

/// Default tolerance for the homotopy-transport ODE (Richardson estimate).
pub const DEFAULT_ODE_TOL: f64 = 1e-6;

/// Real-space couplings with block norm below this are treated as absent
/// when measuring strict-locality support radii.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Restricted bosonic eigenvalues above this cap are reported as divergent.
pub const DIVERGENCE_CAP: f64 = 1e12;
