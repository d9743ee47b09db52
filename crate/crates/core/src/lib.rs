//! Simulation library for a two-stage entanglement protocol in which two
//! multilevel atoms traverse a bimodal optical cavity one after the other,
//! far detuned from the cavity modes.
//!
//! Stage A entangles the first atom with the two circularly polarized cavity
//! modes; after a field-free delay, stage B maps the photonic half onto the
//! second atom, leaving the atoms in a two-qubit or two-qutrit entangled
//! state and the cavity in vacuum. Cavity decay is modeled through a
//! non-Hermitian conditional Hamiltonian, so trajectory norms carry the
//! no-photon-loss success probability.
//!
//! All frequencies and rates are expressed in units of the stage-A coupling
//! `g_A`, times in units of `1/g_A`. For reference, a realizable operating
//! point (g, κ, γ)/2π = (750, 2.6, 3.5) MHz maps to (1, 0.003467, 0.004667)
//! in these units.
//!
//! Module map:
//! - [`space`]: composite Hilbert space (two 7-level atoms ⊗ two truncated
//!   bosonic modes), basis indexing, state vectors.
//! - [`hamiltonian`]: the four stage Hamiltonians (full interaction-picture
//!   and adiabatically eliminated effective forms) plus conditional decay.
//! - [`propagator`]: matrix exponentials, adaptive time-dependent
//!   integration, trajectories and population extraction.
//! - [`oracle`]: the closed-form stage coefficients and protocol schedule;
//!   the independent check against the numerical path.
//! - [`protocol`]: end-to-end two-stage runs and scoring (success
//!   probability, conditional/unconditional fidelity).
//! - [`sweep`]: parameter sweeps and effective-parameter diagnostics.
//! - [`verify`]: self-check suite exercising oracle equivalence and
//!   structural invariants at runtime.

pub mod error;
pub mod hamiltonian;
pub mod oracle;
pub mod propagator;
pub mod protocol;
pub mod space;
pub mod sweep;
pub mod verify;

pub use error::SimError;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;
