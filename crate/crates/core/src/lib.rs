//! Simulation of heralded single-photon scattering off four-level emitters
//! in one-dimensional waveguides, and the quantum-repeater protocols built
//! from it: nonlocal entanglement creation against collective channel
//! noise, entanglement swapping, and entanglement purification.
//!
//! The scattering physics is parameterized by the Purcell factor P and the
//! photon detuning; a block either succeeds (reflection amplitude r, photon
//! polarization flipped), fails in a heralded way (transmission amplitude
//! t = 1 + r, polarization unchanged, announced by a detector), or loses
//! the photon out of the waveguide. Accepted protocol runs land on Bell
//! states exactly; imperfection costs success probability, never fidelity.
//!
//! Modules:
//! - [`scatter`]: reflection/transmission coefficients and spectral
//!   wavepacket filters.
//! - [`state`]: unnormalized pure states over qubit subsystems, Born-rule
//!   measurements, and a density-matrix oracle for validation.
//! - [`optics`]: polarizing beam splitters, wave plates, time-bin routing,
//!   and the heralded scattering block.
//! - [`protocols`]: the three repeater protocols with exact enumeration and
//!   seeded Monte Carlo.

pub mod error;
pub mod exec;
pub mod optics;
pub mod protocols;
pub mod rng;
pub mod scatter;
pub mod state;

pub use error::{Error, Result};
pub use protocols::{analytic_protocol_success, NoiseParams};
pub use scatter::{
    compute_coefficients, filter_wavepacket, overlap_success_probability, EmitterParams, Purcell,
    ScatterCoefficients, ScatterPort, SpectralWavepacket,
};
pub use state::{JointState, MixedEnsemble, Subsystem};
