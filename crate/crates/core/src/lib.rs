//! Flux-qubit simulation engine.
//!
//! Two closed models are propagated with the time-dependent Schrödinger
//! equation (ħ = 1, energies in rad/ns, times in ns):
//!
//! * a single flux qubit with a photon mode and two warp-region states, each
//!   attached to a discretized flat bosonic band (the gravonon continuum);
//! * a four-qubit transverse-field Ising annealer, optionally with a phonon
//!   mode and a gravonon band on one qubit.
//!
//! The [`scenarios`] module wires these into the four named experiments and
//! the `fluxsim` command-line tool.

pub mod basis;
pub mod continuum;
pub mod error;
pub mod linalg;
pub mod observe;
pub mod operators;
pub mod propagate;
pub mod scenarios;
pub mod units;

pub use basis::{AnnealerConfiguration, Basis, Configuration, IsingConfiguration, SingleQubitConfiguration};
pub use continuum::GravononBand;
pub use error::{Error, Result};
pub use operators::{AnnealerParams, HermitianOperator, SingleQubitParams};
pub use propagate::{EvolutionResult, WaveFunctional};
