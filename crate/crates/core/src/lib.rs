//! Quantum transmission through one-dimensional single and double barriers.
//!
//! Three engines compute the transmission probability of the same
//! [`Potential`](potentials::Potential) and are meant to cross-check each
//! other:
//!
//! * [`rect`]: exact closed form (and an N-layer transfer matrix) for
//!   rectangular barriers,
//! * [`numeric`]: fixed-step RK4 integration of the stationary Schrödinger
//!   equation for arbitrary barrier shapes,
//! * [`wkb`]: the semiclassical four-turning-point connection formula.
//!
//! On top of those sit resonance detection ([`spectrum`]), group delays
//! ([`delay`]) and Tsu-Esaki current densities ([`transport`]).
//!
//! Units throughout: energies in eV, lengths in nm, times in fs.

pub mod constants;
pub mod delay;
pub mod engine;
pub mod error;
pub mod numeric;
pub mod potentials;
pub mod quadrature;
pub mod rect;
pub mod spectrum;
pub mod transport;
pub mod wkb;

pub use engine::{Engine, EngineOptions, PointFlag, TransmissionPoint};
pub use error::{Result, TunnelError};
pub use potentials::{BarrierShape, DoubleBarrierSpec, Potential};
