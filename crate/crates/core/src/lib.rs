//! Simulation, verification and synthesis of two-qubit gates for a pair of
//! coupled three-spin exchange-only qubits.
//!
//! Numerical code is generic over a real scalar ([`Real`]); the `*64` and
//! `*32` aliases below fix the precision.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod format;
pub mod metrics;
pub mod scalar;
pub mod spin;
pub mod synth;

pub use dynamics::{
    exchange_propagator, CompositionMode, Configuration, Layout, Pulse, PulseSequence, PulseStep,
    SectorPropagators, Simulator, TransformationMatrix,
};
pub use error::{Error, Result};
pub use scalar::Real;
pub use spin::{Sector, SpinLabel, SpinPair, SubspaceBasis};

pub type Simulator64 = Simulator<f64>;
pub type Simulator32 = Simulator<f32>;
pub type PulseSequence64 = PulseSequence<f64>;
pub type PulseSequence32 = PulseSequence<f32>;
pub type SectorPropagators64 = SectorPropagators<f64>;
pub type TransformationMatrix64 = TransformationMatrix<f64>;
