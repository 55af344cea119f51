//! Traveling-wave encoding on topographic maps.
//!
//! A delayed recurrent network on a 2-D lattice turns punctate stimulus
//! sequences into spatiotemporal interference patterns; decoders recover
//! where and when the stimuli occurred from single membrane-potential
//! snapshots. Two reference sequence encoders — a circulant state-space
//! model and a toy transformer encoder — share a benchmark harness with the
//! wave network so their encodings can be compared with closed-form linear
//! readouts.

// validation uses `!(x > 0.0)` so NaN parameters are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attention;
pub mod error;
pub mod formats;
pub mod harness;
pub mod kernel;
pub mod lattice;
pub mod spacetime;
pub mod ssm;
pub mod wavecode;
pub mod wavesim;

pub use error::{Error, Result};
pub use kernel::KernelProfile;
pub use lattice::{build_lattice, Boundary, DelayTable, TopographicLattice, UnitCoord};
pub use wavesim::{
    build_network, measure_wave_speed, participation_fraction, run_protocol, NetworkState,
    NeuronModel, NeuronVariant, Recording, StimulusEvent, StimulusProtocol,
};
