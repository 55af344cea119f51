//! Bundled simulation configurations: the desk-scale defaults used by the
//! CLI, the benchmark harness, and the acceptance suite.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::KernelProfile;
use crate::lattice::{build_lattice, Boundary, TopographicLattice};

use super::{build_network, NetworkState, NeuronModel, NeuronVariant};

/// Everything needed to build a network: lattice, coupling, dynamics, step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub lattice: TopographicLattice,
    pub kernel: KernelProfile,
    pub model: NeuronModel,
    pub dt: f64,
}

impl SimConfig {
    pub fn build(&self, seed: u64) -> Result<NetworkState> {
        build_network(&self.lattice, &self.kernel, &self.model, self.dt, seed)
    }

    /// Decoder activity threshold for this configuration: rest plus five
    /// standard deviations of the stationary membrane noise (the per-step
    /// input noise integrated through the leak), with a small floor for
    /// noiseless runs.
    pub fn activity_threshold(&self) -> f64 {
        let leak = (-self.dt / self.model.tau).exp();
        let stationary = self.model.noise_std / (1.0 - leak * leak).sqrt();
        (5.0 * stationary).max(1e-6)
    }
}

/// Desk-scale lattice: 64x64 units, 1 mm spacing, 0.2 mm/ms conduction.
pub fn desk_lattice() -> TopographicLattice {
    build_lattice(64, 64, 1.0, 0.2, Boundary::Open).expect("desk lattice parameters are valid")
}

/// Broad, nearly flat excitatory center with a weak distant surround. The
/// flat center keeps the wavefront visible across the whole coupling range:
/// at any snapshot the freshest arrivals outshine the leaked interior, so
/// the bright annulus rides the causal frontier at exactly the conduction
/// velocity.
fn desk_kernel() -> KernelProfile {
    KernelProfile::new(1.0, 7.0, 0.05, 12.0, 12.0).expect("desk kernel parameters are valid")
}

/// Rate-variant desk configuration: excitable (threshold-rectified) leaky
/// integrators. Stimulated units emit briefly; everything else stays below
/// threshold, so the evoked annulus is the delay-painted halo of the
/// stimulus site.
pub fn rate_desk() -> SimConfig {
    SimConfig {
        lattice: desk_lattice(),
        kernel: desk_kernel(),
        model: NeuronModel {
            variant: NeuronVariant::RateLeaky { rectify: true },
            tau: 4.0,
            threshold: 1.0,
            reset: 0.0,
            recurrent_gain: 0.18,
            feedforward_gain: 1.0,
            noise_std: 0.005,
        },
        dt: 1.0,
    }
}

/// Spiking desk configuration in the sparse regime: stimulus-driven units
/// fire a short burst; the burst's halo travels outward along the delayed
/// horizontal couplings as a subthreshold membrane wave, so only a tiny
/// fraction of the population ever spikes while the wave stays decodable
/// from the potentials.
pub fn spiking_sparse() -> SimConfig {
    SimConfig {
        lattice: desk_lattice(),
        kernel: desk_kernel(),
        model: NeuronModel {
            variant: NeuronVariant::SpikingLif,
            tau: 4.0,
            threshold: 1.0,
            reset: -3.0,
            recurrent_gain: 0.18,
            feedforward_gain: 1.0,
            noise_std: 0.005,
        },
        dt: 1.0,
    }
}

/// Dense negative control: ten times the sparse recurrent gain produces a
/// seizure-like wave that recruits most of the lattice.
pub fn spiking_dense() -> SimConfig {
    let mut cfg = spiking_sparse();
    cfg.model.recurrent_gain *= 10.0;
    cfg
}

/// Smaller rate configuration for quick tests (32x32 lattice).
pub fn rate_small() -> SimConfig {
    let mut cfg = rate_desk();
    cfg.lattice =
        build_lattice(32, 32, 1.0, 0.2, Boundary::Open).expect("small lattice parameters valid");
    cfg.kernel = small_kernel();
    cfg
}

/// Smaller spiking configuration for quick tests (32x32 lattice).
pub fn spiking_small() -> SimConfig {
    let mut cfg = spiking_sparse();
    cfg.lattice =
        build_lattice(32, 32, 1.0, 0.2, Boundary::Open).expect("small lattice parameters valid");
    cfg.kernel = small_kernel();
    cfg
}

fn small_kernel() -> KernelProfile {
    KernelProfile::new(1.0, 5.0, 0.05, 9.0, 8.0).expect("small kernel parameters are valid")
}

/// Canonical stimulus amplitude and duration for desk-scale protocols.
pub const DESK_STIMULUS_AMPLITUDE: f64 = 4.0;
pub const DESK_STIMULUS_DURATION: usize = 3;
