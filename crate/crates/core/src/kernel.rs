//! Center-surround ("mexican hat") coupling profile shared by the lattice
//! simulator and the circulant state matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Difference-of-Gaussians coupling profile: excitation between nearby units,
/// inhibition at longer range, zero beyond `cutoff_radius`.
///
/// All widths and the cutoff are in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub excitatory_amplitude: f64,
    pub excitatory_width: f64,
    pub inhibitory_amplitude: f64,
    pub inhibitory_width: f64,
    pub cutoff_radius: f64,
}

impl KernelProfile {
    pub fn new(
        excitatory_amplitude: f64,
        excitatory_width: f64,
        inhibitory_amplitude: f64,
        inhibitory_width: f64,
        cutoff_radius: f64,
    ) -> Result<Self> {
        let k = Self {
            excitatory_amplitude,
            excitatory_width,
            inhibitory_amplitude,
            inhibitory_width,
            cutoff_radius,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.excitatory_width > 0.0) || !(self.inhibitory_width > 0.0) {
            return Err(Error::BadKernel(format!(
                "kernel widths must be > 0, got e={} i={}",
                self.excitatory_width, self.inhibitory_width
            )));
        }
        if self.excitatory_amplitude < 0.0 || self.inhibitory_amplitude < 0.0 {
            return Err(Error::BadKernel(format!(
                "kernel amplitudes must be >= 0, got e={} i={}",
                self.excitatory_amplitude, self.inhibitory_amplitude
            )));
        }
        if self.inhibitory_width <= self.excitatory_width {
            return Err(Error::BadKernel(format!(
                "inhibitory width ({}) must exceed excitatory width ({}) for a center-surround shape",
                self.inhibitory_width, self.excitatory_width
            )));
        }
        if self.cutoff_radius < 0.0 {
            return Err(Error::BadKernel(format!(
                "cutoff radius must be >= 0, got {}",
                self.cutoff_radius
            )));
        }
        Ok(())
    }

    /// Coupling weight at distance `r` grid units; zero beyond the cutoff.
    pub fn weight(&self, r: f64) -> f64 {
        if r > self.cutoff_radius {
            return 0.0;
        }
        let e = self.excitatory_amplitude
            * (-r * r / (2.0 * self.excitatory_width * self.excitatory_width)).exp();
        let i = self.inhibitory_amplitude
            * (-r * r / (2.0 * self.inhibitory_width * self.inhibitory_width)).exp();
        e - i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_positive_surround_negative() {
        let k = KernelProfile::new(1.0, 1.0, 0.5, 3.0, 10.0).unwrap();
        assert!(k.weight(0.0) > 0.0);
        assert!(k.weight(4.0) < 0.0);
        assert_eq!(k.weight(11.0), 0.0);
    }

    #[test]
    fn rejects_surround_narrower_than_center() {
        assert!(matches!(
            KernelProfile::new(1.0, 3.0, 0.5, 1.0, 10.0),
            Err(Error::BadKernel(_))
        ));
        assert!(matches!(
            KernelProfile::new(1.0, 2.0, 0.5, 2.0, 10.0),
            Err(Error::BadKernel(_))
        ));
    }

    #[test]
    fn purely_excitatory_when_inhibition_zero() {
        let k = KernelProfile::new(1.0, 1.0, 0.0, 3.0, 8.0).unwrap();
        for r in 0..8 {
            assert!(k.weight(r as f64) >= 0.0);
        }
    }
}
