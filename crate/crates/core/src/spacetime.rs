//! Spacetime analysis of recorded fields: how separable a field is into
//! independent space and time factors, and the causal cones that conduction
//! delays induce around any (unit, step) apex.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{TopographicLattice, UnitCoord};

/// A population field sampled on the lattice over a time window, stored as a
/// (space x time) matrix.
#[derive(Debug, Clone)]
pub struct SpacetimeField {
    /// `n_units x n_frames`, unit index row-major over the lattice.
    values: DMatrix<f64>,
    dt: f64,
    spacing: f64,
}

impl SpacetimeField {
    pub fn new(values: DMatrix<f64>, dt: f64, spacing: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateField(
                "field contains non-finite values".into(),
            ));
        }
        Ok(Self {
            values,
            dt,
            spacing,
        })
    }

    /// Build from per-step frames (each frame is one flattened lattice).
    pub fn from_frames<'a, I>(frames: I, dt: f64, spacing: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f32]>,
    {
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut n_units = 0;
        for frame in frames {
            if n_units == 0 {
                n_units = frame.len();
            } else if frame.len() != n_units {
                return Err(Error::ShapeMismatch(
                    "frames have inconsistent sizes".into(),
                ));
            }
            cols.push(frame.iter().map(|&v| v as f64).collect());
        }
        if cols.is_empty() || n_units == 0 {
            return Err(Error::ShapeMismatch("no frames supplied".into()));
        }
        let t = cols.len();
        let values = DMatrix::from_fn(n_units, t, |i, j| cols[j][i]);
        Self::new(values, dt, spacing)
    }

    pub fn n_units(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Energy concentration in the leading singular value of the (space x time)
/// matrix: `sigma_1^2 / sum_k sigma_k^2`, in (0, 1]. Exactly 1 when the field
/// is an outer product `F(x) G(t)`; traveling waves score lower.
///
/// Invariant under global scaling of the field.
pub fn separability_index(field: &SpacetimeField) -> Result<f64> {
    if field.n_frames() < 2 {
        return Err(Error::ShapeMismatch(
            "separability analysis needs at least 2 frames".into(),
        ));
    }
    let m = &field.values;
    let total: f64 = m.iter().map(|v| v * v).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateField("field has zero energy".into()));
    }
    // Work on the smaller Gram matrix; its eigenvalues are the squared
    // singular values of the field matrix.
    let gram = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let top = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    Ok((top / total).min(1.0))
}

/// Cone direction relative to the apex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeDirection {
    Backward,
    Forward,
}

/// The set of (unit, step) points a spike at the apex can be influenced by
/// (backward) or can influence (forward), as bounded by conduction delays.
#[derive(Debug, Clone)]
pub struct CausalCone {
    apex_unit: UnitCoord,
    apex_step: i64,
    direction: ConeDirection,
    members: HashSet<(UnitCoord, i64)>,
}

impl CausalCone {
    pub fn apex(&self) -> (UnitCoord, i64) {
        (self.apex_unit, self.apex_step)
    }

    pub fn direction(&self) -> ConeDirection {
        self.direction
    }

    pub fn contains(&self, unit: UnitCoord, step: i64) -> bool {
        self.members.contains(&(unit, step))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = &(UnitCoord, i64)> {
        self.members.iter()
    }
}

/// Geometric causal cone: `(u, s)` belongs to the backward cone iff
/// `apex_step - s` lies in `[0, depth_steps]` and `delay(apex, u) <= apex_step - s`;
/// the forward cone is the mirror image.
pub fn causal_cone(
    lattice: &TopographicLattice,
    dt: f64,
    apex_unit: UnitCoord,
    apex_step: i64,
    depth_steps: usize,
    direction: ConeDirection,
) -> Result<CausalCone> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveParameter(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    if !lattice.contains(apex_unit) {
        return Err(Error::ShapeMismatch(format!(
            "apex {apex_unit:?} outside lattice"
        )));
    }
    let mut members = HashSet::new();
    for idx in 0..lattice.n_units() {
        let u = lattice.coord(idx);
        let delay = lattice.delay_steps(apex_unit, u, dt)? as i64;
        if delay > depth_steps as i64 {
            continue;
        }
        for lag in delay..=(depth_steps as i64) {
            let step = match direction {
                ConeDirection::Backward => apex_step - lag,
                ConeDirection::Forward => apex_step + lag,
            };
            members.insert((u, step));
        }
    }
    Ok(CausalCone {
        apex_unit,
        apex_step,
        direction,
        members,
    })
}
