//! Topographic map geometry: a 2-D grid of units, pairwise distances, and the
//! conversion of distance into integer conduction-delay steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary rule for the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Edges are hard: distance is plain Euclidean, no wrap.
    Open,
    /// Torus: distance uses the shortest wrap per axis.
    Periodic,
}

/// A unit's grid coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitCoord {
    pub x: usize,
    pub y: usize,
}

impl UnitCoord {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// 2-D topographic lattice. Units sit on grid centers `spacing` millimeters
/// apart; activity propagates between them at `conduction_velocity` mm/ms.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopographicLattice {
    width: usize,
    height: usize,
    /// Millimeters per unit edge.
    spacing: f64,
    /// Millimeters per millisecond.
    conduction_velocity: f64,
    boundary: Boundary,
}

/// Build a lattice, validating all numeric parameters.
pub fn build_lattice(
    width: usize,
    height: usize,
    spacing: f64,
    conduction_velocity: f64,
    boundary: Boundary,
) -> Result<TopographicLattice> {
    if width < 1 || height < 1 {
        return Err(Error::NonPositiveParameter(format!(
            "lattice dimensions must be >= 1, got {width}x{height}"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::NonPositiveParameter(format!(
            "spacing must be > 0, got {spacing}"
        )));
    }
    if !(conduction_velocity > 0.0) {
        return Err(Error::NonPositiveParameter(format!(
            "conduction velocity must be > 0, got {conduction_velocity}"
        )));
    }
    Ok(TopographicLattice {
        width,
        height,
        spacing,
        conduction_velocity,
        boundary,
    })
}

impl TopographicLattice {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn conduction_velocity(&self) -> f64 {
        self.conduction_velocity
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_units(&self) -> usize {
        self.width * self.height
    }

    /// Total-order index of a coordinate (row-major).
    pub fn index(&self, c: UnitCoord) -> usize {
        c.y * self.width + c.x
    }

    pub fn coord(&self, index: usize) -> UnitCoord {
        UnitCoord::new(index % self.width, index / self.width)
    }

    pub fn contains(&self, c: UnitCoord) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Signed displacement from `a` to `b` in grid units, wrapped to the
    /// shortest image on periodic lattices.
    pub fn displacement(&self, a: UnitCoord, b: UnitCoord) -> (i64, i64) {
        let mut dx = b.x as i64 - a.x as i64;
        let mut dy = b.y as i64 - a.y as i64;
        if self.boundary == Boundary::Periodic {
            dx = wrap_min(dx, self.width as i64);
            dy = wrap_min(dy, self.height as i64);
        }
        (dx, dy)
    }

    /// Euclidean distance between unit centers in millimeters.
    pub fn distance(&self, a: UnitCoord, b: UnitCoord) -> f64 {
        let (dx, dy) = self.displacement(a, b);
        ((dx * dx + dy * dy) as f64).sqrt() * self.spacing
    }

    /// Conduction delay between two units in integer steps of `dt` ms.
    ///
    /// Quantization rounds travel times up (with a small tolerance for exact
    /// integer ratios), never down. Rounding to nearest would let chains of
    /// short hops arrive earlier than the direct delay, breaking causal-cone
    /// containment; the ceiling is superadditive, so any relayed path takes
    /// at least the direct delay. Distinct units always cost at least one
    /// step.
    pub fn delay_steps(&self, a: UnitCoord, b: UnitCoord, dt: f64) -> Result<usize> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveParameter(format!(
                "dt must be > 0, got {dt}"
            )));
        }
        if !self.contains(a) || !self.contains(b) {
            return Err(Error::ShapeMismatch(format!(
                "unit out of lattice bounds: {a:?} or {b:?} on {}x{}",
                self.width, self.height
            )));
        }
        if a == b {
            return Ok(0);
        }
        let steps = quantize_delay(self.distance(a, b) / self.conduction_velocity / dt);
        Ok(steps.max(1))
    }

    /// Delay for a raw displacement in grid units, same quantization rule.
    pub(crate) fn delay_for_displacement(&self, dx: i64, dy: i64, dt: f64) -> usize {
        if dx == 0 && dy == 0 {
            return 0;
        }
        let dist = ((dx * dx + dy * dy) as f64).sqrt() * self.spacing;
        quantize_delay(dist / self.conduction_velocity / dt).max(1)
    }
}

/// Ceiling with a tolerance so travel times that are integers up to floating
/// point noise stay at that integer.
fn quantize_delay(steps: f64) -> usize {
    (steps - 1e-9).ceil().max(0.0) as usize
}

fn wrap_min(d: i64, extent: i64) -> i64 {
    let m = d.rem_euclid(extent);
    if m > extent / 2 {
        m - extent
    } else {
        m
    }
}

/// Precomputed per-displacement delay lookup for one lattice at a fixed `dt`.
///
/// Delays depend only on displacement on a homogeneous lattice, so the table
/// is indexed by `(dx, dy)` rather than unit pairs.
#[derive(Debug, Clone)]
pub struct DelayTable {
    lattice: TopographicLattice,
    dt: f64,
    /// Row-major over dy in `-(h-1)..=h-1`, dx in `-(w-1)..=w-1`.
    steps: Vec<u32>,
    max_delay_steps: usize,
}

impl DelayTable {
    pub fn build(lattice: &TopographicLattice, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveParameter(format!(
                "dt must be > 0, got {dt}"
            )));
        }
        let w = lattice.width as i64;
        let h = lattice.height as i64;
        let mut steps = Vec::with_capacity(((2 * w - 1) * (2 * h - 1)) as usize);
        let mut max_delay = 0usize;
        for dy in -(h - 1)..=(h - 1) {
            for dx in -(w - 1)..=(w - 1) {
                let (ex, ey) = match lattice.boundary {
                    Boundary::Open => (dx, dy),
                    Boundary::Periodic => (wrap_min(dx, w), wrap_min(dy, h)),
                };
                let d = lattice.delay_for_displacement(ex, ey, dt);
                max_delay = max_delay.max(d);
                steps.push(d as u32);
            }
        }
        Ok(Self {
            lattice: *lattice,
            dt,
            steps,
            max_delay_steps: max_delay,
        })
    }

    pub fn max_delay_steps(&self) -> usize {
        self.max_delay_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Delay in steps between two units.
    pub fn delay(&self, a: UnitCoord, b: UnitCoord) -> usize {
        let dx = b.x as i64 - a.x as i64;
        let dy = b.y as i64 - a.y as i64;
        let w = self.lattice.width as i64;
        let h = self.lattice.height as i64;
        let row = (dy + h - 1) as usize;
        let col = (dx + w - 1) as usize;
        self.steps[row * (2 * w - 1) as usize + col] as usize
    }
}
