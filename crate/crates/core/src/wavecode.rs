//! Decoders that invert the wave encoding: recover where and when single
//! events occurred from one membrane-potential snapshot, peel multi-event
//! sequences out of interference patterns by greedy template matching, and
//! measure how far apart two spatiotemporal responses are.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{TopographicLattice, UnitCoord};
use crate::wavesim::presets::SimConfig;
use crate::wavesim::{run_protocol, Recording, StimulusEvent, StimulusProtocol};

/// One frame of a recording together with its time stamp.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub values: &'a [f32],
    pub step: usize,
    pub dt: f64,
}

impl Recording {
    pub fn snapshot(&self, step: usize) -> Snapshot<'_> {
        Snapshot {
            values: self.frame(step),
            step,
            dt: self.dt(),
        }
    }
}

/// A decoded stimulus event: fractional lattice position and onset step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedEvent {
    pub x: f64,
    pub y: f64,
    pub onset: f64,
    pub confidence: f64,
}

/// Maps apparent front radius (grid units) back to elapsed steps for one
/// simulator configuration. Index `i` holds the radius measured `i` steps
/// after onset in a noiseless reference run.
///
/// The raw geometric inverse `lag = radius / (v dt / spacing)` ignores the
/// rise time of the crest and the finite width of the stimulated core; the
/// calibration curve folds both in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusCalibration {
    pub radius_at_lag: Vec<f64>,
}

impl RadiusCalibration {
    /// Invert the curve: the (fractional) lag whose calibrated radius best
    /// matches the observed one. The curve need not be globally monotone;
    /// the best bracket is interpolated linearly.
    pub fn lag_for_radius(&self, radius: f64) -> f64 {
        let c = &self.radius_at_lag;
        if c.is_empty() {
            return 0.0;
        }
        let mut best = 0usize;
        let mut best_err = f64::INFINITY;
        for (i, &r) in c.iter().enumerate() {
            let e = (r - radius).abs();
            if e < best_err {
                best_err = e;
                best = i;
            }
        }
        // interpolate within the better adjacent segment
        let interp = |i0: usize, i1: usize| -> Option<f64> {
            let (r0, r1) = (c[i0], c[i1]);
            if (r1 - r0).abs() < 1e-12 {
                return None;
            }
            let t = (radius - r0) / (r1 - r0);
            if (0.0..=1.0).contains(&t) {
                Some(i0 as f64 + t * (i1 as f64 - i0 as f64))
            } else {
                None
            }
        };
        if best + 1 < c.len() {
            if let Some(l) = interp(best, best + 1) {
                return l;
            }
        }
        if best > 0 {
            if let Some(l) = interp(best - 1, best) {
                return l;
            }
        }
        best as f64
    }
}

/// Build the radius calibration for a configuration by running one noiseless
/// reference stimulus at the lattice center and measuring the apparent front
/// radius at every lag.
pub fn calibrate_radius(
    config: &SimConfig,
    max_lag: usize,
    amplitude: f64,
    duration: usize,
) -> Result<RadiusCalibration> {
    let mut cfg = *config;
    cfg.model.noise_std = 0.0;
    let center = UnitCoord::new(cfg.lattice.width() / 2, cfg.lattice.height() / 2);
    let mut net = cfg.build(0)?;
    let protocol = StimulusProtocol::new(vec![StimulusEvent::new(center, 0, duration, amplitude)]);
    let rec = run_protocol(&mut net, &protocol, max_lag + 1)?;
    let threshold = config.activity_threshold();
    let mut radius_at_lag = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let snap = rec.snapshot(lag);
        let r = match annulus_fit(&snap, cfg.lattice, threshold) {
            Ok(fit) => fit.mean_radius,
            Err(_) => 0.0,
        };
        radius_at_lag.push(r);
    }
    Ok(RadiusCalibration { radius_at_lag })
}

/// Options for single-event decoding.
#[derive(Debug, Clone, Default)]
pub struct DecodeOptions {
    /// Activity threshold above rest; use `SimConfig::activity_threshold`.
    pub activity_threshold: f64,
    /// Optional calibrated radius-to-lag curve. Without it the geometric
    /// inverse through the conduction velocity is used.
    pub calibration: Option<RadiusCalibration>,
}

struct AnnulusFit {
    cx: f64,
    cy: f64,
    mean_radius: f64,
    total_weight: f64,
}

/// Activity-weighted least-squares circle fit on super-threshold pixels
/// (Kasa fit), with a centroid fallback when the system is degenerate.
///
/// Stray super-threshold pixels far from the annulus (noise tails) swing the
/// circle fit badly, so pixels beyond 2.5x the weighted mean distance from
/// the weighted centroid are trimmed before fitting.
fn annulus_fit(
    snap: &Snapshot<'_>,
    lattice: TopographicLattice,
    threshold: f64,
) -> Result<AnnulusFit> {
    let w = lattice.width();
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, &v) in snap.values.iter().enumerate() {
        let a = v as f64 - threshold;
        if a > 0.0 {
            pts.push(((idx % w) as f64, (idx / w) as f64, a));
        }
    }
    if pts.is_empty() {
        return Err(Error::NoEventDetected(format!(
            "no activity above threshold {threshold:.4e} at step {}",
            snap.step
        )));
    }

    if pts.len() > 4 {
        let wsum: f64 = pts.iter().map(|p| p.2).sum();
        let cx0 = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / wsum;
        let cy0 = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / wsum;
        let mean_d = pts
            .iter()
            .map(|p| p.2 * ((p.0 - cx0).powi(2) + (p.1 - cy0).powi(2)).sqrt())
            .sum::<f64>()
            / wsum;
        let keep = (2.5 * mean_d).max(3.0);
        let trimmed: Vec<_> = pts
            .iter()
            .copied()
            .filter(|p| ((p.0 - cx0).powi(2) + (p.1 - cy0).powi(2)).sqrt() <= keep)
            .collect();
        if trimmed.len() >= 3 {
            pts = trimmed;
        }
    }
    let wsum: f64 = pts.iter().map(|p| p.2).sum();

    // Kasa: minimize sum w (x^2 + y^2 + a x + b y + c)^2 over (a, b, c).
    let mut m = DMatrix::zeros(3, 3);
    let mut rhs = DVector::zeros(3);
    for &(x, y, wt) in &pts {
        let z = x * x + y * y;
        let row = [x, y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += wt * row[i] * row[j];
            }
            rhs[i] -= wt * row[i] * z;
        }
    }
    let (cx, cy) = match m.clone().lu().solve(&rhs) {
        Some(sol) if sol.iter().all(|v: &f64| v.is_finite()) => (-sol[0] / 2.0, -sol[1] / 2.0),
        _ => {
            // degenerate (e.g. all pixels collinear): weighted centroid
            let cx = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / wsum;
            let cy = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / wsum;
            (cx, cy)
        }
    };
    // clamp into the lattice; the fit can land slightly outside for
    // boundary-clipped annuli
    let cx = cx.clamp(0.0, (lattice.width() - 1) as f64);
    let cy = cy.clamp(0.0, (lattice.height() - 1) as f64);

    let mean_radius = pts
        .iter()
        .map(|&(x, y, wt)| wt * ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / wsum;
    Ok(AnnulusFit {
        cx,
        cy,
        mean_radius,
        total_weight: wsum,
    })
}

/// Decode a single event from one snapshot: the event position is the center
/// of the annular activity, and the onset is the snapshot time minus the time
/// the front needed to reach its mean radius at speed `v` (mm/ms).
pub fn decode_single(
    snap: &Snapshot<'_>,
    lattice: &TopographicLattice,
    v: f64,
    opts: &DecodeOptions,
) -> Result<DecodedEvent> {
    if !(v > 0.0) {
        return Err(Error::NonPositiveParameter(format!(
            "wave speed must be > 0, got {v}"
        )));
    }
    if snap.values.len() != lattice.n_units() {
        return Err(Error::ShapeMismatch(format!(
            "snapshot has {} values, lattice has {}",
            snap.values.len(),
            lattice.n_units()
        )));
    }
    let fit = annulus_fit(snap, *lattice, opts.activity_threshold)?;
    let lag_steps = match &opts.calibration {
        Some(cal) => cal.lag_for_radius(fit.mean_radius),
        None => fit.mean_radius * lattice.spacing() / v / snap.dt,
    };
    let onset = snap.step as f64 - lag_steps;
    Ok(DecodedEvent {
        x: fit.cx,
        y: fit.cy,
        onset,
        confidence: fit.total_weight,
    })
}

/// Precomputed single-event field templates indexed by (position, lag),
/// unit-normalized. Immutable after build.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    lattice: TopographicLattice,
    dt: f64,
    entries: Vec<TemplateEntry>,
    max_lag: usize,
}

#[derive(Debug, Clone)]
struct TemplateEntry {
    position: UnitCoord,
    lag: usize,
    /// Unit-normalized field.
    values: Vec<f64>,
}

impl TemplateBank {
    pub fn n_templates(&self) -> usize {
        self.entries.len()
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn lattice(&self) -> &TopographicLattice {
        &self.lattice
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Build a template bank from noiseless reference runs of the configuration:
/// one run per alphabet position, one template per lag in `1..=max_lag`.
pub fn build_template_bank(
    config: &SimConfig,
    positions: &[UnitCoord],
    max_lag: usize,
    amplitude: f64,
    duration: usize,
) -> Result<TemplateBank> {
    if positions.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let mut cfg = *config;
    cfg.model.noise_std = 0.0;
    let mut entries = Vec::new();
    for &pos in positions {
        let mut net = cfg.build(0)?;
        let protocol = StimulusProtocol::new(vec![StimulusEvent::new(pos, 0, duration, amplitude)]);
        let rec = run_protocol(&mut net, &protocol, max_lag + 1)?;
        for lag in 1..=max_lag {
            let frame = rec.frame(lag);
            let norm = frame.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            entries.push(TemplateEntry {
                position: pos,
                lag,
                values: frame.iter().map(|&v| v as f64 / norm).collect(),
            });
        }
    }
    Ok(TemplateBank {
        lattice: cfg.lattice,
        dt: cfg.dt,
        entries,
        max_lag,
    })
}

/// Options for greedy sequence peeling.
#[derive(Debug, Clone, Copy)]
pub struct PeelOptions {
    /// Stop when the best correlation falls below this fraction of the first
    /// pick's correlation.
    pub correlation_floor: f64,
    /// Absolute floor on the first pick itself (rejects rest snapshots).
    pub min_correlation: f64,
}

impl Default for PeelOptions {
    fn default() -> Self {
        Self {
            correlation_floor: 0.2,
            min_correlation: 1e-9,
        }
    }
}

/// Greedy matching pursuit against the template bank: repeatedly select the
/// best-correlating template, record the implied event, subtract the scaled
/// template, and stop at `max_events` or the correlation floor. Events come
/// back in decoded onset order.
pub fn decode_sequence(
    snap: &Snapshot<'_>,
    bank: &TemplateBank,
    max_events: usize,
    opts: &PeelOptions,
) -> Result<Vec<DecodedEvent>> {
    if snap.values.len() != bank.lattice.n_units() {
        return Err(Error::ShapeMismatch(format!(
            "snapshot has {} values, bank lattice has {}",
            snap.values.len(),
            bank.lattice.n_units()
        )));
    }
    let mut residual: Vec<f64> = snap.values.iter().map(|&v| v as f64).collect();
    let mut events: Vec<DecodedEvent> = Vec::new();
    let mut first_pick = 0.0f64;
    for _ in 0..max_events {
        let mut best: Option<(usize, f64)> = None;
        for (i, entry) in bank.entries.iter().enumerate() {
            let corr: f64 = entry
                .values
                .iter()
                .zip(residual.iter())
                .map(|(t, r)| t * r)
                .sum();
            if best.is_none_or(|(_, b)| corr > b) {
                best = Some((i, corr));
            }
        }
        let Some((idx, corr)) = best else { break };
        if events.is_empty() {
            if corr < opts.min_correlation {
                break;
            }
            first_pick = corr;
        } else if corr < opts.correlation_floor * first_pick {
            break;
        }
        let entry = &bank.entries[idx];
        for (r, t) in residual.iter_mut().zip(entry.values.iter()) {
            *r -= corr * t;
        }
        events.push(DecodedEvent {
            x: entry.position.x as f64,
            y: entry.position.y as f64,
            onset: snap.step as f64 - entry.lag as f64,
            confidence: corr,
        });
    }
    events.sort_by(|a, b| a.onset.partial_cmp(&b.onset).unwrap());
    Ok(events)
}

/// Normalized distance between two spacetime windows: one minus the cosine
/// similarity of the flattened rest-subtracted fields, in [0, 2].
pub fn order_distance(
    a: &Recording,
    b: &Recording,
    window: std::ops::Range<usize>,
) -> Result<f64> {
    if a.lattice().n_units() != b.lattice().n_units() {
        return Err(Error::ShapeMismatch(
            "recordings are on different lattices".into(),
        ));
    }
    if window.end > a.steps() || window.end > b.steps() || window.start >= window.end {
        return Err(Error::ShapeMismatch(format!(
            "window {window:?} outside recordings ({} and {} steps)",
            a.steps(),
            b.steps()
        )));
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for t in window {
        for (&va, &vb) in a.frame(t).iter().zip(b.frame(t).iter()) {
            let (va, vb) = (va as f64, vb as f64);
            dot += va * vb;
            na += va * va;
            nb += vb * vb;
        }
    }
    if na <= 0.0 || nb <= 0.0 {
        return Err(Error::DegenerateField(
            "order distance needs nonzero fields in the window".into(),
        ));
    }
    Ok(1.0 - dot / (na.sqrt() * nb.sqrt()))
}
