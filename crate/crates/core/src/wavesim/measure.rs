//! Measurements on recordings: expanding-front speed and spiking
//! participation.

use crate::error::{Error, Result};
use crate::lattice::Boundary;

use super::{NeuronVariant, Recording, StimulusEvent};

/// Options for the front-speed fit.
#[derive(Debug, Clone, Copy)]
pub struct SpeedFitOptions {
    /// Activity threshold above rest; `None` estimates it as 5x the noise
    /// floor measured from the pre-onset frames.
    pub activity_threshold: Option<f64>,
    /// Minimum super-threshold pixels for a frame to enter the fit.
    pub min_active_pixels: usize,
    /// Frames are dropped once the front's far edge reaches this fraction of
    /// the distance from the origin to the nearest boundary.
    pub boundary_margin: f64,
    /// Minimum number of usable frames for a fit.
    pub min_fit_frames: usize,
}

impl Default for SpeedFitOptions {
    fn default() -> Self {
        Self {
            activity_threshold: None,
            min_active_pixels: 3,
            boundary_margin: 0.9,
            min_fit_frames: 5,
        }
    }
}

/// Fit the speed of the front expanding from `onset_event`: the slope of a
/// least-squares fit of front radius (mm) against time (ms).
///
/// Per frame, the front radius is the activity-weighted mean distance of
/// super-threshold units from the event position. Frames after the front
/// nears the boundary are excluded so reflections do not bias the slope.
pub fn measure_wave_speed(
    recording: &Recording,
    onset_event: &StimulusEvent,
    opts: &SpeedFitOptions,
) -> Result<f64> {
    let lattice = recording.lattice();
    if !lattice.contains(onset_event.position) {
        return Err(Error::ShapeMismatch(format!(
            "event position {:?} outside lattice",
            onset_event.position
        )));
    }
    let steps = recording.steps();
    if onset_event.onset >= steps {
        return Err(Error::NoWaveDetected(format!(
            "event onset {} outside recording of {steps} steps",
            onset_event.onset
        )));
    }

    let threshold = match opts.activity_threshold {
        Some(t) => t,
        None => {
            // estimate the noise floor from the quiet pre-onset window
            let mut sum = 0.0f64;
            let mut sq = 0.0f64;
            let mut count = 0usize;
            for t in 0..onset_event.onset {
                for &v in recording.frame(t) {
                    sum += v as f64;
                    sq += (v as f64) * (v as f64);
                    count += 1;
                }
            }
            if count > 0 {
                let mean = sum / count as f64;
                let var = (sq / count as f64 - mean * mean).max(0.0);
                5.0 * var.sqrt()
            } else {
                0.0
            }
        }
    };
    let peak = recording
        .frames_flat()
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
    if peak <= threshold || peak <= 0.0 {
        return Err(Error::NoWaveDetected(format!(
            "no activity above threshold {threshold:.4e} (peak {peak:.4e})"
        )));
    }
    // floor for noiseless fields so rest-exactly-zero pixels stay excluded
    let threshold = threshold.max(peak * 1e-9);

    let spacing = lattice.spacing();
    let origin = onset_event.position;
    let n = lattice.n_units();
    let mut dist_mm = Vec::with_capacity(n);
    for idx in 0..n {
        dist_mm.push(lattice.distance(origin, lattice.coord(idx)));
    }
    let edge_mm = match lattice.boundary() {
        Boundary::Open => {
            let x = origin.x as f64;
            let y = origin.y as f64;
            let dx = x.min(lattice.width() as f64 - 1.0 - x);
            let dy = y.min(lattice.height() as f64 - 1.0 - y);
            dx.min(dy) * spacing
        }
        Boundary::Periodic => {
            (lattice.width().min(lattice.height()) as f64 / 2.0 - 1.0) * spacing
        }
    };

    let mut points: Vec<(f64, f64)> = Vec::new(); // (time ms, radius mm)
    for t in onset_event.onset..steps {
        let frame = recording.frame(t);
        let mut wsum = 0.0f64;
        let mut rsum = 0.0f64;
        let mut rmax = 0.0f64;
        let mut active = 0usize;
        for (idx, &v) in frame.iter().enumerate() {
            let a = v as f64 - threshold;
            if a > 0.0 {
                active += 1;
                wsum += a;
                rsum += a * dist_mm[idx];
                rmax = rmax.max(dist_mm[idx]);
            }
        }
        if active < opts.min_active_pixels || wsum <= 0.0 {
            continue;
        }
        if rmax > opts.boundary_margin * edge_mm {
            break;
        }
        points.push((t as f64 * recording.dt(), rsum / wsum));
    }
    if points.len() < opts.min_fit_frames {
        return Err(Error::NoWaveDetected(format!(
            "only {} usable frames for the front fit",
            points.len()
        )));
    }

    // least-squares slope
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_r = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, r) in &points {
        num += (t - mean_t) * (r - mean_r);
        den += (t - mean_t) * (t - mean_t);
    }
    if den == 0.0 {
        return Err(Error::NoWaveDetected("front fit is degenerate".into()));
    }
    Ok(num / den)
}

/// Fraction of units that spiked at least once in the window.
pub fn participation_fraction(
    recording: &Recording,
    window: std::ops::Range<usize>,
) -> Result<f64> {
    if !matches!(recording.variant(), NeuronVariant::SpikingLif) {
        return Err(Error::WrongVariant {
            expected: "spiking",
            actual: recording.variant().name(),
        });
    }
    if window.end > recording.steps() || window.start >= window.end {
        return Err(Error::ShapeMismatch(format!(
            "window {window:?} outside recording of {} steps",
            recording.steps()
        )));
    }
    let n = recording.lattice().n_units();
    let mut spiked = vec![false; n];
    for t in window {
        for &u in &recording.raster()[t] {
            spiked[u as usize] = true;
        }
    }
    Ok(spiked.iter().filter(|&&s| s).count() as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, UnitCoord};
    use crate::wavesim::{NeuronVariant, Recording, StimulusProtocol};

    /// Build a synthetic recording whose activity-weighted front radius is
    /// exactly v * (t - onset) grid units: two pixels on the +x axis at the
    /// floor and ceil of the target radius, weighted to interpolate.
    fn synthetic_front(v: f64, onset: usize, steps: usize, n: usize) -> (Recording, StimulusEvent) {
        let lattice = build_lattice(n, n, 1.0, 1.0, crate::lattice::Boundary::Open).unwrap();
        let origin = UnitCoord::new(n / 2, n / 2);
        let amp = 1e6f64;
        let mut frames = vec![0.0f32; 0];
        for t in 0..steps {
            let mut frame = vec![0.0f32; lattice.n_units()];
            if t >= onset {
                let r = v * (t - onset) as f64;
                let f = r.floor();
                let frac = r - f;
                let x0 = origin.x + f as usize;
                let x1 = x0 + 1;
                frame[lattice.index(UnitCoord::new(x0, origin.y))] = (amp * (1.0 - frac)) as f32;
                frame[lattice.index(UnitCoord::new(x1, origin.y))] = (amp * frac) as f32;
            }
            frames.extend(frame);
        }
        let rec = Recording::from_parts(
            lattice,
            1.0,
            0,
            NeuronVariant::RateLeaky { rectify: true },
            StimulusProtocol::default(),
            frames,
            vec![Vec::new(); steps],
        )
        .unwrap();
        (rec, StimulusEvent::new(origin, onset, 1, 1.0))
    }

    #[test]
    fn constructed_front_recovers_exact_speed() {
        let v = 0.25;
        let (rec, ev) = synthetic_front(v, 2, 30, 32);
        let opts = SpeedFitOptions {
            min_active_pixels: 1,
            ..Default::default()
        };
        let speed = measure_wave_speed(&rec, &ev, &opts).unwrap();
        assert!(
            (speed - v).abs() < 1e-6,
            "expected {v}, measured {speed} (err {:.2e})",
            (speed - v).abs()
        );
    }

    #[test]
    fn rest_recording_is_no_wave() {
        let lattice = build_lattice(8, 8, 1.0, 0.2, crate::lattice::Boundary::Open).unwrap();
        let rec = Recording::from_parts(
            lattice,
            1.0,
            0,
            NeuronVariant::RateLeaky { rectify: true },
            StimulusProtocol::default(),
            vec![0.0; 64 * 10],
            vec![Vec::new(); 10],
        )
        .unwrap();
        let ev = StimulusEvent::new(UnitCoord::new(4, 4), 1, 1, 1.0);
        assert!(matches!(
            measure_wave_speed(&rec, &ev, &SpeedFitOptions::default()),
            Err(Error::NoWaveDetected(_))
        ));
    }

    #[test]
    fn participation_counts_unique_units() {
        let lattice = build_lattice(10, 100, 1.0, 0.2, crate::lattice::Boundary::Open).unwrap();
        let steps = 6;
        let mut raster = vec![Vec::new(); steps];
        // 5 distinct units of 1000 spike inside the window, one of them twice
        raster[1] = vec![1, 2];
        raster[2] = vec![2, 3];
        raster[3] = vec![4, 5];
        let rec = Recording::from_parts(
            lattice,
            1.0,
            0,
            NeuronVariant::SpikingLif,
            StimulusProtocol::default(),
            vec![0.0; 1000 * steps],
            raster,
        )
        .unwrap();
        let f = participation_fraction(&rec, 0..steps).unwrap();
        assert!((f - 0.005).abs() < 1e-12);
    }

    #[test]
    fn participation_rejects_rate_recordings() {
        let lattice = build_lattice(4, 4, 1.0, 0.2, crate::lattice::Boundary::Open).unwrap();
        let rec = Recording::from_parts(
            lattice,
            1.0,
            0,
            NeuronVariant::RateLeaky { rectify: false },
            StimulusProtocol::default(),
            vec![0.0; 16 * 3],
            vec![Vec::new(); 3],
        )
        .unwrap();
        assert!(matches!(
            participation_fraction(&rec, 0..3),
            Err(Error::WrongVariant { .. })
        ));
    }
}
