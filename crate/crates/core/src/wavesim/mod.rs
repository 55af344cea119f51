//! Delayed recurrent network simulator on the topographic lattice.
//!
//! Units are coupled through a center-surround kernel with distance-dependent
//! conduction delays, in a rate variant (leaky integrator, optional
//! rectification) and a spiking variant (leaky integrate-and-fire). Punctate
//! stimuli evoke waves that travel at the configured conduction velocity; in
//! the spiking regime the waves are sparse, with only a small fraction of
//! units firing as the front passes.

mod measure;
pub mod presets;

pub use measure::{participation_fraction, measure_wave_speed, SpeedFitOptions};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelProfile;
use crate::lattice::{Boundary, TopographicLattice, UnitCoord};

/// Neuron dynamics variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronVariant {
    /// Leaky integrator. With `rectify` set, the transmitted output is the
    /// suprathreshold excess `max(V - threshold, 0)`, which makes the medium
    /// excitable: units emit only while depolarized past threshold, and the
    /// leak shuts emission off behind a passing wave. Without it the output
    /// is the raw potential and the network is linear.
    RateLeaky { rectify: bool },
    /// Leaky integrate-and-fire: emits a unit spike on threshold crossing and
    /// resets.
    SpikingLif,
}

impl NeuronVariant {
    pub fn name(&self) -> &'static str {
        match self {
            NeuronVariant::RateLeaky { .. } => "rate",
            NeuronVariant::SpikingLif => "spiking",
        }
    }
}

/// Unit dynamics parameters. The rest level is normalized to zero; `reset`
/// is expressed relative to rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronModel {
    pub variant: NeuronVariant,
    /// Membrane time constant in ms.
    pub tau: f64,
    pub threshold: f64,
    pub reset: f64,
    pub recurrent_gain: f64,
    pub feedforward_gain: f64,
    pub noise_std: f64,
}

impl NeuronModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::NonPositiveParameter(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::NonPositiveParameter(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        if matches!(self.variant, NeuronVariant::SpikingLif) && self.threshold <= self.reset {
            return Err(Error::NonPositiveParameter(format!(
                "spiking threshold ({}) must exceed reset ({})",
                self.threshold, self.reset
            )));
        }
        Ok(())
    }
}

/// One punctate stimulus: feedforward drive at a single unit over
/// `[onset, onset + duration)` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusEvent {
    pub position: UnitCoord,
    pub onset: usize,
    pub duration: usize,
    pub amplitude: f64,
}

impl StimulusEvent {
    pub fn new(position: UnitCoord, onset: usize, duration: usize, amplitude: f64) -> Self {
        Self {
            position,
            onset,
            duration,
            amplitude,
        }
    }
}

/// Ordered list of stimulus events; the ground truth decoders try to recover.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StimulusProtocol {
    pub events: Vec<StimulusEvent>,
}

impl StimulusProtocol {
    pub fn new(events: Vec<StimulusEvent>) -> Self {
        Self { events }
    }

    pub fn validate(&self, lattice: &TopographicLattice, total_steps: usize) -> Result<()> {
        for (i, ev) in self.events.iter().enumerate() {
            if !lattice.contains(ev.position) {
                return Err(Error::ProtocolOutOfRange(format!(
                    "event {i} position {:?} outside {}x{} lattice",
                    ev.position,
                    lattice.width(),
                    lattice.height()
                )));
            }
            if ev.duration < 1 {
                return Err(Error::ProtocolOutOfRange(format!(
                    "event {i} duration must be >= 1"
                )));
            }
            if !(ev.amplitude > 0.0) {
                return Err(Error::ProtocolOutOfRange(format!(
                    "event {i} amplitude must be > 0, got {}",
                    ev.amplitude
                )));
            }
            if ev.onset + ev.duration > total_steps {
                return Err(Error::ProtocolOutOfRange(format!(
                    "event {i} runs to step {} but the simulation has {total_steps} steps",
                    ev.onset + ev.duration
                )));
            }
        }
        Ok(())
    }
}

/// One coupling in displacement form: all unit pairs with the same offset
/// share the weight and the delay.
#[derive(Debug, Clone, Copy)]
struct StencilEntry {
    dx: i64,
    dy: i64,
    weight: f64,
    /// Effective delay in steps; at least 1 so every connection crosses a
    /// step boundary.
    delay: usize,
}

/// Delayed recurrent network: lattice coupling, per-unit potentials, and the
/// ring buffer of past outputs that the delays read from.
///
/// A simulation owns its state exclusively; recordings it produces are
/// immutable and freely shareable.
#[derive(Debug, Clone)]
pub struct NetworkState {
    lattice: TopographicLattice,
    kernel: KernelProfile,
    model: NeuronModel,
    dt: f64,
    seed: u64,
    stencil: Vec<StencilEntry>,
    max_delay_steps: usize,
    /// Membrane potentials, row-major over the lattice.
    potentials: Vec<f64>,
    /// Rate variant: ring of past output frames, slot `k % ring_len`.
    out_ring: Vec<f64>,
    /// Spiking variant: ring of future synaptic input frames.
    pending_ring: Vec<f64>,
    ring_len: usize,
    step_count: usize,
    rng: ChaCha12Rng,
    leak: f64,
    noise_buf: Vec<f64>,
    acc_buf: Vec<f64>,
}

/// Build a quiescent network: potentials at rest, delay buffers zeroed,
/// weights `w(a, b) = kernel(distance(a, b))` truncated at the cutoff radius.
pub fn build_network(
    lattice: &TopographicLattice,
    kernel: &KernelProfile,
    model: &NeuronModel,
    dt: f64,
    seed: u64,
) -> Result<NetworkState> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveParameter(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    kernel.validate()?;
    model.validate()?;

    let mut cutoff = kernel.cutoff_radius;
    if cutoff == 0.0 {
        log::warn!("cutoff radius 0: network degenerates to self-coupling only");
    }
    if lattice.boundary() == Boundary::Periodic {
        let half = ((lattice.width().min(lattice.height()) - 1) / 2) as f64;
        if cutoff > half {
            log::warn!(
                "cutoff radius {cutoff} exceeds half the periodic lattice extent; clamping to {half}"
            );
            cutoff = half;
        }
    }

    let reach = cutoff.floor() as i64;
    let mut stencil = Vec::new();
    let mut max_delay = 0usize;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let r = ((dx * dx + dy * dy) as f64).sqrt();
            if r > cutoff {
                continue;
            }
            let weight = kernel.weight(r);
            if weight == 0.0 && !(dx == 0 && dy == 0) {
                continue;
            }
            let delay = lattice.delay_for_displacement(dx, dy, dt).max(1);
            max_delay = max_delay.max(delay);
            stencil.push(StencilEntry {
                dx,
                dy,
                weight,
                delay,
            });
        }
    }
    let ring_len = max_delay + 1;
    let n = lattice.n_units();

    let (out_ring, pending_ring) = match model.variant {
        NeuronVariant::RateLeaky { .. } => (vec![0.0; ring_len * n], Vec::new()),
        NeuronVariant::SpikingLif => (Vec::new(), vec![0.0; ring_len * n]),
    };

    Ok(NetworkState {
        lattice: *lattice,
        kernel: *kernel,
        model: *model,
        dt,
        seed,
        stencil,
        max_delay_steps: max_delay,
        potentials: vec![0.0; n],
        out_ring,
        pending_ring,
        ring_len,
        step_count: 0,
        rng: ChaCha12Rng::seed_from_u64(seed),
        leak: (-dt / model.tau).exp(),
        noise_buf: vec![0.0; n],
        acc_buf: vec![0.0; n],
    })
}

impl NetworkState {
    pub fn lattice(&self) -> &TopographicLattice {
        &self.lattice
    }

    pub fn model(&self) -> &NeuronModel {
        &self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn max_delay_steps(&self) -> usize {
        self.max_delay_steps
    }

    /// Membrane potentials after the last step.
    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    /// Coupling weight of the recurrent connection from `b` onto `a`
    /// (zero beyond the cutoff radius).
    pub fn coupling(&self, a: UnitCoord, b: UnitCoord) -> f64 {
        let (dx, dy) = self.lattice.displacement(a, b);
        let r = ((dx * dx + dy * dy) as f64).sqrt();
        self.kernel.weight(r)
    }

    /// Advance one step under the given feedforward input field; returns the
    /// units that spiked (always empty for the rate variant).
    ///
    /// Update rule per unit: leak toward rest, plus feedforward drive, plus
    /// the delay-weighted recurrent sum over the stencil, plus Gaussian noise.
    pub fn step(&mut self, input: &[f64]) -> Result<Vec<u32>> {
        let n = self.lattice.n_units();
        if input.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "input field has {} entries, lattice has {n}",
                input.len()
            )));
        }
        let k = self.step_count;

        if self.model.noise_std > 0.0 {
            for v in self.noise_buf.iter_mut() {
                *v = StandardNormal.sample(&mut self.rng);
            }
        }

        match self.model.variant {
            NeuronVariant::RateLeaky { rectify } => self.step_rate(input, k, rectify),
            NeuronVariant::SpikingLif => self.step_spiking(input, k),
        }
    }

    fn step_rate(&mut self, input: &[f64], k: usize, rectify: bool) -> Result<Vec<u32>> {
        let n = self.lattice.n_units();
        let w = self.lattice.width();
        let h = self.lattice.height();
        let boundary = self.lattice.boundary();

        self.acc_buf.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.stencil {
            let slot = (k + self.ring_len - (e.delay % self.ring_len)) % self.ring_len;
            let frame = &self.out_ring[slot * n..(slot + 1) * n];
            add_shifted(&mut self.acc_buf, frame, w, h, e.dx, e.dy, e.weight, boundary);
        }

        let leak = self.leak;
        let ff = self.model.feedforward_gain;
        let rec = self.model.recurrent_gain;
        let sigma = self.model.noise_std;
        let mut finite = true;
        for i in 0..n {
            let mut v = leak * self.potentials[i] + ff * input[i] + rec * self.acc_buf[i];
            if sigma > 0.0 {
                v += sigma * self.noise_buf[i];
            }
            finite &= v.is_finite();
            self.potentials[i] = v;
        }
        if !finite {
            return Err(Error::NonFiniteState { step: k });
        }

        let slot = k % self.ring_len;
        let out = &mut self.out_ring[slot * n..(slot + 1) * n];
        if rectify {
            let theta = self.model.threshold;
            for (o, &v) in out.iter_mut().zip(self.potentials.iter()) {
                *o = (v - theta).max(0.0);
            }
        } else {
            out.copy_from_slice(&self.potentials);
        }
        self.step_count += 1;
        Ok(Vec::new())
    }

    fn step_spiking(&mut self, input: &[f64], k: usize) -> Result<Vec<u32>> {
        let n = self.lattice.n_units();
        let w = self.lattice.width() as i64;
        let h = self.lattice.height() as i64;
        let boundary = self.lattice.boundary();

        let slot = k % self.ring_len;
        let leak = self.leak;
        let ff = self.model.feedforward_gain;
        let rec = self.model.recurrent_gain;
        let sigma = self.model.noise_std;
        let threshold = self.model.threshold;
        let reset = self.model.reset;

        let mut spikes = Vec::new();
        let mut finite = true;
        {
            let pending = &self.pending_ring[slot * n..(slot + 1) * n];
            for i in 0..n {
                let mut v = leak * self.potentials[i] + ff * input[i] + rec * pending[i];
                if sigma > 0.0 {
                    v += sigma * self.noise_buf[i];
                }
                finite &= v.is_finite();
                if v >= threshold {
                    spikes.push(i as u32);
                    v = reset;
                }
                self.potentials[i] = v;
            }
        }
        if !finite {
            return Err(Error::NonFiniteState { step: k });
        }
        // consumed; clear for reuse as slot k + ring_len
        self.pending_ring[slot * n..(slot + 1) * n]
            .iter_mut()
            .for_each(|v| *v = 0.0);

        // scatter each spike into the future input frames it will reach
        for &s in &spikes {
            let sx = (s as usize % w as usize) as i64;
            let sy = (s as usize / w as usize) as i64;
            for e in &self.stencil {
                let (tx, ty) = match boundary {
                    Boundary::Open => {
                        let tx = sx + e.dx;
                        let ty = sy + e.dy;
                        if tx < 0 || tx >= w || ty < 0 || ty >= h {
                            continue;
                        }
                        (tx, ty)
                    }
                    Boundary::Periodic => ((sx + e.dx).rem_euclid(w), (sy + e.dy).rem_euclid(h)),
                };
                let target_slot = (k + e.delay) % self.ring_len;
                self.pending_ring[target_slot * n + (ty * w + tx) as usize] += e.weight;
            }
        }
        self.step_count += 1;
        Ok(spikes)
    }
}

/// Accumulate `acc += weight * shift(src, dx, dy)` over the lattice, where the
/// shift maps source unit `(x + dx, y + dy)` onto destination `(x, y)`.
fn add_shifted(
    acc: &mut [f64],
    src: &[f64],
    w: usize,
    h: usize,
    dx: i64,
    dy: i64,
    weight: f64,
    boundary: Boundary,
) {
    match boundary {
        Boundary::Open => {
            let x0 = (-dx).max(0) as usize;
            let x1 = ((w as i64).min(w as i64 - dx)) as usize;
            if x0 >= x1 {
                return;
            }
            let y0 = (-dy).max(0) as usize;
            let y1 = ((h as i64).min(h as i64 - dy)) as usize;
            for y in y0..y1 {
                let sy = (y as i64 + dy) as usize;
                let dst = &mut acc[y * w + x0..y * w + x1];
                let s = &src[sy * w + (x0 as i64 + dx) as usize..];
                for (d, sv) in dst.iter_mut().zip(s.iter()) {
                    *d += weight * sv;
                }
            }
        }
        Boundary::Periodic => {
            let sxo = dx.rem_euclid(w as i64) as usize;
            for y in 0..h {
                let sy = (y as i64 + dy).rem_euclid(h as i64) as usize;
                let src_row = &src[sy * w..(sy + 1) * w];
                let dst_row = &mut acc[y * w..(y + 1) * w];
                // destination x in [0, w - sxo) reads source [sxo, w)
                let split = w - sxo;
                for (d, sv) in dst_row[..split].iter_mut().zip(src_row[sxo..].iter()) {
                    *d += weight * sv;
                }
                for (d, sv) in dst_row[split..].iter_mut().zip(src_row[..sxo].iter()) {
                    *d += weight * sv;
                }
            }
        }
    }
}

/// Immutable record of one simulation: the membrane-potential field per step
/// (the spacetime field `P(x, t)`), the spike raster for spiking runs, and
/// everything needed to reproduce the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    lattice: TopographicLattice,
    dt: f64,
    seed: u64,
    variant: NeuronVariant,
    protocol: StimulusProtocol,
    /// `steps * n_units`, frame-major.
    frames: Vec<f32>,
    /// Spiking units per step; empty frames for the rate variant.
    raster: Vec<Vec<u32>>,
}

impl Recording {
    pub fn from_parts(
        lattice: TopographicLattice,
        dt: f64,
        seed: u64,
        variant: NeuronVariant,
        protocol: StimulusProtocol,
        frames: Vec<f32>,
        raster: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let n = lattice.n_units();
        if n == 0 || frames.len() % n != 0 {
            return Err(Error::ShapeMismatch(format!(
                "frame buffer length {} does not tile {n}-unit lattice",
                frames.len()
            )));
        }
        let steps = frames.len() / n;
        if raster.len() != steps {
            return Err(Error::ShapeMismatch(format!(
                "raster has {} frames, field has {steps}",
                raster.len()
            )));
        }
        if raster.iter().flatten().any(|&u| u as usize >= n) {
            return Err(Error::ShapeMismatch(format!(
                "raster names units outside the {n}-unit lattice"
            )));
        }
        Ok(Self {
            lattice,
            dt,
            seed,
            variant,
            protocol,
            frames,
            raster,
        })
    }

    pub fn lattice(&self) -> &TopographicLattice {
        &self.lattice
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variant(&self) -> NeuronVariant {
        self.variant
    }

    pub fn protocol(&self) -> &StimulusProtocol {
        &self.protocol
    }

    pub fn steps(&self) -> usize {
        self.frames.len() / self.lattice.n_units()
    }

    pub fn frame(&self, step: usize) -> &[f32] {
        let n = self.lattice.n_units();
        &self.frames[step * n..(step + 1) * n]
    }

    pub fn frames_flat(&self) -> &[f32] {
        &self.frames
    }

    pub fn raster(&self) -> &[Vec<u32>] {
        &self.raster
    }

    /// Spacetime field over a window of steps.
    pub fn spacetime_window(
        &self,
        range: std::ops::Range<usize>,
    ) -> Result<crate::spacetime::SpacetimeField> {
        if range.end > self.steps() || range.start >= range.end {
            return Err(Error::ShapeMismatch(format!(
                "window {range:?} outside recording of {} steps",
                self.steps()
            )));
        }
        crate::spacetime::SpacetimeField::from_frames(
            range.map(|t| self.frame(t)),
            self.dt,
            self.lattice.spacing(),
        )
    }
}

/// Run a protocol from the network's current state (normally freshly built),
/// recording every frame. Deterministic given (configuration, protocol, seed).
pub fn run_protocol(
    network: &mut NetworkState,
    protocol: &StimulusProtocol,
    total_steps: usize,
) -> Result<Recording> {
    if total_steps == 0 {
        return Err(Error::ProtocolOutOfRange(
            "total_steps must be >= 1".into(),
        ));
    }
    protocol.validate(&network.lattice, total_steps)?;

    let n = network.lattice.n_units();
    let mut frames = Vec::with_capacity(total_steps * n);
    let mut raster = Vec::with_capacity(total_steps);
    let mut input = vec![0.0f64; n];
    for t in 0..total_steps {
        input.iter_mut().for_each(|v| *v = 0.0);
        for ev in &protocol.events {
            if t >= ev.onset && t < ev.onset + ev.duration {
                input[network.lattice.index(ev.position)] += ev.amplitude;
            }
        }
        let spikes = network.step(&input)?;
        frames.extend(network.potentials.iter().map(|&v| v as f32));
        raster.push(spikes);
    }
    Recording::from_parts(
        network.lattice,
        network.dt,
        network.seed,
        network.model.variant,
        protocol.clone(),
        frames,
        raster,
    )
}
