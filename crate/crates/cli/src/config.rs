//! Run configuration: a flat TOML file with one section per concern. Every
//! field has a default, so a minimal config can be empty.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use wavecoder::attention::ArchConfig;
use wavecoder::harness::{
    AttnEncoderConfig, EncoderKind, HarnessConfig, LabelRule, SequenceTask, SsmEncoderConfig,
};
use wavecoder::wavesim::presets::{self, SimConfig};
use wavecoder::{
    build_lattice, KernelProfile, NeuronModel, StimulusEvent, StimulusProtocol, UnitCoord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub kernel: KernelProfile,
    pub neuron: NeuronModel,
    pub sim: SimSection,
    pub protocol: ProtocolSection,
    pub decode: DecodeSection,
    pub ssm: SsmSection,
    pub attention: AttentionSection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = presets::spiking_sparse();
        Self {
            lattice: LatticeSection {
                width: sim.lattice.width(),
                height: sim.lattice.height(),
                spacing: sim.lattice.spacing(),
                conduction_velocity: sim.lattice.conduction_velocity(),
                boundary: sim.lattice.boundary(),
            },
            kernel: sim.kernel,
            neuron: sim.model,
            sim: SimSection::default(),
            protocol: ProtocolSection::default(),
            decode: DecodeSection::default(),
            ssm: SsmSection::default(),
            attention: AttentionSection::default(),
            bench: BenchSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
    pub conduction_velocity: f64,
    pub boundary: wavecoder::Boundary,
}

impl Default for LatticeSection {
    fn default() -> Self {
        RunConfig::default().lattice
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub total_steps: usize,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 1.0,
            total_steps: 300,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    /// Inline events as `[x, y, onset, duration, amplitude]` rows.
    pub events: Vec<(usize, usize, usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeSection {
    /// Template positions; empty means "use the protocol's event positions".
    pub positions: Vec<(usize, usize)>,
    pub max_events: usize,
    pub template_max_lag: usize,
    pub template_amplitude: f64,
    pub template_duration: usize,
    /// Snapshot step to decode; None decodes the final frame.
    pub step: Option<usize>,
}

impl Default for DecodeSection {
    fn default() -> Self {
        Self {
            positions: Vec::new(),
            max_events: 4,
            template_max_lag: 60,
            template_amplitude: presets::DESK_STIMULUS_AMPLITUDE,
            template_duration: presets::DESK_STIMULUS_DURATION,
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsmSection {
    pub n_nodes: usize,
    pub dt: f64,
    pub steps: usize,
    pub method: wavecoder::ssm::StepMethod,
    pub impulse_node: usize,
    pub impulse_amplitude: f64,
    /// Subtract the row mean so the state matrix has zero row sums.
    pub zero_row_sum: bool,
    /// Shift the spectrum so no mode grows (adds uniform leak). Without it
    /// a growing connectivity is simulated as-is and reported with a warning.
    pub stabilize: bool,
}

impl Default for SsmSection {
    fn default() -> Self {
        Self {
            n_nodes: 64,
            dt: 0.05,
            steps: 200,
            method: wavecoder::ssm::StepMethod::Exact,
            impulse_node: 0,
            impulse_amplitude: 1.0,
            zero_row_sum: true,
            stabilize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionSection {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub positional: bool,
    pub param_seed: u64,
    /// Token item ids; each id maps to a fixed seeded embedding.
    pub tokens: Vec<usize>,
    pub pooling: wavecoder::attention::Pooling,
}

impl Default for AttentionSection {
    fn default() -> Self {
        let arch = ArchConfig::default();
        Self {
            d_model: arch.d_model,
            n_heads: arch.n_heads,
            n_layers: arch.n_layers,
            d_ff: arch.d_ff,
            positional: arch.positional,
            param_seed: 1234,
            tokens: vec![0, 1, 2],
            pooling: wavecoder::attention::Pooling::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub encoders: Vec<EncoderKind>,
    pub alphabet: Vec<(usize, usize)>,
    pub k: usize,
    pub interval: usize,
    pub final_lag: usize,
    pub label_rule: LabelRule,
    /// Admissible orders for `order_only`; empty means all permutations.
    pub orders: Vec<Vec<usize>>,
    pub stimulus_amplitude: f64,
    pub stimulus_duration: usize,
    pub total_steps: usize,
    pub n_protocols: usize,
    pub n_replicates: usize,
    pub train_fraction: f64,
    pub ridge_lambda: f64,
    pub master_seed: u64,
    pub shuffle_labels: bool,
    /// Wave feature: final snapshot, a concatenated window, or spike counts.
    pub feature: wavecoder::harness::FeatureKind,
    /// Memory-horizon probe lags (must match slot lags); empty disables the
    /// horizon curve.
    pub probe_lags: Vec<usize>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            encoders: vec![EncoderKind::Wave, EncoderKind::Ssm, EncoderKind::Attention],
            alphabet: vec![(22, 22), (42, 24), (32, 42)],
            k: 3,
            interval: 15,
            final_lag: 20,
            label_rule: LabelRule::OrderOnly,
            orders: vec![vec![0, 1, 2], vec![0, 2, 1]],
            stimulus_amplitude: presets::DESK_STIMULUS_AMPLITUDE,
            stimulus_duration: presets::DESK_STIMULUS_DURATION,
            total_steps: 140,
            n_protocols: 100,
            n_replicates: 5,
            train_fraction: 0.8,
            ridge_lambda: 1e-3,
            master_seed: 2024,
            shuffle_labels: false,
            feature: wavecoder::harness::FeatureKind::PotentialSnapshot,
            probe_lags: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Validate everything the type system does not: numeric constraints of
    /// the downstream modules are checked at parse time.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.sim_config()?;
        if self.sim.total_steps == 0 {
            bail!("sim.total_steps must be >= 1");
        }
        Ok(())
    }

    pub fn sim_config(&self) -> anyhow::Result<SimConfig> {
        let lattice = build_lattice(
            self.lattice.width,
            self.lattice.height,
            self.lattice.spacing,
            self.lattice.conduction_velocity,
            self.lattice.boundary,
        )?;
        self.kernel.validate()?;
        self.neuron.validate()?;
        if self.sim.dt.is_nan() || self.sim.dt <= 0.0 {
            bail!("sim.dt must be > 0");
        }
        Ok(SimConfig {
            lattice,
            kernel: self.kernel,
            model: self.neuron,
            dt: self.sim.dt,
        })
    }

    pub fn protocol(&self) -> StimulusProtocol {
        StimulusProtocol::new(
            self.protocol
                .events
                .iter()
                .map(|&(x, y, onset, duration, amplitude)| {
                    StimulusEvent::new(UnitCoord::new(x, y), onset, duration, amplitude)
                })
                .collect(),
        )
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            d_model: self.attention.d_model,
            n_heads: self.attention.n_heads,
            n_layers: self.attention.n_layers,
            d_ff: self.attention.d_ff,
            positional: self.attention.positional,
        }
    }

    pub fn sequence_task(&self) -> SequenceTask {
        SequenceTask {
            alphabet: self
                .bench
                .alphabet
                .iter()
                .map(|&(x, y)| UnitCoord::new(x, y))
                .collect(),
            k: self.bench.k,
            interval: self.bench.interval,
            final_lag: self.bench.final_lag,
            label_rule: self.bench.label_rule,
            order_subset: if self.bench.orders.is_empty() {
                None
            } else {
                Some(self.bench.orders.clone())
            },
            amplitude: self.bench.stimulus_amplitude,
            duration: self.bench.stimulus_duration,
        }
    }

    pub fn harness_config(&self) -> anyhow::Result<HarnessConfig> {
        Ok(HarnessConfig {
            sim: self.sim_config()?,
            total_steps: self.bench.total_steps,
            n_protocols: self.bench.n_protocols,
            n_replicates: self.bench.n_replicates,
            train_fraction: self.bench.train_fraction,
            ridge_lambda: self.bench.ridge_lambda,
            master_seed: self.bench.master_seed,
            feature: self.bench.feature,
            ssm: SsmEncoderConfig {
                n_nodes: self.ssm.n_nodes,
                kernel: SsmEncoderConfig::default().kernel,
                dt: self.ssm.dt,
                stability_margin: SsmEncoderConfig::default().stability_margin,
            },
            attention: AttnEncoderConfig {
                arch: self.arch(),
                param_seed: self.attention.param_seed,
            },
            shuffle_labels: self.bench.shuffle_labels,
        })
    }
}
