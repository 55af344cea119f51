//! Shared task harness: generate labeled stimulus-sequence tasks, extract a
//! feature vector from each encoder (wave snapshot, state-space model state,
//! attention pooling), fit closed-form ridge readouts, and report accuracies
//! and memory-horizon curves.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{encode_sequence, ArchConfig, EncoderParams, Pooling, TokenSequence};
use crate::error::{Error, Result};
use crate::kernel::KernelProfile;
use crate::lattice::UnitCoord;
use crate::ssm::{
    eigenmodes, make_mexican_hat_circulant, simulate_ssm, StateSpaceModel, StepMethod,
};
use crate::wavesim::presets::SimConfig;
use crate::wavesim::{run_protocol, StimulusEvent, StimulusProtocol};

/// What the label of a sequence encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// The whole item tuple.
    SequenceIdentity,
    /// The presentation order of the full alphabet.
    OrderOnly,
    /// The identity of the item presented this many steps before the
    /// snapshot. The lag must match one of the task's slot lags.
    ItemAtLag(usize),
}

/// A stimulus-sequence task: `k` slots at fixed lags before the snapshot,
/// each holding one alphabet item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTask {
    /// Stimulus positions on the lattice; items index into this list.
    pub alphabet: Vec<UnitCoord>,
    /// Number of slots in a sequence.
    pub k: usize,
    /// Steps between consecutive slot onsets.
    pub interval: usize,
    /// Lag of the last slot before the snapshot.
    pub final_lag: usize,
    pub label_rule: LabelRule,
    /// For `OrderOnly`: restrict to these permutations (indices into the
    /// alphabet). `None` admits every permutation.
    pub order_subset: Option<Vec<Vec<usize>>>,
    pub amplitude: f64,
    pub duration: usize,
}

impl SequenceTask {
    /// Lags of slots 0..k (slot 0 is presented first).
    pub fn slot_lags(&self) -> Vec<usize> {
        (0..self.k)
            .map(|i| self.final_lag + (self.k - 1 - i) * self.interval)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if self.k < 1 {
            return Err(Error::NonPositiveParameter("k must be >= 1".into()));
        }
        if self.interval < 1 {
            return Err(Error::NonPositiveParameter(
                "inter-stimulus interval must be >= 1".into(),
            ));
        }
        if self.duration < 1 || !(self.amplitude > 0.0) {
            return Err(Error::NonPositiveParameter(
                "stimulus duration and amplitude must be positive".into(),
            ));
        }
        if self.final_lag < self.duration {
            return Err(Error::ProtocolOutOfRange(
                "final_lag must be >= stimulus duration so the last event fits".into(),
            ));
        }
        for (i, a) in self.alphabet.iter().enumerate() {
            for b in &self.alphabet[i + 1..] {
                if a == b {
                    return Err(Error::ProtocolOutOfRange(format!(
                        "alphabet positions must be distinct, {a:?} repeats"
                    )));
                }
            }
        }
        match self.label_rule {
            LabelRule::OrderOnly => {
                if self.k != self.alphabet.len() {
                    return Err(Error::ProtocolOutOfRange(format!(
                        "order task needs k = alphabet size, got k={} over {} items",
                        self.k,
                        self.alphabet.len()
                    )));
                }
                if let Some(orders) = &self.order_subset {
                    if orders.len() < 2 {
                        return Err(Error::ProtocolOutOfRange(
                            "order subset needs at least 2 orders".into(),
                        ));
                    }
                    for o in orders {
                        let mut seen = vec![false; self.k];
                        if o.len() != self.k {
                            return Err(Error::ProtocolOutOfRange(
                                "order subset entries must have length k".into(),
                            ));
                        }
                        for &i in o {
                            if i >= self.k || seen[i] {
                                return Err(Error::ProtocolOutOfRange(
                                    "order subset entries must be permutations".into(),
                                ));
                            }
                            seen[i] = true;
                        }
                    }
                }
            }
            LabelRule::ItemAtLag(j) => {
                if !self.slot_lags().contains(&j) {
                    return Err(Error::ProtocolOutOfRange(format!(
                        "probe lag {j} does not match any slot lag {:?}",
                        self.slot_lags()
                    )));
                }
            }
            LabelRule::SequenceIdentity => {}
        }
        Ok(())
    }

    /// Number of label classes.
    pub fn n_classes(&self) -> usize {
        match self.label_rule {
            LabelRule::SequenceIdentity => self.alphabet.len().pow(self.k as u32),
            LabelRule::OrderOnly => match &self.order_subset {
                Some(orders) => orders.len(),
                None => (1..=self.k).product(),
            },
            LabelRule::ItemAtLag(_) => self.alphabet.len(),
        }
    }
}

/// One sampled, labeled protocol. `items[i]` is the alphabet index in slot
/// `i`; events whose onset would fall before the simulation start are left
/// out of the protocol but still count toward the label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProtocol {
    pub protocol: StimulusProtocol,
    pub label: u32,
    pub items: Vec<usize>,
}

fn protocol_from_items(task: &SequenceTask, items: &[usize], snapshot_step: usize) -> StimulusProtocol {
    let lags = task.slot_lags();
    let mut events = Vec::new();
    for (slot, &item) in items.iter().enumerate() {
        if lags[slot] <= snapshot_step {
            events.push(StimulusEvent::new(
                task.alphabet[item],
                snapshot_step - lags[slot],
                task.duration,
                task.amplitude,
            ));
        }
    }
    StimulusProtocol::new(events)
}

fn label_for_items(task: &SequenceTask, items: &[usize], order_index: Option<usize>) -> u32 {
    match task.label_rule {
        LabelRule::SequenceIdentity => {
            let base = task.alphabet.len() as u32;
            items.iter().fold(0u32, |acc, &i| acc * base + i as u32)
        }
        LabelRule::OrderOnly => order_index.expect("order tasks sample an order index") as u32,
        LabelRule::ItemAtLag(j) => {
            let lags = task.slot_lags();
            let slot = lags.iter().position(|&l| l == j).expect("validated lag");
            items[slot] as u32
        }
    }
}

fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..k).collect();
    permute(&mut items, 0, &mut out);
    out.sort();
    out
}

fn permute(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, out);
        items.swap(start, i);
    }
}

/// Sample `n` labeled protocols uniformly over the task's admissible
/// sequences, reproducibly from the seed.
pub fn generate_protocols(
    task: &SequenceTask,
    n: usize,
    seed: u64,
    snapshot_step: usize,
) -> Result<Vec<LabeledProtocol>> {
    task.validate()?;
    if n < 1 {
        return Err(Error::NonPositiveParameter("n must be >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let orders = match task.label_rule {
        LabelRule::OrderOnly => Some(
            task.order_subset
                .clone()
                .unwrap_or_else(|| all_permutations(task.k)),
        ),
        _ => None,
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (items, order_index) = match &orders {
            Some(orders) => {
                let oi = rng.gen_range(0..orders.len());
                (orders[oi].clone(), Some(oi))
            }
            None => (
                (0..task.k)
                    .map(|_| rng.gen_range(0..task.alphabet.len()))
                    .collect(),
                None,
            ),
        };
        let label = label_for_items(task, &items, order_index);
        out.push(LabeledProtocol {
            protocol: protocol_from_items(task, &items, snapshot_step),
            label,
            items,
        });
    }
    Ok(out)
}

/// Closed-form one-vs-all ridge readout.
#[derive(Debug, Clone)]
pub struct Readout {
    /// `(d + 1) x c`; the last row is the bias.
    pub weights: DMatrix<f64>,
    pub n_classes: usize,
    pub train_accuracy: f64,
}

impl Readout {
    pub fn predict(&self, feature: &[f64]) -> u32 {
        let d = self.weights.nrows() - 1;
        assert_eq!(feature.len(), d, "feature dimension mismatch");
        let mut best = 0u32;
        let mut best_score = f64::NEG_INFINITY;
        for c in 0..self.n_classes {
            let mut s = self.weights[(d, c)];
            for (i, &f) in feature.iter().enumerate() {
                s += self.weights[(i, c)] * f;
            }
            if s > best_score {
                best_score = s;
                best = c as u32;
            }
        }
        best
    }

    /// Frobenius norm of the weight matrix (bias included).
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Fit one-vs-all ridge regression in closed form (normal equations against
/// one-hot targets). Deterministic. Uses the dual formulation when the
/// feature dimension exceeds the sample count.
pub fn linear_readout_fit(
    features: &[Vec<f64>],
    labels: &[u32],
    lambda: f64,
    n_classes: usize,
) -> Result<Readout> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::NonPositiveParameter(format!(
            "ridge lambda must be >= 0, got {lambda}"
        )));
    }
    if n_classes < 2 {
        return Err(Error::ShapeMismatch(
            "readout needs at least 2 classes".into(),
        ));
    }
    let n = features.len();
    let d = features[0].len() + 1; // bias column appended
    if features.iter().any(|f| f.len() + 1 != d) {
        return Err(Error::ShapeMismatch("ragged feature rows".into()));
    }
    if features
        .iter()
        .any(|f| f.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::ShapeMismatch("features must be finite".into()));
    }
    let x = DMatrix::from_fn(n, d, |i, j| {
        if j + 1 == d {
            1.0
        } else {
            features[i][j]
        }
    });
    let y = DMatrix::from_fn(n, n_classes, |i, c| {
        if labels[i] as usize == c {
            1.0
        } else {
            0.0
        }
    });

    let weights = if d <= n {
        // primal: (X^T X + lambda I) W = X^T Y
        let mut gram = x.transpose() * &x;
        for i in 0..d {
            gram[(i, i)] += lambda;
        }
        let rhs = x.transpose() * &y;
        solve_spd(gram, rhs)?
    } else {
        // dual: W = X^T (X X^T + lambda I)^{-1} Y
        let mut gram = &x * x.transpose();
        for i in 0..n {
            gram[(i, i)] += lambda;
        }
        let alpha = solve_spd(gram, y.clone())?;
        x.transpose() * alpha
    };

    let mut readout = Readout {
        weights,
        n_classes,
        train_accuracy: 0.0,
    };
    let correct = features
        .iter()
        .zip(labels.iter())
        .filter(|(f, &l)| readout.predict(f) == l)
        .count();
    readout.train_accuracy = correct as f64 / n as f64;
    Ok(readout)
}

fn solve_spd(gram: DMatrix<f64>, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("ridge normal equations are rank-deficient; use lambda > 0".into())),
    }
}

/// Which encoder the harness evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Wave,
    Ssm,
    Attention,
}

impl EncoderKind {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderKind::Wave => "wave",
            EncoderKind::Ssm => "ssm",
            EncoderKind::Attention => "attention",
        }
    }
}

/// Feature extracted from a wave simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Final membrane-potential frame.
    PotentialSnapshot,
    /// The last `window` frames concatenated.
    PotentialWindow { window: usize },
    /// Per-unit spike counts over the last `window` steps.
    SpikeCounts { window: usize },
}

/// State-space encoder configuration: a stabilized mexican-hat circulant ring
/// driven by item pulses at ring nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsmEncoderConfig {
    pub n_nodes: usize,
    pub kernel: KernelProfile,
    pub dt: f64,
    /// Extra uniform leak added beyond neutralizing the most excitable mode.
    pub stability_margin: f64,
}

impl Default for SsmEncoderConfig {
    fn default() -> Self {
        Self {
            n_nodes: 64,
            kernel: KernelProfile {
                excitatory_amplitude: 1.0,
                excitatory_width: 2.0,
                inhibitory_amplitude: 0.35,
                inhibitory_width: 6.0,
                cutoff_radius: 16.0,
            },
            dt: 0.05,
            stability_margin: 0.02,
        }
    }
}

/// Attention encoder configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttnEncoderConfig {
    pub arch: ArchConfig,
    pub param_seed: u64,
}

impl Default for AttnEncoderConfig {
    fn default() -> Self {
        Self {
            arch: ArchConfig::default(),
            param_seed: 1234,
        }
    }
}

/// Full harness configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub sim: SimConfig,
    pub total_steps: usize,
    pub n_protocols: usize,
    pub n_replicates: usize,
    pub train_fraction: f64,
    pub ridge_lambda: f64,
    pub master_seed: u64,
    pub feature: FeatureKind,
    pub ssm: SsmEncoderConfig,
    pub attention: AttnEncoderConfig,
    /// Permute labels before fitting: the chance-level control.
    pub shuffle_labels: bool,
}

impl HarnessConfig {
    pub fn desk(sim: SimConfig) -> Self {
        Self {
            sim,
            total_steps: 140,
            n_protocols: 100,
            n_replicates: 5,
            train_fraction: 0.8,
            ridge_lambda: 1e-3,
            master_seed: 2024,
            feature: FeatureKind::PotentialSnapshot,
            ssm: SsmEncoderConfig::default(),
            attention: AttnEncoderConfig::default(),
            shuffle_labels: false,
        }
    }

    pub fn snapshot_step(&self) -> usize {
        self.total_steps - 1
    }
}

/// Accuracy summary for one probed lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonPoint {
    pub lag: usize,
    pub accuracy_mean: f64,
    pub accuracy_se: f64,
    pub per_replicate: Vec<f64>,
}

/// Benchmark result for one encoder on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub encoder: String,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub chance: f64,
    pub accuracy_mean: f64,
    /// max(standard error over replicates, binomial floor).
    pub accuracy_se: f64,
    pub per_replicate: Vec<f64>,
    /// Test accuracy per true class (diagonal of the row-normalized
    /// confusion matrix); NaN-free, 0 for classes never tested.
    pub per_class_accuracy: Vec<f64>,
    /// Aggregated test-set confusion counts, `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<u32>>,
    pub seeds: Vec<u64>,
    pub memory_horizon: Option<Vec<HorizonPoint>>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix(master ^ splitmix(a.wrapping_mul(0x9e37).wrapping_add(b)))
}

/// Extract the feature vector for one protocol under the chosen encoder.
fn encode_protocol(
    kind: EncoderKind,
    lp: &LabeledProtocol,
    task: &SequenceTask,
    cfg: &HarnessConfig,
    sim_seed: u64,
) -> Result<Vec<f64>> {
    match kind {
        EncoderKind::Wave => {
            let mut net = cfg.sim.build(sim_seed)?;
            let rec = run_protocol(&mut net, &lp.protocol, cfg.total_steps)?;
            match cfg.feature {
                FeatureKind::PotentialSnapshot => Ok(rec
                    .frame(cfg.total_steps - 1)
                    .iter()
                    .map(|&v| v as f64)
                    .collect()),
                FeatureKind::PotentialWindow { window } => {
                    let start = cfg.total_steps.saturating_sub(window.max(1));
                    let mut out = Vec::with_capacity((cfg.total_steps - start) * rec.lattice().n_units());
                    for t in start..cfg.total_steps {
                        out.extend(rec.frame(t).iter().map(|&v| v as f64));
                    }
                    Ok(out)
                }
                FeatureKind::SpikeCounts { window } => {
                    let n = rec.lattice().n_units();
                    let start = cfg.total_steps.saturating_sub(window);
                    let mut counts = vec![0.0f64; n];
                    for t in start..cfg.total_steps {
                        for &u in &rec.raster()[t] {
                            counts[u as usize] += 1.0;
                        }
                    }
                    Ok(counts)
                }
            }
        }
        EncoderKind::Ssm => {
            let model = build_ssm_encoder(&cfg.ssm)?;
            let n = cfg.ssm.n_nodes;
            let n_items = task.alphabet.len();
            let mut inputs = vec![vec![0.0f64; n]; cfg.total_steps];
            for ev in &lp.protocol.events {
                let item = task
                    .alphabet
                    .iter()
                    .position(|p| *p == ev.position)
                    .unwrap_or(0);
                let node = item * n / n_items;
                for t in ev.onset..(ev.onset + ev.duration).min(cfg.total_steps) {
                    inputs[t][node] += ev.amplitude;
                }
            }
            let traj = simulate_ssm(&model, &inputs, StepMethod::Exact)?;
            Ok(traj.states.last().expect("nonempty trajectory").clone())
        }
        EncoderKind::Attention => {
            let params = EncoderParams::init(cfg.attention.arch, cfg.attention.param_seed)?;
            let d = cfg.attention.arch.d_model;
            let n_items = task.alphabet.len();
            // fixed random embedding per alphabet item
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.attention.param_seed, 11, 0));
            let emb: Vec<DVector<f64>> = (0..n_items)
                .map(|_| {
                    DVector::from_fn(d, |_, _| {
                        let v: f64 = rng.sample(rand_distr::StandardNormal);
                        v
                    })
                })
                .collect();
            let seq = TokenSequence::new(DMatrix::from_fn(lp.items.len(), d, |i, j| {
                emb[lp.items[i]][j]
            }))?;
            let pooled = encode_sequence(&seq, &params, Pooling::Mean)?;
            Ok(pooled.iter().copied().collect())
        }
    }
}

/// Build the stabilized circulant state matrix for the SSM encoder: zero
/// row-sum mexican hat with enough uniform leak that no mode grows.
pub fn build_ssm_encoder(cfg: &SsmEncoderConfig) -> Result<StateSpaceModel> {
    let spec = make_mexican_hat_circulant(cfg.n_nodes, &cfg.kernel)?.zero_row_sum();
    let growth = eigenmodes(&spec).max_growth_rate();
    let mut row = spec.first_row().to_vec();
    row[0] -= growth.max(0.0) + cfg.stability_margin;
    let spec = crate::ssm::CirculantSpec::new(row)?;
    let n = cfg.n_nodes;
    StateSpaceModel::from_circulant(
        spec,
        DMatrix::identity(n, n),
        DMatrix::identity(n, n),
        DMatrix::zeros(n, n),
        cfg.dt,
    )
}

/// Stratified train/test split: per label class, shuffle and send
/// `train_fraction` to training.
fn stratified_split(
    labels: &[u32],
    n_classes: usize,
    train_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes as u32 {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        if idx.is_empty() {
            continue;
        }
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize)
            .clamp(1, idx.len().max(2) - 1)
            .min(idx.len());
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

struct ReplicateOutcome {
    accuracy: f64,
    n_test: usize,
    confusion: Vec<Vec<u32>>,
    /// (features, labels, test indices) retained for horizon reuse.
    features: Vec<Vec<f64>>,
    items: Vec<Vec<usize>>,
    split_seed: u64,
}

fn run_replicate(
    kind: EncoderKind,
    task: &SequenceTask,
    cfg: &HarnessConfig,
    replicate: usize,
) -> Result<ReplicateOutcome> {
    let proto_seed = derive_seed(cfg.master_seed, 1, replicate as u64);
    let protocols = generate_protocols(task, cfg.n_protocols, proto_seed, cfg.snapshot_step())?;

    let features: Vec<Vec<f64>> = protocols
        .par_iter()
        .enumerate()
        .map(|(i, lp)| {
            encode_protocol(
                kind,
                lp,
                task,
                cfg,
                derive_seed(cfg.master_seed, 2 + replicate as u64, i as u64),
            )
        })
        .collect::<Result<_>>()?;

    let mut labels: Vec<u32> = protocols.iter().map(|p| p.label).collect();
    if cfg.shuffle_labels {
        let mut rng =
            ChaCha12Rng::seed_from_u64(derive_seed(cfg.master_seed, 7777, replicate as u64));
        labels.shuffle(&mut rng);
    }
    let n_classes = task.n_classes();
    let split_seed = derive_seed(cfg.master_seed, 3, replicate as u64);
    let (train_idx, test_idx) = stratified_split(&labels, n_classes, cfg.train_fraction, split_seed);

    let train_feats: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
    let train_labels: Vec<u32> = train_idx.iter().map(|&i| labels[i]).collect();
    let readout = linear_readout_fit(&train_feats, &train_labels, cfg.ridge_lambda, n_classes)?;

    let mut confusion = vec![vec![0u32; n_classes]; n_classes];
    let mut correct = 0usize;
    for &i in &test_idx {
        let pred = readout.predict(&features[i]);
        confusion[labels[i] as usize][pred as usize] += 1;
        if pred == labels[i] {
            correct += 1;
        }
    }
    let n_test = test_idx.len().max(1);
    Ok(ReplicateOutcome {
        accuracy: correct as f64 / n_test as f64,
        n_test: test_idx.len(),
        confusion,
        features,
        items: protocols.into_iter().map(|p| p.items).collect(),
        split_seed,
    })
}

fn summarize(per_replicate: &[f64], n_test_total: usize, chance: f64) -> (f64, f64) {
    let r = per_replicate.len() as f64;
    let mean = per_replicate.iter().sum::<f64>() / r;
    let var = per_replicate
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / (r - 1.0).max(1.0);
    let se_emp = (var / r).sqrt();
    // binomial floor keeps the SE honest when replicates happen to agree
    let p = mean.clamp(chance.min(0.5) * 0.5, 1.0 - 1e-9).max(1e-9);
    let se_binom = (p * (1.0 - p) / n_test_total.max(1) as f64).sqrt();
    (mean, se_emp.max(se_binom))
}

/// Evaluate one encoder on the task: features per protocol, stratified
/// train/test split, ridge readout, accuracy with seed spread.
pub fn evaluate_encoder(
    kind: EncoderKind,
    task: &SequenceTask,
    cfg: &HarnessConfig,
) -> Result<EncodingReport> {
    task.validate()?;
    let n_classes = task.n_classes();
    let mut per_replicate = Vec::with_capacity(cfg.n_replicates);
    let mut confusion = vec![vec![0u32; n_classes]; n_classes];
    let mut n_test_total = 0usize;
    let mut feature_dim = 0usize;
    let mut seeds = Vec::new();
    for r in 0..cfg.n_replicates {
        let outcome = run_replicate(kind, task, cfg, r)?;
        per_replicate.push(outcome.accuracy);
        n_test_total += outcome.n_test;
        for (row, orow) in confusion.iter_mut().zip(outcome.confusion.iter()) {
            for (v, &o) in row.iter_mut().zip(orow.iter()) {
                *v += o;
            }
        }
        feature_dim = outcome.features.first().map_or(0, |f| f.len());
        seeds.push(derive_seed(cfg.master_seed, 1, r as u64));
    }
    let chance = 1.0 / n_classes as f64;
    let (accuracy_mean, accuracy_se) = summarize(&per_replicate, n_test_total, chance);
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: u32 = row.iter().sum();
            if total == 0 {
                0.0
            } else {
                row[c] as f64 / total as f64
            }
        })
        .collect();
    Ok(EncodingReport {
        encoder: kind.name().to_string(),
        feature_dim,
        n_classes,
        chance,
        accuracy_mean,
        accuracy_se,
        per_replicate,
        per_class_accuracy,
        confusion,
        seeds,
        memory_horizon: None,
    })
}

/// Memory-horizon curve: per probed lag, the test accuracy of decoding which
/// item occurred that many steps before the snapshot. Features are extracted
/// once per replicate and reused across lags.
pub fn memory_horizon(
    kind: EncoderKind,
    task: &SequenceTask,
    probe_lags: &[usize],
    cfg: &HarnessConfig,
) -> Result<Vec<HorizonPoint>> {
    let mut base = task.clone();
    base.label_rule = LabelRule::ItemAtLag(*probe_lags.first().ok_or(Error::EmptyAlphabet)?);
    base.validate()?;
    let slot_lags = base.slot_lags();
    for &lag in probe_lags {
        if !slot_lags.contains(&lag) {
            return Err(Error::ProtocolOutOfRange(format!(
                "probe lag {lag} not in slot lags {slot_lags:?}"
            )));
        }
    }
    let n_classes = base.alphabet.len();
    let chance = 1.0 / n_classes as f64;

    let mut outcomes = Vec::with_capacity(cfg.n_replicates);
    for r in 0..cfg.n_replicates {
        outcomes.push(run_replicate(kind, &base, cfg, r)?);
    }

    let mut points = Vec::with_capacity(probe_lags.len());
    for &lag in probe_lags {
        let slot = slot_lags.iter().position(|&l| l == lag).expect("validated");
        let mut per_replicate = Vec::with_capacity(outcomes.len());
        let mut n_test_total = 0usize;
        for outcome in &outcomes {
            let labels: Vec<u32> = outcome.items.iter().map(|it| it[slot] as u32).collect();
            let (train_idx, test_idx) =
                stratified_split(&labels, n_classes, cfg.train_fraction, outcome.split_seed);
            let train_feats: Vec<Vec<f64>> =
                train_idx.iter().map(|&i| outcome.features[i].clone()).collect();
            let train_labels: Vec<u32> = train_idx.iter().map(|&i| labels[i]).collect();
            let readout =
                linear_readout_fit(&train_feats, &train_labels, cfg.ridge_lambda, n_classes)?;
            let correct = test_idx
                .iter()
                .filter(|&&i| readout.predict(&outcome.features[i]) == labels[i])
                .count();
            per_replicate.push(correct as f64 / test_idx.len().max(1) as f64);
            n_test_total += test_idx.len();
        }
        let (accuracy_mean, accuracy_se) = summarize(&per_replicate, n_test_total, chance);
        points.push(HorizonPoint {
            lag,
            accuracy_mean,
            accuracy_se,
            per_replicate,
        });
    }
    Ok(points)
}
