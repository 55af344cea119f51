//! Toy transformer encoder, forward pass only: scaled dot-product
//! self-attention, multi-head composition, add-and-normalize, and a
//! position-wise feedforward block. Parameters are randomly initialized from
//! a seed and frozen; task performance comes from the harness's closed-form
//! readout, not from training.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence of `L` embedding vectors of dimension `d`, rows = tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    data: DMatrix<f64>,
}

impl TokenSequence {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 1 || data.ncols() < 1 {
            return Err(Error::ShapeMismatch(format!(
                "token sequence must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "token sequence has non-finite entries".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Row-stochastic attention map for one head.
#[derive(Debug, Clone)]
pub struct AttentionWeights {
    weights: DMatrix<f64>,
}

impl AttentionWeights {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }
}

/// Row-wise normalized exponential of `(Q K^T) * scale`.
pub fn attention_weights(
    queries: &DMatrix<f64>,
    keys: &DMatrix<f64>,
    scale: f64,
) -> Result<AttentionWeights> {
    if queries.ncols() != keys.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "query dim {} does not match key dim {}",
            queries.ncols(),
            keys.ncols()
        )));
    }
    let mut scores = queries * keys.transpose();
    scores *= scale;
    for mut row in scores.row_iter_mut() {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(AttentionWeights { weights: scores })
}

/// Parameters of one encoder layer.
#[derive(Debug, Clone)]
pub struct EncoderLayerParams {
    /// Per-head query/key/value projections, each `d x d_head`.
    pub wq: Vec<DMatrix<f64>>,
    pub wk: Vec<DMatrix<f64>>,
    pub wv: Vec<DMatrix<f64>>,
    /// Output projection, `d x d`.
    pub wo: DMatrix<f64>,
    /// Feedforward: `d x d_ff` then `d_ff x d`, ReLU between.
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
}

/// Architecture hyperparameters for the encoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    /// Add sinusoidal positional encodings before the first layer.
    pub positional: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            d_model: 32,
            n_heads: 4,
            n_layers: 2,
            d_ff: 64,
            positional: true,
        }
    }
}

/// Frozen encoder parameters, reproducible from (architecture, seed).
#[derive(Debug, Clone)]
pub struct EncoderParams {
    pub arch: ArchConfig,
    pub layers: Vec<EncoderLayerParams>,
    pub seed: u64,
}

impl EncoderParams {
    /// Draw all projections from a seeded Gaussian, scaled by 1/sqrt(fan_in).
    pub fn init(arch: ArchConfig, seed: u64) -> Result<Self> {
        if arch.d_model == 0 || arch.n_heads == 0 || arch.n_layers == 0 || arch.d_ff == 0 {
            return Err(Error::NonPositiveParameter(
                "architecture dimensions must be >= 1".into(),
            ));
        }
        if arch.d_model % arch.n_heads != 0 {
            return Err(Error::BadHeadCount {
                dim: arch.d_model,
                heads: arch.n_heads,
            });
        }
        let d = arch.d_model;
        let dh = d / arch.n_heads;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize| {
            let std = 1.0 / (rows as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| gaussian(&mut rng) * std)
        };
        let layers = (0..arch.n_layers)
            .map(|_| EncoderLayerParams {
                wq: (0..arch.n_heads).map(|_| draw(d, dh)).collect(),
                wk: (0..arch.n_heads).map(|_| draw(d, dh)).collect(),
                wv: (0..arch.n_heads).map(|_| draw(d, dh)).collect(),
                wo: draw(d, d),
                w1: draw(d, arch.d_ff),
                w2: draw(arch.d_ff, d),
            })
            .collect();
        Ok(Self { arch, layers, seed })
    }
}

fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    use rand_distr::StandardNormal;
    rng.sample(StandardNormal)
}

const LN_EPS: f64 = 1e-12;

/// Per-position standardization with unit gain: zero mean, unit variance
/// across the feature dimension.
fn layer_norm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let d = x.ncols() as f64;
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
    out
}

/// Multi-head self-attention output (pre-residual), `L x d`.
fn multi_head(x: &DMatrix<f64>, p: &EncoderLayerParams) -> Result<DMatrix<f64>> {
    let l = x.nrows();
    let d = x.ncols();
    let heads = p.wq.len();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut concat = DMatrix::zeros(l, d);
    for h in 0..heads {
        if p.wq[h].nrows() != d {
            return Err(Error::ShapeMismatch(format!(
                "layer expects dim {}, sequence has {d}",
                p.wq[h].nrows()
            )));
        }
        let q = x * &p.wq[h];
        let k = x * &p.wk[h];
        let v = x * &p.wv[h];
        let a = attention_weights(&q, &k, scale)?;
        let head_out = a.matrix() * v;
        concat.view_mut((0, h * dh), (l, dh)).copy_from(&head_out);
    }
    Ok(concat * &p.wo)
}

/// One encoder layer: multi-head attention with residual-and-normalize, then
/// the position-wise feedforward with the same pattern.
pub fn encoder_layer(seq: &TokenSequence, params: &EncoderLayerParams) -> Result<TokenSequence> {
    let x = seq.matrix();
    let attended = multi_head(x, params)?;
    let y1 = layer_norm(&(x + attended));
    let hidden = (&y1 * &params.w1).map(|v| v.max(0.0));
    let y2 = layer_norm(&(&y1 + hidden * &params.w2));
    TokenSequence::new(y2)
}

/// Pooling rule for turning the final layer output into one encoding vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Mean,
    Last,
}

/// Sinusoidal positional encodings, `L x d`.
pub fn positional_encoding(len: usize, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, dim, |pos, j| {
        let i = (j / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * i / dim as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Run the full encoder stack and pool the result into one encoding vector.
pub fn encode_sequence(
    seq: &TokenSequence,
    params: &EncoderParams,
    pooling: Pooling,
) -> Result<DVector<f64>> {
    if seq.dim() != params.arch.d_model {
        return Err(Error::ShapeMismatch(format!(
            "sequence dim {} does not match model dim {}",
            seq.dim(),
            params.arch.d_model
        )));
    }
    let mut x = if params.arch.positional {
        TokenSequence::new(seq.matrix() + positional_encoding(seq.len(), seq.dim()))?
    } else {
        seq.clone()
    };
    for layer in &params.layers {
        x = encoder_layer(&x, layer)?;
    }
    let m = x.matrix();
    let out = match pooling {
        Pooling::Mean => {
            let mut v = DVector::zeros(m.ncols());
            for row in m.row_iter() {
                v += row.transpose();
            }
            v / m.nrows() as f64
        }
        Pooling::Last => m.row(m.nrows() - 1).transpose(),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_seq(l: usize, d: usize, seed: u64) -> TokenSequence {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        TokenSequence::new(DMatrix::from_fn(l, d, |_, _| gaussian(&mut rng))).unwrap()
    }

    #[test]
    fn single_token_weight_is_one() {
        let q = DMatrix::from_row_slice(1, 3, &[0.3, -1.0, 2.0]);
        let k = q.clone();
        let w = attention_weights(&q, &k, 0.5).unwrap();
        assert_eq!(w.matrix().nrows(), 1);
        assert_relative_eq!(w.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_keys_give_uniform_rows() {
        let l = 4;
        let q = random_seq(l, 3, 1).matrix().clone();
        let k = DMatrix::from_fn(l, 3, |_, j| [0.5, -0.25, 1.0][j]);
        let w = attention_weights(&q, &k, 1.0).unwrap();
        for row in w.matrix().row_iter() {
            for v in row.iter() {
                assert_relative_eq!(*v, 1.0 / l as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let q = random_seq(5, 4, 2).matrix().clone();
        let k = random_seq(5, 4, 3).matrix().clone();
        let w = attention_weights(&q, &k, 0.5).unwrap();
        for row in w.matrix().row_iter() {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn weights_reject_mismatched_dims() {
        let q = DMatrix::zeros(2, 3);
        let k = DMatrix::zeros(2, 4);
        assert!(matches!(
            attention_weights(&q, &k, 1.0),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn bad_head_count_rejected() {
        let arch = ArchConfig {
            d_model: 10,
            n_heads: 3,
            ..Default::default()
        };
        assert!(matches!(
            EncoderParams::init(arch, 0),
            Err(Error::BadHeadCount { .. })
        ));
    }

    #[test]
    fn zeroed_value_and_ffn_paths_reduce_to_normalize() {
        let arch = ArchConfig {
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            positional: false,
        };
        let mut params = EncoderParams::init(arch, 11).unwrap();
        for layer in &mut params.layers {
            for wv in &mut layer.wv {
                wv.fill(0.0);
            }
            layer.w1.fill(0.0);
            layer.w2.fill(0.0);
        }
        let seq = random_seq(5, 8, 4);
        let out = encoder_layer(&seq, &params.layers[0]).unwrap();
        let expect = layer_norm(seq.matrix());
        for (a, b) in out.matrix().iter().zip(expect.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn permutation_equivariance_without_positions() {
        let arch = ArchConfig {
            d_model: 12,
            n_heads: 3,
            n_layers: 2,
            d_ff: 24,
            positional: false,
        };
        let params = EncoderParams::init(arch, 5).unwrap();
        let seq = random_seq(6, 12, 6);
        let perm = [3usize, 0, 5, 1, 4, 2];
        let permuted = TokenSequence::new(DMatrix::from_fn(6, 12, |i, j| {
            seq.matrix()[(perm[i], j)]
        }))
        .unwrap();

        let mut a = seq.clone();
        let mut b = permuted.clone();
        for layer in &params.layers {
            a = encoder_layer(&a, layer).unwrap();
            b = encoder_layer(&b, layer).unwrap();
        }
        for i in 0..6 {
            for j in 0..12 {
                assert_relative_eq!(
                    b.matrix()[(i, j)],
                    a.matrix()[(perm[i], j)],
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn positions_break_permutation_symmetry() {
        let arch = ArchConfig {
            d_model: 12,
            n_heads: 3,
            n_layers: 1,
            d_ff: 24,
            positional: true,
        };
        let params = EncoderParams::init(arch, 5).unwrap();
        let seq = random_seq(6, 12, 6);
        let perm = [3usize, 0, 5, 1, 4, 2];
        let permuted = TokenSequence::new(DMatrix::from_fn(6, 12, |i, j| {
            seq.matrix()[(perm[i], j)]
        }))
        .unwrap();
        let a = encode_sequence(&seq, &params, Pooling::Mean).unwrap();
        let b = encode_sequence(&permuted, &params, Pooling::Mean).unwrap();
        let max_dev = (a - b).amax();
        assert!(max_dev > 1e-3, "expected positions to break symmetry, dev {max_dev}");
    }

    #[test]
    fn mean_pool_invariant_without_positions() {
        let arch = ArchConfig {
            d_model: 8,
            n_heads: 2,
            n_layers: 2,
            d_ff: 16,
            positional: false,
        };
        let params = EncoderParams::init(arch, 9).unwrap();
        let seq = random_seq(5, 8, 10);
        let perm = [4usize, 2, 0, 3, 1];
        let permuted = TokenSequence::new(DMatrix::from_fn(5, 8, |i, j| {
            seq.matrix()[(perm[i], j)]
        }))
        .unwrap();
        let a = encode_sequence(&seq, &params, Pooling::Mean).unwrap();
        let b = encode_sequence(&permuted, &params, Pooling::Mean).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn single_token_mean_pool_is_identity_position() {
        let arch = ArchConfig {
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            positional: false,
        };
        let params = EncoderParams::init(arch, 3).unwrap();
        let seq = random_seq(1, 8, 12);
        let pooled = encode_sequence(&seq, &params, Pooling::Mean).unwrap();
        let mut x = seq;
        for layer in &params.layers {
            x = encoder_layer(&x, layer).unwrap();
        }
        for j in 0..8 {
            assert_relative_eq!(pooled[j], x.matrix()[(0, j)], epsilon = 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let arch = ArchConfig::default();
        let seq = random_seq(4, arch.d_model, 42);
        let p1 = EncoderParams::init(arch, 77).unwrap();
        let p2 = EncoderParams::init(arch, 77).unwrap();
        let a = encode_sequence(&seq, &p1, Pooling::Mean).unwrap();
        let b = encode_sequence(&seq, &p2, Pooling::Mean).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn finite_outputs_for_large_inputs() {
        let arch = ArchConfig::default();
        let params = EncoderParams::init(arch, 1).unwrap();
        let seq = TokenSequence::new(DMatrix::from_fn(6, arch.d_model, |i, j| {
            1e3 * if (i + j) % 2 == 0 { 1.0 } else { -1.0 }
        }))
        .unwrap();
        let out = encode_sequence(&seq, &params, Pooling::Last).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
    }
}
