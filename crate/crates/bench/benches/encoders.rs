use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use wavecoder::attention::{encode_sequence, ArchConfig, EncoderParams, Pooling, TokenSequence};
use wavecoder::harness::linear_readout_fit;
use wavecoder::ssm::{circulant_apply, CirculantSpec};
use wavecoder::wavesim::presets::{rate_desk, spiking_sparse};
use wavecoder::wavesim::run_protocol;
use wavecoder::{StimulusEvent, StimulusProtocol, UnitCoord};

fn bench_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    let protocol = StimulusProtocol::new(vec![StimulusEvent::new(
        UnitCoord::new(32, 32),
        10,
        3,
        4.0,
    )]);
    group.bench_function("spiking_64x64_100steps", |b| {
        let cfg = spiking_sparse();
        b.iter(|| {
            let mut net = cfg.build(1).unwrap();
            black_box(run_protocol(&mut net, &protocol, 100).unwrap());
        })
    });
    group.bench_function("rate_64x64_100steps", |b| {
        let cfg = rate_desk();
        b.iter(|| {
            let mut net = cfg.build(1).unwrap();
            black_box(run_protocol(&mut net, &protocol, 100).unwrap());
        })
    });
    group.finish();
}

fn bench_circulant(c: &mut Criterion) {
    let mut group = c.benchmark_group("circulant_apply");
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    for n in [64usize, 256, 1024] {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = CirculantSpec::new(row).unwrap();
        group.bench_with_input(BenchmarkId::new("spectral", n), &n, |b, _| {
            b.iter(|| black_box(circulant_apply(&spec, &x).unwrap()))
        });
        let dense = spec.to_dense();
        let xv = nalgebra::DVector::from_column_slice(&x);
        group.bench_with_input(BenchmarkId::new("dense", n), &n, |b, _| {
            b.iter(|| black_box(&dense * &xv))
        });
    }
    group.finish();
}

fn bench_attention(c: &mut Criterion) {
    let arch = ArchConfig {
        d_model: 64,
        n_heads: 8,
        n_layers: 2,
        d_ff: 128,
        positional: true,
    };
    let params = EncoderParams::init(arch, 3).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let seq = TokenSequence::new(nalgebra::DMatrix::from_fn(16, 64, |_, _| {
        rng.gen_range(-1.0..1.0)
    }))
    .unwrap();
    c.bench_function("attention_encode_16x64", |b| {
        b.iter(|| black_box(encode_sequence(&seq, &params, Pooling::Mean).unwrap()))
    });
}

fn bench_readout(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let n = 80;
    let d = 4096;
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
    c.bench_function("ridge_fit_80x4096", |b| {
        b.iter(|| black_box(linear_readout_fit(&features, &labels, 1e-3, 2).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_simulation,
    bench_circulant,
    bench_attention,
    bench_readout
);
criterion_main!(benches);
