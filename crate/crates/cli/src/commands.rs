//! Command implementations. Each returns the list of output file names
//! (relative to the output directory) for the manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use wavecoder::attention::{encode_sequence, EncoderParams, TokenSequence};
use wavecoder::formats::{
    parse_protocol_file, read_raw_recording, render_frames, write_recording, RecordingFormat,
};
use wavecoder::harness::{evaluate_encoder, memory_horizon, EncodingReport};
use wavecoder::ssm::{eigenmodes, make_mexican_hat_circulant, simulate_ssm, StateSpaceModel};
use wavecoder::wavecode::{
    build_template_bank, calibrate_radius, decode_sequence, decode_single, DecodeOptions,
    PeelOptions,
};
use wavecoder::wavesim::run_protocol;
use wavecoder::{Recording, StimulusProtocol, UnitCoord};

use crate::config::RunConfig;

pub fn simulate(
    config: &RunConfig,
    protocol_file: Option<&Path>,
    out_dir: &Path,
    format: RecordingFormat,
) -> anyhow::Result<Vec<String>> {
    let sim = config.sim_config()?;
    let protocol = match protocol_file {
        Some(path) => parse_protocol_file(path)?,
        None => config.protocol(),
    };
    let mut net = sim.build(config.sim.seed)?;
    let recording = run_protocol(&mut net, &protocol, config.sim.total_steps)?;
    std::fs::create_dir_all(out_dir)?;
    let name = format!("recording.{}", format.extension());
    write_recording(&recording, &out_dir.join(&name), format)?;
    Ok(vec![name])
}

/// Load a raw recording and graft the configured lattice onto it (the raw
/// format stores only dimensions, steps, and dt).
fn load_recording(config: &RunConfig, path: &Path) -> anyhow::Result<Recording> {
    let raw = read_raw_recording(path)?;
    let sim = config.sim_config()?;
    if raw.lattice().width() != sim.lattice.width()
        || raw.lattice().height() != sim.lattice.height()
    {
        bail!(
            "recording is {}x{} but the config lattice is {}x{}",
            raw.lattice().width(),
            raw.lattice().height(),
            sim.lattice.width(),
            sim.lattice.height()
        );
    }
    let steps = raw.steps();
    Ok(Recording::from_parts(
        sim.lattice,
        raw.dt(),
        config.sim.seed,
        sim.model.variant,
        StimulusProtocol::default(),
        raw.frames_flat().to_vec(),
        vec![Vec::new(); steps],
    )?)
}

pub fn decode(
    config: &RunConfig,
    recording_path: &Path,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let sim = config.sim_config()?;
    let recording = load_recording(config, recording_path)?;
    let positions: Vec<UnitCoord> = if config.decode.positions.is_empty() {
        let mut seen = Vec::new();
        for ev in &config.protocol().events {
            if !seen.contains(&ev.position) {
                seen.push(ev.position);
            }
        }
        seen
    } else {
        config
            .decode
            .positions
            .iter()
            .map(|&(x, y)| UnitCoord::new(x, y))
            .collect()
    };
    if positions.is_empty() {
        bail!("no template positions: set [decode].positions or [protocol].events");
    }
    let step = config
        .decode
        .step
        .unwrap_or_else(|| recording.steps().saturating_sub(1));
    if step >= recording.steps() {
        bail!(
            "decode step {step} outside recording of {} steps",
            recording.steps()
        );
    }

    let bank = build_template_bank(
        &sim,
        &positions,
        config.decode.template_max_lag,
        config.decode.template_amplitude,
        config.decode.template_duration,
    )?;
    let snap = recording.snapshot(step);
    let events = decode_sequence(&snap, &bank, config.decode.max_events, &PeelOptions::default())?;

    std::fs::create_dir_all(out_dir)?;
    let name = "events.txt";
    let mut out = std::fs::File::create(out_dir.join(name))?;
    writeln!(out, "# x y onset confidence (snapshot step {step})")?;
    for ev in &events {
        writeln!(out, "{} {} {} {}", ev.x, ev.y, ev.onset, ev.confidence)?;
    }

    // single-event readout with the calibrated radius curve, when detectable
    let cal = calibrate_radius(
        &sim,
        config.decode.template_max_lag,
        config.decode.template_amplitude,
        config.decode.template_duration,
    )?;
    let opts = DecodeOptions {
        activity_threshold: sim.activity_threshold(),
        calibration: Some(cal),
    };
    let single_name = "single.txt";
    let mut single = std::fs::File::create(out_dir.join(single_name))?;
    match decode_single(&snap, &sim.lattice, sim.lattice.conduction_velocity(), &opts) {
        Ok(ev) => writeln!(single, "{} {} {} {}", ev.x, ev.y, ev.onset, ev.confidence)?,
        Err(e) => writeln!(single, "# {e}")?,
    }
    Ok(vec![name.to_string(), single_name.to_string()])
}

fn build_spec(config: &RunConfig) -> anyhow::Result<wavecoder::ssm::CirculantSpec> {
    let mut spec = make_mexican_hat_circulant(config.ssm.n_nodes, &config.kernel)?;
    if config.ssm.zero_row_sum {
        spec = spec.zero_row_sum();
    }
    if config.ssm.stabilize {
        let growth = eigenmodes(&spec).max_growth_rate();
        if growth > 0.0 {
            let mut row = spec.first_row().to_vec();
            row[0] -= growth + 0.02;
            spec = wavecoder::ssm::CirculantSpec::new(row)?;
        }
    }
    Ok(spec)
}

pub fn spectrum(config: &RunConfig, out_dir: &Path) -> anyhow::Result<Vec<String>> {
    let spec = build_spec(config)?;
    let modes = eigenmodes(&spec);
    std::fs::create_dir_all(out_dir)?;
    let name = "spectrum.csv";
    let mut out = std::fs::File::create(out_dir.join(name))?;
    writeln!(out, "k,re,im,abs")?;
    for (k, l) in modes.eigenvalues().iter().enumerate() {
        writeln!(out, "{k},{},{},{}", l.re, l.im, l.norm())?;
    }
    let summary_name = "spectrum_summary.txt";
    let mut summary = std::fs::File::create(out_dir.join(summary_name))?;
    let growth = modes.max_growth_rate();
    writeln!(summary, "n {}", modes.n())?;
    writeln!(summary, "max_growth_rate {growth}")?;
    writeln!(summary, "spectral_norm {}", modes.spectral_norm())?;
    writeln!(summary, "stable {}", growth <= 0.0)?;
    if growth > 0.0 {
        log::warn!("connectivity has a growing mode (max Re lambda = {growth:.4})");
    }
    Ok(vec![name.to_string(), summary_name.to_string()])
}

pub fn ssm_run(config: &RunConfig, out_dir: &Path) -> anyhow::Result<Vec<String>> {
    let spec = build_spec(config)?;
    let n = config.ssm.n_nodes;
    if config.ssm.impulse_node >= n {
        bail!("impulse node {} outside ring of {n}", config.ssm.impulse_node);
    }
    let model = StateSpaceModel::from_circulant(
        spec,
        DMatrix::identity(n, n),
        DMatrix::identity(n, n),
        DMatrix::zeros(n, n),
        config.ssm.dt,
    )?;
    let mut inputs = vec![vec![0.0; n]; config.ssm.steps];
    inputs[0][config.ssm.impulse_node] = config.ssm.impulse_amplitude;
    let traj = simulate_ssm(&model, &inputs, config.ssm.method)?;

    std::fs::create_dir_all(out_dir)?;
    let name = "trajectory.csv";
    let mut out = std::fs::File::create(out_dir.join(name))?;
    let header: Vec<String> = (0..n).map(|j| format!("y{j}")).collect();
    writeln!(out, "t,{}", header.join(","))?;
    for (t, y) in traj.outputs.iter().enumerate() {
        let row: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{t},{}", row.join(","))?;
    }
    Ok(vec![name.to_string()])
}

pub fn attn_run(config: &RunConfig, out_dir: &Path) -> anyhow::Result<Vec<String>> {
    let arch = config.arch();
    let params = EncoderParams::init(arch, config.attention.param_seed)?;
    if config.attention.tokens.is_empty() {
        bail!("attention.tokens is empty");
    }
    let n_items = config.attention.tokens.iter().max().unwrap() + 1;
    let mut rng = ChaCha12Rng::seed_from_u64(config.attention.param_seed ^ 0x9e3779b97f4a7c15);
    let emb: Vec<DVector<f64>> = (0..n_items)
        .map(|_| {
            DVector::from_fn(arch.d_model, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            })
        })
        .collect();
    let seq = TokenSequence::new(DMatrix::from_fn(
        config.attention.tokens.len(),
        arch.d_model,
        |i, j| emb[config.attention.tokens[i]][j],
    ))?;
    let pooled = encode_sequence(&seq, &params, config.attention.pooling)?;

    std::fs::create_dir_all(out_dir)?;
    let name = "encoding.txt";
    let mut out = std::fs::File::create(out_dir.join(name))?;
    writeln!(
        out,
        "# d_model {} heads {} layers {} d_ff {} positional {} scale 1/sqrt({}) pooling {:?}",
        arch.d_model,
        arch.n_heads,
        arch.n_layers,
        arch.d_ff,
        arch.positional,
        arch.d_model / arch.n_heads,
        config.attention.pooling
    )?;
    for v in pooled.iter() {
        writeln!(out, "{v}")?;
    }
    Ok(vec![name.to_string()])
}

pub fn bench(config: &RunConfig, out_dir: &Path) -> anyhow::Result<Vec<String>> {
    let task = config.sequence_task();
    let harness = config.harness_config()?;
    let mut reports: Vec<EncodingReport> = Vec::new();
    for &kind in &config.bench.encoders {
        let mut report = evaluate_encoder(kind, &task, &harness)
            .with_context(|| format!("evaluating {} encoder", kind.name()))?;
        if !config.bench.probe_lags.is_empty() {
            report.memory_horizon = Some(
                memory_horizon(kind, &task, &config.bench.probe_lags, &harness)
                    .with_context(|| format!("memory horizon for {}", kind.name()))?,
            );
        }
        reports.push(report);
    }
    std::fs::create_dir_all(out_dir)?;
    let name = "report.json";
    let json = serde_json::to_string_pretty(&reports)?;
    std::fs::write(out_dir.join(name), json)?;
    Ok(vec![name.to_string()])
}

pub fn render(
    config: &RunConfig,
    recording_path: &Path,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let recording = load_recording(config, recording_path)?;
    let frames_dir = out_dir.join("frames");
    let paths: Vec<PathBuf> = render_frames(&recording, &frames_dir)?;
    Ok(paths
        .iter()
        .map(|p| {
            format!(
                "frames/{}",
                p.file_name().unwrap_or_default().to_string_lossy()
            )
        })
        .collect())
}
