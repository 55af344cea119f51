//! Quick look at the desk-scale presets: front speed, spiking sparsity, the
//! dense control, and the where/when round trip. Handy when retuning
//! parameters.
//!
//! Usage: `cargo run --release --example wave_lab -- [speed|spiking|dense|decode]`

use wavecoder::wavesim::presets::{
    spiking_dense, spiking_sparse, DESK_STIMULUS_AMPLITUDE, DESK_STIMULUS_DURATION,
};
use wavecoder::wavesim::{
    measure_wave_speed, participation_fraction, run_protocol, SpeedFitOptions,
};
use wavecoder::{StimulusEvent, StimulusProtocol, UnitCoord};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("speed");
    match mode {
        "speed" => speed_lab(),
        "spiking" => spiking_lab(),
        "dense" => dense_lab(),
        "decode" => decode_lab(),
        other => eprintln!("unknown mode {other} (speed|spiking|dense|decode)"),
    }
}

fn speed_lab() {
    let cfg = spiking_sparse();
    let center = UnitCoord::new(32, 32);
    let mut speeds = Vec::new();
    for seed in 0..10u64 {
        let mut net = cfg.build(seed).unwrap();
        let ev = StimulusEvent::new(center, 20, DESK_STIMULUS_DURATION, DESK_STIMULUS_AMPLITUDE);
        let rec = run_protocol(&mut net, &StimulusProtocol::new(vec![ev]), 300).unwrap();
        match measure_wave_speed(&rec, &ev, &SpeedFitOptions::default()) {
            Ok(s) => {
                println!("seed {seed}: speed {s:.4} mm/ms");
                speeds.push(s);
            }
            Err(e) => println!("seed {seed}: {e}"),
        }
    }
    if !speeds.is_empty() {
        speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "median {:.4} (configured {})",
            speeds[speeds.len() / 2],
            cfg.lattice.conduction_velocity()
        );
    }
}

fn spiking_lab() {
    let cfg = spiking_sparse();
    let center = UnitCoord::new(32, 32);
    for seed in 0..10u64 {
        let mut net = cfg.build(seed).unwrap();
        let ev = StimulusEvent::new(center, 20, DESK_STIMULUS_DURATION, DESK_STIMULUS_AMPLITUDE);
        let rec = run_protocol(&mut net, &StimulusProtocol::new(vec![ev]), 300).unwrap();
        let total_spikes: usize = rec.raster().iter().map(Vec::len).sum();
        let mut worst: f64 = 0.0;
        for start in (0..250).step_by(10) {
            worst = worst.max(participation_fraction(&rec, start..start + 50).unwrap());
        }
        println!("seed {seed}: spikes {total_spikes}, worst 50 ms participation {worst:.5}");
    }
}

fn dense_lab() {
    let cfg = spiking_dense();
    let center = UnitCoord::new(32, 32);
    let mut net = cfg.build(0).unwrap();
    let ev = StimulusEvent::new(center, 20, DESK_STIMULUS_DURATION, DESK_STIMULUS_AMPLITUDE);
    let rec = run_protocol(&mut net, &StimulusProtocol::new(vec![ev]), 300).unwrap();
    let mut worst: f64 = 0.0;
    for start in (0..250).step_by(10) {
        worst = worst.max(participation_fraction(&rec, start..start + 50).unwrap());
    }
    println!(
        "dense control (10x gain): worst 50 ms participation {worst:.3}, total spikes {}",
        rec.raster().iter().map(Vec::len).sum::<usize>()
    );
}

fn decode_lab() {
    use wavecoder::wavecode::{calibrate_radius, decode_single, DecodeOptions};

    let cfg = spiking_sparse();
    let cal = calibrate_radius(&cfg, 60, DESK_STIMULUS_AMPLITUDE, DESK_STIMULUS_DURATION).unwrap();
    let mut pos_errs = Vec::new();
    let mut onset_errs = Vec::new();
    for seed in 0..10u64 {
        let x = 16 + ((seed * 7 + 3) % 32) as usize;
        let y = 16 + ((seed * 13 + 9) % 32) as usize;
        let lag = 10 + ((seed * 5) % 21) as usize;
        let onset = 30usize;
        let pos = UnitCoord::new(x, y);
        let mut net = cfg.build(seed).unwrap();
        let ev = StimulusEvent::new(pos, onset, DESK_STIMULUS_DURATION, DESK_STIMULUS_AMPLITUDE);
        let rec =
            run_protocol(&mut net, &StimulusProtocol::new(vec![ev]), onset + lag + 1).unwrap();
        let snap = rec.snapshot(onset + lag);
        let opts = DecodeOptions {
            activity_threshold: cfg.activity_threshold(),
            calibration: Some(cal.clone()),
        };
        match decode_single(&snap, &cfg.lattice, cfg.lattice.conduction_velocity(), &opts) {
            Ok(d) => {
                let pe = ((d.x - x as f64).powi(2) + (d.y - y as f64).powi(2)).sqrt();
                let oe = (d.onset - onset as f64).abs();
                println!(
                    "seed {seed}: true ({x},{y}) onset {onset} lag {lag} -> est ({:.1},{:.1}) onset {:.1} | pos_err {pe:.2} onset_err {oe:.2}",
                    d.x, d.y, d.onset
                );
                pos_errs.push(pe);
                onset_errs.push(oe);
            }
            Err(e) => println!("seed {seed}: {e}"),
        }
    }
    pos_errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    onset_errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !pos_errs.is_empty() {
        println!(
            "median pos_err {:.2}, median onset_err {:.2}",
            pos_errs[pos_errs.len() / 2],
            onset_errs[onset_errs.len() / 2]
        );
    }
}
