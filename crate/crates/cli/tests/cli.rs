//! CLI behavior: formats, flag handling, the manifest contract, and the
//! machine-readable error line.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wavecoder")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        r#"
[sim]
total_steps = 40
seed = 2

[protocol]
events = [[16, 16, 5, 2, 4.0]]

[lattice]
width = 32
height = 32
spacing = 1.0
conduction_velocity = 0.2
boundary = "open"

[kernel]
excitatory_amplitude = 1.0
excitatory_width = 5.0
inhibitory_amplitude = 0.05
inhibitory_width = 9.0
cutoff_radius = 8.0
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_csv_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let status = Command::new(bin())
        .args([
            "simulate",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--format",
            "csv-frames",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("recording.csv")).unwrap();
    assert!(text.starts_with("step,unit_x,unit_y,potential,spiked"));
    assert_eq!(text.lines().count(), 1 + 40 * 32 * 32);
}

#[test]
fn protocol_file_overrides_config_events() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let protocol = dir.path().join("protocol.txt");
    std::fs::write(&protocol, "# x y onset duration amplitude\n8 8 3 2 4.0\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(bin())
        .args([
            "simulate",
            "--config",
            &cfg,
            "--protocol",
            protocol.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    // the decoded event should sit at the protocol file's position, not the
    // config's
    let dec = dir.path().join("dec");
    let status = Command::new(bin())
        .args([
            "decode",
            "--config",
            &cfg,
            "--recording",
            out.join("recording.raw").to_str().unwrap(),
            "--out",
            dec.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let single = std::fs::read_to_string(dec.join("single.txt")).unwrap();
    let fields: Vec<f64> = single
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((fields[0] - 8.0).abs() < 1.0, "decoded x {}", fields[0]);
    assert!((fields[1] - 8.0).abs() < 1.0, "decoded y {}", fields[1]);
}

#[test]
fn seed_flag_changes_the_recording() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let run_with_seed = |seed: &str, name: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let status = Command::new(bin())
            .args([
                "simulate",
                "--config",
                &cfg,
                "--seed",
                seed,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("recording.raw")).unwrap()
    };
    let a = run_with_seed("7", "a");
    let b = run_with_seed("7", "b");
    let c = run_with_seed("8", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn manifest_records_the_resolved_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    Command::new(bin())
        .args([
            "simulate",
            "--config",
            &cfg,
            "--seed",
            "99",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    let parsed: toml::Value = toml::from_str(&manifest).unwrap();
    assert_eq!(parsed["command"].as_str(), Some("simulate"));
    assert_eq!(parsed["config"]["sim"]["seed"].as_integer(), Some(99));
    assert_eq!(
        parsed["outputs"].as_array().unwrap()[0].as_str(),
        Some("recording.raw")
    );
}

#[test]
fn failures_emit_one_error_line_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = Command::new(bin())
        .args([
            "decode",
            "--recording",
            "/nonexistent/recording.raw",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {stderr}");
    assert!(lines[0].starts_with("error: "));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sim]\ntotal_steps = 10\nbogus_field = 3\n").unwrap();
    let output = Command::new(bin())
        .args([
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("bogus_field"));
}

#[test]
fn render_writes_one_frame_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    Command::new(bin())
        .args(["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    let rend = dir.path().join("rend");
    let status = Command::new(bin())
        .args([
            "render",
            "--config",
            &cfg,
            "--recording",
            out.join("recording.raw").to_str().unwrap(),
            "--out",
            rend.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_dir(rend.join("frames")).unwrap().count(), 40);
}
