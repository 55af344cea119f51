//! File formats: one-record-per-line stimulus protocols, recording export in
//! CSV and raw little-endian f32, and grayscale frame rendering.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Boundary, UnitCoord};
use crate::wavesim::{NeuronVariant, Recording, StimulusEvent, StimulusProtocol};

/// Recording export format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordingFormat {
    /// Text: header row `step,unit_x,unit_y,potential,spiked`, one row per
    /// (step, unit).
    CsvFrames,
    /// Textual header line `width height steps dt` followed by little-endian
    /// 32-bit float frames, row-major within a frame, time-major across
    /// frames. Bit-exact round trip.
    RawF32,
}

impl RecordingFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            RecordingFormat::CsvFrames => "csv",
            RecordingFormat::RawF32 => "raw",
        }
    }
}

/// Parse a protocol file: one event per line, fields
/// `x y onset duration amplitude`, `#` comments and blank lines allowed.
pub fn parse_protocol_file(path: &Path) -> Result<StimulusProtocol> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut events = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::ParseError {
                line: lineno,
                field: "record".into(),
                msg: format!("expected 5 fields (x y onset duration amplitude), got {}", fields.len()),
            });
        }
        let parse_usize = |s: &str, field: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|e| Error::ParseError {
                line: lineno,
                field: field.into(),
                msg: format!("{e} (value {s:?})"),
            })
        };
        let x = parse_usize(fields[0], "x")?;
        let y = parse_usize(fields[1], "y")?;
        let onset = parse_usize(fields[2], "onset")?;
        let duration = parse_usize(fields[3], "duration")?;
        let amplitude: f64 = fields[4].parse().map_err(|e| Error::ParseError {
            line: lineno,
            field: "amplitude".into(),
            msg: format!("{e} (value {:?})", fields[4]),
        })?;
        if duration < 1 {
            return Err(Error::ParseError {
                line: lineno,
                field: "duration".into(),
                msg: "duration must be >= 1".into(),
            });
        }
        if !(amplitude > 0.0) {
            return Err(Error::ParseError {
                line: lineno,
                field: "amplitude".into(),
                msg: format!("amplitude must be > 0, got {amplitude}"),
            });
        }
        events.push(StimulusEvent::new(UnitCoord::new(x, y), onset, duration, amplitude));
    }
    Ok(StimulusProtocol::new(events))
}

/// Write a protocol in the line format `parse_protocol_file` reads.
pub fn write_protocol(protocol: &StimulusProtocol, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# x y onset duration amplitude")?;
    for ev in &protocol.events {
        writeln!(
            out,
            "{} {} {} {} {}",
            ev.position.x, ev.position.y, ev.onset, ev.duration, ev.amplitude
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Write a recording in the requested format.
pub fn write_recording(recording: &Recording, path: &Path, format: RecordingFormat) -> Result<()> {
    if recording.steps() == 0 {
        return Err(Error::ShapeMismatch("recording is empty".into()));
    }
    match format {
        RecordingFormat::CsvFrames => write_csv(recording, path),
        RecordingFormat::RawF32 => write_raw(recording, path),
    }
}

fn write_csv(recording: &Recording, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "step,unit_x,unit_y,potential,spiked")?;
    let w = recording.lattice().width();
    let n = recording.lattice().n_units();
    let mut spiked = vec![false; n];
    for t in 0..recording.steps() {
        spiked.iter_mut().for_each(|s| *s = false);
        for &u in &recording.raster()[t] {
            spiked[u as usize] = true;
        }
        let frame = recording.frame(t);
        for (idx, &v) in frame.iter().enumerate() {
            writeln!(
                out,
                "{t},{},{},{v},{}",
                idx % w,
                idx / w,
                u8::from(spiked[idx])
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_raw(recording: &Recording, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "{} {} {} {}",
        recording.lattice().width(),
        recording.lattice().height(),
        recording.steps(),
        recording.dt()
    )?;
    for &v in recording.frames_flat() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read a raw-f32 recording back. The raw format carries the field only
/// (dimensions, dt, frames); lattice spacing and conduction velocity beyond
/// the defaults, the protocol, and the spike raster are not stored.
pub fn read_raw_recording(path: &Path) -> Result<Recording> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::ParseError {
            line: 1,
            field: "header".into(),
            msg: format!("expected `width height steps dt`, got {header:?}"),
        });
    }
    let parse = |i: usize, name: &str| -> Result<usize> {
        fields[i].parse().map_err(|e| Error::ParseError {
            line: 1,
            field: name.into(),
            msg: format!("{e}"),
        })
    };
    let width = parse(0, "width")?;
    let height = parse(1, "height")?;
    let steps = parse(2, "steps")?;
    let dt: f64 = fields[3].parse().map_err(|e| Error::ParseError {
        line: 1,
        field: "dt".into(),
        msg: format!("{e}"),
    })?;
    let n = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(steps))
        .ok_or_else(|| Error::ParseError {
            line: 1,
            field: "header".into(),
            msg: "dimensions overflow".into(),
        })?;
    let mut bytes = Vec::with_capacity(n * 4);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != n * 4 {
        return Err(Error::ParseError {
            line: 1,
            field: "frames".into(),
            msg: format!("expected {} frame bytes, found {}", n * 4, bytes.len()),
        });
    }
    let frames: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let lattice = build_lattice(width, height, 1.0, 0.3, Boundary::Open)?;
    Recording::from_parts(
        lattice,
        dt,
        0,
        NeuronVariant::RateLeaky { rectify: true },
        StimulusProtocol::default(),
        frames,
        vec![Vec::new(); steps],
    )
}

/// Render every frame as a binary PGM (P5), min-max scaled over the whole
/// recording. A constant field renders as uniform mid-gray.
pub fn render_frames(recording: &Recording, out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if recording.steps() == 0 {
        return Err(Error::ShapeMismatch("recording is empty".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
    for &v in recording.frames_flat() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let flat = hi <= lo;
    let scale = if flat { 0.0 } else { 255.0 / (hi - lo) as f64 };

    let w = recording.lattice().width();
    let h = recording.lattice().height();
    let mut paths = Vec::with_capacity(recording.steps());
    for t in 0..recording.steps() {
        let path = out_dir.join(format!("frame_{t:05}.pgm"));
        let mut out = BufWriter::new(File::create(&path)?);
        write!(out, "P5\n{w} {h}\n255\n")?;
        let frame = recording.frame(t);
        let pixels: Vec<u8> = frame
            .iter()
            .map(|&v| {
                if flat {
                    128
                } else {
                    ((v - lo) as f64 * scale).round().clamp(0.0, 255.0) as u8
                }
            })
            .collect();
        out.write_all(&pixels)?;
        out.flush()?;
        paths.push(path);
    }
    Ok(paths)
}
