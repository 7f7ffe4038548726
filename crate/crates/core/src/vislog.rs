//! Visual-log model: a directory of losslessly stored frames described by a
//! `vislog.json` manifest, plus an optional `events.jsonl` input stream.
//!
//! Loading is strict about structure (missing files, dimension mismatches
//! and unordered timestamps are hard errors) and tolerant about extras
//! (unknown manifest fields are ignored). Frame order follows timestamps;
//! manifest order only breaks ties.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Rect;
use crate::imaging::{to_grayscale, Raster};

pub const MANIFEST_NAME: &str = "vislog.json";
pub const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("unsupported manifest version {0}")]
    UnsupportedVersion(u32),
    #[error("frame {index} ({file}): dimensions {got_w}x{got_h} do not match screen {want_w}x{want_h}")]
    DimensionMismatch { index: usize, file: String, got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("frame {index} ({file}): {reason}")]
    FrameDecode { index: usize, file: String, reason: String },
    #[error("frame {index}: timestamp {t_ms} is earlier than its predecessor")]
    NonMonotoneTimestamps { index: usize, t_ms: u64 },
    #[error("events line {line}: {reason}")]
    Event { line: usize, reason: String },
    #[error("anonymize region {index} exceeds the frame bounds")]
    RegionOutOfBounds { index: usize },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// `vislog.json` on disk. Unknown fields are deliberately accepted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub screen: ScreenDim,
    pub frames: Vec<ManifestFrame>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events_file: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenDim {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub file: String,
    pub t_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Position in timestamp order, 0-based.
    pub index: usize,
    pub t_ms: u64,
    pub image: Raster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    TouchDown,
    TouchUp,
    TouchMove,
    Key,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    pub t_ms: u64,
    pub kind: InputKind,
    /// Present for touch kinds, absent for keys.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pos: Option<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub key: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualLog {
    pub screen: ScreenDim,
    pub frames: Vec<Frame>,
    pub events: Vec<InputEvent>,
    /// Frame file names in the same order as `frames`.
    pub frame_files: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorEvent {
    /// Index of the later frame of the differing pair.
    pub frame_index: usize,
    pub mse: f64,
}

#[derive(serde::Deserialize, serde::Serialize)]
struct EventRecord {
    t_ms: u64,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<String>,
}

/// Read and validate the manifest alone. Timestamps are authoritative for
/// frame order and must be non-decreasing in manifest order; equal stamps
/// keep their manifest position. File names carry no ordering meaning.
pub fn read_manifest(dir: &Path) -> Result<Manifest, LogError> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|_| LogError::MissingFile(path.clone()))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| LogError::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    if manifest.version != SUPPORTED_VERSION {
        return Err(LogError::UnsupportedVersion(manifest.version));
    }
    if manifest.screen.width == 0 || manifest.screen.height == 0 {
        return Err(LogError::Manifest { path, reason: "screen dimensions must be nonzero".into() });
    }
    for (i, pair) in manifest.frames.windows(2).enumerate() {
        if pair[1].t_ms < pair[0].t_ms {
            return Err(LogError::NonMonotoneTimestamps { index: i + 1, t_ms: pair[1].t_ms });
        }
    }
    Ok(manifest)
}

pub fn load_log(dir: &Path) -> Result<VisualLog, LogError> {
    load_log_with_report(dir).map(|(log, _)| log)
}

/// Like [`load_log`] but also returns ingestion warnings (e.g. frames whose
/// extension suggests lossy storage).
pub fn load_log_with_report(dir: &Path) -> Result<(VisualLog, Vec<String>), LogError> {
    let manifest = read_manifest(dir)?;
    let mut warnings = Vec::new();
    let mut frames = Vec::with_capacity(manifest.frames.len());
    let mut frame_files = Vec::with_capacity(manifest.frames.len());

    for (index, mf) in manifest.frames.iter().enumerate() {
        let lower = mf.file.to_ascii_lowercase();
        if lower.ends_with(".jpg") || lower.ends_with(".jpeg") {
            warnings.push(format!("frame {index} ({}) looks lossy; expected PNG", mf.file));
        }
        let path = dir.join(&mf.file);
        if !path.is_file() {
            return Err(LogError::MissingFile(path));
        }
        // decode by content, not extension
        let img = image::ImageReader::open(&path)
            .map_err(|e| LogError::Io { path: path.clone(), source: e })?
            .with_guessed_format()
            .map_err(|e| LogError::Io { path: path.clone(), source: e })?
            .decode()
            .map_err(|e| LogError::FrameDecode {
                index,
                file: mf.file.clone(),
                reason: e.to_string(),
            })?;
        let raster = dynamic_to_raster(&img);
        if raster.width() != manifest.screen.width || raster.height() != manifest.screen.height {
            return Err(LogError::DimensionMismatch {
                index,
                file: mf.file.clone(),
                got_w: raster.width(),
                got_h: raster.height(),
                want_w: manifest.screen.width,
                want_h: manifest.screen.height,
            });
        }
        frames.push(Frame { index, t_ms: mf.t_ms, image: raster });
        frame_files.push(mf.file.clone());
    }

    let events = match &manifest.events_file {
        None => Vec::new(),
        Some(name) => {
            let path = dir.join(name);
            let file = File::open(&path).map_err(|_| LogError::MissingFile(path.clone()))?;
            read_events(BufReader::new(file), manifest.screen)?
        }
    };

    Ok((VisualLog { screen: manifest.screen, frames, events, frame_files }, warnings))
}

fn read_events<R: BufRead>(reader: R, screen: ScreenDim) -> Result<Vec<InputEvent>, LogError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LogError::Event { line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord = serde_json::from_str(&line)
            .map_err(|e| LogError::Event { line: i + 1, reason: e.to_string() })?;
        let kind = match rec.kind.as_str() {
            "touch_down" => InputKind::TouchDown,
            "touch_up" => InputKind::TouchUp,
            "touch_move" => InputKind::TouchMove,
            "key" => InputKind::Key,
            other => {
                return Err(LogError::Event {
                    line: i + 1,
                    reason: format!("unknown kind {other:?}"),
                })
            }
        };
        let pos = match kind {
            InputKind::Key => None,
            _ => {
                let (Some(x), Some(y)) = (rec.x, rec.y) else {
                    return Err(LogError::Event {
                        line: i + 1,
                        reason: "touch event needs x and y".into(),
                    });
                };
                if x >= screen.width || y >= screen.height {
                    return Err(LogError::Event {
                        line: i + 1,
                        reason: format!("coordinates ({x}, {y}) outside the screen"),
                    });
                }
                Some((x, y))
            }
        };
        let key = match kind {
            InputKind::Key => Some(rec.key.ok_or_else(|| LogError::Event {
                line: i + 1,
                reason: "key event needs a key".into(),
            })?),
            _ => None,
        };
        events.push(InputEvent { t_ms: rec.t_ms, kind, pos, key });
    }
    events.sort_by_key(|e| e.t_ms);
    Ok(events)
}

/// Write a log directory: manifest, one PNG per frame, events if present.
/// Gray rasters store as 8-bit grayscale PNG, color as 8-bit RGB.
pub fn save_log(log: &VisualLog, dir: &Path) -> Result<(), LogError> {
    std::fs::create_dir_all(dir).map_err(|e| LogError::Io { path: dir.into(), source: e })?;
    let manifest = Manifest {
        version: SUPPORTED_VERSION,
        screen: log.screen,
        frames: log
            .frames
            .iter()
            .zip(&log.frame_files)
            .map(|(f, name)| ManifestFrame { file: name.clone(), t_ms: f.t_ms })
            .collect(),
        events_file: if log.events.is_empty() { None } else { Some("events.jsonl".into()) },
    };
    let mpath = dir.join(MANIFEST_NAME);
    let mfile = File::create(&mpath).map_err(|e| LogError::Io { path: mpath.clone(), source: e })?;
    serde_json::to_writer_pretty(BufWriter::new(mfile), &manifest)
        .map_err(|e| LogError::Manifest { path: mpath, reason: e.to_string() })?;

    for (frame, name) in log.frames.iter().zip(&log.frame_files) {
        save_frame_png(&frame.image, &dir.join(name))?;
    }
    if !log.events.is_empty() {
        write_events(&log.events, &dir.join("events.jsonl"))?;
    }
    Ok(())
}

/// Always encodes PNG, whatever the file name says.
pub fn save_frame_png(img: &Raster, path: &Path) -> Result<(), LogError> {
    let to_u8 = |v: f32| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    let buf: Vec<u8> = img.data().iter().map(|v| to_u8(*v)).collect();
    let res = if img.channels() == 1 {
        image::GrayImage::from_raw(img.width(), img.height(), buf)
            .expect("buffer size")
            .save_with_format(path, image::ImageFormat::Png)
    } else {
        image::RgbImage::from_raw(img.width(), img.height(), buf)
            .expect("buffer size")
            .save_with_format(path, image::ImageFormat::Png)
    };
    res.map_err(|e| LogError::Io {
        path: path.into(),
        source: std::io::Error::other(e.to_string()),
    })
}

pub fn write_events(events: &[InputEvent], path: &Path) -> Result<(), LogError> {
    let file = File::create(path).map_err(|e| LogError::Io { path: path.into(), source: e })?;
    let mut w = BufWriter::new(file);
    for e in events {
        let rec = EventRecord {
            t_ms: e.t_ms,
            kind: match e.kind {
                InputKind::TouchDown => "touch_down",
                InputKind::TouchUp => "touch_up",
                InputKind::TouchMove => "touch_move",
                InputKind::Key => "key",
            }
            .into(),
            x: e.pos.map(|p| p.0),
            y: e.pos.map(|p| p.1),
            key: e.key.clone(),
        };
        serde_json::to_writer(&mut w, &rec)
            .map_err(|er| LogError::Io { path: path.into(), source: std::io::Error::other(er) })?;
        writeln!(w).map_err(|er| LogError::Io { path: path.into(), source: er })?;
    }
    Ok(())
}

fn dynamic_to_raster(img: &image::DynamicImage) -> Raster {
    use image::DynamicImage::*;
    match img {
        ImageLuma8(g) => {
            let data: Vec<f32> = g.as_raw().iter().map(|v| f32::from(*v) / 255.0).collect();
            Raster::from_vec(g.width(), g.height(), 1, data).expect("luma buffer")
        }
        other => {
            let rgb = other.to_rgb8();
            let data: Vec<f32> = rgb.as_raw().iter().map(|v| f32::from(*v) / 255.0).collect();
            Raster::from_vec(rgb.width(), rgb.height(), 3, data).expect("rgb buffer")
        }
    }
}

/// Mean squared pixel difference over all channels; 0 for identical frames,
/// at most 1. Panics only never: mismatched shapes are an error.
pub fn frame_mse(a: &Raster, b: &Raster) -> Result<f64, LogError> {
    if a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels() {
        return Err(LogError::Manifest {
            path: PathBuf::new(),
            reason: format!(
                "frame_mse shape mismatch: {}x{}x{} vs {}x{}x{}",
                a.width(), a.height(), a.channels(),
                b.width(), b.height(), b.channels()
            ),
        });
    }
    let mut acc = 0.0f64;
    for (x, y) in a.data().iter().zip(b.data().iter()) {
        let d = f64::from(*x) - f64::from(*y);
        acc += d * d;
    }
    Ok(acc / a.data().len() as f64)
}

/// Frames whose grayscale MSE against their predecessor exceeds `theta`.
/// Color frames are converted with BT.601 luma before differencing.
pub fn detect_major_events(log: &VisualLog, theta: f64) -> Result<Vec<MajorEvent>, LogError> {
    let mut out = Vec::new();
    if log.frames.is_empty() {
        return Ok(out);
    }
    let mut prev = to_grayscale(&log.frames[0].image);
    for i in 1..log.frames.len() {
        let cur = to_grayscale(&log.frames[i].image);
        let mse = frame_mse(&prev, &cur)?;
        if mse > theta {
            out.push(MajorEvent { frame_index: i, mse });
        }
        prev = cur;
    }
    Ok(out)
}

/// Sampled frame indices: frame 0 first, then one frame `delay` after each
/// major event (clamped to the last frame), duplicates collapsed. The result
/// is strictly increasing.
pub fn sample_frames(log: &VisualLog, events: &[MajorEvent], delay: usize) -> Vec<usize> {
    let mut out = vec![0];
    if log.frames.is_empty() {
        return Vec::new();
    }
    let last = log.frames.len() - 1;
    for e in events {
        let idx = (e.frame_index + delay).min(last);
        if *out.last().unwrap() != idx {
            out.push(idx);
        }
    }
    out
}

/// Paint the listed regions mid-gray (0.5 on every channel). All other
/// pixels are byte-identical to the input. Regions must fit in the frame.
pub fn anonymize(frame: &Raster, regions: &[Rect]) -> Result<Raster, LogError> {
    for (index, r) in regions.iter().enumerate() {
        if r.x2() > frame.width() || r.y2() > frame.height() {
            return Err(LogError::RegionOutOfBounds { index });
        }
    }
    let mut out = frame.clone();
    for r in regions {
        for y in r.y..r.y2() {
            for x in r.x..r.x2() {
                for c in 0..frame.channels() {
                    out.set(x, y, c, 0.5);
                }
            }
        }
    }
    Ok(out)
}
