//! Trajectory recordings and their two on-disk text formats.
//!
//! * `tsv-frame-ped-xy`: one record per line, four whitespace-separated
//!   fields `frame ped x y`. Blank lines and lines starting with `#` are
//!   skipped.
//! * `csv-sdd`: a header line `frame,ped,x,y`, then comma-separated records
//!   with the same meaning.
//!
//! `frame` and `ped` are integers (an integral decimal such as `780.0` is
//! accepted); `x` and `y` are decimals.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub frame: i64,
    pub ped: i64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneFormat {
    TsvFramePedXy,
    CsvSdd,
}

impl SceneFormat {
    /// `.csv` files are read as `csv-sdd`, anything else as `tsv-frame-ped-xy`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SceneFormat::CsvSdd,
            _ => SceneFormat::TsvFramePedXy,
        }
    }
}

impl FromStr for SceneFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv-frame-ped-xy" | "tsv" => Ok(SceneFormat::TsvFramePedXy),
            "csv-sdd" | "csv" => Ok(SceneFormat::CsvSdd),
            other => Err(Error::Config(format!("unknown scene format `{other}`"))),
        }
    }
}

/// One contiguous recording. Records are sorted by `(ped, frame)` and each
/// `(frame, ped)` pair occurs once.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryScene {
    pub scene_id: String,
    pub records: Vec<Record>,
    /// Frames between consecutive samples of one pedestrian.
    pub frame_step: i64,
}

impl TrajectoryScene {
    /// Sorts and validates `records`. A `frame_step` of `None` is inferred as
    /// the gcd of the per-pedestrian frame gaps (1 when there are none).
    pub fn new(
        scene_id: impl Into<String>,
        mut records: Vec<Record>,
        frame_step: Option<i64>,
    ) -> Result<Self> {
        records.sort_by_key(|r| (r.ped, r.frame));
        if let Some(w) = records
            .windows(2)
            .find(|w| w[0].ped == w[1].ped && w[0].frame == w[1].frame)
        {
            return Err(Error::Mismatch(format!(
                "duplicate record for frame {}, pedestrian {}",
                w[1].frame, w[1].ped
            )));
        }
        let frame_step = match frame_step {
            Some(s) if s > 0 => s,
            Some(s) => return Err(Error::Config(format!("frame step must be positive, got {s}"))),
            None => infer_frame_step(&records),
        };
        Ok(Self {
            scene_id: scene_id.into(),
            records,
            frame_step,
        })
    }

    pub fn pedestrians(&self) -> Vec<i64> {
        let mut peds: Vec<i64> = self.records.iter().map(|r| r.ped).collect();
        peds.dedup();
        peds
    }

    /// Serializes in the given format; parsing the output reproduces `self`.
    pub fn to_text(&self, format: SceneFormat) -> String {
        let mut out = String::new();
        match format {
            SceneFormat::TsvFramePedXy => {
                for r in &self.records {
                    writeln!(out, "{}\t{}\t{:?}\t{:?}", r.frame, r.ped, r.x, r.y).unwrap();
                }
            }
            SceneFormat::CsvSdd => {
                out.push_str("frame,ped,x,y\n");
                for r in &self.records {
                    writeln!(out, "{},{},{:?},{:?}", r.frame, r.ped, r.x, r.y).unwrap();
                }
            }
        }
        out
    }

    pub fn save(&self, path: &Path, format: SceneFormat) -> Result<()> {
        std::fs::write(path, self.to_text(format)).map_err(|e| Error::io(path, e))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn infer_frame_step(sorted: &[Record]) -> i64 {
    let step = sorted
        .windows(2)
        .filter(|w| w[0].ped == w[1].ped)
        .map(|w| w[1].frame - w[0].frame)
        .fold(0, gcd);
    if step == 0 {
        1
    } else {
        step
    }
}

fn parse_id(field: &str) -> Option<i64> {
    if let Ok(v) = field.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = field.parse().ok()?;
    (v.fract() == 0.0 && v.abs() < 9e15).then_some(v as i64)
}

fn parse_coord(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses scene text; `origin` only labels errors.
pub fn parse_scene_text(
    text: &str,
    format: SceneFormat,
    scene_id: &str,
    origin: &Path,
) -> Result<TrajectoryScene> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut records = Vec::new();
    let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    if format == SceneFormat::CsvSdd {
        let header = lines.by_ref().find(|(_, l)| !l.is_empty());
        match header {
            Some((_, "frame,ped,x,y")) => {}
            Some((n, other)) => {
                return Err(err(n, format!("expected header `frame,ped,x,y`, got `{other}`")))
            }
            None => return Err(err(1, "missing header `frame,ped,x,y`".into())),
        }
    }

    for (line_no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match format {
            SceneFormat::TsvFramePedXy => line.split_whitespace().collect(),
            SceneFormat::CsvSdd => line.split(',').map(str::trim).collect(),
        };
        if fields.len() != 4 {
            return Err(err(line_no, format!("expected 4 fields, got {}", fields.len())));
        }
        let frame = parse_id(fields[0])
            .ok_or_else(|| err(line_no, format!("frame `{}` is not an integer", fields[0])))?;
        let ped = parse_id(fields[1])
            .ok_or_else(|| err(line_no, format!("pedestrian `{}` is not an integer", fields[1])))?;
        let x = parse_coord(fields[2])
            .ok_or_else(|| err(line_no, format!("x `{}` is not a finite number", fields[2])))?;
        let y = parse_coord(fields[3])
            .ok_or_else(|| err(line_no, format!("y `{}` is not a finite number", fields[3])))?;
        if seen.insert((frame, ped), line_no).is_some() {
            return Err(Error::DuplicateRecord {
                path: origin.to_path_buf(),
                line: line_no,
                frame,
                ped,
            });
        }
        records.push(Record { frame, ped, x, y });
    }
    TrajectoryScene::new(scene_id, records, None)
}

/// Reads one scene file. The scene id is the file stem.
pub fn parse_scene(path: &Path, format: SceneFormat) -> Result<TrajectoryScene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let scene_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scene")
        .to_string();
    parse_scene_text(&text, format, &scene_id, path)
}

/// Loads every `.txt`, `.tsv` and `.csv` file of a directory (sorted by
/// name), or a single file.
pub fn load_scenes(path: &Path) -> Result<Vec<TrajectoryScene>> {
    if path.is_file() {
        return Ok(vec![parse_scene(path, SceneFormat::from_path(path))?]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("txt" | "tsv" | "csv")
                )
        })
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| parse_scene(p, SceneFormat::from_path(p)))
        .collect()
}
