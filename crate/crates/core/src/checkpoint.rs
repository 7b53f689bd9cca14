//! Checkpoint directories.
//!
//! ```text
//! <dir>/manifest.txt
//! <dir>/params/<name>.f64
//! ```
//!
//! The manifest is UTF-8 text, one record per line, fields separated by a
//! single space:
//!
//! ```text
//! seqcvae-checkpoint v1
//! step <adam steps taken>
//! config <key> <value>          (one line per model setting)
//! param <name> <rows>x<cols> <relative file>
//! ```
//!
//! Each parameter file holds `rows·cols` IEEE-754 doubles, little-endian,
//! row-major, with no header.

use std::fs;
use std::path::{Path, PathBuf};

use diffnum::Tensor;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::model::{Model, ModelConfig};

pub const MANIFEST: &str = "manifest.txt";
const MAGIC: &str = "seqcvae-checkpoint v1";

pub fn save(model: &Model, dir: &Path) -> Result<()> {
    let params = dir.join("params");
    fs::create_dir_all(&params).map_err(|e| Error::io(&params, e))?;
    let mut kv = KeyValues::default();
    model.config.write_kv(&mut kv);
    let mut text = format!("{MAGIC}\nstep {}\n", model.store.step());
    for (k, v) in kv.iter() {
        text.push_str(&format!("config {k} {v}\n"));
    }
    for id in model.store.ids() {
        let name = model.store.name(id);
        let value = model.store.value(id);
        let file = format!("params/{name}.f64");
        text.push_str(&format!("param {name} {}x{} {file}\n", value.rows(), value.cols()));
        let bytes: Vec<u8> = value.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

struct ParamEntry {
    name: String,
    shape: [usize; 2],
    file: String,
    line: usize,
}

struct Manifest {
    step: u64,
    config: KeyValues,
    params: Vec<ParamEntry>,
}

fn parse_manifest(path: &Path, text: &str) -> Result<Manifest> {
    let bad = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(bad(1, format!("expected `{MAGIC}`"))),
    }
    let (mut step, mut config, mut params) = (None, KeyValues::default(), Vec::new());
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match fields.as_slice() {
            ["step", s] => step = Some(s.parse().map_err(|_| bad(n, format!("bad step `{s}`")))?),
            ["config", k, v] => {
                if config.get(k).is_some() {
                    return Err(bad(n, format!("duplicate config key `{k}`")));
                }
                config.insert(k, v);
            }
            ["param", name, shape, file] => {
                let dims: Option<Vec<usize>> = shape.split('x').map(|d| d.parse().ok()).collect();
                let shape = match dims.as_deref() {
                    Some(&[r, c]) if r > 0 && c > 0 => [r, c],
                    _ => return Err(bad(n, format!("bad shape `{shape}`"))),
                };
                params.push(ParamEntry {
                    name: name.to_string(),
                    shape,
                    file: file.to_string(),
                    line: n,
                });
            }
            _ => return Err(bad(n, format!("unrecognised record `{line}`"))),
        }
    }
    Ok(Manifest {
        step: step.ok_or_else(|| bad(1, "missing step record".into()))?,
        config,
        params,
    })
}

/// Reads the model settings recorded in a checkpoint.
pub fn load_config(dir: &Path) -> Result<ModelConfig> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut m = parse_manifest(&path, &text)?;
    let cfg = ModelConfig::read_kv(&mut m.config, ModelConfig::default())?;
    m.config.finish()?;
    Ok(cfg)
}

pub fn load(dir: &Path) -> Result<Model> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut m = parse_manifest(&path, &text)?;
    let cfg = ModelConfig::read_kv(&mut m.config, ModelConfig::default())?;
    m.config.finish()?;
    let mut model = Model::new(cfg)?;
    if m.params.len() != model.store.len() {
        return Err(Error::Mismatch(format!(
            "checkpoint has {} parameters, model has {}",
            m.params.len(),
            model.store.len()
        )));
    }
    let mut seen = vec![false; model.store.len()];
    for entry in &m.params {
        let id = model.store.id(&entry.name).map_err(|_| Error::Parse {
            path: path.clone(),
            line: entry.line,
            message: format!("unknown parameter `{}`", entry.name),
        })?;
        if std::mem::replace(&mut seen[id.index()], true) {
            return Err(Error::Parse {
                path: path.clone(),
                line: entry.line,
                message: format!("parameter `{}` listed twice", entry.name),
            });
        }
        let file: PathBuf = dir.join(&entry.file);
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let count = entry.shape[0] * entry.shape[1];
        if bytes.len() != 8 * count {
            return Err(Error::Mismatch(format!(
                "{}: {} bytes for {} values",
                file.display(),
                bytes.len(),
                count
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let tensor = Tensor::new(&entry.shape, data)?;
        model.store.set_value(id, tensor).map_err(|e| {
            Error::Mismatch(format!("parameter `{}`: {e}", entry.name))
        })?;
    }
    model.store.set_step(m.step);
    Ok(model)
}
