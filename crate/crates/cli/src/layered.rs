//! Flag, config-file and default layering.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use seqcvae::error::{Error, ErrorKind};
use seqcvae::kv::KeyValues;

/// A command-line mistake that the core library never sees.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 1 usage, 2 data, 3 numeric.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            };
        }
    }
    2
}

/// Values from `--config` overlaid with explicitly given flags.
pub fn layer(config: Option<&Path>, flags: &[(&str, Option<String>)]) -> Result<KeyValues> {
    let mut kv = match config {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::default(),
    };
    for (key, value) in flags {
        if let Some(v) = value {
            kv.insert(key, v);
        }
    }
    Ok(kv)
}

pub fn flag<T: ToString>(key: &'static str, value: &Option<T>) -> (&'static str, Option<String>) {
    (key, value.as_ref().map(|v| v.to_string()))
}

pub fn take_path(kv: &mut KeyValues, key: &str) -> Result<Option<PathBuf>> {
    Ok(kv.take::<String>(key)?.map(PathBuf::from))
}

pub fn require_path(kv: &mut KeyValues, key: &str) -> Result<PathBuf> {
    take_path(kv, key)?.ok_or_else(|| usage(format!("missing required setting `{key}`")))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(())
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
