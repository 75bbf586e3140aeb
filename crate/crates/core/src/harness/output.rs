use std::fs::File;
use std::marker::PhantomData;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const VERSION_STAMP: &str = concat!("signal-marl ", env!("CARGO_PKG_VERSION"));

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

/// A CSV file written one record at a time.
pub(crate) struct CsvLog<T> {
    writer: csv::Writer<File>,
    _rows: PhantomData<T>,
}

impl<T: Serialize> CsvLog<T> {
    pub fn create(path: &Path) -> Result<Self> {
        let file =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        Ok(Self {
            writer: csv::Writer::from_writer(file),
            _rows: PhantomData,
        })
    }

    pub fn write(&mut self, row: &T) -> Result<()> {
        Ok(self.writer.serialize(row)?)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer
            .flush()
            .map_err(|e| Error::io("flushing csv", e))
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut log = CsvLog::create(path)?;
    for row in rows {
        log.write(row)?;
    }
    log.flush()
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config_digest: String,
    config: &'a ExperimentConfig,
}

/// FNV-1a, stable across platforms and toolchains.
fn digest(text: &str) -> String {
    let hash = text.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    format!("{hash:016x}")
}

/// Writes the resolved configuration with the crate version and, for a
/// single run, its seed.
pub fn write_manifest(path: &Path, config: &ExperimentConfig, seed: Option<u64>) -> Result<()> {
    let manifest = Manifest {
        version: VERSION_STAMP,
        seed,
        config_digest: digest(&config.to_toml()?),
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::config(format!("manifest: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
