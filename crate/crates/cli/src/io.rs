//! CSV files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use stochastic_hawkes::EventSequence;

use crate::config::Config;
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.txt";

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Write `rows` under `header`. Numbers are formatted with their shortest
/// round-trip representation so reruns are byte-identical.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let err = |e| CliError::csv(path, e);
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Numeric columns of a CSV file, checked against the expected header.
pub fn read_columns(path: &Path, header: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let err = |e| CliError::csv(path, e);
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(err)?;
    let found: Vec<String> = r.headers().map_err(err)?.iter().map(String::from).collect();
    if found != header {
        return Err(CliError::Data(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(err)?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v = field.parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "{}: row {} has non-numeric value {field:?}",
                    path.display(),
                    line + 1
                ))
            })?;
            col.push(v);
        }
    }
    Ok(columns)
}

pub fn read_events(path: &Path, horizon: f64) -> CliResult<EventSequence> {
    let times = read_columns(path, &["t"])?.remove(0);
    Ok(EventSequence::new(times, horizon)?)
}

/// Observation window: the explicit value, else `horizon` from a manifest.
pub fn resolve_horizon(explicit: Option<f64>, manifest: Option<&Path>) -> CliResult<f64> {
    if let Some(h) = explicit {
        return Ok(h);
    }
    match manifest {
        Some(path) => Config::load(path)?.require("horizon"),
        None => Err(CliError::config(
            "horizon",
            "is missing: pass --horizon or --manifest",
        )),
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Everything needed to repeat a run: tool version, command, seed, the hash
/// of the resolved configuration and the configuration itself.
pub struct Manifest<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a Config,
    /// Extra top-level entries such as the horizon or the fan-out.
    pub entries: Vec<(&'a str, String)>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut text = format!(
            "version={}\ncommand={}\nseed={}\nconfig_sha256={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.seed,
            self.config.sha256()
        );
        for (k, v) in &self.entries {
            text.push_str(&format!("{k}={v}\n"));
        }
        for out in &self.outputs {
            let name = out.file_name().unwrap_or_default().to_string_lossy();
            text.push_str(&format!("output={name}\n"));
        }
        for (k, v) in self.config.iter() {
            text.push_str(&format!("config.{k}={v}\n"));
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
