//! Run records and their on-disk form.
//!
//! A record is three files in one directory:
//!
//! * a time-series CSV with columns `t, N_total, E, unitarity_defect, N_1..N_kmax`,
//! * a final-spectrum CSV with columns `k, omega, N`,
//! * a metadata JSON with the config snapshot, final totals and step counts.
//!
//! Both CSVs start with a version line (`# dyncav timeseries v1.0`). Floats
//! are written with 17 significant digits so that a record read back compares
//! equal to the one written. Every file is written to a temporary sibling and
//! renamed into place.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{OutputPaths, RunConfig};
use crate::error::{Error, Result};
use crate::integrator::StepStats;
use crate::observables::ParticleSpectrum;

pub const FORMAT_MAJOR: u32 = 1;
pub const FORMAT_MINOR: u32 = 0;

pub fn format_version() -> String {
    format!("{FORMAT_MAJOR}.{FORMAT_MINOR}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: String,
    pub config: RunConfig,
    pub rows: Vec<ParticleSpectrum>,
    /// Spectrum at `t_max` from the full Bogoliubov transformation.
    pub final_spectrum: ParticleSpectrum,
    pub stats: StepStats,
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

impl RunRecord {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.rows
            .iter()
            .chain(std::iter::once(&self.final_spectrum))
            .map(|r| r.unitarity_defect)
            .fold(0.0, f64::max)
    }

    /// A time-series column by its CSV name (`N_total`, `E`, `N_3`, ...).
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let pick: Box<dyn Fn(&ParticleSpectrum) -> f64> = match name {
            "t" => Box::new(|r| r.t),
            "N_total" => Box::new(|r| r.total),
            "E" => Box::new(|r| r.energy),
            "unitarity_defect" => Box::new(|r| r.unitarity_defect),
            _ => {
                let k = name
                    .strip_prefix("N_")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1 && k <= self.config.k_max)
                    .ok_or_else(|| Error::invalid("column", format!("unknown column `{name}`")))?;
                Box::new(move |r| r.n[k - 1])
            }
        };
        Ok(self.rows.iter().map(pick).collect())
    }

    /// Time-series CSV, version line included.
    pub fn timeseries_csv(&self) -> Result<Vec<u8>> {
        let k_max = self.config.k_max;
        let mut out = format!("# dyncav timeseries v{}\n", self.format_version).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec![
                "t".to_string(),
                "N_total".into(),
                "E".into(),
                "unitarity_defect".into(),
            ];
            header.extend((1..=k_max).map(|k| format!("N_{k}")));
            w.write_record(&header)?;
            for r in &self.rows {
                let mut fields = vec![
                    fmt(r.t),
                    fmt(r.total),
                    fmt(r.energy),
                    fmt(r.unitarity_defect),
                ];
                fields.extend(r.n.iter().map(|&v| fmt(v)));
                w.write_record(&fields)?;
            }
            w.flush()?;
        }
        Ok(out)
    }

    /// Final-spectrum CSV, version line included.
    pub fn spectrum_csv(&self) -> Result<Vec<u8>> {
        let l1 = self.config.motion.length(self.final_spectrum.t);
        let mut out = format!("# dyncav spectrum v{}\n", self.format_version).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["k", "omega", "N"])?;
            for (i, &n) in self.final_spectrum.n.iter().enumerate() {
                let k = i + 1;
                let omega = k as f64 * std::f64::consts::PI / l1;
                w.write_record([k.to_string(), fmt(omega), fmt(n)])?;
            }
            w.flush()?;
        }
        Ok(out)
    }

    fn metadata(&self) -> Metadata {
        Metadata {
            format_version: self.format_version.clone(),
            config: self.config.clone(),
            rows: self.rows.len(),
            final_time: self.final_spectrum.t,
            final_total: self.final_spectrum.total,
            final_energy: self.final_spectrum.energy,
            final_unitarity_defect: self.final_spectrum.unitarity_defect,
            max_unitarity_defect: self.max_unitarity_defect(),
            stats: self.stats,
            wall_clock_seconds: self.wall_clock_seconds,
            threads: self.threads,
        }
    }

    /// Write the three files into `paths.dir`, creating it if needed.
    pub fn write(&self, paths: &OutputPaths) -> Result<()> {
        std::fs::create_dir_all(&paths.dir)?;
        write_atomic(&paths.timeseries_path(), &self.timeseries_csv()?)?;
        write_atomic(&paths.spectrum_path(), &self.spectrum_csv()?)?;
        let mut meta = serde_json::to_vec_pretty(&self.metadata())?;
        meta.push(b'\n');
        write_atomic(&paths.metadata_path(), &meta)?;
        Ok(())
    }

    /// Read a record written by [`RunRecord::write`].
    pub fn read(paths: &OutputPaths) -> Result<Self> {
        let meta: Metadata = serde_json::from_slice(&std::fs::read(paths.metadata_path())?)?;
        check_version("metadata", &meta.format_version)?;
        let k_max = meta.config.k_max;
        let rows = read_timeseries(&paths.timeseries_path(), k_max)?;
        if rows.len() != meta.rows {
            return Err(Error::Format(format!(
                "time series has {} rows, metadata says {}",
                rows.len(),
                meta.rows
            )));
        }
        let n = read_spectrum(&paths.spectrum_path(), k_max)?;
        Ok(RunRecord {
            format_version: meta.format_version,
            config: meta.config,
            rows,
            final_spectrum: ParticleSpectrum {
                t: meta.final_time,
                n,
                total: meta.final_total,
                energy: meta.final_energy,
                unitarity_defect: meta.final_unitarity_defect,
            },
            stats: meta.stats,
            wall_clock_seconds: meta.wall_clock_seconds,
            threads: meta.threads,
        })
    }

    /// Read a record from `dir`, assuming the default metadata file name.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let probe = OutputPaths::in_dir(dir);
        let meta: Metadata = serde_json::from_slice(&std::fs::read(probe.metadata_path())?)?;
        let paths = OutputPaths {
            dir: dir.to_path_buf(),
            ..meta.config.output
        };
        RunRecord::read(&paths)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    format_version: String,
    config: RunConfig,
    rows: usize,
    final_time: f64,
    final_total: f64,
    final_energy: f64,
    final_unitarity_defect: f64,
    max_unitarity_defect: f64,
    stats: StepStats,
    wall_clock_seconds: f64,
    threads: usize,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `bytes` to a temporary file next to `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn check_version(what: &str, version: &str) -> Result<()> {
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u32>().ok())
        .ok_or_else(|| Error::Format(format!("{what}: malformed version `{version}`")))?;
    if major != FORMAT_MAJOR {
        return Err(Error::Format(format!(
            "{what}: unsupported major version {major} (this build reads {FORMAT_MAJOR}.x)"
        )));
    }
    Ok(())
}

/// Consume the version line and return a CSV reader over the rest.
fn open_versioned(
    path: &Path,
    kind: &str,
) -> Result<csv::Reader<std::io::BufReader<std::fs::File>>> {
    let mut reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let prefix = format!("# dyncav {kind} v");
    let version = first
        .trim_end()
        .strip_prefix(&prefix)
        .ok_or_else(|| Error::Format(format!("{}: missing `{prefix}` line", path.display())))?;
    check_version(kind, version)?;
    Ok(csv::Reader::from_reader(reader))
}

fn parse(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("not a number: `{field}`")))
}

/// Rows of a time-series CSV.
pub fn read_timeseries(path: &Path, k_max: usize) -> Result<Vec<ParticleSpectrum>> {
    let mut rdr = open_versioned(path, "timeseries")?;
    let width = 4 + k_max;
    if rdr.headers()?.len() != width {
        return Err(Error::Format(format!(
            "time series has {} columns, expected {width}",
            rdr.headers()?.len()
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<f64> = rec.iter().map(parse).collect::<Result<_>>()?;
        rows.push(ParticleSpectrum {
            t: v[0],
            total: v[1],
            energy: v[2],
            unitarity_defect: v[3],
            n: v[4..].to_vec(),
        });
    }
    Ok(rows)
}

/// `N_k` column of a final-spectrum CSV.
pub fn read_spectrum(path: &Path, k_max: usize) -> Result<Vec<f64>> {
    let mut rdr = open_versioned(path, "spectrum")?;
    let mut n = Vec::with_capacity(k_max);
    for rec in rdr.records() {
        let rec = rec?;
        let value = rec
            .get(2)
            .ok_or_else(|| Error::Format("spectrum row needs three fields".into()))?;
        n.push(parse(value)?);
    }
    if n.len() != k_max {
        return Err(Error::Format(format!(
            "spectrum has {} modes, expected {k_max}",
            n.len()
        )));
    }
    Ok(n)
}
