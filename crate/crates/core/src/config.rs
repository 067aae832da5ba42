//! Run configuration: JSON with unit-free fields named after the physical
//! symbols (`l0`, `epsilon`, `kind`, `n`, `k_max`).
//!
//! ```json
//! {
//!   "l0": 0.1, "epsilon": 1e-5, "kind": 1, "n": 1.0, "drive": "standard",
//!   "k_max": 15, "t_max": 250.0, "sample_interval": 1.0,
//!   "rel_tol": 1e-9, "abs_tol": 1e-12,
//!   "observable_mode": "every_sample",
//!   "output": { "dir": "out" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityMotion, Drive, MotionKind};
use crate::coupling::Truncation;
use crate::error::{Error, Result};
use crate::evolve::IntegratorConfig;
use crate::observables::ObservableMode;

/// Where a run writes its files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub timeseries: String,
    pub spectrum: String,
    pub metadata: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: PathBuf::from("out"),
            timeseries: "timeseries.csv".into(),
            spectrum: "spectrum.csv".into(),
            metadata: "metadata.json".into(),
        }
    }
}

impl OutputPaths {
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        OutputPaths {
            dir: dir.into(),
            ..Default::default()
        }
    }

    pub fn timeseries_path(&self) -> PathBuf {
        self.dir.join(&self.timeseries)
    }

    pub fn spectrum_path(&self) -> PathBuf {
        self.dir.join(&self.spectrum)
    }

    pub fn metadata_path(&self) -> PathBuf {
        self.dir.join(&self.metadata)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub motion: CavityMotion,
    pub k_max: usize,
    pub t_max: f64,
    #[serde(flatten)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub observable_mode: ObservableMode,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn new(motion: CavityMotion, k_max: usize, t_max: f64) -> Self {
        RunConfig {
            motion,
            k_max,
            t_max,
            integrator: IntegratorConfig::default(),
            observable_mode: ObservableMode::EverySample,
            output: OutputPaths::default(),
        }
    }

    pub fn with_sample_interval(mut self, dt: f64) -> Self {
        self.integrator.sample_interval = dt;
        self
    }

    /// Parse and validate. Unknown keys and every violated precondition are
    /// reported together.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let Some(obj) = raw.as_object() else {
            return Err(Error::Config(vec!["config: expected a JSON object".into()]));
        };
        let mut problems = unknown_keys(&raw);
        for key in REQUIRED_KEYS {
            if !obj.contains_key(*key) {
                problems.push(format!("{key}: missing"));
            }
        }
        // Each field is checked on its own against a valid base so that one
        // malformed value does not hide the others.
        let base = serde_json::to_value(RunConfig::new(CavityMotion::stationary(1.0), 1, 1.0))?;
        let mut merged = base.clone();
        for (key, value) in obj.iter().filter(|(k, _)| KNOWN_KEYS.contains(&k.as_str())) {
            let mut probe = base.clone();
            probe[key] = value.clone();
            match serde_json::from_value::<RunConfig>(probe) {
                Ok(_) => merged[key] = value.clone(),
                Err(e) => problems.push(format!("{key}: {e}")),
            }
        }
        let config: RunConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(vec![e.to_string()]))?;
        problems.extend(config.violations());
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn truncation(&self) -> Result<Truncation> {
        Truncation::new(self.k_max)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.motion.violations();
        if self.k_max == 0 {
            out.push("k_max: must be at least 1".into());
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            out.push(format!(
                "t_max: must be positive and finite, got {}",
                self.t_max
            ));
        }
        out.extend(self.integrator.violations());
        if self.observable_mode == ObservableMode::WholePeriod && self.motion.epsilon > 0.0 {
            let dt = self.integrator.sample_interval;
            let periods = dt / self.motion.period();
            if !(periods >= 1.0 - 1e-9
                && (periods - periods.round()).abs() <= 1e-9 * periods.max(1.0))
            {
                out.push(format!(
                    "sample_interval: whole_period mode needs a multiple of the period {}, got {dt}",
                    self.motion.period()
                ));
            }
        }
        for (field, name) in [
            ("output.timeseries", &self.output.timeseries),
            ("output.spectrum", &self.output.spectrum),
            ("output.metadata", &self.output.metadata),
        ] {
            if name.is_empty() {
                out.push(format!("{field}: must not be empty"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Whether two configs describe the same physics apart from the cut-off.
    pub fn same_except_cutoff(&self, other: &RunConfig) -> bool {
        self.motion == other.motion
            && self.t_max == other.t_max
            && self.integrator == other.integrator
            && self.observable_mode == other.observable_mode
    }
}

const REQUIRED_KEYS: &[&str] = &["l0", "epsilon", "kind", "n", "k_max", "t_max"];

const KNOWN_KEYS: &[&str] = &[
    "l0",
    "epsilon",
    "kind",
    "n",
    "drive",
    "k_max",
    "t_max",
    "rel_tol",
    "abs_tol",
    "max_step",
    "sample_interval",
    "method",
    "step_mode",
    "frame",
    "max_steps",
    "observable_mode",
    "output",
];

fn unknown_keys(raw: &serde_json::Value) -> Vec<String> {
    match raw.as_object() {
        Some(obj) => obj
            .keys()
            .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
            .map(|k| format!("{k}: unknown field"))
            .collect(),
        None => vec!["config: expected a JSON object".into()],
    }
}

/// A named, ready-to-run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: RunConfig,
    /// Cut-offs compared for stability.
    pub cutoffs: (usize, usize),
}

struct Entry {
    name: &'static str,
    summary: &'static str,
    kind: u8,
    l0: f64,
    epsilon: f64,
    n: f64,
    drive: Drive,
    k_max: usize,
    t_max: f64,
    dt: f64,
    cutoffs: (usize, usize),
}

#[rustfmt::skip]
const PRESETS: &[Entry] = &[
    Entry { name: "fig2", summary: "main resonance, l0=0.1, eps=1e-5", kind: 1, l0: 0.1, epsilon: 1e-5, n: 1.0, drive: Drive::Standard, k_max: 15, t_max: 3500.0, dt: 1.0, cutoffs: (10, 15) },
    Entry { name: "fig2-short", summary: "fig2 parameters up to t=250", kind: 1, l0: 0.1, epsilon: 1e-5, n: 1.0, drive: Drive::Standard, k_max: 15, t_max: 250.0, dt: 1.0, cutoffs: (10, 15) },
    Entry { name: "fig3a", summary: "fig2 parameters with n=1.5", kind: 1, l0: 0.1, epsilon: 1e-5, n: 1.5, drive: Drive::Standard, k_max: 25, t_max: 2000.0, dt: 1.0, cutoffs: (20, 25) },
    Entry { name: "fig3b", summary: "fig2 parameters with n=2", kind: 1, l0: 0.1, epsilon: 1e-5, n: 2.0, drive: Drive::Standard, k_max: 30, t_max: 2000.0, dt: 1.0, cutoffs: (25, 30) },
    Entry { name: "fig4", summary: "main resonance, l0=1, eps=0.001", kind: 1, l0: 1.0, epsilon: 0.001, n: 1.0, drive: Drive::Standard, k_max: 30, t_max: 500.0, dt: 0.5, cutoffs: (20, 30) },
    Entry { name: "fig5", summary: "main resonance, l0=1, eps=0.01", kind: 1, l0: 1.0, epsilon: 0.01, n: 1.0, drive: Drive::Standard, k_max: 110, t_max: 100.0, dt: 0.1, cutoffs: (100, 110) },
    Entry { name: "fig6", summary: "main resonance, l0=1, eps=0.1", kind: 1, l0: 1.0, epsilon: 0.1, n: 1.0, drive: Drive::Standard, k_max: 200, t_max: 12.0, dt: 0.01, cutoffs: (190, 200) },
    Entry { name: "fig9", summary: "kind 2, l0=1, eps=0.001", kind: 2, l0: 1.0, epsilon: 0.001, n: 1.0, drive: Drive::Standard, k_max: 30, t_max: 700.0, dt: 0.5, cutoffs: (20, 30) },
    Entry { name: "fig10", summary: "kind 2, l0=1, eps=0.01", kind: 2, l0: 1.0, epsilon: 0.01, n: 1.0, drive: Drive::Standard, k_max: 50, t_max: 100.0, dt: 0.1, cutoffs: (40, 50) },
    Entry { name: "fig11", summary: "kind 2, l0=1, eps=0.1", kind: 2, l0: 1.0, epsilon: 0.1, n: 1.0, drive: Drive::Standard, k_max: 80, t_max: 12.0, dt: 0.01, cutoffs: (70, 80) },
    Entry { name: "fig14", summary: "kind 2, l0=50, eps=0.02", kind: 2, l0: 50.0, epsilon: 0.02, n: 1.0, drive: Drive::Standard, k_max: 70, t_max: 1400.0, dt: 1.0, cutoffs: (60, 70) },
    Entry { name: "fig15", summary: "kind 2, l0=50, eps=0.02, n=3", kind: 2, l0: 50.0, epsilon: 0.02, n: 3.0, drive: Drive::Standard, k_max: 80, t_max: 1400.0, dt: 1.0, cutoffs: (70, 80) },
    Entry { name: "fig16", summary: "kind 2, l0=50, eps=0.02, long run", kind: 2, l0: 50.0, epsilon: 0.02, n: 1.0, drive: Drive::Standard, k_max: 70, t_max: 4000.0, dt: 2.0, cutoffs: (60, 70) },
    Entry { name: "fig17", summary: "kind 2 at true resonance, eps=0.001", kind: 2, l0: 1.0, epsilon: 0.001, n: 1.0, drive: Drive::TrueResonance, k_max: 30, t_max: 700.0, dt: 0.5, cutoffs: (20, 30) },
    Entry { name: "fig18", summary: "kind 2 at true resonance, eps=0.01", kind: 2, l0: 1.0, epsilon: 0.01, n: 1.0, drive: Drive::TrueResonance, k_max: 110, t_max: 100.0, dt: 0.1, cutoffs: (100, 110) },
    Entry { name: "fig19", summary: "kind 3, l0=1, eps=0.001", kind: 3, l0: 1.0, epsilon: 0.001, n: 1.0, drive: Drive::Standard, k_max: 50, t_max: 700.0, dt: 0.5, cutoffs: (40, 50) },
];

impl Entry {
    fn build(&self) -> Preset {
        let kind = MotionKind::try_from(self.kind).expect("preset kinds are valid");
        let motion = CavityMotion::new(self.l0, self.epsilon, kind, self.n)
            .and_then(|m| m.with_drive(self.drive))
            .expect("preset motions are valid");
        Preset {
            name: self.name,
            summary: self.summary,
            config: RunConfig::new(motion, self.k_max, self.t_max).with_sample_interval(self.dt),
            cutoffs: self.cutoffs,
        }
    }
}

pub fn presets() -> Vec<Preset> {
    PRESETS.iter().map(Entry::build).collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Entry::build)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            Error::Config(vec![format!(
                "preset: unknown name `{name}` (available: {})",
                names.join(", ")
            )])
        })
}
