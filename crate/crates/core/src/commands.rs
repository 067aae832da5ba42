//! Run orchestration behind the command-line subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    convergence_compare, linear_fit, power_law_fit, rms_relative_deviation, ConvergenceReport,
    FitModel, FitResult, FitWindow,
};
use crate::cavity::{Drive, MotionKind};
use crate::config::{OutputPaths, RunConfig};
use crate::error::{Error, Result};
use crate::evolve::{evolve_columns_parallel, IntegratorConfig};
use crate::observables::{
    bogoliubov_frame, particle_spectrum, selection_rule_check, spectrum, SelectionRule,
};
use crate::oracles::{dodonov_n, dodonov_n1, ji_short_time, second_order_reference, SlowTime};
use crate::record::{format_version, write_atomic, RunRecord};

/// Process exit status for an error, following the CLI contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::Json(_)
        | Error::ModeIndex(_)
        | Error::Domain(_)
        | Error::Incompatible(_)
        | Error::DegenerateFit(_)
        | Error::Format(_) => 2,
        Error::StepSizeUnderflow { .. } | Error::NonFinite { .. } | Error::StepLimit { .. } => 3,
        Error::Dimension { .. } | Error::Io(_) | Error::Csv(_) => 1,
    }
}

/// Integrate one configuration and collect its record. Nothing is written.
pub fn execute(config: &RunConfig, threads: usize) -> Result<RunRecord> {
    config.validate()?;
    let trunc = config.truncation()?;
    let motion = config.motion;
    let mode = config.observable_mode;
    let started = Instant::now();
    let mut rows = Vec::with_capacity(config.integrator.sample_count(config.t_max));
    let evolution = evolve_columns_parallel(
        &motion,
        trunc,
        &config.integrator,
        config.t_max,
        threads,
        |state| rows.push(spectrum(state, &motion, mode)),
    )?;
    let final_spectrum = particle_spectrum(&bogoliubov_frame(&evolution.state, &motion));
    Ok(RunRecord {
        format_version: format_version(),
        config: config.clone(),
        rows,
        final_spectrum,
        stats: evolution.stats,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        threads: threads.max(1),
    })
}

/// `run`: integrate and write the record to `config.output`.
pub fn cmd_run(config: &RunConfig, threads: usize) -> Result<RunRecord> {
    config.validate()?;
    let record = execute(config, threads)?;
    record.write(&config.output)?;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if value < threshold {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            value: Some(value),
            threshold: Some(threshold),
            detail: detail.into(),
        }
    }

    fn skipped(name: &str, why: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Skipped,
            value: None,
            threshold: None,
            detail: why.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Thresholds used by `verify`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    pub unitarity: f64,
    pub static_null: f64,
    pub closed_form_rms: f64,
    /// Looser bound for kind 2, whose mean length differs from `l0`.
    pub closed_form_rms_shifted: f64,
    pub short_time: f64,
    pub selection_ratio: f64,
    pub equivalence: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            unitarity: 1e-6,
            static_null: 1e-10,
            closed_form_rms: 0.02,
            closed_form_rms_shifted: 0.10,
            short_time: 0.03,
            selection_ratio: 1e-6,
            equivalence: 1e-6,
        }
    }
}

/// Largest cut-off for which `verify` runs the second-order oracle.
pub const ORACLE_MAX_KMAX: usize = 10;

/// Closed-form resonance curves apply to small-amplitude driving at `n = 1`
/// when the drive matches the mean length.
/// Returns the RMS threshold that applies, if any.
fn closed_form_threshold(config: &RunConfig, tol: &VerifyTolerances) -> Option<f64> {
    let m = &config.motion;
    if m.resonance_index != 1.0 || m.epsilon <= 0.0 || m.epsilon > 0.01 {
        return None;
    }
    match (m.kind, m.drive) {
        (MotionKind::Sine, Drive::Standard | Drive::TrueResonance) => Some(tol.closed_form_rms),
        (MotionKind::SineSquared, Drive::TrueResonance) => Some(tol.closed_form_rms_shifted),
        _ => None,
    }
}

/// Closed-form comparison of `N` and `N₁` over `τ ∈ [0.1, min(1, τ_max)]`.
pub fn closed_form_deviation(record: &RunRecord) -> Option<(f64, f64, usize)> {
    let motion = &record.config.motion;
    let window = FitWindow::slow_time(motion, 0.1, 1.0).ok()?;
    let rows: Vec<_> = record
        .rows
        .iter()
        .filter(|r| window.contains(r.t))
        .collect();
    if rows.len() < 3 {
        return None;
    }
    let tau: Vec<SlowTime> = rows.iter().map(|r| SlowTime::at(motion, r.t)).collect();
    let total: Vec<f64> = rows.iter().map(|r| r.total).collect();
    let first: Vec<f64> = rows.iter().map(|r| r.n[0]).collect();
    let ref_total: Vec<f64> = tau.iter().map(|&s| dodonov_n(s)).collect();
    let ref_first: Vec<f64> = tau.iter().map(|&s| dodonov_n1(s)).collect();
    Some((
        rms_relative_deviation(&total, &ref_total),
        rms_relative_deviation(&first, &ref_first),
        rows.len(),
    ))
}

/// `verify`: closed-form comparisons, the second-order oracle and a
/// unitarity audit, as a pass/fail report.
pub fn cmd_verify(
    config: &RunConfig,
    threads: usize,
    tol: VerifyTolerances,
) -> Result<VerifyReport> {
    config.validate()?;
    let record = execute(config, threads)?;
    let motion = &config.motion;
    let mut checks = Vec::new();

    checks.push(Check::bound(
        "unitarity",
        record.max_unitarity_defect(),
        tol.unitarity,
        "max over samples and modes of the truncated normalization defect",
    ));

    if motion.epsilon == 0.0 {
        let worst = record.rows.iter().map(|r| r.total).fold(0.0, f64::max);
        checks.push(Check::bound(
            "static_null",
            worst,
            tol.static_null,
            "largest total N",
        ));
    } else {
        checks.push(Check::skipped("static_null", "cavity is moving"));
    }

    match (
        closed_form_threshold(config, &tol),
        closed_form_deviation(&record),
    ) {
        (Some(bound), Some((dn, dn1, count))) => {
            let detail =
                format!("RMS relative deviation over {count} samples with 0.1 <= tau <= 1");
            checks.push(Check::bound("closed_form_total", dn, bound, detail.clone()));
            checks.push(Check::bound(
                "closed_form_resonance_mode",
                dn1,
                bound,
                detail,
            ));
        }
        (Some(_), None) => checks.push(Check::skipped(
            "closed_form",
            "fewer than 3 samples with 0.1 <= tau <= 1",
        )),
        (None, _) => checks.push(Check::skipped(
            "closed_form",
            "no closed form for this motion",
        )),
    }

    let tau_end = SlowTime::at(motion, config.t_max);
    let two_n = 2.0 * motion.resonance_index;
    let short = motion.kind == MotionKind::Sine
        && motion.drive == Drive::Standard
        && motion.epsilon > 0.0
        && tau_end.tau() <= 0.05
        && (two_n - two_n.round()).abs() < 1e-9;
    if short {
        let mut worst = 0.0f64;
        for (i, &n) in record.final_spectrum.n.iter().enumerate() {
            let expect = ji_short_time(i + 1, motion.resonance_index, tau_end)?;
            if expect > 0.0 {
                worst = worst.max((n - expect).abs() / expect);
            }
        }
        checks.push(Check::bound(
            "short_time_spectrum",
            worst,
            tol.short_time,
            "max relative deviation for k < 2n",
        ));
    } else {
        checks.push(Check::skipped(
            "short_time_spectrum",
            "needs kind 1, standard drive, tau <= 0.05 and integer 2n",
        ));
    }

    match (
        motion.kind,
        selection_rule_check(&record.final_spectrum, motion.resonance_index),
    ) {
        (
            MotionKind::Sine,
            SelectionRule::Checked {
                ratio,
                modes,
                max_overall,
                ..
            },
        ) if motion.drive == Drive::Standard && max_overall > 0.0 && !modes.is_empty() => {
            checks.push(Check::bound(
                "selection_rule",
                ratio,
                tol.selection_ratio,
                format!("modes {modes:?}"),
            ));
        }
        _ => checks.push(Check::skipped("selection_rule", "not applicable")),
    }

    if config.k_max <= ORACLE_MAX_KMAX {
        let t_oracle = config.t_max.min(5.0 * motion.period());
        let integ = IntegratorConfig {
            sample_interval: t_oracle / 20.0,
            ..config.integrator
        };
        let gap = oracle_gap(config, &integ, t_oracle, threads)?;
        checks.push(Check::bound(
            "second_order_equivalence",
            gap,
            tol.equivalence,
            format!("max |Δξ|, |Δη| up to t = {t_oracle}"),
        ));
    } else {
        checks.push(Check::skipped(
            "second_order_equivalence",
            format!("k_max above {ORACLE_MAX_KMAX}"),
        ));
    }

    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(VerifyReport { passed, checks })
}

/// Largest entry-wise gap between the first-order run and the second-order
/// oracle over a common sample grid.
pub fn oracle_gap(
    config: &RunConfig,
    integ: &IntegratorConfig,
    t_max: f64,
    threads: usize,
) -> Result<f64> {
    let trunc = config.truncation()?;
    let reference = second_order_reference(&config.motion, trunc, integ, t_max)?;
    let mut worst = 0.0f64;
    let mut j = 0;
    evolve_columns_parallel(&config.motion, trunc, integ, t_max, threads, |s| {
        if let Some(r) = reference.get(j) {
            worst = worst.max(s.max_abs_diff(r));
        }
        j += 1;
    })?;
    Ok(worst)
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "axis", content = "values")]
pub enum SweepAxis {
    Epsilon(Vec<f64>),
    N(Vec<f64>),
    Kind(Vec<MotionKind>),
    Drive(Vec<Drive>),
}

impl SweepAxis {
    /// Parse `name=v1,v2,...`, e.g. `epsilon=0.001,0.01` or `drive=standard,true_resonance`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, values) = spec.split_once('=').ok_or_else(|| {
            Error::invalid("axis", format!("expected name=v1,v2,..., got `{spec}`"))
        })?;
        let items: Vec<&str> = values
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::invalid("axis", format!("not a number: `{s}`")))
        };
        let axis = match name.trim() {
            "epsilon" => SweepAxis::Epsilon(items.iter().map(|s| num(s)).collect::<Result<_>>()?),
            "n" => SweepAxis::N(items.iter().map(|s| num(s)).collect::<Result<_>>()?),
            "kind" => SweepAxis::Kind(
                items
                    .iter()
                    .map(|s| {
                        s.parse::<u8>()
                            .map_err(|_| Error::invalid("axis", format!("not a kind: `{s}`")))
                            .and_then(MotionKind::try_from)
                    })
                    .collect::<Result<_>>()?,
            ),
            "drive" => SweepAxis::Drive(
                items
                    .iter()
                    .map(|s| match *s {
                        "standard" => Ok(Drive::Standard),
                        "true_resonance" => Ok(Drive::TrueResonance),
                        other => num(other).map(Drive::Explicit),
                    })
                    .collect::<Result<_>>()?,
            ),
            other => {
                return Err(Error::invalid(
                    "axis",
                    format!("unknown axis `{other}` (epsilon, n, kind, drive)"),
                ))
            }
        };
        if axis.is_empty() {
            return Err(Error::invalid("axis", "sweep axis has no values"));
        }
        Ok(axis)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Epsilon(_) => "epsilon",
            SweepAxis::N(_) => "n",
            SweepAxis::Kind(_) => "kind",
            SweepAxis::Drive(_) => "drive",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Epsilon(v) | SweepAxis::N(v) => v.len(),
            SweepAxis::Kind(v) => v.len(),
            SweepAxis::Drive(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            SweepAxis::Epsilon(v) | SweepAxis::N(v) => v[i].to_string(),
            SweepAxis::Kind(v) => v[i].index().to_string(),
            SweepAxis::Drive(v) => match v[i] {
                Drive::Standard => "standard".into(),
                Drive::TrueResonance => "true_resonance".into(),
                Drive::Explicit(w) => w.to_string(),
            },
        }
    }

    pub fn apply(&self, i: usize, template: &RunConfig) -> RunConfig {
        let mut c = template.clone();
        match self {
            SweepAxis::Epsilon(v) => c.motion.epsilon = v[i],
            SweepAxis::N(v) => c.motion.resonance_index = v[i],
            SweepAxis::Kind(v) => c.motion.kind = v[i],
            SweepAxis::Drive(v) => c.motion.drive = v[i],
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: String,
    pub dir: PathBuf,
    /// `None` on success.
    pub error: Option<String>,
    pub final_total: f64,
    pub final_energy: f64,
    pub final_n1: f64,
    pub max_unitarity_defect: f64,
    /// Linear fit of `N_total` over the second half of the run.
    pub slope: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    pub fn summary_csv(&self) -> Result<Vec<u8>> {
        let mut out = format!("# dyncav sweep v{}\n", format_version()).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "index",
                "axis",
                "value",
                "status",
                "dir",
                "N_total",
                "E",
                "N_1",
                "max_unitarity_defect",
                "slope_N_total",
                "fit_t_lo",
                "fit_t_hi",
                "error",
            ])?;
            let f = |x: f64| format!("{x:.16e}");
            for p in &self.points {
                let (slope, lo, hi) = match &p.slope {
                    Some(fit) => (f(fit.slope()), f(fit.fit_window[0]), f(fit.fit_window[1])),
                    None => (String::new(), String::new(), String::new()),
                };
                w.write_record([
                    p.index.to_string(),
                    self.axis.clone(),
                    p.value.clone(),
                    if p.error.is_some() { "error" } else { "ok" }.into(),
                    p.dir.display().to_string(),
                    f(p.final_total),
                    f(p.final_energy),
                    f(p.final_n1),
                    f(p.max_unitarity_defect),
                    slope,
                    lo,
                    hi,
                    p.error.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

fn run_point(config: &RunConfig) -> Result<(RunRecord, Option<FitResult>)> {
    let record = cmd_run(config, 1)?;
    let t = record.times();
    let total = record.column("N_total")?;
    let window = FitWindow::new(0.5 * config.t_max, config.t_max)?;
    let fit = linear_fit(&t, &total, window).ok();
    Ok((record, fit))
}

/// `sweep`: one run per axis value under `out_dir`, plus `summary.csv`.
///
/// Points run concurrently on `threads` workers. A failing point is recorded
/// in the summary and does not stop the others.
pub fn cmd_sweep(
    template: &RunConfig,
    axis: &SweepAxis,
    out_dir: &Path,
    threads: usize,
) -> Result<SweepReport> {
    if axis.is_empty() {
        return Err(Error::invalid("axis", "sweep axis has no values"));
    }
    let configs: Vec<RunConfig> = (0..axis.len())
        .map(|i| {
            let mut c = axis.apply(i, template);
            c.output = OutputPaths {
                dir: out_dir.join(format!("point-{i:03}")),
                ..template.output.clone()
            };
            c
        })
        .collect();
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let mut point = SweepPoint {
                    index: i,
                    value: axis.label(i),
                    dir: c.output.dir.clone(),
                    error: None,
                    final_total: f64::NAN,
                    final_energy: f64::NAN,
                    final_n1: f64::NAN,
                    max_unitarity_defect: f64::NAN,
                    slope: None,
                };
                match run_point(c) {
                    Ok((rec, fit)) => {
                        point.final_total = rec.final_spectrum.total;
                        point.final_energy = rec.final_spectrum.energy;
                        point.final_n1 = rec.final_spectrum.n[0];
                        point.max_unitarity_defect = rec.max_unitarity_defect();
                        point.slope = fit;
                    }
                    Err(e) => point.error = Some(e.to_string().replace('\n', " ")),
                }
                point
            })
            .collect()
    });
    let report = SweepReport {
        axis: axis.name().into(),
        points,
    };
    write_atomic(&out_dir.join("summary.csv"), &report.summary_csv()?)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePair {
    pub report: ConvergenceReport,
    pub unstable_modes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub k_max: Vec<usize>,
    pub tolerance: f64,
    pub pairs: Vec<ConvergencePair>,
    pub stable: bool,
}

/// `convergence`: run each cut-off and compare consecutive pairs.
///
/// With `out_dir`, each run is also written to `out_dir/kmax-<K>`.
pub fn cmd_convergence(
    config: &RunConfig,
    k_max: &[usize],
    tolerance: f64,
    threads: usize,
    out_dir: Option<&Path>,
) -> Result<ConvergenceSummary> {
    if k_max.len() < 2 {
        return Err(Error::invalid(
            "k_max",
            "convergence needs at least two cut-offs",
        ));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid(
            "tolerance",
            format!("must be positive, got {tolerance}"),
        ));
    }
    let mut sorted = k_max.to_vec();
    sorted.sort_unstable();
    let mut records = Vec::with_capacity(sorted.len());
    for &k in &sorted {
        let mut c = config.clone();
        c.k_max = k;
        if let Some(dir) = out_dir {
            c.output = OutputPaths {
                dir: dir.join(format!("kmax-{k}")),
                ..config.output.clone()
            };
        }
        c.validate()?;
        let rec = execute(&c, threads)?;
        if out_dir.is_some() {
            rec.write(&c.output)?;
        }
        records.push(rec);
    }
    let pairs: Vec<ConvergencePair> = records
        .windows(2)
        .map(|w| {
            convergence_compare(&w[0], &w[1]).map(|report| ConvergencePair {
                unstable_modes: report.unstable_modes(tolerance),
                report,
            })
        })
        .collect::<Result<_>>()?;
    let stable = pairs.iter().all(|p| p.unstable_modes.is_empty());
    Ok(ConvergenceSummary {
        k_max: sorted,
        tolerance,
        pairs,
        stable,
    })
}

/// Fit window selection for `fit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowSpec {
    Time(f64, f64),
    SlowTime(f64, f64),
    /// `τ ≥ 1` for lines, `t_max/10 ≤ t ≤ t_max` for power laws.
    Default,
}

/// `fit`: fit one column of a stored record.
pub fn cmd_fit(
    record_dir: &Path,
    column: &str,
    model: FitModel,
    window: WindowSpec,
) -> Result<FitResult> {
    let record = RunRecord::read_dir(record_dir)?;
    let t = record.times();
    let y = record.column(column)?;
    let motion = &record.config.motion;
    let window = match (window, model) {
        (WindowSpec::Time(lo, hi), _) => FitWindow::new(lo, hi)?,
        (WindowSpec::SlowTime(lo, hi), _) => FitWindow::slow_time(motion, lo, hi)?,
        (WindowSpec::Default, FitModel::Linear) => FitWindow::late_time(motion)?,
        (WindowSpec::Default, FitModel::PowerLaw) => {
            FitWindow::new(record.config.t_max / 10.0, record.config.t_max)?
        }
    };
    match model {
        FitModel::Linear => linear_fit(&t, &y, window),
        FitModel::PowerLaw => power_law_fit(&t, &y, window),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::CavityMotion;

    fn small(dir: &Path) -> RunConfig {
        let m = CavityMotion::new(1.0, 0.01, MotionKind::Sine, 1.0).unwrap();
        let mut c = RunConfig::new(m, 4, 4.0).with_sample_interval(0.5);
        c.output = OutputPaths::in_dir(dir);
        c
    }

    #[test]
    fn run_writes_readable_record() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(dir.path());
        let rec = cmd_run(&c, 1).unwrap();
        assert_eq!(rec.rows.len(), 9);
        assert_eq!(RunRecord::read_dir(dir.path()).unwrap(), rec);
    }

    #[test]
    fn identical_configs_give_identical_csv() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        cmd_run(&small(a.path()), 1).unwrap();
        cmd_run(&small(b.path()), 3).unwrap();
        for f in ["timeseries.csv", "spectrum.csv"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn static_verify_passes() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.motion.epsilon = 0.0;
        let report = cmd_verify(&c, 1, VerifyTolerances::default()).unwrap();
        assert!(report.passed, "{report:?}");
        let names: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::Pass)
            .map(|c| c.name.as_str())
            .collect();
        assert!(names.contains(&"static_null"));
        assert!(names.contains(&"second_order_equivalence"));
        let value = |name: &str| {
            report
                .checks
                .iter()
                .find(|c| c.name == name)
                .unwrap()
                .value
                .unwrap()
        };
        assert!(value("static_null") < 1e-14);
        assert!(value("unitarity") < 1e-14);
    }

    #[test]
    fn sweep_axis_parsing() {
        assert_eq!(
            SweepAxis::parse("epsilon=0.001,0.01").unwrap(),
            SweepAxis::Epsilon(vec![0.001, 0.01])
        );
        assert_eq!(
            SweepAxis::parse("drive=standard,true_resonance,3.5").unwrap(),
            SweepAxis::Drive(vec![
                Drive::Standard,
                Drive::TrueResonance,
                Drive::Explicit(3.5)
            ])
        );
        assert_eq!(SweepAxis::parse("kind=1,3").unwrap().len(), 2);
        assert!(SweepAxis::parse("epsilon=").is_err());
        assert!(SweepAxis::parse("kind=4").is_err());
        assert!(SweepAxis::parse("l0=1").is_err());
        assert!(SweepAxis::parse("epsilon").is_err());
    }

    #[test]
    fn sweep_reports_failed_points_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(dir.path());
        let axis = SweepAxis::Epsilon(vec![0.001, 0.7, 0.01]);
        let report = cmd_sweep(&c, &axis, dir.path(), 2).unwrap();
        assert_eq!(report.failures(), 1);
        assert!(report.points[1].error.is_some());
        assert!(report.points[2].final_total > report.points[0].final_total);
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 5);
        assert!(summary.starts_with("# dyncav sweep v1.0\nindex,axis,value,status"));
        assert!(matches!(
            cmd_sweep(&c, &SweepAxis::N(vec![]), dir.path(), 1),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn convergence_needs_two_cutoffs() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(dir.path());
        assert!(cmd_convergence(&c, &[4], 0.01, 1, None).is_err());
        let s = cmd_convergence(&c, &[6, 4, 8], 0.5, 1, None).unwrap();
        assert_eq!(s.k_max, vec![4, 6, 8]);
        assert_eq!(s.pairs.len(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config(vec![])), 2);
        assert_eq!(exit_code(&Error::NonFinite { t: 1.0 }), 3);
        assert_eq!(exit_code(&Error::StepSizeUnderflow { t: 1.0, h: 0.0 }), 3);
    }
}
