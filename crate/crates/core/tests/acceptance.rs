//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Positional arguments filter criteria by name. `--include-ignored` (or
//! `--ignored`) adds the full-scale asymptotic-rate run, which takes about
//! half an hour on one core.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use dyncav::analysis::{
    convergence_compare, linear_fit, power_law_fit, rms_relative_deviation, FitWindow,
};
use dyncav::cavity::{CavityMotion, Drive, MotionKind};
use dyncav::commands::{execute, oracle_gap};
use dyncav::config::{preset, RunConfig};
use dyncav::evolve::{IntegratorConfig, StepMode};
use dyncav::observables::{selection_rule_check, SelectionRule};
use dyncav::oracles::{dodonov_energy, dodonov_n, dodonov_n1, dodonov_rate, SlowTime};
use dyncav::record::RunRecord;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

/// One bound checked inside a criterion.
struct Check {
    what: String,
    pass: bool,
}

fn within(what: &str, value: f64, target: f64, rel: f64) -> Check {
    let dev = (value - target).abs() / target.abs();
    Check {
        what: format!(
            "{what} = {value:.5e} vs {target:.5e} ({:.2}% <= {:.0}%)",
            100.0 * dev,
            100.0 * rel
        ),
        pass: dev <= rel,
    }
}

fn below(what: &str, value: f64, bound: f64) -> Check {
    Check {
        what: format!("{what} = {value:.3e} < {bound:.0e}"),
        pass: value < bound,
    }
}

fn above(what: &str, value: f64, bound: f64) -> Check {
    Check {
        what: format!("{what} = {value:.3e} > {bound:.2}"),
        pass: value > bound,
    }
}

fn inside(what: &str, value: f64, lo: f64, hi: f64) -> Check {
    Check {
        what: format!("{what} = {value:.5} in [{lo:.5}, {hi:.5}]"),
        pass: (lo..=hi).contains(&value),
    }
}

/// Runs shared between criteria, plus every unitarity defect seen.
struct Runs {
    defects: Vec<(String, f64)>,
    cache: Vec<(String, RunRecord)>,
}

impl Runs {
    fn get(&mut self, label: &str, config: impl FnOnce() -> RunConfig) -> Res<&RunRecord> {
        if let Some(i) = self.cache.iter().position(|(l, _)| l == label) {
            return Ok(&self.cache[i].1);
        }
        let started = Instant::now();
        let record = execute(&config(), 1)?;
        eprintln!("    [{label}: {:.1} s]", started.elapsed().as_secs_f64());
        self.defects
            .push((label.to_owned(), record.max_unitarity_defect()));
        self.cache.push((label.to_owned(), record));
        Ok(&self.cache.last().expect("just pushed").1)
    }
}

fn motion(l0: f64, epsilon: f64, kind: MotionKind, n: f64, drive: Drive) -> CavityMotion {
    CavityMotion::new(l0, epsilon, kind, n)
        .and_then(|m| m.with_drive(drive))
        .expect("valid motion")
}

fn config(m: CavityMotion, k_max: usize, t_max: f64, dt: f64) -> RunConfig {
    RunConfig::new(m, k_max, t_max).with_sample_interval(dt)
}

fn short_config(n: f64, k_max: usize) -> RunConfig {
    config(
        motion(0.1, 1e-5, MotionKind::Sine, n, Drive::Standard),
        k_max,
        250.0,
        5.0,
    )
}

fn fig4() -> RunConfig {
    preset("fig4").expect("preset").config
}

fn rows_in(
    record: &RunRecord,
    tau_lo: f64,
    tau_hi: f64,
) -> Vec<(SlowTime, &dyncav::observables::ParticleSpectrum)> {
    let m = &record.config.motion;
    record
        .rows
        .iter()
        .map(|r| (SlowTime::at(m, r.t), r))
        .filter(|(s, _)| (tau_lo..=tau_hi).contains(&s.tau()))
        .collect()
}

fn rms_against(
    rows: &[(SlowTime, &dyncav::observables::ParticleSpectrum)],
    value: impl Fn(&dyncav::observables::ParticleSpectrum) -> f64,
    oracle: impl Fn(SlowTime) -> f64,
) -> f64 {
    let v: Vec<f64> = rows.iter().map(|(_, r)| value(r)).collect();
    let o: Vec<f64> = rows.iter().map(|(s, _)| oracle(*s)).collect();
    rms_relative_deviation(&v, &o)
}

fn criterion_1(runs: &mut Runs) -> Res<Vec<Check>> {
    let r = runs.get("fig2-short", || {
        preset("fig2-short").expect("preset").config
    })?;
    Ok(vec![within(
        "N_1(250)",
        r.final_spectrum.n[0],
        1.542e-3,
        0.01,
    )])
}

fn criterion_2(runs: &mut Runs) -> Res<Vec<Check>> {
    let a = runs
        .get("n=1.5", || short_config(1.5, 15))?
        .final_spectrum
        .n
        .clone();
    let mut checks = vec![
        within("n=1.5 N_1", a[0], 3.084e-3, 0.01),
        within("n=1.5 N_2", a[1], 3.084e-3, 0.01),
        below("n=1.5 |N_1-N_2|/N_1", (a[0] - a[1]).abs() / a[0], 0.01),
    ];
    let b = runs
        .get("n=2", || short_config(2.0, 15))?
        .final_spectrum
        .n
        .clone();
    checks.push(within("n=2 N_2/N_1", b[1] / b[0], 4.0 / 3.0, 0.03));
    let tail = b[3..].iter().copied().fold(0.0, f64::max);
    checks.push(below("n=2 max_{k>=4} N_k / N_1", tail / b[0], 1e-2));
    Ok(checks)
}

fn criterion_3(runs: &mut Runs) -> Res<Vec<Check>> {
    let r = runs.get("fig4", fig4)?;
    let rows = rows_in(r, 0.1, 0.78);
    Ok(vec![
        below(
            "RMS rel. N vs closed form",
            rms_against(&rows, |s| s.total, dodonov_n),
            0.03,
        ),
        below(
            "RMS rel. N_1 vs closed form",
            rms_against(&rows, |s| s.n[0], dodonov_n1),
            0.03,
        ),
        Check {
            what: format!("{} samples with 0.1 <= tau <= 0.78", rows.len()),
            pass: rows.len() > 100,
        },
    ])
}

fn rate_checks(r: &RunRecord, widen: f64) -> Res<Vec<Check>> {
    let m = &r.config.motion;
    let t = r.times();
    let window = FitWindow::late_time(m)?;
    let a3 = linear_fit(&t, &r.column("N_3")?, window)?;
    let a5 = linear_fit(&t, &r.column("N_5")?, window)?;
    let (lo3, hi3) = (0.0040 * (1.0 - widen), 0.0044 * (1.0 + widen));
    let (lo5, hi5) = (0.0024 * (1.0 - widen), 0.0027 * (1.0 + widen));
    Ok(vec![
        inside("a_3", a3.slope(), lo3, hi3),
        inside("a_5", a5.slope(), lo5, hi5),
        Check {
            what: format!(
                "closed-form rates {:.5}, {:.5}; fit window t in [{:.2}, {:.2}]",
                dodonov_rate(3, m.epsilon)?,
                dodonov_rate(5, m.epsilon)?,
                a3.fit_window[0],
                a3.fit_window[1]
            ),
            pass: true,
        },
    ])
}

fn fig5(k_max: usize, t_max: f64) -> RunConfig {
    let mut c = preset("fig5").expect("preset").config;
    c.k_max = k_max;
    c.t_max = t_max;
    c
}

fn criterion_4(runs: &mut Runs) -> Res<Vec<Check>> {
    rate_checks(runs.get("fig5 reduced", || fig5(60, 80.0))?, 0.10)
}

fn criterion_4_full(runs: &mut Runs) -> Res<Vec<Check>> {
    rate_checks(runs.get("fig5", || fig5(110, 100.0))?, 0.0)
}

fn criterion_5(runs: &mut Runs) -> Res<Vec<Check>> {
    let r = runs.get("fig4", fig4)?;
    let omega1 = PI / r.config.motion.l0;
    let rows = rows_in(r, 0.1, 0.78);
    let mut checks = vec![below(
        "RMS rel. E vs closed form",
        rms_against(&rows, |s| s.energy, |tau| dodonov_energy(tau, omega1)),
        0.05,
    )];
    let k2 = runs.get("kind 2 eps=0.001", || {
        config(
            motion(1.0, 0.001, MotionKind::SineSquared, 1.0, Drive::Standard),
            20,
            300.0,
            0.5,
        )
    })?;
    let window = FitWindow::new(k2.config.t_max / 10.0, k2.config.t_max)?;
    let fit = power_law_fit(&k2.times(), &k2.column("E")?, window)?;
    checks.push(inside("kind 2 energy exponent", fit.exponent(), 1.9, 2.1));
    Ok(checks)
}

fn fig14(k_max: usize) -> RunConfig {
    let mut c = preset("fig14").expect("preset").config;
    c.k_max = k_max;
    c.t_max = 1600.0;
    c
}

fn criterion_6(runs: &mut Runs) -> Res<Vec<Check>> {
    let r = runs.get("fig14 k=70", || fig14(70))?;
    let m = &r.config.motion;
    let fit = linear_fit(
        &r.times(),
        &r.column("N_total")?,
        FitWindow::linear_regime(m)?,
    )?;
    Ok(vec![within(
        "slope over 1/2 <= tau <= 1",
        fit.slope(),
        m.epsilon / m.l0,
        0.10,
    )])
}

fn criterion_7(runs: &mut Runs) -> Res<Vec<Check>> {
    let tr = runs.get("kind 2 true resonance", || {
        let m = motion(
            1.0,
            0.01,
            MotionKind::SineSquared,
            1.0,
            Drive::TrueResonance,
        );
        config(m, 40, SlowTime::time_of(&m, 1.0).ceil(), 0.5)
    })?;
    let rows = rows_in(tr, 0.1, 1.0);
    let mut checks = vec![below(
        "true resonance RMS rel. N vs closed form",
        rms_against(&rows, |s| s.total, dodonov_n),
        0.10,
    )];
    let st = runs.get("kind 2 standard", || {
        let m = motion(1.0, 0.01, MotionKind::SineSquared, 1.0, Drive::Standard);
        config(m, 50, SlowTime::time_of(&m, 1.5).ceil(), 0.5)
    })?;
    let t15 = SlowTime::time_of(&st.config.motion, 1.5);
    let row = st
        .rows
        .iter()
        .min_by(|a, b| (a.t - t15).abs().total_cmp(&(b.t - t15).abs()))
        .expect("rows");
    let expect = dodonov_n(SlowTime::at(&st.config.motion, row.t));
    checks.push(above(
        "standard drive |N - closed form| / closed form at tau = 1.5",
        (row.total - expect).abs() / expect,
        0.25,
    ));
    Ok(checks)
}

fn criterion_8(runs: &mut Runs) -> Res<Vec<Check>> {
    let n = &runs.get("fig4", fig4)?.final_spectrum.n;
    let even = n.iter().skip(1).step_by(2).copied().fold(0.0, f64::max);
    let odd = n.iter().step_by(2).copied().fold(0.0, f64::max);
    let mut checks = vec![below("n=1 max even / max odd", even / odd, 1e-6)];
    let s = runs
        .get("n=2", || short_config(2.0, 15))?
        .final_spectrum
        .clone();
    match selection_rule_check(&s, 2.0) {
        SelectionRule::Checked { modes, ratio, .. } => checks.push(below(
            &format!("n=2 max over modes {modes:?} / max overall"),
            ratio,
            1e-6,
        )),
        SelectionRule::NotApplicable => checks.push(Check {
            what: "n=2 selection rule not applicable".into(),
            pass: false,
        }),
    }
    Ok(checks)
}

fn criterion_9(runs: &mut Runs) -> Res<Vec<Check>> {
    let mut checks = Vec::new();

    let static_run = execute(&config(CavityMotion::stationary(1.0), 15, 20.0, 0.5), 1)?;
    let null = static_run.rows.iter().map(|r| r.total).fold(0.0, f64::max);
    checks.push(below("static cavity max N", null, 1e-10));
    runs.defects
        .push(("static".into(), static_run.max_unitarity_defect()));

    let mut gap = 0.0f64;
    for kind in [
        MotionKind::Sine,
        MotionKind::SineSquared,
        MotionKind::SineCubed,
    ] {
        let m = motion(1.0, 0.01, kind, 1.0, Drive::Standard);
        let t = 5.0 * m.period();
        let c = config(m, 5, t, t / 20.0);
        let integ = IntegratorConfig {
            sample_interval: t / 20.0,
            ..c.integrator
        };
        gap = gap.max(oracle_gap(&c, &integ, t, 1)?);
    }
    checks.push(below(
        "first/second order gap, k_max=5, five periods, kinds 1-3",
        gap,
        1e-6,
    ));

    let mut shared = config(
        motion(1.0, 0.01, MotionKind::Sine, 1.0, Drive::Standard),
        24,
        10.0,
        0.5,
    );
    shared.integrator.step_mode = StepMode::Shared;
    let serial = execute(&shared, 1)?;
    let parallel = execute(&shared, 4)?;
    let identical = serial.timeseries_csv()? == parallel.timeseries_csv()?
        && serial.spectrum_csv()? == parallel.spectrum_csv()?;
    checks.push(Check {
        what: format!("serial/parallel CSV bit-identity (1 vs 4 workers): {identical}"),
        pass: identical,
    });

    let small = runs
        .get("fig2-short k=10", || {
            let mut c = preset("fig2-short").expect("preset").config;
            c.k_max = 10;
            c
        })?
        .clone();
    let large = runs.get("fig2-short", || {
        preset("fig2-short").expect("preset").config
    })?;
    let rep = convergence_compare(&small, large)?;
    checks.push(below(
        &format!("fig2 cut-offs 10/15, all modes k <= {}", rep.checked_modes),
        rep.max_checked_deviation,
        0.01,
    ));
    let small = runs.get("fig14 k=60", || fig14(60))?.clone();
    let large = runs.get("fig14 k=70", || fig14(70))?;
    let rep = convergence_compare(&small, large)?;
    let (dev, count) = rep.max_significant_deviation(SIGNIFICANT);
    checks.push(below(
        &format!(
            "fig14 cut-offs 60/70, {count} modes k <= {} above {SIGNIFICANT:.0e} of peak (all checked modes: {:.3e})",
            rep.checked_modes, rep.max_checked_deviation
        ),
        dev,
        0.05,
    ));

    let (worst_label, worst) = runs
        .defects
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap_or_default();
    checks.push(below(
        &format!(
            "max unitarity defect over {} runs (worst: {worst_label})",
            runs.defects.len()
        ),
        worst,
        1e-6,
    ));
    Ok(checks)
}

/// Modes below this fraction of the peak occupation are left out of the
/// fig14 cut-off check.
const SIGNIFICANT: f64 = 1e-4;

type Criterion = fn(&mut Runs) -> Res<Vec<Check>>;

const CRITERIA: &[(&str, &str, Criterion, bool)] = &[
    (
        "criterion_1_short_time_resonance",
        "short-time resonance value",
        criterion_1,
        false,
    ),
    (
        "criterion_2_short_time_spectrum",
        "short-time spectrum for n = 1.5, 2",
        criterion_2,
        false,
    ),
    (
        "criterion_3_elliptic_tracking",
        "closed-form tracking of N and N_1",
        criterion_3,
        false,
    ),
    (
        "criterion_4_asymptotic_rates_reduced",
        "asymptotic rates (k_max=60, t<=80, bounds +-10%)",
        criterion_4,
        false,
    ),
    (
        "criterion_4_asymptotic_rates_full",
        "asymptotic rates (k_max=110, t<=100)",
        criterion_4_full,
        true,
    ),
    (
        "criterion_5_energy_law",
        "energy law and kind 2 exponent",
        criterion_5,
        false,
    ),
    (
        "criterion_6_kind2_linear_regime",
        "kind 2 linear regime slope",
        criterion_6,
        false,
    ),
    (
        "criterion_7_true_resonance",
        "true resonance drive",
        criterion_7,
        false,
    ),
    (
        "criterion_8_selection_rule",
        "selection rule",
        criterion_8,
        false,
    ),
    (
        "criterion_9_structural",
        "structural properties",
        criterion_9,
        false,
    ),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (name, ..) in CRITERIA {
            println!("{name}: test");
        }
        return ExitCode::SUCCESS;
    }
    let include_ignored = args
        .iter()
        .any(|a| a == "--include-ignored" || a == "--ignored");
    let filters: Vec<&str> = args
        .iter()
        .filter(|a| !a.starts_with('-'))
        .map(String::as_str)
        .collect();
    let mut runs = Runs {
        defects: Vec::new(),
        cache: Vec::new(),
    };
    let mut failed = 0;
    for &(name, title, run, ignored) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f)) {
            continue;
        }
        if ignored && !include_ignored {
            println!("IGNORED {name}: {title} (pass --include-ignored to run)");
            continue;
        }
        let started = Instant::now();
        let (pass, detail) = match run(&mut runs) {
            Ok(checks) => (
                checks.iter().all(|c| c.pass),
                checks
                    .iter()
                    .map(|c| format!("{}{}", if c.pass { "" } else { "FAILED " }, c.what))
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {title} [{:.0} s]\n    {detail}",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
