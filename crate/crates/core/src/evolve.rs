//! Time integration of the truncated `ξ/η` system from the vacuum.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityMotion;
use crate::coupling::{Frame, ModeSystem, Truncation};
use crate::error::{Error, Result};
use crate::integrator::{Dopri5, StepControl, StepStats};

/// `ξ_k^{(m)}` and `η_k^{(m)}` at time `t`.
///
/// Stored column-major: column `m` is the contiguous block
/// `[ξ_1..ξ_kmax, η_1..η_kmax]` of the excitation label `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub t: f64,
    k_max: usize,
    data: Vec<Complex64>,
}

impl EvolutionState {
    /// Vacuum initial condition: `ξ = 2·I`, `η = 0`.
    pub fn initial(trunc: Truncation) -> Self {
        let k_max = trunc.k_max();
        let mut data = vec![Complex64::default(); 2 * k_max * k_max];
        for m in 0..k_max {
            data[m * 2 * k_max + m] = Complex64::new(2.0, 0.0);
        }
        EvolutionState {
            t: 0.0,
            k_max,
            data,
        }
    }

    pub fn from_columns(t: f64, k_max: usize, data: Vec<Complex64>) -> Result<Self> {
        let expected = 2 * k_max * k_max;
        if data.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: data.len(),
            });
        }
        Ok(EvolutionState { t, k_max, data })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `ξ_k^{(m)}`, 1-based indices.
    pub fn xi(&self, k: usize, m: usize) -> Complex64 {
        self.data[(m - 1) * 2 * self.k_max + (k - 1)]
    }

    /// `η_k^{(m)}`, 1-based indices.
    pub fn eta(&self, k: usize, m: usize) -> Complex64 {
        self.data[(m - 1) * 2 * self.k_max + self.k_max + (k - 1)]
    }

    /// Column `m` (1-based) as `(ξ^{(m)}, η^{(m)})`.
    pub fn column(&self, m: usize) -> (&[Complex64], &[Complex64]) {
        let col = &self.data[(m - 1) * 2 * self.k_max..m * 2 * self.k_max];
        col.split_at(self.k_max)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest entry-wise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &EvolutionState) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dormand-Prince 5(4) with 4th-order dense output.
    #[default]
    DormandPrince54,
}

/// How column work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// One step sequence for all columns, controlled by the error over the
    /// whole state. Results do not depend on the worker count.
    #[default]
    Shared,
    /// Each column runs its own adaptive step sequence.
    PerColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed step; unlimited when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    pub sample_interval: f64,
    pub method: Method,
    pub step_mode: StepMode,
    pub frame: Frame,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: None,
            sample_interval: 1.0,
            method: Method::DormandPrince54,
            step_mode: StepMode::Shared,
            frame: Frame::Rotating,
            max_steps: 500_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            out.push(format!("rel_tol: must be positive, got {}", self.rel_tol));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            out.push(format!("abs_tol: must be positive, got {}", self.abs_tol));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                out.push(format!("max_step: must be positive, got {h}"));
            }
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            out.push(format!(
                "sample_interval: must be positive, got {}",
                self.sample_interval
            ));
        }
        if self.max_steps == 0 {
            out.push("max_steps: must be at least 1".to_string());
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

    fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            initial_step: None,
            max_steps: self.max_steps,
        }
    }

    /// Number of sample rows for a run to `t_max`: `floor(t_max / Δ) + 1`.
    pub fn sample_count(&self, t_max: f64) -> usize {
        ((t_max / self.sample_interval) * (1.0 + 1e-12)).floor() as usize + 1
    }

    fn sample_time(&self, j: usize, t_max: f64) -> f64 {
        (j as f64 * self.sample_interval).min(t_max)
    }
}

/// Final state plus integrator bookkeeping.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: EvolutionState,
    pub stats: StepStats,
}

pub fn initial_state(trunc: Truncation) -> EvolutionState {
    EvolutionState::initial(trunc)
}

fn check_horizon(t_max: f64) -> Result<()> {
    if t_max > 0.0 && t_max.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "t_max",
            format!("must be positive, got {t_max}"),
        ))
    }
}

/// Integrate from the vacuum to `t_max`, calling `on_sample` at every
/// multiple of the sample interval (interpolated from dense output).
pub fn integrate<F>(
    motion: &CavityMotion,
    trunc: Truncation,
    integ: &IntegratorConfig,
    t_max: f64,
    on_sample: F,
) -> Result<Evolution>
where
    F: FnMut(&EvolutionState),
{
    integ.validate()?;
    check_horizon(t_max)?;
    let sys = ModeSystem::new(*motion, trunc).with_frame(integ.frame);
    match integ.step_mode {
        StepMode::Shared => run_shared(&sys, integ, t_max, on_sample),
        StepMode::PerColumn => run_per_column(&sys, integ, t_max, None, on_sample),
    }
}

/// Same contract as [`integrate`], with column work spread over `threads`
/// workers. Output does not depend on `threads`.
pub fn evolve_columns_parallel<F>(
    motion: &CavityMotion,
    trunc: Truncation,
    integ: &IntegratorConfig,
    t_max: f64,
    threads: usize,
    on_sample: F,
) -> Result<Evolution>
where
    F: FnMut(&EvolutionState),
{
    integ.validate()?;
    check_horizon(t_max)?;
    if threads <= 1 {
        return integrate(motion, trunc, integ, t_max, on_sample);
    }
    let pool = Arc::new(
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?,
    );
    let sys = ModeSystem::new(*motion, trunc).with_frame(integ.frame);
    match integ.step_mode {
        StepMode::Shared => run_shared(&sys.with_pool(pool), integ, t_max, on_sample),
        StepMode::PerColumn => run_per_column(&sys, integ, t_max, Some(pool), on_sample),
    }
}

fn run_shared<F>(
    sys: &ModeSystem,
    integ: &IntegratorConfig,
    t_max: f64,
    mut on_sample: F,
) -> Result<Evolution>
where
    F: FnMut(&EvolutionState),
{
    let k_max = sys.k_max();
    let init = EvolutionState::initial(Truncation::new(k_max)?);
    let mut solver = Dopri5::new(sys, integ.step_control(), 0.0, init.data.clone());
    let samples = integ.sample_count(t_max);
    let mut buf = init;
    on_sample(&buf);
    let mut next = 1;
    while next < samples || solver.t() < t_max {
        solver.step(sys, t_max)?;
        while next < samples {
            let ts = integ.sample_time(next, t_max);
            if ts > solver.t() {
                break;
            }
            solver.interpolate(ts, &mut buf.data);
            sys.to_lab(ts, &mut buf.data);
            buf.t = ts;
            on_sample(&buf);
            next += 1;
        }
    }
    let mut data = solver.y().to_vec();
    sys.to_lab(solver.t(), &mut data);
    Ok(Evolution {
        state: EvolutionState {
            t: solver.t(),
            k_max,
            data,
        },
        stats: solver.stats(),
    })
}

fn run_per_column<F>(
    sys: &ModeSystem,
    integ: &IntegratorConfig,
    t_max: f64,
    pool: Option<Arc<rayon::ThreadPool>>,
    mut on_sample: F,
) -> Result<Evolution>
where
    F: FnMut(&EvolutionState),
{
    let k_max = sys.k_max();
    let col = 2 * k_max;
    let init = EvolutionState::initial(Truncation::new(k_max)?);
    let mut solvers: Vec<Dopri5> = init
        .data
        .chunks(col)
        .map(|c| Dopri5::new(sys, integ.step_control(), 0.0, c.to_vec()))
        .collect();
    let mut buf = init;
    on_sample(&buf);

    let advance = |solver: &mut Dopri5, out: &mut [Complex64], target: f64| -> Result<()> {
        while solver.t() < target {
            solver.step(sys, t_max)?;
        }
        solver.interpolate(target, out);
        sys.to_lab(target, out);
        Ok(())
    };

    let samples = integ.sample_count(t_max);
    let mut targets: Vec<f64> = (1..samples).map(|j| integ.sample_time(j, t_max)).collect();
    if targets.last().is_none_or(|&t| t < t_max) {
        targets.push(t_max);
    }
    for (j, &target) in targets.iter().enumerate() {
        let step_all = |solvers: &mut [Dopri5], data: &mut [Complex64]| -> Result<()> {
            match &pool {
                Some(p) => p.install(|| {
                    solvers
                        .par_iter_mut()
                        .zip(data.par_chunks_mut(col))
                        .try_for_each(|(s, out)| advance(s, out, target))
                }),
                None => solvers
                    .iter_mut()
                    .zip(data.chunks_mut(col))
                    .try_for_each(|(s, out)| advance(s, out, target)),
            }
        };
        step_all(&mut solvers, &mut buf.data)?;
        buf.t = target;
        if j + 1 < samples {
            on_sample(&buf);
        }
    }
    let stats = solvers.iter().fold(StepStats::default(), |acc, s| {
        let st = s.stats();
        StepStats {
            accepted: acc.accepted + st.accepted,
            rejected: acc.rejected + st.rejected,
            evaluations: acc.evaluations + st.evaluations,
        }
    });
    Ok(Evolution { state: buf, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::MotionKind;

    #[test]
    fn initial_state_is_twice_identity() {
        let s = initial_state(Truncation::new(3).unwrap());
        for k in 1..=3 {
            for m in 1..=3 {
                let expect = if k == m { 2.0 } else { 0.0 };
                assert_eq!(s.xi(k, m), Complex64::new(expect, 0.0));
                assert_eq!(s.eta(k, m), Complex64::default());
            }
        }
        let s1 = initial_state(Truncation::new(1).unwrap());
        assert_eq!(
            s1.as_slice(),
            &[Complex64::new(2.0, 0.0), Complex64::default()]
        );
    }

    #[test]
    fn sample_grid() {
        let cfg = IntegratorConfig {
            sample_interval: 0.1,
            ..Default::default()
        };
        assert_eq!(cfg.sample_count(1.0), 11);
        assert_eq!(cfg.sample_count(1.05), 11);
        assert_eq!(cfg.sample_count(0.05), 1);
        assert!(cfg.sample_time(10, 1.0) <= 1.0);
    }

    fn free_error(cfg: &IntegratorConfig, threads: usize) -> (f64, usize) {
        let m = CavityMotion::new(1.0, 0.0, MotionKind::Sine, 1.0).unwrap();
        let trunc = Truncation::new(4).unwrap();
        let mut worst: f64 = 0.0;
        let mut rows = 0;
        evolve_columns_parallel(&m, trunc, cfg, 3.0, threads, |s| {
            rows += 1;
            for k in 1..=4 {
                for c in 1..=4 {
                    let expect = if k == c {
                        2.0 * Complex64::new(0.0, -m.base_frequency(k) * s.t).exp()
                    } else {
                        Complex64::default()
                    };
                    worst = worst
                        .max((s.xi(k, c) - expect).norm())
                        .max(s.eta(k, c).norm());
                }
            }
        })
        .unwrap();
        (worst, rows)
    }

    #[test]
    fn static_cavity_rotates_freely() {
        let cfg = IntegratorConfig {
            sample_interval: 0.05,
            ..Default::default()
        };
        let (err, rows) = free_error(&cfg, 1);
        assert_eq!(rows, 61);
        assert!(err < 1e-13, "error {err}");
        let lab = IntegratorConfig {
            frame: Frame::Lab,
            ..cfg
        };
        let (err, _) = free_error(&lab, 1);
        assert!(err < 100.0 * cfg.rel_tol, "error {err}");
        let per_col = IntegratorConfig {
            step_mode: StepMode::PerColumn,
            ..cfg
        };
        let (err, rows) = free_error(&per_col, 3);
        assert_eq!(rows, 61);
        assert!(err < 10.0 * cfg.rel_tol, "error {err}");
    }

    #[test]
    fn frames_agree_on_a_moving_cavity() {
        let m = CavityMotion::new(1.0, 0.05, MotionKind::Sine, 1.0).unwrap();
        let trunc = Truncation::new(6).unwrap();
        let cfg = IntegratorConfig {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            ..Default::default()
        };
        let lab = IntegratorConfig {
            frame: Frame::Lab,
            ..cfg
        };
        let a = integrate(&m, trunc, &cfg, 4.0, |_| {}).unwrap();
        let b = integrate(&m, trunc, &lab, 4.0, |_| {}).unwrap();
        assert_eq!(a.state.t, 4.0);
        assert!(a.state.max_abs_diff(&b.state) < 1e-8);
        assert!(a.stats.accepted < b.stats.accepted);
    }

    #[test]
    fn rejects_bad_horizon_and_config() {
        let m = CavityMotion::stationary(1.0);
        let t = Truncation::new(2).unwrap();
        assert!(integrate(&m, t, &IntegratorConfig::default(), 0.0, |_| {}).is_err());
        let bad = IntegratorConfig {
            rel_tol: 0.0,
            sample_interval: -1.0,
            ..Default::default()
        };
        match integrate(&m, t, &bad, 1.0, |_| {}) {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
