//! Least-squares fits of time series and cut-off convergence reports.

use serde::{Deserialize, Serialize};

use crate::cavity::CavityMotion;
use crate::error::{Error, Result};
use crate::oracles::SlowTime;
use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = a t + b`.
    Linear,
    /// `y = β t^α`.
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// `[a, b]` for a line, `[β, α]` for a power law.
    pub params: [f64; 2],
    /// First and last sample time actually used.
    pub fit_window: [f64; 2],
    /// RMS of `y - fit` over the window (in `y`, not in `ln y`).
    pub residual_rms: f64,
    pub samples: usize,
}

impl FitResult {
    pub fn slope(&self) -> f64 {
        self.params[0]
    }

    pub fn intercept(&self) -> f64 {
        self.params[1]
    }

    pub fn prefactor(&self) -> f64 {
        self.params[0]
    }

    pub fn exponent(&self) -> f64 {
        self.params[1]
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.model {
            FitModel::Linear => self.params[0] * t + self.params[1],
            FitModel::PowerLaw => self.params[0] * t.powf(self.params[1]),
        }
    }
}

/// Closed time interval `[lo, hi]`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::invalid(
                "window",
                format!("need lo <= hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(FitWindow { lo, hi })
    }

    pub fn all() -> Self {
        FitWindow {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Times at which `motion` has slow time in `[tau_lo, tau_hi]`.
    pub fn slow_time(motion: &CavityMotion, tau_lo: f64, tau_hi: f64) -> Result<Self> {
        if motion.epsilon == 0.0 {
            return Err(Error::invalid(
                "window",
                "slow time is undefined for a static cavity",
            ));
        }
        FitWindow::new(
            SlowTime::time_of(motion, tau_lo),
            SlowTime::time_of(motion, tau_hi),
        )
    }

    /// The linear regime `½ ≤ τ ≤ 1`.
    pub fn linear_regime(motion: &CavityMotion) -> Result<Self> {
        FitWindow::slow_time(motion, 0.5, 1.0)
    }

    /// Late times `τ ≥ 1`, the default for asymptotic rate fits.
    pub fn late_time(motion: &CavityMotion) -> Result<Self> {
        FitWindow::slow_time(motion, 1.0, f64::INFINITY)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }
}

fn select(t: &[f64], y: &[f64], window: FitWindow) -> Result<(Vec<f64>, Vec<f64>)> {
    if t.len() != y.len() {
        return Err(Error::Dimension {
            expected: t.len(),
            actual: y.len(),
        });
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(t, _)| window.contains(**t))
        .map(|(t, y)| (*t, *y))
        .unzip();
    if ts.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 samples in [{}, {}], found {}",
            window.lo,
            window.hi,
            ts.len()
        )));
    }
    Ok((ts, ys))
}

/// Slope and intercept of the least-squares line, using centered sums.
fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= f64::EPSILON * f64::EPSILON * mx.abs().max(1.0).powi(2) * n {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

fn span(t: &[f64]) -> [f64; 2] {
    let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [lo, hi]
}

fn finish(model: FitModel, params: [f64; 2], t: Vec<f64>, y: Vec<f64>) -> FitResult {
    let mut fit = FitResult {
        model,
        params,
        fit_window: span(&t),
        residual_rms: 0.0,
        samples: t.len(),
    };
    let ss: f64 = t
        .iter()
        .zip(&y)
        .map(|(t, y)| (y - fit.eval(*t)).powi(2))
        .sum();
    fit.residual_rms = (ss / t.len() as f64).sqrt();
    fit
}

/// Least-squares `y = a t + b` over the samples inside `window`.
pub fn linear_fit(t: &[f64], y: &[f64], window: FitWindow) -> Result<FitResult> {
    let (ts, ys) = select(t, y, window)?;
    let (a, b) = least_squares(&ts, &ys)?;
    Ok(finish(FitModel::Linear, [a, b], ts, ys))
}

/// Unweighted log-log least squares for `y = β t^α`.
pub fn power_law_fit(t: &[f64], y: &[f64], window: FitWindow) -> Result<FitResult> {
    let (ts, ys) = select(t, y, window)?;
    if let Some((t, y)) = ts.iter().zip(&ys).find(|(t, y)| !(**t > 0.0 && **y > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "power law needs t > 0 and y > 0, got y({t}) = {y}"
        )));
    }
    let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (alpha, ln_beta) = least_squares(&lt, &ly)?;
    Ok(finish(FitModel::PowerLaw, [ln_beta.exp(), alpha], ts, ys))
}

/// `sqrt(mean(((v - r) / r)²))` over pairs with `r ≠ 0`.
pub fn rms_relative_deviation(values: &[f64], reference: &[f64]) -> f64 {
    let (sum, count) = values
        .iter()
        .zip(reference)
        .filter(|(_, r)| **r != 0.0)
        .fold((0.0, 0usize), |(s, c), (v, r)| {
            (s + ((v - r) / r).powi(2), c + 1)
        });
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Modes whose particle number is below this fraction of the largest one are
/// compared against that floor instead of against themselves.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDeviation {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub k_max_a: usize,
    pub k_max_b: usize,
    /// One entry per mode `1..=min(k_max_a, k_max_b)`.
    pub modes: Vec<ModeDeviation>,
    pub max_deviation: f64,
    /// Modes `k ≤ ⌈k_small / 2⌉`, away from the smaller cut-off; all modes
    /// when the cut-offs are equal.
    pub checked_modes: usize,
    pub max_checked_deviation: f64,
}

impl ConvergenceReport {
    /// Checked modes whose relative deviation exceeds `tolerance`.
    pub fn unstable_modes(&self, tolerance: f64) -> Vec<usize> {
        self.modes[..self.checked_modes]
            .iter()
            .filter(|d| d.relative_deviation > tolerance)
            .map(|d| d.k)
            .collect()
    }

    /// Largest deviation among checked modes holding at least `fraction` of
    /// the peak occupation, and how many such modes there are.
    pub fn max_significant_deviation(&self, fraction: f64) -> (f64, usize) {
        let peak = self
            .modes
            .iter()
            .fold(0.0f64, |m, d| m.max(d.a.abs()).max(d.b.abs()));
        self.modes[..self.checked_modes]
            .iter()
            .filter(|d| d.a.abs().max(d.b.abs()) >= fraction * peak)
            .fold((0.0f64, 0), |(m, c), d| {
                (m.max(d.relative_deviation), c + 1)
            })
    }
}

/// Per-mode relative deviation `|a - b| / max(a, b, floor)` of the final
/// spectra of two runs that differ only in their cut-off.
pub fn convergence_compare(a: &RunRecord, b: &RunRecord) -> Result<ConvergenceReport> {
    if !a.config.same_except_cutoff(&b.config) {
        return Err(Error::Incompatible(
            "runs differ in more than the cut-off k_max".into(),
        ));
    }
    let (na, nb) = (&a.final_spectrum.n, &b.final_spectrum.n);
    let common = na.len().min(nb.len());
    let gap = na.len().abs_diff(nb.len());
    let peak = na[..common]
        .iter()
        .chain(&nb[..common])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = RELATIVE_FLOOR * peak;
    let modes: Vec<ModeDeviation> = (0..common)
        .map(|i| {
            let scale = na[i].abs().max(nb[i].abs()).max(floor);
            let dev = if scale > 0.0 {
                (na[i] - nb[i]).abs() / scale
            } else {
                0.0
            };
            ModeDeviation {
                k: i + 1,
                a: na[i],
                b: nb[i],
                relative_deviation: dev,
            }
        })
        .collect();
    let checked = if gap == 0 { common } else { common.div_ceil(2) };
    let max_of = |m: &[ModeDeviation]| m.iter().map(|d| d.relative_deviation).fold(0.0, f64::max);
    Ok(ConvergenceReport {
        k_max_a: na.len(),
        k_max_b: nb.len(),
        max_deviation: max_of(&modes),
        max_checked_deviation: max_of(&modes[..checked]),
        checked_modes: checked,
        modes,
    })
}
