//! Bogoliubov coefficients and particle numbers.
//!
//! At a time `t1` the instantaneous cavity length `l1 = l(t1)` defines the
//! final-state frequencies `Ω_n¹ = nπ / l1`. The transformation to the final
//! particle basis uses
//!
//! ```text
//! Δ± = ½ (1 ± l1 / l0)
//! Ξ = Δ⁺ ξ + Δ⁻ η,   H = Δ⁻ ξ + Δ⁺ η
//! N_n = ¼ Σ_m (Ω_n¹ / Ω_m⁰) |H_n^{(m)}|²
//! ```
//!
//! Evaluating this while the wall is still moving treats `l(t1)` as if the
//! motion stopped at `t1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityMotion;
use crate::evolve::EvolutionState;

#[derive(Debug, Clone)]
pub struct BogoliubovFrame {
    pub t1: f64,
    pub k_max: usize,
    /// `Ξ_n^{(m)}`, column-major like [`EvolutionState`] (column `m` contiguous).
    pub big_xi: Vec<Complex64>,
    /// `H_n^{(m)}`, same layout.
    pub big_eta: Vec<Complex64>,
    /// `Ω_m⁰`, index `m - 1`.
    pub omega0: Vec<f64>,
    /// `Ω_n¹`, index `n - 1`.
    pub omega1: Vec<f64>,
    pub delta_plus: f64,
    pub delta_minus: f64,
}

impl BogoliubovFrame {
    pub fn big_xi(&self, n: usize, m: usize) -> Complex64 {
        self.big_xi[(m - 1) * self.k_max + (n - 1)]
    }

    pub fn big_eta(&self, n: usize, m: usize) -> Complex64 {
        self.big_eta[(m - 1) * self.k_max + (n - 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpectrum {
    pub t: f64,
    /// `N_n`, index `n - 1`.
    pub n: Vec<f64>,
    pub total: f64,
    pub energy: f64,
    pub unitarity_defect: f64,
}

impl ParticleSpectrum {
    /// `E = Σ Ω_n¹ N_n`, recomputed from the stored spectrum.
    pub fn energy_from(&self, omega1: &[f64]) -> f64 {
        self.n.iter().zip(omega1).map(|(n, w)| n * w).sum()
    }
}

/// How spectra are formed from a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservableMode {
    /// Full transformation at every sample, with the instantaneous `l(t)`.
    #[default]
    EverySample,
    /// Only at whole periods, where `l = l0` and `H = η`.
    WholePeriod,
}

pub fn bogoliubov_frame(state: &EvolutionState, motion: &CavityMotion) -> BogoliubovFrame {
    let k_max = state.k_max();
    let l1 = motion.length(state.t);
    let delta_plus = 0.5 * (1.0 + l1 / motion.l0);
    let delta_minus = 0.5 * (1.0 - l1 / motion.l0);
    let mut big_xi = Vec::with_capacity(k_max * k_max);
    let mut big_eta = Vec::with_capacity(k_max * k_max);
    for m in 1..=k_max {
        let (xi, eta) = state.column(m);
        for (x, e) in xi.iter().zip(eta) {
            big_xi.push(delta_plus * x + delta_minus * e);
            big_eta.push(delta_minus * x + delta_plus * e);
        }
    }
    BogoliubovFrame {
        t1: state.t,
        k_max,
        big_xi,
        big_eta,
        omega0: (1..=k_max).map(|m| motion.base_frequency(m)).collect(),
        omega1: (1..=k_max)
            .map(|n| n as f64 * std::f64::consts::PI / l1)
            .collect(),
        delta_plus,
        delta_minus,
    }
}

/// Spectrum, totals, energy and unitarity defect in one pass over the frame.
pub fn particle_spectrum(frame: &BogoliubovFrame) -> ParticleSpectrum {
    spectrum_from(
        frame.t1,
        frame.k_max,
        &frame.big_xi,
        &frame.big_eta,
        &frame.omega0,
        &frame.omega1,
    )
}

fn spectrum_from(
    t: f64,
    k_max: usize,
    big_xi: &[Complex64],
    big_eta: &[Complex64],
    omega0: &[f64],
    omega1: &[f64],
) -> ParticleSpectrum {
    let mut beta = vec![0.0; k_max];
    let mut alpha = vec![0.0; k_max];
    for m in 0..k_max {
        let inv = 1.0 / omega0[m];
        let col = m * k_max..(m + 1) * k_max;
        for (n, (x, e)) in big_xi[col.clone()].iter().zip(&big_eta[col]).enumerate() {
            alpha[n] += inv * x.norm_sqr();
            beta[n] += inv * e.norm_sqr();
        }
    }
    let mut n_out = Vec::with_capacity(k_max);
    let (mut total, mut energy, mut defect) = (0.0, 0.0, 0.0f64);
    for n in 0..k_max {
        let w = omega1[n];
        let count = 0.25 * w * beta[n];
        n_out.push(count);
        total += count;
        energy += w * count;
        defect = defect.max((0.25 * w * (alpha[n] - beta[n]) - 1.0).abs());
    }
    ParticleSpectrum {
        t,
        n: n_out,
        total,
        energy,
        unitarity_defect: defect,
    }
}

/// Spectrum straight from `(ξ, η)`, i.e. with `Δ⁺ = 1`, `Δ⁻ = 0` and `Ω¹ = Ω⁰`.
///
/// Exact at whole periods of the motion, where `l(t) = l0`.
pub fn whole_period_spectrum(state: &EvolutionState, motion: &CavityMotion) -> ParticleSpectrum {
    let k_max = state.k_max();
    let mut xi = Vec::with_capacity(k_max * k_max);
    let mut eta = Vec::with_capacity(k_max * k_max);
    for m in 1..=k_max {
        let (x, e) = state.column(m);
        xi.extend_from_slice(x);
        eta.extend_from_slice(e);
    }
    let omega0: Vec<f64> = (1..=k_max).map(|m| motion.base_frequency(m)).collect();
    spectrum_from(state.t, k_max, &xi, &eta, &omega0, &omega0)
}

pub fn spectrum(
    state: &EvolutionState,
    motion: &CavityMotion,
    mode: ObservableMode,
) -> ParticleSpectrum {
    match mode {
        ObservableMode::EverySample => particle_spectrum(&bogoliubov_frame(state, motion)),
        ObservableMode::WholePeriod => whole_period_spectrum(state, motion),
    }
}

/// Outcome of checking the `k = 2np` selection rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SelectionRule {
    /// `2n` is not a positive integer, so the rule does not apply.
    NotApplicable,
    Checked {
        /// Modes `2np` inside the cut-off.
        modes: Vec<usize>,
        max_suppressed: f64,
        max_overall: f64,
        /// `max_suppressed / max_overall`, zero when nothing was created.
        ratio: f64,
    },
}

pub fn selection_rule_check(spectrum: &ParticleSpectrum, resonance_index: f64) -> SelectionRule {
    let two_n = 2.0 * resonance_index;
    let step = two_n.round();
    if !(step >= 1.0 && (two_n - step).abs() < 1e-9) {
        return SelectionRule::NotApplicable;
    }
    let step = step as usize;
    let k_max = spectrum.n.len();
    let modes: Vec<usize> = (1..)
        .map(|p| p * step)
        .take_while(|&k| k <= k_max)
        .collect();
    let max_suppressed = modes.iter().map(|&k| spectrum.n[k - 1]).fold(0.0, f64::max);
    let max_overall = spectrum.n.iter().copied().fold(0.0, f64::max);
    let ratio = if max_overall > 0.0 {
        max_suppressed / max_overall
    } else {
        0.0
    };
    SelectionRule::Checked {
        modes,
        max_suppressed,
        max_overall,
        ratio,
    }
}
