//! Prescribed mirror trajectories `l(t) = l0 (1 + ε δ_k(t))`.
//!
//! Three vibration profiles are supported, all normalized so that the
//! excursion `max l - min l` over one period equals `2 ε l0`:
//!
//! | kind | `δ(t)`                 |
//! |------|------------------------|
//! | 1    | `sin(ω t)`             |
//! | 2    | `2 sin²(ω t / 2)`      |
//! | 3    | `sin³(ω t)`            |
//!
//! where `ω = ω_cav` is the cavity (drive) frequency. Kind 2 is written with
//! the half-angle so that all kinds share the period `T = 2π / ω_cav`.
//! Natural units (`ħ = c = 1`) are used throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the amplitude; keeps `l(t) >= l0 / 2` for every kind.
pub const MAX_EPSILON: f64 = 0.5;

/// Shape of the wall vibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum MotionKind {
    /// `δ₁ = sin(ω t)`: starts with non-zero velocity.
    Sine,
    /// `δ₂ = 1 - cos(ω t)`: starts at rest.
    SineSquared,
    /// `δ₃ = sin³(ω t)`.
    SineCubed,
}

impl MotionKind {
    pub fn index(self) -> u8 {
        match self {
            MotionKind::Sine => 1,
            MotionKind::SineSquared => 2,
            MotionKind::SineCubed => 3,
        }
    }

    /// Normalization `a_k`: 1 for odd kinds, 2 for even kinds.
    pub fn amplitude_factor(self) -> f64 {
        match self {
            MotionKind::SineSquared => 2.0,
            MotionKind::Sine | MotionKind::SineCubed => 1.0,
        }
    }
}

impl TryFrom<u8> for MotionKind {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        match k {
            1 => Ok(MotionKind::Sine),
            2 => Ok(MotionKind::SineSquared),
            3 => Ok(MotionKind::SineCubed),
            _ => Err(Error::invalid(
                "kind",
                format!("must be 1, 2 or 3, got {k}"),
            )),
        }
    }
}

impl From<MotionKind> for u8 {
    fn from(k: MotionKind) -> u8 {
        k.index()
    }
}

/// Selects the cavity frequency `ω_cav`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// `ω_cav = 2 Ω_n⁰ = 2nπ / l0`.
    Standard,
    /// `ω_cav = 2nπ / l̄`, twice the mode frequency at the mean length.
    TrueResonance,
    /// A user supplied `ω_cav`.
    Explicit(f64),
}

/// Cavity trajectory parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMotion {
    pub l0: f64,
    pub epsilon: f64,
    pub kind: MotionKind,
    /// Resonance index `n`; may be non-integer.
    #[serde(rename = "n")]
    pub resonance_index: f64,
    #[serde(default = "default_drive")]
    pub drive: Drive,
}

fn default_drive() -> Drive {
    Drive::Standard
}

/// Trajectory and its exact derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub l: f64,
    pub l_dot: f64,
    pub l_ddot: f64,
    /// `l_dot / l`
    pub gamma: f64,
    /// `d/dt (l_dot / l) = l_ddot / l - gamma²`
    pub gamma_dot: f64,
}

impl CavityMotion {
    pub fn new(l0: f64, epsilon: f64, kind: MotionKind, resonance_index: f64) -> Result<Self> {
        let motion = CavityMotion {
            l0,
            epsilon,
            kind,
            resonance_index,
            drive: Drive::Standard,
        };
        motion.validate()?;
        Ok(motion)
    }

    pub fn with_drive(mut self, drive: Drive) -> Result<Self> {
        self.drive = drive;
        self.validate()?;
        Ok(self)
    }

    /// A cavity at rest with length `l0`.
    pub fn stationary(l0: f64) -> Self {
        CavityMotion {
            l0,
            epsilon: 0.0,
            kind: MotionKind::Sine,
            resonance_index: 1.0,
            drive: Drive::Standard,
        }
    }

    /// All violated constraints, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.l0.is_finite() && self.l0 > 0.0) {
            out.push(format!("l0: must be positive and finite, got {}", self.l0));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < MAX_EPSILON) {
            out.push(format!(
                "epsilon: must lie in [0, {MAX_EPSILON}), got {}",
                self.epsilon
            ));
        }
        if !(self.resonance_index.is_finite() && self.resonance_index > 0.0) {
            out.push(format!(
                "n: must be positive and finite, got {}",
                self.resonance_index
            ));
        }
        if let Drive::Explicit(w) = self.drive {
            if !(w.is_finite() && w > 0.0) {
                out.push(format!(
                    "drive: explicit frequency must be positive, got {w}"
                ));
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

    /// Unperturbed mode frequency `Ω_k⁰ = kπ / l0`.
    pub fn base_frequency(&self, k: usize) -> f64 {
        k as f64 * PI / self.l0
    }

    /// Cavity frequency `ω_cav`.
    pub fn drive_frequency(&self) -> f64 {
        let n = self.resonance_index;
        match self.drive {
            Drive::Standard => 2.0 * n * PI / self.l0,
            Drive::TrueResonance => 2.0 * n * PI / self.mean_length(),
            Drive::Explicit(w) => w,
        }
    }

    /// Period `T = 2π / ω_cav` of `l(t)`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.drive_frequency()
    }

    pub fn is_static(&self) -> bool {
        self.epsilon == 0.0
    }

    /// `δ(t)` and its first two derivatives.
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        let w = self.drive_frequency();
        let (s, c) = (w * t).sin_cos();
        match self.kind {
            MotionKind::Sine => (s, w * c, -w * w * s),
            MotionKind::SineSquared => (1.0 - c, w * s, w * w * c),
            MotionKind::SineCubed => (
                s * s * s,
                3.0 * w * s * s * c,
                3.0 * w * w * s * (2.0 * c * c - s * s),
            ),
        }
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        let (d, dd, ddd) = self.profile(t);
        let l = self.l0 * (1.0 + self.epsilon * d);
        let l_dot = self.l0 * self.epsilon * dd;
        let l_ddot = self.l0 * self.epsilon * ddd;
        let gamma = l_dot / l;
        TrajectorySample {
            t,
            l,
            l_dot,
            l_ddot,
            gamma,
            gamma_dot: l_ddot / l - gamma * gamma,
        }
    }

    pub fn length(&self, t: f64) -> f64 {
        self.sample(t).l
    }

    /// Instantaneous eigenfrequency `Ω_k(t) = kπ / l(t)`.
    pub fn instantaneous_frequency(&self, k: usize, t: f64) -> Result<f64> {
        if k < 1 {
            return Err(Error::ModeIndex(k));
        }
        Ok(k as f64 * PI / self.length(t))
    }

    /// Period average `l̄` of the trajectory.
    pub fn mean_length(&self) -> f64 {
        match self.kind {
            MotionKind::SineSquared => self.l0 * (1.0 + self.epsilon),
            MotionKind::Sine | MotionKind::SineCubed => self.l0,
        }
    }

    /// Detuning `Δ = ω_cav / 2 - Ω̄_n` with `Ω̄_n = nπ / l̄`.
    ///
    /// For the standard drive this is `Ω_n⁰ (l̄ - l0) / l̄`.
    pub fn detuning_parameter(&self) -> f64 {
        let mean_freq = self.resonance_index * PI / self.mean_length();
        0.5 * self.drive_frequency() - mean_freq
    }

    /// Largest `|l_dot|` over one period, from a dense scan.
    ///
    /// Values `>= 1` mean the wall moves faster than light.
    pub fn mirror_speed_bound(&self) -> f64 {
        const SAMPLES: usize = 20_000;
        if self.is_static() {
            return 0.0;
        }
        let period = self.period();
        (0..=SAMPLES)
            .map(|i| {
                let t = period * i as f64 / SAMPLES as f64;
                self.sample(t).l_dot.abs()
            })
            .fold(0.0, f64::max)
    }
}
