//! Dormand-Prince 5(4) with PI step control and 4th-order dense output.
//!
//! Follows the classic DOPRI5 construction (Hairer, Nørsett & Wanner):
//! FSAL stages, an RMS error norm over all real components, and the
//! stabilized step-size controller with `β = 0.04`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A first-order system `y' = f(t, y)` over complex state.
pub trait OdeSystem {
    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl OdeSystem for crate::coupling::ModeSystem {
    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        crate::coupling::ModeSystem::eval(self, t, y, dy)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const UROUND: f64 = 2.3e-16;

fn scale(ctl: &StepControl, a: Complex64, b: Complex64) -> (f64, f64) {
    let (rt, at) = (ctl.rel_tol, ctl.abs_tol);
    (
        at + rt * a.re.abs().max(b.re.abs()),
        at + rt * a.im.abs().max(b.im.abs()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrator state; owns the solution vector and the last step's dense output.
pub struct Dopri5 {
    ctl: StepControl,
    t: f64,
    h: f64,
    y: Vec<Complex64>,
    k: [Vec<Complex64>; 7],
    y_stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
    cont: [Vec<Complex64>; 5],
    t_old: f64,
    h_old: f64,
    fac_old: f64,
    last_rejected: bool,
    stats: StepStats,
}

impl Dopri5 {
    pub fn new<S: OdeSystem>(sys: &S, ctl: StepControl, t0: f64, y0: Vec<Complex64>) -> Self {
        let n = y0.len();
        let zeros = || vec![Complex64::default(); n];
        let mut k: [Vec<Complex64>; 7] = std::array::from_fn(|_| zeros());
        sys.eval(t0, &y0, &mut k[0]);
        let mut me = Dopri5 {
            ctl,
            t: t0,
            h: 0.0,
            y: y0,
            k,
            y_stage: zeros(),
            y_new: zeros(),
            cont: std::array::from_fn(|_| zeros()),
            t_old: t0,
            h_old: 0.0,
            fac_old: 1e-4,
            last_rejected: false,
            stats: StepStats {
                evaluations: 1,
                ..StepStats::default()
            },
        };
        me.h = match ctl.initial_step {
            Some(h) => h.min(ctl.max_step),
            None => me.initial_step(sys),
        };
        me
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Start of the last accepted step; dense output covers `[t_old, t]`.
    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &S) -> f64 {
        let n = 2.0 * self.y.len() as f64;
        let (mut dnf, mut dny) = (0.0, 0.0);
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let (sr, si) = scale(&self.ctl, *y, *y);
            dnf += (f.re / sr).powi(2) + (f.im / si).powi(2);
            dny += (y.re / sr).powi(2) + (y.im / si).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            0.01 * (dny / dnf).sqrt()
        };
        h = h.min(self.ctl.max_step);
        for ((ys, y), f) in self.y_stage.iter_mut().zip(&self.y).zip(&self.k[0]) {
            *ys = y + h * f;
        }
        let (k0, rest) = self.k.split_at_mut(1);
        sys.eval(self.t + h, &self.y_stage, &mut rest[0]);
        self.stats.evaluations += 1;
        let mut der2 = 0.0;
        for ((y, f0), f1) in self.y.iter().zip(&k0[0]).zip(&rest[0]) {
            let (sr, si) = scale(&self.ctl, *y, *y);
            let d = f1 - f0;
            der2 += (d.re / sr).powi(2) + (d.im / si).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.ctl.max_step)
    }

    /// Advance by one accepted step, never past `t_end`.
    pub fn step<S: OdeSystem>(&mut self, sys: &S, t_end: f64) -> Result<()> {
        let expo = 0.2 - BETA * 0.75;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.ctl.max_steps {
                return Err(Error::StepLimit {
                    t: self.t,
                    limit: self.ctl.max_steps,
                });
            }
            if 0.1 * self.h.abs() <= self.t.abs() * UROUND {
                return Err(Error::StepSizeUnderflow {
                    t: self.t,
                    h: self.h,
                });
            }
            let mut h = self.h.min(self.ctl.max_step);
            let last = self.t + 1.01 * h >= t_end;
            if last {
                h = t_end - self.t;
            }
            let t = self.t;
            self.stages(sys, t, h);
            let err = self.error_norm(h);
            if !err.is_finite() {
                return Err(Error::NonFinite { t });
            }
            let fac11 = err.powf(expo);
            if err <= 1.0 {
                let fac =
                    (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                self.fac_old = err.max(1e-4);
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;
                self.stats.accepted += 1;
                self.build_dense_output(h);
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.t_old = t;
                self.h_old = h;
                self.t = if last { t_end } else { t + h };
                if !last {
                    self.h = h_new;
                }
                if self
                    .y
                    .iter()
                    .any(|v| !v.re.is_finite() || !v.im.is_finite())
                {
                    return Err(Error::NonFinite { t: self.t });
                }
                return Ok(());
            }
            self.h = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            self.last_rejected = true;
            self.stats.rejected += 1;
        }
    }

    fn stages<S: OdeSystem>(&mut self, sys: &S, t: f64, h: f64) {
        let y = &self.y;
        let ys = &mut self.y_stage;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;

        for i in 0..y.len() {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        sys.eval(t + C2 * h, ys, k2);
        for i in 0..y.len() {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.eval(t + C3 * h, ys, k3);
        for i in 0..y.len() {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.eval(t + C4 * h, ys, k4);
        for i in 0..y.len() {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.eval(t + C5 * h, ys, k5);
        for i in 0..y.len() {
            ys[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.eval(t + h, ys, k6);
        let yn = &mut self.y_new;
        for i in 0..y.len() {
            yn[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.eval(t + h, yn, k7);
        self.stats.evaluations += 6;
    }

    fn error_norm(&self, h: f64) -> f64 {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let mut acc = 0.0;
        for i in 0..self.y.len() {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let (sr, si) = scale(&self.ctl, self.y[i], self.y_new[i]);
            acc += (e.re / sr).powi(2) + (e.im / si).powi(2);
        }
        (acc / (2 * self.y.len()) as f64).sqrt()
    }

    fn build_dense_output(&mut self, h: f64) {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let [r1, r2, r3, r4, r5] = &mut self.cont;
        for i in 0..self.y.len() {
            let dy = self.y_new[i] - self.y[i];
            let bspl = h * k1[i] - dy;
            r1[i] = self.y[i];
            r2[i] = dy;
            r3[i] = bspl;
            r4[i] = dy - h * k7[i] - bspl;
            r5[i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
    }

    /// Dense output at `t` within the last step.
    pub fn interpolate(&self, t: f64, out: &mut [Complex64]) {
        if t == self.t || self.h_old == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = (t - self.t_old) / self.h_old;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.cont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }
}
