//! Independent ground truths: closed-form resonance predictions and a direct
//! integrator for the second-order mode equations.
//!
//! Elliptic integrals take the modulus `κ` (not the parameter `m = κ²`):
//! `K(κ) = ∫₀^{π/2} dθ / √(1 - κ² sin²θ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cavity::{CavityMotion, Drive};
use crate::coupling::{coupling_stencil_entry, Truncation};
use crate::error::{Error, Result};
use crate::evolve::{EvolutionState, IntegratorConfig};

const AGM_TOL: f64 = 1e-16;
const AGM_MAX_ITER: usize = 64;

/// `K` and `E` from the complementary modulus `κ' = √(1 - κ²)`.
///
/// Working from `κ'` keeps full precision as `κ → 1`, where `κ` itself
/// rounds to one long before `K` diverges.
pub fn elliptic_ke_complement(kp: f64) -> Result<(f64, f64)> {
    if !(kp > 0.0 && kp <= 1.0) {
        return Err(Error::Domain(format!(
            "complementary modulus must lie in (0, 1], got {kp}"
        )));
    }
    Ok(agm_ke(kp, 0))
}

/// AGM iteration, continued `extra` times past convergence.
fn agm_ke(kp: f64, extra: usize) -> (f64, f64) {
    let (mut a, mut b) = (1.0_f64, kp);
    // c₀² = κ², then c_n = (a_{n-1} - b_{n-1}) / 2.
    let mut weight = 0.5;
    let mut sum = weight * (1.0 - kp) * (1.0 + kp);
    let mut remaining = None;
    for _ in 0..AGM_MAX_ITER + extra {
        let c = 0.5 * (a - b);
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        weight *= 2.0;
        sum += weight * c * c;
        a = an;
        b = bn;
        if remaining.is_none() && (a - b).abs() <= AGM_TOL * a {
            remaining = Some(extra);
        }
        match remaining {
            Some(0) => break,
            Some(r) => remaining = Some(r - 1),
            None => {}
        }
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

fn complement(kappa: f64) -> f64 {
    ((1.0 - kappa) * (1.0 + kappa)).sqrt()
}

/// Complete elliptic integral of the first kind, `0 ≤ κ < 1`.
pub fn elliptic_k(kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Domain(format!("K(κ) needs 0 ≤ κ < 1, got {kappa}")));
    }
    Ok(elliptic_ke_complement(complement(kappa))?.0)
}

/// Complete elliptic integral of the second kind, `0 ≤ κ ≤ 1`.
pub fn elliptic_e(kappa: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Domain(format!("E(κ) needs 0 ≤ κ ≤ 1, got {kappa}")));
    }
    if kappa == 1.0 {
        return Ok(1.0);
    }
    Ok(elliptic_ke_complement(complement(kappa))?.1)
}

/// Slow time `τ = ½ ε Ω t` of resonant amplification.
///
/// `Ω` is the lowest mode frequency at the reference length: `l0`, or the
/// mean length `l̄` when the drive is tuned to it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SlowTime {
    tau: f64,
}

impl SlowTime {
    pub fn new(tau: f64) -> Result<Self> {
        if tau >= 0.0 && tau.is_finite() {
            Ok(SlowTime { tau })
        } else {
            Err(Error::Domain(format!(
                "slow time must be finite and ≥ 0, got {tau}"
            )))
        }
    }

    /// `½ ε Ω₁ t` for the given motion.
    pub fn at(motion: &CavityMotion, t: f64) -> Self {
        SlowTime {
            tau: (0.5 * motion.epsilon * slow_frequency(motion) * t).max(0.0),
        }
    }

    /// Time at which `motion` reaches slow time `tau`.
    pub fn time_of(motion: &CavityMotion, tau: f64) -> f64 {
        tau / (0.5 * motion.epsilon * slow_frequency(motion))
    }

    pub fn tau(self) -> f64 {
        self.tau
    }

    /// `κ = √(1 - e^{-8τ})`.
    pub fn kappa(self) -> f64 {
        (-(-8.0 * self.tau).exp_m1()).sqrt()
    }

    /// `κ' = e^{-4τ}`.
    pub fn kappa_complement(self) -> f64 {
        (-4.0 * self.tau).exp()
    }

    fn ke(self) -> (f64, f64) {
        if self.tau > 150.0 {
            // κ' underflows; the remaining corrections are O(κ'² ln κ').
            return (4.0_f64.ln() + 4.0 * self.tau, 1.0);
        }
        elliptic_ke_complement(self.kappa_complement()).expect("κ' lies in (0, 1]")
    }
}

fn slow_frequency(motion: &CavityMotion) -> f64 {
    let l = match motion.drive {
        Drive::TrueResonance => motion.mean_length(),
        _ => motion.l0,
    };
    PI / l
}

/// Resonance-mode particle number `N₁ = (2/π²) E(κ) K(κ) - ½`.
pub fn dodonov_n1(tau: SlowTime) -> f64 {
    if tau.tau == 0.0 {
        return 0.0;
    }
    let (k, e) = tau.ke();
    2.0 / (PI * PI) * e * k - 0.5
}

/// Total particle number `N = (1/π²) [(1 - κ²/2) K² - E K]`.
pub fn dodonov_n(tau: SlowTime) -> f64 {
    if tau.tau == 0.0 {
        return 0.0;
    }
    let (k, e) = tau.ke();
    let kappa2 = -(-8.0 * tau.tau).exp_m1();
    ((1.0 - 0.5 * kappa2) * k * k - e * k) / (PI * PI)
}

/// Short-time spectrum `N_k = (2n - k) k τ²` for `k < 2n`, zero otherwise.
pub fn ji_short_time(k: usize, n: f64, tau: SlowTime) -> Result<f64> {
    if k < 1 {
        return Err(Error::ModeIndex(k));
    }
    let kf = k as f64;
    if kf < 2.0 * n {
        Ok((2.0 * n - kf) * kf * tau.tau * tau.tau)
    } else {
        Ok(0.0)
    }
}

/// Asymptotic creation rate `dN_k/dt = 4ε / (πk)` of odd mode `k`.
pub fn dodonov_rate(k: usize, epsilon: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::ModeIndex(k));
    }
    if k.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "asymptotic rate is defined for odd modes only, got k = {k}"
        )));
    }
    Ok(4.0 * epsilon / (PI * k as f64))
}

/// Radiated energy `E = ¼ Ω₁⁰ sinh²(2τ)`.
pub fn dodonov_energy(tau: SlowTime, omega1_0: f64) -> f64 {
    0.25 * omega1_0 * (2.0 * tau.tau).sinh().powi(2)
}

/// `ε_n^{(m)}` and `ε̇_n^{(m)}`, column-major (column `m` contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderState {
    pub t: f64,
    k_max: usize,
    eps: Vec<Complex64>,
    eps_dot: Vec<Complex64>,
}

impl SecondOrderState {
    /// `ε = I`, `ε̇_n^{(m)} = -iΩ_n⁰ δ_nm - M_mn(0)`.
    pub fn initial(motion: &CavityMotion, trunc: Truncation) -> Self {
        let k_max = trunc.k_max();
        let gamma = motion.sample(0.0).gamma;
        let mut eps = vec![Complex64::default(); k_max * k_max];
        let mut eps_dot = vec![Complex64::default(); k_max * k_max];
        for m in 1..=k_max {
            for n in 1..=k_max {
                let at = (m - 1) * k_max + (n - 1);
                let mut d = Complex64::new(-gamma * coupling_stencil_entry(m, n), 0.0);
                if n == m {
                    eps[at] = Complex64::new(1.0, 0.0);
                    d -= Complex64::new(0.0, motion.base_frequency(n));
                }
                eps_dot[at] = d;
            }
        }
        SecondOrderState {
            t: 0.0,
            k_max,
            eps,
            eps_dot,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn eps(&self, n: usize, m: usize) -> Complex64 {
        self.eps[(m - 1) * self.k_max + (n - 1)]
    }

    pub fn eps_dot(&self, n: usize, m: usize) -> Complex64 {
        self.eps_dot[(m - 1) * self.k_max + (n - 1)]
    }

    /// `ξ_k = ε_k + (i/Ω_k⁰)(ε̇_k + Σ_n M_nk ε_n)`, `η_k = ε_k - (i/Ω_k⁰)(…)`.
    pub fn to_evolution_state(&self, motion: &CavityMotion) -> EvolutionState {
        let k_max = self.k_max;
        let gamma = motion.sample(self.t).gamma;
        let mut data = Vec::with_capacity(2 * k_max * k_max);
        for m in 0..k_max {
            let e = &self.eps[m * k_max..(m + 1) * k_max];
            let ed = &self.eps_dot[m * k_max..(m + 1) * k_max];
            let mut xi = Vec::with_capacity(k_max);
            let mut eta = Vec::with_capacity(k_max);
            for k in 1..=k_max {
                let coupled: Complex64 = (1..=k_max)
                    .map(|n| gamma * coupling_stencil_entry(n, k) * e[n - 1])
                    .sum();
                let shift = Complex64::i() / motion.base_frequency(k) * (ed[k - 1] + coupled);
                xi.push(e[k - 1] + shift);
                eta.push(e[k - 1] - shift);
            }
            data.extend(xi);
            data.extend(eta);
        }
        EvolutionState::from_columns(self.t, k_max, data).expect("sizes match by construction")
    }
}

/// Right-hand side of
/// `ε̈_n + Ω_n² ε_n + 2 Σ_m M_mn ε̇_m + Σ_m (Ṁ_mn - N_nm) ε_m = 0`
/// with `N_nm = Σ_{k ≤ k_max} M_nk M_mk`.
struct SecondOrderSystem {
    motion: CavityMotion,
    k_max: usize,
    /// `M / γ`, row-major `[(n-1) k_max + (m-1)]`.
    stencil: Vec<f64>,
    /// `N / γ²`.
    gram: Vec<f64>,
}

impl SecondOrderSystem {
    fn new(motion: CavityMotion, k_max: usize) -> Self {
        let mut stencil = vec![0.0; k_max * k_max];
        for n in 1..=k_max {
            for m in 1..=k_max {
                stencil[(n - 1) * k_max + (m - 1)] = coupling_stencil_entry(n, m);
            }
        }
        let mut gram = vec![0.0; k_max * k_max];
        for n in 0..k_max {
            for m in 0..k_max {
                gram[n * k_max + m] = (0..k_max)
                    .map(|k| stencil[n * k_max + k] * stencil[m * k_max + k])
                    .sum();
            }
        }
        SecondOrderSystem {
            motion,
            k_max,
            stencil,
            gram,
        }
    }

    /// `y = [ε columns | ε̇ columns]`, same layout for `dy`.
    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let k_max = self.k_max;
        let half = k_max * k_max;
        let s = self.motion.sample(t);
        let (eps, eps_dot) = y.split_at(half);
        let (d_eps, d_eps_dot) = dy.split_at_mut(half);
        d_eps.copy_from_slice(eps_dot);
        for m in 0..k_max {
            let e = &eps[m * k_max..(m + 1) * k_max];
            let ed = &eps_dot[m * k_max..(m + 1) * k_max];
            for n in 0..k_max {
                let w = (n + 1) as f64 * PI / s.l;
                let mut acc = -w * w * e[n];
                for j in 0..k_max {
                    let mjn = self.stencil[j * k_max + n];
                    acc -= 2.0 * s.gamma * mjn * ed[j];
                    acc -=
                        (s.gamma_dot * mjn - s.gamma * s.gamma * self.gram[n * k_max + j]) * e[j];
                }
                d_eps_dot[m * k_max + n] = acc;
            }
        }
    }
}

/// Integrate the second-order mode equations with fixed-step classic RK4 and
/// return `(ξ, η)` at every sample time of `integ`.
///
/// The step resolves the fastest mode with `Ω_max h ≤ 0.01` and divides the
/// sample interval exactly. Tolerances in `integ` are ignored; `max_step`
/// caps the step.
pub fn second_order_reference(
    motion: &CavityMotion,
    trunc: Truncation,
    integ: &IntegratorConfig,
    t_max: f64,
) -> Result<Vec<EvolutionState>> {
    motion.validate()?;
    integ.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid(
            "t_max",
            format!("must be positive, got {t_max}"),
        ));
    }
    let k_max = trunc.k_max();
    let sys = SecondOrderSystem::new(*motion, k_max);
    let l_min = motion.l0 * (1.0 - 2.0 * motion.epsilon);
    let omega_max = (k_max as f64 * PI / l_min).max(motion.drive_frequency());
    let h_target = (0.01 / omega_max).min(integ.max_step.unwrap_or(f64::INFINITY));

    let init = SecondOrderState::initial(motion, trunc);
    let mut y: Vec<Complex64> = init.eps.iter().chain(&init.eps_dot).copied().collect();
    let n = y.len();
    let mut k1 = vec![Complex64::default(); n];
    let mut k2 = vec![Complex64::default(); n];
    let mut k3 = vec![Complex64::default(); n];
    let mut k4 = vec![Complex64::default(); n];
    let mut tmp = vec![Complex64::default(); n];

    let samples = integ.sample_count(t_max);
    let mut out = Vec::with_capacity(samples);
    let snapshot = |t: f64, y: &[Complex64]| {
        let (eps, eps_dot) = y.split_at(k_max * k_max);
        SecondOrderState {
            t,
            k_max,
            eps: eps.to_vec(),
            eps_dot: eps_dot.to_vec(),
        }
        .to_evolution_state(motion)
    };
    out.push(snapshot(0.0, &y));
    let mut t = 0.0;
    for j in 1..samples {
        let t_next = (j as f64 * integ.sample_interval).min(t_max);
        let steps = ((t_next - t) / h_target).ceil().max(1.0) as usize;
        let h = (t_next - t) / steps as f64;
        let t_start = t;
        for i in 0..steps {
            let ti = t_start + i as f64 * h;
            sys.eval(ti, &y, &mut k1);
            for ((o, a), b) in tmp.iter_mut().zip(&y).zip(&k1) {
                *o = a + 0.5 * h * b;
            }
            sys.eval(ti + 0.5 * h, &tmp, &mut k2);
            for ((o, a), b) in tmp.iter_mut().zip(&y).zip(&k2) {
                *o = a + 0.5 * h * b;
            }
            sys.eval(ti + 0.5 * h, &tmp, &mut k3);
            for ((o, a), b) in tmp.iter_mut().zip(&y).zip(&k3) {
                *o = a + h * b;
            }
            sys.eval(ti + h, &tmp, &mut k4);
            for (idx, v) in y.iter_mut().enumerate() {
                *v += h / 6.0 * (k1[idx] + 2.0 * (k2[idx] + k3[idx]) + k4[idx]);
            }
        }
        t = t_next;
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        out.push(snapshot(t, &y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::MotionKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Composite Gauss-Legendre (5 points) over `n` panels.
    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                X.iter()
                    .zip(&W)
                    .map(|(x, w)| w * f(mid + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    fn k_quad(kappa: f64) -> f64 {
        quad(
            |t| 1.0 / (1.0 - kappa * kappa * t.sin().powi(2)).sqrt(),
            0.0,
            PI / 2.0,
            200,
        )
    }

    fn e_quad(kappa: f64) -> f64 {
        quad(
            |t| (1.0 - kappa * kappa * t.sin().powi(2)).sqrt(),
            0.0,
            PI / 2.0,
            200,
        )
    }

    #[test]
    fn elliptic_special_values() {
        assert_relative_eq!(elliptic_k(0.0).unwrap(), PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(elliptic_e(0.0).unwrap(), PI / 2.0, max_relative = 1e-15);
        assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
        let s = 0.5_f64.sqrt();
        assert_relative_eq!(k_quad(s), 1.854_074_677, max_relative = 1e-9);
        assert_relative_eq!(e_quad(s), 1.350_643_881, max_relative = 1e-9);
        assert_relative_eq!(elliptic_k(s).unwrap(), k_quad(s), max_relative = 1e-12);
        assert_relative_eq!(elliptic_e(s).unwrap(), e_quad(s), max_relative = 1e-12);
        for kappa in [0.1, 0.3, 0.6, 0.9, 0.95] {
            assert_relative_eq!(
                elliptic_k(kappa).unwrap(),
                k_quad(kappa),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                elliptic_e(kappa).unwrap(),
                e_quad(kappa),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn elliptic_domain() {
        assert!(matches!(elliptic_k(1.0), Err(Error::Domain(_))));
        assert!(elliptic_k(-0.1).is_err());
        assert!(elliptic_e(1.01).is_err());
        assert!(elliptic_ke_complement(0.0).is_err());
    }

    #[test]
    fn legendre_relation() {
        for i in 0..=999 {
            let kappa = i as f64 * 1e-3;
            let kp = complement(kappa);
            let (k, e) = (elliptic_k(kappa).unwrap(), elliptic_e(kappa).unwrap());
            let (kc, ec) = elliptic_ke_complement(kappa.max(f64::MIN_POSITIVE)).unwrap();
            let lhs = e * kc + ec * k - k * kc;
            assert!(
                (lhs - PI / 2.0).abs() < 1e-10,
                "κ = {kappa}, κ' = {kp}: {lhs}"
            );
        }
    }

    #[test]
    fn slow_time_and_kappa() {
        let m = CavityMotion::new(0.1, 1e-5, MotionKind::Sine, 1.0).unwrap();
        let tau = SlowTime::at(&m, 250.0);
        assert_relative_eq!(tau.tau(), 0.039_269_908_169_872_41, max_relative = 1e-14);
        assert_relative_eq!(
            SlowTime::time_of(&m, tau.tau()),
            250.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            tau.kappa().powi(2) + tau.kappa_complement().powi(2),
            1.0,
            max_relative = 1e-15
        );
        assert!(SlowTime::new(-1.0).is_err());

        let tr = CavityMotion::new(1.0, 0.01, MotionKind::SineSquared, 1.0)
            .unwrap()
            .with_drive(Drive::TrueResonance)
            .unwrap();
        assert_relative_eq!(
            SlowTime::at(&tr, 10.0).tau(),
            0.5 * 0.01 * PI / 1.01 * 10.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn resonance_numbers_at_short_time() {
        assert_eq!(dodonov_n1(SlowTime::new(0.0).unwrap()), 0.0);
        assert_eq!(dodonov_n(SlowTime::new(0.0).unwrap()), 0.0);
        let m = CavityMotion::new(0.1, 1e-5, MotionKind::Sine, 1.0).unwrap();
        let tau = SlowTime::at(&m, 250.0);
        assert_relative_eq!(dodonov_n1(tau), 1.5421e-3, max_relative = 2e-3);
        assert_relative_eq!(dodonov_n(tau), 1.5421e-3, max_relative = 2e-3);
        for t in [1e-3, 0.01, 0.03, 0.05] {
            let s = SlowTime::new(t).unwrap();
            let r = dodonov_n(s) / (t * t);
            assert!((0.99..=1.01).contains(&r), "τ = {t}: N/τ² = {r}");
            let r1 = dodonov_n1(s) / (t * t);
            assert!((0.99..=1.01).contains(&r1), "τ = {t}: N₁/τ² = {r1}");
        }
    }

    #[test]
    fn resonance_numbers_at_long_time() {
        // K = ln 4 + 4τ and E = 1 up to terms of order e^{-8τ}.
        for t in [4.0, 6.0, 10.0, 20.0] {
            let s = SlowTime::new(t).unwrap();
            let k = 4.0_f64.ln() + 4.0 * t;
            let n1 = 2.0 * k / (PI * PI) - 0.5;
            let n = (0.5 * k * k - k) / (PI * PI);
            assert_relative_eq!(dodonov_n1(s), n1, max_relative = 1e-9);
            assert_relative_eq!(dodonov_n(s), n, max_relative = 1e-9);
        }
        // Slopes: dN₁/dτ → 8/π², N/τ² → 8/π².
        let (a, b) = (SlowTime::new(40.0).unwrap(), SlowTime::new(41.0).unwrap());
        assert_relative_eq!(
            dodonov_n1(b) - dodonov_n1(a),
            8.0 / (PI * PI),
            max_relative = 1e-9
        );
        let big = SlowTime::new(1e4).unwrap();
        assert_relative_eq!(dodonov_n(big) / 1e8, 8.0 / (PI * PI), max_relative = 1e-3);
    }

    #[test]
    fn ji_spectrum() {
        let m = CavityMotion::new(0.1, 1e-5, MotionKind::Sine, 1.5).unwrap();
        let tau = SlowTime::at(&m, 250.0);
        let n1 = ji_short_time(1, 1.5, tau).unwrap();
        let n2 = ji_short_time(2, 1.5, tau).unwrap();
        assert_relative_eq!(n1, 3.084e-3, max_relative = 1e-3);
        assert_eq!(n1, n2);
        assert_eq!(ji_short_time(3, 1.5, tau).unwrap(), 0.0);
        assert_eq!(ji_short_time(4, 2.0, tau).unwrap(), 0.0);
        assert_relative_eq!(
            ji_short_time(2, 2.0, tau).unwrap() / ji_short_time(1, 2.0, tau).unwrap(),
            4.0 / 3.0
        );
        let small = SlowTime::new(1e-3).unwrap();
        assert_relative_eq!(
            ji_short_time(1, 1.0, small).unwrap(),
            1e-6,
            max_relative = 1e-12
        );
        assert_relative_eq!(dodonov_n1(small), 1e-6, max_relative = 1e-2);
        assert!(ji_short_time(0, 1.0, small).is_err());
    }

    #[test]
    fn asymptotic_rates() {
        assert_relative_eq!(
            dodonov_rate(3, 0.01).unwrap(),
            0.004_244,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            dodonov_rate(5, 0.01).unwrap(),
            0.002_546,
            max_relative = 1e-3
        );
        assert_eq!(dodonov_rate(7, 0.0).unwrap(), 0.0);
        assert!(matches!(dodonov_rate(4, 0.01), Err(Error::Domain(_))));
        assert!(dodonov_rate(0, 0.01).is_err());
    }

    #[test]
    fn energy_law() {
        assert_eq!(dodonov_energy(SlowTime::new(0.0).unwrap(), PI), 0.0);
        assert_relative_eq!(
            dodonov_energy(SlowTime::new(0.5).unwrap(), PI),
            1.084_7,
            max_relative = 1e-4
        );
        let s = SlowTime::new(1e-3).unwrap();
        assert_relative_eq!(dodonov_energy(s, PI), PI * 1e-6, max_relative = 1e-5);
    }

    #[test]
    fn static_second_order_is_plane_wave() {
        let m = CavityMotion::stationary(1.0);
        let trunc = Truncation::new(3).unwrap();
        let cfg = IntegratorConfig {
            sample_interval: 0.5,
            ..Default::default()
        };
        let series = second_order_reference(&m, trunc, &cfg, 3.0).unwrap();
        assert_eq!(series.len(), 7);
        for s in &series {
            for k in 1..=3 {
                for c in 1..=3 {
                    let expect = if k == c {
                        2.0 * Complex64::new(0.0, -m.base_frequency(k) * s.t).exp()
                    } else {
                        Complex64::default()
                    };
                    assert!((s.xi(k, c) - expect).norm() < 1e-8);
                    assert!(s.eta(k, c).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn second_order_start_matches_vacuum() {
        let m = CavityMotion::new(1.0, 0.05, MotionKind::Sine, 1.0).unwrap();
        let trunc = Truncation::new(4).unwrap();
        let s = SecondOrderState::initial(&m, trunc).to_evolution_state(&m);
        let vac = crate::evolve::initial_state(trunc);
        assert!(s.max_abs_diff(&vac) < 1e-15);
    }

    proptest! {
        #[test]
        fn agm_is_converged(kappa in 0.0f64..0.999) {
            let kp = complement(kappa);
            let (k, e) = agm_ke(kp, 0);
            let (k1, e1) = agm_ke(kp, 1);
            prop_assert!((k1 - k).abs() <= 1e-12 * k);
            prop_assert!((e1 - e).abs() <= 1e-12 * e);
            prop_assert!(e <= k);
            prop_assert!(e >= 1.0 - 1e-15);
        }
    }
}
