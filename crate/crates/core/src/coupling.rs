//! Intermode coupling and the right-hand side of the first-order mode system.
//!
//! For every initial-excitation label `m` the pair of columns `(ξ^{(m)}, η^{(m)})`
//! obeys
//!
//! ```text
//! ξ̇_k = -i (a⁺_k ξ_k - a⁻_k η_k) - Σ_n (c⁻_kn ξ_n + c⁺_kn η_n)
//! η̇_k = -i (a⁻_k ξ_k - a⁺_k η_k) - Σ_n (c⁺_kn ξ_n + c⁻_kn η_n)
//! ```
//!
//! with `a±_k = (kπ / 2 l0) (1 ± (l0/l)²)` and
//! `c±_kn = γ (-1)^{n+k} n / (k ± n)` for `n ≠ k`, zero on the diagonal.
//! Columns never mix, so the whole state is a stack of independent columns.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityMotion;
use crate::error::{Error, Result};

/// Mode cut-off: modes `1..=k_max` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Truncation(usize);

impl Truncation {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::invalid("k_max", "must be at least 1"));
        }
        Ok(Truncation(k_max))
    }

    pub fn k_max(self) -> usize {
        self.0
    }

    pub fn modes(self) -> std::ops::RangeInclusive<usize> {
        1..=self.0
    }
}

impl TryFrom<usize> for Truncation {
    type Error = Error;
    fn try_from(k: usize) -> Result<Self> {
        Truncation::new(k)
    }
}

impl From<Truncation> for usize {
    fn from(t: Truncation) -> usize {
        t.0
    }
}

fn sign(n: usize, m: usize) -> f64 {
    if (n + m).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Coupling matrix entry `M_nm(t) = γ (-1)^{n+m} 2nm / (m² - n²)`, zero for `n = m`.
pub fn coupling_matrix_entry(motion: &CavityMotion, n: usize, m: usize, t: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::ModeIndex(n));
    }
    if m < 1 {
        return Err(Error::ModeIndex(m));
    }
    Ok(motion.sample(t).gamma * coupling_stencil_entry(n, m))
}

/// `M_nm / γ`.
pub(crate) fn coupling_stencil_entry(n: usize, m: usize) -> f64 {
    if n == m {
        return 0.0;
    }
    let (nf, mf) = (n as f64, m as f64);
    sign(n, m) * 2.0 * nf * mf / (mf * mf - nf * nf)
}

/// Time-independent parts of `c±`: `c±_kn = γ(t) · s±_kn`.
///
/// Matrices are dense, row-major, indexed `[(k-1) * k_max + (n-1)]`.
#[derive(Debug, Clone)]
pub struct CouplingStencil {
    k_max: usize,
    plus: Vec<f64>,
    minus: Vec<f64>,
    /// `s⁺ + s⁻`, acting on `ξ + η`.
    sum: Vec<f64>,
    /// `s⁻ - s⁺`, acting on `ξ - η`.
    diff: Vec<f64>,
}

impl CouplingStencil {
    pub fn new(trunc: Truncation) -> Self {
        let k_max = trunc.k_max();
        let mut plus = vec![0.0; k_max * k_max];
        let mut minus = vec![0.0; k_max * k_max];
        let mut sum = vec![0.0; k_max * k_max];
        let mut diff = vec![0.0; k_max * k_max];
        for k in 1..=k_max {
            for n in 1..=k_max {
                if n == k {
                    continue;
                }
                let (kf, nf) = (k as f64, n as f64);
                let s = sign(n, k);
                let idx = (k - 1) * k_max + (n - 1);
                plus[idx] = s * nf / (kf + nf);
                minus[idx] = s * nf / (kf - nf);
                sum[idx] = s * 2.0 * nf * kf / (kf * kf - nf * nf);
                diff[idx] = s * 2.0 * nf * nf / (kf * kf - nf * nf);
            }
        }
        CouplingStencil {
            k_max,
            plus,
            minus,
            sum,
            diff,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn plus(&self, k: usize, n: usize) -> f64 {
        self.plus[(k - 1) * self.k_max + (n - 1)]
    }

    pub fn minus(&self, k: usize, n: usize) -> f64 {
        self.minus[(k - 1) * self.k_max + (n - 1)]
    }
}

/// Coefficients of the first-order system at one instant.
#[derive(Debug, Clone)]
pub struct CouplingCoefficients {
    pub t: f64,
    pub gamma: f64,
    /// `a⁺_k` for `k = 1..=k_max` (index `k-1`).
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    /// Row-major `c⁺_kn`.
    pub c_plus: Vec<f64>,
    pub c_minus: Vec<f64>,
    k_max: usize,
}

impl CouplingCoefficients {
    pub fn c_plus(&self, k: usize, n: usize) -> f64 {
        self.c_plus[(k - 1) * self.k_max + (n - 1)]
    }

    pub fn c_minus(&self, k: usize, n: usize) -> f64 {
        self.c_minus[(k - 1) * self.k_max + (n - 1)]
    }
}

fn diagonal_frequencies(motion: &CavityMotion, k_max: usize, l: f64) -> (Vec<f64>, Vec<f64>) {
    let ratio = (motion.l0 / l).powi(2);
    (1..=k_max)
        .map(|k| {
            let half = k as f64 * PI / (2.0 * motion.l0);
            (half * (1.0 + ratio), half * (1.0 - ratio))
        })
        .unzip()
}

pub fn coefficients_at(motion: &CavityMotion, trunc: Truncation, t: f64) -> CouplingCoefficients {
    let stencil = CouplingStencil::new(trunc);
    coefficients_with(motion, &stencil, t)
}

pub fn coefficients_with(
    motion: &CavityMotion,
    stencil: &CouplingStencil,
    t: f64,
) -> CouplingCoefficients {
    let s = motion.sample(t);
    let (a_plus, a_minus) = diagonal_frequencies(motion, stencil.k_max, s.l);
    CouplingCoefficients {
        t,
        gamma: s.gamma,
        a_plus,
        a_minus,
        c_plus: stencil.plus.iter().map(|c| s.gamma * c).collect(),
        c_minus: stencil.minus.iter().map(|c| s.gamma * c).collect(),
        k_max: stencil.k_max,
    }
}

/// Time derivative of one column `(ξ^{(m)}, η^{(m)})`, written term by term.
pub fn rhs(
    motion: &CavityMotion,
    trunc: Truncation,
    t: f64,
    xi: &[Complex64],
    eta: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let k_max = trunc.k_max();
    for len in [xi.len(), eta.len()] {
        if len != k_max {
            return Err(Error::Dimension {
                expected: k_max,
                actual: len,
            });
        }
    }
    let c = coefficients_at(motion, trunc, t);
    let i = Complex64::i();
    let mut dxi = vec![Complex64::default(); k_max];
    let mut deta = vec![Complex64::default(); k_max];
    for k in 1..=k_max {
        let (ap, am) = (c.a_plus[k - 1], c.a_minus[k - 1]);
        let (x, e) = (xi[k - 1], eta[k - 1]);
        let mut sx = Complex64::default();
        let mut se = Complex64::default();
        for n in 1..=k_max {
            sx += c.c_minus(k, n) * xi[n - 1] + c.c_plus(k, n) * eta[n - 1];
            se += c.c_plus(k, n) * xi[n - 1] + c.c_minus(k, n) * eta[n - 1];
        }
        dxi[k - 1] = -i * (ap * x - am * e) - sx;
        deta[k - 1] = -i * (am * x - ap * e) - se;
    }
    Ok((dxi, deta))
}

/// Number of columns evaluated together in one matrix product.
///
/// Fixed so that the arithmetic is independent of the worker count.
pub const COLUMN_BLOCK: usize = 16;

/// Variables the integrator works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `(ξ, η)` directly.
    Lab,
    /// Interaction picture `u_k = e^{iΩ_k⁰t} ξ_k`, `v_k = e^{-iΩ_k⁰t} η_k`.
    ///
    /// The free rotation is carried exactly by the phases, so the
    /// integrator only sees the `O(ε)` squeezing and coupling terms.
    #[default]
    Rotating,
}

/// Batched right-hand side over a stack of columns.
///
/// The state slice holds `ncols` columns of length `2 k_max`; each column is
/// `[ξ_1..ξ_kmax, η_1..η_kmax]` (or `[u, v]` in the rotating frame). The
/// coupling sums are evaluated in the `ξ ± η` basis, where they separate into
/// two real matrix products:
///
/// ```text
/// d(ξ+η)_k = -i Ω_k⁰ (ξ-η)_k         - γ Σ_n (s⁺+s⁻)_kn (ξ+η)_n
/// d(ξ-η)_k = -i Ω_k⁰ (l0/l)² (ξ+η)_k - γ Σ_n (s⁻-s⁺)_kn (ξ-η)_n
/// ```
///
/// In the rotating frame the same sums give
/// `u̇_k = e^{iΩ_k⁰t} [ i a⁻_k (ξ+η)_k - C^ξ_k ]` and
/// `v̇_k = e^{-iΩ_k⁰t} [ -i a⁻_k (ξ+η)_k - C^η_k ]`.
#[derive(Clone)]
pub struct ModeSystem {
    motion: CavityMotion,
    stencil: Arc<CouplingStencil>,
    omega0: Vec<f64>,
    frame: Frame,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl ModeSystem {
    pub fn new(motion: CavityMotion, trunc: Truncation) -> Self {
        let stencil = Arc::new(CouplingStencil::new(trunc));
        ModeSystem::with_stencil(motion, stencil)
    }

    pub fn with_stencil(motion: CavityMotion, stencil: Arc<CouplingStencil>) -> Self {
        let omega0 = (1..=stencil.k_max)
            .map(|k| motion.base_frequency(k))
            .collect();
        ModeSystem {
            motion,
            stencil,
            omega0,
            frame: Frame::Lab,
            pool: None,
        }
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Spread column blocks over `pool`.
    pub fn with_pool(mut self, pool: Arc<rayon::ThreadPool>) -> Self {
        self.pool = Some(pool);
        self
    }

    pub fn k_max(&self) -> usize {
        self.stencil.k_max
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn motion(&self) -> &CavityMotion {
        &self.motion
    }

    /// `e^{-iΩ_k⁰ t}` for every mode.
    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.omega0
            .iter()
            .map(|w| {
                let (s, c) = (w * t).sin_cos();
                Complex64::new(c, -s)
            })
            .collect()
    }

    /// Convert integrator variables at time `t` to `(ξ, η)` in place.
    pub fn to_lab(&self, t: f64, y: &mut [Complex64]) {
        if self.frame == Frame::Lab {
            return;
        }
        let ph = self.phases(t);
        let k_max = self.stencil.k_max;
        for column in y.chunks_exact_mut(2 * k_max) {
            let (u, v) = column.split_at_mut(k_max);
            for k in 0..k_max {
                u[k] *= ph[k];
                v[k] *= ph[k].conj();
            }
        }
    }

    /// Inverse of [`ModeSystem::to_lab`].
    pub fn from_lab(&self, t: f64, y: &mut [Complex64]) {
        if self.frame == Frame::Lab {
            return;
        }
        let ph = self.phases(t);
        let k_max = self.stencil.k_max;
        for column in y.chunks_exact_mut(2 * k_max) {
            let (u, v) = column.split_at_mut(k_max);
            for k in 0..k_max {
                u[k] *= ph[k].conj();
                v[k] *= ph[k];
            }
        }
    }

    /// Evaluate `dy = f(t, y)` for any whole number of columns.
    pub fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let col = 2 * self.stencil.k_max;
        debug_assert_eq!(y.len() % col, 0);
        debug_assert_eq!(y.len(), dy.len());
        let s = self.motion.sample(t);
        let squeeze = (self.motion.l0 / s.l).powi(2);
        let phases = match self.frame {
            Frame::Lab => None,
            Frame::Rotating => Some(self.phases(t)),
        };
        let ph = phases.as_deref();
        let block = COLUMN_BLOCK * col;
        match &self.pool {
            Some(pool) if y.len() > block => pool.install(|| {
                y.par_chunks(block)
                    .zip(dy.par_chunks_mut(block))
                    .for_each(|(yb, db)| self.eval_block(s.gamma, squeeze, ph, yb, db));
            }),
            _ => {
                for (yb, db) in y.chunks(block).zip(dy.chunks_mut(block)) {
                    self.eval_block(s.gamma, squeeze, ph, yb, db);
                }
            }
        }
    }

    fn eval_block(
        &self,
        gamma: f64,
        squeeze: f64,
        phases: Option<&[Complex64]>,
        y: &[Complex64],
        dy: &mut [Complex64],
    ) {
        let k_max = self.stencil.k_max;
        let ncols = y.len() / (2 * k_max);
        // Scratch: [Re(p) | Im(p)] and [Re(q) | Im(q)], each k_max x 2ncols, column-major.
        let plane = k_max * ncols;
        let mut p = vec![0.0; 2 * plane];
        let mut q = vec![0.0; 2 * plane];
        for (m, column) in y.chunks_exact(2 * k_max).enumerate() {
            let (xi, eta) = column.split_at(k_max);
            for k in 0..k_max {
                let (x, e) = match phases {
                    None => (xi[k], eta[k]),
                    Some(ph) => (ph[k] * xi[k], ph[k].conj() * eta[k]),
                };
                let sum = x + e;
                let dif = x - e;
                let at = m * k_max + k;
                p[at] = sum.re;
                p[plane + at] = sum.im;
                q[at] = dif.re;
                q[plane + at] = dif.im;
            }
        }
        let mut cp = vec![0.0; 2 * plane];
        let mut cq = vec![0.0; 2 * plane];
        if gamma != 0.0 {
            let n = 2 * ncols;
            for (stencil, src, dst) in [
                (&self.stencil.sum, &p, &mut cp),
                (&self.stencil.diff, &q, &mut cq),
            ] {
                // SAFETY: `stencil` is k_max x k_max row-major, `src` and `dst`
                // are k_max x n column-major; all lengths match the strides.
                unsafe {
                    matrixmultiply::dgemm(
                        k_max,
                        k_max,
                        n,
                        gamma,
                        stencil.as_ptr(),
                        k_max as isize,
                        1,
                        src.as_ptr(),
                        1,
                        k_max as isize,
                        0.0,
                        dst.as_mut_ptr(),
                        1,
                        k_max as isize,
                    );
                }
            }
        }
        let i = Complex64::i();
        for (m, column) in dy.chunks_exact_mut(2 * k_max).enumerate() {
            let (dxi, deta) = column.split_at_mut(k_max);
            for k in 0..k_max {
                let at = m * k_max + k;
                let w = self.omega0[k];
                let pk = Complex64::new(p[at], p[plane + at]);
                let qk = Complex64::new(q[at], q[plane + at]);
                let ap = Complex64::new(cp[at], cp[plane + at]);
                let aq = Complex64::new(cq[at], cq[plane + at]);
                match phases {
                    None => {
                        let dp = -i * w * qk - ap;
                        let dq = -i * (w * squeeze) * pk - aq;
                        dxi[k] = 0.5 * (dp + dq);
                        deta[k] = 0.5 * (dp - dq);
                    }
                    Some(ph) => {
                        let a_minus = 0.5 * w * (1.0 - squeeze);
                        let sq = i * a_minus * pk;
                        let cx = 0.5 * (ap + aq);
                        let ce = 0.5 * (ap - aq);
                        dxi[k] = ph[k].conj() * (sq - cx);
                        deta[k] = ph[k] * (-sq - ce);
                    }
                }
            }
        }
    }
}
