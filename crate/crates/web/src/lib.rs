//! WebAssembly bindings for the static demo page in `www/`.

use dyncav::cavity::{CavityMotion, Drive, MotionKind};
use dyncav::coupling::Truncation;
use dyncav::evolve::{integrate, IntegratorConfig};
use dyncav::observables::{bogoliubov_frame, particle_spectrum, spectrum, ObservableMode};
use dyncav::oracles::{dodonov_energy, dodonov_n, dodonov_n1, SlowTime};
use wasm_bindgen::prelude::*;

/// Largest cut-off the page accepts; keeps a run interactive.
pub const MAX_KMAX: usize = 40;

/// Errors stay plain strings until they cross into JavaScript, so the
/// functions below also run natively.
type Res<T> = Result<T, String>;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn motion(kind: u8, l0: f64, epsilon: f64, n: f64, true_resonance: bool) -> Res<CavityMotion> {
    let kind = MotionKind::try_from(kind).map_err(|e| e.to_string())?;
    let drive = if true_resonance {
        Drive::TrueResonance
    } else {
        Drive::Standard
    };
    CavityMotion::new(l0, epsilon, kind, n)
        .and_then(|m| m.with_drive(drive))
        .map_err(|e| e.to_string())
}

fn grid(t_max: f64, samples: usize) -> Res<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) || samples < 2 {
        return Err("need t_max > 0 and at least 2 samples".into());
    }
    Ok((0..samples)
        .map(|i| t_max * i as f64 / (samples - 1) as f64)
        .collect())
}

#[wasm_bindgen]
pub struct Trajectory {
    t: Vec<f64>,
    length: Vec<f64>,
    gamma: Vec<f64>,
    period: f64,
    speed: f64,
}

#[wasm_bindgen]
impl Trajectory {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn length(&self) -> Vec<f64> {
        self.length.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn gamma(&self) -> Vec<f64> {
        self.gamma.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn period(&self) -> f64 {
        self.period
    }
    /// Largest wall speed in units of c.
    #[wasm_bindgen(getter)]
    pub fn speed(&self) -> f64 {
        self.speed
    }
}

/// `l(t)` and `γ(t) = l̇/l` over `periods` drive periods.
#[wasm_bindgen]
pub fn trajectory(
    kind: u8,
    l0: f64,
    epsilon: f64,
    n: f64,
    true_resonance: bool,
    periods: f64,
    samples: usize,
) -> Result<Trajectory, JsError> {
    trajectory_checked(kind, l0, epsilon, n, true_resonance, periods, samples).map_err(js)
}

fn trajectory_checked(
    kind: u8,
    l0: f64,
    epsilon: f64,
    n: f64,
    true_resonance: bool,
    periods: f64,
    samples: usize,
) -> Res<Trajectory> {
    let m = motion(kind, l0, epsilon, n, true_resonance)?;
    let t = grid(periods * m.period(), samples)?;
    let (length, gamma) = t
        .iter()
        .map(|&t| {
            let s = m.sample(t);
            (s.l, s.gamma)
        })
        .unzip();
    Ok(Trajectory {
        t,
        length,
        gamma,
        period: m.period(),
        speed: m.mirror_speed_bound(),
    })
}

#[wasm_bindgen]
pub struct Simulation {
    t: Vec<f64>,
    total: Vec<f64>,
    first: Vec<f64>,
    energy: Vec<f64>,
    spectrum: Vec<f64>,
    max_defect: f64,
    steps: usize,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    /// Total particle number at each sample.
    #[wasm_bindgen(getter)]
    pub fn total(&self) -> Vec<f64> {
        self.total.clone()
    }
    /// Particle number in mode 1 at each sample.
    #[wasm_bindgen(getter)]
    pub fn first(&self) -> Vec<f64> {
        self.first.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> Vec<f64> {
        self.energy.clone()
    }
    /// Final `N_k`, `k = 1..k_max`.
    #[wasm_bindgen(getter)]
    pub fn spectrum(&self) -> Vec<f64> {
        self.spectrum.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn max_defect(&self) -> f64 {
        self.max_defect
    }
    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Integrate from the vacuum and sample `samples` points up to `t_max`.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate(
    kind: u8,
    l0: f64,
    epsilon: f64,
    n: f64,
    true_resonance: bool,
    k_max: usize,
    t_max: f64,
    samples: usize,
) -> Result<Simulation, JsError> {
    simulate_checked(kind, l0, epsilon, n, true_resonance, k_max, t_max, samples).map_err(js)
}

#[allow(clippy::too_many_arguments)]
fn simulate_checked(
    kind: u8,
    l0: f64,
    epsilon: f64,
    n: f64,
    true_resonance: bool,
    k_max: usize,
    t_max: f64,
    samples: usize,
) -> Res<Simulation> {
    if k_max > MAX_KMAX {
        return Err(format!("k_max is limited to {MAX_KMAX} here"));
    }
    let m = motion(kind, l0, epsilon, n, true_resonance)?;
    grid(t_max, samples)?;
    let integ = IntegratorConfig {
        sample_interval: t_max / (samples - 1) as f64,
        ..IntegratorConfig::default()
    };
    let mut sim = Simulation {
        t: Vec::with_capacity(samples),
        total: Vec::with_capacity(samples),
        first: Vec::with_capacity(samples),
        energy: Vec::with_capacity(samples),
        spectrum: Vec::new(),
        max_defect: 0.0,
        steps: 0,
    };
    let trunc = Truncation::new(k_max).map_err(|e| e.to_string())?;
    let run = integrate(&m, trunc, &integ, t_max, |s| {
        let sp = spectrum(s, &m, ObservableMode::EverySample);
        sim.t.push(sp.t);
        sim.total.push(sp.total);
        sim.first.push(sp.n[0]);
        sim.energy.push(sp.energy);
        sim.max_defect = sim.max_defect.max(sp.unitarity_defect);
    })
    .map_err(|e| e.to_string())?;
    sim.spectrum = particle_spectrum(&bogoliubov_frame(&run.state, &m)).n;
    sim.steps = run.stats.accepted;
    Ok(sim)
}

#[wasm_bindgen]
pub struct ClosedForm {
    t: Vec<f64>,
    tau: Vec<f64>,
    total: Vec<f64>,
    first: Vec<f64>,
    energy: Vec<f64>,
}

#[wasm_bindgen]
impl ClosedForm {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn tau(&self) -> Vec<f64> {
        self.tau.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn total(&self) -> Vec<f64> {
        self.total.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn first(&self) -> Vec<f64> {
        self.first.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> Vec<f64> {
        self.energy.clone()
    }
}

/// Resonant small-amplitude curves for `N`, `N₁` and `E`.
#[wasm_bindgen]
pub fn closed_form(
    kind: u8,
    l0: f64,
    epsilon: f64,
    true_resonance: bool,
    t_max: f64,
    samples: usize,
) -> Result<ClosedForm, JsError> {
    closed_form_checked(kind, l0, epsilon, true_resonance, t_max, samples).map_err(js)
}

fn closed_form_checked(
    kind: u8,
    l0: f64,
    epsilon: f64,
    true_resonance: bool,
    t_max: f64,
    samples: usize,
) -> Res<ClosedForm> {
    let m = motion(kind, l0, epsilon, 1.0, true_resonance)?;
    let t = grid(t_max, samples)?;
    let tau: Vec<SlowTime> = t.iter().map(|&t| SlowTime::at(&m, t)).collect();
    let omega1 = std::f64::consts::PI / m.l0;
    Ok(ClosedForm {
        total: tau.iter().map(|&s| dodonov_n(s)).collect(),
        first: tau.iter().map(|&s| dodonov_n1(s)).collect(),
        energy: tau.iter().map(|&s| dodonov_energy(s, omega1)).collect(),
        tau: tau.iter().map(|s| s.tau()).collect(),
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_spans_requested_periods() {
        let tr = trajectory_checked(2, 1.0, 0.1, 1.0, false, 2.0, 101).unwrap();
        assert_eq!(tr.t.len(), 101);
        assert!((tr.t[100] - 2.0 * tr.period).abs() < 1e-12);
        let max = tr.length.iter().copied().fold(0.0, f64::max);
        assert!((max - 1.2).abs() < 1e-9);
        assert!(tr.gamma[0].abs() < 1e-15);
    }

    #[test]
    fn simulation_follows_closed_form_early() {
        let sim = simulate_checked(1, 1.0, 0.01, 1.0, false, 8, 20.0, 11).unwrap();
        let cf = closed_form_checked(1, 1.0, 0.01, false, 20.0, 11).unwrap();
        assert_eq!(sim.spectrum.len(), 8);
        assert!(sim.max_defect < 1e-8);
        let (a, b) = (sim.total[10], cf.total[10]);
        assert!((a - b).abs() / b < 0.05, "{a} vs {b}");
    }

    #[test]
    fn rejects_large_cutoff() {
        assert!(simulate_checked(1, 1.0, 0.01, 1.0, false, MAX_KMAX + 1, 1.0, 2).is_err());
    }
}
