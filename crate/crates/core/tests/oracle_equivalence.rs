use dyncav::cavity::{CavityMotion, MotionKind};
use dyncav::coupling::{Frame, Truncation};
use dyncav::evolve::{integrate, IntegratorConfig};
use dyncav::oracles::second_order_reference;

fn worst_gap(motion: &CavityMotion, k_max: usize, t_max: f64, frame: Frame) -> f64 {
    let trunc = Truncation::new(k_max).unwrap();
    let cfg = IntegratorConfig {
        sample_interval: 0.25,
        frame,
        ..Default::default()
    };
    let reference = second_order_reference(motion, trunc, &cfg, t_max).unwrap();
    let mut first = Vec::new();
    integrate(motion, trunc, &cfg, t_max, |s| first.push(s.clone())).unwrap();
    assert_eq!(first.len(), reference.len());
    first
        .iter()
        .zip(&reference)
        .map(|(a, b)| {
            assert_eq!(a.t, b.t);
            a.max_abs_diff(b)
        })
        .fold(0.0, f64::max)
}

#[test]
fn first_and_second_order_agree_for_each_motion_kind() {
    for kind in [
        MotionKind::Sine,
        MotionKind::SineSquared,
        MotionKind::SineCubed,
    ] {
        let m = CavityMotion::new(1.0, 0.001, kind, 1.0).unwrap();
        let gap = worst_gap(&m, 5, 10.0, Frame::Rotating);
        assert!(gap < 1e-6, "{kind:?}: {gap}");
    }
}

#[test]
fn equivalence_holds_at_large_amplitude_in_both_frames() {
    let m = CavityMotion::new(1.0, 0.1, MotionKind::Sine, 1.0).unwrap();
    for frame in [Frame::Rotating, Frame::Lab] {
        let gap = worst_gap(&m, 6, 5.0 * m.period(), frame);
        assert!(gap < 1e-6, "{frame:?}: {gap}");
    }
    let m = CavityMotion::new(0.7, 0.2, MotionKind::SineSquared, 1.5).unwrap();
    let gap = worst_gap(&m, 4, 5.0 * m.period(), Frame::Rotating);
    assert!(gap < 1e-6, "{gap}");
}
