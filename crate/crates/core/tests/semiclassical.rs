use std::f64::consts::PI;

use bloch_cat::semiclassical::{piecewise_trajectory, SemiclassicalRun};
use bloch_cat::{units, BandStructure, ForceSchedule, PotentialSpec, Spin};
use proptest::prelude::*;

fn bands(spin: Spin, depth: f64) -> BandStructure {
    BandStructure::solve_default(&PotentialSpec::new(spin, depth, PI / 2.0).unwrap(), 1).unwrap()
}

#[test]
fn zeros_coincide_across_depths() {
    let f = 0.005;
    let period = units::bloch_period(f).unwrap();
    let shallow = bands(Spin::One, 2.0);
    let deep = bands(Spin::One, 8.0);
    let a = SemiclassicalRun::new(&shallow, 0, f, 0.0).unwrap();
    let b = SemiclassicalRun::new(&deep, 0, f, 0.0).unwrap();
    for k in 0..4 {
        let t = k as f64 * period;
        assert!(a.displacement(t).unwrap().abs() < 1e-9);
        assert!(b.displacement(t).unwrap().abs() < 1e-9);
    }
    let (ma, mb) = (a.displacement(period / 2.0).unwrap(), b.displacement(period / 2.0).unwrap());
    assert!((ma - mb).abs() > 1.0, "{ma} vs {mb}");
}

#[test]
fn reversal_doubles_the_excursion() {
    let f = 0.005;
    let period = units::bloch_period(f).unwrap();
    let b = bands(Spin::Zero, 5.0);
    let width = b.band_width(0).unwrap();
    let schedule = ForceSchedule::reverse_at(f, period / 2.0);
    let times: Vec<f64> = (0..=64).map(|i| i as f64 * period / 64.0).collect();
    let traj = piecewise_trajectory(&b, 0, &schedule, 0.0, &times).unwrap();
    let last = traj.last().unwrap();
    assert!((last.displacement - 2.0 * width / f).abs() < 1e-6 * width / f, "{}", last.displacement);
    assert!(traj[32..].windows(2).all(|w| w[1].displacement >= w[0].displacement - 1e-9));
}

#[test]
fn freezing_holds_the_position() {
    let f = 0.005;
    let period = units::bloch_period(f).unwrap();
    let b = bands(Spin::One, 5.0);
    let schedule = ForceSchedule::freeze_at(f, period / 2.0);
    let times: Vec<f64> = (32..=64).map(|i| i as f64 * period / 64.0).collect();
    let traj = piecewise_trajectory(&b, 0, &schedule, 0.0, &times).unwrap();
    let r0 = traj[0].displacement;
    assert!(traj.iter().all(|p| (p.displacement - r0).abs() < 1e-6), "{r0}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lowest_band_displacement_is_non_negative(
        depth in 0.5f64..15.0,
        f in 0.001f64..0.05,
        frac in 0.0f64..3.0,
        spin in prop_oneof![Just(Spin::Zero), Just(Spin::One)],
    ) {
        let b = bands(spin, depth);
        let run = SemiclassicalRun::new(&b, 0, f, 0.0).unwrap();
        let t = frac * units::bloch_period(f).unwrap();
        prop_assert!(run.displacement(t).unwrap() >= -1e-9);
    }

    #[test]
    fn maximum_scales_inversely_with_force(
        depth in 0.5f64..15.0,
        f in 0.001f64..0.05,
        s in 0.1f64..10.0,
    ) {
        let b = bands(Spin::One, depth);
        let m1 = SemiclassicalRun::new(&b, 0, f, 0.0).unwrap().max_displacement().unwrap();
        let m2 = SemiclassicalRun::new(&b, 0, s * f, 0.0).unwrap().max_displacement().unwrap();
        prop_assert!((m2 * s - m1).abs() < 1e-9 * m1);
    }
}
