use core::f64::consts::{FRAC_PI_2, PI};
use tribrake::dynamics::{collision_slope, iso_v};
use tribrake::integrate::Options;
use tribrake::isosceles::*;

fn at_tol(rtol: f64) -> BranchOptions {
    BranchOptions { tol: Options::with_tol(rtol, rtol * 1e-2), ..Default::default() }
}

#[test]
fn lagrange_point_of_the_isosceles_family() {
    // equal masses: V(theta*) = 3 and v* = sqrt(6)
    assert!((iso_v(theta_star(1.0).unwrap(), 1.0) - 3.0).abs() < 1e-10);
    assert!((v_star(1.0).unwrap() - 6f64.sqrt()).abs() < 1e-10);
    assert!(theta_star(0.0).is_err());
}

#[test]
fn collision_slope_values() {
    // at theta = 0 with v = 0 the slope is sqrt(2 W(0)) = sqrt(5 sqrt 2)
    let s = collision_slope(0.0, 0.0, 1.0).unwrap();
    assert!((s - (5.0 * 2f64.sqrt()).sqrt()).abs() < 1e-12);
    // outside w >= 0 there is no slope
    assert!(collision_slope(0.0, 10.0, 1.0).is_err());
}

#[test]
fn branch_values_at_unit_mass() {
    let g = trace_branch(Branch::Gamma, 1.0, &at_tol(1e-10)).unwrap();
    let gp = trace_branch(Branch::GammaPrime, 1.0, &at_tol(1e-10)).unwrap();
    let (a, v1, v2, v3) = (g.v_3pi4.unwrap(), g.v1.unwrap(), g.v2.unwrap(), gp.v3.unwrap());
    assert!(v3 <= -1.3);
    assert!(a <= -1.6);
    assert!(v1 - a <= 1.56);
    assert!(v1 >= -3f64.sqrt() && v1 < 0.0);
    assert!(v2 > 0.0);
    assert!(g.terminated_at.is_none() && gp.terminated_at.is_none());
}

#[test]
fn branches_increase() {
    // v grows along both branches (the slope sqrt(2W - v^2 cos^2)/(1 + sin^2) is nonnegative)
    for which in [Branch::Gamma, Branch::GammaPrime] {
        let t = trace_branch(which, 1.0, &BranchOptions::default()).unwrap();
        for w in t.samples.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 >= w[0].1 - 1e-12);
        }
    }
}

#[test]
fn branch_values_are_stable_under_tolerance_halving() {
    let a = trace_branch(Branch::Gamma, 1.0, &at_tol(1e-10)).unwrap();
    let b = trace_branch(Branch::Gamma, 1.0, &at_tol(5e-11)).unwrap();
    let c = trace_branch(Branch::Gamma, 1.0, &at_tol(1e-12)).unwrap();
    for (x, y) in [(a.v2, b.v2), (b.v2, c.v2), (a.v1, c.v1)] {
        assert!((x.unwrap() - y.unwrap()).abs() < 1e-6);
    }
}

#[test]
fn admissibility_threshold_near_2_662() {
    let t = admissibility_threshold(2.0, 3.0, 1e-4, &BranchOptions::default()).unwrap();
    assert!((t - 2.662).abs() < 0.01, "{t}");
    assert!(admissible(1.0, &BranchOptions::default()).unwrap().admissible);
    let bad = admissible(3.0, &BranchOptions::default()).unwrap();
    assert!(!bad.admissible && bad.reason.is_some());
}

#[test]
fn regions_partition_the_interval() {
    let ts = theta_star(1.0).unwrap();
    assert_eq!(region(ts - PI, ts), Some(RegionId::I));
    assert_eq!(region(-1.0, ts), Some(RegionId::II));
    assert_eq!(region(-0.1, ts), Some(RegionId::III));
    assert_eq!(region(0.1, ts), None);
}

#[test]
fn periodic_brake_orbit_at_unit_mass() {
    let orb = find_periodic_brake(1.0, &ShotOptions::default()).unwrap();
    let ts = theta_star(1.0).unwrap();
    assert!(orb.theta0 > ts - PI && orb.theta0 < -FRAC_PI_2);
    assert!(orb.v_end.abs() < 1e-10);
    assert!(orb.v_half < 0.0);
    assert!(orb.closure_error < 1e-6, "{}", orb.closure_error);
    assert!(!orb.brackets.is_empty() && orb.roots.len() == orb.brackets.len());

    // the assembled period ends where it started, with the reflected pieces joining smoothly
    let full = assemble_period(&orb.quarter);
    let (s0, y0) = full[0];
    let (s1, y1) = *full.last().unwrap();
    assert!((s1 - s0 - 4.0 * orb.t2).abs() < 1e-12);
    for i in 0..4 {
        assert!((y1[i] - y0[i]).abs() < 1e-6);
    }
    for w in full.windows(2) {
        assert!(w[1].0 >= w[0].0);
        let jump = (0..4).fold(0.0f64, |a, i| a.max((w[1].1[i] - w[0].1[i]).abs()));
        assert!(jump < 0.5, "{jump} at s = {}", w[0].0);
    }
    // every reflection used maps solutions to solutions
    assert!(reflection_residual(&orb.quarter, Reflection::Reversing, 0.0, 1.0) < 1e-10);
    assert!(reflection_residual(&orb.quarter, Reflection::TimeReversal, 0.0, 1.0) < 1e-10);
    assert!(reflection_residual(&orb.quarter, Reflection::Mirror, 0.0, 1.0) < 1e-10);

    // the reduced orbit is a Newtonian solution with energy -1
    let chk = newtonian_check(&orb.quarter, &orb.quarter_t, 1.0, 0.05, &Options::with_tol(1e-12, 1e-14)).unwrap();
    assert!(chk.max_error < 1e-6 && chk.compared > 100);
    assert!((chk.energy + 1.0).abs() < 1e-9);
}

#[test]
fn reflections_are_involutions() {
    let seg: Vec<(f64, [f64; 4])> = (0..5).map(|k| (k as f64 * 0.1, [1.0 + k as f64, -0.5, -1.0 + 0.1 * k as f64, 0.3])).collect();
    for kind in [Reflection::Reversing, Reflection::Mirror, Reflection::TimeReversal] {
        let twice = reflect_orbit(&reflect_orbit(&seg, kind, 0.2), kind, 0.2);
        assert_eq!(twice.len(), seg.len());
        for (a, b) in twice.iter().zip(&seg) {
            assert!((a.0 - b.0).abs() < 1e-15);
            for i in 0..4 {
                assert!((a.1[i] - b.1[i]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn shots_either_reach_the_axis_or_turn_back() {
    for s in shooting_scan(1.0, 20, &ShotOptions::default()).unwrap() {
        match s.outcome.unwrap() {
            ShotOutcome::Reached { v_half, .. } => assert!(v_half.is_some()),
            ShotOutcome::TurnedBack { theta } => assert!(theta > -FRAC_PI_2),
        }
    }
}
