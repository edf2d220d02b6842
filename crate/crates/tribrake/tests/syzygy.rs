use core::f64::consts::PI;
use tribrake::syzygy::*;
use tribrake::{Error, MassParams, Pair};

#[test]
fn first_syzygy_reaches_the_circle() {
    let m = MassParams::equal();
    let rec = first_syzygy(0.1, 0.2, &m, 1.0, &SyzygyOptions::default()).unwrap();
    assert!(!rec.collision);
    let z = 1.0 - rec.state.x * rec.state.x - rec.state.y * rec.state.y;
    assert!(z.abs() < 1e-10);
    assert!(rec.z_monotone);
    assert!(rec.max_idot < 0.0);
    assert!(rec.t0 > 0.0 && rec.s0 > 0.0);
    assert!([1, 2, 3].contains(&rec.syzygy_type));
}

#[test]
fn lagrange_start_has_no_syzygy() {
    let m = MassParams::equal();
    assert_eq!(first_syzygy(0.0, 0.0, &m, 1.0, &SyzygyOptions::default()), Err(Error::LagrangeHomothetic));
}

#[test]
fn isosceles_start_ends_in_binary_collision() {
    // on the symmetry line of masses 1 and 2 the orbit stays isosceles and hits r12 = 0
    let m = MassParams::equal();
    let rec = first_syzygy(0.3, 0.0, &m, 1.0, &SyzygyOptions::default()).unwrap();
    assert!(rec.collision);
    assert_eq!(rec.collision_pair, Some(Pair::P12));
    assert!(rec.angle.abs() < 1e-6);
}

#[test]
fn syzygy_types_on_the_circle() {
    // the middle mass is the one opposite the longest side
    for (pair, middle) in [(Pair::P12, 3u8), (Pair::P13, 2), (Pair::P23, 1)] {
        let a = pair.angle() + PI;
        assert_eq!(syzygy_type(a.cos(), a.sin()), middle);
    }
}

#[test]
fn stutter_returns_to_the_circle() {
    let m = MassParams::equal();
    let opts = SyzygyOptions::default();
    let rec = first_syzygy(0.2, -0.1, &m, 1.0, &opts).unwrap();
    let next = stutter(&rec, &m, &opts).unwrap();
    let z = 1.0 - next.state.x * next.state.x - next.state.y * next.state.y;
    assert!(z.abs() < 1e-10 || next.collision);
}

#[test]
fn degree_one_near_lagrange() {
    let opts = SyzygyOptions::default();
    for m in [MassParams::equal(), MassParams::new(1.0, 2.0, 10.0).unwrap()] {
        assert_eq!(winding_degree(0.05, 48, false, &m, 1.0, &opts).unwrap(), 1);
        assert_eq!(winding_degree(0.05, 48, true, &m, 1.0, &opts).unwrap(), -1);
    }
}

#[test]
fn grid_cardinality() {
    let g = latlon_grid(20, 36);
    assert_eq!(g.len(), 720);
    assert!(g.iter().all(|&(_, _, x, y)| x * x + y * y < 1.0));
}

#[test]
fn idot_probe_on_a_small_sample() {
    let m = MassParams::equal();
    let starts: Vec<(f64, f64)> = (0..12).map(|k| {
        let a = k as f64 * PI / 6.0 + 0.3;
        (0.4 * a.cos(), 0.4 * a.sin())
    }).collect();
    let rep = idot_monotonicity_probe(&starts, &m, 1.0, &SyzygyOptions::default());
    assert_eq!(rep.samples, 12);
    assert!(rep.failures.is_empty() && rep.violations.is_empty() && rep.z_nonmonotone.is_empty());
    assert!(rep.worst_idot < 0.0);
}
