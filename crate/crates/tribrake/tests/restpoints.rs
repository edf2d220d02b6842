use tribrake::restpoint::*;
use tribrake::MassParams;

#[test]
fn equal_mass_restpoints() {
    let m = MassParams::equal();
    let set = find_restpoints(&m).unwrap();
    assert_eq!(set.finite.len(), 8);
    let six = 6f64.sqrt();
    let lag: Vec<_> = set.finite.iter().filter(|p| p.kind == Kind::Lagrange).collect();
    assert_eq!(lag.len(), 2);
    for p in lag {
        let expect = if p.sign == Sign::Plus { six } else { -six };
        assert!((p.v - expect).abs() < 1e-10);
    }
    assert!((set.lagrange_at_infinity[0] - six).abs() < 1e-10);
    // Euler: v^2 = 2 * 5/sqrt(2)
    for p in set.finite.iter().filter(|p| p.kind != Kind::Lagrange) {
        assert!((p.v.abs() - (5.0 * 2f64.sqrt()).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn dimensions_at_every_restpoint() {
    for m in [MassParams::equal(), MassParams::new(1.0, 2.0, 10.0).unwrap()] {
        let set = find_restpoints(&m).unwrap();
        for p in &set.finite {
            let lin = linearize(p, &m, 1.0).unwrap();
            let expect = match (p.kind, p.sign) {
                (Kind::Lagrange, Sign::Minus) => (3, 2),
                (Kind::Lagrange, Sign::Plus) => (2, 3),
                (_, Sign::Plus) => (3, 2),
                (_, Sign::Minus) => (2, 3),
            };
            assert_eq!((lin.stable_dim, lin.unstable_dim), expect, "{p:?}");
            assert!((lin.homothety_eigenvalue - p.v).abs() < 1e-8);
            assert!(lin.restriction_residual < 1e-10);
            assert!(!lin.flags.jacobian_mismatch && lin.jacobian_fd_error < 1e-6);
        }
    }
}

#[test]
fn lagrange_minus_unstable_directions_move_the_shape() {
    let m = MassParams::equal();
    let set = find_restpoints(&m).unwrap();
    let lm = set.finite.iter().find(|p| p.kind == Kind::Lagrange && p.sign == Sign::Minus).unwrap();
    let lin = linearize(lm, &m, 1.0).unwrap();
    assert_eq!(lin.unstable_shape_rank, 2);
}

#[test]
fn plus_and_minus_spectra_are_negatives() {
    // time reversal maps p- to p+ and flips the restricted spectrum
    let m = MassParams::new(1.0, 2.0, 3.0).unwrap();
    let set = find_restpoints(&m).unwrap();
    for pair in set.finite.chunks(2) {
        let a = linearize(&pair[0], &m, 1.0).unwrap();
        let b = linearize(&pair[1], &m, 1.0).unwrap();
        for z in &a.eigenvalues {
            let closest = b.eigenvalues.iter().map(|w| (w + z).norm()).fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-7 * (1.0 + z.norm()), "{z} {:?}", b.eigenvalues);
        }
    }
}

#[test]
fn spiraling_classification() {
    let rep = spiraling_test(&MassParams::equal(), 1.0).unwrap();
    assert_eq!(rep.spiral, [Spiral::Spiraling; 3]);
    for ev in &rep.eigenvalues {
        assert!(ev.iter().any(|z| z.re < 0.0 && z.im.abs() > 1.0));
    }
    // a heavy third mass makes its own Euler point non-spiraling
    let rep = spiraling_test(&MassParams::new(1.0, 1.0, 500.0).unwrap(), 1.0).unwrap();
    assert_eq!(rep.spiral[2], Spiral::NonSpiraling);
}

#[test]
fn simplex_grid_is_strictly_positive() {
    let g = simplex_grid(10);
    assert_eq!(g.len(), 36);
    for p in g {
        assert!(p.iter().all(|&v| v > 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
