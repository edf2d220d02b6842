#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;

use crate::potential::{radial_factor, shape_potential};
use crate::{Error, JacobiState, MassParams};

/// Blown-up reduced state. Primes are derivatives in the rescaled time s, dt/ds = r^(3/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub r: f64,
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xp: f64,
    pub yp: f64,
}

impl ReducedState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.r, self.v, self.x, self.y, self.xp, self.yp]
    }

    pub fn from_slice(a: &[f64]) -> Self {
        Self { r: a[0], v: a[1], x: a[2], y: a[3], xp: a[4], yp: a[5] }
    }

    /// State extended with physical time as a 7th component.
    pub fn with_time(&self, t: f64) -> [f64; 7] {
        [self.r, self.v, self.x, self.y, self.xp, self.yp, t]
    }

    /// Physical-time velocities (rdot, xdot, ydot).
    pub fn physical_velocity(&self) -> [f64; 3] {
        let s = self.r.sqrt();
        let r32 = self.r * s;
        [self.v / s, self.xp / r32, self.yp / r32]
    }

    pub fn from_physical(r: f64, rdot: f64, x: f64, y: f64, xdot: f64, ydot: f64) -> Self {
        let r32 = r * r.sqrt();
        Self { r, v: rdot * r.sqrt(), x, y, xp: xdot * r32, yp: ydot * r32 }
    }
}

/// Newtonian accelerations in Jacobi coordinates; state is (xi1, xi2, xidot1, xidot2) as re/im pairs.
pub fn newtonian_field(s: &[f64; 8], m: &MassParams) -> Result<[f64; 8], Error> {
    let xi1 = Complex64::new(s[0], s[1]);
    let xi2 = Complex64::new(s[2], s[3]);
    let d13 = xi2 + xi1 * m.nu2;
    let d23 = xi2 - xi1 * m.nu1;
    let (n12, n13, n23) = (xi1.norm(), d13.norm(), d23.norm());
    if n12 == 0.0 {
        return Err(Error::Collision(crate::Pair::P12));
    }
    if n13 == 0.0 {
        return Err(Error::Collision(crate::Pair::P13));
    }
    if n23 == 0.0 {
        return Err(Error::Collision(crate::Pair::P23));
    }
    let [p12, p13, p23] = m.pair_products();
    let f12 = xi1 * (p12 / (n12 * n12 * n12));
    let f13 = d13 * (p13 / (n13 * n13 * n13));
    let f23 = d23 * (p23 / (n23 * n23 * n23));
    let a1 = (-f12 - f13 * m.nu2 + f23 * m.nu1) / m.mu1;
    let a2 = (-f13 - f23) / m.mu2;
    Ok([s[4], s[5], s[6], s[7], a1.re, a1.im, a2.re, a2.im])
}

/// K - U for a Jacobi state.
pub fn newtonian_energy(st: &JacobiState, m: &MassParams) -> f64 {
    let k = 0.5 * m.norm2(st.velocities());
    let q = st.bodies(m);
    let mm = m.pair_products();
    let u = mm[0] / (q[1] - q[0]).norm() + mm[1] / (q[2] - q[0]).norm() + mm[2] / (q[2] - q[1]).norm();
    k - u
}

/// Right-hand side of the blow-up system (independent of h; the energy enters through the state).
pub fn blowup_field(s: &ReducedState, m: &MassParams) -> Result<[f64; 6], Error> {
    let p = shape_potential(s.x, s.y, m).finite()?;
    let k = p.kappa;
    let [kx, ky] = p.kappa_grad;
    let q = s.xp * s.xp + s.yp * s.yp;
    let kdot = kx * s.xp + ky * s.yp;
    let xpp = (p.grad[0] - 0.5 * k * s.v * s.xp + 0.5 * kx * q - kdot * s.xp) / k;
    let ypp = (p.grad[1] - 0.5 * k * s.v * s.yp + 0.5 * ky * q - kdot * s.yp) / k;
    Ok([s.v * s.r, 0.5 * s.v * s.v + k * q - p.v, s.xp, s.yp, xpp, ypp])
}

/// Blow-up field with physical time appended (dt/ds = r^(3/2)).
pub fn blowup_field_t(s: &[f64; 7], m: &MassParams) -> Result<[f64; 7], Error> {
    let st = ReducedState::from_slice(s);
    let f = blowup_field(&st, m)?;
    let r = st.r.max(0.0);
    Ok([f[0], f[1], f[2], f[3], f[4], f[5], r * r.sqrt()])
}

pub fn energy_residual(s: &ReducedState, m: &MassParams, h: f64) -> f64 {
    let p = shape_potential(s.x, s.y, m);
    0.5 * s.v * s.v + 0.5 * p.kappa * (s.xp * s.xp + s.yp * s.yp) - p.v + s.r * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyzygyDiagnostic {
    pub z: f64,
    pub p1: f64,
    pub f1: f64,
    pub i: f64,
    pub idot: f64,
}

/// z = 1 - x^2 - y^2 with its conjugate p1 and coefficient F1 (physical time), plus I and dI/dt.
pub fn syzygy_diagnostic(s: &ReducedState, m: &MassParams) -> SyzygyDiagnostic {
    let p = shape_potential(s.x, s.y, m);
    let [_, xd, yd] = s.physical_velocity();
    let zdot = -2.0 * (s.x * xd + s.y * yd);
    let r2 = s.r * s.r;
    let n6 = p.norm2 * p.norm2 * p.norm2;
    SyzygyDiagnostic {
        z: 1.0 - s.x * s.x - s.y * s.y,
        p1: 0.5 * p.kappa * r2 * zdot,
        f1: radial_factor(s.x, s.y, m) / s.r + m.syzygy_c() * r2 * (xd * xd + yd * yd) / n6,
        i: r2,
        idot: 2.0 * s.v * s.r.sqrt(),
    }
}

/// The rescaled-time analogue on the collision manifold: p2 = kappa z'/2, F2 = phi + c (x'^2 + y'^2)/N^6.
pub fn collision_syzygy_diagnostic(s: &ReducedState, m: &MassParams) -> (f64, f64) {
    let p = shape_potential(s.x, s.y, m);
    let zp = -2.0 * (s.x * s.xp + s.y * s.yp);
    let n6 = p.norm2 * p.norm2 * p.norm2;
    (
        0.5 * p.kappa * zp,
        radial_factor(s.x, s.y, m) + m.syzygy_c() * (s.xp * s.xp + s.yp * s.yp) / n6,
    )
}

/// Worst-case period (2h)^(-3/2) [mi^2 mj^2 / (mi + mj)]^(3/2) for the two largest masses.
pub fn tau_star(m: &MassParams, h: f64) -> Result<f64, Error> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveEnergy(h));
    }
    let mut ms = m.masses();
    ms.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (mi, mj) = (ms[0], ms[1]);
    Ok((2.0 * h).powf(-1.5) * (mi * mi * mj * mj / (mi + mj)).powf(1.5))
}

// Isosceles subsystem: m1 = m2 = 1, h = 1.

/// W(theta) = cos^2(theta) V(theta) for the isosceles family with third mass m3.
pub fn iso_w(theta: f64, m3: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let ss = s * s;
    let cc = c * c;
    let d = (1.0 + ss) * (1.0 + ss) + 8.0 / m3 * ss;
    (1.0 + ss) * (core::f64::consts::FRAC_1_SQRT_2 + 2.0 * core::f64::consts::SQRT_2 * m3 * cc / d.sqrt())
}

/// dW/dtheta.
pub fn iso_dw(theta: f64, m3: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let ss = s * s;
    let cc = 1.0 - ss;
    let d = (1.0 + ss) * (1.0 + ss) + 8.0 / m3 * ss;
    let dd = 2.0 * (1.0 + ss) + 8.0 / m3;
    let k = 2.0 * core::f64::consts::SQRT_2 * m3;
    let g = core::f64::consts::FRAC_1_SQRT_2 + k * cc / d.sqrt();
    let dg = k * (-1.0 / d.sqrt() - 0.5 * cc * dd / (d * d.sqrt()));
    (g + (1.0 + ss) * dg) * 2.0 * s * c
}

/// V(theta) = W / cos^2 (infinite at binary collision).
pub fn iso_v(theta: f64, m3: f64) -> f64 {
    let c = theta.cos();
    iso_w(theta, m3) / (c * c)
}

pub fn iso_dv(theta: f64, m3: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let cc = c * c;
    iso_dw(theta, m3) / cc + 2.0 * s * c * iso_w(theta, m3) / (cc * cc)
}

/// Regularized isosceles field on (r, v, theta, w).
pub fn iso_field(s: &[f64; 4], m3: f64) -> [f64; 4] {
    let [r, v, th, w] = *s;
    let (sn, cs) = th.sin_cos();
    let ss = sn * sn;
    let cc = cs * cs;
    let q = (1.0 + ss) * (1.0 + ss);
    [
        v * r * cc,
        0.5 * v * v * cc + 0.25 * w * w * q - iso_w(th, m3),
        0.25 * w * q,
        iso_dw(th, m3) - 0.5 * v * w * cc + sn * cs * (2.0 * r + v * v - 0.5 * w * w * (1.0 + ss)),
    ]
}

/// Isosceles field with physical time appended (dt/ds = r^(3/2) cos^2).
pub fn iso_field_t(s: &[f64; 5], m3: f64) -> [f64; 5] {
    let f = iso_field(&[s[0], s[1], s[2], s[3]], m3);
    let c = s[2].cos();
    let r = s[0].max(0.0);
    [f[0], f[1], f[2], f[3], r * r.sqrt() * c * c]
}

pub fn iso_energy_residual(s: &[f64; 4], m3: f64) -> f64 {
    let [r, v, th, w] = *s;
    let (sn, cs) = th.sin_cos();
    let cc = cs * cs;
    let q = (1.0 + sn * sn) * (1.0 + sn * sn);
    0.5 * v * v * cc + 0.125 * w * w * q - iso_w(th, m3) + r * cc
}

/// dv/dtheta on the collision manifold for w > 0: sqrt(2W - v^2 cos^2) / (1 + sin^2).
pub fn collision_slope(theta: f64, v: f64, m3: f64) -> Result<f64, Error> {
    let (s, c) = theta.sin_cos();
    let a = 2.0 * iso_w(theta, m3) - v * v * c * c;
    if a < 0.0 {
        return Err(Error::Domain("v^2 > 2V(theta) on the collision manifold"));
    }
    Ok(a.sqrt() / (1.0 + s * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_restpoint_is_fixed() {
        let m = MassParams::equal();
        let s = ReducedState { r: 0.0, v: -6f64.sqrt(), x: 0.0, y: 0.0, xp: 0.0, yp: 0.0 };
        let f = blowup_field(&s, &m).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-14), "{f:?}");
    }

    #[test]
    fn brake_point_falls() {
        let m = MassParams::new(1.0, 2.0, 3.0).unwrap();
        let v = shape_potential(0.2, 0.1, &m).v;
        let s = ReducedState { r: v, v: 0.0, x: 0.2, y: 0.1, xp: 0.0, yp: 0.0 };
        let f = blowup_field(&s, &m).unwrap();
        assert!((f[1] + v).abs() < 1e-14);
        assert!(energy_residual(&s, &m, 1.0).abs() < 1e-14);
    }

    #[test]
    fn tau_star_values() {
        let m = MassParams::equal();
        for h in [0.5, 1.0, 3.0] {
            let t = tau_star(&m, h).unwrap();
            assert!((t - (4.0 * h).powf(-1.5)).abs() < 1e-15);
        }
        let a = tau_star(&MassParams::new(1.0, 3.0, 5.0).unwrap(), 1.0).unwrap();
        let b = tau_star(&MassParams::new(1.0, 5.0, 3.0).unwrap(), 1.0).unwrap();
        assert_eq!(a, b);
        assert!((tau_star(&MassParams::equal(), 4.0).unwrap() * 8.0 - tau_star(&MassParams::equal(), 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn iso_w_at_binary_collision() {
        for m3 in [0.3, 1.0, 2.0, 10.0] {
            for th in [core::f64::consts::FRAC_PI_2, -core::f64::consts::FRAC_PI_2] {
                assert!((iso_w(th, m3) - 2f64.sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn iso_dw_matches_difference() {
        for m3 in [0.5, 1.0, 2.7] {
            for th in [-2.5, -1.2, -0.3, 0.4, 1.1] {
                let e = 1e-6;
                let fd = (iso_w(th + e, m3) - iso_w(th - e, m3)) / (2.0 * e);
                assert!((iso_dw(th, m3) - fd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn slope_values() {
        let th = 0.3;
        let v = (2.0 * iso_v(th, 1.0)).sqrt();
        assert!(collision_slope(th, v, 1.0).unwrap().abs() < 1e-7);
        let s0 = collision_slope(0.0, 0.0, 1.0).unwrap();
        assert!((s0 - (5.0 * 2f64.sqrt()).sqrt()).abs() < 1e-14);
        assert!(collision_slope(0.0, 3.0, 1.0).is_err());
    }
}
