#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;

use crate::Error;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Masses and the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub lplus: Complex64,
    pub lminus: Complex64,
    /// m2 m3 / m
    pub a1: f64,
    /// m1 m3 / m
    pub a2: f64,
    /// m1 m2 / m
    pub a3: f64,
}

impl MassParams {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self, Error> {
        for mi in [m1, m2, m3] {
            if !(mi > 0.0) || !mi.is_finite() {
                return Err(Error::NonPositiveMass(mi));
            }
        }
        let m = m1 + m2 + m3;
        let m12 = m1 + m2;
        let nu1 = m1 / m12;
        let nu2 = m2 / m12;
        let re = 0.5 * (nu1 - nu2);
        Ok(Self {
            m1,
            m2,
            m3,
            m,
            mu1: m1 * m2 / m12,
            mu2: m12 * m3 / m,
            nu1,
            nu2,
            lplus: Complex64::new(re, SQRT3_2),
            lminus: Complex64::new(re, -SQRT3_2),
            a1: m2 * m3 / m,
            a2: m1 * m3 / m,
            a3: m1 * m2 / m,
        })
    }

    pub fn equal() -> Self {
        Self::new(1.0, 1.0, 1.0).unwrap()
    }

    pub fn masses(&self) -> [f64; 3] {
        [self.m1, self.m2, self.m3]
    }

    /// Pair products m1 m2, m1 m3, m2 m3 (ordered as `Pair::ALL`).
    pub fn pair_products(&self) -> [f64; 3] {
        [self.m1 * self.m2, self.m1 * self.m3, self.m2 * self.m3]
    }

    /// The constant c in kappa + (x kappa_x + y kappa_y)/2 = c (1 - x^2 - y^2) / N^6.
    pub fn syzygy_c(&self) -> f64 {
        let (m1, m2, m3) = (self.m1, self.m2, self.m3);
        3.0 * m1 * m2 * m3 * (m1 * m2 + m1 * m3 + m2 * m3) / (self.m * self.m)
    }

    /// Squared mass norm of a Jacobi vector.
    pub fn norm2(&self, xi: [Complex64; 2]) -> f64 {
        self.mu1 * xi[0].norm_sqr() + self.mu2 * xi[1].norm_sqr()
    }

    /// Hermitian mass inner product <a, b>.
    pub fn inner(&self, a: [Complex64; 2], b: [Complex64; 2]) -> Complex64 {
        a[0].conj() * b[0] * self.mu1 + a[1].conj() * b[1] * self.mu2
    }
}

/// Jacobi positions and velocities: xi1 = q2 - q1, xi2 = q3 - c12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiState {
    pub xi1: Complex64,
    pub xi2: Complex64,
    pub xidot1: Complex64,
    pub xidot2: Complex64,
}

impl JacobiState {
    pub fn at_rest(xi1: Complex64, xi2: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { xi1, xi2, xidot1: z, xidot2: z }
    }

    pub fn positions(&self) -> [Complex64; 2] {
        [self.xi1, self.xi2]
    }

    pub fn velocities(&self) -> [Complex64; 2] {
        [self.xidot1, self.xidot2]
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.xi1.re,
            self.xi1.im,
            self.xi2.re,
            self.xi2.im,
            self.xidot1.re,
            self.xidot1.im,
            self.xidot2.re,
            self.xidot2.im,
        ]
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        Self {
            xi1: Complex64::new(a[0], a[1]),
            xi2: Complex64::new(a[2], a[3]),
            xidot1: Complex64::new(a[4], a[5]),
            xidot2: Complex64::new(a[6], a[7]),
        }
    }

    /// Body positions in the center-of-mass frame.
    pub fn bodies(&self, m: &MassParams) -> [Complex64; 3] {
        let c12 = -self.xi2 * (m.m3 / m.m);
        [c12 - self.xi1 * m.nu2, c12 + self.xi1 * m.nu1, c12 + self.xi2]
    }

    pub fn from_bodies(q: [Complex64; 3], m: &MassParams) -> Self {
        let c12 = (q[0] * m.m1 + q[1] * m.m2) / (m.m1 + m.m2);
        Self::at_rest(q[1] - q[0], q[2] - c12)
    }
}

/// Size and shape of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapePoint {
    pub r: f64,
    pub x: f64,
    pub y: f64,
}

impl ShapePoint {
    pub fn new(r: f64, x: f64, y: f64) -> Self {
        Self { r, x, y }
    }

    pub fn sphere(&self) -> [f64; 3] {
        shape_to_sphere(self.x, self.y)
    }
}

/// Unnormalized section xi(w) = M (1, w) of the quotient map.
pub fn section(x: f64, y: f64, m: &MassParams) -> [Complex64; 2] {
    let w = Complex64::new(x, y);
    let one = Complex64::new(1.0, 0.0);
    [one - w, m.lplus - m.lminus * w]
}

pub fn jacobi_to_shape(state: &JacobiState, m: &MassParams) -> Result<ShapePoint, Error> {
    let r = m.norm2(state.positions()).sqrt();
    if r == 0.0 {
        return Err(Error::TripleCollision);
    }
    let num = state.xi2 - m.lplus * state.xi1;
    let den = state.xi2 - m.lminus * state.xi1;
    if den.norm() <= 1e-15 * r {
        return Err(Error::ShapeAtInfinity);
    }
    let w = num / den;
    Ok(ShapePoint { r, x: w.re, y: w.im })
}

/// Representative with mass norm r and xi1 rotated onto the positive real axis
/// (xi2 when xi1 vanishes).
pub fn shape_to_jacobi(p: &ShapePoint, m: &MassParams) -> [Complex64; 2] {
    let s = section(p.x, p.y, m);
    let n = m.norm2(s).sqrt();
    let lead = if s[0].norm() > 1e-14 * n { s[0] } else { s[1] };
    let phase = lead.conj() / lead.norm();
    let k = p.r / n;
    [s[0] * phase * k, s[1] * phase * k]
}

/// Zero-angular-momentum Jacobi state with given size, shape and their time derivatives.
pub fn lift_state(
    p: &ShapePoint,
    rdot: f64,
    xdot: f64,
    ydot: f64,
    m: &MassParams,
) -> JacobiState {
    let s = section(p.x, p.y, m);
    let sd = [Complex64::new(-xdot, -ydot), -m.lminus * Complex64::new(xdot, ydot)];
    let n2 = m.norm2(s);
    let n = n2.sqrt();
    let u = [s[0] / n, s[1] / n];
    let proj = m.inner(s, sd).re / n2;
    let ud = [(sd[0] - s[0] * proj) / n, (sd[1] - s[1] * proj) / n];
    // remove the rotational part so that Im<xi, xidot> = 0
    let alpha = m.inner(u, ud).im;
    let i = Complex64::new(0.0, 1.0);
    let xi = shape_to_jacobi(p, m);
    let phase = if u[0].norm() > 1e-14 { xi[0] / u[0] } else { xi[1] / u[1] } / p.r;
    let vel = |k: usize| (u[k] * rdot + (ud[k] - i * u[k] * alpha) * p.r) * phase;
    JacobiState { xi1: xi[0], xi2: xi[1], xidot1: vel(0), xidot2: vel(1) }
}

pub fn angular_momentum(state: &JacobiState, m: &MassParams) -> f64 {
    m.inner(state.positions(), state.velocities()).im
}

/// Stereographic image on the unit sphere; the disk maps to the upper hemisphere.
pub fn shape_to_sphere(x: f64, y: f64) -> [f64; 3] {
    let q = x * x + y * y;
    let d = 1.0 + q;
    [2.0 * x / d, 2.0 * y / d, (1.0 - q) / d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_mass_constants() {
        let m = MassParams::equal();
        assert!((m.mu1 - 0.5).abs() < 1e-15);
        assert!((m.mu2 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.nu1, 0.5);
        assert!(m.lplus.re.abs() < 1e-15 && (m.lplus.im - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(m.lminus, m.lplus.conj());
    }

    #[test]
    fn unequal_mass_constants() {
        let m = MassParams::new(1.0, 2.0, 10.0).unwrap();
        assert!((m.nu1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.nu2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.lplus.re + 1.0 / 6.0).abs() < 1e-15);
        for m3 in [0.1, 1.0, 7.0] {
            assert_eq!(MassParams::new(1.0, 1.0, m3).unwrap().mu1, 0.5);
        }
        assert!(MassParams::new(0.0, 1.0, 1.0).is_err());
        assert!(MassParams::new(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn special_shapes() {
        let m = MassParams::new(1.0, 2.0, 10.0).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let eq = JacobiState::at_rest(one, m.lplus);
        let p = jacobi_to_shape(&eq, &m).unwrap();
        assert!(p.x.abs() < 1e-15 && p.y.abs() < 1e-15);
        let bin = JacobiState::at_rest(Complex64::new(0.0, 0.0), Complex64::new(0.3, -0.2));
        let p = jacobi_to_shape(&bin, &m).unwrap();
        assert!((p.x - 1.0).abs() < 1e-14 && p.y.abs() < 1e-14);
        let zero = JacobiState::at_rest(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(jacobi_to_shape(&zero, &m), Err(Error::TripleCollision));
    }

    #[test]
    fn sphere_points() {
        assert_eq!(shape_to_sphere(0.0, 0.0), [0.0, 0.0, 1.0]);
        assert_eq!(shape_to_sphere(1.0, 0.0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn angular_momentum_of_rotation() {
        let m = MassParams::new(1.0, 2.0, 3.0).unwrap();
        let xi = [Complex64::new(0.4, -0.3), Complex64::new(-0.2, 0.9)];
        let i = Complex64::new(0.0, 1.0);
        let st = JacobiState { xi1: xi[0], xi2: xi[1], xidot1: i * xi[0], xidot2: i * xi[1] };
        assert!((angular_momentum(&st, &m) - m.norm2(xi)).abs() < 1e-14);
        let st = JacobiState { xidot1: xi[0] * 2.5, xidot2: xi[1] * 2.5, ..st };
        assert!(angular_momentum(&st, &m).abs() < 1e-15);
    }
}
