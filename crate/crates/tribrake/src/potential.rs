#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::{Error, MassParams, Pair};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Squared mutual distances of the section representative, ordered (12, 13, 23).
pub fn squared_distances(x: f64, y: f64) -> [f64; 3] {
    let s12 = (x - 1.0) * (x - 1.0) + y * y;
    let s13 = (x + 0.5) * (x + 0.5) + (y - SQRT3_2) * (y - SQRT3_2);
    let s23 = (x + 0.5) * (x + 0.5) + (y + SQRT3_2) * (y + SQRT3_2);
    [s12, s13, s23]
}

fn squared_distance_grads(x: f64, y: f64) -> [[f64; 2]; 3] {
    [
        [2.0 * (x - 1.0), 2.0 * y],
        [2.0 * (x + 0.5), 2.0 * (y - SQRT3_2)],
        [2.0 * (x + 0.5), 2.0 * (y + SQRT3_2)],
    ]
}

pub fn mutual_distances(x: f64, y: f64) -> [f64; 3] {
    squared_distances(x, y).map(|s| s.sqrt())
}

/// ||xi||^2 of the section representative (Lagrange's identity).
pub fn norm2(x: f64, y: f64, m: &MassParams) -> f64 {
    let s = squared_distances(x, y);
    m.a3 * s[0] + m.a2 * s[1] + m.a1 * s[2]
}

fn norm2_grad(x: f64, y: f64, m: &MassParams) -> [f64; 2] {
    let g = squared_distance_grads(x, y);
    let w = [m.a3, m.a2, m.a1];
    [
        w[0] * g[0][0] + w[1] * g[1][0] + w[2] * g[2][0],
        w[0] * g[0][1] + w[1] * g[1][1] + w[2] * g[2][1],
    ]
}

pub fn kappa(x: f64, y: f64, m: &MassParams) -> f64 {
    let n2 = norm2(x, y, m);
    3.0 * m.mu1 * m.mu2 / (n2 * n2)
}

pub fn kappa_grad(x: f64, y: f64, m: &MassParams) -> [f64; 2] {
    let n2 = norm2(x, y, m);
    let k = 3.0 * m.mu1 * m.mu2 / (n2 * n2);
    let g = norm2_grad(x, y, m);
    [-2.0 * k * g[0] / n2, -2.0 * k * g[1] / n2]
}

/// Shape potential and related quantities at a shape point.
///
/// At a collision shape `v` is `+inf`, the gradient is NaN and `collision` names the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEval {
    pub v: f64,
    pub grad: [f64; 2],
    pub kappa: f64,
    pub kappa_grad: [f64; 2],
    /// r_ij / ||xi||, ordered (12, 13, 23)
    pub rho: [f64; 3],
    pub norm2: f64,
    pub collision: Option<Pair>,
}

impl PotentialEval {
    pub fn finite(self) -> Result<Self, Error> {
        match self.collision {
            Some(p) => Err(Error::Collision(p)),
            None => Ok(self),
        }
    }

    pub fn min_rho(&self) -> f64 {
        self.rho[0].min(self.rho[1]).min(self.rho[2])
    }
}

pub fn shape_potential(x: f64, y: f64, m: &MassParams) -> PotentialEval {
    let s = squared_distances(x, y);
    let gs = squared_distance_grads(x, y);
    let mm = m.pair_products();
    let n2 = norm2(x, y, m);
    let n = n2.sqrt();
    let kap = 3.0 * m.mu1 * m.mu2 / (n2 * n2);
    let gn2 = norm2_grad(x, y, m);
    let kg = [-2.0 * kap * gn2[0] / n2, -2.0 * kap * gn2[1] / n2];
    let rho = s.map(|si| si.sqrt() / n);
    for p in Pair::ALL {
        if s[p.index()] == 0.0 {
            return PotentialEval {
                v: f64::INFINITY,
                grad: [f64::NAN; 2],
                kappa: kap,
                kappa_grad: kg,
                rho,
                norm2: n2,
                collision: Some(p),
            };
        }
    }
    let mut sum = 0.0;
    let mut gsum = [0.0; 2];
    for k in 0..3 {
        let inv = 1.0 / s[k].sqrt();
        sum += mm[k] * inv;
        let c = -0.5 * mm[k] * inv / s[k];
        gsum[0] += c * gs[k][0];
        gsum[1] += c * gs[k][1];
    }
    let gn = [gn2[0] / (2.0 * n), gn2[1] / (2.0 * n)];
    PotentialEval {
        v: n * sum,
        grad: [sum * gn[0] + n * gsum[0], sum * gn[1] + n * gsum[1]],
        kappa: kap,
        kappa_grad: kg,
        rho,
        norm2: n2,
        collision: None,
    }
}

/// Analytic Hessian of V.
pub fn potential_hessian(x: f64, y: f64, m: &MassParams) -> Result<[[f64; 2]; 2], Error> {
    let s = squared_distances(x, y);
    let gs = squared_distance_grads(x, y);
    let mm = m.pair_products();
    for p in Pair::ALL {
        if s[p.index()] == 0.0 {
            return Err(Error::Collision(p));
        }
    }
    let n2 = norm2(x, y, m);
    let n = n2.sqrt();
    let gn2 = norm2_grad(x, y, m);
    let gn = [gn2[0] / (2.0 * n), gn2[1] / (2.0 * n)];
    let a = m.a1 + m.a2 + m.a3;
    let mut hn = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let d = if i == j { 2.0 * a } else { 0.0 };
            hn[i][j] = (d - 2.0 * gn[i] * gn[j]) / (2.0 * n);
        }
    }
    let mut sum = 0.0;
    let mut gsum = [0.0; 2];
    let mut hs = [[0.0; 2]; 2];
    for k in 0..3 {
        let inv = 1.0 / s[k].sqrt();
        sum += mm[k] * inv;
        let c3 = mm[k] * inv / s[k];
        let c5 = c3 / s[k];
        for i in 0..2 {
            gsum[i] += -0.5 * c3 * gs[k][i];
            for j in 0..2 {
                let d = if i == j { 1.0 } else { 0.0 };
                hs[i][j] += 0.75 * c5 * gs[k][i] * gs[k][j] - c3 * d;
            }
        }
    }
    let mut h = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = sum * hn[i][j] + gn[i] * gsum[j] + gsum[i] * gn[j] + n * hs[i][j];
        }
    }
    Ok(h)
}

/// The factor phi >= 0 with x Vx + y Vy = phi (1 - x^2 - y^2).
pub fn radial_factor(x: f64, y: f64, m: &MassParams) -> f64 {
    let s = squared_distances(x, y);
    if s.iter().any(|&si| si == 0.0) {
        return f64::INFINITY;
    }
    let c = s.map(|si| 1.0 / (si * si.sqrt()));
    let g1 = (s[1] - s[0]) * (c[0] - c[1]);
    let g2 = (s[2] - s[0]) * (c[0] - c[2]);
    let g3 = (s[2] - s[1]) * (c[1] - c[2]);
    let n = norm2(x, y, m).sqrt();
    m.m1 * m.m2 * m.m3 / (2.0 * m.m * n) * (m.m1 * g1 + m.m2 * g2 + m.m3 * g3)
}

/// An Euler central configuration on the collinear circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollinearCc {
    /// 1, 2 or 3: the mass lying between the other two
    pub middle: usize,
    pub angle: f64,
    pub v: f64,
}

impl CollinearCc {
    pub fn xy(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }
}

/// Derivative of V along the collinear circle.
pub fn circle_derivative(alpha: f64, m: &MassParams) -> f64 {
    let (s, c) = alpha.sin_cos();
    let p = shape_potential(c, s, m);
    -s * p.grad[0] + c * p.grad[1]
}

/// Arc of the collinear circle (start, end angles) on which the given mass is in the middle.
pub fn euler_arc(middle: usize) -> (f64, f64) {
    match middle {
        1 => (0.0, 2.0 * PI / 3.0),
        2 => (-2.0 * PI / 3.0, 0.0),
        _ => (2.0 * PI / 3.0, 4.0 * PI / 3.0),
    }
}

/// The three Euler configurations, found by bisection of dV/dalpha on each arc.
pub fn collinear_central_configs(m: &MassParams) -> Result<Vec<CollinearCc>, Error> {
    let mut out = Vec::with_capacity(3);
    for middle in [1usize, 2, 3] {
        let (a, b) = euler_arc(middle);
        let angle = bisect(|t| circle_derivative(t, m), a + 1e-6, b - 1e-6)?;
        let (x, y) = (angle.cos(), angle.sin());
        out.push(CollinearCc { middle, angle, v: shape_potential(x, y, m).v });
    }
    Ok(out)
}

/// Bisection to full double precision for a sign change on [lo, hi].
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64, Error> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoBracket { lo, hi, glo: fa, ghi: fb });
    }
    loop {
        let c = 0.5 * (a + b);
        if c <= a || c >= b {
            return Ok(if fa.abs() < f(b).abs() { a } else { b });
        }
        let fc = f(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
}

/// Point on the circle slice (r^2 = 1, s3 = r12^2 = c) with s2 = r13^2 = u.
/// Returns (s1, s2, s3) with s1 = r23^2.
pub fn slice_point(u: f64, c: f64, m: &MassParams) -> [f64; 3] {
    [(1.0 - m.a2 * u - m.a3 * c) / m.a1, u, c]
}

/// Heron quantity 16 * area^2 in squared-length coordinates.
pub fn heron(s: [f64; 3]) -> f64 {
    2.0 * (s[0] * s[1] + s[1] * s[2] + s[2] * s[0]) - s[0] * s[0] - s[1] * s[1] - s[2] * s[2]
}

/// V along the slice, as the potential in squared-length coordinates.
pub fn slice_potential(u: f64, c: f64, m: &MassParams) -> Result<f64, Error> {
    let s = slice_point(u, c, m);
    check_heron(s)?;
    Ok(m.m * (m.a1 / s[0].sqrt() + m.a2 / s[1].sqrt() + m.a3 / s[2].sqrt()))
}

pub fn slice_derivative(u: f64, c: f64, m: &MassParams) -> Result<f64, Error> {
    let s = slice_point(u, c, m);
    check_heron(s)?;
    Ok(0.5 * m.m * m.a2 * (s[0].powf(-1.5) - s[1].powf(-1.5)))
}

pub fn slice_second_derivative(u: f64, c: f64, m: &MassParams) -> Result<f64, Error> {
    let s = slice_point(u, c, m);
    check_heron(s)?;
    Ok(0.75 * m.m * m.a2 * (m.a2 / m.a1 * s[0].powf(-2.5) + s[1].powf(-2.5)))
}

/// Endpoints [u-, u+] of the slice, where the triangle degenerates.
pub fn slice_interval(c: f64, m: &MassParams) -> Result<(f64, f64), Error> {
    // heron(s1(u), u, c) is a quadratic in u: A u^2 + B u + C
    let f = |u: f64| heron(slice_point(u, c, m));
    let (f0, f1, fm) = (f(0.0), f(1.0), f(-1.0));
    let qa = 0.5 * (f1 + fm) - f0;
    let qb = 0.5 * (f1 - fm);
    let disc = qb * qb - 4.0 * qa * f0;
    if !(disc > 0.0) || qa == 0.0 {
        return Err(Error::Domain("slice does not meet the Heron cone"));
    }
    let sq = disc.sqrt();
    let (u1, u2) = ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa));
    Ok((u1.min(u2), u1.max(u2)))
}

fn check_heron(s: [f64; 3]) -> Result<(), Error> {
    if s.iter().any(|&v| !(v > 0.0)) || heron(s) < 0.0 {
        return Err(Error::Domain("outside the Heron cone"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(x: f64, y: f64, m: &MassParams) -> [f64; 2] {
        let h = 1e-6;
        let f = |a: f64, b: f64| shape_potential(a, b, m).v;
        [(f(x + h, y) - f(x - h, y)) / (2.0 * h), (f(x, y + h) - f(x, y - h)) / (2.0 * h)]
    }

    #[test]
    fn distances() {
        let d = mutual_distances(0.0, 0.0);
        for v in d {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let d = mutual_distances(1.0, 0.0);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 3f64.sqrt()).abs() < 1e-15 && (d[2] - 3f64.sqrt()).abs() < 1e-15);
        let d = mutual_distances(-0.5, SQRT3_2);
        assert!(d[1] < 1e-15);
        assert!((d[0] - 3f64.sqrt()).abs() < 1e-15 && (d[2] - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn equal_mass_values() {
        let m = MassParams::equal();
        let p = shape_potential(0.0, 0.0, &m);
        assert!((p.v - 3.0).abs() < 1e-14);
        assert!((p.kappa - 1.0).abs() < 1e-14);
        let p = shape_potential(-1.0, 0.0, &m);
        assert!((p.v - 5.0 / 2f64.sqrt()).abs() < 1e-14);
        let p = shape_potential(1.0, 0.0, &m);
        assert_eq!(p.collision, Some(Pair::P12));
        assert!(p.v.is_infinite());
    }

    #[test]
    fn gradient_and_hessian_match_differences() {
        let m = MassParams::new(1.0, 2.0, 10.0).unwrap();
        for &(x, y) in &[(0.3, 0.2), (-0.4, 0.5), (0.1, -0.7), (1.7, 0.4)] {
            let p = shape_potential(x, y, &m);
            let g = fd_grad(x, y, &m);
            for k in 0..2 {
                assert!((p.grad[k] - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()));
            }
            let h = potential_hessian(x, y, &m).unwrap();
            let e = 1e-5;
            let gx = |a: f64, b: f64| shape_potential(a, b, &m).grad;
            for j in 0..2 {
                let (dx, dy) = if j == 0 { (e, 0.0) } else { (0.0, e) };
                let gp = gx(x + dx, y + dy);
                let gm = gx(x - dx, y - dy);
                for i in 0..2 {
                    let fd = (gp[i] - gm[i]) / (2.0 * e);
                    assert!((h[i][j] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{i}{j} {} {fd}", h[i][j]);
                }
            }
        }
    }

    #[test]
    fn euler_configs_equal_masses() {
        let m = MassParams::equal();
        let cc = collinear_central_configs(&m).unwrap();
        let expect = [PI / 3.0, -PI / 3.0, PI];
        for (c, e) in cc.iter().zip(expect) {
            assert!((c.angle - e).abs() < 1e-12, "{} {}", c.angle, e);
            assert!((c.v - 5.0 / 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn slice_isosceles_point_is_critical() {
        let m = MassParams::new(1.0, 2.0, 3.0).unwrap();
        let c = 0.8;
        // s1 = s2 = u
        let u = (1.0 - m.a3 * c) / (m.a1 + m.a2);
        assert!(slice_derivative(u, c, &m).unwrap().abs() < 1e-12);
        let (lo, hi) = slice_interval(c, &m).unwrap();
        assert!(lo < u && u < hi);
        assert!(slice_derivative(hi + 0.1, c, &m).is_err());
    }
}
