#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::dynamics::{blowup_field, ReducedState};
use crate::potential::{collinear_central_configs, potential_hessian, shape_potential};
use crate::{Error, MassParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Lagrange,
    /// Euler configuration with the given mass in the middle
    Euler(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Restpoint {
    pub kind: Kind,
    pub sign: Sign,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub state: ReducedState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestpointSet {
    /// Lagrange at the origin and the three Euler pairs
    pub finite: Vec<Restpoint>,
    /// v for the second Lagrange pair, at w = infinity (same V as the origin)
    pub lagrange_at_infinity: [f64; 2],
}

pub fn find_restpoints(m: &MassParams) -> Result<RestpointSet, Error> {
    let mut finite = Vec::with_capacity(8);
    let mk = |kind, x: f64, y: f64, vv: f64| {
        let v = (2.0 * vv).sqrt();
        [Sign::Plus, Sign::Minus].map(|sign| {
            let v = if sign == Sign::Plus { v } else { -v };
            Restpoint { kind, sign, x, y, v, state: ReducedState { r: 0.0, v, x, y, xp: 0.0, yp: 0.0 } }
        })
    };
    let v0 = shape_potential(0.0, 0.0, m).v;
    finite.extend(mk(Kind::Lagrange, 0.0, 0.0, v0));
    for cc in collinear_central_configs(m)? {
        let (x, y) = cc.xy();
        finite.extend(mk(Kind::Euler(cc.middle as u8), x, y, cc.v));
    }
    let vl = (2.0 * v0).sqrt();
    Ok(RestpointSet { finite, lagrange_at_infinity: [vl, -vl] })
}

pub type Mat6 = [[f64; 6]; 6];

/// Analytic Jacobian of the blow-up field at a state with zero shape velocity.
pub fn jacobian_at_rest(s: &ReducedState, m: &MassParams) -> Result<Mat6, Error> {
    let p = shape_potential(s.x, s.y, m).finite()?;
    let hv = potential_hessian(s.x, s.y, m)?;
    let k = p.kappa;
    let kg = p.kappa_grad;
    let mut j = [[0.0; 6]; 6];
    j[0][0] = s.v;
    j[0][1] = s.r;
    j[1][1] = s.v;
    j[1][2] = -p.grad[0];
    j[1][3] = -p.grad[1];
    j[2][4] = 1.0;
    j[3][5] = 1.0;
    for a in 0..2 {
        for b in 0..2 {
            j[4 + a][2 + b] = hv[a][b] / k - p.grad[a] * kg[b] / (k * k);
        }
        j[4 + a][4 + a] = -0.5 * s.v;
    }
    Ok(j)
}

/// Central-difference Jacobian of the blow-up field.
pub fn jacobian_fd(s: &ReducedState, m: &MassParams, eps: f64) -> Result<Mat6, Error> {
    let base = s.to_array();
    let mut j = [[0.0; 6]; 6];
    for c in 0..6 {
        let mut a = base;
        let mut b = base;
        a[c] += eps;
        b[c] -= eps;
        let fa = blowup_field(&ReducedState::from_slice(&a), m)?;
        let fb = blowup_field(&ReducedState::from_slice(&b), m)?;
        for r in 0..6 {
            j[r][c] = (fa[r] - fb[r]) / (2.0 * eps);
        }
    }
    Ok(j)
}

/// Differential of the energy residual at a state with zero shape velocity.
pub fn energy_differential(s: &ReducedState, m: &MassParams, h: f64) -> [f64; 6] {
    let p = shape_potential(s.x, s.y, m);
    [h, s.v, -p.grad[0], -p.grad[1], p.kappa * s.xp, p.kappa * s.yp]
}

fn kernel_basis(n: [f64; 6]) -> [[f64; 6]; 5] {
    let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut basis: Vec<[f64; 6]> = Vec::with_capacity(6);
    basis.push(n.map(|v| v / norm));
    for i in 0..6 {
        let mut u = [0.0; 6];
        u[i] = 1.0;
        for b in &basis {
            let d: f64 = (0..6).map(|k| b[k] * u[k]).sum();
            for k in 0..6 {
                u[k] -= d * b[k];
            }
        }
        let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if un > 0.3 && basis.len() < 6 {
            basis.push(u.map(|v| v / un));
        }
    }
    let mut out = [[0.0; 6]; 5];
    for (k, b) in basis[1..].iter().enumerate() {
        out[k] = *b;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spiral {
    Spiraling,
    NonSpiraling,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    /// eigenvalues on the energy level, sorted by real part
    pub eigenvalues: Vec<Complex64>,
    pub stable_dim: usize,
    pub unstable_dim: usize,
    pub homothety_eigenvalue: f64,
    /// eigenvector in (r, v, x, y, x', y') for the homothety eigenvalue
    pub homothety_vector: [f64; 6],
    /// real eigenvectors for the unstable eigenvalues
    pub unstable_vectors: Vec<[f64; 6]>,
    /// max |dE . J b| over the kernel basis
    pub restriction_residual: f64,
    /// max relative difference between analytic and finite-difference Jacobians
    pub jacobian_fd_error: f64,
    /// rank of the (x, y) projection of the unstable eigenvectors
    pub unstable_shape_rank: usize,
    pub flags: LinearizationFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearizationFlags {
    pub near_degenerate: bool,
    pub jacobian_mismatch: bool,
}

pub fn linearize(rp: &Restpoint, m: &MassParams, h: f64) -> Result<Linearization, Error> {
    let j = jacobian_at_rest(&rp.state, m)?;
    let jfd = jacobian_fd(&rp.state, m, 1e-6)?;
    let scale = j.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let fd_err = j.iter().flatten().zip(jfd.iter().flatten()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs() / scale));
    let de = energy_differential(&rp.state, m, h);
    let b = kernel_basis(de);
    let jm = SMatrix::<f64, 6, 6>::from_fn(|r, c| j[r][c]);
    let bm = SMatrix::<f64, 6, 5>::from_fn(|r, c| b[c][r]);
    let jb = jm * bm;
    let dev = SVector::<f64, 6>::from_column_slice(&de);
    let mut resid = 0.0f64;
    for c in 0..5 {
        resid = resid.max(dev.dot(&jb.column(c)).abs() / dev.norm());
    }
    let a = bm.transpose() * jb;
    let mut eig: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|p, q| p.re.partial_cmp(&q.re).unwrap().then(p.im.partial_cmp(&q.im).unwrap()));
    let stable_dim = eig.iter().filter(|z| z.re < 0.0).count();
    let unstable_dim = eig.iter().filter(|z| z.re > 0.0).count();
    let mut near_degenerate = eig.iter().any(|z| z.re.abs() < 1e-10);
    for i in 0..eig.len() {
        for k in i + 1..eig.len() {
            if (eig[i] - eig[k]).norm() < 1e-8 && eig[i].im.abs() < 1e-10 {
                near_degenerate = true;
            }
        }
    }
    let anorm = a.norm();
    // right singular vectors of A - lambda I with (relatively) small singular values
    let null_space = |lambda: f64| -> Vec<[f64; 6]> {
        let shifted = a - SMatrix::<f64, 5, 5>::identity() * lambda;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.unwrap();
        let smin = svd.singular_values.min();
        let mut out = Vec::new();
        for (k, s) in svd.singular_values.iter().enumerate() {
            if *s <= smin.max(1e-7 * anorm) {
                let full = bm * vt.row(k).transpose();
                out.push(core::array::from_fn(|i| full[i]));
            }
        }
        out
    };
    let null_vec = |lambda: f64| null_space(lambda)[0];
    let hom = eig.iter().filter(|z| z.im.abs() < 1e-9).min_by(|p, q| (p.re - rp.v).abs().partial_cmp(&(q.re - rp.v).abs()).unwrap()).map(|z| z.re).unwrap_or(f64::NAN);
    let homothety_vector = null_vec(hom);
    let mut unstable_vectors: Vec<[f64; 6]> = Vec::new();
    let mut last: Option<f64> = None;
    for z in eig.iter().filter(|z| z.re > 0.0 && z.im.abs() < 1e-9) {
        if last.is_some_and(|l| (l - z.re).abs() < 1e-6 * anorm) {
            continue;
        }
        last = Some(z.re);
        unstable_vectors.extend(null_space(z.re));
    }
    let unstable_shape_rank = if unstable_vectors.is_empty() {
        0
    } else {
        let pm = nalgebra::DMatrix::<f64>::from_fn(2, unstable_vectors.len(), |r, c| unstable_vectors[c][2 + r]);
        let sv = pm.svd(false, false).singular_values;
        let smax = sv.iter().fold(0.0f64, |x, y| x.max(*y));
        sv.iter().filter(|s| **s > 1e-8 * smax.max(1e-300)).count()
    };
    Ok(Linearization {
        eigenvalues: eig,
        stable_dim,
        unstable_dim,
        homothety_eigenvalue: hom,
        homothety_vector,
        unstable_vectors,
        restriction_residual: resid,
        jacobian_fd_error: fd_err,
        unstable_shape_rank,
        flags: LinearizationFlags { near_degenerate, jacobian_mismatch: fd_err > 1e-6 },
    })
}

/// Classify an Euler+ point from its restricted spectrum: spiraling when the stable
/// eigenvalues tangent to the collision manifold include a non-real pair.
pub fn classify_spiral(lin: &Linearization) -> Spiral {
    let tangent: Vec<&Complex64> = lin.eigenvalues.iter().filter(|z| z.re < 0.0).collect();
    let max_im = tangent.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if max_im >= 1e-10 {
        return Spiral::Spiraling;
    }
    if max_im > 0.0 {
        return Spiral::Indeterminate;
    }
    for i in 0..tangent.len() {
        for k in i + 1..tangent.len() {
            if (tangent[i].re - tangent[k].re).abs() < 1e-8 {
                return Spiral::Indeterminate;
            }
        }
    }
    Spiral::NonSpiraling
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiralReport {
    /// indexed by the middle mass minus one
    pub spiral: [Spiral; 3],
    pub eigenvalues: [Vec<Complex64>; 3],
}

pub fn spiraling_test(m: &MassParams, h: f64) -> Result<SpiralReport, Error> {
    let set = find_restpoints(m)?;
    let mut spiral = [Spiral::Indeterminate; 3];
    let mut eigenvalues: [Vec<Complex64>; 3] = Default::default();
    for rp in set.finite.iter().filter(|p| p.sign == Sign::Plus) {
        if let Kind::Euler(j) = rp.kind {
            let lin = linearize(rp, m, h)?;
            spiral[j as usize - 1] = classify_spiral(&lin);
            eigenvalues[j as usize - 1] = lin.eigenvalues;
        }
    }
    Ok(SpiralReport { spiral, eigenvalues })
}

/// Strictly positive grid on the simplex m1 + m2 + m3 = 1 with n subdivisions.
pub fn simplex_grid(n: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 1..n {
        for j in 1..n - i {
            let k = n - i - j;
            out.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
        }
    }
    out
}
