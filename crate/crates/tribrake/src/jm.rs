//! Discrete Jacobi-Maupertuis action in (r, x, y) and its minimizers.
//!
//! The kinetic metric is dr^2 + kappa r^2 (dx^2 + dy^2) and U = V(x, y)/r.
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, SQRT_2};

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{blowup_field, ReducedState};
use crate::integrate::{brake_lift, integrate, Direction, EventSpec, FieldError, Options, Termination};
use crate::potential::shape_potential;
use crate::{Error, MassParams, ShapePoint};

/// Slack allowed when testing r <= V/h.
pub const HILL_SLACK: f64 = 1e-12;

/// Node distribution along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    Uniform,
    /// refined near the end only: 1 - (1 - s)^2
    End,
    /// refined near both ends: sin^4(pi s / 2)
    Both,
}

impl Grading {
    pub fn map(self, s: f64) -> f64 {
        match self {
            Grading::Uniform => s,
            Grading::End => 1.0 - (1.0 - s) * (1.0 - s),
            Grading::Both => (FRAC_PI_2 * s).sin().powi(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub nodes: Vec<ShapePoint>,
    /// end node constrained to r = V(x, y)/h
    pub free_end: bool,
    /// start node at r = 0 with a free shape
    pub triple_start: bool,
    pub grading: Grading,
}

pub fn in_hill_region(p: &ShapePoint, m: &MassParams, h: f64) -> bool {
    if p.r == 0.0 {
        return true;
    }
    let v = shape_potential(p.x, p.y, m).v;
    p.r.is_finite() && p.r >= 0.0 && p.r * h <= v + HILL_SLACK * v.max(1.0)
}

struct Seg {
    f: f64,
    ga: [f64; 3],
    gb: [f64; 3],
}

fn on_boundary(p: &ShapePoint, m: &MassParams, h: f64) -> bool {
    let v = shape_potential(p.x, p.y, m).v;
    p.r > 0.0 && p.r * h >= v - HILL_SLACK * v.max(1.0)
}

fn segment(a: &ShapePoint, b: &ShapePoint, m: &MassParams, h: f64, grad: bool) -> Seg {
    // a chord between two boundary nodes stands for an arc of the boundary, where U = h
    if on_boundary(a, m, h) && on_boundary(b, m, h) {
        return Seg { f: 0.0, ga: [0.0; 3], gb: [0.0; 3] };
    }
    let (rm, xm, ym) = (0.5 * (a.r + b.r), 0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    let (dr, dx, dy) = (b.r - a.r, b.x - a.x, b.y - a.y);
    let p = shape_potential(xm, ym, m);
    let ds2 = dx * dx + dy * dy;
    let l2 = dr * dr + p.kappa * rm * rm * ds2;
    let l = l2.sqrt();
    let g = p.v / rm - h;
    if !(g > 0.0) || l == 0.0 || p.collision.is_some() {
        return Seg { f: 0.0, ga: [0.0; 3], gb: [0.0; 3] };
    }
    let sg = g.sqrt();
    let f = sg * l;
    if !grad {
        return Seg { f, ga: [0.0; 3], gb: [0.0; 3] };
    }
    // derivative with respect to the midpoint
    let du = [-p.v / (rm * rm), p.grad[0] / rm, p.grad[1] / rm];
    let dl_m = [p.kappa * rm * ds2 / l, 0.5 * rm * rm * ds2 * p.kappa_grad[0] / l, 0.5 * rm * rm * ds2 * p.kappa_grad[1] / l];
    let dm: [f64; 3] = core::array::from_fn(|k| 0.5 * du[k] / sg * l + sg * dl_m[k]);
    // derivative with respect to the increment
    let kr = p.kappa * rm * rm;
    let dd = [sg * dr / l, sg * kr * dx / l, sg * kr * dy / l];
    Seg { f, ga: core::array::from_fn(|k| 0.5 * dm[k] - dd[k]), gb: core::array::from_fn(|k| 0.5 * dm[k] + dd[k]) }
}

/// Midpoint-rule JM action: sum of sqrt(U(mid) - h) times the metric length of each segment.
pub fn jm_action(nodes: &[ShapePoint], m: &MassParams, h: f64) -> Result<f64, Error> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveEnergy(h));
    }
    if nodes.iter().any(|p| !in_hill_region(p, m, h)) {
        return Err(Error::Domain("node outside the Hill region"));
    }
    Ok(nodes.windows(2).map(|w| segment(&w[0], &w[1], m, h, false).f).sum())
}

/// Action and its gradient with respect to every node's (r, x, y).
pub fn jm_action_grad(nodes: &[ShapePoint], m: &MassParams, h: f64) -> (f64, Vec<[f64; 3]>) {
    let mut g = vec![[0.0; 3]; nodes.len()];
    let mut a = 0.0;
    for i in 0..nodes.len().saturating_sub(1) {
        let s = segment(&nodes[i], &nodes[i + 1], m, h, true);
        a += s.f;
        for k in 0..3 {
            g[i][k] += s.ga[k];
            g[i + 1][k] += s.gb[k];
        }
    }
    (a, g)
}

// Cartesian chart P = r n(x, y) with n the stereographic image; well conditioned near r = 0.
fn to_cart(p: &ShapePoint) -> [f64; 3] {
    let n = crate::model::shape_to_sphere(p.x, p.y);
    [p.r * n[0], p.r * n[1], p.r * n[2]]
}

fn from_cart(q: [f64; 3]) -> ShapePoint {
    let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    let n = [q[0] / r, q[1] / r, q[2] / r];
    ShapePoint { r, x: n[0] / (1.0 + n[2]), y: n[1] / (1.0 + n[2]) }
}

/// Pull a (r, x, y) gradient back to the Cartesian chart.
fn cart_grad(q: [f64; 3], g: [f64; 3]) -> [f64; 3] {
    let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    let n = [q[0] / r, q[1] / r, q[2] / r];
    let d = 1.0 + n[2];
    let dxn = [1.0 / d, 0.0, -n[0] / (d * d)];
    let dyn_ = [0.0, 1.0 / d, -n[1] / (d * d)];
    // (I - n n^T)/r applied to the n-gradients
    let proj = |v: [f64; 3]| {
        let dot = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
        [(v[0] - dot * n[0]) / r, (v[1] - dot * n[1]) / r, (v[2] - dot * n[2]) / r]
    };
    let px = proj(dxn);
    let py = proj(dyn_);
    core::array::from_fn(|k| g[0] * n[k] + g[1] * px[k] + g[2] * py[k])
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn normals(t: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let n = norm(t);
    let t = [t[0] / n, t[1] / n, t[2] / n];
    let k = (0..3).min_by(|&i, &j| t[i].abs().partial_cmp(&t[j].abs()).unwrap()).unwrap();
    let mut a = [0.0; 3];
    a[k] = 1.0;
    let d = dot(a, t);
    let e1 = [a[0] - d * t[0], a[1] - d * t[1], a[2] - d * t[2]];
    let n1 = norm(e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = [t[1] * e1[2] - t[2] * e1[1], t[2] * e1[0] - t[0] * e1[2], t[0] * e1[1] - t[1] * e1[0]];
    (e1, e2)
}

/// Optimization variables for one outer iteration, ordered by node: the shape of a
/// triple-collision start, two transverse offsets per interior node, the shape of a free end.
struct Frame<'a> {
    path: &'a DiscretePath,
    base: Vec<[f64; 3]>,
    e1: Vec<[f64; 3]>,
    e2: Vec<[f64; 3]>,
    m: &'a MassParams,
    h: f64,
}

impl Frame<'_> {
    fn n(&self) -> usize {
        self.path.nodes.len() - 1
    }

    fn start_vars(&self) -> usize {
        if self.path.triple_start { 2 } else { 0 }
    }

    /// index of the first variable of node i, if it has any
    fn offset(&self, i: usize) -> Option<usize> {
        let n = self.n();
        let s = self.start_vars();
        if i == 0 {
            self.path.triple_start.then_some(0)
        } else if i < n {
            Some(s + 2 * (i - 1))
        } else {
            self.path.free_end.then_some(s + 2 * (n - 1))
        }
    }

    fn dim(&self) -> usize {
        self.start_vars() + 2 * (self.n() - 1) + if self.path.free_end { 2 } else { 0 }
    }

    fn nodes(&self, z: &[f64]) -> Vec<ShapePoint> {
        let n = self.n();
        let mut out = self.path.nodes.clone();
        if let Some(k) = self.offset(0) {
            let s = &self.path.nodes[0];
            out[0] = ShapePoint { r: 0.0, x: s.x + z[k], y: s.y + z[k + 1] };
        }
        for i in 1..n {
            let k = self.offset(i).unwrap();
            let (a, b) = (z[k], z[k + 1]);
            let q: [f64; 3] = core::array::from_fn(|c| self.base[i][c] + a * self.e1[i][c] + b * self.e2[i][c]);
            out[i] = from_cart(q);
        }
        if let Some(k) = self.offset(n) {
            let e = &self.path.nodes[n];
            let (x, y) = (e.x + z[k], e.y + z[k + 1]);
            out[n] = ShapePoint { r: shape_potential(x, y, self.m).v / self.h, x, y };
        }
        out
    }

    /// Objective (infinite outside the Hill region) and gradient.
    fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let nodes = self.nodes(z);
        let n = self.n();
        let mut g = vec![0.0; z.len()];
        // stay in the closed upper hemisphere (the disk); the lower one holds the mirror images
        // a free-end path may pass the boundary (those segments cost nothing); it is cut afterwards
        let free = self.path.free_end;
        let outside = |p: &ShapePoint| (!free && !in_hill_region(p, self.m, self.h)) || !p.r.is_finite() || !(p.x * p.x + p.y * p.y <= 1.0 + 1e-12);
        if nodes.iter().any(outside) {
            return (f64::INFINITY, g);
        }
        let (a, gn) = jm_action_grad(&nodes, self.m, self.h);
        if let Some(k) = self.offset(0) {
            g[k] = gn[0][1];
            g[k + 1] = gn[0][2];
        }
        for i in 1..n {
            let k = self.offset(i).unwrap();
            let gc = cart_grad(to_cart(&nodes[i]), gn[i]);
            g[k] = dot(gc, self.e1[i]);
            g[k + 1] = dot(gc, self.e2[i]);
        }
        if let Some(k) = self.offset(n) {
            let e = &nodes[n];
            let p = shape_potential(e.x, e.y, self.m);
            g[k] = gn[n][1] + gn[n][0] * p.grad[0] / self.h;
            g[k + 1] = gn[n][2] + gn[n][0] * p.grad[1] / self.h;
        }
        (a, g)
    }

    /// Finite-difference Hessian. Node i only couples to i - 1 and i + 1, so all nodes with
    /// the same index mod 3 are perturbed at once.
    fn hessian(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.n();
        let dim = self.dim();
        let mut eps = vec![0.0; dim];
        for i in 0..=n {
            if let Some(k) = self.offset(i) {
                let e = if i == 0 || i == n {
                    1e-7
                } else {
                    1e-4 * norm(sub(self.base[i], self.base[i - 1])).min(norm(sub(self.base[i + 1], self.base[i])))
                };
                eps[k] = e;
                eps[k + 1] = e;
            }
        }
        let mut hm = DMatrix::<f64>::zeros(dim, dim);
        for color in 0..3 {
            for c in 0..2 {
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                for i in (color..=n).step_by(3) {
                    if let Some(k) = self.offset(i) {
                        zp[k + c] += eps[k + c];
                        zm[k + c] -= eps[k + c];
                    }
                }
                let (fp, gp) = self.eval(&zp);
                let (fm, gm) = self.eval(&zm);
                if !fp.is_finite() || !fm.is_finite() {
                    return None;
                }
                for row_node in 0..=n {
                    let Some(kr) = self.offset(row_node) else { continue };
                    // the perturbed neighbor of this row with the current color
                    let lo = row_node.saturating_sub(1);
                    let Some(col_node) = (lo..=(row_node + 1).min(n)).find(|j| j % 3 == color) else { continue };
                    let Some(kc) = self.offset(col_node) else { continue };
                    for rc in 0..2 {
                        hm[(kr + rc, kc + c)] = (gp[kr + rc] - gm[kr + rc]) / (2.0 * eps[kc + c]);
                    }
                }
            }
        }
        let ht = hm.transpose();
        Some((hm + ht) * 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JmOptions {
    pub grad_tol: f64,
    /// Newton iterations per outer pass
    pub max_inner: usize,
    pub max_outer: usize,
    pub multistarts: usize,
    /// amplitude of the random multi-start perturbations (Cartesian chart)
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for JmOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-8, max_inner: 200, max_outer: 30, multistarts: 8, perturbation: 0.05, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// physical time at each node
    pub t: Vec<f64>,
    /// |K - (U - h)| / (U - h) at interior nodes (finite differences in t), NaN at the ends
    pub energy_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JmResult {
    pub path: DiscretePath,
    pub action: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// dA/dr at the free end (multiplier of the constraint r = V/h)
    pub multipliers: Vec<f64>,
    pub reconstruction: Reconstruction,
    /// every interior node strictly inside the Hill region
    pub interior_inside: bool,
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton (Levenberg-Marquardt) on the transverse offsets. Steps are accepted on a
/// decrease of the action, or of the gradient norm once the action is flat to rounding.
fn inner_minimize(fr: &Frame, opts: &JmOptions) -> (Vec<f64>, f64, f64, usize, bool) {
    let dim = fr.dim();
    let mut z = vec![0.0; dim];
    let (mut f, mut g) = fr.eval(&z);
    let mut gn = vnorm(&g);
    let mut lambda = 1e-3;
    let mut it = 0;
    if !f.is_finite() {
        return (z, f, f64::INFINITY, 0, false);
    }
    while it < opts.max_inner && gn > opts.grad_tol {
        it += 1;
        let Some(hm) = fr.hessian(&z) else { break };
        let diag: Vec<f64> = (0..dim).map(|i| hm[(i, i)].abs().max(1e-300)).collect();
        let mut accepted = false;
        while lambda < 1e14 {
            let mut a = hm.clone();
            for i in 0..dim {
                a[(i, i)] += lambda * diag[i];
            }
            let Some(ch) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let rhs = DVector::from_iterator(dim, g.iter().map(|v| -v));
            let p = ch.solve(&rhs);
            let zt: Vec<f64> = z.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let (ft, gt) = fr.eval(&zt);
            let gtn = vnorm(&gt);
            let flat = ft <= f + 1e-13 * f.abs().max(1e-300);
            if ft.is_finite() && (ft < f || (flat && gtn < gn)) {
                z = zt;
                f = ft;
                g = gt;
                gn = gtn;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (z, f, gn, it, gn <= opts.grad_tol)
}

/// Resample a polyline (Cartesian chart) at the graded arc-length distribution with n segments.
/// The end nodes are kept as given.
fn resample(poly: &[ShapePoint], n: usize, grading: Grading) -> Vec<ShapePoint> {
    let pts: Vec<[f64; 3]> = poly.iter().map(to_cart).collect();
    let k = pts.len() - 1;
    let mut cum = vec![0.0; k + 1];
    for i in 0..k {
        cum[i + 1] = cum[i] + norm(sub(pts[i + 1], pts[i]));
    }
    let total = cum[k];
    let mut out = Vec::with_capacity(n + 1);
    out.push(poly[0]);
    let mut j = 0;
    for i in 1..n {
        let target = total * grading.map(i as f64 / n as f64);
        while j + 1 < k && cum[j + 1] < target {
            j += 1;
        }
        let seg = cum[j + 1] - cum[j];
        let u = if seg > 0.0 { ((target - cum[j]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        out.push(from_cart(core::array::from_fn(|c| pts[j][c] + u * (pts[j + 1][c] - pts[j][c]))));
    }
    out.push(poly[k]);
    out
}

fn redistribute(path: &mut DiscretePath) {
    let n = path.nodes.len() - 1;
    let total: f64 = path.nodes.windows(2).map(|w| norm(sub(to_cart(&w[1]), to_cart(&w[0])))).sum();
    if total > 0.0 {
        path.nodes = resample(&path.nodes, n, path.grading);
    }
}

/// Cut a free-end path at its first contact with the Hill boundary; returns whether it was cut.
fn truncate_at_boundary(path: &mut DiscretePath, m: &MassParams, h: f64) -> bool {
    let n = path.nodes.len() - 1;
    let excess = |p: &ShapePoint| p.r * h - shape_potential(p.x, p.y, m).v;
    let Some(i) = (1..n).find(|&i| excess(&path.nodes[i]) >= 0.0) else { return false };
    let (a, b) = (to_cart(&path.nodes[i - 1]), to_cart(&path.nodes[i]));
    let at = |u: f64| from_cart(core::array::from_fn(|c| a[c] + u * (b[c] - a[c])));
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if excess(&at(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = at(hi);
    let end = ShapePoint { r: shape_potential(c.x, c.y, m).v / h, x: c.x, y: c.y };
    let mut poly: Vec<ShapePoint> = path.nodes[..i].to_vec();
    poly.push(end);
    path.nodes = resample(&poly, n, path.grading);
    true
}

fn build_frame<'a>(path: &'a DiscretePath, m: &'a MassParams, h: f64) -> Frame<'a> {
    let base: Vec<[f64; 3]> = path.nodes.iter().map(to_cart).collect();
    let n = base.len() - 1;
    let mut e1 = vec![[0.0; 3]; n + 1];
    let mut e2 = vec![[0.0; 3]; n + 1];
    for i in 1..n {
        let (a, b) = normals(sub(base[i + 1], base[i - 1]));
        e1[i] = a;
        e2[i] = b;
    }
    Frame { path, base, e1, e2, m, h }
}

/// Minimize from a starting path, alternating inner optimization and node redistribution.
pub fn minimize_path(mut path: DiscretePath, m: &MassParams, h: f64, opts: &JmOptions) -> Result<JmResult, Error> {
    if path.nodes.len() < 3 {
        let action = jm_action(&path.nodes, m, h)?;
        let reconstruction = reconstruct(&path.nodes, m, h);
        return Ok(JmResult { path, action, grad_norm: 0.0, converged: true, iterations: 0, multipliers: Vec::new(), reconstruction, interior_inside: true });
    }
    jm_action(&path.nodes, m, h)?;
    let mut prev = f64::INFINITY;
    let mut total_it = 0;
    let mut last = (0.0, f64::INFINITY, false);
    for outer in 0..opts.max_outer {
        if outer > 0 {
            let before = path.nodes.clone();
            redistribute(&mut path);
            if !path.free_end && jm_action(&path.nodes, m, h).is_err() {
                path.nodes = before;
            }
        }
        let fr = build_frame(&path, m, h);
        let (z, f, gn, it, conv) = inner_minimize(&fr, opts);
        let nodes = fr.nodes(&z);
        path.nodes = nodes;
        total_it += it;
        let cut = path.free_end && truncate_at_boundary(&mut path, m, h);
        last = (f, gn, conv);
        if conv && !cut && (prev - f).abs() <= 1e-12 * f.abs().max(1.0) {
            break;
        }
        prev = f;
    }
    let (_, gnodes) = jm_action_grad(&path.nodes, m, h);
    let n = path.nodes.len() - 1;
    let multipliers = if path.free_end { vec![gnodes[n][0]] } else { Vec::new() };
    let interior_inside = path.nodes[1..n].iter().all(|p| {
        let v = shape_potential(p.x, p.y, m).v;
        p.r * h < v
    });
    let reconstruction = reconstruct(&path.nodes, m, h);
    Ok(JmResult { path, action: last.0, grad_norm: last.1, converged: last.2, iterations: total_it, multipliers, reconstruction, interior_inside })
}

/// Physical times t_i = sum L / sqrt(2 (U - h)) and the energy residual of the reconstructed motion.
pub fn reconstruct(nodes: &[ShapePoint], m: &MassParams, h: f64) -> Reconstruction {
    let n = nodes.len();
    let mut t = vec![0.0; n];
    for i in 1..n {
        let (a, b) = (&nodes[i - 1], &nodes[i]);
        let (rm, xm, ym) = (0.5 * (a.r + b.r), 0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        let p = shape_potential(xm, ym, m);
        let (dr, dx, dy) = (b.r - a.r, b.x - a.x, b.y - a.y);
        let l = (dr * dr + p.kappa * rm * rm * (dx * dx + dy * dy)).sqrt();
        // Simpson's rule for dt = ds / sqrt(2 (U - h))
        let slow = |r: f64, v: f64| if r == 0.0 { 0.0 } else { 1.0 / (2.0 * (v / r - h).max(0.0)).sqrt() };
        let (va, vb) = (shape_potential(a.x, a.y, m).v, shape_potential(b.x, b.y, m).v);
        let w = (slow(a.r, va) + 4.0 * slow(rm, p.v) + slow(b.r, vb)) / 6.0;
        t[i] = t[i - 1] + if l == 0.0 { 0.0 } else { l * w };
    }
    let mut res = vec![f64::NAN; n];
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (&nodes[i - 1], &nodes[i], &nodes[i + 1]);
        let dt = t[i + 1] - t[i - 1];
        if !(dt > 0.0) {
            continue;
        }
        let p = shape_potential(b.x, b.y, m);
        // second-order one-sided weights on the nonuniform grid
        let (h1, h2) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let d = |fa: f64, fb: f64, fc: f64| (-h2 / (h1 * (h1 + h2))) * fa + ((h2 - h1) / (h1 * h2)) * fb + (h1 / (h2 * (h1 + h2))) * fc;
        let rd = d(a.r, b.r, c.r);
        let xd = d(a.x, b.x, c.x);
        let yd = d(a.y, b.y, c.y);
        let k = 0.5 * (rd * rd + p.kappa * b.r * b.r * (xd * xd + yd * yd));
        let u = p.v / b.r - h;
        res[i] = (k - u).abs() / u;
    }
    Reconstruction { t, energy_residual: res }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn straight_path(q0: &ShapePoint, q1: &ShapePoint, n: usize, grading: Grading) -> Vec<ShapePoint> {
    let (a, b) = (to_cart(q0), to_cart(q1));
    (0..=n)
        .map(|i| {
            if i == 0 {
                return *q0;
            }
            if i == n {
                return *q1;
            }
            let s = grading.map(i as f64 / n as f64);
            from_cart(core::array::from_fn(|k| a[k] + s * (b[k] - a[k])))
        })
        .collect()
}

fn perturb(path: &mut DiscretePath, amp: f64, rng: &mut ChaCha8Rng, m: &MassParams, h: f64) {
    let n = path.nodes.len() - 1;
    let mut c = [[0.0; 3]; 2];
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v = amp * (2.0 * uniform(rng) - 1.0);
        }
    }
    let mut scale = 1.0;
    for _ in 0..20 {
        let mut trial = path.nodes.clone();
        for (i, node) in trial.iter_mut().enumerate().take(n).skip(1) {
            let s = i as f64 / n as f64;
            let (w1, w2) = ((core::f64::consts::PI * s).sin(), (2.0 * core::f64::consts::PI * s).sin());
            let q = to_cart(node);
            *node = from_cart(core::array::from_fn(|k| q[k] + scale * (w1 * c[0][k] + w2 * c[1][k])));
        }
        if path.free_end {
            let e = trial[n];
            let (x, y) = (e.x + scale * c[0][0], e.y + scale * c[0][1]);
            if x * x + y * y < 0.98 {
                trial[n] = ShapePoint { r: shape_potential(x, y, m).v / h, x, y };
            }
        }
        if path.triple_start {
            let s = trial[0];
            trial[0] = ShapePoint { r: 0.0, x: s.x + scale * c[1][0], y: s.y + scale * c[1][1] };
        }
        if trial.iter().all(|p| in_hill_region(p, m, h)) && jm_action(&trial, m, h).is_ok() {
            path.nodes = trial;
            return;
        }
        scale *= 0.5;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    /// lowest action found
    pub best: JmResult,
    /// distinct local minima (action differing by more than 1e-6), sorted by action
    pub minima: Vec<JmResult>,
}

fn multistart(init: DiscretePath, m: &MassParams, h: f64, opts: &JmOptions) -> Result<MultiStart, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut results: Vec<JmResult> = Vec::new();
    for k in 0..opts.multistarts.max(1) {
        let mut p = init.clone();
        if k > 0 {
            perturb(&mut p, opts.perturbation, &mut rng, m, h);
        }
        let r = minimize_path(p, m, h, opts)?;
        // a perturbed start can leave the domain; such runs are dropped
        if r.action.is_finite() {
            results.push(r);
        }
    }
    if results.is_empty() {
        return Err(Error::NoConvergence);
    }
    results.sort_by(|a, b| a.action.total_cmp(&b.action));
    let mut minima: Vec<JmResult> = Vec::new();
    for r in results {
        if minima.iter().all(|q| (q.action - r.action).abs() > 1e-6) {
            minima.push(r);
        }
    }
    Ok(MultiStart { best: minima[0].clone(), minima })
}

/// Starting guess for a path from q0 to the Hill boundary: straight (Cartesian chart) to the
/// boundary point over `end_shape`.
pub fn boundary_path(q0: &ShapePoint, end_shape: (f64, f64), n: usize, m: &MassParams, h: f64) -> Result<DiscretePath, Error> {
    let (x1, y1) = end_shape;
    let v1 = shape_potential(x1, y1, m).finite()?.v;
    let q1 = ShapePoint { r: v1 / h, x: x1, y: y1 };
    let triple_start = q0.r == 0.0;
    let collision_start = shape_potential(q0.x, q0.y, m).collision.is_some();
    let grading = if triple_start || collision_start { Grading::Both } else { Grading::End };
    let mut nodes = straight_path(q0, &q1, n, grading);
    if triple_start {
        // the chart collapses at r = 0; spread the shape linearly instead
        for (i, p) in nodes.iter_mut().enumerate() {
            let s = i as f64 / n as f64;
            p.x = q0.x + s * (x1 - q0.x);
            p.y = q0.y + s * (y1 - q0.y);
            p.r = q1.r * grading.map(s);
        }
    }
    Ok(DiscretePath { nodes, free_end: true, triple_start, grading })
}

/// JM minimizer from q0 to the Hill boundary (end constrained to r = V/h).
/// q0.r = 0 means triple collision with a free limiting shape.
pub fn minimize_to_boundary(q0: &ShapePoint, n: usize, m: &MassParams, h: f64, opts: &JmOptions) -> Result<MultiStart, Error> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveEnergy(h));
    }
    if !in_hill_region(q0, m, h) {
        return Err(Error::Domain("start outside the Hill region"));
    }
    let p = shape_potential(q0.x, q0.y, m);
    // default end guess: over the start shape, pulled inward for collision shapes
    let end = if p.collision.is_some() || q0.x * q0.x + q0.y * q0.y >= 0.99 { (0.5 * q0.x, 0.5 * q0.y) } else { (q0.x, q0.y) };
    minimize_to_boundary_from(q0, end, n, m, h, opts)
}

pub fn minimize_to_boundary_from(q0: &ShapePoint, end: (f64, f64), n: usize, m: &MassParams, h: f64, opts: &JmOptions) -> Result<MultiStart, Error> {
    let init = boundary_path(q0, end, n, m, h)?;
    multistart(init, m, h, opts)
}

/// JM minimizer between two fixed points of the Hill region.
pub fn minimize_fixed(q0: &ShapePoint, q1: &ShapePoint, n: usize, m: &MassParams, h: f64, opts: &JmOptions) -> Result<MultiStart, Error> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveEnergy(h));
    }
    if !in_hill_region(q0, m, h) || !in_hill_region(q1, m, h) {
        return Err(Error::Domain("endpoint outside the Hill region"));
    }
    if q0 == q1 {
        let path = DiscretePath { nodes: vec![*q0, *q1], free_end: false, triple_start: false, grading: Grading::Uniform };
        let r = minimize_path(path, m, h, opts)?;
        return Ok(MultiStart { best: r.clone(), minima: vec![r] });
    }
    let nodes = straight_path(q0, q1, n, Grading::Uniform);
    multistart(DiscretePath { nodes, free_end: false, triple_start: false, grading: Grading::Uniform }, m, h, opts)
}

/// Discrete action of the homothetic path at shape (x, y) from r = 0 to the Hill boundary,
/// with sin^4 grading; Richardson-extrapolated value from n and n/2.
pub fn homothetic_action(x: f64, y: f64, n: usize, m: &MassParams, h: f64) -> Result<(f64, f64), Error> {
    let v = shape_potential(x, y, m).finite()?.v;
    let path = |k: usize| -> Vec<ShapePoint> { (0..=k).map(|i| ShapePoint { r: v / h * Grading::Both.map(i as f64 / k as f64), x, y }).collect() };
    let a = jm_action(&path(n), m, h)?;
    let a2 = jm_action(&path(n / 2), m, h)?;
    Ok((a, (4.0 * a - a2) / 3.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeifertReport {
    /// physical times t, 2t, 4t, ...
    pub times: Vec<f64>,
    /// sqrt(2) int_0^t (U - h) dt along the brake orbit
    pub actions: Vec<f64>,
    /// log(A(2t)/A(t)) / log 4 for consecutive times
    pub exponents: Vec<f64>,
    /// Richardson extrapolation of the exponent to t -> 0 (corrections are O(t^2))
    pub exponent: f64,
    /// A(2t)/A(t) at the smallest t
    pub ratio: f64,
}

/// Action of the brake arc from the boundary point over (x, y) as a function of physical time;
/// the exponent in the Seifert parameter delta ~ t^2 is 3/2.
pub fn seifert_scaling_probe(x: f64, y: f64, m: &MassParams, h: f64, t0: f64, levels: usize) -> Result<SeifertReport, Error> {
    let start = brake_lift(x, y, m, h)?;
    let levels = levels.max(3);
    let times: Vec<f64> = (0..levels).map(|k| t0 * (1u64 << k) as f64).collect();
    let field = |s: &[f64; 8]| -> Result<[f64; 8], FieldError> {
        let st = ReducedState::from_slice(s);
        let f = blowup_field(&st, m)?;
        let r = st.r.max(0.0);
        let p = shape_potential(st.x, st.y, m);
        let k = (st.v * st.v + p.kappa * (st.xp * st.xp + st.yp * st.yp)) / (2.0 * r);
        let r32 = r * r.sqrt();
        Ok([f[0], f[1], f[2], f[3], f[4], f[5], r32, SQRT_2 * k * r32])
    };
    let events: Vec<EventSpec<8>> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| EventSpec::new(move |s: &[f64; 8]| s[6] - t, Direction::Rising, i + 1 == levels))
        .collect();
    let a = start.to_array();
    let y0 = [a[0], a[1], a[2], a[3], a[4], a[5], 0.0, 0.0];
    let mut o = Options::with_tol(1e-13, 1e-20);
    o.dense = false;
    let tr = integrate(field, 0.0, y0, 1e3, &o, &events);
    if tr.termination != Termination::TerminalEvent(levels - 1) {
        return Err(Error::Integration(tr.termination));
    }
    let mut actions = Vec::with_capacity(levels);
    for i in 0..levels {
        actions.push(tr.first_event(i).ok_or(Error::NoConvergence)?.state[7]);
    }
    let exponents: Vec<f64> = actions.windows(2).map(|w| (w[1] / w[0]).ln() / 4f64.ln()).collect();
    let exponent = (4.0 * exponents[0] - exponents[1]) / 3.0;
    Ok(SeifertReport { ratio: actions[1] / actions[0], times, actions, exponents, exponent })
}
