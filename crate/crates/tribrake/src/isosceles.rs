//! Isosceles subsystem (m1 = m2 = 1, h = 1): collision-manifold branches,
//! admissible masses and the symmetric periodic brake orbit.
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;

use crate::dynamics::{collision_slope, iso_dv, iso_field, iso_field_t, iso_v, iso_w, newtonian_field};
use crate::integrate::{integrate, Direction, EventSpec, Options, Termination};
use crate::potential::bisect;
use crate::{Error, JacobiState, MassParams};

/// Angle of the equilateral shape in (0, pi/2): the minimum of V(theta).
pub fn theta_star(m3: f64) -> Result<f64, Error> {
    if !(m3 > 0.0) {
        return Err(Error::NonPositiveMass(m3));
    }
    bisect(|t| iso_dv(t, m3), 1e-3, FRAC_PI_2 - 1e-3)
}

/// Lagrange restpoint speed sqrt(2 V(theta*)).
pub fn v_star(m3: f64) -> Result<f64, Error> {
    Ok((2.0 * iso_v(theta_star(m3)?, m3)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// unstable branch of L- at theta* - pi
    Gamma,
    /// unstable branch of L'- at -theta*
    GammaPrime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrace {
    pub which: Branch,
    pub m3: f64,
    /// (theta, v) samples at integrator steps
    pub samples: Vec<(f64, f64)>,
    /// v(-3pi/4), gamma only
    pub v_3pi4: Option<f64>,
    /// v(-pi/2), gamma only
    pub v1: Option<f64>,
    /// v(0) on gamma
    pub v2: Option<f64>,
    /// v(0) on gamma'
    pub v3: Option<f64>,
    /// theta where the branch reached v^2 = 2V and left w > 0
    pub terminated_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    pub tol: Options,
    /// offset from the restpoint where the trace starts
    pub start_offset: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { tol: Options::with_tol(1e-12, 1e-13), start_offset: 1e-6 }
    }
}

fn slack(theta: f64, v: f64, m3: f64) -> f64 {
    let c = theta.cos();
    2.0 * iso_w(theta, m3) - v * v * c * c
}

/// Start point near a restpoint: the slope vanishes there, so use v = v0 + k eps^2
/// where k > 0 solves 4k^2 - 2 A^2 |v0| k - A^2 V'' = 0 with A = |cos| / (1 + sin^2).
pub fn branch_start(theta0: f64, v0: f64, m3: f64, eps: f64) -> (f64, f64) {
    let hh = 1e-4;
    let vpp = (iso_v(theta0 + hh, m3) - 2.0 * iso_v(theta0, m3) + iso_v(theta0 - hh, m3)) / (hh * hh);
    let s = theta0.sin();
    let a2 = (theta0.cos() / (1.0 + s * s)).powi(2);
    let b = 2.0 * a2 * v0.abs();
    let k = (b + (b * b + 16.0 * a2 * vpp).sqrt()) / 8.0;
    (theta0 + eps, v0 + k * eps * eps)
}

pub fn trace_branch(which: Branch, m3: f64, opts: &BranchOptions) -> Result<BranchTrace, Error> {
    let ts = theta_star(m3)?;
    let vs = (2.0 * iso_v(ts, m3)).sqrt();
    let (theta_r, targets): (f64, &[f64]) = match which {
        Branch::Gamma => (ts - PI, &[-3.0 * FRAC_PI_4, -FRAC_PI_2, 0.0]),
        Branch::GammaPrime => (-ts, &[0.0]),
    };
    let (th0, v0) = branch_start(theta_r, -vs, m3, opts.start_offset);
    let field = |y: &[f64; 2]| Ok([1.0, collision_slope(y[0], y[1], m3).unwrap_or(0.0)]);
    let events = [EventSpec::new(|y: &[f64; 2]| slack(y[0], y[1], m3), Direction::Falling, true)];
    let mut o = opts.tol;
    o.dense = true;
    let tr = integrate(field, th0, [th0, v0], 0.0, &o, &events);
    let mut out = BranchTrace { which, m3, samples: tr.samples.iter().map(|(_, y)| (y[0], y[1])).collect(), v_3pi4: None, v1: None, v2: None, v3: None, terminated_at: None };
    match tr.termination {
        Termination::ReachedEnd => {}
        Termination::TerminalEvent(_) => out.terminated_at = Some(tr.t_end()),
        t => return Err(Error::Integration(t)),
    }
    let at = |t: f64| if t <= tr.t_end() + 1e-15 { tr.eval(t).map(|y| y[1]) } else { None };
    match which {
        Branch::Gamma => {
            out.v_3pi4 = at(targets[0]);
            out.v1 = at(targets[1]);
            out.v2 = at(targets[2]);
        }
        Branch::GammaPrime => out.v3 = at(targets[0]),
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub m3: f64,
    pub admissible: bool,
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    pub v3: Option<f64>,
    /// why the mass failed, if it did
    pub reason: Option<&'static str>,
}

pub fn admissible(m3: f64, opts: &BranchOptions) -> Result<Admissibility, Error> {
    let g = trace_branch(Branch::Gamma, m3, opts)?;
    let gp = trace_branch(Branch::GammaPrime, m3, opts)?;
    let reason = if g.terminated_at.is_some() {
        Some("gamma leaves w > 0 before theta = 0")
    } else if gp.terminated_at.is_some() {
        Some("gamma' leaves w > 0 before theta = 0")
    } else if !(g.v1.unwrap() < 0.0) {
        Some("v1 >= 0")
    } else if !(g.v2.unwrap() > 0.0) {
        Some("v2 <= 0")
    } else if !(gp.v3.unwrap() < 0.0) {
        Some("v3 >= 0")
    } else {
        None
    };
    Ok(Admissibility { m3, admissible: reason.is_none(), v1: g.v1, v2: g.v2, v3: gp.v3, reason })
}

/// Bisect for the mass where admissibility changes between lo (admissible) and hi.
pub fn admissibility_threshold(lo: f64, hi: f64, tol: f64, opts: &BranchOptions) -> Result<f64, Error> {
    let (mut a, mut b) = (lo, hi);
    if !admissible(a, opts)?.admissible || admissible(b, opts)?.admissible {
        return Err(Error::NoSignChange);
    }
    while b - a > tol {
        let c = 0.5 * (a + b);
        if admissible(c, opts)?.admissible {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(0.5 * (a + b))
}

/// Brake state (r = V(theta0), v = 0, theta0, w = 0).
pub fn brake_state(theta0: f64, m3: f64) -> [f64; 4] {
    [iso_v(theta0, m3), 0.0, theta0, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionId {
    I,
    II,
    III,
}

/// Region of theta in [theta* - pi, 0]: I = [theta* - pi, -pi/2], II = [-pi/2, -theta*], III = [-theta*, 0].
pub fn region(theta: f64, theta_star: f64) -> Option<RegionId> {
    if theta < theta_star - PI || theta > 0.0 {
        None
    } else if theta <= -FRAC_PI_2 {
        Some(RegionId::I)
    } else if theta <= -theta_star {
        Some(RegionId::II)
    } else {
        Some(RegionId::III)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShotOutcome {
    /// reached theta = 0 at rescaled time s with speed v there
    Reached { v: f64, s: f64, v_half: Option<f64> },
    /// w fell to zero in region II before theta = 0
    TurnedBack { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotOptions {
    pub tol: Options,
    pub s_max: f64,
}

impl Default for ShotOptions {
    fn default() -> Self {
        Self { tol: Options::with_tol(1e-12, 1e-14), s_max: 200.0 }
    }
}

/// Integrate one brake shot from theta0 to the second syzygy at theta = 0.
pub fn shoot(theta0: f64, m3: f64, opts: &ShotOptions) -> Result<ShotOutcome, Error> {
    let ts = theta_star(m3)?;
    let y0 = brake_state(theta0, m3);
    let events = [
        EventSpec::new(|y: &[f64; 4]| y[2] + FRAC_PI_2, Direction::Rising, false),
        EventSpec::new(|y: &[f64; 4]| y[2], Direction::Rising, true),
        EventSpec::new(|y: &[f64; 4]| y[3], Direction::Falling, true),
    ];
    let tr = integrate(|y: &[f64; 4]| Ok(iso_field(y, m3)), 0.0, y0, opts.s_max, &opts.tol, &events);
    // theta must not decrease while w >= 0
    for w in tr.samples.windows(2) {
        if w[0].1[3] >= 0.0 && w[1].1[3] >= 0.0 && w[1].1[2] < w[0].1[2] - 1e-12 {
            return Err(Error::RegionCrossing("theta decreased with w >= 0"));
        }
    }
    let v_half = tr.first_event(0).map(|e| e.state[1]);
    match tr.termination {
        Termination::TerminalEvent(1) => Ok(ShotOutcome::Reached { v: tr.last().1[1], s: tr.t_end(), v_half }),
        Termination::TerminalEvent(2) => {
            let th = tr.last().1[2];
            match region(th, ts) {
                Some(RegionId::II) => Ok(ShotOutcome::TurnedBack { theta: th }),
                _ => Err(Error::RegionCrossing("w reached 0 inside region I or III")),
            }
        }
        t => Err(Error::Integration(t)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBrakeOrbit {
    pub m3: f64,
    pub theta0: f64,
    pub r0: f64,
    /// rescaled time of the second syzygy
    pub t2: f64,
    /// v at the first syzygy theta = -pi/2
    pub v_half: f64,
    /// v at theta = 0
    pub v_end: f64,
    /// (s, [r, v, theta, w]) from the brake point to theta = 0
    pub quarter: Vec<(f64, [f64; 4])>,
    /// physical time at each quarter sample
    pub quarter_t: Vec<f64>,
    /// max state error after direct integration over 4 T2
    pub closure_error: f64,
    /// every grid bracket where v(theta = 0) changed sign
    pub brackets: Vec<(f64, f64)>,
    /// root found in each bracket
    pub roots: Vec<f64>,
}

/// One grid point of the shooting scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSample {
    pub theta0: f64,
    pub outcome: Result<ShotOutcome, Error>,
}

pub fn shooting_grid(m3: f64, n: usize) -> Result<Vec<f64>, Error> {
    let ts = theta_star(m3)?;
    let (a, b) = (ts - PI, -FRAC_PI_2);
    Ok((1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect())
}

pub fn shooting_scan(m3: f64, n: usize, opts: &ShotOptions) -> Result<Vec<ShotSample>, Error> {
    Ok(shooting_grid(m3, n)?.into_iter().map(|t| ShotSample { theta0: t, outcome: shoot(t, m3, opts) }).collect())
}

fn reached_v(o: &Result<ShotOutcome, Error>) -> Option<f64> {
    match o {
        Ok(ShotOutcome::Reached { v, .. }) => Some(*v),
        _ => None,
    }
}

pub fn sign_brackets(scan: &[ShotSample]) -> Vec<(f64, f64)> {
    scan.windows(2)
        .filter_map(|w| match (reached_v(&w[0].outcome), reached_v(&w[1].outcome)) {
            (Some(a), Some(b)) if a.signum() != b.signum() || a == 0.0 => Some((w[0].theta0, w[1].theta0)),
            _ => None,
        })
        .collect()
}

/// Bisect v(theta = 0) on a bracket to |v| < vtol.
pub fn refine_bracket(lo: f64, hi: f64, m3: f64, vtol: f64, opts: &ShotOptions) -> Result<(f64, f64), Error> {
    let vat = |t: f64| -> Result<f64, Error> { reached_v(&shoot(t, m3, opts)).ok_or(Error::NoConvergence) };
    let (mut a, mut b) = (lo, hi);
    let mut fa = vat(a)?;
    let fb = vat(b)?;
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange);
    }
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        let fc = vat(c)?;
        if fc.abs() < vtol || b - a < 1e-15 {
            return Ok((c, fc));
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    Err(Error::NoConvergence)
}

/// Find the symmetric periodic brake orbit from a precomputed scan.
pub fn periodic_from_scan(m3: f64, scan: &[ShotSample], vtol: f64, opts: &ShotOptions) -> Result<PeriodicBrakeOrbit, Error> {
    let brackets = sign_brackets(scan);
    if brackets.is_empty() {
        return Err(Error::NoSignChange);
    }
    let mut roots = Vec::with_capacity(brackets.len());
    let mut best: Option<(f64, f64)> = None;
    for &(a, b) in &brackets {
        let (t, v) = refine_bracket(a, b, m3, vtol, opts)?;
        roots.push(t);
        if best.is_none() {
            best = Some((t, v));
        }
    }
    let (theta0, _) = best.unwrap();
    let (quarter, quarter_t, t2, v_half, v_end) = quarter_orbit(theta0, m3, opts)?;
    let closure_error = closure(theta0, m3, 4.0 * t2, opts);
    Ok(PeriodicBrakeOrbit { m3, theta0, r0: iso_v(theta0, m3), t2, v_half, v_end, quarter, quarter_t, closure_error, brackets, roots })
}

pub fn find_periodic_brake(m3: f64, opts: &ShotOptions) -> Result<PeriodicBrakeOrbit, Error> {
    let scan = shooting_scan(m3, 200, opts)?;
    periodic_from_scan(m3, &scan, 1e-10, opts)
}

type Quarter = (Vec<(f64, [f64; 4])>, Vec<f64>, f64, f64, f64);

fn quarter_orbit(theta0: f64, m3: f64, opts: &ShotOptions) -> Result<Quarter, Error> {
    let events = [
        EventSpec::new(|y: &[f64; 5]| y[2] + FRAC_PI_2, Direction::Rising, false),
        EventSpec::new(|y: &[f64; 5]| y[2], Direction::Rising, true),
    ];
    let mut o = opts.tol;
    o.dense = true;
    let [r, v, th, w] = brake_state(theta0, m3);
    let tr = integrate(|y: &[f64; 5]| Ok(iso_field_t(y, m3)), 0.0, [r, v, th, w, 0.0], opts.s_max, &o, &events);
    if tr.termination != Termination::TerminalEvent(1) {
        return Err(Error::Integration(tr.termination));
    }
    let v_half = tr.first_event(0).map(|e| e.state[1]).ok_or(Error::RegionCrossing("no crossing of theta = -pi/2"))?;
    let mut pts = Vec::new();
    let mut times = Vec::new();
    let mut push = |s: f64, y: [f64; 5]| {
        pts.push((s, [y[0], y[1], y[2], y[3]]));
        times.push(y[4]);
    };
    for st in &tr.steps {
        for j in 0..8 {
            let s = st.t0 + st.h * j as f64 / 8.0;
            if s < tr.t_end() {
                push(s, st.eval(s));
            }
        }
    }
    let (se, ye) = tr.last();
    push(se, ye);
    Ok((pts, times, tr.t_end(), v_half, ye[1]))
}

fn closure(theta0: f64, m3: f64, period: f64, opts: &ShotOptions) -> f64 {
    let y0 = brake_state(theta0, m3);
    let tr = integrate(|y: &[f64; 4]| Ok(iso_field(y, m3)), 0.0, y0, period, &opts.tol, &[]);
    if tr.termination != Termination::ReachedEnd {
        return f64::INFINITY;
    }
    let y1 = tr.last().1;
    (0..4).fold(0.0, |a, i| a.max((y1[i] - y0[i]).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reflection {
    /// (r, 2c - theta, -v, w), time reversed; fixes theta = c, v = 0
    Reversing,
    /// (r, 2c - theta, v, -w), same time direction
    Mirror,
    /// (r, theta, -v, -w), time reversed; fixes brake points
    TimeReversal,
}

impl Reflection {
    pub fn apply(self, y: [f64; 4], center: f64) -> [f64; 4] {
        let [r, v, th, w] = y;
        match self {
            Reflection::Reversing => [r, -v, 2.0 * center - th, w],
            Reflection::Mirror => [r, v, 2.0 * center - th, -w],
            Reflection::TimeReversal => [r, -v, th, -w],
        }
    }

    pub fn reverses_time(self) -> bool {
        !matches!(self, Reflection::Mirror)
    }
}

/// Reflect a segment about the line theta = center. Time-reversing reflections map s to -s
/// (samples are reordered so s stays increasing); reflecting twice gives back the input.
pub fn reflect_orbit(seg: &[(f64, [f64; 4])], kind: Reflection, center: f64) -> Vec<(f64, [f64; 4])> {
    let mut out: Vec<(f64, [f64; 4])> = seg
        .iter()
        .map(|(s, y)| (if kind.reverses_time() { -s } else { *s }, kind.apply(*y, center)))
        .collect();
    if kind.reverses_time() {
        out.reverse();
    }
    out
}

/// Shift segment times by ds.
pub fn shift(seg: &[(f64, [f64; 4])], ds: f64) -> Vec<(f64, [f64; 4])> {
    seg.iter().map(|(s, y)| (s + ds, *y)).collect()
}

/// Max residual of the equations of motion along a reflected segment, using the
/// field of the source points: |sigma R f(y) - f(R y)|.
pub fn reflection_residual(seg: &[(f64, [f64; 4])], kind: Reflection, center: f64, m3: f64) -> f64 {
    let sigma = if kind.reverses_time() { -1.0 } else { 1.0 };
    let lin = |d: [f64; 4]| -> [f64; 4] {
        // the reflections are affine; apply their linear part
        let z = kind.apply([0.0; 4], center);
        let a = kind.apply(d, center);
        [a[0] - z[0], a[1] - z[1], a[2] - z[2], a[3] - z[3]]
    };
    seg.iter().fold(0.0, |acc, (_, y)| {
        let fy = lin(iso_field(y, m3));
        let fr = iso_field(&kind.apply(*y, center), m3);
        (0..4).fold(acc, |a, i| a.max((sigma * fy[i] - fr[i]).abs()))
    })
}

/// Assemble the full period from the quarter orbit: reversing reflection about theta = 0,
/// then the time reversal at the far brake point.
pub fn assemble_period(quarter: &[(f64, [f64; 4])]) -> Vec<(f64, [f64; 4])> {
    let t2 = quarter.last().unwrap().0;
    let mut out = quarter.to_vec();
    let half2 = shift(&reflect_orbit(quarter, Reflection::Reversing, 0.0), 2.0 * t2);
    out.extend(half2.into_iter().skip(1));
    let half = out.clone();
    let back = shift(&reflect_orbit(&half, Reflection::TimeReversal, 0.0), 4.0 * t2);
    out.extend(back.into_iter().skip(1));
    out
}

/// Unreduced Jacobi state (masses 1, 1, m3) for an isosceles point.
pub fn iso_to_jacobi(y: &[f64; 4], m3: f64) -> Result<JacobiState, Error> {
    let m = MassParams::new(1.0, 1.0, m3)?;
    let [r, v, th, w] = *y;
    if !(r > 0.0) {
        return Err(Error::TripleCollision);
    }
    let (s, c) = th.sin_cos();
    let q = 1.0 + s * s;
    let (a1, a2) = (1.0 / m.mu1.sqrt(), 1.0 / m.mu2.sqrt());
    let f1 = c * c / q * a1;
    let f2 = 2.0 * s / q * a2;
    let df1 = -4.0 * s * c / (q * q) * a1;
    let df2 = 2.0 * c * c * c / (q * q) * a2;
    let cc = c * c;
    if cc == 0.0 {
        return Err(Error::Collision(crate::Pair::P12));
    }
    let rdot = v / r.sqrt();
    let thdot = 0.25 * w * q * q / (r * r.sqrt() * cc);
    Ok(JacobiState {
        xi1: Complex64::new(r * f1, 0.0),
        xi2: Complex64::new(0.0, r * f2),
        xidot1: Complex64::new(rdot * f1 + r * df1 * thdot, 0.0),
        xidot2: Complex64::new(0.0, rdot * f2 + r * df2 * thdot),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonCheck {
    pub max_error: f64,
    pub compared: usize,
    pub energy: f64,
}

/// Re-integrate arcs of a quarter orbit with the Newtonian field and compare positions,
/// skipping points with |theta + pi/2| < margin.
pub fn newtonian_check(quarter: &[(f64, [f64; 4])], tphys: &[f64], m3: f64, margin: f64, opts: &Options) -> Result<NewtonCheck, Error> {
    let m = MassParams::new(1.0, 1.0, m3)?;
    let far = |y: &[f64; 4]| (y[2] + FRAC_PI_2).abs() >= margin && y[0] > 0.0;
    let mut max_error = 0.0f64;
    let mut compared = 0;
    let mut energy = 0.0;
    let mut i = 0;
    while i < quarter.len() {
        if !far(&quarter[i].1) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < quarter.len() && far(&quarter[j + 1].1) {
            j += 1;
        }
        let st = iso_to_jacobi(&quarter[i].1, m3)?;
        energy = crate::dynamics::newtonian_energy(&st, &m);
        let mut o = *opts;
        o.dense = true;
        let tr = integrate(|y: &[f64; 8]| newtonian_field(y, &m).map_err(Into::into), tphys[i], st.to_array(), tphys[j], &o, &[]);
        for k in i..=j {
            let y = tr.eval(tphys[k]).ok_or(Error::Integration(tr.termination))?;
            let q = iso_to_jacobi(&quarter[k].1, m3)?.to_array();
            for c in 0..4 {
                max_error = max_error.max((y[c] - q[c]).abs());
            }
            compared += 1;
        }
        i = j + 1;
    }
    Ok(NewtonCheck { max_error, compared, energy })
}
