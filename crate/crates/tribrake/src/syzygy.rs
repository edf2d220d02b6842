#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::dynamics::{blowup_field_t, ReducedState};
use crate::integrate::{brake_lift, integrate, Direction, EventSpec, FieldError, Options, Termination, Trajectory};
use crate::potential::shape_potential;
use crate::{Error, MassParams, Pair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyzygyOptions {
    pub ode: Options,
    /// horizon in rescaled time s
    pub s_horizon: f64,
    /// stop when min r_ij/||xi|| falls below this
    pub collision_guard: f64,
    /// crossings with r below this are flagged near-triple-collision
    pub near_triple_r: f64,
}

impl Default for SyzygyOptions {
    fn default() -> Self {
        Self { ode: Options::default(), s_horizon: 1e3, collision_guard: 1e-4, near_triple_r: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyzygyRecord {
    /// angle of the collinear shape on the unit circle
    pub angle: f64,
    pub r: f64,
    pub state: ReducedState,
    pub s0: f64,
    pub t0: f64,
    /// stopped on the binary-collision guard
    pub collision: bool,
    pub collision_pair: Option<Pair>,
    /// index (1, 2, 3) of the mass between the other two
    pub syzygy_type: u8,
    pub near_triple: bool,
    /// z nonincreasing along the arc (checked at step ends and interior dense points)
    pub z_monotone: bool,
    /// largest dI/dt after the start
    pub max_idot: f64,
}

/// Middle mass of a (near) collinear shape: the one opposite the longest side.
pub fn syzygy_type(x: f64, y: f64) -> u8 {
    let d = crate::potential::squared_distances(x, y);
    if d[0] >= d[1] && d[0] >= d[2] {
        3
    } else if d[1] >= d[2] {
        2
    } else {
        1
    }
}

fn z_of(s: &[f64; 7]) -> f64 {
    1.0 - s[2] * s[2] - s[3] * s[3]
}

/// Follow a state forward to the next falling crossing of z = 0 (or the collision guard).
pub fn next_syzygy(start: &ReducedState, t_start: f64, m: &MassParams, opts: &SyzygyOptions) -> Result<(SyzygyRecord, Trajectory<7>), Error> {
    let guard = opts.collision_guard;
    let events = [
        EventSpec::new(z_of, Direction::Falling, true),
        EventSpec::new(move |s: &[f64; 7]| shape_potential(s[2], s[3], m).min_rho() - guard, Direction::Falling, true),
    ];
    let y0 = start.with_time(t_start);
    let tr = integrate(|y: &[f64; 7]| blowup_field_t(y, m).map_err(FieldError::from), 0.0, y0, opts.s_horizon, &opts.ode, &events);
    let hit = match tr.termination {
        Termination::TerminalEvent(i) => (i, *tr.events.last().unwrap()),
        t => return Err(Error::Integration(t)),
    };
    let (idx, ev) = hit;
    let st = ReducedState::from_slice(&ev.state);
    let p = shape_potential(st.x, st.y, m);
    let collision_pair = if idx == 1 {
        let k = (0..3).min_by(|&a, &b| p.rho[a].partial_cmp(&p.rho[b]).unwrap()).unwrap();
        Some(Pair::ALL[k])
    } else {
        None
    };
    let (z_monotone, max_idot) = monitor(&tr);
    let rec = SyzygyRecord {
        angle: st.y.atan2(st.x),
        r: st.r,
        state: st,
        s0: ev.t,
        t0: ev.state[6],
        collision: idx == 1,
        collision_pair,
        syzygy_type: syzygy_type(st.x, st.y),
        near_triple: st.r < opts.near_triple_r,
        z_monotone,
        max_idot,
    };
    Ok((rec, tr))
}

fn monitor(tr: &Trajectory<7>) -> (bool, f64) {
    let mut mono = true;
    let mut max_idot = f64::NEG_INFINITY;
    let mut z_prev = z_of(&tr.samples[0].1);
    let mut check = |s: &[f64; 7], z_prev: &mut f64| {
        let z = z_of(s);
        if z > *z_prev + 1e-12 {
            mono = false;
        }
        *z_prev = z;
        let idot = 2.0 * s[1] * s[0].max(0.0).sqrt();
        if idot > max_idot {
            max_idot = idot;
        }
    };
    let t_end = tr.t_end();
    for (k, st) in tr.steps.iter().enumerate() {
        for j in 1..4 {
            let t = st.t0 + st.h * j as f64 / 4.0;
            if (t - t_end) * st.h < 0.0 {
                check(&st.eval(t), &mut z_prev);
            }
        }
        if let Some(s) = tr.samples.get(k + 1) {
            check(&s.1, &mut z_prev);
        }
    }
    (mono, max_idot)
}

/// First syzygy of the brake orbit starting from the zero-velocity lift of (x0, y0).
pub fn first_syzygy(x0: f64, y0: f64, m: &MassParams, h: f64, opts: &SyzygyOptions) -> Result<SyzygyRecord, Error> {
    if x0 == 0.0 && y0 == 0.0 {
        return Err(Error::LagrangeHomothetic);
    }
    let start = brake_lift(x0, y0, m, h)?;
    next_syzygy(&start, 0.0, m, opts).map(|(r, _)| r)
}

/// Reverse the velocity at a syzygy and follow the orbit to its next syzygy.
pub fn stutter(rec: &SyzygyRecord, m: &MassParams, opts: &SyzygyOptions) -> Result<SyzygyRecord, Error> {
    let s = rec.state;
    let rev = ReducedState { v: -s.v, xp: -s.xp, yp: -s.yp, ..s };
    next_syzygy(&rev, 0.0, m, opts).map(|(r, _)| r)
}

/// Latitude/longitude grid on the upper hemisphere, mapped to the disk.
/// Returns (lat, lon, x, y) with lat_i = (pi/2)(i + 1/2)/n_lat.
pub fn latlon_grid(n_lat: usize, n_lon: usize) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::with_capacity(n_lat * n_lon);
    for i in 0..n_lat {
        let lat = 0.5 * PI * (i as f64 + 0.5) / n_lat as f64;
        let rho = lat.cos() / (1.0 + lat.sin());
        for j in 0..n_lon {
            let lon = 2.0 * PI * j as f64 / n_lon as f64;
            out.push((lat, lon, rho * lon.cos(), rho * lon.sin()));
        }
    }
    out
}

/// One image-scan row: the start point and its first-syzygy outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub x0: f64,
    pub y0: f64,
    pub result: Result<SyzygyRecord, Error>,
}

pub fn image_scan(points: &[(f64, f64)], m: &MassParams, h: f64, opts: &SyzygyOptions) -> Vec<ScanRow> {
    points.iter().map(|&(x0, y0)| ScanRow { x0, y0, result: first_syzygy(x0, y0, m, h, opts) }).collect()
}

fn wrap(a: f64) -> f64 {
    let mut d = a % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    }
    if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Winding number of the image of the circle |(x, y)| = radius around r = 0.
///
/// Samples are refined by bisection wherever consecutive image angles differ by more than pi/4.
pub fn winding_degree(radius: f64, n: usize, reversed: bool, m: &MassParams, h: f64, opts: &SyzygyOptions) -> Result<i32, Error> {
    let sign = if reversed { -1.0 } else { 1.0 };
    let image = |phi: f64| -> Result<f64, Error> {
        let (s, c) = (sign * phi).sin_cos();
        first_syzygy(radius * c, radius * s, m, h, opts).map(|r| r.angle)
    };
    let mut total = 0.0;
    let mut a0 = image(0.0)?;
    let step = 2.0 * PI / n as f64;
    for k in 0..n {
        let (p0, p1) = (k as f64 * step, (k + 1) as f64 * step);
        let a1 = if k + 1 == n { image(0.0)? } else { image(p1)? };
        total += refine(&image, p0, p1, a0, a1, 0)?;
        a0 = a1;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

fn refine(image: &impl Fn(f64) -> Result<f64, Error>, p0: f64, p1: f64, a0: f64, a1: f64, depth: u32) -> Result<f64, Error> {
    let d = wrap(a1 - a0);
    if d.abs() <= PI / 4.0 || depth >= 14 {
        return Ok(d);
    }
    let pm = 0.5 * (p0 + p1);
    let am = image(pm)?;
    Ok(refine(image, p0, pm, a0, am, depth + 1)? + refine(image, pm, p1, am, a1, depth + 1)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdotReport {
    pub samples: usize,
    /// (x0, y0, max dI/dt) for starts where dI/dt reached >= 0 after the brake instant
    pub violations: Vec<(f64, f64, f64)>,
    /// starts where the first syzygy could not be computed
    pub failures: Vec<(f64, f64, Error)>,
    /// starts where z was not monotone
    pub z_nonmonotone: Vec<(f64, f64)>,
    pub worst_idot: f64,
}

/// Probe dI/dt < 0 along brake orbits up to their first syzygy.
pub fn idot_monotonicity_probe(starts: &[(f64, f64)], m: &MassParams, h: f64, opts: &SyzygyOptions) -> IdotReport {
    let mut rep = IdotReport { samples: starts.len(), violations: Vec::new(), failures: Vec::new(), z_nonmonotone: Vec::new(), worst_idot: f64::NEG_INFINITY };
    for &(x, y) in starts {
        match first_syzygy(x, y, m, h, opts) {
            Ok(rec) => {
                rep.worst_idot = rep.worst_idot.max(rec.max_idot);
                if rec.max_idot >= 0.0 {
                    rep.violations.push((x, y, rec.max_idot));
                }
                if !rec.z_monotone {
                    rep.z_nonmonotone.push((x, y));
                }
            }
            Err(e) => rep.failures.push((x, y, e)),
        }
    }
    rep
}
