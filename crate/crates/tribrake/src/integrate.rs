//! Dormand-Prince 5(4) with dense output, PI step control and event location.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec::Vec;


use crate::potential::shape_potential;
use crate::{dynamics::ReducedState, Error, MassParams};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Error returned by a vector field that cannot be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldError;

impl From<Error> for FieldError {
    fn from(_: Error) -> Self {
        FieldError
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_init: Option<f64>,
    /// Keep dense-output coefficients for every step.
    pub dense: bool,
    pub event_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { tol: Tolerances::default(), max_steps: 2_000_000, h_init: None, dense: true, event_tol: 1e-12 }
    }
}

impl Options {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self { tol: Tolerances { rtol, atol }, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

pub struct EventSpec<'a, const N: usize> {
    pub g: Box<dyn Fn(&[f64; N]) -> f64 + 'a>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn new(g: impl Fn(&[f64; N]) -> f64 + 'a, direction: Direction, terminal: bool) -> Self {
        Self { g: Box::new(g), direction, terminal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub state: [f64; N],
    pub rising: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    TerminalEvent(usize),
    StepUnderflow { t: f64 },
    MaxSteps { t: f64 },
    FieldFailure { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        core::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub evals: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    /// (time, state) at the start and at every accepted step end
    pub samples: Vec<(f64, [f64; N])>,
    pub steps: Vec<Step<N>>,
    pub events: Vec<EventHit<N>>,
    pub termination: Termination,
    pub stats: Stats,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        *self.samples.last().unwrap()
    }

    pub fn t_end(&self) -> f64 {
        self.last().0
    }

    /// Dense output at t (None outside the integrated range or without dense data).
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        if self.steps.is_empty() {
            return None;
        }
        let fwd = self.steps[0].h > 0.0;
        let key = |s: &Step<N>| if fwd { s.t0 } else { -s.t0 };
        let tk = if fwd { t } else { -t };
        let idx = self.steps.partition_point(|s| key(s) <= tk);
        if idx == 0 {
            return if t == self.steps[0].t0 { Some(self.steps[0].rcont[0]) } else { None };
        }
        let s = &self.steps[idx - 1];
        let end = s.t0 + s.h;
        let inside = if fwd { t <= end } else { t >= end };
        let (t_last, y_last) = self.last();
        if !inside {
            return None;
        }
        if idx == self.steps.len() && t == t_last {
            return Some(y_last);
        }
        Some(s.eval(t))
    }

    pub fn first_event(&self, index: usize) -> Option<&EventHit<N>> {
        self.events.iter().find(|e| e.index == index)
    }

    pub fn reached(&self) -> bool {
        matches!(self.termination, Termination::ReachedEnd | Termination::TerminalEvent(_))
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    core::array::from_fn(|i| {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        y[i] + h * s
    })
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct StepResult<const N: usize> {
    y1: [f64; N],
    k7: [f64; N],
    err: f64,
    stages: [[f64; N]; 7],
}

fn rk_step<const N: usize, F>(f: &mut F, y0: &[f64; N], k1: &[f64; N], h: f64, tol: &Tolerances, evals: &mut usize) -> Option<StepResult<N>>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], FieldError>,
{
    let mut call = |y: &[f64; N]| -> Option<[f64; N]> {
        *evals += 1;
        match f(y) {
            Ok(v) if finite(&v) => Some(v),
            _ => None,
        }
    };
    let k2 = call(&axpy(y0, h, &[(A21, k1)]))?;
    let k3 = call(&axpy(y0, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = call(&axpy(y0, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = call(&axpy(y0, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = call(&axpy(y0, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y1 = axpy(y0, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    if !finite(&y1) {
        return None;
    }
    let k7 = call(&y1)?;
    let mut err = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = tol.atol + tol.rtol * y0[i].abs().max(y1[i].abs());
        err += (e / sk) * (e / sk);
    }
    Some(StepResult { y1, k7, err: (err / N as f64).sqrt(), stages: [*k1, k2, k3, k4, k5, k6, k7] })
}

fn dense_coeffs<const N: usize>(y0: &[f64; N], r: &StepResult<N>, h: f64) -> [[f64; N]; 5] {
    let k = &r.stages;
    let mut rc = [[0.0; N]; 5];
    for i in 0..N {
        let ydiff = r.y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        rc[0][i] = y0[i];
        rc[1][i] = ydiff;
        rc[2][i] = bspl;
        rc[3][i] = ydiff - h * k[6][i] - bspl;
        rc[4][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
    rc
}

fn initial_step<const N: usize, F>(f: &mut F, y0: &[f64; N], f0: &[f64; N], dir: f64, tol: &Tolerances, span: f64, evals: &mut usize) -> f64
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], FieldError>,
{
    let sk = |i: usize| tol.atol + tol.rtol * y0[i].abs();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        dnf += (f0[i] / sk(i)).powi(2);
        dny += (y0[i] / sk(i)).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
    h = h.min(span.abs());
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    *evals += 1;
    let der2 = match f(&y1) {
        Ok(f1) if finite(&f1) => {
            let mut d = 0.0;
            for i in 0..N {
                d += ((f1[i] - f0[i]) / sk(i)).powi(2);
            }
            d.sqrt() / h
        }
        _ => return 1e-3 * h,
    };
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (1e-6f64).max(h * 1e-3) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(span.abs())
}

/// Integrate the autonomous system y' = f(y) from (t0, y0) to t1 (either direction).
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &Options,
    events: &[EventSpec<'_, N>],
) -> Trajectory<N>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], FieldError>,
{
    let mut stats = Stats::default();
    let mut traj = Trajectory { samples: Vec::new(), steps: Vec::new(), events: Vec::new(), termination: Termination::ReachedEnd, stats };
    traj.samples.push((t0, y0));
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    if t1 == t0 {
        return traj;
    }
    stats.evals += 1;
    let mut k1 = match f(&y0) {
        Ok(v) if finite(&v) => v,
        _ => {
            traj.termination = Termination::FieldFailure { t: t0 };
            return traj;
        }
    };
    let tol = opts.tol;
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => initial_step(&mut f, &y0, &k1, dir, &tol, t1 - t0, &mut stats.evals),
    };
    let mut t = t0;
    let mut y = y0;
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(&y0)).collect();
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    loop {
        if stats.steps >= opts.max_steps {
            traj.termination = Termination::MaxSteps { t };
            break;
        }
        let hmin = 1e-14 * t.abs().max(1.0);
        if h < hmin {
            traj.termination = Termination::StepUnderflow { t };
            break;
        }
        let mut last = false;
        if (t + dir * h - t1) * dir >= 0.0 {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = dir * h;
        let res = match rk_step(&mut f, &y, &k1, hs, &tol, &mut stats.evals) {
            Some(r) if r.err.is_finite() => r,
            _ => {
                stats.rejected += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }
        };
        let fac11 = res.err.powf(expo1);
        if res.err <= 1.0 {
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            facold = res.err.max(1e-4);
            last_rejected = false;
            stats.steps += 1;
            let t_new = if last { t1 } else { t + hs };
            let step = Step { t0: t, h: hs, rcont: dense_coeffs(&y, &res, hs) };

            // events
            let mut terminal_hit: Option<EventHit<N>> = None;
            let mut hits: Vec<EventHit<N>> = Vec::new();
            let g_new: Vec<f64> = events.iter().map(|e| (e.g)(&res.y1)).collect();
            for (i, ev) in events.iter().enumerate() {
                let (ga, gb) = (g_prev[i], g_new[i]);
                let rising = ga < 0.0 && gb >= 0.0;
                let falling = ga > 0.0 && gb <= 0.0;
                let ok = match ev.direction {
                    Direction::Rising => rising,
                    Direction::Falling => falling,
                    Direction::Any => rising || falling,
                };
                if !ok {
                    continue;
                }
                let (te, ye) = locate(&mut f, &ev.g, &step, &y, &k1, t, t_new, ga, gb, &tol, opts.event_tol, &mut stats.evals);
                // a root at the very start comes from restarting on an event
                if (te - t0).abs() <= 1e2 * opts.event_tol * t0.abs().max(1.0) {
                    continue;
                }
                let hit = EventHit { index: i, t: te, state: ye, rising };
                if ev.terminal {
                    let earlier = match &terminal_hit {
                        None => true,
                        Some(p) => (te - p.t) * dir < 0.0,
                    };
                    if earlier {
                        terminal_hit = Some(hit);
                    }
                } else {
                    hits.push(hit);
                }
            }
            if let Some(th) = terminal_hit {
                hits.retain(|e| (e.t - th.t) * dir <= 0.0);
                hits.push(th);
            }
            hits.sort_by(|a, b| ((a.t - b.t) * dir).partial_cmp(&0.0).unwrap());
            traj.events.extend(hits.iter().copied());
            if opts.dense {
                traj.steps.push(step);
            }
            if let Some(th) = terminal_hit {
                traj.samples.push((th.t, th.state));
                traj.termination = Termination::TerminalEvent(th.index);
                break;
            }
            t = t_new;
            y = res.y1;
            k1 = res.k7;
            g_prev = g_new;
            traj.samples.push((t, y));
            if last {
                traj.termination = Termination::ReachedEnd;
                break;
            }
            h = hnew;
        } else {
            stats.rejected += 1;
            h /= (fac11 / safe).min(5.0);
            last_rejected = true;
        }
    }
    traj.stats = stats;
    traj
}

/// Locate a sign change of g on [ta, tb] with Illinois iterations, using direct
/// RK steps from the step start so the reported state carries the step's accuracy.
#[allow(clippy::too_many_arguments)]
fn locate<const N: usize, F>(
    f: &mut F,
    g: &dyn Fn(&[f64; N]) -> f64,
    step: &Step<N>,
    y0: &[f64; N],
    k1: &[f64; N],
    ta: f64,
    tb: f64,
    ga: f64,
    gb: f64,
    tol: &Tolerances,
    gtol: f64,
    evals: &mut usize,
) -> (f64, [f64; N])
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], FieldError>,
{
    let mut state_at = |tt: f64, evals: &mut usize| -> [f64; N] {
        if tt == ta {
            return *y0;
        }
        match rk_step(f, y0, k1, tt - ta, tol, evals) {
            Some(r) => r.y1,
            None => step.eval(tt),
        }
    };
    let (mut a, mut b, mut fa, mut fb) = (ta, tb, ga, gb);
    let mut side = 0i32;
    let mut best = (tb, state_at(tb, evals));
    let mut best_g = fb;
    for _ in 0..200 {
        let c = if (fb - fa) != 0.0 { (a * fb - b * fa) / (fb - fa) } else { 0.5 * (a + b) };
        let c = if (c - a) * (c - b) < 0.0 { c } else { 0.5 * (a + b) };
        let yc = state_at(c, evals);
        let fc = g(&yc);
        if fc.abs() < best_g.abs() || fc.abs() < gtol {
            best = (c, yc);
            best_g = fc;
        }
        if fc.abs() < gtol || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs().max(1e-300) {
            break;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    best
}

/// Zero-velocity lift of a shape in the open disk: r = V/h.
pub fn brake_lift(x: f64, y: f64, m: &MassParams, h: f64) -> Result<ReducedState, Error> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveEnergy(h));
    }
    if !(x * x + y * y < 1.0) {
        return Err(Error::Domain("brake lift needs a shape in the open unit disk"));
    }
    let p = shape_potential(x, y, m).finite()?;
    Ok(ReducedState { r: p.v / h, v: 0.0, x, y, xp: 0.0, yp: 0.0 })
}

/// Largest deviation in (r, x, y) between the reduced blow-up flow and the unreduced
/// Newtonian flow from the brake start over (x, y), sampled at n equally spaced physical times up to t_end.
pub fn compare_with_newtonian(x: f64, y: f64, m: &MassParams, h: f64, t_end: f64, n: usize, opts: &Options) -> Result<f64, Error> {
    use crate::dynamics::{blowup_field_t, newtonian_field};
    use crate::model::{jacobi_to_shape, lift_state, JacobiState};
    let start = brake_lift(x, y, m, h)?;
    let times: Vec<f64> = (1..=n).map(|k| t_end * k as f64 / n as f64).collect();
    let events: Vec<EventSpec<7>> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| EventSpec::new(move |s: &[f64; 7]| s[6] - t, Direction::Rising, k + 1 == n))
        .collect();
    let red = integrate(|s: &[f64; 7]| blowup_field_t(s, m).map_err(FieldError::from), 0.0, start.with_time(0.0), 1e6, opts, &events);
    if red.termination != Termination::TerminalEvent(n - 1) {
        return Err(Error::Integration(red.termination));
    }
    let lifted = lift_state(&crate::ShapePoint::new(start.r, x, y), 0.0, 0.0, 0.0, m);
    let mut o = *opts;
    o.dense = true;
    let newt = integrate(|s: &[f64; 8]| newtonian_field(s, m).map_err(FieldError::from), 0.0, lifted.to_array(), t_end, &o, &[]);
    if newt.termination != Termination::ReachedEnd {
        return Err(Error::Integration(newt.termination));
    }
    let mut worst = 0.0f64;
    for (k, &t) in times.iter().enumerate() {
        let a = red.first_event(k).ok_or(Error::NoConvergence)?.state;
        let b = newt.eval(t).ok_or(Error::NoConvergence)?;
        let p = jacobi_to_shape(&JacobiState::from_array(&b), m)?;
        worst = worst.max((a[0] - p.r).abs()).max((a[2] - p.x).abs()).max((a[3] - p.y).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn osc(y: &[f64; 2]) -> Result<[f64; 2], FieldError> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn harmonic_one_period() {
        let tr = integrate(osc, 0.0, [1.0, 0.0], 2.0 * PI, &Options::default(), &[]);
        let (_, y) = tr.last();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{:?}", y);
        // dense output in the middle of the run
        let ym = tr.eval(1.234).unwrap();
        assert!((ym[0] - 1.234f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn backward_integration() {
        let tr = integrate(osc, 0.0, [1.0, 0.0], -PI, &Options::default(), &[]);
        let (t, y) = tr.last();
        assert_eq!(t, -PI);
        assert!((y[0] + 1.0).abs() < 1e-9);
        assert!(tr.eval(-1.0).is_some());
    }

    #[test]
    fn events_are_located() {
        let ev = [
            EventSpec::new(|y: &[f64; 2]| y[0], Direction::Falling, false),
            EventSpec::new(|y: &[f64; 2]| y[1], Direction::Rising, true),
        ];
        let tr = integrate(osc, 0.0, [1.0, 0.0], 10.0, &Options::default(), &ev);
        assert_eq!(tr.termination, Termination::TerminalEvent(1));
        let e0 = tr.first_event(0).unwrap();
        assert!((e0.t - PI / 2.0).abs() < 1e-9 && e0.state[0].abs() < 1e-12);
        let e1 = tr.first_event(1).unwrap();
        assert!((e1.t - PI).abs() < 1e-9 && e1.state[1].abs() < 1e-12);
        assert_eq!(tr.t_end(), e1.t);
    }

    #[test]
    fn zero_at_start_is_not_an_event() {
        let ev = [EventSpec::new(|y: &[f64; 2]| y[1], Direction::Any, true)];
        let tr = integrate(osc, 0.0, [1.0, 0.0], 1.0, &Options::default(), &ev);
        assert_eq!(tr.termination, Termination::ReachedEnd);
    }

    #[test]
    fn failing_field_is_reported() {
        let f = |y: &[f64; 1]| if y[0] > 2.0 { Err(FieldError) } else { Ok([1.0]) };
        let tr = integrate(f, 0.0, [0.0], 5.0, &Options::default(), &[]);
        assert!(matches!(tr.termination, Termination::StepUnderflow { .. }));
        assert!(tr.t_end() <= 2.0 + 1e-9);
    }
}
