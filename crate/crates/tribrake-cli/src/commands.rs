use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use tribrake::dynamics::{blowup_field_t, energy_residual, ReducedState};
use tribrake::integrate::{brake_lift, integrate, Direction, EventSpec, FieldError, Options, Termination};
use tribrake::isosceles::{self, Branch, BranchOptions, ShotOptions, ShotOutcome};
use tribrake::jm::{self, JmOptions, JmResult};
use tribrake::potential::{radial_factor, shape_potential};
use tribrake::restpoint::{self, Kind, Sign, Spiral};
use tribrake::syzygy::{self, SyzygyOptions, SyzygyRecord};
use tribrake::{Error, MassParams, ShapePoint};

use crate::acceptance;
use crate::config::RunConfig;
use crate::output::{num, opt, Output};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    PotentialGrid,
    Integrate,
    SyzygyMap,
    ImageScan,
    Winding,
    Restpoints,
    SpiralingScan,
    IsoBranches,
    IsoAdmissible,
    IsoPeriodic,
    JmMinimize,
    SeifertProbe,
    VerifyAll,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::PotentialGrid => "potential-grid",
            Subcommand::Integrate => "integrate",
            Subcommand::SyzygyMap => "syzygy-map",
            Subcommand::ImageScan => "image-scan",
            Subcommand::Winding => "winding",
            Subcommand::Restpoints => "restpoints",
            Subcommand::SpiralingScan => "spiraling-scan",
            Subcommand::IsoBranches => "iso-branches",
            Subcommand::IsoAdmissible => "iso-admissible",
            Subcommand::IsoPeriodic => "iso-periodic",
            Subcommand::JmMinimize => "jm-minimize",
            Subcommand::SeifertProbe => "seifert-probe",
            Subcommand::VerifyAll => "verify-all",
        }
    }
}

fn masses(cfg: &RunConfig) -> Result<MassParams, CliError> {
    let [a, b, c] = cfg.masses;
    Ok(MassParams::new(a, b, c)?)
}

fn ode(cfg: &RunConfig) -> Options {
    Options::with_tol(cfg.tolerances.rtol, cfg.tolerances.atol)
}

fn syz_opts(cfg: &RunConfig) -> SyzygyOptions {
    SyzygyOptions { ode: ode(cfg), s_horizon: cfg.syzygy.s_horizon, collision_guard: cfg.syzygy.collision_guard, ..Default::default() }
}

pub fn run(sub: Subcommand, cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    match sub {
        Subcommand::PotentialGrid => potential_grid(cfg, out),
        Subcommand::Integrate => integrate_orbit(cfg, out),
        Subcommand::SyzygyMap => syzygy_map(cfg, out),
        Subcommand::ImageScan => image_scan(cfg, out),
        Subcommand::Winding => winding(cfg, out),
        Subcommand::Restpoints => restpoints(cfg, out),
        Subcommand::SpiralingScan => spiraling_scan(cfg, out),
        Subcommand::IsoBranches => iso_branches(cfg, out),
        Subcommand::IsoAdmissible => iso_admissible(cfg, out),
        Subcommand::IsoPeriodic => iso_periodic(cfg, out),
        Subcommand::JmMinimize => jm_minimize(cfg, out),
        Subcommand::SeifertProbe => seifert(cfg, out),
        Subcommand::VerifyAll => verify_all(out),
    }
}

fn potential_grid(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let n = cfg.grid.n.max(2);
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            if x * x + y * y > 1.0 {
                continue;
            }
            let p = shape_potential(x, y, &m);
            if p.collision.is_some() {
                continue;
            }
            rows.push(vec![num(x), num(y), num(p.v), num(p.grad[0]), num(p.grad[1]), num(p.kappa), num(radial_factor(x, y, &m))]);
        }
    }
    out.write_csv("potential_grid.csv", &["x", "y", "V", "Vx", "Vy", "kappa", "phi"], &rows)?;
    Ok(())
}

fn integrate_orbit(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let [x, y] = cfg.integrate.start;
    let start = brake_lift(x, y, &m, cfg.h)?;
    let t_end = cfg.integrate.t_end;
    let ev = [EventSpec::new(move |s: &[f64; 7]| s[6] - t_end, Direction::Rising, true)];
    let tr = integrate(|s: &[f64; 7]| blowup_field_t(s, &m).map_err(FieldError::from), 0.0, start.with_time(0.0), 1e6, &ode(cfg), &ev);
    let rows: Vec<Vec<String>> = tr
        .samples
        .iter()
        .map(|(s, st)| {
            let rs = ReducedState::from_slice(st);
            vec![num(*s), num(st[6]), num(st[0]), num(st[1]), num(st[2]), num(st[3]), num(st[4]), num(st[5]), num(energy_residual(&rs, &m, cfg.h))]
        })
        .collect();
    out.write_csv("trajectory.csv", &["s", "t", "r", "v", "x", "y", "xp", "yp", "energy_residual"], &rows)?;
    if tr.termination != Termination::TerminalEvent(0) {
        return Err(Error::Integration(tr.termination).into());
    }
    Ok(())
}

const SYZ_HEADER: [&str; 12] = ["x0", "y0", "angle", "r", "s0", "t0", "type", "collision", "pair", "near_triple", "z_monotone", "max_idot"];

fn syz_row(x0: f64, y0: f64, r: &Result<SyzygyRecord, Error>) -> Vec<String> {
    match r {
        Ok(r) => vec![
            num(x0),
            num(y0),
            num(r.angle),
            num(r.r),
            num(r.s0),
            num(r.t0),
            r.syzygy_type.to_string(),
            r.collision.to_string(),
            r.collision_pair.map(|p| format!("{p:?}")).unwrap_or_default(),
            r.near_triple.to_string(),
            r.z_monotone.to_string(),
            num(r.max_idot),
        ],
        Err(e) => {
            let mut v = vec![num(x0), num(y0)];
            v.extend((0..9).map(|_| String::new()));
            v.push(format!("error: {e}"));
            v
        }
    }
}

fn syzygy_map(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ex = cfg.syzygy.exclusion;
    let mut starts = Vec::with_capacity(cfg.syzygy.samples);
    while starts.len() < cfg.syzygy.samples {
        let rho: f64 = rng.gen::<f64>().sqrt();
        let a = rng.gen::<f64>() * std::f64::consts::TAU;
        let (x, y) = (rho * a.cos(), rho * a.sin());
        let near = tribrake::Pair::ALL.iter().any(|p| (x - p.angle().cos()).hypot(y - p.angle().sin()) < ex);
        if rho >= ex && !near {
            starts.push((x, y));
        }
    }
    let opts = syz_opts(cfg);
    let res: Vec<_> = starts.par_iter().map(|&(x, y)| syzygy::first_syzygy(x, y, &m, cfg.h, &opts)).collect();
    let rows: Vec<_> = starts.iter().zip(&res).map(|(&(x, y), r)| syz_row(x, y, r)).collect();
    out.write_csv("syzygy_map.csv", &SYZ_HEADER, &rows)?;
    Ok(())
}

fn image_scan(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let grid = syzygy::latlon_grid(cfg.grid.n_lat, cfg.grid.n_lon);
    let opts = syz_opts(cfg);
    let res: Vec<_> = grid.par_iter().map(|&(_, _, x, y)| syzygy::first_syzygy(x, y, &m, cfg.h, &opts)).collect();
    let mut header = vec!["lat", "lon"];
    header.extend(SYZ_HEADER);
    let rows: Vec<_> = grid
        .iter()
        .zip(&res)
        .map(|(&(lat, lon, x, y), r)| {
            let mut row = vec![num(lat), num(lon)];
            row.extend(syz_row(x, y, r));
            row
        })
        .collect();
    out.write_csv("image_scan.csv", &header, &rows)?;
    Ok(())
}

fn winding(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let w = &cfg.winding;
    let degree = syzygy::winding_degree(w.radius, w.samples, w.reversed, &m, cfg.h, &syz_opts(cfg))?;
    #[derive(Serialize)]
    struct Out {
        radius: f64,
        samples: usize,
        reversed: bool,
        degree: i32,
    }
    out.write_json("winding.json", &Out { radius: w.radius, samples: w.samples, reversed: w.reversed, degree })?;
    Ok(())
}

fn kind_name(k: Kind, s: Sign) -> String {
    let sign = if s == Sign::Plus { "+" } else { "-" };
    match k {
        Kind::Lagrange => format!("L{sign}"),
        Kind::Euler(j) => format!("E{j}{sign}"),
    }
}

fn restpoints(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let set = restpoint::find_restpoints(&m)?;
    let mut rows = Vec::new();
    for p in &set.finite {
        let lin = restpoint::linearize(p, &m, cfg.h)?;
        let eig: Vec<String> = lin.eigenvalues.iter().map(|z| format!("{}{:+e}i", num(z.re), z.im)).collect();
        rows.push(vec![
            kind_name(p.kind, p.sign),
            num(p.x),
            num(p.y),
            num(p.v),
            lin.stable_dim.to_string(),
            lin.unstable_dim.to_string(),
            num(lin.homothety_eigenvalue),
            eig.join(" "),
            lin.unstable_shape_rank.to_string(),
            num(lin.jacobian_fd_error),
            lin.flags.near_degenerate.to_string(),
        ]);
    }
    for (k, v) in set.lagrange_at_infinity.iter().enumerate() {
        let name = if k == 0 { "L'+" } else { "L'-" };
        rows.push(vec![name.into(), "inf".into(), "inf".into(), num(*v), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]);
    }
    out.write_csv(
        "restpoints.csv",
        &["name", "x", "y", "v", "stable_dim", "unstable_dim", "homothety_eigenvalue", "eigenvalues", "unstable_shape_rank", "jacobian_fd_error", "near_degenerate"],
        &rows,
    )?;
    Ok(())
}

fn spiral_name(s: Spiral) -> &'static str {
    match s {
        Spiral::Spiraling => "spiraling",
        Spiral::NonSpiraling => "non-spiraling",
        Spiral::Indeterminate => "indeterminate",
    }
}

fn spiraling_scan(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let grid = restpoint::simplex_grid(cfg.spiral.simplex_n);
    let res: Vec<_> = grid
        .par_iter()
        .map(|mm| MassParams::new(mm[0], mm[1], mm[2]).and_then(|m| restpoint::spiraling_test(&m, cfg.h)))
        .collect();
    let mut rows = Vec::new();
    for (mm, r) in grid.iter().zip(res) {
        let mut row = vec![num(mm[0]), num(mm[1]), num(mm[2])];
        match r {
            Ok(rep) => row.extend(rep.spiral.iter().map(|s| spiral_name(*s).to_string())),
            Err(e) => row.extend((0..3).map(|_| format!("error: {e}"))),
        }
        rows.push(row);
    }
    out.write_csv("spiraling_scan.csv", &["m1", "m2", "m3", "E1", "E2", "E3"], &rows)?;
    Ok(())
}

fn branch_opts(cfg: &RunConfig) -> BranchOptions {
    BranchOptions { tol: ode(cfg), ..Default::default() }
}

fn iso_branches(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m3 = cfg.iso.m3;
    let opts = branch_opts(cfg);
    let g = isosceles::trace_branch(Branch::Gamma, m3, &opts)?;
    let gp = isosceles::trace_branch(Branch::GammaPrime, m3, &opts)?;
    let mut rows = Vec::new();
    for (name, t) in [("gamma", &g), ("gamma_prime", &gp)] {
        for (th, v) in &t.samples {
            rows.push(vec![name.to_string(), num(*th), num(*v)]);
        }
    }
    out.write_csv("iso_branches.csv", &["branch", "theta", "v"], &rows)?;
    #[derive(Serialize)]
    struct Out {
        m3: f64,
        theta_star: f64,
        v_star: f64,
        v_minus_3pi_4: Option<f64>,
        v1: Option<f64>,
        v2: Option<f64>,
        v3: Option<f64>,
        gamma_terminated_at: Option<f64>,
        gamma_prime_terminated_at: Option<f64>,
    }
    out.write_json(
        "iso_branches.json",
        &Out {
            m3,
            theta_star: isosceles::theta_star(m3)?,
            v_star: isosceles::v_star(m3)?,
            v_minus_3pi_4: g.v_3pi4,
            v1: g.v1,
            v2: g.v2,
            v3: gp.v3,
            gamma_terminated_at: g.terminated_at,
            gamma_prime_terminated_at: gp.terminated_at,
        },
    )?;
    Ok(())
}

fn iso_admissible(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let opts = branch_opts(cfg);
    let a = isosceles::admissible(cfg.iso.m3, &opts)?;
    let threshold = match cfg.iso.threshold_bracket {
        Some([lo, hi]) => Some(isosceles::admissibility_threshold(lo, hi, cfg.iso.threshold_tol, &opts)?),
        None => None,
    };
    #[derive(Serialize)]
    struct Out {
        m3: f64,
        admissible: bool,
        v1: Option<f64>,
        v2: Option<f64>,
        v3: Option<f64>,
        reason: Option<&'static str>,
        threshold: Option<f64>,
    }
    out.write_json("iso_admissible.json", &Out { m3: a.m3, admissible: a.admissible, v1: a.v1, v2: a.v2, v3: a.v3, reason: a.reason, threshold })?;
    Ok(())
}

fn iso_periodic(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m3 = cfg.iso.m3;
    let opts = ShotOptions { tol: Options::with_tol(cfg.tolerances.rtol.min(1e-12), cfg.tolerances.atol.min(1e-14)), ..Default::default() };
    let scan = isosceles::shooting_scan(m3, cfg.iso.scan_n, &opts)?;
    let scan_rows: Vec<Vec<String>> = scan
        .iter()
        .map(|s| match &s.outcome {
            Ok(ShotOutcome::Reached { v, s: t, v_half }) => vec![num(s.theta0), "reached".into(), num(*v), num(*t), opt(*v_half)],
            Ok(ShotOutcome::TurnedBack { theta }) => vec![num(s.theta0), "turned_back".into(), String::new(), String::new(), num(*theta)],
            Err(e) => vec![num(s.theta0), format!("error: {e}"), String::new(), String::new(), String::new()],
        })
        .collect();
    out.write_csv("iso_shooting_scan.csv", &["theta0", "outcome", "v_at_0", "s_at_0", "v_half_or_theta"], &scan_rows)?;
    let orb = isosceles::periodic_from_scan(m3, &scan, 1e-10, &opts)?;
    let full = isosceles::assemble_period(&orb.quarter);
    let rows: Vec<Vec<String>> = full.iter().map(|(s, y)| vec![num(*s), num(y[0]), num(y[1]), num(y[2]), num(y[3])]).collect();
    out.write_csv("iso_periodic_orbit.csv", &["s", "r", "v", "theta", "w"], &rows)?;
    #[derive(Serialize)]
    struct Out {
        m3: f64,
        theta0: f64,
        r0: f64,
        t2: f64,
        v_half: f64,
        v_end: f64,
        closure_error: f64,
        brackets: Vec<(f64, f64)>,
        roots: Vec<f64>,
    }
    out.write_json(
        "iso_periodic.json",
        &Out { m3, theta0: orb.theta0, r0: orb.r0, t2: orb.t2, v_half: orb.v_half, v_end: orb.v_end, closure_error: orb.closure_error, brackets: orb.brackets, roots: orb.roots },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct JmSummary {
    action: f64,
    grad_norm: f64,
    converged: bool,
    iterations: usize,
    interior_inside: bool,
    end_multiplier: Option<f64>,
    max_energy_residual: f64,
}

fn jm_summary(r: &JmResult) -> JmSummary {
    let res = &r.reconstruction.energy_residual;
    let n = res.len();
    // skip a tenth of the nodes at each end
    let k = n / 10;
    let max_energy_residual = res[k.min(n)..n.saturating_sub(k)].iter().filter(|v| v.is_finite()).fold(0.0, |a: f64, v| a.max(*v));
    JmSummary {
        action: r.action,
        grad_norm: r.grad_norm,
        converged: r.converged,
        iterations: r.iterations,
        interior_inside: r.interior_inside,
        end_multiplier: r.multipliers.first().copied(),
        max_energy_residual,
    }
}

fn jm_minimize(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let p = &cfg.jm;
    let opts = JmOptions { grad_tol: p.grad_tol, multistarts: p.multistarts, seed: cfg.seed, ..Default::default() };
    let q0 = ShapePoint::new(p.start[0], p.start[1], p.start[2]);
    let ms = match p.end {
        Some([r, x, y]) => jm::minimize_fixed(&q0, &ShapePoint::new(r, x, y), p.nodes, &m, cfg.h, &opts)?,
        None => jm::minimize_to_boundary(&q0, p.nodes, &m, cfg.h, &opts)?,
    };
    let rows: Vec<Vec<String>> = ms
        .best
        .path
        .nodes
        .iter()
        .enumerate()
        .map(|(i, q)| vec![i.to_string(), num(q.r), num(q.x), num(q.y), num(ms.best.reconstruction.t[i])])
        .collect();
    out.write_csv("jm_path.csv", &["node", "r", "x", "y", "t"], &rows)?;
    #[derive(Serialize)]
    struct Out {
        best: JmSummary,
        minima: Vec<JmSummary>,
    }
    out.write_json("jm_result.json", &Out { best: jm_summary(&ms.best), minima: ms.minima.iter().map(jm_summary).collect() })?;
    Ok(())
}

fn seifert(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let m = masses(cfg)?;
    let s = &cfg.seifert;
    let rep = jm::seifert_scaling_probe(s.shape[0], s.shape[1], &m, cfg.h, s.t0, s.levels)?;
    #[derive(Serialize)]
    struct Out {
        times: Vec<f64>,
        actions: Vec<f64>,
        exponents: Vec<f64>,
        exponent: f64,
        ratio: f64,
    }
    out.write_json("seifert.json", &Out { times: rep.times, actions: rep.actions, exponents: rep.exponents, exponent: rep.exponent, ratio: rep.ratio })?;
    Ok(())
}

fn verify_all(out: &mut Output) -> Result<(), CliError> {
    let results = acceptance::run_all(|c| println!("{}", c.line()));
    out.write_json("acceptance.json", &results)?;
    if acceptance::suite_passed(&results) {
        Ok(())
    } else {
        Err(CliError::Acceptance(results.iter().filter(|c| !c.passed && !c.known_failure).map(|c| c.id).collect()))
    }
}
