use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{load_config, RawParams};
use super::{CliError, Command, Common, SimMode};
use crate::dynamics::{integrate_with, simulate_agents, vector_field, Trajectory, DEFAULT_STEP_GAMMA};
use crate::equilibrium::{
    analyze, discount_effect_sign, limit_equilibrium, limit_unseeded_level, sensitivity_pi1,
    sensitivity_r, SolverOptions, DEFAULT_PI1_DELTA, DEFAULT_R_DELTA_FRACTION,
};
use crate::model::{self, AdoptionState, ModelParams};
use crate::policy::{self, View};

pub(super) fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Eval { common, x } => eval(&common, x, out),
        Command::Equilibrium { common, csv } => equilibrium(&common, csv.as_deref(), out),
        Command::Simulate {
            common,
            mode,
            n,
            horizon,
            step,
            seed,
            y0,
            x0,
            out: path,
        } => {
            let opts = SimOptions {
                mode,
                n,
                horizon,
                step,
                seed,
                start: (y0, x0),
            };
            simulate(&common, &opts, path.as_deref(), out)
        }
        Command::Phase { common, grid, out: path } => phase(&common, grid, path.as_deref(), out),
        Command::Policy { common, grid, csv } => policy_cmd(&common, grid, csv.as_deref(), out),
        Command::Sweep {
            common,
            axis,
            lo,
            hi,
            steps,
            jobs,
            out: path,
        } => sweep(&common, &axis, (lo, hi, steps), jobs, path.as_deref(), out),
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Runs `body` against the file at `path`, or against `out` when no path is given.
fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    match path {
        None => body(out).map_err(stdout_err),
        Some(p) => {
            let io_err = |source| CliError::Io {
                path: p.to_path_buf(),
                source,
            };
            let mut w = BufWriter::new(File::create(p).map_err(io_err)?);
            body(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
    }
}

fn solver_opts(common: &Common) -> Result<SolverOptions, CliError> {
    if !(common.tol.is_finite() && common.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol {} must be > 0", common.tol)));
    }
    Ok(SolverOptions::with_tol(common.tol))
}

/// Formats `v` with `digits` significant digits.
fn significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = digits as i64 - 1 - magnitude;
    if (0..=20).contains(&decimals) {
        format!("{:.*}", decimals as usize, v)
    } else {
        format!("{:.*e}", digits - 1, v)
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn eval(common: &Common, x: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let p = &cfg.params;
    let ctx = || format!("eval at x={x}");
    let rows = [
        ("G_N", model::utility_nonadopter(x, p).map_err(CliError::model(ctx()))?),
        ("G_E", model::utility_adopter(x, p).map_err(CliError::model(ctx()))?),
        ("G_E_prime", model::utility_owner_enabled(x, p).map_err(CliError::model(ctx()))?),
        ("gap", model::adoption_gap(x, p).map_err(CliError::model(ctx()))?),
        ("gap_slope", model::gap_slope(x, p).map_err(CliError::model(ctx()))?),
        (
            "intrusion_probability",
            model::stationary_intrusion_probability(x, p).map_err(CliError::model(ctx()))?,
        ),
    ];
    writeln!(out, "x={x}").map_err(stdout_err)?;
    for (k, v) in rows {
        writeln!(out, "{k}={}", significant(v, 9)).map_err(stdout_err)?;
    }
    Ok(())
}

fn equilibrium(common: &Common, csv: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let p = &cfg.params;
    let opts = solver_opts(common)?;
    let report = analyze(p, &opts).map_err(CliError::model("equilibrium"))?;
    let point = report.equilibrium_from(&AdoptionState::unseeded());
    let limit = limit_equilibrium(p, &opts).map_err(CliError::model("limit equilibrium"))?;
    let limit_x = limit_unseeded_level(p, &opts).map_err(CliError::model("limit equilibrium"))?;

    let mut rows: Vec<(&str, String)> = vec![
        ("zeta", opt_num(report.zeta)),
        ("zeta_prime", opt_num(report.zeta_prime)),
        ("classification", report.classification.to_string()),
        ("roots", list(&report.roots)),
        ("enable_roots", list(&report.enable.roots)),
        ("gap_monotone", report.gap_monotone.to_string()),
        ("x_star", point.x_star.to_string()),
        ("y_star", point.y_star.to_string()),
    ];
    let interior = report.zeta.is_some() && point.x_star > 0.0 && point.x_star < 1.0;
    match sensitivity_pi1(p, DEFAULT_PI1_DELTA, &opts) {
        Ok(s) => rows.push(("dx_star_dPi1", s.to_string())),
        Err(e) => rows.push(("dx_star_dPi1", format!("n/a ({e})"))),
    }
    let pi1_sign = if interior && report.gap_monotone { "+" } else { "n/a" };
    rows.push(("predicted_sign_dPi1", pi1_sign.to_string()));
    let r = p.costs().discount();
    match sensitivity_r(p, DEFAULT_R_DELTA_FRACTION * r, &opts) {
        Ok(s) => rows.push(("dx_star_dr", s.estimate.to_string())),
        Err(e) => rows.push(("dx_star_dr", format!("n/a ({e})"))),
    }
    rows.push(("predicted_sign_dr", discount_effect_sign(p).to_string()));
    rows.push(("limit_classification", limit.classification.to_string()));
    rows.push(("limit_roots", list(&limit.roots)));
    rows.push(("limit_x_star", limit_x.to_string()));

    for (k, v) in &rows {
        writeln!(out, "{k}={v}").map_err(stdout_err)?;
    }
    if let Some(path) = csv {
        with_output(Some(path), out, |w| {
            writeln!(w, "quantity,value")?;
            for (k, v) in &rows {
                writeln!(w, "{k},{v}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

struct SimOptions {
    mode: SimMode,
    n: Option<usize>,
    horizon: f64,
    step: Option<f64>,
    seed: Option<u64>,
    start: (f64, f64),
}

fn write_trajectory(w: &mut dyn Write, tr: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "t,y,x,region")?;
    for s in &tr.samples {
        writeln!(w, "{},{},{},{}", s.t, s.y, s.x, s.region)?;
    }
    Ok(())
}

fn simulate(
    common: &Common,
    sim: &SimOptions,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let p = &cfg.params;
    let opts = solver_opts(common)?;
    let start = AdoptionState::new(sim.start.0, sim.start.1).map_err(CliError::model("start state"))?;
    let tr = match sim.mode {
        SimMode::Ode => {
            let step = sim.step.unwrap_or(DEFAULT_STEP_GAMMA / p.update_rate());
            integrate_with(p, &start, sim.horizon, step, &opts).map_err(CliError::model("integration"))?
        }
        SimMode::Agents => {
            let n = sim
                .n
                .ok_or_else(|| CliError::Usage("--n is required in agents mode".into()))?;
            let seed = sim
                .seed
                .ok_or_else(|| CliError::Usage("--seed is required in agents mode".into()))?;
            simulate_agents(p, n, &start, sim.horizon, seed)
                .map_err(CliError::model("agent simulation"))?
                .0
        }
    };
    with_output(path, out, |w| write_trajectory(w, &tr))
}

fn phase(common: &Common, grid: usize, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Usage(format!("--grid {grid} must be >= 2")));
    }
    let cfg = load_config(&common.config)?;
    let p = &cfg.params;
    let report = analyze(p, &solver_opts(common)?).map_err(CliError::model("equilibrium"))?;
    let last = (grid - 1) as f64;
    let mut rows = Vec::new();
    for i in 0..grid {
        for j in 0..grid - i {
            let x = i as f64 / last;
            let y = j as f64 / last;
            // Lattice points with i + j = grid - 1 can round just past the edge.
            let y = y.min(1.0 - x);
            let state = AdoptionState::new(y, x).map_err(CliError::model("phase lattice"))?;
            let v = vector_field(&state, p, &report);
            rows.push((x, y, v.dx, v.dy, v.region.label()));
        }
    }
    // Equilibrium set: the stretch (zeta, zeta'] of the edge x + y = 1 and
    // the vertical segment x = zeta', y in [0, 1 - zeta'].
    if let (Some(z), Some(zp)) = (report.zeta, report.zeta_prime) {
        let mut flag = |x: f64, y: f64| -> Result<(), CliError> {
            let state = AdoptionState::new(y, x).map_err(CliError::model("equilibrium set"))?;
            let v = vector_field(&state, p, &report);
            rows.push((x, y, v.dx, v.dy, "equilibrium"));
            Ok(())
        };
        for k in 1..grid {
            let x = z + (zp - z) * k as f64 / last;
            flag(x, 1.0 - x)?;
        }
        for k in 0..grid - 1 {
            flag(zp, (1.0 - zp) * k as f64 / last)?;
        }
    }
    with_output(path, out, |w| {
        writeln!(w, "x,y,dx,dy,region")?;
        for (x, y, dx, dy, region) in &rows {
            writeln!(w, "{x},{y},{dx},{dy},{region}")?;
        }
        Ok(())
    })
}

fn policy_cmd(common: &Common, grid: usize, csv: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let p = &cfg.params;
    let tol = solver_opts(common)?.tol;
    let poa = policy::price_of_anarchy(p, tol).map_err(CliError::model("poa"))?;
    let soposh = policy::soposh(p, tol).map_err(CliError::model("soposh"))?;
    let seposh = policy::seposh(p, tol).map_err(CliError::model("seposh"))?;
    let v_star = policy::security_utility(poa.x_star, p).map_err(CliError::model("V_star"))?;
    let v_hat = policy::security_utility(poa.x_hat, p).map_err(CliError::model("V_hat"))?;
    let rows = [
        ("x_star", poa.x_star),
        ("x_hat", poa.x_hat),
        ("U_star", poa.u_star),
        ("U_hat", poa.u_hat),
        ("V_star", v_star),
        ("V_hat", v_hat),
        ("poa", poa.poa),
        ("pos", poa.pos),
        ("inefficiency", poa.inefficiency),
        ("soposh", soposh),
        ("seposh", seposh),
    ];
    for (k, v) in rows {
        writeln!(out, "{k}={v}").map_err(stdout_err)?;
    }
    if p.profile().coupling().is_none() {
        writeln!(out, "optimum_Pi1=n/a (needs alpha)").map_err(stdout_err)?;
        if csv.is_some() {
            return Err(CliError::Usage("--csv needs alpha in the configuration".into()));
        }
        return Ok(());
    }
    let choices = View::ALL
        .iter()
        .map(|&v| policy::optimum_pi1(p, v, grid, tol).map_err(CliError::model(format!("optimum Pi1 ({v})"))))
        .collect::<Result<Vec<_>, _>>()?;
    for c in &choices {
        writeln!(out, "optimum_Pi1[{}]={}", c.view, c.attacker_only).map_err(stdout_err)?;
    }
    if let Some(path) = csv {
        with_output(Some(path), out, |w| {
            writeln!(w, "view,Pi1,pi1,x_star,objective,interior")?;
            for c in &choices {
                for pt in &c.curve {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        c.view, pt.attacker_only, pt.both, pt.x_star, pt.objective, pt.interior
                    )?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Debug, Default)]
struct SweepRow {
    zeta: Option<f64>,
    zeta_prime: Option<f64>,
    x_star: Option<f64>,
    u_star: Option<f64>,
    v_star: Option<f64>,
    x_hat: Option<f64>,
    poa: Option<f64>,
    soposh: Option<f64>,
    seposh: Option<f64>,
}

fn sweep_point(p: &ModelParams, tol: f64) -> SweepRow {
    let mut row = SweepRow::default();
    if let Ok(report) = analyze(p, &SolverOptions::with_tol(tol)) {
        let x = report.equilibrium_from(&AdoptionState::unseeded()).x_star;
        row.zeta = report.zeta;
        row.zeta_prime = report.zeta_prime;
        row.x_star = Some(x);
        row.u_star = policy::social_utility(x, p).ok();
        row.v_star = policy::security_utility(x, p).ok();
    }
    if let Ok(poa) = policy::price_of_anarchy(p, tol) {
        row.x_hat = Some(poa.x_hat);
        row.poa = Some(poa.poa);
    }
    row.soposh = policy::soposh(p, tol).ok();
    row.seposh = policy::seposh(p, tol).ok();
    row
}

fn sweep(
    common: &Common,
    axis: &str,
    (lo, hi, steps): (f64, f64, usize),
    jobs: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let tol = solver_opts(common)?.tol;
    if steps == 0 {
        return Err(CliError::Usage("--steps must be >= 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Usage("--lo and --hi must be finite".into()));
    }
    // Validate the axis name up front so a typo fails before any work.
    cfg.raw.clone().set(axis, lo)?;
    let values: Vec<f64> = (0..steps)
        .map(|i| match (i, steps) {
            (0, _) => lo,
            (i, s) if i + 1 == s => hi,
            (i, s) => lo + (hi - lo) * i as f64 / (s - 1) as f64,
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("--jobs {jobs}: {e}")))?;
    let base: RawParams = cfg.raw;
    let rows: Vec<(f64, SweepRow)> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let mut raw = base;
                let row = match raw.set(axis, v).ok().and_then(|_| raw.build().ok()) {
                    Some(p) => sweep_point(&p, tol),
                    None => SweepRow::default(),
                };
                (v, row)
            })
            .collect()
    });
    with_output(path, out, |w| {
        writeln!(w, "value,zeta,zeta_prime,x_star,U_star,V_star,x_hat,poa,soposh,seposh")?;
        for (v, r) in &rows {
            writeln!(
                w,
                "{v},{},{},{},{},{},{},{},{},{}",
                opt_num(r.zeta),
                opt_num(r.zeta_prime),
                opt_num(r.x_star),
                opt_num(r.u_star),
                opt_num(r.v_star),
                opt_num(r.x_hat),
                opt_num(r.poa),
                opt_num(r.soposh),
                opt_num(r.seposh)
            )?;
        }
        Ok(())
    })
}
