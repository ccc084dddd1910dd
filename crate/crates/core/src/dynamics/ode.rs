//! Fixed-step RK4 integration of the piecewise-linear mean-field ODE.
//!
//! The decisions are frozen over each step. When a step would carry `x`
//! across a threshold the crossing time is located by bisection on the step
//! length, the state is placed on the threshold and integration resumes with
//! the decisions in force there.

use super::{effective_decisions, BoundaryEvent, Decisions, Sample, ThresholdKind, Trajectory};
use crate::equilibrium::{analyze, EquilibriumReport, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{AdoptionState, ModelParams};

/// Default step in units of `1 / gamma`.
pub const DEFAULT_STEP_GAMMA: f64 = 1e-3;

const EVENT_TIME_TOL: f64 = 1e-10;
const CLAMP_SLACK: f64 = 1e-12;

fn rk4(d: &Decisions, gamma: f64, y: f64, x: f64, h: f64) -> (f64, f64) {
    let f = |y: f64, x: f64| d.field(gamma, y, x);
    let (k1y, k1x) = f(y, x);
    let (k2y, k2x) = f(y + 0.5 * h * k1y, x + 0.5 * h * k1x);
    let (k3y, k3x) = f(y + 0.5 * h * k2y, x + 0.5 * h * k2x);
    let (k4y, k4x) = f(y + h * k3y, x + h * k3x);
    (
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
    )
}

fn clamp_to_simplex(y: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    let over = x + y - 1.0;
    if y < -CLAMP_SLACK || x < -CLAMP_SLACK || over > CLAMP_SLACK {
        return Err(Error::Numerical(format!(
            "state (y={y}, x={x}) left the simplex at t={t}"
        )));
    }
    let y = y.max(0.0);
    let mut x = x.max(0.0);
    if x + y > 1.0 {
        x = 1.0 - y;
    }
    Ok((y, x))
}

struct Thresholds {
    levels: Vec<(f64, ThresholdKind)>,
}

impl Thresholds {
    fn new(report: &EquilibriumReport) -> Self {
        let mut levels: Vec<(f64, ThresholdKind)> = report
            .buy
            .roots
            .iter()
            .map(|&r| (r, ThresholdKind::Purchase))
            .collect();
        for &r in &report.enable.roots {
            match levels.iter_mut().find(|(l, _)| *l == r) {
                Some(entry) => entry.1 = ThresholdKind::Both,
                None => levels.push((r, ThresholdKind::Enable)),
            }
        }
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        Thresholds { levels }
    }

    /// First threshold strictly beyond `from` and no further than `to`, in the direction of motion.
    fn crossed(&self, from: f64, to: f64) -> Option<(f64, ThresholdKind)> {
        if to > from {
            self.levels.iter().copied().find(|&(l, _)| l > from && l <= to)
        } else if to < from {
            self.levels.iter().rev().copied().find(|&(l, _)| l < from && l >= to)
        } else {
            None
        }
    }
}

/// Integrates from `start` to `horizon` with the default step `1e-3 / gamma`.
pub fn integrate(params: &ModelParams, start: &AdoptionState, horizon: f64) -> Result<Trajectory> {
    integrate_with(
        params,
        start,
        horizon,
        DEFAULT_STEP_GAMMA / params.update_rate(),
        &SolverOptions::default(),
    )
}

/// Integrates from `start` to `horizon`, sampling every `step` and adding a
/// sample at every threshold crossing.
pub fn integrate_with(
    params: &ModelParams,
    start: &AdoptionState,
    horizon: f64,
    step: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("{horizon} must be > 0")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", format!("{step} must be > 0")));
    }
    let report = analyze(params, opts)?;
    let thresholds = Thresholds::new(&report);
    let gamma = params.update_rate();

    let mut y = start.unpurchased();
    let mut x = start.enabled();
    let mut t = 0.0;
    let mut out = Trajectory::default();
    out.samples.push(Sample {
        t,
        y,
        x,
        region: report.region(x),
    });

    let n_steps = (horizon / step).ceil() as u64;
    for k in 1..=n_steps {
        let t_grid = if k == n_steps { horizon } else { k as f64 * step };
        while t < t_grid {
            let h = t_grid - t;
            let d = effective_decisions(&report, gamma, y, x);
            let (y1, x1) = rk4(&d, gamma, y, x, h);
            match thresholds.crossed(x, x1) {
                None => {
                    (y, x) = clamp_to_simplex(y1, x1, t_grid)?;
                    t = t_grid;
                }
                Some((level, kind)) => {
                    let beyond = |xs: f64| if x1 > x { xs >= level } else { xs <= level };
                    let (mut lo, mut hi) = (0.0, h);
                    while hi - lo > EVENT_TIME_TOL {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if beyond(rk4(&d, gamma, y, x, mid).1) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    let (ye, _) = rk4(&d, gamma, y, x, hi);
                    let te = t + hi;
                    (y, x) = clamp_to_simplex(ye, level, te)?;
                    if te >= t_grid {
                        t = t_grid;
                    } else {
                        t = te;
                        out.samples.push(Sample {
                            t,
                            y,
                            x,
                            region: report.region(x),
                        });
                    }
                    out.events.push(BoundaryEvent { t: te, level, kind });
                }
            }
        }
        out.samples.push(Sample {
            t,
            y,
            x,
            region: report.region(x),
        });
    }
    Ok(out)
}
