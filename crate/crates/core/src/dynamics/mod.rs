//! Mean-field best-response dynamics and its finite-population counterpart.
//!
//! At rate `gamma` every host revisits its decision. A host without a
//! firewall buys one when `G_E > G_N`; an owner enables it when
//! `G_E' > G_N` and disables it when `G_E' < G_N`. Exactly at indifference a
//! host keeps its current state.

mod agents;
mod ode;

pub use agents::{meanfield_deviation, simulate_agents, AgentPopulation, AgentState, DeviationStats};
pub use ode::{integrate, integrate_with, DEFAULT_STEP_GAMMA};

use crate::equilibrium::{EquilibriumReport, Region};
use crate::model::{AdoptionState, ModelParams};

/// One sampled point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: f64,
    pub x: f64,
    pub region: Region,
}

/// Which threshold a trajectory reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    Purchase,
    Enable,
    /// Both gaps vanish at the same level (zero purchase fee).
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent {
    pub t: f64,
    pub level: f64,
    pub kind: ThresholdKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<BoundaryEvent>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Value of the mean-field vector field at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub dy: f64,
    pub dx: f64,
    pub region: Region,
}

/// Per-host decisions at adoption level `x` under the retain-at-indifference rule.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Decisions {
    buy: bool,
    /// +1 owners enable, -1 owners disable, 0 owners keep their state.
    enable: f64,
}

impl Decisions {
    fn field(&self, gamma: f64, y: f64, x: f64) -> (f64, f64) {
        let buying = if self.buy { gamma * y } else { 0.0 };
        let owners = if self.enable > 0.0 {
            gamma * (1.0 - x - y)
        } else if self.enable < 0.0 {
            -gamma * x
        } else {
            0.0
        };
        // adding 0.0 turns a negative zero into +0 for stable output
        (0.0 - buying, buying + owners + 0.0)
    }
}

fn decisions_at(report: &EquilibriumReport, x: f64) -> Decisions {
    Decisions {
        buy: report.buy.sign_at(x) > 0.0,
        enable: report.enable.sign_at(x),
    }
}

/// Decisions in effect while the state sits at `x`. On a threshold the
/// at-indifference field is used unless it would immediately be pushed back
/// by the field on the side it points to, in which case the state holds.
fn effective_decisions(report: &EquilibriumReport, gamma: f64, y: f64, x: f64) -> Decisions {
    let at = decisions_at(report, x);
    if report.region(x) != Region::Boundary {
        return at;
    }
    let (_, dx) = at.field(gamma, y, x);
    if dx == 0.0 {
        return at;
    }
    let beyond = if dx > 0.0 {
        Decisions {
            buy: report.buy.sign_above(x) > 0.0,
            enable: report.enable.sign_above(x),
        }
    } else {
        Decisions {
            buy: report.buy.sign_below(x) > 0.0,
            enable: report.enable.sign_below(x),
        }
    };
    let (_, dx_beyond) = beyond.field(gamma, y, x);
    if dx_beyond * dx < 0.0 {
        Decisions {
            buy: false,
            enable: 0.0,
        }
    } else {
        at
    }
}

/// Mean-field field `(dy/dt, dx/dt)` at `state`, with the region label.
pub fn vector_field(state: &AdoptionState, params: &ModelParams, report: &EquilibriumReport) -> FieldValue {
    let (y, x) = (state.unpurchased(), state.enabled());
    let gamma = params.update_rate();
    let (dy, dx) = effective_decisions(report, gamma, y, x).field(gamma, y, x);
    FieldValue {
        dy,
        dx,
        region: report.region(x),
    }
}
