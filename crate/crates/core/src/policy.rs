//! Social and security welfare, the socially optimal adoption level, the
//! price of anarchy, the choice of the attacker-only pass probability under
//! different objectives, and the prices of shortsightedness.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::equilibrium::{analyze, limit_unseeded_level, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{self, check_fraction, AdoptionState, ModelParams};
use crate::numeric::golden_max;

pub use crate::model::coupled_pi1;

pub const DEFAULT_GRID_CELLS: usize = 1024;
pub const DEFAULT_SWEEP_POINTS: usize = 64;

/// Relative band within which two objective values count as tied.
const TIE_BAND: f64 = 1e-9;

pub(crate) fn social_at(params: &ModelParams, x: f64) -> f64 {
    x * model::adopter_at(params, x) + (1.0 - x) * model::nonadopter_at(params, x)
}

pub(crate) fn security_at(params: &ModelParams, x: f64) -> f64 {
    social_at(params, x) + x * params.adoption_cost()
}

/// `U(x) = x G_E(x) + (1 - x) G_N(x)`, the average utility of all hosts.
pub fn social_utility(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(social_at(params, x))
}

/// `V(x) = U(x) + x (c/r + c0)`: average utility with the adoption costs added back,
/// i.e. minus the expected intrusion damage.
pub fn security_utility(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(security_at(params, x))
}

/// Scaled long-run social utility `x gE + (1 - x) gN` of the `r -> 0` limit.
pub fn limit_social_utility(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(limit_social_at(params, x))
}

/// Scaled long-run security utility `x (gE + c) + (1 - x) gN` of the `r -> 0` limit.
pub fn limit_security_utility(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(limit_security_at(params, x))
}

fn limit_social_at(params: &ModelParams, x: f64) -> f64 {
    let l = model::limit_utilities_at(params, x);
    x * l.adopter + (1.0 - x) * l.nonadopter
}

fn limit_security_at(params: &ModelParams, x: f64) -> f64 {
    limit_social_at(params, x) + x * params.costs().usage_cost()
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("tol", format!("{tol} must be > 0")))
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_BAND * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialOptimum {
    pub x_hat: f64,
    pub u_hat: f64,
    /// Another, separate grid point reached the same maximum and the larger
    /// adoption level was chosen.
    pub tie_broken: bool,
}

/// Global maximizer of `U` on `[0, 1]`: best point of a 1024-cell grid,
/// refined by golden-section search on the neighbouring cells.
pub fn social_optimum(params: &ModelParams, tol: f64) -> Result<SocialOptimum> {
    check_tol(tol)?;
    let cells = DEFAULT_GRID_CELLS;
    let values: Vec<f64> = (0..=cells)
        .map(|i| social_at(params, i as f64 / cells as f64))
        .collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v >= values[best] {
            best = i;
        }
    }
    let tie_broken = values
        .iter()
        .enumerate()
        .any(|(i, &v)| i + 1 < best && ties(v, values[best]));

    let lo = best.saturating_sub(1) as f64 / cells as f64;
    let hi = (best + 1).min(cells) as f64 / cells as f64;
    let (xg, ug) = golden_max(|x| social_at(params, x), lo, hi, tol);
    let xb = best as f64 / cells as f64;
    let (x_hat, u_hat) = if ug > values[best] || (ug == values[best] && xg > xb) {
        (xg, ug)
    } else {
        (xb, values[best])
    };
    Ok(SocialOptimum {
        x_hat,
        u_hat,
        tie_broken,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoaReport {
    pub x_star: f64,
    pub x_hat: f64,
    pub u_star: f64,
    pub u_hat: f64,
    /// `U(x_hat) / U(x*)` as a raw ratio; below one when utilities are negative.
    pub poa: f64,
    /// Equal to `poa`: the equilibrium reached from a given start is unique.
    pub pos: f64,
    /// `|1 - poa|`.
    pub inefficiency: f64,
}

/// Price of anarchy for the equilibrium reached from the unseeded start.
pub fn price_of_anarchy(params: &ModelParams, tol: f64) -> Result<PoaReport> {
    check_tol(tol)?;
    let x_star = analyze(params, &SolverOptions::with_tol(tol))?
        .equilibrium_from(&AdoptionState::unseeded())
        .x_star;
    let u_star = social_at(params, x_star);
    if u_star == 0.0 {
        return Err(Error::Degenerate(format!("U(x*) = 0 at x* = {x_star}")));
    }
    let opt = social_optimum(params, tol)?;
    let poa = opt.u_hat / u_star;
    Ok(PoaReport {
        x_star,
        x_hat: opt.x_hat,
        u_star,
        u_hat: opt.u_hat,
        poa,
        pos: poa,
        inefficiency: (1.0 - poa).abs(),
    })
}

/// Objective used to rank attacker-only pass probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    /// Social utility at the equilibrium the choice induces.
    DecSocial,
    /// Adopter utility at the induced equilibrium.
    DecIndividual,
    /// Security utility at the induced equilibrium.
    DecSecurity,
    /// A planner choosing adoption and filtering together.
    Centralized,
}

impl View {
    pub const ALL: [View; 4] = [View::DecSocial, View::DecIndividual, View::DecSecurity, View::Centralized];

    pub fn as_str(&self) -> &'static str {
        match self {
            View::DecSocial => "dec-social",
            View::DecIndividual => "dec-individual",
            View::DecSecurity => "dec-security",
            View::Centralized => "centralized",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        View::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::invalid("view", format!("unknown view `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Attacker-only pass probability.
    pub attacker_only: f64,
    /// Pass probability with both firewalls, re-derived from the coupling.
    pub both: f64,
    pub x_star: f64,
    pub objective: f64,
    /// The induced equilibrium is strictly inside `(0, 1)`.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pi1Choice {
    pub view: View,
    /// Best attacker-only pass probability for the view.
    pub attacker_only: f64,
    pub curve: Vec<CurvePoint>,
}

impl Pi1Choice {
    /// Largest relative spread of the objective over the interior points.
    pub fn interior_spread(&self) -> Option<f64> {
        let vals: Vec<f64> = self.curve.iter().filter(|p| p.interior).map(|p| p.objective).collect();
        let lo = vals.iter().copied().reduce(f64::min)?;
        let hi = vals.iter().copied().reduce(f64::max)?;
        Some((hi - lo) / lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE))
    }
}

fn curve_point(params: &ModelParams, view: View, opts: &SolverOptions, tol: f64) -> Result<CurvePoint> {
    let report = analyze(params, opts)?;
    let x_star = report.equilibrium_from(&AdoptionState::unseeded()).x_star;
    let objective = match view {
        View::DecSocial => social_at(params, x_star),
        View::DecIndividual => model::adopter_at(params, x_star),
        View::DecSecurity => security_at(params, x_star),
        View::Centralized => social_optimum(params, tol)?.u_hat,
    };
    Ok(CurvePoint {
        attacker_only: params.profile().attacker_only(),
        both: params.profile().both(),
        x_star,
        objective,
        interior: report.zeta.is_some() && x_star > 0.0 && x_star < 1.0,
    })
}

/// Sweeps the attacker-only pass probability over `[pi0, Pi0]` on `grid`
/// points, re-deriving the both-firewalls probability from the coupling, and
/// returns the best choice for `view` with the whole objective curve.
///
/// Decentralized views take the numerical argmax, with near-ties resolved
/// towards the larger value. The centralized planner decouples the two
/// decisions and filters outgoing traffic as much as possible, so its choice
/// is `pi0`; its curve holds the social optimum at each candidate.
pub fn optimum_pi1(params: &ModelParams, view: View, grid: usize, tol: f64) -> Result<Pi1Choice> {
    check_tol(tol)?;
    if params.profile().coupling().is_none() {
        return Err(Error::invalid(
            "alpha",
            "the sweep needs the coupling to re-derive the both-firewalls probability",
        ));
    }
    if grid < 16 {
        return Err(Error::invalid("grid", format!("{grid} must be >= 16")));
    }
    let lo = params.profile().target_only();
    let hi = params.profile().neither();
    let opts = SolverOptions::with_tol(tol);
    let curve = (0..grid)
        .into_par_iter()
        .map(|i| {
            let v = if i + 1 == grid {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (grid - 1) as f64
            };
            curve_point(&params.with_attacker_only(v)?, view, &opts, tol)
        })
        .collect::<Result<Vec<_>>>()?;

    let attacker_only = if view == View::Centralized {
        lo
    } else {
        let best = curve.iter().map(|p| p.objective).fold(f64::NEG_INFINITY, f64::max);
        curve
            .iter()
            .rev()
            .find(|p| ties(p.objective, best))
            .map(|p| p.attacker_only)
            .unwrap_or(hi)
    };
    Ok(Pi1Choice {
        view,
        attacker_only,
        curve,
    })
}

struct ShortsightEquilibria {
    discounted: f64,
    limit: f64,
}

fn shortsight_equilibria(params: &ModelParams, tol: f64) -> Result<ShortsightEquilibria> {
    check_tol(tol)?;
    let opts = SolverOptions::with_tol(tol);
    let discounted = analyze(params, &opts)?
        .equilibrium_from(&AdoptionState::unseeded())
        .x_star;
    Ok(ShortsightEquilibria {
        discounted,
        limit: limit_unseeded_level(params, &opts)?,
    })
}

fn ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if den == 0.0 {
        return Err(Error::Degenerate(format!("{what}: zero utility at the discounted equilibrium")));
    }
    Ok(num / den)
}

/// Social price of shortsightedness: limit social utility at the
/// patient-host equilibrium over the same at the `r`-discounted equilibrium.
pub fn soposh(params: &ModelParams, tol: f64) -> Result<f64> {
    let e = shortsight_equilibria(params, tol)?;
    ratio(
        limit_social_at(params, e.limit),
        limit_social_at(params, e.discounted),
        "social price of shortsightedness",
    )
}

/// Security price of shortsightedness, the same ratio for the limit security utility.
pub fn seposh(params: &ModelParams, tol: f64) -> Result<f64> {
    let e = shortsight_equilibria(params, tol)?;
    ratio(
        limit_security_at(params, e.limit),
        limit_security_at(params, e.discounted),
        "security price of shortsightedness",
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReport {
    pub x_star: f64,
    pub x_hat: f64,
    pub u_star: f64,
    pub u_hat: f64,
    pub v_star: f64,
    pub poa: f64,
    pub inefficiency: f64,
    pub soposh: f64,
    pub seposh: f64,
    /// Best attacker-only pass probability per view; present only with a coupled profile.
    pub pi1_views: Option<Vec<Pi1Choice>>,
}

/// Everything the policy layer computes for one parameter set.
pub fn policy_report(params: &ModelParams, grid: usize, tol: f64) -> Result<PolicyReport> {
    let poa = price_of_anarchy(params, tol)?;
    let pi1_views = if params.profile().coupling().is_some() {
        Some(
            View::ALL
                .iter()
                .map(|&v| optimum_pi1(params, v, grid, tol))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(PolicyReport {
        x_star: poa.x_star,
        x_hat: poa.x_hat,
        u_star: poa.u_star,
        u_hat: poa.u_hat,
        v_star: security_at(params, poa.x_star),
        poa: poa.poa,
        inefficiency: poa.inefficiency,
        soposh: soposh(params, tol)?,
        seposh: seposh(params, tol)?,
        pi1_views,
    })
}
