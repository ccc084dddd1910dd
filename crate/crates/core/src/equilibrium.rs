//! Purchase and enabling thresholds, the equilibrium reached from a given
//! start, and sensitivities of the unseeded equilibrium.
//!
//! The solver never assumes that the adoption gap is monotone. Both gaps are
//! scanned on a uniform grid, every sign change is bisected, and the regions
//! of the best-response dynamics are read off from the sign pattern between
//! consecutive roots.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{self, AdoptionState, ModelParams};
use crate::numeric::{scan_roots, RootScan};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SCAN_CELLS: usize = 1024;
pub const DEFAULT_PI1_DELTA: f64 = 1e-4;
/// Relative step for the discount-factor sensitivity.
pub const DEFAULT_R_DELTA_FRACTION: f64 = 1e-4;

/// Re-solves inside finite differences use at least this precision so that
/// the quotient is not dominated by bisection noise.
const SENSITIVITY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target width of the final bisection bracket, in units of `x`.
    pub tol: f64,
    /// Number of cells of the initial uniform scan of `[0, 1]`.
    pub scan_cells: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            scan_cells: DEFAULT_SCAN_CELLS,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid("tol", format!("{} must be > 0", self.tol)));
        }
        if self.scan_cells < 1 {
            return Err(Error::invalid("scan_cells", "must be >= 1"));
        }
        Ok(())
    }

    fn tightened(&self) -> Self {
        SolverOptions {
            tol: self.tol.min(SENSITIVITY_TOL),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    /// The gap is positive on all of `[0, 1]`.
    FullAdoption,
    /// The gap is never positive on `[0, 1]`.
    ZeroAdoption,
    /// Exactly one sign change.
    Interior,
    /// More than one sign change.
    MultiRoot,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::FullAdoption => "full-adoption",
            Classification::ZeroAdoption => "zero-adoption",
            Classification::Interior => "interior",
            Classification::MultiRoot => "multi-root",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Roots of one utility gap on `[0, 1]` together with its sign pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    /// Smallest sign-change root, if any.
    pub value: Option<f64>,
    pub classification: Classification,
    /// All sign-change roots in increasing order.
    pub roots: Vec<f64>,
    initial_sign: f64,
}

impl Threshold {
    fn from_scan(scan: RootScan) -> Self {
        let classification = match scan.roots.len() {
            0 if scan.initial_sign > 0.0 => Classification::FullAdoption,
            0 => Classification::ZeroAdoption,
            1 => Classification::Interior,
            _ => Classification::MultiRoot,
        };
        Threshold {
            value: scan.roots.first().copied(),
            classification,
            roots: scan.roots,
            initial_sign: scan.initial_sign,
        }
    }

    fn sign_with_crossings(&self, crossings: usize) -> f64 {
        if crossings.is_multiple_of(2) {
            self.initial_sign
        } else {
            -self.initial_sign
        }
    }

    /// Sign of the gap on the open interval just above `x`.
    pub fn sign_above(&self, x: f64) -> f64 {
        self.sign_with_crossings(self.roots.iter().filter(|&&r| r <= x).count())
    }

    /// Sign of the gap on the open interval just below `x`.
    pub fn sign_below(&self, x: f64) -> f64 {
        self.sign_with_crossings(self.roots.iter().filter(|&&r| r < x).count())
    }

    /// Sign of the gap at `x`; zero exactly on a root.
    pub fn sign_at(&self, x: f64) -> f64 {
        if self.is_root(x) {
            0.0
        } else {
            self.sign_above(x)
        }
    }

    pub fn is_root(&self, x: f64) -> bool {
        self.roots.contains(&x)
    }

    fn next_root_above(&self, x: f64) -> Option<f64> {
        self.roots.iter().copied().find(|&r| r > x)
    }

    fn last_root_at_or_below(&self, x: f64) -> Option<f64> {
        self.roots.iter().rev().copied().find(|&r| r <= x)
    }
}

/// `zeta`: where buying (`G_E`) and abstaining (`G_N`) are indifferent.
pub fn threshold_zeta(params: &ModelParams, opts: &SolverOptions) -> Result<Threshold> {
    opts.validate()?;
    Ok(Threshold::from_scan(scan_roots(
        |x| model::gap_at(params, x),
        opts.scan_cells,
        opts.tol,
    )))
}

/// `zeta'`: where enabling an owned firewall (`G_E'`) and abstaining are indifferent.
pub fn threshold_zeta_prime(params: &ModelParams, opts: &SolverOptions) -> Result<Threshold> {
    opts.validate()?;
    Ok(Threshold::from_scan(scan_roots(
        |x| model::enable_gap_at(params, x),
        opts.scan_cells,
        opts.tol,
    )))
}

/// True when `D(x) < 0` at every point of the scan grid.
pub fn gap_is_monotone(params: &ModelParams, cells: usize) -> bool {
    (0..=cells).all(|i| model::gap_slope_at(params, i as f64 / cells as f64) < 0.0)
}

/// Best-response region of the mean-field dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Region 1: non-owners buy, owners enable.
    Adopting,
    /// Region 2: nobody buys, owners enable.
    Holding,
    /// Region 3: nobody buys, owners disable.
    Disabling,
    /// Exactly on a threshold.
    Boundary,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Adopting => "1",
            Region::Holding => "2",
            Region::Disabling => "3",
            Region::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn region_from_signs(buy: f64, enable: f64) -> Region {
    if buy > 0.0 {
        Region::Adopting
    } else if enable < 0.0 {
        Region::Disabling
    } else {
        Region::Holding
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub zeta: Option<f64>,
    pub zeta_prime: Option<f64>,
    /// Classification of the purchase gap `G_E - G_N`.
    pub classification: Classification,
    pub gap_monotone: bool,
    /// All sign-change roots of the purchase gap.
    pub roots: Vec<f64>,
    /// Purchase-gap threshold data.
    pub buy: Threshold,
    /// Enabling-gap threshold data.
    pub enable: Threshold,
}

/// Computes both thresholds and the monotonicity flag.
pub fn analyze(params: &ModelParams, opts: &SolverOptions) -> Result<EquilibriumReport> {
    let buy = threshold_zeta(params, opts)?;
    let enable = threshold_zeta_prime(params, opts)?;
    Ok(EquilibriumReport {
        zeta: buy.value,
        zeta_prime: enable.value,
        classification: buy.classification,
        gap_monotone: gap_is_monotone(params, opts.scan_cells),
        roots: buy.roots.clone(),
        buy,
        enable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub y_star: f64,
    pub x_star: f64,
}

impl EquilibriumPoint {
    pub fn as_state(&self) -> AdoptionState {
        // Points produced by the walk below stay inside the simplex.
        AdoptionState::new(self.y_star, self.x_star).expect("equilibrium inside the simplex")
    }
}

impl EquilibriumReport {
    /// Region containing adoption level `x`; `Boundary` exactly on a threshold.
    pub fn region(&self, x: f64) -> Region {
        if self.buy.is_root(x) || self.enable.is_root(x) {
            Region::Boundary
        } else {
            region_from_signs(self.buy.sign_above(x), self.enable.sign_above(x))
        }
    }

    /// Region entered when `x` increases through `x`.
    fn region_above(&self, x: f64) -> Region {
        region_from_signs(self.buy.sign_above(x), self.enable.sign_above(x))
    }

    /// Follows the piecewise flows from `start` to the equilibrium they settle
    /// in. Each step moves to the next threshold in the direction of motion,
    /// so the walk terminates after at most one step per root.
    pub fn equilibrium_from(&self, start: &AdoptionState) -> EquilibriumPoint {
        let mut y = start.unpurchased();
        let mut x = start.enabled();
        let buy_now = self.buy.sign_at(x);
        let enable_now = self.enable.sign_at(x);
        if enable_now == 0.0 && buy_now <= 0.0 {
            // Owners are indifferent and keep their state; nobody buys.
            return EquilibriumPoint {
                y_star: y,
                x_star: x,
            };
        }
        let mut region = region_from_signs(buy_now, enable_now);
        let max_steps = 2 * (self.buy.roots.len() + self.enable.roots.len()) + 4;
        for _ in 0..max_steps {
            match region {
                Region::Adopting => match self.buy.next_root_above(x) {
                    // y decays and x rises to 1 without ever crossing a threshold.
                    None => {
                        return EquilibriumPoint {
                            y_star: 0.0,
                            x_star: 1.0,
                        }
                    }
                    Some(r) => {
                        // y(t) = y0 e^{-gamma t}, 1 - x(t) = (1 - x0) e^{-gamma t}
                        y *= (1.0 - r) / (1.0 - x);
                        x = r;
                        region = self.region_above(x);
                    }
                },
                Region::Holding => {
                    let cap = 1.0 - y;
                    if x >= cap {
                        return EquilibriumPoint {
                            y_star: y,
                            x_star: x,
                        };
                    }
                    let stop = self.enable.next_root_above(x).unwrap_or(f64::INFINITY);
                    let resume = self.buy.next_root_above(x).unwrap_or(f64::INFINITY);
                    if cap <= stop && cap <= resume {
                        return EquilibriumPoint {
                            y_star: y,
                            x_star: cap,
                        };
                    }
                    if stop <= resume {
                        return EquilibriumPoint {
                            y_star: y,
                            x_star: stop,
                        };
                    }
                    x = resume;
                    region = self.region_above(x);
                }
                Region::Disabling => {
                    return EquilibriumPoint {
                        y_star: y,
                        x_star: self.enable.last_root_at_or_below(x).unwrap_or(0.0),
                    }
                }
                Region::Boundary => unreachable!("walk regions are never Boundary"),
            }
        }
        EquilibriumPoint {
            y_star: y,
            x_star: x,
        }
    }
}

/// Equilibrium attained from `start` under the best-response dynamics.
pub fn equilibrium_from_initial(
    params: &ModelParams,
    start: &AdoptionState,
    opts: &SolverOptions,
) -> Result<EquilibriumPoint> {
    Ok(analyze(params, opts)?.equilibrium_from(start))
}

/// Equilibrium adoption level from the unseeded start `(1, 0)`.
pub fn unseeded_level(params: &ModelParams, opts: &SolverOptions) -> Result<f64> {
    Ok(equilibrium_from_initial(params, &AdoptionState::unseeded(), opts)?.x_star)
}

fn interior_level(params: &ModelParams, opts: &SolverOptions, what: &str) -> Result<f64> {
    let report = analyze(params, opts)?;
    let x = report.equilibrium_from(&AdoptionState::unseeded()).x_star;
    if report.zeta.is_none() || x <= 0.0 || x >= 1.0 {
        return Err(Error::NotApplicable(format!(
            "no interior equilibrium at {what} (classification {})",
            report.classification
        )));
    }
    Ok(x)
}

/// Finite-difference estimate of `dx*/dPi1` for the unseeded equilibrium.
///
/// Uses a centered difference with step `|delta|` when both neighbours are
/// admissible profiles, otherwise a one-sided difference towards the
/// admissible side. With a coupled profile `pi1` is re-derived at every
/// evaluation point.
pub fn sensitivity_pi1(params: &ModelParams, delta: f64, opts: &SolverOptions) -> Result<f64> {
    opts.validate()?;
    let step = delta.abs();
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("delta", "must be nonzero and finite"));
    }
    let fine = opts.tightened();
    let level = params.profile().attacker_only();
    let shifted = |v: f64| params.with_attacker_only(v).ok();
    let up = shifted(level + step);
    let down = shifted(level - step);
    let eval = |p: &ModelParams, v: f64| interior_level(p, &fine, &format!("Pi1={v}"));
    match (up, down) {
        (Some(u), Some(d)) => Ok((eval(&u, level + step)? - eval(&d, level - step)?) / (2.0 * step)),
        (Some(u), None) => Ok((eval(&u, level + step)? - eval(params, level)?) / step),
        (None, Some(d)) => Ok((eval(params, level)? - eval(&d, level - step)?) / step),
        (None, None) => Err(Error::NotApplicable(format!(
            "no admissible Pi1 within {step} of {level}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64, zero_band: f64) -> Sign {
        if v > zero_band {
            Sign::Positive
        } else if v < -zero_band {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Sign::Negative => "-",
            Sign::Zero => "0",
            Sign::Positive => "+",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `c C1I - c0 (C1I mu + C2I)`, whose sign is the sign of `dx*/dr`.
pub fn discount_effect_predictor(params: &ModelParams) -> f64 {
    let c = params.costs();
    c.usage_cost() * c.intrusion_cost()
        - c.purchase_fee() * c.long_run_intrusion_rate(params.threat())
}

/// Sign of [`discount_effect_predictor`], with a relative zero band for rounding.
pub fn discount_effect_sign(params: &ModelParams) -> Sign {
    let c = params.costs();
    let scale = (c.usage_cost() * c.intrusion_cost())
        .abs()
        .max((c.purchase_fee() * c.long_run_intrusion_rate(params.threat())).abs());
    Sign::of(discount_effect_predictor(params), 1e-12 * scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSensitivity {
    pub estimate: f64,
    pub predicted_sign: Sign,
}

/// Finite-difference estimate of `dx*/dr` and its predicted sign.
pub fn sensitivity_r(
    params: &ModelParams,
    delta: f64,
    opts: &SolverOptions,
) -> Result<DiscountSensitivity> {
    opts.validate()?;
    let step = delta.abs();
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("delta", "must be nonzero and finite"));
    }
    let fine = opts.tightened();
    let r = params.costs().discount();
    let eval = |v: f64| -> Result<f64> {
        interior_level(&params.with_discount(v)?, &fine, &format!("r={v}"))
    };
    let estimate = if r - step > 0.0 {
        (eval(r + step)? - eval(r - step)?) / (2.0 * step)
    } else {
        (eval(r + step)? - eval(r)?) / step
    };
    Ok(DiscountSensitivity {
        estimate,
        predicted_sign: discount_effect_sign(params),
    })
}

/// Thresholds of the `r -> 0` limit gap (long-run average utilities).
pub fn limit_equilibrium(params: &ModelParams, opts: &SolverOptions) -> Result<Threshold> {
    opts.validate()?;
    Ok(Threshold::from_scan(scan_roots(
        |x| model::limit_utilities_at(params, x).gap(),
        opts.scan_cells,
        opts.tol,
    )))
}

/// Unseeded equilibrium level in the `r -> 0` limit, where the purchase fee
/// vanishes and buying and enabling share one threshold.
pub fn limit_unseeded_level(params: &ModelParams, opts: &SolverOptions) -> Result<f64> {
    let t = limit_equilibrium(params, opts)?;
    Ok(limit_level_from(&t))
}

fn limit_level_from(t: &Threshold) -> f64 {
    if t.sign_above(0.0) > 0.0 {
        t.roots
            .iter()
            .copied()
            .find(|&r| t.sign_above(r) < 0.0)
            .unwrap_or(1.0)
    } else {
        0.0
    }
}
