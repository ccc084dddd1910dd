//! Validated parameter types. Every constructor checks its invariants and
//! rejects violations; nothing is silently repaired.

use crate::error::{Error, Result};

/// Slack allowed on the non-cooperation inequality so that coupled profiles
/// computed in floating point are not rejected by rounding.
const PROFILE_SLACK: f64 = 1e-12;

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{value} is not a probability in [0, 1]")))
    }
}

fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{value} must be finite and >= 0")))
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{value} must be finite and > 0")))
    }
}

/// Outgoing-protection coupling: `pi0*Pi1 + alpha*(pi0 - pi0*Pi1)`.
///
/// `alpha = 0` gives independent blocking outcomes, `alpha = 1` the mutually
/// inclusive case where `pi1 = pi0`.
pub fn coupled_pi1(target_only: f64, attacker_only: f64, alpha: f64) -> Result<f64> {
    check_probability("pi0", target_only)?;
    check_probability("Pi1", attacker_only)?;
    check_probability("alpha", alpha)?;
    let independent = target_only * attacker_only;
    // alpha = 1 can round one ulp above pi0
    Ok((independent + alpha * (target_only - independent)).min(target_only))
}

/// Success probabilities of an intrusion attempt, indexed by which of the
/// attacker's and target's ISPs have an enabled firewall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirewallProfile {
    target_only: f64,
    both: f64,
    neither: f64,
    attacker_only: f64,
    coupling: Option<f64>,
}

impl FirewallProfile {
    /// Builds a profile from all four probabilities.
    ///
    /// Arguments are `pi0` (only target protected), `pi1` (both protected),
    /// `Pi0` (neither protected) and `Pi1` (only attacker protected).
    pub fn new(target_only: f64, both: f64, neither: f64, attacker_only: f64) -> Result<Self> {
        let profile = FirewallProfile {
            target_only,
            both,
            neither,
            attacker_only,
            coupling: None,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Builds a profile whose both-protected probability follows from the coupling `alpha`.
    pub fn coupled(target_only: f64, neither: f64, attacker_only: f64, alpha: f64) -> Result<Self> {
        let both = coupled_pi1(target_only, attacker_only, alpha)?;
        let profile = FirewallProfile {
            target_only,
            both,
            neither,
            attacker_only,
            coupling: Some(alpha),
        };
        profile.validate()?;
        Ok(profile)
    }

    fn validate(&self) -> Result<()> {
        check_probability("pi0", self.target_only)?;
        check_probability("pi1", self.both)?;
        check_probability("Pi0", self.neither)?;
        check_probability("Pi1", self.attacker_only)?;
        if let Some(alpha) = self.coupling {
            check_probability("alpha", alpha)?;
        }
        let ordering = |name: &'static str, lo: (&str, f64), hi: (&str, f64)| -> Result<()> {
            if lo.1 <= hi.1 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!(
                        "success-probability ordering 0 <= pi1 <= pi0 <= Pi1 <= Pi0 <= 1 violated ({}={} > {}={})",
                        lo.0, lo.1, hi.0, hi.1
                    ),
                ))
            }
        };
        ordering("pi1", ("pi1", self.both), ("pi0", self.target_only))?;
        ordering("Pi1", ("pi0", self.target_only), ("Pi1", self.attacker_only))?;
        ordering("Pi0", ("Pi1", self.attacker_only), ("Pi0", self.neither))?;
        let floor = self.target_only * self.attacker_only;
        if floor > self.both + PROFILE_SLACK {
            return Err(Error::invalid(
                "pi1",
                format!(
                    "non-cooperative constraint pi0*Pi1 <= pi1 violated ({} > {})",
                    floor, self.both
                ),
            ));
        }
        Ok(())
    }

    /// `pi0`: success probability when only the target's ISP is protected.
    pub fn target_only(&self) -> f64 {
        self.target_only
    }

    /// `pi1`: success probability when both ISPs are protected.
    pub fn both(&self) -> f64 {
        self.both
    }

    /// `Pi0`: success probability when neither ISP is protected.
    pub fn neither(&self) -> f64 {
        self.neither
    }

    /// `Pi1`: success probability when only the attacker's ISP is protected.
    pub fn attacker_only(&self) -> f64 {
        self.attacker_only
    }

    pub fn coupling(&self) -> Option<f64> {
        self.coupling
    }

    /// Returns a copy with a new outgoing-protection level `Pi1`. When the
    /// profile carries a coupling, `pi1` is re-derived at the new level.
    pub fn with_attacker_only(&self, attacker_only: f64) -> Result<Self> {
        match self.coupling {
            Some(alpha) => Self::coupled(self.target_only, self.neither, attacker_only, alpha),
            None => Self::new(self.target_only, self.both, self.neither, attacker_only),
        }
    }
}

/// Firewall costs, intrusion costs and the discount factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    purchase_fee: f64,
    usage_cost: f64,
    intrusion_cost: f64,
    intrusion_cost_rate: f64,
    discount: f64,
}

impl CostModel {
    /// `c0`, `c`, `C1I`, `C2I`, `r` in that order.
    pub fn new(
        purchase_fee: f64,
        usage_cost: f64,
        intrusion_cost: f64,
        intrusion_cost_rate: f64,
        discount: f64,
    ) -> Result<Self> {
        check_non_negative("c0", purchase_fee)?;
        check_non_negative("c", usage_cost)?;
        check_non_negative("c1i", intrusion_cost)?;
        check_non_negative("c2i", intrusion_cost_rate)?;
        check_positive("r", discount)?;
        Ok(CostModel {
            purchase_fee,
            usage_cost,
            intrusion_cost,
            intrusion_cost_rate,
            discount,
        })
    }

    pub fn purchase_fee(&self) -> f64 {
        self.purchase_fee
    }

    pub fn usage_cost(&self) -> f64 {
        self.usage_cost
    }

    /// Instantaneous cost charged when an intrusion succeeds.
    pub fn intrusion_cost(&self) -> f64 {
        self.intrusion_cost
    }

    /// Cost per unit time while a subnet stays intruded.
    pub fn intrusion_cost_rate(&self) -> f64 {
        self.intrusion_cost_rate
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        check_positive("r", discount)?;
        Ok(CostModel { discount, ..*self })
    }

    /// Discounted cost of one intrusion episode, `a = (C1I (r + mu) + C2I) / r`.
    pub fn coefficient_a(&self, threat: &ThreatEnvironment) -> f64 {
        (self.intrusion_cost * (self.discount + threat.detection_rate) + self.intrusion_cost_rate)
            / self.discount
    }

    /// Long-run cost rate of intrusions, `C1I mu + C2I`; the `r -> 0` limit of `r a`.
    pub fn long_run_intrusion_rate(&self, threat: &ThreatEnvironment) -> f64 {
        self.intrusion_cost * threat.detection_rate + self.intrusion_cost_rate
    }
}

/// Intrusion intensity and detection rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatEnvironment {
    intensity: f64,
    detection_rate: f64,
}

impl ThreatEnvironment {
    pub fn new(intensity: f64, detection_rate: f64) -> Result<Self> {
        check_positive("lambda", intensity)?;
        check_positive("mu", detection_rate)?;
        Ok(ThreatEnvironment {
            intensity,
            detection_rate,
        })
    }

    /// Rate of intrusion attempts per ISP that would succeed without any firewall.
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Rate at which a successful intrusion is detected and removed.
    pub fn detection_rate(&self) -> f64 {
        self.detection_rate
    }
}

/// Complete, validated parameter set of the adoption model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    profile: FirewallProfile,
    costs: CostModel,
    threat: ThreatEnvironment,
    update_rate: f64,
}

impl ModelParams {
    pub fn new(
        profile: FirewallProfile,
        costs: CostModel,
        threat: ThreatEnvironment,
        update_rate: f64,
    ) -> Result<Self> {
        check_positive("gamma", update_rate)?;
        Ok(ModelParams {
            profile,
            costs,
            threat,
            update_rate,
        })
    }

    pub fn profile(&self) -> &FirewallProfile {
        &self.profile
    }

    pub fn costs(&self) -> &CostModel {
        &self.costs
    }

    pub fn threat(&self) -> &ThreatEnvironment {
        &self.threat
    }

    /// Rate of each ISP's decision epochs.
    pub fn update_rate(&self) -> f64 {
        self.update_rate
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Ok(ModelParams {
            costs: self.costs.with_discount(discount)?,
            ..*self
        })
    }

    pub fn with_attacker_only(&self, attacker_only: f64) -> Result<Self> {
        Ok(ModelParams {
            profile: self.profile.with_attacker_only(attacker_only)?,
            ..*self
        })
    }

    /// `a` for these parameters.
    pub fn coefficient_a(&self) -> f64 {
        self.costs.coefficient_a(&self.threat)
    }

    /// Total discounted cost of holding a firewall, `c0 + c / r`.
    pub fn adoption_cost(&self) -> f64 {
        self.costs.purchase_fee + self.costs.usage_cost / self.costs.discount
    }
}

/// Population state `(y, x)`: fraction yet to purchase and fraction enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdoptionState {
    unpurchased: f64,
    enabled: f64,
}

impl AdoptionState {
    /// Slack tolerated on `x + y <= 1`.
    pub const SLACK: f64 = 1e-12;

    pub fn new(unpurchased: f64, enabled: f64) -> Result<Self> {
        if !(unpurchased.is_finite() && enabled.is_finite()) {
            return Err(Error::Domain(format!(
                "state ({unpurchased}, {enabled}) is not finite"
            )));
        }
        if unpurchased < 0.0 || enabled < 0.0 || unpurchased + enabled > 1.0 + Self::SLACK {
            return Err(Error::Domain(format!(
                "state (y={unpurchased}, x={enabled}) outside the simplex x, y >= 0, x + y <= 1"
            )));
        }
        Ok(AdoptionState {
            unpurchased,
            enabled,
        })
    }

    /// No firewall purchased yet: `(1, 0)`.
    pub fn unseeded() -> Self {
        AdoptionState {
            unpurchased: 1.0,
            enabled: 0.0,
        }
    }

    /// `y`.
    pub fn unpurchased(&self) -> f64 {
        self.unpurchased
    }

    /// `x`.
    pub fn enabled(&self) -> f64 {
        self.enabled
    }

    /// `1 - x - y`, the owners that have disabled their firewall.
    pub fn disabled(&self) -> f64 {
        (1.0 - self.unpurchased - self.enabled).max(0.0)
    }
}
