//! Closed-form ISP utilities under the renewal intrusion model.
//!
//! An ISP is intruded at rate `eta`, which depends on the adoption level `x`
//! and on whether the ISP itself filters incoming traffic; intrusions are
//! cleared at rate `mu`. Costs are discounted at rate `r`. All utilities are
//! negative expected discounted costs.

mod params;

pub use params::{coupled_pi1, AdoptionState, CostModel, FirewallProfile, ModelParams, ThreatEnvironment};

use crate::error::{Error, Result};

pub(crate) fn check_fraction(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("adoption level {x} outside [0, 1]")))
    }
}

/// `a = (C1I (r + mu) + C2I) / r`, the discounted cost scale of one intrusion.
pub fn coefficient_a(costs: &CostModel, threat: &ThreatEnvironment) -> f64 {
    costs.coefficient_a(threat)
}

/// Successful-intrusion rate against one ISP when a fraction `x` of the
/// population is protected: `Lambda (p_protected x + p_unprotected (1 - x))`.
pub fn mix_rate(
    x: f64,
    p_protected: f64,
    p_unprotected: f64,
    threat: &ThreatEnvironment,
) -> Result<f64> {
    check_fraction(x)?;
    for p in [p_protected, p_unprotected] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
    }
    Ok(mix_rate_at(x, p_protected, p_unprotected, threat))
}

#[inline]
fn mix_rate_at(x: f64, p_protected: f64, p_unprotected: f64, threat: &ThreatEnvironment) -> f64 {
    threat.intensity() * (p_protected * x + p_unprotected * (1.0 - x))
}

/// Intrusion rate seen by an unprotected ISP (attacker side mixes `Pi1`/`Pi0`).
#[inline]
pub(crate) fn exposed_rate(params: &ModelParams, x: f64) -> f64 {
    let p = params.profile();
    mix_rate_at(x, p.attacker_only(), p.neither(), params.threat())
}

/// Intrusion rate seen by a protected ISP (attacker side mixes `pi1`/`pi0`).
#[inline]
pub(crate) fn shielded_rate(params: &ModelParams, x: f64) -> f64 {
    let p = params.profile();
    mix_rate_at(x, p.both(), p.target_only(), params.threat())
}

/// Stationary share of time spent intruded at intrusion rate `eta`.
#[inline]
fn intruded_share(eta: f64, mu: f64) -> f64 {
    if eta == 0.0 {
        0.0
    } else {
        eta / (mu + eta)
    }
}

/// Expected discounted costs conditional on the current intrusion state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCosts {
    /// `A`: cost given the subnet is currently intruded.
    pub intruded: f64,
    /// `B`: cost given the subnet is currently clean.
    pub clean: f64,
}

/// Conditional expected costs `A = a (r + eta) / (r + mu + eta)` and
/// `B = a eta / (r + mu + eta)` of a non-adopter.
pub fn conditional_costs(x: f64, params: &ModelParams) -> Result<ConditionalCosts> {
    check_fraction(x)?;
    let a = params.coefficient_a();
    let r = params.costs().discount();
    let mu = params.threat().detection_rate();
    let eta = exposed_rate(params, x);
    let denom = r + mu + eta;
    Ok(ConditionalCosts {
        intruded: a * (r + eta) / denom,
        clean: a * eta / denom,
    })
}

/// Stationary probability that a non-adopter is intruded, `eta / (eta + mu)`.
pub fn stationary_intrusion_probability(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(intruded_share(
        exposed_rate(params, x),
        params.threat().detection_rate(),
    ))
}

/// Complement of [`stationary_intrusion_probability`].
pub fn stationary_clean_probability(x: f64, params: &ModelParams) -> Result<f64> {
    Ok(1.0 - stationary_intrusion_probability(x, params)?)
}

#[inline]
pub(crate) fn nonadopter_at(params: &ModelParams, x: f64) -> f64 {
    -params.coefficient_a()
        * intruded_share(exposed_rate(params, x), params.threat().detection_rate())
}

#[inline]
pub(crate) fn adopter_at(params: &ModelParams, x: f64) -> f64 {
    -params.adoption_cost()
        - params.coefficient_a()
            * intruded_share(shielded_rate(params, x), params.threat().detection_rate())
}

#[inline]
pub(crate) fn owner_enabled_at(params: &ModelParams, x: f64) -> f64 {
    adopter_at(params, x) + params.costs().purchase_fee()
}

/// `G_E - G_N`: positive where buying beats abstaining.
#[inline]
pub(crate) fn gap_at(params: &ModelParams, x: f64) -> f64 {
    adopter_at(params, x) - nonadopter_at(params, x)
}

/// `G_E' - G_N`: positive where an owner prefers the firewall enabled.
#[inline]
pub(crate) fn enable_gap_at(params: &ModelParams, x: f64) -> f64 {
    owner_enabled_at(params, x) - nonadopter_at(params, x)
}

/// Derivative of `-a eta / (mu + eta)` for `eta = Lambda (p1 x + p0 (1 - x))`.
#[inline]
fn exposure_slope(params: &ModelParams, protected: f64, unprotected: f64, x: f64) -> f64 {
    let mu = params.threat().detection_rate();
    let lambda = params.threat().intensity();
    let eta = mix_rate_at(x, protected, unprotected, params.threat());
    let denom = mu + eta;
    params.coefficient_a() * mu * lambda * (unprotected - protected) / (denom * denom)
}

#[inline]
pub(crate) fn nonadopter_slope_at(params: &ModelParams, x: f64) -> f64 {
    let p = params.profile();
    exposure_slope(params, p.attacker_only(), p.neither(), x)
}

#[inline]
pub(crate) fn adopter_slope_at(params: &ModelParams, x: f64) -> f64 {
    let p = params.profile();
    exposure_slope(params, p.both(), p.target_only(), x)
}

#[inline]
pub(crate) fn gap_slope_at(params: &ModelParams, x: f64) -> f64 {
    adopter_slope_at(params, x) - nonadopter_slope_at(params, x)
}

/// `G_N(x) = -a eta / (mu + eta)`: expected utility of staying unprotected.
pub fn utility_nonadopter(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(nonadopter_at(params, x))
}

/// `G_E(x)`: expected utility of buying and enabling the firewall, fee included.
pub fn utility_adopter(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(adopter_at(params, x))
}

/// `G_E'(x) = G_E(x) + c0`: utility of enabling a firewall already owned.
pub fn utility_owner_enabled(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(owner_enabled_at(params, x))
}

/// `f(x) = G_E(x) - G_N(x)`.
pub fn adoption_gap(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(gap_at(params, x))
}

/// `D(x) = f'(x)` in closed form.
pub fn gap_slope(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(gap_slope_at(params, x))
}

/// `dG_N/dx` in closed form.
pub fn utility_nonadopter_slope(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(nonadopter_slope_at(params, x))
}

/// `dG_E/dx` in closed form.
pub fn utility_adopter_slope(x: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(x)?;
    Ok(adopter_slope_at(params, x))
}

/// Limits of `r G_N` and `r G_E` as `r -> 0` (long-run average cost rates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitUtilities {
    pub nonadopter: f64,
    pub adopter: f64,
}

impl LimitUtilities {
    pub fn gap(&self) -> f64 {
        self.adopter - self.nonadopter
    }
}

#[inline]
pub(crate) fn limit_utilities_at(params: &ModelParams, x: f64) -> LimitUtilities {
    let rate = params.costs().long_run_intrusion_rate(params.threat());
    let mu = params.threat().detection_rate();
    LimitUtilities {
        nonadopter: -rate * intruded_share(exposed_rate(params, x), mu),
        adopter: -params.costs().usage_cost() - rate * intruded_share(shielded_rate(params, x), mu),
    }
}

/// `r G_N` and `r G_E` in the limit `r -> 0`. The discount factor of `params`
/// is not used; the purchase fee drops out.
pub fn limit_scaled_utilities(x: f64, params: &ModelParams) -> Result<LimitUtilities> {
    check_fraction(x)?;
    Ok(limit_utilities_at(params, x))
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub struct Scenario {
        pub mu: f64,
        pub lambda: f64,
        pub gamma: f64,
        pub r: f64,
        pub c1i: f64,
        pub c2i: f64,
        pub c: f64,
        pub c0: f64,
        pub big_pi0: f64,
        pub big_pi1: f64,
        pub pi0: f64,
        pub pi1: Option<f64>,
        pub alpha: Option<f64>,
    }

    impl Scenario {
        pub fn r1() -> Self {
            Scenario {
                mu: 1.0,
                lambda: 0.5,
                gamma: 1.0,
                r: 0.5,
                c1i: 1.0,
                c2i: 1.0,
                c: 0.4,
                c0: 0.1,
                big_pi0: 1.0,
                big_pi1: 0.4,
                pi0: 0.3,
                pi1: None,
                alpha: Some(0.0),
            }
        }

        pub fn build(&self) -> ModelParams {
            let profile = match (self.pi1, self.alpha) {
                (Some(pi1), _) => FirewallProfile::new(self.pi0, pi1, self.big_pi0, self.big_pi1),
                (None, Some(alpha)) => {
                    FirewallProfile::coupled(self.pi0, self.big_pi0, self.big_pi1, alpha)
                }
                (None, None) => panic!("scenario needs pi1 or alpha"),
            }
            .unwrap();
            let costs = CostModel::new(self.c0, self.c, self.c1i, self.c2i, self.r).unwrap();
            let threat = ThreatEnvironment::new(self.lambda, self.mu).unwrap();
            ModelParams::new(profile, costs, threat, self.gamma).unwrap()
        }
    }

    pub fn r1() -> ModelParams {
        Scenario::r1().build()
    }
}

#[cfg(test)]
mod tests {
    use super::testing::{r1, Scenario};
    use super::*;
    use proptest::prelude::*;

    fn close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    #[test]
    fn coefficient_a_values() {
        let p = r1();
        close(coefficient_a(p.costs(), p.threat()), 5.0, 1e-12);
        let zero = CostModel::new(0.1, 0.4, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(coefficient_a(&zero, p.threat()), 0.0);
        let unit = CostModel::new(0.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        let threat = ThreatEnvironment::new(0.5, 1.0).unwrap();
        close(coefficient_a(&unit, &threat), 2.0, 1e-12);
    }

    #[test]
    fn mix_rate_values() {
        let threat = ThreatEnvironment::new(0.5, 1.0).unwrap();
        close(mix_rate(0.0, 0.4, 1.0, &threat).unwrap(), 0.5, 1e-15);
        close(mix_rate(1.0, 0.4, 1.0, &threat).unwrap(), 0.2, 1e-15);
        close(mix_rate(0.5, 0.4, 1.0, &threat).unwrap(), 0.35, 1e-15);
        assert!(matches!(mix_rate(1.5, 0.4, 1.0, &threat), Err(Error::Domain(_))));
    }

    #[test]
    fn conditional_costs_values() {
        let p = r1();
        let cc = conditional_costs(0.0, &p).unwrap();
        close(cc.intruded, 2.5, 1e-12);
        close(cc.clean, 1.25, 1e-12);

        let mut s = Scenario::r1();
        s.c1i = 0.0;
        s.c2i = 0.0;
        let cc = conditional_costs(0.3, &s.build()).unwrap();
        assert_eq!((cc.intruded, cc.clean), (0.0, 0.0));

        // eta -> 0: all probabilities zero means no successful attacks.
        let mut s = Scenario::r1();
        s.big_pi0 = 0.0;
        s.big_pi1 = 0.0;
        s.pi0 = 0.0;
        let p = s.build();
        let cc = conditional_costs(0.5, &p).unwrap();
        let a = p.coefficient_a();
        close(cc.intruded, a * 0.5 / 1.5, 1e-12);
        assert_eq!(cc.clean, 0.0);
    }

    #[test]
    fn stationary_probability_values() {
        let p = r1();
        close(stationary_intrusion_probability(0.0, &p).unwrap(), 1.0 / 3.0, 1e-15);
        let mut s = Scenario::r1();
        s.big_pi0 = 0.0;
        s.big_pi1 = 0.0;
        s.pi0 = 0.0;
        assert_eq!(stationary_intrusion_probability(0.4, &s.build()).unwrap(), 0.0);

        let mut last = f64::INFINITY;
        for mu in [0.5, 1.0, 10.0, 1e3, 1e6] {
            let mut s = Scenario::r1();
            s.mu = mu;
            let v = stationary_intrusion_probability(0.2, &s.build()).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn utility_values_at_r1() {
        let p = r1();
        close(utility_nonadopter(0.0, &p).unwrap(), -5.0 / 3.0, 1e-12);
        close(utility_nonadopter(1.0, &p).unwrap(), -5.0 / 6.0, 1e-12);
        close(utility_adopter(0.0, &p).unwrap(), -0.9 - 5.0 * 0.15 / 1.15, 1e-12);
        close(utility_adopter(1.0, &p).unwrap(), -0.9 - 5.0 * 0.06 / 1.06, 1e-12);
        close(utility_owner_enabled(0.0, &p).unwrap(), -1.452174, 1e-6);
        close(utility_owner_enabled(1.0, &p).unwrap(), -1.083019, 1e-6);
        close(adoption_gap(0.0, &p).unwrap(), 0.114493, 1e-6);
        close(adoption_gap(1.0, &p).unwrap(), -0.349686, 1e-6);
        close(gap_slope(0.0, &p).unwrap(), 2.5 * (0.18 / 1.3225 - 0.6 / 2.25), 1e-12);
        assert!(utility_adopter(-0.1, &p).is_err());
        assert!(gap_slope(1.0 + 1e-9, &p).is_err());
    }

    #[test]
    fn useless_free_firewall_matches_nonadopter() {
        let mut s = Scenario::r1();
        s.c = 0.0;
        s.c0 = 0.0;
        s.pi0 = 0.6;
        s.big_pi1 = 0.6;
        s.big_pi0 = 0.6;
        s.pi1 = Some(0.6);
        s.alpha = None;
        let p = s.build();
        for x in [0.0, 0.3, 1.0] {
            close(
                utility_adopter(x, &p).unwrap(),
                utility_nonadopter(x, &p).unwrap(),
                1e-15,
            );
        }
    }

    #[test]
    fn no_outgoing_protection_flattens_utilities() {
        let mut s = Scenario::r1();
        s.big_pi1 = 1.0;
        let p = s.build(); // alpha = 0 forces pi1 = pi0
        let g0 = utility_nonadopter(0.0, &p).unwrap();
        let f0 = adoption_gap(0.0, &p).unwrap();
        for x in [0.25, 0.5, 1.0] {
            assert_eq!(utility_nonadopter(x, &p).unwrap(), g0);
            assert_eq!(adoption_gap(x, &p).unwrap(), f0);
            assert_eq!(gap_slope(x, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn lemma2_counterexample_slope_is_positive() {
        let mut s = Scenario::r1();
        s.lambda = 2.0;
        close(gap_slope(0.0, &s.build()).unwrap(), 0.036458, 1e-6);
    }

    #[test]
    fn limit_utilities_values() {
        let p = r1();
        let l = limit_scaled_utilities(0.0, &p).unwrap();
        close(l.nonadopter, -2.0 / 3.0, 1e-12);
        close(l.adopter, -0.4 - 2.0 * 0.15 / 1.15, 1e-12);
        let mut s = Scenario::r1();
        s.c1i = 0.0;
        s.c2i = 0.0;
        s.c = 0.0;
        let l = limit_scaled_utilities(0.7, &s.build()).unwrap();
        assert_eq!((l.nonadopter, l.adopter), (0.0, 0.0));
    }

    #[test]
    fn scaled_utility_converges_to_limit() {
        let x = 0.3;
        let target = limit_scaled_utilities(x, &r1()).unwrap().nonadopter;
        let mut last = f64::INFINITY;
        for r in [1e-2, 1e-4, 1e-6] {
            let p = r1().with_discount(r).unwrap();
            let dev = (r * utility_nonadopter(x, &p).unwrap() - target).abs();
            assert!(dev < last, "deviation {dev} did not shrink at r={r}");
            last = dev;
        }
        assert!(last < 1e-5);
    }

    fn arb_params() -> impl Strategy<Value = ModelParams> {
        (
            0.2f64..3.0,
            0.05f64..3.0,
            0.05f64..2.0,
            0.0f64..2.0,
            0.0f64..2.0,
            0.0f64..1.0,
            0.0f64..0.5,
            0.05f64..0.95,
            0.0f64..1.0,
            0.0f64..1.0,
        )
            .prop_map(|(mu, lambda, r, c1i, c2i, c, c0, big_pi1, pi0_frac, alpha)| {
                let pi0 = big_pi1 * pi0_frac;
                let profile = FirewallProfile::coupled(pi0, 1.0, big_pi1, alpha).unwrap();
                let costs = CostModel::new(c0, c, c1i + 0.01, c2i, r).unwrap();
                let threat = ThreatEnvironment::new(lambda, mu).unwrap();
                ModelParams::new(profile, costs, threat, 1.0).unwrap()
            })
    }

    proptest! {
        #[test]
        fn positive_externality(p in arb_params(), x1 in 0.0f64..1.0, dx in 1e-3f64..1.0) {
            let x2 = (x1 + dx).min(1.0);
            prop_assume!(x2 > x1);
            prop_assert!(utility_nonadopter(x2, &p).unwrap() > utility_nonadopter(x1, &p).unwrap());
            prop_assert!(utility_adopter(x2, &p).unwrap() >= utility_adopter(x1, &p).unwrap());
        }

        #[test]
        fn owner_offset_is_purchase_fee(p in arb_params(), x in 0.0f64..=1.0) {
            let diff = utility_owner_enabled(x, &p).unwrap() - utility_adopter(x, &p).unwrap();
            let scale = utility_adopter(x, &p).unwrap().abs().max(1.0);
            prop_assert!((diff - p.costs().purchase_fee()).abs() <= 4.0 * f64::EPSILON * scale);
        }

        #[test]
        fn stationary_probabilities_sum_to_one(p in arb_params(), x in 0.0f64..=1.0) {
            let busy = stationary_intrusion_probability(x, &p).unwrap();
            let idle = stationary_clean_probability(x, &p).unwrap();
            prop_assert_eq!(busy + idle, 1.0);
        }

        #[test]
        fn conditional_cost_recursions(p in arb_params(), x in 0.0f64..=1.0) {
            let cc = conditional_costs(x, &p).unwrap();
            let c = p.costs();
            let mu = p.threat().detection_rate();
            let r = c.discount();
            let eta = exposed_rate(&p, x);
            let renewal = c.intrusion_cost() + c.intrusion_cost_rate() / (mu + r) + mu * cc.clean / (mu + r);
            prop_assert!((cc.intruded - renewal).abs() <= 1e-10 * cc.intruded.abs().max(1e-300));
            let clean = eta / (r + eta) * cc.intruded;
            prop_assert!((cc.clean - clean).abs() <= 1e-10 * cc.clean.abs().max(1e-300));
            // G_N is the stationary mix of the two conditional costs.
            let q = stationary_intrusion_probability(x, &p).unwrap();
            let mixed = -(q * cc.intruded + (1.0 - q) * cc.clean);
            let g = utility_nonadopter(x, &p).unwrap();
            prop_assert!((mixed - g).abs() <= 1e-10 * g.abs().max(1.0));
        }

        #[test]
        fn slope_matches_finite_difference(p in arb_params(), x in 1e-6f64..=(1.0 - 1e-6)) {
            let h = 1e-6;
            let fd = (adoption_gap(x + h, &p).unwrap() - adoption_gap(x - h, &p).unwrap()) / (2.0 * h);
            let d = gap_slope(x, &p).unwrap();
            let tol = 1e-6 * d.abs().max(1.0);
            prop_assert!((fd - d).abs() <= tol, "fd={} d={}", fd, d);
        }
    }
}
