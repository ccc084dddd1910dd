#![allow(dead_code)]

use fwadopt::equilibrium::{gap_is_monotone, unseeded_level, SolverOptions};
use fwadopt::model::{self, CostModel, FirewallProfile, ModelParams, ThreatEnvironment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

/// Reference scenario: mu=1, Lambda=0.5, gamma=1, r=0.5, C1I=C2I=1, c=0.4,
/// c0=0.1, Pi0=1, Pi1=0.4, pi0=0.3, alpha=0.
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
    pub alpha: f64,
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
            alpha: 0.0,
        }
    }

    pub fn build(&self) -> ModelParams {
        ModelParams::new(
            FirewallProfile::coupled(self.pi0, self.big_pi0, self.big_pi1, self.alpha).unwrap(),
            CostModel::new(self.c0, self.c, self.c1i, self.c2i, self.r).unwrap(),
            ThreatEnvironment::new(self.lambda, self.mu).unwrap(),
            self.gamma,
        )
        .unwrap()
    }
}

pub fn r1() -> ModelParams {
    Scenario::r1().build()
}

pub const R1_JSON: &str = r#"{"mu": 1, "lambda": 0.5, "gamma": 1, "r": 0.5, "c0": 0.1, "c": 0.4, "c1i": 1, "c2i": 1, "pi0": 0.3, "Pi0": 1, "Pi1": 0.4, "alpha": 0}"#;

/// Random coupled instances whose purchase gap is decreasing on the scan grid
/// and crosses zero strictly inside `(0, 1)`.
///
/// The usage cost is chosen last: with `c = c0 = 0` the gap is a function
/// `g(x)` that does not involve `c`, and `c = r (g(z) - c0)` puts the
/// threshold at a random target `z`.
pub fn random_monotone_instances(seed: u64, count: usize) -> Vec<ModelParams> {
    generate(seed, count, false)
}

/// As [`random_monotone_instances`] with the no-firewall pass probability fixed at 1.
pub fn random_unit_pi0_instances(seed: u64, count: usize) -> Vec<ModelParams> {
    generate(seed, count, true)
}

fn generate(seed: u64, count: usize, unit_pi0: bool) -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 100 * count, "generator starved");
        let mu = rng.random_range(0.5..2.0);
        let mut s = Scenario {
            mu,
            lambda: rng.random_range(0.1..mu),
            gamma: rng.random_range(0.5..2.0),
            r: rng.random_range(0.1..2.0),
            c1i: rng.random_range(0.2..2.0),
            c2i: rng.random_range(0.2..2.0),
            c: 0.0,
            c0: 0.0,
            big_pi0: 1.0,
            big_pi1: rng.random_range(0.3..0.9),
            pi0: 0.0,
            alpha: rng.random_range(0.0..1.0),
        };
        s.big_pi0 = if unit_pi0 { 1.0 } else { rng.random_range(s.big_pi1..1.0) };
        s.pi0 = rng.random_range(0.1..s.big_pi1);
        let target = rng.random_range(0.1..0.9);
        let fee = rng.random_range(0.0..0.3);
        let free = s.build();
        let g = model::adoption_gap(target, &free).unwrap();
        if g <= fee {
            continue;
        }
        s.c0 = fee;
        s.c = s.r * (g - fee);
        let p = s.build();
        if !gap_is_monotone(&p, 256) {
            continue;
        }
        let x = unseeded_level(&p, &SolverOptions::default()).unwrap();
        if x > 1e-6 && x < 1.0 - 1e-6 {
            out.push(p);
        }
    }
    out
}

/// Monte-Carlo estimate of the discounted expected cost of a host without a
/// firewall at adoption level `x`, returned as `(mean utility, standard error)`.
///
/// Each path starts in the stationary law of the intrusion process: intruded
/// with probability `eta / (eta + mu)`. Intrusions arrive at rate `eta`,
/// cost `C1I` on arrival and `C2I` per unit time until detection at rate
/// `mu`. A path starting intruded pays the arrival cost at time zero.
pub fn mc_nonadopter_utility(params: &ModelParams, x: f64, paths: usize, seed: u64) -> (f64, f64) {
    let threat = params.threat();
    let costs = params.costs();
    let profile = params.profile();
    let eta = threat.intensity() * (profile.attacker_only() * x + profile.neither() * (1.0 - x));
    let mu = threat.detection_rate();
    let r = costs.discount();
    let (c1i, c2i) = (costs.intrusion_cost(), costs.intrusion_cost_rate());
    let horizon = 40.0 / r;
    let p_intruded = eta / (eta + mu);

    let chunks = 64;
    let per_chunk = paths / chunks;
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(k as u64));
            let arrivals = Exp::new(eta).unwrap();
            let detection = Exp::new(mu).unwrap();
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..per_chunk {
                let mut t = 0.0;
                let mut cost = 0.0;
                let mut intruded = rng.random::<f64>() < p_intruded;
                while t < horizon {
                    if intruded {
                        cost += c1i * (-r * t).exp();
                        let d = detection.sample(&mut rng);
                        cost += c2i * ((-r * t).exp() - (-r * (t + d)).exp()) / r;
                        t += d;
                        intruded = false;
                    } else {
                        t += arrivals.sample(&mut rng);
                        intruded = true;
                    }
                }
                s1 += cost;
                s2 += cost * cost;
            }
            (s1, s2)
        })
        .collect();
    let n = (per_chunk * chunks) as f64;
    let s1: f64 = sums.iter().map(|s| s.0).sum();
    let s2: f64 = sums.iter().map(|s| s.1).sum();
    let mean = s1 / n;
    let var = (s2 / n - mean * mean) * n / (n - 1.0);
    (-mean, (var / n).sqrt())
}
