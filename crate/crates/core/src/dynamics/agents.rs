//! Discrete-event simulation of `n` hosts revising their decisions at the
//! epochs of independent Poisson clocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::{integrate, Sample, Trajectory};
use crate::equilibrium::{analyze, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{self, AdoptionState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentState {
    /// Has not bought a firewall.
    Unpurchased,
    /// Owns a firewall and runs it.
    Enabled,
    /// Owns a firewall but keeps it off.
    Disabled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPopulation {
    pub states: Vec<AgentState>,
    /// Simulated time reached.
    pub clock: f64,
    pub seed: u64,
    unpurchased: usize,
    enabled: usize,
}

impl AgentPopulation {
    /// Rounds `start` to integer counts: `round(x n)` enabled,
    /// `round((1 - x - y) n)` disabled, the remainder unpurchased.
    fn from_fractions(n: usize, start: &AdoptionState, seed: u64) -> Self {
        let enabled = ((start.enabled() * n as f64).round() as usize).min(n);
        let disabled = ((start.disabled() * n as f64).round() as usize).min(n - enabled);
        let unpurchased = n - enabled - disabled;
        let mut states = vec![AgentState::Enabled; enabled];
        states.extend(std::iter::repeat_n(AgentState::Disabled, disabled));
        states.extend(std::iter::repeat_n(AgentState::Unpurchased, unpurchased));
        AgentPopulation {
            states,
            clock: 0.0,
            seed,
            unpurchased,
            enabled,
        }
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn count(&self, state: AgentState) -> usize {
        match state {
            AgentState::Unpurchased => self.unpurchased,
            AgentState::Enabled => self.enabled,
            AgentState::Disabled => self.n() - self.unpurchased - self.enabled,
        }
    }

    pub fn fractions(&self) -> (f64, f64) {
        let n = self.n() as f64;
        (self.unpurchased as f64 / n, self.enabled as f64 / n)
    }

    fn set(&mut self, i: usize, next: AgentState) {
        let prev = self.states[i];
        match prev {
            AgentState::Unpurchased => self.unpurchased -= 1,
            AgentState::Enabled => self.enabled -= 1,
            AgentState::Disabled => {}
        }
        match next {
            AgentState::Unpurchased => self.unpurchased += 1,
            AgentState::Enabled => self.enabled += 1,
            AgentState::Disabled => {}
        }
        self.states[i] = next;
    }
}

/// Simulates `n` hosts from `start` up to `horizon`. The trajectory holds
/// the initial state and one sample per state change.
pub fn simulate_agents(
    params: &ModelParams,
    n: usize,
    start: &AdoptionState,
    horizon: f64,
    seed: u64,
) -> Result<(Trajectory, AgentPopulation)> {
    if n == 0 {
        return Err(Error::Domain("population size must be >= 1".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("{horizon} must be > 0")));
    }
    let report = analyze(params, &SolverOptions::default())?;
    // The empirical level only takes the values k / n.
    let levels: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let buy_gap: Vec<f64> = levels.iter().map(|&x| model::gap_at(params, x)).collect();
    let enable_gap: Vec<f64> = levels.iter().map(|&x| model::enable_gap_at(params, x)).collect();

    let mut pop = AgentPopulation::from_fractions(n, start, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clock = Exp::new(n as f64 * params.update_rate())
        .map_err(|e| Error::invalid("update_rate", e.to_string()))?;

    let sample = |pop: &AgentPopulation, t: f64| {
        let (y, x) = pop.fractions();
        Sample {
            t,
            y,
            x,
            region: report.region(x),
        }
    };
    let mut tr = Trajectory::default();
    tr.samples.push(sample(&pop, 0.0));

    let mut t = 0.0;
    loop {
        t += clock.sample(&mut rng);
        if t > horizon {
            break;
        }
        let i = rng.random_range(0..n);
        let k = pop.enabled;
        let next = match pop.states[i] {
            AgentState::Unpurchased if buy_gap[k] > 0.0 => AgentState::Enabled,
            AgentState::Enabled if enable_gap[k] < 0.0 => AgentState::Disabled,
            AgentState::Disabled if enable_gap[k] > 0.0 => AgentState::Enabled,
            s => s,
        };
        if next != pop.states[i] {
            pop.set(i, next);
            tr.samples.push(sample(&pop, t));
        }
    }
    pop.clock = horizon;
    Ok((tr, pop))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationStats {
    /// `(seed, sup_t |x_n(t) - x(t)|)` in the order the seeds were given.
    pub per_seed: Vec<(u64, f64)>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub std_dev: f64,
}

fn interpolate(ode: &[Sample], t: f64) -> f64 {
    let i = ode.partition_point(|s| s.t <= t);
    if i == 0 {
        return ode[0].x;
    }
    if i == ode.len() {
        return ode[i - 1].x;
    }
    let (a, b) = (&ode[i - 1], &ode[i]);
    a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t)
}

fn sup_deviation(agents: &Trajectory, ode: &[Sample], horizon: f64) -> f64 {
    let mut sup: f64 = 0.0;
    let mut held = agents.samples[0].x;
    sup = sup.max((held - interpolate(ode, 0.0)).abs());
    for s in &agents.samples[1..] {
        let x_ode = interpolate(ode, s.t);
        sup = sup.max((held - x_ode).abs()).max((s.x - x_ode).abs());
        held = s.x;
    }
    sup.max((held - interpolate(ode, horizon)).abs())
}

/// Sup-norm distance between simulated and mean-field adoption paths over
/// `[0, horizon]`, one simulation per seed. Seeds run in parallel; results
/// keep the order of `seeds`.
pub fn meanfield_deviation(
    params: &ModelParams,
    n: usize,
    start: &AdoptionState,
    horizon: f64,
    seeds: &[u64],
) -> Result<DeviationStats> {
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "at least one seed is required"));
    }
    if n < 10 {
        return Err(Error::Domain(format!("population size {n} below 10")));
    }
    let ode = integrate(params, start, horizon)?;
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            simulate_agents(params, n, start, horizon, seed)
                .map(|(tr, _)| (seed, sup_deviation(&tr, &ode.samples, horizon)))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = per_seed.len() as f64;
    let mean = per_seed.iter().map(|(_, d)| d).sum::<f64>() / k;
    let std_dev = if per_seed.len() > 1 {
        (per_seed.iter().map(|(_, d)| (d - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(DeviationStats {
        per_seed,
        mean,
        std_dev,
    })
}
