//! Activation clocks for the two time models.
//!
//! Asynchronous: a global rate-`n` Poisson clock; each tick activates one
//! uniformly chosen node, so one unit of absolute time holds `n` ticks on
//! average. Synchronous: slot `t` happens at absolute time `t` and
//! activates every node once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::run_trials;
use crate::metrics::binomial_slack;
use crate::rng::{exp_variate, shuffle, stream_rng, uniform_index, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeModel {
    Sync,
    Async,
}

/// How the exchanges of one synchronous slot compose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncSemantics {
    /// Exchanges run one after another in the slot's random activation
    /// order, each seeing the effects of the ones before it.
    #[default]
    Serialized,
    /// Every exchange reads the state as of the start of the slot.
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationEvent<'a> {
    pub time: f64,
    /// Nodes that initiate a contact at `time`, in serialization order.
    pub initiators: &'a [usize],
}

#[derive(Debug, Clone)]
pub struct SimClock {
    model: TimeModel,
    n: usize,
    rng: SimRng,
    ticks: u64,
    time: f64,
    order: Vec<usize>,
    active: usize,
}

impl SimClock {
    pub fn new(model: TimeModel, n: usize, rng: SimRng) -> Self {
        assert!(n > 0, "clock needs at least one node");
        SimClock {
            model,
            n,
            rng,
            ticks: 0,
            time: 0.0,
            order: (0..n).collect(),
            active: 0,
        }
    }

    /// Clock driven by the `Clock` stream of a trial seed.
    pub fn seeded(model: TimeModel, n: usize, seed: u64) -> Self {
        Self::new(model, n, stream_rng(seed, Stream::Clock))
    }

    pub fn model(&self) -> TimeModel {
        self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Events emitted so far (ticks or slots).
    pub fn tick_index(&self) -> u64 {
        self.ticks
    }

    pub fn absolute_time(&self) -> f64 {
        self.time
    }

    pub fn next_event(&mut self) -> ActivationEvent<'_> {
        self.ticks += 1;
        match self.model {
            TimeModel::Async => {
                self.time += exp_variate(&mut self.rng, self.n as f64);
                self.active = uniform_index(&mut self.rng, self.n);
                ActivationEvent {
                    time: self.time,
                    initiators: std::slice::from_ref(&self.active),
                }
            }
            TimeModel::Sync => {
                self.time += 1.0;
                shuffle(&mut self.rng, &mut self.order);
                ActivationEvent {
                    time: self.time,
                    initiators: &self.order,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    /// `2 exp(-ε² k / 3)`.
    pub bound: f64,
    /// Three binomial standard deviations at the bound.
    pub slack: f64,
}

impl ConcentrationReport {
    pub fn within_bound(&self) -> bool {
        self.rate <= self.bound + self.slack
    }
}

/// Fraction of asynchronous runs whose `k`-th tick time `C_k` satisfies
/// `|C_k - k/n| >= ε k / n`.
pub fn clock_concentration_check(
    n: usize,
    k: u64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if k < 1 || n < 1 || trials < 1 {
        return Err(Error::invalid("n, k and trials must be positive"));
    }
    let expected = k as f64 / n as f64;
    let violated = run_trials(trials, seed, |_, trial_seed| {
        let mut clock = SimClock::seeded(TimeModel::Async, n, trial_seed);
        for _ in 0..k {
            clock.next_event();
        }
        (clock.absolute_time() - expected).abs() >= epsilon * expected
    });
    let violations = violated.iter().filter(|&&v| v).count();
    let bound = 2.0 * (-epsilon * epsilon * k as f64 / 3.0).exp();
    Ok(ConcentrationReport {
        trials,
        violations,
        rate: violations as f64 / trials as f64,
        bound,
        slack: binomial_slack(bound, trials),
    })
}
