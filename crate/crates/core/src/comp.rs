//! Estimating `y = Σ y_i` from exponential minima.
//!
//! Node `i` draws `W^i_1..W^i_r ~ Exp(y_i)`. The component-wise minimum
//! `W̄_l` over all nodes is `Exp(y)`, so `r / Σ_l W̄_l` estimates `y`.
//! The minimum is either handed to every node directly (the oracle path,
//! which isolates estimator error) or computed by min-vector gossip run in
//! lockstep with a message-spreading run.

use serde::{Deserialize, Serialize};

use crate::engine::{SimClock, SyncSemantics, TimeModel};
use crate::error::{Error, Result};
use crate::experiment::run_trials;
use crate::graph::{Graph, TransitionMatrix};
use crate::metrics::binomial_slack;
use crate::rng::{exp_variate, stream_rng, SimRng, Stream};
use crate::spread::{
    capacity_time_multiplier, run_until, Capacity, ContactSampler, MinVectorState, Mirrored,
    SpreadState,
};

/// How raw node values `x_i` become terms `y_i = f_i(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FKind {
    Identity,
    /// `y_i = 1`: the sum is the node count.
    ConstantOne,
    /// Lookup table of `(x, y)` pairs; every `x_i` must appear exactly.
    Table(Vec<(f64, f64)>),
}

impl FKind {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FKind::Identity => Ok(x.to_vec()),
            FKind::ConstantOne => Ok(vec![1.0; x.len()]),
            FKind::Table(table) => x
                .iter()
                .map(|&xi| {
                    table
                        .iter()
                        .find(|(k, _)| *k == xi)
                        .map(|&(_, y)| y)
                        .ok_or_else(|| Error::invalid(format!("no table entry for x = {xi}")))
                })
                .collect(),
        }
    }
}

/// Per-node terms `y_i >= 1` and the repetition count `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompInputs {
    y: Vec<f64>,
    r: usize,
}

impl CompInputs {
    pub fn new(y: Vec<f64>, r: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::invalid("need at least one node value"));
        }
        if r == 0 {
            return Err(Error::invalid("r must be >= 1"));
        }
        if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 1.0)) {
            return Err(Error::invalid(format!(
                "y[{i}] = {v} violates f_i(x) >= 1"
            )));
        }
        Ok(CompInputs { y, r })
    }

    pub fn from_raw(x: &[f64], kind: &FKind, r: usize) -> Result<Self> {
        Self::new(kind.apply(x)?, r)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn truth(&self) -> f64 {
        self.y.iter().sum()
    }

    /// Same `r`, every `y_i` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.y.iter().map(|v| v * c).collect(), self.r)
    }
}

/// `r = ⌈12 ε⁻² ln(4/δ)⌉`.
pub fn choose_r(epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    Ok((12.0 / (epsilon * epsilon) * (4.0 / delta).ln()).ceil() as usize)
}

/// `W^i_l = -ln(u)/y_i` with `u` uniform in `(0, 1]`, drawn node by node.
pub fn sample_variates(inputs: &CompInputs, rng: &mut SimRng) -> Vec<Vec<f64>> {
    inputs
        .y
        .iter()
        .map(|&rate| (0..inputs.r).map(|_| exp_variate(rng, rate)).collect())
        .collect()
}

/// Component-wise minimum over all nodes' vectors.
pub fn oracle_min(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or_else(|| Error::invalid("no vectors"))?;
    let mut out = first.clone();
    for v in &vectors[1..] {
        if v.len() != out.len() {
            return Err(Error::DimensionMismatch {
                expected: out.len(),
                got: v.len(),
            });
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.min(*x);
        }
    }
    Ok(out)
}

/// `r / Σ_l w_l`.
pub fn estimate(minima: &[f64]) -> Result<f64> {
    if minima.is_empty() {
        return Err(Error::InvalidState("empty minimum vector".into()));
    }
    if let Some(w) = minima.iter().find(|&&w| w.is_nan() || w <= 0.0) {
        return Err(Error::InvalidState(format!("non-positive minimum component {w}")));
    }
    Ok(minima.len() as f64 / minima.iter().sum::<f64>())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinimaPath {
    /// Minima computed centrally and given to every node.
    #[default]
    Oracle,
    /// Minima computed by min-vector gossip.
    Spread,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompOptions {
    pub time_model: TimeModel,
    pub semantics: SyncSemantics,
    pub minima_path: MinimaPath,
    pub capacity: Capacity,
}

impl Default for CompOptions {
    fn default() -> Self {
        CompOptions {
            time_model: TimeModel::Async,
            semantics: SyncSemantics::Serialized,
            minima_path: MinimaPath::Spread,
            capacity: Capacity::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompOutcome {
    pub estimates: Vec<f64>,
    pub truth: f64,
    pub minima_exact: bool,
    /// `|ŷ_i - y| / y`.
    pub relative_errors: Vec<f64>,
    /// Spreading time scaled by the capacity multiplier; zero on the oracle
    /// path.
    pub completion_time: f64,
    /// Unscaled spreading completion time.
    pub spread_time: f64,
    pub events: u64,
}

impl CompOutcome {
    pub fn max_relative_error(&self) -> f64 {
        self.relative_errors.iter().copied().fold(0.0, f64::max)
    }

    /// Whether every node's estimate lies in `[(1-ε) y, (1+ε) y]`.
    pub fn all_within(&self, epsilon: f64) -> bool {
        self.estimates
            .iter()
            .all(|&e| e >= (1.0 - epsilon) * self.truth && e <= (1.0 + epsilon) * self.truth)
    }
}

/// One run of the estimator. All randomness derives from `seed`.
pub fn run_comp(
    graph: &Graph,
    p: &TransitionMatrix,
    inputs: &CompInputs,
    opts: &CompOptions,
    seed: u64,
) -> Result<CompOutcome> {
    let n = graph.n();
    for got in [p.n(), inputs.n()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let truth = inputs.truth();
    let variates = sample_variates(inputs, &mut stream_rng(seed, Stream::Variates));

    let (estimates, spread_time, events, exact) = match opts.minima_path {
        MinimaPath::Oracle => {
            let y_hat = estimate(&oracle_min(&variates)?)?;
            (vec![y_hat; n], 0.0, 0, true)
        }
        MinimaPath::Spread => {
            let mut state = Mirrored {
                spread: SpreadState::new(n),
                minima: MinVectorState::new(&variates)?,
            };
            let sampler = ContactSampler::new(p);
            let mut clock = SimClock::seeded(opts.time_model, n, seed);
            let mut rng = stream_rng(seed, Stream::Contact);
            let summary = run_until(
                &mut state,
                &mut clock,
                &sampler,
                &mut rng,
                opts.semantics,
                |s| s.spread.spreading_complete(),
                |_, _| {},
            );
            let estimates = (0..n)
                .map(|i| estimate(state.minima.vector(i)))
                .collect::<Result<Vec<_>>>()?;
            (estimates, summary.completion_time, summary.events, false)
        }
    };
    let relative_errors = estimates.iter().map(|e| (e - truth).abs() / truth).collect();
    let multiplier = capacity_time_multiplier(opts.capacity, inputs.r()) as f64;
    Ok(CompOutcome {
        estimates,
        truth,
        minima_exact: exact,
        relative_errors,
        completion_time: spread_time * multiplier,
        spread_time,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    /// `2 exp(-ε² r / 3)`, possibly above 1.
    pub bound: f64,
    pub slack: f64,
}

impl AccuracyReport {
    pub fn within_bound(&self) -> bool {
        self.rate <= self.bound + self.slack
    }
}

/// Oracle-path failure rate: the fraction of trials in which some node's
/// estimate misses `y` by more than `2ε y`.
pub fn accuracy_experiment(
    inputs: &CompInputs,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let truth = inputs.truth();
    let failed = run_trials(trials, seed, |_, s| -> Result<bool> {
        let variates = sample_variates(inputs, &mut stream_rng(s, Stream::Variates));
        let y_hat = estimate(&oracle_min(&variates)?)?;
        Ok((y_hat - truth).abs() > 2.0 * epsilon * truth)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let failures = failed.iter().filter(|&&f| f).count();
    let bound = 2.0 * (-epsilon * epsilon * inputs.r() as f64 / 3.0).exp();
    Ok(AccuracyReport {
        trials,
        failures,
        rate: failures as f64 / trials as f64,
        bound,
        slack: binomial_slack(bound, trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, max_degree_matrix};
    use crate::rng::seeded_rng;

    #[test]
    fn choose_r_examples() {
        assert_eq!(choose_r(0.2, 0.1).unwrap(), 1107);
        assert_eq!(choose_r(0.1, 0.01).unwrap(), 7190);
        let near_one = choose_r(1.0 - 1e-9, 0.1).unwrap();
        assert_eq!(near_one, (12.0 * 40f64.ln()).ceil() as usize);
        assert!(choose_r(0.0, 0.1).is_err());
        assert!(choose_r(1.0, 0.1).is_err());
        assert!(choose_r(0.2, 0.0).is_err());
        assert!(choose_r(0.2, 1.0).is_err());
    }

    #[test]
    fn inputs_enforce_lower_bound() {
        assert!(CompInputs::new(vec![1.0, 0.5], 4).is_err());
        assert!(CompInputs::new(vec![1.0, f64::NAN], 4).is_err());
        assert!(CompInputs::new(vec![1.0], 0).is_err());
        assert!(CompInputs::new(vec![], 3).is_err());
        assert_eq!(CompInputs::new(vec![1.0, 2.5], 3).unwrap().truth(), 3.5);
    }

    #[test]
    fn f_kinds() {
        let x = [2.0, 3.0];
        assert_eq!(FKind::Identity.apply(&x).unwrap(), vec![2.0, 3.0]);
        assert_eq!(FKind::ConstantOne.apply(&x).unwrap(), vec![1.0, 1.0]);
        // log2 of g(x) = 2^x stored as a table
        let table = FKind::Table(vec![(2.0, 2.0), (3.0, 3.0)]);
        assert_eq!(table.apply(&x).unwrap(), vec![2.0, 3.0]);
        assert!(FKind::Table(vec![(2.0, 2.0)]).apply(&x).is_err());
    }

    #[test]
    fn inverse_cdf_identity_and_scaling() {
        let u = (-1.0f64).exp();
        assert!((-u.ln() / 1.0 - 1.0).abs() < 1e-15);

        let base = CompInputs::new(vec![1.0, 4.0, 7.5], 20).unwrap();
        let doubled = base.scaled(2.0).unwrap();
        let a = sample_variates(&base, &mut seeded_rng(5));
        let b = sample_variates(&doubled, &mut seeded_rng(5));
        for (va, vb) in a.iter().zip(&b) {
            for (x, y) in va.iter().zip(vb) {
                assert!(*x > 0.0 && x.is_finite());
                assert_eq!(*y, x / 2.0);
            }
        }
    }

    #[test]
    fn variate_mean() {
        let inputs = CompInputs::new(vec![5.0], 1_000_000).unwrap();
        let w = sample_variates(&inputs, &mut seeded_rng(17));
        let mean = w[0].iter().sum::<f64>() / w[0].len() as f64;
        let sigma = 0.2 / (1_000_000f64).sqrt();
        assert!((mean - 0.2).abs() < 5.0 * sigma, "mean {mean}");
    }

    #[test]
    fn oracle_min_examples() {
        assert_eq!(oracle_min(&[vec![3.0, 1.0]]).unwrap(), vec![3.0, 1.0]);
        assert_eq!(oracle_min(&[vec![3.0, 1.0], vec![2.0, 4.0]]).unwrap(), vec![2.0, 1.0]);
        assert!(oracle_min(&[vec![3.0], vec![2.0, 4.0]]).is_err());
        assert!(oracle_min(&[]).is_err());
    }

    #[test]
    fn estimate_examples() {
        assert_eq!(estimate(&[0.5, 0.5]).unwrap(), 2.0);
        assert_eq!(estimate(&[0.25]).unwrap(), 4.0);
        let w = [0.3, 0.7, 1.9];
        let scaled: Vec<f64> = w.iter().map(|x| 3.0 * x).collect();
        let ratio = estimate(&w).unwrap() / estimate(&scaled).unwrap();
        assert!((ratio - 3.0).abs() < 1e-12);
        assert!(matches!(estimate(&[0.5, 0.0]), Err(Error::InvalidState(_))));
        assert!(matches!(estimate(&[]), Err(Error::InvalidState(_))));
    }

    #[test]
    fn single_node_converges() {
        let g = Graph::new(1, []).unwrap();
        let p = max_degree_matrix(&g);
        let inputs = CompInputs::new(vec![7.0], 1_000_000).unwrap();
        let out = run_comp(&g, &p, &inputs, &CompOptions::default(), 3).unwrap();
        assert_eq!(out.completion_time, 0.0);
        assert!((out.estimates[0] - 7.0).abs() < 0.07);
    }

    #[test]
    fn oracle_estimates_identical() {
        let g = build_complete(32).unwrap();
        let p = max_degree_matrix(&g);
        let inputs = CompInputs::new((0..32).map(|i| 1.0 + i as f64).collect(), 50).unwrap();
        let opts = CompOptions {
            minima_path: MinimaPath::Oracle,
            ..CompOptions::default()
        };
        let out = run_comp(&g, &p, &inputs, &opts, 8).unwrap();
        assert!(out.minima_exact);
        assert!(out.estimates.iter().all(|e| e.to_bits() == out.estimates[0].to_bits()));
        assert!(out.relative_errors.iter().all(|&e| e == out.relative_errors[0]));
    }

    #[test]
    fn spread_path_matches_oracle_at_completion() {
        let g = build_complete(20).unwrap();
        let p = max_degree_matrix(&g);
        let inputs = CompInputs::new((0..20).map(|i| 1.0 + (i % 4) as f64).collect(), 30).unwrap();
        for time_model in [TimeModel::Async, TimeModel::Sync] {
            for seed in 0..5 {
                let spread = run_comp(&g, &p, &inputs, &CompOptions { time_model, ..CompOptions::default() }, seed).unwrap();
                let oracle = run_comp(
                    &g,
                    &p,
                    &inputs,
                    &CompOptions { minima_path: MinimaPath::Oracle, ..CompOptions::default() },
                    seed,
                )
                .unwrap();
                assert_eq!(spread.estimates, oracle.estimates);
                assert!(spread.completion_time > 0.0);
            }
        }
    }

    #[test]
    fn unit_capacity_scales_time() {
        let g = build_complete(10).unwrap();
        let p = max_degree_matrix(&g);
        let inputs = CompInputs::new(vec![1.0; 10], 25).unwrap();
        let inf = run_comp(&g, &p, &inputs, &CompOptions::default(), 1).unwrap();
        let unit = run_comp(
            &g,
            &p,
            &inputs,
            &CompOptions { capacity: Capacity::Unit, ..CompOptions::default() },
            1,
        )
        .unwrap();
        assert_eq!(unit.spread_time, inf.spread_time);
        assert_eq!(unit.completion_time, 25.0 * inf.completion_time);
    }

    #[test]
    fn dimension_checks() {
        let g = build_complete(4).unwrap();
        let p = max_degree_matrix(&g);
        let inputs = CompInputs::new(vec![1.0; 3], 5).unwrap();
        assert!(matches!(
            run_comp(&g, &p, &inputs, &CompOptions::default(), 0),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn accuracy_examples() {
        let inputs = CompInputs::new(vec![1.0; 50], 200).unwrap();
        let rep = accuracy_experiment(&inputs, 0.3, 1000, 4).unwrap();
        assert!((rep.bound - 2.0 * (-6.0f64).exp()).abs() < 1e-15);
        assert!(rep.within_bound(), "{rep:?}");

        let inputs = CompInputs::new(vec![1.0; 50], 50).unwrap();
        let rep = accuracy_experiment(&inputs, 0.05, 200, 4).unwrap();
        assert!(rep.bound > 1.0 && rep.within_bound());

        let inputs = CompInputs::new(vec![1.0; 10], 20_000).unwrap();
        assert_eq!(accuracy_experiment(&inputs, 0.05, 100, 4).unwrap().failures, 0);
    }
}
