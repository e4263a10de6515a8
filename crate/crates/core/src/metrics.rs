//! Aggregation over trial ensembles.
//!
//! All times are absolute: slots in the synchronous model, accumulated
//! Poisson time in the asynchronous one. Quantiles use the nearest-rank
//! convention with no interpolation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::comp::MinimaPath;
use crate::engine::TimeModel;
use crate::error::{Error, Result};
use crate::spread::Capacity;

/// Outcome of one simulation trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub topology: String,
    pub n: usize,
    pub time_model: TimeModel,
    pub capacity: Capacity,
    /// Absent for pure spreading runs.
    pub r: Option<usize>,
    pub minima_path: Option<MinimaPath>,
    /// Time at which the minima (or messages) finished spreading, scaled by
    /// the capacity multiplier.
    pub completion_time: f64,
    pub truth: Option<f64>,
    /// `|ŷ_i - y| / y` per node, when the estimator ran.
    pub relative_errors: Option<Vec<f64>>,
}

impl TrialRecord {
    /// `None` when the record carries no estimates.
    pub fn all_within(&self, epsilon: f64) -> Option<bool> {
        self.relative_errors
            .as_ref()
            .map(|errs| errs.iter().all(|&e| e <= epsilon))
    }
}

/// Records needed before a `(1-δ)` quantile is resolvable: `⌈10/δ⌉`.
pub fn min_records(delta: f64) -> usize {
    (10.0 / delta - 1e-9).ceil() as usize
}

/// Nearest-rank `q`-quantile: the `⌈qN⌉`-th smallest value (1-based).
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientRecords { needed: 1, got: 0 });
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("quantile must lie in (0, 1], got {q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // guard against q*N landing a hair above an integer
    let rank = ((q * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

fn check_delta(delta: f64, got: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    let needed = min_records(delta);
    if got < needed {
        return Err(Error::InsufficientRecords { needed, got });
    }
    Ok(())
}

/// Empirical δ-spreading time: the `(1-δ)` quantile of completion times.
pub fn empirical_spreading_time(completion_times: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta, completion_times.len())?;
    nearest_rank_quantile(completion_times, 1.0 - delta)
}

pub fn empirical_spreading_time_of(records: &[TrialRecord], delta: f64) -> Result<f64> {
    let times: Vec<f64> = records.iter().map(|r| r.completion_time).collect();
    empirical_spreading_time(&times, delta)
}

/// Empirical (ε,δ)-computing time. A trial contributes its completion time
/// when every node ends within `(1±ε) y`, and `+∞` otherwise, so the
/// result is infinite when more than a δ fraction fails.
///
/// Estimates never change after the minima converge, so the first time
/// all estimates are good is also the time from which they stay good.
pub fn empirical_computing_time(records: &[TrialRecord], epsilon: f64, delta: f64) -> Result<f64> {
    check_delta(delta, records.len())?;
    let values = records
        .iter()
        .map(|r| match r.all_within(epsilon) {
            Some(true) => Ok(r.completion_time),
            Some(false) => Ok(f64::INFINITY),
            None => Err(Error::invalid(format!(
                "trial {} has no estimates",
                r.trial
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    if values.iter().all(|v| v.is_infinite()) {
        return Err(Error::AllFailed);
    }
    nearest_rank_quantile(&values, 1.0 - delta)
}

/// `(ln n + ln(1/δ)) / Φ`, the spreading-time order with unit constant.
pub fn spreading_time_prediction(n: usize, delta: f64, conductance: f64) -> f64 {
    ((n as f64).ln() + (1.0 / delta).ln()) / conductance
}

/// `prediction / factor <= value <= prediction * factor`.
pub fn within_factor(value: f64, prediction: f64, factor: f64) -> bool {
    value >= prediction / factor && value <= prediction * factor
}

/// Three binomial standard deviations of an empirical rate over `trials`
/// when the true rate is `p` (clamped to `[0, 1]`).
pub fn binomial_slack(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub label: String,
    pub statistic: Vec<f64>,
    pub slope: f64,
}

/// Log-log fit of a statistic against network size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub sizes: Vec<usize>,
    pub statistic: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub reference: Option<ReferenceCurve>,
}

impl ScalingReport {
    /// Attaches a reference curve (e.g. `1/spectral_gap`) over the same
    /// sizes, fitted the same way. A flat reference has slope 0.
    pub fn with_reference(mut self, label: impl Into<String>, statistic: Vec<f64>) -> Result<Self> {
        check_series(&self.sizes, &statistic)?;
        let (slope, _) = log_log_fit(&self.sizes, &statistic);
        self.reference = Some(ReferenceCurve {
            label: label.into(),
            statistic,
            slope,
        });
        Ok(self)
    }
}

fn check_series(sizes: &[usize], statistic: &[f64]) -> Result<()> {
    if sizes.len() != statistic.len() {
        return Err(Error::DimensionMismatch {
            expected: sizes.len(),
            got: statistic.len(),
        });
    }
    if sizes.len() < 3 {
        return Err(Error::invalid("scaling fit needs at least 3 sizes"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes must be strictly increasing"));
    }
    if let Some(s) = statistic.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::invalid(format!("statistic must be positive and finite, got {s}")));
    }
    Ok(())
}

/// `(slope, intercept)` of `ln(statistic)` regressed on `ln(n)`.
fn log_log_fit(sizes: &[usize], statistic: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = statistic.iter().map(|s| s.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares slope of `ln(statistic)` against `ln(n)`.
pub fn scaling_fit(sizes: &[usize], statistic: &[f64]) -> Result<ScalingReport> {
    check_series(sizes, statistic)?;
    if statistic.iter().all(|&s| s == statistic[0]) {
        return Err(Error::Degenerate("statistic is constant across sizes".into()));
    }
    let (slope, intercept) = log_log_fit(sizes, statistic);
    Ok(ScalingReport {
        sizes: sizes.to_vec(),
        statistic: statistic.to_vec(),
        slope,
        intercept,
        reference: None,
    })
}

/// One row of the metrics CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub topology: String,
    pub n: usize,
    pub model: TimeModel,
    pub statistic: String,
    pub quantile: f64,
    pub value: f64,
    pub prediction: Option<f64>,
    pub band: Option<f64>,
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, time: f64, errors: Option<Vec<f64>>) -> TrialRecord {
        TrialRecord {
            trial,
            seed: trial as u64,
            topology: "complete".into(),
            n: 4,
            time_model: TimeModel::Async,
            capacity: Capacity::Infinite,
            r: Some(10),
            minima_path: Some(MinimaPath::Spread),
            completion_time: time,
            truth: Some(4.0),
            relative_errors: errors,
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(nearest_rank_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(nearest_rank_quantile(&[4.0, 3.0, 2.0, 1.0], 1.0).unwrap(), 4.0);
        let same = vec![2.5; 200];
        for delta in [0.05, 0.1, 0.5] {
            assert_eq!(empirical_spreading_time(&same, delta).unwrap(), 2.5);
        }
        // 0.95 * 500 is not exactly representable; rank must still be 475.
        let ramp: Vec<f64> = (1..=500).map(f64::from).collect();
        assert_eq!(empirical_spreading_time(&ramp, 0.05).unwrap(), 475.0);
    }

    #[test]
    fn insufficient_records() {
        assert_eq!(min_records(0.1), 100);
        assert_eq!(min_records(0.05), 200);
        assert_eq!(
            empirical_spreading_time(&[1.0; 99], 0.1),
            Err(Error::InsufficientRecords { needed: 100, got: 99 })
        );
        assert!(empirical_spreading_time(&[1.0; 100], 0.0).is_err());
    }

    #[test]
    fn computing_time() {
        let oracle: Vec<_> = (0..20).map(|i| record(i, 0.0, Some(vec![0.01; 4]))).collect();
        assert_eq!(empirical_computing_time(&oracle, 0.1, 0.5).unwrap(), 0.0);

        // δN = 10 exactly: the 90th of 100 values is the largest finite one.
        let mixed: Vec<_> = (0..100)
            .map(|i| {
                let err = if i < 10 { 0.5 } else { 0.01 };
                record(i, i as f64, Some(vec![err; 4]))
            })
            .collect();
        assert_eq!(empirical_computing_time(&mixed, 0.1, 0.1).unwrap(), 99.0);
        // one more failure pushes the quantile to +inf
        let mut worse = mixed.clone();
        worse[50].relative_errors = Some(vec![0.5; 4]);
        assert_eq!(empirical_computing_time(&worse, 0.1, 0.1).unwrap(), f64::INFINITY);

        let failed: Vec<_> = (0..20).map(|i| record(i, 1.0, Some(vec![0.9; 4]))).collect();
        assert_eq!(empirical_computing_time(&failed, 0.1, 0.5), Err(Error::AllFailed));
        let bare: Vec<_> = (0..20).map(|i| record(i, 1.0, None)).collect();
        assert!(empirical_computing_time(&bare, 0.1, 0.5).is_err());
    }

    #[test]
    fn synthetic_slopes() {
        let sizes = [16, 64, 256, 1024];
        let linear: Vec<f64> = sizes.iter().map(|&n| 3.0 * n as f64).collect();
        assert!((scaling_fit(&sizes, &linear).unwrap().slope - 1.0).abs() < 1e-12);
        let root: Vec<f64> = sizes.iter().map(|&n| (n as f64).sqrt()).collect();
        let rep = scaling_fit(&sizes, &root).unwrap().with_reference("linear", linear).unwrap();
        assert!((rep.slope - 0.5).abs() < 1e-12);
        assert!((rep.reference.unwrap().slope - 1.0).abs() < 1e-12);

        assert!(matches!(scaling_fit(&sizes, &[2.0; 4]), Err(Error::Degenerate(_))));
        let flat = scaling_fit(&sizes, &root).unwrap().with_reference("flat", vec![1.0; 4]).unwrap();
        assert_eq!(flat.reference.unwrap().slope, 0.0);
        assert!(scaling_fit(&[1, 2], &[1.0, 2.0]).is_err());
        assert!(scaling_fit(&[4, 2, 8], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn prediction_band() {
        let pred = spreading_time_prediction(128, 0.05, 0.5);
        assert!((pred - 2.0 * (128f64.ln() + 20f64.ln())).abs() < 1e-12);
        assert!(within_factor(pred / 3.9, pred, 4.0));
        assert!(!within_factor(pred * 4.1, pred, 4.0));
    }

    #[test]
    fn csv_rows() {
        let rows = vec![MetricsRow {
            topology: "ring".into(),
            n: 8,
            model: TimeModel::Sync,
            statistic: "spreading_time".into(),
            quantile: 0.9,
            value: 12.0,
            prediction: Some(10.5),
            band: Some(4.0),
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "topology,n,model,statistic,quantile,value,prediction,band\nring,8,sync,spreading_time,0.9,12.0,10.5,4.0\n"
        );
    }
}
