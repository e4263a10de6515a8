use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use gossipcalc_core::comp::{choose_r, run_comp, CompInputs, CompOptions};
use gossipcalc_core::conductance::{
    complete_closed_form_result, conductance_complete_closed_form, conductance_exact,
    spectral_gap, ConductanceMethod, DEFAULT_ENUMERATION_CAP,
};
use gossipcalc_core::engine::SimClock;
use gossipcalc_core::experiment::{run_trials, try_run_trials};
use gossipcalc_core::graph::{max_degree_matrix, Graph, TransitionMatrix};
use gossipcalc_core::metrics::{
    empirical_computing_time, empirical_spreading_time, min_records, scaling_fit,
    spreading_time_prediction, write_metrics_csv, MetricsRow, ScalingReport, TrialRecord,
};
use gossipcalc_core::rng::{stream_rng, Stream};
use gossipcalc_core::spread::{run_until, ContactSampler, SpreadState};
use gossipcalc_core::{Error as CoreError, SyncSemantics, TimeModel};

use crate::config::{validate_config, ExperimentConfig, Topology};
use crate::error::CliError;

fn check(c: &ExperimentConfig) -> Result<(), CliError> {
    let violations = validate_config(c);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violations(violations))
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn emit_json<T: Serialize>(c: &ExperimentConfig, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    emit(c.out.as_deref(), &text)
}

fn emit_csv(c: &ExperimentConfig, rows: &[MetricsRow]) -> Result<(), CliError> {
    let Some(path) = &c.csv else { return Ok(()) };
    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_metrics_csv(file, rows).map_err(|e| CliError::Io(e.to_string()))
}

/// Conductance when it is cheaply available: the closed form for complete
/// graphs, enumeration up to the cap, otherwise `None`.
fn known_conductance(c: &ExperimentConfig, p: &TransitionMatrix) -> Result<Option<f64>, CliError> {
    if c.topology == Topology::Complete {
        return Ok(Some(conductance_complete_closed_form(p.n())));
    }
    if p.n() <= DEFAULT_ENUMERATION_CAP && p.n() >= 2 {
        return Ok(Some(conductance_exact(p)?.value));
    }
    Ok(None)
}

/// Completion time of one message-spreading run.
fn spread_once(
    sampler: &ContactSampler,
    n: usize,
    model: TimeModel,
    semantics: SyncSemantics,
    seed: u64,
    trace: bool,
) -> f64 {
    let mut state = SpreadState::new(n);
    let mut clock = SimClock::seeded(model, n, seed);
    let mut rng = stream_rng(seed, Stream::Contact);
    let done = SpreadState::spreading_complete;
    let summary = if trace {
        let mut err = std::io::stderr().lock();
        run_until(&mut state, &mut clock, sampler, &mut rng, semantics, done, |ex, s| {
            let _ = writeln!(err, "{} {} {} {} {}", ex.event, ex.time, ex.initiator, ex.partner, s.message_count(ex.initiator));
        })
    } else {
        run_until(&mut state, &mut clock, sampler, &mut rng, semantics, done, |_, _| {})
    };
    summary.completion_time
}

pub fn compute(c: &ExperimentConfig) -> Result<Vec<TrialRecord>, CliError> {
    check(c)?;
    let g = c.build_graph()?;
    let p = max_degree_matrix(&g);
    let r = match c.r {
        Some(r) => r,
        None => choose_r(c.epsilon, c.delta)?,
    };
    let inputs = CompInputs::from_raw(&c.raw_inputs(g.n()), &c.f_kind(), r)?;
    if inputs.n() != g.n() {
        return Err(CoreError::DimensionMismatch { expected: g.n(), got: inputs.n() }.into());
    }
    let opts = CompOptions {
        time_model: c.time_model,
        semantics: c.sync_semantics,
        minima_path: c.minima_path,
        capacity: c.capacity,
    };
    let label = c.topology_label(&g);
    let records = try_run_trials(c.trials, c.seed, |trial, seed| {
        let out = run_comp(&g, &p, &inputs, &opts, seed)?;
        Ok(TrialRecord {
            trial,
            seed,
            topology: label.clone(),
            n: g.n(),
            time_model: c.time_model,
            capacity: c.capacity,
            r: Some(r),
            minima_path: Some(c.minima_path),
            completion_time: out.completion_time,
            truth: Some(out.truth),
            relative_errors: Some(out.relative_errors),
        })
    })?;
    Ok(records)
}

fn compute_metrics(c: &ExperimentConfig, records: &[TrialRecord], g: &Graph) -> Result<Vec<MetricsRow>, CliError> {
    let mut rows = Vec::new();
    if records.len() < min_records(c.delta) {
        return Ok(rows);
    }
    let label = c.topology_label(g);
    let times: Vec<f64> = records.iter().map(|r| r.completion_time).collect();
    let phi = known_conductance(c, &max_degree_matrix(g))?;
    rows.push(MetricsRow {
        topology: label.clone(),
        n: g.n(),
        model: c.time_model,
        statistic: "spreading_time".into(),
        quantile: 1.0 - c.delta,
        value: empirical_spreading_time(&times, c.delta)?,
        prediction: phi.map(|phi| spreading_time_prediction(g.n(), c.delta, phi)),
        band: phi.map(|_| c.band),
    });
    match empirical_computing_time(records, c.epsilon, c.delta) {
        Ok(value) => rows.push(MetricsRow {
            topology: label,
            n: g.n(),
            model: c.time_model,
            statistic: "computing_time".into(),
            quantile: 1.0 - c.delta,
            value,
            prediction: None,
            band: None,
        }),
        Err(CoreError::AllFailed) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(rows)
}

pub fn run_compute(c: &ExperimentConfig) -> Result<(), CliError> {
    let records = compute(c)?;
    emit_json(c, &records)?;
    if c.csv.is_some() {
        let g = c.build_graph()?;
        emit_csv(c, &compute_metrics(c, &records, &g)?)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadReport {
    pub topology: String,
    pub n: usize,
    pub time_model: TimeModel,
    pub sync_semantics: SyncSemantics,
    pub trials: usize,
    pub delta: f64,
    pub spreading_time: f64,
    pub conductance: Option<f64>,
    /// `(ln n + ln(1/δ)) / Φ`.
    pub prediction: Option<f64>,
    pub completion_times: Vec<f64>,
}

pub fn spread(c: &ExperimentConfig) -> Result<SpreadReport, CliError> {
    check(c)?;
    let g = c.build_graph()?;
    let p = max_degree_matrix(&g);
    let sampler = ContactSampler::new(&p);
    let times = run_trials(c.trials, c.seed, |trial, seed| {
        spread_once(&sampler, g.n(), c.time_model, c.sync_semantics, seed, c.trace && trial == 0)
    });
    let spreading_time = empirical_spreading_time(&times, c.delta)?;
    let conductance = known_conductance(c, &p)?;
    Ok(SpreadReport {
        topology: c.topology_label(&g),
        n: g.n(),
        time_model: c.time_model,
        sync_semantics: c.sync_semantics,
        trials: c.trials,
        delta: c.delta,
        spreading_time,
        conductance,
        prediction: conductance.map(|phi| spreading_time_prediction(g.n(), c.delta, phi)),
        completion_times: times,
    })
}

pub fn run_spread(c: &ExperimentConfig) -> Result<(), CliError> {
    let report = spread(c)?;
    emit_json(c, &report)?;
    emit_csv(
        c,
        &[MetricsRow {
            topology: report.topology.clone(),
            n: report.n,
            model: report.time_model,
            statistic: "spreading_time".into(),
            quantile: 1.0 - report.delta,
            value: report.spreading_time,
            prediction: report.prediction,
            band: report.prediction.map(|_| c.band),
        }],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConductanceReport {
    pub n: usize,
    pub method: ConductanceMethod,
    pub value: f64,
    pub argmin_set: Vec<usize>,
    pub spectral_gap: f64,
}

pub fn conductance(c: &ExperimentConfig) -> Result<ConductanceReport, CliError> {
    let mut relaxed = c.clone();
    // conductance ignores the estimator parameters entirely
    relaxed.f_kind = crate::config::FKindName::ConstantOne;
    check(&relaxed)?;
    let g = c.build_graph()?;
    let p = max_degree_matrix(&g);
    let result = if c.topology == Topology::Complete && g.n() > DEFAULT_ENUMERATION_CAP {
        complete_closed_form_result(g.n())
    } else {
        conductance_exact(&p)?
    };
    Ok(ConductanceReport {
        n: g.n(),
        method: result.method,
        value: result.value,
        argmin_set: result.argmin_set,
        spectral_gap: spectral_gap(&p)?,
    })
}

pub fn run_conductance(c: &ExperimentConfig) -> Result<(), CliError> {
    emit_json(c, &conductance(c)?)
}

/// Spreading-time quantile per size, fitted against `n` on log-log axes,
/// with `1/spectral_gap` as the iterative-averaging reference.
pub fn sweep(c: &ExperimentConfig) -> Result<(ScalingReport, Vec<MetricsRow>), CliError> {
    check(c)?;
    let sizes = c
        .sizes
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs --sizes".into()))?;
    let mut stats = Vec::new();
    let mut reference = Vec::new();
    let mut rows = Vec::new();
    for &n in &sizes {
        let g = c.build_graph_sized(n)?;
        let p = max_degree_matrix(&g);
        let sampler = ContactSampler::new(&p);
        let times = run_trials(c.trials, c.seed, |_, seed| {
            spread_once(&sampler, g.n(), c.time_model, c.sync_semantics, seed, false)
        });
        let t = empirical_spreading_time(&times, c.delta)?;
        let inv_gap = 1.0 / spectral_gap(&p)?;
        let phi = known_conductance(c, &p)?;
        let label = c.topology_label(&g);
        rows.push(MetricsRow {
            topology: label.clone(),
            n: g.n(),
            model: c.time_model,
            statistic: "spreading_time".into(),
            quantile: 1.0 - c.delta,
            value: t,
            prediction: phi.map(|phi| spreading_time_prediction(g.n(), c.delta, phi)),
            band: phi.map(|_| c.band),
        });
        rows.push(MetricsRow {
            topology: label,
            n: g.n(),
            model: c.time_model,
            statistic: "inverse_spectral_gap".into(),
            quantile: 1.0,
            value: inv_gap,
            prediction: None,
            band: None,
        });
        stats.push(t);
        reference.push(inv_gap);
    }
    let report = scaling_fit(&sizes, &stats)?.with_reference("inverse_spectral_gap", reference)?;
    Ok((report, rows))
}

pub fn run_sweep(c: &ExperimentConfig) -> Result<(), CliError> {
    let (report, rows) = sweep(c)?;
    emit_json(c, &report)?;
    emit_csv(c, &rows)
}
