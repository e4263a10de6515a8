//! Monte Carlo order-of-growth checks on spreading and computing time.

use gossipcalc_core::comp::{choose_r, run_comp, CompInputs, CompOptions, MinimaPath};
use gossipcalc_core::conductance::conductance_complete_closed_form;
use gossipcalc_core::engine::{SimClock, SyncSemantics, TimeModel};
use gossipcalc_core::experiment::run_trials;
use gossipcalc_core::graph::{build_complete, build_grid, max_degree_matrix, Graph};
use gossipcalc_core::metrics::{
    empirical_computing_time, empirical_spreading_time, spreading_time_prediction, within_factor,
    TrialRecord,
};
use gossipcalc_core::rng::{stream_rng, Stream};
use gossipcalc_core::spread::{run_until, Capacity, ContactSampler, SpreadState};
use proptest::prelude::*;

fn spreading_times(g: &Graph, model: TimeModel, trials: usize, seed: u64) -> Vec<f64> {
    let sampler = ContactSampler::new(&max_degree_matrix(g));
    run_trials(trials, seed, |_, s| {
        let mut state = SpreadState::new(g.n());
        let mut clock = SimClock::seeded(model, g.n(), s);
        let mut rng = stream_rng(s, Stream::Contact);
        run_until(
            &mut state,
            &mut clock,
            &sampler,
            &mut rng,
            SyncSemantics::Serialized,
            SpreadState::spreading_complete,
            |_, _| {},
        )
        .completion_time
    })
}

#[test]
fn complete_graph_spreading_time_tracks_prediction() {
    let n = 128;
    let times = spreading_times(&build_complete(n).unwrap(), TimeModel::Async, 500, 3);
    let t = empirical_spreading_time(&times, 0.05).unwrap();
    let pred = spreading_time_prediction(n, 0.05, conductance_complete_closed_form(n));
    assert!(within_factor(t, pred, 4.0), "t={t} pred={pred}");
}

#[test]
fn grid_computing_time_grows_with_side() {
    let (epsilon, delta) = (0.3, 0.2);
    let r = choose_r(epsilon, delta).unwrap();
    let trials = 100;
    let computing_time = |c: usize| {
        let g = build_grid(2, c).unwrap();
        let p = max_degree_matrix(&g);
        let inputs = CompInputs::new(vec![1.0; g.n()], r).unwrap();
        let opts = CompOptions {
            time_model: TimeModel::Sync,
            minima_path: MinimaPath::Spread,
            ..CompOptions::default()
        };
        let records: Vec<TrialRecord> = run_trials(trials, 11, |trial, s| {
            let out = run_comp(&g, &p, &inputs, &opts, s).unwrap();
            TrialRecord {
                trial,
                seed: s,
                topology: format!("grid-2x{c}"),
                n: g.n(),
                time_model: TimeModel::Sync,
                capacity: Capacity::Infinite,
                r: Some(r),
                minima_path: Some(MinimaPath::Spread),
                completion_time: out.completion_time,
                truth: Some(out.truth),
                relative_errors: Some(out.relative_errors),
            }
        });
        empirical_computing_time(&records, epsilon, delta).unwrap()
    };
    let small = computing_time(8);
    let large = computing_time(16);
    let ratio = large / small;
    assert!((1.4..=3.6).contains(&ratio), "8x8 {small}, 16x16 {large}, ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_monotone_in_delta(times in prop::collection::vec(0.0f64..100.0, 200..400), d1 in 0.05f64..0.5, d2 in 0.05f64..0.5) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = empirical_spreading_time(&times, lo).unwrap();
        let b = empirical_spreading_time(&times, hi).unwrap();
        prop_assert!(a >= b);
    }

    #[test]
    fn adding_a_trial_moves_quantile_by_at_most_one_rank(times in prop::collection::vec(0.0f64..100.0, 200..300), extra in 0.0f64..100.0) {
        let before = empirical_spreading_time(&times, 0.1).unwrap();
        let mut more = times.clone();
        more.push(extra);
        let after = empirical_spreading_time(&more, 0.1).unwrap();
        let mut sorted = more.clone();
        sorted.sort_by(f64::total_cmp);
        let pos = |v: f64| sorted.iter().position(|&x| x == v).unwrap() as i64;
        prop_assert!((pos(before) - pos(after)).abs() <= 1);
    }
}
