use approx::assert_abs_diff_eq;
use fsc_capacity::channel::{
    builtin_channel, induce_strategy_channel, ChannelParams, Fsc, InducedChannel, StateDmc,
    StrategyTable,
};
use fsc_capacity::h2;
use fsc_capacity::horizon::{
    analytic_noisy_ising_bound, blahut_arimoto, noisy_ising_quadratic, noisy_ising_root,
    sandwich_bounds, shannon_strategy_capacity, shannon_strategy_capacity_with,
};
use fsc_capacity::qgraph::{builtin_qgraph, search_policy, SearchOptions};
use proptest::prelude::*;

fn induced(name: &str, params: ChannelParams, strategies: &StrategyTable) -> InducedChannel<f64> {
    induce_strategy_channel(&builtin_channel(name, &params).unwrap(), strategies).unwrap()
}

fn scan(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let steps = ((hi - lo) / 1e-6).round() as usize;
    (0..=steps)
        .map(|k| f(lo + k as f64 * 1e-6))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn golden_log() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).log2()
}

fn search(ch: &InducedChannel<f64>, graph: &str) -> f64 {
    let out = search_policy(
        ch,
        &builtin_qgraph(graph).unwrap(),
        &SearchOptions::default(),
    )
    .unwrap();
    assert!(out.feasible, "violation {}", out.result.bcjr_violation);
    out.result.rate
}

#[test]
fn search_trapdoor() {
    let ch = induced("trapdoor", ChannelParams::default(), &StrategyTable::xor());
    assert_abs_diff_eq!(search(&ch, "trapdoor4"), golden_log(), epsilon = 1e-4);
}

#[test]
fn search_ising() {
    let ch = induced(
        "ising",
        ChannelParams::default(),
        &StrategyTable::identity(2, 2),
    );
    let oracle = scan(0.0, 1.0, |a| 2.0 * h2(a) / (3.0 + a));
    assert_abs_diff_eq!(oracle, 0.5755, epsilon = 1e-4);
    assert_abs_diff_eq!(search(&ch, "ising4"), oracle, epsilon = 1e-4);
}

#[test]
fn search_constrained_bec() {
    let params = ChannelParams {
        eps: Some(0.5),
        ..Default::default()
    };
    let ch = induced("constrained_bec", params, &StrategyTable::constrained_bec());
    let oracle = scan(0.0, 0.5, |p| h2(p) / (2.0 + p));
    assert_abs_diff_eq!(search(&ch, "bec3"), oracle, epsilon = 1e-4);
}

#[test]
fn search_noisy_ising() {
    for eta in [0.2, 0.35, 0.5] {
        let params = ChannelParams {
            eta: Some(eta),
            ..Default::default()
        };
        let ch = induced("noisy_ising", params, &StrategyTable::identity(2, 2));
        let closed = analytic_noisy_ising_bound::<f64>(eta).unwrap();
        assert_abs_diff_eq!(search(&ch, "two_node"), closed, epsilon = 1e-4);
    }
}

#[test]
fn search_is_reproducible() {
    let ch = induced(
        "ising",
        ChannelParams::default(),
        &StrategyTable::identity(2, 2),
    );
    let qg = builtin_qgraph("ising4").unwrap();
    let opts = SearchOptions {
        restarts: 4,
        seed: 11,
        ..SearchOptions::default()
    };
    let a = search_policy(&ch, &qg, &opts).unwrap();
    let b = search_policy(&ch, &qg, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noisy_ising_root_solves_the_quadratic() {
    for k in 0..50 {
        let eta = 0.5 * k as f64 / 49.0;
        let a: f64 = noisy_ising_root(eta).unwrap();
        let lhs = (2.0 - 5.0 * eta + 2.0 * eta * eta) * a * a + (5.0 - 4.0 * eta) * eta * a
            - 2.0 * (1.0 - eta) * eta;
        assert!(lhs.abs() < 1e-12, "eta {eta}: residual {lhs}");
        let (qa, qb, qc) = noisy_ising_quadratic(eta);
        assert!((qa * a * a + qb * a + qc).abs() < 1e-12);
    }
    assert_abs_diff_eq!(
        noisy_ising_root::<f64>(0.5).unwrap(),
        1.0 / 3.0,
        epsilon = 1e-12
    );
    assert_eq!(noisy_ising_root::<f64>(0.0).unwrap(), 0.0);
    assert_abs_diff_eq!(
        analytic_noisy_ising_bound::<f64>(0.5).unwrap(),
        1.0 - h2(0.25),
        epsilon = 1e-12
    );
}

#[test]
fn trapdoor_sandwich_contains_the_capacity() {
    let ch = induced("trapdoor", ChannelParams::default(), &StrategyTable::xor());
    let r = sandwich_bounds(&ch, 2, 20).unwrap();
    assert!(
        r.lower <= golden_log() && golden_log() <= r.upper,
        "{} {}",
        r.lower,
        r.upper
    );
}

#[test]
fn ising_sandwich_lower_grows_with_horizon() {
    let ch = induced(
        "ising",
        ChannelParams::default(),
        &StrategyTable::identity(2, 2),
    );
    let mut prev = f64::NEG_INFINITY;
    for n in 1..=3 {
        let r = sandwich_bounds(&ch, n, 10).unwrap();
        assert!(r.lower <= r.upper + 1e-9);
        assert!(r.lower >= prev - 2e-3, "N={n}: {} after {prev}", r.lower);
        assert!(r.lower <= 0.5755 + 1e-3);
        prev = r.lower;
    }
}

#[test]
fn single_state_lower_bound_is_the_dmc_capacity() {
    let probs = vec![0.7, 0.2, 0.3, 0.8];
    let fsc = Fsc::<f64>::from_fn(2, 1, 2, |y, _, x, _| probs[y * 2 + x]).unwrap();
    let ch = induce_strategy_channel(&fsc, &StrategyTable::identity(2, 1)).unwrap();
    let r = sandwich_bounds(&ch, 1, 20).unwrap();
    let dmc = StateDmc::stateless(2, 2, probs.clone()).unwrap();
    let c = shannon_strategy_capacity(&dmc).unwrap().rate;
    assert_abs_diff_eq!(r.lower, c, epsilon = 1e-6);
    assert_abs_diff_eq!(r.upper, c, epsilon = 1e-6);
}

#[test]
fn shannon_strategies_match_the_memoryless_baseline() {
    let dmc = StateDmc::<f64>::zs();
    let with_state = shannon_strategy_capacity(&dmc).unwrap();
    let without = shannon_strategy_capacity_with(&dmc, &StrategyTable::identity(2, 2)).unwrap();
    assert_abs_diff_eq!(with_state.rate, 1.0 - h2(0.25), epsilon = 1e-6);
    assert_abs_diff_eq!(without.rate, with_state.rate, epsilon = 1e-6);
}

fn stochastic_rows(rows: usize, cols: usize, raw: &[f64]) -> Vec<f64> {
    raw.chunks(cols)
        .take(rows)
        .flat_map(|r| {
            let t: f64 = r.iter().sum();
            r.iter().map(move |v| v / t)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sandwich_is_ordered(raw in prop::collection::vec(0.01f64..1.0, 16)) {
        // kernel rows over (y, s⁺) for each (x, s)
        let rows = stochastic_rows(4, 4, &raw);
        let fsc = Fsc::<f64>::from_fn(2, 2, 2, |y, sn, x, s| rows[(x * 2 + s) * 4 + y * 2 + sn]).unwrap();
        let ch = induce_strategy_channel(&fsc, &StrategyTable::identity(2, 2)).unwrap();
        for n in 1..=2 {
            let r = sandwich_bounds(&ch, n, 6).unwrap();
            prop_assert!(r.lower <= r.upper + 1e-9);
            prop_assert!(r.lower.is_finite() && r.upper.is_finite());
        }
    }

    #[test]
    fn blahut_arimoto_is_bounded(raw in prop::collection::vec(0.01f64..1.0, 9)) {
        let w = stochastic_rows(3, 3, &raw);
        let r = blahut_arimoto(&w, 3, 3, 1e-9).unwrap();
        prop_assert!(r.rate >= -1e-12 && r.rate <= 3f64.log2() + 1e-12);
        prop_assert!((r.input_pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
