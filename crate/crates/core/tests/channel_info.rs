use approx::assert_abs_diff_eq;
use fsc_capacity::channel::{
    enumerate_strategies, induce_strategy_channel, is_strongly_connected, make_lookahead_fsc,
    ChannelFile, Fsc, StateDmc, StrategyTable,
};
use fsc_capacity::info::{
    conditional_mi, directed_info, directed_info_terms, entropy, unrolled_joint, Axis,
    CausalConditioning, JointTable, DEFAULT_ATOM_BUDGET,
};
use fsc_capacity::Error;
use proptest::prelude::*;

fn normalized_rows(raw: &[f64], width: usize) -> Vec<f64> {
    raw.chunks(width)
        .flat_map(|r| {
            let t: f64 = r.iter().sum();
            r.iter().map(move |v| v / t)
        })
        .collect()
}

/// A binary-input, two-state, binary-output channel from 16 positive weights.
fn random_fsc(raw: &[f64]) -> Fsc<f64> {
    let rows = normalized_rows(raw, 4);
    Fsc::from_fn(2, 2, 2, |y, sn, x, s| rows[(x * 2 + s) * 4 + y * 2 + sn]).unwrap()
}

fn random_ccd(nu: usize, ny: usize, n: usize, raw: &[f64]) -> CausalConditioning<f64> {
    let mut at = 0;
    let steps = (0..n)
        .map(|i| {
            let len = CausalConditioning::<f64>::histories(nu, ny, i) * nu;
            let step = normalized_rows(&raw[at..at + len], nu);
            at += len;
            step
        })
        .collect();
    CausalConditioning::new(nu, ny, steps).unwrap()
}

proptest! {
    #[test]
    fn induced_kernels_are_stochastic(raw in prop::collection::vec(0.01f64..1.0, 16)) {
        let fsc = random_fsc(&raw);
        let strategies = enumerate_strategies(2, 2).unwrap();
        let ch = induce_strategy_channel(&fsc, &strategies).unwrap();
        prop_assert_eq!(ch.nu(), 4);
        for u in 0..4 {
            for s in 0..2 {
                let mut total = 0.0;
                for y in 0..2 {
                    for sn in 0..2 {
                        let p = ch.prob(y, sn, u, s);
                        prop_assert_eq!(p, fsc.prob(y, sn, strategies.input(u, s), s));
                        total += p;
                    }
                }
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_file_round_trips(raw in prop::collection::vec(0.01f64..1.0, 16)) {
        let fsc = random_fsc(&raw);
        let text = serde_json::to_string(&ChannelFile::from_fsc(&fsc)).unwrap();
        let back: Fsc<f64> = ChannelFile::from_json(&text).unwrap().into_fsc().unwrap();
        prop_assert_eq!(back, fsc);
    }

    #[test]
    fn conservation_of_directed_information(
        raw in prop::collection::vec(0.01f64..1.0, 16),
        law in prop::collection::vec(0.01f64..1.0, 2 + 8 + 32),
        s0 in 0usize..2,
    ) {
        // I(U^N; Y^N) = I(U^N → Y^N) + Σ_i I(U_i; Y^{i-1} | U^{i-1})
        let n = 3;
        let ch = induce_strategy_channel(&random_fsc(&raw), &StrategyTable::identity(2, 2)).unwrap();
        let ccd = random_ccd(2, 2, n, &law);
        let joint = unrolled_joint(&ch, &ccd, s0, n, DEFAULT_ATOM_BUDGET).unwrap();
        let total: f64 = joint.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let terms = directed_info_terms(&joint, n).unwrap();
        let forward: f64 = terms.iter().sum();
        prop_assert_eq!(forward, directed_info(&ch, &ccd, s0, n).unwrap());
        let us: Vec<usize> = (0..n).collect();
        let ys: Vec<usize> = (n..2 * n).collect();
        let mutual = conditional_mi(&joint, &us, &ys, &[]).unwrap();
        let backward: f64 = (1..n)
            .map(|i| conditional_mi(&joint, &[i], &ys[..i], &us[..i]).unwrap())
            .sum();
        prop_assert!((mutual - forward - backward).abs() < 1e-12);
        prop_assert!(terms.iter().all(|&t| t >= -1e-12));
    }

    #[test]
    fn mutual_information_is_an_entropy_difference(raw in prop::collection::vec(0.0f64..1.0, 12)) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-3);
        let probs = normalized_rows(&raw, 12);
        let joint = JointTable::new(vec![Axis::new("a", 3), Axis::new("b", 4)], probs.clone()).unwrap();
        let ha = entropy(&joint.marginal(&[0]).unwrap()).unwrap();
        let hb = entropy(&joint.marginal(&[1]).unwrap()).unwrap();
        let hab = entropy(&probs).unwrap();
        let mi = conditional_mi(&joint, &[0], &[1], &[]).unwrap();
        prop_assert!((mi - (ha + hb - hab)).abs() < 1e-12);
        prop_assert!((mi - conditional_mi(&joint, &[1], &[0], &[]).unwrap()).abs() < 1e-12);
        prop_assert!(mi >= -1e-12 && mi <= ha.min(hb) + 1e-12);
    }
}

#[test]
fn bad_row_sum_names_the_slice() {
    // kernel[y][s⁺][x][s], every slice uniform over (y, s⁺)
    let mut kernel = vec![vec![vec![vec![0.25; 2]; 2]; 2]; 2];
    kernel[0][0][1][0] = 0.15;
    let file = ChannelFile {
        nx: 2,
        ns: 2,
        ny: 2,
        kernel,
        initial_state: None,
    };
    let err = file.into_fsc::<f64>().unwrap_err();
    assert!(
        matches!(err, Error::RowSumError { x: 1, s: 0, .. }),
        "{err:?}"
    );
}

#[test]
fn lookahead_reduction_is_stochastic_and_connected() {
    let dmc = StateDmc::<f64>::zs();
    for l in 0..=2 {
        let fsc = make_lookahead_fsc(&dmc, l).unwrap();
        assert_eq!(fsc.ns(), 2usize.pow(l as u32 + 1));
        for x in 0..fsc.nx() {
            for s in 0..fsc.ns() {
                let total: f64 = (0..fsc.ny()).map(|y| fsc.output_prob(y, x, s)).sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
        assert!(is_strongly_connected(&fsc));
    }
}
