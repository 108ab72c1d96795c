use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsc_capacity::channel::{
    builtin_channel, induce_strategy_channel, ChannelParams, InducedChannel, StrategyTable,
};
use fsc_capacity::dp::{bcjr_update, output_marginal, ActionMatrix, Belief};
use fsc_capacity::horizon::{analytic_noisy_ising_bound, noisy_ising_root, sandwich_bounds};
use fsc_capacity::info::{
    conditional_mi, directed_info, directed_info_terms, unrolled_joint, CausalConditioning,
    DEFAULT_ATOM_BUDGET,
};
use fsc_capacity::qgraph::fixtures::{self, Fixture};
use fsc_capacity::qgraph::{build_suq_chain, qgraph_bound};
use fsc_capacity_cli::report::ReportRow;
use fsc_capacity_cli::{run, Cli};

fn golden_log() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).log2()
}

/// Runs the command line and insists on exit code 0.
fn command(args: &[&str]) -> Result<(Vec<ReportRow>, Duration)> {
    let cli = Cli::try_parse_from(std::iter::once("fsccap").chain(args.iter().copied()))?;
    let start = Instant::now();
    let outcome = run(&cli, &mut std::io::sink())?;
    let elapsed = start.elapsed();
    ensure!(
        outcome.code == 0,
        "`{}` exited {}: {:?}",
        args.join(" "),
        outcome.code,
        outcome.rows
    );
    Ok((outcome.rows, elapsed))
}

/// `reproduce` for each target; returns the rows and the slowest runtime.
fn reproduce(targets: &[&str]) -> Result<(Vec<ReportRow>, Duration)> {
    let mut rows = Vec::new();
    let mut slowest = Duration::ZERO;
    for t in targets {
        let (r, d) = command(&["reproduce", t])?;
        rows.extend(r);
        slowest = slowest.max(d);
    }
    Ok((rows, slowest))
}

fn worst_error(rows: &[ReportRow]) -> f64 {
    rows.iter().filter_map(|r| r.abs_error).fold(0.0, f64::max)
}

fn criterion_1() -> Result<String> {
    let (rows, took) = reproduce(&["trapdoor-qgraph"])?;
    let fx = fixtures::trapdoor::<f64>()?;
    let r = qgraph_bound(&fx.channel, &fx.graph, &fx.policy)?;
    ensure!((r.rate - golden_log()).abs() < 1e-9, "rate {}", r.rate);
    ensure!(r.bcjr_violation < 1e-9, "violation {:e}", r.bcjr_violation);
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!(
        "error {:.1e}, violation {:.1e}, {took:.2?}",
        worst_error(&rows),
        r.bcjr_violation
    ))
}

fn criterion_2() -> Result<String> {
    let (fixed, _) = reproduce(&["ising-qgraph-0.2", "ising-qgraph-0.45", "ising-qgraph-0.7"])?;
    let (search, took) = reproduce(&["ising-search"])?;
    ensure!(took < Duration::from_secs(30), "search took {took:?}");
    Ok(format!(
        "closed form error {:.1e}, search {:.7} error {:.1e}, {took:.2?}",
        worst_error(&fixed),
        search[0].value,
        worst_error(&search)
    ))
}

fn criterion_3() -> Result<String> {
    let (fixed, _) = reproduce(&["bec-qgraph"])?;
    let (search, _) = reproduce(&["bec-search"])?;
    Ok(format!(
        "H(0.4)/2.4 error {:.1e}, search {:.7} error {:.1e}",
        worst_error(&fixed),
        search[0].value,
        worst_error(&search)
    ))
}

fn criterion_4() -> Result<String> {
    let (rows, _) = reproduce(&["zs-la1", "zs-la1-alt"])?;
    ensure!(
        (rows[0].value - rows[1].value).abs() < 1e-9,
        "solutions differ"
    );
    let flags = rows[0].flags.join(",");
    Ok(format!(
        "{:.7}, error {:.1e}, flags [{flags}]",
        rows[0].value,
        worst_error(&rows)
    ))
}

fn criterion_5() -> Result<String> {
    let (rows, _) = reproduce(&[
        "noisy-ising-0.1",
        "noisy-ising-0.2",
        "noisy-ising-0.3",
        "noisy-ising-0.4",
        "noisy-ising-0.5",
        "noisy-ising-0.5-value",
        "noisy-ising-closed-0.5",
    ])?;
    Ok(format!("worst error {:.1e}", worst_error(&rows)))
}

fn criterion_6() -> Result<String> {
    let (rows, _) = reproduce(&["shannon-zs", "shannon-zs-no-si"])?;
    ensure!(
        (rows[0].value - rows[1].value).abs() < 1e-6,
        "with and without state differ"
    );
    Ok(format!(
        "{:.7}, error {:.1e}",
        rows[0].value,
        worst_error(&rows)
    ))
}

fn criterion_7() -> Result<String> {
    let (trapdoor, took) = reproduce(&["trapdoor-dp"])?;
    ensure!(took < Duration::from_secs(300), "trapdoor took {took:?}");
    let (others, _) = reproduce(&["ising-dp", "noisy-ising-dp"])?;
    Ok(format!(
        "trapdoor {:.5} in {took:.0?}, Ising {:.5}, noisy Ising {:.5}",
        trapdoor[0].value, others[0].value, others[1].value
    ))
}

fn criterion_8() -> Result<String> {
    let (rows, _) = reproduce(&["trapdoor-sandwich"])?;
    let (lo, hi) = (rows[0].value, rows[1].value);
    ensure!(lo <= golden_log() && golden_log() <= hi, "[{lo}, {hi}]");
    let note = if rows[0].flags.is_empty() {
        ""
    } else {
        ", upper flagged"
    };
    Ok(format!("{lo:.5} <= log phi <= {hi:.5}{note}"))
}

fn induced(
    name: &str,
    params: ChannelParams,
    strategies: &StrategyTable,
) -> Result<InducedChannel<f64>> {
    Ok(induce_strategy_channel(
        &builtin_channel(name, &params)?,
        strategies,
    )?)
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

fn random_channel(
    rng: &mut ChaCha8Rng,
    nu: usize,
    ns: usize,
    ny: usize,
) -> Result<InducedChannel<f64>> {
    let mut kernel = vec![0.0; ny * ns * nu * ns];
    for u in 0..nu {
        for s in 0..ns {
            for (k, p) in simplex(rng, ny * ns).into_iter().enumerate() {
                kernel[(k * nu + u) * ns + s] = p;
            }
        }
    }
    Ok(InducedChannel::new(nu, ns, ny, kernel)?)
}

fn bcjr_cases(rng: &mut ChaCha8Rng, cases: usize) -> Result<()> {
    for case in 0..cases {
        let (nu, ns, ny) = (
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(2..=3),
        );
        let ch = random_channel(rng, nu, ns, ny)?;
        let beta = Belief::new(nu, ns, simplex(rng, nu * ns))?;
        let a = ActionMatrix::new(nu, (0..nu).flat_map(|_| simplex(rng, nu)).collect())?;
        let py = output_marginal(&beta, &a, &ch)?;
        ensure!(
            (py.iter().sum::<f64>() - 1.0).abs() < 1e-10,
            "case {case}: P(y) not normalized"
        );
        let mut mixed = vec![0.0; nu * ns];
        for (y, &p) in py.iter().enumerate() {
            let post = bcjr_update(&beta, &a, y, &ch)?;
            ensure!(
                (post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10,
                "case {case}: posterior not normalized"
            );
            for (m, &v) in mixed.iter_mut().zip(post.probs()) {
                *m += p * v;
            }
        }
        for un in 0..nu {
            for sn in 0..ns {
                let mut direct = 0.0;
                for u in 0..nu {
                    for s in 0..ns {
                        direct += beta.prob(u, s) * a.prob(u, un) * ch.state_prob(sn, un, s);
                    }
                }
                ensure!(
                    (mixed[un * ns + sn] - direct).abs() < 1e-10,
                    "case {case}: total probability"
                );
            }
        }
    }
    Ok(())
}

fn all_fixtures() -> Result<Vec<(String, Fixture<f64>)>> {
    let mut out = vec![("trapdoor".to_string(), fixtures::trapdoor()?)];
    for a in [0.2, 0.45, 0.7] {
        out.push((format!("ising({a})"), fixtures::ising(a)?));
    }
    out.push(("bec(0.5, 0.4)".into(), fixtures::constrained_bec(0.5, 0.4)?));
    out.push(("zs(4/7, 0)".into(), fixtures::zs_lookahead(4.0 / 7.0, 0.0)?));
    out.push(("zs(3/7, 1)".into(), fixtures::zs_lookahead(3.0 / 7.0, 1.0)?));
    for eta in [0.1, 0.2, 0.3, 0.4, 0.5] {
        out.push((
            format!("noisy_ising({eta})"),
            fixtures::noisy_ising(eta, noisy_ising_root(eta)?)?,
        ));
    }
    Ok(out)
}

fn chain_rule_cases(rng: &mut ChaCha8Rng, cases: usize) -> Result<()> {
    let n = 3;
    for case in 0..cases {
        let ch = random_channel(rng, 2, 2, 2)?;
        let steps = (0..n)
            .map(|i| {
                let rows = CausalConditioning::<f64>::histories(2, 2, i);
                (0..rows).flat_map(|_| simplex(rng, 2)).collect()
            })
            .collect();
        let ccd = CausalConditioning::new(2, 2, steps)?;
        let s0 = rng.gen_range(0..2);
        let joint = unrolled_joint(&ch, &ccd, s0, n, DEFAULT_ATOM_BUDGET)?;
        let terms = directed_info_terms(&joint, n)?;
        let forward: f64 = terms.iter().sum();
        ensure!(
            forward == directed_info(&ch, &ccd, s0, n)?,
            "case {case}: sum of terms"
        );
        let us: Vec<usize> = (0..n).collect();
        let ys: Vec<usize> = (n..2 * n).collect();
        let mutual = conditional_mi(&joint, &us, &ys, &[])?;
        let mut backward = 0.0;
        for i in 1..n {
            backward += conditional_mi(&joint, &[i], &ys[..i], &us[..i])?;
        }
        ensure!(
            (mutual - forward - backward).abs() < 1e-12,
            "case {case}: conservation law"
        );
    }
    Ok(())
}

fn sandwich_channels() -> Result<Vec<(&'static str, InducedChannel<f64>)>> {
    let eta = ChannelParams {
        eta: Some(0.3),
        ..Default::default()
    };
    let eps = ChannelParams {
        eps: Some(0.5),
        ..Default::default()
    };
    Ok(vec![
        (
            "trapdoor",
            induced("trapdoor", ChannelParams::default(), &StrategyTable::xor())?,
        ),
        (
            "ising",
            induced(
                "ising",
                ChannelParams::default(),
                &StrategyTable::identity(2, 2),
            )?,
        ),
        (
            "noisy_ising",
            induced("noisy_ising", eta, &StrategyTable::identity(2, 2))?,
        ),
        (
            "constrained_bec",
            induced("constrained_bec", eps, &StrategyTable::named("bec", 2, 2)?)?,
        ),
    ])
}

fn criterion_9() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    bcjr_cases(&mut rng, 1000)?;
    let mut worst = 0.0f64;
    let fixtures = all_fixtures()?;
    for (name, fx) in &fixtures {
        let chain = build_suq_chain(&fx.channel, &fx.graph, &fx.policy)?;
        let residual = chain.stationarity_residual().context("no stationary law")?;
        ensure!(residual < 1e-10, "{name}: stationary residual {residual:e}");
        worst = worst.max(residual);
    }
    chain_rule_cases(&mut rng, 200)?;
    let channels = sandwich_channels()?;
    for (name, ch) in &channels {
        for n in 1..=2 {
            let r = sandwich_bounds(ch, n, 8)?;
            ensure!(
                r.lower <= r.upper + 1e-9,
                "{name} N={n}: [{}, {}]",
                r.lower,
                r.upper
            );
        }
    }
    Ok(format!(
        "1000 BCJR cases, {} fixtures (residual {worst:.1e}), 200 chain-rule cases, {} sandwiches",
        fixtures.len(),
        channels.len()
    ))
}

fn criterion_10() -> Result<String> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("sweep.csv");
    let path_str = path.to_str().context("temp path")?;
    command(&[
        "sweep-noisy-ising",
        "--from",
        "0",
        "--to",
        "0.5",
        "--step",
        "0.05",
        "--csv",
        path_str,
    ])?;
    let mut reader = csv::Reader::from_path(&path)?;
    ensure!(
        reader.headers()? == vec!["eta", "R_Analytic", "R_DP", "R_4node"],
        "header"
    );
    let (mut points, mut gap) = (0, f64::INFINITY);
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> { Ok(record[i].parse()?) };
        let (eta, analytic, dp) = (num(0)?, num(1)?, num(2)?);
        let exact = analytic_noisy_ising_bound::<f64>(eta)?;
        ensure!(
            (analytic - exact).abs() < 1e-6,
            "eta {eta}: R_Analytic {analytic} vs {exact}"
        );
        if eta >= 0.15 - 1e-9 {
            ensure!(
                dp >= analytic - 5e-3,
                "eta {eta}: R_DP {dp} below R_Analytic {analytic}"
            );
            gap = gap.min(dp - analytic);
        }
        points += 1;
    }
    ensure!(points == 11, "{points} grid points");
    Ok(format!(
        "{points} points, min R_DP - R_Analytic on [0.15, 0.5] = {gap:.2e}"
    ))
}

type Criterion = (&'static str, fn() -> Result<String>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("trapdoor Q-graph", criterion_1),
        ("Ising Q-graph and search", criterion_2),
        ("constrained BEC", criterion_3),
        ("ZS look-ahead", criterion_4),
        ("noisy Ising closed form", criterion_5),
        ("Shannon strategies", criterion_6),
        ("value iteration", criterion_7),
        ("finite-horizon sandwich", criterion_8),
        ("property suites", criterion_9),
        ("noisy Ising sweep", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {e:#}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
