//! The `fsccap` command line: capacity bounds for finite-state channels with
//! causal state at the encoder, plus named reproductions of the reference
//! values.

pub mod inputs;
pub mod registry;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fsc_capacity::dp::{value_iteration_with, Discretization, DpOptions};
use fsc_capacity::horizon::{
    analytic_noisy_ising_bound, sandwich_bounds_with, shannon_strategy_capacity_with,
    SandwichOptions,
};
use fsc_capacity::qgraph::{
    qgraph_bound, search_policy, SearchOptions, ANALYTIC_BCJR_TOL, SEARCH_BCJR_TOL,
};

use inputs::{load_graph, load_policy, ChannelArgs};
use registry::{Settings, TARGETS};
use report::{print_table, rows_csv, sig9, write_csv, ReportRow};

#[derive(Debug, Parser)]
#[command(
    name = "fsccap",
    version,
    about = "Feedback-capacity bounds for finite-state channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Also write the report as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Seed for randomized procedures.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiscretizationArg {
    Nearest,
    Interpolate,
}

impl From<DiscretizationArg> for Discretization {
    fn from(d: DiscretizationArg) -> Self {
        match d {
            DiscretizationArg::Nearest => Discretization::Nearest,
            DiscretizationArg::Interpolate => Discretization::Interpolate,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Q-graph lower bound for a given policy.
    BoundQgraph {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Built-in graph (two_node, trapdoor4, ising4, bec3) or JSON file.
        #[arg(long)]
        graph: Option<String>,
        /// Policy JSON `{"probs": [q][u][u⁺]}`.
        #[arg(long)]
        policy: PathBuf,
        /// BCJR-invariance tolerance.
        #[arg(long, default_value_t = ANALYTIC_BCJR_TOL)]
        tol: f64,
    },
    /// Q-graph lower bound maximized over BCJR-invariant policies.
    SearchQgraph {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        graph: Option<String>,
        /// Write the best policy here as JSON.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = SEARCH_BCJR_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Value iteration on the belief simplex.
    BoundDp {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long = "grid-res", default_value_t = 64)]
        grid_res: usize,
        #[arg(long = "action-res", default_value_t = 8)]
        action_res: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = DiscretizationArg::Interpolate)]
        discretization: DiscretizationArg,
    },
    /// Finite-horizon lower and upper bounds.
    BoundFiniteN {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long = "N", default_value_t = 2)]
        n: usize,
        /// Resolution of each input-law simplex grid.
        #[arg(long = "grid-res", default_value_t = 20)]
        grid_res: usize,
    },
    /// Single-letter capacity with Shannon strategies and i.i.d. state.
    CapacityShannon {
        /// `zs` or a JSON file `{"nx", "ns", "ny", "probs": [y][x][s], "state_pmf"}`.
        #[arg(long)]
        channel: String,
        /// Strategy family; `identity` ignores the state.
        #[arg(long = "strategy-fn", default_value = "all")]
        strategy_fn: String,
        #[arg(long = "card-u")]
        card_u: Option<usize>,
    },
    /// Closed-form, value-iteration and 4-node rates for noisy Ising over eta.
    SweepNoisyIsing {
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 0.5)]
        to: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long = "grid-res", default_value_t = 32)]
        grid_res: usize,
        #[arg(long = "action-res", default_value_t = 8)]
        action_res: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Recompute a reference value (`all` runs every target).
    Reproduce {
        target: Option<String>,
        /// List the targets.
        #[arg(long)]
        list: bool,
    },
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rows: Vec<ReportRow>,
    /// 0, or 2 when a row carries a failing flag.
    pub code: i32,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(o) => o.code,
        Err(e) => {
            let _ = writeln!(err, "fsccap: {e:#}");
            1
        }
    }
}

/// Runs one command, printing its table to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome> {
    if let Command::Reproduce { target, list } = &cli.command {
        if *list || target.is_none() {
            for t in TARGETS {
                let tol = t
                    .tolerance()
                    .map(|v| format!("{v:e}"))
                    .unwrap_or_else(|| "bracket".into());
                writeln!(out, "{:<24} {:<9} {}", t.name, tol, t.about)?;
            }
            return Ok(Outcome {
                rows: Vec::new(),
                code: 0,
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()?;
    let rows = pool.install(|| dispatch(cli))?;
    if !rows.is_empty() {
        print_table(out, &rows)?;
        if let (Some(path), false) = (
            &cli.csv,
            matches!(cli.command, Command::SweepNoisyIsing { .. }),
        ) {
            rows_csv(path, &rows)?;
        }
    }
    let code = if rows.iter().any(ReportRow::is_failing) {
        2
    } else {
        0
    };
    Ok(Outcome { rows, code })
}

fn graph_for(channel: &ChannelArgs, graph: &Option<String>) -> Result<String> {
    match (graph, channel.default_graph()) {
        (Some(g), _) => Ok(g.clone()),
        (None, Some(g)) => Ok(g.into()),
        (None, None) => bail!("--graph is required for channel `{}`", channel.channel),
    }
}

fn dispatch(cli: &Cli) -> Result<Vec<ReportRow>> {
    match &cli.command {
        Command::BoundQgraph {
            channel,
            graph,
            policy,
            tol,
        } => {
            let ch = channel.induced()?;
            let qg = load_graph(&graph_for(channel, graph)?)?;
            let pol = load_policy(policy)?;
            let r = qgraph_bound(&ch, &qg, &pol)?;
            let mut rows = vec![ReportRow::new("rate", r.rate)
                .flag_if(r.bcjr_violation > *tol, "BCJR-infeasible")
                .flag_if(!r.aperiodic, "periodic")];
            rows.push(ReportRow::new("bcjr_violation", r.bcjr_violation));
            for (q, (w, v)) in r.node_weights.iter().zip(&r.per_node_rewards).enumerate() {
                rows.push(ReportRow::new(format!("pi(q={q})"), *w));
                rows.push(ReportRow::new(format!("reward(q={q})"), *v));
            }
            Ok(rows)
        }
        Command::SearchQgraph {
            channel,
            graph,
            policy,
            tol,
            restarts,
        } => {
            let ch = channel.induced()?;
            let qg = load_graph(&graph_for(channel, graph)?)?;
            let opts = SearchOptions {
                restarts: *restarts,
                seed: cli.seed,
                tol: *tol,
                ..SearchOptions::default()
            };
            let found = search_policy(&ch, &qg, &opts)?;
            if let Some(path) = policy {
                std::fs::write(path, found.policy.to_json())
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(vec![
                ReportRow::new("rate", found.result.rate)
                    .flag_if(!found.feasible, "BCJR-infeasible")
                    .flag_if(!found.result.aperiodic, "periodic"),
                ReportRow::new("bcjr_violation", found.result.bcjr_violation),
            ])
        }
        Command::BoundDp {
            channel,
            grid_res,
            action_res,
            tol,
            max_iter,
            discretization,
        } => {
            let ch = channel.induced()?;
            let opts = DpOptions {
                grid_res: *grid_res,
                action_res: *action_res,
                tol: *tol,
                max_iter: *max_iter,
                discretization: (*discretization).into(),
                ..DpOptions::default()
            };
            let sol = value_iteration_with(&ch, &opts)?;
            Ok(vec![
                ReportRow::new("rate", sol.rate).flag_if(!sol.converged, "not-converged"),
                ReportRow::new("lower", sol.lower),
                ReportRow::new("upper", sol.upper),
                ReportRow::new("sweeps", sol.iterations as f64),
            ])
        }
        Command::BoundFiniteN {
            channel,
            n,
            grid_res,
        } => {
            let ch = channel.induced()?;
            let opts = SandwichOptions {
                grid: *grid_res,
                ..SandwichOptions::default()
            };
            let r = sandwich_bounds_with(&ch, *n, &opts)?;
            Ok(vec![
                ReportRow::new("lower", r.lower),
                ReportRow::new("upper", r.upper).flag_if(!r.global_flag, "non-global-certificate"),
            ])
        }
        Command::CapacityShannon {
            channel,
            strategy_fn,
            card_u,
        } => {
            let mut args = ChannelArgs::named(channel);
            args.strategy_fn = Some(strategy_fn.clone());
            args.card_u = *card_u;
            let dmc = args.state_dmc()?;
            let strategies = args.strategies(dmc.nx, dmc.ns)?;
            let r = shannon_strategy_capacity_with(&dmc, &strategies)?;
            let mut rows = vec![ReportRow::new("rate", r.rate)];
            for (u, p) in r.input_pmf.iter().enumerate() {
                rows.push(ReportRow::new(format!("P(u={u})"), *p));
            }
            Ok(rows)
        }
        Command::SweepNoisyIsing {
            from,
            to,
            step,
            grid_res,
            action_res,
            tol,
        } => sweep(cli, *from, *to, *step, *grid_res, *action_res, *tol),
        Command::Reproduce { target, .. } => {
            let settings = Settings { seed: cli.seed };
            let name = target.as_deref().unwrap_or_default();
            let selected: Vec<_> = if name == "all" {
                TARGETS.iter().collect()
            } else {
                vec![registry::find(name)
                    .with_context(|| format!("unknown target `{name}`; see --list"))?]
            };
            let mut rows = Vec::new();
            for t in selected {
                rows.extend(t.run(&settings)?);
            }
            Ok(rows)
        }
    }
}

/// Grid `from, from + step, …` up to `to`, snapped to the step.
fn eta_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || to < from || from < 0.0 || to > 0.5 {
        bail!("need 0 <= from <= to <= 0.5 and step > 0");
    }
    let count = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| from + k as f64 * step).collect())
}

fn sweep(
    cli: &Cli,
    from: f64,
    to: f64,
    step: f64,
    grid_res: usize,
    action_res: usize,
    tol: f64,
) -> Result<Vec<ReportRow>> {
    let settings = Settings { seed: cli.seed };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for eta in eta_grid(from, to, step)? {
        let mut args = ChannelArgs::named("noisy_ising");
        args.eta = Some(eta);
        let ch = args.induced()?;
        let analytic = analytic_noisy_ising_bound::<f64>(eta)?;
        let opts = DpOptions {
            grid_res,
            action_res,
            tol,
            ..DpOptions::default()
        };
        let dp = value_iteration_with(&ch, &opts)?;
        let four = registry::search("noisy_ising", Some(eta), "ising4", &settings)?;
        records.push(vec![
            sig9(eta),
            sig9(analytic),
            sig9(dp.rate),
            sig9(four.value),
        ]);
        rows.push(ReportRow::new(format!("eta={eta:.4} R_Analytic"), analytic));
        rows.push(
            ReportRow::new(format!("eta={eta:.4} R_DP"), dp.rate)
                .flag_if(!dp.converged, "not-converged"),
        );
        let mut r4 = ReportRow::new(format!("eta={eta:.4} R_4node"), four.value);
        r4.flags = four.flags;
        rows.push(r4);
    }
    if let Some(path) = &cli.csv {
        write_csv(path, &["eta", "R_Analytic", "R_DP", "R_4node"], &records)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_grid_hits_the_end() {
        let g = eta_grid(0.0, 0.5, 0.05).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 0.5).abs() < 1e-12);
        assert!(eta_grid(0.0, 0.6, 0.1).is_err());
    }

    #[test]
    fn command_line_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
