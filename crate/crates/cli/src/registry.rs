use anyhow::Result;

use fsc_capacity::channel::{induce_strategy_channel, StateDmc, StrategyTable};
use fsc_capacity::dp::{value_iteration_with, DpOptions};
use fsc_capacity::horizon::{
    analytic_noisy_ising_bound, noisy_ising_root, sandwich_bounds, shannon_strategy_capacity,
    shannon_strategy_capacity_with,
};
use fsc_capacity::qgraph::fixtures::{self, Fixture};
use fsc_capacity::qgraph::{qgraph_bound, search_policy, SearchOptions, ANALYTIC_BCJR_TOL};
use fsc_capacity::{h2, Fsc64};

use crate::inputs::ChannelArgs;
use crate::report::ReportRow;

/// Knobs shared by all targets.
#[derive(Debug, Clone, Copy, Default)]
pub struct Settings {
    pub seed: u64,
}

/// How a computed value is judged against the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// `|value − reference| < tol`.
    Within(f64),
    /// `lower ≤ reference ≤ upper`.
    Brackets,
}

/// What a target computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub value: f64,
    /// `(lower, upper)` for bracketing targets.
    pub bracket: Option<(f64, f64)>,
    pub flags: Vec<String>,
}

impl Measured {
    fn value(value: f64) -> Self {
        Self {
            value,
            bracket: None,
            flags: Vec::new(),
        }
    }

    fn flag_if(mut self, cond: bool, flag: &str) -> Self {
        if cond {
            self.flags.push(flag.into());
        }
        self
    }
}

/// A named reproduction: `compute(param)` checked against `reference(param)`.
pub struct Target {
    pub name: &'static str,
    pub about: &'static str,
    pub param: f64,
    pub check: Check,
    pub reference: fn(f64) -> f64,
    pub compute: fn(f64, &Settings) -> Result<Measured>,
}

impl Target {
    /// Runs the target and turns the outcome into report rows.
    pub fn run(&self, settings: &Settings) -> Result<Vec<ReportRow>> {
        let m = (self.compute)(self.param, settings)?;
        let reference = (self.reference)(self.param);
        let mut row = ReportRow::new(self.name, m.value).with_reference(reference);
        row.flags = m.flags.clone();
        let mut rows = Vec::new();
        match (self.check, m.bracket) {
            (Check::Within(tol), _) => {
                let miss = row.abs_error.is_some_and(|e| e.is_nan() || e >= tol);
                rows.push(row.flag_if(miss, "out-of-tolerance"));
            }
            (Check::Brackets, Some((lo, hi))) => {
                row.value = lo;
                row.label = format!("{} lower", self.name);
                row.abs_error = Some((lo - reference).max(reference - hi).max(0.0));
                let miss = !(lo <= reference && reference <= hi);
                rows.push(row.flag_if(miss, "bracket-missed"));
                let mut upper =
                    ReportRow::new(format!("{} upper", self.name), hi).with_reference(reference);
                upper.abs_error = rows[0].abs_error;
                rows.push(upper);
            }
            (Check::Brackets, None) => unreachable!("bracketing target without a bracket"),
        }
        Ok(rows)
    }

    pub fn tolerance(&self) -> Option<f64> {
        match self.check {
            Check::Within(t) => Some(t),
            Check::Brackets => None,
        }
    }
}

const fn target(
    name: &'static str,
    about: &'static str,
    param: f64,
    check: Check,
    reference: fn(f64) -> f64,
    compute: fn(f64, &Settings) -> Result<Measured>,
) -> Target {
    Target {
        name,
        about,
        param,
        check,
        reference,
        compute,
    }
}

/// Every reproduction target.
#[rustfmt::skip]
pub static TARGETS: &[Target] = &[
    target("trapdoor-qgraph", "trapdoor, 4-node graph, golden-ratio policy", 0.0, Check::Within(1e-9), golden_log, trapdoor_qgraph),
    target("trapdoor-search", "trapdoor, 4-node graph, searched policy", 0.0, Check::Within(1e-4), golden_log, |_, s| search("trapdoor", None, "trapdoor4", s)),
    target("ising-qgraph-0.2", "Ising, 4-node graph, policy at a = 0.2", 0.2, Check::Within(1e-10), ising_closed_form, ising_qgraph),
    target("ising-qgraph-0.45", "Ising, 4-node graph, policy at a = 0.45", 0.45, Check::Within(1e-10), ising_closed_form, ising_qgraph),
    target("ising-qgraph-0.7", "Ising, 4-node graph, policy at a = 0.7", 0.7, Check::Within(1e-10), ising_closed_form, ising_qgraph),
    target("ising-search", "Ising, 4-node graph, searched policy vs 1-D scan", 0.0, Check::Within(1e-4), |_| ising_scan(), |_, s| search("ising", None, "ising4", s)),
    target("bec-qgraph", "constrained BEC at eps = 0.5, 3-node graph, p = 0.4", 0.4, Check::Within(1e-9), |p| h2(p) / (2.0 + p), bec_qgraph),
    target("bec-search", "constrained BEC at eps = 0.5, searched policy vs 1-D scan", 0.0, Check::Within(1e-4), |_| bec_scan(), |_, s| search("constrained_bec", Some(0.5), "bec3", s)),
    target("zs-la1", "ZS with one-step look-ahead, alpha = 4/7, beta = 0", 0.0, Check::Within(1e-9), |_| zs_la1_value(), zs_la1),
    target("zs-la1-alt", "ZS with one-step look-ahead, alpha = 3/7, beta = 1", 1.0, Check::Within(1e-9), |_| zs_la1_value(), zs_la1),
    target("noisy-ising-0.1", "noisy Ising at eta = 0.1, 2-node graph vs closed form", 0.1, Check::Within(1e-6), noisy_closed_form, noisy_qgraph),
    target("noisy-ising-0.2", "noisy Ising at eta = 0.2, 2-node graph vs closed form", 0.2, Check::Within(1e-6), noisy_closed_form, noisy_qgraph),
    target("noisy-ising-0.3", "noisy Ising at eta = 0.3, 2-node graph vs closed form", 0.3, Check::Within(1e-6), noisy_closed_form, noisy_qgraph),
    target("noisy-ising-0.4", "noisy Ising at eta = 0.4, 2-node graph vs closed form", 0.4, Check::Within(1e-6), noisy_closed_form, noisy_qgraph),
    target("noisy-ising-0.5", "noisy Ising at eta = 0.5, 2-node graph vs closed form", 0.5, Check::Within(1e-6), noisy_closed_form, noisy_qgraph),
    target("noisy-ising-0.5-value", "noisy Ising at eta = 0.5, 2-node graph vs 1 - H(1/4)", 0.5, Check::Within(1e-6), |_| one_minus_h_quarter(), noisy_qgraph),
    target("noisy-ising-closed-0.5", "noisy Ising closed form at eta = 0.5 vs 1 - H(1/4)", 0.5, Check::Within(1e-6), |_| one_minus_h_quarter(), |eta, _| Ok(Measured::value(analytic_noisy_ising_bound::<f64>(eta)?))),
    target("noisy-ising-search-0.2", "noisy Ising at eta = 0.2, searched 2-node policy", 0.2, Check::Within(1e-4), noisy_closed_form, |eta, s| search("noisy_ising", Some(eta), "two_node", s)),
    target("noisy-ising-search-0.35", "noisy Ising at eta = 0.35, searched 2-node policy", 0.35, Check::Within(1e-4), noisy_closed_form, |eta, s| search("noisy_ising", Some(eta), "two_node", s)),
    target("noisy-ising-search-0.5", "noisy Ising at eta = 0.5, searched 2-node policy", 0.5, Check::Within(1e-4), noisy_closed_form, |eta, s| search("noisy_ising", Some(eta), "two_node", s)),
    target("shannon-zs", "ZS with i.i.d. state, Shannon strategies", 0.0, Check::Within(1e-6), |_| one_minus_h_quarter(), |_, _| Ok(Measured::value(shannon_strategy_capacity(&StateDmc::<f64>::zs())?.rate))),
    target("shannon-zs-no-si", "ZS with i.i.d. state, inputs ignoring the state", 0.0, Check::Within(1e-6), |_| one_minus_h_quarter(), |_, _| Ok(Measured::value(shannon_strategy_capacity_with(&StateDmc::<f64>::zs(), &StrategyTable::identity(2, 2))?.rate))),
    target("trapdoor-dp", "trapdoor, value iteration at grid 128", 128.0, Check::Within(2e-3), golden_log, |r, _| dp("trapdoor", None, r)),
    target("ising-dp", "Ising, value iteration at grid 64", 64.0, Check::Within(2e-3), |_| ising_scan(), |r, _| dp("ising", None, r)),
    target("noisy-ising-dp", "noisy Ising at eta = 0.5, value iteration at grid 64", 64.0, Check::Within(2e-3), |_| one_minus_h_quarter(), |r, _| dp("noisy_ising", Some(0.5), r)),
    target("trapdoor-sandwich", "trapdoor, N = 2 finite-horizon bracket", 2.0, Check::Brackets, golden_log, trapdoor_sandwich),
];

pub fn find(name: &str) -> Option<&'static Target> {
    TARGETS.iter().find(|t| t.name == name)
}

pub fn golden_log(_: f64) -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).log2()
}

fn one_minus_h_quarter() -> f64 {
    1.0 - h2(0.25)
}

fn zs_la1_value() -> f64 {
    7.0 / 16.0 * 7f64.log2() - 1.0
}

fn ising_closed_form(a: f64) -> f64 {
    2.0 * h2(a) / (3.0 + a)
}

fn noisy_closed_form(eta: f64) -> f64 {
    analytic_noisy_ising_bound::<f64>(eta).expect("eta in range")
}

/// Maximum of `f` over `[lo, hi]` on a grid of step `1e-6`.
pub fn scan_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let steps = ((hi - lo) / 1e-6).round() as usize;
    (0..=steps)
        .map(|k| f(lo + k as f64 * 1e-6))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn ising_scan() -> f64 {
    scan_max(0.0, 1.0, ising_closed_form)
}

pub fn bec_scan() -> f64 {
    scan_max(0.0, 0.5, |p| h2(p) / (2.0 + p))
}

fn fixture_bound(fx: Fixture<f64>) -> Result<Measured> {
    let r = qgraph_bound(&fx.channel, &fx.graph, &fx.policy)?;
    Ok(Measured::value(r.rate)
        .flag_if(r.bcjr_violation > ANALYTIC_BCJR_TOL, "BCJR-infeasible")
        .flag_if(!r.aperiodic, "periodic"))
}

fn trapdoor_qgraph(_: f64, _: &Settings) -> Result<Measured> {
    fixture_bound(fixtures::trapdoor()?)
}

fn ising_qgraph(a: f64, _: &Settings) -> Result<Measured> {
    fixture_bound(fixtures::ising(a)?)
}

fn bec_qgraph(p: f64, _: &Settings) -> Result<Measured> {
    fixture_bound(fixtures::constrained_bec(0.5, p)?)
}

/// `which = 0` is the solution `(4/7, 0)`, otherwise `(3/7, 1)`.
fn zs_la1(which: f64, _: &Settings) -> Result<Measured> {
    let (alpha, beta) = if which == 0.0 {
        (4.0 / 7.0, 0.0)
    } else {
        (3.0 / 7.0, 1.0)
    };
    fixture_bound(fixtures::zs_lookahead(alpha, beta)?)
}

fn noisy_qgraph(eta: f64, _: &Settings) -> Result<Measured> {
    fixture_bound(fixtures::noisy_ising(eta, noisy_ising_root(eta)?)?)
}

fn channel(name: &str, param: Option<f64>) -> ChannelArgs {
    let mut args = ChannelArgs::named(name);
    match name {
        "noisy_ising" => args.eta = param,
        "constrained_bec" => args.eps = param,
        _ => {}
    }
    args
}

pub fn search(
    name: &str,
    param: Option<f64>,
    graph: &str,
    settings: &Settings,
) -> Result<Measured> {
    let ch = channel(name, param).induced()?;
    let opts = SearchOptions {
        seed: settings.seed,
        ..SearchOptions::default()
    };
    let out = search_policy(&ch, &crate::inputs::load_graph(graph)?, &opts)?;
    Ok(Measured::value(out.result.rate)
        .flag_if(!out.feasible, "BCJR-infeasible")
        .flag_if(!out.result.aperiodic, "periodic"))
}

fn dp(name: &str, param: Option<f64>, grid_res: f64) -> Result<Measured> {
    let ch = channel(name, param).induced()?;
    let opts = DpOptions {
        grid_res: grid_res as usize,
        ..DpOptions::default()
    };
    let sol = value_iteration_with(&ch, &opts)?;
    Ok(Measured::value(sol.rate).flag_if(!sol.converged, "not-converged"))
}

fn trapdoor_sandwich(n: f64, _: &Settings) -> Result<Measured> {
    let fsc: Fsc64 = channel("trapdoor", None).load()?;
    let ch = induce_strategy_channel(&fsc, &StrategyTable::xor())?;
    let r = sandwich_bounds(&ch, n as usize, 20)?;
    Ok(Measured {
        value: r.lower,
        bracket: Some((r.lower, r.upper)),
        flags: if r.global_flag {
            vec![]
        } else {
            vec!["non-global-certificate".into()]
        },
    })
}
