use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use fsc_capacity::channel::{
    builtin_channel, induce_strategy_channel, ChannelFile, ChannelParams, Fsc, InducedChannel,
    StateDmc, StrategyTable, BUILTIN_CHANNELS,
};
use fsc_capacity::qgraph::{builtin_qgraph, Policy, QGraph, QGraphFile};

/// Channel selection shared by the subcommands.
#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Built-in channel name or path to a JSON kernel file.
    #[arg(long)]
    pub channel: String,
    /// Noisy-Ising crossover.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Erasure probability.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Look-ahead depth for `zs_iid_dmc`.
    #[arg(long)]
    pub lookahead: Option<usize>,
    /// Strategy family name (all, identity, xor, bec, zs_la) or JSON file.
    #[arg(long = "strategy-fn")]
    pub strategy_fn: Option<String>,
    /// Expected strategy-alphabet size; a mismatch is an error.
    #[arg(long = "card-u")]
    pub card_u: Option<usize>,
}

impl ChannelArgs {
    pub fn named(channel: &str) -> Self {
        Self {
            channel: channel.into(),
            eta: None,
            eps: None,
            lookahead: None,
            strategy_fn: None,
            card_u: None,
        }
    }

    fn params(&self) -> ChannelParams {
        ChannelParams {
            eta: self.eta,
            eps: self.eps,
            lookahead: self.lookahead,
        }
    }

    fn is_builtin(&self) -> bool {
        BUILTIN_CHANNELS.contains(&self.channel.as_str())
    }

    pub fn load(&self) -> Result<Fsc<f64>> {
        load_channel(&self.channel, &self.params())
    }

    /// The strategy family named on the command line, else the usual one for
    /// the channel.
    pub fn strategies(&self, nx: usize, ns: usize) -> Result<StrategyTable> {
        let name = match (&self.strategy_fn, self.channel.as_str()) {
            (Some(s), _) => s.as_str(),
            (None, "trapdoor") => "xor",
            (None, "ising" | "noisy_ising") => "identity",
            (None, "constrained_bec") => "bec",
            (None, "zs_iid_dmc") if self.lookahead == Some(1) => "zs_la",
            _ => "all",
        };
        let table = if Path::new(name).is_file() {
            load_strategies(Path::new(name))?
        } else {
            StrategyTable::named(name, nx, ns)?
        };
        if let Some(k) = self.card_u {
            if k != table.nu() {
                bail!(
                    "--card-u {k} but the strategy family has |U|={}",
                    table.nu()
                );
            }
        }
        Ok(table)
    }

    pub fn induced(&self) -> Result<InducedChannel<f64>> {
        let fsc = self.load()?;
        Ok(induce_strategy_channel(
            &fsc,
            &self.strategies(fsc.nx(), fsc.ns())?,
        )?)
    }

    /// The graph used when `--graph` is absent.
    pub fn default_graph(&self) -> Option<&'static str> {
        match self.channel.as_str() {
            "trapdoor" => Some("trapdoor4"),
            "ising" => Some("ising4"),
            "noisy_ising" | "zs_iid_dmc" => Some("two_node"),
            "constrained_bec" => Some("bec3"),
            _ => None,
        }
    }

    /// An i.i.d.-state channel for the single-letter baseline.
    pub fn state_dmc(&self) -> Result<StateDmc<f64>> {
        match self.channel.as_str() {
            "zs" | "zs_iid_dmc" => Ok(StateDmc::zs()),
            _ if self.is_builtin() => bail!("`{}` does not have an i.i.d. state", self.channel),
            path => load_dmc(Path::new(path)),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// A built-in channel by name, otherwise a JSON kernel file.
pub fn load_channel(name_or_path: &str, params: &ChannelParams) -> Result<Fsc<f64>> {
    if BUILTIN_CHANNELS.contains(&name_or_path) {
        return Ok(builtin_channel(name_or_path, params)?);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        bail!(
            "`{name_or_path}` is neither a built-in channel ({}) nor a file",
            BUILTIN_CHANNELS.join(", ")
        );
    }
    let text = read(path)?;
    let file = ChannelFile::from_json(&text).with_context(|| format!("in {}", path.display()))?;
    file.into_fsc()
        .with_context(|| format!("in {}", path.display()))
}

/// A built-in graph by name, otherwise a JSON graph file.
pub fn load_graph(name_or_path: &str) -> Result<QGraph> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        return QGraphFile::from_json(&read(path)?)
            .with_context(|| format!("in {}", path.display()));
    }
    Ok(builtin_qgraph(name_or_path)?)
}

pub fn load_policy(path: &Path) -> Result<Policy<f64>> {
    Policy::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// JSON `{"nx": …, "ns": …, "tables": [[x per s], …]}`.
fn load_strategies(path: &Path) -> Result<StrategyTable> {
    #[derive(Deserialize)]
    struct File {
        nx: usize,
        ns: usize,
        tables: Vec<Vec<usize>>,
    }
    let f: File =
        serde_json::from_str(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    Ok(StrategyTable::new(f.nx, f.ns, f.tables)?)
}

/// JSON `{"nx", "ns", "ny", "probs": [y][x][s], "state_pmf": [s]}`.
fn load_dmc(path: &Path) -> Result<StateDmc<f64>> {
    #[derive(Deserialize)]
    struct File {
        nx: usize,
        ns: usize,
        ny: usize,
        probs: Vec<Vec<Vec<f64>>>,
        state_pmf: Vec<f64>,
    }
    let f: File =
        serde_json::from_str(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let probs = f.probs.into_iter().flatten().flatten().collect();
    Ok(StateDmc::new(f.nx, f.ns, f.ny, probs, f.state_pmf)?)
}
