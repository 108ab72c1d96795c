use thiserror::Error;

/// Errors raised across channel construction, information measures, and the
/// bound computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel slice (x={x}, s={s}) sums to {sum}, expected 1")]
    RowSumError { x: usize, s: usize, sum: f64 },

    #[error("negative probability {value} at {location}")]
    NegativeProbability { location: String, value: f64 },

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("missing channel parameter `{0}`")]
    MissingParam(&'static str),

    #[error("parameter `{name}` = {value} outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{count} strategies exceed the enumeration cap {cap}")]
    EnumerationCapExceeded { count: u128, cap: usize },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("not a probability vector: {0}")]
    NotAPmf(String),

    #[error("axis groups overlap or are out of range")]
    AxisOverlap,

    #[error("enumeration needs {atoms} joint atoms, budget is {budget}")]
    BudgetExceeded { atoms: u128, budget: u128 },

    #[error("output {y} has probability {prob} under the current belief and action")]
    ImpossibleOutput { y: usize, prob: f64 },

    #[error("channel is not strongly connected")]
    NotConnected,

    #[error("value iteration stopped after {iterations} sweeps with span {residual_span} (rate bracket midpoint {rate})")]
    NoConvergence {
        iterations: usize,
        rate: f64,
        residual_span: f64,
    },

    #[error("Q-graph node {node} has no edge labeled y={y}")]
    IncompleteLabeling { node: usize, y: usize },

    #[error("Q-graph is not connected: node {to} is unreachable from node {from}")]
    Disconnected { from: usize, to: usize },

    #[error("unknown Q-graph `{0}`")]
    UnknownGraph(String),

    #[error("stationary distribution is not unique: {classes} closed communicating classes")]
    NotUnique { classes: usize },

    #[error("no policy reached BCJR violation <= {tol} (best {violation})")]
    NoFeasiblePolicy { violation: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
