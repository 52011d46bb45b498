use thiserror::Error;

/// Errors raised by graph construction, chain analysis and bound evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("d must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("d = {d} exceeds the configured size limit of {cap}")]
    OrderTooLarge { d: usize, cap: usize },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid Q-graph: {0}")]
    InvalidGraph(String),

    #[error("policy has {len} entries but the Q-graph has {nodes} nodes")]
    PolicyShape { len: usize, nodes: usize },

    #[error("observation {output} has zero probability at node {node}")]
    ImpossibleObservation { node: usize, output: char },

    #[error("chain is not in Omega: {closed} closed communicating classes {classes:?}")]
    NotInOmega {
        closed: usize,
        classes: Vec<Vec<usize>>,
    },

    #[error("closed class {class:?} is periodic with period {period}")]
    Periodic { period: usize, class: Vec<usize> },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("optimizer found no policy in Omega: {0}")]
    NoFeasiblePolicy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}
