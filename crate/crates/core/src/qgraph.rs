//! Q-graphs: finite output-labelled graphs with a deterministic update
//! `Phi(q, y)`, and the two families used for the bounds.
//!
//! De Bruijn family (lower bound), order `d`:
//! - `2^d` nodes labelled by d-tuples `(w_0, .., w_{d-1})` over `{0, ?}`,
//!   stored as a bitmask with bit `i` set iff `w_i = ?`. Node id = mask.
//!   Outputs `0`/`?` shift the symbol in at position 0; output `1` goes to `Q_0`.
//! - `d` extra nodes `Q_0 .. Q_{d-1}` (ids `2^d + i`). Outputs `0` and `?` both
//!   move `Q_i -> Q_{i+1}`, with `Q_d` being the all-zeros tuple (id 0).
//!
//! Chain family (analytic upper bound): nodes `Qh_0 .. Qh_d` (ids `0..=d`),
//! `0`/`?` advance `Qh_i -> Qh_{i+1}` and saturate at `Qh_d`; output `1` always
//! returns to `Qh_0`.

use std::fmt;
use std::fmt::Write as _;

use crate::channel::Output;
use crate::constraint::{check_order, DEFAULT_MAX_D};
use crate::error::Result;
use crate::graph::strongly_connected_components;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    DeBruijn,
    Chain,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// d-tuple over `{0, ?}`; bit `i` set iff `w_i = ?`.
    DeBruijn { mask: u32 },
    /// `Q_i` of the de Bruijn family or `Qh_i` of the chain family.
    Chain(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingLabel {
        node: usize,
        output: Output,
    },
    DanglingTarget {
        node: usize,
        output: Output,
        target: usize,
    },
    NotStronglyConnected {
        components: usize,
    },
    BadRoot {
        root: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingLabel { node, output } => {
                write!(f, "node {node} has no outgoing edge labelled {output}")
            }
            Violation::DanglingTarget {
                node,
                output,
                target,
            } => {
                write!(
                    f,
                    "edge {node} --{output}--> {target} points outside the graph"
                )
            }
            Violation::NotStronglyConnected { components } => {
                write!(f, "graph has {components} strongly connected components")
            }
            Violation::BadRoot { root } => write!(f, "root {root} is not a node"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QGraph {
    d: usize,
    family: Family,
    kinds: Vec<NodeKind>,
    next: Vec<[Option<usize>; 3]>,
    root: usize,
}

impl QGraph {
    /// Assemble a graph from raw parts. Use [`QGraph::validate`] before
    /// handing it to the chain builder.
    #[cfg(test)]
    pub(crate) fn from_parts(
        d: usize,
        kinds: Vec<NodeKind>,
        next: Vec<[Option<usize>; 3]>,
        root: usize,
    ) -> Self {
        Self {
            d,
            family: Family::Custom,
            kinds,
            next,
            root,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn num_nodes(&self) -> usize {
        self.kinds.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn kind(&self, q: usize) -> NodeKind {
        self.kinds[q]
    }

    /// `Phi(q, y)`, if the edge exists.
    #[inline]
    pub fn try_step(&self, q: usize, y: Output) -> Option<usize> {
        self.next[q][y.index()]
    }

    /// `Phi(q, y)`.
    ///
    /// Panics if the edge is missing; graphs produced by the constructors are
    /// total.
    #[inline]
    pub fn step(&self, q: usize, y: Output) -> usize {
        self.next[q][y.index()].expect("Q-graph is not total")
    }

    pub fn label(&self, q: usize) -> String {
        match (self.family, self.kinds[q]) {
            (_, NodeKind::DeBruijn { mask }) => tuple_label(mask, self.d),
            (Family::Chain, NodeKind::Chain(i)) => format!("Qh{i}"),
            (_, NodeKind::Chain(i)) => format!("Q{i}"),
        }
    }

    /// Node id for a printed label such as `(0,?)`, `Q1` or `Qh2`.
    pub fn find(&self, label: &str) -> Option<usize> {
        (0..self.num_nodes()).find(|&q| self.label(q) == label)
    }

    /// Checks totality (one edge per output symbol) and strong connectivity.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.num_nodes();
        let mut out = Vec::new();
        if self.root >= n {
            out.push(Violation::BadRoot { root: self.root });
        }
        let mut adj = vec![Vec::new(); n];
        for (q, row) in self.next.iter().enumerate() {
            for y in Output::ALL {
                match row[y.index()] {
                    None => out.push(Violation::MissingLabel { node: q, output: y }),
                    Some(t) if t >= n => out.push(Violation::DanglingTarget {
                        node: q,
                        output: y,
                        target: t,
                    }),
                    Some(t) => adj[q].push(t),
                }
            }
        }
        let comps = strongly_connected_components(&adj).len();
        if comps > 1 {
            out.push(Violation::NotStronglyConnected { components: comps });
        }
        out
    }

    /// Plain-text adjacency listing, one `node y next` triple per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for q in 0..self.num_nodes() {
            for y in Output::ALL {
                let target = match self.next[q][y.index()] {
                    Some(t) if t < self.num_nodes() => self.label(t),
                    Some(t) => format!("#{t}"),
                    None => "-".to_string(),
                };
                let _ = writeln!(s, "{} {} {}", self.label(q), y, target);
            }
        }
        s
    }
}

fn tuple_label(mask: u32, d: usize) -> String {
    let body: Vec<&str> = (0..d)
        .map(|i| if mask >> i & 1 == 1 { "?" } else { "0" })
        .collect();
    format!("({})", body.join(","))
}

/// Node id of `Q_i` (`i < d`) in the de Bruijn family; `Q_d` is the
/// all-zeros tuple, id 0.
pub fn debruijn_chain_node(d: usize, i: usize) -> usize {
    if i == d {
        0
    } else {
        (1usize << d) + i
    }
}

pub fn build_debruijn_qgraph(d: usize) -> Result<QGraph> {
    check_order(d, DEFAULT_MAX_D)?;
    let n_db = 1usize << d;
    let full = (n_db - 1) as u32;
    let q0 = debruijn_chain_node(d, 0);
    let mut kinds = Vec::with_capacity(n_db + d);
    let mut next = Vec::with_capacity(n_db + d);
    for mask in 0..n_db as u32 {
        kinds.push(NodeKind::DeBruijn { mask });
        let zero = ((mask << 1) & full) as usize;
        let erased = (((mask << 1) | 1) & full) as usize;
        next.push([Some(zero), Some(erased), Some(q0)]);
    }
    for i in 0..d {
        kinds.push(NodeKind::Chain(i));
        let succ = debruijn_chain_node(d, i + 1);
        // Output 1 cannot occur at Q_i (the input is forced to 0); the edge
        // exists only to keep Phi total.
        next.push([Some(succ), Some(succ), Some(q0)]);
    }
    Ok(QGraph {
        d,
        family: Family::DeBruijn,
        kinds,
        next,
        root: debruijn_chain_node(d, d),
    })
}

pub fn build_chain_qgraph(d: usize) -> Result<QGraph> {
    check_order(d, DEFAULT_MAX_D)?;
    let kinds = (0..=d).map(NodeKind::Chain).collect();
    let next = (0..=d)
        .map(|i| {
            let succ = (i + 1).min(d);
            [Some(succ), Some(succ), Some(0)]
        })
        .collect();
    Ok(QGraph {
        d,
        family: Family::Chain,
        kinds,
        next,
        root: d,
    })
}
