//! The (S,Q)-product Markov chain induced by an input policy on a Q-graph,
//! its communicating-class structure, stationary distribution and the
//! conditional mutual information `I(X;Y|Q)`.
//!
//! State `(s, q)` has index `q * (d + 1) + s`.

use crate::channel::{bec_prob, Output};
use crate::constraint::RllPresentation;
use crate::error::{check_range, Error, Result};
use crate::graph::{period, strongly_connected_components};
use crate::info::{binary_entropy, entropy_term};
use crate::qgraph::QGraph;

/// Closed classes up to this size are solved directly; larger ones by power
/// iteration.
pub const DENSE_SOLVE_LIMIT: usize = 5_000;

const POWER_ITER_MAX: usize = 1_000_000;
const RESIDUAL_TOL: f64 = 1e-12;

/// `P(X = 1 | S = d, Q = v)` for every Q-node `v`. Inputs at `s < d` are
/// forced to 0 by the constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPolicy {
    a: Vec<f64>,
}

impl InputPolicy {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        for &v in &a {
            check_range("policy value", v, 0.0, 1.0)?;
        }
        Ok(Self { a })
    }

    pub fn zeros(nodes: usize) -> Self {
        Self {
            a: vec![0.0; nodes],
        }
    }

    #[inline]
    pub fn get(&self, v: usize) -> f64 {
        self.a[v]
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `P(X = x | S = s, Q = v)`.
    #[inline]
    pub fn input_prob(&self, d: usize, s: usize, v: usize, x: u8) -> f64 {
        let one = if s == d { self.a[v] } else { 0.0 };
        if x == 1 {
            one
        } else {
            1.0 - one
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub x: u8,
    pub y: Output,
    pub to: usize,
    pub prob: f64,
}

#[derive(Debug, Clone)]
pub struct SqChain {
    presentation: RllPresentation,
    graph: QGraph,
    eps: f64,
    policy: InputPolicy,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
}

pub fn build_sq_chain(
    presentation: &RllPresentation,
    graph: &QGraph,
    eps: f64,
    policy: &InputPolicy,
) -> Result<SqChain> {
    check_range("eps", eps, 0.0, 1.0)?;
    if policy.len() != graph.num_nodes() {
        return Err(Error::PolicyShape {
            len: policy.len(),
            nodes: graph.num_nodes(),
        });
    }
    let violations = graph.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidGraph(msg.join("; ")));
    }
    let d = presentation.d();
    let ns = presentation.num_states();
    let n = ns * graph.num_nodes();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut edges = Vec::with_capacity(2 * n);
    offsets.push(0);
    for q in 0..graph.num_nodes() {
        for s in 0..ns {
            for &x in presentation.allowed_inputs(s) {
                let px = policy.input_prob(d, s, q, x);
                let s_next = presentation.next_state(s, x).expect("admissible input");
                for y in Output::ALL {
                    let prob = px * bec_prob(eps, x, y);
                    if prob > 0.0 {
                        let to = graph.step(q, y) * ns + s_next;
                        edges.push(Edge { x, y, to, prob });
                    }
                }
            }
            offsets.push(edges.len());
        }
    }
    Ok(SqChain {
        presentation: *presentation,
        graph: graph.clone(),
        eps,
        policy: policy.clone(),
        offsets,
        edges,
    })
}

/// Communicating-class structure of the pruned (S,Q)-graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAnalysis {
    pub components: Vec<Vec<usize>>,
    /// Indices into `components` of the closed classes.
    pub closed: Vec<usize>,
    /// Period of each closed class, aligned with `closed`.
    pub periods: Vec<usize>,
    /// `eps = 1`: every output is an erasure and nothing is learned.
    pub erasure_only: bool,
}

impl ClassAnalysis {
    pub fn in_omega(&self) -> bool {
        self.closed.len() == 1
    }

    pub fn is_aperiodic(&self) -> bool {
        self.in_omega() && self.periods[0] == 1
    }

    pub fn closed_class(&self) -> Option<&[usize]> {
        if self.in_omega() {
            Some(&self.components[self.closed[0]])
        } else {
            None
        }
    }

    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        self.closed
            .iter()
            .map(|&i| self.components[i].clone())
            .collect()
    }
}

impl SqChain {
    pub fn d(&self) -> usize {
        self.presentation.d()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn graph(&self) -> &QGraph {
        &self.graph
    }

    pub fn policy(&self) -> &InputPolicy {
        &self.policy
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn state_index(&self, s: usize, q: usize) -> usize {
        q * self.presentation.num_states() + s
    }

    /// `(s, q)` for a state index.
    #[inline]
    pub fn state_of(&self, idx: usize) -> (usize, usize) {
        let ns = self.presentation.num_states();
        (idx % ns, idx / ns)
    }

    pub fn state_label(&self, idx: usize) -> String {
        let (s, q) = self.state_of(idx);
        format!("({s},{})", self.graph.label(q))
    }

    #[inline]
    pub fn edges_from(&self, idx: usize) -> &[Edge] {
        &self.edges[self.offsets[idx]..self.offsets[idx + 1]]
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.num_states())
            .map(|i| (self.edges_from(i).iter().map(|e| e.prob).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.num_states())
            .map(|i| {
                let mut v: Vec<usize> = self.edges_from(i).iter().map(|e| e.to).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect()
    }

    pub fn analyze(&self) -> ClassAnalysis {
        let adj = self.adjacency();
        let components = strongly_connected_components(&adj);
        let mut comp_of = vec![0usize; adj.len()];
        for (c, members) in components.iter().enumerate() {
            for &m in members {
                comp_of[m] = c;
            }
        }
        let mut closed = Vec::new();
        let mut periods = Vec::new();
        for (c, members) in components.iter().enumerate() {
            let is_closed = members
                .iter()
                .all(|&u| adj[u].iter().all(|&v| comp_of[v] == c));
            if is_closed {
                closed.push(c);
                periods.push(period(&adj, members));
            }
        }
        ClassAnalysis {
            components,
            closed,
            periods,
            erasure_only: self.eps >= 1.0,
        }
    }

    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        self.analyze().closed_classes()
    }

    pub fn is_in_omega(&self) -> bool {
        self.analyze().in_omega()
    }

    pub fn is_aperiodic(&self) -> bool {
        self.analyze().is_aperiodic()
    }

    /// Unique stationary distribution, supported on the closed class.
    pub fn stationary(&self) -> Result<StationaryDistribution> {
        let analysis = self.analyze();
        let class = match analysis.closed_class() {
            Some(c) => c.to_vec(),
            None => {
                return Err(Error::NotInOmega {
                    closed: analysis.closed.len(),
                    classes: analysis.closed_classes(),
                })
            }
        };
        if analysis.periods[0] != 1 {
            return Err(Error::Periodic {
                period: analysis.periods[0],
                class,
            });
        }
        let local = if class.len() <= DENSE_SOLVE_LIMIT {
            self.solve_dense(&class)
        } else {
            self.solve_power(&class)?
        };
        let mut pi = vec![0.0; self.num_states()];
        for (&idx, &p) in class.iter().zip(&local) {
            pi[idx] = p;
        }
        let residual = self.stationarity_residual(&pi);
        Ok(StationaryDistribution {
            ns: self.presentation.num_states(),
            pi,
            support: class,
            residual,
        })
    }

    /// `max_j |(pi T)_j - pi_j|`.
    pub fn stationarity_residual(&self, pi: &[f64]) -> f64 {
        let mut next = vec![0.0; pi.len()];
        for (i, &p) in pi.iter().enumerate() {
            if p != 0.0 {
                for e in self.edges_from(i) {
                    next[e.to] += p * e.prob;
                }
            }
        }
        next.iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn local_index(&self, class: &[usize]) -> Vec<usize> {
        let mut local = vec![usize::MAX; self.num_states()];
        for (k, &idx) in class.iter().enumerate() {
            local[idx] = k;
        }
        local
    }

    /// Grassmann-Taksar-Heyman elimination on the restricted kernel.
    fn solve_dense(&self, class: &[usize]) -> Vec<f64> {
        let m = class.len();
        let local = self.local_index(class);
        let mut p = vec![0.0; m * m];
        for (k, &idx) in class.iter().enumerate() {
            for e in self.edges_from(idx) {
                p[k * m + local[e.to]] += e.prob;
            }
        }
        for n in (1..m).rev() {
            let s: f64 = p[n * m..n * m + n].iter().sum();
            for i in 0..n {
                p[i * m + n] /= s;
            }
            for i in 0..n {
                let pin = p[i * m + n];
                if pin == 0.0 {
                    continue;
                }
                for j in 0..n {
                    p[i * m + j] += pin * p[n * m + j];
                }
            }
        }
        let mut pi = vec![0.0; m];
        pi[0] = 1.0;
        for j in 1..m {
            pi[j] = (0..j).map(|i| pi[i] * p[i * m + j]).sum();
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
        pi
    }

    fn solve_power(&self, class: &[usize]) -> Result<Vec<f64>> {
        let m = class.len();
        let local = self.local_index(class);
        let mut pi = vec![1.0 / m as f64; m];
        let mut next = vec![0.0; m];
        let mut diff = f64::INFINITY;
        for _ in 0..POWER_ITER_MAX {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (k, &idx) in class.iter().enumerate() {
                for e in self.edges_from(idx) {
                    next[local[e.to]] += pi[k] * e.prob;
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            diff = next
                .iter()
                .zip(&pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            std::mem::swap(&mut pi, &mut next);
            if diff <= 0.1 * RESIDUAL_TOL {
                return Ok(pi);
            }
        }
        Err(Error::NotConverged {
            iterations: POWER_ITER_MAX,
            residual: diff,
        })
    }

    /// `P(Y = y | Q = q)` under `pi`; all zeros when `pi(q) = 0`.
    pub fn output_distribution(&self, pi: &StationaryDistribution, q: usize) -> [f64; 3] {
        let mut py = [0.0; 3];
        let node = pi.node(q);
        if node <= 0.0 {
            return py;
        }
        for s in 0..self.presentation.num_states() {
            let idx = self.state_index(s, q);
            let w = pi.pi[idx];
            if w == 0.0 {
                continue;
            }
            for e in self.edges_from(idx) {
                py[e.y.index()] += w * e.prob;
            }
        }
        py.iter_mut().for_each(|x| *x /= node);
        py
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    ns: usize,
    pi: Vec<f64>,
    support: Vec<usize>,
    /// `max |pi T - pi|` of the solution.
    pub residual: f64,
}

impl StationaryDistribution {
    #[inline]
    pub fn joint(&self, s: usize, q: usize) -> f64 {
        self.pi[q * self.ns + s]
    }

    pub fn node(&self, q: usize) -> f64 {
        self.pi[q * self.ns..(q + 1) * self.ns].iter().sum()
    }

    /// `pi(s | q)`, or 0 if node `q` carries no mass.
    pub fn conditional(&self, s: usize, q: usize) -> f64 {
        let node = self.node(q);
        if node > 0.0 {
            self.joint(s, q) / node
        } else {
            0.0
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn num_nodes(&self) -> usize {
        self.pi.len() / self.ns
    }
}

/// `I(X;Y|Q) = H(Y|Q) - h_b(eps)` in bits.
pub fn conditional_mutual_information(chain: &SqChain, pi: &StationaryDistribution) -> f64 {
    let mut h_y_given_q = 0.0;
    for q in 0..chain.graph.num_nodes() {
        let node = pi.node(q);
        if node <= 0.0 {
            continue;
        }
        let py = chain.output_distribution(pi, q);
        h_y_given_q += node * py.iter().copied().map(entropy_term).sum::<f64>();
    }
    h_y_given_q - binary_entropy(chain.eps)
}
