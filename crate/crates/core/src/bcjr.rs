//! Closed-form belief vectors and the BCJR-invariant input policy on the
//! de Bruijn Q-graph, the Bayesian belief update, and residual checks for
//! invariance and for the stationary identification `theta_v(s) pi(v) = pi(s, v)`.

use crate::channel::{bec_prob, Output};
use crate::constraint::RllPresentation;
use crate::error::{check_range, Error, Result};
use crate::qgraph::{build_debruijn_qgraph, Family, NodeKind, QGraph};
use crate::sq_chain::{build_sq_chain, InputPolicy};

/// Largest admissible base parameter `a` for order `d`.
pub fn max_base_parameter(d: usize) -> f64 {
    1.0 / (d as f64 + 1.0)
}

/// `beta_s` = number of 0s strictly left of position `s` in the tuple `mask`
/// (bit `i` set iff `w_i = ?`).
pub fn beta_vector(mask: u32, d: usize) -> Vec<usize> {
    let mut zeros = 0;
    (0..d)
        .map(|s| {
            let b = zeros;
            if mask >> s & 1 == 0 {
                zeros += 1;
            }
            b
        })
        .collect()
}

fn check_base(d: usize, a: f64) -> Result<()> {
    check_range("a", a, 0.0, max_base_parameter(d))
}

fn unit_vector(len: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[i] = 1.0;
    v
}

/// Belief vector of one Q-node for base parameter `a`.
pub fn theta_vector(kind: NodeKind, d: usize, a: f64) -> Result<Vec<f64>> {
    check_base(d, a)?;
    Ok(match kind {
        NodeKind::Chain(i) => unit_vector(d + 1, i),
        NodeKind::DeBruijn { mask } => {
            let beta = beta_vector(mask, d);
            let mut theta = vec![0.0; d + 1];
            for s in 0..d {
                if mask >> s & 1 == 1 {
                    theta[s] = a / (1.0 - a).powi(beta[s] as i32);
                }
            }
            theta[d] = 1.0 - theta[..d].iter().sum::<f64>();
            theta
        }
    })
}

/// The belief vectors `theta_v` for every node of a de Bruijn Q-graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefAssignment {
    d: usize,
    a: f64,
    theta: Vec<Vec<f64>>,
}

impl BeliefAssignment {
    pub fn new(graph: &QGraph, a: f64) -> Result<Self> {
        if graph.family() != Family::DeBruijn {
            return Err(Error::InvalidGraph(
                "belief construction needs the de Bruijn Q-graph".into(),
            ));
        }
        let d = graph.d();
        let theta = (0..graph.num_nodes())
            .map(|q| theta_vector(graph.kind(q), d, a))
            .collect::<Result<_>>()?;
        Ok(Self { d, a, theta })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn theta(&self, v: usize) -> &[f64] {
        &self.theta[v]
    }

    pub fn theta_mut(&mut self, v: usize) -> &mut Vec<f64> {
        &mut self.theta[v]
    }

    /// `a_v = a / theta_v(d)` at de Bruijn nodes, 0 at `Q_0 .. Q_{d-1}`.
    pub fn policy(&self, graph: &QGraph) -> Result<InputPolicy> {
        let values = (0..graph.num_nodes())
            .map(|v| match graph.kind(v) {
                NodeKind::Chain(_) => 0.0,
                NodeKind::DeBruijn { .. } => {
                    let top = self.theta[v][self.d];
                    if self.a == 0.0 {
                        0.0
                    } else {
                        let av = self.a / top;
                        // a = 1/(d+1) puts the all-? node exactly on a_v = 1.
                        if av > 1.0 && av <= 1.0 + 1e-12 {
                            1.0
                        } else {
                            av
                        }
                    }
                }
            })
            .collect();
        InputPolicy::new(values)
    }
}

/// Input policy of the BCJR-invariant construction on `build_debruijn_qgraph(d)`.
pub fn build_policy(d: usize, a: f64) -> Result<InputPolicy> {
    let g = build_debruijn_qgraph(d)?;
    BeliefAssignment::new(&g, a)?.policy(&g)
}

/// Bayesian update of a state belief at node `v` after observing `y`:
/// `B_{s+}(gamma, y) = sum_{x,s: f(s,x)=s+} gamma(s) P(x|s,v) P(y|x) / P(y)`.
pub fn bcjr_update(
    presentation: &RllPresentation,
    eps: f64,
    policy: &InputPolicy,
    v: usize,
    belief: &[f64],
    y: Output,
) -> Result<Vec<f64>> {
    let d = presentation.d();
    let mut out = vec![0.0; presentation.num_states()];
    let mut total = 0.0;
    for (s, &g) in belief.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for &x in presentation.allowed_inputs(s) {
            let w = g * policy.input_prob(d, s, v, x) * bec_prob(eps, x, y);
            if w > 0.0 {
                out[presentation.next_state(s, x).expect("admissible")] += w;
                total += w;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation {
            node: v,
            output: y.symbol(),
        });
    }
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// Closed-form updates of the construction, for the belief `theta` stored at
/// `v`. Independent of the generic route above; used as a cross-check.
pub fn closed_form_update(
    graph: &QGraph,
    beliefs: &BeliefAssignment,
    eps: f64,
    v: usize,
    y: Output,
) -> Result<Vec<f64>> {
    let d = beliefs.d;
    let a = beliefs.a;
    let impossible = Err(Error::ImpossibleObservation {
        node: v,
        output: y.symbol(),
    });
    match (y, eps) {
        (Output::Erasure, e) if e <= 0.0 => return impossible,
        (Output::Zero | Output::One, e) if e >= 1.0 => return impossible,
        _ => {}
    }
    match graph.kind(v) {
        NodeKind::Chain(i) => {
            if y == Output::One {
                impossible
            } else {
                Ok(unit_vector(d + 1, i + 1))
            }
        }
        NodeKind::DeBruijn { .. } => {
            let theta = beliefs.theta(v);
            let mut b = vec![0.0; d + 1];
            match y {
                Output::Zero => {
                    for s in 1..d {
                        b[s] = theta[s - 1] / (1.0 - a);
                    }
                }
                Output::Erasure => {
                    b[0] = a;
                    b[1..d].copy_from_slice(&theta[..d - 1]);
                }
                Output::One => {
                    if a == 0.0 {
                        return impossible;
                    }
                    b[0] = 1.0;
                }
            }
            b[d] = 1.0 - b[..d].iter().sum::<f64>();
            Ok(b)
        }
    }
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Max over realizable `(v, y)` and all `s` of `|theta_{Phi(v,y)}(s) - B_s(theta_v, y)|`.
pub fn invariance_residual(
    graph: &QGraph,
    beliefs: &BeliefAssignment,
    policy: &InputPolicy,
    eps: f64,
) -> Result<f64> {
    let pres = RllPresentation::new(graph.d())?;
    let mut worst = 0.0f64;
    for v in 0..graph.num_nodes() {
        for y in Output::ALL {
            match bcjr_update(&pres, eps, policy, v, beliefs.theta(v), y) {
                Ok(b) => {
                    let target = beliefs.theta(graph.step(v, y));
                    worst = worst.max(max_abs_diff(target, &b));
                }
                Err(Error::ImpossibleObservation { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(worst)
}

pub fn verify_invariance(d: usize, a: f64, eps: f64) -> Result<f64> {
    check_range("eps", eps, 0.0, 1.0)?;
    let g = build_debruijn_qgraph(d)?;
    let beliefs = BeliefAssignment::new(&g, a)?;
    let policy = beliefs.policy(&g)?;
    invariance_residual(&g, &beliefs, &policy, eps)
}

/// Max difference between the generic update and the closed forms over all
/// realizable `(v, y)`.
pub fn verify_closed_forms(d: usize, a: f64, eps: f64) -> Result<f64> {
    let g = build_debruijn_qgraph(d)?;
    let pres = RllPresentation::new(d)?;
    let beliefs = BeliefAssignment::new(&g, a)?;
    let policy = beliefs.policy(&g)?;
    let mut worst = 0.0f64;
    for v in 0..g.num_nodes() {
        for y in Output::ALL {
            let generic = bcjr_update(&pres, eps, &policy, v, beliefs.theta(v), y);
            let closed = closed_form_update(&g, &beliefs, eps, v, y);
            match (generic, closed) {
                (Ok(x), Ok(z)) => worst = worst.max(max_abs_diff(&x, &z)),
                (Err(_), Err(_)) => {}
                (Ok(_), Err(_)) | (Err(_), Ok(_)) => return Ok(f64::INFINITY),
            }
        }
    }
    Ok(worst)
}

/// Max over all `(s, v)` of `|theta_v(s) pi(v) - pi(s, v)|` for the solved
/// stationary distribution of the de Bruijn (S,Q) chain.
pub fn verify_stationary_identification(d: usize, a: f64, eps: f64) -> Result<f64> {
    let g = build_debruijn_qgraph(d)?;
    let pres = RllPresentation::new(d)?;
    let beliefs = BeliefAssignment::new(&g, a)?;
    let policy = beliefs.policy(&g)?;
    let chain = build_sq_chain(&pres, &g, eps, &policy)?;
    let pi = chain.stationary()?;
    let mut worst = 0.0f64;
    for v in 0..g.num_nodes() {
        let node = pi.node(v);
        for s in 0..=d {
            worst = worst.max((beliefs.theta(v)[s] * node - pi.joint(s, v)).abs());
        }
    }
    Ok(worst)
}
