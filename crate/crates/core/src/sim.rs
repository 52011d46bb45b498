//! Monte Carlo simulation of the joint `(X, Y, S, Q)` process under an input
//! policy, as an empirical check on the stationary distribution and on
//! `I(X;Y|Q)`.
//!
//! Randomness comes from `Xoshiro256PlusPlus`, seeded through
//! `SeedableRng::seed_from_u64` (SplitMix64 expansion of the 64-bit seed), so
//! a `(seed, parameters)` pair reproduces a run bit for bit. Each step draws
//! the input first (only at `s = d`) and then the erasure event.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::channel::Output;
use crate::constraint::RllPresentation;
use crate::error::{check_range, Error, Result};
use crate::format::sig9;
use crate::info::entropy_term;
use crate::qgraph::QGraph;
use crate::sq_chain::{build_sq_chain, InputPolicy, StationaryDistribution};

pub const MIN_STEPS: u64 = 10_000;
pub const DEFAULT_BURN_IN: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n: u64,
    pub seed: u64,
    pub burn_in: u64,
}

impl SimConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        Self {
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n: u64,
    pub seed: u64,
    pub burn_in: u64,
    num_states: usize,
    labels: Vec<String>,
    /// Visit frequency of each `(s, q)`, indexed `q * (d + 1) + s`.
    pub empirical_pi: Vec<f64>,
    /// Plug-in `H(Y|Q) - H(Y|X,Q)` in bits.
    pub empirical_i: f64,
}

impl SimReport {
    pub fn frequency(&self, s: usize, q: usize) -> f64 {
        self.empirical_pi[q * self.num_states + s]
    }

    /// One `s,q,frequency` row per `(s, q)` pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,q,frequency\n");
        for (idx, f) in self.empirical_pi.iter().enumerate() {
            let (s, q) = (idx % self.num_states, idx / self.num_states);
            let _ = writeln!(out, "{s},{},{}", self.labels[q], sig9(*f));
        }
        out
    }
}

/// Conditional entropy from grouped counts: `sum_g sum_y -c(g,y)/n log2(c(g,y)/c(g))`.
fn conditional_entropy<'a>(groups: impl Iterator<Item = &'a [u64; 3]>, n: f64) -> f64 {
    groups
        .map(|c| {
            let total: u64 = c.iter().sum();
            if total == 0 {
                return 0.0;
            }
            let t = total as f64;
            (t / n) * c.iter().map(|&k| entropy_term(k as f64 / t)).sum::<f64>()
        })
        .sum()
}

pub fn simulate(
    graph: &QGraph,
    eps: f64,
    policy: &InputPolicy,
    config: &SimConfig,
) -> Result<SimReport> {
    check_range("eps", eps, 0.0, 1.0)?;
    if config.n < MIN_STEPS {
        return Err(Error::OutOfRange {
            name: "n",
            value: config.n as f64,
            lo: MIN_STEPS as f64,
            hi: f64::INFINITY,
        });
    }
    let pres = RllPresentation::new(graph.d())?;
    let chain = build_sq_chain(&pres, graph, eps, policy)?;
    let analysis = chain.analyze();
    if !analysis.in_omega() {
        return Err(Error::NotInOmega {
            closed: analysis.closed.len(),
            classes: analysis.closed_classes(),
        });
    }
    if !analysis.is_aperiodic() {
        return Err(Error::Periodic {
            period: analysis.periods[0],
            class: analysis.closed_class().unwrap_or_default().to_vec(),
        });
    }

    let d = pres.d();
    let ns = pres.num_states();
    let nq = graph.num_nodes();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let mut visits = vec![0u64; ns * nq];
    // [q][x] -> counts over y
    let mut qxy = vec![[[0u64; 3]; 2]; nq];
    let (mut s, mut q) = (d, graph.root());
    for t in 0..config.burn_in + config.n {
        let x: u8 = if s == d && rng.random::<f64>() < policy.get(q) {
            1
        } else {
            0
        };
        let y = if rng.random::<f64>() < eps {
            Output::Erasure
        } else {
            Output::of_input(x)
        };
        if t >= config.burn_in {
            visits[q * ns + s] += 1;
            qxy[q][x as usize][y.index()] += 1;
        }
        s = pres
            .next_state(s, x)
            .expect("policy respects the constraint");
        q = graph.step(q, y);
    }

    let n = config.n as f64;
    let by_q: Vec<[u64; 3]> = qxy
        .iter()
        .map(|[a, b]| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
        .collect();
    let h_y_q = conditional_entropy(by_q.iter(), n);
    let h_y_xq = conditional_entropy(qxy.iter().flat_map(|g| g.iter()), n);
    Ok(SimReport {
        n: config.n,
        seed: config.seed,
        burn_in: config.burn_in,
        num_states: ns,
        labels: (0..nq).map(|q| graph.label(q)).collect(),
        empirical_pi: visits.iter().map(|&c| c as f64 / n).collect(),
        empirical_i: h_y_q - h_y_xq,
    })
}

/// `max |empirical_pi(s,q) - pi(s,q)|`.
pub fn empirical_stationary_residual(report: &SimReport, pi: &StationaryDistribution) -> f64 {
    report
        .empirical_pi
        .iter()
        .zip(pi.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
