//! Numerical evaluation of the single-letter upper bound
//! `sup I(X;Y|Q)` over input policies in Omega, for a fixed Q-graph.
//!
//! The program is solved by multi-start Nelder-Mead over the per-node
//! parameters `a_v = P(X=1 | S=d, Q=v)`, clamped to `[0, 1]`, followed by a
//! projected finite-difference gradient polish. Policies outside Omega or with
//! a periodic closed class are penalized. The value is the best found, not a
//! certified optimum.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bcjr::build_policy;
use crate::bounds::{lower_bound, BoundKind, BoundResult};
use crate::constraint::RllPresentation;
use crate::error::{Error, Result};
use crate::qgraph::{Family, QGraph};
use crate::sq_chain::{build_sq_chain, conditional_mutual_information, InputPolicy};

/// Cost assigned to policies without a unique aperiodic closed class.
const INFEASIBLE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NumericOptions {
    pub starts: usize,
    pub max_iters: u64,
    pub polish_iters: usize,
    pub seed: u64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iters: 4_000,
            polish_iters: 50,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericBound {
    /// `argmax` holds the stationary `P(X = 1)` of the best policy.
    pub result: BoundResult,
    pub policy: InputPolicy,
    pub feasible_starts: usize,
}

#[derive(Clone, Copy)]
struct Objective<'a> {
    presentation: RllPresentation,
    graph: &'a QGraph,
    eps: f64,
}

impl Objective<'_> {
    /// `(I(X;Y|Q), P(X=1))`, or `None` off the feasible set.
    fn evaluate(&self, params: &[f64]) -> Option<(f64, f64)> {
        let policy = InputPolicy::new(clamp(params)).ok()?;
        let chain = build_sq_chain(&self.presentation, self.graph, self.eps, &policy).ok()?;
        let pi = chain.stationary().ok()?;
        let d = self.presentation.d();
        let p_one = (0..self.graph.num_nodes())
            .map(|q| pi.joint(d, q) * policy.get(q))
            .sum();
        Some((conditional_mutual_information(&chain, &pi), p_one))
    }

    fn value(&self, params: &[f64]) -> f64 {
        self.evaluate(params).map_or(-INFEASIBLE, |(v, _)| v)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.value(p))
    }
}

fn clamp(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

fn initial_simplex(start: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut v = start.to_vec();
        v[i] = if v[i] + step <= 1.0 {
            v[i] + step
        } else {
            v[i] - step
        };
        simplex.push(v);
    }
    simplex
}

fn starting_points(graph: &QGraph, eps: f64, opts: &NumericOptions) -> Result<Vec<Vec<f64>>> {
    let n = graph.num_nodes();
    let mut starts = Vec::new();
    if graph.family() == Family::DeBruijn {
        let lb = lower_bound(graph.d(), eps)?;
        starts.push(build_policy(graph.d(), lb.argmax)?.values().to_vec());
    }
    for c in [0.5, 0.25, 0.1, 0.75] {
        starts.push(vec![c; n]);
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed);
    while starts.len() < opts.starts.max(8) {
        starts.push((0..n).map(|_| rng.random_range(0.02..0.98)).collect());
    }
    Ok(starts)
}

fn polish(obj: &Objective<'_>, mut x: Vec<f64>, iters: usize) -> Vec<f64> {
    const H: f64 = 1e-6;
    let mut fx = obj.value(&x);
    let mut step = 0.1;
    for _ in 0..iters {
        let grad: Vec<f64> = (0..x.len())
            .map(|i| {
                let (mut up, mut down) = (x.clone(), x.clone());
                up[i] = (x[i] + H).min(1.0);
                down[i] = (x[i] - H).max(0.0);
                let width = up[i] - down[i];
                if width <= 0.0 {
                    0.0
                } else {
                    (obj.value(&up) - obj.value(&down)) / width
                }
            })
            .collect();
        if grad.iter().all(|g| g.abs() < 1e-12) {
            break;
        }
        let mut improved = false;
        while step > 1e-12 {
            let trial: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, gi)| (xi + step * gi).clamp(0.0, 1.0))
                .collect();
            let ft = obj.value(&trial);
            if ft > fx {
                x = trial;
                fx = ft;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    x
}

pub fn numeric_upper_bound(graph: &QGraph, eps: f64) -> Result<NumericBound> {
    numeric_upper_bound_with(graph, eps, &NumericOptions::default())
}

pub fn numeric_upper_bound_with(
    graph: &QGraph,
    eps: f64,
    opts: &NumericOptions,
) -> Result<NumericBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let violations = graph.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidGraph(msg.join("; ")));
    }
    let obj = Objective {
        presentation: RllPresentation::new(graph.d())?,
        graph,
        eps,
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_starts = 0;
    for start in starting_points(graph, eps, opts)? {
        if obj.evaluate(&start).is_some() {
            feasible_starts += 1;
        }
        let start_value = obj.value(&start);
        let solver = NelderMead::new(initial_simplex(&start, 0.1))
            .with_sd_tolerance(1e-14)
            .expect("valid tolerance");
        let candidate = match Executor::new(obj, solver)
            .configure(|s| s.max_iters(opts.max_iters))
            .run()
        {
            Ok(res) => res
                .state()
                .get_best_param()
                .map(|p| clamp(p))
                .filter(|p| obj.value(p) >= start_value)
                .unwrap_or_else(|| start.clone()),
            Err(_) => start.clone(),
        };
        let candidate = polish(&obj, candidate, opts.polish_iters);
        let value = obj.value(&candidate);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, candidate));
        }
    }

    let (value, params) = best.expect("at least one start");
    let Some((value, p_one)) = obj.evaluate(&params).filter(|_| value > -INFEASIBLE) else {
        let pres = RllPresentation::new(graph.d())?;
        let probe = build_sq_chain(
            &pres,
            graph,
            eps,
            &InputPolicy::new(vec![0.5; params.len()])?,
        )?;
        return Err(Error::NoFeasiblePolicy(format!(
            "closed classes under a = 0.5: {:?}",
            probe.closed_classes()
        )));
    };
    Ok(NumericBound {
        result: BoundResult {
            value,
            argmax: p_one,
            domain: (0.0, 1.0),
            kind: BoundKind::NumericUpperBound,
        },
        policy: InputPolicy::new(params)?,
        feasible_starts,
    })
}
