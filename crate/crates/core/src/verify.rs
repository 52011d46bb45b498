//! Grid-driven numerical checks of the construction: policy validity, BCJR
//! invariance, agreement of the two update routes, the stationary
//! identification, the closed-form evaluation of `I(X;Y|Q)`, node-mass
//! identities, and the stationary formulas of the chain Q-graph.

use std::fmt;

use crate::bcjr::{
    beta_vector, invariance_residual, max_base_parameter, verify_closed_forms,
    verify_stationary_identification, BeliefAssignment,
};
use crate::bounds::rate;
use crate::channel::Output;
use crate::constraint::RllPresentation;
use crate::error::Result;
use crate::format::sig9;
use crate::qgraph::{build_chain_qgraph, build_debruijn_qgraph, debruijn_chain_node, NodeKind};
use crate::sq_chain::{build_sq_chain, conditional_mutual_information, InputPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturb the root belief vector before the invariance check.
    Theta,
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub d_max: usize,
    /// Points `k/n * 1/(d+1)`, `k = 1..=n`, for the base parameter.
    pub a_points: usize,
    pub eps_grid: Vec<f64>,
    pub fault: Option<Fault>,
}

impl VerifyConfig {
    pub fn new(d_max: usize) -> Self {
        Self {
            d_max,
            a_points: 20,
            eps_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            fault: None,
        }
    }

    pub fn a_grid(&self, d: usize) -> Vec<f64> {
        let top = max_base_parameter(d);
        (1..=self.a_points)
            .map(|k| k as f64 / self.a_points as f64 * top)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub worst_at: String,
    pub cases: usize,
}

impl CheckResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            worst: 0.0,
            tolerance,
            worst_at: String::new(),
            cases: 0,
        }
    }

    fn record(&mut self, value: f64, at: impl FnOnce() -> String) {
        self.cases += 1;
        // NaN counts as a failure.
        if value > self.worst || value.is_nan() {
            self.worst = value;
            self.worst_at = at();
        }
    }

    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} worst={:<12.3e} tol={:.0e} cases={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.cases
        )?;
        if !self.worst_at.is_empty() {
            write!(f, " at {}", self.worst_at)?;
        }
        Ok(())
    }
}

/// Policy domain check: every `a_q` lies in `[0, 1]` and
/// `sum_{s: w_s = ?} (1/(1-a))^beta_s <= d`. Reports the largest excess.
pub fn check_policy_domain(d_max: usize, points: usize) -> Result<CheckResult> {
    let mut r = CheckResult::new("policy_in_unit_interval", 0.0);
    for d in 1..=d_max {
        let g = build_debruijn_qgraph(d)?;
        let top = max_base_parameter(d);
        for k in 0..points {
            let a = k as f64 / (points - 1) as f64 * top;
            let policy = BeliefAssignment::new(&g, a)?.policy(&g)?;
            let excess = policy
                .values()
                .iter()
                .map(|&v| (v - 1.0).max(-v).max(0.0))
                .fold(0.0, f64::max);
            let mut bound_excess = 0.0f64;
            for mask in 0..(1u32 << d) {
                let beta = beta_vector(mask, d);
                let sum: f64 = (0..d)
                    .filter(|&s| mask >> s & 1 == 1)
                    .map(|s| (1.0 / (1.0 - a)).powi(beta[s] as i32))
                    .sum();
                // the all-? tuple meets the bound with equality
                bound_excess = bound_excess.max(sum - d as f64 - 1e-12);
            }
            r.record(excess.max(bound_excess.max(0.0)), || {
                format!("d={d} a={}", sig9(a))
            });
        }
    }
    Ok(r)
}

pub fn check_invariance(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut r = CheckResult::new("bcjr_invariance", 1e-12);
    for d in 1..=cfg.d_max {
        let g = build_debruijn_qgraph(d)?;
        for a in cfg.a_grid(d) {
            let mut beliefs = BeliefAssignment::new(&g, a)?;
            let policy = beliefs.policy(&g)?;
            if cfg.fault == Some(Fault::Theta) {
                let t = beliefs.theta_mut(g.root());
                t[0] += 0.01;
                let sum: f64 = t.iter().sum();
                t.iter_mut().for_each(|x| *x /= sum);
            }
            for &eps in &cfg.eps_grid {
                let res = invariance_residual(&g, &beliefs, &policy, eps)?;
                r.record(res, || format!("d={d} a={} eps={}", sig9(a), sig9(eps)));
            }
        }
    }
    Ok(r)
}

pub fn check_closed_forms(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut r = CheckResult::new("closed_form_updates", 1e-13);
    for d in 1..=cfg.d_max {
        for a in cfg.a_grid(d) {
            for &eps in &cfg.eps_grid {
                r.record(verify_closed_forms(d, a, eps)?, || {
                    format!("d={d} a={} eps={}", sig9(a), sig9(eps))
                });
            }
        }
    }
    Ok(r)
}

pub fn check_stationary_identification(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut r = CheckResult::new("stationary_identification", 1e-10);
    for d in 1..=cfg.d_max {
        for a in cfg.a_grid(d) {
            for &eps in &cfg.eps_grid {
                let res = verify_stationary_identification(d, a, eps)?;
                r.record(res, || format!("d={d} a={} eps={}", sig9(a), sig9(eps)));
            }
        }
    }
    Ok(r)
}

/// Largest deviations, over the grid, of
/// `[I(X;Y|Q) - h_b(a)/(d a + 1/(1-eps)), node-mass identities, P(Y=1|q) - a(1-eps)]`.
pub fn check_debruijn_chain(cfg: &VerifyConfig) -> Result<[CheckResult; 3]> {
    let mut info = CheckResult::new("information_closed_form", 1e-10);
    let mut mass = CheckResult::new("node_mass_identities", 1e-12);
    let mut y_one = CheckResult::new("output_one_probability", 1e-12);
    for d in 1..=cfg.d_max {
        let g = build_debruijn_qgraph(d)?;
        let pres = RllPresentation::new(d)?;
        for a in cfg.a_grid(d) {
            let policy = BeliefAssignment::new(&g, a)?.policy(&g)?;
            for &eps in &cfg.eps_grid {
                let chain = build_sq_chain(&pres, &g, eps, &policy)?;
                let pi = chain.stationary()?;
                let at = || format!("d={d} a={} eps={}", sig9(a), sig9(eps));

                let i = conditional_mutual_information(&chain, &pi);
                info.record((i - rate(a, d, eps)).abs(), at);

                let db_mass: f64 = (0..1usize << d).map(|q| pi.node(q)).sum();
                let q0 = pi.node(debruijn_chain_node(d, 0));
                let mut dev = (db_mass - 1.0 / (1.0 + d as f64 * a * (1.0 - eps))).abs();
                dev = dev.max((q0 - (1.0 - eps) * a * db_mass).abs());
                for i in 1..d {
                    dev = dev.max((pi.node(debruijn_chain_node(d, i)) - q0).abs());
                }
                mass.record(dev, at);

                let mut worst = 0.0f64;
                for q in 0..g.num_nodes() {
                    if matches!(g.kind(q), NodeKind::DeBruijn { .. }) && pi.node(q) > 0.0 {
                        let py = chain.output_distribution(&pi, q);
                        worst = worst.max((py[Output::One.index()] - a * (1.0 - eps)).abs());
                    }
                }
                y_one.record(worst, at);
            }
        }
    }
    Ok([info, mass, y_one])
}

/// Stationary formulas of the chain Q-graph with `p = P(X=1 | S=d, Qh_d)`.
pub fn check_chain_graph_formulas(ds: &[usize], ps: &[f64], epss: &[f64]) -> Result<CheckResult> {
    let mut r = CheckResult::new("chain_graph_stationary", 1e-12);
    for &d in ds {
        let g = build_chain_qgraph(d)?;
        let pres = RllPresentation::new(d)?;
        let df = d as f64;
        for &p in ps {
            let mut a = vec![0.0; d + 1];
            a[d] = p;
            let policy = InputPolicy::new(a)?;
            for &eps in epss {
                let chain = build_sq_chain(&pres, &g, eps, &policy)?;
                let pi = chain.stationary()?;
                let mut dev = (pi.joint(d, d) - 1.0 / (1.0 + df * p)).abs();
                for s in 0..d {
                    dev = dev.max((pi.joint(s, s) - p * (1.0 - eps) / (1.0 + df * p)).abs());
                    dev = dev.max((pi.joint(s, d) - p * eps / (1.0 + df * p)).abs());
                }
                let py1 = chain.output_distribution(&pi, d)[Output::One.index()];
                dev = dev.max((py1 - p * (1.0 - eps) / (1.0 + df * p * eps)).abs());
                r.record(dev, || format!("d={d} p={} eps={}", sig9(p), sig9(eps)));
            }
        }
    }
    Ok(r)
}

/// The full suite used by `verify`.
pub fn run_suite(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let grid5 = [0.1, 0.3, 0.5, 0.7, 0.9];
    let ds: Vec<usize> = (1..=cfg.d_max.max(1)).collect();
    let mut out = vec![
        check_policy_domain(cfg.d_max, 50)?,
        check_invariance(cfg)?,
        check_closed_forms(cfg)?,
        check_stationary_identification(cfg)?,
    ];
    out.extend(check_debruijn_chain(cfg)?);
    out.push(check_chain_graph_formulas(&ds, &grid5, &grid5)?);
    Ok(out)
}
