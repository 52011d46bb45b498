use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use rllfb::bcjr::{bcjr_update, build_policy, max_base_parameter, BeliefAssignment};
use rllfb::bounds::{
    lower_bound, maximize_rate, noncausal_capacity, rate, rate_derivative, upper_bound_analytic,
};
use rllfb::constraint::{noiseless_capacity, RllPresentation};
use rllfb::qgraph::build_debruijn_qgraph;
use rllfb::sim::{simulate, SimConfig};
use rllfb::sq_chain::{build_sq_chain, conditional_mutual_information, InputPolicy};
use rllfb::verify::check_policy_domain;
use rllfb::Output;

/// Brute-force maximum of R over `n + 1` equally spaced points.
fn grid_scan(d: usize, eps: f64, lo: f64, hi: f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| rate(lo + (hi - lo) * i as f64 / n as f64, d, eps))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn maximizer_matches_grid_scan() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    for _ in 0..20 {
        let d = rng.random_range(1..=6usize);
        let eps = rng.random_range(0.0..0.95);
        let lo = rng.random_range(0.0..0.5);
        let hi = rng.random_range(lo + 0.01..=1.0);
        let best = maximize_rate(d, eps, lo, hi);
        let scan = grid_scan(d, eps, lo, hi, 1_000_000);
        assert!(
            (best.value - scan).abs() <= 1e-9 && best.value >= scan - 1e-15,
            "d={d} eps={eps} [{lo},{hi}]: {} vs scan {scan}",
            best.value
        );
        assert!(best.argmax >= lo && best.argmax <= hi);
    }
}

#[test]
fn derivative_matches_central_differences() {
    let h = 1e-6;
    for d in 1..=5 {
        for &eps in &[0.0, 0.3, 0.7, 0.95] {
            for i in 1..=99 {
                let x = i as f64 / 100.0;
                let fd = (rate(x + h, d, eps) - rate(x - h, d, eps)) / (2.0 * h);
                let an = rate_derivative(x, d, eps);
                assert!(
                    (fd - an).abs() < 1e-5,
                    "d={d} eps={eps} x={x}: {fd} vs {an}"
                );
            }
        }
    }
}

#[test]
fn derivative_is_strictly_decreasing() {
    for d in 1..=5 {
        for &eps in &[0.0, 0.5, 0.9] {
            let vals: Vec<f64> = (1..1000)
                .map(|i| rate_derivative(i as f64 / 1000.0, d, eps))
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
        }
    }
}

#[test]
fn noiseless_capacity_equals_unconstrained_rate_maximum() {
    for d in 1..=8 {
        let spectral = noiseless_capacity(d).unwrap();
        let rate_max = maximize_rate(d, 0.0, 0.0, 1.0).value;
        assert!(
            (spectral - rate_max).abs() < 1e-8,
            "d={d}: {spectral} vs {rate_max}"
        );
    }
}

#[test]
fn policy_values_stay_in_unit_interval() {
    let r = check_policy_domain(8, 50).unwrap();
    assert!(r.passed(), "{r}");
    assert_eq!(r.cases, 8 * 50);
}

#[test]
fn bounds_are_ordered_and_monotone() {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let table: Vec<Vec<[f64; 3]>> = (1..=5)
        .map(|d| {
            grid.iter()
                .map(|&e| {
                    [
                        lower_bound(d, e).unwrap().value,
                        upper_bound_analytic(d, e).unwrap().value,
                        noncausal_capacity(d, e).unwrap().value,
                    ]
                })
                .collect()
        })
        .collect();
    for (di, rows) in table.iter().enumerate() {
        for (ei, [lb, ub, nc]) in rows.iter().enumerate() {
            assert!(lb <= &(ub + 1e-10) && ub <= &(nc + 1e-10) && lb <= &(nc + 1e-10));
            let cell = &rows[ei];
            if ei > 0 {
                for (now, before) in cell.iter().zip(&rows[ei - 1]) {
                    assert!(now <= &(before + 1e-12), "eps monotone d={}", di + 1);
                }
            }
            if di > 0 {
                for (now, smaller_d) in cell.iter().zip(&table[di - 1][ei]) {
                    assert!(now <= &(smaller_d + 1e-12), "d monotone");
                }
            }
        }
    }
}

#[test]
fn lower_bound_is_information_of_the_bcjr_policy() {
    for d in 1..=4 {
        let g = build_debruijn_qgraph(d).unwrap();
        let pres = RllPresentation::new(d).unwrap();
        for &eps in &[0.05, 0.2, 0.5, 0.8] {
            let lb = lower_bound(d, eps).unwrap();
            let policy = build_policy(d, lb.argmax).unwrap();
            let chain = build_sq_chain(&pres, &g, eps, &policy).unwrap();
            let pi = chain.stationary().unwrap();
            let i = conditional_mutual_information(&chain, &pi);
            assert!(
                (i - lb.value).abs() < 1e-10,
                "d={d} eps={eps}: {i} vs {}",
                lb.value
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_rows_are_stochastic(d in 1usize..=4, eps in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = build_debruijn_qgraph(d).unwrap();
        let pres = RllPresentation::new(d).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let a = (0..g.num_nodes()).map(|_| rng.random::<f64>()).collect();
        let chain = build_sq_chain(&pres, &g, eps, &InputPolicy::new(a).unwrap()).unwrap();
        prop_assert!(chain.max_row_defect() <= 1e-12);
        for i in 0..chain.num_states() {
            let (s, q) = chain.state_of(i);
            for e in chain.edges_from(i) {
                let (s2, q2) = chain.state_of(e.to);
                prop_assert_eq!(Some(s2), pres.next_state(s, e.x));
                prop_assert_eq!(q2, g.step(q, e.y));
                prop_assert!(e.prob > 0.0);
            }
        }
    }

    #[test]
    fn stationary_residual_is_tiny(d in 1usize..=4, frac in 0.01f64..=1.0, eps in 0.01f64..0.99) {
        let a = frac * max_base_parameter(d);
        let g = build_debruijn_qgraph(d).unwrap();
        let pres = RllPresentation::new(d).unwrap();
        let chain = build_sq_chain(&pres, &g, eps, &build_policy(d, a).unwrap()).unwrap();
        let pi = chain.stationary().unwrap();
        prop_assert!(pi.residual <= 1e-12);
        prop_assert!((pi.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pi.as_slice().iter().all(|&p| p >= 0.0));
    }

    /// Beliefs propagated from an arbitrary starting point coincide with the
    /// stored theta once an output 1 has been observed.
    #[test]
    fn beliefs_lock_on_after_a_one(
        d in 1usize..=4,
        frac in 0.05f64..=1.0,
        eps in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let a = frac * max_base_parameter(d);
        let g = build_debruijn_qgraph(d).unwrap();
        let pres = RllPresentation::new(d).unwrap();
        let beliefs = BeliefAssignment::new(&g, a).unwrap();
        let policy = beliefs.policy(&g).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut belief: Vec<f64> = (0..=d).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = belief.iter().sum();
        belief.iter_mut().for_each(|x| *x /= total);
        let mut q = g.root();
        let mut locked = false;
        for _ in 0..20 {
            // sample y from the predictive distribution of the current belief
            let py: Vec<f64> = Output::ALL
                .iter()
                .map(|&y| {
                    (0..=d)
                        .flat_map(|s| pres.allowed_inputs(s).iter().map(move |&x| (s, x)))
                        .map(|(s, x)| {
                            belief[s] * policy.input_prob(d, s, q, x)
                                * rllfb::channel::bec_prob(eps, x, y)
                        })
                        .sum()
                })
                .collect();
            let u: f64 = rng.random::<f64>() * py.iter().sum::<f64>();
            let y = if u < py[0] {
                Output::Zero
            } else if u < py[0] + py[1] {
                Output::Erasure
            } else {
                Output::One
            };
            belief = bcjr_update(&pres, eps, &policy, q, &belief, y).unwrap();
            q = g.step(q, y);
            locked |= y == Output::One;
            if locked {
                let target = beliefs.theta(q);
                let dev = belief.iter().zip(target).map(|(x, t)| (x - t).abs()).fold(0.0, f64::max);
                prop_assert!(dev < 1e-12, "deviation {dev} at node {}", g.label(q));
            }
        }
    }
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_sqrt_n() {
    let g = build_debruijn_qgraph(2).unwrap();
    let pres = RllPresentation::new(2).unwrap();
    let policy = build_policy(2, 0.25).unwrap();
    let chain = build_sq_chain(&pres, &g, 0.5, &policy).unwrap();
    let truth = conditional_mutual_information(&chain, &chain.stationary().unwrap());
    let rms = |n: u64| {
        let sq: f64 = (0..16)
            .map(|seed| {
                let r = simulate(&g, 0.5, &policy, &SimConfig::new(n, 1000 + seed)).unwrap();
                (r.empirical_i - truth).powi(2)
            })
            .sum();
        (sq / 16.0).sqrt()
    };
    let (small, large) = (rms(40_000), rms(160_000));
    let ratio = small / large;
    assert!(
        (1.0..=4.0).contains(&ratio),
        "rms {small} -> {large}, ratio {ratio}"
    );
}

/// Best-effort search for a second BCJR-invariant policy with the same `a`:
/// random perturbations of the de Bruijn policy should all break invariance.
#[test]
#[ignore = "randomized falsification search; run with --ignored"]
fn no_other_invariant_policy_nearby() {
    let d = 2;
    let a = 0.25;
    let eps = 0.4;
    let g = build_debruijn_qgraph(d).unwrap();
    let pres = RllPresentation::new(d).unwrap();
    let base = build_policy(d, a).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    for _ in 0..2_000 {
        let mut values = base.values().to_vec();
        for (v, val) in values.iter_mut().enumerate() {
            if v != g.root() && v < 1 << d {
                *val = (*val + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0);
            }
        }
        let policy = InputPolicy::new(values).unwrap();
        let chain = build_sq_chain(&pres, &g, eps, &policy).unwrap();
        let Ok(pi) = chain.stationary() else { continue };
        let mut worst = 0.0f64;
        for v in 0..g.num_nodes() {
            if pi.node(v) <= 0.0 {
                continue;
            }
            let belief: Vec<f64> = (0..=d).map(|s| pi.conditional(s, v)).collect();
            for y in Output::ALL {
                let Ok(b) = bcjr_update(&pres, eps, &policy, v, &belief, y) else {
                    continue;
                };
                let next = g.step(v, y);
                for (s, bs) in b.iter().enumerate() {
                    worst = worst.max((bs - pi.conditional(s, next)).abs());
                }
            }
        }
        let changed = policy
            .values()
            .iter()
            .zip(base.values())
            .any(|(x, y)| (x - y).abs() > 1e-6);
        if changed {
            assert!(
                worst > 1e-9,
                "found another invariant policy: {:?}",
                policy.values()
            );
        }
    }
}
