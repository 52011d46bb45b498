//! Deterministic presentation of the (d,inf)-RLL constraint.
//!
//! State `s` counts the 0s written since the last 1, saturated at `d`. A 1 may
//! only be written from state `d`, after which the machine returns to state 0.

use crate::error::{Error, Result};

/// Largest `d` accepted by default. The de Bruijn Q-graph has `2^d + d` nodes.
pub const DEFAULT_MAX_D: usize = 16;

const POWER_ITER_TOL: f64 = 1e-12;
const POWER_ITER_MAX: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RllPresentation {
    d: usize,
}

impl RllPresentation {
    pub fn new(d: usize) -> Result<Self> {
        Self::with_cap(d, DEFAULT_MAX_D)
    }

    pub fn with_cap(d: usize, cap: usize) -> Result<Self> {
        check_order(d, cap)?;
        Ok(Self { d })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.d + 1
    }

    /// Inputs admissible at state `s`.
    pub fn allowed_inputs(&self, s: usize) -> &'static [u8] {
        debug_assert!(s <= self.d);
        if s == self.d {
            &[0, 1]
        } else {
            &[0]
        }
    }

    /// `f(s, x)`, or `None` when `x` is not admissible at `s`.
    #[inline]
    pub fn next_state(&self, s: usize, x: u8) -> Option<usize> {
        match x {
            0 => Some((s + 1).min(self.d)),
            1 if s == self.d => Some(0),
            _ => None,
        }
    }

    /// Adjacency matrix of the presentation (row = from, column = to).
    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut m = vec![vec![0.0; n]; n];
        for (s, row) in m.iter_mut().enumerate() {
            for &x in self.allowed_inputs(s) {
                if let Some(t) = self.next_state(s, x) {
                    row[t] += 1.0;
                }
            }
        }
        m
    }
}

pub(crate) fn check_order(d: usize, cap: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidOrder(d));
    }
    if d > cap {
        return Err(Error::OrderTooLarge { d, cap });
    }
    Ok(())
}

/// Noiseless capacity `log2 lambda_max` of the constraint, from power
/// iteration on the adjacency matrix.
pub fn noiseless_capacity(d: usize) -> Result<f64> {
    let p = RllPresentation::new(d)?;
    Ok(spectral_radius(&p.adjacency()).log2())
}

fn spectral_radius(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let mut w = vec![0.0; n];
        for (i, row) in m.iter().enumerate() {
            for (j, &mij) in row.iter().enumerate() {
                w[i] += mij * v[j];
            }
        }
        let norm: f64 = w.iter().sum();
        for x in &mut w {
            *x /= norm;
        }
        let converged = (norm - lambda).abs() <= POWER_ITER_TOL * norm
            && w.iter()
                .zip(&v)
                .all(|(a, b)| (a - b).abs() <= POWER_ITER_TOL);
        lambda = norm;
        v = w;
        if converged {
            break;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_transitions() {
        let p = RllPresentation::new(1).unwrap();
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.next_state(0, 0), Some(1));
        assert_eq!(p.next_state(1, 0), Some(1));
        assert_eq!(p.next_state(1, 1), Some(0));
        assert_eq!(p.next_state(0, 1), None);
    }

    #[test]
    fn d3_transitions() {
        let p = RllPresentation::new(3).unwrap();
        assert_eq!(p.next_state(2, 0), Some(3));
        assert_eq!(p.next_state(3, 0), Some(3));
        assert_eq!(p.next_state(3, 1), Some(0));
        for s in 0..3 {
            assert_eq!(p.next_state(s, 1), None);
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert_eq!(RllPresentation::new(0), Err(Error::InvalidOrder(0)));
        assert_eq!(
            RllPresentation::new(17),
            Err(Error::OrderTooLarge { d: 17, cap: 16 })
        );
        assert!(RllPresentation::with_cap(20, 24).is_ok());
    }

    #[test]
    fn allowed_inputs_by_state() {
        let p2 = RllPresentation::new(2).unwrap();
        assert_eq!(p2.allowed_inputs(1), &[0]);
        assert_eq!(p2.allowed_inputs(2), &[0, 1]);
        let p1 = RllPresentation::new(1).unwrap();
        assert_eq!(p1.allowed_inputs(1), &[0, 1]);
    }

    #[test]
    fn presentation_is_irreducible() {
        for d in 1..=8 {
            let p = RllPresentation::new(d).unwrap();
            let n = p.num_states();
            for start in 0..n {
                let mut seen = vec![false; n];
                let mut stack = vec![start];
                seen[start] = true;
                while let Some(s) = stack.pop() {
                    for &x in p.allowed_inputs(s) {
                        let t = p.next_state(s, x).unwrap();
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
                assert!(seen.iter().all(|&b| b), "d={d} start={start}");
            }
        }
    }

    fn real_root_bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn noiseless_capacity_matches_characteristic_roots() {
        // lambda_max is the largest root of x^(d+1) = x^d + 1.
        for d in 1..=6 {
            let root = real_root_bisect(
                |x: f64| x.powi(d as i32 + 1) - x.powi(d as i32) - 1.0,
                1.0,
                2.0,
            );
            let c = noiseless_capacity(d).unwrap();
            assert!(
                (c - root.log2()).abs() < 1e-9,
                "d={d}: {c} vs {}",
                root.log2()
            );
        }
        assert!((noiseless_capacity(1).unwrap() - 0.694_242).abs() < 1e-6);
        assert!((noiseless_capacity(2).unwrap() - 0.551_463).abs() < 1e-6);
        assert!((noiseless_capacity(3).unwrap() - 0.464_958).abs() < 1e-6);
    }
}
