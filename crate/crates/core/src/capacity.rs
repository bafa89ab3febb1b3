//! Channel capacity `max_{P(x)} I(X;Y)` by Blahut-Arimoto alternating
//! maximization.
//!
//! Each step returns a certified bracket: the mutual information at the current
//! input is a lower bound and `max_x D(T(·|x) ‖ q)` is an upper bound. The run
//! stops once the gap is below the tolerance.

use alloc::vec::Vec;

use crate::prob::{Dist, Kernel};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CapacityResult {
    /// Mutual information achieved by `optimal_input`, in bits.
    pub capacity: f64,
    pub optimal_input: Dist,
    pub iterations: usize,
    /// Upper bound minus lower bound at termination.
    pub residual: f64,
    pub converged: bool,
}

/// Sums a small set of terms in sorted order, so that the result does not
/// depend on how the terms were labelled.
fn sum_sorted(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Alternating-maximization state over a channel with zero-mass outputs pruned.
pub struct BlahutArimoto {
    rows: Vec<Vec<f64>>,
    input: Vec<f64>,
    scratch: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl BlahutArimoto {
    pub fn new(channel: &Kernel) -> Self {
        let live: Vec<usize> = (0..channel.n_to())
            .filter(|&y| channel.rows().any(|r| r[y] > 0.0))
            .collect();
        let rows = channel
            .rows()
            .map(|r| live.iter().map(|&y| r[y]).collect())
            .collect();
        let nx = channel.n_from();
        Self {
            rows,
            input: alloc::vec![1.0 / nx as f64; nx],
            scratch: Vec::with_capacity(nx),
        }
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// Divergence of each row from the current output marginal.
    fn divergences(&mut self) -> Vec<f64> {
        let ny = self.rows.first().map_or(0, Vec::len);
        let mut out_marginal = Vec::with_capacity(ny);
        for y in 0..ny {
            self.scratch.clear();
            self.scratch
                .extend(self.rows.iter().zip(&self.input).map(|(r, p)| p * r[y]));
            out_marginal.push(sum_sorted(&mut self.scratch));
        }
        self.rows
            .iter()
            .map(|r| {
                let mut terms: Vec<f64> = r
                    .iter()
                    .zip(&out_marginal)
                    .filter(|(t, _)| **t > 0.0)
                    .map(|(t, q)| t * libm::log2(t / q))
                    .collect();
                sum_sorted(&mut terms)
            })
            .collect()
    }

    /// Bounds at the current input, then one multiplicative update.
    pub fn step(&mut self) -> Bounds {
        let d = self.divergences();
        self.scratch.clear();
        self.scratch
            .extend(self.input.iter().zip(&d).map(|(p, di)| p * di));
        let lower = sum_sorted(&mut self.scratch).max(0.0);
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(lower);
        let mut weights: Vec<f64> = self
            .input
            .iter()
            .zip(&d)
            .map(|(p, di)| p * libm::exp2(*di))
            .collect();
        let mut sorted = weights.clone();
        let total = sum_sorted(&mut sorted);
        for w in &mut weights {
            *w /= total;
        }
        self.input = weights;
        Bounds { lower, upper }
    }
}

/// Capacity of `channel` to within `tol` bits.
///
/// A channel whose rows are all identical has capacity exactly zero and is
/// answered without iterating.
pub fn capacity(channel: &Kernel, tol: f64, max_iter: usize) -> CapacityResult {
    assert!(tol > 0.0, "capacity tolerance must be positive");
    let nx = channel.n_from();
    if channel.rows().all(|r| r == channel.row(0)) {
        return CapacityResult {
            capacity: 0.0,
            optimal_input: Dist::uniform(nx),
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut ba = BlahutArimoto::new(channel);
    let mut iterations = 0;
    loop {
        let before = ba.input().to_vec();
        let b = ba.step();
        iterations += 1;
        let residual = b.upper - b.lower;
        if residual <= tol || iterations >= max_iter {
            return CapacityResult {
                capacity: b.lower,
                optimal_input: Dist::from_weights(before).expect("input stays normalized"),
                iterations,
                residual,
                converged: residual <= tol,
            };
        }
    }
}
