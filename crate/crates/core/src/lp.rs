//! Dense two-phase primal simplex with Bland's rule.
//!
//! Sized for the concavification programs: a handful of rows and up to a few
//! tens of thousands of columns. Solves
//!
//! ```text
//! maximize  c·x   subject to  A_eq x = b_eq,  A_ge x ≥ b_ge,  x ≥ 0.
//! ```

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    /// Reduced costs above this value are improving.
    pub optimality_tol: f64,
    /// Largest phase-one residual accepted as feasible.
    pub feasibility_tol: f64,
    pub max_pivots: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-10,
            optimality_tol: 1e-11,
            feasibility_tol: 1e-9,
            max_pivots: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    ge: Vec<(Vec<f64>, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.n_vars(), "constraint width");
        self.eq.push((row, rhs));
        self
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.n_vars(), "constraint width");
        self.ge.push((row, rhs));
        self
    }

    pub fn n_rows(&self) -> usize {
        self.eq.len() + self.ge.len()
    }

    pub fn maximize(&self, opts: &LpOptions) -> LpSolution {
        Tableau::build(self).solve(&self.objective, opts)
    }
}

struct Tableau {
    n: usize,
    /// Column index of the first artificial variable.
    art_start: usize,
    width: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let n_surplus = lp.ge.len();
        let m = lp.n_rows();
        let art_start = n + n_surplus;
        let width = art_start + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let all = lp
            .eq
            .iter()
            .map(|(a, b)| (a, *b, None))
            .chain(lp.ge.iter().enumerate().map(|(k, (a, b))| (a, *b, Some(k))));
        for (r, (a, b, surplus)) in all.enumerate() {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(a);
            if let Some(k) = surplus {
                row[n + k] = -1.0;
            }
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for x in &mut row[..art_start] {
                *x *= sign;
            }
            row[art_start + r] = 1.0;
            rows.push(row);
            rhs.push(sign * b);
            basis.push(art_start + r);
        }
        Self {
            n,
            art_start,
            width,
            rows,
            rhs,
            basis,
        }
    }

    fn pivot(&mut self, r: usize, j: usize, reduced: &mut [f64], value: &mut f64) {
        let p = self.rows[r][j];
        for x in &mut self.rows[r] {
            *x /= p;
        }
        self.rhs[r] /= p;
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[j] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = reduced[j];
        if f != 0.0 {
            for (x, pr) in reduced.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            reduced[j] = 0.0;
            *value += f * pivot_rhs;
        }
        self.basis[r] = j;
    }

    /// Reduced costs `c_j - c_B B⁻¹ A_j` and current objective for cost `c`
    /// (indexed by tableau column).
    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut d = cost.to_vec();
        let mut value = 0.0;
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (x, a) in d.iter_mut().zip(&self.rows[r]) {
                    *x -= cb * a;
                }
                value += cb * self.rhs[r];
            }
        }
        (d, value)
    }

    /// Bland's rule iterations over columns `< limit`.
    fn iterate(
        &mut self,
        reduced: &mut [f64],
        value: &mut f64,
        limit: usize,
        opts: &LpOptions,
        pivots: &mut usize,
    ) -> LpStatus {
        loop {
            let Some(j) = (0..limit).find(|&j| reduced[j] > opts.optimality_tol) else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > opts.pivot_tol {
                    let ratio = self.rhs[r].max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio || (ratio == lratio && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return LpStatus::Unbounded;
            };
            if *pivots >= opts.max_pivots {
                return LpStatus::IterationLimit;
            }
            self.pivot(r, j, reduced, value);
            *pivots += 1;
        }
    }

    fn solve(mut self, objective: &[f64], opts: &LpOptions) -> LpSolution {
        let mut pivots = 0;
        let failed = |status, pivots| LpSolution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            pivots,
        };

        // Phase one: maximize minus the sum of artificials.
        let mut cost = vec![0.0; self.width];
        for c in &mut cost[self.art_start..] {
            *c = -1.0;
        }
        let (mut reduced, mut value) = self.reduced_costs(&cost);
        let status = self.iterate(&mut reduced, &mut value, self.art_start, opts, &mut pivots);
        if status == LpStatus::IterationLimit {
            return failed(status, pivots);
        }
        if value < -opts.feasibility_tol {
            return failed(LpStatus::Infeasible, pivots);
        }

        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.art_start {
                match (0..self.art_start).find(|&j| self.rows[r][j].abs() > opts.pivot_tol) {
                    Some(j) => {
                        let mut scratch = vec![0.0; self.width];
                        let mut v = 0.0;
                        self.pivot(r, j, &mut scratch, &mut v);
                    }
                    None => {
                        self.rows.remove(r);
                        self.rhs.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // Phase two.
        let mut cost = vec![0.0; self.width];
        cost[..self.n].copy_from_slice(objective);
        let (mut reduced, mut value) = self.reduced_costs(&cost);
        let status = self.iterate(&mut reduced, &mut value, self.art_start, opts, &mut pivots);
        if status != LpStatus::Optimal {
            return failed(status, pivots);
        }
        let mut x = vec![0.0; self.n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs[r].max(0.0);
            }
        }
        let objective = x.iter().zip(objective).map(|(a, c)| a * c).sum();
        LpSolution {
            status,
            x,
            objective,
            pivots,
        }
    }
}
