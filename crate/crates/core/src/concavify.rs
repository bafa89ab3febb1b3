//! The encoder's optimal value three ways:
//!
//! * [`concavify_constrained`]: a linear program over a belief grid. Each grid
//!   point `p_g` is a candidate posterior; the weights `λ_g` must average to
//!   the prior and keep `Σ λ_g h(p_g) ≥ H(U|Z) - C`. A basic optimal solution
//!   uses at most `|U| + 1` points.
//! * [`lagrangian_solve`]: the dual, `inf_t cav[Ψ_e + t h](prior) - t (H(U|Z) - C)`.
//! * [`brute_force_direct`]: exhaustive search over disclosure kernels
//!   `Q(w|u)` on a grid, each evaluated by [`Scenario::direct_value`].
//!
//! `Ψ_e` jumps wherever the decoder switches action, so the grid is augmented
//! with points just either side of every switch. The supremum is approached
//! from below; atoms that sit on such shifted points are flagged.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::game::{ActionProfile, Atom, Belief, DisclosureKernel, Scenario, Splitting};
use crate::lp::{LinearProgram, LpOptions, LpStatus};
use crate::prob::{entropy_bits, Dist};
use crate::{par, Error, Result, FEASIBILITY_TOL};

/// Upper end of the Lagrange multiplier search.
pub const T_CAP: f64 = 1e4;

/// Largest number of kernels [`brute_force_direct`] will enumerate.
pub const BRUTE_FORCE_CAP: u128 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    /// Lattice steps per simplex edge.
    pub resolution: usize,
    /// Signed shifts applied around each detected action switch.
    pub breakpoint_offsets: Vec<f64>,
}

impl GridSpec {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            breakpoint_offsets: vec![-1e-9, 1e-9],
        }
    }

    /// 2000 steps for binary sources, 200 for ternary, coarser beyond.
    pub fn default_for(nu: usize) -> Self {
        Self::new(match nu {
            0..=2 => 2000,
            3 => 200,
            4 => 40,
            _ => 12,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution {} is below 2",
                self.resolution
            )));
        }
        let step = 1.0 / self.resolution as f64;
        if let Some(o) = self.breakpoint_offsets.iter().find(|o| **o == 0.0 || o.abs() >= step) {
            return Err(Error::InvalidArgument(format!(
                "breakpoint offset {o} must be nonzero and smaller than the grid step {step}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    Lp,
    Lagrangian,
    DirectBruteforce,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveResult {
    pub value: f64,
    pub splitting: Splitting,
    /// Decoder action per state for each atom.
    pub action_profiles: Vec<ActionProfile>,
    /// `Σ λ h(p)`.
    pub avg_entropy: f64,
    /// `I(U;W|Z) = H(U|Z) - Σ λ h(p)`.
    pub info_rate: f64,
    /// Capacity minus `info_rate`; absent for the unconstrained problem.
    pub constraint_slack: Option<f64>,
    pub dual_t: Option<f64>,
    pub method: Method,
    /// Atoms placed on a shifted breakpoint rather than a lattice point.
    pub offset_atoms: Vec<bool>,
}

/// Candidate posteriors with their `Ψ_e` and `h` values.
#[derive(Debug, Clone)]
pub struct BeliefGrid {
    nu: usize,
    points: Vec<f64>,
    utility: Vec<f64>,
    entropy: Vec<f64>,
    offset: Vec<bool>,
}

impl BeliefGrid {
    pub fn build(s: &Scenario, prior: &Belief, g: &GridSpec) -> Result<Self> {
        g.validate()?;
        let nu = s.nu();
        if prior.mass().len() != nu {
            return Err(Error::DimensionMismatch(format!(
                "prior has {} entries, |U| = {nu}",
                prior.mass().len()
            )));
        }
        let lattice = compositions(g.resolution, nu);
        let n = g.resolution as f64;
        let mut points: Vec<f64> = lattice.iter().flat_map(|k| k.iter().map(move |&c| c as f64 / n)).collect();
        let mut offset = vec![false; lattice.len()];
        points.extend_from_slice(prior.mass());
        offset.push(false);

        let extra = match nu {
            1 => Vec::new(),
            2 => binary_breakpoints(s, g),
            _ => lattice_breakpoints(s, g, &lattice),
        };
        for p in extra {
            points.extend(p);
            offset.push(true);
        }

        let count = offset.len();
        let evaluated = par::map_range(count, |i| {
            let b = s.evaluate_belief(&points[i * nu..(i + 1) * nu]);
            (b.utility, b.entropy)
        });
        let (utility, entropy) = evaluated.into_iter().unzip();
        Ok(Self {
            nu,
            points,
            utility,
            entropy,
            offset,
        })
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.nu..(i + 1) * self.nu]
    }

    pub fn utility(&self, i: usize) -> f64 {
        self.utility[i]
    }

    pub fn entropy(&self, i: usize) -> f64 {
        self.entropy[i]
    }

    pub fn is_offset(&self, i: usize) -> bool {
        self.offset[i]
    }
}

/// All vectors of `parts` nonnegative integers summing to `total`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            rec(total - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Beliefs `q` (mass on the second symbol) at which some pair of actions is
/// tied at some state, for either player, pulled back through the state
/// posterior map.
pub fn binary_switch_points(s: &Scenario) -> Vec<f64> {
    let mut out = Vec::new();
    let k = s.state_kernel();
    for z in 0..s.nz() {
        let (k1, k2) = (k.get(0, z), k.get(1, z));
        for v in 0..s.nv() {
            for w in v + 1..s.nv() {
                for table in [s.utility_decoder(), s.utility_encoder()] {
                    let d0 = table.get(0, z, v) - table.get(0, z, w);
                    let d1 = table.get(1, z, v) - table.get(1, z, w);
                    if d0 == d1 {
                        continue;
                    }
                    // posterior r on the second symbol where the two actions tie
                    let r = d0 / (d0 - d1);
                    if !(0.0..=1.0).contains(&r) {
                        continue;
                    }
                    let den = r * k1 + (1.0 - r) * k2;
                    if den > 0.0 {
                        out.push(r * k1 / den);
                    }
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn binary_breakpoints(s: &Scenario, g: &GridSpec) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for q in binary_switch_points(s) {
        for o in &g.breakpoint_offsets {
            let p = q + o;
            if (0.0..=1.0).contains(&p) {
                out.push(vec![1.0 - p, p]);
            }
        }
    }
    out
}

/// Walks every lattice edge; where the action profile differs between the two
/// ends, bisects for the switch and inserts shifted points around it.
fn lattice_breakpoints(s: &Scenario, g: &GridSpec, lattice: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let nu = s.nu();
    let n = g.resolution as f64;
    let to_belief = |k: &[usize]| -> Vec<f64> { k.iter().map(|&c| c as f64 / n).collect() };
    let index: BTreeMap<&[usize], usize> = lattice.iter().enumerate().map(|(i, k)| (k.as_slice(), i)).collect();
    let profiles = par::map_range(lattice.len(), |i| s.evaluate_belief(&to_belief(&lattice[i])).profile);

    let mut edges = Vec::new();
    for (i, k) in lattice.iter().enumerate() {
        for a in 0..nu {
            if k[a] == 0 {
                continue;
            }
            for b in a + 1..nu {
                let mut nb = k.clone();
                nb[a] -= 1;
                nb[b] += 1;
                let j = index[nb.as_slice()];
                if profiles[i] != profiles[j] {
                    edges.push((i, j, a, b));
                }
            }
        }
    }

    let found = par::map_range(edges.len(), |e| {
        let (i, j, a, b) = edges[e];
        let start = to_belief(&lattice[i]);
        let end = to_belief(&lattice[j]);
        let at = |t: f64| -> Vec<f64> { start.iter().zip(&end).map(|(x, y)| x + t * (y - x)).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if s.evaluate_belief(&at(mid)).profile == profiles[i] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let switch = at(0.5 * (lo + hi));
        // shift mass from symbol a to symbol b
        g.breakpoint_offsets
            .iter()
            .filter_map(|o| {
                let mut p = switch.clone();
                p[a] -= o;
                p[b] += o;
                (p[a] >= 0.0 && p[b] >= 0.0).then_some(p)
            })
            .collect::<Vec<_>>()
    });
    found.into_iter().flatten().collect()
}

struct GridLp {
    splitting: Splitting,
    indices: Vec<usize>,
    value: f64,
    avg_entropy: f64,
}

/// Maximizes `Σ λ (Ψ_e + t h)` over grid splittings of the prior, optionally
/// subject to `Σ λ h ≥ entropy_floor`.
fn solve_grid(grid: &BeliefGrid, prior: &Belief, t: f64, entropy_floor: Option<f64>) -> Result<GridLp> {
    let nu = grid.nu;
    let n = grid.len();
    let objective: Vec<f64> = (0..n).map(|i| grid.utility(i) + t * grid.entropy(i)).collect();
    let mut lp = LinearProgram::new(objective);
    lp.add_eq(vec![1.0; n], 1.0);
    for u in 0..nu.saturating_sub(1) {
        lp.add_eq((0..n).map(|i| grid.point(i)[u]).collect(), prior.mass()[u]);
    }
    if let Some(floor) = entropy_floor {
        lp.add_ge(grid.entropy.clone(), floor);
    }
    let sol = lp.maximize(&LpOptions::default());
    if sol.status != LpStatus::Optimal {
        return Err(Error::NoConvergence(format!("grid linear program ended {:?}", sol.status)));
    }
    let indices: Vec<usize> = (0..n).filter(|&i| sol.x[i] > 0.0).collect();
    let total: f64 = indices.iter().map(|&i| sol.x[i]).sum();
    let atoms = indices
        .iter()
        .map(|&i| Atom {
            weight: sol.x[i] / total,
            belief: Belief(Dist::from_weights(grid.point(i).to_vec()).expect("grid point is a belief")),
        })
        .collect();
    let value = indices.iter().map(|&i| sol.x[i] / total * grid.utility(i)).sum();
    let avg_entropy = indices.iter().map(|&i| sol.x[i] / total * grid.entropy(i)).sum();
    Ok(GridLp {
        splitting: Splitting::new(atoms)?,
        indices,
        value,
        avg_entropy,
    })
}

fn lp_result(s: &Scenario, grid: &BeliefGrid, prior: &Belief, sol: GridLp, capacity: Option<f64>) -> SolveResult {
    let h_prior = s.average_entropy(prior.mass());
    let info_rate = (h_prior - sol.avg_entropy).max(0.0);
    SolveResult {
        value: sol.value,
        action_profiles: profiles_of(s, &sol.splitting),
        avg_entropy: sol.avg_entropy,
        info_rate,
        constraint_slack: capacity.map(|c| c - info_rate),
        dual_t: None,
        method: Method::Lp,
        offset_atoms: sol.indices.iter().map(|&i| grid.is_offset(i)).collect(),
        splitting: sol.splitting,
    }
}

fn profiles_of(s: &Scenario, sp: &Splitting) -> Vec<ActionProfile> {
    sp.atoms().iter().map(|a| s.evaluate_belief(a.belief.mass()).profile).collect()
}

/// `cav Ψ_e(prior)` on the grid, with no information constraint.
pub fn concavify_unconstrained(s: &Scenario, prior: &Belief, g: &GridSpec) -> Result<SolveResult> {
    let grid = BeliefGrid::build(s, prior, g)?;
    let sol = solve_grid(&grid, prior, 0.0, None)?;
    Ok(lp_result(s, &grid, prior, sol, None))
}

/// The constrained concavification: best grid splitting of `prior` with
/// `Σ λ h(p) ≥ H(U|Z) - capacity`.
pub fn concavify_constrained(s: &Scenario, prior: &Belief, capacity: f64, g: &GridSpec) -> Result<SolveResult> {
    let grid = BeliefGrid::build(s, prior, g)?;
    constrained_on_grid(s, &grid, prior, capacity)
}

/// [`concavify_constrained`] on a prebuilt grid.
pub fn constrained_on_grid(s: &Scenario, grid: &BeliefGrid, prior: &Belief, capacity: f64) -> Result<SolveResult> {
    if !(capacity >= 0.0) {
        return Err(Error::InvalidArgument(format!("capacity {capacity} is negative")));
    }
    let floor = s.average_entropy(prior.mass()) - capacity;
    // A nonpositive floor can never bind.
    let sol = solve_grid(grid, prior, 0.0, (floor > 0.0).then_some(floor))?;
    Ok(lp_result(s, grid, prior, sol, Some(capacity)))
}

/// `cav[Ψ_e + t h](prior) - t (H(U|Z) - capacity)` on the grid. An upper bound
/// on the constrained value for every `t ≥ 0`.
pub fn lagrangian_value(s: &Scenario, prior: &Belief, capacity: f64, t: f64, g: &GridSpec) -> Result<f64> {
    let grid = BeliefGrid::build(s, prior, g)?;
    let floor = s.average_entropy(prior.mass()) - capacity;
    Ok(dual_on_grid(&grid, prior, t, floor)?.0)
}

fn dual_on_grid(grid: &BeliefGrid, prior: &Belief, t: f64, floor: f64) -> Result<(f64, GridLp)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("multiplier {t} is negative")));
    }
    let sol = solve_grid(grid, prior, t, None)?;
    let dual = sol.value + t * sol.avg_entropy - t * floor;
    Ok((dual, sol))
}

/// Minimizes the dual over `t` by golden-section search and recovers a
/// feasible splitting from the two sides of the minimizer.
pub fn lagrangian_solve(s: &Scenario, prior: &Belief, capacity: f64, g: &GridSpec, t_tol: f64) -> Result<SolveResult> {
    if !(t_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("t tolerance {t_tol} must be positive")));
    }
    if !(capacity >= 0.0) {
        return Err(Error::InvalidArgument(format!("capacity {capacity} is negative")));
    }
    let grid = BeliefGrid::build(s, prior, g)?;
    let h_prior = s.average_entropy(prior.mass());
    let floor = h_prior - capacity;
    let range = s.utility_encoder().max() - s.utility_encoder().min();

    let dual = |t: f64| dual_on_grid(&grid, prior, t, floor).map(|d| d.0);
    let t_star = if floor <= 0.0 || range == 0.0 {
        0.0
    } else {
        // The prior alone has slack `capacity`, which bounds the optimal multiplier.
        let mut t_max = if capacity > 0.0 { (range / capacity).min(T_CAP) } else { T_CAP };
        loop {
            let t = golden_section(&dual, 0.0, t_max, t_tol)?;
            if t < t_max - t_tol || t_max >= T_CAP {
                break t;
            }
            t_max = (2.0 * t_max).min(T_CAP);
        }
    };
    let (value, _) = dual_on_grid(&grid, prior, t_star, floor)?;

    // Complementary slackness: the maximizers just left and right of t* sit on
    // opposite sides of the constraint; mixing them makes it tight.
    let lo = dual_on_grid(&grid, prior, (t_star - t_tol).max(0.0), floor)?.1;
    let hi = dual_on_grid(&grid, prior, t_star + t_tol, floor)?.1;
    let slack_lo = lo.avg_entropy - floor;
    let slack_hi = hi.avg_entropy - floor;
    let mixed = if slack_lo >= -FEASIBILITY_TOL {
        lo.splitting
    } else if slack_hi >= -FEASIBILITY_TOL {
        let theta = slack_hi / (slack_hi - slack_lo);
        let atoms = lo
            .splitting
            .atoms()
            .iter()
            .map(|a| Atom { weight: theta * a.weight, belief: a.belief.clone() })
            .chain(hi.splitting.atoms().iter().map(|a| Atom {
                weight: (1.0 - theta) * a.weight,
                belief: a.belief.clone(),
            }))
            .filter(|a| a.weight > 0.0)
            .collect();
        Splitting::new(atoms)?
    } else {
        hi.splitting
    };
    let eval = s.splitting_evaluate(&mixed, capacity);
    let info_rate = (h_prior - eval.avg_entropy).max(0.0);
    let offset_atoms = mixed
        .atoms()
        .iter()
        .map(|a| (0..grid.len()).any(|i| grid.is_offset(i) && grid.point(i) == a.belief.mass()))
        .collect();
    Ok(SolveResult {
        value,
        action_profiles: profiles_of(s, &mixed),
        avg_entropy: eval.avg_entropy,
        info_rate,
        constraint_slack: Some(capacity - info_rate),
        dual_t: Some(t_star),
        method: Method::Lagrangian,
        offset_atoms,
        splitting: mixed,
    })
}

/// Minimizer of a convex function on `[a, b]` to within `tol`.
fn golden_section(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if iterations > 500 {
            return Err(Error::NoConvergence(String::from("golden-section bracket stalled")));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    // Prefer an endpoint when it is at least as good; the dual is often
    // minimized at t = 0.
    let mid = 0.5 * (a + b);
    let candidates = [a, mid, b];
    let mut best = (mid, f(mid)?);
    for &t in &candidates {
        let v = f(t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best.0)
}

/// Exhaustive search over disclosure kernels `Q(w|u)` whose entries are
/// multiples of `kernel_grid_step`. Returns the best kernel meeting the
/// information constraint.
pub fn brute_force_direct(s: &Scenario, capacity: f64, w_size: usize, kernel_grid_step: f64) -> Result<SolveResult> {
    let nu = s.nu();
    let bound = cardinality_bound(nu, s.nv(), s.nz());
    if w_size == 0 || w_size > bound {
        return Err(Error::InvalidArgument(format!("|W| = {w_size} outside 1..={bound}")));
    }
    if !(kernel_grid_step > 0.0 && kernel_grid_step <= 0.5) {
        return Err(Error::InvalidArgument(format!("kernel step {kernel_grid_step} outside (0, 0.5]")));
    }
    let steps = libm::round(1.0 / kernel_grid_step) as usize;
    let rows = compositions(steps, w_size);
    let size = (rows.len() as u128).checked_pow(nu as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_CAP {
        return Err(Error::EnumerationTooLarge { size, cap: BRUTE_FORCE_CAP });
    }
    let h_source = s.source_conditional_entropy();
    let n = steps as f64;
    let source: Vec<f64> = (0..nu).flat_map(|u| (0..s.nz()).map(move |z| (u, z))).map(|(u, z)| s.source().get(&[u, z])).collect();

    // Parallel over the first row; each task scans the remaining rows.
    let best_per_first = par::map_range(rows.len(), |first| {
        let mut choice = vec![0usize; nu];
        choice[0] = first;
        let mut post = vec![0.0; nu];
        let mut best: Option<(f64, Vec<usize>)> = None;
        loop {
            if canonical(&rows, &choice, w_size) {
                let mut value = 0.0;
                let mut cond_entropy = 0.0;
                for z in 0..s.nz() {
                    for w in 0..w_size {
                        let mut total = 0.0;
                        for u in 0..nu {
                            post[u] = source[u * s.nz() + z] * rows[choice[u]][w] as f64 / n;
                            total += post[u];
                        }
                        if total > 0.0 {
                            for p in post.iter_mut() {
                                *p /= total;
                            }
                            value += total * s.robust_utility(z, &post);
                            cond_entropy += total * entropy_bits(&post);
                        }
                    }
                }
                let info_rate = h_source - cond_entropy;
                if info_rate <= capacity + FEASIBILITY_TOL && best.as_ref().map_or(true, |b| value > b.0) {
                    best = Some((value, choice.clone()));
                }
            }
            // odometer over rows 1..nu
            let mut i = nu;
            loop {
                if i == 1 {
                    return best;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < rows.len() {
                    break;
                }
                choice[i] = 0;
            }
            if nu == 1 {
                return best;
            }
        }
    });
    let (_, choice) = best_per_first
        .into_iter()
        .flatten()
        .fold(None::<(f64, Vec<usize>)>, |acc, b| match acc {
            Some(a) if a.0 >= b.0 => Some(a),
            _ => Some(b),
        })
        .ok_or_else(|| Error::NoConvergence(String::from("no feasible kernel on the grid")))?;
    let kernel = DisclosureKernel::new(choice.iter().map(|&c| rows[c].iter().map(|&k| k as f64 / n).collect()).collect())?;
    direct_result(s, &kernel, capacity)
}

/// Packages a disclosure kernel as a [`SolveResult`].
pub fn direct_result(s: &Scenario, kernel: &DisclosureKernel, capacity: f64) -> Result<SolveResult> {
    let d = s.direct_value(kernel, capacity)?;
    let splitting = kernel.to_splitting(s.prior())?;
    let avg_entropy = splitting
        .atoms()
        .iter()
        .map(|a| a.weight * s.average_entropy(a.belief.mass()))
        .sum();
    Ok(SolveResult {
        value: d.value,
        action_profiles: profiles_of(s, &splitting),
        avg_entropy,
        info_rate: d.info_rate,
        constraint_slack: Some(d.constraint_slack),
        dual_t: None,
        method: Method::DirectBruteforce,
        offset_atoms: vec![false; splitting.len()],
        splitting,
    })
}

/// `min(|U| + 1, |V|^|Z|)`.
pub fn cardinality_bound(nu: usize, nv: usize, nz: usize) -> usize {
    let actions = (nv as u128).checked_pow(nz as u32).unwrap_or(u128::MAX);
    (nu as u128 + 1).min(actions) as usize
}

/// Relabelling `W` does not change a kernel's value; only kernels whose
/// columns are in nonincreasing lexicographic order are scanned.
fn canonical(rows: &[Vec<usize>], choice: &[usize], w_size: usize) -> bool {
    (1..w_size).all(|w| {
        for &c in choice {
            let (prev, cur) = (rows[c][w - 1], rows[c][w]);
            if prev != cur {
                return prev > cur;
            }
        }
        true
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::BinaryParams;
    use approx::assert_abs_diff_eq;

    /// Chord from `(1/3, 1/2)` to `(21/23, 1)` evaluated at `1/2`.
    fn chord_value() -> f64 {
        let (a, b) = (1.0 / 3.0, 21.0 / 23.0);
        0.5 + (1.0 - 0.5) * (0.5 - a) / (b - a)
    }

    fn paper() -> Scenario {
        BinaryParams::paper().scenario().unwrap()
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(compositions(5, 1), vec![vec![5]]);
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn unconstrained_binary_example() {
        let s = paper();
        let r = concavify_unconstrained(&s, &Belief(s.prior().clone()), &GridSpec::new(2000)).unwrap();
        assert_abs_diff_eq!(chord_value(), 0.64375, epsilon = 1e-15);
        assert_abs_diff_eq!(r.value, chord_value(), epsilon = 2e-3);
        assert!(r.value <= chord_value() + 1e-12);
        assert!(r.splitting.len() <= 3);
        assert!(r.offset_atoms.iter().any(|&o| o));
    }

    #[test]
    fn constant_utility_is_its_own_concavification() {
        let s = paper();
        let flat = crate::game::UtilityTable::new(2, 2, 2, vec![0.3; 8]).unwrap();
        let s = Scenario::new(
            [s.u.clone(), s.z.clone(), s.x.clone(), s.y.clone(), s.v.clone()],
            s.source().clone(),
            s.channel().clone(),
            flat,
            s.utility_decoder().clone(),
        )
        .unwrap();
        let r = concavify_unconstrained(&s, &Belief(s.prior().clone()), &GridSpec::new(100)).unwrap();
        assert_abs_diff_eq!(r.value, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn vertex_prior_cannot_split() {
        let s = paper();
        let r = concavify_unconstrained(&s, &Belief::binary(1.0).unwrap(), &GridSpec::new(100)).unwrap();
        assert_abs_diff_eq!(r.value, s.average_utility(&[0.0, 1.0]), epsilon = 1e-12);
        let r = concavify_unconstrained(&s, &Belief::binary(0.0).unwrap(), &GridSpec::new(100)).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constrained_binary_example() {
        let s = paper();
        let prior = Belief(s.prior().clone());
        let g = GridSpec::new(2000);
        let r = concavify_constrained(&s, &prior, 0.1, &g).unwrap();
        assert_abs_diff_eq!(r.value, 0.63, epsilon = 0.01);
        assert!(r.constraint_slack.unwrap() >= -FEASIBILITY_TOL);
        assert!(r.splitting.len() <= 3);
        let big = concavify_constrained(&s, &prior, 1.0, &g).unwrap();
        let free = concavify_unconstrained(&s, &prior, &g).unwrap();
        assert_abs_diff_eq!(big.value, free.value, epsilon = 1e-12);
        let zero = concavify_constrained(&s, &prior, 0.0, &g).unwrap();
        assert_abs_diff_eq!(zero.value, 0.6, epsilon = 1e-9);
    }

    #[test]
    fn lagrangian_at_zero_is_unconstrained() {
        let s = paper();
        let prior = Belief(s.prior().clone());
        let g = GridSpec::new(500);
        let free = concavify_unconstrained(&s, &prior, &g).unwrap();
        assert_eq!(lagrangian_value(&s, &prior, 0.1, 0.0, &g).unwrap(), free.value);
    }

    #[test]
    fn weak_duality_on_a_multiplier_grid() {
        let s = paper();
        let prior = Belief(s.prior().clone());
        let g = GridSpec::new(500);
        for c in [0.0, 0.1, 0.3, 1.0] {
            let primal = concavify_constrained(&s, &prior, c, &g).unwrap().value;
            for i in 0..40 {
                let t = i as f64 * 0.25;
                let d = lagrangian_value(&s, &prior, c, t, &g).unwrap();
                assert!(d >= primal - 1e-9, "t = {t}, c = {c}: {d} < {primal}");
            }
        }
    }

    #[test]
    fn lagrangian_solve_matches_lp() {
        let s = paper();
        let prior = Belief(s.prior().clone());
        let g = GridSpec::new(2000);
        let lp = concavify_constrained(&s, &prior, 0.1, &g).unwrap();
        let dual = lagrangian_solve(&s, &prior, 0.1, &g, 1e-6).unwrap();
        assert_abs_diff_eq!(dual.value, lp.value, epsilon = 1e-3);
        assert!(dual.dual_t.unwrap() > 0.0);
        assert!(dual.constraint_slack.unwrap() >= -1e-6);

        let inactive = lagrangian_solve(&s, &prior, 1.0, &g, 1e-6).unwrap();
        assert_eq!(inactive.dual_t, Some(0.0));
        let free = concavify_unconstrained(&s, &prior, &g).unwrap();
        assert_abs_diff_eq!(inactive.value, free.value, epsilon = 1e-12);

        let zero = lagrangian_solve(&s, &prior, 0.0, &g, 1e-6).unwrap();
        assert_abs_diff_eq!(zero.value, 0.6, epsilon = 1e-3);
    }

    #[test]
    fn brute_force_single_symbol_is_silent() {
        let s = paper();
        let r = brute_force_direct(&s, 1.0, 1, 0.1).unwrap();
        assert_eq!(r.value, s.zero_capacity_value());
    }

    #[test]
    fn brute_force_binary_example() {
        let s = paper();
        let r = brute_force_direct(&s, 1.0, 2, 0.01).unwrap();
        assert_abs_diff_eq!(r.value, chord_value(), epsilon = 5e-3);
        assert!(r.value <= chord_value() + 1e-12);
        let r = brute_force_direct(&s, 0.1, 2, 0.01).unwrap();
        assert_abs_diff_eq!(r.value, 0.63, epsilon = 0.01);
        assert!(r.constraint_slack.unwrap() >= -FEASIBILITY_TOL);
    }

    #[test]
    fn brute_force_rejects_bad_arguments() {
        let s = paper();
        assert!(brute_force_direct(&s, 1.0, 4, 0.1).is_err());
        assert!(brute_force_direct(&s, 1.0, 2, 0.0).is_err());
        assert!(brute_force_direct(&s, 1.0, 2, 0.6).is_err());
    }

    #[test]
    fn grid_spec_validation() {
        let s = paper();
        let prior = Belief(s.prior().clone());
        assert!(concavify_unconstrained(&s, &prior, &GridSpec::new(1)).is_err());
        let mut g = GridSpec::new(10);
        g.breakpoint_offsets = vec![0.2];
        assert!(concavify_unconstrained(&s, &prior, &g).is_err());
        g.breakpoint_offsets = vec![0.0];
        assert!(concavify_unconstrained(&s, &prior, &g).is_err());
    }

    #[test]
    fn cardinality() {
        assert_eq!(cardinality_bound(2, 2, 2), 3);
        assert_eq!(cardinality_bound(5, 2, 1), 2);
        assert_eq!(cardinality_bound(3, 3, 40), 4);
    }
}
