//! The two-symbol instance: `U`, `Z`, `V` and `W` all binary.
//!
//! The source puts mass `p0` on `u2`; the state is `z1` with probability
//! `1 - δ1` under `u1` and `δ2` under `u2`. A disclosure kernel is written
//! `Q(w2|u1) = α`, `Q(w1|u2) = β`, and everything is parameterized by the
//! beliefs `q1 = Q(u2|w1)`, `q2 = Q(u2|w2)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::concavify::binary_switch_points;
use crate::game::{Scenario, UtilityTable};
use crate::prob::{binary_entropy, Alphabet, Dist, Joint, Kernel};
use crate::{par, Error, Result};

/// Encoder utility: it always wants `v2`.
pub const ENCODER_UTILITY: [[f64; 2]; 2] = [[0.0, 1.0], [0.0, 1.0]];
/// Decoder utility: matches the source, switching to `v2` above belief 0.6.
pub const DECODER_UTILITY: [[f64; 2]; 2] = [[9.0, 0.0], [4.0, 10.0]];

pub const DEFAULT_REGION_GRID: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinaryParams {
    pub p0: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Belief on `u2` at which the decoder is indifferent between its actions.
    pub gamma: f64,
}

/// Beliefs on `u2` after `w1` and `w2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorPair {
    pub q1: f64,
    pub q2: f64,
}

fn unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {x} outside [0, 1]")))
    }
}

/// Belief on `u2` where a decoder with `table[u][v]` is indifferent.
pub fn indifference_threshold(table: &[[f64; 2]; 2]) -> Result<f64> {
    let gain1 = table[0][0] - table[0][1];
    let gain2 = table[1][1] - table[1][0];
    let gamma = gain1 / (gain1 + gain2);
    if gain1 + gain2 == 0.0 || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(String::from("decoder has no switching threshold")));
    }
    Ok(gamma)
}

impl BinaryParams {
    /// Instance with the default utility tables.
    pub fn new(p0: f64, delta1: f64, delta2: f64) -> Result<Self> {
        unit("p0", p0)?;
        unit("delta1", delta1)?;
        unit("delta2", delta2)?;
        Ok(Self {
            p0,
            delta1,
            delta2,
            gamma: indifference_threshold(&DECODER_UTILITY)?,
        })
    }

    /// `p0 = 0.5`, `δ1 = 0.7`, `δ2 = 0.9`.
    pub fn paper() -> Self {
        Self::new(0.5, 0.7, 0.9).expect("reference parameters are valid")
    }

    /// Reads `p0`, `δ1`, `δ2` off a binary scenario. Both utility tables must
    /// be the default ones; the channel is ignored.
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        if (s.nu(), s.nz(), s.nv()) != (2, 2, 2) {
            return Err(Error::DimensionMismatch(String::from("binary example needs |U| = |Z| = |V| = 2")));
        }
        for (name, t, expect) in [
            ("encoder", s.utility_encoder(), ENCODER_UTILITY),
            ("decoder", s.utility_decoder(), DECODER_UTILITY),
        ] {
            if (0..2).any(|u| (0..2).any(|z| (0..2).any(|v| t.get(u, z, v) != expect[u][v]))) {
                return Err(Error::InvalidArgument(format!(
                    "{name} utility differs from the binary example's table {expect:?}"
                )));
            }
        }
        let k = s.state_kernel();
        Self::new(s.prior().get(1), k.get(0, 1), k.get(1, 0))
    }

    pub fn prior(&self) -> Dist {
        Dist::bernoulli(self.p0).expect("p0 validated")
    }

    /// `P(z|u)`.
    pub fn state_kernel(&self) -> Kernel {
        Kernel::new(vec![vec![1.0 - self.delta1, self.delta1], vec![self.delta2, 1.0 - self.delta2]])
            .expect("deltas validated")
    }

    /// The scenario with the default utility tables and a noiseless binary
    /// channel.
    pub fn scenario(&self) -> Result<Scenario> {
        let (p0, d1, d2) = (self.p0, self.delta1, self.delta2);
        let source = Joint::new(
            vec![2, 2],
            vec![(1.0 - p0) * (1.0 - d1), (1.0 - p0) * d1, p0 * d2, p0 * (1.0 - d2)],
        )?;
        let table = |t: [[f64; 2]; 2]| UtilityTable::state_independent(&t.map(|r| r.to_vec()), 2);
        Scenario::new(
            [
                Alphabet::numbered("U", "u", 2)?,
                Alphabet::numbered("Z", "z", 2)?,
                Alphabet::numbered("X", "x", 2)?,
                Alphabet::numbered("Y", "y", 2)?,
                Alphabet::numbered("V", "v", 2)?,
            ],
            source,
            Kernel::identity(2),
            table(ENCODER_UTILITY)?,
            table(DECODER_UTILITY)?,
        )
    }

    /// `P(z1)` when the belief on `u2` is `q`.
    pub fn state_z1(&self, q: f64) -> f64 {
        (1.0 - q) * (1.0 - self.delta1) + q * self.delta2
    }

    /// Beliefs on `u2` after additionally seeing `z1` and `z2`.
    pub fn conditional_posteriors(&self, q: f64) -> (f64, f64) {
        let (d1, d2) = (self.delta1, self.delta2);
        let p1 = q * d2 / ((1.0 - q) * (1.0 - d1) + q * d2);
        let p2 = q * (1.0 - d2) / ((1.0 - q) * d1 + q * (1.0 - d2));
        (p1, p2)
    }

    /// Beliefs `q` at which the decoder switches action after `z1` and after
    /// `z2` respectively.
    pub fn thresholds(&self) -> (f64, f64) {
        let (g, d1, d2) = (self.gamma, self.delta1, self.delta2);
        let nu1 = g * (1.0 - d1) / (d2 * (1.0 - g) + g * (1.0 - d1));
        let nu2 = g * d1 / (g * d1 + (1.0 - d2) * (1.0 - g));
        (nu1, nu2)
    }

    /// `h(q) = H(U|Z)` under belief `q` on `u2`.
    pub fn average_entropy(&self, q: f64) -> f64 {
        let (p1, p2) = self.conditional_posteriors(q);
        let z1 = self.state_z1(q);
        let mut h = 0.0;
        if z1 > 0.0 {
            h += z1 * binary_entropy(p1);
        }
        if z1 < 1.0 {
            h += (1.0 - z1) * binary_entropy(p2);
        }
        h
    }

    /// `(α, β)` realizing the posterior pair, or `OutOfRange` when `p0` does
    /// not lie between `q1` and `q2`.
    pub fn kernel_from_posteriors(&self, pp: PosteriorPair) -> Result<(f64, f64)> {
        let PosteriorPair { q1, q2 } = pp;
        let p0 = self.p0;
        if q1 == q2 {
            return Err(Error::SingularPair);
        }
        let between = (q1 <= p0 && p0 <= q2) || (q2 <= p0 && p0 <= q1);
        if !between || !(0.0..=1.0).contains(&q1) || !(0.0..=1.0).contains(&q2) || p0 <= 0.0 || p0 >= 1.0 {
            return Err(Error::OutOfRange { q1, q2, p0 });
        }
        let alpha = (1.0 - q2) * (q1 - p0) / ((1.0 - p0) * (q1 - q2));
        let beta = q1 * (p0 - q2) / (p0 * (q1 - q2));
        // Both lie in [0, 1] analytically; clamp the last-bit rounding.
        Ok((alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0)))
    }

    /// Forward map: the posteriors induced by `(α, β)`. Fails when one of the
    /// two messages is never sent.
    pub fn posteriors_from_kernel(&self, alpha: f64, beta: f64) -> Result<PosteriorPair> {
        unit("alpha", alpha)?;
        unit("beta", beta)?;
        let p0 = self.p0;
        let w1 = (1.0 - p0) * (1.0 - alpha) + p0 * beta;
        let w2 = (1.0 - p0) * alpha + p0 * (1.0 - beta);
        if w1 <= 0.0 || w2 <= 0.0 {
            return Err(Error::ZeroProbabilityObservation);
        }
        Ok(PosteriorPair {
            q1: p0 * beta / w1,
            q2: p0 * (1.0 - beta) / w2,
        })
    }

    /// Whether splitting `p0` into `(q1, q2)` meets the information constraint,
    /// with or without the decoder's state. `None` when the pair cannot
    /// average to `p0`.
    pub fn pair_feasible(&self, pp: PosteriorPair, capacity: f64, with_side_info: bool) -> Option<bool> {
        let PosteriorPair { q1, q2 } = pp;
        let p0 = self.p0;
        if q1 == q2 {
            return (q1 == p0).then_some(true);
        }
        if !((q1 <= p0 && p0 <= q2) || (q2 <= p0 && p0 <= q1)) {
            return None;
        }
        let l1 = (p0 - q2) / (q1 - q2);
        let l2 = (q1 - p0) / (q1 - q2);
        let f = |q: f64| if with_side_info { self.average_entropy(q) } else { binary_entropy(q) };
        Some(l1 * f(q1) + l2 * f(q2) >= f(p0) - capacity)
    }

    /// The belief `ν3 ∈ [ν1, p0]` that, paired with `ν2`, makes the
    /// information constraint tight; `ν1` itself when the constraint is slack
    /// there.
    pub fn nu3(&self, capacity: f64) -> Result<f64> {
        let (nu1, nu2) = self.thresholds();
        let p0 = self.p0;
        if !(nu1 < p0 && p0 < nu2) {
            return Err(Error::InvalidArgument(format!(
                "prior {p0} is not between the switching beliefs {nu1} and {nu2}"
            )));
        }
        let floor = self.average_entropy(p0) - capacity;
        let slack = |q: f64| {
            let l = (nu2 - p0) / (nu2 - q);
            l * self.average_entropy(q) + (1.0 - l) * self.average_entropy(nu2) - floor
        };
        if slack(nu1) >= 0.0 {
            return Ok(nu1);
        }
        let (mut lo, mut hi) = (nu1, p0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if slack(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Value of splitting the prior into `(ν3, ν2)`, taking the encoder's
    /// utility at `ν2` from above, and the weight on `ν3`.
    pub fn two_atom_constrained_value(&self, capacity: f64) -> Result<(f64, f64)> {
        let s = self.scenario()?;
        let (_, nu2) = self.thresholds();
        let nu3 = self.nu3(capacity)?;
        let l = (nu2 - self.p0) / (nu2 - nu3);
        let right = right_limit(&s, nu2);
        Ok((l * s.average_utility(&[1.0 - nu3, nu3]) + (1.0 - l) * right, l))
    }

    /// Feasibility flags over the `grid × grid` lattice `i / (grid - 1)`.
    pub fn feasibility_region(&self, capacity: f64, grid: usize) -> Result<Region> {
        if grid < 2 {
            return Err(Error::InvalidArgument(format!("region grid {grid} is below 2")));
        }
        let at = |i: usize| i as f64 / (grid - 1) as f64;
        let rows = par::map_range(grid, |i| {
            (0..grid)
                .map(|j| {
                    let pp = PosteriorPair { q1: at(i), q2: at(j) };
                    let with_z = self.pair_feasible(pp, capacity, true);
                    RegionCell {
                        q1: pp.q1,
                        q2: pp.q2,
                        splits_prior: with_z.is_some(),
                        with_side_info: with_z.unwrap_or(false),
                        without_side_info: self.pair_feasible(pp, capacity, false).unwrap_or(false),
                    }
                })
                .collect::<Vec<_>>()
        });
        Ok(Region {
            grid,
            capacity,
            cells: rows.into_iter().flatten().collect(),
        })
    }
}

/// `Ψ_e` at `q` approached from above. `Ψ_e` is affine between switches, so
/// two nearby samples extrapolate back exactly up to rounding; sampling right
/// at `q` would land inside the decoder's tie tolerance.
fn right_limit(s: &Scenario, q: f64) -> f64 {
    let at = |x: f64| s.average_utility(&[1.0 - x, x]);
    let (a, b) = (q + 1e-6, q + 2e-6);
    2.0 * at(a) - at(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionCell {
    pub q1: f64,
    pub q2: f64,
    /// `p0` lies between `q1` and `q2`.
    pub splits_prior: bool,
    pub with_side_info: bool,
    pub without_side_info: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Region {
    pub grid: usize,
    pub capacity: f64,
    /// Row-major in `q1`, then `q2`.
    pub cells: Vec<RegionCell>,
}

impl Region {
    pub fn count_with(&self) -> usize {
        self.cells.iter().filter(|c| c.with_side_info).count()
    }

    pub fn count_without(&self) -> usize {
        self.cells.iter().filter(|c| c.without_side_info).count()
    }

    /// Cells feasible without the state but not with it.
    pub fn nesting_violations(&self) -> usize {
        self.cells.iter().filter(|c| c.without_side_info && !c.with_side_info).count()
    }
}

/// A named numeric table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Upper concave hull of points sorted by abscissa.
pub fn upper_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or below the segment a -> p
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Piecewise-linear interpolation of a hull at `x`.
pub fn hull_at(hull: &[(f64, f64)], x: f64) -> f64 {
    let i = hull.partition_point(|p| p.0 < x);
    if i == 0 {
        return hull[0].1;
    }
    if i == hull.len() {
        return hull[hull.len() - 1].1;
    }
    let (a, b) = (hull[i - 1], hull[i]);
    if b.0 == a.0 {
        return a.1.max(b.1);
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Uniform grid on `[0, 1]` plus points `offset` either side of each entry
/// of `breaks`, sorted.
fn abscissae(grid: usize, breaks: &[f64], offset: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    for &b in breaks {
        for x in [b - offset, b + offset] {
            if (0.0..=1.0).contains(&x) {
                xs.push(x);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Tables behind the binary example's plots: posterior maps, the encoder's
/// utility and its concavification as functions of `q` and of the state
/// posterior, the average entropy, the feasibility regions, and the
/// unconstrained and constrained optimal splittings.
pub fn figure_data(bp: &BinaryParams, capacity: f64, grid: usize, region_grid: usize) -> Result<Vec<Dataset>> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("figure grid {grid} is below 2")));
    }
    const OFFSET: f64 = 1e-9;
    let s = bp.scenario()?;
    let flat = s.without_side_information()?;
    let mut out = Vec::new();

    let mut d = Dataset::new("posteriors", &["q", "p_z1", "p_z2"]);
    for q in abscissae(grid, &[], OFFSET) {
        let (p1, p2) = bp.conditional_posteriors(q);
        d.rows.push(vec![q, p1, p2]);
    }
    out.push(d);

    let qs = abscissae(grid, &binary_switch_points(&s), OFFSET);
    let values: Vec<(f64, f64)> = qs.iter().map(|&q| (q, s.average_utility(&[1.0 - q, q]))).collect();
    let hull = upper_hull(&values);
    let mut d = Dataset::new("encoder_utility", &["q", "psi_e", "cav_psi_e", "h"]);
    for &(q, v) in &values {
        d.rows.push(vec![q, v, hull_at(&hull, q), bp.average_entropy(q)]);
    }
    out.push(d);

    let ps = abscissae(grid, &[bp.gamma], OFFSET);
    let flat_values: Vec<(f64, f64)> = ps.iter().map(|&p| (p, flat.robust_utility(0, &[1.0 - p, p]))).collect();
    let flat_hull = upper_hull(&flat_values);
    let mut d = Dataset::new("state_utility", &["p", "psi_e_z1", "psi_e_z2", "cav_without_state", "hb"]);
    for &p in &ps {
        let b = [1.0 - p, p];
        d.rows.push(vec![p, s.robust_utility(0, &b), s.robust_utility(1, &b), hull_at(&flat_hull, p), binary_entropy(p)]);
    }
    out.push(d);

    let region = bp.feasibility_region(capacity, region_grid)?;
    let mut d = Dataset::new("region", &["q1", "q2", "splits_prior", "with_z", "without_z"]);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    for c in &region.cells {
        d.rows.push(vec![c.q1, c.q2, flag(c.splits_prior), flag(c.with_side_info), flag(c.without_side_info)]);
    }
    out.push(d);

    let (nu1, nu2) = bp.thresholds();
    let nu3 = bp.nu3(capacity)?;
    let (constrained, lambda) = bp.two_atom_constrained_value(capacity)?;
    let (p1, p2) = bp.conditional_posteriors(nu3);
    let (p3, p4) = bp.conditional_posteriors(nu2);
    let mut d = Dataset::new(
        "optimum",
        &[
            "gamma",
            "nu1",
            "nu2",
            "nu3",
            "capacity",
            "value_unconstrained",
            "value_constrained",
            "lambda_nu3",
            "value_without_state",
            "p1",
            "p2",
            "p3",
            "p4",
        ],
    );
    d.rows.push(vec![
        bp.gamma,
        nu1,
        nu2,
        nu3,
        capacity,
        hull_at(&hull, bp.p0),
        constrained,
        lambda,
        hull_at(&flat_hull, bp.p0),
        p1,
        p2,
        p3,
        p4,
    ]);
    out.push(d);
    Ok(out)
}
