//! Finite-alphabet probability: distributions, kernels, joint tables and the
//! information measures built on them. All logarithms are base 2 and
//! `0 log 0 = 0` throughout.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, PROB_TOL};

/// An ordered set of distinct symbol labels. The order fixes the index of each
/// symbol in every table.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(Error::InvalidArgument(format!("alphabet {name} is empty")));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidArgument(format!(
                    "alphabet {name} repeats symbol {s:?}"
                )));
            }
        }
        Ok(Self { name, symbols })
    }

    /// Alphabet `{prefix1, prefix2, ...}` of the given size.
    pub fn numbered(name: impl Into<String>, prefix: &str, size: usize) -> Result<Self> {
        Self::new(name, (1..=size).map(|i| format!("{prefix}{i}")).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

fn check_mass(mass: &[f64], what: &str) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} is empty")));
    }
    for (i, &p) in mass.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what} entry {i} is {p}"
            )));
        }
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {total}"
        )));
    }
    Ok(())
}

/// A probability vector over an alphabet, indexed by symbol order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dist {
    mass: Vec<f64>,
}

impl Dist {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        check_mass(&mass, "distribution")?;
        Ok(Self { mass })
    }

    /// Normalizes nonnegative weights. Fails when they sum to zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(String::from(
                "weights must be nonnegative with a positive sum",
            )));
        }
        Ok(Self {
            mass: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty alphabet");
        Self {
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[at] = 1.0;
        Self { mass }
    }

    /// Binary distribution `(1 - p, p)`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.mass
    }

    pub fn l1_distance(&self, other: &Dist) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// A conditional distribution: one row over `to` per `from` symbol.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Kernel {
    n_from: usize,
    n_to: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_from = rows.len();
        if n_from == 0 {
            return Err(Error::InvalidDistribution(String::from("kernel has no rows")));
        }
        let n_to = rows[0].len();
        let mut data = Vec::with_capacity(n_from * n_to);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_to {
                return Err(Error::DimensionMismatch(format!(
                    "kernel row {i} has {} entries, expected {n_to}",
                    row.len()
                )));
            }
            check_mass(&row, &format!("kernel row {i}"))?;
            data.extend(row);
        }
        Ok(Self { n_from, n_to, data })
    }

    /// Kernel whose rows are all equal to `row`.
    pub fn constant(n_from: usize, row: &Dist) -> Self {
        let mut data = Vec::with_capacity(n_from * row.len());
        for _ in 0..n_from {
            data.extend_from_slice(row.mass());
        }
        Self {
            n_from,
            n_to: row.len(),
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            n_from: n,
            n_to: n,
            data,
        }
    }

    /// Binary symmetric kernel with crossover probability `flip`.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]])
    }

    pub fn n_from(&self) -> usize {
        self.n_from
    }

    pub fn n_to(&self) -> usize {
        self.n_to
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_to..(i + 1) * self.n_to]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.n_to)
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n_to + to]
    }

    /// Output marginal `Σ_a p(a) k(b|a)`.
    pub fn push_forward(&self, input: &Dist) -> Dist {
        let mut out = vec![0.0; self.n_to];
        for (a, row) in self.rows().enumerate() {
            let pa = input.get(a);
            for (o, &k) in out.iter_mut().zip(row) {
                *o += pa * k;
            }
        }
        Dist { mass: out }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }
}

/// A joint probability table over several axes, stored row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Joint {
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl Joint {
    pub fn new(shape: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        let size: usize = shape.iter().product();
        if shape.is_empty() || size != mass.len() {
            return Err(Error::DimensionMismatch(format!(
                "joint of shape {shape:?} needs {size} entries, got {}",
                mass.len()
            )));
        }
        check_mass(&mass, "joint")?;
        Ok(Self { shape, mass })
    }

    /// `p(a) k(b|a)` as a two-axis joint.
    pub fn from_marginal_and_kernel(p: &Dist, k: &Kernel) -> Result<Self> {
        if p.len() != k.n_from() {
            return Err(Error::DimensionMismatch(String::from(
                "marginal and kernel input alphabets differ",
            )));
        }
        let mut mass = Vec::with_capacity(k.n_from() * k.n_to());
        for (a, row) in k.rows().enumerate() {
            mass.extend(row.iter().map(|&q| p.get(a) * q));
        }
        Ok(Self {
            shape: vec![k.n_from(), k.n_to()],
            mass,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.shape[i + 1];
        }
        strides
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let flat: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.mass[flat]
    }

    /// Sums out every axis not listed in `keep`; the result keeps the listed
    /// axes in the given order.
    pub fn marginal(&self, keep: &[usize]) -> Result<Joint> {
        if keep.is_empty() || keep.iter().any(|&a| a >= self.shape.len()) {
            return Err(Error::InvalidArgument(format!(
                "cannot keep axes {keep:?} of a {}-axis joint",
                self.shape.len()
            )));
        }
        let out_shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        let mut out_strides = vec![1; keep.len()];
        for i in (0..keep.len() - 1).rev() {
            out_strides[i] = out_strides[i + 1] * out_shape[i + 1];
        }
        let strides = self.strides();
        let mut out = vec![0.0; out_shape.iter().product()];
        for (flat, &p) in self.mass.iter().enumerate() {
            let mut o = 0;
            for (k, &axis) in keep.iter().enumerate() {
                o += (flat / strides[axis]) % self.shape[axis] * out_strides[k];
            }
            out[o] += p;
        }
        Ok(Joint {
            shape: out_shape,
            mass: out,
        })
    }

    /// Marginal on a single axis.
    pub fn axis_dist(&self, axis: usize) -> Result<Dist> {
        Ok(Dist {
            mass: self.marginal(&[axis])?.mass,
        })
    }
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * libm::log2(p)
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily validated) mass vector.
pub fn entropy_bits(mass: &[f64]) -> f64 {
    mass.iter().map(|&p| plogp(p)).sum()
}

pub fn entropy(d: &Dist) -> f64 {
    entropy_bits(&d.mass)
}

/// Binary entropy of `(p, 1 - p)`.
pub fn binary_entropy(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

/// Relative entropy in bits. When `p` puts mass where `q` has none the value
/// is `+∞` and `support_violation` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KlDivergence {
    pub bits: f64,
    pub support_violation: bool,
}

impl KlDivergence {
    pub fn is_finite(&self) -> bool {
        !self.support_violation
    }
}

pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<KlDivergence> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "KL between alphabets of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(kl_bits(p.mass(), q.mass()))
}

pub(crate) fn kl_bits(p: &[f64], q: &[f64]) -> KlDivergence {
    let mut bits = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return KlDivergence {
                    bits: f64::INFINITY,
                    support_violation: true,
                };
            }
            bits += a * libm::log2(a / b);
        }
    }
    KlDivergence {
        bits: bits.max(0.0),
        support_violation: false,
    }
}

/// `I(A;B)` of a two-axis joint, computed as `H(A) + H(B) - H(A,B)`.
pub fn mutual_information(j: &Joint) -> Result<f64> {
    if j.axes() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "mutual information needs 2 axes, got {}",
            j.axes()
        )));
    }
    let ha = entropy_bits(j.marginal(&[0])?.mass());
    let hb = entropy_bits(j.marginal(&[1])?.mass());
    Ok((ha + hb - entropy_bits(j.mass())).max(0.0))
}

/// `I(A;B|C)` of a three-axis joint, with `cond` naming the axis of `C`.
pub fn conditional_mutual_information(j: &Joint, cond: usize) -> Result<f64> {
    if j.axes() != 3 || cond > 2 {
        return Err(Error::DimensionMismatch(format!(
            "conditional mutual information needs 3 axes and a conditioning axis < 3, got {} and {cond}",
            j.axes()
        )));
    }
    let others: Vec<usize> = (0..3).filter(|&a| a != cond).collect();
    // H(A,C) + H(B,C) - H(A,B,C) - H(C)
    let hac = entropy_bits(j.marginal(&[others[0], cond])?.mass());
    let hbc = entropy_bits(j.marginal(&[others[1], cond])?.mass());
    let hc = entropy_bits(j.marginal(&[cond])?.mass());
    Ok((hac + hbc - entropy_bits(j.mass()) - hc).max(0.0))
}

/// Posterior over the prior's alphabet after observing `observed` through `k`.
pub fn bayes_posterior(prior: &Dist, k: &Kernel, observed: usize) -> Result<Dist> {
    if prior.len() != k.n_from() || observed >= k.n_to() {
        return Err(Error::DimensionMismatch(String::from(
            "prior, kernel and observation do not fit together",
        )));
    }
    let joint: Vec<f64> = (0..prior.len())
        .map(|a| prior.get(a) * k.get(a, observed))
        .collect();
    let total: f64 = joint.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroProbabilityObservation);
    }
    Ok(Dist {
        mass: joint.into_iter().map(|p| p / total).collect(),
    })
}
