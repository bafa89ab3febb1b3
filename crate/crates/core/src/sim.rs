//! Finite-blocklength Monte Carlo of the Wyner-Ziv coding scheme.
//!
//! A random codebook holds `|M| |L|` auxiliary words `w^n(m, l)` and `|M|`
//! channel words `x^n(m)`. The encoder picks the first `(m, l)` whose word is
//! jointly typical with `u^n` and sends `x^n(m)`; the decoder finds `m` from
//! `y^n`, then the bin index `l` from `z^n`. Typicality is an L1 bound on the
//! empirical joint distribution.
//!
//! Utilities are scored against the decoder's exact best reply: since the
//! encoder is a fixed deterministic map, the posterior `P(u_i | y^n, z^n)` is
//! computed by enumerating every source sequence. That caps the blocklength
//! at about 20 for a binary source.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{disclosure_rates, Belief, DisclosureKernel, Scenario};
use crate::prob::{kl_bits, Dist};
use crate::{par, Error, Result};

/// Largest number of source sequences the exact posterior will enumerate.
pub const EXACT_POSTERIOR_CAP: u128 = 1 << 20;

pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_DELTA: f64 = 0.1;

/// Rounding slack on typicality and rate comparisons.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodebookConfig {
    pub n: usize,
    /// Channel rate `R`, bits per symbol.
    pub rate_r: f64,
    /// Binning rate `R_L`, bits per symbol.
    pub rate_rl: f64,
    pub eta: f64,
    pub delta: f64,
    pub disclosure: DisclosureKernel,
    /// Channel input distribution the `x` words are drawn from.
    pub input_dist: Dist,
}

impl CodebookConfig {
    /// Rates at the corner `R + R_L = I(U;W) + η`, `R_L = max(I(Z;W) - η, 0)`.
    /// Returns warnings for rate conditions that do not hold.
    pub fn from_rates(
        s: &Scenario,
        disclosure: DisclosureKernel,
        input_dist: Dist,
        capacity: f64,
        n: usize,
        eta: f64,
        delta: f64,
    ) -> Result<(Self, Vec<String>)> {
        let (i_uw, i_zw) = disclosure_rates(s, &disclosure);
        let rate_rl = (i_zw - eta).max(0.0);
        let rate_r = i_uw + eta - rate_rl;
        let config = Self {
            n,
            rate_r,
            rate_rl,
            eta,
            delta,
            disclosure,
            input_dist,
        };
        let warnings = config.validate(s, capacity)?;
        Ok((config, warnings))
    }

    /// Structural errors fail; violated rate conditions come back as warnings.
    pub fn validate(&self, s: &Scenario, capacity: f64) -> Result<Vec<String>> {
        if self.n == 0 {
            return Err(Error::InvalidArgument(String::from("blocklength must be at least 1")));
        }
        if !(self.rate_r >= 0.0 && self.rate_rl >= 0.0 && self.eta >= 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidArgument(String::from(
                "rates and slack must be nonnegative and the typicality tolerance positive",
            )));
        }
        if self.disclosure.kernel().n_from() != s.nu() {
            return Err(Error::DimensionMismatch(format!(
                "disclosure kernel has {} rows, |U| = {}",
                self.disclosure.kernel().n_from(),
                s.nu()
            )));
        }
        if self.input_dist.len() != s.channel().n_from() {
            return Err(Error::DimensionMismatch(format!(
                "input distribution has {} entries, |X| = {}",
                self.input_dist.len(),
                s.channel().n_from()
            )));
        }
        let (i_uw, i_zw) = disclosure_rates(s, &self.disclosure);
        let mut warnings = Vec::new();
        if (self.rate_r + self.rate_rl - (i_uw + self.eta)).abs() > 1e-9 {
            warnings.push(format!(
                "R + R_L = {} differs from I(U;W) + eta = {}",
                self.rate_r + self.rate_rl,
                i_uw + self.eta
            ));
        }
        if self.rate_rl > i_zw - self.eta + SLACK && self.rate_rl > 0.0 {
            warnings.push(format!("R_L = {} exceeds I(Z;W) - eta = {}", self.rate_rl, i_zw - self.eta));
        }
        if self.rate_r > capacity - self.eta + SLACK {
            warnings.push(format!("R = {} exceeds capacity - eta = {}", self.rate_r, capacity - self.eta));
        }
        Ok(warnings)
    }

    /// `2^⌈nR⌉`.
    pub fn message_count(&self) -> usize {
        index_count(self.n, self.rate_r)
    }

    /// `2^⌈nR_L⌉`.
    pub fn bin_count(&self) -> usize {
        index_count(self.n, self.rate_rl)
    }
}

fn index_count(n: usize, rate: f64) -> usize {
    let bits = libm::ceil(n as f64 * rate - 1e-9).max(0.0) as u32;
    1usize.checked_shl(bits).filter(|&c| bits < 40 && c > 0).unwrap_or(1 << 40)
}

/// Product targets the typicality tests compare against.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Targets {
    /// `P(u) Q(w|u)`, row-major `[u][w]`.
    pub uw: Vec<f64>,
    /// `Σ_u P(u, z) Q(w|u)`, row-major `[z][w]`.
    pub zw: Vec<f64>,
    /// `P*(x) T(y|x)`, row-major `[x][y]`.
    pub xy: Vec<f64>,
    /// Channel output marginal.
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl Targets {
    pub fn new(s: &Scenario, disclosure: &DisclosureKernel, input: &Dist) -> Self {
        let q = disclosure.kernel();
        let (nu, nz, nw) = (s.nu(), s.nz(), q.n_to());
        let (nx, ny) = (s.channel().n_from(), s.channel().n_to());
        let uw = (0..nu).flat_map(|u| (0..nw).map(move |w| (u, w))).map(|(u, w)| s.prior().get(u) * q.get(u, w)).collect();
        let zw = (0..nz)
            .flat_map(|z| (0..nw).map(move |w| (z, w)))
            .map(|(z, w)| (0..nu).map(|u| s.source().get(&[u, z]) * q.get(u, w)).sum())
            .collect();
        let xy = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| input.get(x) * s.channel().get(x, y))
            .collect();
        Self {
            uw,
            zw,
            xy,
            y: s.channel().push_forward(input).into_vec(),
            w: q.push_forward(s.prior()).into_vec(),
        }
    }
}

/// Whether the pair sequence `(a_i, b_i)` has empirical distribution within
/// L1 distance `delta` of `target` (row-major `[a][b]` with `nb` columns).
pub fn jointly_typical(a: &[usize], b: &[usize], nb: usize, target: &[f64], delta: f64, counts: &mut Vec<u32>) -> bool {
    counts.clear();
    counts.resize(target.len(), 0);
    for (&x, &y) in a.iter().zip(b) {
        counts[x * nb + y] += 1;
    }
    let n = a.len() as f64;
    let l1: f64 = counts.iter().zip(target).map(|(&c, &t)| (c as f64 / n - t).abs()).sum();
    l1 <= delta + SLACK
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Codebook {
    pub n: usize,
    pub message_count: usize,
    pub bin_count: usize,
    pub nw: usize,
    /// Words `w^n(m, l)` at offset `(m * bin_count + l) * n`.
    pub w_words: Vec<usize>,
    /// Words `x^n(m)` at offset `m * n`.
    pub x_words: Vec<usize>,
    pub targets: Targets,
    pub seed: u64,
}

impl Codebook {
    pub fn w_word(&self, m: usize, l: usize) -> &[usize] {
        let at = (m * self.bin_count + l) * self.n;
        &self.w_words[at..at + self.n]
    }

    pub fn x_word(&self, m: usize) -> &[usize] {
        &self.x_words[m * self.n..(m + 1) * self.n]
    }
}

/// Stream reserved for the codebook; trials use their index.
const CODEBOOK_STREAM: u64 = u64::MAX;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Codebook cap: past this the enumeration cost is hopeless anyway.
pub const CODEBOOK_CAP: usize = 1 << 22;

/// Draws the codebook: `w` words i.i.d. from the auxiliary marginal, `x`
/// words i.i.d. from the input distribution.
pub fn build_codebook(s: &Scenario, config: &CodebookConfig, seed: u64) -> Result<Codebook> {
    draw_codebook(s, config, seed, CODEBOOK_STREAM)
}

fn draw_codebook(s: &Scenario, config: &CodebookConfig, seed: u64, stream: u64) -> Result<Codebook> {
    let (mc, lc) = (config.message_count(), config.bin_count());
    let words = mc.saturating_mul(lc);
    if words > CODEBOOK_CAP {
        return Err(Error::EnumerationTooLarge {
            size: words as u128,
            cap: CODEBOOK_CAP as u128,
        });
    }
    let targets = Targets::new(s, &config.disclosure, &config.input_dist);
    let n = config.n;
    let mut rng = rng_for(seed, stream);
    let w_dist = WeightedIndex::new(&targets.w).map_err(|e| Error::InvalidDistribution(format!("{e}")))?;
    let x_dist = WeightedIndex::new(config.input_dist.mass()).map_err(|e| Error::InvalidDistribution(format!("{e}")))?;
    let w_words = (0..words * n).map(|_| w_dist.sample(&mut rng)).collect();
    let x_words = (0..mc * n).map(|_| x_dist.sample(&mut rng)).collect();
    Ok(Codebook {
        n,
        message_count: mc,
        bin_count: lc,
        nw: config.disclosure.nw(),
        w_words,
        x_words,
        targets,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub m: usize,
    pub l: usize,
    pub x: Vec<usize>,
    pub covered: bool,
}

fn encode_indices(u: &[usize], cb: &Codebook, delta: f64, counts: &mut Vec<u32>) -> (usize, usize, bool) {
    for m in 0..cb.message_count {
        for l in 0..cb.bin_count {
            if jointly_typical(u, cb.w_word(m, l), cb.nw, &cb.targets.uw, delta, counts) {
                return (m, l, true);
            }
        }
    }
    (0, 0, false)
}

/// First `(m, l)` in lexicographic order whose word is typical with `u`;
/// `(0, 0)` with `covered = false` when there is none.
pub fn encode(u: &[usize], cb: &Codebook, delta: f64) -> Encoded {
    assert_eq!(u.len(), cb.n, "source sequence length");
    let (m, l, covered) = encode_indices(u, cb, delta, &mut Vec::new());
    Encoded {
        m,
        l,
        x: cb.x_word(m).to_vec(),
        covered,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub m: usize,
    pub l: usize,
    pub found: bool,
}

/// Two-stage lookup: the unique `m` with `x^n(m)` typical with `y`, then the
/// unique `l` with `w^n(m, l)` typical with `z`. No candidate or several
/// candidates at either stage is a failure.
pub fn wz_decode(y: &[usize], z: &[usize], cb: &Codebook, delta: f64) -> Decoded {
    let ny = cb.targets.y.len();
    let nw = cb.nw;
    let mut counts = Vec::new();
    let mut m_found = None;
    let mut ambiguous = false;
    for m in 0..cb.message_count {
        if jointly_typical(cb.x_word(m), y, ny, &cb.targets.xy, delta, &mut counts) {
            if m_found.is_some() {
                ambiguous = true;
                break;
            }
            m_found = Some(m);
        }
    }
    let Some(m) = m_found.filter(|_| !ambiguous) else {
        return Decoded { m: m_found.unwrap_or(0), l: 0, found: false };
    };
    let mut l_found = None;
    for l in 0..cb.bin_count {
        if jointly_typical(z, cb.w_word(m, l), nw, &cb.targets.zw, delta, &mut counts) {
            if l_found.is_some() {
                return Decoded { m, l: l_found.unwrap_or(0), found: false };
            }
            l_found = Some(l);
        }
    }
    match l_found {
        Some(l) => Decoded { m, l, found: true },
        None => Decoded { m, l: 0, found: false },
    }
}

/// The encoder's index choice for every source sequence, enumerated in
/// mixed-radix order (position 0 least significant).
#[derive(Debug, Clone)]
pub struct EncoderTable {
    n: usize,
    nu: usize,
    m: Vec<u32>,
    l: Vec<u32>,
    covered: Vec<bool>,
}

fn sequence_count(nu: usize, n: usize) -> u128 {
    (nu as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

fn digits(mut idx: usize, nu: usize, out: &mut [usize]) {
    for d in out.iter_mut() {
        *d = idx % nu;
        idx /= nu;
    }
}

impl EncoderTable {
    pub fn build(cb: &Codebook, nu: usize, delta: f64) -> Result<Self> {
        Self::build_in(cb, nu, delta, true)
    }

    /// [`EncoderTable::build`] on the calling thread, for use inside an
    /// already parallel loop.
    pub fn build_serial(cb: &Codebook, nu: usize, delta: f64) -> Result<Self> {
        Self::build_in(cb, nu, delta, false)
    }

    fn build_in(cb: &Codebook, nu: usize, delta: f64, parallel: bool) -> Result<Self> {
        let n = cb.n;
        let size = sequence_count(nu, n);
        if size > EXACT_POSTERIOR_CAP {
            return Err(Error::EnumerationTooLarge { size, cap: EXACT_POSTERIOR_CAP });
        }
        let size = size as usize;
        const CHUNK: usize = 4096;
        let chunk = |c: usize| {
            let mut u = vec![0; n];
            let mut counts = Vec::new();
            (c * CHUNK..((c + 1) * CHUNK).min(size))
                .map(|idx| {
                    digits(idx, nu, &mut u);
                    encode_indices(&u, cb, delta, &mut counts)
                })
                .collect::<Vec<_>>()
        };
        let count = size.div_ceil(CHUNK);
        let chunks = if parallel { par::map_range(count, chunk) } else { (0..count).map(chunk).collect() };
        let mut table = Self {
            n,
            nu,
            m: Vec::with_capacity(size),
            l: Vec::with_capacity(size),
            covered: Vec::with_capacity(size),
        };
        for (m, l, c) in chunks.into_iter().flatten() {
            table.m.push(m as u32);
            table.l.push(l as u32);
            table.covered.push(c);
        }
        Ok(table)
    }

    pub fn index_of(&self, u: &[usize]) -> usize {
        u.iter().rev().fold(0, |acc, &d| acc * self.nu + d)
    }

    pub fn lookup(&self, u: &[usize]) -> (usize, usize, bool) {
        let i = self.index_of(u);
        (self.m[i] as usize, self.l[i] as usize, self.covered[i])
    }

    /// Per-position posteriors `P(u_i | y^n, z^n)`.
    pub fn posterior(&self, y: &[usize], z: &[usize], cb: &Codebook, s: &Scenario) -> Result<Vec<Belief>> {
        let (n, nu) = (self.n, self.nu);
        assert!(y.len() == n && z.len() == n, "observation length");
        let likelihood: Vec<f64> = (0..cb.message_count)
            .map(|m| cb.x_word(m).iter().zip(y).map(|(&x, &yi)| s.channel().get(x, yi)).product())
            .collect();
        let pair: Vec<f64> = (0..n).flat_map(|i| (0..nu).map(move |u| (i, u))).map(|(i, u)| s.source().get(&[u, z[i]])).collect();

        let mut acc = vec![0.0; n * nu];
        let mut u = vec![0; n];
        for idx in 0..self.m.len() {
            let lik = likelihood[self.m[idx] as usize];
            if lik == 0.0 {
                continue;
            }
            digits(idx, nu, &mut u);
            let mut w = lik;
            for (i, &ui) in u.iter().enumerate() {
                w *= pair[i * nu + ui];
            }
            if w == 0.0 {
                continue;
            }
            for (i, &ui) in u.iter().enumerate() {
                acc[i * nu + ui] += w;
            }
        }
        acc.chunks(nu)
            .map(|row| {
                if row.iter().sum::<f64>() > 0.0 {
                    Belief::from_weights(row.to_vec())
                } else {
                    Err(Error::ZeroProbabilityObservation)
                }
            })
            .collect()
    }
}

/// Per-position posteriors of the source given the channel output and the
/// state sequence, under the codebook's deterministic encoder.
pub fn exact_posterior(y: &[usize], z: &[usize], cb: &Codebook, s: &Scenario, delta: f64) -> Result<Vec<Belief>> {
    EncoderTable::build(cb, s.nu(), delta)?.posterior(y, z, cb, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub max: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Some(Self {
            count: xs.len(),
            mean,
            std_dev: libm::sqrt(var),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimParams {
    /// KL threshold of a well-matched position, bits.
    pub alpha: f64,
    /// Fraction of positions allowed to be badly matched.
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub rate_r: f64,
    pub rate_rl: f64,
    pub message_count: usize,
    pub bin_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Trials where the encoder found a typical word.
    pub coverage_rate: f64,
    /// Trials where the encoder failed or the decoder's indices differ.
    pub error_rate: f64,
    pub mean_utility_encoder: f64,
    /// Standard error of `mean_utility_encoder` across trials.
    pub stderr_utility_encoder: f64,
    pub mean_utility_decoder: f64,
    /// Per-position `D(P(U_i|y^n,z^n) ‖ Q(U_i|w_i,z_i))` over all trials.
    pub kl_per_position: Option<Summary>,
    /// The same restricted to trials without an error event.
    pub kl_per_position_no_error: Option<Summary>,
    /// Positions with infinite divergence, excluded from the summaries.
    pub kl_infinite_positions: usize,
    pub b_set_frequency: f64,
    /// Fraction of positions where the action computed from the decoded word
    /// matches the exact best reply, over trials that decoded.
    pub wz_action_agreement: Option<f64>,
    /// The joint typicality of `(w^n, y^n, z^n)` in the B-set is read as
    /// `(z, w)` joint typicality plus typicality of `y` alone.
    pub b_set_typicality: String,
    pub codebook_draw: CodebookDraw,
    pub params: SimParams,
}

struct Trial {
    covered: bool,
    error: bool,
    utility_encoder: f64,
    utility_decoder: f64,
    kl: Vec<f64>,
    kl_infinite: usize,
    in_b_set: bool,
    agreement: Option<(usize, usize)>,
}

/// `Q(u | w, z)` for each `(w, z)`, flattened `[(w * nz + z) * nu + u]`;
/// empty rows where `(w, z)` has zero probability.
fn target_posteriors(s: &Scenario, q: &DisclosureKernel) -> Vec<f64> {
    let (nu, nz, nw) = (s.nu(), s.nz(), q.nw());
    let mut out = vec![0.0; nw * nz * nu];
    for w in 0..nw {
        for z in 0..nz {
            let row = &mut out[(w * nz + z) * nu..(w * nz + z + 1) * nu];
            for (u, r) in row.iter_mut().enumerate() {
                *r = s.source().get(&[u, z]) * q.kernel().get(u, w);
            }
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for r in row.iter_mut() {
                    *r /= total;
                }
            }
        }
    }
    out
}

/// Runs `trials` independent blocks against one codebook drawn from `seed`.
pub fn simulate(s: &Scenario, config: &CodebookConfig, trials: usize, alpha: f64, gamma: f64, seed: u64) -> Result<SimReport> {
    simulate_with(s, config, trials, alpha, gamma, seed, CodebookDraw::PerTrial)
}

/// Whether all trials share one codebook or each draws its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CodebookDraw {
    /// One codebook for the whole run: the performance of a single code.
    Shared,
    /// A fresh codebook per trial: the average over the random-coding
    /// ensemble, which is what the coding bounds speak about.
    #[default]
    PerTrial,
}

/// Codebook stream of trial `t` under [`CodebookDraw::PerTrial`].
fn trial_codebook_stream(t: usize) -> u64 {
    CODEBOOK_STREAM - 1 - t as u64
}

pub fn simulate_with(
    s: &Scenario,
    config: &CodebookConfig,
    trials: usize,
    alpha: f64,
    gamma: f64,
    seed: u64,
    draw: CodebookDraw,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument(String::from("at least one trial is needed")));
    }
    config.validate(s, f64::INFINITY)?;
    let shared = match draw {
        CodebookDraw::Shared => {
            let cb = build_codebook(s, config, seed)?;
            let table = EncoderTable::build(&cb, s.nu(), config.delta)?;
            Some((cb, table))
        }
        CodebookDraw::PerTrial => {
            // fail early on sizes the per-trial builds would reject
            if sequence_count(s.nu(), config.n) > EXACT_POSTERIOR_CAP {
                return Err(Error::EnumerationTooLarge {
                    size: sequence_count(s.nu(), config.n),
                    cap: EXACT_POSTERIOR_CAP,
                });
            }
            None
        }
    };
    let (nu, nz, n) = (s.nu(), s.nz(), config.n);
    let delta = config.delta;
    let joint = WeightedIndex::new(s.source().mass()).map_err(|e| Error::InvalidDistribution(format!("{e}")))?;
    let targets = target_posteriors(s, &config.disclosure);
    let ue = s.utility_encoder();
    let ud = s.utility_decoder();

    let outcomes = par::map_range(trials, |t| -> Result<Trial> {
        let own;
        let (cb, table) = match &shared {
            Some((cb, table)) => (cb, table),
            None => {
                let cb = draw_codebook(s, config, seed, trial_codebook_stream(t))?;
                let table = EncoderTable::build_serial(&cb, s.nu(), config.delta)?;
                own = (cb, table);
                (&own.0, &own.1)
            }
        };
        let mut rng = rng_for(seed, t as u64);
        let mut u = vec![0; n];
        let mut z = vec![0; n];
        for i in 0..n {
            let k = joint.sample(&mut rng);
            u[i] = k / nz;
            z[i] = k % nz;
        }
        let (m, l, covered) = table.lookup(&u);
        let y: Vec<usize> = cb
            .x_word(m)
            .iter()
            .map(|&x| {
                let row = s.channel().row(x);
                let r: f64 = rng.random();
                let mut acc = 0.0;
                for (yi, &p) in row.iter().enumerate() {
                    acc += p;
                    if r < acc {
                        return yi;
                    }
                }
                row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
            })
            .collect();
        let post = table.posterior(&y, &z, cb, s)?;
        let decoded = wz_decode(&y, &z, cb, delta);
        let error = !covered || !decoded.found || (decoded.m, decoded.l) != (m, l);

        let w_true = cb.w_word(m, l);
        let mut utility_encoder = 0.0;
        let mut utility_decoder = 0.0;
        let mut kl = Vec::with_capacity(n);
        let mut kl_infinite = 0;
        let mut matched = 0;
        let mut agree = 0;
        for i in 0..n {
            let p = post[i].mass();
            let v = s.chosen_action(z[i], p);
            utility_encoder += ue.get(u[i], z[i], v);
            utility_decoder += ud.get(u[i], z[i], v);
            let target = &targets[(w_true[i] * nz + z[i]) * nu..(w_true[i] * nz + z[i] + 1) * nu];
            let d = kl_bits(p, target);
            if d.support_violation {
                kl_infinite += 1;
            } else {
                kl.push(d.bits);
                if d.bits <= alpha {
                    matched += 1;
                }
            }
            if decoded.found {
                let w_hat = cb.w_word(decoded.m, decoded.l)[i];
                let est = &targets[(w_hat * nz + z[i]) * nu..(w_hat * nz + z[i] + 1) * nu];
                if est.iter().sum::<f64>() > 0.0 && s.chosen_action(z[i], est) == v {
                    agree += 1;
                }
            }
        }
        let mut counts = Vec::new();
        let y_typical = {
            let zeros = vec![0; n];
            jointly_typical(&zeros, &y, cb.targets.y.len(), &cb.targets.y, delta, &mut counts)
        };
        let zw_typical = jointly_typical(&z, w_true, cb.nw, &cb.targets.zw, delta, &mut counts);
        let in_b_set = y_typical && zw_typical && matched as f64 >= (1.0 - gamma) * n as f64 - SLACK;
        Ok(Trial {
            covered,
            error,
            utility_encoder: utility_encoder / n as f64,
            utility_decoder: utility_decoder / n as f64,
            kl,
            kl_infinite,
            in_b_set,
            agreement: decoded.found.then_some((agree, n)),
        })
    });

    let mut covered = 0;
    let mut errors = 0;
    let mut b_set = 0;
    let mut enc = Vec::with_capacity(trials);
    let mut dec = 0.0;
    let mut kl_all = Vec::new();
    let mut kl_ok = Vec::new();
    let mut kl_infinite = 0;
    let mut agree = (0, 0);
    for o in outcomes {
        let o = o?;
        covered += o.covered as usize;
        errors += o.error as usize;
        b_set += o.in_b_set as usize;
        enc.push(o.utility_encoder);
        dec += o.utility_decoder;
        if !o.error {
            kl_ok.extend_from_slice(&o.kl);
        }
        kl_all.extend(o.kl);
        kl_infinite += o.kl_infinite;
        if let Some((a, b)) = o.agreement {
            agree.0 += a;
            agree.1 += b;
        }
    }
    let t = trials as f64;
    let enc_summary = Summary::of(&enc).expect("trials > 0");
    let stderr = |x: &Summary| x.std_dev / libm::sqrt((t - 1.0).max(1.0));
    Ok(SimReport {
        n,
        trials,
        seed,
        coverage_rate: covered as f64 / t,
        error_rate: errors as f64 / t,
        mean_utility_encoder: enc_summary.mean,
        stderr_utility_encoder: stderr(&enc_summary),
        mean_utility_decoder: dec / t,
        kl_per_position: Summary::of(&kl_all),
        kl_per_position_no_error: Summary::of(&kl_ok),
        kl_infinite_positions: kl_infinite,
        b_set_frequency: b_set as f64 / t,
        wz_action_agreement: (agree.1 > 0).then(|| agree.0 as f64 / agree.1 as f64),
        b_set_typicality: String::from("marginal: (z,w) joint and y alone"),
        codebook_draw: draw,
        params: SimParams {
            alpha,
            gamma,
            delta,
            eta: config.eta,
            rate_r: config.rate_r,
            rate_rl: config.rate_rl,
            message_count: config.message_count(),
            bin_count: config.bin_count(),
        },
    })
}
