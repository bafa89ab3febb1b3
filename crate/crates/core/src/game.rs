//! The single-letter persuasion game.
//!
//! The decoder holds a belief over `U`, sees its state `z` and plays a best
//! reply; when several actions are optimal for the decoder it plays the one
//! worst for the encoder. Everything the solvers need is expressed through
//! two functions of a belief `p` over `U`:
//!
//! * the average utility `Ψ_e(p) = Σ_z P_p(z) ψ_e(z, p(·|z))`, and
//! * the average entropy `h(p) = H(U|Z)` when `U ~ p` and `Z|U` follows the source.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::prob::{conditional_mutual_information, entropy_bits, plogp, Alphabet, Dist, Joint, Kernel};
use crate::{Error, Result, FEASIBILITY_TOL, TIE_TOL};

/// Utility table `φ(u, z, v)`, stored `[u][z][v]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UtilityTable {
    nu: usize,
    nz: usize,
    nv: usize,
    data: Vec<f64>,
}

impl UtilityTable {
    pub fn new(nu: usize, nz: usize, nv: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nu * nz * nv {
            return Err(Error::DimensionMismatch(format!(
                "utility table needs {} entries, got {}",
                nu * nz * nv,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("utility entry {i} is not finite")));
        }
        Ok(Self { nu, nz, nv, data })
    }

    pub fn from_nested(table: &[Vec<Vec<f64>>]) -> Result<Self> {
        let nu = table.len();
        let nz = table.first().map_or(0, Vec::len);
        let nv = table.first().and_then(|t| t.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nu * nz * nv);
        for (u, by_z) in table.iter().enumerate() {
            if by_z.len() != nz {
                return Err(Error::DimensionMismatch(format!("utility row u={u} has {} states", by_z.len())));
            }
            for (z, by_v) in by_z.iter().enumerate() {
                if by_v.len() != nv {
                    return Err(Error::DimensionMismatch(format!(
                        "utility entry [{u}][{z}] has {} actions",
                        by_v.len()
                    )));
                }
                data.extend_from_slice(by_v);
            }
        }
        Self::new(nu, nz, nv, data)
    }

    /// Table that ignores the state: `φ(u, z, v) = table[u][v]` for every `z`.
    pub fn state_independent(table: &[Vec<f64>], nz: usize) -> Result<Self> {
        let nested: Vec<Vec<Vec<f64>>> = table.iter().map(|row| vec![row.clone(); nz]).collect();
        Self::from_nested(&nested)
    }

    #[inline]
    pub fn get(&self, u: usize, z: usize, v: usize) -> f64 {
        self.data[(u * self.nz + z) * self.nv + v]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nu, self.nz, self.nv)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.nu)
            .map(|u| (0..self.nz).map(|z| (0..self.nv).map(|v| self.get(u, z, v)).collect()).collect())
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn is_state_independent(&self) -> bool {
        (0..self.nu).all(|u| (0..self.nz).all(|z| (0..self.nv).all(|v| self.get(u, z, v) == self.get(u, 0, v))))
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub u: Alphabet,
    pub z: Alphabet,
    pub x: Alphabet,
    pub y: Alphabet,
    pub v: Alphabet,
    /// `P(u, z)`, axes `(U, Z)`.
    source: Joint,
    /// `T(y | x)`.
    channel: Kernel,
    utility_encoder: UtilityTable,
    utility_decoder: UtilityTable,
    prior: Dist,
    /// `P(z | u)`; uniform for source symbols of zero probability.
    state_kernel: Kernel,
}

impl Scenario {
    pub fn new(
        alphabets: [Alphabet; 5],
        source: Joint,
        channel: Kernel,
        utility_encoder: UtilityTable,
        utility_decoder: UtilityTable,
    ) -> Result<Self> {
        let [u, z, x, y, v] = alphabets;
        if source.shape() != [u.len(), z.len()] {
            return Err(Error::DimensionMismatch(format!(
                "source has shape {:?}, alphabets need [{}, {}]",
                source.shape(),
                u.len(),
                z.len()
            )));
        }
        if channel.n_from() != x.len() || channel.n_to() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel is {}x{}, alphabets need {}x{}",
                channel.n_from(),
                channel.n_to(),
                x.len(),
                y.len()
            )));
        }
        for (name, t) in [("utility_encoder", &utility_encoder), ("utility_decoder", &utility_decoder)] {
            if t.dims() != (u.len(), z.len(), v.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has dims {:?}, alphabets need ({}, {}, {})",
                    t.dims(),
                    u.len(),
                    z.len(),
                    v.len()
                )));
            }
        }
        let prior = source.axis_dist(0)?;
        let nz = z.len();
        let rows = (0..u.len())
            .map(|ui| {
                let pu = prior.get(ui);
                if pu > 0.0 {
                    let row: Vec<f64> = (0..nz).map(|zi| source.get(&[ui, zi]) / pu).collect();
                    let total: f64 = row.iter().sum();
                    row.into_iter().map(|p| p / total).collect()
                } else {
                    vec![1.0 / nz as f64; nz]
                }
            })
            .collect();
        let state_kernel = Kernel::new(rows)?;
        Ok(Self {
            u,
            z,
            x,
            y,
            v,
            source,
            channel,
            utility_encoder,
            utility_decoder,
            prior,
            state_kernel,
        })
    }

    pub fn source(&self) -> &Joint {
        &self.source
    }

    pub fn channel(&self) -> &Kernel {
        &self.channel
    }

    pub fn utility_encoder(&self) -> &UtilityTable {
        &self.utility_encoder
    }

    pub fn utility_decoder(&self) -> &UtilityTable {
        &self.utility_decoder
    }

    pub fn prior(&self) -> &Dist {
        &self.prior
    }

    pub fn state_kernel(&self) -> &Kernel {
        &self.state_kernel
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }

    /// Same scenario with another channel.
    pub fn with_channel(&self, x: Alphabet, y: Alphabet, channel: Kernel) -> Result<Self> {
        Self::new(
            [self.u.clone(), self.z.clone(), x, y, self.v.clone()],
            self.source.clone(),
            channel,
            self.utility_encoder.clone(),
            self.utility_decoder.clone(),
        )
    }

    /// A random instance with full-support source and channel and utilities
    /// uniform on `[0, 1)`. Used by tests and benchmarks.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, nu: usize, nz: usize, nx: usize, nv: usize) -> Result<Self> {
        let mut weights = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(0.05..1.0)).collect() };
        let source = weights(nu * nz);
        let total: f64 = source.iter().sum();
        let source = Joint::new(vec![nu, nz], source.into_iter().map(|p| p / total).collect())?;
        let channel = Kernel::new(
            (0..nx)
                .map(|_| {
                    let row = weights(nx);
                    let t: f64 = row.iter().sum();
                    row.into_iter().map(|p| p / t).collect()
                })
                .collect(),
        )?;
        let ue = UtilityTable::new(nu, nz, nv, (0..nu * nz * nv).map(|_| rng.random::<f64>()).collect())?;
        let ud = UtilityTable::new(nu, nz, nv, (0..nu * nz * nv).map(|_| rng.random::<f64>()).collect())?;
        Self::new(
            [
                Alphabet::numbered("U", "u", nu)?,
                Alphabet::numbered("Z", "z", nz)?,
                Alphabet::numbered("X", "x", nx)?,
                Alphabet::numbered("Y", "y", nx)?,
                Alphabet::numbered("V", "v", nv)?,
            ],
            source,
            channel,
            ue,
            ud,
        )
    }

    /// Same scenario with the decoder's state collapsed to a single symbol.
    /// Only defined when neither utility depends on the state.
    pub fn without_side_information(&self) -> Result<Self> {
        if !self.utility_encoder.is_state_independent() || !self.utility_decoder.is_state_independent() {
            return Err(Error::InvalidArgument(String::from(
                "utilities depend on the state; collapsing it changes the game",
            )));
        }
        let collapse = |t: &UtilityTable| {
            let (nu, _, nv) = t.dims();
            let data = (0..nu).flat_map(|u| (0..nv).map(move |v| (u, v))).map(|(u, v)| t.get(u, 0, v)).collect();
            UtilityTable::new(nu, 1, nv, data)
        };
        Self::new(
            [
                self.u.clone(),
                Alphabet::new(self.z.name(), vec![String::from("z0")])?,
                self.x.clone(),
                self.y.clone(),
                self.v.clone(),
            ],
            Joint::new(vec![self.nu(), 1], self.prior.mass().to_vec())?,
            self.channel.clone(),
            collapse(&self.utility_encoder)?,
            collapse(&self.utility_decoder)?,
        )
    }

    /// Decoder best reply at state `z` and belief `p` over `U`.
    pub fn best_reply_actions(&self, z: usize, p: &[f64]) -> BestReply {
        let nv = self.nv();
        let decoder: Vec<f64> = (0..nv).map(|v| self.expected(&self.utility_decoder, z, v, p)).collect();
        let best = decoder.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let optimal_set: Vec<usize> = (0..nv).filter(|&v| decoder[v] >= best - TIE_TOL).collect();
        let chosen = self.worst_for_encoder(z, p, optimal_set.iter().copied());
        BestReply { chosen, optimal_set }
    }

    /// The action the decoder plays: `best_reply_actions(..).chosen` without
    /// allocating.
    #[inline]
    pub fn chosen_action(&self, z: usize, p: &[f64]) -> usize {
        let nv = self.nv();
        let mut best = f64::NEG_INFINITY;
        for v in 0..nv {
            best = best.max(self.expected(&self.utility_decoder, z, v, p));
        }
        let tied = (0..nv).filter(|&v| self.expected(&self.utility_decoder, z, v, p) >= best - TIE_TOL);
        self.worst_for_encoder(z, p, tied)
    }

    fn worst_for_encoder(&self, z: usize, p: &[f64], actions: impl Iterator<Item = usize>) -> usize {
        let mut chosen = usize::MAX;
        let mut worst = f64::INFINITY;
        for v in actions {
            let e = self.expected(&self.utility_encoder, z, v, p);
            if e < worst {
                worst = e;
                chosen = v;
            }
        }
        chosen
    }

    #[inline]
    fn expected(&self, table: &UtilityTable, z: usize, v: usize, p: &[f64]) -> f64 {
        p.iter().enumerate().map(|(u, &pu)| pu * table.get(u, z, v)).sum()
    }

    /// `ψ_e(z, p)`: encoder utility under the decoder's chosen best reply.
    pub fn robust_utility(&self, z: usize, p: &[f64]) -> f64 {
        let v = self.chosen_action(z, p);
        self.expected(&self.utility_encoder, z, v, p)
    }

    /// Decoder's own expected utility under its chosen best reply.
    pub fn decoder_utility(&self, z: usize, p: &[f64]) -> f64 {
        let v = self.chosen_action(z, p);
        self.expected(&self.utility_decoder, z, v, p)
    }

    /// `P_p(z)` and the posterior `p(·|z)` when `U ~ p`; `None` when `z` has
    /// zero probability.
    pub fn posterior_given_state(&self, p: &[f64], z: usize) -> Option<(f64, Vec<f64>)> {
        let mut post: Vec<f64> = p.iter().enumerate().map(|(u, &pu)| pu * self.state_kernel.get(u, z)).collect();
        let pz: f64 = post.iter().sum();
        if pz > 0.0 {
            for x in &mut post {
                *x /= pz;
            }
            Some((pz, post))
        } else {
            None
        }
    }

    /// `Ψ_e(p)`, `h(p)` and the action profile at `p` in one pass.
    pub fn evaluate_belief(&self, p: &[f64]) -> BeliefValue {
        let mut value = 0.0;
        let mut entropy = 0.0;
        let mut profile = Vec::with_capacity(self.nz());
        for z in 0..self.nz() {
            match self.posterior_given_state(p, z) {
                Some((pz, post)) => {
                    let v = self.chosen_action(z, &post);
                    value += pz * self.expected(&self.utility_encoder, z, v, &post);
                    entropy += pz * entropy_bits(&post);
                    profile.push(Some(v));
                }
                None => profile.push(None),
            }
        }
        BeliefValue {
            utility: value,
            entropy,
            profile,
        }
    }

    /// `Ψ_e(p)`.
    pub fn average_utility(&self, p: &[f64]) -> f64 {
        self.evaluate_belief(p).utility
    }

    /// `h(p)`, the conditional entropy `H(U|Z)` under `U ~ p`.
    pub fn average_entropy(&self, p: &[f64]) -> f64 {
        (0..self.nz())
            .filter_map(|z| self.posterior_given_state(p, z))
            .map(|(pz, post)| pz * entropy_bits(&post))
            .sum()
    }

    /// `H(U|Z)` of the source.
    pub fn source_conditional_entropy(&self) -> f64 {
        self.average_entropy(self.prior.mass())
    }

    /// Value of a disclosure kernel `Q(w|u)` against a channel of the given
    /// capacity: decoder best-replies at every `(z, w)`.
    pub fn direct_value(&self, q: &DisclosureKernel, channel_capacity: f64) -> Result<DirectValue> {
        let k = q.kernel();
        if k.n_from() != self.nu() {
            return Err(Error::DimensionMismatch(format!(
                "disclosure kernel has {} rows, |U| = {}",
                k.n_from(),
                self.nu()
            )));
        }
        let nw = k.n_to();
        let (nu, nz) = (self.nu(), self.nz());
        // axes (U, W, Z)
        let mut mass = vec![0.0; nu * nw * nz];
        for u in 0..nu {
            for w in 0..nw {
                for z in 0..nz {
                    mass[(u * nw + w) * nz + z] = self.source.get(&[u, z]) * k.get(u, w);
                }
            }
        }
        let mut value = 0.0;
        let mut weights = vec![0.0; nu];
        for z in 0..nz {
            for w in 0..nw {
                for (u, x) in weights.iter_mut().enumerate() {
                    *x = mass[(u * nw + w) * nz + z];
                }
                let total: f64 = weights.iter().sum();
                if total > 0.0 {
                    for x in &mut weights {
                        *x /= total;
                    }
                    value += total * self.robust_utility(z, &weights);
                }
            }
        }
        let joint = Joint::new(vec![nu, nw, nz], mass)?;
        let info_rate = conditional_mutual_information(&joint, 2)?;
        let slack = channel_capacity - info_rate;
        Ok(DirectValue {
            value,
            feasible: slack >= -FEASIBILITY_TOL,
            constraint_slack: slack,
            info_rate,
        })
    }

    /// Encoder utility when nothing crosses the channel: the decoder acts on
    /// `P(u|z)` alone.
    pub fn zero_capacity_value(&self) -> f64 {
        (0..self.nz())
            .filter_map(|z| {
                let col: Vec<f64> = (0..self.nu()).map(|u| self.source.get(&[u, z])).collect();
                let pz: f64 = col.iter().sum();
                (pz > 0.0).then(|| {
                    let post: Vec<f64> = col.iter().map(|m| m / pz).collect();
                    pz * self.robust_utility(z, &post)
                })
            })
            .sum()
    }

    /// Value, barycenter, average entropy and feasibility of a splitting.
    pub fn splitting_evaluate(&self, sp: &Splitting, channel_capacity: f64) -> SplittingEvaluation {
        let nu = self.nu();
        let mut value = 0.0;
        let mut avg_entropy = 0.0;
        let mut bary = vec![0.0; nu];
        for atom in sp.atoms() {
            let b = self.evaluate_belief(atom.belief.mass());
            value += atom.weight * b.utility;
            avg_entropy += atom.weight * b.entropy;
            for (acc, p) in bary.iter_mut().zip(atom.belief.mass()) {
                *acc += atom.weight * p;
            }
        }
        let deviation = bary.iter().zip(self.prior.mass()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let required = self.source_conditional_entropy() - channel_capacity;
        let slack = avg_entropy - required;
        let infeasibility = if deviation > BARYCENTER_TOL {
            Some(Infeasibility::BarycenterMismatch { deviation })
        } else if slack < -FEASIBILITY_TOL {
            Some(Infeasibility::InformationConstraint { deficit: -slack })
        } else {
            None
        };
        let total: f64 = bary.iter().sum();
        SplittingEvaluation {
            value,
            barycenter: Belief::from_weights(bary).unwrap_or_else(|_| Belief(Dist::uniform(nu))),
            barycenter_total: total,
            avg_entropy,
            constraint_slack: slack,
            feasible: infeasibility.is_none(),
            infeasibility,
        }
    }

    /// Merges atoms that induce the same action profile into their weighted
    /// average. The value is unchanged and the average entropy cannot drop.
    pub fn merge_equivalent_posteriors(&self, sp: &Splitting) -> Splitting {
        let mut groups: Vec<(Vec<Option<usize>>, f64, Vec<f64>)> = Vec::new();
        for atom in sp.atoms() {
            let profile = self.evaluate_belief(atom.belief.mass()).profile;
            let weighted = atom.belief.mass().iter().map(|p| atom.weight * p);
            match groups.iter_mut().find(|g| g.0 == profile) {
                Some(g) => {
                    g.1 += atom.weight;
                    for (acc, p) in g.2.iter_mut().zip(weighted) {
                        *acc += p;
                    }
                }
                None => groups.push((profile, atom.weight, weighted.collect())),
            }
        }
        let atoms = groups
            .into_iter()
            .filter(|g| g.1 > 0.0)
            .map(|(_, weight, sum)| Atom {
                weight,
                belief: Belief(Dist::from_weights(sum).expect("positive group weight")),
            })
            .collect();
        Splitting { atoms }
    }
}

/// Barycenter deviation tolerated by [`Scenario::splitting_evaluate`].
pub const BARYCENTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestReply {
    pub chosen: usize,
    pub optimal_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefValue {
    pub utility: f64,
    pub entropy: f64,
    /// Decoder action per state, `None` where the state has zero probability.
    pub profile: ActionProfile,
}

/// Decoder action per state symbol.
pub type ActionProfile = Vec<Option<usize>>;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectValue {
    pub value: f64,
    pub feasible: bool,
    /// Capacity minus `I(U;W|Z)`.
    pub constraint_slack: f64,
    /// `I(U;W|Z)`.
    pub info_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Infeasibility {
    BarycenterMismatch { deviation: f64 },
    InformationConstraint { deficit: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingEvaluation {
    pub value: f64,
    pub barycenter: Belief,
    pub barycenter_total: f64,
    pub avg_entropy: f64,
    /// `Σ λ h(p) - (H(U|Z) - C)`.
    pub constraint_slack: f64,
    pub feasible: bool,
    pub infeasibility: Option<Infeasibility>,
}

/// A point of the simplex over `U`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Belief(pub Dist);

impl Belief {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        Dist::new(mass).map(Belief)
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Dist::from_weights(weights).map(Belief)
    }

    /// Binary belief putting mass `q` on the second symbol.
    pub fn binary(q: f64) -> Result<Self> {
        Dist::bernoulli(q).map(Belief)
    }

    pub fn mass(&self) -> &[f64] {
        self.0.mass()
    }

    pub fn dist(&self) -> &Dist {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atom {
    pub weight: f64,
    pub belief: Belief,
}

/// Weighted family of beliefs averaging to the prior.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Splitting {
    atoms: Vec<Atom>,
}

impl Splitting {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument(String::from("splitting has no atoms")));
        }
        let n = atoms[0].belief.0.len();
        if atoms.iter().any(|a| a.belief.0.len() != n) {
            return Err(Error::DimensionMismatch(String::from("splitting atoms live on different simplices")));
        }
        if atoms.iter().any(|a| !(0.0..=1.0).contains(&a.weight)) {
            return Err(Error::InvalidArgument(String::from("splitting weight outside [0, 1]")));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("splitting weights sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn single(belief: Belief) -> Self {
        Self {
            atoms: vec![Atom { weight: 1.0, belief }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let n = self.atoms[0].belief.0.len();
        let mut out = vec![0.0; n];
        for a in &self.atoms {
            for (o, p) in out.iter_mut().zip(a.belief.mass()) {
                *o += a.weight * p;
            }
        }
        out
    }
}

/// Disclosure rule `Q(w|u)` over an auxiliary alphabet `W`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisclosureKernel(pub Kernel);

impl DisclosureKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Kernel::new(rows).map(DisclosureKernel)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.0
    }

    pub fn nw(&self) -> usize {
        self.0.n_to()
    }

    /// Kernel realizing `sp` from `prior`: `Q(w|u) = λ_w p_w(u) / P(u)`.
    /// Rows of zero-probability symbols are set uniform.
    pub fn from_splitting(sp: &Splitting, prior: &Dist) -> Result<Self> {
        let nw = sp.len();
        let rows = (0..prior.len())
            .map(|u| {
                let pu = prior.get(u);
                if pu > 0.0 {
                    let row: Vec<f64> = sp.atoms().iter().map(|a| a.weight * a.belief.0.get(u) / pu).collect();
                    let total: f64 = row.iter().sum();
                    row.into_iter().map(|x| x / total).collect()
                } else {
                    vec![1.0 / nw as f64; nw]
                }
            })
            .collect();
        Self::new(rows)
    }

    /// Splitting induced on `prior`: `λ_w = Q(w)`, `p_w = Q(u|w)`. Symbols
    /// `w` of zero probability are dropped.
    pub fn to_splitting(&self, prior: &Dist) -> Result<Splitting> {
        let k = &self.0;
        let mut atoms = Vec::new();
        for w in 0..k.n_to() {
            let joint: Vec<f64> = (0..k.n_from()).map(|u| prior.get(u) * k.get(u, w)).collect();
            let weight: f64 = joint.iter().sum();
            if weight > 0.0 {
                atoms.push(Atom {
                    weight,
                    belief: Belief(Dist::from_weights(joint)?),
                });
            }
        }
        Splitting::new(atoms)
    }
}

/// `I(U;W)` and `I(Z;W)` of the joint `P(u, z) Q(w|u)`.
pub fn disclosure_rates(s: &Scenario, q: &DisclosureKernel) -> (f64, f64) {
    let k = q.kernel();
    let nw = k.n_to();
    let prior = s.prior();
    let qw = k.push_forward(prior);
    let h_w = entropy_bits(qw.mass());
    let mut h_w_given_u = 0.0;
    for u in 0..s.nu() {
        h_w_given_u += prior.get(u) * entropy_bits(k.row(u));
    }
    let mut h_w_given_z = 0.0;
    for z in 0..s.nz() {
        let col: Vec<f64> = (0..nw)
            .map(|w| (0..s.nu()).map(|u| s.source().get(&[u, z]) * k.get(u, w)).sum())
            .collect();
        let pz: f64 = col.iter().sum();
        if pz > 0.0 {
            h_w_given_z += col.iter().map(|&m| plogp(m / pz)).sum::<f64>() * pz;
        }
    }
    ((h_w - h_w_given_u).max(0.0), (h_w - h_w_given_z).max(0.0))
}
