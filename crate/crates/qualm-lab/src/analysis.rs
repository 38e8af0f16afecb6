//! Exact and sampled transcript distributions of simple-measurement
//! strategies, distances between them, and the quantities that bound those
//! distances.
//!
//! All distances are the 1-norm `Σ_s |p(s) − q(s)|`, which is twice the
//! usual total variation distance.
//!
//! Transcripts `(s_0, …, s_k)` are stored densely, indexed big-endian in
//! base `arity`.

use std::borrow::Cow;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, Povm, PureState, C64};
use crate::perm::{
    enumerate_pair_partitions, enumerate_permutations, pair_partition_trace_factors,
    permutation_trace_factors, Factor, PairPartition, Permutation,
};
use crate::qualm::{
    execute_sm, make_oracle, OracleAction, OracleKind, OracleOptions, Prep, SmPolicy,
};
use crate::sampling::{derive_seed, j_for_qubits, sample_haar_unitary, SeededStream};
use crate::weingarten::{bound_regime, gram_pseudo_inverse, haar_twirl, wg_table, Group};

/// Largest number of transcripts held densely.
pub const MAX_TRANSCRIPTS: usize = 1_000_000;
pub const MAX_EXACT_K_UNITARY: usize = 4;
pub const MAX_EXACT_K_PAIRING: usize = 3;
/// Probabilities down to this value are clamped to zero; lower is an error.
pub const PROB_FLOOR: f64 = -1e-12;
pub const SUM_TOL: f64 = 1e-9;
/// Width of the Wilson intervals attached to empirical distributions.
pub const WILSON_Z: f64 = 5.0;

fn transcript_count(arity: usize, rounds: usize) -> Result<usize> {
    let n = u32::try_from(rounds + 1)
        .ok()
        .and_then(|e| arity.checked_pow(e))
        .filter(|&n| n <= MAX_TRANSCRIPTS)
        .ok_or_else(|| Error::Size(format!("{arity}^{} transcripts exceed {MAX_TRANSCRIPTS}", rounds + 1)))?;
    Ok(n)
}

fn to_digits(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    arity: usize,
    rounds: usize,
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(arity: usize, rounds: usize, mut probabilities: Vec<f64>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Shape("arity must be positive".into()));
        }
        let n = transcript_count(arity, rounds)?;
        if probabilities.len() != n {
            return Err(Error::Shape(format!("{} probabilities for {n} transcripts", probabilities.len())));
        }
        for p in probabilities.iter_mut() {
            if !(p.is_finite() && *p >= PROB_FLOOR) {
                return Err(Error::Validation(format!("probability {p} below {PROB_FLOOR}")));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(Self { arity, rounds, probabilities })
    }

    pub fn point_mass(arity: usize, rounds: usize, transcript: &[usize]) -> Result<Self> {
        let mut p = vec![0.0; transcript_count(arity, rounds)?];
        let probe = Self { arity, rounds, probabilities: Vec::new() };
        p[probe.index_of(transcript)?] = 1.0;
        Self::new(arity, rounds, p)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn index_of(&self, transcript: &[usize]) -> Result<usize> {
        if transcript.len() != self.rounds + 1 || transcript.iter().any(|&s| s >= self.arity) {
            return Err(Error::Shape(format!("transcript {transcript:?} does not fit {}^{}", self.arity, self.rounds + 1)));
        }
        Ok(transcript.iter().fold(0, |acc, &s| acc * self.arity + s))
    }

    pub fn transcript(&self, index: usize) -> Vec<usize> {
        to_digits(index, self.arity, self.rounds + 1)
    }

    pub fn probability(&self, transcript: &[usize]) -> Result<f64> {
        Ok(self.probabilities[self.index_of(transcript)?])
    }

    /// Marginal on the listed rounds, in the listed order.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() || keep.iter().any(|&r| r > self.rounds) {
            return Err(Error::Shape(format!("cannot keep rounds {keep:?} of 0..={}", self.rounds)));
        }
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() {
            return Err(Error::Shape("repeated rounds in marginal".into()));
        }
        let mut out = vec![0.0; transcript_count(self.arity, keep.len() - 1)?];
        for (i, &p) in self.probabilities.iter().enumerate() {
            let t = self.transcript(i);
            out[keep.iter().fold(0, |acc, &r| acc * self.arity + t[r])] += p;
        }
        Self::new(self.arity, keep.len() - 1, out)
    }

    /// CSV with header `transcript,probability`; transcripts are written as
    /// outcome indices joined by `-`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["transcript", "probability"]).map_err(csv_err)?;
        for (i, p) in self.probabilities.iter().enumerate() {
            let t: Vec<String> = self.transcript(i).iter().map(|s| s.to_string()).collect();
            wtr.write_record([t.join("-"), format!("{p:.17e}")]).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `Σ_s |p(s) − q(s)|`.
pub fn tvd(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    if p.arity != q.arity || p.rounds != q.rounds {
        return Err(Error::Shape(format!(
            "supports differ: {}^{} vs {}^{}",
            p.arity,
            p.rounds + 1,
            q.arity,
            q.rounds + 1
        )));
    }
    Ok(p.probabilities.iter().zip(&q.probabilities).map(|(a, b)| (a - b).abs()).sum())
}

/// Trace norm `‖ρ₀ − ρ₁‖₁` of two single-qubit output states.
pub fn bias(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != 2 || rho1.dim() != 2 {
        return Err(Error::Shape("bias is defined for single-qubit outputs".into()));
    }
    rho0.matrix().sub(rho1.matrix())?.trace_norm_hermitian()
}

/// Per-round data fixed by a prefix `(s_0, …, s_{k−1})`.
struct Rounds<'a> {
    preps: Vec<Cow<'a, Prep>>,
    povms: Vec<Cow<'a, Povm>>,
}

impl Rounds<'_> {
    /// `λ|y⟩⟨y|` of round `i` (0-based among the oracle rounds) for outcome `s`.
    fn element(&self, i: usize, s: usize) -> (f64, &PureState) {
        let (l, y) = &self.povms[i].elements()[s];
        (*l, y)
    }
}

struct Tree<'a> {
    policy: &'a dyn SmPolicy,
    k: usize,
    d: usize,
    arity: usize,
    pr0: Vec<f64>,
}

impl<'a> Tree<'a> {
    fn new(policy: &'a dyn SmPolicy, ell: usize, k: usize) -> Result<Self> {
        let d = 1usize << ell;
        if k == 0 {
            return Err(Error::Precondition("at least one oracle round is needed".into()));
        }
        if policy.dim() != d || policy.rounds() != k {
            return Err(Error::Shape(format!(
                "policy has dim {} and {} rounds, expected {d} and {k}",
                policy.dim(),
                policy.rounds()
            )));
        }
        let povm0 = policy.povm_for(&[])?;
        let arity = povm0.len();
        transcript_count(arity, k)?;
        let zero = PureState::basis(d, 0);
        let pr0 = povm0.elements().iter().map(|(l, y)| l * y.inner(&zero).norm_sqr()).collect();
        Ok(Self { policy, k, d, arity, pr0 })
    }

    fn rounds(&self, prefix: &[usize]) -> Result<Rounds<'a>> {
        let mut preps = Vec::with_capacity(self.k);
        let mut povms = Vec::with_capacity(self.k);
        for i in 1..=self.k {
            let h = &prefix[..i];
            let povm = self.policy.povm_for(h)?;
            if povm.len() != self.arity {
                return Err(Error::Shape("POVM outcome counts vary across the history tree".into()));
            }
            let prep = self.policy.prepare_for(h)?;
            if prep.dim() != self.d {
                return Err(Error::Shape("preparation dimension differs from the policy".into()));
            }
            povms.push(povm);
            preps.push(prep);
        }
        Ok(Rounds { preps, povms })
    }

    fn prefixes(&self) -> usize {
        self.arity.pow(self.k as u32)
    }

    /// Maps every prefix with `Pr(s_0) > 0` to per-leaf values (without the
    /// `Pr(s_0)` factor) and assembles the distribution.
    fn evaluate<F>(&self, leaf: F) -> Result<OutcomeDistribution>
    where
        F: Fn(&Rounds<'_>, &[usize]) -> Result<Vec<f64>> + Sync,
    {
        let blocks: Vec<Vec<f64>> = (0..self.prefixes())
            .into_par_iter()
            .map(|p| {
                let prefix = to_digits(p, self.arity, self.k);
                let w = self.pr0[prefix[0]];
                if w == 0.0 {
                    return Ok(vec![0.0; self.arity]);
                }
                let rounds = self.rounds(&prefix)?;
                Ok(leaf(&rounds, &prefix)?.into_iter().map(|x| w * x).collect())
            })
            .collect::<Result<_>>()?;
        OutcomeDistribution::new(self.arity, self.k, blocks.concat())
    }
}

fn check_k(group: Group, k: usize) -> Result<()> {
    let cap = match group {
        Group::Unitary => MAX_EXACT_K_UNITARY,
        _ => MAX_EXACT_K_PAIRING,
    };
    if k > cap {
        return Err(Error::Size(format!("exact {group} evaluation supports k ≤ {cap}, got {k}")));
    }
    Ok(())
}

/// The distribution when every call depolarizes `L`:
/// `P_k(s) = Pr(s_0) ∏_i λ_{s_i} / D`.
pub fn exact_pk(policy: &dyn SmPolicy, ell: usize, k: usize) -> Result<OutcomeDistribution> {
    let tree = Tree::new(policy, ell, k)?;
    let d = tree.d as f64;
    tree.evaluate(|r, prefix| {
        let head: f64 = (1..k).map(|i| r.element(i - 1, prefix[i]).0 / d).product();
        Ok((0..tree.arity).map(|s| head * r.element(k - 1, s).0 / d).collect())
    })
}

/// Per-call channel for [`exact_sm_channels`].
#[derive(Clone, Debug)]
pub enum CallChannel {
    Unitary(ComplexMatrix),
    Depolarize,
    Replace(PureState),
    /// One fresh Haar element of the group, i.e. the single-copy twirl.
    HaarAverage(Group),
}

impl From<OracleAction> for CallChannel {
    fn from(a: OracleAction) -> Self {
        match a {
            OracleAction::Unitary(u) => CallChannel::Unitary(u),
            OracleAction::Depolarize => CallChannel::Depolarize,
            OracleAction::Replace(psi) => CallChannel::Replace(psi),
        }
    }
}

impl CallChannel {
    fn apply(&self, prep: &Prep) -> Result<Prep> {
        let d = prep.dim();
        Ok(match self {
            CallChannel::Unitary(u) => prep.rotated(u)?,
            CallChannel::Depolarize => Prep::Mixed(DensityMatrix::maximally_mixed(d)),
            CallChannel::Replace(psi) => Prep::Pure(psi.clone()),
            CallChannel::HaarAverage(g) => {
                let m = haar_twirl(*g, 1, d as i64, prep.density().matrix())?;
                Prep::Mixed(DensityMatrix::new(m)?)
            }
        })
    }
}

/// Exact distribution when call `i` applies `channels[i]` independently of
/// the other calls; a single channel is used for every call.
pub fn exact_sm_channels(
    policy: &dyn SmPolicy,
    ell: usize,
    k: usize,
    channels: &[CallChannel],
) -> Result<OutcomeDistribution> {
    if channels.len() != 1 && channels.len() != k {
        return Err(Error::Shape(format!("{} channels for {k} calls", channels.len())));
    }
    let tree = Tree::new(policy, ell, k)?;
    let channel = |i: usize| &channels[if channels.len() == 1 { 0 } else { i }];
    tree.evaluate(|r, prefix| {
        let mut head = 1.0;
        for i in 1..k {
            let (l, y) = r.element(i - 1, prefix[i]);
            head *= l * channel(i - 1).apply(&r.preps[i - 1])?.expectation(y);
        }
        let last = channel(k - 1).apply(&r.preps[k - 1])?;
        Ok((0..tree.arity)
            .map(|s| {
                let (l, y) = r.element(k - 1, s);
                head * l * last.expectation(y)
            })
            .collect())
    })
}

fn real(z: C64) -> f64 {
    z.re
}

/// `λ |y⟩⟨y|` as a factor.
fn b_factor(l: f64, y: &PureState) -> Factor {
    Factor::projector(l, y.amplitudes())
}

/// `(J λ|y⟩⟨y|)ᵀ = λ ȳ (Jy)ᵀ`.
fn b_factor_sp(l: f64, y: &PureState, j: &ComplexMatrix) -> Factor {
    let jy = j.mul_unchecked(&ComplexMatrix::from_fn(y.dim(), 1, |r, _| y.amplitudes()[r])).column(0);
    Factor::Outer { scale: C64::new(l, 0.0), ket: y.amplitudes().iter().map(|z| z.conj()).collect(), bra_row: jy }
}

/// `σ J`.
fn a_factor_sp(prep: &Prep, j: &ComplexMatrix) -> Factor {
    match prep {
        Prep::Pure(p) => {
            let d = p.dim();
            let row = (0..d)
                .map(|b| (0..d).map(|a| p.amplitudes()[a].conj() * j[(a, b)]).sum())
                .collect();
            Factor::Outer { scale: C64::new(1.0, 0.0), ket: p.amplitudes().to_vec(), bra_row: row }
        }
        Prep::Mixed(m) => Factor::Dense(m.matrix().mul_unchecked(j)),
    }
}

/// Pattern set and Weingarten matrix shared by every transcript.
enum Contraction {
    Unitary { perms: Vec<Permutation>, inverses: Vec<Permutation>, wg: Vec<Vec<f64>> },
    Pairing { pairings: Vec<PairPartition>, wg: Vec<Vec<f64>>, j: Option<ComplexMatrix>, sign: f64 },
}

impl Contraction {
    /// Uses the exact table when the Gram matrix is invertible and its
    /// pseudo-inverse otherwise.
    fn new(group: Group, k: usize, ell: usize) -> Result<Self> {
        let d = 1usize << ell;
        let table = match wg_table(group, k, d as i64) {
            Ok(t) => Some(t),
            Err(Error::Rank(_)) => None,
            Err(e) => return Err(Error::Dependency(format!("Weingarten table unavailable: {e}"))),
        };
        let pinv = match table {
            Some(_) => None,
            None => Some(gram_pseudo_inverse(group, k, d as i64)?),
        };
        Ok(match group {
            Group::Unitary => {
                let perms = enumerate_permutations(k)?;
                let inverses: Vec<Permutation> = perms.iter().map(|p| p.inverse()).collect();
                let wg = match (&table, pinv) {
                    (Some(t), _) => perms
                        .iter()
                        .map(|s| inverses.iter().map(|ti| t.value_f64(&s.compose(ti).cycle_type())).collect())
                        .collect::<Result<_>>()?,
                    (None, Some(p)) => p,
                    (None, None) => unreachable!(),
                };
                Contraction::Unitary { perms, inverses, wg }
            }
            g => {
                let pairings = enumerate_pair_partitions(k)?;
                let wg = match (&table, pinv) {
                    (Some(t), _) => pairings
                        .iter()
                        .map(|m| pairings.iter().map(|n| t.pairing_entry(m, n)).collect())
                        .collect::<Result<_>>()?,
                    (None, Some(p)) => p,
                    (None, None) => unreachable!(),
                };
                let symplectic = g == Group::Symplectic;
                let j = if symplectic { Some(j_for_qubits(ell)?) } else { None };
                let sign = if symplectic && k % 2 == 1 { -1.0 } else { 1.0 };
                Contraction::Pairing { pairings, wg, j, sign }
            }
        })
    }

    fn wg(&self) -> &[Vec<f64>] {
        match self {
            Contraction::Unitary { wg, .. } | Contraction::Pairing { wg, .. } => wg,
        }
    }

    fn a_factors(&self, preps: &[Cow<'_, Prep>]) -> Vec<Factor> {
        match self {
            Contraction::Pairing { j: Some(j), .. } => preps.iter().map(|p| a_factor_sp(p, j)).collect(),
            _ => preps.iter().map(|p| p.factor()).collect(),
        }
    }

    /// The measurement-side factor of one round in the form the contraction uses.
    fn b_factor(&self, l: f64, y: &PureState) -> Factor {
        match self {
            Contraction::Unitary { .. } => b_factor(l, y),
            Contraction::Pairing { j: None, .. } => b_factor(l, y).transpose(),
            Contraction::Pairing { j: Some(j), .. } => b_factor_sp(l, y, j),
        }
    }

    fn patterns(&self) -> usize {
        match self {
            Contraction::Unitary { perms, .. } => perms.len(),
            Contraction::Pairing { pairings, .. } => pairings.len(),
        }
    }

    /// Index of the identity pattern.
    fn identity(&self) -> usize {
        match self {
            Contraction::Unitary { perms, .. } => perms.iter().position(|p| p.is_identity()).unwrap_or(0),
            Contraction::Pairing { pairings, .. } => {
                let e = PairPartition::identity(pairings[0].k());
                pairings.iter().position(|m| *m == e).unwrap_or(0)
            }
        }
    }

    /// Nontrivial length `L` of pattern `i`.
    fn nontrivial_length(&self, i: usize) -> usize {
        match self {
            Contraction::Unitary { perms, .. } => perms[i].cycle_type().nontrivial_length(),
            Contraction::Pairing { pairings, .. } => pairings[i].coset_type().nontrivial_length(),
        }
    }

    fn label(&self, i: usize) -> String {
        match self {
            Contraction::Unitary { perms, .. } => perms[i].to_string(),
            Contraction::Pairing { pairings, .. } => pairings[i].to_string(),
        }
    }

    /// Measurement-side trace for pattern `i`: `tr(B τ^{-1})`-type for the
    /// unitary group, the `Δ`-contraction for pairings.
    fn b_trace(&self, b: &[Factor], i: usize) -> Result<C64> {
        match self {
            Contraction::Unitary { perms, .. } => permutation_trace_factors(b, &perms[i]),
            Contraction::Pairing { pairings, j, .. } => pair_partition_trace_factors(b, &pairings[i], j.as_ref()),
        }
    }

    /// `v = W · c(A)`, the preparation side contracted with the table.
    fn prep_vector(&self, a: &[Factor]) -> Result<Vec<C64>> {
        let c: Vec<C64> = match self {
            Contraction::Unitary { inverses, .. } => {
                inverses.iter().map(|ti| permutation_trace_factors(a, ti)).collect::<Result<_>>()?
            }
            Contraction::Pairing { pairings, j, .. } => {
                pairings.iter().map(|n| pair_partition_trace_factors(a, n, j.as_ref())).collect::<Result<_>>()?
            }
        };
        let (wg, sign) = match self {
            Contraction::Unitary { wg, .. } => (wg, 1.0),
            Contraction::Pairing { wg, sign, .. } => (wg, *sign),
        };
        Ok(wg.iter().map(|row| row.iter().zip(&c).map(|(w, cv)| cv * *w).sum::<C64>() * sign).collect())
    }
}

/// `E_W tr(B_s W^{⊗k} A_s W^{†⊗k})` for Haar `W` in `group`, times `Pr(s_0)`.
///
/// Needs `k ≤ 4` for the unitary group and `k ≤ 3` otherwise. Adaptive
/// policies are handled by walking their history tree.
pub fn exact_qk_sm(policy: &dyn SmPolicy, group: Group, ell: usize, k: usize) -> Result<OutcomeDistribution> {
    check_k(group, k)?;
    let tree = Tree::new(policy, ell, k)?;
    let con = Contraction::new(group, k, ell)?;
    tree.evaluate(|r, prefix| {
        let v = con.prep_vector(&con.a_factors(&r.preps))?;
        let mut b: Vec<Factor> = (1..k)
            .map(|i| {
                let (l, y) = r.element(i - 1, prefix[i]);
                con.b_factor(l, y)
            })
            .collect();
        let mut out = Vec::with_capacity(tree.arity);
        for s in 0..tree.arity {
            let (l, y) = r.element(k - 1, s);
            b.push(con.b_factor(l, y));
            let mut q = C64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                if vi.norm() > 0.0 {
                    q += vi * con.b_trace(&b, i)?;
                }
            }
            b.pop();
            out.push(real(q));
        }
        Ok(out)
    })
}

/// A policy whose round-`i` preparation is rotated by `R_i`.
pub struct RotatedPolicy<'a> {
    inner: &'a dyn SmPolicy,
    rotations: Vec<ComplexMatrix>,
}

impl<'a> RotatedPolicy<'a> {
    /// Calls past the end of `rotations` reuse the last one.
    pub fn new(inner: &'a dyn SmPolicy, rotations: Vec<ComplexMatrix>) -> Result<Self> {
        if rotations.is_empty() || rotations.iter().any(|r| r.rows() != inner.dim() || !r.is_unitary(1e-10)) {
            return Err(Error::Validation("rotations must be unitaries matching the policy".into()));
        }
        Ok(Self { inner, rotations })
    }
}

impl SmPolicy for RotatedPolicy<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn rounds(&self) -> usize {
        self.inner.rounds()
    }
    fn povm_for(&self, history: &[usize]) -> Result<Cow<'_, Povm>> {
        self.inner.povm_for(history)
    }
    fn prepare_for(&self, history: &[usize]) -> Result<Cow<'_, Prep>> {
        let i = history.len().saturating_sub(1).min(self.rotations.len() - 1);
        Ok(Cow::Owned(self.inner.prepare_for(history)?.rotated(&self.rotations[i])?))
    }
}

/// Exact distribution for the ensemble where call `i` applies `W R_i` with
/// one Haar `W`. Equivalent to `exact_qk_sm` on the rotated policy.
pub fn exact_qk_correlated(
    policy: &dyn SmPolicy,
    group: Group,
    ell: usize,
    k: usize,
    rotations: &[ComplexMatrix],
) -> Result<OutcomeDistribution> {
    let rotated = RotatedPolicy::new(policy, rotations.to_vec())?;
    exact_qk_sm(&rotated, group, ell, k)
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternCheck {
    /// The permutation (one-line, 1-based) or pairing.
    pub pattern: String,
    pub nontrivial_length: usize,
    /// Largest `Σ_{s_1..s_k} |tr(…)|` over `s_0`.
    pub sum: f64,
    /// `D^{k − ⌊L/2⌋}`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub group: Group,
    pub ell: usize,
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub t: f64,
    /// `c1 + c2·T`.
    pub rhs: f64,
    /// Exact distance between the depolarized and Haar distributions.
    pub lhs: f64,
    /// Whether `(k, D)` is inside the asymptotic regime.
    pub regime_ok: bool,
    pub patterns: Vec<PatternCheck>,
}

impl BoundReport {
    pub fn lhs_within_rhs(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-15
    }

    pub fn patterns_hold(&self) -> bool {
        self.patterns.iter().all(|p| p.holds)
    }
}

/// Evaluates `c1`, `c2` and `T` for a policy and checks `lhs ≤ c1 + c2·T`
/// together with the per-pattern inequality
/// `Σ_{s_1..s_k} |tr(B_s τ^{-1})| ≤ D^{k−⌊L_τ/2⌋}` for every `s_0`.
///
/// `T` weights each `s_0` by `Pr(s_0)`. In the regime a violated chain is a
/// consistency error; outside it the report is returned with the flag unset.
pub fn bound_quantities(policy: &dyn SmPolicy, ell: usize, k: usize, group: Group) -> Result<BoundReport> {
    check_k(group, k)?;
    let tree = Tree::new(policy, ell, k)?;
    let d = tree.d;
    let con = Contraction::new(group, k, ell)?;
    let e = con.identity();
    let np = con.patterns();
    let dkf = (d as f64).powi(k as i32);
    // row e of the Weingarten matrix lists every element's value once
    let row = &con.wg()[e];
    let off: f64 = row.iter().enumerate().filter(|&(i, _)| i != e).map(|(_, w)| w.abs()).sum();
    let c1 = dkf * ((row[e] - 1.0 / dkf).abs() + off);
    let c2 = dkf * (row[e].abs() + off);

    // per prefix: Σ over the last outcome of |trace| for every pattern
    let sums: Vec<Vec<f64>> = (0..tree.prefixes())
        .into_par_iter()
        .map(|p| {
            let prefix = to_digits(p, tree.arity, k);
            let r = tree.rounds(&prefix)?;
            let mut b: Vec<Factor> = (1..k)
                .map(|i| {
                    let (l, y) = r.element(i - 1, prefix[i]);
                    con.b_factor(l, y)
                })
                .collect();
            let mut acc = vec![0.0; np];
            for s in 0..tree.arity {
                let (l, y) = r.element(k - 1, s);
                b.push(con.b_factor(l, y));
                for (i, a) in acc.iter_mut().enumerate() {
                    if i != e {
                        *a += con.b_trace(&b, i)?.norm();
                    }
                }
                b.pop();
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let per_s0 = tree.prefixes() / tree.arity;
    let mut by_s0 = vec![vec![0.0; np]; tree.arity];
    for (p, row) in sums.iter().enumerate() {
        for (a, x) in by_s0[p / per_s0].iter_mut().zip(row) {
            *a += x;
        }
    }
    let t = by_s0.iter().zip(&tree.pr0).map(|(row, w)| w * row.iter().sum::<f64>()).sum::<f64>() / dkf;
    let patterns = (0..np)
        .filter(|&i| i != e)
        .map(|i| {
            let l = con.nontrivial_length(i);
            let sum = by_s0.iter().map(|row| row[i]).fold(0.0, f64::max);
            let bound = (d as f64).powi((k - l / 2) as i32);
            PatternCheck {
                pattern: con.label(i),
                nontrivial_length: l,
                sum,
                bound,
                holds: sum <= bound * (1.0 + 1e-12),
            }
        })
        .collect();
    let lhs = tvd(&exact_pk(policy, ell, k)?, &exact_qk_sm(policy, group, ell, k)?)?;
    let report = BoundReport {
        group,
        ell,
        k,
        c1,
        c2,
        t,
        rhs: c1 + c2 * t,
        lhs,
        regime_ok: bound_regime(group, k, d as i64),
        patterns,
    };
    if report.regime_ok && !report.lhs_within_rhs() {
        return Err(Error::Consistency(format!(
            "distance {} exceeds c1 + c2·T = {} at ell={ell}, k={k}",
            report.lhs, report.rhs
        )));
    }
    Ok(report)
}

/// Wilson score interval for `count` successes out of `n` at `z` standard
/// deviations.
pub fn wilson(count: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / den;
    let half = z / den * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalDistribution {
    pub distribution: OutcomeDistribution,
    pub counts: Vec<u64>,
    pub trials: u64,
    pub z: f64,
}

impl EmpiricalDistribution {
    pub fn interval(&self, index: usize) -> (f64, f64) {
        wilson(self.counts[index], self.trials, self.z)
    }

    /// Transcripts whose exact probability falls outside the Wilson interval.
    pub fn violations(&self, exact: &OutcomeDistribution) -> Result<Vec<usize>> {
        if exact.arity != self.distribution.arity || exact.rounds != self.distribution.rounds {
            return Err(Error::Shape("supports differ".into()));
        }
        Ok((0..exact.len())
            .filter(|&i| {
                let (lo, hi) = self.interval(i);
                let p = exact.probabilities[i];
                p < lo - 1e-12 || p > hi + 1e-12
            })
            .collect())
    }
}

/// Histogram of `trials` transcripts. Trial `t` runs on
/// `SeededStream::new(derive_seed(seed, t), 0)`, so the result does not
/// depend on the thread count.
pub fn empirical_distribution<F>(
    arity: usize,
    rounds: usize,
    trials: u64,
    seed: u64,
    executor: F,
) -> Result<EmpiricalDistribution>
where
    F: Fn(u64, &mut SeededStream) -> Result<Vec<usize>> + Sync,
{
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let n = transcript_count(arity, rounds)?;
    let probe = OutcomeDistribution { arity, rounds, probabilities: Vec::new() };
    let indices: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededStream::new(derive_seed(seed, t), 0);
            probe.index_of(&executor(t, &mut rng)?)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; n];
    for i in indices {
        counts[i] += 1;
    }
    let probabilities = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    Ok(EmpiricalDistribution {
        distribution: OutcomeDistribution::new(arity, rounds, probabilities)?,
        counts,
        trials,
        z: WILSON_Z,
    })
}

fn has_collision(outcomes: &[usize]) -> bool {
    outcomes.iter().enumerate().any(|(i, a)| outcomes[..i].contains(a))
}

/// Spread of a distribution over transcripts whose oracle-round outcomes
/// `s_1..s_k` are pairwise distinct, conditioned on `s_0`.
#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    pub min: f64,
    pub max: f64,
    /// Probability that some `s_i = s_j` with `1 ≤ i < j ≤ k`.
    pub collision_mass: f64,
}

impl FlatnessReport {
    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

pub fn flatness(dist: &OutcomeDistribution) -> FlatnessReport {
    let marg0 = dist.marginal(&[0]).expect("round 0 exists");
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut collision_mass = 0.0;
    for (i, &p) in dist.probabilities.iter().enumerate() {
        let t = dist.transcript(i);
        if has_collision(&t[1..]) {
            collision_mass += p;
            continue;
        }
        let w = marg0.probabilities[t[0]];
        if w > 0.0 {
            min = min.min(p / w);
            max = max.max(p / w);
        }
    }
    FlatnessReport { min, max, collision_mass }
}

#[derive(Clone, Debug, Serialize)]
pub struct CollisionReport {
    pub trials: u64,
    pub collisions: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Exact collision probability for independent uniform outcomes.
    pub uniform_probability: f64,
    /// `C(k,2)/2^ℓ`.
    pub eps_p_bound: f64,
    /// `2k²·2^{−ℓ/4}`.
    pub eps_q_bound: f64,
}

/// Collision frequency of the computational-basis parallel policy against
/// freshly constructed oracles of `kind`, one per trial.
pub fn collision_stats(ell: usize, k: usize, kind: OracleKind, trials: u64, seed: u64) -> Result<CollisionReport> {
    let d = 1usize << ell;
    let id = ComplexMatrix::identity(d);
    let policy = crate::protocols::parallel_sm_policy(ell, k, &id, &id)?;
    let options = OracleOptions::default();
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, t);
            let mut oracle = make_oracle(kind, ell, s, &options)?;
            let mut rng = SeededStream::new(s, 1);
            Ok(has_collision(&execute_sm(&policy, &mut oracle, &mut rng)?[1..]))
        })
        .collect::<Result<_>>()?;
    let collisions = hits.iter().filter(|&&h| h).count() as u64;
    let (ci_low, ci_high) = wilson(collisions, trials, WILSON_Z);
    let df = d as f64;
    let distinct: f64 = (0..k).map(|j| (df - j as f64).max(0.0) / df).product();
    Ok(CollisionReport {
        trials,
        collisions,
        frequency: collisions as f64 / trials.max(1) as f64,
        ci_low,
        ci_high,
        uniform_probability: 1.0 - distinct,
        eps_p_bound: (k * k.saturating_sub(1) / 2) as f64 / df,
        eps_q_bound: 2.0 * (k * k) as f64 * 2f64.powf(-(ell as f64) / 4.0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LevyRow {
    pub eps: f64,
    pub tail: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevyReport {
    pub ell: usize,
    pub trials: u64,
    /// Sample mean of `|⟨α|U|β⟩|²`; its expectation is `1/D`.
    pub mean: f64,
    pub std_err: f64,
    pub rows: Vec<LevyRow>,
}

/// Tail of `|⟨α|U|β⟩|² − 1/D` over Haar `U` against `4e^{−Dε²/(18π²)}` for
/// `ε ∈ {D^{−1/4}, 0.1, 0.3}`, with `α = |0⟩` and `β = |D−1⟩`.
pub fn levy_check(ell: usize, trials: u64, seed: u64) -> Result<LevyReport> {
    if ell < 2 || trials == 0 {
        return Err(Error::Precondition("levy_check needs ell ≥ 2 and trials ≥ 1".into()));
    }
    let d = 1usize << ell;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededStream::new(derive_seed(seed, t), 0);
            Ok(sample_haar_unitary(d, &mut rng)?[(0, d - 1)].norm_sqr())
        })
        .collect::<Result<_>>()?;
    let n = trials as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let df = d as f64;
    let rows = [df.powf(-0.25), 0.1, 0.3]
        .into_iter()
        .map(|eps| {
            let tail = values.iter().filter(|&&v| (v - 1.0 / df).abs() >= eps).count() as f64 / n;
            let bound = 4.0 * (-df * eps * eps / (18.0 * std::f64::consts::PI.powi(2))).exp();
            LevyRow { eps, tail, bound, holds: tail <= bound }
        })
        .collect();
    Ok(LevyReport { ell, trials, mean, std_err: (var / n).sqrt(), rows })
}

/// Draws one Haar unitary per trial and averages the exact per-unitary
/// distribution; a sampling oracle for [`exact_qk_sm`].
pub fn monte_carlo_qk<R: Rng + ?Sized>(
    policy: &dyn SmPolicy,
    group: Group,
    ell: usize,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = 1usize << ell;
    let mut acc: Vec<f64> = Vec::new();
    for _ in 0..samples {
        let u = match group {
            Group::Unitary => sample_haar_unitary(d, rng)?,
            Group::Orthogonal => crate::sampling::sample_haar_orthogonal(d, rng)?,
            Group::Symplectic => crate::sampling::sample_haar_symplectic(d / 2, rng)?,
        };
        let p = exact_sm_channels(policy, ell, k, &[CallChannel::Unitary(u)])?;
        if acc.is_empty() {
            acc = vec![0.0; p.len()];
        }
        for (a, x) in acc.iter_mut().zip(p.probabilities()) {
            *a += x;
        }
    }
    Ok(acc.into_iter().map(|a| a / samples.max(1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qualm::{EchoPolicy, FixedPolicy};
    use crate::weingarten::twirl_with;

    fn computational(ell: usize, k: usize) -> FixedPolicy {
        let d = 1 << ell;
        FixedPolicy::new(k, Prep::Pure(PureState::basis(d, 0)), Povm::computational(d)).unwrap()
    }

    fn random_basis_policy(ell: usize, k: usize, seed: u64) -> FixedPolicy {
        let d = 1 << ell;
        let mut rng = SeededStream::new(seed, 0);
        let y = sample_haar_unitary(d, &mut rng).unwrap();
        let v = sample_haar_unitary(d, &mut rng).unwrap();
        FixedPolicy::new(k, Prep::Pure(PureState::new(v.column(0)).unwrap()), Povm::from_unitary(&y).unwrap()).unwrap()
    }

    /// `tr(B_s · twirl(A_s))` by explicit tensor products and the dense twirl.
    fn twirl_route(policy: &dyn SmPolicy, group: Group, ell: usize, k: usize) -> Option<Vec<f64>> {
        let d = 1usize << ell;
        let table = wg_table(group, k, d as i64).ok()?;
        let tree = Tree::new(policy, ell, k).unwrap();
        let mut out = Vec::new();
        for p in 0..tree.prefixes() {
            let prefix = to_digits(p, tree.arity, k);
            let r = tree.rounds(&prefix).unwrap();
            let a = crate::linalg::kron_all(&r.preps.iter().map(|p| p.density().matrix().clone()).collect::<Vec<_>>()).unwrap();
            let tw = twirl_with(&table, &a).unwrap();
            for s in 0..tree.arity {
                let mut mats = Vec::new();
                for i in 1..=k {
                    let si = if i == k { s } else { prefix[i] };
                    let (l, y) = r.element(i - 1, si);
                    mats.push(y.density().matrix().scale(C64::new(l, 0.0)));
                }
                let b = crate::linalg::kron_all(&mats).unwrap();
                out.push(tree.pr0[prefix[0]] * b.matmul(&tw).unwrap().trace().re);
            }
        }
        Some(out)
    }

    #[test]
    fn weingarten_route_matches_dense_twirl() {
        for group in Group::ALL {
            for (ell, k) in [(1, 2), (1, 3), (2, 2), (2, 3)] {
                if group == Group::Unitary || k <= MAX_EXACT_K_PAIRING {
                    let policy = random_basis_policy(ell, k, 40 + k as u64);
                    let q = exact_qk_sm(&policy, group, ell, k).unwrap();
                    let Some(dense) = twirl_route(&policy, group, ell, k) else { continue };
                    let diff = q.probabilities().iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    assert!(diff < 1e-12, "{group} ell={ell} k={k}: {diff}");
                }
            }
        }
    }

    #[test]
    fn adaptive_policy_matches_dense_twirl() {
        let policy = EchoPolicy::new(2, 2).unwrap();
        for group in Group::ALL {
            let q = exact_qk_sm(&policy, group, 2, 2).unwrap();
            let dense = twirl_route(&policy, group, 2, 2).unwrap();
            let diff = q.probabilities().iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "{group}: {diff}");
        }
    }

    #[test]
    fn singular_gram_case_matches_sampling() {
        // D = 2 < k = 3: only the pseudo-inverse route exists
        let policy = random_basis_policy(1, 3, 9);
        let mut rng = SeededStream::new(77, 0);
        for group in Group::ALL {
            let q = exact_qk_sm(&policy, group, 1, 3).unwrap();
            let n = 20_000;
            let mc = monte_carlo_qk(&policy, group, 1, 3, n, &mut rng).unwrap();
            for (e, m) in q.probabilities().iter().zip(&mc) {
                // per-unitary probabilities lie in [0, 1]; 6σ with σ ≤ 1/(2√n)
                assert!((e - m).abs() < 6.0 * 0.5 / (n as f64).sqrt(), "{group}: {e} vs {m}");
            }
        }
    }

    #[test]
    fn k1_is_uniform_over_the_oracle_round() {
        let policy = computational(2, 1);
        for group in Group::ALL {
            let q = exact_qk_sm(&policy, group, 2, 1).unwrap();
            for s1 in 0..4 {
                assert!((q.probability(&[0, s1]).unwrap() - 0.25).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pk_is_product_form() {
        let policy = computational(2, 3);
        let p = exact_pk(&policy, 2, 3).unwrap();
        assert!((p.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p.probability(&[0, 1, 2, 3]).unwrap() - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(p.probability(&[1, 1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn tvd_and_bias_edge_cases() {
        let a = OutcomeDistribution::point_mass(2, 1, &[0, 0]).unwrap();
        let b = OutcomeDistribution::point_mass(2, 1, &[1, 0]).unwrap();
        assert_eq!(tvd(&a, &a).unwrap(), 0.0);
        assert_eq!(tvd(&a, &b).unwrap(), 2.0);
        let c = OutcomeDistribution::point_mass(2, 2, &[0, 0, 0]).unwrap();
        assert!(matches!(tvd(&a, &c), Err(Error::Shape(_))));
        let z = PureState::basis(2, 0).density();
        let o = PureState::basis(2, 1).density();
        assert!((bias(&z, &o).unwrap() - 2.0).abs() < 1e-12);
        assert!((bias(&z, &DensityMatrix::maximally_mixed(2)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(bias(&DensityMatrix::maximally_mixed(4), &z), Err(Error::Shape(_))));
    }

    #[test]
    fn marginal_keeps_mass() {
        let q = exact_qk_sm(&computational(2, 2), Group::Unitary, 2, 2).unwrap();
        let m = q.marginal(&[2, 1]).unwrap();
        assert_eq!(m.rounds(), 1);
        assert!((m.probability(&[3, 1]).unwrap() - q.marginal(&[1, 2]).unwrap().probability(&[1, 3]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_and_fresh_haar_agree() {
        let policy = random_basis_policy(2, 2, 3);
        let lod = exact_sm_channels(&policy, 2, 2, &[CallChannel::Depolarize]).unwrap();
        let lop = exact_sm_channels(&policy, 2, 2, &[CallChannel::HaarAverage(Group::Unitary)]).unwrap();
        let p = exact_pk(&policy, 2, 2).unwrap();
        assert!(tvd(&lod, &lop).unwrap() < 1e-14);
        assert!(tvd(&lod, &p).unwrap() < 1e-14);
    }

    #[test]
    fn bound_chain_small() {
        let r = bound_quantities(&computational(3, 2), 3, 2, Group::Unitary).unwrap();
        assert!(r.lhs_within_rhs(), "{r:?}");
        assert!(r.patterns_hold());
        assert!(!r.regime_ok);
    }

    #[test]
    fn wilson_contains_the_estimate() {
        let (lo, hi) = wilson(30, 100, 2.0);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson(0, 10, 5.0).0, 0.0);
    }
}
