//! Exact Weingarten functions for U(D), O(D) and Sp(D/2).
//!
//! Each table is the inverse of a Gram matrix of invariant vectors: products
//! of permutation operators for the unitary group, and pairings with `δ` or
//! `J` links for the orthogonal and symplectic groups. Values are exact
//! rationals, keyed by the cycle (or coset) type of the relative element.
//!
//! Tables are solved on the class-reduced system by fraction-free
//! elimination and then checked against the full Gram matrix in exact
//! integer arithmetic, which proves the class-function structure instead of
//! assuming it.

mod exact;
pub mod moments;
mod twirl;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{
    enumerate_pair_partitions, enumerate_permutations, loop_type, CycleType, PairPartition,
    Permutation,
};

pub use exact::{invert, solve_fraction_free};
pub use twirl::{haar_twirl, twirl_with};

pub const MAX_UNITARY_K: usize = 6;
pub const MAX_PAIRING_K: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "U")]
    Unitary,
    #[serde(rename = "O")]
    Orthogonal,
    #[serde(rename = "Sp")]
    Symplectic,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Unitary => "U",
            Group::Orthogonal => "O",
            Group::Symplectic => "Sp",
        }
    }

    pub const ALL: [Group; 3] = [Group::Unitary, Group::Orthogonal, Group::Symplectic];
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "U" | "u" | "unitary" => Ok(Group::Unitary),
            "O" | "o" | "orthogonal" => Ok(Group::Orthogonal),
            "Sp" | "sp" | "symplectic" => Ok(Group::Symplectic),
            _ => Err(Error::Config(format!("unknown group {s:?}"))),
        }
    }
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn pow(base: i64, e: usize) -> BigInt {
    num_traits::pow(BigInt::from(base), e)
}

/// The index space of a Weingarten matrix together with its Gram entries.
struct Space {
    group: Group,
    d: i64,
    len: usize,
    classes: Vec<CycleType>,
    /// Class index of the element relative to each other element, row-major.
    rel: Vec<u16>,
    /// Signs `ε_a` of `σ_a` (symplectic only; all `+1` otherwise).
    eps: Vec<i8>,
    /// Signs of the symplectic Gram entries, row-major.
    gram_sign: Vec<i8>,
}

impl Space {
    fn new(group: Group, k: usize, d: i64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("k must be at least 1".into()));
        }
        match group {
            Group::Unitary if k > MAX_UNITARY_K => {
                return Err(Error::Size(format!("unitary k = {k} exceeds {MAX_UNITARY_K}")))
            }
            Group::Orthogonal | Group::Symplectic if k > MAX_PAIRING_K => {
                return Err(Error::Size(format!("pairing k = {k} exceeds {MAX_PAIRING_K}")))
            }
            _ => {}
        }
        let mut classes: Vec<CycleType> = Vec::new();
        let class_index = |t: CycleType, classes: &mut Vec<CycleType>| -> u16 {
            match classes.iter().position(|c| *c == t) {
                Some(i) => i as u16,
                None => {
                    classes.push(t);
                    (classes.len() - 1) as u16
                }
            }
        };
        let (len, rel, eps, gram_sign) = match group {
            Group::Unitary => {
                let perms = enumerate_permutations(k)?;
                let inv: Vec<Permutation> = perms.iter().map(Permutation::inverse).collect();
                let n = perms.len();
                let mut rel = vec![0u16; n * n];
                for a in 0..n {
                    for b in 0..n {
                        let t = inv[a].compose(&perms[b]).cycle_type();
                        rel[a * n + b] = class_index(t, &mut classes);
                    }
                }
                (n, rel, vec![1i8; n], Vec::new())
            }
            Group::Orthogonal | Group::Symplectic => {
                let pairings = enumerate_pair_partitions(k)?;
                let n = pairings.len();
                let maps: Vec<Vec<usize>> = pairings.iter().map(PairPartition::partner_map).collect();
                let mut rel = vec![0u16; n * n];
                let symplectic = group == Group::Symplectic;
                let mut gram_sign = if symplectic { vec![1i8; n * n] } else { Vec::new() };
                for a in 0..n {
                    for b in a..n {
                        let (t, sign) = walk_loops(&maps[a], &maps[b]);
                        let c = class_index(t, &mut classes);
                        rel[a * n + b] = c;
                        rel[b * n + a] = c;
                        if symplectic {
                            gram_sign[a * n + b] = sign;
                            gram_sign[b * n + a] = sign;
                        }
                    }
                }
                let eps = if symplectic {
                    pairings.iter().map(|m| m.sigma().sign() as i8).collect()
                } else {
                    vec![1i8; n]
                };
                (n, rel, eps, gram_sign)
            }
        };
        Ok(Self { group, d, len, classes, rel, eps, gram_sign })
    }

    fn class_of(&self, a: usize, b: usize) -> usize {
        self.rel[a * self.len + b] as usize
    }

    fn gram(&self, a: usize, b: usize) -> BigInt {
        let parts = self.classes[self.class_of(a, b)].len();
        let g = pow(self.d, parts);
        if self.group == Group::Symplectic && self.gram_sign[a * self.len + b] < 0 {
            -g
        } else {
            g
        }
    }

    /// Sign relating a Weingarten entry to its class value.
    fn w_sign(&self, a: usize, b: usize) -> i8 {
        self.eps[a] * self.eps[b]
    }

    fn full_gram(&self) -> Vec<Vec<BigInt>> {
        (0..self.len).map(|a| (0..self.len).map(|b| self.gram(a, b)).collect()).collect()
    }

    /// Class values from the reduced system: row `e` of `Wg·G = I`.
    fn solve_reduced(&self) -> Result<Vec<BigRational>> {
        let nc = self.classes.len();
        let reps: Vec<usize> =
            (0..nc).map(|c| (0..self.len).find(|&b| self.class_of(0, b) == c).unwrap()).collect();
        let mut coeff = vec![vec![BigInt::zero(); nc]; nc];
        for (mu, &p) in reps.iter().enumerate() {
            for b in 0..self.len {
                let nu = self.class_of(0, b);
                let term = self.gram(b, p);
                if self.w_sign(0, b) < 0 {
                    coeff[mu][nu] -= term;
                } else {
                    coeff[mu][nu] += term;
                }
            }
        }
        let e_class = self.class_of(0, 0);
        let rhs: Vec<Vec<BigInt>> = (0..nc)
            .map(|mu| vec![if mu == e_class { BigInt::one() } else { BigInt::zero() }])
            .collect();
        let sol = solve_fraction_free(&coeff, &rhs)?;
        Ok(sol.into_iter().map(|mut r| r.remove(0)).collect())
    }

    fn verify(&self, values: &[BigRational], rows: &[usize]) -> bool {
        let den = exact::common_denominator(values);
        let scaled: Vec<BigInt> = values.iter().map(|v| (v * &den).to_integer()).collect();
        let w = |a: usize, b: usize| {
            let v = scaled[self.class_of(a, b)].clone();
            if self.w_sign(a, b) < 0 {
                -v
            } else {
                v
            }
        };
        let g = |a: usize, b: usize| self.gram(a, b);
        exact::verify_inverse_rows(self.len, rows, &den, &w, &g)
    }

    fn class_sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0u64; self.classes.len()];
        for b in 0..self.len {
            sizes[self.class_of(0, b)] += 1;
        }
        sizes
    }
}

/// Loop type of `𝔪 ∪ 𝔫` and the sign of `Σ_I Δ′_𝔪(I) Δ′_𝔫(I)`.
///
/// Walking a loop multiplies `J` for a link traversed in canonical
/// orientation and `Jᵀ = −J` otherwise; a loop with `2μ` links closes to
/// `(−1)^μ (±1) I`, whose trace contributes `±D`.
fn walk_loops(fm: &[usize], fn_: &[usize]) -> (CycleType, i8) {
    let n = fm.len();
    let mut seen = vec![false; n];
    let mut parts = Vec::new();
    let mut sign = 1i8;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut half = 0usize;
        let mut reversed = 0usize;
        let mut i = start;
        loop {
            let j = fm[i];
            seen[i] = true;
            seen[j] = true;
            if j < i {
                reversed += 1;
            }
            let next = fn_[j];
            if next < j {
                reversed += 1;
            }
            half += 1;
            i = next;
            if i == start {
                break;
            }
        }
        if (half + reversed) % 2 == 1 {
            sign = -sign;
        }
        parts.push(half);
    }
    (CycleType::from_parts(parts), sign)
}

/// Exact Weingarten values for one `(group, k, D)`.
///
/// `d` is the full matrix dimension, also for the symplectic group.
#[derive(Clone, Debug, PartialEq)]
pub struct WgTable {
    group: Group,
    k: usize,
    d: i64,
    values: BTreeMap<CycleType, BigRational>,
    class_sizes: BTreeMap<CycleType, u64>,
}

/// How much of the full inverse identity to check after a reduced solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verification {
    /// Every row of `Wg·G = I`.
    Full,
    /// Row `𝔢`, one row per class, and the last row.
    Representative,
}

fn build(group: Group, k: usize, d: i64, verification: Verification) -> Result<(WgTable, Space)> {
    let space = Space::new(group, k, d)?;
    let values = space.solve_reduced()?;
    if !space.verify(&values, &verification_rows(&space, verification)) {
        return Err(Error::Consistency(format!(
            "{group} k={k} D={d}: class-reduced solution is not the Gram inverse"
        )));
    }
    let sizes = space.class_sizes();
    let table = WgTable {
        group,
        k,
        d,
        values: space.classes.iter().cloned().zip(values).collect(),
        class_sizes: space.classes.iter().cloned().zip(sizes).collect(),
    };
    Ok((table, space))
}

fn verification_rows(space: &Space, verification: Verification) -> Vec<usize> {
    match verification {
        Verification::Full => (0..space.len).collect(),
        Verification::Representative => {
            let mut rows: Vec<usize> = (0..space.classes.len())
                .map(|c| (0..space.len).find(|&b| space.class_of(0, b) == c).unwrap())
                .collect();
            rows.push(space.len - 1);
            rows.sort_unstable();
            rows.dedup();
            rows
        }
    }
}

/// Re-checks `Wg·G = I` for a table from any source, such as a cache file,
/// at the same depth the builder uses.
pub fn verify_inverse_identity(table: &WgTable) -> Result<bool> {
    let space = Space::new(table.group, table.k, table.d)?;
    if space.classes.len() != table.values.len() {
        return Ok(false);
    }
    let values: Vec<BigRational> =
        space.classes.iter().map(|c| table.value(c).cloned()).collect::<Result<_>>()?;
    Ok(space.verify(&values, &verification_rows(&space, default_verification(table.group, table.k))))
}

fn default_verification(group: Group, k: usize) -> Verification {
    match group {
        Group::Unitary if k <= 5 => Verification::Full,
        Group::Orthogonal | Group::Symplectic if k <= 4 => Verification::Full,
        _ => Verification::Representative,
    }
}

/// Gram matrix `D^{#cycles(σ⁻¹τ)}` over `S_k` in lexicographic order.
pub fn gram_unitary(k: usize, d: i64) -> Result<Vec<Vec<BigInt>>> {
    Ok(Space::new(Group::Unitary, k, d)?.full_gram())
}

/// Gram matrix `D^{#loops(𝔪 ∪ 𝔫)}` over pairings.
pub fn gram_orthogonal(k: usize, d: i64) -> Result<Vec<Vec<BigInt>>> {
    Ok(Space::new(Group::Orthogonal, k, d)?.full_gram())
}

/// Gram matrix `Σ_I Δ′_𝔪(I) Δ′_𝔫(I)` of the `J`-linked pairing vectors.
pub fn gram_symplectic(k: usize, d: i64) -> Result<Vec<Vec<BigInt>>> {
    if d % 2 != 0 {
        return Err(Error::Precondition("symplectic dimension must be even".into()));
    }
    Ok(Space::new(Group::Symplectic, k, d)?.full_gram())
}

fn positive_dim(d: i64) -> Result<()> {
    if d < 1 {
        return Err(Error::Precondition(format!("dimension {d} must be positive")));
    }
    Ok(())
}

pub fn wg_unitary(k: usize, d: i64) -> Result<WgTable> {
    positive_dim(d)?;
    Ok(build(Group::Unitary, k, d, default_verification(Group::Unitary, k))?.0)
}

pub fn wg_orthogonal(k: usize, d: i64) -> Result<WgTable> {
    positive_dim(d)?;
    Ok(build(Group::Orthogonal, k, d, default_verification(Group::Orthogonal, k))?.0)
}

/// Orthogonal values at a possibly negative dimension parameter.
pub fn wg_orthogonal_at(k: usize, d: i64) -> Result<WgTable> {
    if d == 0 {
        return Err(Error::Precondition("dimension parameter must be nonzero".into()));
    }
    Ok(build(Group::Orthogonal, k, d, default_verification(Group::Orthogonal, k))?.0)
}

/// Symplectic values for `Sp(halfD)`, computed two ways and cross-checked:
/// (a) `(−1)^k ε(σ_𝔪) Wg^O(σ_𝔪, −D)`, and (b) inversion of the `J`-linked
/// Gram matrix.
pub fn wg_symplectic(k: usize, half_d: i64) -> Result<WgTable> {
    positive_dim(half_d)?;
    let d = 2 * half_d;
    let direct = build(Group::Symplectic, k, d, default_verification(Group::Symplectic, k))?.0;
    let via_o = symplectic_from_orthogonal(k, half_d)?;
    if direct != via_o {
        return Err(Error::Consistency(format!(
            "symplectic k={k} D={d}: direct inversion and O(−D) relation disagree"
        )));
    }
    Ok(direct)
}

/// Route (a) alone: the sign-twisted orthogonal table at `−D`.
pub fn symplectic_from_orthogonal(k: usize, half_d: i64) -> Result<WgTable> {
    positive_dim(half_d)?;
    let d = 2 * half_d;
    let o = wg_orthogonal_at(k, -d)?;
    let sign = if k.is_multiple_of(2) { BigRational::one() } else { -BigRational::one() };
    Ok(WgTable {
        group: Group::Symplectic,
        k,
        d,
        values: o.values.into_iter().map(|(t, v)| (t, v * &sign)).collect(),
        class_sizes: o.class_sizes,
    })
}

/// Route (b) alone: direct `J`-linked Gram inversion.
pub fn symplectic_direct(k: usize, half_d: i64) -> Result<WgTable> {
    positive_dim(half_d)?;
    Ok(build(Group::Symplectic, k, 2 * half_d, Verification::Full)?.0)
}

/// Unreduced route: invert the full Gram matrix and read off class values,
/// checking that every entry of the inverse agrees with its class value.
pub fn wg_by_full_inversion(group: Group, k: usize, d: i64) -> Result<WgTable> {
    let space = Space::new(group, k, d)?;
    let inv = invert(&space.full_gram())?;
    let mut values: Vec<Option<BigRational>> = vec![None; space.classes.len()];
    for (a, row) in inv.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            let v = if space.w_sign(a, b) < 0 { -v.clone() } else { v.clone() };
            let slot = &mut values[space.class_of(a, b)];
            match slot {
                None => *slot = Some(v),
                Some(prev) if *prev != v => {
                    return Err(Error::Consistency(format!(
                        "{group} k={k} D={d}: Gram inverse is not a class function"
                    )))
                }
                _ => {}
            }
        }
    }
    let sizes = space.class_sizes();
    Ok(WgTable {
        group,
        k,
        d,
        values: space.classes.iter().cloned().zip(values.into_iter().map(Option::unwrap)).collect(),
        class_sizes: space.classes.iter().cloned().zip(sizes).collect(),
    })
}

/// Builds a table and checks the inverse identity on every row.
pub fn wg_table_fully_verified(group: Group, k: usize, d: i64) -> Result<WgTable> {
    match group {
        Group::Symplectic => {
            let t = build(group, k, d, Verification::Full)?.0;
            if t != symplectic_from_orthogonal(k, d / 2)? {
                return Err(Error::Consistency("symplectic routes disagree".into()));
            }
            Ok(t)
        }
        _ => Ok(build(group, k, d, Verification::Full)?.0),
    }
}

/// Moore–Penrose pseudo-inverse of the full Gram matrix, in floating point,
/// indexed like [`gram_unitary`] and friends.
///
/// For `D < k` (or the pairing analogues) the Gram matrix is singular and no
/// exact table exists. Any generalized inverse still yields the correct Haar
/// averages, because kernel vectors of a Gram matrix combine the invariant
/// operators to zero; the pseudo-inverse is the canonical choice.
pub fn gram_pseudo_inverse(group: Group, k: usize, d: i64) -> Result<Vec<Vec<f64>>> {
    positive_dim(d)?;
    let g = match group {
        Group::Unitary => gram_unitary(k, d)?,
        Group::Orthogonal => gram_orthogonal(k, d)?,
        Group::Symplectic => gram_symplectic(k, d)?,
    };
    let n = g.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |a, b| g[a][b].to_f64().unwrap_or(f64::NAN));
    let eig = m.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = vec![vec![0.0; n]; n];
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= top * 1e-10 {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        for a in 0..n {
            for b in 0..n {
                out[a][b] += v[a] * v[b] / lam;
            }
        }
    }
    Ok(out)
}

/// Dispatch on group; for the symplectic group `d` is the full dimension.
pub fn wg_table(group: Group, k: usize, d: i64) -> Result<WgTable> {
    match group {
        Group::Unitary => wg_unitary(k, d),
        Group::Orthogonal => wg_orthogonal(k, d),
        Group::Symplectic => {
            if d % 2 != 0 {
                return Err(Error::Precondition("symplectic dimension must be even".into()));
            }
            wg_symplectic(k, d / 2)
        }
    }
}

impl WgTable {
    pub fn group(&self) -> Group {
        self.group
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Full matrix dimension `D`.
    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn values(&self) -> &BTreeMap<CycleType, BigRational> {
        &self.values
    }

    pub fn class_sizes(&self) -> &BTreeMap<CycleType, u64> {
        &self.class_sizes
    }

    pub fn value(&self, t: &CycleType) -> Result<&BigRational> {
        self.values
            .get(t)
            .ok_or_else(|| Error::Dependency(format!("no {} value for type {t}", self.group)))
    }

    pub fn value_f64(&self, t: &CycleType) -> Result<f64> {
        Ok(self.value(t)?.to_f64().unwrap_or(f64::NAN))
    }

    /// The value at the identity class `(1,…,1)`.
    pub fn identity_value(&self) -> &BigRational {
        &self.values[&CycleType::from_parts(vec![1; self.k])]
    }

    /// `Wg(σ⁻¹τ)`.
    pub fn unitary_entry(&self, sigma: &Permutation, tau: &Permutation) -> Result<f64> {
        self.value_f64(&sigma.inverse().compose(tau).cycle_type())
    }

    /// `Wg(𝔪, 𝔫)`; symplectic entries carry the sign `ε(σ_𝔪) ε(σ_𝔫)`.
    pub fn pairing_entry(&self, m: &PairPartition, n: &PairPartition) -> Result<f64> {
        let v = self.value_f64(&loop_type(m, n))?;
        Ok(match self.group {
            Group::Symplectic => (m.sigma().sign() * n.sigma().sign()) as f64 * v,
            _ => v,
        })
    }

    /// `Σ |Wg|` over all group elements (permutations or pairings).
    pub fn sum_abs(&self) -> BigRational {
        self.values
            .iter()
            .map(|(t, v)| v.abs() * BigInt::from(self.class_sizes[t]))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// `Σ_{ν ≠ e} |Wg(ν)|` over group elements.
    pub fn sum_abs_nonidentity(&self) -> BigRational {
        self.sum_abs() - self.identity_value().abs()
    }

    /// Whether `(−1)^{|ν|} Wg(ν) ≥ 0` for every class, with `|ν| = k − #parts`.
    pub fn alternating_sign_pattern(&self) -> bool {
        self.values.iter().all(|(t, v)| {
            let odd = t.length() % 2 == 1;
            v.is_zero() || (v.is_negative() == odd)
        })
    }

    /// Whether every class value has the same sign as the identity value.
    pub fn uniform_sign(&self) -> bool {
        let neg = self.identity_value().is_negative();
        self.values.values().all(|v| v.is_zero() || v.is_negative() == neg)
    }
}

/// `Σ |Wg|` for `(group, k, D)`.
pub fn sum_abs_wg(group: Group, k: usize, d: i64) -> Result<BigRational> {
    Ok(wg_table(group, k, d)?.sum_abs())
}

/// `(D−k)!/D! = 1/(D(D−1)⋯(D−k+1))`.
pub fn falling_sum_closed_form(k: usize, d: i64) -> BigRational {
    let den: BigInt = (0..k as i64).map(|j| BigInt::from(d - j)).product();
    BigRational::new(BigInt::one(), den)
}

/// `∏_{j<k} 1/(D − 2j)`, i.e. `(D−2k)!!/D!!`. `None` when a factor vanishes
/// or turns negative (`D ≤ 2(k−1)`).
pub fn descending_double_closed_form(k: usize, d: i64) -> Option<BigRational> {
    if d <= 2 * (k as i64 - 1) {
        return None;
    }
    let den: BigInt = (0..k as i64).map(|j| BigInt::from(d - 2 * j)).product();
    Some(BigRational::new(BigInt::one(), den))
}

/// `∏_{j<k} 1/(D + 2j)`.
pub fn ascending_double_closed_form(k: usize, d: i64) -> BigRational {
    let den: BigInt = (0..k as i64).map(|j| BigInt::from(d + 2 * j)).product();
    BigRational::new(BigInt::one(), den)
}

fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = n;
    while i > 1 {
        acc *= i;
        i -= 2;
    }
    acc
}

/// `(m−k)!!/m!!` with `m = D/2`: the variant written with a doubled argument.
/// `None` when `D` is odd or `m < k`.
pub fn half_argument_double_closed_form(k: usize, d: i64) -> Option<BigRational> {
    if d % 2 != 0 || d / 2 < k as i64 {
        return None;
    }
    let m = d / 2;
    Some(BigRational::new(double_factorial(m - k as i64), double_factorial(m)))
}

fn catalan(n: usize) -> BigInt {
    // C_n = (2n)! / (n! (n+1)!)
    let mut c = BigInt::one();
    for i in 0..n {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 2);
    }
    c
}

/// `∏_i (2ℓ_i − 2)!/((ℓ_i − 1)! ℓ_i!) = ∏_i Cat(ℓ_i − 1)`.
pub fn catalan_product(t: &CycleType) -> BigInt {
    t.parts().iter().map(|&l| catalan(l - 1)).product()
}

/// A closed rational interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    fn point(x: BigRational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    fn of(a: BigRational, b: BigRational) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn mid_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigInt::from(2)).to_f64().unwrap_or(f64::NAN)
    }
}

/// Rational bracket of `k^{7/2} = k³√k`, exact for perfect squares.
fn k_pow_seven_halves(k: usize) -> Interval {
    let scale = num_traits::pow(BigInt::from(10), 18);
    let target = BigInt::from(k) * &scale * &scale;
    let root = target.sqrt();
    let k3 = BigInt::from(k * k * k);
    if &root * &root == target {
        return Interval::point(BigRational::new(k3 * root, scale));
    }
    Interval {
        lo: BigRational::new(&k3 * &root, scale.clone()),
        hi: BigRational::new(k3 * (root + 1), scale),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub cycle_type: Vec<usize>,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheckReport {
    pub group: Group,
    pub k: usize,
    pub d: i64,
    pub rows: Vec<BoundRow>,
    /// `|Wg(e) − D^{−k}|`.
    pub identity_deviation: f64,
    /// `D^{−k} · max(upper − 1, 1 − lower)` at the identity class.
    pub identity_deviation_bound: f64,
    pub identity_deviation_holds: bool,
}

impl BoundCheckReport {
    pub fn all_hold(&self) -> bool {
        self.identity_deviation_holds && self.rows.iter().all(|r| r.lower_holds && r.upper_holds)
    }
}

/// Whether `(k, D)` lies in the regime where the asymptotic Weingarten
/// bounds apply: `D⁴ > 36k⁷` (unitary), `D² > 144k⁷` (orthogonal) or
/// `D² > 36k⁷` (symplectic, `D` the full dimension).
pub fn bound_regime(group: Group, k: usize, d: i64) -> bool {
    if d < 1 {
        return false;
    }
    let dd = BigInt::from(d) * BigInt::from(d);
    let k7 = num_traits::pow(BigInt::from(k), 7);
    match group {
        Group::Unitary => &dd * &dd > BigInt::from(36) * &k7,
        Group::Orthogonal => dd > BigInt::from(144) * &k7,
        Group::Symplectic => dd > BigInt::from(36) * &k7,
    }
}

/// Checks the two-sided asymptotic bounds on `|Wg|` normalized by Catalan
/// products, for every class of the table.
///
/// Outside [`bound_regime`] this is a precondition error. For the unitary group the lower bound alone is valid
/// for `D ≥ k` and is checked by [`unitary_lower_bound_holds`].
pub fn wg_bound_check(table: &WgTable) -> Result<BoundCheckReport> {
    let k = table.k;
    let d = table.d;
    let dd = BigInt::from(d) * BigInt::from(d);
    if !bound_regime(table.group, k, d) {
        return Err(Error::Precondition(format!(
            "{} k={k} D={d} is outside the bound regime",
            table.group
        )));
    }
    let t = k_pow_seven_halves(k);
    let dd_r = BigRational::from_integer(dd.clone());
    let d_r = BigRational::from_integer(BigInt::from(d));
    let one = BigRational::one();
    let k_minus_1 = BigRational::from_integer(BigInt::from(k as i64 - 1));
    // (lower, upper) as intervals over the bracket of k^{7/2}
    let bounds = |tv: &BigRational| -> (BigRational, BigRational) {
        match table.group {
            Group::Unitary => (
                &one / (&one - &k_minus_1 / &dd_r),
                &one / (&one - BigRational::from_integer(6.into()) * tv / &dd_r),
            ),
            Group::Orthogonal => {
                let den = &one - BigRational::from_integer(144.into()) * tv * tv / &dd_r;
                (
                    (&one - BigRational::from_integer(24.into()) * tv / &d_r) / &den,
                    &one / den,
                )
            }
            Group::Symplectic => {
                let half_sq = &dd_r / BigRational::from_integer(4.into());
                (
                    &one / (&one - &k_minus_1 / &half_sq),
                    &one / (&one - BigRational::from_integer(6.into()) * tv / half_sq),
                )
            }
        }
    };
    let (l0, u0) = bounds(&t.lo);
    let (l1, u1) = bounds(&t.hi);
    let lower = Interval::of(l0, l1);
    let upper = Interval::of(u0, u1);
    let mut rows = Vec::new();
    for (ty, v) in &table.values {
        let len = ty.length();
        let scaled = v.abs() * num_traits::pow(BigInt::from(d), k + len);
        let ratio = scaled / catalan_product(ty);
        // the unitary and orthogonal statements use the signed value
        let signed_ok = match table.group {
            Group::Symplectic => true,
            _ => v.is_zero() || v.is_negative() == (len % 2 == 1),
        };
        rows.push(BoundRow {
            cycle_type: ty.parts().to_vec(),
            ratio: ratio.to_f64().unwrap_or(f64::NAN),
            lower: lower.mid_f64(),
            upper: upper.mid_f64(),
            lower_holds: signed_ok && ratio >= lower.hi,
            upper_holds: signed_ok && ratio <= upper.lo,
        });
    }
    let dk = num_traits::pow(BigInt::from(d), k);
    let deviation = (table.identity_value() - BigRational::new(BigInt::one(), dk.clone())).abs();
    let slack = std::cmp::max(&upper.lo - &one, &one - &lower.hi);
    let allowed = &slack / BigRational::from_integer(dk);
    Ok(BoundCheckReport {
        group: table.group,
        k,
        d,
        rows,
        identity_deviation: deviation.to_f64().unwrap_or(f64::NAN),
        identity_deviation_bound: allowed.to_f64().unwrap_or(f64::NAN),
        identity_deviation_holds: deviation <= allowed,
    })
}

/// The unitary left inequality `1/(1 − (k−1)/D²) ≤ (−1)^{|σ|} D^{k+|σ|} Wg / ∏Cat`
/// at the identity class, valid for every `D ≥ k`.
pub fn unitary_lower_bound_holds(table: &WgTable) -> bool {
    let k = table.k;
    let d = table.d;
    let dd = BigRational::from_integer(BigInt::from(d) * BigInt::from(d));
    let lower = BigRational::one() / (BigRational::one() - BigRational::from_integer(BigInt::from(k as i64 - 1)) / dd);
    let ratio = table.identity_value() * num_traits::pow(BigInt::from(d), k);
    ratio >= lower
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    #[serde(rename = "type")]
    parts: Vec<usize>,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheFile {
    group: Group,
    k: usize,
    #[serde(rename = "D")]
    d: i64,
    entries: Vec<CacheEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    class_sizes: Vec<u64>,
}

impl WgTable {
    pub fn to_json(&self) -> serde_json::Value {
        let file = CacheFile {
            group: self.group,
            k: self.k,
            d: self.d,
            entries: self
                .values
                .iter()
                .map(|(t, v)| CacheEntry {
                    parts: t.parts().to_vec(),
                    num: v.numer().to_string(),
                    den: v.denom().to_string(),
                })
                .collect(),
            class_sizes: self.class_sizes.values().copied().collect(),
        };
        serde_json::to_value(file).expect("table serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: CacheFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::Validation(format!("bad table json: {e}")))?;
        let mut values = BTreeMap::new();
        for e in &file.entries {
            let parse = |s: &str| {
                BigInt::from_str(s).map_err(|_| Error::Validation(format!("bad integer {s:?}")))
            };
            let (n, d) = (parse(&e.num)?, parse(&e.den)?);
            if d.is_zero() {
                return Err(Error::Validation("zero denominator".into()));
            }
            values.insert(CycleType::from_parts(e.parts.clone()), BigRational::new(n, d));
        }
        let class_sizes = if file.class_sizes.len() == values.len() {
            values.keys().cloned().zip(file.class_sizes).collect()
        } else {
            Space::new(file.group, file.k, file.d)?
                .classes
                .iter()
                .cloned()
                .zip(Space::new(file.group, file.k, file.d)?.class_sizes())
                .collect()
        };
        Ok(Self { group: file.group, k: file.k, d: file.d, values, class_sizes })
    }

    pub fn cache_path(dir: &Path, group: Group, k: usize, d: i64) -> PathBuf {
        dir.join(format!("{}-k{k}-D{d}.json", group.label()))
    }
}

/// Loads a table from `<dir>/<group>-k<k>-D<D>.json` or builds and stores it.
pub fn wg_table_cached(group: Group, k: usize, d: i64, dir: &Path) -> Result<WgTable> {
    let path = WgTable::cache_path(dir, group, k, d);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
            if let Ok(t) = WgTable::from_json(&value) {
                if t.group == group && t.k == k && t.d == d {
                    return Ok(t);
                }
            }
        }
    }
    let table = wg_table(group, k, d)?;
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(&table.to_json()).expect("json");
    std::fs::write(&path, text)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ct(parts: &[usize]) -> CycleType {
        CycleType::from_parts(parts.to_vec())
    }

    #[test]
    fn pseudo_inverse_matches_exact_table() {
        for (g, k, d) in [(Group::Unitary, 3, 4), (Group::Orthogonal, 2, 3), (Group::Symplectic, 2, 4)] {
            let t = wg_table(g, k, d).unwrap();
            let p = gram_pseudo_inverse(g, k, d).unwrap();
            match g {
                Group::Unitary => {
                    let perms = enumerate_permutations(k).unwrap();
                    for (a, sa) in perms.iter().enumerate() {
                        for (b, sb) in perms.iter().enumerate() {
                            assert!((p[a][b] - t.unitary_entry(sa, sb).unwrap()).abs() < 1e-12);
                        }
                    }
                }
                _ => {
                    let ps = enumerate_pair_partitions(k).unwrap();
                    for (a, m) in ps.iter().enumerate() {
                        for (b, n) in ps.iter().enumerate() {
                            assert!((p[a][b] - t.pairing_entry(m, n).unwrap()).abs() < 1e-12, "{g}");
                        }
                    }
                }
            }
        }
        assert!(wg_unitary(3, 2).is_err());
        let p = gram_pseudo_inverse(Group::Unitary, 3, 2).unwrap();
        assert!(p.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn gram_unitary_small() {
        assert_eq!(gram_unitary(1, 5).unwrap(), vec![vec![BigInt::from(5)]]);
        let g = gram_unitary(2, 3).unwrap();
        assert_eq!(g, vec![vec![9.into(), 3.into()], vec![3.into(), 9.into()]]);
        let g3 = gram_unitary(3, 7).unwrap();
        assert!((0..6).all(|i| g3[i][i] == BigInt::from(343)));
    }

    #[test]
    fn unitary_k2_values() {
        for d in [2i64, 4, 8, 16] {
            let t = wg_unitary(2, d).unwrap();
            assert_eq!(*t.value(&ct(&[1, 1])).unwrap(), rational(1, d * d - 1));
            assert_eq!(*t.value(&ct(&[2])).unwrap(), rational(-1, d * (d * d - 1)));
        }
    }

    #[test]
    fn unitary_singular_below_k() {
        assert!(matches!(wg_unitary(3, 2), Err(Error::Rank(_))));
    }

    #[test]
    fn orthogonal_k2_values() {
        for d in [4i64, 8] {
            let t = wg_orthogonal(2, d).unwrap();
            let den = d * (d - 1) * (d + 2);
            assert_eq!(*t.value(&ct(&[1, 1])).unwrap(), rational(d + 1, den));
            assert_eq!(*t.value(&ct(&[2])).unwrap(), rational(-1, den));
        }
    }

    #[test]
    fn k1_values_are_one_over_d() {
        assert_eq!(*wg_unitary(1, 6).unwrap().identity_value(), rational(1, 6));
        assert_eq!(*wg_orthogonal(1, 6).unwrap().identity_value(), rational(1, 6));
        assert_eq!(*wg_symplectic(1, 3).unwrap().identity_value(), rational(1, 6));
    }

    #[test]
    fn symplectic_routes_agree_at_d4() {
        let a = symplectic_from_orthogonal(2, 2).unwrap();
        let b = symplectic_direct(2, 2).unwrap();
        assert_eq!(a, b);
        let d = 4;
        let den = d * (d + 1) * (d - 2);
        assert_eq!(*a.value(&ct(&[1, 1])).unwrap(), rational(d - 1, den));
        assert_eq!(*a.value(&ct(&[2])).unwrap(), rational(1, den));
    }

    #[test]
    fn reduced_and_full_inversion_agree() {
        for (g, k, d) in [
            (Group::Unitary, 3, 8),
            (Group::Unitary, 4, 5),
            (Group::Orthogonal, 3, 6),
            (Group::Symplectic, 3, 6),
        ] {
            let full = wg_by_full_inversion(g, k, d).unwrap();
            let reduced = wg_table(g, k, d).unwrap();
            assert_eq!(full, reduced, "{g} k={k} D={d}");
        }
    }

    #[test]
    fn unitary_sum_matches_falling_factorial() {
        assert_eq!(sum_abs_wg(Group::Unitary, 2, 4).unwrap(), rational(1, 12));
    }

    #[test]
    fn catalan_numbers() {
        let got: Vec<BigInt> = (0..6).map(catalan).collect();
        let want: Vec<BigInt> = [1, 1, 2, 5, 14, 42].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = wg_table_cached(Group::Orthogonal, 3, 8, dir.path()).unwrap();
        assert!(WgTable::cache_path(dir.path(), Group::Orthogonal, 3, 8).exists());
        let again = wg_table_cached(Group::Orthogonal, 3, 8, dir.path()).unwrap();
        assert_eq!(t, again);
    }
}
