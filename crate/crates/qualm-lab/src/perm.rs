//! Permutations, pair partitions and the index contractions built from them.
//!
//! Indices are zero-based internally; `Display` prints the usual one-based
//! notation. A pair partition of `{0..2k}` is kept in canonical form: each
//! pair is increasing and pairs are sorted by their first element.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

pub const MAX_PERM_K: usize = 8;
pub const MAX_PAIR_K: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &i in &image {
            if i >= image.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!("{image:?} is not a bijection")));
            }
        }
        Ok(Self { image })
    }

    /// Parses one-based one-line notation.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        if image.contains(&0) {
            return Err(Error::Validation("one-based image contains 0".into()));
        }
        Self::new(image.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(k: usize) -> Self {
        Self { image: (0..k).collect() }
    }

    pub fn k(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.k(), other.k(), "composing permutations of different degree");
        Self { image: other.image.iter().map(|&i| self.image[i]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.k()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        Self { image: inv }
    }

    /// Cycles, each starting at its smallest element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.k()];
        let mut out = Vec::new();
        for start in 0..self.k() {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cyc.push(i);
                i = self.image[i];
            }
            out.push(cyc);
        }
        out
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles().len()
    }

    pub fn cycle_type(&self) -> CycleType {
        CycleType::from_parts(self.cycles().iter().map(Vec::len).collect())
    }

    /// `+1` for even permutations, `−1` for odd ones.
    pub fn sign(&self) -> i32 {
        if (self.k() - self.num_cycles()).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.image.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// A partition of an integer, stored with parts in weakly decreasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType {
    parts: Vec<usize>,
}

impl CycleType {
    pub fn from_parts(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `L`: the combined length of all parts larger than one.
    pub fn nontrivial_length(&self) -> usize {
        self.parts.iter().filter(|&&p| p > 1).sum()
    }

    /// `|σ| = k − #parts`.
    pub fn length(&self) -> usize {
        self.total() - self.len()
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All `k!` permutations of `{0..k}` in lexicographic order.
pub fn enumerate_permutations(k: usize) -> Result<Vec<Permutation>> {
    if k > MAX_PERM_K {
        return Err(Error::Size(format!("k = {k} exceeds {MAX_PERM_K}")));
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(Permutation { image: cur.clone() });
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot has a successor");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition {
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Validates and canonicalizes a perfect matching of `{0..2k}`.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = 2 * pairs.len();
        let mut seen = vec![false; n];
        let mut canon = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            for x in [a, b] {
                if x >= n || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::Validation(format!("{x} is repeated or out of range")));
                }
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        Ok(Self { pairs: canon })
    }

    /// Parses one-based pairs such as `[(1,3),(2,4)]`.
    pub fn from_one_based(pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(Error::Validation("one-based pair contains 0".into()));
        }
        Self::new(pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect())
    }

    /// The trivial pairing `𝔢 = {0,1}{2,3}…`.
    pub fn identity(k: usize) -> Self {
        Self { pairs: (0..k).map(|s| (2 * s, 2 * s + 1)).collect() }
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn partner_map(&self) -> Vec<usize> {
        let mut f = vec![0; 2 * self.k()];
        for &(a, b) in &self.pairs {
            f[a] = b;
            f[b] = a;
        }
        f
    }

    /// `σ_𝔪 ∈ S_{2k}` with `σ_𝔪(2s) = 𝔪(2s)`, `σ_𝔪(2s+1) = 𝔪(2s+1)`.
    pub fn sigma(&self) -> Permutation {
        Permutation { image: self.pairs.iter().flat_map(|&(a, b)| [a, b]).collect() }
    }

    /// The pairing `{σ(2s), σ(2s+1)}` obtained by acting on `𝔢`.
    pub fn from_permutation(sigma: &Permutation) -> Result<Self> {
        if !sigma.k().is_multiple_of(2) {
            return Err(Error::Validation("pairings need an even degree".into()));
        }
        Self::new((0..sigma.k() / 2).map(|s| (sigma.apply(2 * s), sigma.apply(2 * s + 1))).collect())
    }

    pub fn coset_type(&self) -> CycleType {
        loop_type(self, &Self::identity(self.k()))
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(a, b) in &self.pairs {
            write!(f, "{{{},{}}}", a + 1, b + 1)?;
        }
        Ok(())
    }
}

/// All `(2k−1)!!` pair partitions of `{0..2k}`, lexicographic in canonical form.
pub fn enumerate_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    if k > MAX_PAIR_K {
        return Err(Error::Size(format!("k = {k} exceeds {MAX_PAIR_K}")));
    }
    fn rec(free: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<PairPartition>) {
        if free.is_empty() {
            out.push(PairPartition { pairs: cur.clone() });
            return;
        }
        let a = free.remove(0);
        for idx in 0..free.len() {
            let b = free.remove(idx);
            cur.push((a, b));
            rec(free, cur, out);
            cur.pop();
            free.insert(idx, b);
        }
        free.insert(0, a);
    }
    let mut out = Vec::new();
    rec(&mut (0..2 * k).collect(), &mut Vec::new(), &mut out);
    Ok(out)
}

/// Loop structure of the graph `𝔪 ∪ 𝔫`: each loop alternates edges of the
/// two pairings and has even length `2μ`; the result collects the `μ`.
pub fn loop_type(m: &PairPartition, n: &PairPartition) -> CycleType {
    assert_eq!(m.k(), n.k(), "pairings of different size");
    let (fm, fn_) = (m.partner_map(), n.partner_map());
    let mut seen = vec![false; 2 * m.k()];
    let mut parts = Vec::new();
    for start in 0..2 * m.k() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        loop {
            let j = fm[i];
            seen[i] = true;
            seen[j] = true;
            len += 2;
            i = fn_[j];
            if i == start {
                break;
            }
        }
        parts.push(len / 2);
    }
    CycleType::from_parts(parts)
}

/// Coset type of an arbitrary element of `S_{2k}`: the loop type of the
/// pairing `σ(𝔢)` against `𝔢`.
pub fn coset_type_of_permutation(sigma: &Permutation) -> Result<CycleType> {
    Ok(PairPartition::from_permutation(sigma)?.coset_type())
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exact `(N(k, L), N_pair(2k, L))`: permutations of `k` points whose
/// nontrivial cycles cover exactly `L` points, and pairings of `2k` points
/// whose coset type has exactly `k − L` parts equal to one.
pub fn count_by_nontrivial_length(k: usize, l: usize) -> (u128, u128) {
    if l > k {
        return (0, 0);
    }
    // derangements of l points, and pairings of 2l points with no trivial loop,
    // both by inclusion–exclusion over the forced fixed parts
    let mut derange: i128 = 0;
    let mut free_pairings: i128 = 0;
    let mut fact: i128 = (1..=l as i128).product();
    let mut dfact: i128 = (1..=l as i128).map(|i| 2 * i - 1).product();
    for j in 0..=l {
        let sign = if j % 2 == 0 { 1 } else { -1 };
        let c = binomial(l, j) as i128;
        derange += sign * c * fact;
        free_pairings += sign * c * dfact;
        let rest = (l - j) as i128;
        if rest > 0 {
            fact /= rest;
            dfact /= 2 * rest - 1;
        }
    }
    let c = binomial(k, l);
    (c * derange as u128, c * free_pairings as u128)
}

/// An operator factor: a dense matrix or a scaled rank-one `s·|ket⟩⟨bra|`.
///
/// `bra_row` holds the row vector `⟨bra|` (already conjugated).
#[derive(Clone, Debug)]
pub enum Factor {
    Dense(ComplexMatrix),
    Outer { scale: C64, ket: Vec<C64>, bra_row: Vec<C64> },
}

impl Factor {
    /// `λ |y⟩⟨y|`.
    pub fn projector(lambda: f64, y: &[C64]) -> Self {
        Factor::Outer {
            scale: C64::new(lambda, 0.0),
            ket: y.to_vec(),
            bra_row: y.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Dense(m) => m.rows(),
            Factor::Outer { ket, .. } => ket.len(),
        }
    }

    pub fn transpose(&self) -> Self {
        match self {
            Factor::Dense(m) => Factor::Dense(m.transpose()),
            Factor::Outer { scale, ket, bra_row } => {
                Factor::Outer { scale: *scale, ket: bra_row.clone(), bra_row: ket.clone() }
            }
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        match self {
            Factor::Dense(m) => m.clone(),
            Factor::Outer { scale, ket, bra_row } => {
                ComplexMatrix::from_fn(ket.len(), bra_row.len(), |i, j| scale * ket[i] * bra_row[j])
            }
        }
    }

    fn check_square(&self) -> Result<usize> {
        match self {
            Factor::Dense(m) if m.is_square() => Ok(m.rows()),
            Factor::Outer { ket, bra_row, .. } if ket.len() == bra_row.len() => Ok(ket.len()),
            _ => Err(Error::Shape("factor is not square".into())),
        }
    }
}

/// One step of a closed product: a factor, optionally transposed.
#[derive(Clone, Copy)]
struct Step<'a> {
    factor: &'a Factor,
    transposed: bool,
}

fn row_times(r: &[C64], m: &ComplexMatrix, transposed: bool) -> Vec<C64> {
    let d = r.len();
    let mut out = vec![C64::new(0.0, 0.0); d];
    if transposed {
        for (j, o) in out.iter_mut().enumerate() {
            *o = m.row(j).iter().zip(r).map(|(a, b)| a * b).sum();
        }
    } else {
        for (i, &ri) in r.iter().enumerate() {
            if ri == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, &mij) in out.iter_mut().zip(m.row(i)) {
                *o += ri * mij;
            }
        }
    }
    out
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `tr(M_0 M_1 ⋯ M_{n−1})`, exploiting rank-one factors when present.
fn closed_trace(steps: &[Step<'_>]) -> C64 {
    let n = steps.len();
    let Some(start) = steps.iter().position(|s| matches!(s.factor, Factor::Outer { .. })) else {
        let mut acc: Option<ComplexMatrix> = None;
        for s in &steps[..n - 1] {
            let Factor::Dense(m) = s.factor else { unreachable!() };
            let m = if s.transposed { m.transpose() } else { m.clone() };
            acc = Some(match acc {
                None => m,
                Some(a) => a.mul_unchecked(&m),
            });
        }
        let Factor::Dense(last) = steps[n - 1].factor else { unreachable!() };
        let tl = steps[n - 1].transposed;
        return match acc {
            None => last.trace(),
            Some(a) => {
                let d = a.rows();
                let mut t = C64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        let l = if tl { last[(i, j)] } else { last[(j, i)] };
                        t += a[(i, j)] * l;
                    }
                }
                t
            }
        };
    };
    let outer = |s: &Step<'_>| -> (C64, Vec<C64>, Vec<C64>) {
        let Factor::Outer { scale, ket, bra_row } = s.factor else { unreachable!() };
        if s.transposed {
            (*scale, bra_row.clone(), ket.clone())
        } else {
            (*scale, ket.clone(), bra_row.clone())
        }
    };
    let (s0, ket0, mut row) = outer(&steps[start]);
    let mut acc = s0;
    for off in 1..n {
        let st = &steps[(start + off) % n];
        match st.factor {
            Factor::Dense(m) => row = row_times(&row, m, st.transposed),
            Factor::Outer { .. } => {
                let (s, ket, bra) = outer(st);
                acc *= s * dot(&row, &ket);
                row = bra;
            }
        }
    }
    acc * dot(&row, &ket0)
}

fn common_dim(factors: &[Factor]) -> Result<usize> {
    let d = factors
        .first()
        .ok_or_else(|| Error::Shape("no factors supplied".into()))?
        .check_square()?;
    for f in factors {
        if f.check_square()? != d {
            return Err(Error::Shape("factors have different dimensions".into()));
        }
    }
    Ok(d)
}

/// `Σ_J Π_s (A_s)_{j_s, j_{σ(s)}}`: the product over cycles `(s σ(s) σ²(s) …)`
/// of `tr(A_s A_{σ(s)} A_{σ²(s)} ⋯)`.
pub fn permutation_trace_factors(factors: &[Factor], sigma: &Permutation) -> Result<C64> {
    common_dim(factors)?;
    if factors.len() != sigma.k() {
        return Err(Error::Shape(format!(
            "{} factors for a permutation of degree {}",
            factors.len(),
            sigma.k()
        )));
    }
    let mut total = C64::new(1.0, 0.0);
    for cyc in sigma.cycles() {
        let steps: Vec<Step<'_>> =
            cyc.iter().map(|&s| Step { factor: &factors[s], transposed: false }).collect();
        total *= closed_trace(&steps);
    }
    Ok(total)
}

/// Dense-matrix form of [`permutation_trace_factors`].
pub fn permutation_trace(mats: &[ComplexMatrix], sigma: &Permutation) -> Result<C64> {
    let factors: Vec<Factor> = mats.iter().cloned().map(Factor::Dense).collect();
    permutation_trace_factors(&factors, sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Kronecker-delta links.
    Orthogonal,
    /// Links given by an antisymmetric matrix `J`.
    Symplectic,
}

/// Contraction of `⊗ A_s` against the pairing `𝔪`.
///
/// Position `2s` carries the row index of `A_s` and `2s+1` its column
/// index. Each pair `(p, q)` of `𝔪` with `p < q` links positions `p` and
/// `q` by `δ_{i_p i_q}` (orthogonal) or `J_{i_p i_q}` (symplectic). The
/// sum factorizes over the loops of `𝔪 ∪ 𝔢`.
pub fn pair_partition_trace_factors(
    factors: &[Factor],
    m: &PairPartition,
    link: Option<&ComplexMatrix>,
) -> Result<C64> {
    let d = common_dim(factors)?;
    if factors.len() != m.k() {
        return Err(Error::Shape(format!("{} factors for a pairing of {} pairs", factors.len(), m.k())));
    }
    let link = match link {
        Some(j) if j.rows() != d || j.cols() != d => {
            return Err(Error::Shape("link matrix has the wrong dimension".into()))
        }
        Some(j) => Some((Factor::Dense(j.clone()), j)),
        None => None,
    };
    let fm = m.partner_map();
    let mut seen = vec![false; 2 * m.k()];
    let mut total = C64::new(1.0, 0.0);
    for start in (0..2 * m.k()).step_by(2) {
        if seen[start] {
            continue;
        }
        let mut steps: Vec<Step<'_>> = Vec::new();
        let mut a = start;
        loop {
            let s = a / 2;
            let b = a ^ 1;
            seen[a] = true;
            seen[b] = true;
            steps.push(Step { factor: &factors[s], transposed: a % 2 == 1 });
            let c = fm[b];
            if let Some((lf, _)) = &link {
                steps.push(Step { factor: lf, transposed: b > c });
            }
            a = c;
            if a == start {
                break;
            }
        }
        total *= closed_trace(&steps);
    }
    Ok(total)
}

/// Dense-matrix form of [`pair_partition_trace_factors`].
pub fn pair_partition_trace(
    mats: &[ComplexMatrix],
    m: &PairPartition,
    flavor: Flavor,
    j: Option<&ComplexMatrix>,
) -> Result<C64> {
    let link = match (flavor, j) {
        (Flavor::Orthogonal, _) => None,
        (Flavor::Symplectic, Some(j)) => Some(j),
        (Flavor::Symplectic, None) => {
            return Err(Error::Validation("symplectic contraction needs J".into()))
        }
    };
    let factors: Vec<Factor> = mats.iter().cloned().map(Factor::Dense).collect();
    pair_partition_trace_factors(&factors, m, link)
}
