//! k-fold Haar twirls `E[W^{⊗k} A W^{†⊗k}]` evaluated from exact tables.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::perm::{enumerate_pair_partitions, enumerate_permutations, PairPartition};

use super::{wg_table, Group, WgTable};

/// Largest `D^k` accepted by the twirl (six qubits).
pub const MAX_TWIRL_DIM: usize = 64;

/// Base-`d` digits of `idx`, most significant first.
pub(crate) fn digits(mut idx: usize, d: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for s in (0..k).rev() {
        out[s] = idx % d;
        idx /= d;
    }
    out
}

pub(crate) fn undigits(ds: impl IntoIterator<Item = usize>, d: usize) -> usize {
    ds.into_iter().fold(0, |acc, x| acc * d + x)
}

/// `J_{ab}` for the canonical `J` of dimension `d`.
pub(crate) fn j_entry(a: usize, b: usize, d: usize) -> f64 {
    let h = d / 2;
    if a < h && b == a + h {
        1.0
    } else if a >= h && b + h == a {
        -1.0
    } else {
        0.0
    }
}

/// `Δ_𝔪(x)` (orthogonal) or `Δ′_𝔪(x)` (symplectic) on `2k` indices.
pub(crate) fn pairing_weight(m: &PairPartition, x: &[usize], d: usize, symplectic: bool) -> f64 {
    let mut w = 1.0;
    for &(p, q) in m.pairs() {
        if symplectic {
            w *= j_entry(x[p], x[q], d);
        } else if x[p] != x[q] {
            return 0.0;
        }
        if w == 0.0 {
            return 0.0;
        }
    }
    w
}

/// Twirls `A` (a `D^k × D^k` matrix) using a precomputed table.
pub fn twirl_with(table: &WgTable, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = table.k();
    let d = usize::try_from(table.d())
        .map_err(|_| Error::Precondition("twirl needs a positive dimension".into()))?;
    let n = d.checked_pow(k as u32).unwrap_or(usize::MAX);
    if n > MAX_TWIRL_DIM {
        return Err(Error::Size(format!("D^k = {n} exceeds the twirl cap {MAX_TWIRL_DIM}")));
    }
    if a.rows() != n || a.cols() != n {
        return Err(Error::Shape(format!("expected {n}×{n}, got {}×{}", a.rows(), a.cols())));
    }
    match table.group() {
        Group::Unitary => twirl_unitary(table, a, d, k, n),
        Group::Orthogonal => twirl_pairing(table, a, d, k, n, false),
        Group::Symplectic => twirl_pairing(table, a, d, k, n, true),
    }
}

/// `E[W^{⊗k} A W^{†⊗k}]` for Haar `W` in the given group; `d` is the full
/// dimension, also for the symplectic group.
pub fn haar_twirl(group: Group, k: usize, d: i64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    twirl_with(&wg_table(group, k, d)?, a)
}

fn twirl_unitary(table: &WgTable, a: &ComplexMatrix, d: usize, k: usize, n: usize) -> Result<ComplexMatrix> {
    let perms = enumerate_permutations(k)?;
    // c_τ = Σ_{J'} A_{τJ', J'} with (τJ')_s = j'_{τ(s)}
    let c: Vec<C64> = perms
        .iter()
        .map(|tau| {
            (0..n)
                .map(|col| {
                    let jp = digits(col, d, k);
                    a[(undigits((0..k).map(|s| jp[tau.apply(s)]), d), col)]
                })
                .sum()
        })
        .collect();
    let mut coef = Vec::with_capacity(perms.len());
    for sigma in &perms {
        let mut acc = C64::new(0.0, 0.0);
        for (tau, ct) in perms.iter().zip(&c) {
            acc += ct * table.value_f64(&sigma.compose(&tau.inverse()).cycle_type())?;
        }
        coef.push(acc);
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        let ip = digits(col, d, k);
        for (sigma, cs) in perms.iter().zip(&coef) {
            let row = undigits((0..k).map(|s| ip[sigma.apply(s)]), d);
            out[(row, col)] += cs;
        }
    }
    Ok(out)
}

fn j_tensor(d: usize, k: usize) -> ComplexMatrix {
    let n = d.pow(k as u32);
    ComplexMatrix::from_fn(n, n, |r, c| {
        let (x, y) = (digits(r, d, k), digits(c, d, k));
        C64::new(x.iter().zip(&y).map(|(&p, &q)| j_entry(p, q, d)).product(), 0.0)
    })
}

fn twirl_pairing(
    table: &WgTable,
    a: &ComplexMatrix,
    d: usize,
    k: usize,
    n: usize,
    symplectic: bool,
) -> Result<ComplexMatrix> {
    let pairings = enumerate_pair_partitions(k)?;
    let jk = if symplectic { Some(j_tensor(d, k)) } else { None };
    let b = match &jk {
        Some(j) => a.matmul(j)?,
        None => a.clone(),
    };
    // interleave (row, col) digits: position 2s is row digit s, 2s+1 is col digit s
    let interleave = |r: usize, c: usize| -> Vec<usize> {
        let (x, y) = (digits(r, d, k), digits(c, d, k));
        (0..2 * k).map(|p| if p % 2 == 0 { x[p / 2] } else { y[p / 2] }).collect()
    };
    let contractions: Vec<C64> = pairings
        .iter()
        .map(|m| {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                for c in 0..n {
                    let w = pairing_weight(m, &interleave(r, c), d, symplectic);
                    if w != 0.0 {
                        acc += b[(r, c)] * w;
                    }
                }
            }
            acc
        })
        .collect();
    let mut v = Vec::with_capacity(pairings.len());
    for m in &pairings {
        let mut acc = C64::new(0.0, 0.0);
        for (nn, cn) in pairings.iter().zip(&contractions) {
            acc += cn * table.pairing_entry(m, nn)?;
        }
        v.push(acc);
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let x = interleave(r, c);
            let mut acc = C64::new(0.0, 0.0);
            for (m, vm) in pairings.iter().zip(&v) {
                let w = pairing_weight(m, &x, d, symplectic);
                if w != 0.0 {
                    acc += vm * w;
                }
            }
            out[(r, c)] = acc;
        }
    }
    Ok(match jk {
        Some(j) => {
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            out.matmul(&j)?.scale(C64::new(sign, 0.0))
        }
        None => out,
    })
}
