//! Exact integer linear algebra: fraction-free Gauss–Jordan elimination and
//! exact verification of a claimed inverse.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Solves `A X = B` over the rationals for square integer `A`.
///
/// Bareiss-style elimination keeps every intermediate entry an integer
/// minor, so each division below is exact.
pub fn solve_fraction_free(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) || b.len() != n {
        return Err(Error::Shape("system must be square with matching right-hand side".into()));
    }
    let m = b.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<BigInt>> =
        a.iter().zip(b).map(|(ra, rb)| ra.iter().chain(rb.iter()).cloned().collect()).collect();
    let width = n + m;
    let mut prev = BigInt::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !rows[r][col].is_zero()) else {
            return Err(Error::Rank(format!("pivot column {col} of {n} vanishes")));
        };
        rows.swap(col, p);
        let pivot_row = rows[col].clone();
        let pivot = &pivot_row[col];
        for (r, row) in rows.iter_mut().enumerate() {
            if r == col {
                continue;
            }
            let factor = row[col].clone();
            for j in 0..width {
                let num = pivot * &row[j] - &factor * &pivot_row[j];
                let (q, rem) = num.div_rem(&prev);
                if !rem.is_zero() {
                    return Err(Error::Consistency("inexact fraction-free division".into()));
                }
                row[j] = q;
            }
        }
        prev = pivot.clone();
    }
    // every diagonal entry now equals the last pivot
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let d = row[i].clone();
            row[n..].iter().map(|x| BigRational::new(x.clone(), d.clone())).collect()
        })
        .collect())
}

pub fn invert(a: &[Vec<BigInt>]) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    let id: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    solve_fraction_free(a, &id)
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Checks `Σ_n W(m, n) G(n, p) = δ_{mp}` exactly for the listed rows `m`.
///
/// `w` and `g` are entry oracles over `0..n`; `w` is integer after scaling by
/// `den`. Uses `i128` when magnitudes provably fit, big integers otherwise.
pub fn verify_inverse_rows(
    n: usize,
    rows: &[usize],
    den: &BigInt,
    w_scaled: &dyn Fn(usize, usize) -> BigInt,
    g: &dyn Fn(usize, usize) -> BigInt,
) -> bool {
    let w_rows: Vec<Vec<BigInt>> =
        rows.iter().map(|&m| (0..n).map(|c| w_scaled(m, c)).collect()).collect();
    let g_all: Vec<Vec<BigInt>> = (0..n).map(|r| (0..n).map(|c| g(r, c)).collect()).collect();
    let max_w = w_rows.iter().flatten().map(|x| x.abs()).max().unwrap_or_default();
    let max_g = g_all.iter().flatten().map(|x| x.abs()).max().unwrap_or_default();
    let bound = max_w * max_g * BigInt::from(n as u64 + 1);
    if bound.bits() < 126 {
        let w_small: Vec<Vec<i128>> =
            w_rows.iter().map(|r| r.iter().map(|x| x.to_i128().unwrap()).collect()).collect();
        let g_small: Vec<Vec<i128>> =
            g_all.iter().map(|r| r.iter().map(|x| x.to_i128().unwrap()).collect()).collect();
        let den_small = den.to_i128();
        for (wi, &m) in w_small.iter().zip(rows) {
            let mut acc = vec![0i128; n];
            for (nn, &wv) in wi.iter().enumerate() {
                if wv == 0 {
                    continue;
                }
                for (a, &gv) in acc.iter_mut().zip(&g_small[nn]) {
                    *a += wv * gv;
                }
            }
            for (p, &v) in acc.iter().enumerate() {
                let expect = if p == m { den_small } else { Some(0) };
                if Some(v) != expect {
                    return false;
                }
            }
        }
        return true;
    }
    for (wi, &m) in w_rows.iter().zip(rows) {
        for p in 0..n {
            let v: BigInt = wi.iter().zip(&g_all).map(|(wv, gr)| wv * &gr[p]).sum();
            let expect = if p == m { den.clone() } else { BigInt::zero() };
            if v != expect {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn inverts_small_matrices() {
        let inv = invert(&ints(&[&[2, 1], &[1, 1]])).unwrap();
        assert_eq!(inv, vec![vec![rat(1, 1), rat(-1, 1)], vec![rat(-1, 1), rat(2, 1)]]);
        // needs a row swap
        let inv = invert(&ints(&[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(inv, vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]]);
    }

    #[test]
    fn singular_is_rank_error() {
        assert!(matches!(invert(&ints(&[&[1, 2], &[2, 4]])), Err(Error::Rank(_))));
    }

    #[test]
    fn orthogonal_k2_gram_at_d4() {
        // [[D²,D,D],[D,D²,D],[D,D,D²]] at D = 4
        let g = ints(&[&[16, 4, 4], &[4, 16, 4], &[4, 4, 16]]);
        let inv = invert(&g).unwrap();
        // (D+1)/(D(D−1)(D+2)) = 5/72 and −1/(D(D−1)(D+2)) = −1/72
        assert_eq!(inv[0][0], rat(5, 72));
        assert_eq!(inv[0][1], rat(-1, 72));
    }
}
