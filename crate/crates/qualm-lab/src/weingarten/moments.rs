//! Matrix-entry moments of Haar-random group elements, both from a
//! Weingarten table and from the explicit second and fourth moment formulas.

use crate::error::{Error, Result};
use crate::perm::{enumerate_pair_partitions, enumerate_permutations};

use super::twirl::{j_entry, pairing_weight};
use super::{Group, WgTable};

fn check(table: &WgTable, group: Group, entries: usize) -> Result<usize> {
    if table.group() != group {
        return Err(Error::Precondition(format!("expected a {group} table, got {}", table.group())));
    }
    if entries != table.k() * 2 {
        return Err(Error::Shape(format!("expected {} indices, got {entries}", 2 * table.k())));
    }
    usize::try_from(table.d()).map_err(|_| Error::Precondition("negative dimension".into()))
}

/// `E[∏_s U_{i_s j_s} ∏_s conj(U_{i′_s j′_s})]` over Haar `U(D)`.
pub fn unitary_moment(table: &WgTable, i: &[usize], j: &[usize], ip: &[usize], jp: &[usize]) -> Result<f64> {
    check(table, Group::Unitary, i.len() + ip.len())?;
    let k = table.k();
    if j.len() != k || jp.len() != k {
        return Err(Error::Shape("row and column index lists differ in length".into()));
    }
    let perms = enumerate_permutations(k)?;
    let matches = |x: &[usize], y: &[usize], p: &crate::perm::Permutation| {
        (0..k).all(|s| x[s] == y[p.apply(s)])
    };
    let mut total = 0.0;
    for sigma in perms.iter().filter(|s| matches(i, ip, s)) {
        for tau in perms.iter().filter(|t| matches(j, jp, t)) {
            total += table.value_f64(&sigma.compose(&tau.inverse()).cycle_type())?;
        }
    }
    Ok(total)
}

/// `E[∏_a W_{i_a j_a}]` over `2k` plain entries of a Haar orthogonal or
/// symplectic matrix.
pub fn pairing_moment(table: &WgTable, i: &[usize], j: &[usize]) -> Result<f64> {
    let symplectic = table.group() == Group::Symplectic;
    let d = check(table, table.group(), i.len())?;
    if table.group() == Group::Unitary || j.len() != i.len() {
        return Err(Error::Precondition("pairing moments need O or Sp and matching index lists".into()));
    }
    let pairings = enumerate_pair_partitions(table.k())?;
    let mut total = 0.0;
    for m in &pairings {
        let wm = pairing_weight(m, i, d, symplectic);
        if wm == 0.0 {
            continue;
        }
        for n in &pairings {
            let wn = pairing_weight(n, j, d, symplectic);
            if wn != 0.0 {
                total += wm * wn * table.pairing_entry(m, n)?;
            }
        }
    }
    Ok(total)
}

/// `E[∏_s S_{i_s j_s} ∏_s conj(S_{i′_s j′_s})]` for Haar `S ∈ Sp(D/2)`,
/// using `conj(S) = −J S J`, under which `conj(S_{ab}) = −J_{a a*} J_{b* b} S_{a* b*}`.
pub fn symplectic_mixed_moment(
    table: &WgTable,
    i: &[usize],
    j: &[usize],
    ip: &[usize],
    jp: &[usize],
) -> Result<f64> {
    let d = usize::try_from(table.d()).map_err(|_| Error::Precondition("negative dimension".into()))?;
    let h = d / 2;
    let partner = |a: usize| if a < h { a + h } else { a - h };
    let mut rows = i.to_vec();
    let mut cols = j.to_vec();
    let mut coeff = 1.0;
    for (&a, &b) in ip.iter().zip(jp) {
        let (a2, b2) = (partner(a), partner(b));
        coeff *= -j_entry(a, a2, d) * j_entry(b2, b, d);
        rows.push(a2);
        cols.push(b2);
    }
    Ok(coeff * pairing_moment(table, &rows, &cols)?)
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `E[U_{i₁j₁} conj(U_{i₂j₂})] = δ_{i₁i₂} δ_{j₁j₂} / D`; the same formula
/// holds for the orthogonal and symplectic groups.
pub fn second_moment_closed(d: usize, i: [usize; 2], j: [usize; 2]) -> f64 {
    delta(i[0], i[1]) * delta(j[0], j[1]) / d as f64
}

/// `E[U_{i₁j₁} U_{i₂j₂} conj(U_{i₃j₃}) conj(U_{i₄j₄})]` over `U(D)`.
pub fn unitary_fourth_closed(d: usize, i: [usize; 4], j: [usize; 4]) -> f64 {
    let d = d as f64;
    let a = 1.0 / (d * d - 1.0);
    let b = -1.0 / (d * (d * d - 1.0));
    let di = |p, q| delta(i[p], i[q]);
    let dj = |p, q| delta(j[p], j[q]);
    a * (di(0, 2) * di(1, 3) * dj(0, 2) * dj(1, 3) + di(0, 3) * di(1, 2) * dj(0, 3) * dj(1, 2))
        + b * (di(0, 2) * di(1, 3) * dj(0, 3) * dj(1, 2) + di(0, 3) * di(1, 2) * dj(0, 2) * dj(1, 3))
}

/// `E[O_{i₁j₁} O_{i₂j₂} O_{i₃j₃} O_{i₄j₄}]` over `O(D)`.
pub fn orthogonal_fourth_closed(d: usize, i: [usize; 4], j: [usize; 4]) -> f64 {
    let d = d as f64;
    let den = d * (d - 1.0) * (d + 2.0);
    let di = |p, q| delta(i[p], i[q]);
    let dj = |p, q| delta(j[p], j[q]);
    let pi = [di(0, 1) * di(2, 3), di(0, 2) * di(1, 3), di(0, 3) * di(1, 2)];
    let pj = [dj(0, 1) * dj(2, 3), dj(0, 2) * dj(1, 3), dj(0, 3) * dj(1, 2)];
    let mut total = 0.0;
    for (a, wa) in pi.iter().enumerate() {
        for (b, wb) in pj.iter().enumerate() {
            let c = if a == b { (d + 1.0) / den } else { -1.0 / den };
            total += c * wa * wb;
        }
    }
    total
}

/// `E[S_{i₁j₁} S_{i₂j₂} conj(S_{i₃j₃}) conj(S_{i₄j₄})]` over `Sp(D/2)`, in
/// the published explicit form (`J` factors on the `{12}{34}` pairing).
pub fn symplectic_fourth_published(d: usize, i: [usize; 4], j: [usize; 4]) -> f64 {
    let dd = d as f64;
    let den = dd * (dd + 1.0) * (dd - 2.0);
    let di = |p, q| delta(i[p], i[q]);
    let dj = |p, q| delta(j[p], j[q]);
    let ji = j_entry(i[0], i[1], d) * j_entry(i[2], i[3], d);
    let jj = j_entry(j[0], j[1], d) * j_entry(j[2], j[3], d);
    let plus = ji * jj + di(0, 2) * di(1, 3) * dj(0, 2) * dj(1, 3) + di(0, 3) * di(1, 2) * dj(0, 3) * dj(1, 2);
    let minus = di(0, 2) * di(1, 3) * dj(0, 3) * dj(1, 2) - ji * dj(0, 3) * dj(1, 2)
        + di(0, 3) * di(1, 2) * dj(0, 2) * dj(1, 3)
        + ji * dj(0, 2) * dj(1, 3)
        - di(0, 3) * di(1, 2) * jj
        + di(0, 2) * di(1, 3) * jj;
    (dd - 1.0) / den * plus - minus / den
}
