//! Haar sampling on U(D), O(D) and the compact symplectic group Sp(D/2),
//! driven by reproducible seeded streams.

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{gates, kron, ComplexMatrix, C64};

/// Largest matrix dimension the samplers accept.
pub const MAX_SAMPLE_DIM: usize = 4096;

/// One step of the splitmix64 generator; used to derive per-trial seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// A ChaCha stream addressed by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct SeededStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent stream derived from this one's seed.
    pub fn fork(&self, index: u64) -> Self {
        Self::new(derive_seed(self.seed, index), self.stream_id)
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Precondition("dimension must be at least 1".into()));
    }
    if d > MAX_SAMPLE_DIM {
        return Err(Error::Size(format!("dimension {d} exceeds {MAX_SAMPLE_DIM}")));
    }
    Ok(())
}

/// Standard complex Gaussian, `E|z|² = 1`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar unitary: QR of a Ginibre matrix with R's diagonal phases folded into Q.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let z = DMatrix::<C64>::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(ComplexMatrix::from_nalgebra(&q))
}

/// Haar orthogonal matrix: real QR with the signs of R's diagonal folded into Q.
pub fn sample_haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let z = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| C64::new(q[(i, j)], 0.0)))
}

/// The quaternionic partner `T v = −J v̄` of a column under `J = [[0, I], [−I, 0]]`.
fn j_partner(v: &[C64]) -> Vec<C64> {
    let n = v.len() / 2;
    let mut w = vec![C64::new(0.0, 0.0); 2 * n];
    for i in 0..n {
        // (J v̄)_i = v̄_{n+i}, (J v̄)_{n+i} = −v̄_i
        w[i] = -v[n + i].conj();
        w[n + i] = v[i].conj();
    }
    w
}

fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let c: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= c * bi;
        }
    }
}

/// Haar element of Sp(halfD) ⊂ U(2·halfD) by quaternionic Gram–Schmidt.
///
/// Columns come in pairs `(v_j, −J v̄_j)` placed at `j` and `halfD + j`, so
/// `S J Sᵀ = J` holds by construction.
pub fn sample_haar_symplectic<R: Rng + ?Sized>(half_d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_dim(half_d)?;
    let d = 2 * half_d;
    check_dim(d)?;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(d);
    let mut firsts = Vec::with_capacity(half_d);
    let mut partners = Vec::with_capacity(half_d);
    while firsts.len() < half_d {
        let mut v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        // two passes keep the result orthogonal to machine precision
        project_out(&mut v, &basis);
        project_out(&mut v, &basis);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        let w = j_partner(&v);
        basis.push(v.clone());
        basis.push(w.clone());
        firsts.push(v);
        partners.push(w);
    }
    let mut s = ComplexMatrix::zeros(d, d);
    for j in 0..half_d {
        for i in 0..d {
            s[(i, j)] = firsts[j][i];
            s[(i, half_d + j)] = partners[j][i];
        }
    }
    Ok(s)
}

/// `J = [[0, I], [−I, 0]]` with `halfD × halfD` blocks.
pub fn canonical_j(half_d: usize) -> ComplexMatrix {
    let d = 2 * half_d;
    let mut j = ComplexMatrix::zeros(d, d);
    for i in 0..half_d {
        j[(i, half_d + i)] = C64::new(1.0, 0.0);
        j[(half_d + i, i)] = C64::new(-1.0, 0.0);
    }
    j
}

/// `iY ⊗ I^{⊗(ℓ−1)}`, with qubit 0 most significant.
pub fn j_for_qubits(ell: usize) -> Result<ComplexMatrix> {
    if ell == 0 {
        return Err(Error::Precondition("J needs at least one qubit".into()));
    }
    kron(&gates::i_y(), &ComplexMatrix::identity(1 << (ell - 1)))
}

/// `‖S J Sᵀ − J‖_max`.
pub fn symplectic_defect(s: &ComplexMatrix) -> f64 {
    if !s.is_square() || !s.rows().is_multiple_of(2) {
        return f64::INFINITY;
    }
    let j = canonical_j(s.rows() / 2);
    s.mul_unchecked(&j).mul_unchecked(&s.transpose()).max_abs_diff(&j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let a = sample_haar_unitary(4, &mut SeededStream::new(7, 0)).unwrap();
        let b = sample_haar_unitary(4, &mut SeededStream::new(7, 0)).unwrap();
        let c = sample_haar_unitary(4, &mut SeededStream::new(7, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn samples_satisfy_group_constraints() {
        let mut rng = SeededStream::new(3, 0);
        for d in [1, 2, 3, 8, 16] {
            let u = sample_haar_unitary(d, &mut rng).unwrap();
            assert!(u.unitarity_defect() < 1e-10);
            let o = sample_haar_orthogonal(d, &mut rng).unwrap();
            assert!(o.unitarity_defect() < 1e-10);
            assert!(o.is_real(0.0));
        }
        for h in [1, 2, 4, 8] {
            let s = sample_haar_symplectic(h, &mut rng).unwrap();
            assert!(s.unitarity_defect() < 1e-10);
            assert!(symplectic_defect(&s) < 1e-10);
        }
    }

    #[test]
    fn unitary_d1_is_a_phase() {
        let mut rng = SeededStream::new(11, 0);
        for _ in 0..50 {
            let u = sample_haar_unitary(1, &mut rng).unwrap();
            assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sp1_is_su2() {
        let mut rng = SeededStream::new(5, 0);
        for _ in 0..50 {
            let s = sample_haar_symplectic(1, &mut rng).unwrap();
            let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
            assert!((det - C64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(s.unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn canonical_j_properties() {
        let j1 = canonical_j(1);
        assert_eq!(j1, ComplexMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap());
        for h in [1, 2, 4] {
            let j = canonical_j(h);
            assert_eq!(j.transpose(), j.scale(C64::new(-1.0, 0.0)));
            assert_eq!(j.mul_unchecked(&j), ComplexMatrix::identity(2 * h).scale(C64::new(-1.0, 0.0)));
        }
        for ell in 1..=4 {
            assert_eq!(j_for_qubits(ell).unwrap(), canonical_j(1 << (ell - 1)));
        }
    }

    #[test]
    fn oversized_dimension_is_size_error() {
        let mut rng = SeededStream::new(0, 0);
        assert!(matches!(sample_haar_unitary(MAX_SAMPLE_DIM + 1, &mut rng), Err(Error::Size(_))));
    }
}
