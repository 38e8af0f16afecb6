//! Dense complex linear algebra for small quantum registers.
//!
//! Matrices are stored row-major. Pure states are normalized amplitude
//! vectors; density matrices are validated on construction (Hermitian,
//! unit trace, eigenvalues above a small negative floor).

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest number of entries any single matrix may hold.
pub const MAX_ENTRIES: usize = 1 << 24;
/// Largest register simulated as a state vector or density matrix.
pub const MAX_STATE_QUBITS: usize = 12;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_FLOOR: f64 = -1e-9;
pub const COMPLETENESS_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix dimensions must be positive".into()));
        }
        if rows.checked_mul(cols).is_none_or(|n| n > MAX_ENTRIES) {
            return Err(Error::Size(format!("{rows}x{cols} exceeds {MAX_ENTRIES} entries")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_parts(rows, cols, data)
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(self.mul_unchecked(rhs))
    }

    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        let mut out = vec![ZERO; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Self::from_parts(self.rows, rhs.cols, out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} for a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_parts(self.rows, self.cols, self.data.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_parts(self.rows, self.cols, self.data.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_parts(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - rhs`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖U U† − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.mul_unchecked(&self.adjoint()).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::Shape("eigenvalues need a square matrix".into()));
        }
        let h = self.add(&self.adjoint())?.scale(C64::new(0.5, 0.0));
        let mut ev: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Trace norm of a Hermitian matrix: the sum of absolute eigenvalues.
    pub fn trace_norm_hermitian(&self) -> Result<f64> {
        Ok(self.hermitian_eigenvalues()?.iter().map(|x| x.abs()).sum())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some_and(|n| n <= MAX_ENTRIES) => (r, c),
        _ => {
            return Err(Error::Size(format!(
                "kron of {}x{} and {}x{} exceeds {MAX_ENTRIES} entries",
                a.rows, a.cols, b.rows, b.cols
            )))
        }
    };
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        a[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)]
    }))
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(mats: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| Error::Shape("empty Kronecker product".into()))?;
    rest.iter().try_fold(first.clone(), |acc, m| kron(&acc, m))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Shape("empty state".into()));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amps })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize a zero vector".into()));
        }
        Ok(Self { amps: amps.into_iter().map(|z| z / norm).collect() })
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    /// `(1/√D) Σ_x |x⟩|x⟩` on two registers of dimension `dim`.
    pub fn maximally_entangled(dim: usize) -> Self {
        let mut amps = vec![ZERO; dim * dim];
        let w = 1.0 / (dim as f64).sqrt();
        for x in 0..dim {
            amps[x * dim + x] = C64::new(w, 0.0);
        }
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        Ok(Self { amps: u.apply(&self.amps)? })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    pub fn density(&self) -> DensityMatrix {
        let n = self.dim();
        DensityMatrix {
            m: ComplexMatrix::from_fn(n, n, |i, j| self.amps[i] * self.amps[j].conj()),
        }
    }

    /// Reduced density matrix on the factors listed in `keep`.
    pub fn reduced(&self, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
        let split = FactorSplit::new(dims, keep, self.dim())?;
        let k = split.kept_dim;
        let mut out = ComplexMatrix::zeros(k, k);
        for group in &split.groups {
            for (a, &ia) in group.iter().enumerate() {
                let za = self.amps[ia];
                if za == ZERO {
                    continue;
                }
                for (b, &ib) in group.iter().enumerate() {
                    out[(a, b)] += za * self.amps[ib].conj();
                }
            }
        }
        Ok(DensityMatrix { m: out })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("density matrix must be square".into()));
        }
        let herm = m.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::Validation(format!("trace {tr} is not 1")));
        }
        let min_ev = m.hermitian_eigenvalues()?[0];
        if min_ev < EIGEN_FLOOR {
            return Err(Error::Validation(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { m: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    /// `⟨y|ρ|y⟩`.
    pub fn expectation(&self, y: &PureState) -> f64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            let yi = y.amps[i].conj();
            if yi == ZERO {
                continue;
            }
            let row = self.m.row(i);
            acc += yi * row.iter().zip(&y.amps).map(|(a, b)| a * b).sum::<C64>();
        }
        acc.re
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        let m = u.matmul(&self.m)?.mul_unchecked(&u.adjoint());
        Ok(Self { m })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self { m: kron(&self.m, &other.m)? })
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.m.hermitian_eigenvalues().expect("square by construction")
    }
}

/// Partition of a multi-index space into kept and traced factors.
struct FactorSplit {
    kept_dim: usize,
    /// For each traced multi-index, the full indices ordered by kept multi-index.
    groups: Vec<Vec<usize>>,
}

impl FactorSplit {
    fn new(dims: &[usize], keep: &[usize], total: usize) -> Result<Self> {
        if dims.iter().product::<usize>() != total {
            return Err(Error::Shape(format!("factor dims {dims:?} do not multiply to {total}")));
        }
        if keep.iter().any(|&f| f >= dims.len()) {
            return Err(Error::Shape(format!("keep set {keep:?} out of range")));
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
        let kept_dim: usize = kept.iter().map(|&f| dims[f]).product();
        let traced_dim: usize = traced.iter().map(|&f| dims[f]).product();
        let mut groups = vec![vec![0usize; kept_dim]; traced_dim];
        let mut digits = vec![0usize; dims.len()];
        for full in 0..total {
            let mut rem = full;
            for f in (0..dims.len()).rev() {
                digits[f] = rem % dims[f];
                rem /= dims[f];
            }
            let a = kept.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
            let t = traced.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
            groups[t][a] = full;
        }
        Ok(Self { kept_dim, groups })
    }
}

/// Reduced density matrix on the factors in `keep`; factor 0 is most significant.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let split = FactorSplit::new(dims, keep, rho.dim())?;
    let k = split.kept_dim;
    let mut out = ComplexMatrix::zeros(k, k);
    for group in &split.groups {
        for (a, &ia) in group.iter().enumerate() {
            for (b, &ib) in group.iter().enumerate() {
                out[(a, b)] += rho.m[(ia, ib)];
            }
        }
    }
    Ok(DensityMatrix { m: out })
}

/// Borrowed view over either kind of state.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(s: &'a PureState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(s: &'a DensityMatrix) -> Self {
        StateRef::Mixed(s)
    }
}

impl StateRef<'_> {
    fn dim(&self) -> usize {
        match self {
            StateRef::Pure(p) => p.dim(),
            StateRef::Mixed(r) => r.dim(),
        }
    }

    fn overlap(&self, y: &PureState) -> f64 {
        match self {
            StateRef::Pure(p) => y.inner(p).norm_sqr(),
            StateRef::Mixed(r) => r.expectation(y),
        }
    }
}

/// Samples an index from non-negative weights summing to roughly one.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Projective measurement in an orthonormal basis.
pub fn born_measure<'a, R: Rng + ?Sized>(
    state: impl Into<StateRef<'a>>,
    basis: &[PureState],
    rng: &mut R,
) -> Result<(usize, PureState)> {
    let state = state.into();
    let d = state.dim();
    if basis.len() != d || basis.iter().any(|b| b.dim() != d) {
        return Err(Error::Validation(format!(
            "basis of {} vectors does not span dimension {d}",
            basis.len()
        )));
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let target = if i == j { ONE } else { ZERO };
            if (a.inner(b) - target).norm() > COMPLETENESS_TOL {
                return Err(Error::Validation(format!(
                    "basis vectors {i} and {j} are not orthonormal"
                )));
            }
        }
    }
    let probs: Vec<f64> = basis.iter().map(|b| state.overlap(b).max(0.0)).collect();
    let i = sample_index(&probs, rng);
    Ok((i, basis[i].clone()))
}

/// Rank-one POVM `{λ_i |y_i⟩⟨y_i|}` with `Σ λ_i |y_i⟩⟨y_i| = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<(f64, PureState)>,
}

impl Povm {
    pub fn new(elements: Vec<(f64, PureState)>) -> Result<Self> {
        let d = elements
            .first()
            .map(|(_, y)| y.dim())
            .ok_or_else(|| Error::Validation("empty POVM".into()))?;
        if elements.len() < d {
            return Err(Error::Validation(format!(
                "{} outcomes cannot resolve dimension {d}",
                elements.len()
            )));
        }
        let mut sum = ComplexMatrix::zeros(d, d);
        for (i, (lambda, y)) in elements.iter().enumerate() {
            if y.dim() != d {
                return Err(Error::Validation(format!("element {i} has wrong dimension")));
            }
            if !(*lambda > 0.0 && *lambda <= 1.0 + COMPLETENESS_TOL) {
                return Err(Error::Validation(format!("weight {lambda} outside (0, 1]")));
            }
            for r in 0..d {
                for c in 0..d {
                    sum[(r, c)] += y.amps[r] * y.amps[c].conj() * *lambda;
                }
            }
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if defect > COMPLETENESS_TOL {
            return Err(Error::Validation(format!("POVM incomplete (defect {defect:e})")));
        }
        Ok(Self { elements })
    }

    pub fn computational(dim: usize) -> Self {
        Self { elements: (0..dim).map(|i| (1.0, PureState::basis(dim, i))).collect() }
    }

    /// Projective measurement onto the columns of a unitary `y`.
    pub fn from_unitary(y: &ComplexMatrix) -> Result<Self> {
        if !y.is_square() || !y.is_unitary(1e-10) {
            return Err(Error::Validation("basis matrix is not unitary".into()));
        }
        let elements = (0..y.cols())
            .map(|j| Ok((1.0, PureState::normalized(y.column(j))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].1.dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[(f64, PureState)] {
        &self.elements
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.elements.iter().map(|(l, y)| (l * rho.expectation(y)).max(0.0)).collect()
    }
}

pub fn povm_measure<R: Rng + ?Sized>(rho: &DensityMatrix, povm: &Povm, rng: &mut R) -> Result<usize> {
    if rho.dim() != povm.dim() {
        return Err(Error::Shape(format!(
            "state of dimension {} measured with a POVM on {}",
            rho.dim(),
            povm.dim()
        )));
    }
    Ok(sample_index(&povm.probabilities(rho), rng))
}

/// Standard single-qubit gates.
pub mod gates {
    use super::{ComplexMatrix, C64};

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::new(
            2,
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap()
    }

    /// `iY = [[0, 1], [-1, 0]]`.
    pub fn i_y() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap()
    }
}
