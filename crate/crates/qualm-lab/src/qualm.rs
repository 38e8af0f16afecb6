//! Lab oracles, QUALM programs and their executors.
//!
//! A lab oracle keeps its hidden matrix (or state) as classical data and
//! exposes only its channel action on the lab register `L`. Coherent programs
//! run on a statevector over `L ⊗ W`; incoherent simple-measurement policies
//! run one preparation, one oracle call and one rank-one POVM per round.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{gates, sample_index, ComplexMatrix, DensityMatrix, Povm, PureState, MAX_STATE_QUBITS, C64};
use crate::perm::Factor;
use crate::sampling::{
    sample_haar_orthogonal, sample_haar_symplectic, sample_haar_unitary, SeededStream,
};
use crate::weingarten::Group;

/// Largest lab register, in qubits.
pub const MAX_LAB_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleKind {
    /// One Haar unitary, fixed at construction and applied on every call.
    Loq,
    /// A fresh Haar unitary on every call.
    Lop,
    /// Completely depolarizing channel on `L`.
    Lod,
    /// One fixed Haar element of the given group.
    FixedGroup(Group),
    /// Call `i` applies `U·R_i` for one Haar `U` and given rotations `R_i`.
    Correlated,
    /// Every call replaces `L` by one fixed Haar-random pure state.
    StateEnsemble,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Loq => "LOQ",
            OracleKind::Lop => "LOP",
            OracleKind::Lod => "LOD",
            OracleKind::FixedGroup(Group::Unitary) => "LO_U",
            OracleKind::FixedGroup(Group::Orthogonal) => "LO_O",
            OracleKind::FixedGroup(Group::Symplectic) => "LO_Sp",
            OracleKind::Correlated => "correlated",
            OracleKind::StateEnsemble => "state_ensemble",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "LOQ" => OracleKind::Loq,
            "LOP" => OracleKind::Lop,
            "LOD" => OracleKind::Lod,
            "LO_U" => OracleKind::FixedGroup(Group::Unitary),
            "LO_O" => OracleKind::FixedGroup(Group::Orthogonal),
            "LO_Sp" => OracleKind::FixedGroup(Group::Symplectic),
            "correlated" => OracleKind::Correlated,
            "state_ensemble" => OracleKind::StateEnsemble,
            _ => return Err(Error::Config(format!("unknown oracle kind {s:?}"))),
        })
    }
}

/// Extra construction data for oracle kinds that need it.
#[derive(Clone, Debug, Default)]
pub struct OracleOptions {
    /// Relative rotations `R_1, R_2, …` of a correlated ensemble; `R_1` is
    /// usually the identity. Calls past the end reuse the last rotation.
    pub rotations: Vec<ComplexMatrix>,
}

/// What the oracle does to `L` on one call.
#[derive(Clone, Debug)]
pub enum OracleAction {
    Unitary(ComplexMatrix),
    Depolarize,
    Replace(PureState),
}

#[derive(Clone, Debug)]
enum Hidden {
    Fixed(ComplexMatrix),
    Fresh,
    Depolarizing,
    Correlated { base: ComplexMatrix, rotations: Vec<ComplexMatrix> },
    State(PureState),
}

#[derive(Clone, Debug)]
pub struct LabOracle {
    kind: OracleKind,
    ell: usize,
    hidden: Hidden,
    calls: usize,
    rng: SeededStream,
}

/// Builds an oracle whose hidden data is drawn from `SeededStream::new(seed, 0)`.
pub fn make_oracle(kind: OracleKind, ell: usize, seed: u64, options: &OracleOptions) -> Result<LabOracle> {
    if ell == 0 {
        return Err(Error::Precondition("the lab register needs at least one qubit".into()));
    }
    if ell > MAX_LAB_QUBITS {
        return Err(Error::Size(format!("ell = {ell} exceeds {MAX_LAB_QUBITS}")));
    }
    let d = 1usize << ell;
    let mut rng = SeededStream::new(seed, 0);
    let hidden = match kind {
        OracleKind::Loq | OracleKind::FixedGroup(Group::Unitary) => {
            Hidden::Fixed(sample_haar_unitary(d, &mut rng)?)
        }
        OracleKind::FixedGroup(Group::Orthogonal) => Hidden::Fixed(sample_haar_orthogonal(d, &mut rng)?),
        OracleKind::FixedGroup(Group::Symplectic) => Hidden::Fixed(sample_haar_symplectic(d / 2, &mut rng)?),
        OracleKind::Lop => Hidden::Fresh,
        OracleKind::Lod => Hidden::Depolarizing,
        OracleKind::Correlated => {
            if options.rotations.is_empty() {
                return Err(Error::Config("correlated oracle needs at least one rotation".into()));
            }
            for r in &options.rotations {
                if r.rows() != d || !r.is_unitary(1e-10) {
                    return Err(Error::Validation("rotations must be unitary on L".into()));
                }
            }
            Hidden::Correlated { base: sample_haar_unitary(d, &mut rng)?, rotations: options.rotations.clone() }
        }
        OracleKind::StateEnsemble => {
            let u = sample_haar_unitary(d, &mut rng)?;
            Hidden::State(PureState::new(u.column(0))?)
        }
    };
    Ok(LabOracle { kind, ell, hidden, calls: 0, rng })
}

impl LabOracle {
    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dim(&self) -> usize {
        1 << self.ell
    }

    /// Number of calls made so far.
    pub fn calls(&self) -> usize {
        self.calls
    }

    /// The stored matrix of a fixed-matrix oracle.
    pub fn hidden_matrix(&self) -> Option<&ComplexMatrix> {
        match &self.hidden {
            Hidden::Fixed(m) | Hidden::Correlated { base: m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn hidden_state(&self) -> Option<&PureState> {
        match &self.hidden {
            Hidden::State(s) => Some(s),
            _ => None,
        }
    }

    /// Test hook: replaces the stored matrix of a fixed-matrix oracle.
    pub fn force_hidden_matrix(&mut self, m: ComplexMatrix) -> Result<()> {
        if m.rows() != self.dim() || !m.is_unitary(1e-10) {
            return Err(Error::Validation("forced matrix must be unitary on L".into()));
        }
        match &mut self.hidden {
            Hidden::Fixed(slot) | Hidden::Correlated { base: slot, .. } => {
                *slot = m;
                Ok(())
            }
            _ => Err(Error::Precondition(format!("{} has no stored matrix", self.kind))),
        }
    }

    /// The channel for the next call; counts the call.
    pub fn next_action(&mut self) -> Result<OracleAction> {
        let index = self.calls;
        self.calls += 1;
        Ok(match &self.hidden {
            Hidden::Fixed(m) => OracleAction::Unitary(m.clone()),
            Hidden::Fresh => OracleAction::Unitary(sample_haar_unitary(self.dim(), &mut self.rng)?),
            Hidden::Depolarizing => OracleAction::Depolarize,
            Hidden::Correlated { base, rotations } => {
                let r = &rotations[index.min(rotations.len() - 1)];
                OracleAction::Unitary(base.mul_unchecked(r))
            }
            Hidden::State(s) => OracleAction::Replace(s.clone()),
        })
    }

    /// Applies one call to a state of `L`.
    pub fn oracle_call(&mut self, state: &DensityMatrix) -> Result<DensityMatrix> {
        if state.dim() != self.dim() {
            return Err(Error::Shape(format!("state dim {} but L has dim {}", state.dim(), self.dim())));
        }
        Ok(match self.next_action()? {
            OracleAction::Unitary(u) => state.evolve(&u)?,
            OracleAction::Depolarize => DensityMatrix::maximally_mixed(self.dim()),
            OracleAction::Replace(psi) => psi.density(),
        })
    }
}

/// One instruction of a QUALM program. Qubits `0..ℓ` are `L`, the rest `W`.
#[derive(Clone, Debug)]
pub enum Instruction {
    Gate { label: &'static str, targets: Vec<usize>, matrix: ComplexMatrix },
    OracleCall,
}

#[derive(Clone, Debug)]
pub struct QualmProgram {
    ell: usize,
    work: usize,
    instructions: Vec<Instruction>,
    s_in: Vec<usize>,
    s_out: Vec<usize>,
}

fn swap_matrix() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    m
}

fn cnot_matrix() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    m
}

fn fredkin_matrix() -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(8);
    m[(5, 5)] = C64::new(0.0, 0.0);
    m[(6, 6)] = C64::new(0.0, 0.0);
    m[(5, 6)] = C64::new(1.0, 0.0);
    m[(6, 5)] = C64::new(1.0, 0.0);
    m
}

impl QualmProgram {
    /// `s_in` and `s_out` index work qubits (`0` is the first qubit of `W`).
    pub fn new(ell: usize, work: usize, s_in: Vec<usize>, s_out: Vec<usize>) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Precondition("the lab register needs at least one qubit".into()));
        }
        if s_out.is_empty() {
            return Err(Error::Validation("s_out must be non-empty".into()));
        }
        if s_in.iter().chain(&s_out).any(|&q| q >= work) {
            return Err(Error::Validation("s_in and s_out must lie in W".into()));
        }
        Ok(Self { ell, work, instructions: Vec::new(), s_in, s_out })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn work_qubits(&self) -> usize {
        self.work
    }

    pub fn total_qubits(&self) -> usize {
        self.ell + self.work
    }

    /// Global index of work qubit `i`.
    pub fn w(&self, i: usize) -> usize {
        self.ell + i
    }

    pub fn s_in(&self) -> &[usize] {
        &self.s_in
    }

    pub fn s_out(&self) -> &[usize] {
        &self.s_out
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn query_complexity(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::OracleCall)).count()
    }

    pub fn gate_complexity(&self) -> usize {
        self.instructions.len() - self.query_complexity()
    }

    pub fn gate(&mut self, label: &'static str, targets: Vec<usize>, matrix: ComplexMatrix) -> Result<&mut Self> {
        let n = self.total_qubits();
        let mut sorted = targets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != targets.len() || targets.iter().any(|&q| q >= n) || targets.is_empty() {
            return Err(Error::Validation(format!("bad gate targets {targets:?} on {n} qubits")));
        }
        if matrix.rows() != 1 << targets.len() || !matrix.is_square() {
            return Err(Error::Shape(format!("{label} matrix does not match {} targets", targets.len())));
        }
        self.instructions.push(Instruction::Gate { label, targets, matrix });
        Ok(self)
    }

    pub fn oracle(&mut self) -> &mut Self {
        self.instructions.push(Instruction::OracleCall);
        self
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.gate("H", vec![q], gates::hadamard())
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.gate("X", vec![q], gates::pauli_x())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.gate("CNOT", vec![control, target], cnot_matrix())
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.gate("SWAP", vec![a, b], swap_matrix())
    }

    pub fn cswap(&mut self, control: usize, a: usize, b: usize) -> Result<&mut Self> {
        self.gate("CSWAP", vec![control, a, b], fredkin_matrix())
    }

    /// Qubit-wise swap of two equal-length registers.
    pub fn swap_registers(&mut self, a: &[usize], b: &[usize]) -> Result<&mut Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("registers differ in length".into()));
        }
        for (&x, &y) in a.iter().zip(b) {
            self.swap(x, y)?;
        }
        Ok(self)
    }

    /// Controlled qubit-wise swap of two equal-length registers.
    pub fn cswap_registers(&mut self, control: usize, a: &[usize], b: &[usize]) -> Result<&mut Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("registers differ in length".into()));
        }
        for (&x, &y) in a.iter().zip(b) {
            self.cswap(control, x, y)?;
        }
        Ok(self)
    }

    /// `(1/√D) Σ_x |x⟩_a |x⟩_b` from `|0…0⟩` with Hadamards and CNOTs.
    pub fn entangle_registers(&mut self, a: &[usize], b: &[usize]) -> Result<&mut Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("registers differ in length".into()));
        }
        for (&x, &y) in a.iter().zip(b) {
            self.h(x)?;
            self.cnot(x, y)?;
        }
        Ok(self)
    }
}

/// Applies a gate on `targets` of an `n`-qubit statevector (qubit 0 most significant).
pub(crate) fn apply_gate(state: &mut [C64], n: usize, targets: &[usize], m: &ComplexMatrix) {
    let t = targets.len();
    let masks: Vec<usize> = targets.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..1usize << t)
        .map(|j| (0..t).filter(|&b| j >> (t - 1 - b) & 1 == 1).map(|b| masks[b]).sum())
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); 1 << t];
    for base in 0..state.len() {
        if base & all != 0 {
            continue;
        }
        for (slot, &o) in buf.iter_mut().zip(&offsets) {
            *slot = state[base + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            state[base + o] = m.row(r).iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// Result of one coherent run.
#[derive(Clone, Debug)]
pub struct CoherentRun {
    /// Sampled computational-basis outcome on `s_out`, in `s_out` order.
    pub bits: Vec<bool>,
    /// Exact distribution of the `s_out` readout on the final state.
    pub probabilities: Vec<f64>,
    /// Reduced density matrix on `s_out`.
    pub output: DensityMatrix,
}

/// Runs `program` from `|0⟩_L |input⟩_W`, where `input` sets the `s_in` qubits.
///
/// Non-unitary oracle actions are unraveled stochastically: depolarization
/// applies a uniformly random Pauli string to `L`, and state replacement
/// measures `L` and resets it. The reported distribution and output state
/// belong to the sampled trajectory.
pub fn execute_coherent<R: Rng + ?Sized>(
    program: &QualmProgram,
    oracle: &mut LabOracle,
    input: &[bool],
    rng: &mut R,
) -> Result<CoherentRun> {
    if input.len() != program.s_in.len() {
        return Err(Error::Shape(format!("{} input bits for {} input qubits", input.len(), program.s_in.len())));
    }
    let n = program.total_qubits();
    if n > MAX_STATE_QUBITS {
        return Err(Error::Size(format!("{n} qubits exceed {MAX_STATE_QUBITS}")));
    }
    let mut index = 0usize;
    for (&q, &bit) in program.s_in.iter().zip(input) {
        if bit {
            index |= 1 << (n - 1 - program.w(q));
        }
    }
    execute_coherent_from(program, oracle, PureState::basis(1 << n, index), rng)
}

/// Runs `program` from an arbitrary initial statevector on `L ⊗ W`.
pub fn execute_coherent_from<R: Rng + ?Sized>(
    program: &QualmProgram,
    oracle: &mut LabOracle,
    initial: PureState,
    rng: &mut R,
) -> Result<CoherentRun> {
    let n = program.total_qubits();
    if n > MAX_STATE_QUBITS {
        return Err(Error::Size(format!("{n} qubits exceed {MAX_STATE_QUBITS}")));
    }
    if initial.dim() != 1 << n {
        return Err(Error::Shape(format!("initial state dim {} for {n} qubits", initial.dim())));
    }
    if oracle.ell() != program.ell {
        return Err(Error::Shape(format!("oracle acts on {} qubits, program expects {}", oracle.ell(), program.ell)));
    }
    let mut amps = initial.amplitudes().to_vec();
    let lab: Vec<usize> = (0..program.ell).collect();
    for inst in &program.instructions {
        match inst {
            Instruction::Gate { targets, matrix, .. } => apply_gate(&mut amps, n, targets, matrix),
            Instruction::OracleCall => match oracle.next_action()? {
                OracleAction::Unitary(u) => apply_gate(&mut amps, n, &lab, &u),
                OracleAction::Depolarize => {
                    let paulis = [gates::pauli_x(), gates::pauli_y(), gates::pauli_z()];
                    for &q in &lab {
                        let p = rng.random_range(0..4usize);
                        if p > 0 {
                            apply_gate(&mut amps, n, &[q], &paulis[p - 1]);
                        }
                    }
                }
                OracleAction::Replace(psi) => {
                    let rest = 1usize << (n - program.ell);
                    let probs: Vec<f64> = (0..1usize << program.ell)
                        .map(|x| amps[x * rest..(x + 1) * rest].iter().map(|a| a.norm_sqr()).sum())
                        .collect();
                    let x = sample_index(&probs, rng);
                    let norm = probs[x].sqrt();
                    let tail: Vec<C64> = amps[x * rest..(x + 1) * rest].iter().map(|a| a / norm).collect();
                    for (i, &a) in psi.amplitudes().iter().enumerate() {
                        for (j, &b) in tail.iter().enumerate() {
                            amps[i * rest + j] = a * b;
                        }
                    }
                }
            },
        }
    }
    let keep: Vec<usize> = program.s_out.iter().map(|&q| program.w(q)).collect();
    let final_state = PureState::new(amps)?;
    let dims = vec![2usize; n];
    let mut order = keep.clone();
    order.sort_unstable();
    let sorted = final_state.reduced(&dims, &order)?;
    // reorder to s_out order when it differs from ascending order
    let output = if order == keep {
        sorted
    } else {
        let m = keep.len();
        let pos: Vec<usize> = keep.iter().map(|q| order.iter().position(|o| o == q).unwrap()).collect();
        let remap = |x: usize| -> usize {
            (0..m).fold(0, |acc, b| acc | (((x >> (m - 1 - b)) & 1) << (m - 1 - pos[b])))
        };
        let src = sorted.matrix();
        DensityMatrix::new(ComplexMatrix::from_fn(1 << m, 1 << m, |r, c| src[(remap(r), remap(c))]))?
    };
    let probabilities: Vec<f64> = (0..output.dim()).map(|i| output.matrix()[(i, i)].re.max(0.0)).collect();
    let outcome = sample_index(&probabilities, rng);
    let m = keep.len();
    let bits = (0..m).map(|b| (outcome >> (m - 1 - b)) & 1 == 1).collect();
    Ok(CoherentRun { bits, probabilities, output })
}

/// A preparation of `L`.
#[derive(Clone, Debug, PartialEq)]
pub enum Prep {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl Prep {
    pub fn dim(&self) -> usize {
        match self {
            Prep::Pure(p) => p.dim(),
            Prep::Mixed(m) => m.dim(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            Prep::Pure(p) => p.density(),
            Prep::Mixed(m) => m.clone(),
        }
    }

    /// `R σ R†`.
    pub fn rotated(&self, r: &ComplexMatrix) -> Result<Prep> {
        Ok(match self {
            Prep::Pure(p) => Prep::Pure(p.evolve(r)?),
            Prep::Mixed(m) => Prep::Mixed(m.evolve(r)?),
        })
    }

    /// `⟨y|σ|y⟩`.
    pub fn expectation(&self, y: &PureState) -> f64 {
        match self {
            Prep::Pure(p) => p.inner(y).norm_sqr(),
            Prep::Mixed(m) => m.expectation(y),
        }
    }

    pub fn factor(&self) -> Factor {
        match self {
            Prep::Pure(p) => Factor::projector(1.0, p.amplitudes()),
            Prep::Mixed(m) => Factor::Dense(m.matrix().clone()),
        }
    }

    fn after(&self, action: OracleAction) -> Result<Prep> {
        Ok(match action {
            OracleAction::Unitary(u) => self.rotated(&u)?,
            OracleAction::Depolarize => Prep::Mixed(DensityMatrix::maximally_mixed(self.dim())),
            OracleAction::Replace(psi) => Prep::Pure(psi),
        })
    }
}

/// A simple-measurement strategy: per round, a preparation and a rank-one
/// POVM, each chosen from the outcome history `(s_0, …, s_{i−1})`.
///
/// Round 0 measures `|0…0⟩` with `povm_for(&[])`; round `i ≥ 1` prepares
/// `prepare_for(history)`, calls the oracle once and measures with
/// `povm_for(history)`.
pub trait SmPolicy: Send + Sync {
    fn dim(&self) -> usize;
    fn rounds(&self) -> usize;
    fn povm_for(&self, history: &[usize]) -> Result<Cow<'_, Povm>>;
    fn prepare_for(&self, history: &[usize]) -> Result<Cow<'_, Prep>>;
}

/// The same preparation and POVM in every round.
#[derive(Clone, Debug)]
pub struct FixedPolicy {
    rounds: usize,
    prep: Prep,
    povm: Povm,
}

impl FixedPolicy {
    pub fn new(rounds: usize, prep: Prep, povm: Povm) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::Precondition("a policy needs at least one round".into()));
        }
        if prep.dim() != povm.dim() {
            return Err(Error::Shape("preparation and POVM dimensions differ".into()));
        }
        Ok(Self { rounds, prep, povm })
    }

    pub fn prep(&self) -> &Prep {
        &self.prep
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }
}

impl SmPolicy for FixedPolicy {
    fn dim(&self) -> usize {
        self.povm.dim()
    }
    fn rounds(&self) -> usize {
        self.rounds
    }
    fn povm_for(&self, _history: &[usize]) -> Result<Cow<'_, Povm>> {
        Ok(Cow::Borrowed(&self.povm))
    }
    fn prepare_for(&self, _history: &[usize]) -> Result<Cow<'_, Prep>> {
        Ok(Cow::Borrowed(&self.prep))
    }
}

/// Adaptive policy that re-prepares the last observed basis state and
/// measures in the computational basis.
#[derive(Clone, Debug)]
pub struct EchoPolicy {
    rounds: usize,
    povm: Povm,
    basis: Vec<Prep>,
}

impl EchoPolicy {
    pub fn new(ell: usize, rounds: usize) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::Precondition("a policy needs at least one round".into()));
        }
        let d = 1usize << ell;
        Ok(Self {
            rounds,
            povm: Povm::computational(d),
            basis: (0..d).map(|x| Prep::Pure(PureState::basis(d, x))).collect(),
        })
    }
}

impl SmPolicy for EchoPolicy {
    fn dim(&self) -> usize {
        self.povm.dim()
    }
    fn rounds(&self) -> usize {
        self.rounds
    }
    fn povm_for(&self, _history: &[usize]) -> Result<Cow<'_, Povm>> {
        Ok(Cow::Borrowed(&self.povm))
    }
    fn prepare_for(&self, history: &[usize]) -> Result<Cow<'_, Prep>> {
        let last = *history.last().ok_or_else(|| Error::Precondition("empty history".into()))?;
        Ok(Cow::Borrowed(&self.basis[last]))
    }
}

type PovmFn = dyn Fn(&[usize]) -> Result<Povm> + Send + Sync;
type PrepFn = dyn Fn(&[usize]) -> Result<Prep> + Send + Sync;

/// A policy given by two history functions.
pub struct FnPolicy {
    dim: usize,
    rounds: usize,
    povm: Box<PovmFn>,
    prep: Box<PrepFn>,
}

impl FnPolicy {
    pub fn new(
        dim: usize,
        rounds: usize,
        povm: impl Fn(&[usize]) -> Result<Povm> + Send + Sync + 'static,
        prep: impl Fn(&[usize]) -> Result<Prep> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, rounds, povm: Box::new(povm), prep: Box::new(prep) }
    }
}

impl SmPolicy for FnPolicy {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rounds(&self) -> usize {
        self.rounds
    }
    fn povm_for(&self, history: &[usize]) -> Result<Cow<'_, Povm>> {
        let p = (self.povm)(history)?;
        if p.dim() != self.dim {
            return Err(Error::Shape("POVM dimension differs from the policy".into()));
        }
        Ok(Cow::Owned(p))
    }
    fn prepare_for(&self, history: &[usize]) -> Result<Cow<'_, Prep>> {
        let p = (self.prep)(history)?;
        if p.dim() != self.dim {
            return Err(Error::Shape("preparation dimension differs from the policy".into()));
        }
        Ok(Cow::Owned(p))
    }
}

/// `λ_s ⟨y_s|σ|y_s⟩` for every element of `povm`.
pub(crate) fn povm_probabilities(povm: &Povm, state: &Prep) -> Vec<f64> {
    povm.elements().iter().map(|(l, y)| (l * state.expectation(y)).max(0.0)).collect()
}

/// Runs a simple-measurement policy against an oracle; returns `(s_0, …, s_k)`.
pub fn execute_sm<R: Rng + ?Sized>(
    policy: &dyn SmPolicy,
    oracle: &mut LabOracle,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if policy.rounds() == 0 {
        return Err(Error::Precondition("a policy needs at least one round".into()));
    }
    if policy.dim() != oracle.dim() {
        return Err(Error::Shape("policy and oracle dimensions differ".into()));
    }
    let zero = Prep::Pure(PureState::basis(policy.dim(), 0));
    let mut history = Vec::with_capacity(policy.rounds() + 1);
    let p0 = povm_probabilities(&*policy.povm_for(&history)?, &zero);
    history.push(sample_index(&p0, rng));
    for _ in 0..policy.rounds() {
        let prep = policy.prepare_for(&history)?;
        let state = prep.after(oracle.next_action()?)?;
        let probs = povm_probabilities(&*policy.povm_for(&history)?, &state);
        history.push(sample_index(&probs, rng));
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_gate_matches_kron() {
        // X on qubit 1 of 3 maps |000⟩ to |010⟩
        let mut s = vec![C64::new(0.0, 0.0); 8];
        s[0] = C64::new(1.0, 0.0);
        apply_gate(&mut s, 3, &[1], &gates::pauli_x());
        assert_eq!(s[2], C64::new(1.0, 0.0));
        // CNOT(0 → 2) on |100⟩ gives |101⟩
        let mut s = vec![C64::new(0.0, 0.0); 8];
        s[4] = C64::new(1.0, 0.0);
        apply_gate(&mut s, 3, &[0, 2], &cnot_matrix());
        assert_eq!(s[5], C64::new(1.0, 0.0));
        // reversed target order acts as CNOT(2 → 0)
        let mut s = vec![C64::new(0.0, 0.0); 8];
        s[1] = C64::new(1.0, 0.0);
        apply_gate(&mut s, 3, &[2, 0], &cnot_matrix());
        assert_eq!(s[5], C64::new(1.0, 0.0));
    }

    #[test]
    fn loq_applies_the_same_matrix() {
        let mut o = make_oracle(OracleKind::Loq, 2, 9, &OracleOptions::default()).unwrap();
        let rho = PureState::basis(4, 0).density();
        let a = o.oracle_call(&rho).unwrap();
        let b = o.oracle_call(&rho).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
        assert_eq!(o.calls(), 2);
    }

    #[test]
    fn lod_outputs_maximally_mixed() {
        let mut o = make_oracle(OracleKind::Lod, 3, 1, &OracleOptions::default()).unwrap();
        let out = o.oracle_call(&PureState::basis(8, 5).density()).unwrap();
        assert_eq!(out, DensityMatrix::maximally_mixed(8));
    }

    #[test]
    fn group_oracles_have_group_structure() {
        let o = make_oracle(OracleKind::FixedGroup(Group::Orthogonal), 3, 4, &OracleOptions::default()).unwrap();
        assert!(o.hidden_matrix().unwrap().is_real(1e-10));
        let s = make_oracle(OracleKind::FixedGroup(Group::Symplectic), 3, 4, &OracleOptions::default()).unwrap();
        let m = s.hidden_matrix().unwrap();
        let j = crate::sampling::j_for_qubits(3).unwrap();
        let lhs = j.mul_unchecked(&m.transpose()).mul_unchecked(&j).scale(C64::new(-1.0, 0.0));
        assert!(lhs.max_abs_diff(&m.adjoint()) < 1e-10);
    }

    #[test]
    fn forced_identity_gives_all_zero_transcript() {
        let mut o = make_oracle(OracleKind::Loq, 2, 3, &OracleOptions::default()).unwrap();
        o.force_hidden_matrix(ComplexMatrix::identity(4)).unwrap();
        let policy = FixedPolicy::new(2, Prep::Pure(PureState::basis(4, 0)), Povm::computational(4)).unwrap();
        let mut rng = SeededStream::new(0, 0);
        for _ in 0..20 {
            assert_eq!(execute_sm(&policy, &mut o, &mut rng).unwrap(), vec![0, 0, 0]);
        }
        assert_eq!(o.calls(), 40);
    }

    #[test]
    fn empty_program_reads_zero() {
        let p = QualmProgram::new(1, 1, vec![], vec![0]).unwrap();
        let mut o = make_oracle(OracleKind::Lod, 1, 0, &OracleOptions::default()).unwrap();
        let run = execute_coherent(&p, &mut o, &[], &mut SeededStream::new(1, 0)).unwrap();
        assert_eq!(run.bits, vec![false]);
        assert_eq!(run.probabilities, vec![1.0, 0.0]);
        assert_eq!(o.calls(), 0);
    }

    #[test]
    fn input_bits_are_loaded() {
        let p = QualmProgram::new(1, 2, vec![1], vec![1, 0]).unwrap();
        let mut o = make_oracle(OracleKind::Lod, 1, 0, &OracleOptions::default()).unwrap();
        let run = execute_coherent(&p, &mut o, &[true], &mut SeededStream::new(1, 0)).unwrap();
        assert_eq!(run.bits, vec![true, false]);
    }

    #[test]
    fn unknown_kind_is_config_error() {
        assert!(matches!("LOX".parse::<OracleKind>(), Err(Error::Config(_))));
    }
}
