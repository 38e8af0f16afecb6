//! Ready-made distinguishers: the SWAP test for fixed versus fresh unitaries,
//! the two-stage symmetry test for U/O/Sp, the parallel-repetition
//! incoherent baseline and majority-vote amplification.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{gates, ComplexMatrix, Povm, PureState, C64};
use crate::qualm::{
    execute_coherent, FixedPolicy, LabOracle, OracleAction, Prep, QualmProgram, MAX_LAB_QUBITS,
};
use crate::sampling::{derive_seed, SeededStream};
use crate::weingarten::Group;

/// Repetitions per stage used by the command-line distinguishers.
pub const DEFAULT_REPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictLabel {
    Loq,
    Lop,
    Class(Group),
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictLabel::Loq => f.write_str("LOQ"),
            VerdictLabel::Lop => f.write_str("LOP"),
            VerdictLabel::Class(g) => write!(f, "{g}"),
        }
    }
}

/// Outcome of a distinguisher. `raw_outcomes` holds the measured readout bit
/// of every repetition in execution order (`false` is outcome 0, i.e. `+`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinguisherVerdict {
    pub label: VerdictLabel,
    pub raw_outcomes: Vec<bool>,
    pub repetitions: usize,
}

fn check_ell(ell: usize) -> Result<()> {
    if ell == 0 || ell > MAX_LAB_QUBITS {
        return Err(Error::Precondition(format!("ell = {ell} outside 1..={MAX_LAB_QUBITS}")));
    }
    Ok(())
}

fn register(start: usize, len: usize) -> Vec<usize> {
    (start..start + len).collect()
}

/// SWAP test between two registers: H on `control`, controlled swaps, H.
/// Outcome 0 has probability `(1 + |⟨a|b⟩|²)/2`.
fn swap_test(p: &mut QualmProgram, control: usize, a: &[usize], b: &[usize]) -> Result<()> {
    p.h(control)?;
    p.cswap_registers(control, a, b)?;
    p.h(control)?;
    Ok(())
}

/// Two-query SWAP test: call, move `L` into `W_1`, call again, then compare
/// `L` against `W_1`. Work layout: `W_1` (ℓ qubits), control.
pub fn swap_test_program(ell: usize) -> Result<QualmProgram> {
    check_ell(ell)?;
    let mut p = QualmProgram::new(ell, ell + 1, vec![], vec![ell])?;
    let lab = register(0, ell);
    let w1 = register(ell, ell);
    let control = p.w(ell);
    p.oracle();
    p.swap_registers(&lab, &w1)?;
    p.oracle();
    swap_test(&mut p, control, &lab, &w1)?;
    Ok(p)
}

/// Variant that starts from maximally entangled pairs: `(L, W_1)` and
/// `(W_2, W_3)`. After the first call `L` is parked in `W_2`, so the test
/// compares `(U_1 ⊗ I)Φ` against `(U_2 ⊗ I)Φ`; outcome 0 has probability
/// `(1 + |tr(U_1†U_2)/D|²)/2`. Work layout: `W_1, W_2, W_3`, control.
pub fn swap_test_program_entangled(ell: usize) -> Result<QualmProgram> {
    check_ell(ell)?;
    let mut p = QualmProgram::new(ell, 3 * ell + 1, vec![], vec![3 * ell])?;
    let lab = register(0, ell);
    let w1 = register(ell, ell);
    let w2 = register(2 * ell, ell);
    let w3 = register(3 * ell, ell);
    let control = p.w(3 * ell);
    p.entangle_registers(&lab, &w1)?;
    p.entangle_registers(&w2, &w3)?;
    p.oracle();
    p.swap_registers(&lab, &w2)?;
    p.oracle();
    let first: Vec<usize> = w2.iter().chain(&w1).copied().collect();
    let second: Vec<usize> = lab.iter().chain(&w3).copied().collect();
    swap_test(&mut p, control, &first, &second)?;
    Ok(p)
}

/// Readout stage alone, comparing `L` against `W_1`; no oracle calls. Feed a
/// product state through `execute_coherent_from` to test the readout.
pub fn swap_test_readout(ell: usize) -> Result<QualmProgram> {
    check_ell(ell)?;
    let mut p = QualmProgram::new(ell, ell + 1, vec![], vec![ell])?;
    let control = p.w(ell);
    swap_test(&mut p, control, &register(0, ell), &register(ell, ell))?;
    Ok(p)
}

/// Distinguishes a fixed unitary (LOQ) from fresh unitaries (LOP) with `reps`
/// SWAP tests; any outcome 1 means LOP.
pub fn swap_distinguish<R: Rng + ?Sized>(
    program: &QualmProgram,
    oracle: &mut LabOracle,
    reps: usize,
    rng: &mut R,
) -> Result<DistinguisherVerdict> {
    if reps == 0 {
        return Err(Error::Precondition("reps must be at least 1".into()));
    }
    let mut raw = Vec::with_capacity(reps);
    for _ in 0..reps {
        raw.push(execute_coherent(program, oracle, &[], rng)?.bits[0]);
    }
    Ok(DistinguisherVerdict { label: swap_rule(&raw), raw_outcomes: raw, repetitions: reps })
}

pub fn swap_rule(raw: &[bool]) -> VerdictLabel {
    if raw.iter().any(|&b| b) {
        VerdictLabel::Lop
    } else {
        VerdictLabel::Loq
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryStage {
    /// Estimates `|tr(A Aᵀ)/D|²`; certain `+` for orthogonal `A`.
    Transpose,
    /// Estimates `|tr(A (−J Aᵀ J))/D|²`; certain `+` for symplectic `A`.
    TimeReversal,
}

/// One stage of the symmetry test on `3ℓ + 1` work qubits `W_1, W_2, W_3`,
/// control. `(L, W_1)` and `(W_2, W_3)` start as maximally entangled pairs;
/// the calls use `Σ_x |x⟩ ⊗ A|x⟩ = Σ_x Aᵀ|x⟩ ⊗ |x⟩` to put `AAᵀ` (or its
/// `J`-conjugated form) on `(L, W_1)`, and a SWAP test compares the pairs.
/// Outcome 0 is the `+` result.
pub fn symmetry_program(ell: usize, stage: SymmetryStage) -> Result<QualmProgram> {
    check_ell(ell)?;
    let mut p = QualmProgram::new(ell, 3 * ell + 1, vec![], vec![3 * ell])?;
    let lab = register(0, ell);
    let w1 = register(ell, ell);
    let pair_b: Vec<usize> = register(2 * ell, 2 * ell);
    let control = p.w(3 * ell);
    p.entangle_registers(&lab, &w1)?;
    p.entangle_registers(&pair_b[..ell], &pair_b[ell..])?;
    p.oracle();
    if stage == SymmetryStage::TimeReversal {
        p.gate("J", vec![0], gates::i_y())?;
    }
    p.swap_registers(&lab, &w1)?;
    if stage == SymmetryStage::TimeReversal {
        p.gate("J", vec![0], gates::i_y())?;
    }
    p.oracle();
    let first: Vec<usize> = lab.iter().chain(&w1).copied().collect();
    swap_test(&mut p, control, &first, &pair_b)?;
    Ok(p)
}

pub fn symmetry_program_stage1(ell: usize) -> Result<QualmProgram> {
    symmetry_program(ell, SymmetryStage::Transpose)
}

pub fn symmetry_program_stage2(ell: usize) -> Result<QualmProgram> {
    symmetry_program(ell, SymmetryStage::TimeReversal)
}

/// Probability of `+` for one run of a symmetry stage, consuming two oracle
/// calls. Tracks the `(L, W_1)` pair as a `D × D` matrix `Ψ` with
/// `|ψ⟩ = Σ Ψ_{xy} |x⟩|y⟩`, which is exact because the other pair is never
/// touched before the readout. Needs unitary oracle actions.
pub fn symmetry_plus_probability(oracle: &mut LabOracle, stage: SymmetryStage) -> Result<f64> {
    let d = oracle.dim();
    let mut next = || match oracle.next_action()? {
        OracleAction::Unitary(u) => Ok(u),
        _ => Err(Error::Precondition("the bipartite evaluation needs a unitary oracle".into())),
    };
    let a1 = next()?;
    let a2 = next()?;
    let j = crate::sampling::j_for_qubits(oracle.ell())?;
    // Ψ = I/√D throughout; the 1/D is applied to the trace at the end
    let m = match stage {
        SymmetryStage::Transpose => a2.matmul(&a1.transpose())?,
        SymmetryStage::TimeReversal => {
            // oracle, J, swap (transpose), J, oracle
            a2.matmul(&j.matmul(&j.matmul(&a1)?.transpose())?)?
        }
    };
    let overlap = (m.trace() / d as f64).norm_sqr();
    Ok(((1.0 + overlap) / 2.0).min(1.0))
}

/// Runs one stage once; returns the readout bit (`false` is `+`).
pub fn run_symmetry_stage<R: Rng + ?Sized>(oracle: &mut LabOracle, stage: SymmetryStage, rng: &mut R) -> Result<bool> {
    let p = symmetry_plus_probability(oracle, stage)?;
    Ok(rng.random::<f64>() >= p)
}

/// Stage 1 `reps` times; all `+` means O. Otherwise stage 2 `reps` times; all
/// `+` means Sp. Otherwise U.
pub fn symmetry_distinguish<R: Rng + ?Sized>(
    oracle: &mut LabOracle,
    reps: usize,
    rng: &mut R,
) -> Result<DistinguisherVerdict> {
    if reps == 0 {
        return Err(Error::Precondition("reps must be at least 1".into()));
    }
    let mut raw = Vec::with_capacity(2 * reps);
    for _ in 0..reps {
        raw.push(run_symmetry_stage(oracle, SymmetryStage::Transpose, rng)?);
    }
    if raw.iter().any(|&b| b) {
        for _ in 0..reps {
            raw.push(run_symmetry_stage(oracle, SymmetryStage::TimeReversal, rng)?);
        }
    }
    Ok(DistinguisherVerdict { label: symmetry_rule(&raw, reps)?, raw_outcomes: raw, repetitions: reps })
}

/// The symmetry decision rule on raw outcomes (stage 1 first, then stage 2).
pub fn symmetry_rule(raw: &[bool], reps: usize) -> Result<VerdictLabel> {
    let (stage1, stage2) = raw.split_at(reps.min(raw.len()));
    if stage1.len() != reps || !(stage2.is_empty() || stage2.len() == reps) {
        return Err(Error::Shape(format!("{} outcomes for {reps} repetitions", raw.len())));
    }
    Ok(if !stage1.iter().any(|&b| b) {
        VerdictLabel::Class(Group::Orthogonal)
    } else if stage2.is_empty() {
        return Err(Error::Shape("stage 2 outcomes missing".into()));
    } else if !stage2.iter().any(|&b| b) {
        VerdictLabel::Class(Group::Symplectic)
    } else {
        VerdictLabel::Class(Group::Unitary)
    })
}

/// Non-adaptive baseline: every round prepares `V|0⟩` and measures in the
/// basis given by the columns of `Y`.
pub fn parallel_sm_policy(ell: usize, k: usize, y: &ComplexMatrix, v: &ComplexMatrix) -> Result<FixedPolicy> {
    check_ell(ell)?;
    let d = 1usize << ell;
    if y.rows() != d || v.rows() != d {
        return Err(Error::Shape(format!("Y and V must be {d}×{d}")));
    }
    if !v.is_unitary(1e-10) {
        return Err(Error::Validation("V is not unitary".into()));
    }
    let prep = Prep::Pure(PureState::new(v.column(0))?);
    FixedPolicy::new(k, prep, Povm::from_unitary(y)?)
}

/// Majority vote over `m` independent runs. Run `i` receives the seed
/// `derive_seed(base, i)` for a base seed drawn from `rng`; ties between
/// labels go to the label reached first. Raw outcomes are concatenated.
pub fn amplify<F, R>(distinguisher: F, m: usize, rng: &mut R) -> Result<DistinguisherVerdict>
where
    F: Fn(u64) -> Result<DistinguisherVerdict>,
    R: Rng + ?Sized,
{
    if m.is_multiple_of(2) {
        return Err(Error::Precondition(format!("m = {m} must be odd")));
    }
    let base: u64 = rng.random();
    let mut counts: Vec<(VerdictLabel, usize)> = Vec::new();
    let mut raw = Vec::new();
    let mut repetitions = 0;
    for i in 0..m {
        let v = distinguisher(derive_seed(base, i as u64))?;
        raw.extend_from_slice(&v.raw_outcomes);
        repetitions += v.repetitions;
        match counts.iter_mut().find(|(l, _)| *l == v.label) {
            Some((_, c)) => *c += 1,
            None => counts.push((v.label, 1)),
        }
    }
    let best = counts.iter().map(|&(_, c)| c).max().unwrap_or(0);
    let label = counts.iter().find(|&&(_, c)| c == best).map(|&(l, _)| l).expect("m ≥ 1");
    Ok(DistinguisherVerdict { label, raw_outcomes: raw, repetitions })
}

/// Exact `Pr[0]` of the `|0⟩` SWAP test against the oracle's next two calls.
pub fn swap_test_zero_probability(program: &QualmProgram, oracle: &mut LabOracle, seed: u64) -> Result<f64> {
    let mut rng = SeededStream::new(seed, 0);
    Ok(execute_coherent(program, oracle, &[], &mut rng)?.probabilities[0])
}

/// `(1 + |tr(M)/D|²)/2` for a `D × D` matrix.
pub fn plus_probability_of(m: &ComplexMatrix) -> f64 {
    let d = m.rows() as f64;
    (1.0 + (m.trace() / C64::new(d, 0.0)).norm_sqr()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;
    use crate::qualm::{execute_coherent_from, make_oracle, OracleKind, OracleOptions};

    #[test]
    fn swap_program_counts() {
        for ell in 1..=5 {
            let p = swap_test_program(ell).unwrap();
            assert_eq!(p.query_complexity(), 2);
            assert_eq!(p.gate_complexity(), 2 * ell + 2);
        }
    }

    #[test]
    fn swap_test_on_loq_reads_zero() {
        let p = swap_test_program(3).unwrap();
        let mut o = make_oracle(OracleKind::Loq, 3, 5, &OracleOptions::default()).unwrap();
        for s in 0..5 {
            assert!((swap_test_zero_probability(&p, &mut o, s).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn readout_matches_overlap_formula() {
        let mut rng = SeededStream::new(11, 0);
        let u = crate::sampling::sample_haar_unitary(4, &mut rng).unwrap();
        let a = PureState::new(u.column(0)).unwrap();
        let b = PureState::new(u.column(0).iter().zip(u.column(1)).map(|(x, y)| x * 0.6 + y * 0.8).collect()).unwrap();
        let init = a.tensor(&b).tensor(&PureState::basis(2, 0));
        let p = swap_test_readout(2).unwrap();
        let mut o = make_oracle(OracleKind::Lod, 2, 0, &OracleOptions::default()).unwrap();
        let run = execute_coherent_from(&p, &mut o, init, &mut rng).unwrap();
        let want = (1.0 + b.inner(&a).norm_sqr()) / 2.0;
        assert!((run.probabilities[0] - want).abs() < 1e-10);
    }

    #[test]
    fn entangled_variant_tracks_trace_overlap() {
        let p = swap_test_program_entangled(2).unwrap();
        let mut o = make_oracle(OracleKind::Lop, 2, 7, &OracleOptions::default()).unwrap();
        let mut shadow = o.clone();
        let u1 = match shadow.next_action().unwrap() {
            OracleAction::Unitary(u) => u,
            _ => unreachable!(),
        };
        let u2 = match shadow.next_action().unwrap() {
            OracleAction::Unitary(u) => u,
            _ => unreachable!(),
        };
        let want = plus_probability_of(&u1.adjoint().matmul(&u2).unwrap());
        let run = execute_coherent(&p, &mut o, &[], &mut SeededStream::new(0, 0)).unwrap();
        assert!((run.probabilities[0] - want).abs() < 1e-10);
    }

    #[test]
    fn bipartite_path_matches_statevector() {
        for ell in 1..=2 {
            for kind in [
                OracleKind::FixedGroup(Group::Unitary),
                OracleKind::FixedGroup(Group::Orthogonal),
                OracleKind::FixedGroup(Group::Symplectic),
                OracleKind::Lop,
            ] {
                for stage in [SymmetryStage::Transpose, SymmetryStage::TimeReversal] {
                    let mut o = make_oracle(kind, ell, 3 + ell as u64, &OracleOptions::default()).unwrap();
                    let mut shadow = o.clone();
                    let fast = symmetry_plus_probability(&mut shadow, stage).unwrap();
                    let p = symmetry_program(ell, stage).unwrap();
                    let run = execute_coherent(&p, &mut o, &[], &mut SeededStream::new(0, 0)).unwrap();
                    assert!((run.probabilities[0] - fast).abs() < 1e-10, "{kind} {stage:?} ell={ell}");
                }
            }
        }
    }

    #[test]
    fn true_class_reads_plus_with_certainty() {
        let mut o = make_oracle(OracleKind::FixedGroup(Group::Orthogonal), 4, 1, &OracleOptions::default()).unwrap();
        assert!((symmetry_plus_probability(&mut o, SymmetryStage::Transpose).unwrap() - 1.0).abs() < 1e-9);
        let mut s = make_oracle(OracleKind::FixedGroup(Group::Symplectic), 4, 1, &OracleOptions::default()).unwrap();
        assert!((symmetry_plus_probability(&mut s, SymmetryStage::TimeReversal).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decision_rules() {
        assert_eq!(swap_rule(&[false, false]), VerdictLabel::Loq);
        assert_eq!(swap_rule(&[false, true]), VerdictLabel::Lop);
        assert_eq!(symmetry_rule(&[false; 3], 3).unwrap(), VerdictLabel::Class(Group::Orthogonal));
        let sp = [true, false, false, false, false, false];
        assert_eq!(symmetry_rule(&sp, 3).unwrap(), VerdictLabel::Class(Group::Symplectic));
        let u = [true, false, false, false, true, false];
        assert_eq!(symmetry_rule(&u, 3).unwrap(), VerdictLabel::Class(Group::Unitary));
        assert!(symmetry_rule(&[true, false], 2).is_err());
    }

    #[test]
    fn parallel_policy_on_identity_is_all_zero() {
        let mut o = make_oracle(OracleKind::Loq, 2, 0, &OracleOptions::default()).unwrap();
        o.force_hidden_matrix(ComplexMatrix::identity(4)).unwrap();
        let id = ComplexMatrix::identity(4);
        let policy = parallel_sm_policy(2, 3, &id, &id).unwrap();
        let t = crate::qualm::execute_sm(&policy, &mut o, &mut SeededStream::new(0, 0)).unwrap();
        assert_eq!(t, vec![0; 4]);
    }

    #[test]
    fn amplify_is_identity_for_deterministic_and_single_runs() {
        let fixed = |_| Ok(DistinguisherVerdict { label: VerdictLabel::Loq, raw_outcomes: vec![false], repetitions: 1 });
        let mut rng = SeededStream::new(0, 0);
        assert_eq!(amplify(fixed, 9, &mut rng).unwrap().label, VerdictLabel::Loq);
        assert!(amplify(fixed, 4, &mut rng).is_err());
        let coin = |seed: u64| {
            let b = SeededStream::new(seed, 0).random::<bool>();
            let label = if b { VerdictLabel::Lop } else { VerdictLabel::Loq };
            Ok(DistinguisherVerdict { label, raw_outcomes: vec![b], repetitions: 1 })
        };
        let mut r1 = SeededStream::new(5, 0);
        let mut r2 = SeededStream::new(5, 0);
        let one = amplify(coin, 1, &mut r1).unwrap();
        let base: u64 = r2.random();
        assert_eq!(one, coin(derive_seed(base, 0)).unwrap());
    }

    #[test]
    fn lod_swap_output_is_a_state() {
        let p = swap_test_program(2).unwrap();
        let mut o = make_oracle(OracleKind::Lod, 2, 0, &OracleOptions::default()).unwrap();
        let run = execute_coherent(&p, &mut o, &[], &mut SeededStream::new(2, 0)).unwrap();
        let _: &DensityMatrix = &run.output;
        assert!((run.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
