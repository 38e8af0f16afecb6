//! Coherent SWAP-test bias against the best exact incoherent distance as the
//! lab register grows.

use qualm_lab::analysis::{bias, exact_pk, exact_qk_sm, tvd};
use qualm_lab::error::Result;
use qualm_lab::experiments::computational_policy;
use qualm_lab::linalg::{ComplexMatrix, DensityMatrix, C64};
use qualm_lab::protocols::swap_test_program;
use qualm_lab::qualm::{execute_coherent, make_oracle, OracleKind, OracleOptions};
use qualm_lab::sampling::{derive_seed, SeededStream};
use qualm_lab::weingarten::Group;

fn averaged_output(kind: OracleKind, ell: usize, draws: u64) -> Result<DensityMatrix> {
    let program = swap_test_program(ell)?;
    let mut acc = ComplexMatrix::zeros(2, 2);
    for t in 0..draws {
        let seed = derive_seed(ell as u64, t);
        let mut oracle = make_oracle(kind, ell, seed, &OracleOptions::default())?;
        let run = execute_coherent(&program, &mut oracle, &[], &mut SeededStream::new(seed, 1))?;
        acc = acc.add(run.output.matrix())?;
    }
    DensityMatrix::new(acc.scale(C64::new(1.0 / draws as f64, 0.0)))
}

fn main() -> Result<()> {
    println!(" ℓ   coherent bias   incoherent tvd (k=2)");
    for ell in 2..=5 {
        let b = bias(&averaged_output(OracleKind::Loq, ell, 400)?, &averaged_output(OracleKind::Lop, ell, 400)?)?;
        let policy = computational_policy(ell, 2)?;
        let d = tvd(&exact_pk(&policy, ell, 2)?, &exact_qk_sm(&policy, Group::Unitary, ell, 2)?)?;
        println!(" {ell}   {b:.4}          {d:.5}");
    }
    Ok(())
}
