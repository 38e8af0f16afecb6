//! Telling a fixed unitary, orthogonal or symplectic lab oracle apart with
//! the two-stage transpose and time-reversal tests.

use qualm_lab::error::Result;
use qualm_lab::protocols::{symmetry_distinguish, symmetry_plus_probability, SymmetryStage};
use qualm_lab::qualm::{make_oracle, OracleKind, OracleOptions};
use qualm_lab::sampling::{derive_seed, SeededStream};
use qualm_lab::weingarten::Group;

fn main() -> Result<()> {
    let ell = 3;
    let options = OracleOptions::default();
    for group in Group::ALL {
        let kind = OracleKind::FixedGroup(group);
        let mut oracle = make_oracle(kind, ell, 11, &options)?;
        let p1 = symmetry_plus_probability(&mut oracle, SymmetryStage::Transpose)?;
        let p2 = symmetry_plus_probability(&mut oracle, SymmetryStage::TimeReversal)?;
        let mut labels = Vec::new();
        for t in 0..5 {
            let seed = derive_seed(12, t);
            let mut oracle = make_oracle(kind, ell, seed, &options)?;
            labels.push(symmetry_distinguish(&mut oracle, 20, &mut SeededStream::new(seed, 0))?.label.to_string());
        }
        println!("{kind:>6}: Pr[+] transpose {p1:.4}, time reversal {p2:.4}; verdicts {}", labels.join(" "));
    }
    Ok(())
}
