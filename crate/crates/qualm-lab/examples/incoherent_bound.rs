//! Exact transcript distributions of a simple-measurement strategy against a
//! fixed unitary and a depolarizing oracle, and the bound chain on their
//! distance.

use qualm_lab::analysis::{bound_quantities, exact_pk, exact_qk_sm, tvd};
use qualm_lab::error::Result;
use qualm_lab::qualm::EchoPolicy;
use qualm_lab::weingarten::Group;

fn main() -> Result<()> {
    let k = 2;
    for ell in 2..=5 {
        let policy = EchoPolicy::new(ell, k)?;
        let p = exact_pk(&policy, ell, k)?;
        let q = exact_qk_sm(&policy, Group::Unitary, ell, k)?;
        let b = bound_quantities(&policy, ell, k, Group::Unitary)?;
        println!(
            "ℓ={ell}: tvd {:.5}  ≤  c1 + c2·T = {:.5} + {:.5}·{:.5} = {:.5}   per-pattern sums hold: {}",
            tvd(&p, &q)?,
            b.c1,
            b.c2,
            b.t,
            b.rhs,
            b.patterns_hold()
        );
    }
    Ok(())
}
