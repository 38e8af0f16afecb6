//! Haar sampling for U, O and Sp, with empirical fourth moments set against
//! the exact values.

use qualm_lab::error::Result;
use qualm_lab::sampling::{sample_haar_orthogonal, sample_haar_symplectic, sample_haar_unitary, SeededStream};
use qualm_lab::weingarten::moments::{orthogonal_fourth_closed, symplectic_fourth_published, unitary_fourth_closed};

fn main() -> Result<()> {
    let d = 4;
    let n = 50_000;
    let mut rng = SeededStream::new(2024, 0);
    // E[|W_00|^4] in each group
    let mut sums = [0.0f64; 3];
    for _ in 0..n {
        let ws = [
            sample_haar_unitary(d, &mut rng)?,
            sample_haar_orthogonal(d, &mut rng)?,
            sample_haar_symplectic(d / 2, &mut rng)?,
        ];
        for (s, w) in sums.iter_mut().zip(&ws) {
            *s += w.row(0)[0].norm_sqr().powi(2);
        }
    }
    let exact = [
        unitary_fourth_closed(d, [0; 4], [0; 4]),
        orthogonal_fourth_closed(d, [0; 4], [0; 4]),
        symplectic_fourth_published(d, [0; 4], [0; 4]),
    ];
    for ((name, s), e) in ["U", "O", "Sp"].iter().zip(sums).zip(exact) {
        println!("{name:>2}  E|W_00|^4  sampled {:.5}  exact {e:.5}", s / n as f64);
    }
    Ok(())
}
