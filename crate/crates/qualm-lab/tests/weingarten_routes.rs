//! Exact tables against independent routes: group averages of sampled
//! matrices, equivariance of the twirl, and tampering detection.

use num_bigint::BigInt;
use num_rational::BigRational;

use qualm_lab::linalg::{kron, ComplexMatrix, C64};
use qualm_lab::sampling::{
    sample_haar_orthogonal, sample_haar_symplectic, sample_haar_unitary, symplectic_defect, SeededStream,
};
use qualm_lab::weingarten::{haar_twirl, verify_inverse_identity, wg_table, wg_table_cached, Group, WgTable};

fn sample(group: Group, d: usize, rng: &mut SeededStream) -> ComplexMatrix {
    match group {
        Group::Unitary => sample_haar_unitary(d, rng).unwrap(),
        Group::Orthogonal => sample_haar_orthogonal(d, rng).unwrap(),
        Group::Symplectic => sample_haar_symplectic(d / 2, rng).unwrap(),
    }
}

fn conjugate2(w: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    let ww = kron(w, w).unwrap();
    ww.matmul(a).unwrap().matmul(&ww.adjoint()).unwrap()
}

fn test_operator(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = SeededStream::new(seed, 9);
    let u = sample_haar_unitary(n, &mut rng).unwrap();
    let diag: Vec<C64> = (0..n).map(|i| C64::new(i as f64 / n as f64, 0.0)).collect();
    u.matmul(&ComplexMatrix::diagonal(&diag)).unwrap().matmul(&u.adjoint()).unwrap()
}

#[test]
fn twirl_is_invariant_and_fixed() {
    let d = 4;
    let a = test_operator(d * d, 1);
    let mut rng = SeededStream::new(2, 0);
    for group in Group::ALL {
        let t = haar_twirl(group, 2, d as i64, &a).unwrap();
        // the twirl of a twirl is itself, and it commutes with W⊗W
        let tt = haar_twirl(group, 2, d as i64, &t).unwrap();
        assert!(tt.max_abs_diff(&t) < 1e-10, "{group} idempotence");
        for _ in 0..3 {
            let w = sample(group, d, &mut rng);
            assert!(conjugate2(&w, &t).max_abs_diff(&t) < 1e-10, "{group} invariance");
            let shifted = haar_twirl(group, 2, d as i64, &conjugate2(&w, &a)).unwrap();
            assert!(shifted.max_abs_diff(&t) < 1e-10, "{group} left invariance");
        }
        assert!((t.trace() - a.trace()).norm() < 1e-10, "{group} trace");
    }
}

#[test]
fn twirl_matches_monte_carlo_average() {
    let d = 4;
    let a = test_operator(d * d, 3);
    let n = 20_000;
    for (i, group) in Group::ALL.into_iter().enumerate() {
        let exact = haar_twirl(group, 2, d as i64, &a).unwrap();
        let mut rng = SeededStream::new(4, i as u64);
        let mut acc = ComplexMatrix::zeros(d * d, d * d);
        for _ in 0..n {
            acc = acc.add(&conjugate2(&sample(group, d, &mut rng), &a)).unwrap();
        }
        let mc = acc.scale(C64::new(1.0 / n as f64, 0.0));
        // entries are O(1) with per-sample spread below 1, so 5σ ≈ 0.035
        let gap = mc.max_abs_diff(&exact);
        assert!(gap < 0.035, "{group}: Monte Carlo gap {gap}");
    }
}

#[test]
fn samplers_land_in_their_groups() {
    let mut rng = SeededStream::new(5, 0);
    for d in [2, 4, 8] {
        assert!(sample_haar_unitary(d, &mut rng).unwrap().is_unitary(1e-12));
        let o = sample_haar_orthogonal(d, &mut rng).unwrap();
        assert!(o.is_unitary(1e-12) && o.is_real(1e-15));
        let s = sample_haar_symplectic(d / 2, &mut rng).unwrap();
        assert!(s.is_unitary(1e-12) && symplectic_defect(&s) < 1e-12);
    }
}

#[test]
fn inverse_identity_catches_tampering() {
    for group in Group::ALL {
        let table = wg_table(group, 3, 6).unwrap();
        assert!(verify_inverse_identity(&table).unwrap(), "{group}");
        let mut json = table.to_json();
        let entries = json["entries"].as_array_mut().unwrap();
        let last = entries.last_mut().unwrap();
        let num: BigInt = last["num"].as_str().unwrap().parse().unwrap();
        last["num"] = serde_json::Value::String((num + BigInt::from(1)).to_string());
        let tampered = WgTable::from_json(&json).unwrap();
        assert!(!verify_inverse_identity(&tampered).unwrap(), "{group} tampered table accepted");
    }
}

#[test]
fn cache_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let first = wg_table_cached(Group::Orthogonal, 3, 8, dir.path()).unwrap();
    assert!(WgTable::cache_path(dir.path(), Group::Orthogonal, 3, 8).exists());
    let second = wg_table_cached(Group::Orthogonal, 3, 8, dir.path()).unwrap();
    assert_eq!(first.values(), second.values());
    assert_eq!(first.class_sizes(), second.class_sizes());
}

#[test]
fn unitary_identity_value_tracks_leading_order() {
    // Wg(e) · D^k → 1 as D grows
    for k in 2..=4 {
        let mut previous = f64::INFINITY;
        for d in [16i64, 64, 256] {
            let t = wg_table(Group::Unitary, k, d).unwrap();
            let v = t.identity_value() * &BigRational::from_integer(BigInt::from(d).pow(k as u32));
            let gap = (ratio(&v) - 1.0).abs();
            assert!(gap < previous, "k={k} D={d}");
            previous = gap;
        }
        assert!(previous < 1e-3);
    }
}

fn ratio(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap()
}
