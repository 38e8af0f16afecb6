//! One test per acceptance criterion. Each prints a single
//! `criterion N PASS|FAIL` line straight to stdout (past the test harness
//! capture) and then asserts. Tolerances and runtime budgets are pinned below.

use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use qualm_lab::analysis::{
    bias, bound_quantities, empirical_distribution, exact_pk, exact_qk_correlated, exact_qk_sm,
    exact_sm_channels, flatness, tvd, CallChannel, OutcomeDistribution,
};
use qualm_lab::experiments::{run_command, Command, Experiment, ExperimentConfig};
use qualm_lab::linalg::{ComplexMatrix, DensityMatrix, Povm, PureState, C64};
use qualm_lab::protocols::{parallel_sm_policy, swap_test_program, swap_test_zero_probability};
use qualm_lab::qualm::{
    execute_coherent, execute_sm, make_oracle, EchoPolicy, FnPolicy, OracleKind, OracleOptions, Prep,
    SmPolicy,
};
use qualm_lab::sampling::{derive_seed, sample_haar_unitary, SeededStream};
use qualm_lab::weingarten::{
    ascending_double_closed_form, descending_double_closed_form, falling_sum_closed_form,
    half_argument_double_closed_form, sum_abs_wg, wg_unitary, Group,
};

const EXACT_SUM_TOL: f64 = 1e-9;
const FLAT_TOL: f64 = 1e-12;
const ANALYTIC_TOL: f64 = 1e-9;
const ROUTE_TOL: f64 = 1e-12;
const SIGMAS: f64 = 5.0;
const SWAP_SAMPLES: u64 = 100_000;
const EMPIRICAL_TRIALS: u64 = 100_000;
const SYMMETRY_ACCURACY: f64 = 0.99;
const DECAY: (f64, f64) = (0.3, 0.7);
const COHERENT_FLOOR: f64 = 0.4;
const CORRELATED_SLACK: f64 = 1.01;

fn report(n: u32, passed: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let ok = passed && elapsed < budget;
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "criterion {n} {tag} ({:.2}s of {:.0}s): {detail}",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    )
    .unwrap();
    assert!(passed, "criterion {n}: {detail}");
    assert!(elapsed < budget, "criterion {n} over budget: {elapsed:?}");
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn computational(ell: usize, k: usize) -> impl SmPolicy {
    let id = ComplexMatrix::identity(1 << ell);
    parallel_sm_policy(ell, k, &id, &id).unwrap()
}

fn temp_config(experiment: Experiment, ell: usize, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(experiment, ell);
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn criterion_01_second_order_unitary_values() {
    let start = Instant::now();
    let mut ok = true;
    for d in [4i64, 8, 16] {
        let t = wg_unitary(2, d).unwrap();
        let id = t.values().iter().find(|(ty, _)| ty.parts() == [1, 1]).unwrap().1.clone();
        let tr = t.values().iter().find(|(ty, _)| ty.parts() == [2]).unwrap().1.clone();
        ok &= id == ratio(1, d * d - 1) && tr == ratio(-1, d * (d * d - 1)) && t.values().len() == 2;
    }
    report(1, ok, start.elapsed(), Duration::from_secs(1), "Wg^U(k=2) = {1/(D²−1), −1/(D(D²−1))} at D = 4, 8, 16");
}

#[test]
fn criterion_02_sum_identities() {
    let start = Instant::now();
    let mut unitary_ok = true;
    for d in [8i64, 16] {
        for k in 1..=5 {
            unitary_ok &= sum_abs_wg(Group::Unitary, k, d).unwrap() == falling_sum_closed_form(k, d);
        }
    }
    let mut sp_ok = true;
    let mut sp_observed = Vec::new();
    for d in [8i64, 16] {
        for k in 1..=4 {
            let s = sum_abs_wg(Group::Symplectic, k, d).unwrap();
            sp_ok &= s == ascending_double_closed_form(k, d);
            if descending_double_closed_form(k, d).as_ref() == Some(&s) {
                sp_observed.push(format!("D={d},k={k}"));
            }
        }
    }
    let mut o_matches = Vec::new();
    for (d, k) in [(8i64, 2), (8, 3), (8, 5), (16, 2), (16, 3)] {
        let s = sum_abs_wg(Group::Orthogonal, k, d).unwrap();
        let which = if descending_double_closed_form(k, d).as_ref() == Some(&s) {
            "(D−2k)!!/D!!"
        } else if half_argument_double_closed_form(k, d).as_ref() == Some(&s) {
            "(D/2−k)!!/(D/2)!!"
        } else {
            "neither"
        };
        o_matches.push(format!("D={d},k={k}:{s}→{which}"));
    }
    let detail = format!(
        "U Σ|Wg| = (D−k)!/D! for k≤5, D∈{{8,16}}: {unitary_ok}; Sp Σ|Wg| = ∏1/(D+2j) for k≤4: {sp_ok} \
         (exact tables equal ∏1/(D−2j) at {}/8 points); O: {}",
        sp_observed.len(),
        o_matches.join(" ")
    );
    report(2, unitary_ok && sp_ok, start.elapsed(), Duration::from_secs(60), &detail);
}

#[test]
fn criterion_03_moment_monte_carlo() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = temp_config(Experiment::Moments, 2, dir.path());
    cfg.trials = 100_000;
    cfg.seed = 3;
    let r = run_command(Command::Moments, &cfg, None).unwrap();
    let worst = r
        .records
        .iter()
        .filter(|x| x.metric.ends_with("/max_z"))
        .map(|x| x.value)
        .fold(0.0, f64::max);
    let detail = format!("D=4, 1e5 samples, 2nd and 4th moments of U/O/Sp: worst z = {worst:.3} (limit {SIGMAS})");
    report(3, r.passed() && worst <= SIGMAS, start.elapsed(), Duration::from_secs(30), &detail);
}

#[test]
fn criterion_04_coherent_swap_test() {
    let start = Instant::now();
    let ell = 4;
    let d = 16.0;
    let program = swap_test_program(ell).unwrap();
    let options = OracleOptions::default();
    let p0 = |kind: OracleKind, seed: u64, n: u64| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|t| {
                let s = derive_seed(seed, t);
                let mut oracle = make_oracle(kind, ell, s, &options).unwrap();
                swap_test_zero_probability(&program, &mut oracle, s).unwrap()
            })
            .collect()
    };
    let loq = p0(OracleKind::Loq, 41, SWAP_SAMPLES);
    let loq_worst = loq.iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
    let lop = p0(OracleKind::Lop, 42, SWAP_SAMPLES);
    let n = lop.len() as f64;
    let mean = lop.iter().sum::<f64>() / n;
    let se = (lop.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let expected = 0.5 + 0.5 / d;
    let z = (mean - expected).abs() / se;
    // one two-query test, deciding LOQ on outcome 0, under a uniform prior
    let loq_mean = loq.iter().sum::<f64>() / loq.len() as f64;
    let error = 0.5 * (1.0 - loq_mean) + 0.5 * mean;
    let ok = loq_worst <= ANALYTIC_TOL && z <= SIGMAS && error < 1.0 / 3.0 && program.query_complexity() == 2;
    let detail = format!(
        "ℓ=4: LOQ max|Pr0−1| = {loq_worst:.1e}; LOP Pr0 = {mean:.5} vs {expected:.5} (z = {z:.2}); \
         two-query error = {error:.4} < 1/3"
    );
    report(4, ok, start.elapsed(), Duration::from_secs(60), &detail);
}

#[test]
fn criterion_05_symmetry_distinction() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = temp_config(Experiment::Symmetry, 5, dir.path());
    cfg.trials = 500;
    cfg.reps = 20;
    cfg.seed = 5;
    let r = run_command(Command::Distinguish, &cfg, None).unwrap();
    let acc: Vec<f64> = Group::ALL.iter().map(|g| r.record(&format!("accuracy/{g}")).unwrap().value).collect();
    let stage1 = r.record("min_plus_probability/stage1/O").unwrap().value;
    let stage2 = r.record("min_plus_probability/stage2/Sp").unwrap().value;
    let ok = acc.iter().all(|&a| a >= SYMMETRY_ACCURACY)
        && (1.0 - stage1).abs() <= ANALYTIC_TOL
        && (1.0 - stage2).abs() <= ANALYTIC_TOL;
    let detail = format!(
        "ℓ=5, reps=20, 500/class: accuracy U/O/Sp = {:.3}/{:.3}/{:.3}; Pr[+] stage1 on O = {stage1:.12}, stage2 on Sp = {stage2:.12}",
        acc[0], acc[1], acc[2]
    );
    report(5, ok, start.elapsed(), Duration::from_secs(300), &detail);
}

fn loq_histogram(policy: &dyn SmPolicy, ell: usize, k: usize, seed: u64) -> qualm_lab::analysis::EmpiricalDistribution {
    let options = OracleOptions::default();
    empirical_distribution(1 << ell, k, EMPIRICAL_TRIALS, seed, |t, rng| {
        let mut oracle = make_oracle(OracleKind::Loq, ell, derive_seed(!seed, t), &options)?;
        execute_sm(policy, &mut oracle, rng)
    })
    .unwrap()
}

#[test]
fn criterion_06_exact_distributions() {
    let start = Instant::now();
    let mut ok = true;
    let mut worst_sum = 0.0f64;
    let mut worst_spread = 0.0f64;
    for ell in 1..=3 {
        for k in 1..=3 {
            let q = exact_qk_sm(&computational(ell, k), Group::Unitary, ell, k).unwrap();
            let sum: f64 = q.probabilities().iter().sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
            let f = flatness(&q);
            if f.max >= f.min {
                worst_spread = worst_spread.max(f.spread());
            }
        }
    }
    ok &= worst_sum <= EXACT_SUM_TOL && worst_spread <= FLAT_TOL;
    let mut misses = Vec::new();
    let echo = EchoPolicy::new(2, 2).unwrap();
    let cases: [(&dyn SmPolicy, usize, usize, &str); 3] = [
        (&computational(2, 2), 2, 2, "comp ℓ=2 k=2"),
        (&computational(3, 2), 3, 2, "comp ℓ=3 k=2"),
        (&echo, 2, 2, "echo ℓ=2 k=2"),
    ];
    for (i, (policy, ell, k, name)) in cases.into_iter().enumerate() {
        let exact = exact_qk_sm(policy, Group::Unitary, ell, k).unwrap();
        let v = loq_histogram(policy, ell, k, 600 + i as u64).violations(&exact).unwrap();
        ok &= v.is_empty();
        misses.push(format!("{name}: {} outside", v.len()));
    }
    let detail = format!(
        "ℓ,k ≤ 3: max|Σ−1| = {worst_sum:.1e}, no-collision spread = {worst_spread:.1e}; \
         1e5-trial histograms vs Wilson(5σ): {}",
        misses.join(", ")
    );
    report(6, ok, start.elapsed(), Duration::from_secs(120), &detail);
}

fn random_basis_policy(ell: usize, k: usize, seed: u64) -> impl SmPolicy {
    let mut rng = SeededStream::new(seed, 0);
    let y = sample_haar_unitary(1 << ell, &mut rng).unwrap();
    let v = sample_haar_unitary(1 << ell, &mut rng).unwrap();
    parallel_sm_policy(ell, k, &y, &v).unwrap()
}

#[test]
fn criterion_07_bound_chain() {
    let start = Instant::now();
    let mut ok = true;
    let mut rows = Vec::new();
    for ell in 3..=5 {
        let echo = EchoPolicy::new(ell, 2).unwrap();
        let random = random_basis_policy(ell, 2, 70 + ell as u64);
        let comp = computational(ell, 2);
        let policies: [(&dyn SmPolicy, &str); 3] = [(&comp, "comp"), (&random, "random"), (&echo, "echo")];
        for (policy, name) in policies {
            let b = bound_quantities(policy, ell, 2, Group::Unitary).unwrap();
            ok &= b.lhs_within_rhs() && b.patterns_hold();
            if name == "comp" {
                rows.push(format!("ℓ={ell}: {:.4} ≤ {:.4}", b.lhs, b.rhs));
            }
        }
    }
    let detail = format!("k=2, U, computational/random/echo policies, every pattern checked; {}", rows.join(", "));
    report(7, ok, start.elapsed(), Duration::from_secs(120), &detail);
}

fn coherent_bias(ell: usize, draws: u64, seed: u64) -> f64 {
    let program = swap_test_program(ell).unwrap();
    let options = OracleOptions::default();
    let average = |kind: OracleKind, salt: u64| {
        let outs: Vec<DensityMatrix> = (0..draws)
            .into_par_iter()
            .map(|t| {
                let s = derive_seed(seed ^ salt, t);
                let mut oracle = make_oracle(kind, ell, s, &options).unwrap();
                execute_coherent(&program, &mut oracle, &[], &mut SeededStream::new(s, 1)).unwrap().output
            })
            .collect();
        let mut acc = ComplexMatrix::zeros(2, 2);
        for o in &outs {
            acc = acc.add(o.matrix()).unwrap();
        }
        DensityMatrix::new(acc.scale(C64::new(1.0 / draws as f64, 0.0))).unwrap()
    };
    bias(&average(OracleKind::Loq, 1), &average(OracleKind::Lop, 2)).unwrap()
}

#[test]
fn criterion_08_separation_trend() {
    let start = Instant::now();
    let mut ok = true;
    let mut cells = Vec::new();
    let mut previous: Option<f64> = None;
    for ell in 2..=5 {
        let policy = computational(ell, 2);
        let v = tvd(&exact_pk(&policy, ell, 2).unwrap(), &exact_qk_sm(&policy, Group::Unitary, ell, 2).unwrap()).unwrap();
        let b = coherent_bias(ell, 1000, 80 + ell as u64);
        ok &= b >= COHERENT_FLOOR;
        match previous {
            Some(p) => {
                let r = v / p;
                ok &= v < p && (DECAY.0..=DECAY.1).contains(&r);
                cells.push(format!("ℓ={ell}: tvd {v:.4} (×{r:.3}), bias {b:.3}"));
            }
            None => cells.push(format!("ℓ={ell}: tvd {v:.4}, bias {b:.3}")),
        }
        previous = Some(v);
    }
    report(8, ok, start.elapsed(), Duration::from_secs(120), &cells.join("; "));
}

/// History-dependent bases with mixed preparations.
fn adaptive_mixed_policy(ell: usize, k: usize, seed: u64) -> FnPolicy {
    let d = 1 << ell;
    let mut rng = SeededStream::new(seed, 0);
    let bases: Vec<ComplexMatrix> = (0..3).map(|_| sample_haar_unitary(d, &mut rng).unwrap()).collect();
    let a = PureState::new(sample_haar_unitary(d, &mut rng).unwrap().column(0)).unwrap();
    let b = PureState::new(sample_haar_unitary(d, &mut rng).unwrap().column(0)).unwrap();
    let mixed = a.density().matrix().scale(C64::new(0.7, 0.0)).add(&b.density().matrix().scale(C64::new(0.3, 0.0))).unwrap();
    let mixed = DensityMatrix::new(mixed).unwrap();
    FnPolicy::new(
        d,
        k,
        move |h: &[usize]| Povm::from_unitary(&bases[h.iter().sum::<usize>() % 3]),
        move |h: &[usize]| {
            Ok(if h.last().is_some_and(|s| s % 2 == 0) {
                Prep::Mixed(mixed.clone())
            } else {
                Prep::Pure(PureState::basis(d, *h.last().unwrap_or(&0)))
            })
        },
    )
}

fn max_gap(a: &OutcomeDistribution, b: &OutcomeDistribution) -> f64 {
    a.probabilities().iter().zip(b.probabilities()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_09_corollaries() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (ell, k) in [(2, 2), (2, 3), (3, 2)] {
        let comp = computational(ell, k);
        let random = random_basis_policy(ell, k, 90);
        let echo = EchoPolicy::new(ell, k).unwrap();
        let adaptive = adaptive_mixed_policy(ell, k, 91);
        let policies: [&dyn SmPolicy; 4] = [&comp, &random, &echo, &adaptive];
        for policy in policies {
            let lod = exact_sm_channels(policy, ell, k, &[CallChannel::Depolarize]).unwrap();
            let lop = exact_sm_channels(policy, ell, k, &[CallChannel::HaarAverage(Group::Unitary)]).unwrap();
            let closed = exact_pk(policy, ell, k).unwrap();
            worst = worst.max(max_gap(&lod, &lop)).max(max_gap(&lod, &closed));
        }
    }
    let (ell, k) = (3, 2);
    let policy = computational(ell, k);
    let p = exact_pk(&policy, ell, k).unwrap();
    let loq = tvd(&p, &exact_qk_sm(&policy, Group::Unitary, ell, k).unwrap()).unwrap();
    let mut corr_worst = 0.0f64;
    for seed in 0..4 {
        let mut rng = SeededStream::new(900 + seed, 0);
        let rotations = vec![ComplexMatrix::identity(8), sample_haar_unitary(8, &mut rng).unwrap()];
        let q = exact_qk_correlated(&policy, Group::Unitary, ell, k, &rotations).unwrap();
        corr_worst = corr_worst.max(tvd(&p, &q).unwrap());
    }
    let ok = worst <= ROUTE_TOL && corr_worst <= CORRELATED_SLACK * loq;
    let detail = format!(
        "LOD vs LOP over 4 policies (incl. adaptive, mixed preps): max |Δp| = {worst:.1e}; \
         correlated ℓ=3,k=2: tvd {corr_worst:.6} vs LOQ {loq:.6}"
    );
    report(9, ok, start.elapsed(), Duration::from_secs(60), &detail);
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let runs: [(Command, Experiment, usize, u64); 6] = [
        (Command::Moments, Experiment::Moments, 2, 2_000),
        (Command::Wg, Experiment::Wg, 2, 1),
        (Command::Distinguish, Experiment::SwapLoqLop, 3, 200),
        (Command::Distinguish, Experiment::Symmetry, 3, 100),
        (Command::TvdScan, Experiment::TvdScan, 4, 1),
        (Command::IncoherentVsCoherent, Experiment::IncoherentVsCoherent, 4, 200),
    ];
    let mut ok = true;
    let mut names = Vec::new();
    for (command, experiment, ell, trials) in runs {
        let mut bytes = Vec::new();
        for threads in [1usize, 3, 1] {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = temp_config(experiment, ell, dir.path());
            cfg.trials = trials;
            cfg.seed = 1234;
            cfg.k = if experiment == Experiment::Wg { 3 } else { 2 };
            let r = run_command(command, &cfg, Some(threads)).unwrap();
            bytes.push(std::fs::read(&r.files[0]).unwrap());
        }
        let same = bytes.windows(2).all(|w| w[0] == w[1]);
        ok &= same;
        names.push(format!("{experiment}:{}", if same { "identical" } else { "DIFFERENT" }));
    }
    report(10, ok, start.elapsed(), Duration::from_secs(300), &format!("threads 1/3/1: {}", names.join(", ")));
}
