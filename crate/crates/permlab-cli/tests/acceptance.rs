//! Acceptance gate: twelve criteria covering the exact engines, closed
//! forms, transforms, cycle formula, search, conjecture evidence, and
//! reproducibility. One test per criterion; each prints a PASS line with
//! the measured facts, and any assertion failure fails the build.

use std::process::Command;
use std::time::{Duration, Instant};

use num::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use permlab::bounds::{
    circulant3, conjecture_values, construct_extremal, construct_rowsub_odd, fixed_sum_bound,
    malek_bound, omega3_candidates, sequence_max, sequence_objective, sequence_shift,
    sequence_shift_to_fixpoint, ConjectureFlagCode, ConjectureKind, SequenceProfile,
};
use permlab::cycles::per_via_cycles;
use permlab::matrix::{frac, whole, Matrix, Rational};
use permlab::permanent::{
    determinant, per_i_minus, permanent_gray, permanent_naive, permanent_ryser, FloatMatrix,
};
use permlab::sampling::{
    random_doubly_substochastic_fixed_sum, random_functional, random_nonnegative,
    random_row_substochastic,
};
use permlab::search::{exhaustive_omega3, maximize, ConstraintClass, SearchConfig};
use permlab::transforms::{concentrate_rows, epsilon_shift};

/// `2^{e/2} (1 + ((s - e)/2)^2)` with `e = 2 floor(s/2)`, computed
/// independently of the library's bound evaluator.
fn closed_form(s: &Rational) -> Rational {
    let e = (s / whole(2)).floor() * whole(2);
    let half_e = (&e / whole(2))
        .to_integer()
        .to_i32()
        .expect("tiny exponent");
    let gap = (s - &e) / whole(2);
    whole(2).pow(half_e) * (Rational::one() + &gap * &gap)
}

/// Grid of (n, s in halves) cells where the closed form is proven: even
/// orders up to their full sum range, plus n = 9 restricted to s <= 8.
fn proven_grid() -> Vec<(usize, i64)> {
    let mut cells = Vec::new();
    for n in [2usize, 4, 6, 8] {
        for halves in 0..=(2 * n as i64) {
            cells.push((n, halves));
        }
    }
    for halves in 0..=16 {
        cells.push((9, halves));
    }
    cells
}

#[test]
fn criterion_01_oracle_equivalence_on_500_random_matrices() {
    let started = Instant::now();
    let failures: Vec<String> = (0..500u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000 + i);
            let n = 1 + (i as usize) % 7;
            let a = random_nonnegative(n, &whole(2), &mut rng);
            let fast = permanent_ryser(&a).expect("in guard range").total;
            let slow = permanent_naive(&a).expect("in guard range");
            (fast != slow).then(|| format!("sample {i} at n = {n}"))
        })
        .collect();
    assert!(failures.is_empty(), "engines disagree: {failures:?}");
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "PASS criterion 1: 500 random permanents (n <= 7) identical across both exact engines in {elapsed:?}"
    );
}

#[test]
fn criterion_02_block_example_scores_five_via_every_route() {
    let m2 = Matrix::from_ints(&[&[0, 1], &[1, 0]]).unwrap();
    let a = Matrix::direct_sum(&[
        m2.clone(),
        m2.clone(),
        m2.scale(&frac(1, 2)),
        Matrix::zeros(3),
    ])
    .unwrap();
    let complement = a.i_minus();
    let five = whole(5);

    assert_eq!(permanent_naive(&complement).unwrap(), five);
    assert_eq!(permanent_ryser(&complement).unwrap().total, five);
    let gray = permanent_gray(&FloatMatrix::from_exact(&complement)).unwrap();
    assert!((gray - 5.0).abs() < 1e-9, "float route gave {gray}");
    assert_eq!(per_via_cycles(&a).unwrap(), five);
    println!(
        "PASS criterion 2: 2x2 swap blocks + half block + zero pad score 2 * 2 * (1 + 1/4) = 5 via all four routes"
    );
}

#[test]
fn criterion_03_closed_form_witnesses_certify_on_the_proven_grid() {
    let cells = proven_grid();
    let count = cells.len();
    let failures: Vec<String> = cells
        .into_par_iter()
        .filter_map(|(n, halves)| {
            let s = frac(halves, 2);
            let witness = construct_extremal(n, &s).expect("grid is in range");
            let attained = per_i_minus(&witness).expect("guarded order");
            let expected = closed_form(&s);
            let report = fixed_sum_bound(n, &s).expect("grid is in range");
            let class = witness.classify();
            let bad = attained != expected
                || report.value != expected
                || !report.hypotheses_met
                || !class.doubly_substochastic
                || witness.sigma() != s;
            bad.then(|| format!("cell ({n}, {s}): got {attained}, want {expected}"))
        })
        .collect();
    assert!(failures.is_empty(), "witness certification failed: {failures:?}");
    println!(
        "PASS criterion 3: extremal witnesses attain 2^(e/2) * (1 + ((s - e)/2)^2) exactly on all {count} grid cells"
    );
}

#[test]
fn criterion_04_closed_form_dominates_200_samples_per_cell() {
    let cells = proven_grid();
    let total = cells.len() * 200;
    let failures: Vec<String> = cells
        .into_par_iter()
        .flat_map(|(n, halves)| (0..200u64).into_par_iter().map(move |i| (n, halves, i)))
        .filter_map(|(n, halves, i)| {
            let s = frac(halves, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(40_000 + halves as u64 * 211 + n as u64 * 7 + i * 9_973);
            let a = random_doubly_substochastic_fixed_sum(n, &s, &mut rng)
                .expect("sampler accepts grid sums");
            let value = per_i_minus(&a).expect("guarded order");
            let bound = closed_form(&s);
            (value > bound).then(|| format!("cell ({n}, {s}) sample {i}: {value} > {bound}"))
        })
        .collect();
    assert!(failures.is_empty(), "dominance violated: {failures:?}");
    println!(
        "PASS criterion 4: {total} random fixed-sum samples stay at or below the closed form, exact arithmetic"
    );
}

#[test]
fn criterion_05_order_three_doubly_stochastic_maximum() {
    let config = SearchConfig {
        n: 3,
        s: 3.0,
        class: ConstraintClass::DoublyStochastic,
        ..SearchConfig::default()
    };
    let result = maximize(&config).unwrap();
    assert!(
        result.best_value >= 1.5 - 1e-6 && result.best_value <= 1.5 + 1e-9,
        "best_value {} outside [1.5 - 1e-6, 1.5 + 1e-9]",
        result.best_value
    );

    let circulant = circulant3(&frac(1, 2)).unwrap();
    assert_eq!(per_i_minus(&circulant).unwrap(), frac(3, 2));
    println!(
        "PASS criterion 5: default search on 3x3 doubly stochastic slice found {} and circulant3(1/2) scores exactly 3/2",
        result.best_value
    );
}

#[test]
fn criterion_06_classical_inequality_chain_on_1000_samples() {
    let failures: Vec<String> = (0..1_000u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(6_000 + i);
            let n = 1 + (i as usize) % 8;
            let a = random_row_substochastic(n, &mut rng);
            let complement = a.i_minus();
            let per = permanent_ryser(&complement).expect("guarded order").total;
            let det = determinant(&complement).expect("guarded order");
            let bad = det.is_negative() || per < det || per > malek_bound(n);
            bad.then(|| format!("sample {i} at n = {n}: per {per}, det {det}"))
        })
        .collect();
    assert!(failures.is_empty(), "inequality chain broken: {failures:?}");
    println!(
        "PASS criterion 6: per(I - A) >= det(I - A) >= 0 and per(I - A) <= 2^floor(n/2) on 1000 row substochastic samples"
    );
}

#[test]
fn criterion_07_transforms_never_decrease_the_objective() {
    // Valid diagonal-to-off-diagonal shifts.
    let shift_failures: Vec<String> = (0..300u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i);
            let n = 2 + (i as usize) % 5;
            let (a, row) = loop {
                let a = random_row_substochastic(n, &mut rng);
                if let Some(row) = (0..n).find(|&r| a.get(r, r).is_positive()) {
                    break (a, row);
                }
            };
            let col = (row + 1 + rng.gen_range(0..n - 1)) % n;
            let col = if col == row { (col + 1) % n } else { col };
            let eps = a.get(row, row) * frac(rng.gen_range(1..=4), 4);
            let shifted = epsilon_shift(&a, row, col, &eps).expect("shift stays in range");
            let before = per_i_minus(&a).expect("guarded order");
            let after = per_i_minus(&shifted).expect("guarded order");
            (after < before).then(|| format!("shift {i} at n = {n}: {after} < {before}"))
        })
        .collect();
    assert!(shift_failures.is_empty(), "shifts decreased: {shift_failures:?}");

    // Row concentration on zero-diagonal matrices.
    let concentrate_failures: Vec<String> = (0..100u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(7_500 + i);
            let n = 2 + (i as usize) % 4;
            let base = random_row_substochastic(n, &mut rng);
            let rows: Vec<Vec<Rational>> = (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| if r == c { Rational::zero() } else { base.get(r, c).clone() })
                        .collect()
                })
                .collect();
            let a = Matrix::from_rows(rows).expect("square");
            let (concentrated, _) = concentrate_rows(&a).expect("valid domain");
            let before = per_i_minus(&a).expect("guarded order");
            let after = per_i_minus(&concentrated).expect("guarded order");
            let bad = after < before || concentrated.sigma() != a.sigma();
            bad.then(|| format!("concentrate {i} at n = {n}: {after} < {before}"))
        })
        .collect();
    assert!(
        concentrate_failures.is_empty(),
        "concentration decreased: {concentrate_failures:?}"
    );
    println!(
        "PASS criterion 7: 300 epsilon shifts and 100 row concentrations all kept per(I - A) non-decreasing with the entry sum preserved"
    );
}

#[test]
fn criterion_08_sequence_lemmas_shift_strictly_and_reach_the_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8_000);
    for case in 0..500 {
        let len = rng.gen_range(2..=8);
        // Strictly interior values keep the shift applicable.
        let values: Vec<Rational> = (0..len).map(|_| frac(rng.gen_range(1..16), 16)).collect();
        let profile = SequenceProfile::from_unsorted(values).unwrap();

        let shifted = sequence_shift(&profile).expect("interior profiles shift");
        assert!(
            sequence_objective(&shifted) > sequence_objective(&profile),
            "case {case}: shift was not strictly increasing"
        );
        assert_eq!(shifted.total(), profile.total());

        let (fixpoint, _) = sequence_shift_to_fixpoint(&profile);
        let (best, maximizer) = sequence_max(profile.total(), profile.len()).unwrap();
        assert_eq!(sequence_objective(&fixpoint), best, "case {case}");
        assert_eq!(fixpoint, maximizer, "case {case}");
    }
    println!(
        "PASS criterion 8: 500 interior profiles shift strictly upward and iterate exactly to the closed-form maximizer"
    );
}

#[test]
fn criterion_09_cycle_formula_exhaustive_and_random() {
    // Exhaustive: every zero-diagonal matrix with at most one positive entry
    // per row, weights in {1/4, 1/2, 3/4, 1}, orders 1 through 5.
    let mut exhaustive_total = 0u64;
    for n in 1..=5usize {
        let radix = 1 + 4 * (n - 1) as u64;
        let total = radix.pow(n as u32);
        exhaustive_total += total;
        let failures: Vec<u64> = (0..total)
            .into_par_iter()
            .filter_map(|code| {
                let mut digits = code;
                let rows: Vec<Vec<Rational>> = (0..n)
                    .map(|i| {
                        let choice = (digits % radix) as usize;
                        digits /= radix;
                        let mut row = vec![Rational::zero(); n];
                        if choice > 0 {
                            let pos = (choice - 1) / 4;
                            let quarters = 1 + ((choice - 1) % 4) as i64;
                            let j = if pos < i { pos } else { pos + 1 };
                            row[j] = frac(quarters, 4);
                        }
                        row
                    })
                    .collect();
                let a = Matrix::from_rows(rows).expect("square");
                let product = per_via_cycles(&a).expect("class holds by construction");
                let reference = per_i_minus(&a).expect("guarded order");
                (product != reference).then_some(code)
            })
            .collect();
        assert!(
            failures.is_empty(),
            "cycle formula failed at n = {n}, codes {failures:?}"
        );
    }

    // Random larger instances up to n = 12.
    let failures: Vec<String> = (0..200u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(9_000 + i);
            let n = 1 + (i as usize) % 12;
            let a = random_functional(n, &mut rng);
            let product = per_via_cycles(&a).expect("sampler stays in class");
            let reference = per_i_minus(&a).expect("guarded order");
            (product != reference).then(|| format!("sample {i} at n = {n}"))
        })
        .collect();
    assert!(failures.is_empty(), "random cycle check failed: {failures:?}");
    println!(
        "PASS criterion 9: cycle product equals per(I - A) on all {exhaustive_total} functional matrices (n <= 5) and 200 random samples (n <= 12)"
    );
}

#[test]
fn criterion_10_odd_order_row_substochastic_witnesses() {
    for n in [3usize, 5, 7] {
        for s in [frac(2 * n as i64 - 1, 2), whole(n as i64)] {
            let witness = construct_rowsub_odd(n, &s).unwrap();
            let value = per_i_minus(&witness).unwrap();
            assert_eq!(
                value,
                whole(2).pow(((n - 1) / 2) as i32),
                "value wrong at ({n}, {s})"
            );
            let class = witness.classify();
            assert!(class.row_substochastic, "row sums broke at ({n}, {s})");
            assert!(
                !class.doubly_substochastic,
                "witness at ({n}, {s}) should break a column sum"
            );
            let worst_column = (0..n)
                .map(|j| (0..n).map(|i| witness.get(i, j)).sum::<Rational>())
                .max()
                .unwrap();
            assert!(worst_column > Rational::one(), "no column sum above 1");
            assert_eq!(witness.sigma(), s, "entry sum drifted at ({n}, {s})");
        }
    }
    println!(
        "PASS criterion 10: odd-order witnesses score exactly 2^((n - 1)/2) for n in {{3, 5, 7}} while exceeding a column sum"
    );
}

#[test]
fn criterion_11_conjecture_evidence_gathered_not_assumed() {
    // Exact scan at every eighth over (2, 3]; compare factually against the
    // conjectured candidate envelope instead of asserting it. The envelope
    // is known to fail near s = 2: this criterion records the evidence.
    let slack = frac(1, 50);
    let mut exceeded = Vec::new();
    let mut lines = Vec::new();
    for eighths in 17..=24i64 {
        let s_exact = frac(eighths, 8);
        let s = eighths as f64 / 8.0;
        let scan = exhaustive_omega3(s, 0.125).unwrap();

        // The scan's envelope must match the candidates computed directly.
        let candidates = omega3_candidates(&s_exact).unwrap();
        let envelope = candidates
            .symmetric_value
            .clone()
            .max(candidates.swap_plus_loop_value.clone());
        assert_eq!(scan.envelope, envelope, "envelope mismatch at s = {s_exact}");
        assert_eq!(
            scan.exceeds_envelope,
            scan.max_value > envelope,
            "exceedance flag inconsistent at s = {s_exact}"
        );

        // The reported maximum is reproducible by direct expansion and the
        // argmax really lies on the slice.
        let direct = permanent_naive(&scan.argmax.i_minus()).unwrap();
        assert_eq!(direct, scan.max_value, "argmax cross-check at s = {s_exact}");
        let class = scan.argmax.classify();
        assert!(class.doubly_substochastic && class.zero_diagonal);

        let over_with_slack = scan.max_value > &envelope + &slack;
        if over_with_slack {
            exceeded.push(eighths);
        }
        lines.push(format!(
            "  s = {s_exact}: grid max {} vs envelope {} ({})",
            scan.max_value,
            envelope,
            if over_with_slack { "EXCEEDS + 1/50" } else { "within slack" }
        ));
    }

    // Documented counterexample region: the conjectured envelope fails near
    // s = 2 and holds with equality at s = 3.
    let low = exhaustive_omega3(2.125, 0.125).unwrap();
    assert_eq!(low.max_value, frac(119, 64), "counterexample value drifted");
    assert!(exceeded.contains(&17) && exceeded.contains(&18) && exceeded.contains(&19));
    assert!(!exceeded.contains(&24), "s = 3 must not exceed the proven 3/2");
    let top = exhaustive_omega3(3.0, 0.125).unwrap();
    assert_eq!(top.max_value, frac(3, 2));
    assert!(!top.exceeds_envelope);

    // Both stated inconsistencies are surfaced as flags.
    let omega3 = conjecture_values(&ConjectureKind::Omega3 { s: frac(17, 8) }).unwrap();
    assert!(omega3
        .flags
        .iter()
        .any(|f| f.code == ConjectureFlagCode::NegativeBranch));
    let odd = conjecture_values(&ConjectureKind::OddStochastic { n: 5 }).unwrap();
    assert!(odd
        .flags
        .iter()
        .any(|f| f.code == ConjectureFlagCode::CopyCountOrderMismatch));

    println!(
        "PASS criterion 11: evidence gathered; conjectured envelope exceeded at {} of 8 sums (counterexample 119/64 > 7/4 at s = 17/8), equality at s = 3, both inconsistency flags raised",
        exceeded.len()
    );
    for line in lines {
        println!("{line}");
    }
}

#[test]
fn criterion_12_search_json_is_byte_identical_across_thread_counts() {
    let args = [
        "search",
        "--n",
        "4",
        "--s",
        "3",
        "--restarts",
        "12",
        "--steps",
        "4000",
        "--seed",
        "123",
        "--format",
        "json",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        for _ in 0..2 {
            let out = Command::new(env!("CARGO_BIN_EXE_permlab"))
                .args(args)
                .env("PERMLAB_THREADS", threads)
                .output()
                .expect("binary runs");
            assert!(out.status.success());
            outputs.push(out.stdout);
        }
    }
    assert!(!outputs[0].is_empty());
    let first = &outputs[0];
    assert!(
        outputs.iter().all(|o| o == first),
        "search output varies across runs or thread counts"
    );
    let parsed: permlab::search::SearchResult =
        serde_json::from_slice(first).expect("output is a search result");
    assert_eq!(parsed.config.seed, 123);
    println!(
        "PASS criterion 12: two seeded search runs each under PERMLAB_THREADS = 1 and 4 produced byte-identical JSON"
    );
}
