//! The `verify` verb: a deterministic battery of cross-checks over built-in
//! fixtures. Every check is seeded, so two runs of the same build produce
//! byte-identical reports.

use num::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use permlab::bounds::{
    conjecture_values, construct_rowsub_odd, fixed_sum_bound, malek_bound, sequence_max,
    sequence_objective, sequence_shift_to_fixpoint, ConjectureKind, SequenceProfile,
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
use permlab::search::{
    constraint_violation, exhaustive_omega3, maximize, repair, ConstraintClass, SearchConfig,
};
use permlab::transforms::{concentrate_rows, zero_diagonalize, PreserveClass};

use crate::report::{CheckResult, VerifyReport};

fn check(name: &str, run: impl FnOnce() -> Result<(), String>) -> CheckResult {
    match run() {
        Ok(()) => CheckResult {
            name: name.to_string(),
            ok: true,
            detail: String::new(),
        },
        Err(detail) => CheckResult {
            name: name.to_string(),
            ok: false,
            detail,
        },
    }
}

fn m2() -> Matrix {
    Matrix::from_ints(&[&[0, 1], &[1, 0]]).expect("static fixture")
}

pub fn run_battery() -> VerifyReport {
    let checks = vec![
        check("ryser_matches_the_expansion_oracle", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for i in 0..40 {
                let n = 1 + i % 6;
                let a = random_nonnegative(n, &whole(2), &mut rng);
                let fast = permanent_ryser(&a).map_err(|e| e.to_string())?.total;
                let slow = permanent_naive(&a).map_err(|e| e.to_string())?;
                if fast != slow {
                    return Err(format!("mismatch at n = {n}: {fast} vs {slow}"));
                }
            }
            Ok(())
        }),
        check("block_example_scores_five_by_every_route", || {
            let a = Matrix::direct_sum(&[
                m2(),
                m2(),
                m2().scale(&frac(1, 2)),
                Matrix::zeros(3),
            ])
            .map_err(|e| e.to_string())?;
            let m = a.i_minus();
            let five = whole(5);
            if permanent_naive(&m).map_err(|e| e.to_string())? != five {
                return Err("expansion route missed 5".into());
            }
            if permanent_ryser(&m).map_err(|e| e.to_string())?.total != five {
                return Err("trace route missed 5".into());
            }
            let gray = permanent_gray(&FloatMatrix::from_exact(&m)).map_err(|e| e.to_string())?;
            if (gray - 5.0).abs() > 1e-9 {
                return Err(format!("float route gave {gray}"));
            }
            if per_via_cycles(&a).map_err(|e| e.to_string())? != five {
                return Err("cycle route missed 5".into());
            }
            Ok(())
        }),
        check("closed_form_witnesses_certify_exactly", || {
            for n in [2usize, 4, 6, 9] {
                let max_halves = if n == 9 { 16 } else { 2 * n };
                for halves in 0..=max_halves {
                    let s = frac(halves as i64, 2);
                    let report = fixed_sum_bound(n, &s).map_err(|e| e.to_string())?;
                    let witness = report.witness.as_ref().ok_or("missing witness")?;
                    let attained = per_i_minus(witness).map_err(|e| e.to_string())?;
                    if attained != report.value {
                        return Err(format!("witness off at ({n}, {s})"));
                    }
                }
            }
            Ok(())
        }),
        check("half_circulant_attains_three_halves", || {
            let c = permlab::bounds::circulant3(&frac(1, 2)).map_err(|e| e.to_string())?;
            let value = per_i_minus(&c).map_err(|e| e.to_string())?;
            if value != frac(3, 2) {
                return Err(format!("got {value}"));
            }
            Ok(())
        }),
        check("classical_inequalities_hold_on_samples", || {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for i in 0..60 {
                let n = 1 + i % 8;
                let a = random_row_substochastic(n, &mut rng);
                let m = a.i_minus();
                let per = permanent_ryser(&m).map_err(|e| e.to_string())?.total;
                let det = determinant(&m).map_err(|e| e.to_string())?;
                if det.is_negative() || per < det || per > malek_bound(n) {
                    return Err(format!("inequality chain broken at n = {n}"));
                }
            }
            Ok(())
        }),
        check("transforms_never_decrease_the_objective", || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for i in 0..30 {
                let n = 2 + i % 5;
                let s = frac(n as i64, 2);
                let a = random_doubly_substochastic_fixed_sum(n, &s, &mut rng)
                    .map_err(|e| e.to_string())?;
                let before = per_i_minus(&a).map_err(|e| e.to_string())?;
                let (zeroed, _) = zero_diagonalize(&a, PreserveClass::DoublySubstochastic)
                    .map_err(|e| e.to_string())?;
                let mid = per_i_minus(&zeroed).map_err(|e| e.to_string())?;
                let (conc, _) = concentrate_rows(&zeroed).map_err(|e| e.to_string())?;
                let after = per_i_minus(&conc).map_err(|e| e.to_string())?;
                if mid < before || after < mid {
                    return Err(format!("objective decreased at n = {n}"));
                }
                if conc.sigma() != a.sigma() {
                    return Err(format!("entry sum drifted at n = {n}"));
                }
            }
            Ok(())
        }),
        check("sequence_fixpoint_matches_the_closed_form", || {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for _ in 0..30 {
                let len = rng.gen_range(1..=8);
                let values: Vec<Rational> =
                    (0..len).map(|_| frac(rng.gen_range(0..=12), 12)).collect();
                let profile = SequenceProfile::from_unsorted(values).map_err(|e| e.to_string())?;
                let (fixpoint, _) = sequence_shift_to_fixpoint(&profile);
                let (best, maximizer) =
                    sequence_max(profile.total(), profile.len()).map_err(|e| e.to_string())?;
                if sequence_objective(&fixpoint) != best || fixpoint != maximizer {
                    return Err("fixpoint missed the maximizer".into());
                }
            }
            Ok(())
        }),
        check("cycle_products_match_the_reference", || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for i in 0..40 {
                let n = 1 + i % 10;
                let a = random_functional(n, &mut rng);
                let product = per_via_cycles(&a).map_err(|e| e.to_string())?;
                let reference = per_i_minus(&a).map_err(|e| e.to_string())?;
                if product != reference {
                    return Err(format!("mismatch at n = {n}"));
                }
            }
            Ok(())
        }),
        check("odd_order_witnesses_leave_the_class", || {
            for n in [3usize, 5, 7] {
                for s in [frac(2 * n as i64 - 1, 2), whole(n as i64)] {
                    let w = construct_rowsub_odd(n, &s).map_err(|e| e.to_string())?;
                    let c = w.classify();
                    if !c.row_substochastic || c.doubly_substochastic {
                        return Err(format!("class wrong at ({n}, {s})"));
                    }
                    let value = per_i_minus(&w).map_err(|e| e.to_string())?;
                    if value != whole(2).pow(((n - 1) / 2) as i32) {
                        return Err(format!("value wrong at ({n}, {s})"));
                    }
                }
            }
            Ok(())
        }),
        check("conjecture_reports_raise_their_flags", || {
            let odd = conjecture_values(&ConjectureKind::OddStochastic { n: 5 })
                .map_err(|e| e.to_string())?;
            if odd.flags.is_empty() {
                return Err("odd stochastic reading raised no flag".into());
            }
            let narrow = conjecture_values(&ConjectureKind::Omega3 { s: frac(17, 8) })
                .map_err(|e| e.to_string())?;
            if narrow.flags.is_empty() {
                return Err("omega3 low branch raised no flag".into());
            }
            Ok(())
        }),
        check("grid_scan_boundary_and_counterexample_reproduce", || {
            let top = exhaustive_omega3(3.0, 0.125).map_err(|e| e.to_string())?;
            if top.max_value != frac(3, 2) || top.exceeds_envelope {
                return Err(format!("s = 3 scan gave {}", top.max_value));
            }
            let low = exhaustive_omega3(2.125, 0.125).map_err(|e| e.to_string())?;
            if low.max_value != frac(119, 64) || !low.exceeds_envelope {
                return Err(format!(
                    "s = 17/8 scan gave {} (envelope {})",
                    low.max_value, low.envelope
                ));
            }
            let direct = permanent_naive(&low.argmax.i_minus()).map_err(|e| e.to_string())?;
            if direct != low.max_value {
                return Err("argmax cross-check failed".into());
            }
            Ok(())
        }),
        check("repair_reports_accurate_feasibility", || {
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            for _ in 0..40 {
                let n = rng.gen_range(1..=6);
                let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-0.5..1.5)).collect();
                let m = FloatMatrix::new(n, data).map_err(|e| e.to_string())?;
                let s = rng.gen_range(0.0..=n as f64);
                let outcome = repair(&m, s, ConstraintClass::DoublySubstochasticFixedSum)
                    .map_err(|e| e.to_string())?;
                if outcome.rounds > 1000 {
                    return Err("repair exceeded the round cap".into());
                }
                let feasible = constraint_violation(&outcome.matrix, s) <= 1e-12;
                if outcome.feasible != feasible {
                    return Err("feasibility flag disagrees with the violation".into());
                }
                if outcome.feasible {
                    let exact = outcome.matrix.to_rational_grid(20).map_err(|e| e.to_string())?;
                    if exact.entries().any(|(_, _, v)| v.is_negative())
                        || (0..n).any(|i| !exact.get(i, i).is_zero())
                    {
                        return Err("rationalized repair output left the class".into());
                    }
                }
            }
            Ok(())
        }),
        check("search_recovers_the_small_construction", || {
            let config = SearchConfig {
                n: 4,
                s: 3.0,
                class: ConstraintClass::DoublySubstochasticFixedSum,
                restarts: 9,
                steps_per_restart: 4000,
                seed: 71,
                ..SearchConfig::default()
            };
            let result = maximize(&config).map_err(|e| e.to_string())?;
            let formula = fixed_sum_bound(4, &whole(3))
                .map_err(|e| e.to_string())?
                .value
                .to_f64()
                .ok_or("formula overflow")?;
            if (result.best_value - formula).abs() > 1e-4 {
                return Err(format!("best {} vs formula {formula}", result.best_value));
            }
            if result.best_value > formula + 1e-9 {
                return Err("search exceeded a proven bound".into());
            }
            Ok(())
        }),
    ];

    let passed = checks.iter().filter(|c| c.ok).count();
    let failed = checks.len() - passed;
    VerifyReport {
        checks,
        passed,
        failed,
    }
}
