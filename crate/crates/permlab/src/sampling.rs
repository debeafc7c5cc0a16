//! Seeded random generators for the matrix classes under study.
//!
//! Everything here produces exact rationals so class membership (row sums,
//! column sums, the total `sigma`) holds exactly, not within float slop.
//! These are sampling conveniences for tests and evidence gathering, not
//! uniform laws on the polytopes.

use num::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{frac, Matrix, Rational};

/// Denominator used for random rational draws. Small enough to keep bignum
/// arithmetic cheap, fine enough to explore the polytopes.
const DENOM: i64 = 64;

/// Uniform rational in `[0, hi]` on the `1/DENOM` grid.
fn rand_rat_upto(rng: &mut impl Rng, hi: &Rational) -> Rational {
    if !hi.is_positive() {
        return Rational::zero();
    }
    let steps = (hi * frac(DENOM, 1)).floor().to_integer();
    let steps = i64::try_from(steps).unwrap_or(i64::MAX).max(0);
    let k = rng.gen_range(0..=steps);
    let draw = frac(k, DENOM);
    if &draw > hi {
        hi.clone()
    } else {
        draw
    }
}

/// Random permutation matrix.
pub fn random_permutation_matrix(n: usize, rng: &mut impl Rng) -> Matrix {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut rows = vec![vec![Rational::zero(); n]; n];
    for (i, &j) in perm.iter().enumerate() {
        rows[i][j] = Rational::one();
    }
    Matrix::from_rows(rows).expect("square by construction")
}

/// Random doubly stochastic matrix: a convex combination of `k` random
/// permutation matrices with random rational weights.
pub fn random_doubly_stochastic(n: usize, k: usize, rng: &mut impl Rng) -> Matrix {
    let k = k.max(1);
    let mut weights: Vec<Rational> = (0..k).map(|_| frac(rng.gen_range(1..=DENOM), 1)).collect();
    let total: Rational = weights.iter().sum();
    for w in &mut weights {
        *w /= &total;
    }
    let mut acc = Matrix::zeros(n);
    for w in &weights {
        let p = random_permutation_matrix(n, rng);
        acc = acc.add(&p.scale(w)).expect("orders match");
    }
    acc
}

/// Random nonnegative matrix with entries in `[0, hi]`.
pub fn random_nonnegative(n: usize, hi: &Rational, rng: &mut impl Rng) -> Matrix {
    let data = (0..n * n).map(|_| rand_rat_upto(rng, hi)).collect();
    Matrix::new(n, data).expect("square by construction")
}

/// Random row substochastic matrix with a free total.
pub fn random_row_substochastic(n: usize, rng: &mut impl Rng) -> Matrix {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let budget = rand_rat_upto(rng, &Rational::one());
        rows.push(random_row_with_sum(n, &budget, rng));
    }
    Matrix::from_rows(rows).expect("square by construction")
}

fn random_row_with_sum(n: usize, sum: &Rational, rng: &mut impl Rng) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); n];
    let mut remaining = sum.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for (pos, &j) in order.iter().enumerate() {
        if remaining.is_zero() {
            break;
        }
        let v = if pos + 1 == order.len() {
            remaining.clone()
        } else {
            rand_rat_upto(rng, &remaining)
        };
        remaining -= &v;
        row[j] = v;
    }
    row
}

/// Random row substochastic matrix with `sigma(A) = s` exactly.
///
/// Row budgets in `[0, 1]` summing to `s` are drawn first, then each row's
/// budget is split across random columns.
pub fn random_row_substochastic_fixed_sum(
    n: usize,
    s: &Rational,
    rng: &mut impl Rng,
) -> Result<Matrix> {
    check_total(n, s, "random_row_substochastic_fixed_sum")?;
    let budgets = random_budgets(n, s, rng);
    let rows = budgets
        .iter()
        .map(|b| random_row_with_sum(n, b, rng))
        .collect();
    Ok(Matrix::from_rows(rows).expect("square by construction"))
}

/// `n` values in `[0, 1]` summing to `s` exactly.
fn random_budgets(n: usize, s: &Rational, rng: &mut impl Rng) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); n];
    let mut remaining = s.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for (pos, &i) in order.iter().enumerate() {
        let slots_left = (n - pos - 1) as i64;
        // Keep the tail feasible: what remains must fit in the other slots.
        let low = (&remaining - frac(slots_left, 1)).max(Rational::zero());
        let high = remaining.clone().min(Rational::one());
        let v = if pos + 1 == order.len() {
            remaining.clone()
        } else {
            (&low + rand_rat_upto(rng, &(&high - &low))).min(high.clone())
        };
        remaining -= &v;
        out[i] = v;
    }
    out
}

/// Random doubly substochastic matrix with `sigma(A) = s` exactly.
///
/// Mass is routed like a capped transportation problem: random partial fills
/// against row and column capacities, then a deterministic sweep places
/// whatever is left (always possible since `s <= n`).
pub fn random_doubly_substochastic_fixed_sum(
    n: usize,
    s: &Rational,
    rng: &mut impl Rng,
) -> Result<Matrix> {
    check_total(n, s, "random_doubly_substochastic_fixed_sum")?;
    // Mixing in a scaled doubly stochastic start point spreads samples
    // between the interior and the capped faces of the slice.
    if rng.gen_bool(0.5) {
        let base = random_doubly_stochastic(n, rng.gen_range(1..=3), rng);
        let t = s / frac(n as i64, 1);
        return Ok(base.scale(&t));
    }
    let mut rows = vec![vec![Rational::zero(); n]; n];
    let mut row_cap = vec![Rational::one(); n];
    let mut col_cap = vec![Rational::one(); n];
    let mut remaining = s.clone();
    let attempts = 4 * n * n;
    for _ in 0..attempts {
        if remaining.is_zero() {
            break;
        }
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let cap = row_cap[i].clone().min(col_cap[j].clone()).min(remaining.clone());
        let v = rand_rat_upto(rng, &cap);
        if v.is_zero() {
            continue;
        }
        rows[i][j] += &v;
        row_cap[i] -= &v;
        col_cap[j] -= &v;
        remaining -= &v;
    }
    if !remaining.is_zero() {
        // Deterministic completion: total capacity on each side is n - sigma
        // so far, which is at least the remaining mass because s <= n.
        let mut order: Vec<(usize, usize)> = (0..n * n).map(|k| (k / n, k % n)).collect();
        order.shuffle(rng);
        for (i, j) in order {
            if remaining.is_zero() {
                break;
            }
            let cap = row_cap[i].clone().min(col_cap[j].clone()).min(remaining.clone());
            if cap.is_zero() {
                continue;
            }
            rows[i][j] += &cap;
            row_cap[i] -= &cap;
            col_cap[j] -= &cap;
            remaining -= &cap;
        }
        assert!(remaining.is_zero(), "transport completion must succeed");
    }
    Ok(Matrix::from_rows(rows).expect("square by construction"))
}

/// Random member of the zero-diagonal, at-most-one-positive-per-row class.
///
/// Equivalent to a random functional digraph: each row independently either
/// stays empty or points at one random other column with a random weight.
pub fn random_functional(n: usize, rng: &mut impl Rng) -> Matrix {
    let mut rows = vec![vec![Rational::zero(); n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        if n >= 2 && rng.gen_bool(0.75) {
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let w = frac(rng.gen_range(1..=DENOM), DENOM);
            row[j] = w;
        }
    }
    Matrix::from_rows(rows).expect("square by construction")
}

fn check_total(n: usize, s: &Rational, op: &'static str) -> Result<()> {
    if s.is_negative() || s > &frac(n as i64, 1) {
        return Err(Error::OutOfRange {
            op,
            detail: format!("total {} outside [0, {}]", s, n),
        });
    }
    Ok(())
}
