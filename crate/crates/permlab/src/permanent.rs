//! Permanent evaluators and the sign structure behind the inclusion-exclusion
//! expansion of `per(I - A)`.
//!
//! Three independent routes are kept deliberately separate so they can check
//! one another:
//! * [`permanent_naive`]: sum over all permutations, exact rationals;
//! * [`permanent_ryser`]: inclusion-exclusion over column replacements,
//!   exact rationals, with the per-level sums exposed as a trace;
//! * [`permanent_gray`]: Gray-code subset iteration over 64-bit floats with
//!   incremental row-sum updates (2^n * n work instead of 2^n * n^2).

use num::bigint::BigInt;
use num::integer::lcm;
use num::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Rational};

/// Order limits for the exponential evaluators. These are configuration
/// values, not hard constants; the defaults keep worst-case runs in seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderGuards {
    pub naive_max: usize,
    pub ryser_max: usize,
    pub gray_max: usize,
}

impl Default for OrderGuards {
    fn default() -> Self {
        Self {
            naive_max: 9,
            ryser_max: 14,
            gray_max: 30,
        }
    }
}

fn check_guard(op: &'static str, n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::OrderGuard { op, n, max });
    }
    Ok(())
}

/// Exact permanent by explicit enumeration of permutations.
///
/// Depth-first over rows with a used-column mask; branches whose partial
/// product is already zero are skipped, which changes nothing in the sum.
pub fn permanent_naive(a: &Matrix) -> Result<Rational> {
    permanent_naive_guarded(a, &OrderGuards::default())
}

pub fn permanent_naive_guarded(a: &Matrix, guards: &OrderGuards) -> Result<Rational> {
    check_guard("permanent_naive", a.order(), guards.naive_max)?;
    let n = a.order();
    let mut acc = Rational::zero();
    let mut partial = Vec::with_capacity(n + 1);
    partial.push(Rational::one());
    dfs_rows(a, 0, 0u32, &mut partial, &mut acc);
    Ok(acc)
}

fn dfs_rows(a: &Matrix, row: usize, used: u32, partial: &mut Vec<Rational>, acc: &mut Rational) {
    let n = a.order();
    if row == n {
        *acc += partial.last().expect("partial stack is never empty");
        return;
    }
    for col in 0..n {
        if used & (1 << col) != 0 {
            continue;
        }
        let v = a.get(row, col);
        if v.is_zero() {
            continue;
        }
        let next = partial.last().unwrap() * v;
        partial.push(next);
        dfs_rows(a, row + 1, used | (1 << col), partial, acc);
        partial.pop();
    }
}

/// The per-level sums of the inclusion-exclusion expansion.
///
/// Entry `m` is the signed sum `(-1)^m * sum_{|J| = m} S(A_J)` where `A_J`
/// is `A` with the columns in `J` replaced by zeros and `S` is the product
/// of row sums. `total` is the permanent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RyserTrace {
    pub n: usize,
    #[serde(with = "crate::serde_util::rat_vec")]
    pub per_level_sums: Vec<Rational>,
    #[serde(with = "crate::serde_util::rat")]
    pub total: Rational,
}

/// Exact permanent by inclusion-exclusion over column replacements.
pub fn permanent_ryser(a: &Matrix) -> Result<RyserTrace> {
    permanent_ryser_guarded(a, &OrderGuards::default())
}

pub fn permanent_ryser_guarded(a: &Matrix, guards: &OrderGuards) -> Result<RyserTrace> {
    check_guard("permanent_ryser", a.order(), guards.ryser_max)?;
    let n = a.order();
    let full: Vec<Rational> = a.row_sums();
    let mut per_level_sums = Vec::with_capacity(n);
    for m in 0..n {
        let mut level = Rational::zero();
        for_each_combination(n, m, |cols| {
            let mut product = Rational::one();
            for i in 0..n {
                let mut r = full[i].clone();
                for &j in cols {
                    r -= a.get(i, j);
                }
                if r.is_zero() {
                    return;
                }
                product *= r;
            }
            level += product;
        });
        if m % 2 == 1 {
            level = -level;
        }
        per_level_sums.push(level);
    }
    let total = per_level_sums.iter().sum();
    Ok(RyserTrace {
        n,
        per_level_sums,
        total,
    })
}

/// Calls `visit` once per size-`m` subset of `0..n`, in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, m: usize, mut visit: F) {
    if m > n {
        return;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        visit(&idx);
        // Advance the rightmost index that still has room.
        let mut i = m;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - m {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for k in i + 1..m {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Exact `per(I - A)` through the inclusion-exclusion route.
pub fn per_i_minus(a: &Matrix) -> Result<Rational> {
    per_i_minus_guarded(a, &OrderGuards::default())
}

pub fn per_i_minus_guarded(a: &Matrix, guards: &OrderGuards) -> Result<Rational> {
    Ok(permanent_ryser_guarded(&a.i_minus(), guards)?.total)
}

/// Exact determinant via fraction-free (Bareiss) elimination.
///
/// Row denominators are cleared first so the elimination runs over integers;
/// every division in the Bareiss recurrence is exact.
pub fn determinant(a: &Matrix) -> Result<Rational> {
    let n = a.order();
    let mut scale = BigInt::one();
    let mut b: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let l = a
            .row(i)
            .iter()
            .fold(BigInt::one(), |acc, v| lcm(acc, v.denom().clone()));
        b.push(
            a.row(i)
                .iter()
                .map(|v| v.numer() * (&l / v.denom()))
                .collect(),
        );
        scale *= l;
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if b[k][k].is_zero() {
            match (k + 1..n).find(|&r| !b[r][k].is_zero()) {
                Some(r) => {
                    b.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(Rational::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &b[i][j] * &b[k][k] - &b[i][k] * &b[k][j];
                b[i][j] = num / &prev; // exact division, Bareiss invariant
            }
            b[i][k] = BigInt::zero();
        }
        prev = b[k][k].clone();
    }
    Ok(Rational::new(sign * b[n - 1][n - 1].clone(), scale))
}

// ---------------------------------------------------------------------------
// Float matrices and the Gray-code kernel
// ---------------------------------------------------------------------------

/// A square matrix of 64-bit floats: the numeric boundary used by the
/// Gray-code evaluator and the conjecture search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FloatRepr", into = "FloatRepr")]
pub struct FloatMatrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FloatRepr {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl From<FloatMatrix> for FloatRepr {
    fn from(m: FloatMatrix) -> Self {
        let entries = (0..m.n)
            .map(|i| m.data[i * m.n..(i + 1) * m.n].to_vec())
            .collect();
        FloatRepr { n: m.n, entries }
    }
}

impl TryFrom<FloatRepr> for FloatMatrix {
    type Error = Error;

    fn try_from(r: FloatRepr) -> Result<Self> {
        if r.entries.len() != r.n || r.entries.iter().any(|row| row.len() != r.n) {
            return Err(Error::MalformedMatrix("ragged float entries".into()));
        }
        FloatMatrix::new(r.n, r.entries.into_iter().flatten().collect())
    }
}

impl FloatMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::MalformedMatrix(format!(
                "expected {} float entries for order {}",
                n * n,
                n
            )));
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn sigma(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                s[j] += self.get(i, j);
            }
        }
        s
    }

    pub fn i_minus(&self) -> Self {
        let mut out = Self {
            n: self.n,
            data: self.data.iter().map(|v| -v).collect(),
        };
        for i in 0..self.n {
            let d = out.get(i, i);
            out.set(i, i, d + 1.0);
        }
        out
    }

    pub fn validate_finite(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                if !self.get(i, j).is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn from_exact(a: &Matrix) -> Self {
        let n = a.order();
        let data = (0..n)
            .flat_map(|i| a.row(i).iter().map(|v| v.to_f64().unwrap_or(f64::NAN)))
            .collect();
        Self { n, data }
    }

    /// Snaps every entry to the nearest multiple of `1/2^bits`.
    pub fn to_rational_grid(&self, bits: u32) -> Result<Matrix> {
        self.validate_finite()?;
        let denom = BigInt::from(1u8) << bits;
        let scale = (1u64 << bits) as f64;
        let data = self
            .data
            .iter()
            .map(|v| Rational::new(BigInt::from((v * scale).round() as i64), denom.clone()))
            .collect();
        Matrix::new(self.n, data)
    }
}

/// Permanent over floats by Gray-code subset iteration.
///
/// Row sums over the current column subset are updated incrementally: one
/// column enters or leaves per step, so each of the `2^n - 1` steps costs
/// `O(n)` instead of `O(n^2)`.
pub fn permanent_gray(a: &FloatMatrix) -> Result<f64> {
    permanent_gray_guarded(a, &OrderGuards::default())
}

pub fn permanent_gray_guarded(a: &FloatMatrix, guards: &OrderGuards) -> Result<f64> {
    let n = a.order();
    check_guard("permanent_gray", n, guards.gray_max)?;
    a.validate_finite()?;
    // per(A) = (-1)^n * sum over nonempty column subsets S of
    //          (-1)^{|S|} * prod_i (sum_{j in S} a_ij)
    let mut acc = vec![0.0f64; n];
    let mut total = 0.0f64;
    let mut gray_prev = 0u64;
    for k in 1u64..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let changed = (gray ^ gray_prev).trailing_zeros() as usize;
        let entering = gray & (1 << changed) != 0;
        for i in 0..n {
            let v = a.get(i, changed);
            if entering {
                acc[i] += v;
            } else {
                acc[i] -= v;
            }
        }
        gray_prev = gray;
        let mut prod = 1.0f64;
        for &r in &acc {
            prod *= r;
        }
        let bits = gray.count_ones() as usize;
        if (n + bits).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Sign structure of the expansion of per(I - A)
// ---------------------------------------------------------------------------

/// Fixed seed for sampled sign-structure checks, so reports are reproducible.
const SIGN_STRUCTURE_SEED: u64 = 0x5157_ab1e;

/// Threshold on the total subset count below which the check is exhaustive.
const EXHAUSTIVE_SUBSET_LIMIT: u64 = 1 << 16;

/// Observed signs in the expansion of `per(I - A)` for doubly substochastic
/// `A`: row sums of `P = I - A` are nonnegative, a replaced row sum is
/// nonpositive, and the level sums alternate with the replacement count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignStructureReport {
    pub n: usize,
    /// `r_i(P) >= 0`, one flag per row.
    pub row_sum_nonneg: Vec<bool>,
    /// `r_i(P(J)) <= 0` for `i` in `J`, one flag per checked pair.
    pub replaced_row_nonpos: Vec<bool>,
    /// Sign of `S(P_m(J))` matches the parity of `m`, one flag per level.
    pub level_sign_ok: Vec<bool>,
    /// Whether every subset was checked or a seeded sample.
    pub exhaustive: bool,
    pub samples_checked: usize,
}

impl SignStructureReport {
    pub fn all_ok(&self) -> bool {
        self.row_sum_nonneg.iter().all(|&b| b)
            && self.replaced_row_nonpos.iter().all(|&b| b)
            && self.level_sign_ok.iter().all(|&b| b)
    }
}

/// Checks the three sign claims on `P = I - A`.
///
/// Exhaustive over all column subsets while `2^n` stays below 2^16;
/// beyond that, `subset_samples` subsets are drawn from a fixed-seed
/// generator so two runs agree.
pub fn check_sign_structure(a: &Matrix, subset_samples: usize) -> Result<SignStructureReport> {
    let report = a.classify();
    if !report.doubly_substochastic {
        return Err(Error::Precondition {
            op: "check_sign_structure",
            detail: "matrix must be doubly substochastic".into(),
        });
    }
    let n = a.order();
    let p = a.i_minus();
    let full = p.row_sums();
    let row_sum_nonneg: Vec<bool> = full.iter().map(|r| !r.is_negative()).collect();

    let mut level_sign_ok = vec![true; n];
    let mut replaced_row_nonpos = Vec::new();
    let mut samples_checked = 0usize;

    let mut check_subset = |cols: &[usize]| {
        samples_checked += 1;
        let m = cols.len();
        let mut product = Rational::one();
        for i in 0..n {
            let mut r = full[i].clone();
            for &j in cols {
                r -= p.get(i, j);
            }
            if cols.contains(&i) {
                replaced_row_nonpos.push(!r.is_positive());
            }
            product *= r;
        }
        let ok = if m.is_multiple_of(2) {
            !product.is_negative()
        } else {
            !product.is_positive()
        };
        if m < n && !ok {
            level_sign_ok[m] = false;
        }
    };

    let exhaustive = n < 64 && (1u64 << n) <= EXHAUSTIVE_SUBSET_LIMIT;
    if exhaustive {
        for m in 0..n {
            for_each_combination(n, m, &mut check_subset);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SIGN_STRUCTURE_SEED);
        let mut cols: Vec<usize> = (0..n).collect();
        for _ in 0..subset_samples {
            let m = rng.gen_range(0..n);
            cols.shuffle(&mut rng);
            let mut chosen = cols[..m].to_vec();
            chosen.sort_unstable();
            check_subset(&chosen);
        }
    }

    Ok(SignStructureReport {
        n,
        row_sum_nonneg,
        replaced_row_nonpos,
        level_sign_ok,
        exhaustive,
        samples_checked,
    })
}

#[cfg(test)]
mod tests {
    use crate::matrix::{frac, whole};

    use super::*;

    fn swap2() -> Matrix {
        Matrix::from_ints(&[&[0, 1], &[1, 0]]).unwrap()
    }

    #[test]
    fn naive_small_cases() {
        assert_eq!(permanent_naive(&Matrix::identity(4)).unwrap(), whole(1));
        let ones = Matrix::from_ints(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]).unwrap();
        assert_eq!(permanent_naive(&ones).unwrap(), whole(6));
        assert_eq!(permanent_naive(&swap2()).unwrap(), whole(1));
        let m = Matrix::from_ints(&[&[1, 2], &[3, 4]]).unwrap();
        assert_eq!(permanent_naive(&m).unwrap(), whole(10));
    }

    #[test]
    fn naive_guard_refuses_large_orders() {
        let big = Matrix::zeros(10);
        match permanent_naive(&big) {
            Err(Error::OrderGuard { op, n, max }) => {
                assert_eq!(op, "permanent_naive");
                assert_eq!((n, max), (10, 9));
            }
            other => panic!("expected guard refusal, got {other:?}"),
        }
    }

    #[test]
    fn ryser_trace_identity_two() {
        let t = permanent_ryser(&Matrix::identity(2)).unwrap();
        assert_eq!(t.per_level_sums, vec![whole(1), whole(0)]);
        assert_eq!(t.total, whole(1));
    }

    #[test]
    fn ryser_trace_swap_block() {
        let t = permanent_ryser(&swap2()).unwrap();
        assert_eq!(t.total, whole(1));
        let level_sum: Rational = t.per_level_sums.iter().sum();
        assert_eq!(level_sum, t.total);
    }

    #[test]
    fn ryser_matches_naive_on_fixed_rationals() {
        let m = Matrix::from_rows(vec![
            vec![frac(1, 2), frac(1, 3), whole(2)],
            vec![whole(0), frac(5, 7), frac(1, 2)],
            vec![frac(2, 3), whole(1), frac(1, 9)],
        ])
        .unwrap();
        assert_eq!(permanent_ryser(&m).unwrap().total, permanent_naive(&m).unwrap());
    }

    #[test]
    fn gray_matches_exact_values() {
        let id = FloatMatrix::from_exact(&Matrix::identity(5));
        assert_eq!(permanent_gray(&id).unwrap(), 1.0);
        let ones = FloatMatrix::new(4, vec![1.0; 16]).unwrap();
        assert_eq!(permanent_gray(&ones).unwrap(), 24.0);
    }

    #[test]
    fn gray_rejects_non_finite() {
        let mut m = FloatMatrix::zeros(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(
            permanent_gray(&m),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn per_i_minus_of_diagonal_witness() {
        // [[0,1,0],[1,0,0],[0,0,1/2]]: per(I - A) = (1*1 - (-1)(-1) term) ... = 2 * 1/2 = 1.
        let a = Matrix::from_rows(vec![
            vec![whole(0), whole(1), whole(0)],
            vec![whole(1), whole(0), whole(0)],
            vec![whole(0), whole(0), frac(1, 2)],
        ])
        .unwrap();
        assert_eq!(per_i_minus(&a).unwrap(), whole(1));
    }

    #[test]
    fn determinant_small_cases() {
        let m = Matrix::from_ints(&[&[1, 2], &[3, 4]]).unwrap();
        assert_eq!(determinant(&m).unwrap(), whole(-2));
        let singular = Matrix::from_ints(&[&[1, 2], &[2, 4]]).unwrap();
        assert_eq!(determinant(&singular).unwrap(), whole(0));
        let half_swap = swap2().scale(&frac(1, 2));
        assert_eq!(determinant(&half_swap.i_minus()).unwrap(), frac(3, 4));
    }

    #[test]
    fn determinant_matches_cofactor_oracle() {
        fn cofactor_det(a: &Matrix) -> Rational {
            let n = a.order();
            if n == 1 {
                return a.get(0, 0).clone();
            }
            let mut acc = Rational::zero();
            for j in 0..n {
                if a.get(0, j).is_zero() {
                    continue;
                }
                let term = a.get(0, j) * cofactor_det(&a.minor(0, j).unwrap());
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
        let m = Matrix::from_rows(vec![
            vec![frac(1, 2), whole(-3), frac(2, 5), whole(1)],
            vec![whole(0), frac(7, 2), whole(1), frac(-1, 3)],
            vec![whole(2), whole(0), frac(1, 7), whole(4)],
            vec![frac(3, 4), whole(1), whole(0), frac(5, 6)],
        ])
        .unwrap();
        assert_eq!(determinant(&m).unwrap(), cofactor_det(&m));
    }

    #[test]
    fn determinant_needs_pivot_swaps() {
        let m = Matrix::from_ints(&[&[0, 1, 2], &[1, 0, 3], &[4, 5, 0]]).unwrap();
        // Expansion: det = 0*(0-15) - 1*(0-12) + 2*(5-0) = 22.
        assert_eq!(determinant(&m).unwrap(), whole(22));
    }

    #[test]
    fn sign_structure_holds_inside_the_class() {
        let a = Matrix::from_rows(vec![
            vec![frac(1, 4), frac(1, 2), whole(0)],
            vec![frac(1, 3), whole(0), frac(1, 3)],
            vec![whole(0), frac(1, 4), frac(1, 2)],
        ])
        .unwrap();
        let report = check_sign_structure(&a, 0).unwrap();
        assert!(report.exhaustive);
        assert!(report.all_ok());
        assert_eq!(report.level_sign_ok.len(), 3);
    }

    #[test]
    fn sign_structure_rejects_outside_the_class() {
        let a = Matrix::from_ints(&[&[0, 1], &[0, 1]]).unwrap();
        assert!(matches!(
            check_sign_structure(&a, 0),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn combinations_visit_each_subset_once() {
        let mut seen = Vec::new();
        for_each_combination(5, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 10);
        let mut dedup = seen.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);
    }
}
