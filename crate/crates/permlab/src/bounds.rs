//! Closed-form bound evaluators, extremal witness constructions, and the
//! nonincreasing-sequence optimization lemmas behind them.
//!
//! The central quantity throughout is `per(I - A)` for a nonnegative `A`
//! with constrained row/column sums. The exact maximum over doubly
//! substochastic matrices with entry sum `s` is
//! `2^{e/2} (1 + ((s - e)/2)^2)` with `e` the greatest even integer at most
//! `s`, valid when the order is even or `s <= n - 1`; the remaining odd-order
//! corner is covered here by explicit candidate constructions and clearly
//! labeled conjectured values.

use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{frac, whole, Matrix, Rational};

/// 2^k as an exact rational.
fn pow2(k: usize) -> Rational {
    Rational::from_integer(BigInt::one() << k)
}

/// Greatest even integer at most `s`. Requires `s >= 0`.
fn greatest_even_leq(s: &Rational) -> usize {
    let half_floor = (s / whole(2)).floor().to_integer();
    (half_floor * BigInt::from(2))
        .to_usize()
        .expect("even part of a small nonnegative sum fits in usize")
}

/// The closed-form maximum `2^{e/2} (1 + ((s - e)/2)^2)`.
fn closed_form(s: &Rational, e: usize) -> Rational {
    let r = (s - whole(e as i64)) / whole(2);
    pow2(e / 2) * (Rational::one() + &r * &r)
}

/// The 2x2 swap block `[[0, 1], [1, 0]]`.
fn m2() -> Matrix {
    Matrix::from_ints(&[&[0, 1], &[1, 0]]).expect("static 2x2 block")
}

/// The 2x2 block `[[0, v], [v, 0]]` carrying the fractional remainder.
fn swap_block(v: &Rational) -> Matrix {
    Matrix::from_rows(vec![
        vec![Rational::zero(), v.clone()],
        vec![v.clone(), Rational::zero()],
    ])
    .expect("static 2x2 block")
}

/// Which result a [`BoundReport`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// Global bound `2^{floor(n/2)}` for row substochastic matrices.
    Malek,
    /// Exact maximum over doubly substochastic matrices with entry sum `s`.
    FixedSumMaximum,
    /// Supremum over doubly substochastic matrices with sub-defect `k`.
    SubDefectSupremum,
    /// Conjectured maximum over doubly stochastic matrices of odd order.
    OddStochasticConjecture,
    /// Conjectured maximum over 3x3 doubly substochastic matrices.
    Omega3Conjecture,
    /// Conjectured maximum for odd order with entry sum above `n - 1`.
    OddSubstochasticConjecture,
}

/// Distinguishes the two evaluations of a conjectured bound: the value as
/// printed in its source statement, and the reinterpretation that is
/// consistent with the proven small cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    Literal,
    Consistent,
}

/// A bound value together with its provenance and, when available, an
/// order-`n` witness matrix attaining it.
///
/// Invariants: `e` is even with `e <= s < e + 2`; when `witness` is present
/// its entry sum is exactly `s` and `per(I - witness)` equals `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    #[serde(with = "crate::serde_util::rat")]
    pub s: Rational,
    pub e: usize,
    #[serde(with = "crate::serde_util::rat")]
    pub value: Rational,
    pub source: BoundSource,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Matrix>,
    /// True when the stated hypotheses of the result hold for these
    /// parameters; conjectured values always report false.
    pub hypotheses_met: bool,
    /// True when the value is a supremum that is approached but not attained.
    pub supremum: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reading: Option<Reading>,
}

/// Global upper bound `2^{floor(n/2)}` on `per(I - A)` for row substochastic `A`.
pub fn malek_bound(n: usize) -> Rational {
    pow2(n / 2)
}

/// [`malek_bound`] packaged with an attaining witness: swap blocks for even
/// order, the odd-order row-substochastic construction otherwise.
pub fn malek_report(n: usize) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::OutOfRange {
            op: "malek_report",
            detail: "order must be at least 1".into(),
        });
    }
    let witness = if n.is_multiple_of(2) {
        construct_extremal(n, &whole(n as i64))?
    } else if n >= 3 {
        construct_rowsub_odd(n, &whole(n as i64))?
    } else {
        Matrix::zeros(1)
    };
    let s = witness.sigma();
    let e = greatest_even_leq(&s);
    Ok(BoundReport {
        n,
        s,
        e,
        value: malek_bound(n),
        source: BoundSource::Malek,
        witness: Some(witness),
        hypotheses_met: true,
        supremum: false,
        reading: None,
    })
}

/// Exact maximum of `per(I - A)` over doubly substochastic matrices of order
/// `n` with entry sum `s`, valid when `n` is even or `s <= n - 1`.
///
/// Outside that range the closed form is still evaluated but
/// `hypotheses_met` is false and no witness is attached.
pub fn fixed_sum_bound(n: usize, s: &Rational) -> Result<BoundReport> {
    validate_sum_range("fixed_sum_bound", n, s)?;
    let e = greatest_even_leq(s);
    let hypotheses_met = n.is_multiple_of(2) || *s <= whole(n as i64 - 1);
    let witness = if hypotheses_met {
        Some(construct_extremal(n, s)?)
    } else {
        None
    };
    Ok(BoundReport {
        n,
        s: s.clone(),
        e,
        value: closed_form(s, e),
        source: BoundSource::FixedSumMaximum,
        witness,
        hypotheses_met,
        supremum: false,
        reading: None,
    })
}

/// Supremum of `per(I - A)` over doubly substochastic matrices with
/// sub-defect exactly `k`, obtained from [`fixed_sum_bound`] at the capped
/// sum `min(n - k + 1, n)`.
///
/// For `k >= 1` the sum range is half-open, so the value is a supremum and
/// no witness exists; `k = 0` (even order only) pins the sum at `n` and the
/// swap-block witness attains it.
pub fn subdefect_bound(n: usize, k: usize) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::OutOfRange {
            op: "subdefect_bound",
            detail: "order must be at least 1".into(),
        });
    }
    let k_min = if n % 2 == 1 { 1 } else { 0 };
    if k < k_min || k > n {
        return Err(Error::OutOfRange {
            op: "subdefect_bound",
            detail: format!("sub-defect k = {k} must lie in [{k_min}, {n}] for order {n}"),
        });
    }
    let s = whole((n - k + 1).min(n) as i64);
    let e = greatest_even_leq(&s);
    let hypotheses_met = n.is_multiple_of(2) || k > 1;
    let witness = if k == 0 {
        Some(construct_extremal(n, &s)?)
    } else {
        None
    };
    Ok(BoundReport {
        n,
        s: s.clone(),
        e,
        value: closed_form(&s, e),
        source: BoundSource::SubDefectSupremum,
        witness,
        hypotheses_met,
        supremum: k >= 1,
        reading: None,
    })
}

fn validate_sum_range(op: &'static str, n: usize, s: &Rational) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange {
            op,
            detail: "order must be at least 1".into(),
        });
    }
    if s.is_negative() || *s > whole(n as i64) {
        return Err(Error::OutOfRange {
            op,
            detail: format!("sum {s} outside [0, {n}]"),
        });
    }
    Ok(())
}

/// The maximizing matrix for [`fixed_sum_bound`]: `e/2` swap blocks, one
/// fractional swap block when `s > e`, and a zero block padding to order `n`.
///
/// Fails for odd `n` with `s > n - 1`, where no closed-form maximizer is
/// proven; the numerical search covers that corner.
pub fn construct_extremal(n: usize, s: &Rational) -> Result<Matrix> {
    validate_sum_range("construct_extremal", n, s)?;
    if n % 2 == 1 && *s > whole(n as i64 - 1) {
        return Err(Error::Precondition {
            op: "construct_extremal",
            detail: format!(
                "odd order {n} with sum {s} > {} has no proven closed-form maximizer; \
                 run the numerical search instead",
                n - 1
            ),
        });
    }
    let e = greatest_even_leq(s);
    let mut blocks: Vec<Matrix> = vec![m2(); e / 2];
    if *s > whole(e as i64) {
        let half_rem = (s - whole(e as i64)) / whole(2);
        blocks.push(swap_block(&half_rem));
    }
    let used: usize = blocks.iter().map(Matrix::order).sum();
    if used < n {
        blocks.push(Matrix::zeros(n - used));
    }
    Matrix::direct_sum(&blocks)
}

/// Row-substochastic witness of value `2^{(n-1)/2}` for odd `n` and
/// `n - 1 < s <= n`: swap blocks plus the 3x3 tail
/// `[[0, 1, 0], [1, 0, 0], [0, s - (n-1), 0]]`.
///
/// The tail's middle column sums to `s - n + 2 > 1`, so the output is
/// deliberately not doubly substochastic; inside that smaller class the
/// closed form no longer applies and the true maximum is open.
pub fn construct_rowsub_odd(n: usize, s: &Rational) -> Result<Matrix> {
    if n.is_multiple_of(2) || n < 3 {
        return Err(Error::OutOfRange {
            op: "construct_rowsub_odd",
            detail: format!("order {n} must be odd and at least 3"),
        });
    }
    if *s <= whole(n as i64 - 1) || *s > whole(n as i64) {
        return Err(Error::OutOfRange {
            op: "construct_rowsub_odd",
            detail: format!("sum {s} must lie in ({}, {n}]", n - 1),
        });
    }
    let tail_weight = s - whole(n as i64 - 1);
    let zero = Rational::zero;
    let tail = Matrix::from_rows(vec![
        vec![zero(), Rational::one(), zero()],
        vec![Rational::one(), zero(), zero()],
        vec![zero(), tail_weight, zero()],
    ])?;
    let mut blocks: Vec<Matrix> = vec![m2(); (n - 3) / 2];
    blocks.push(tail);
    Matrix::direct_sum(&blocks)
}

/// The doubly substochastic candidate pair on order 3 with entry sum `s`,
/// together with the exact values of `per(I - .)` for each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Omega3Candidates {
    /// `[[0, 1/2, s/2 - 1], [1/2, 0, 1/2], [s/2 - 1, 1/2, 0]]`.
    pub symmetric: Matrix,
    /// `[[0, 1, 0], [1, 0, 0], [0, 0, s - 2]]`.
    pub swap_plus_loop: Matrix,
    /// `(s^2 - 5s + 12) / 4`, the value of the symmetric candidate.
    #[serde(with = "crate::serde_util::rat")]
    pub symmetric_value: Rational,
    /// `6 - 2s`, the value of the swap-plus-loop candidate.
    #[serde(with = "crate::serde_util::rat")]
    pub swap_plus_loop_value: Rational,
}

impl Omega3Candidates {
    /// The candidate with the larger value, ties to the symmetric one.
    pub fn best(&self) -> (&Matrix, &Rational) {
        if self.symmetric_value >= self.swap_plus_loop_value {
            (&self.symmetric, &self.symmetric_value)
        } else {
            (&self.swap_plus_loop, &self.swap_plus_loop_value)
        }
    }
}

/// The two known lower-bound candidates on the 3x3 fixed-sum slice.
///
/// The interesting range is `2 < s <= 3`; the boundary `s = 2` is also
/// accepted (both candidates remain valid matrices there) so boundary
/// behavior stays observable.
pub fn omega3_candidates(s: &Rational) -> Result<Omega3Candidates> {
    if *s < whole(2) || *s > whole(3) {
        return Err(Error::OutOfRange {
            op: "omega3_candidates",
            detail: format!("sum {s} must lie in [2, 3]"),
        });
    }
    let half = frac(1, 2);
    let corner = s / whole(2) - Rational::one();
    let zero = Rational::zero;
    let symmetric = Matrix::from_rows(vec![
        vec![zero(), half.clone(), corner.clone()],
        vec![half.clone(), zero(), half.clone()],
        vec![corner, half, zero()],
    ])?;
    let swap_plus_loop = Matrix::from_rows(vec![
        vec![zero(), Rational::one(), zero()],
        vec![Rational::one(), zero(), zero()],
        vec![zero(), zero(), s - whole(2)],
    ])?;
    let symmetric_value = (s * s - whole(5) * s + whole(12)) / whole(4);
    let swap_plus_loop_value = whole(6) - whole(2) * s;
    Ok(Omega3Candidates {
        symmetric,
        swap_plus_loop,
        symmetric_value,
        swap_plus_loop_value,
    })
}

/// The zero-diagonal 3x3 circulant `[[0, x, 1-x], [1-x, 0, x], [x, 1-x, 0]]`,
/// doubly stochastic for every `x` in `[0, 1]`, with
/// `per(I - .) = 6x(1 - x)`; `x = 1/2` attains the order-3 doubly stochastic
/// maximum `3/2`.
pub fn circulant3(x: &Rational) -> Result<Matrix> {
    if x.is_negative() || *x > Rational::one() {
        return Err(Error::OutOfRange {
            op: "circulant3",
            detail: format!("weight {x} must lie in [0, 1]"),
        });
    }
    let y = Rational::one() - x;
    let zero = Rational::zero;
    Matrix::from_rows(vec![
        vec![zero(), x.clone(), y.clone()],
        vec![y.clone(), zero(), x.clone()],
        vec![x.clone(), y, zero()],
    ])
}

/// Parameter form of a conjectured maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConjectureKind {
    /// Doubly stochastic matrices of odd order `n`.
    OddStochastic { n: usize },
    /// 3x3 doubly substochastic matrices with entry sum `s` in `(2, 3]`.
    Omega3 {
        #[serde(with = "crate::serde_util::rat")]
        s: Rational,
    },
    /// Odd order `n` with entry sum `s` in `(n - 1, n]`.
    OddSubstochastic {
        n: usize,
        #[serde(with = "crate::serde_util::rat")]
        s: Rational,
    },
}

/// Known internal inconsistencies in the conjecture statements, surfaced
/// rather than silently corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjectureFlagCode {
    /// The stated witness uses `(n-1)/2` swap blocks plus a 3x3 block,
    /// which has order `n + 2`, and its stated value contradicts the proven
    /// order-3 maximum.
    CopyCountOrderMismatch,
    /// The stated lower branch `6 - 4s` is negative on the whole parameter
    /// range, contradicting `per(I - A) >= det(I - A) >= 0`.
    NegativeBranch,
}

/// A flagged inconsistency with a human-readable explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjectureFlag {
    pub code: ConjectureFlagCode,
    pub detail: String,
}

/// Both evaluations of a conjectured maximum: the literal statement and the
/// reading consistent with the proven `n = 3` case, plus any flags raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureValues {
    pub kind: ConjectureKind,
    pub literal: BoundReport,
    pub consistent: BoundReport,
    pub flags: Vec<ConjectureFlag>,
}

/// Evaluates a conjectured maximum under both readings.
///
/// Literal reports carry no witness when the stated construction cannot be
/// realized at order `n`; consistent reports always carry an order-`n`
/// witness whose exact `per(I - .)` equals the reported value.
pub fn conjecture_values(kind: &ConjectureKind) -> Result<ConjectureValues> {
    match kind {
        ConjectureKind::OddStochastic { n } => odd_stochastic_conjecture(*n),
        ConjectureKind::Omega3 { s } => omega3_conjecture(s),
        ConjectureKind::OddSubstochastic { n, s } => odd_substochastic_conjecture(*n, s),
    }
}

fn require_odd_at_least_3(op: &'static str, n: usize) -> Result<()> {
    if n.is_multiple_of(2) || n < 3 {
        return Err(Error::OutOfRange {
            op,
            detail: format!("order {n} must be odd and at least 3"),
        });
    }
    Ok(())
}

fn copy_count_flag(n: usize) -> ConjectureFlag {
    ConjectureFlag {
        code: ConjectureFlagCode::CopyCountOrderMismatch,
        detail: format!(
            "stated witness uses (n-1)/2 = {} swap blocks plus a 3x3 block, which has order {} \
             rather than {}; the consistent reading uses (n-3)/2 = {} swap blocks",
            (n - 1) / 2,
            n + 2,
            n,
            (n - 3) / 2
        ),
    }
}

fn negative_branch_flag() -> ConjectureFlag {
    ConjectureFlag {
        code: ConjectureFlagCode::NegativeBranch,
        detail: "stated lower branch 6 - 4s is negative on all of (2, 3], contradicting \
                 per(I - A) >= det(I - A) >= 0; the candidate construction gives 6 - 2s, and \
                 the stated threshold (sqrt(57) - 3)/2 solves equality of (s^2 - 5s + 12)/4 \
                 against 6 - 2s, so the consistent reading uses 6 - 2s"
            .into(),
    }
}

fn odd_stochastic_conjecture(n: usize) -> Result<ConjectureValues> {
    require_odd_at_least_3("conjecture_values", n)?;
    let s = whole(n as i64);
    let e = n - 1;
    let half = frac(1, 2);
    // per(I - circulant3(1/2)) = 6 * (1/2) * (1/2) = 3/2.
    let tail_value = frac(3, 2);
    let literal_value = pow2((n - 1) / 2) * whole(3);
    let consistent_value = pow2((n - 3) / 2) * &tail_value;
    let mut blocks: Vec<Matrix> = vec![m2(); (n - 3) / 2];
    blocks.push(circulant3(&half)?);
    let witness = Matrix::direct_sum(&blocks)?;
    Ok(ConjectureValues {
        kind: ConjectureKind::OddStochastic { n },
        literal: BoundReport {
            n,
            s: s.clone(),
            e,
            value: literal_value,
            source: BoundSource::OddStochasticConjecture,
            witness: None,
            hypotheses_met: false,
            supremum: false,
            reading: Some(Reading::Literal),
        },
        consistent: BoundReport {
            n,
            s,
            e,
            value: consistent_value,
            source: BoundSource::OddStochasticConjecture,
            witness: Some(witness),
            hypotheses_met: false,
            supremum: false,
            reading: Some(Reading::Consistent),
        },
        flags: vec![copy_count_flag(n)],
    })
}

/// True when `s > (sqrt(57) - 3)/2`, compared exactly via `(2s + 3)^2 > 57`.
fn above_branch_threshold(s: &Rational) -> bool {
    let t = whole(2) * s + whole(3);
    &t * &t > whole(57)
}

fn omega3_conjecture(s: &Rational) -> Result<ConjectureValues> {
    // The conjecture itself is stated on the open-left interval.
    if *s <= whole(2) {
        return Err(Error::OutOfRange {
            op: "conjecture_values",
            detail: format!("sum {s} must lie in (2, 3]"),
        });
    }
    let cands = omega3_candidates(s)?;
    let e = greatest_even_leq(s);
    let literal_value = if above_branch_threshold(s) {
        cands.symmetric_value.clone()
    } else {
        whole(6) - whole(4) * s
    };
    let literal_witness = if above_branch_threshold(s) {
        Some(cands.symmetric.clone())
    } else {
        None
    };
    let (best_matrix, best_value) = cands.best();
    Ok(ConjectureValues {
        kind: ConjectureKind::Omega3 { s: s.clone() },
        literal: BoundReport {
            n: 3,
            s: s.clone(),
            e,
            value: literal_value,
            source: BoundSource::Omega3Conjecture,
            witness: literal_witness,
            hypotheses_met: false,
            supremum: false,
            reading: Some(Reading::Literal),
        },
        consistent: BoundReport {
            n: 3,
            s: s.clone(),
            e,
            value: best_value.clone(),
            source: BoundSource::Omega3Conjecture,
            witness: Some(best_matrix.clone()),
            hypotheses_met: false,
            supremum: false,
            reading: Some(Reading::Consistent),
        },
        flags: vec![negative_branch_flag()],
    })
}

fn odd_substochastic_conjecture(n: usize, s: &Rational) -> Result<ConjectureValues> {
    require_odd_at_least_3("conjecture_values", n)?;
    if *s <= whole(n as i64 - 1) || *s > whole(n as i64) {
        return Err(Error::OutOfRange {
            op: "conjecture_values",
            detail: format!("sum {s} must lie in ({}, {n}]", n - 1),
        });
    }
    // The tail sum s' = s - n + 3 lands in (2, 3], where the 3x3 candidates live.
    let s_tail = s - whole(n as i64 - 3);
    let cands = omega3_candidates(&s_tail)?;
    let (best_matrix, best_value) = cands.best();
    let e = greatest_even_leq(s);
    let literal_value = pow2((n - 1) / 2) * best_value;
    let consistent_value = pow2((n - 3) / 2) * best_value;
    let mut blocks: Vec<Matrix> = vec![m2(); (n - 3) / 2];
    blocks.push(best_matrix.clone());
    let witness = Matrix::direct_sum(&blocks)?;
    Ok(ConjectureValues {
        kind: ConjectureKind::OddSubstochastic {
            n,
            s: s.clone(),
        },
        literal: BoundReport {
            n,
            s: s.clone(),
            e,
            value: literal_value,
            source: BoundSource::OddSubstochasticConjecture,
            witness: None,
            hypotheses_met: false,
            supremum: false,
            reading: Some(Reading::Literal),
        },
        consistent: BoundReport {
            n,
            s: s.clone(),
            e,
            value: consistent_value,
            source: BoundSource::OddSubstochasticConjecture,
            witness: Some(witness),
            hypotheses_met: false,
            supremum: false,
            reading: Some(Reading::Consistent),
        },
        flags: vec![copy_count_flag(n), negative_branch_flag()],
    })
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    values: Vec<String>,
}

impl From<SequenceProfile> for ProfileRepr {
    fn from(p: SequenceProfile) -> Self {
        ProfileRepr {
            values: p.values.iter().map(|v| v.to_string()).collect(),
        }
    }
}

impl TryFrom<ProfileRepr> for SequenceProfile {
    type Error = Error;

    fn try_from(repr: ProfileRepr) -> Result<Self> {
        let values = repr
            .values
            .iter()
            .map(|t| {
                t.parse::<Rational>()
                    .map_err(|e| Error::Parse(format!("bad profile entry '{t}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SequenceProfile::new(values)
    }
}

/// A nonincreasing sequence of rationals in `[0, 1]`; the row-sum profile of
/// a row substochastic matrix after sorting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct SequenceProfile {
    values: Vec<Rational>,
    total: Rational,
}

impl SequenceProfile {
    /// Validates `1 >= z_1 >= ... >= z_n >= 0` and records the total.
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if v.is_negative() || *v > Rational::one() {
                return Err(Error::OutOfRange {
                    op: "sequence_profile",
                    detail: format!("entry {i} = {v} outside [0, 1]"),
                });
            }
        }
        for w in values.windows(2) {
            if w[0] < w[1] {
                return Err(Error::Precondition {
                    op: "sequence_profile",
                    detail: format!("entries must be nonincreasing; found {} < {}", w[0], w[1]),
                });
            }
        }
        let total = values.iter().sum();
        Ok(SequenceProfile { values, total })
    }

    /// Sorts arbitrary `[0, 1]` values into a valid profile.
    pub fn from_unsorted(mut values: Vec<Rational>) -> Result<Self> {
        values.sort_by(|a, b| b.cmp(a));
        SequenceProfile::new(values)
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn total(&self) -> &Rational {
        &self.total
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The block-product objective `prod_i (1 + z_i^2)`.
pub fn sequence_objective(z: &SequenceProfile) -> Rational {
    z.values()
        .iter()
        .fold(Rational::one(), |acc, v| acc * (Rational::one() + v * v))
}

/// The same objective via the elementary-symmetric expansion
/// `1 + sum_k e_k(z_1^2, ..., z_n^2)`; agreement with [`sequence_objective`]
/// is itself a checked identity.
pub fn sequence_objective_expanded(z: &SequenceProfile) -> Rational {
    let mut coeffs: Vec<Rational> = vec![Rational::one()];
    for v in z.values() {
        let sq = v * v;
        let mut next = vec![Rational::zero(); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] += c * &sq;
        }
        coeffs = next;
    }
    coeffs.into_iter().sum()
}

/// One extremizing move: push mass from the smallest entry to the largest by
/// `eps = min(1 - z_1, z_n)`, which preserves the total and strictly
/// increases [`sequence_objective`].
///
/// Requires at least two entries with `z_1 < 1` and `z_n > 0`.
pub fn sequence_shift(z: &SequenceProfile) -> Result<SequenceProfile> {
    let vals = z.values();
    if vals.len() < 2 {
        return Err(Error::Precondition {
            op: "sequence_shift",
            detail: "profile needs at least two entries".into(),
        });
    }
    let first = &vals[0];
    let last = &vals[vals.len() - 1];
    if *first >= Rational::one() || !last.is_positive() {
        return Err(Error::Precondition {
            op: "sequence_shift",
            detail: format!("requires z_1 < 1 and z_n > 0; got z_1 = {first}, z_n = {last}"),
        });
    }
    let eps = std::cmp::min(Rational::one() - first, last.clone());
    let mut y = vals.to_vec();
    let tail = y.len() - 1;
    y[0] = &y[0] + &eps;
    y[tail] = &y[tail] - &eps;
    // The shift keeps the order, but resort defensively before revalidating.
    SequenceProfile::from_unsorted(y)
}

/// Applies [`sequence_shift`] to the strictly interior window (entries not
/// yet pinned at 1 or 0) until no window of length two remains.
///
/// Returns the fixed point and the number of shifts; the fixed point is the
/// profile `(1, ..., 1, fractional, 0, ..., 0)` from [`sequence_max`].
pub fn sequence_shift_to_fixpoint(z: &SequenceProfile) -> (SequenceProfile, usize) {
    let mut cur = z.clone();
    let mut steps = 0usize;
    loop {
        let vals: Vec<Rational> = cur.values().to_vec();
        let lo = match vals.iter().position(|v| *v < Rational::one()) {
            Some(i) => i,
            None => break,
        };
        let hi = match vals.iter().rposition(|v| v.is_positive()) {
            Some(i) => i,
            None => break,
        };
        // Entries in lo..=hi are strictly inside (0, 1) by monotonicity.
        if hi <= lo {
            break;
        }
        let window =
            SequenceProfile::new(vals[lo..=hi].to_vec()).expect("window inherits profile bounds");
        let shifted = sequence_shift(&window).expect("window is strictly interior");
        let mut next = vals[..lo].to_vec();
        next.extend_from_slice(shifted.values());
        next.extend_from_slice(&vals[hi + 1..]);
        cur = SequenceProfile::new(next).expect("splicing ones, window, zeros stays sorted");
        steps += 1;
    }
    (cur, steps)
}

/// Maximum of [`sequence_objective`] over profiles of the given length and
/// total: value `2^{floor(t)} (1 + (t - floor(t))^2)` attained at
/// `(1, ..., 1, t - floor(t), 0, ..., 0)`.
pub fn sequence_max(total: &Rational, length: usize) -> Result<(Rational, SequenceProfile)> {
    if total.is_negative() || *total > whole(length as i64) {
        return Err(Error::OutOfRange {
            op: "sequence_max",
            detail: format!("total {total} outside [0, {length}]"),
        });
    }
    let k = total
        .floor()
        .to_integer()
        .to_usize()
        .expect("floor of a small total fits in usize");
    let fractional = total - whole(k as i64);
    let mut values = vec![Rational::one(); k];
    if fractional.is_positive() {
        values.push(fractional.clone());
    }
    while values.len() < length {
        values.push(Rational::zero());
    }
    let value = pow2(k) * (Rational::one() + &fractional * &fractional);
    Ok((value, SequenceProfile::new(values)?))
}

/// Pairing bound `prod (1 + x_a x_b)` on the row sums of an even-order row
/// substochastic matrix.
///
/// With an explicit perfect matching on row indices the product is evaluated
/// directly. Without one, orders up to 10 return the maximum over all
/// matchings (a certified upper bound for `per(I - A)`); larger orders fall
/// back to pairing the sorted row sums adjacently.
pub fn labeling_bound(a: &Matrix, pairing: Option<&[(usize, usize)]>) -> Result<Rational> {
    let n = a.order();
    if !n.is_multiple_of(2) {
        return Err(Error::Precondition {
            op: "labeling_bound",
            detail: format!("order {n} must be even"),
        });
    }
    let class = a.classify();
    if !class.row_substochastic {
        return Err(Error::Precondition {
            op: "labeling_bound",
            detail: "matrix must be row substochastic".into(),
        });
    }
    let x = a.row_sums();
    match pairing {
        Some(pairs) => {
            validate_pairing(n, pairs)?;
            Ok(pairs.iter().fold(Rational::one(), |acc, &(i, j)| {
                acc * (Rational::one() + &x[i] * &x[j])
            }))
        }
        None if n <= 10 => {
            let mut unused: Vec<usize> = (0..n).collect();
            Ok(best_pairing_value(&x, &mut unused))
        }
        None => {
            let mut sorted = x;
            sorted.sort_by(|a, b| b.cmp(a));
            Ok(sorted.chunks(2).fold(Rational::one(), |acc, pair| {
                acc * (Rational::one() + &pair[0] * &pair[1])
            }))
        }
    }
}

fn validate_pairing(n: usize, pairs: &[(usize, usize)]) -> Result<()> {
    if pairs.len() != n / 2 {
        return Err(Error::Precondition {
            op: "labeling_bound",
            detail: format!("pairing must contain exactly {} pairs, got {}", n / 2, pairs.len()),
        });
    }
    let mut seen = vec![false; n];
    for &(i, j) in pairs {
        if i >= n || j >= n {
            return Err(Error::Precondition {
                op: "labeling_bound",
                detail: format!("pair ({i}, {j}) references a row outside 0..{n}"),
            });
        }
        if i == j {
            return Err(Error::Precondition {
                op: "labeling_bound",
                detail: format!("pair ({i}, {j}) uses the same row twice"),
            });
        }
        if seen[i] || seen[j] {
            return Err(Error::Precondition {
                op: "labeling_bound",
                detail: format!("row {} appears in more than one pair", if seen[i] { i } else { j }),
            });
        }
        seen[i] = true;
        seen[j] = true;
    }
    Ok(())
}

// Branches on partners for the lowest unpaired index; (n-1)!! leaves, cheap
// for the n <= 10 exhaustive mode.
fn best_pairing_value(x: &[Rational], unused: &mut Vec<usize>) -> Rational {
    if unused.is_empty() {
        return Rational::one();
    }
    let i = unused.remove(0);
    let mut best: Option<Rational> = None;
    for slot in 0..unused.len() {
        let j = unused.remove(slot);
        let value = (Rational::one() + &x[i] * &x[j]) * best_pairing_value(x, unused);
        unused.insert(slot, j);
        if best.as_ref().is_none_or(|b| value > *b) {
            best = Some(value);
        }
    }
    unused.insert(0, i);
    best.expect("even count leaves no unpaired index")
}
