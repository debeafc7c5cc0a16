//! Square matrices over exact rationals, plus membership tests for the
//! substochastic classes the rest of the crate works with.
//!
//! Conventions used throughout the crate:
//! * all matrices are square, order `n >= 1`, stored row-major;
//! * `sigma(A)` is the sum of all entries;
//! * a matrix is *row substochastic* if it is nonnegative with row sums <= 1,
//!   *doubly substochastic* if column sums are also <= 1, and *doubly
//!   stochastic* if all row and column sums equal 1;
//! * the *sub-defect* of a doubly substochastic matrix is `ceil(n - sigma)`,
//!   the number of rows/columns that must be added to complete it to a
//!   doubly stochastic matrix.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Shorthand for an exact rational `p/q`. Panics on `q == 0`.
pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for an exact integer rational.
pub fn whole(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// A square matrix of exact rationals.
///
/// The type is immutable by design: every operation returns a fresh value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    n: usize,
    data: Vec<Rational>,
}

impl Matrix {
    /// Builds an `n x n` matrix from row-major entries.
    pub fn new(n: usize, data: Vec<Rational>) -> Result<Self> {
        if n == 0 {
            return Err(Error::MalformedMatrix("order must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::MalformedMatrix(format!(
                "expected {} entries for order {}, got {}",
                n * n,
                n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::MalformedMatrix(
                "all rows must have length equal to the number of rows".into(),
            ));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    /// Test-friendly constructor from integer rows.
    pub fn from_ints(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| whole(v)).collect())
                .collect(),
        )
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.n + j]
    }

    /// Returns a copy with entry `(i, j)` replaced.
    pub fn with_entry(&self, i: usize, j: usize, value: Rational) -> Self {
        let mut out = self.clone();
        out.data[i * self.n + j] = value;
        out
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.data
            .iter()
            .enumerate()
            .map(move |(k, v)| (k / self.n, k % self.n, v))
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.n)
            .map(|i| self.row(i).iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<Rational> {
        let mut sums = vec![Rational::zero(); self.n];
        for (_, j, v) in self.entries() {
            sums[j] += v;
        }
        sums
    }

    /// Total entry sum `sigma(A)`.
    pub fn sigma(&self) -> Rational {
        self.data.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                data.push(self.data[i * n + j].clone());
            }
        }
        Self { n, data }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::MalformedMatrix(format!(
                "cannot add orders {} and {}",
                self.n, other.n
            )));
        }
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `t*A + (1-t)*B` for `t` in `[0, 1]`.
    pub fn convex_combination(t: &Rational, a: &Self, b: &Self) -> Result<Self> {
        if t.is_negative() || t > &Rational::one() {
            return Err(Error::OutOfRange {
                op: "convex_combination",
                detail: format!("t = {} is outside [0, 1]", t),
            });
        }
        let s = Rational::one() - t;
        a.scale(t).add(&b.scale(&s))
    }

    /// `I - A`.
    pub fn i_minus(&self) -> Self {
        let mut out = self.scale_neg();
        for i in 0..self.n {
            out.data[i * self.n + i] += Rational::one();
        }
        out
    }

    fn scale_neg(&self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }

    /// Submatrix with row `i` and column `j` removed. Requires `n >= 2`.
    pub fn minor(&self, i: usize, j: usize) -> Result<Self> {
        if self.n < 2 {
            return Err(Error::MalformedMatrix(
                "cannot take a minor of a 1 x 1 matrix".into(),
            ));
        }
        let mut data = Vec::with_capacity((self.n - 1) * (self.n - 1));
        for (r, c, v) in self.entries() {
            if r != i && c != j {
                data.push(v.clone());
            }
        }
        Self::new(self.n - 1, data)
    }

    /// Block-diagonal direct sum. At least one block is required.
    pub fn direct_sum(blocks: &[Matrix]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::MalformedMatrix(
                "direct_sum requires at least one block".into(),
            ));
        }
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut out = Self::zeros(n);
        let mut offset = 0;
        for b in blocks {
            for (i, j, v) in b.entries() {
                out.data[(offset + i) * n + (offset + j)] = v.clone();
            }
            offset += b.n;
        }
        Ok(out)
    }

    /// Applies row and column permutations: `out[i][j] = A[rp[i]][cp[j]]`.
    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        validate_permutation(row_perm, self.n)?;
        validate_permutation(col_perm, self.n)?;
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(self.data[row_perm[i] * n + col_perm[j]].clone());
            }
        }
        Ok(Self { n, data })
    }

    pub fn classify(&self) -> ClassificationReport {
        let row_sums = self.row_sums();
        let col_sums = self.col_sums();
        let one = Rational::one();
        let nonnegative = self.data.iter().all(|v| !v.is_negative());
        let rows_ok = row_sums.iter().all(|r| r <= &one);
        let cols_ok = col_sums.iter().all(|c| c <= &one);
        let row_substochastic = nonnegative && rows_ok;
        let doubly_substochastic = row_substochastic && cols_ok;
        let doubly_stochastic = nonnegative
            && row_sums.iter().all(|r| r == &one)
            && col_sums.iter().all(|c| c == &one);
        let zero_diagonal = (0..self.n).all(|i| self.get(i, i).is_zero());
        let at_most_one_positive_per_row = (0..self.n)
            .all(|i| self.row(i).iter().filter(|v| v.is_positive()).count() <= 1);
        let sigma = self.sigma();
        // Sub-defect is only defined on the doubly substochastic class.
        let sub_defect = doubly_substochastic.then(|| {
            let gap = Rational::from_integer(BigInt::from(self.n)) - &sigma;
            let ceil = gap.ceil().to_integer();
            usize::try_from(ceil).expect("sub-defect fits usize for sigma in [0, n]")
        });
        ClassificationReport {
            n: self.n,
            sigma,
            nonnegative,
            row_substochastic,
            doubly_substochastic,
            doubly_stochastic,
            zero_diagonal,
            at_most_one_positive_per_row,
            sub_defect,
        }
    }

    /// Renders the text format: order on the first line, then one line per
    /// row of space-separated rational tokens.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::MalformedPermutation(format!(
            "length {} does not match order {}",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::MalformedPermutation(format!(
                "indices must form a bijection on 0..{}",
                n
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Matrix {
    type Err = Error;

    /// Parses the text format. Tokens are integers or `p/q` fractions.
    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("first line must be the order, got '{header}'")))?;
        if n == 0 {
            return Err(Error::Parse("order must be at least 1".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {} rows, found {}", n, i)))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != n {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    tokens.len(),
                    n
                )));
            }
            for tok in tokens {
                let v = Rational::from_str(tok)
                    .map_err(|e| Error::Parse(format!("bad entry '{tok}' in row {}: {e}", i + 1)))?;
                data.push(v);
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {} rows present", n)));
        }
        Matrix::new(n, data)
    }
}

/// Serde wire form: entries as `p/q` strings so JSON stays exact.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    entries: Vec<Vec<String>>,
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        let entries = (0..m.n)
            .map(|i| m.row(i).iter().map(|v| v.to_string()).collect())
            .collect();
        MatrixRepr { n: m.n, entries }
    }
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        let mut data = Vec::with_capacity(repr.n * repr.n);
        if repr.entries.len() != repr.n {
            return Err(Error::Parse(format!(
                "expected {} rows, got {}",
                repr.n,
                repr.entries.len()
            )));
        }
        for row in &repr.entries {
            if row.len() != repr.n {
                return Err(Error::Parse("ragged entry rows".into()));
            }
            for tok in row {
                data.push(
                    Rational::from_str(tok).map_err(|e| Error::Parse(format!("'{tok}': {e}")))?,
                );
            }
        }
        Matrix::new(repr.n, data)
    }
}

/// Class membership flags and aggregate quantities for one matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n: usize,
    #[serde(with = "crate::serde_util::rat")]
    pub sigma: Rational,
    pub nonnegative: bool,
    pub row_substochastic: bool,
    pub doubly_substochastic: bool,
    pub doubly_stochastic: bool,
    pub zero_diagonal: bool,
    pub at_most_one_positive_per_row: bool,
    /// `ceil(n - sigma)`; present only when the matrix is doubly substochastic.
    pub sub_defect: Option<usize>,
}
