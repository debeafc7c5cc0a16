//! Entry surgeries that never decrease `per(I - A)` on their home classes.
//!
//! * [`epsilon_shift`] moves diagonal mass into an off-diagonal slot of the
//!   same row.
//! * [`zero_diagonalize`] applies shifts until the diagonal vanishes, either
//!   freely along rows or against column slack so double substochasticity
//!   survives.
//! * [`concentrate_rows`] merges the positives of each row into one entry,
//!   steering each merge by the complement minors `per((I-A)(k|.))`: moving
//!   eps from column `d` to column `r` in row `k` changes the permanent by
//!   `eps * (per(M(k|d)) - per(M(k|r)))` with `M = I - A`, so mass always
//!   flows toward the smaller minor.
//! * [`pair_up`] reorganizes a one-positive-per-row matrix into canonical
//!   2 x 2 antidiagonal blocks whose value dominates the cycle product.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cycles::{build_graph, find_cycles};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, Rational};
use crate::permanent::{per_i_minus_guarded, permanent_ryser_guarded, OrderGuards};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    EpsilonShift,
    RowConcentrate,
    PairUp,
}

/// One audited surgery step. `per_before`/`per_after` are `per(I - A)`
/// evaluated exactly around the step, populated when the order permits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformStep {
    pub kind: StepKind,
    /// Affected entry positions, `(row, col)`.
    pub indices: Vec<(usize, usize)>,
    #[serde(with = "crate::serde_util::rat")]
    pub epsilon: Rational,
    #[serde(with = "crate::serde_util::rat_opt")]
    pub per_before: Option<Rational>,
    #[serde(with = "crate::serde_util::rat_opt")]
    pub per_after: Option<Rational>,
}

/// Which class `zero_diagonalize` must preserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreserveClass {
    RowSubstochastic,
    DoublySubstochastic,
}

/// Moves `eps` of diagonal mass from `(i, i)` to `(i, j)`.
pub fn epsilon_shift(a: &Matrix, i: usize, j: usize, eps: &Rational) -> Result<Matrix> {
    let n = a.order();
    if i >= n || j >= n || i == j {
        return Err(Error::Precondition {
            op: "epsilon_shift",
            detail: format!("need distinct indices below {}, got ({}, {})", n, i, j),
        });
    }
    if a.entries().any(|(_, _, v)| v.is_negative()) {
        return Err(Error::Precondition {
            op: "epsilon_shift",
            detail: "matrix must be nonnegative".into(),
        });
    }
    if !eps.is_positive() || eps > a.get(i, i) {
        return Err(Error::Precondition {
            op: "epsilon_shift",
            detail: format!(
                "eps must satisfy 0 < eps <= a[{i}][{i}] = {}, got {}",
                a.get(i, i),
                eps
            ),
        });
    }
    Ok(a.with_entry(i, i, a.get(i, i) - eps)
        .with_entry(i, j, a.get(i, j) + eps))
}

/// Shifts all diagonal mass off the diagonal.
///
/// Row mode sends each `a_ii` to the row's largest off-diagonal entry
/// (lowest column index on ties); only row sums are preserved. Doubly mode
/// routes mass into columns with spare capacity, largest slack first,
/// splitting across columns when one is not enough; if no slack remains the
/// row is reported infeasible.
pub fn zero_diagonalize(a: &Matrix, preserve: PreserveClass) -> Result<(Matrix, Vec<TransformStep>)> {
    zero_diagonalize_guarded(a, preserve, &OrderGuards::default())
}

pub fn zero_diagonalize_guarded(
    a: &Matrix,
    preserve: PreserveClass,
    guards: &OrderGuards,
) -> Result<(Matrix, Vec<TransformStep>)> {
    let class = a.classify();
    let class_ok = match preserve {
        PreserveClass::RowSubstochastic => class.row_substochastic,
        PreserveClass::DoublySubstochastic => class.doubly_substochastic,
    };
    if !class_ok {
        return Err(Error::Precondition {
            op: "zero_diagonalize",
            detail: format!("matrix is not in the requested class ({:?})", preserve),
        });
    }
    let n = a.order();
    let certify = n <= guards.ryser_max;
    let mut current = a.clone();
    let mut steps = Vec::new();
    let mut col_sums = a.col_sums();
    for i in 0..n {
        while current.get(i, i).is_positive() {
            let remaining = current.get(i, i).clone();
            let (target, amount) = match preserve {
                PreserveClass::RowSubstochastic => {
                    // Largest off-diagonal entry, lowest index on ties.
                    let mut best: Option<usize> = None;
                    for j in 0..n {
                        if j == i {
                            continue;
                        }
                        if best.is_none_or(|b| current.get(i, j) > current.get(i, b)) {
                            best = Some(j);
                        }
                    }
                    let j = best.ok_or(Error::Infeasible { row: i })?;
                    (j, remaining.clone())
                }
                PreserveClass::DoublySubstochastic => {
                    // Largest column slack, lowest index on ties.
                    let mut best: Option<(usize, Rational)> = None;
                    for j in 0..n {
                        if j == i {
                            continue;
                        }
                        let slack = Rational::one() - &col_sums[j];
                        if slack.is_positive()
                            && best.as_ref().is_none_or(|(_, s)| &slack > s)
                        {
                            best = Some((j, slack));
                        }
                    }
                    let (j, slack) = best.ok_or(Error::Infeasible { row: i })?;
                    (j, remaining.clone().min(slack))
                }
            };
            let per_before = certify
                .then(|| per_i_minus_guarded(&current, guards))
                .transpose()?;
            let next = epsilon_shift(&current, i, target, &amount)?;
            let per_after = certify
                .then(|| per_i_minus_guarded(&next, guards))
                .transpose()?;
            col_sums[i] -= &amount;
            col_sums[target] += &amount;
            steps.push(TransformStep {
                kind: StepKind::EpsilonShift,
                indices: vec![(i, i), (i, target)],
                epsilon: amount,
                per_before,
                per_after,
            });
            current = next;
        }
    }
    Ok((current, steps))
}

/// Merges each row's positive entries into a single one without decreasing
/// `per(I - A)`. Requires a zero diagonal and exact-permanent order, since
/// every merge is steered (and certified) by minor permanents.
pub fn concentrate_rows(a: &Matrix) -> Result<(Matrix, Vec<TransformStep>)> {
    concentrate_rows_guarded(a, &OrderGuards::default())
}

pub fn concentrate_rows_guarded(
    a: &Matrix,
    guards: &OrderGuards,
) -> Result<(Matrix, Vec<TransformStep>)> {
    let class = a.classify();
    if !class.row_substochastic || !class.zero_diagonal {
        return Err(Error::Precondition {
            op: "concentrate_rows",
            detail: "matrix must be row substochastic with a zero diagonal".into(),
        });
    }
    let n = a.order();
    if n > guards.ryser_max {
        return Err(Error::OrderGuard {
            op: "concentrate_rows",
            n,
            max: guards.ryser_max,
        });
    }
    let mut current = a.clone();
    let mut steps = Vec::new();
    for k in 0..n {
        // Minors M(k|j) drop row k, so they stay valid while row k changes.
        let m = current.i_minus();
        loop {
            let positives: Vec<usize> = (0..n)
                .filter(|&j| current.get(k, j).is_positive())
                .collect();
            if positives.len() < 2 {
                break;
            }
            let (j1, j2) = (positives[0], positives[1]);
            let m1 = permanent_ryser_guarded(&m.minor(k, j1)?, guards)?.total;
            let m2 = permanent_ryser_guarded(&m.minor(k, j2)?, guards)?.total;
            // Receiver is the column with the smaller minor (ties go low):
            // the permanent then moves by eps * (per(M(k|d)) - per(M(k|r))) >= 0.
            let (receiver, donor) = if m1 <= m2 { (j1, j2) } else { (j2, j1) };
            let eps = current.get(k, j1).clone().min(current.get(k, j2).clone());
            let per_before = per_i_minus_guarded(&current, guards)?;
            let next = current
                .with_entry(k, donor, current.get(k, donor) - &eps)
                .with_entry(k, receiver, current.get(k, receiver) + &eps);
            let per_after = per_i_minus_guarded(&next, guards)?;
            debug_assert!(per_after >= per_before);
            steps.push(TransformStep {
                kind: StepKind::RowConcentrate,
                indices: vec![(k, donor), (k, receiver)],
                epsilon: eps,
                per_before: Some(per_before),
                per_after: Some(per_after),
            });
            current = next;
        }
    }
    Ok((current, steps))
}

/// Canonical block form of a one-positive-per-row matrix.
///
/// The positive entries are paired within each cycle first (so the block
/// value `prod (1 + x_a * x_b)` dominates the cycle product), remaining
/// entries are paired in position order, and an odd leftover `x` is split
/// into a half block `[[0, x/2], [x/2, 0]]`. The output keeps `sigma` and
/// order `n`, except in the corner case where the positive count is odd and
/// equals `n`: the split block then needs one extra dimension.
pub fn pair_up(a: &Matrix) -> Result<Matrix> {
    let graph = build_graph(a)?;
    let decomposition = find_cycles(&graph);
    let n = a.order();

    let mut on_cycle = vec![false; n];
    let mut elements: Vec<Rational> = Vec::new();
    let mut leftovers: Vec<Rational> = Vec::new();
    let mut pairs: Vec<(Rational, Rational)> = Vec::new();
    for cycle in &decomposition.cycles {
        let weights: Vec<Rational> = cycle
            .vertices
            .iter()
            .map(|&v| {
                on_cycle[v] = true;
                graph.out_edge[v].as_ref().expect("cycle edge").1 .0.clone()
            })
            .collect();
        let mut chunks = weights.chunks_exact(2);
        for pair in &mut chunks {
            pairs.push((pair[0].clone(), pair[1].clone()));
        }
        leftovers.extend(chunks.remainder().iter().cloned());
    }
    for (v, edge) in graph.out_edge.iter().enumerate() {
        if let Some((_, w)) = edge {
            if !on_cycle[v] {
                elements.push(w.0.clone());
            }
        }
    }
    leftovers.extend(elements);
    let mut chunks = leftovers.chunks_exact(2);
    for pair in &mut chunks {
        pairs.push((pair[0].clone(), pair[1].clone()));
    }
    let split: Option<Rational> = chunks.remainder().first().cloned();

    let mut blocks: Vec<Matrix> = Vec::new();
    for (x, y) in &pairs {
        blocks.push(antidiagonal_block(x.clone(), y.clone()));
    }
    if let Some(x) = &split {
        let half = x / Rational::from_integer(2.into());
        blocks.push(antidiagonal_block(half.clone(), half));
    }
    let used: usize = blocks.iter().map(|b| b.order()).sum();
    let out_order = n.max(used);
    if out_order > used {
        blocks.push(Matrix::zeros(out_order - used));
    }
    if blocks.is_empty() {
        return Ok(Matrix::zeros(n));
    }
    Matrix::direct_sum(&blocks)
}

fn antidiagonal_block(x: Rational, y: Rational) -> Matrix {
    Matrix::from_rows(vec![
        vec![Rational::zero(), x],
        vec![y, Rational::zero()],
    ])
    .expect("2 x 2 block")
}

#[cfg(test)]
mod tests {
    use crate::matrix::{frac, whole};
    use crate::permanent::per_i_minus;

    use super::*;

    #[test]
    fn shift_moves_mass_and_validates() {
        let a = Matrix::from_rows(vec![
            vec![frac(1, 2), whole(0)],
            vec![whole(0), whole(0)],
        ])
        .unwrap();
        let shifted = epsilon_shift(&a, 0, 1, &frac(1, 4)).unwrap();
        assert_eq!(shifted.get(0, 0), &frac(1, 4));
        assert_eq!(shifted.get(0, 1), &frac(1, 4));
        assert_eq!(shifted.sigma(), a.sigma());

        assert!(epsilon_shift(&a, 0, 0, &frac(1, 4)).is_err());
        assert!(epsilon_shift(&a, 0, 1, &frac(3, 4)).is_err());
        assert!(epsilon_shift(&a, 0, 1, &whole(0)).is_err());
        assert!(epsilon_shift(&a, 1, 0, &frac(1, 8)).is_err());
    }

    #[test]
    fn shift_does_not_decrease_the_complement_permanent() {
        let a = Matrix::from_rows(vec![
            vec![frac(1, 2), frac(1, 4), whole(0)],
            vec![frac(1, 4), whole(0), frac(1, 2)],
            vec![whole(0), frac(1, 3), frac(1, 3)],
        ])
        .unwrap();
        let before = per_i_minus(&a).unwrap();
        let after = per_i_minus(&epsilon_shift(&a, 0, 2, &frac(1, 2)).unwrap()).unwrap();
        assert!(after >= before);
    }

    #[test]
    fn zero_diagonalize_row_mode_targets_largest_entry() {
        let a = Matrix::from_rows(vec![
            vec![frac(1, 4), frac(1, 8), frac(1, 2)],
            vec![whole(0), whole(0), whole(0)],
            vec![whole(0), whole(0), frac(1, 3)],
        ])
        .unwrap();
        let (out, steps) = zero_diagonalize(&a, PreserveClass::RowSubstochastic).unwrap();
        assert!(out.classify().zero_diagonal);
        assert_eq!(out.sigma(), a.sigma());
        assert_eq!(out.get(0, 2), &frac(3, 4));
        // Row 2's mass lands on the lowest-index column since all are zero.
        assert_eq!(out.get(2, 0), &frac(1, 3));
        assert_eq!(steps.len(), 2);
        for s in &steps {
            assert!(s.per_after >= s.per_before);
        }
    }

    #[test]
    fn zero_diagonalize_doubly_mode_splits_across_slack() {
        let a = Matrix::from_rows(vec![
            vec![frac(3, 4), whole(0), frac(1, 4)],
            vec![whole(0), whole(0), frac(3, 4)],
            vec![whole(0), whole(0), whole(0)],
        ])
        .unwrap();
        let (out, steps) = zero_diagonalize(&a, PreserveClass::DoublySubstochastic).unwrap();
        let report = out.classify();
        assert!(report.zero_diagonal);
        assert!(report.doubly_substochastic);
        assert_eq!(out.sigma(), a.sigma());
        // Column 2 only had 0 slack quarters available... column 1 takes the rest.
        assert!(!steps.is_empty());
    }

    #[test]
    fn zero_diagonalize_identity_is_infeasible() {
        let err = zero_diagonalize(&Matrix::identity(2), PreserveClass::DoublySubstochastic);
        assert!(matches!(err, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn zero_diagonalize_rejects_wrong_class() {
        let a = Matrix::from_ints(&[&[0, 2], &[0, 0]]).unwrap();
        assert!(zero_diagonalize(&a, PreserveClass::RowSubstochastic).is_err());
    }

    #[test]
    fn concentrate_rows_reaches_one_positive_per_row() {
        let a = Matrix::from_rows(vec![
            vec![whole(0), frac(1, 4), frac(1, 4), frac(1, 4)],
            vec![frac(1, 2), whole(0), frac(1, 4), whole(0)],
            vec![whole(0), whole(0), whole(0), frac(2, 3)],
            vec![frac(1, 8), frac(1, 8), frac(1, 8), whole(0)],
        ])
        .unwrap();
        let before = per_i_minus(&a).unwrap();
        let (out, steps) = concentrate_rows(&a).unwrap();
        let report = out.classify();
        assert!(report.at_most_one_positive_per_row);
        assert!(report.zero_diagonal);
        assert_eq!(out.sigma(), a.sigma());
        assert!(per_i_minus(&out).unwrap() >= before);
        for s in &steps {
            assert!(s.per_after >= s.per_before);
            assert!(s.epsilon.is_positive());
        }
    }

    #[test]
    fn concentrate_rows_rejects_nonzero_diagonal() {
        let a = Matrix::from_rows(vec![
            vec![frac(1, 4), frac(1, 4)],
            vec![whole(0), whole(0)],
        ])
        .unwrap();
        assert!(concentrate_rows(&a).is_err());
    }

    #[test]
    fn pair_up_is_canonical_for_a_swap_block() {
        let a = Matrix::direct_sum(&[
            Matrix::from_ints(&[&[0, 1], &[1, 0]]).unwrap(),
            Matrix::zeros(2),
        ])
        .unwrap();
        assert_eq!(pair_up(&a).unwrap(), a);
    }

    #[test]
    fn pair_up_splits_an_odd_singleton() {
        let mut rows = vec![vec![whole(0); 3]; 3];
        rows[0][1] = frac(1, 2);
        let a = Matrix::from_rows(rows).unwrap();
        let out = pair_up(&a).unwrap();
        let expected = Matrix::direct_sum(&[
            Matrix::from_rows(vec![
                vec![whole(0), frac(1, 4)],
                vec![frac(1, 4), whole(0)],
            ])
            .unwrap(),
            Matrix::zeros(1),
        ])
        .unwrap();
        assert_eq!(out, expected);
        assert_eq!(out.sigma(), a.sigma());
        assert_eq!(per_i_minus(&out).unwrap(), whole(1) + frac(1, 16));
    }

    #[test]
    fn pair_up_dominates_a_full_three_cycle() {
        // Positive count n = 3 is odd, so the output needs order 4.
        let a = Matrix::from_rows(vec![
            vec![whole(0), frac(1, 2), whole(0)],
            vec![whole(0), whole(0), frac(1, 3)],
            vec![frac(3, 4), whole(0), whole(0)],
        ])
        .unwrap();
        let before = per_i_minus(&a).unwrap();
        let out = pair_up(&a).unwrap();
        assert_eq!(out.order(), 4);
        assert_eq!(out.sigma(), a.sigma());
        let after = per_i_minus(&out).unwrap();
        // (1 + 1/6) * (1 + (3/8)^2) vs 1 - 1/8.
        assert_eq!(after, frac(7, 6) * (whole(1) + frac(9, 64)));
        assert!(after > before);
    }

    #[test]
    fn pair_up_fixed_point() {
        let mut rows = vec![vec![whole(0); 5]; 5];
        rows[0][1] = frac(1, 2);
        rows[1][0] = frac(1, 3);
        rows[2][3] = frac(1, 4);
        rows[3][2] = frac(1, 4);
        let a = Matrix::from_rows(rows).unwrap();
        let once = pair_up(&a).unwrap();
        let twice = pair_up(&once).unwrap();
        assert_eq!(once, twice);
    }
}
