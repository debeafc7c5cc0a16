//! Cycle decomposition for matrices with at most one positive entry per row.
//!
//! Such a matrix is the weighted adjacency matrix of a functional digraph
//! (every out-degree is 0 or 1). Its complement permanent factors over the
//! cycles: `per(I - A) = prod_c (1 + (-1)^{len(c)} * prod of c's weights)`,
//! because the only permutations that contribute are products of disjoint
//! cycles of the digraph, and an acyclic matrix contributes exactly 1.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Rational};

/// Out-degree <= 1 weighted digraph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedDigraph {
    pub n: usize,
    /// `out_edge[v]` is `Some((target, weight))` with `weight > 0`, or `None`.
    pub out_edge: Vec<Option<(usize, Weight)>>,
}

/// Serde-friendly edge weight wrapper ("p/q" on the wire).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weight(#[serde(with = "crate::serde_util::rat")] pub Rational);

/// One directed cycle, listed from its smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    pub length: usize,
    #[serde(with = "crate::serde_util::rat")]
    pub weight_product: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleDecomposition {
    pub n: usize,
    pub cycles: Vec<Cycle>,
}

/// Validates membership in the zero-diagonal, at-most-one-positive-per-row,
/// row substochastic class and builds the digraph.
pub fn build_graph(a: &Matrix) -> Result<WeightedDigraph> {
    let n = a.order();
    let mut out_edge = Vec::with_capacity(n);
    for i in 0..n {
        if !a.get(i, i).is_zero() {
            return Err(Error::Precondition {
                op: "build_graph",
                detail: format!("row {} has a nonzero diagonal entry", i),
            });
        }
        let mut edge = None;
        let mut row_sum = Rational::from_integer(0.into());
        for j in 0..n {
            let v = a.get(i, j);
            if v.is_negative() {
                return Err(Error::Precondition {
                    op: "build_graph",
                    detail: format!("row {} has a negative entry", i),
                });
            }
            if v.is_positive() {
                if edge.is_some() {
                    return Err(Error::Precondition {
                        op: "build_graph",
                        detail: format!("row {} has more than one positive entry", i),
                    });
                }
                edge = Some((j, Weight(v.clone())));
            }
            row_sum += v;
        }
        if row_sum > Rational::one() {
            return Err(Error::Precondition {
                op: "build_graph",
                detail: format!("row {} sums to {} > 1", i, row_sum),
            });
        }
        out_edge.push(edge);
    }
    Ok(WeightedDigraph { n, out_edge })
}

/// Finds the cycles by pointer chasing with three-color marking.
///
/// Cycles are rotated to start at their smallest vertex and reported in
/// increasing order of that vertex.
pub fn find_cycles(g: &WeightedDigraph) -> CycleDecomposition {
    const WHITE: u8 = 0; // unvisited
    const GRAY: u8 = 1; // on the current walk
    const BLACK: u8 = 2; // fully processed
    let n = g.n;
    let mut color = vec![WHITE; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if color[start] != WHITE {
            continue;
        }
        let mut walk = Vec::new();
        let mut v = start;
        loop {
            if color[v] == GRAY {
                // v is on this walk: everything from its first occurrence
                // forms a cycle.
                let pos = walk.iter().position(|&w| w == v).expect("gray vertex is on the walk");
                cycles.push(canonical_cycle(&walk[pos..], g));
                break;
            }
            if color[v] == BLACK {
                break;
            }
            color[v] = GRAY;
            walk.push(v);
            match g.out_edge[v] {
                Some((next, _)) => v = next,
                None => break,
            }
        }
        for w in walk {
            color[w] = BLACK;
        }
    }
    cycles.sort_by_key(|c| c.vertices[0]);
    CycleDecomposition { n, cycles }
}

fn canonical_cycle(vertices: &[usize], g: &WeightedDigraph) -> Cycle {
    let min_pos = vertices
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .expect("cycles are non-empty");
    let rotated: Vec<usize> = vertices[min_pos..]
        .iter()
        .chain(&vertices[..min_pos])
        .copied()
        .collect();
    let weight_product = rotated
        .iter()
        .map(|&v| &g.out_edge[v].as_ref().expect("cycle vertices have out-edges").1 .0)
        .product();
    Cycle {
        length: rotated.len(),
        vertices: rotated,
        weight_product,
    }
}

/// `per(I - A)` via the cycle product formula.
pub fn per_via_cycles(a: &Matrix) -> Result<Rational> {
    let decomposition = find_cycles(&build_graph(a)?);
    Ok(decomposition
        .cycles
        .iter()
        .map(|c| {
            if c.length % 2 == 0 {
                Rational::one() + &c.weight_product
            } else {
                Rational::one() - &c.weight_product
            }
        })
        .product())
}
