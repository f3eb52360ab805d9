//! Fill-reducing symmetric orderings.

use std::collections::BTreeSet;

use crate::cluster_tree::BoundingBox;
use crate::sparse::{Permutation, SparseSym};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingMethod {
    Natural,
    /// Approximate minimum degree on the quotient graph.
    MinimumDegree,
    /// Recursive coordinate bisection of the supports of the basis elements.
    NestedDissection,
}

/// Approximate minimum degree ordering of the pattern of `a`.
///
/// Eliminated vertices become elements of a quotient graph, elements
/// adjacent to the pivot are absorbed, and degrees are the usual upper bound
/// `|A_i| + |L_p| + Σ |L_e \ L_p|`. Ties go to the lowest index, so the
/// result is deterministic.
pub fn approximate_minimum_degree(a: &SparseSym) -> Permutation {
    let n = a.size();
    let mut adj: Vec<Vec<usize>> = a.adjacency();
    let mut elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    // Variables of each element; only meaningful for live elements.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut eliminated = vec![false; n];
    let mut absorbed = vec![false; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();
    let mut in_lp = vec![false; n];
    let mut w = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);

    while let Some((_, p)) = queue.pop_first() {
        eliminated[p] = true;
        order.push(p);

        let mut lp: Vec<usize> = Vec::new();
        for &j in &adj[p] {
            if !eliminated[j] && !in_lp[j] {
                in_lp[j] = true;
                lp.push(j);
            }
        }
        for &e in &elems[p] {
            for &j in &members[e] {
                if !eliminated[j] && !in_lp[j] {
                    in_lp[j] = true;
                    lp.push(j);
                }
            }
            absorbed[e] = true;
            members[e] = Vec::new();
        }
        lp.sort_unstable();
        adj[p] = Vec::new();
        elems[p] = Vec::new();

        // |L_e \ L_p| for the other elements touching L_p.
        let mut touched = Vec::new();
        for &i in &lp {
            for &e in &elems[i] {
                if absorbed[e] {
                    continue;
                }
                if w[e] == usize::MAX {
                    w[e] = members[e].len();
                    touched.push(e);
                }
                w[e] -= 1;
            }
        }

        let remaining = n - order.len();
        for &i in &lp {
            adj[i].retain(|&j| !eliminated[j] && !in_lp[j]);
            elems[i].retain(|&e| !absorbed[e]);
            let external: usize = elems[i].iter().map(|&e| w[e]).sum();
            elems[i].push(p);
            let bound = adj[i].len() + (lp.len() - 1) + external;
            let d = bound.min(remaining.saturating_sub(1)).min(degree[i] + lp.len() - 1);
            queue.remove(&(degree[i], i));
            degree[i] = d;
            queue.insert((d, i));
        }
        for e in touched {
            w[e] = usize::MAX;
        }
        for &i in &lp {
            in_lp[i] = false;
        }
        members[p] = lp;
    }
    Permutation::new(order).expect("every vertex eliminated once")
}

/// Nested dissection from geometry: index `i` is represented by `boxes[i]`.
///
/// Each step cuts the longest axis of the box of the centers at the median
/// center. Indices whose box lies strictly on one side go to that side, the
/// rest form the separator, and the result orders left, right, separator.
pub fn geometric_nested_dissection(boxes: &[BoundingBox], min_size: usize) -> Permutation {
    let centers: Vec<Vec<f64>> = boxes.iter().map(BoundingBox::center).collect();
    let mut order = Vec::with_capacity(boxes.len());
    let all: Vec<usize> = (0..boxes.len()).collect();
    dissect(&all, boxes, &centers, min_size.max(1), &mut order);
    Permutation::new(order).expect("dissection visits every index once")
}

fn dissect(idx: &[usize], boxes: &[BoundingBox], centers: &[Vec<f64>], min_size: usize, order: &mut Vec<usize>) {
    if idx.len() <= min_size {
        order.extend_from_slice(idx);
        return;
    }
    let d = centers[idx[0]].len();
    let mut axis = 0;
    let mut best = -1.0;
    for k in 0..d {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(centers[i][k]), hi.max(centers[i][k]))
        });
        if hi - lo > best {
            best = hi - lo;
            axis = k;
        }
    }
    let mut coords: Vec<f64> = idx.iter().map(|&i| centers[i][axis]).collect();
    let mid = coords.len() / 2;
    let (_, &mut cut, _) = coords.select_nth_unstable_by(mid, f64::total_cmp);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &i in idx {
        if boxes[i].hi[axis] < cut {
            left.push(i);
        } else if boxes[i].lo[axis] > cut {
            right.push(i);
        } else {
            sep.push(i);
        }
    }
    if left.is_empty() && right.is_empty() {
        order.extend_from_slice(idx);
        return;
    }
    dissect(&left, boxes, centers, min_size, order);
    dissect(&right, boxes, centers, min_size, order);
    dissect(&sep, boxes, centers, min_size, order);
}
