//! Choosing the visiting order of unexplored tree nodes.
//!
//! The open shortest path from the vehicle's node through all unexplored nodes is
//! turned into a closed tour by a dummy vertex that is free to reach from the start
//! vertex and prohibitively expensive to reach from anywhere else. The tour is built
//! by nearest neighbour and improved by 2-opt.

use serde::Serialize;

use crate::coverage_tree::{CoverageTree, NodeId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::terrain::PlaneStack;

/// Cost of moving from node `i` to node `j`: up to the plane of their lowest common
/// ancestor, across between centroids, and down to the plane of `j`.
pub fn transition_cost(
    tree: &CoverageTree,
    planes: &PlaneStack,
    i: NodeId,
    j: NodeId,
) -> Result<f64> {
    let (a, b) = (tree.node(i)?, tree.node(j)?);
    if i == j {
        return Ok(0.0);
    }
    let ancestor = tree.common_ancestor_level(i, j)?;
    let depth = |level: usize| {
        planes
            .depths
            .get(level)
            .copied()
            .ok_or_else(|| Error::Domain(format!("no plane at level {level}")))
    };
    let h_a = depth(ancestor)?;
    let up = (depth(a.level)? - h_a).abs();
    let down = (depth(b.level)? - h_a).abs();
    let [xi, yi] = a.subregion.centroid;
    let [xj, yj] = b.subregion.centroid;
    Ok(up + (xi - xj).hypot(yi - yj) + down)
}

/// Square, non-negative weight matrix with a zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMatrix<T: Scalar> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn new(n: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::Domain(format!(
                "{} entries cannot form a non-empty {n}x{n} matrix",
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = data[i * n + j];
                if !(w >= T::zero() && w.is_finite()) {
                    return Err(Error::Domain(format!(
                        "weight ({i}, {j}) = {w} is not finite and non-negative"
                    )));
                }
                if i == j && w != T::zero() {
                    return Err(Error::Domain(format!(
                        "diagonal weight ({i}, {i}) = {w} is not zero"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let data = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    T::zero()
                } else {
                    f(k / n, k % n)
                }
            })
            .collect();
        Self::new(n, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn max_entry(&self) -> T {
        self.data.iter().copied().fold(T::zero(), T::max)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&w| w * c).collect(),
        }
    }

    /// Cost of a closed tour given as a vertex sequence whose last entry repeats the first.
    pub fn tour_cost(&self, order: &[usize]) -> T {
        order
            .windows(2)
            .fold(T::zero(), |acc, e| acc + self.get(e[0], e[1]))
    }
}

/// Value standing in for an infinite weight: `1e6 * (max + 1)`.
pub fn sentinel<T: Scalar>(w: &WeightMatrix<T>) -> T {
    T::of(1e6) * (w.max_entry() + T::one())
}

/// Appends the dummy vertex `eta`: zero cost between it and vertex 0, the sentinel
/// between it and every other vertex.
pub fn expand_with_dummy<T: Scalar>(w: &WeightMatrix<T>) -> WeightMatrix<T> {
    let n = w.len();
    let inf = sentinel(w);
    let mut data = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            data.push(match (i == n, j == n) {
                (false, false) => w.get(i, j),
                (true, true) => T::zero(),
                (true, false) if j == 0 => T::zero(),
                (false, true) if i == 0 => T::zero(),
                _ => inf,
            });
        }
    }
    WeightMatrix { n: n + 1, data }
}

/// Closed tour starting and ending at the dummy vertex (the last index of the matrix).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tour<T: Scalar> {
    pub order: Vec<usize>,
    pub cost: T,
}

/// One accepted 2-opt move: the segment `order[i..=j]` was reversed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Swap<T: Scalar> {
    pub i: usize,
    pub j: usize,
    pub cost_after: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace<T: Scalar> {
    pub initial: Tour<T>,
    pub swaps: Vec<Swap<T>>,
    pub tour: Tour<T>,
}

/// Nearest-neighbour tour from the dummy vertex; ties go to the lowest index.
pub fn nearest_neighbor<T: Scalar>(w: &WeightMatrix<T>) -> Tour<T> {
    let n = w.len();
    let dummy = n - 1;
    let mut visited = vec![false; n];
    visited[dummy] = true;
    let mut order = Vec::with_capacity(n + 1);
    order.push(dummy);
    let mut cur = dummy;
    for _ in 1..n {
        let mut best: Option<usize> = None;
        for (j, &seen) in visited.iter().enumerate() {
            if !seen && best.is_none_or(|b| w.get(cur, j) < w.get(cur, b)) {
                best = Some(j);
            }
        }
        let next = best.expect("an unvisited vertex remains");
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order.push(dummy);
    let cost = w.tour_cost(&order);
    Tour { order, cost }
}

/// Improves `tour` by 2-opt until no segment reversal lowers the cost.
///
/// Candidate reversals are scanned in lexicographic `(i, j)` order and the first
/// improving one is applied, after which the scan restarts. The matrix may be
/// asymmetric, so each candidate is priced by recomputing the full tour cost.
///
/// The dummy and the start vertex after it stay in place. Reversing a segment that
/// includes the start vertex only ever mirrors the whole path, which at best ties in
/// exact arithmetic but can win by a rounding error against the sentinel.
pub fn two_opt<T: Scalar>(w: &WeightMatrix<T>, tour: &Tour<T>) -> (Tour<T>, Vec<Swap<T>>) {
    let mut order = tour.order.clone();
    let mut cost = w.tour_cost(&order);
    let mut swaps = Vec::new();
    let last = order.len() - 1;
    let mut candidate = order.clone();
    'scan: loop {
        for i in 2..last {
            for j in i + 1..last {
                candidate.copy_from_slice(&order);
                candidate[i..=j].reverse();
                let c = w.tour_cost(&candidate);
                if c < cost {
                    std::mem::swap(&mut order, &mut candidate);
                    cost = c;
                    swaps.push(Swap {
                        i,
                        j,
                        cost_after: c,
                    });
                    continue 'scan;
                }
            }
        }
        break;
    }
    (Tour { order, cost }, swaps)
}

/// Nearest neighbour followed by 2-opt on an expanded matrix.
pub fn solve<T: Scalar>(w_expanded: &WeightMatrix<T>) -> SolveTrace<T> {
    let initial = nearest_neighbor(w_expanded);
    let (tour, swaps) = two_opt(w_expanded, &initial);
    SolveTrace {
        initial,
        swaps,
        tour,
    }
}

/// The visiting order after the start vertex, with the dummy removed.
pub fn next_sequence<T: Scalar>(tour: &Tour<T>) -> Vec<usize> {
    let dummy = tour.order[0];
    tour.order
        .iter()
        .copied()
        .filter(|&v| v != dummy && v != 0)
        .collect()
}

/// Cost of the open path encoded by a tour: all edges except those touching the dummy.
pub fn path_cost<T: Scalar>(w: &WeightMatrix<T>, tour: &Tour<T>) -> T {
    let dummy = tour.order[0];
    tour.order
        .windows(2)
        .filter(|e| e[0] != dummy && e[1] != dummy)
        .fold(T::zero(), |acc, e| acc + w.get(e[0], e[1]))
}

/// Weight matrix over `[from, targets...]` priced with [`transition_cost`].
pub fn build_weight_matrix(
    tree: &CoverageTree,
    planes: &PlaneStack,
    from: NodeId,
    targets: &[NodeId],
) -> Result<WeightMatrix<f64>> {
    let ids: Vec<NodeId> = std::iter::once(from)
        .chain(targets.iter().copied())
        .collect();
    let n = ids.len();
    let mut data = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                data[a * n + b] = transition_cost(tree, planes, ids[a], ids[b])?;
            }
        }
    }
    WeightMatrix::new(n, data)
}

/// Orders `targets` for a vehicle that has just finished node `from`.
pub fn plan_visits(
    tree: &CoverageTree,
    planes: &PlaneStack,
    from: NodeId,
    targets: &[NodeId],
) -> Result<Vec<NodeId>> {
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let w = build_weight_matrix(tree, planes, from, targets)?;
    let trace = solve(&expand_with_dummy(&w));
    Ok(next_sequence(&trace.tour)
        .into_iter()
        .map(|v| targets[v - 1])
        .collect())
}
