//! Horizontal routes on a single plane between coverage-tree nodes.

use std::collections::VecDeque;

use crate::grid::{CellIndex, Tiling};
use crate::occupancy::{Label, SymbolicMap};

/// Every cell whose closed square meets the segment `a -> b`, in order along it.
///
/// Where the segment passes exactly through a cell corner both side cells are
/// included, so a route is only as safe as all cells it touches.
pub fn supercover(tiling: &Tiling, a: [f64; 2], b: [f64; 2]) -> Vec<CellIndex> {
    let (Some(mut c), Some(end)) = (tiling.cell_of(a[0], a[1]), tiling.cell_of(b[0], b[1])) else {
        return Vec::new();
    };
    let s = tiling.cell_size;
    let ua = [(a[0] - tiling.origin[0]) / s, (a[1] - tiling.origin[1]) / s];
    let ub = [(b[0] - tiling.origin[0]) / s, (b[1] - tiling.origin[1]) / s];
    let d = [ub[0] - ua[0], ub[1] - ua[1]];
    let step = d.map(|v| {
        if v > 0.0 {
            1isize
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    });
    let first_crossing = |k: usize, i: usize| match step[k] {
        1 => ((i + 1) as f64 - ua[k]) / d[k],
        -1 => (i as f64 - ua[k]) / d[k],
        _ => f64::INFINITY,
    };
    let mut t_max = [first_crossing(0, c.ix), first_crossing(1, c.iy)];
    let t_delta = d.map(|v| {
        if v != 0.0 {
            1.0 / v.abs()
        } else {
            f64::INFINITY
        }
    });

    let mut out = vec![c];
    let guard = tiling.nx + tiling.ny + 2;
    while c != end && out.len() <= 2 * guard {
        let next =
            if t_max[0].is_finite() && (t_max[0] - t_max[1]).abs() <= 1e-9 * t_max[0].max(1.0) {
                for side in [c.offset(step[0], 0), c.offset(0, step[1])]
                    .into_iter()
                    .flatten()
                {
                    if tiling.contains(side) {
                        out.push(side);
                    }
                }
                t_max[0] += t_delta[0];
                t_max[1] += t_delta[1];
                c.offset(step[0], step[1])
            } else if t_max[0] < t_max[1] {
                t_max[0] += t_delta[0];
                c.offset(step[0], 0)
            } else {
                t_max[1] += t_delta[1];
                c.offset(0, step[1])
            };
        match next.filter(|n| tiling.contains(*n)) {
            Some(n) => {
                c = n;
                out.push(c);
            }
            None => break,
        }
    }
    out
}

/// True when every cell touched by `a -> b`, other than the one containing `a`, is safe.
pub fn line_of_sight(sym: &SymbolicMap, tiling: &Tiling, a: [f64; 2], b: [f64; 2]) -> bool {
    let cells = supercover(tiling, a, b);
    !cells.is_empty() && cells[1..].iter().all(|&c| sym.get(c) == Label::Safe)
}

/// Waypoints (excluding `from`) of a safe route ending at the center of `to`.
///
/// The straight line is used when it only touches safe cells; otherwise a 4-connected
/// breadth-first path over safe cells is shortened by string pulling. `None` when `to`
/// cannot be reached over safe cells.
pub fn plan_route(
    sym: &SymbolicMap,
    tiling: &Tiling,
    from: [f64; 2],
    to: CellIndex,
) -> Option<Vec<[f64; 2]>> {
    let goal = tiling.center(to);
    if line_of_sight(sym, tiling, from, goal) {
        return Some(vec![goal]);
    }
    let start = tiling.cell_of(from[0], from[1])?;
    let cells = bfs(sym, tiling, start, to)?;
    let points: Vec<[f64; 2]> = cells.iter().map(|&c| tiling.center(c)).collect();

    let mut route = Vec::new();
    let mut anchor = from;
    let mut i = 0;
    while i < points.len() {
        // The next path cell is always visible from the anchor, so progress is guaranteed.
        let mut j = points.len() - 1;
        while j > i && !line_of_sight(sym, tiling, anchor, points[j]) {
            j -= 1;
        }
        route.push(points[j]);
        anchor = points[j];
        i = j + 1;
    }
    Some(route)
}

/// Safe 4-connected path from `start` (exclusive, exempt from the safety check) to `goal`.
fn bfs(
    sym: &SymbolicMap,
    tiling: &Tiling,
    start: CellIndex,
    goal: CellIndex,
) -> Option<Vec<CellIndex>> {
    if sym.get(goal) != Label::Safe {
        return None;
    }
    let mut prev = vec![usize::MAX; tiling.len()];
    let s = tiling.index(start);
    prev[s] = s;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            let mut path = Vec::new();
            let mut i = tiling.index(c);
            while i != s {
                path.push(tiling.cell(i));
                i = prev[i];
            }
            path.reverse();
            return Some(path);
        }
        for n in tiling.neighbors4(c) {
            let i = tiling.index(n);
            if prev[i] == usize::MAX && sym.get(n) == Label::Safe {
                prev[i] = tiling.index(c);
                queue.push_back(n);
            }
        }
    }
    None
}
