//! Boustrophedon coverage of a single planar subregion.
//!
//! Laps run along x. At the end of a lap the planner steps to an uncovered safe cell
//! at +y (or -y) and reverses; when neither exists it walks breadth-first over safe
//! cells to the nearest uncovered one and resumes sweeping from there.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{CellIndex, Mask, Tiling};
use crate::occupancy::{Label, Subregion, SymbolicMap};

#[derive(Debug, Clone, PartialEq)]
pub struct LapPlan {
    /// Turning points of the path, at cell centers.
    pub waypoints: Vec<[f64; 2]>,
    pub lap_width: f64,
    /// Cells in the order they are first visited.
    pub covered: Vec<CellIndex>,
    /// Every cell the path passes through, consecutive entries 4-adjacent.
    pub cell_path: Vec<CellIndex>,
}

impl LapPlan {
    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|p| (p[1][0] - p[0][0]).hypot(p[1][1] - p[0][1]))
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for [x, y] in &self.waypoints {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// Plans a path visiting every safe cell of `subregion`.
///
/// `start` must lie in a safe cell of the subregion or in a cell 4-adjacent to one.
/// Only cells of the subregion that `sym` labels `S` are entered.
pub fn cover_subregion(
    sym: &SymbolicMap,
    tiling: &Tiling,
    subregion: &Subregion,
    start: [f64; 2],
    lap_width: f64,
) -> Result<LapPlan> {
    if (lap_width - tiling.cell_size).abs() > 1e-9 * tiling.cell_size {
        return Err(Error::Config(format!(
            "lap width {lap_width} must equal the cell size {} (one lap per cell row)",
            tiling.cell_size
        )));
    }
    let mut free = Mask::new(tiling.nx, tiling.ny);
    for &c in &subregion.cells {
        if sym.get(c) == Label::Safe {
            free.set(c, true);
        }
    }
    let here = tiling.cell_of(start[0], start[1]).ok_or_else(|| {
        Error::Domain(format!(
            "start ({}, {}) is off the tiling",
            start[0], start[1]
        ))
    })?;
    let first = if free.get(here) {
        here
    } else {
        tiling
            .neighbors4(here)
            .find(|&n| free.get(n))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "start cell ({}, {}) is not in or next to the subregion",
                    here.ix, here.iy
                ))
            })?
    };

    // Each variant is cheap; keep the one with the shortest path.
    let (covered, cell_path) = [(1, true), (1, false), (-1, true), (-1, false)]
        .into_iter()
        .map(|(dir, up_first)| sweep(tiling, &free, first, dir, up_first))
        .min_by_key(|(_, path)| path.len())
        .expect("four variants");
    let waypoints = compress(&cell_path)
        .into_iter()
        .map(|c| tiling.center(c))
        .collect();
    Ok(LapPlan {
        waypoints,
        lap_width,
        covered,
        cell_path,
    })
}

/// Greedy lap sweep from `first`. `dir` is the preferred initial x direction and
/// `up_first` decides whether +y or -y is tried first at the end of a lap.
fn sweep(
    tiling: &Tiling,
    free: &Mask,
    first: CellIndex,
    dir: isize,
    up_first: bool,
) -> (Vec<CellIndex>, Vec<CellIndex>) {
    let total = free.count();
    let mut covered_mask = Mask::new(tiling.nx, tiling.ny);
    let mut covered = Vec::with_capacity(total);
    let mut cell_path = vec![first];
    let visit = |c: CellIndex, covered_mask: &mut Mask, covered: &mut Vec<CellIndex>| {
        if !covered_mask.get(c) {
            covered_mask.set(c, true);
            covered.push(c);
        }
    };
    visit(first, &mut covered_mask, &mut covered);

    let open = |c: Option<CellIndex>, covered_mask: &Mask| {
        c.filter(|c| tiling.contains(*c) && free.get(*c) && !covered_mask.get(*c))
    };
    let mut cur = first;
    let mut dir = if open(cur.offset(dir, 0), &covered_mask).is_some()
        || open(cur.offset(-dir, 0), &covered_mask).is_none()
    {
        dir
    } else {
        -dir
    };
    let (dy0, dy1) = if up_first { (1, -1) } else { (-1, 1) };
    while covered.len() < total {
        if let Some(next) = open(cur.offset(dir, 0), &covered_mask) {
            cur = next;
        } else if let Some(next) = open(cur.offset(0, dy0), &covered_mask)
            .or_else(|| open(cur.offset(0, dy1), &covered_mask))
        {
            cur = next;
            dir = -dir;
        } else {
            let route = route_to_uncovered(tiling, free, &covered_mask, cur);
            assert!(
                !route.is_empty(),
                "subregion cells unreachable from ({}, {}); subregions are 4-connected",
                cur.ix,
                cur.iy
            );
            cell_path.extend_from_slice(&route[..route.len() - 1]);
            cur = *route.last().expect("non-empty route");
            dir = if open(cur.offset(1, 0), &covered_mask).is_some() {
                1
            } else {
                -1
            };
        }
        cell_path.push(cur);
        visit(cur, &mut covered_mask, &mut covered);
    }

    (covered, cell_path)
}

/// Shortest 4-connected route over `free` cells from `from` (exclusive) to the nearest
/// uncovered free cell (inclusive). Empty when no uncovered cell is reachable.
fn route_to_uncovered(
    tiling: &Tiling,
    free: &Mask,
    covered: &Mask,
    from: CellIndex,
) -> Vec<CellIndex> {
    let mut prev: Vec<Option<usize>> = vec![None; tiling.len()];
    let start = tiling.index(from);
    prev[start] = Some(start);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if !covered.get(c) {
            let mut route = vec![c];
            let mut i = tiling.index(c);
            while let Some(p) = prev[i].filter(|&p| p != start) {
                route.push(tiling.cell(p));
                i = p;
            }
            route.reverse();
            return route;
        }
        for n in tiling.neighbors4(c) {
            let i = tiling.index(n);
            if free.get(n) && prev[i].is_none() {
                prev[i] = Some(tiling.index(c));
                queue.push_back(n);
            }
        }
    }
    Vec::new()
}

/// Keeps the endpoints and the cells where the path changes direction.
fn compress(path: &[CellIndex]) -> Vec<CellIndex> {
    let step =
        |a: CellIndex, b: CellIndex| (b.ix as isize - a.ix as isize, b.iy as isize - a.iy as isize);
    let mut out = vec![path[0]];
    for k in 1..path.len() {
        let last = k + 1 == path.len();
        if path[k] == path[k - 1] {
            continue;
        }
        if last || step(path[k - 1], path[k]) != step(path[k], path[k + 1]) {
            out.push(path[k]);
        }
    }
    out
}
