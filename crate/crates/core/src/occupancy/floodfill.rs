//! Four-connected floodfill over the safe cells of a symbolic map.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Label, SymbolicMap};
use crate::grid::{CellIndex, Mask, Tiling};

/// Components smaller than this cannot hold a lap and are not navigated.
pub const MIN_SUBREGION_CELLS: usize = 4;

/// A maximal 4-connected set of safe cells on one plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subregion {
    /// Member cells in row-major order.
    pub cells: Vec<CellIndex>,
    /// Mean of the member cell centers. May lie outside a non-convex region.
    pub centroid: [f64; 2],
}

impl Subregion {
    pub fn from_cells(mut cells: Vec<CellIndex>, tiling: &Tiling) -> Self {
        cells.sort_unstable();
        cells.dedup();
        let n = cells.len().max(1) as f64;
        let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), &c| {
            let [x, y] = tiling.center(c);
            (sx + x, sy + y)
        });
        Self {
            cells,
            centroid: [sx / n, sy / n],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn mask(&self, nx: usize, ny: usize) -> Mask {
        let mut m = Mask::new(nx, ny);
        for &c in &self.cells {
            m.set(c, true);
        }
        m
    }

    /// Member cell whose center is nearest the centroid (row-major first on ties).
    pub fn entry_cell(&self, tiling: &Tiling) -> Option<CellIndex> {
        let d2 = |c: &CellIndex| {
            let [x, y] = tiling.center(*c);
            (x - self.centroid[0]).powi(2) + (y - self.centroid[1]).powi(2)
        };
        self.cells
            .iter()
            .copied()
            .min_by(|a, b| d2(a).total_cmp(&d2(b)))
    }
}

/// Partitions the `S` cells of `sym` into maximal 4-connected components, ordered by
/// their first cell in row-major order.
pub fn extract_subregions(sym: &SymbolicMap, tiling: &Tiling) -> Vec<Subregion> {
    debug_assert_eq!((sym.nx, sym.ny), (tiling.nx, tiling.ny));
    let mut seen = vec![false; sym.labels.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..sym.labels.len() {
        if seen[start] || sym.labels[start] != Label::Safe {
            continue;
        }
        seen[start] = true;
        queue.push_back(tiling.cell(start));
        let mut cells = Vec::new();
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for n in tiling.neighbors4(c) {
                let i = tiling.index(n);
                if !seen[i] && sym.labels[i] == Label::Safe {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(Subregion::from_cells(cells, tiling));
    }
    out
}

/// Components with at least `min_cells` cells.
pub fn extract_navigable(sym: &SymbolicMap, tiling: &Tiling, min_cells: usize) -> Vec<Subregion> {
    extract_subregions(sym, tiling)
        .into_iter()
        .filter(|s| s.len() >= min_cells)
        .collect()
}
