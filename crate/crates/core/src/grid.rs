//! Planar tilings and cell-indexed rasters shared by the mapping and planning modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer cell coordinates on a tiling. Ordered row-major (`iy` first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub iy: usize,
    pub ix: usize,
}

impl CellIndex {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Self { iy, ix }
    }

    /// Offset by `(dx, dy)`, or `None` when the result would be negative.
    pub fn offset(self, dx: isize, dy: isize) -> Option<Self> {
        let ix = self.ix.checked_add_signed(dx)?;
        let iy = self.iy.checked_add_signed(dy)?;
        Some(Self { iy, ix })
    }
}

/// Square tiling of a plane: `nx * ny` cells of side `cell_size` starting at `origin`.
///
/// Cells are half-open squares `[x0, x0 + s) x [y0, y0 + s)`, so their interiors are
/// disjoint and together they cover the rectangle spanned by the tiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
}

impl Tiling {
    pub fn new(cell_size: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(cell_size > 0.0) || nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "tiling needs positive cell size and counts (got {cell_size}, {nx}x{ny})"
            )));
        }
        Ok(Self {
            cell_size,
            nx,
            ny,
            origin: [0.0, 0.0],
        })
    }

    /// Tiling covering `[0, extent_x] x [0, extent_y]` exactly.
    pub fn covering(extent_x: f64, extent_y: f64, cell_size: f64) -> Result<Self> {
        let nx = (extent_x / cell_size).round();
        let ny = (extent_y / cell_size).round();
        if (nx * cell_size - extent_x).abs() > 1e-9 * extent_x.max(1.0)
            || (ny * cell_size - extent_y).abs() > 1e-9 * extent_y.max(1.0)
        {
            return Err(Error::Config(format!(
                "cell size {cell_size} does not divide the extent {extent_x} x {extent_y}"
            )));
        }
        Self::new(cell_size, nx as usize, ny as usize)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.ix < self.nx && cell.iy < self.ny
    }

    pub fn index(&self, cell: CellIndex) -> usize {
        debug_assert!(self.contains(cell));
        cell.iy * self.nx + cell.ix
    }

    pub fn cell(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.nx, index / self.nx)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(|i| self.cell(i))
    }

    /// Cell containing the point, or `None` outside the tiling.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<CellIndex> {
        let u = (x - self.origin[0]) / self.cell_size;
        let v = (y - self.origin[1]) / self.cell_size;
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let (ix, iy) = (u.floor() as usize, v.floor() as usize);
        // The far boundary belongs to the last cell.
        let ix = if ix == self.nx && u <= self.nx as f64 {
            ix - 1
        } else {
            ix
        };
        let iy = if iy == self.ny && v <= self.ny as f64 {
            iy - 1
        } else {
            iy
        };
        let cell = CellIndex::new(ix, iy);
        self.contains(cell).then_some(cell)
    }

    pub fn center(&self, cell: CellIndex) -> [f64; 2] {
        [
            self.origin[0] + (cell.ix as f64 + 0.5) * self.cell_size,
            self.origin[1] + (cell.iy as f64 + 0.5) * self.cell_size,
        ]
    }

    /// 4-adjacent neighbours inside the tiling, in the order +x, -x, +y, -y.
    pub fn neighbors4(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .filter_map(move |(dx, dy)| cell.offset(dx, dy))
            .filter(move |c| self.contains(*c))
    }
}

/// Binary raster over a tiling, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            cells: vec![false; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(CellIndex) -> bool) -> Self {
        let cells = (0..nx * ny)
            .map(|i| f(CellIndex::new(i % nx, i / nx)))
            .collect();
        Self { nx, ny, cells }
    }

    pub fn get(&self, cell: CellIndex) -> bool {
        self.cells[cell.iy * self.nx + cell.ix]
    }

    pub fn set(&mut self, cell: CellIndex, value: bool) {
        self.cells[cell.iy * self.nx + cell.ix] = value;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// True when every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }
}
