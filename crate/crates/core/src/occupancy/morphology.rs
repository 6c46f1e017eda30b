//! Binary morphology with square structuring elements on bounded rasters.
//!
//! Dilation is clipped to the raster. Erosion is its adjoint: a cell survives when
//! every in-raster cell of its window is set, so cells beyond the border never erode
//! anything. With this pairing closing stays extensive and idempotent at the borders.

use crate::grid::Mask;

fn window(i: usize, radius: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    i.saturating_sub(radius)..=(i + radius).min(n - 1)
}

pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    let mut out = Mask::new(mask.nx, mask.ny);
    for iy in 0..mask.ny {
        for ix in 0..mask.nx {
            if mask.cells[iy * mask.nx + ix] {
                for y in window(iy, radius, mask.ny) {
                    out.cells[y * mask.nx..(y + 1) * mask.nx][window(ix, radius, mask.nx)]
                        .fill(true);
                }
            }
        }
    }
    out
}

pub fn erode(mask: &Mask, radius: usize) -> Mask {
    let mut out = Mask::new(mask.nx, mask.ny);
    for iy in 0..mask.ny {
        for ix in 0..mask.nx {
            out.cells[iy * mask.nx + ix] = window(iy, radius, mask.ny).all(|y| {
                mask.cells[y * mask.nx..(y + 1) * mask.nx][window(ix, radius, mask.nx)]
                    .iter()
                    .all(|&c| c)
            });
        }
    }
    out
}

/// Dilation followed by erosion with a `(2 * radius + 1)`-wide square.
pub fn closing(mask: &Mask, radius: usize) -> Mask {
    erode(&dilate(mask, radius), radius)
}
