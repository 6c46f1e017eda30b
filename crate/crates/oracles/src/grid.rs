/// Row-major boolean raster, `cells[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<bool>,
}

impl Raster {
    pub fn new(nx: usize, ny: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), nx * ny, "raster size");
        Self { nx, ny, cells }
    }

    pub fn at(&self, ix: i64, iy: i64) -> Option<bool> {
        let inside = ix >= 0 && iy >= 0 && (ix as usize) < self.nx && (iy as usize) < self.ny;
        inside.then(|| self.cells[iy as usize * self.nx + ix as usize])
    }
}

/// 4-connected components of the set cells, by union-find.
///
/// Each component lists its flat indices in increasing order; components are ordered
/// by their smallest index.
pub fn components_exact(r: &Raster) -> Vec<Vec<usize>> {
    let n = r.cells.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        if !r.cells[i] {
            continue;
        }
        let (ix, iy) = (i % r.nx, i / r.nx);
        let mut join = |j: usize| {
            if r.cells[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        };
        if ix + 1 < r.nx {
            join(i + 1);
        }
        if iy + 1 < r.ny {
            join(i + r.nx);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in (0..n).filter(|&i| r.cells[i]) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Closing with a `(2 * radius + 1)`-wide square, straight from the definitions.
///
/// A cell is in the dilation when some set cell lies within Chebyshev distance
/// `radius`. It stays after erosion when every in-raster cell within that distance is
/// in the dilation; positions outside the raster never veto.
pub fn closing_exact(r: &Raster, radius: usize) -> Raster {
    let k = radius as i64;
    let near =
        |ix: i64, iy: i64| (-k..=k).flat_map(move |dy| (-k..=k).map(move |dx| (ix + dx, iy + dy)));
    let dilated: Vec<bool> = (0..r.cells.len())
        .map(|i| near((i % r.nx) as i64, (i / r.nx) as i64).any(|(x, y)| r.at(x, y) == Some(true)))
        .collect();
    let d = Raster::new(r.nx, r.ny, dilated);
    let cells = (0..r.cells.len())
        .map(|i| near((i % r.nx) as i64, (i / r.nx) as i64).all(|(x, y)| d.at(x, y) != Some(false)))
        .collect();
    Raster::new(r.nx, r.ny, cells)
}

/// Log-odds after a batch of readings: (occupied count - free count) * l_occ.
pub fn batch_log_odds(occupied: &[bool], l_occ: f64) -> f64 {
    let n_occ = occupied.iter().filter(|&&o| o).count() as f64;
    (n_occ - (occupied.len() as f64 - n_occ)) * l_occ
}

/// Occupancy probability after a batch of readings, for logarithms in `base`.
pub fn batch_probability(occupied: &[bool], l_occ: f64, base: f64) -> f64 {
    let odds = base.powf(batch_log_odds(occupied, l_occ));
    odds / (1.0 + odds)
}

/// Ground-truth navigable cells of one plane.
///
/// `heights` is a row-major `hx x hy` grid of elevations sampled at the centers of
/// `resolution`-sized squares. A tiling cell is occupied when any sample inside it
/// rises above `plane_elevation` or reaches the water surface at `extent_z`. The
/// occupied raster is closed, and what remains free is kept when its 4-connected
/// component has at least `min_cells` cells.
#[allow(clippy::too_many_arguments)]
pub fn navigable_exact(
    heights: &[f64],
    hx: usize,
    hy: usize,
    resolution: f64,
    cell_size: f64,
    plane_elevation: f64,
    extent_z: f64,
    radius: usize,
    min_cells: usize,
) -> Raster {
    let nx = ((hx as f64 * resolution) / cell_size).round() as usize;
    let ny = ((hy as f64 * resolution) / cell_size).round() as usize;
    let mut occupied = vec![false; nx * ny];
    for sy in 0..hy {
        for sx in 0..hx {
            let h = heights[sy * hx + sx];
            let cx = (((sx as f64 + 0.5) * resolution) / cell_size).floor() as usize;
            let cy = (((sy as f64 + 0.5) * resolution) / cell_size).floor() as usize;
            if cx < nx && cy < ny && (h > plane_elevation || h >= extent_z) {
                occupied[cy * nx + cx] = true;
            }
        }
    }
    let closed = closing_exact(&Raster::new(nx, ny, occupied), radius);
    let free = Raster::new(nx, ny, closed.cells.iter().map(|&c| !c).collect());
    let mut nav = vec![false; nx * ny];
    for comp in components_exact(&free)
        .into_iter()
        .filter(|c| c.len() >= min_cells)
    {
        for i in comp {
            nav[i] = true;
        }
    }
    Raster::new(nx, ny, nav)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(rows: &[&str]) -> Raster {
        let ny = rows.len();
        let nx = rows[0].len();
        // Row 0 of the text is the top, i.e. the largest iy.
        let cells = rows
            .iter()
            .rev()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        Raster::new(nx, ny, cells)
    }

    #[test]
    fn checkerboard_components_are_singletons() {
        let r = Raster::new(4, 4, (0..16).map(|i| (i % 4 + i / 4) % 2 == 0).collect());
        let c = components_exact(&r);
        assert_eq!(c.len(), 8);
        assert!(c.iter().all(|c| c.len() == 1));
        assert!(components_exact(&Raster::new(3, 3, vec![false; 9])).is_empty());
    }

    #[test]
    fn u_shape_is_one_component() {
        let r = raster(&["#.#", "#.#", "###"]);
        assert_eq!(components_exact(&r), vec![vec![0, 1, 2, 3, 5, 6, 8]]);
    }

    #[test]
    fn closing_fills_one_cell_gap() {
        let r = raster(&[".......", ".......", ".#.#...", ".......", "......."]);
        let c = closing_exact(&r, 1);
        // The left border never vetoes, so the fill reaches column 0.
        assert_eq!(
            c,
            raster(&[".......", ".......", "####...", ".......", "......."])
        );
    }

    #[test]
    fn closing_seals_narrow_border_strip() {
        let r = raster(&["...", "###", "..."]);
        assert!(closing_exact(&r, 1).cells.iter().all(|&c| c));
    }

    #[test]
    fn batch_bayes() {
        assert_eq!(batch_log_odds(&[true, true, false], 0.5), 0.5);
        assert!((batch_probability(&[], 0.3, 10.0) - 0.5).abs() < 1e-15);
        let p = batch_probability(&[false; 4], 0.25, 10.0);
        assert!((p - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn navigable_on_a_bump() {
        // 4x4 cells of 10 m sampled every 5 m; a tall sample in cell (1, 1).
        let mut h = vec![0.0; 64];
        h[3 * 8 + 2] = 50.0;
        let nav = navigable_exact(&h, 8, 8, 5.0, 10.0, 20.0, 100.0, 0, 1);
        assert_eq!(nav.cells.iter().filter(|&&c| !c).count(), 1);
        assert!(!nav.cells[4 + 1]);
    }
}
