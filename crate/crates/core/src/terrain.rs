//! Synthetic ground-truth terrains and the slicing planes of the survey volume.
//!
//! Elevations are stored above the seabed; depths are measured downward from the
//! ocean surface. A terrain point at elevation `e` therefore sits at depth
//! `extent_z - e`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Mask, Tiling};

/// One radial bump of the synthetic terrain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mountain {
    pub center: [f64; 2],
    /// Peak elevation above the seabed, meters.
    pub peak: f64,
    /// Radius at which the profile has fallen to `1/e` of the peak, meters.
    pub spread: f64,
    /// Profile exponent; 1 is Gaussian, larger values give flat tops and steep sides.
    pub steepness: f64,
}

impl Mountain {
    /// Elevation contributed at horizontal distance `rho` from the center.
    pub fn profile(&self, rho: f64) -> f64 {
        let s = rho / self.spread;
        self.peak * (-s.powf(2.0 * self.steepness)).exp()
    }
}

/// Sampling ranges for randomly placed mountains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MountainRanges {
    pub peak: [f64; 2],
    pub spread: [f64; 2],
    pub steepness: [f64; 2],
    /// Centers are kept this fraction of the extent away from the borders.
    pub margin: f64,
    /// Preferred distance between mountain centers, meters. Centers are redrawn up to
    /// [`CENTER_ATTEMPTS`] times to honour it; the last draw is kept otherwise.
    pub min_separation: f64,
}

pub const CENTER_ATTEMPTS: usize = 64;

impl Default for MountainRanges {
    fn default() -> Self {
        Self {
            peak: [330.0, 380.0],
            spread: [45.0, 60.0],
            steepness: [8.0, 10.0],
            margin: 0.1,
            min_separation: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub extent_x: f64,
    pub extent_y: f64,
    /// Ocean depth at the seabed, meters.
    pub extent_z: f64,
    /// Heightmap sample spacing, meters.
    pub resolution: f64,
    pub seed: u64,
    pub mountain_count: usize,
    /// Explicit mountains. When non-empty they are used verbatim and
    /// `mountain_count` must equal their number.
    pub mountains: Vec<Mountain>,
    pub ranges: MountainRanges,
    /// When positive, summed elevations are rolled off smoothly so the terrain stays at
    /// least this far below the surface. Zero allows islands.
    pub surface_clearance: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            extent_x: 450.0,
            extent_y: 450.0,
            extent_z: 400.0,
            resolution: 5.0,
            seed: 0,
            mountain_count: 12,
            mountains: Vec::new(),
            ranges: MountainRanges::default(),
            surface_clearance: 20.0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite (got {v})"
                )))
            }
        };
        positive("extent_x", self.extent_x)?;
        positive("extent_y", self.extent_y)?;
        positive("extent_z", self.extent_z)?;
        positive("resolution", self.resolution)?;
        for (name, extent) in [("extent_x", self.extent_x), ("extent_y", self.extent_y)] {
            let n = extent / self.resolution;
            if (n - n.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "resolution {} does not divide {name} {extent}",
                    self.resolution
                )));
            }
        }
        if !self.mountains.is_empty() && self.mountains.len() != self.mountain_count {
            return Err(Error::Config(format!(
                "mountain_count {} disagrees with {} explicit mountains",
                self.mountain_count,
                self.mountains.len()
            )));
        }
        for m in &self.mountains {
            if !(m.peak >= 0.0 && m.peak <= self.extent_z) {
                return Err(Error::Config(format!(
                    "mountain peak {} outside [0, {}]",
                    m.peak, self.extent_z
                )));
            }
            positive("mountain spread", m.spread)?;
            positive("mountain steepness", m.steepness)?;
        }
        if !(self.surface_clearance >= 0.0 && self.surface_clearance < self.extent_z) {
            return Err(Error::Config(format!(
                "surface_clearance {} outside [0, {})",
                self.surface_clearance, self.extent_z
            )));
        }
        let r = &self.ranges;
        if self.mountains.is_empty() && self.mountain_count > 0 {
            if !(r.peak[0] >= 0.0 && r.peak[0] <= r.peak[1] && r.peak[1] <= self.extent_z) {
                return Err(Error::Config(format!(
                    "peak range {:?} must lie in [0, {}]",
                    r.peak, self.extent_z
                )));
            }
            if !(r.spread[0] > 0.0 && r.spread[0] <= r.spread[1]) {
                return Err(Error::Config(format!(
                    "invalid spread range {:?}",
                    r.spread
                )));
            }
            if !(r.steepness[0] > 0.0 && r.steepness[0] <= r.steepness[1]) {
                return Err(Error::Config(format!(
                    "invalid steepness range {:?}",
                    r.steepness
                )));
            }
            if !(r.min_separation >= 0.0 && r.min_separation.is_finite()) {
                return Err(Error::Config(format!(
                    "min_separation {} must be non-negative",
                    r.min_separation
                )));
            }
            if !(0.0..0.5).contains(&r.margin) {
                return Err(Error::Config(format!(
                    "margin {} outside [0, 0.5)",
                    r.margin
                )));
            }
        }
        Ok(())
    }

    /// The mountains of this scene: the explicit list, or `mountain_count`
    /// draws from `ranges` seeded by `seed`.
    pub fn resolve_mountains(&self) -> Vec<Mountain> {
        if !self.mountains.is_empty() {
            return self.mountains.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = &self.ranges;
        let uniform = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| {
            if hi > lo {
                rng.gen_range(lo..hi)
            } else {
                lo
            }
        };
        let mut out: Vec<Mountain> = Vec::with_capacity(self.mountain_count);
        for _ in 0..self.mountain_count {
            let mut center = [0.0; 2];
            for _ in 0..CENTER_ATTEMPTS {
                center = [
                    uniform(&mut rng, [r.margin, 1.0 - r.margin]) * self.extent_x,
                    uniform(&mut rng, [r.margin, 1.0 - r.margin]) * self.extent_y,
                ];
                let clear = out.iter().all(|m| {
                    (m.center[0] - center[0]).hypot(m.center[1] - center[1]) >= r.min_separation
                });
                if clear {
                    break;
                }
            }
            out.push(Mountain {
                center,
                peak: uniform(&mut rng, r.peak),
                spread: uniform(&mut rng, r.spread),
                steepness: uniform(&mut rng, r.steepness),
            });
        }
        out
    }
}

/// Ground-truth elevation field sampled at the centers of `resolution`-sized columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    pub extent_z: f64,
    /// Row-major elevations above the seabed, meters.
    pub heights: Vec<f64>,
}

/// Builds the heightmap for `spec`: summed mountain profiles, rolled off below the
/// surface clearance and clamped to `[0, extent_z]`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Heightmap> {
    spec.validate()?;
    let nx = (spec.extent_x / spec.resolution).round() as usize;
    let ny = (spec.extent_y / spec.resolution).round() as usize;
    let mountains = spec.resolve_mountains();
    let mut heights = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let x = (ix as f64 + 0.5) * spec.resolution;
            let y = (iy as f64 + 0.5) * spec.resolution;
            let h: f64 = mountains
                .iter()
                .map(|m| m.profile((x - m.center[0]).hypot(y - m.center[1])))
                .sum();
            heights.push(h);
        }
    }
    if spec.surface_clearance > 0.0 {
        // Soft ceiling: identity below the knee, then a tanh roll-off that approaches
        // `extent_z - surface_clearance` without reaching it.
        let band = (2.0 * spec.surface_clearance).min(spec.extent_z - spec.surface_clearance);
        let knee = spec.extent_z - spec.surface_clearance - band;
        for h in &mut heights {
            if *h > knee {
                *h = knee + band * ((*h - knee) / band).tanh();
            }
        }
    }
    for h in &mut heights {
        *h = h.clamp(0.0, spec.extent_z);
    }
    Ok(Heightmap {
        resolution: spec.resolution,
        nx,
        ny,
        extent_z: spec.extent_z,
        heights,
    })
}

impl Heightmap {
    pub fn flat(nx: usize, ny: usize, resolution: f64, extent_z: f64, elevation: f64) -> Self {
        Self {
            resolution,
            nx,
            ny,
            extent_z,
            heights: vec![elevation; nx * ny],
        }
    }

    pub fn extent_x(&self) -> f64 {
        self.nx as f64 * self.resolution
    }

    pub fn extent_y(&self) -> f64 {
        self.ny as f64 * self.resolution
    }

    pub fn sample(&self, ix: usize, iy: usize) -> f64 {
        self.heights[iy * self.nx + ix]
    }

    /// Horizontal position of sample `(ix, iy)`.
    pub fn sample_position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            (ix as f64 + 0.5) * self.resolution,
            (iy as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(0.0, f64::max)
    }

    /// Bilinearly interpolated elevation; positions outside the sample lattice clamp
    /// to the border samples.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let u = (x / self.resolution - 0.5).clamp(0.0, (self.nx - 1) as f64);
        let v = (y / self.resolution - 0.5).clamp(0.0, (self.ny - 1) as f64);
        let (i0, j0) = (u.floor() as usize, v.floor() as usize);
        let (i1, j1) = ((i0 + 1).min(self.nx - 1), (j0 + 1).min(self.ny - 1));
        let (fu, fv) = (u - i0 as f64, v - j0 as f64);
        let a = self.sample(i0, j0) * (1.0 - fu) + self.sample(i1, j0) * fu;
        let b = self.sample(i0, j1) * (1.0 - fu) + self.sample(i1, j1) * fu;
        a * (1.0 - fv) + b * fv
    }

    /// Depth of the terrain surface below the ocean surface at `(x, y)`.
    pub fn surface_depth(&self, x: f64, y: f64) -> f64 {
        self.extent_z - self.height_at(x, y)
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (0.0..=self.extent_x()).contains(&x) && (0.0..=self.extent_y()).contains(&y)
    }

    /// Highest sample elevation inside each tiling cell (0 for cells without samples).
    pub fn cell_max_heights(&self, tiling: &Tiling) -> Vec<f64> {
        let mut max = vec![0.0f64; tiling.len()];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let [x, y] = self.sample_position(ix, iy);
                if let Some(cell) = tiling.cell_of(x, y) {
                    let slot = &mut max[tiling.index(cell)];
                    *slot = slot.max(self.sample(ix, iy));
                }
            }
        }
        max
    }

    /// Plain-text grid: one row (`iy`) per line, space-separated elevations.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.heights.len() * 8);
        for row in self.heights.chunks(self.nx) {
            let mut first = true;
            for h in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{h}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, resolution: f64, extent_z: f64) -> Result<Self> {
        let mut heights = Vec::new();
        let mut nx = None;
        let mut ny = 0;
        for (line_no, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| {
                        Error::Parse(format!("line {}: bad elevation {tok:?}: {e}", line_no + 1))
                    })
                })
                .collect::<Result<_>>()?;
            match nx {
                None => nx = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(Error::Parse(format!(
                        "line {}: expected {n} values, found {}",
                        line_no + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            heights.extend(row);
            ny += 1;
        }
        let nx = nx
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Parse("empty heightmap".into()))?;
        Ok(Self {
            resolution,
            nx,
            ny,
            extent_z,
            heights,
        })
    }
}

/// Cells of `tiling` where the terrain rises above the horizontal plane at `depth`.
///
/// A cell is occupied when any heightmap sample inside it is strictly higher than
/// the plane, or reaches the ocean surface (an emergent island blocks every plane).
pub fn ground_truth_occupancy(hm: &Heightmap, depth: f64, tiling: &Tiling) -> Result<Mask> {
    if !(0.0..=hm.extent_z).contains(&depth) {
        return Err(Error::Domain(format!(
            "depth {depth} outside [0, {}]",
            hm.extent_z
        )));
    }
    let plane_elevation = hm.extent_z - depth;
    let max = hm.cell_max_heights(tiling);
    Ok(Mask {
        nx: tiling.nx,
        ny: tiling.ny,
        cells: max
            .into_iter()
            .map(|h| h > plane_elevation || h >= hm.extent_z)
            .collect(),
    })
}

/// Equidistant horizontal slicing planes, `h(l) = l * delta_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneStack {
    pub delta_h: f64,
    pub depths: Vec<f64>,
}

impl PlaneStack {
    /// Planes for a volume of depth `extent_z` surveyed with sonar range `range`.
    ///
    /// The stack ends at the first plane from which the sonar reaches the bottom of the
    /// volume, and never places a plane at or below the seabed.
    pub fn for_volume(extent_z: f64, delta_h: f64, range: f64) -> Result<Self> {
        if !(delta_h > 0.0) || !(extent_z > 0.0) || !(range > 0.0) {
            return Err(Error::Config(format!(
                "plane spacing needs positive delta_h, depth and range (got {delta_h}, {extent_z}, {range})"
            )));
        }
        let mut depths = vec![0.0];
        loop {
            let last = *depths.last().expect("non-empty");
            if extent_z - last <= range {
                break;
            }
            let next = depths.len() as f64 * delta_h;
            if next >= extent_z {
                break;
            }
            depths.push(next);
        }
        Ok(Self { delta_h, depths })
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn depth(&self, level: usize) -> f64 {
        self.depths[level]
    }

    pub fn level_at_depth(&self, depth: f64) -> Option<usize> {
        self.depths.iter().position(|&d| (d - depth).abs() < 1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellIndex;

    fn one_mountain(peak: f64) -> SceneSpec {
        SceneSpec {
            mountain_count: 1,
            mountains: vec![Mountain {
                center: [225.0, 225.0],
                peak,
                spread: 60.0,
                steepness: 2.0,
            }],
            ..SceneSpec::default()
        }
    }

    #[test]
    fn no_mountains_gives_flat_seabed() {
        let hm = generate_scene(&SceneSpec {
            mountain_count: 0,
            ..SceneSpec::default()
        })
        .unwrap();
        assert!(hm.heights.iter().all(|&h| h == 0.0));
        assert_eq!((hm.nx, hm.ny), (90, 90));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SceneSpec {
            seed: 42,
            ..SceneSpec::default()
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        assert_eq!(a.heights, b.heights);
        let c = generate_scene(&SceneSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.heights, c.heights);
    }

    #[test]
    fn single_peak_height_and_radial_monotonicity() {
        let hm = generate_scene(&one_mountain(300.0)).unwrap();
        let m = one_mountain(300.0).mountains[0];
        assert_eq!(m.profile(0.0), 300.0);
        let mut last = f64::INFINITY;
        for k in 0..60 {
            let rho = k as f64 * 5.0;
            let h = m.profile(rho);
            assert!(h <= last);
            last = h;
        }
        // Along a ray from the center the sampled field never increases.
        let mut prev = f64::INFINITY;
        for ix in 44..90 {
            let h = hm.sample(ix, 44);
            assert!(h <= prev + 1e-12, "ix {ix}: {h} > {prev}");
            prev = h;
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = SceneSpec {
            extent_x: -1.0,
            ..SceneSpec::default()
        };
        assert!(matches!(generate_scene(&bad), Err(Error::Config(_))));
        let bad = one_mountain(500.0);
        assert!(matches!(generate_scene(&bad), Err(Error::Config(_))));
        let bad = SceneSpec {
            resolution: 7.0,
            ..SceneSpec::default()
        };
        assert!(matches!(generate_scene(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn occupancy_of_flat_terrain_is_empty() {
        let hm = Heightmap::flat(90, 90, 5.0, 400.0, 0.0);
        let t = Tiling::covering(450.0, 450.0, 25.0).unwrap();
        for depth in [0.0, 85.0, 399.0] {
            assert_eq!(ground_truth_occupancy(&hm, depth, &t).unwrap().count(), 0);
        }
        assert!(matches!(
            ground_truth_occupancy(&hm, 401.0, &t),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn emergent_island_blocks_the_surface() {
        let mut hm = Heightmap::flat(90, 90, 5.0, 400.0, 0.0);
        hm.heights[45 * 90 + 45] = 400.0;
        let t = Tiling::covering(450.0, 450.0, 25.0).unwrap();
        let occ = ground_truth_occupancy(&hm, 0.0, &t).unwrap();
        assert_eq!(occ.count(), 1);
        assert!(occ.get(CellIndex::new(9, 9)));
    }

    #[test]
    fn occupancy_matches_per_cell_maximum() {
        let hm = generate_scene(&one_mountain(300.0)).unwrap();
        let t = Tiling::covering(450.0, 450.0, 25.0).unwrap();
        let depth = 200.0;
        let occ = ground_truth_occupancy(&hm, depth, &t).unwrap();
        // Brute force: scan every sample of every cell.
        let mut expected = 0;
        for cell in t.cells() {
            let mut any = false;
            for dy in 0..5 {
                for dx in 0..5 {
                    any |= hm.sample(cell.ix * 5 + dx, cell.iy * 5 + dy) > 400.0 - depth;
                }
            }
            assert_eq!(occ.get(cell), any);
            expected += any as usize;
        }
        assert!(expected > 0);
        assert_eq!(occ.count(), expected);
    }

    #[test]
    fn deeper_planes_intersect_more_terrain() {
        let hm = generate_scene(&SceneSpec {
            seed: 7,
            ..SceneSpec::default()
        })
        .unwrap();
        let t = Tiling::covering(450.0, 450.0, 25.0).unwrap();
        let mut prev = ground_truth_occupancy(&hm, 0.0, &t).unwrap();
        for depth in (1..=40).map(|k| k as f64 * 10.0) {
            let occ = ground_truth_occupancy(&hm, depth, &t).unwrap();
            assert!(prev.is_subset_of(&occ));
            prev = occ;
        }
    }

    #[test]
    fn plane_stack_for_reference_volume() {
        let planes = PlaneStack::for_volume(400.0, 85.0, 150.0).unwrap();
        assert_eq!(planes.depths, vec![0.0, 85.0, 170.0, 255.0]);
        let shallow = PlaneStack::for_volume(100.0, 85.0, 150.0).unwrap();
        assert_eq!(shallow.depths, vec![0.0]);
        // Spacing too large to reach the seabed still stops above it.
        let coarse = PlaneStack::for_volume(400.0, 247.0, 150.0).unwrap();
        assert_eq!(coarse.depths, vec![0.0, 247.0]);
    }

    #[test]
    fn text_round_trip() {
        let hm = generate_scene(&SceneSpec {
            seed: 3,
            ..SceneSpec::default()
        })
        .unwrap();
        let back = Heightmap::from_text(&hm.to_text(), hm.resolution, hm.extent_z).unwrap();
        assert_eq!(back, hm);
        assert!(Heightmap::from_text("1 2\n3\n", 5.0, 400.0).is_err());
    }
}
