//! Trajectory length, energy, point-cloud filtering and reconstruction error.
//!
//! Point clouds here are `(x, y, elevation)` with elevation measured up from the
//! seabed, the same frame as the heightmap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sensor::Pose;
use crate::terrain::Heightmap;

/// Linear energy model `k1 * horizontal + k2 * vertical`, joules per meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel<T: Scalar> {
    pub k1: T,
    pub k2: T,
}

impl<T: Scalar> Default for EnergyModel<T> {
    fn default() -> Self {
        Self {
            k1: T::of(557.24),
            k2: T::of(1118.13),
        }
    }
}

impl<T: Scalar> EnergyModel<T> {
    pub fn new(k1: T, k2: T) -> Result<Self> {
        if !(k1 > T::zero() && k2 > T::zero()) {
            return Err(Error::Config(format!(
                "energy coefficients must be positive (got {k1}, {k2})"
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn segment(&self, horizontal: T, vertical: T) -> T {
        self.k1 * horizontal + self.k2 * vertical
    }
}

pub fn trajectory_length(poses: &[Pose]) -> f64 {
    poses.windows(2).map(|p| p[0].distance(&p[1])).sum()
}

/// Energy along a pose sequence, splitting each segment into its horizontal and
/// vertical displacement.
pub fn energy(poses: &[Pose], model: &EnergyModel<f64>) -> f64 {
    poses
        .windows(2)
        .map(|p| {
            let h = (p[1].x - p[0].x).hypot(p[1].y - p[0].y);
            let v = (p[1].depth - p[0].depth).abs();
            model.segment(h, v)
        })
        .sum()
}

/// Horizontal and vertical distance travelled.
pub fn displacement_split(poses: &[Pose]) -> (f64, f64) {
    poses.windows(2).fold((0.0, 0.0), |(h, v), p| {
        (
            h + (p[1].x - p[0].x).hypot(p[1].y - p[0].y),
            v + (p[1].depth - p[0].depth).abs(),
        )
    })
}

/// Keeps, per cubic bucket of side `pitch`, the point closest to the bucket center.
/// Points can be streamed in; the earlier point wins exact ties.
#[derive(Debug, Clone)]
pub struct GridFilter {
    pitch: f64,
    buckets: HashMap<[i64; 3], (f64, [f64; 3])>,
}

impl GridFilter {
    pub fn new(pitch: f64) -> Result<Self> {
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::Config(format!(
                "grid pitch must be positive (got {pitch})"
            )));
        }
        Ok(Self {
            pitch,
            buckets: HashMap::new(),
        })
    }

    pub fn insert(&mut self, p: [f64; 3]) {
        let key = p.map(|c| (c / self.pitch).floor() as i64);
        let d2: f64 = (0..3)
            .map(|k| (p[k] - (key[k] as f64 + 0.5) * self.pitch).powi(2))
            .sum();
        self.buckets
            .entry(key)
            .and_modify(|slot| {
                if d2 < slot.0 {
                    *slot = (d2, p);
                }
            })
            .or_insert((d2, p));
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Survivors ordered by bucket.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut keyed: Vec<_> = self.buckets.iter().map(|(k, (_, p))| (*k, *p)).collect();
        keyed.sort_unstable_by_key(|(k, _)| *k);
        keyed.into_iter().map(|(_, p)| p).collect()
    }
}

/// Grid filter followed by k-nearest-neighbour outlier removal.
///
/// A point is dropped when the mean distance to its `k` nearest neighbours exceeds
/// `cutoff`; with fewer than `k` other points all of them are used, and a lone point
/// is kept.
pub fn point_filter(
    points: &[[f64; 3]],
    grid_pitch: f64,
    k: usize,
    cutoff: f64,
) -> Result<Vec<[f64; 3]>> {
    let mut grid = GridFilter::new(grid_pitch)?;
    for &p in points {
        grid.insert(p);
    }
    knn_outlier_filter(&grid.points(), k, cutoff)
}

pub fn knn_outlier_filter(points: &[[f64; 3]], k: usize, cutoff: f64) -> Result<Vec<[f64; 3]>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if !(cutoff > 0.0) {
        return Err(Error::Config(format!(
            "distance cutoff must be positive (got {cutoff})"
        )));
    }
    let k = k.min(points.len().saturating_sub(1));
    if k == 0 {
        return Ok(points.to_vec());
    }
    let index = VoxelIndex::new(points, voxel_size(points, cutoff));
    Ok(points
        .iter()
        .enumerate()
        .filter(|&(i, _)| index.mean_knn_within(i, k, cutoff))
        .map(|(_, p)| *p)
        .collect())
}

/// Voxel side for the neighbour index: the cutoff, shrunk for very large cutoffs to a
/// few times the point spacing of a surface-like cloud so a voxel never holds the
/// whole cloud.
fn voxel_size(points: &[[f64; 3]], cutoff: f64) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let spacing = ((hi[0] - lo[0]) * (hi[1] - lo[1]) / points.len() as f64).sqrt();
    if spacing > 0.0 && spacing.is_finite() {
        cutoff.min(4.0 * spacing)
    } else {
        cutoff
    }
}

/// Uniform voxel hash for neighbour queries.
struct VoxelIndex<'a> {
    points: &'a [[f64; 3]],
    size: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    max_ring: i64,
}

impl<'a> VoxelIndex<'a> {
    fn new(points: &'a [[f64; 3]], size: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let key = p.map(|c| (c / size).floor() as i64);
            for a in 0..3 {
                lo[a] = lo[a].min(key[a]);
                hi[a] = hi[a].max(key[a]);
            }
            cells.entry(key).or_default().push(i);
        }
        let max_ring = (0..3).map(|a| hi[a] - lo[a]).max().unwrap_or(0);
        Self {
            points,
            size,
            cells,
            max_ring,
        }
    }

    /// Whether the mean distance from point `i` to its `k` nearest others is at most
    /// `cutoff`. Rings of voxels are searched outward until the answer is settled.
    fn mean_knn_within(&self, i: usize, k: usize, cutoff: f64) -> bool {
        let p = self.points[i];
        let center = p.map(|c| (c / self.size).floor() as i64);
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        for ring in 0..=self.max_ring {
            for dz in -ring..=ring {
                for dy in -ring..=ring {
                    for dx in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let key = [center[0] + dx, center[1] + dy, center[2] + dz];
                        let Some(members) = self.cells.get(&key) else {
                            continue;
                        };
                        for &j in members {
                            if j == i {
                                continue;
                            }
                            let q = self.points[j];
                            let d = ((p[0] - q[0]).powi(2)
                                + (p[1] - q[1]).powi(2)
                                + (p[2] - q[2]).powi(2))
                            .sqrt();
                            if best.len() < k || d < best[k - 1] {
                                let at = best.partition_point(|&b| b <= d);
                                best.insert(at, d);
                                best.truncate(k);
                            }
                        }
                    }
                }
            }
            // Anything not yet seen is at least `reach` away.
            let reach = ring as f64 * self.size;
            if best.len() == k && best[k - 1] <= reach {
                break;
            }
            let lower: f64 = best.iter().sum::<f64>() + (k - best.len()) as f64 * reach;
            if lower > cutoff * k as f64 {
                return false;
            }
        }
        best.len() == k && best.iter().sum::<f64>() / k as f64 <= cutoff
    }
}

/// Normalized cuboid-averaged RMSE between a point cloud and the true surface.
///
/// The footprint is split into `cuboid x cuboid` columns, and both surfaces are read
/// at the same regular sub-grid of positions in each column. The true surface is
/// sampled directly. The reconstructed surface at a position takes the elevation of
/// the column's point nearest to it in plan view, so a steep face that contributes
/// many points at many heights is not over-weighted. A column without points reads 0.
/// The RMSE of the column means is divided by the ocean depth.
pub fn reconstruction_rmse(points: &[[f64; 3]], hm: &Heightmap, cuboid: f64) -> Result<f64> {
    let (nx, ny) = cuboid_counts(hm, cuboid)?;
    let mut columns: Vec<Vec<[f64; 3]>> = vec![Vec::new(); nx * ny];
    for p in points {
        if !hm.contains_xy(p[0], p[1]) {
            continue;
        }
        let ix = ((p[0] / cuboid) as usize).min(nx - 1);
        let iy = ((p[1] / cuboid) as usize).min(ny - 1);
        columns[iy * nx + ix].push(*p);
    }
    let truth = true_cuboid_means(hm, cuboid)?;
    let n = TRUTH_SUBSAMPLES;
    let step = cuboid / n as f64;
    let mse = columns
        .iter()
        .enumerate()
        .map(|(i, col)| {
            let recon = if col.is_empty() {
                0.0
            } else {
                let (ix, iy) = (i % nx, i / nx);
                let mut s = 0.0;
                for b in 0..n {
                    for a in 0..n {
                        let x = ix as f64 * cuboid + (a as f64 + 0.5) * step;
                        let y = iy as f64 * cuboid + (b as f64 + 0.5) * step;
                        // Ties on distance go to the lower point, independent of order.
                        let key = |p: &[f64; 3]| ((p[0] - x).powi(2) + (p[1] - y).powi(2), p[2]);
                        let nearest = col
                            .iter()
                            .min_by(|p, q| {
                                let (kp, kq) = (key(p), key(q));
                                kp.0.total_cmp(&kq.0).then(kp.1.total_cmp(&kq.1))
                            })
                            .expect("non-empty column");
                        s += nearest[2];
                    }
                }
                s / (n * n) as f64
            };
            (recon - truth[i]).powi(2)
        })
        .sum::<f64>()
        / (nx * ny) as f64;
    Ok(mse.sqrt() / hm.extent_z)
}

/// Sub-samples per cuboid side used for the true surface mean.
const TRUTH_SUBSAMPLES: usize = 10;

/// Mean true elevation of each cuboid column, row-major.
pub fn true_cuboid_means(hm: &Heightmap, cuboid: f64) -> Result<Vec<f64>> {
    let (nx, ny) = cuboid_counts(hm, cuboid)?;
    let n = TRUTH_SUBSAMPLES;
    let step = cuboid / n as f64;
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let mut s = 0.0;
            for b in 0..n {
                for a in 0..n {
                    let x = ix as f64 * cuboid + (a as f64 + 0.5) * step;
                    let y = iy as f64 * cuboid + (b as f64 + 0.5) * step;
                    s += hm.height_at(x, y);
                }
            }
            out.push(s / (n * n) as f64);
        }
    }
    Ok(out)
}

fn cuboid_counts(hm: &Heightmap, cuboid: f64) -> Result<(usize, usize)> {
    let fx = hm.extent_x() / cuboid;
    let fy = hm.extent_y() / cuboid;
    if !(cuboid > 0.0) || (fx - fx.round()).abs() > 1e-9 || (fy - fy.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "cuboid size {cuboid} must divide the {} x {} footprint",
            hm.extent_x(),
            hm.extent_y()
        )));
    }
    Ok((fx.round() as usize, fy.round() as usize))
}

/// Per-run summary written next to the mission artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trajectory_length_m: f64,
    #[serde(rename = "energy_J")]
    pub energy_j: f64,
    pub rmse_normalized: f64,
    pub per_plane_coverage_fraction: Vec<f64>,
    pub node_count: Option<usize>,
    /// Simulated mission duration, seconds.
    pub runtime_s: f64,
}
