//! Downward multibeam sonar and the forward clearance check.
//!
//! Poses and hit points use `(x, y, depth)` with depth increasing downward.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Mask, Tiling};
use crate::occupancy::{Label, Reading, SymbolicMap};
use crate::scalar::Scalar;
use crate::terrain::Heightmap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SonarSpec {
    /// Sensing range `r`, meters.
    pub range: f64,
    /// Full fan aperture `theta`, degrees.
    pub aperture_deg: f64,
    pub beam_count: usize,
    /// Time between scans, seconds.
    pub sample_interval: f64,
    /// Probability that an evidence reading is flipped.
    pub false_rate: f64,
}

impl Default for SonarSpec {
    fn default() -> Self {
        Self {
            range: 150.0,
            aperture_deg: 120.0,
            beam_count: 128,
            sample_interval: 1.0,
            false_rate: 0.1,
        }
    }
}

impl SonarSpec {
    pub fn aperture(&self) -> f64 {
        self.aperture_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::Config(format!(
                "sonar range must be positive (got {})",
                self.range
            )));
        }
        if !(self.aperture_deg >= 0.0 && self.aperture_deg < 180.0) {
            return Err(Error::Config(format!(
                "aperture must lie in [0, 180) degrees (got {})",
                self.aperture_deg
            )));
        }
        if self.beam_count < 2 {
            return Err(Error::Config(format!(
                "need at least 2 beams (got {})",
                self.beam_count
            )));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::Config(format!(
                "sample interval must be positive (got {})",
                self.sample_interval
            )));
        }
        if !(0.0..0.5).contains(&self.false_rate) {
            return Err(Error::Config(format!(
                "false_rate must lie in [0, 0.5) (got {})",
                self.false_rate
            )));
        }
        Ok(())
    }

    /// Angle of beam `m` from the vertical, spread uniformly over the aperture.
    pub fn beam_angle(&self, m: usize) -> f64 {
        let theta = self.aperture();
        -0.5 * theta + m as f64 * theta / (self.beam_count - 1) as f64
    }

    pub fn beams_per_cell(&self, w: f64, delta_h: f64) -> f64 {
        beams_per_cell(self.beam_count, self.aperture(), w, delta_h)
    }
}

/// Beams of an `m`-beam fan with aperture `theta` that cross a `w`-wide cell lying
/// `delta_h` below the sensor: `2 m atan(w / (2 delta_h)) / theta`.
pub fn beams_per_cell<T: Scalar>(m: usize, theta: T, w: T, delta_h: T) -> T {
    T::of(2.0) * T::of_usize(m) * (w / (T::of(2.0) * delta_h)).atan() / theta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, depth: f64) -> Self {
        Self { x, y, depth }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2)
            + (self.y - other.y).powi(2)
            + (self.depth - other.depth).powi(2))
        .sqrt()
    }
}

/// The plane whose occupancy the scan is gathering evidence for.
#[derive(Debug, Clone, Copy)]
pub struct EvidencePlane<'a> {
    pub depth: f64,
    pub tiling: &'a Tiling,
    /// Ground-truth occupancy of the plane; readings report it, possibly flipped.
    pub truth: &'a Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub timestamp: f64,
    pub pose: Pose,
    /// First terrain intersection of each beam within range, as `(x, y, depth)`.
    pub beam_hits: Vec<Option<[f64; 3]>>,
    pub plane_evidence: Vec<Reading>,
}

/// Casts one fan of beams from `pose`.
///
/// The fan lies in the vertical plane perpendicular to the horizontal `heading`
/// (radians from +x). Each beam yields at most one reading for `plane`: the cell where
/// it crosses the plane, or the cell of its hit point when it meets terrain first.
/// Beams that cross the plane beyond the sensing range give no reading.
pub fn cast_scan<R: Rng + ?Sized>(
    hm: &Heightmap,
    pose: Pose,
    heading: f64,
    spec: &SonarSpec,
    plane: Option<EvidencePlane<'_>>,
    timestamp: f64,
    rng: &mut R,
) -> Result<Scan> {
    if !hm.contains_xy(pose.x, pose.y) || !(0.0..=hm.extent_z).contains(&pose.depth) {
        return Err(Error::Domain(format!(
            "pose ({}, {}, {}) outside the {} x {} x {} volume",
            pose.x,
            pose.y,
            pose.depth,
            hm.extent_x(),
            hm.extent_y(),
            hm.extent_z
        )));
    }
    let (lx, ly) = (-heading.sin(), heading.cos());
    let top_depth = hm.extent_z - hm.max_height();
    let mut beam_hits = Vec::with_capacity(spec.beam_count);
    let mut plane_evidence = Vec::new();
    for m in 0..spec.beam_count {
        let phi = spec.beam_angle(m);
        let dir = [phi.sin() * lx, phi.sin() * ly, phi.cos()];
        let hit = march(hm, pose, dir, spec.range, top_depth);
        beam_hits.push(hit.map(|t| point_along(pose, dir, t)));

        let Some(plane) = plane else { continue };
        if plane.depth <= pose.depth {
            continue;
        }
        let t_plane = (plane.depth - pose.depth) / dir[2];
        let t_read = match hit {
            Some(t) if t < t_plane => t,
            _ if t_plane <= spec.range => t_plane,
            _ => continue,
        };
        let [x, y, _] = point_along(pose, dir, t_read);
        let Some(cell) = plane.tiling.cell_of(x, y) else {
            continue;
        };
        let mut occupied = plane.truth.get(cell);
        if spec.false_rate > 0.0 && rng.gen::<f64>() < spec.false_rate {
            occupied = !occupied;
        }
        plane_evidence.push(Reading { cell, occupied });
    }
    Ok(Scan {
        timestamp,
        pose,
        beam_hits,
        plane_evidence,
    })
}

fn point_along(pose: Pose, dir: [f64; 3], t: f64) -> [f64; 3] {
    [
        pose.x + dir[0] * t,
        pose.y + dir[1] * t,
        pose.depth + dir[2] * t,
    ]
}

/// Distance to the first terrain intersection within `range`, if any.
///
/// Marches at heightmap resolution from the depth of the highest peak, then brackets
/// the crossing by bisection and finishes with one secant step.
fn march(hm: &Heightmap, pose: Pose, dir: [f64; 3], range: f64, top_depth: f64) -> Option<f64> {
    let gap = |t: f64| {
        let [x, y, d] = point_along(pose, dir, t);
        d - hm.surface_depth(x, y)
    };
    let inside = |t: f64| {
        let [x, y, _] = point_along(pose, dir, t);
        hm.contains_xy(x, y)
    };
    if gap(0.0) >= 0.0 {
        return Some(0.0);
    }
    let step = hm.resolution;
    let mut lo = ((top_depth - pose.depth) / dir[2]).max(0.0);
    if lo > range {
        return None;
    }
    loop {
        let hi = (lo + step).min(range);
        if !inside(hi) {
            return None;
        }
        if gap(hi) >= 0.0 {
            return Some(refine(&gap, lo, hi));
        }
        if hi >= range {
            return None;
        }
        lo = hi;
    }
}

fn refine(gap: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..6 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (glo, ghi) = (gap(lo), gap(hi));
    if ghi > glo {
        (lo - glo * (hi - lo) / (ghi - glo)).clamp(lo, hi)
    } else {
        hi
    }
}

/// True when the next cell along `heading` is known safe.
///
/// The heading is snapped to the nearest axis; cells off the map and unexplored cells
/// are not clear.
pub fn forward_clearance(
    sym: &SymbolicMap,
    tiling: &Tiling,
    pose: Pose,
    heading: f64,
) -> Result<bool> {
    let cell = tiling
        .cell_of(pose.x, pose.y)
        .ok_or_else(|| Error::Domain(format!("pose ({}, {}) is off the tiling", pose.x, pose.y)))?;
    let (c, s) = (heading.cos(), heading.sin());
    let (dx, dy) = if c.abs() >= s.abs() {
        (c.signum() as isize, 0)
    } else {
        (0, s.signum() as isize)
    };
    Ok(cell
        .offset(dx, dy)
        .filter(|n| sym.contains(*n))
        .is_some_and(|n| sym.get(n) == Label::Safe))
}

/// CSV rows `timestamp,x,y,depth,beam,hit_x,hit_y,hit_depth`, blank hit columns for
/// beams without a return.
pub fn scans_to_csv(scans: &[Scan]) -> String {
    let mut out = String::from("timestamp,x,y,depth,beam,hit_x,hit_y,hit_depth\n");
    for s in scans {
        for (m, hit) in s.beam_hits.iter().enumerate() {
            let p = s.pose;
            let _ = write!(out, "{},{},{},{},{m},", s.timestamp, p.x, p.y, p.depth);
            match hit {
                Some([x, y, d]) => {
                    let _ = writeln!(out, "{x},{y},{d}");
                }
                None => out.push_str(",,\n"),
            }
        }
    }
    out
}
