//! End-to-end missions: the layered coverage-tree planner and the terrain-following
//! baseline, plus the geometric limits on lap width and plane spacing.

mod bounds;
mod ct;
mod motion;
mod route;
mod tf;

use serde::{Deserialize, Serialize};

use crate::coverage_tree::NodeId;
use crate::error::{Error, Result};
use crate::grid::{CellIndex, Mask, Tiling};
use crate::metrics::{energy, reconstruction_rmse, trajectory_length, EnergyModel, MetricsReport};
use crate::occupancy::{
    closing, compute_l_occ, extract_navigable, Label, ProbOccupancyGrid, SymbolicMap,
    MIN_SUBREGION_CELLS,
};
use crate::sensor::{Pose, SonarSpec};
use crate::terrain::{ground_truth_occupancy, Heightmap, PlaneStack, SceneSpec};

pub use bounds::{max_delta_h, max_lap_width};
pub use ct::{expand_and_assign, run_ct_cpp, run_ct_cpp_unvalidated, CtOutcome, Expansion};
pub use route::{line_of_sight, plan_route, supercover};
pub use tf::{run_tf_cpp, tf_waypoints};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Lap width `w`, meters.
    pub lap_width: f64,
    /// Plane spacing, meters.
    pub delta_h: f64,
    /// Side of the square tiling cells, meters.
    pub cell_size: f64,
    /// Threat probability `p_T`.
    pub threat_threshold: f64,
    /// Side of the square closing element, cells.
    pub closing_element: usize,
    pub min_subregion_cells: usize,
    /// Terrain-following standoff, meters; defaults to `delta_h`.
    pub tf_offset: Option<f64>,
    /// Along-track spacing of terrain-following waypoints, meters.
    pub tf_waypoint_spacing: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            lap_width: 25.0,
            delta_h: 85.0,
            cell_size: 25.0,
            threat_threshold: 0.2,
            closing_element: 3,
            min_subregion_cells: MIN_SUBREGION_CELLS,
            tf_offset: None,
            tf_waypoint_spacing: 5.0,
        }
    }
}

impl PlannerParams {
    pub fn tf_offset(&self) -> f64 {
        self.tf_offset.unwrap_or(self.delta_h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionParams {
    /// Vehicle speed `v`, meters per second.
    pub speed: f64,
    /// Seed of the sensor noise stream.
    pub seed: u64,
    /// Bucket size of the online point-cloud grid filter, meters.
    pub cloud_pitch: f64,
    pub knn_k: usize,
    /// Outlier cutoff for the mean k-nearest-neighbour distance; defaults to six pitches.
    pub knn_cutoff: Option<f64>,
    /// Footprint of the RMSE cuboids, meters.
    pub cuboid: f64,
}

impl Default for MissionParams {
    fn default() -> Self {
        Self {
            speed: 1.0,
            seed: 0,
            cloud_pitch: 2.5,
            knn_k: 6,
            knn_cutoff: None,
            cuboid: 5.0,
        }
    }
}

impl MissionParams {
    pub fn knn_cutoff(&self) -> f64 {
        self.knn_cutoff.unwrap_or(6.0 * self.cloud_pitch)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    pub scene: SceneSpec,
    pub sonar: SonarSpec,
    pub planner: PlannerParams,
    pub mission: MissionParams,
}

/// Quantities derived from a configuration, reported by validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub lap_width_bound: f64,
    /// `None` when the lap width already violates its bound.
    pub delta_h_bound: Option<f64>,
    pub beams_per_cell: f64,
    pub b_total: f64,
    pub l_occ: f64,
    pub plane_count: usize,
}

impl MissionConfig {
    pub fn derived(&self) -> DerivedQuantities {
        let (r, theta, w) = (
            self.sonar.range,
            self.sonar.aperture(),
            self.planner.lap_width,
        );
        let b = self.sonar.beams_per_cell(w, self.planner.delta_h);
        DerivedQuantities {
            lap_width_bound: max_lap_width(r, theta),
            delta_h_bound: max_delta_h(r, theta, w).ok(),
            beams_per_cell: b,
            b_total: w / self.mission.speed / self.sonar.sample_interval * b,
            l_occ: compute_l_occ(&self.sonar, w, self.planner.delta_h, self.mission.speed),
            plane_count: PlaneStack::for_volume(self.scene.extent_z, self.planner.delta_h, r)
                .map(|p| p.len())
                .unwrap_or(0),
        }
    }

    /// Checks every parameter, including the lap-width and plane-spacing limits.
    pub fn validate(&self) -> Result<DerivedQuantities> {
        self.validate_except_spacing()?;
        let (r, theta, w) = (
            self.sonar.range,
            self.sonar.aperture(),
            self.planner.lap_width,
        );
        let bound = max_delta_h(r, theta, w)?;
        let dh = self.planner.delta_h;
        if !(dh > 0.0 && dh <= bound) {
            return Err(Error::Config(format!(
                "plane spacing violates 0 < delta_h <= sqrt(r^2 - 2.25 w^2) - 1.5 w cot(theta/2): delta_h = {dh}, bound = {bound:.4}"
            )));
        }
        Ok(self.derived())
    }

    /// Everything except the plane-spacing limit; used for deliberately non-compliant runs.
    pub fn validate_except_spacing(&self) -> Result<()> {
        self.scene.validate()?;
        self.sonar.validate()?;
        let p = &self.planner;
        let m = &self.mission;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite (got {v})"
                )))
            }
        };
        positive("lap_width", p.lap_width)?;
        if !(p.delta_h > 0.0 && p.delta_h.is_finite()) {
            return Err(Error::Config(format!(
                "plane spacing violates 0 < delta_h (got {})",
                p.delta_h
            )));
        }
        positive("speed", m.speed)?;
        positive("tf_offset", p.tf_offset())?;
        positive("tf_waypoint_spacing", p.tf_waypoint_spacing)?;
        positive("cloud_pitch", m.cloud_pitch)?;
        positive("knn_cutoff", m.knn_cutoff())?;
        positive("cuboid", m.cuboid)?;
        if m.knn_k == 0 {
            return Err(Error::Config("knn_k must be at least 1".into()));
        }
        if !(p.threat_threshold > 0.0 && p.threat_threshold < 1.0) {
            return Err(Error::Config(format!(
                "threat_threshold must lie in (0, 1) (got {})",
                p.threat_threshold
            )));
        }
        if p.closing_element < 3 || p.closing_element.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "closing_element must be odd and >= 3 (got {})",
                p.closing_element
            )));
        }
        if p.min_subregion_cells == 0 {
            return Err(Error::Config(
                "min_subregion_cells must be at least 1".into(),
            ));
        }
        let limit = max_lap_width(self.sonar.range, self.sonar.aperture());
        if !(p.lap_width < limit) {
            return Err(Error::Config(format!(
                "lap width violates w < (2/3) r sin(theta/2): w = {}, limit = {limit:.4}",
                p.lap_width
            )));
        }
        if (p.lap_width - p.cell_size).abs() > 1e-9 * p.cell_size {
            return Err(Error::Config(format!(
                "lap width {} must equal the cell size {}",
                p.lap_width, p.cell_size
            )));
        }
        self.tiling()?;
        Ok(())
    }

    pub fn tiling(&self) -> Result<Tiling> {
        Tiling::covering(
            self.scene.extent_x,
            self.scene.extent_y,
            self.planner.cell_size,
        )
    }

    pub fn planes(&self) -> Result<PlaneStack> {
        PlaneStack::for_volume(self.scene.extent_z, self.planner.delta_h, self.sonar.range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    #[serde(flatten)]
    pub pose: Pose,
}

/// The vehicle occupying a cell of a slicing plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellVisit {
    pub t: f64,
    pub level: usize,
    pub cell: CellIndex,
    /// Label of the cell in the vehicle's map when it was entered.
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum MissionEvent {
    CoverageStarted {
        t: f64,
        node: NodeId,
        level: usize,
        cells: usize,
    },
    /// Cells of a node that were no longer safe when its coverage began.
    CellsDropped {
        t: f64,
        node: NodeId,
        cells: usize,
    },
    NodeCompleted {
        t: f64,
        node: NodeId,
        level: usize,
        children: Vec<NodeId>,
        sequence: Vec<NodeId>,
    },
    Finished {
        t: f64,
        nodes: usize,
    },
}

/// Everything recorded while a mission runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MissionTrace {
    pub poses: Vec<TimedPose>,
    /// Grid- and outlier-filtered sonar hits as `(x, y, elevation)`.
    pub points: Vec<[f64; 3]>,
    pub raw_hit_count: usize,
    pub scan_count: usize,
    /// Cells covered by the 2D planner, per plane.
    pub covered: Vec<Mask>,
    pub visits: Vec<CellVisit>,
    pub events: Vec<MissionEvent>,
}

impl MissionTrace {
    pub fn pose_list(&self) -> Vec<Pose> {
        self.poses.iter().map(|p| p.pose).collect()
    }

    pub fn duration(&self) -> f64 {
        self.poses.last().map_or(0.0, |p| p.t)
    }

    /// CSV `t,x,y,depth`, one row per pose.
    pub fn trajectory_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t,x,y,depth\n");
        for p in &self.poses {
            let _ = writeln!(out, "{},{},{},{}", p.t, p.pose.x, p.pose.y, p.pose.depth);
        }
        out
    }

    /// Plain-text point cloud, one `x y z` line per point (z is elevation).
    pub fn points_xyz(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::with_capacity(self.points.len() * 32);
        for [x, y, z] in &self.points {
            let _ = writeln!(out, "{x} {y} {z}");
        }
        out
    }
}

/// Parses [`MissionTrace::trajectory_csv`] output.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TimedPose>> {
    let mut lines = text.lines();
    if lines.next() != Some("t,x,y,depth") {
        return Err(Error::Parse("missing trajectory header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
                })
                .collect::<Result<_>>()?;
            match v.as_slice() {
                &[t, x, y, depth] => Ok(TimedPose {
                    t,
                    pose: Pose::new(x, y, depth),
                }),
                _ => Err(Error::Parse(format!(
                    "row {} has {} fields",
                    i + 1,
                    v.len()
                ))),
            }
        })
        .collect()
}

/// Parses [`MissionTrace::points_xyz`] output.
pub fn parse_points_xyz(text: &str) -> Result<Vec<[f64; 3]>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("point {}: {e}", i + 1)))
                })
                .collect::<Result<_>>()?;
            match v.as_slice() {
                &[x, y, z] => Ok([x, y, z]),
                _ => Err(Error::Parse(format!(
                    "point {} has {} coordinates",
                    i + 1,
                    v.len()
                ))),
            }
        })
        .collect()
}

/// Per-plane state exported after a coverage-tree mission.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMaps {
    /// Occupancy estimate of each plane; plane 0 has none.
    pub pom: Vec<Option<ProbOccupancyGrid<f64>>>,
    pub symbolic: Vec<Option<SymbolicMap>>,
}

/// Ground truth per plane: occupied cells, the closed threat mask and the cells of
/// navigable components (safe after closing, at least `min_subregion_cells` large).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPlanes {
    pub occupied: Vec<Mask>,
    pub closed: Vec<Mask>,
    pub navigable: Vec<Mask>,
}

pub fn ground_truth_navigable(
    hm: &Heightmap,
    planes: &PlaneStack,
    tiling: &Tiling,
    params: &PlannerParams,
) -> Result<GroundTruthPlanes> {
    let mut out = GroundTruthPlanes {
        occupied: Vec::new(),
        closed: Vec::new(),
        navigable: Vec::new(),
    };
    for l in 0..planes.len() {
        let occ = ground_truth_occupancy(hm, planes.depth(l), tiling)?;
        let closed = closing(&occ, params.closing_element / 2);
        let mut sym =
            SymbolicMap::filled(tiling.nx, tiling.ny, Label::Safe, params.threat_threshold);
        for c in tiling.cells() {
            if closed.get(c) {
                sym.set(c, Label::Threat);
            }
        }
        let mut nav = Mask::new(tiling.nx, tiling.ny);
        for region in extract_navigable(&sym, tiling, params.min_subregion_cells) {
            for c in region.cells {
                nav.set(c, true);
            }
        }
        out.occupied.push(occ);
        out.closed.push(closed);
        out.navigable.push(nav);
    }
    Ok(out)
}

fn check_scene(config: &MissionConfig, hm: &Heightmap) -> Result<()> {
    let s = &config.scene;
    let close_to = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    if !(close_to(hm.extent_x(), s.extent_x)
        && close_to(hm.extent_y(), s.extent_y)
        && close_to(hm.extent_z, s.extent_z))
    {
        return Err(Error::Config(format!(
            "heightmap spans {} x {} x {}, the configuration {} x {} x {}",
            hm.extent_x(),
            hm.extent_y(),
            hm.extent_z,
            s.extent_x,
            s.extent_y,
            s.extent_z
        )));
    }
    Ok(())
}

/// Length, energy, reconstruction error and plane coverage of a finished mission.
///
/// Coverage fractions compare the trace's covered cells with the ground-truth
/// navigable cells of each plane; a trace without per-plane coverage reports none.
pub fn metrics_report(
    trace: &MissionTrace,
    hm: &Heightmap,
    config: &MissionConfig,
    node_count: Option<usize>,
) -> Result<MetricsReport> {
    let poses = trace.pose_list();
    let per_plane_coverage_fraction = if trace.covered.is_empty() {
        Vec::new()
    } else {
        let truth =
            ground_truth_navigable(hm, &config.planes()?, &config.tiling()?, &config.planner)?;
        trace
            .covered
            .iter()
            .zip(&truth.navigable)
            .map(|(cov, nav)| {
                let total = nav.count();
                let hit = cov
                    .cells
                    .iter()
                    .zip(&nav.cells)
                    .filter(|(&c, &n)| c && n)
                    .count();
                if total == 0 {
                    1.0
                } else {
                    hit as f64 / total as f64
                }
            })
            .collect()
    };
    Ok(MetricsReport {
        trajectory_length_m: trajectory_length(&poses),
        energy_j: energy(&poses, &EnergyModel::default()),
        rmse_normalized: reconstruction_rmse(&trace.points, hm, config.mission.cuboid)?,
        per_plane_coverage_fraction,
        node_count,
        runtime_s: trace.duration(),
    })
}
