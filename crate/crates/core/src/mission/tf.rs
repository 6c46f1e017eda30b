//! Terrain-following lawnmower baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::motion::Vehicle;
use super::{check_scene, MissionConfig, MissionEvent, MissionTrace};
use crate::error::Result;
use crate::metrics::knn_outlier_filter;
use crate::sensor::Pose;
use crate::terrain::Heightmap;

/// Lawnmower laps along x at `y = (k + 1/2) w`, alternating direction, sampled every
/// `tf_waypoint_spacing` meters at a constant standoff above the terrain.
pub fn tf_waypoints(config: &MissionConfig, hm: &Heightmap) -> Result<Vec<Pose>> {
    let p = &config.planner;
    let laps = config.tiling()?.ny;
    let ex = hm.extent_x();
    let samples = (ex / p.tf_waypoint_spacing).ceil() as usize;
    let xs: Vec<f64> = (0..=samples)
        .map(|i| (i as f64 * p.tf_waypoint_spacing).min(ex))
        .collect();
    let offset = p.tf_offset();
    let mut out = Vec::with_capacity(laps * xs.len());
    for k in 0..laps {
        let y = (k as f64 + 0.5) * p.lap_width;
        let mut lap: Vec<Pose> = xs
            .iter()
            .map(|&x| {
                Pose::new(
                    x,
                    y,
                    (hm.surface_depth(x, y) - offset).clamp(0.0, hm.extent_z),
                )
            })
            .collect();
        if k % 2 == 1 {
            lap.reverse();
        }
        out.extend(lap);
    }
    Ok(out)
}

/// Flies the terrain-following laps from the surface above the first waypoint.
pub fn run_tf_cpp(config: &MissionConfig, hm: &Heightmap) -> Result<MissionTrace> {
    config.validate()?;
    check_scene(config, hm)?;
    let waypoints = tf_waypoints(config, hm)?;
    let m = &config.mission;
    let start = Pose::new(waypoints[0].x, waypoints[0].y, 0.0);
    let rng = ChaCha8Rng::seed_from_u64(m.seed);
    let mut vehicle = Vehicle::new(hm, &config.sonar, m.speed, m.cloud_pitch, rng, start)?;
    for &wp in &waypoints {
        vehicle.move_to(wp, None)?;
    }
    let points = knn_outlier_filter(&vehicle.cloud.points(), m.knn_k, m.knn_cutoff())?;
    let t = vehicle.time();
    Ok(MissionTrace {
        poses: vehicle.poses,
        points,
        raw_hit_count: vehicle.raw_hits,
        scan_count: vehicle.scans,
        covered: Vec::new(),
        visits: Vec::new(),
        events: vec![MissionEvent::Finished { t, nodes: 0 }],
    })
}
