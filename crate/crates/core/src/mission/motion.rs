//! Kinematic vehicle: straight segments at constant speed, one sonar scan every
//! sample interval.

use rand_chacha::ChaCha8Rng;

use super::TimedPose;
use crate::error::Result;
use crate::grid::{Mask, Tiling};
use crate::metrics::GridFilter;
use crate::occupancy::ProbOccupancyGrid;
use crate::sensor::{cast_scan, EvidencePlane, Pose, SonarSpec};
use crate::terrain::Heightmap;

/// Where the scans of a horizontal move deposit their plane evidence.
pub(crate) struct EvidenceSink<'a> {
    pub plane: EvidencePlane<'a>,
    pub grid: &'a mut ProbOccupancyGrid<f64>,
}

impl<'a> EvidenceSink<'a> {
    pub fn new(
        depth: f64,
        tiling: &'a Tiling,
        truth: &'a Mask,
        grid: &'a mut ProbOccupancyGrid<f64>,
    ) -> Self {
        Self {
            plane: EvidencePlane {
                depth,
                tiling,
                truth,
            },
            grid,
        }
    }
}

pub(crate) struct Vehicle<'a> {
    hm: &'a Heightmap,
    sonar: &'a SonarSpec,
    speed: f64,
    rng: ChaCha8Rng,
    pose: Pose,
    heading: f64,
    t: f64,
    next_scan: u64,
    pub poses: Vec<TimedPose>,
    pub cloud: GridFilter,
    pub raw_hits: usize,
    pub scans: usize,
}

impl<'a> Vehicle<'a> {
    pub fn new(
        hm: &'a Heightmap,
        sonar: &'a SonarSpec,
        speed: f64,
        cloud_pitch: f64,
        rng: ChaCha8Rng,
        start: Pose,
    ) -> Result<Self> {
        Ok(Self {
            hm,
            sonar,
            speed,
            rng,
            pose: start,
            heading: 0.0,
            t: 0.0,
            next_scan: 0,
            poses: vec![TimedPose {
                t: 0.0,
                pose: start,
            }],
            cloud: GridFilter::new(cloud_pitch)?,
            raw_hits: 0,
            scans: 0,
        })
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Moves in a straight line to `target`, scanning on schedule.
    pub fn move_to(&mut self, target: Pose, mut sink: Option<EvidenceSink<'_>>) -> Result<()> {
        let start = self.pose;
        let length = start.distance(&target);
        if length == 0.0 {
            return Ok(());
        }
        let (dx, dy) = (target.x - start.x, target.y - start.y);
        if dx.hypot(dy) > 1e-9 {
            self.heading = dy.atan2(dx);
        }
        let t0 = self.t;
        let t1 = t0 + length / self.speed;
        let dt = self.sonar.sample_interval;
        loop {
            let ts = self.next_scan as f64 * dt;
            if ts > t1 + 1e-9 {
                break;
            }
            self.next_scan += 1;
            let f = ((ts - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let pose = Pose::new(
                start.x + f * (target.x - start.x),
                start.y + f * (target.y - start.y),
                start.depth + f * (target.depth - start.depth),
            );
            self.scan_at(pose, ts, sink.as_mut())?;
            if f < 1.0 {
                self.record(ts, pose);
            }
        }
        self.t = t1;
        self.pose = target;
        self.record(t1, target);
        Ok(())
    }

    fn scan_at(&mut self, pose: Pose, ts: f64, sink: Option<&mut EvidenceSink<'_>>) -> Result<()> {
        let plane = sink.as_ref().map(|s| s.plane);
        let scan = cast_scan(
            self.hm,
            pose,
            self.heading,
            self.sonar,
            plane,
            ts,
            &mut self.rng,
        )?;
        self.scans += 1;
        for hit in scan.beam_hits.iter().flatten() {
            self.raw_hits += 1;
            self.cloud
                .insert([hit[0], hit[1], self.hm.extent_z - hit[2]]);
        }
        if let Some(sink) = sink {
            sink.grid.update(&scan.plane_evidence)?;
        }
        Ok(())
    }

    fn record(&mut self, t: f64, pose: Pose) {
        if self.poses.last().is_some_and(|p| p.pose == pose) {
            return;
        }
        self.poses.push(TimedPose { t, pose });
    }
}
