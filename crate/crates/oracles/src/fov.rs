use std::collections::HashMap;

/// Idealized sonar field of view: a downward circular cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub range: f64,
    /// Half of the full aperture, radians.
    pub half_angle: f64,
}

impl Cone {
    /// Whether a point `(dx, dy)` away horizontally and `dz` deeper lies inside.
    pub fn contains(&self, dx: f64, dy: f64, dz: f64) -> bool {
        if dz <= 0.0 {
            return false;
        }
        let horizontal = dx.hypot(dy);
        horizontal * horizontal + dz * dz <= self.range * self.range
            && horizontal <= dz * self.half_angle.tan() + 1e-9
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub samples: usize,
    pub uncovered: usize,
    /// Samples whose surface slope exceeds 45 degrees.
    pub steep_samples: usize,
    pub steep_uncovered: usize,
    /// `(samples, uncovered)` per depth band: band `k` lies between plane `k` and
    /// plane `k + 1`, the last band below the deepest plane.
    pub bands: Vec<(usize, usize)>,
}

impl AuditReport {
    pub fn uncovered_fraction(&self) -> f64 {
        ratio(self.uncovered, self.samples)
    }

    pub fn steep_uncovered_fraction(&self) -> f64 {
        ratio(self.steep_uncovered, self.steep_samples)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Fraction of the terrain surface that no pose's field of view contains.
///
/// The surface is sampled at the heightmap resolution: one sample per grid point of
/// the row-major `hx x hy` elevation grid, at the center of its square. Poses are
/// `[x, y, depth]`. Occlusion is ignored; the audit checks geometry, not visibility.
#[allow(clippy::too_many_arguments)]
pub fn fov_coverage_audit(
    poses: &[[f64; 3]],
    heights: &[f64],
    hx: usize,
    hy: usize,
    resolution: f64,
    extent_z: f64,
    cone: Cone,
    plane_depths: &[f64],
) -> AuditReport {
    let bucket = cone.range.max(1.0);
    let key = |x: f64, y: f64| ((x / bucket).floor() as i64, (y / bucket).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<[f64; 3]>> = HashMap::new();
    for p in poses {
        buckets.entry(key(p[0], p[1])).or_default().push(*p);
    }

    let h = |ix: usize, iy: usize| heights[iy * hx + ix];
    let mut report = AuditReport {
        bands: vec![(0, 0); plane_depths.len().max(1)],
        ..Default::default()
    };
    for iy in 0..hy {
        for ix in 0..hx {
            let (x, y) = (
                (ix as f64 + 0.5) * resolution,
                (iy as f64 + 0.5) * resolution,
            );
            let depth = extent_z - h(ix, iy);
            let (kx, ky) = key(x, y);
            let seen = (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    buckets.get(&(kx + dx, ky + dy)).is_some_and(|ps| {
                        ps.iter()
                            .any(|p| cone.contains(x - p[0], y - p[1], depth - p[2]))
                    })
                })
            });
            let gx = (h((ix + 1).min(hx - 1), iy) - h(ix.saturating_sub(1), iy))
                / (resolution * ((ix + 1).min(hx - 1) - ix.saturating_sub(1)).max(1) as f64);
            let gy = (h(ix, (iy + 1).min(hy - 1)) - h(ix, iy.saturating_sub(1)))
                / (resolution * ((iy + 1).min(hy - 1) - iy.saturating_sub(1)).max(1) as f64);
            let steep = gx.hypot(gy) > 1.0;
            let band = plane_depths
                .iter()
                .filter(|&&d| d <= depth)
                .count()
                .saturating_sub(1);

            report.samples += 1;
            report.bands[band].0 += 1;
            if steep {
                report.steep_samples += 1;
            }
            if !seen {
                report.uncovered += 1;
                report.bands[band].1 += 1;
                if steep {
                    report.steep_uncovered += 1;
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONE: Cone = Cone {
        range: 150.0,
        half_angle: std::f64::consts::FRAC_PI_3,
    };

    #[test]
    fn cone_geometry() {
        assert!(CONE.contains(0.0, 0.0, 100.0));
        assert!(!CONE.contains(0.0, 0.0, 151.0));
        assert!(!CONE.contains(0.0, 0.0, -1.0));
        // 60 degrees off vertical is the edge.
        assert!(!CONE.contains(100.0 * 3f64.sqrt() + 1.0, 0.0, 100.0));
        assert!(CONE.contains(60.0 * 3f64.sqrt(), 0.0, 60.0));
        assert!(!CONE.contains(60.0 * 3f64.sqrt() + 1.0, 0.0, 60.0));
    }

    #[test]
    fn flat_floor_within_range_is_covered() {
        let heights = vec![0.0; 20 * 20];
        let poses: Vec<[f64; 3]> = (0..=4)
            .flat_map(|j| (0..=100).map(move |i| [i as f64, j as f64 * 25.0, 300.0]))
            .collect();
        let r = fov_coverage_audit(&poses, &heights, 20, 20, 5.0, 400.0, CONE, &[0.0, 300.0]);
        assert_eq!(r.samples, 400);
        assert_eq!(r.uncovered, 0);
        assert_eq!(r.bands, vec![(0, 0), (400, 0)]);
    }

    #[test]
    fn floor_out_of_range_is_missed() {
        let heights = vec![0.0; 4 * 4];
        let r = fov_coverage_audit(
            &[[10.0, 10.0, 0.0]],
            &heights,
            4,
            4,
            5.0,
            400.0,
            CONE,
            &[0.0],
        );
        assert_eq!(r.uncovered_fraction(), 1.0);
    }
}
