use ctcpp::metrics::{
    energy, knn_outlier_filter, point_filter, reconstruction_rmse, trajectory_length, EnergyModel,
};
use ctcpp::mission::MissionParams;
use ctcpp::sensor::{cast_scan, Pose, SonarSpec};
use ctcpp::terrain::{generate_scene, SceneSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn horizontal_energy_is_k1_times_length(pts in prop::collection::vec((0.0..450.0f64, 0.0..450.0f64), 2..40), depth in 0.0..400.0f64) {
        let poses: Vec<Pose> = pts.iter().map(|&(x, y)| Pose::new(x, y, depth)).collect();
        let m = EnergyModel::default();
        let e = energy(&poses, &m);
        let l = trajectory_length(&poses);
        prop_assert!((e - m.k1 * l).abs() <= 1e-9 * e.max(1.0));
    }

    #[test]
    fn rmse_ignores_point_order(seed in any::<u64>(), rot in 0usize..1000) {
        let hm = generate_scene(&SceneSpec { extent_x: 100.0, extent_y: 100.0, mountain_count: 2, seed, ..SceneSpec::default() }).unwrap();
        let mut cloud: Vec<[f64; 3]> = (0..400)
            .map(|i| {
                let (x, y) = ((i % 20) as f64 * 5.0 + 1.3, (i / 20) as f64 * 5.0 + 3.1);
                [x, y, hm.height_at(x, y) + (i % 7) as f64]
            })
            .collect();
        let a = reconstruction_rmse(&cloud, &hm, 5.0).unwrap();
        cloud.rotate_left(rot % 400);
        cloud.reverse();
        let b = reconstruction_rmse(&cloud, &hm, 5.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-12));
    }

    #[test]
    fn filtering_never_adds_points(cloud in prop::collection::vec((0.0..50.0f64, 0.0..50.0f64, 0.0..50.0f64), 0..300)) {
        let pts: Vec<[f64; 3]> = cloud.into_iter().map(|(x, y, z)| [x, y, z]).collect();
        prop_assert!(point_filter(&pts, 2.5, 6, 7.5).unwrap().len() <= pts.len());
    }
}

#[test]
fn filtering_a_clean_sonar_cloud_barely_moves_the_error() {
    let hm = generate_scene(&SceneSpec {
        extent_x: 150.0,
        extent_y: 150.0,
        mountain_count: 3,
        ..SceneSpec::default()
    })
    .unwrap();
    let spec = SonarSpec {
        beam_count: 64,
        false_rate: 0.0,
        ..SonarSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut cloud = Vec::new();
    for lap in 0..6 {
        let y = 12.5 + 25.0 * lap as f64;
        for k in 0..=150 {
            // Terrain-following: 85 m above the seabed directly below.
            let depth = (hm.surface_depth(k as f64, y) - 85.0).max(0.0);
            let scan = cast_scan(
                &hm,
                Pose::new(k as f64, y, depth),
                0.0,
                &spec,
                None,
                0.0,
                &mut rng,
            )
            .unwrap();
            cloud.extend(
                scan.beam_hits
                    .iter()
                    .flatten()
                    .map(|p| [p[0], p[1], hm.extent_z - p[2]]),
            );
        }
    }
    let raw = reconstruction_rmse(&cloud, &hm, 5.0).unwrap();
    let m = MissionParams::default();
    let filtered = point_filter(&cloud, m.cloud_pitch, m.knn_k, m.knn_cutoff()).unwrap();
    assert!(filtered.len() < cloud.len());
    let after = reconstruction_rmse(&filtered, &hm, 5.0).unwrap();
    assert!(
        (after - raw).abs() < 0.05 * raw,
        "raw {raw}, filtered {after}"
    );
}

#[test]
fn uniform_samples_survive_at_three_median_spacings() {
    // Spacing of a point is the mean distance to its k nearest neighbours, found here by
    // brute force independently of the filter's voxel index.
    let k = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cloud: Vec<[f64; 3]> = (0..2000)
        .map(|_| {
            [
                rng.gen_range(0.0..100.0),
                rng.gen_range(0.0..100.0),
                rng.gen_range(0.0..0.5),
            ]
        })
        .collect();
    let mut spacing: Vec<f64> = cloud
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = cloud
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| {
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
                })
                .collect();
            d.sort_by(f64::total_cmp);
            d[..k].iter().sum::<f64>() / k as f64
        })
        .collect();
    let cutoff = 3.0 * {
        let mut s = spacing.clone();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };
    let kept = knn_outlier_filter(&cloud, k, cutoff).unwrap();
    assert!(
        kept.len() as f64 >= 0.99 * cloud.len() as f64,
        "{} of {}",
        kept.len(),
        cloud.len()
    );
    spacing.retain(|&s| s <= cutoff);
    assert_eq!(kept.len(), spacing.len());
}
