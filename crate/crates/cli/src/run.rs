use std::path::{Path, PathBuf};

use ctcpp::metrics::MetricsReport;
use ctcpp::mission::{metrics_report, run_ct_cpp, run_tf_cpp, CtOutcome, MissionTrace};
use ctcpp::terrain::{generate_scene, Heightmap};
use log::info;
use rayon::prelude::*;

use crate::compare::{Comparison, MetricsFile, PlannerKind, SeedComparison};
use crate::config::{ExportLevel, RunConfig, RunManifest};
use crate::error::{CliError, CliResult};

pub const CONFIG_SNAPSHOT: &str = "config.json";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_TABLE: &str = "comparison.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub ct: Option<MetricsReport>,
    pub tf: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seeds: Vec<SeedOutcome>,
    /// Present when both planners ran.
    pub comparison: Option<Comparison>,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Runs every seed of the manifest, writes its artifacts and, when both planners
/// ran, the comparison summary. Seeds run in parallel and share nothing.
pub fn run(manifest: &RunManifest) -> CliResult<RunSummary> {
    manifest.config.mission().validate()?;
    create_dir(&manifest.out_dir)?;
    write(
        &manifest.out_dir.join(CONFIG_SNAPSHOT),
        manifest.config.to_json(),
    )?;

    let mut seeds = manifest
        .seeds
        .par_iter()
        .map(|&seed| run_seed(manifest, seed))
        .collect::<CliResult<Vec<_>>>()?;
    seeds.sort_by_key(|s| s.seed);

    let comparison = if manifest.planner.runs_ct() && manifest.planner.runs_tf() {
        let rows = seeds
            .iter()
            .map(|s| match (&s.ct, &s.tf) {
                (Some(ct), Some(tf)) => SeedComparison::new(s.seed, ct.clone(), tf.clone()),
                _ => unreachable!("both planners ran"),
            })
            .collect();
        let c = Comparison::new(rows)?;
        write(&manifest.out_dir.join(COMPARISON_JSON), c.to_json())?;
        write(&manifest.out_dir.join(COMPARISON_TABLE), c.table())?;
        Some(c)
    } else {
        None
    };
    Ok(RunSummary { seeds, comparison })
}

fn run_seed(manifest: &RunManifest, seed: u64) -> CliResult<SeedOutcome> {
    let config = manifest.config.for_seed(seed);
    let mission = config.mission();
    let dir = seed_dir(&manifest.out_dir, seed);
    create_dir(&dir)?;
    write(&dir.join(CONFIG_SNAPSHOT), config.to_json())?;
    let hm = generate_scene(&mission.scene)?;
    let all = manifest.export == ExportLevel::All;
    if all {
        write(&dir.join("heightmap.txt"), hm.to_text())?;
    }

    let ct = if manifest.planner.runs_ct() {
        info!("seed {seed}: coverage-tree mission");
        let out = run_ct_cpp(&mission, &hm)?;
        let report = metrics_report(&out.trace, &hm, &mission, Some(out.tree.node_count()))?;
        let pdir = dir.join(PlannerKind::Ct.dir_name());
        create_dir(&pdir)?;
        if all {
            export_trace(&pdir, &out.trace)?;
            export_ct(&pdir, &out)?;
        }
        write_metrics(&pdir, PlannerKind::Ct, seed, &report)?;
        info!(
            "seed {seed}: CT length {:.0} m, rmse {:.4}",
            report.trajectory_length_m, report.rmse_normalized
        );
        Some(report)
    } else {
        None
    };

    let tf = if manifest.planner.runs_tf() {
        info!("seed {seed}: terrain-following mission");
        let trace = run_tf_cpp(&mission, &hm)?;
        let report = metrics_report(&trace, &hm, &mission, None)?;
        let pdir = dir.join(PlannerKind::Tf.dir_name());
        create_dir(&pdir)?;
        if all {
            export_trace(&pdir, &trace)?;
        }
        write_metrics(&pdir, PlannerKind::Tf, seed, &report)?;
        info!(
            "seed {seed}: TF length {:.0} m, rmse {:.4}",
            report.trajectory_length_m, report.rmse_normalized
        );
        Some(report)
    } else {
        None
    };
    Ok(SeedOutcome { seed, ct, tf })
}

fn write_metrics(
    dir: &Path,
    planner: PlannerKind,
    seed: u64,
    metrics: &MetricsReport,
) -> CliResult<()> {
    let file = MetricsFile {
        planner,
        seed,
        metrics: metrics.clone(),
    };
    write(&dir.join("metrics.json"), file.to_json())
}

fn export_trace(dir: &Path, trace: &MissionTrace) -> CliResult<()> {
    write(&dir.join("trajectory.csv"), trace.trajectory_csv())?;
    write(&dir.join("points.xyz"), trace.points_xyz())
}

fn export_ct(dir: &Path, out: &CtOutcome) -> CliResult<()> {
    for (l, pom) in out.maps.pom.iter().enumerate() {
        if let Some(g) = pom {
            write(&dir.join(format!("pom_plane_{l}.pgm")), g.to_pgm())?;
        }
    }
    for (l, sym) in out.maps.symbolic.iter().enumerate() {
        if let Some(s) = sym {
            write(&dir.join(format!("symbolic_plane_{l}.txt")), s.to_ascii())?;
        }
    }
    let records =
        serde_json::to_string_pretty(&out.tree.to_records()).expect("tree records serialize");
    write(&dir.join("tree.json"), records + "\n")?;
    write(&dir.join("tree.dot"), out.tree.to_dot())
}

/// Regenerates the scene of a seed directory from its config snapshot.
pub fn scene_of(seed_dir: &Path) -> CliResult<(RunConfig, Heightmap)> {
    let config = RunConfig::load(&seed_dir.join(CONFIG_SNAPSHOT))?;
    let hm = generate_scene(&config.scene)?;
    Ok((config, hm))
}
