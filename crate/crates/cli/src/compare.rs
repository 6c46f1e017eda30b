use std::fmt::Write as _;
use std::path::Path;

use ctcpp::metrics::MetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Ct,
    Tf,
}

impl PlannerKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            Self::Ct => "ct",
            Self::Tf => "tf",
        }
    }
}

/// Contents of a `metrics.json`: the report tagged with planner and scene seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub planner: PlannerKind,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

impl MetricsFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics always serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// CT minus TF; negative means the coverage-tree planner did better.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Deltas {
    pub trajectory_length_m: f64,
    #[serde(rename = "energy_J")]
    pub energy_j: f64,
    pub rmse_normalized: f64,
}

impl Deltas {
    fn between(ct: &MetricsReport, tf: &MetricsReport) -> Self {
        Self {
            trajectory_length_m: ct.trajectory_length_m - tf.trajectory_length_m,
            energy_j: ct.energy_j - tf.energy_j,
            rmse_normalized: ct.rmse_normalized - tf.rmse_normalized,
        }
    }

    fn named(&self) -> [(&'static str, f64); 3] {
        [
            ("length", self.trajectory_length_m),
            ("energy", self.energy_j),
            ("rmse", self.rmse_normalized),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub ct: MetricsReport,
    pub tf: MetricsReport,
    pub delta: Deltas,
    /// Metrics on which the coverage-tree planner is worse for this seed.
    pub ct_worse: Vec<String>,
}

impl SeedComparison {
    pub fn new(seed: u64, ct: MetricsReport, tf: MetricsReport) -> Self {
        let delta = Deltas::between(&ct, &tf);
        let ct_worse = delta
            .named()
            .iter()
            .filter(|(_, d)| *d > 0.0)
            .map(|(n, _)| n.to_string())
            .collect();
        Self {
            seed,
            ct,
            tf,
            delta,
            ct_worse,
        }
    }
}

/// Seeds on which the coverage-tree planner wins, per metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WinCounts {
    pub length: usize,
    pub energy: usize,
    pub rmse: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seeds: Vec<SeedComparison>,
    pub mean_delta: Deltas,
    pub ct_wins: WinCounts,
    pub flagged_seeds: Vec<u64>,
}

impl Comparison {
    pub fn new(mut seeds: Vec<SeedComparison>) -> CliResult<Self> {
        if seeds.is_empty() {
            return Err(CliError::Input("nothing to compare".into()));
        }
        seeds.sort_by_key(|s| s.seed);
        let n = seeds.len() as f64;
        let mean = |f: fn(&Deltas) -> f64| seeds.iter().map(|s| f(&s.delta)).sum::<f64>() / n;
        let mean_delta = Deltas {
            trajectory_length_m: mean(|d| d.trajectory_length_m),
            energy_j: mean(|d| d.energy_j),
            rmse_normalized: mean(|d| d.rmse_normalized),
        };
        let wins = |f: fn(&Deltas) -> f64| seeds.iter().filter(|s| f(&s.delta) < 0.0).count();
        let ct_wins = WinCounts {
            length: wins(|d| d.trajectory_length_m),
            energy: wins(|d| d.energy_j),
            rmse: wins(|d| d.rmse_normalized),
        };
        let flagged_seeds = seeds
            .iter()
            .filter(|s| !s.ct_worse.is_empty())
            .map(|s| s.seed)
            .collect();
        Ok(Self {
            seeds,
            mean_delta,
            ct_wins,
            flagged_seeds,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparisons always serialize");
        s.push('\n');
        s
    }

    /// Fixed-width table, one row per seed, deltas as CT minus TF.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6}  {:>10} {:>10} {:>9}  {:>13} {:>13} {:>13}  {:>8} {:>8} {:>9}  flags",
            "seed",
            "len CT",
            "len TF",
            "d len",
            "E CT",
            "E TF",
            "d E",
            "RMSE CT",
            "RMSE TF",
            "d RMSE"
        );
        for s in &self.seeds {
            let flags = if s.ct_worse.is_empty() {
                String::new()
            } else {
                format!("CT worse: {}", s.ct_worse.join(", "))
            };
            let row = format!(
                "{:>6}  {:>10.1} {:>10.1} {:>+9.1}  {:>13.1} {:>13.1} {:>+13.1}  {:>8.4} {:>8.4} {:>+9.4}  {flags}",
                s.seed,
                s.ct.trajectory_length_m,
                s.tf.trajectory_length_m,
                s.delta.trajectory_length_m,
                s.ct.energy_j,
                s.tf.energy_j,
                s.delta.energy_j,
                s.ct.rmse_normalized,
                s.tf.rmse_normalized,
                s.delta.rmse_normalized,
            );
            let _ = writeln!(out, "{}", row.trim_end());
        }
        let n = self.seeds.len();
        let m = &self.mean_delta;
        let _ = writeln!(
            out,
            "mean deltas: length {:+.1} m, energy {:+.1} J, rmse {:+.4}",
            m.trajectory_length_m, m.energy_j, m.rmse_normalized
        );
        let w = &self.ct_wins;
        let _ = writeln!(
            out,
            "CT better on length {}/{n}, energy {}/{n}, rmse {}/{n}",
            w.length, w.energy, w.rmse
        );
        out
    }
}

/// Parses `seed_<n>` directory names.
pub fn seed_of_dir(name: &str) -> Option<u64> {
    name.strip_prefix("seed_")?.parse().ok()
}

/// Pairs `seed_<n>/ct/metrics.json` with `seed_<n>/tf/metrics.json` under `dir`.
pub fn compare_dir(dir: &Path) -> CliResult<Comparison> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut seeds = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        if let Some(seed) = entry.file_name().to_str().and_then(seed_of_dir) {
            if entry.path().is_dir() {
                seeds.push(seed);
            }
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Input(format!(
            "{} holds no seed_<n> directories",
            dir.display()
        )));
    }
    seeds.sort_unstable();
    let rows = seeds
        .into_iter()
        .map(|seed| {
            let load = |kind: PlannerKind| -> CliResult<MetricsReport> {
                let path = dir
                    .join(format!("seed_{seed}"))
                    .join(kind.dir_name())
                    .join("metrics.json");
                if !path.is_file() {
                    return Err(CliError::Input(format!(
                        "seed {seed}: missing {} metrics ({})",
                        kind.dir_name(),
                        path.display()
                    )));
                }
                let file = MetricsFile::load(&path)?;
                if file.planner != kind {
                    return Err(CliError::Input(format!(
                        "{}: planner is {:?}",
                        path.display(),
                        file.planner
                    )));
                }
                if file.seed != seed {
                    return Err(CliError::Input(format!(
                        "mismatched scene seeds: {} reports seed {} under seed_{seed}",
                        path.display(),
                        file.seed
                    )));
                }
                Ok(file.metrics)
            };
            Ok(SeedComparison::new(
                seed,
                load(PlannerKind::Ct)?,
                load(PlannerKind::Tf)?,
            ))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Comparison::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(len: f64, e: f64, rmse: f64) -> MetricsReport {
        MetricsReport {
            trajectory_length_m: len,
            energy_j: e,
            rmse_normalized: rmse,
            per_plane_coverage_fraction: vec![],
            node_count: None,
            runtime_s: len,
        }
    }

    #[test]
    fn identical_metrics_give_zero_deltas() {
        let c = Comparison::new(vec![SeedComparison::new(
            1,
            report(10.0, 20.0, 0.1),
            report(10.0, 20.0, 0.1),
        )])
        .unwrap();
        assert_eq!(c.mean_delta, Deltas::default());
        assert!(c.flagged_seeds.is_empty());
        assert_eq!(c.ct_wins, WinCounts::default());
    }

    #[test]
    fn worse_seeds_are_flagged() {
        let c = Comparison::new(vec![
            SeedComparison::new(4, report(12.0, 20.0, 0.1), report(10.0, 30.0, 0.2)),
            SeedComparison::new(2, report(8.0, 20.0, 0.1), report(10.0, 30.0, 0.2)),
        ])
        .unwrap();
        assert_eq!(c.seeds[0].seed, 2);
        assert_eq!(c.flagged_seeds, vec![4]);
        assert_eq!(c.seeds[1].ct_worse, vec!["length".to_string()]);
        assert_eq!(
            c.ct_wins,
            WinCounts {
                length: 1,
                energy: 2,
                rmse: 2
            }
        );
        assert!(c.table().contains("CT worse: length"));
    }

    #[test]
    fn seed_dirs() {
        assert_eq!(seed_of_dir("seed_17"), Some(17));
        assert_eq!(seed_of_dir("seed_"), None);
        assert_eq!(seed_of_dir("config.json"), None);
    }
}
