use std::fmt;
use std::path::{Path, PathBuf};

use ctcpp::mission::{DerivedQuantities, MissionConfig, MissionParams, PlannerParams};
use ctcpp::sensor::SonarSpec;
use ctcpp::terrain::SceneSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlannerChoice {
    Ct,
    Tf,
    #[default]
    Both,
}

impl PlannerChoice {
    pub fn runs_ct(self) -> bool {
        matches!(self, Self::Ct | Self::Both)
    }

    pub fn runs_tf(self) -> bool {
        matches!(self, Self::Tf | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExportLevel {
    /// Every artifact: trajectories, clouds, maps, trees, metrics.
    #[default]
    All,
    /// Metrics JSON and config snapshots only.
    Metrics,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportParams {
    pub artifacts: ExportLevel,
    pub planner: PlannerChoice,
}

/// The on-disk run configuration: one JSON document per experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneSpec,
    pub sonar: SonarSpec,
    pub planner: PlannerParams,
    pub mission: MissionParams,
    pub export: ExportParams,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configs always serialize");
        s.push('\n');
        s
    }

    pub fn mission(&self) -> MissionConfig {
        MissionConfig {
            scene: self.scene.clone(),
            sonar: self.sonar,
            planner: self.planner,
            mission: self.mission,
        }
    }

    /// The configuration of one seed: the scene and the sensor noise both follow it.
    pub fn for_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.scene.seed = seed;
        c.mission.seed = seed;
        c
    }
}

/// What `run` does: which config, where to, which planners and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub planner: PlannerChoice,
    pub seeds: Vec<u64>,
    pub export: ExportLevel,
}

impl RunManifest {
    pub fn new(
        config_path: PathBuf,
        out_dir: PathBuf,
        planner: Option<PlannerChoice>,
        seeds: Option<Vec<u64>>,
        export: Option<ExportLevel>,
    ) -> CliResult<Self> {
        let config = RunConfig::load(&config_path)?;
        let seeds = seeds.unwrap_or_else(|| vec![config.scene.seed]);
        if seeds.is_empty() {
            return Err(CliError::Config("the seed list is empty".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("the seed list repeats a seed".into()));
        }
        Ok(Self {
            planner: planner.unwrap_or(config.export.planner),
            export: export.unwrap_or(config.export.artifacts),
            config_path,
            config,
            out_dir,
            seeds,
        })
    }
}

/// Everything `validate` prints, plus the violation if there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub derived: DerivedQuantities,
    pub delta_h: f64,
    pub lap_width: f64,
    pub violation: Option<String>,
}

pub fn validate(config: &RunConfig) -> ValidationReport {
    let mission = config.mission();
    ValidationReport {
        derived: mission.derived(),
        delta_h: config.planner.delta_h,
        lap_width: config.planner.lap_width,
        violation: mission.validate().err().map(|e| e.to_string()),
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.derived;
        writeln!(f, "lap width w          {:>10.4} m", self.lap_width)?;
        writeln!(
            f,
            "  bound (2/3) r sin(theta/2)  {:.4} m",
            d.lap_width_bound
        )?;
        writeln!(f, "plane spacing dh     {:>10.4} m", self.delta_h)?;
        match d.delta_h_bound {
            Some(b) => writeln!(
                f,
                "  bound sqrt(r^2 - 2.25 w^2) - 1.5 w cot(theta/2)  {b:.4} m"
            )?,
            None => writeln!(f, "  bound undefined for this lap width")?,
        }
        writeln!(f, "beams per cell B     {:>10.4}", d.beams_per_cell)?;
        writeln!(f, "readings B_total     {:>10.4}", d.b_total)?;
        writeln!(f, "l_occ                {:>10.6}", d.l_occ)?;
        writeln!(f, "planes               {:>10}", d.plane_count)?;
        match &self.violation {
            None => write!(f, "valid"),
            Some(v) => write!(f, "INVALID: {v}"),
        }
    }
}
