//! JSONL trial records and JSON prior files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tunebench::priors::{Calibration, Prior, PriorSpec};
use tunebench::optim::OptimizerKind;
use tunebench::{Direction, HyperparameterConfig, Trial, TrialLibrary};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Wire form of one trial. A missing `update_steps` parses as absent so
/// commands that do not need it still accept the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub optimizer: String,
    pub task: String,
    pub seed: u64,
    pub config: BTreeMap<String, f64>,
    /// `null` for non-finite objectives.
    pub objective: Option<f64>,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update_steps: Option<u64>,
    pub epochs_run: u64,
    pub diverged: bool,
    pub schema_version: u32,
}

impl TrialRecord {
    pub fn from_trial(t: &Trial) -> Self {
        Self {
            optimizer: t.optimizer_id.clone(),
            task: t.task_id.clone(),
            seed: t.seed,
            config: t.config.iter().map(|(k, v)| (k.to_string(), v)).collect(),
            objective: t.objective.is_finite().then_some(t.objective),
            direction: t.direction,
            update_steps: Some(t.update_steps),
            epochs_run: t.epochs_run,
            diverged: t.diverged,
            schema_version: SCHEMA_VERSION,
        }
    }

    /// Absent step counts become 0, which step-budget analysis rejects.
    pub fn into_trial(self) -> std::result::Result<Trial, String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.objective.is_none() && !self.diverged {
            return Err("objective is null but the trial is not marked diverged".into());
        }
        Ok(Trial {
            optimizer_id: self.optimizer,
            task_id: self.task,
            seed: self.seed,
            config: self.config.into_iter().collect::<HyperparameterConfig>(),
            objective: self.objective.unwrap_or(f64::NAN),
            direction: self.direction,
            update_steps: self.update_steps.unwrap_or(0),
            epochs_run: self.epochs_run,
            diverged: self.diverged,
        })
    }
}

pub fn to_jsonl(trials: &[Trial]) -> String {
    let mut out = String::new();
    for t in trials {
        out.push_str(&serde_json::to_string(&TrialRecord::from_trial(t)).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str, path: &Path) -> Result<Vec<TrialRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_jsonl(&text, path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.into_trial().map_err(|e| CliError::parse(path, format!("record {}: {e}", i + 1))))
        .collect()
}

/// Trials from all `paths`, grouped into one library per (optimizer, task)
/// in sorted key order. Trials keep their file order within a library.
pub fn read_libraries(paths: &[impl AsRef<Path>]) -> Result<Vec<TrialLibrary>> {
    let mut groups: BTreeMap<(String, String), Vec<Trial>> = BTreeMap::new();
    for path in paths {
        let path = path.as_ref();
        let trials = read_trials(path)?;
        if trials.is_empty() {
            return Err(CliError::parse(path, "no trial records"));
        }
        for t in trials {
            groups
                .entry((t.optimizer_id.clone(), t.task_id.clone()))
                .or_default()
                .push(t);
        }
    }
    if groups.is_empty() {
        return Err(CliError::Parse("no trial files given".into()));
    }
    groups
        .into_values()
        .map(|trials| TrialLibrary::new(trials).map_err(CliError::from))
        .collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Fit metadata stored next to a calibrated prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationMeta {
    pub retention: f64,
    pub retained: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// On-disk prior: a prior spec plus optional calibration metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorFile {
    pub optimizer: OptimizerKind,
    pub hyperparameters: BTreeMap<String, Prior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<CalibrationMeta>,
}

impl PriorFile {
    pub fn from_calibration(c: &Calibration) -> Self {
        Self {
            optimizer: c.spec.optimizer,
            hyperparameters: c.spec.hyperparameters.clone(),
            metadata: Some(CalibrationMeta {
                retention: c.retention,
                retained: c.retained.clone(),
                warnings: c.warnings.clone(),
            }),
        }
    }

    pub fn spec(&self) -> tunebench::Result<PriorSpec> {
        PriorSpec::new(self.optimizer, self.hyperparameters.clone())
    }
}

pub fn read_prior(path: &Path) -> Result<PriorSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: PriorFile = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    file.spec()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
