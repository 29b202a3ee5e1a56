//! Line-oriented run configuration:
//!
//! ```text
//! # comment
//! [run]
//! seed = 42
//! library_size = 100
//! optimizers = sgd-lr, adam-lr
//! priors = calibrated/adam-lr.prior.json
//!
//! [task.quadratic]
//! dim = 100
//! max_epochs = 50
//! ```
//!
//! A task section's `kind` defaults to its id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tunebench::optim::OptimizerKind;
use tunebench::tasks::{TaskConfig, TaskKind};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub library_size: usize,
    pub optimizers: Vec<OptimizerKind>,
    /// Prior files overriding the defaults, resolved against the config
    /// file's directory.
    pub priors: Vec<PathBuf>,
    pub tasks: Vec<TaskConfig>,
}

fn err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

fn number<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects a non-negative integer, got `{value}`")))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    enum Section {
        None,
        Run,
        Task(usize),
    }
    let mut section = Section::None;
    let mut seed = 0u64;
    let mut library_size = tunebench::hpo::DEFAULT_LIBRARY_SIZE;
    let mut optimizers = Vec::new();
    let mut priors = Vec::new();
    let mut task_ids: Vec<String> = Vec::new();
    let mut task_kinds: Vec<Option<TaskKind>> = Vec::new();
    let mut task_entries: Vec<BTreeMap<String, (usize, String)>> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header"))?
                .trim();
            section = if name == "run" {
                Section::Run
            } else if let Some(id) = name.strip_prefix("task.") {
                if !valid_id(id) {
                    return Err(err(line_no, format!("invalid task id `{id}`")));
                }
                if task_ids.iter().any(|t| t == id) {
                    return Err(err(line_no, format!("duplicate task `{id}`")));
                }
                task_ids.push(id.to_string());
                task_kinds.push(None);
                task_entries.push(BTreeMap::new());
                Section::Task(task_ids.len() - 1)
            } else {
                return Err(err(line_no, format!("unknown section `{name}`")));
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match section {
            Section::None => return Err(err(line_no, "entry outside a section")),
            Section::Run => match key {
                "seed" => seed = number(line_no, key, value)?,
                "library_size" => library_size = number(line_no, key, value)?,
                "optimizers" => {
                    optimizers = value
                        .split(',')
                        .map(|s| s.trim())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<OptimizerKind>().map_err(CliError::from))
                        .collect::<Result<_>>()?
                }
                "priors" => {
                    priors = value
                        .split(',')
                        .map(|s| s.trim())
                        .filter(|s| !s.is_empty())
                        .map(|s| base_dir.join(s))
                        .collect()
                }
                _ => return Err(err(line_no, format!("unknown key `{key}` in [run]"))),
            },
            Section::Task(t) => {
                if key == "kind" {
                    task_kinds[t] = Some(value.parse::<TaskKind>()?);
                } else if ["dim", "n", "batch_size", "max_epochs", "seed"].contains(&key) {
                    task_entries[t].insert(key.to_string(), (line_no, value.to_string()));
                } else {
                    return Err(err(line_no, format!("unknown key `{key}` in task section")));
                }
            }
        }
    }

    let mut task_configs = Vec::with_capacity(task_ids.len());
    for (id, (kind, entries)) in task_ids.into_iter().zip(task_kinds.into_iter().zip(task_entries)) {
        let kind = match kind {
            Some(k) => k,
            None => id.parse::<TaskKind>()?,
        };
        let mut full = TaskConfig::default_for(kind, seed);
        full.id = id;
        for (key, (line_no, value)) in entries {
            match key.as_str() {
                "dim" => full.dim = number(line_no, &key, &value)?,
                "n" => full.n = number(line_no, &key, &value)?,
                "batch_size" => full.batch_size = number(line_no, &key, &value)?,
                "max_epochs" => full.max_epochs = number(line_no, &key, &value)?,
                "seed" => full.seed = number(line_no, &key, &value)?,
                _ => unreachable!(),
            }
        }
        full.validate().map_err(|e| CliError::Config(e.to_string()))?;
        task_configs.push(full);
    }

    if optimizers.is_empty() {
        return Err(CliError::Config("[run] needs at least one optimizer".into()));
    }
    if task_configs.is_empty() {
        return Err(CliError::Config("no [task.<id>] sections".into()));
    }
    if library_size == 0 {
        return Err(CliError::Config("library_size must be positive".into()));
    }
    Ok(RunConfig {
        seed,
        library_size,
        optimizers,
        priors,
        tasks: task_configs,
    })
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}
