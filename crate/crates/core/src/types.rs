//! Domain types shared across the crate: objective orientation, trials,
//! trial libraries, incumbent traces and budget curves.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orientation of a task objective. Every comparison of objectives goes
/// through this type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "min")]
    Minimize,
    #[serde(rename = "max")]
    Maximize,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Minimize => "min",
            Direction::Maximize => "max",
        }
    }

    /// The better of two objectives (the first one on ties).
    pub fn best(self, a: f64, b: f64) -> f64 {
        if better(b, a, self) {
            b
        } else {
            a
        }
    }

    /// The worse of two objectives (the first one on ties).
    pub fn worst(self, a: f64, b: f64) -> f64 {
        if better(a, b, self) {
            b
        } else {
            a
        }
    }

    /// Smallest representable step past `value` in the worse direction.
    pub fn step_worse(self, value: f64) -> f64 {
        match self {
            Direction::Minimize => value.next_up(),
            Direction::Maximize => value.next_down(),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Direction::Minimize),
            "max" => Ok(Direction::Maximize),
            other => Err(Error::InvalidArgument(format!("direction `{other}`"))),
        }
    }
}

/// True iff `a` strictly improves on `b` under `direction`.
pub fn better(a: f64, b: f64, direction: Direction) -> bool {
    match direction {
        Direction::Minimize => a < b,
        Direction::Maximize => a > b,
    }
}

/// Maps an objective to a score where higher is always better.
pub fn to_score(objective: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Maximize => objective,
        Direction::Minimize => -objective,
    }
}

/// Hyperparameter name to value. Ordered so serialization is stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperparameterConfig(BTreeMap<String, f64>);

impl HyperparameterConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("missing hyperparameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, f64)> for HyperparameterConfig {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// One evaluated hyperparameter configuration.
#[derive(Debug, Clone)]
pub struct Trial {
    pub optimizer_id: String,
    pub task_id: String,
    pub seed: u64,
    pub config: HyperparameterConfig,
    /// Validation objective in native units. Not meaningful when `diverged`.
    pub objective: f64,
    pub direction: Direction,
    pub update_steps: u64,
    pub epochs_run: u64,
    pub diverged: bool,
}

/// Two NaN objectives compare equal, so records of diverged runs do.
impl PartialEq for Trial {
    fn eq(&self, other: &Self) -> bool {
        let same_objective = self.objective == other.objective
            || (self.objective.is_nan() && other.objective.is_nan());
        same_objective
            && self.optimizer_id == other.optimizer_id
            && self.task_id == other.task_id
            && self.seed == other.seed
            && self.config == other.config
            && self.direction == other.direction
            && self.update_steps == other.update_steps
            && self.epochs_run == other.epochs_run
            && self.diverged == other.diverged
    }
}

impl Trial {
    /// A trial whose objective can enter arithmetic as-is.
    pub fn is_usable(&self) -> bool {
        !self.diverged && self.objective.is_finite()
    }
}

/// Pool of trials for one (optimizer, task) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLibrary {
    optimizer_id: String,
    task_id: String,
    direction: Direction,
    trials: Vec<Trial>,
}

impl TrialLibrary {
    pub fn new(trials: Vec<Trial>) -> Result<Self> {
        let first = trials.first().ok_or(Error::EmptyTrials)?;
        let (optimizer_id, task_id, direction) =
            (first.optimizer_id.clone(), first.task_id.clone(), first.direction);
        for t in &trials {
            if t.optimizer_id != optimizer_id || t.task_id != task_id || t.direction != direction {
                return Err(Error::Mismatch(format!(
                    "trial for {}/{} ({}) in library for {}/{} ({})",
                    t.optimizer_id, t.task_id, t.direction, optimizer_id, task_id, direction
                )));
            }
        }
        Ok(Self {
            optimizer_id,
            task_id,
            direction,
            trials,
        })
    }

    /// Library with bare objectives, mostly for analysis of external data
    /// and tests.
    pub fn from_objectives(
        optimizer_id: &str,
        task_id: &str,
        direction: Direction,
        objectives: &[f64],
    ) -> Result<Self> {
        let trials = objectives
            .iter()
            .enumerate()
            .map(|(i, &objective)| Trial {
                optimizer_id: optimizer_id.to_string(),
                task_id: task_id.to_string(),
                seed: i as u64,
                config: HyperparameterConfig::new(),
                objective,
                direction,
                update_steps: 1,
                epochs_run: 1,
                diverged: !objective.is_finite(),
            })
            .collect();
        Self::new(trials)
    }

    pub fn optimizer_id(&self) -> &str {
        &self.optimizer_id
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Worst objective among non-diverged trials, moved one ulp further in
    /// the worse direction. Diverged trials take this value in analysis.
    pub fn worst_sentinel(&self) -> Result<f64> {
        let worst = self
            .trials
            .iter()
            .filter(|t| t.is_usable())
            .map(|t| t.objective)
            .reduce(|a, b| self.direction.worst(a, b))
            .ok_or(Error::AllDiverged)?;
        Ok(self.direction.step_worse(worst))
    }

    /// Objectives ready for arithmetic, in trial order, with diverged
    /// trials replaced by [`worst_sentinel`](Self::worst_sentinel).
    pub fn analysis_objectives(&self) -> Result<Vec<f64>> {
        let sentinel = self.worst_sentinel()?;
        Ok(self
            .trials
            .iter()
            .map(|t| if t.is_usable() { t.objective } else { sentinel })
            .collect())
    }
}

/// Best-so-far objective sequence of one search run.
#[derive(Debug, Clone, PartialEq)]
pub struct IncumbentTrace(Vec<f64>);

impl IncumbentTrace {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("incumbent traces are nonempty")
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Running best of `objectives` under `direction`.
pub fn incumbents(objectives: &[f64], direction: Direction) -> Result<IncumbentTrace> {
    if objectives.is_empty() {
        return Err(Error::EmptyTrials);
    }
    if let Some(&bad) = objectives.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    let mut out = Vec::with_capacity(objectives.len());
    let mut best = objectives[0];
    for &v in objectives {
        best = direction.best(best, v);
        out.push(best);
    }
    Ok(IncumbentTrace(out))
}

impl IncumbentTrace {
    /// Wraps a sequence that is already monotone toward the better
    /// direction, e.g. an expected-incumbent curve.
    pub fn from_monotone(values: Vec<f64>, direction: Direction) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyTrials);
        }
        if let Some(w) = values.windows(2).find(|w| better(w[0], w[1], direction)) {
            return Err(Error::InvalidArgument(format!(
                "trace is not monotone: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self(values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

/// Expected best objective, its variance and quartiles per budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCurve {
    pub direction: Direction,
    pub budgets: Vec<usize>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub quantiles: Vec<Quartiles>,
}

impl BudgetCurve {
    pub fn len(&self) -> usize {
        self.budgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.budgets.is_empty()
    }
}
