//! Small training problems with train/validation splits, minibatch
//! gradient oracles and an epoch structure.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_stream, derive_seed};
use crate::types::Direction;

mod logreg;
mod mlp;
mod quadratic;

pub use logreg::LogReg;
pub use mlp::Mlp;
pub use quadratic::Quadratic;

/// Stream salts so data, order, noise and init never share draws.
const SALT_DATA: u64 = 1;
const SALT_ORDER: u64 = 2;
const SALT_NOISE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Quadratic,
    LogReg,
    Mlp,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Quadratic, TaskKind::LogReg, TaskKind::Mlp];

    pub fn id(self) -> &'static str {
        match self {
            TaskKind::Quadratic => "quadratic",
            TaskKind::LogReg => "logreg",
            TaskKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

/// Everything needed to rebuild a task bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub id: String,
    pub kind: TaskKind,
    /// Parameter dimension for the quadratic, input features for logreg.
    /// Ignored by the MLP.
    pub dim: usize,
    /// Total examples before the train/validation split. For the quadratic
    /// it only sets the number of minibatches per epoch.
    pub n: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl TaskConfig {
    pub fn default_for(kind: TaskKind, seed: u64) -> Self {
        let (dim, n, batch_size, max_epochs) = match kind {
            TaskKind::Quadratic => (100, 1000, 50, 50),
            TaskKind::LogReg => (20, 2000, 50, 30),
            TaskKind::Mlp => (2, 1000, 32, 40),
        };
        Self {
            id: kind.id().to_string(),
            kind,
            dim,
            n,
            batch_size,
            max_epochs,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("task {}: {msg}", self.id)));
        if self.id.is_empty() {
            return bad("empty id");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        match self.kind {
            TaskKind::Quadratic if self.dim < 2 => bad("dim must be at least 2"),
            TaskKind::LogReg if self.dim == 0 => bad("dim must be positive"),
            TaskKind::LogReg | TaskKind::Mlp if self.n < 10 => bad("n must be at least 10"),
            TaskKind::Quadratic if self.n < self.batch_size => bad("n must be at least batch_size"),
            TaskKind::LogReg | TaskKind::Mlp if train_size(self.n) < self.batch_size => {
                bad("training split smaller than one batch")
            }
            _ => Ok(()),
        }
    }
}

/// Validation loss together with the task's reported objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub loss: f64,
    pub objective: f64,
}

/// Labelled examples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dataset {
    pub features: usize,
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    /// First `n_train` shuffled examples train, the rest validate.
    pub fn split<R: Rng + ?Sized>(self, n_train: usize, rng: &mut R) -> (Dataset, Dataset) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(rng);
        let take = |idx: &[usize]| Dataset {
            features: self.features,
            inputs: idx.iter().flat_map(|&i| self.row(i).to_vec()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        };
        let train = take(&order[..n_train]);
        let val = take(&order[n_train..]);
        (train, val)
    }
}

/// Size of the training split: 80% of `n`.
pub(crate) fn train_size(n: usize) -> usize {
    n * 4 / 5
}

#[derive(Debug, Clone, PartialEq)]
enum Problem {
    Quadratic(Quadratic),
    LogReg(LogReg),
    Mlp(Mlp),
}

/// An immutable, shareable training problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    config: TaskConfig,
    problem: Problem,
}

impl TaskInstance {
    pub fn new(config: TaskConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = child_stream(config.seed, SALT_DATA);
        let problem = match config.kind {
            TaskKind::Quadratic => Problem::Quadratic(Quadratic::new(config.dim)),
            TaskKind::LogReg => Problem::LogReg(LogReg::new(config.n, config.dim, &mut rng)),
            TaskKind::Mlp => Problem::Mlp(Mlp::new(config.n, &mut rng)),
        };
        Ok(Self { config, problem })
    }

    pub fn quadratic(dim: usize, seed: u64) -> Result<Self> {
        let mut config = TaskConfig::default_for(TaskKind::Quadratic, seed);
        config.dim = dim;
        Self::new(config)
    }

    pub fn logreg(n: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut config = TaskConfig::default_for(TaskKind::LogReg, seed);
        config.n = n;
        config.dim = dim;
        Self::new(config)
    }

    pub fn mlp(seed: u64) -> Result<Self> {
        Self::new(TaskConfig::default_for(TaskKind::Mlp, seed))
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn kind(&self) -> TaskKind {
        self.config.kind
    }

    pub fn max_epochs(&self) -> usize {
        self.config.max_epochs
    }

    /// Number of trainable parameters.
    pub fn dim(&self) -> usize {
        match &self.problem {
            Problem::Quadratic(q) => q.dim(),
            Problem::LogReg(l) => l.dim(),
            Problem::Mlp(m) => m.dim(),
        }
    }

    /// Whether the reported validation objective is a loss or an accuracy.
    pub fn direction(&self) -> Direction {
        match self.problem {
            Problem::Mlp(_) => Direction::Maximize,
            _ => Direction::Minimize,
        }
    }

    fn train_len(&self) -> usize {
        match &self.problem {
            Problem::Quadratic(_) => self.config.n,
            Problem::LogReg(l) => l.train.len(),
            Problem::Mlp(m) => m.train.len(),
        }
    }

    /// Full minibatches per epoch; a trailing partial batch is dropped.
    pub fn batches_per_epoch(&self) -> usize {
        self.train_len() / self.config.batch_size
    }

    /// Planned number of update steps for a full-length run.
    pub fn total_steps(&self) -> u64 {
        (self.config.max_epochs * self.batches_per_epoch()) as u64
    }

    /// Training-example order for `epoch`, a pure function of the data seed
    /// and the epoch index.
    pub fn batch_order(&self, epoch: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.train_len()).collect();
        let mut rng = child_stream(derive_seed(self.config.seed, SALT_ORDER), epoch as u64);
        order.shuffle(&mut rng);
        order
    }

    /// Starting point for a trial. The quadratic always starts at the
    /// all-ones vector; the networks use a scaled Gaussian draw.
    pub fn init_params(&self, trial_seed: u64) -> Vec<f64> {
        let mut rng = child_stream(trial_seed, 0);
        match &self.problem {
            Problem::Quadratic(q) => vec![1.0; q.dim()],
            Problem::LogReg(l) => l.init(&mut rng),
            Problem::Mlp(m) => m.init(&mut rng),
        }
    }

    fn check_dim(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: params.len(),
            });
        }
        Ok(())
    }

    fn check_batch(&self, batch: usize) -> Result<()> {
        if batch >= self.batches_per_epoch() {
            return Err(Error::InvalidArgument(format!(
                "batch {batch} out of range for {} batches",
                self.batches_per_epoch()
            )));
        }
        Ok(())
    }

    /// Loss and gradient of minibatch `batch` in epoch `epoch`. For the
    /// quadratic the minibatch loss carries a linear noise term, so its
    /// gradient is the noisy oracle `Qw + ξ`.
    pub fn minibatch_loss_and_grad(
        &self,
        params: &[f64],
        epoch: usize,
        batch: usize,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_dim(params)?;
        self.check_batch(batch)?;
        Ok(match &self.problem {
            Problem::Quadratic(q) => q.loss_and_grad(params, &self.noise(epoch, batch)),
            Problem::LogReg(l) => l.loss_and_grad(params, &self.batch_indices(epoch, batch)),
            Problem::Mlp(m) => m.loss_and_grad(params, &self.batch_indices(epoch, batch)),
        })
    }

    pub fn minibatch_loss(&self, params: &[f64], epoch: usize, batch: usize) -> Result<f64> {
        Ok(self.minibatch_loss_and_grad(params, epoch, batch)?.0)
    }

    fn batch_indices(&self, epoch: usize, batch: usize) -> Vec<usize> {
        let b = self.config.batch_size;
        self.batch_order(epoch)[batch * b..(batch + 1) * b].to_vec()
    }

    fn noise(&self, epoch: usize, batch: usize) -> Vec<f64> {
        let key = derive_seed(derive_seed(self.config.seed, SALT_NOISE), epoch as u64);
        let mut rng = child_stream(key, batch as u64);
        gaussian_vec(&mut rng, self.dim(), quadratic::NOISE_STD)
    }

    /// Validation loss and objective. Never touches training state.
    pub fn validation(&self, params: &[f64]) -> Result<Validation> {
        self.check_dim(params)?;
        Ok(match &self.problem {
            Problem::Quadratic(q) => {
                let loss = q.loss(params);
                Validation {
                    loss,
                    objective: loss,
                }
            }
            Problem::LogReg(l) => {
                let loss = l.validation_loss(params);
                Validation {
                    loss,
                    objective: loss,
                }
            }
            Problem::Mlp(m) => m.validation(params),
        })
    }

    /// Validation objective: loss for the quadratic and logreg, accuracy
    /// for the MLP.
    pub fn evaluate(&self, params: &[f64]) -> Result<f64> {
        Ok(self.validation(params)?.objective)
    }

    pub fn as_quadratic(&self) -> Option<&Quadratic> {
        match &self.problem {
            Problem::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_logreg(&self) -> Option<&LogReg> {
        match &self.problem {
            Problem::LogReg(l) => Some(l),
            _ => None,
        }
    }
}

/// Norm-wise relative error between an analytic gradient and central
/// finite differences of `loss` with step `h`.
pub fn gradient_check_error(
    loss: impl Fn(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    h: f64,
) -> f64 {
    let mut p = params.to_vec();
    let mut diff2 = 0.0;
    let mut a2 = 0.0;
    let mut n2 = 0.0;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = loss(&p);
        p[i] = orig - h;
        let down = loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        diff2 += (numeric - analytic[i]).powi(2);
        a2 += analytic[i].powi(2);
        n2 += numeric.powi(2);
    }
    let scale = a2.sqrt().max(n2.sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff2.sqrt() / scale
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn all_tasks() -> Vec<TaskInstance> {
        TaskKind::ALL
            .into_iter()
            .map(|k| TaskInstance::new(TaskConfig::default_for(k, 7)).unwrap())
            .collect()
    }

    #[test]
    fn ids_round_trip() {
        for k in TaskKind::ALL {
            assert_eq!(k.id().parse::<TaskKind>().unwrap(), k);
        }
        assert_eq!("cnn".parse::<TaskKind>(), Err(Error::UnknownTask("cnn".into())));
    }

    #[test]
    fn dims_and_directions() {
        let t = all_tasks();
        assert_eq!(t[0].dim(), 100);
        assert_eq!(t[1].dim(), 21);
        assert_eq!(t[2].dim(), 162);
        assert_eq!(t[0].direction(), Direction::Minimize);
        assert_eq!(t[1].direction(), Direction::Minimize);
        assert_eq!(t[2].direction(), Direction::Maximize);
        assert_eq!(t[0].batches_per_epoch(), 20);
        assert_eq!(t[1].batches_per_epoch(), 32);
        assert_eq!(t[2].batches_per_epoch(), 25);
    }

    #[test]
    fn batch_order_is_pure() {
        for t in all_tasks() {
            let a = t.batch_order(3);
            assert_eq!(a, t.batch_order(3));
            assert_ne!(a, t.batch_order(4));
            let mut sorted = a.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..a.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn evaluation_checks_dimension_and_is_deterministic() {
        for t in all_tasks() {
            let p = t.init_params(11);
            assert_eq!(t.evaluate(&p).unwrap(), t.evaluate(&p).unwrap());
            assert!(matches!(
                t.evaluate(&p[1..]),
                Err(Error::LengthMismatch { .. })
            ));
            assert!(t.minibatch_loss_and_grad(&p, 0, t.batches_per_epoch()).is_err());
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for t in all_tasks() {
            let p = t.init_params(5);
            let (_, g) = t.minibatch_loss_and_grad(&p, 1, 2).unwrap();
            let err = gradient_check_error(|w| t.minibatch_loss(w, 1, 2).unwrap(), &p, &g, 1e-5);
            assert!(err < 1e-5, "{}: {err}", t.id());
        }
    }

    #[test]
    fn stable_helpers() {
        assert_abs_diff_eq!(softplus(0.0), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn config_validation() {
        let mut c = TaskConfig::default_for(TaskKind::Quadratic, 0);
        c.dim = 1;
        assert!(TaskInstance::new(c).is_err());
        let mut c = TaskConfig::default_for(TaskKind::LogReg, 0);
        c.n = 5;
        assert!(TaskInstance::new(c).is_err());
        let mut c = TaskConfig::default_for(TaskKind::Mlp, 0);
        c.batch_size = 0;
        assert!(TaskInstance::new(c).is_err());
    }
}
