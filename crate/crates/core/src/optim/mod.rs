//! Update rules of the optimizer roster and the per-trial optimizer driver.

mod adagrad;
mod adam;
mod schedule;
mod sgd;

use std::fmt;
use std::str::FromStr;

pub use adagrad::{adagrad_step, DEFAULT_ADAGRAD_EPS};
pub use adam::{adam_step, AdamState};
pub use schedule::{early_stop, poly_decay, EarlyStopping};
pub use sgd::sgd_step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::HyperparameterConfig;

/// Hyperparameter names as they appear in configs and trial records.
pub mod hp {
    pub const LR: &str = "lr";
    pub const MOMENTUM: &str = "momentum";
    pub const WEIGHT_DECAY: &str = "weight_decay";
    pub const POLY_POWER: &str = "poly_power";
    pub const BETA1: &str = "beta1";
    pub const BETA2: &str = "beta2";
    pub const EPS: &str = "eps";
    pub const LR_EFF: &str = "lr_eff";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OptimizerKind {
    SgdLr,
    SgdM,
    SgdMc,
    SgdMcwc,
    SgdMcd,
    SgdMw,
    Adagrad,
    AdamLr,
    Adam,
    AdamWcd,
    SgdLrEff,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 11] = [
        OptimizerKind::SgdLr,
        OptimizerKind::SgdM,
        OptimizerKind::SgdMc,
        OptimizerKind::SgdMcwc,
        OptimizerKind::SgdMcd,
        OptimizerKind::SgdMw,
        OptimizerKind::Adagrad,
        OptimizerKind::AdamLr,
        OptimizerKind::Adam,
        OptimizerKind::AdamWcd,
        OptimizerKind::SgdLrEff,
    ];

    pub fn id(self) -> &'static str {
        match self {
            OptimizerKind::SgdLr => "sgd-lr",
            OptimizerKind::SgdM => "sgd-m",
            OptimizerKind::SgdMc => "sgd-mc",
            OptimizerKind::SgdMcwc => "sgd-mcwc",
            OptimizerKind::SgdMcd => "sgd-mcd",
            OptimizerKind::SgdMw => "sgd-mw",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::AdamLr => "adam-lr",
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdamWcd => "adam-wcd",
            OptimizerKind::SgdLrEff => "sgd-lreff",
        }
    }

    /// Tunable, fixed and derived hyperparameters of this variant.
    pub fn spec(self) -> OptimizerSpec {
        use hp::*;
        let (free, fixed, derived): (&[&str], &[(&str, f64)], &[&str]) = match self {
            OptimizerKind::SgdLr => (&[LR], &[(MOMENTUM, 0.0), (WEIGHT_DECAY, 0.0)], &[]),
            OptimizerKind::SgdM => (&[LR, MOMENTUM], &[(WEIGHT_DECAY, 0.0)], &[]),
            OptimizerKind::SgdMc => (&[LR], &[(MOMENTUM, 0.9), (WEIGHT_DECAY, 0.0)], &[]),
            OptimizerKind::SgdMcwc => (&[LR], &[(MOMENTUM, 0.9), (WEIGHT_DECAY, 1e-5)], &[]),
            OptimizerKind::SgdMcd => (
                &[LR, POLY_POWER],
                &[(MOMENTUM, 0.9), (WEIGHT_DECAY, 1e-5)],
                &[],
            ),
            OptimizerKind::SgdMw => (&[LR, MOMENTUM, WEIGHT_DECAY], &[], &[]),
            OptimizerKind::Adagrad => (&[LR], &[], &[]),
            OptimizerKind::AdamLr => (&[LR], &[(BETA1, 0.9), (BETA2, 0.999), (EPS, 1e-8)], &[]),
            OptimizerKind::Adam => (&[LR, BETA1, BETA2, EPS], &[], &[]),
            OptimizerKind::AdamWcd => (
                &[LR, POLY_POWER],
                &[(BETA1, 0.9), (BETA2, 0.999), (EPS, 1e-8)],
                &[],
            ),
            OptimizerKind::SgdLrEff => (&[LR, LR_EFF, WEIGHT_DECAY], &[], &[MOMENTUM]),
        };
        OptimizerSpec {
            kind: self,
            free,
            fixed,
            derived,
        }
    }

    fn family(self) -> Family {
        match self {
            OptimizerKind::Adagrad => Family::Adagrad,
            OptimizerKind::AdamLr | OptimizerKind::Adam | OptimizerKind::AdamWcd => Family::Adam,
            _ => Family::Sgd,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::UnknownOptimizer(s.to_string()))
    }
}

impl TryFrom<String> for OptimizerKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OptimizerKind> for String {
    fn from(k: OptimizerKind) -> String {
        k.id().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Sgd,
    Adagrad,
    Adam,
}

/// Partition of an optimizer's hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub free: &'static [&'static str],
    pub fixed: &'static [(&'static str, f64)],
    /// Computed from the free ones when sampling, e.g. momentum from the
    /// effective learning rate.
    pub derived: &'static [&'static str],
}

impl OptimizerSpec {
    /// Every key a complete config for this optimizer carries, sorted.
    pub fn declared(&self) -> Vec<&'static str> {
        let mut names: Vec<&'static str> = self
            .free
            .iter()
            .copied()
            .chain(self.fixed.iter().map(|(n, _)| *n))
            .chain(self.derived.iter().copied())
            .collect();
        names.sort_unstable();
        names
    }

    pub fn uses_poly_decay(&self) -> bool {
        self.free.contains(&hp::POLY_POWER)
    }

    /// Checks keys and permissible ranges of a complete config.
    pub fn validate(&self, config: &HyperparameterConfig) -> Result<()> {
        let declared = self.declared();
        let keys: Vec<&str> = config.keys().collect();
        if keys != declared {
            return Err(Error::InvalidArgument(format!(
                "{} expects hyperparameters {declared:?}, got {keys:?}",
                self.kind
            )));
        }
        for (name, value) in config.iter() {
            let ok = value.is_finite()
                && match name {
                    hp::LR | hp::LR_EFF | hp::EPS | hp::POLY_POWER => value > 0.0,
                    hp::MOMENTUM => (0.0..=1.0).contains(&value),
                    hp::WEIGHT_DECAY => (0.0..1.0).contains(&value),
                    hp::BETA1 | hp::BETA2 => (0.0..1.0).contains(&value),
                    _ => true,
                };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {value} outside its permissible range"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Sgd {
        momentum: f64,
        weight_decay: f64,
        velocity: Vec<f64>,
    },
    Adagrad {
        accumulator: Vec<f64>,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
        state: AdamState,
    },
}

/// An update rule bound to one hyperparameter configuration, with its
/// private state buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    rule: Rule,
    base_lr: f64,
    poly_power: Option<f64>,
    total_steps: u64,
    steps_taken: u64,
}

impl Optimizer {
    /// `total_steps` is the planned training length the poly schedule
    /// decays over.
    pub fn new(
        kind: OptimizerKind,
        config: &HyperparameterConfig,
        dim: usize,
        total_steps: u64,
    ) -> Result<Self> {
        let spec = kind.spec();
        spec.validate(config)?;
        let rule = match kind.family() {
            Family::Sgd => Rule::Sgd {
                momentum: config.require(hp::MOMENTUM)?,
                weight_decay: config.require(hp::WEIGHT_DECAY)?,
                velocity: vec![0.0; dim],
            },
            Family::Adagrad => Rule::Adagrad {
                accumulator: vec![0.0; dim],
            },
            Family::Adam => Rule::Adam {
                beta1: config.require(hp::BETA1)?,
                beta2: config.require(hp::BETA2)?,
                eps: config.require(hp::EPS)?,
                state: AdamState::new(dim),
            },
        };
        let poly_power = if spec.uses_poly_decay() {
            Some(config.require(hp::POLY_POWER)?)
        } else {
            None
        };
        Ok(Self {
            rule,
            base_lr: config.require(hp::LR)?,
            poly_power,
            total_steps,
            steps_taken: 0,
        })
    }

    /// Learning rate for the next step.
    pub fn current_lr(&self) -> f64 {
        match self.poly_power {
            Some(p) => poly_decay(self.base_lr, self.steps_taken, self.total_steps, p),
            None => self.base_lr,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::LengthMismatch {
                expected: params.len(),
                actual: grads.len(),
            });
        }
        let lr = self.current_lr();
        match &mut self.rule {
            Rule::Sgd {
                momentum,
                weight_decay,
                velocity,
            } => sgd_step(params, grads, velocity, lr, *momentum, *weight_decay)?,
            Rule::Adagrad { accumulator } => {
                adagrad_step(params, grads, accumulator, lr, DEFAULT_ADAGRAD_EPS)?
            }
            Rule::Adam {
                beta1,
                beta2,
                eps,
                state,
            } => adam_step(params, grads, state, lr, *beta1, *beta2, *eps)?,
        }
        self.steps_taken += 1;
        if let Some(i) = params.iter().position(|w| !w.is_finite()) {
            return Err(Error::Diverged(format!("parameter {i} became non-finite")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(pairs: &[(&str, f64)]) -> HyperparameterConfig {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn ids_round_trip() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.id().parse::<OptimizerKind>().unwrap(), k);
        }
        assert_eq!(
            "adamx".parse::<OptimizerKind>(),
            Err(Error::UnknownOptimizer("adamx".into()))
        );
    }

    #[test]
    fn roster_partitions() {
        let s = OptimizerKind::SgdMcwc.spec();
        assert_eq!(s.free, &[hp::LR]);
        assert_eq!(s.fixed, &[(hp::MOMENTUM, 0.9), (hp::WEIGHT_DECAY, 1e-5)]);
        let s = OptimizerKind::AdamLr.spec();
        assert_eq!(s.fixed, &[(hp::BETA1, 0.9), (hp::BETA2, 0.999), (hp::EPS, 1e-8)]);
        assert!(OptimizerKind::SgdMcd.spec().uses_poly_decay());
        assert!(OptimizerKind::AdamWcd.spec().uses_poly_decay());
        assert!(!OptimizerKind::Adam.spec().uses_poly_decay());
        assert_eq!(
            OptimizerKind::SgdLrEff.spec().declared(),
            vec![hp::LR, hp::LR_EFF, hp::MOMENTUM, hp::WEIGHT_DECAY]
        );
    }

    #[test]
    fn validate_rejects_wrong_keys_and_ranges() {
        let spec = OptimizerKind::SgdLr.spec();
        assert!(spec
            .validate(&config(&[("lr", 0.1), ("momentum", 0.0), ("weight_decay", 0.0)]))
            .is_ok());
        assert!(spec.validate(&config(&[("lr", 0.1)])).is_err());
        assert!(spec
            .validate(&config(&[("lr", -0.1), ("momentum", 0.0), ("weight_decay", 0.0)]))
            .is_err());
        let spec = OptimizerKind::Adam.spec();
        assert!(spec
            .validate(&config(&[("lr", 0.1), ("beta1", 1.0), ("beta2", 0.9), ("eps", 1e-8)]))
            .is_err());
    }

    #[test]
    fn poly_schedule_feeds_steps() {
        let cfg = config(&[
            ("lr", 1.0),
            ("poly_power", 1.0),
            ("beta1", 0.9),
            ("beta2", 0.999),
            ("eps", 1e-8),
        ]);
        let mut opt = Optimizer::new(OptimizerKind::AdamWcd, &cfg, 1, 4).unwrap();
        let mut w = [0.0];
        let mut lrs = vec![];
        for _ in 0..5 {
            lrs.push(opt.current_lr());
            opt.step(&mut w, &[1.0]).unwrap();
        }
        assert_eq!(lrs, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn steppers_are_deterministic() {
        for kind in [OptimizerKind::SgdMw, OptimizerKind::Adagrad, OptimizerKind::Adam] {
            let cfg: HyperparameterConfig = kind
                .spec()
                .declared()
                .into_iter()
                .map(|n| (n.to_string(), if n == "lr" { 0.05 } else { 0.5 }))
                .collect();
            let run = || {
                let mut opt = Optimizer::new(kind, &cfg, 3, 10).unwrap();
                let mut w = vec![1.0, -2.0, 0.5];
                for i in 0..10 {
                    let g: Vec<f64> = w.iter().map(|x| x * (i as f64 + 1.0)).collect();
                    opt.step(&mut w, &g).unwrap();
                }
                w
            };
            let (a, b) = (run(), run());
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn descent_on_quadratic_is_monotone_below_inverse_curvature() {
        // f(w) = ½ Σ c_i w_i², L = max c_i = 4
        let curv = [0.5, 1.0, 4.0];
        let cfg = config(&[("lr", 0.2), ("momentum", 0.0), ("weight_decay", 0.0)]);
        let mut opt = Optimizer::new(OptimizerKind::SgdLr, &cfg, 3, 100).unwrap();
        let mut w = vec![1.0, -1.0, 2.0];
        let loss = |w: &[f64]| 0.5 * w.iter().zip(&curv).map(|(x, c)| c * x * x).sum::<f64>();
        let mut prev = loss(&w);
        for _ in 0..100 {
            let g: Vec<f64> = w.iter().zip(&curv).map(|(x, c)| c * x).collect();
            opt.step(&mut w, &g).unwrap();
            let cur = loss(&w);
            assert!(cur <= prev);
            prev = cur;
        }
    }
}
