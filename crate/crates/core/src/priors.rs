//! Hyperparameter priors. An optimizer is its update rule together with
//! the distribution its hyperparameters are searched from.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{hp, OptimizerKind};
use crate::types::{Direction, HyperparameterConfig, Trial};

/// Lower bound applied to a fitted log-normal scale.
pub const SIGMA_FLOOR: f64 = 0.01;
/// Width given to a fitted interval whose samples were all equal.
pub const DEGENERATE_WIDTH: f64 = 0.01;

/// Sampling distribution of one hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    /// `ln x ~ N(mu, sigma²)`.
    LogNormal { mu: f64, sigma: f64 },
    /// `x = 10^c`, `c ~ U[low, high]`.
    LogUniform10 { low: f64, high: f64 },
    Uniform { low: f64, high: f64 },
    /// `x = 1 − 10^c`, `c ~ U[low, high]`.
    OneMinusLogUniform10 { low: f64, high: f64 },
    Fixed { value: f64 },
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Prior::LogUniform10 { low, high }
            | Prior::Uniform { low, high }
            | Prior::OneMinusLogUniform10 { low, high } => {
                low.is_finite() && high.is_finite() && low < high
            }
            Prior::Fixed { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid prior {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = |rng: &mut R, low: f64, high: f64| low + (high - low) * rng.random::<f64>();
        match *self {
            Prior::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Prior::LogUniform10 { low, high } => 10f64.powf(unit(rng, low, high)),
            Prior::Uniform { low, high } => unit(rng, low, high),
            Prior::OneMinusLogUniform10 { low, high } => 1.0 - 10f64.powf(unit(rng, low, high)),
            Prior::Fixed { value } => value,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Prior::Fixed { .. })
    }
}

/// Per-hyperparameter priors for one optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub optimizer: OptimizerKind,
    pub hyperparameters: BTreeMap<String, Prior>,
}

impl PriorSpec {
    /// Checks that exactly the optimizer's sampled hyperparameters (free and
    /// fixed, not derived) have valid priors.
    pub fn new(optimizer: OptimizerKind, hyperparameters: BTreeMap<String, Prior>) -> Result<Self> {
        let spec = Self {
            optimizer,
            hyperparameters,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let opt = self.optimizer.spec();
        let mut expected: Vec<&str> = opt
            .free
            .iter()
            .copied()
            .chain(opt.fixed.iter().map(|(n, _)| *n))
            .collect();
        expected.sort_unstable();
        let keys: Vec<&str> = self.hyperparameters.keys().map(String::as_str).collect();
        if keys != expected {
            return Err(Error::Mismatch(format!(
                "prior for {} covers {keys:?}, expected {expected:?}",
                self.optimizer
            )));
        }
        self.hyperparameters.values().try_for_each(Prior::validate)
    }

    pub fn get(&self, name: &str) -> Option<&Prior> {
        self.hyperparameters.get(name)
    }
}

/// One independent draw per hyperparameter. When the prior covers an
/// effective learning rate, momentum is derived from it.
pub fn sample<R: Rng + ?Sized>(spec: &PriorSpec, rng: &mut R) -> HyperparameterConfig {
    let mut config = HyperparameterConfig::new();
    for (name, prior) in &spec.hyperparameters {
        config.insert(name.clone(), prior.sample(rng));
    }
    if let (Some(lr), Some(lr_eff)) = (config.get(hp::LR), config.get(hp::LR_EFF)) {
        let (_, momentum) = effective_lr_config(lr, lr_eff).expect("log-normal draws are positive");
        config.insert(hp::MOMENTUM, momentum);
    }
    config
}

/// Momentum implied by a learning rate and an effective learning rate
/// `γ_eff = γ / (1 − μ)`, clamped at zero.
pub fn effective_lr_config(lr: f64, lr_eff: f64) -> Result<(f64, f64)> {
    if !(lr > 0.0 && lr_eff > 0.0 && lr.is_finite() && lr_eff.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rates must be positive, got {lr} and {lr_eff}"
        )));
    }
    Ok((lr, (1.0 - lr / lr_eff).max(0.0)))
}

const SGD_LR: Prior = Prior::LogNormal {
    mu: -2.09,
    sigma: 1.312,
};
/// Effective learning rate of SGD: the SGD learning-rate prior shifted by
/// `E[−ln(1 − μ)] = 1` for `μ ~ U[0, 1]`.
const SGD_LR_EFF: Prior = Prior::LogNormal {
    mu: -1.09,
    sigma: 1.312,
};
const SGD_MOMENTUM: Prior = Prior::Uniform { low: 0.0, high: 1.0 };
const SGD_WEIGHT_DECAY: Prior = Prior::LogUniform10 {
    low: -5.0,
    high: -1.0,
};
const POLY_POWER: Prior = Prior::Uniform { low: 0.5, high: 5.0 };
const ADAGRAD_LR: Prior = Prior::LogNormal {
    mu: -2.004,
    sigma: 1.20,
};
const ADAM_LR: Prior = Prior::LogNormal {
    mu: -2.69,
    sigma: 1.42,
};
const ADAM_BETA: Prior = Prior::OneMinusLogUniform10 {
    low: -5.0,
    high: -1.0,
};
const ADAM_EPS: Prior = Prior::LogUniform10 {
    low: -8.0,
    high: 0.0,
};

/// Cross-task default priors; fixed hyperparameters get point masses.
pub fn default_priors(optimizer: OptimizerKind) -> PriorSpec {
    let spec = optimizer.spec();
    let adam_like = matches!(
        optimizer,
        OptimizerKind::AdamLr | OptimizerKind::Adam | OptimizerKind::AdamWcd
    );
    let mut map = BTreeMap::new();
    for &name in spec.free {
        let prior = match name {
            hp::LR if adam_like => ADAM_LR,
            hp::LR if optimizer == OptimizerKind::Adagrad => ADAGRAD_LR,
            hp::LR => SGD_LR,
            hp::LR_EFF => SGD_LR_EFF,
            hp::MOMENTUM => SGD_MOMENTUM,
            hp::WEIGHT_DECAY => SGD_WEIGHT_DECAY,
            hp::POLY_POWER => POLY_POWER,
            hp::BETA1 | hp::BETA2 => ADAM_BETA,
            hp::EPS => ADAM_EPS,
            other => unreachable!("no default prior for {other}"),
        };
        map.insert(name.to_string(), prior);
    }
    for &(name, value) in spec.fixed {
        map.insert(name.to_string(), Prior::Fixed { value });
    }
    PriorSpec::new(optimizer, map).expect("default priors are consistent with the roster")
}

/// Parses an optimizer id and returns its default priors.
pub fn default_priors_for(optimizer_id: &str) -> Result<PriorSpec> {
    Ok(default_priors(optimizer_id.parse()?))
}

/// Result of [`calibrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub spec: PriorSpec,
    pub retention: f64,
    /// Retained trial count per task.
    pub retained: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl Calibration {
    pub fn retained_total(&self) -> usize {
        self.retained.values().sum()
    }
}

/// Whether `objective` is within `retention` of `best`: at most
/// `best + retention·|best|` for losses, at least `best − retention·|best|`
/// for accuracies.
pub fn within_retention(objective: f64, best: f64, retention: f64, direction: Direction) -> bool {
    let slack = retention * best.abs();
    match direction {
        Direction::Minimize => objective <= best + slack,
        Direction::Maximize => objective >= best - slack,
    }
}

/// Refits the non-fixed priors of `template` by maximum likelihood on the
/// configurations that came within `retention` of their task's best result.
/// The poly-decay exponent keeps its template prior.
pub fn calibrate(template: &PriorSpec, trials: &[Trial], retention: f64) -> Result<Calibration> {
    if !(retention.is_finite() && retention >= 0.0) {
        return Err(Error::InvalidArgument(format!("retention {retention}")));
    }
    if let Some(t) = trials.iter().find(|t| t.optimizer_id != template.optimizer.id()) {
        return Err(Error::Mismatch(format!(
            "trial of {} in calibration of {}",
            t.optimizer_id, template.optimizer
        )));
    }
    let mut by_task: BTreeMap<&str, Vec<&Trial>> = BTreeMap::new();
    for t in trials.iter().filter(|t| t.is_usable()) {
        by_task.entry(t.task_id.as_str()).or_default().push(t);
    }
    let mut retained_configs: Vec<&HyperparameterConfig> = Vec::new();
    let mut retained = BTreeMap::new();
    for (task, group) in &by_task {
        let direction = group[0].direction;
        let best = group
            .iter()
            .map(|t| t.objective)
            .reduce(|a, b| direction.best(a, b))
            .expect("groups are nonempty");
        let kept: Vec<&HyperparameterConfig> = group
            .iter()
            .filter(|t| within_retention(t.objective, best, retention, direction))
            .map(|t| &t.config)
            .collect();
        retained.insert(task.to_string(), kept.len());
        retained_configs.extend(kept);
    }

    let mut warnings = Vec::new();
    let mut fitted = BTreeMap::new();
    for (name, prior) in &template.hyperparameters {
        if prior.is_fixed() || name == hp::POLY_POWER {
            fitted.insert(name.clone(), *prior);
            continue;
        }
        let mut values: Vec<f64> = retained_configs.iter().filter_map(|c| c.get(name)).collect();
        if values.len() < 2 {
            return Err(Error::Calibration(format!(
                "{} retained samples for {name}; need at least 2",
                values.len()
            )));
        }
        values.sort_by(f64::total_cmp);
        let (prior, warning) = fit_family(prior, &values)
            .map_err(|e| Error::Calibration(format!("{name}: {e}")))?;
        if let Some(w) = warning {
            warnings.push(format!("{name}: {w}"));
        }
        fitted.insert(name.clone(), prior);
    }
    Ok(Calibration {
        spec: PriorSpec::new(template.optimizer, fitted)?,
        retention,
        retained,
        warnings,
    })
}

/// Maximum-likelihood fit of the template's family to `values`.
pub fn fit_family(template: &Prior, values: &[f64]) -> Result<(Prior, Option<String>)> {
    let positive = || {
        values
            .iter()
            .find(|&&v| !(v > 0.0))
            .map_or(Ok(()), |v| Err(Error::InvalidArgument(format!("non-positive value {v}"))))
    };
    match *template {
        Prior::LogNormal { .. } => {
            positive()?;
            let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
            Ok(fit_log_normal(&logs))
        }
        Prior::LogUniform10 { .. } => {
            positive()?;
            let (low, high, w) = fit_interval(values.iter().map(|v| v.log10()), None);
            Ok((Prior::LogUniform10 { low, high }, w))
        }
        Prior::Uniform {
            low: t_low,
            high: t_high,
        } => {
            let (low, high, w) = fit_interval(values.iter().copied(), Some((t_low, t_high)));
            Ok((Prior::Uniform { low, high }, w))
        }
        Prior::OneMinusLogUniform10 { .. } => {
            if let Some(v) = values.iter().find(|&&v| !(v < 1.0)) {
                return Err(Error::InvalidArgument(format!("value {v} not below 1")));
            }
            let (low, high, w) = fit_interval(values.iter().map(|v| (1.0 - v).log10()), None);
            Ok((Prior::OneMinusLogUniform10 { low, high }, w))
        }
        Prior::Fixed { value } => Ok((Prior::Fixed { value }, None)),
    }
}

/// Mean and population standard deviation of log-values.
fn fit_log_normal(logs: &[f64]) -> (Prior, Option<String>) {
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let sigma = (logs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n).sqrt();
    if sigma < SIGMA_FLOOR {
        (
            Prior::LogNormal {
                mu,
                sigma: SIGMA_FLOOR,
            },
            Some(format!("fitted sigma {sigma:e} floored to {SIGMA_FLOOR}")),
        )
    } else {
        (Prior::LogNormal { mu, sigma }, None)
    }
}

/// Sample range; a zero-width range is widened around its value and kept
/// inside `bounds` when given.
fn fit_interval(
    values: impl Iterator<Item = f64>,
    bounds: Option<(f64, f64)>,
) -> (f64, f64, Option<String>) {
    let (low, high) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if low < high {
        return (low, high, None);
    }
    let half = DEGENERATE_WIDTH / 2.0;
    let (mut lo, mut hi) = (low - half, high + half);
    if let Some((b_lo, b_hi)) = bounds {
        lo = lo.max(b_lo);
        hi = hi.min(b_hi);
    }
    (lo, hi, Some(format!("all samples equal {low}; widened to [{lo}, {hi}]")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn table_values() {
        assert_eq!(
            default_priors(OptimizerKind::SgdMw).get(hp::LR),
            Some(&Prior::LogNormal {
                mu: -2.09,
                sigma: 1.312
            })
        );
        assert_eq!(
            default_priors(OptimizerKind::Adam).get(hp::EPS),
            Some(&Prior::LogUniform10 {
                low: -8.0,
                high: 0.0
            })
        );
        assert_eq!(
            default_priors(OptimizerKind::AdamLr).get(hp::BETA1),
            Some(&Prior::Fixed { value: 0.9 })
        );
        assert_eq!(
            default_priors(OptimizerKind::Adagrad).get(hp::LR),
            Some(&Prior::LogNormal {
                mu: -2.004,
                sigma: 1.20
            })
        );
        assert_eq!(
            default_priors(OptimizerKind::SgdMcd).get(hp::POLY_POWER),
            Some(&Prior::Uniform { low: 0.5, high: 5.0 })
        );
        assert!(default_priors_for("adamx").is_err());
    }

    #[test]
    fn samples_stay_in_permissible_sets() {
        let mut rng = stream(99);
        for kind in OptimizerKind::ALL {
            let spec = default_priors(kind);
            for _ in 0..10_000 {
                let cfg = sample(&spec, &mut rng);
                kind.spec().validate(&cfg).unwrap();
            }
        }
    }

    #[test]
    fn family_ranges() {
        let mut rng = stream(3);
        for _ in 0..100_000 {
            let b = ADAM_BETA.sample(&mut rng);
            assert!((0.9..=1.0 - 1e-5).contains(&b), "{b}");
            assert!(ADAM_LR.sample(&mut rng) > 0.0);
            assert_eq!(Prior::Fixed { value: 0.9 }.sample(&mut rng), 0.9);
        }
    }

    #[test]
    fn effective_lr() {
        let (_, mu) = effective_lr_config(0.1, 1.0).unwrap();
        assert_abs_diff_eq!(mu, 0.9, epsilon = 1e-15);
        assert_eq!(effective_lr_config(1.0, 0.5).unwrap(), (1.0, 0.0));
        assert_eq!(effective_lr_config(0.3, 0.3).unwrap(), (0.3, 0.0));
        assert!(effective_lr_config(0.0, 1.0).is_err());
        assert!(effective_lr_config(1.0, -1.0).is_err());
    }

    #[test]
    fn effective_lr_prior_derives_momentum() {
        let spec = default_priors(OptimizerKind::SgdLrEff);
        let mut rng = stream(5);
        for _ in 0..1000 {
            let cfg = sample(&spec, &mut rng);
            let (_, mu) = effective_lr_config(cfg.get("lr").unwrap(), cfg.get("lr_eff").unwrap()).unwrap();
            assert_eq!(cfg.get("momentum"), Some(mu));
        }
    }

    #[test]
    fn log_normal_round_trip() {
        let truth = Prior::LogNormal {
            mu: -2.69,
            sigma: 1.42,
        };
        let mut rng = stream(2024);
        let draws: Vec<f64> = (0..10_000).map(|_| truth.sample(&mut rng)).collect();
        let (fit, warning) = fit_family(&truth, &draws).unwrap();
        assert!(warning.is_none());
        let Prior::LogNormal { mu, sigma } = fit else { panic!() };
        assert!((mu + 2.69).abs() < 0.05, "{mu}");
        assert!((sigma - 1.42).abs() < 0.05, "{sigma}");
    }

    #[test]
    fn interval_families_round_trip() {
        let mut rng = stream(8);
        for truth in [ADAM_BETA, ADAM_EPS, SGD_MOMENTUM, SGD_WEIGHT_DECAY] {
            let draws: Vec<f64> = (0..20_000).map(|_| truth.sample(&mut rng)).collect();
            let (fit, _) = fit_family(&truth, &draws).unwrap();
            let (Prior::LogUniform10 { low, high }
            | Prior::Uniform { low, high }
            | Prior::OneMinusLogUniform10 { low, high }) = fit
            else {
                panic!()
            };
            let (Prior::LogUniform10 { low: tl, high: th }
            | Prior::Uniform { low: tl, high: th }
            | Prior::OneMinusLogUniform10 { low: tl, high: th }) = truth
            else {
                panic!()
            };
            assert!(low >= tl - 1e-9 && (low - tl).abs() < 0.01 * (th - tl));
            assert!(high <= th + 1e-9 && (high - th).abs() < 0.01 * (th - tl));
        }
    }

    #[test]
    fn degenerate_log_normal_is_floored() {
        let v = [(-2f64).exp(); 3];
        let (fit, warning) = fit_family(&ADAM_LR, &v).unwrap();
        let Prior::LogNormal { mu, sigma } = fit else { panic!() };
        assert_abs_diff_eq!(mu, -2.0, epsilon = 1e-12);
        assert_eq!(sigma, SIGMA_FLOOR);
        assert!(warning.is_some());
        assert!(fit_family(&ADAM_LR, &[0.1, 0.0]).is_err());
    }

    fn trial(task: &str, lr: f64, objective: f64, direction: Direction) -> Trial {
        let mut config = HyperparameterConfig::new();
        config.insert("lr", lr);
        Trial {
            optimizer_id: "adagrad".into(),
            task_id: task.into(),
            seed: 0,
            config,
            objective,
            direction,
            update_steps: 1,
            epochs_run: 1,
            diverged: false,
        }
    }

    #[test]
    fn retention_threshold() {
        assert!(within_retention(1.2, 1.0, 0.2, Direction::Minimize));
        assert!(!within_retention(1.2000001, 1.0, 0.2, Direction::Minimize));
        assert!(within_retention(0.8, 1.0, 0.2, Direction::Maximize));
        assert!(!within_retention(0.79, 1.0, 0.2, Direction::Maximize));
        assert!(within_retention(0.0, 0.9, 1.0, Direction::Maximize));
    }

    #[test]
    fn calibrate_is_per_task_and_pooled() {
        let template = default_priors(OptimizerKind::Adagrad);
        let trials = vec![
            trial("a", 0.1, 1.0, Direction::Minimize),
            trial("a", 0.2, 1.1, Direction::Minimize),
            trial("a", 9.0, 5.0, Direction::Minimize),
            trial("b", 0.4, 0.9, Direction::Maximize),
            trial("b", 9.0, 0.1, Direction::Maximize),
        ];
        let cal = calibrate(&template, &trials, 0.2).unwrap();
        assert_eq!(cal.retained.get("a"), Some(&2));
        assert_eq!(cal.retained.get("b"), Some(&1));
        let Prior::LogNormal { mu, .. } = cal.spec.get("lr").unwrap() else { panic!() };
        let want = (0.1f64.ln() + 0.2f64.ln() + 0.4f64.ln()) / 3.0;
        assert_abs_diff_eq!(*mu, want, epsilon = 1e-12);

        let mut shuffled = trials.clone();
        shuffled.reverse();
        assert_eq!(calibrate(&template, &shuffled, 0.2).unwrap(), cal);
    }

    #[test]
    fn calibrate_fails_without_samples() {
        let template = default_priors(OptimizerKind::Adagrad);
        let mut t = trial("a", 0.1, 1.0, Direction::Minimize);
        assert!(matches!(calibrate(&template, &[t.clone()], 0.2), Err(Error::Calibration(_))));
        t.diverged = true;
        assert!(matches!(
            calibrate(&template, &[t.clone(), t.clone(), t], 0.2),
            Err(Error::Calibration(_))
        ));
    }
}
