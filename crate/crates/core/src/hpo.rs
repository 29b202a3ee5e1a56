//! Random search, library precomputation and the simulation of searches
//! under a budget of optimizer update steps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{resample_index, sample_summary};
use crate::optim::{EarlyStopping, Optimizer, OptimizerKind};
use crate::priors::{sample, PriorSpec};
use crate::rng::{child_stream, derive_seed};
use crate::tasks::TaskInstance;
use crate::types::{BudgetCurve, Direction, HyperparameterConfig, Trial, TrialLibrary};

/// Default number of trials per library.
pub const DEFAULT_LIBRARY_SIZE: usize = 100;

/// Outcome of training one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Validation objective of the kept checkpoint; NaN when diverged.
    pub objective: f64,
    /// Epoch of the kept checkpoint, 0 for the untrained parameters.
    pub best_epoch: u64,
    pub update_steps: u64,
    pub epochs_run: u64,
    pub diverged: bool,
    pub val_losses: Vec<f64>,
}

/// Trains `config` on `task` with early stopping on the validation loss.
/// The parameters kept are those with the lowest validation loss seen,
/// the untrained ones included. A non-finite loss, gradient or parameter
/// marks the run as diverged.
pub fn train(
    task: &TaskInstance,
    kind: OptimizerKind,
    config: &HyperparameterConfig,
    trial_seed: u64,
) -> Result<TrainOutcome> {
    let mut params = task.init_params(trial_seed);
    let mut optimizer = Optimizer::new(kind, config, params.len(), task.total_steps())?;
    let stopping = EarlyStopping::new(task.max_epochs());
    let mut val_losses = Vec::new();
    let mut best = task.validation(&params)?;
    let mut best_epoch = 0;
    let diverged = |optimizer: &Optimizer, val_losses: Vec<f64>| TrainOutcome {
        objective: f64::NAN,
        best_epoch: 0,
        update_steps: optimizer.steps_taken(),
        epochs_run: val_losses.len() as u64,
        diverged: true,
        val_losses,
    };
    for epoch in 0..task.max_epochs() {
        for batch in 0..task.batches_per_epoch() {
            let (loss, grads) = task.minibatch_loss_and_grad(&params, epoch, batch)?;
            if !loss.is_finite() {
                return Ok(diverged(&optimizer, val_losses));
            }
            match optimizer.step(&mut params, &grads) {
                Ok(()) => {}
                Err(Error::Diverged(_) | Error::NonFinite(_)) => {
                    return Ok(diverged(&optimizer, val_losses))
                }
                Err(e) => return Err(e),
            }
        }
        let v = task.validation(&params)?;
        if !(v.loss.is_finite() && v.objective.is_finite()) {
            return Ok(diverged(&optimizer, val_losses));
        }
        val_losses.push(v.loss);
        if v.loss < best.loss {
            best = v;
            best_epoch = val_losses.len() as u64;
        }
        if stopping.should_stop(&val_losses) {
            break;
        }
    }
    Ok(TrainOutcome {
        objective: best.objective,
        best_epoch,
        update_steps: optimizer.steps_taken(),
        epochs_run: val_losses.len() as u64,
        diverged: false,
        val_losses,
    })
}

/// Seed of trial `index` and the two streams it uses.
pub fn trial_seeds(master_seed: u64, index: usize) -> (u64, u64) {
    let trial = derive_seed(master_seed, index as u64);
    (derive_seed(trial, 0), derive_seed(trial, 1))
}

/// One random-search run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRun {
    pub optimizer: OptimizerKind,
    pub prior: PriorSpec,
    pub task_id: String,
    pub budget: usize,
    pub master_seed: u64,
    pub trials: Vec<Trial>,
}

/// Samples and trains `budget` configurations. Trial `i` depends only on
/// `(master_seed, i)`; trials run in parallel and are returned in index
/// order.
pub fn random_search(
    kind: OptimizerKind,
    prior: &PriorSpec,
    task: &TaskInstance,
    budget: usize,
    master_seed: u64,
) -> Result<SearchRun> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if prior.optimizer != kind {
        return Err(Error::Mismatch(format!(
            "prior for {} used with optimizer {kind}",
            prior.optimizer
        )));
    }
    prior.validate()?;
    let trials = (0..budget)
        .into_par_iter()
        .map(|i| run_trial(kind, prior, task, master_seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchRun {
        optimizer: kind,
        prior: prior.clone(),
        task_id: task.id().to_string(),
        budget,
        master_seed,
        trials,
    })
}

fn run_trial(
    kind: OptimizerKind,
    prior: &PriorSpec,
    task: &TaskInstance,
    master_seed: u64,
    index: usize,
) -> Result<Trial> {
    let (prior_seed, train_seed) = trial_seeds(master_seed, index);
    let config = sample(prior, &mut crate::rng::stream(prior_seed));
    let outcome = train(task, kind, &config, train_seed)?;
    Ok(Trial {
        optimizer_id: kind.id().to_string(),
        task_id: task.id().to_string(),
        seed: train_seed,
        config,
        objective: outcome.objective,
        direction: task.direction(),
        update_steps: outcome.update_steps,
        epochs_run: outcome.epochs_run,
        diverged: outcome.diverged,
    })
}

/// A library of `size` random-search trials.
pub fn precompute_library(
    kind: OptimizerKind,
    prior: &PriorSpec,
    task: &TaskInstance,
    size: usize,
    master_seed: u64,
) -> Result<TrialLibrary> {
    TrialLibrary::new(random_search(kind, prior, task, size, master_seed)?.trials)
}

/// Expected incumbent of one optimizer over step-budget boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCurve {
    pub optimizer_id: String,
    /// `budgets` holds the step count at the end of each interval.
    pub curve: BudgetCurve,
}

/// Interval boundaries `⌊total·k/intervals⌋` for `k = 1..=intervals`.
pub fn interval_boundaries(total: u64, intervals: usize) -> Vec<u64> {
    (1..=intervals as u64)
        .map(|k| ((total as u128 * k as u128) / intervals as u128) as u64)
        .collect()
}

/// Simulates `repetitions` searches per optimizer under a shared budget of
/// update steps: the smallest total any library spent on its trials. Each
/// run draws trials with replacement and accumulates their steps; the
/// incumbent at a boundary covers the trials finished by then, and is the
/// library's worst sentinel before the first one finishes. Repetition `r`
/// uses the same stream for every optimizer.
pub fn time_budget_curve(
    libraries: &[&TrialLibrary],
    intervals: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<TimeCurve>> {
    let first = libraries.first().ok_or(Error::EmptyTrials)?;
    if intervals == 0 {
        return Err(Error::InvalidArgument("intervals must be positive".into()));
    }
    if repetitions == 0 {
        return Err(Error::ZeroRepetitions);
    }
    for lib in libraries {
        if lib.task_id() != first.task_id() || lib.direction() != first.direction() {
            return Err(Error::Mismatch(format!(
                "libraries for tasks {} and {}",
                first.task_id(),
                lib.task_id()
            )));
        }
    }
    let mut totals = Vec::with_capacity(libraries.len());
    for lib in libraries {
        totals.push(step_total(lib)?);
    }
    let total = totals.into_iter().min().expect("libraries are nonempty");
    let boundaries = interval_boundaries(total, intervals);
    libraries
        .iter()
        .map(|lib| {
            let curve = simulate_steps(lib, &boundaries, repetitions, seed)?;
            Ok(TimeCurve {
                optimizer_id: lib.optimizer_id().to_string(),
                curve,
            })
        })
        .collect()
}

fn step_total(library: &TrialLibrary) -> Result<u64> {
    if let Some(index) = library
        .trials()
        .iter()
        .position(|t| !t.diverged && t.update_steps == 0)
    {
        return Err(Error::MissingUpdateSteps { index });
    }
    let total: u64 = library.trials().iter().map(|t| t.update_steps).sum();
    if total == 0 {
        return Err(Error::MissingUpdateSteps { index: 0 });
    }
    Ok(total)
}

fn simulate_steps(
    library: &TrialLibrary,
    boundaries: &[u64],
    repetitions: usize,
    seed: u64,
) -> Result<BudgetCurve> {
    let direction = library.direction();
    let objectives = library.analysis_objectives()?;
    let sentinel = library.worst_sentinel()?;
    let steps: Vec<u64> = library.trials().iter().map(|t| t.update_steps).collect();
    let last = *boundaries.last().expect("at least one interval");
    let runs: Vec<Vec<f64>> = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rng = child_stream(seed, r as u64);
            let mut out = Vec::with_capacity(boundaries.len());
            let (mut elapsed, mut incumbent) = (0u64, sentinel);
            let mut next = 0;
            while next < boundaries.len() {
                let i = resample_index(&mut rng, objectives.len());
                let finish = elapsed + steps[i];
                while next < boundaries.len() && boundaries[next] < finish {
                    out.push(incumbent);
                    next += 1;
                }
                if finish > last {
                    break;
                }
                elapsed = finish;
                incumbent = direction.best(incumbent, objectives[i]);
            }
            out
        })
        .collect();
    let mut curve = BudgetCurve {
        direction,
        budgets: Vec::with_capacity(boundaries.len()),
        mean: Vec::with_capacity(boundaries.len()),
        variance: Vec::with_capacity(boundaries.len()),
        quantiles: Vec::with_capacity(boundaries.len()),
    };
    for (k, &b) in boundaries.iter().enumerate() {
        let at: Vec<f64> = runs.iter().map(|run| run[k]).collect();
        let (mean, variance, q) = sample_summary(&at);
        curve.budgets.push(b as usize);
        curve.mean.push(mean);
        curve.variance.push(variance);
        curve.quantiles.push(q);
    }
    Ok(curve)
}

/// Best objective per run is never worse at a later boundary.
pub fn is_monotone(values: &[f64], direction: Direction) -> bool {
    values
        .windows(2)
        .all(|w| direction.best(w[0], w[1]) == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{bootstrap_curve, Sampling};
    use crate::priors::{default_priors, Prior};

    fn fixed_lr(kind: OptimizerKind, lr: f64) -> PriorSpec {
        let mut spec = default_priors(kind);
        spec.hyperparameters
            .insert("lr".into(), Prior::Fixed { value: lr });
        spec
    }

    fn with_steps(values: &[f64], steps: &[u64], direction: Direction) -> TrialLibrary {
        let lib = TrialLibrary::from_objectives("o", "t", direction, values).unwrap();
        let trials = lib
            .trials()
            .iter()
            .zip(steps)
            .map(|(t, &s)| Trial {
                update_steps: s,
                ..t.clone()
            })
            .collect();
        TrialLibrary::new(trials).unwrap()
    }

    #[test]
    fn fixed_prior_single_trial_is_deterministic() {
        let task = TaskInstance::quadratic(20, 1).unwrap();
        let prior = fixed_lr(OptimizerKind::SgdLr, 0.01);
        let a = random_search(OptimizerKind::SgdLr, &prior, &task, 1, 9).unwrap();
        let b = random_search(OptimizerKind::SgdLr, &prior, &task, 1, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 1);
        assert!(!a.trials[0].diverged);
        assert!(a.trials[0].objective < task.evaluate(&task.init_params(0)).unwrap());
    }

    #[test]
    fn mismatched_prior_is_rejected() {
        let task = TaskInstance::quadratic(10, 1).unwrap();
        let prior = default_priors(OptimizerKind::Adam);
        assert!(matches!(
            random_search(OptimizerKind::SgdLr, &prior, &task, 3, 0),
            Err(Error::Mismatch(_))
        ));
        assert_eq!(
            random_search(OptimizerKind::Adam, &prior, &task, 0, 0),
            Err(Error::ZeroBudget)
        );
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let task = TaskInstance::quadratic(10, 1).unwrap();
        let mut cfg = HyperparameterConfig::new();
        cfg.insert("lr", 1e3);
        cfg.insert("momentum", 0.0);
        cfg.insert("weight_decay", 0.0);
        let out = train(&task, OptimizerKind::SgdLr, &cfg, 0).unwrap();
        assert!(out.diverged);
        assert!(out.objective.is_nan());
        assert!(out.update_steps > 0);
    }

    #[test]
    fn blown_up_run_keeps_initial_parameters() {
        let task = TaskInstance::quadratic(10, 1).unwrap();
        let mut cfg = HyperparameterConfig::new();
        cfg.insert("lr", 0.025);
        cfg.insert("momentum", 0.0);
        cfg.insert("weight_decay", 0.0);
        let out = train(&task, OptimizerKind::SgdLr, &cfg, 0).unwrap();
        assert!(!out.diverged);
        assert_eq!(out.best_epoch, 0);
        assert_eq!(out.objective, task.evaluate(&task.init_params(0)).unwrap());
        assert!(out.val_losses.iter().all(|&l| l > out.objective));
    }

    #[test]
    fn early_stopping_ends_flat_runs() {
        let task = TaskInstance::quadratic(10, 1).unwrap();
        let mut cfg = HyperparameterConfig::new();
        cfg.insert("lr", 1e-12);
        cfg.insert("momentum", 0.0);
        cfg.insert("weight_decay", 0.0);
        let out = train(&task, OptimizerKind::SgdLr, &cfg, 0).unwrap();
        assert_eq!(out.epochs_run, 4);
        assert_eq!(out.update_steps, 4 * task.batches_per_epoch() as u64);
    }

    #[test]
    fn library_is_ordered_and_distinct() {
        let task = TaskInstance::quadratic(10, 2).unwrap();
        let prior = default_priors(OptimizerKind::SgdLr);
        let lib = precompute_library(OptimizerKind::SgdLr, &prior, &task, 30, 4).unwrap();
        assert_eq!(lib.len(), 30);
        assert_eq!(lib.direction(), task.direction());
        let mut lrs: Vec<f64> = lib.trials().iter().map(|t| t.config.get("lr").unwrap()).collect();
        lrs.sort_by(f64::total_cmp);
        lrs.dedup();
        assert_eq!(lrs.len(), 30);
        let (_, seed0) = trial_seeds(4, 0);
        assert_eq!(lib.trials()[0].seed, seed0);
    }

    #[test]
    fn boundaries_are_integer_splits() {
        assert_eq!(interval_boundaries(10, 4), vec![2, 5, 7, 10]);
        assert_eq!(interval_boundaries(7, 1), vec![7]);
    }

    #[test]
    fn unit_cost_matches_trial_bootstrap() {
        let values: Vec<f64> = (0..20).map(|i| ((i * 7) % 20) as f64).collect();
        let lib = with_steps(&values, &[3; 20], Direction::Minimize);
        let time = time_budget_curve(&[&lib], 20, 500, 11).unwrap();
        let budgets: Vec<usize> = (1..=20).collect();
        let boot = bootstrap_curve(&lib, &budgets, 500, 11, Sampling::WithReplacement).unwrap();
        assert_eq!(time[0].curve.mean, boot.mean);
        assert_eq!(time[0].curve.quantiles, boot.quantiles);
        assert_eq!(time[0].curve.budgets, (1..=20).map(|k| 3 * k).collect::<Vec<_>>());
    }

    #[test]
    fn single_trial_costing_everything() {
        let lib = with_steps(&[2.0], &[10], Direction::Minimize);
        let curve = &time_budget_curve(&[&lib], 5, 10, 0).unwrap()[0].curve;
        let sentinel = lib.worst_sentinel().unwrap();
        assert_eq!(curve.mean, vec![sentinel, sentinel, sentinel, sentinel, 2.0]);
    }

    #[test]
    fn cheaper_optimizer_dominates() {
        let values: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let steps: Vec<u64> = (0..30).map(|i| 10 + (i % 7) * 4).collect();
        let half: Vec<u64> = steps.iter().map(|s| s / 2).collect();
        let slow = with_steps(&values, &steps, Direction::Minimize);
        let mut fast = with_steps(&values, &half, Direction::Minimize);
        let trials = fast
            .trials()
            .iter()
            .map(|t| Trial {
                optimizer_id: "fast".into(),
                ..t.clone()
            })
            .collect();
        fast = TrialLibrary::new(trials).unwrap();
        let curves = time_budget_curve(&[&slow, &fast], 50, 400, 3).unwrap();
        for k in 0..50 {
            assert!(curves[1].curve.mean[k] <= curves[0].curve.mean[k]);
        }
    }

    #[test]
    fn missing_steps_are_reported() {
        let lib = with_steps(&[1.0, 2.0], &[5, 0], Direction::Minimize);
        assert_eq!(
            time_budget_curve(&[&lib], 4, 10, 0),
            Err(Error::MissingUpdateSteps { index: 1 })
        );
    }

    #[test]
    fn every_run_is_monotone() {
        let values: Vec<f64> = (0..15).map(|i| ((i * 5) % 15) as f64).collect();
        let steps: Vec<u64> = (0..15).map(|i| 1 + i % 4).collect();
        let lib = with_steps(&values, &steps, Direction::Maximize);
        let curve = &time_budget_curve(&[&lib], 30, 200, 5).unwrap()[0].curve;
        assert!(is_monotone(&curve.mean, Direction::Maximize));
        let q: Vec<f64> = curve.quantiles.iter().map(|q| q.q50).collect();
        assert!(is_monotone(&q, Direction::Maximize));
    }
}
