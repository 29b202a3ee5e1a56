//! Tunability metrics over incumbent traces and cross-optimizer summaries.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{draw_indices, Sampling};
use crate::rng::{child_stream, derive_seed};
use crate::types::{better, Direction, IncumbentTrace, TrialLibrary};

const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Offset added to shifted scores, relative to the observed range.
const SHIFT_OFFSET: f64 = 1e-9;

/// Nonnegative weights over budgets `1..=T` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme(Vec<f64>);

impl WeightScheme {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    fn normalized(raw: Vec<f64>) -> Self {
        let sum: f64 = raw.iter().sum();
        Self(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All weight on budget `k`: performance after exactly `k` trials.
pub fn weights_one_hot(horizon: usize, k: usize) -> Result<WeightScheme> {
    if k == 0 || k > horizon {
        return Err(Error::InvalidArgument(format!("budget {k} outside 1..={horizon}")));
    }
    let mut w = vec![0.0; horizon];
    w[k - 1] = 1.0;
    Ok(WeightScheme(w))
}

/// Cumulative Performance-Early: `ω_i ∝ T − i`, so `ω_T = 0`.
pub fn weights_cpe(horizon: usize) -> Result<WeightScheme> {
    if horizon < 2 {
        return Err(Error::InvalidArgument("CPE needs a horizon of at least 2".into()));
    }
    Ok(WeightScheme::normalized(
        (1..=horizon).map(|i| (horizon - i) as f64).collect(),
    ))
}

/// Cumulative Performance-Late: `ω_i ∝ i`.
pub fn weights_cpl(horizon: usize) -> Result<WeightScheme> {
    if horizon == 0 {
        return Err(Error::ZeroBudget);
    }
    Ok(WeightScheme::normalized((1..=horizon).map(|i| i as f64).collect()))
}

/// Cumulative Performance-Uniform: `ω_i = 1/T`.
pub fn weights_cpu(horizon: usize) -> Result<WeightScheme> {
    if horizon == 0 {
        return Err(Error::ZeroBudget);
    }
    Ok(WeightScheme(vec![1.0 / horizon as f64; horizon]))
}

/// Weighted sum of incumbents, `Σ ω_t L_t`.
pub fn omega_tunability(trace: &IncumbentTrace, weights: &WeightScheme) -> Result<f64> {
    if trace.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            actual: trace.len(),
        });
    }
    Ok(trace
        .values()
        .iter()
        .zip(weights.weights())
        .map(|(l, w)| l * w)
        .sum())
}

/// How raw objectives were turned into positive, higher-is-better scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreShift {
    /// Scores are the objectives themselves.
    Identity,
    /// `score = |objective − worst| + delta`.
    Shifted { worst: f64, delta: f64 },
}

impl ScoreShift {
    pub fn describe(&self) -> String {
        match self {
            ScoreShift::Identity => "none".to_string(),
            ScoreShift::Shifted { worst, delta } => format!("worst={worst:e};delta={delta:e}"),
        }
    }
}

/// Positive scores for ratio-based metrics. Maximized objectives that are
/// already positive pass through; anything else is measured as distance
/// from the worst observed value plus `1e-9 · range`.
pub fn positive_scores(values: &[f64], direction: Direction) -> Result<(Vec<f64>, ScoreShift)> {
    if values.is_empty() {
        return Err(Error::EmptyTrials);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    if direction == Direction::Maximize && values.iter().all(|&v| v > 0.0) {
        return Ok((values.to_vec(), ScoreShift::Identity));
    }
    let worst = values.iter().copied().reduce(|a, b| direction.worst(a, b)).unwrap();
    let best = values.iter().copied().reduce(|a, b| direction.best(a, b)).unwrap();
    let range = (best - worst).abs();
    let delta = if range > 0.0 { SHIFT_OFFSET * range } else { 1.0 };
    let scores = values.iter().map(|v| (v - worst).abs() + delta).collect();
    Ok((scores, ScoreShift::Shifted { worst, delta }))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1]")))
    }
}

/// `ζ(α) = t/T` for the first budget `t` whose score reaches `α` times the
/// final score.
pub fn alpha_tunability(trace: &IncumbentTrace, alpha: f64, direction: Direction) -> Result<f64> {
    check_alpha(alpha)?;
    let (scores, _) = positive_scores(trace.values(), direction)?;
    Ok(zeta(&scores, alpha))
}

fn zeta(scores: &[f64], alpha: f64) -> f64 {
    let target = alpha * scores[scores.len() - 1];
    let t = scores.iter().position(|&p| p >= target).unwrap_or(scores.len() - 1) + 1;
    t as f64 / scores.len() as f64
}

/// `Δ = ζ(α_hi) − ζ(α_lo)`; the defaults used for reporting are 0.99 and 0.9.
pub fn sharpness(
    trace: &IncumbentTrace,
    alpha_hi: f64,
    alpha_lo: f64,
    direction: Direction,
) -> Result<f64> {
    check_alpha(alpha_hi)?;
    check_alpha(alpha_lo)?;
    if alpha_hi <= alpha_lo {
        return Err(Error::InvalidArgument(format!(
            "sharpness needs alpha_hi > alpha_lo, got {alpha_hi} <= {alpha_lo}"
        )));
    }
    let (scores, _) = positive_scores(trace.values(), direction)?;
    Ok(zeta(&scores, alpha_hi) - zeta(&scores, alpha_lo))
}

/// `S(o) = mean over tasks of perf(o, task) / max_o' perf(o', task)`.
///
/// `perf[o][p]` holds optimizer `o`'s positive score on task `p`.
pub fn relative_summary(perf: &[Vec<f64>]) -> Result<Vec<f64>> {
    let tasks = perf.first().map(Vec::len).unwrap_or(0);
    if perf.is_empty() || tasks == 0 {
        return Err(Error::InvalidArgument("need at least one optimizer and task".into()));
    }
    for row in perf {
        if row.len() != tasks {
            return Err(Error::LengthMismatch {
                expected: tasks,
                actual: row.len(),
            });
        }
        if let Some(&bad) = row.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveScore(bad));
        }
    }
    let best: Vec<f64> = (0..tasks)
        .map(|p| perf.iter().map(|row| row[p]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(perf
        .iter()
        .map(|row| row.iter().zip(&best).map(|(v, b)| v / b).sum::<f64>() / tasks as f64)
        .collect())
}

/// Outcome of [`probability_of_best`].
#[derive(Debug, Clone, PartialEq)]
pub struct WinProbabilities {
    pub probabilities: Vec<f64>,
    /// Sampling used for each library, in input order.
    pub sampling: Vec<Sampling>,
}

fn lcm_up_to(n: usize) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=n as u128).fold(1, |acc, k| acc / gcd(acc, k) * k)
}

/// Probability that each optimizer's best of `budget` trials beats the
/// others on one task, with ties split equally.
///
/// Each repetition draws one independent sample per optimizer. Optimizers
/// whose libraries hold the same objectives pool their tallies, so they
/// receive identical probabilities. Draws are without replacement when `budget` fits in a library
/// and with replacement otherwise.
pub fn probability_of_best(
    libraries: &[&TrialLibrary],
    budget: usize,
    repetitions: usize,
    seed: u64,
) -> Result<WinProbabilities> {
    if libraries.len() < 2 {
        return Err(Error::InvalidArgument("need at least two optimizers".into()));
    }
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if repetitions == 0 {
        return Err(Error::ZeroRepetitions);
    }
    let first = libraries[0];
    for lib in libraries {
        if lib.task_id() != first.task_id() || lib.direction() != first.direction() {
            return Err(Error::Mismatch(format!(
                "{}/{} vs {}/{}",
                lib.task_id(),
                lib.direction(),
                first.task_id(),
                first.direction()
            )));
        }
    }
    let direction = first.direction();
    let objectives: Vec<Vec<f64>> = libraries
        .iter()
        .map(|l| l.analysis_objectives())
        .collect::<Result<_>>()?;
    let sampling: Vec<Sampling> = objectives
        .iter()
        .map(|o| {
            if budget <= o.len() {
                Sampling::WithoutReplacement
            } else {
                Sampling::WithReplacement
            }
        })
        .collect();
    let n = libraries.len();
    let unit = lcm_up_to(n);

    let tallies = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r as u64);
            let bests: Vec<f64> = objectives
                .iter()
                .enumerate()
                .map(|(o, obj)| {
                    let mut rng = child_stream(rep_seed, o as u64);
                    draw_indices(&mut rng, obj.len(), budget, sampling[o])
                        .into_iter()
                        .map(|i| obj[i])
                        .reduce(|a, b| direction.best(a, b))
                        .expect("budget is positive")
                })
                .collect();
            let top = bests.iter().copied().reduce(|a, b| direction.best(a, b)).unwrap();
            let winners: Vec<usize> = (0..n)
                .filter(|&o| !better(top, bests[o], direction))
                .collect();
            let share = unit / winners.len() as u128;
            let mut tally = vec![0u128; n];
            for o in winners {
                tally[o] += share;
            }
            tally
        })
        .reduce(
            || vec![0u128; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    // Libraries with the same objective multiset share one pooled tally.
    let sorted: Vec<Vec<f64>> = objectives
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.sort_by(f64::total_cmp);
            o
        })
        .collect();
    let total = (unit * repetitions as u128) as f64;
    let probabilities = (0..n)
        .map(|o| {
            let group: Vec<usize> = (0..n).filter(|&p| sorted[p] == sorted[o]).collect();
            let pooled: u128 = group.iter().map(|&p| tallies[p]).sum();
            pooled as f64 / (group.len() as f64 * total)
        })
        .collect();
    Ok(WinProbabilities {
        probabilities,
        sampling,
    })
}

/// Averages per-task win probabilities: the chance of being best on a
/// uniformly chosen task.
pub fn average_over_tasks(per_task: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = per_task.first().map(Vec::len).ok_or(Error::EmptyTrials)?;
    if let Some(bad) = per_task.iter().find(|p| p.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    Ok((0..n)
        .map(|o| per_task.iter().map(|p| p[o]).sum::<f64>() / per_task.len() as f64)
        .collect())
}
