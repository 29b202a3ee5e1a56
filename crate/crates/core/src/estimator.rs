//! Best-attained-objective statistics at a search budget.
//!
//! The exact route treats a library as an empirical distribution and takes
//! the best of `S` i.i.d. draws from it: with `F` the empirical CDF on the
//! merged support, `P(max ≤ y_i) = F(y_i)^S` and the mass at `y_i` is
//! `F_i^S − F_{i−1}^S`. Minimization is handled by negating values, applying
//! the maximum formulas and negating back. The bootstrap route simulates the
//! same searches by resampling and is kept as an independent check.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::child_stream;
use crate::types::{incumbents, BudgetCurve, Direction, IncumbentTrace, Quartiles, TrialLibrary};

/// Relative slack allowed when clamping a rounding-negative variance.
const VARIANCE_SLACK: f64 = 1e-12;
/// Slack when locating a probability level on a computed CDF.
const QUANTILE_SLACK: f64 = 1e-12;

/// How a simulated search draws trials from a finite library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// i.i.d. draws; the budget may exceed the library size.
    #[default]
    WithReplacement,
    /// Distinct trials; the budget must not exceed the library size.
    WithoutReplacement,
}

/// Empirical distribution of a sample on its merged, sorted support.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    support: Vec<f64>,
    counts: Vec<usize>,
    /// Running counts, `cumulative[i] = #{x ≤ support[i]}`.
    cumulative: Vec<usize>,
}

impl EmpiricalCdf {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        *self.cumulative.last().expect("nonempty by construction")
    }

    /// `F(support[i])` as a count ratio; the last entry is exactly 1.
    pub fn cdf(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.cumulative.iter().map(|&c| c as f64 / n).collect()
    }

    /// Probability mass at each support point.
    pub fn mass(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// `F(y) = #{x ≤ y} / N` at an arbitrary point.
    pub fn evaluate(&self, y: f64) -> f64 {
        let below = self.support.partition_point(|&s| s <= y);
        if below == 0 {
            0.0
        } else {
            self.cumulative[below - 1] as f64 / self.total() as f64
        }
    }

    fn negated(&self) -> EmpiricalCdf {
        let support: Vec<f64> = self.support.iter().rev().map(|v| -v).collect();
        let counts: Vec<usize> = self.counts.iter().rev().copied().collect();
        Self::from_sorted(support, counts)
    }

    fn from_sorted(support: Vec<f64>, counts: Vec<usize>) -> Self {
        let cumulative = counts
            .iter()
            .scan(0usize, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        Self {
            support,
            counts,
            cumulative,
        }
    }

    /// Probability that every one of `budget` draws lands among the lowest
    /// `k` of `N` sample points.
    fn prob_all_within(&self, k: usize, budget: usize, sampling: Sampling) -> f64 {
        let n = self.total();
        match sampling {
            Sampling::WithReplacement => power(k as f64 / n as f64, budget),
            Sampling::WithoutReplacement => {
                if k < budget {
                    return 0.0;
                }
                (0..budget).fold(1.0, |acc, j| acc * (k - j) as f64 / (n - j) as f64)
            }
        }
    }

    /// Mass of the maximum of `budget` draws at each support point.
    fn max_masses(&self, budget: usize, sampling: Sampling) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let cur = self.prob_all_within(c, budget, sampling);
                let mass = cur - prev;
                prev = cur;
                mass
            })
            .collect()
    }

    /// Mean and variance of the maximum of `budget` draws.
    fn max_moments(&self, budget: usize, sampling: Sampling) -> Result<(f64, f64)> {
        let masses = self.max_masses(budget, sampling);
        let mean: f64 = self.support.iter().zip(&masses).map(|(y, p)| y * p).sum();
        let second: f64 = self.support.iter().zip(&masses).map(|(y, p)| y * y * p).sum();
        let variance = second - mean * mean;
        let slack = VARIANCE_SLACK * second.abs().max(1.0);
        if variance < -slack {
            return Err(Error::Numerical(format!("negative variance {variance}")));
        }
        Ok((mean, variance.max(0.0)))
    }
}

fn power(base: f64, exponent: usize) -> f64 {
    match i32::try_from(exponent) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exponent as f64),
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&bad) => Err(Error::NonFinite(bad)),
        None => Ok(()),
    }
}

pub fn empirical_cdf(values: &[f64]) -> Result<EmpiricalCdf> {
    if values.is_empty() {
        return Err(Error::EmptyTrials);
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut support: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in sorted {
        match support.last() {
            // -0.0 and 0.0 merge here as well
            Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
            _ => {
                support.push(v);
                counts.push(1);
            }
        }
    }
    Ok(EmpiricalCdf::from_sorted(support, counts))
}

/// Exact distribution of the best of `budget` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct BestDistribution {
    pub support: Vec<f64>,
    pub mass: Vec<f64>,
    /// `P(Y ≤ support[i])` computed directly from powered CDFs.
    pub cdf: Vec<f64>,
}

impl BestDistribution {
    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.mass).map(|(y, p)| y * p).sum()
    }

    /// Generalized inverse: smallest support value with `P(Y ≤ y) ≥ q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let idx = self
            .cdf
            .iter()
            .position(|&c| c >= q - QUANTILE_SLACK)
            .unwrap_or(self.cdf.len() - 1);
        self.support[idx]
    }

    pub fn quartiles(&self) -> Quartiles {
        Quartiles {
            q25: self.quantile(0.25),
            q50: self.quantile(0.5),
            q75: self.quantile(0.75),
        }
    }
}

fn check_budget(budget: usize) -> Result<()> {
    if budget == 0 {
        Err(Error::ZeroBudget)
    } else {
        Ok(())
    }
}

fn check_sampling(ecdf: &EmpiricalCdf, budget: usize, sampling: Sampling) -> Result<()> {
    if sampling == Sampling::WithoutReplacement && budget > ecdf.total() {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds library size {} without replacement",
            ecdf.total()
        )));
    }
    Ok(())
}

fn moments_from_ecdf(
    ecdf: &EmpiricalCdf,
    budget: usize,
    direction: Direction,
    sampling: Sampling,
) -> Result<(f64, f64)> {
    check_budget(budget)?;
    check_sampling(ecdf, budget, sampling)?;
    match direction {
        Direction::Maximize => ecdf.max_moments(budget, sampling),
        Direction::Minimize => {
            let (mean, var) = ecdf.negated().max_moments(budget, sampling)?;
            Ok((-mean, var))
        }
    }
}

fn distribution_from_ecdf(
    ecdf: &EmpiricalCdf,
    budget: usize,
    direction: Direction,
    sampling: Sampling,
) -> Result<BestDistribution> {
    check_budget(budget)?;
    check_sampling(ecdf, budget, sampling)?;
    let n = ecdf.total();
    let support = ecdf.support.clone();
    let (mass, cdf) = match direction {
        Direction::Maximize => {
            let cdf: Vec<f64> = ecdf
                .cumulative
                .iter()
                .map(|&c| ecdf.prob_all_within(c, budget, sampling))
                .collect();
            (ecdf.max_masses(budget, sampling), cdf)
        }
        Direction::Minimize => {
            // P(min > y_i) = P(all draws among the N − cum_i points above y_i)
            let above: Vec<f64> = ecdf
                .cumulative
                .iter()
                .map(|&c| ecdf.prob_all_within(n - c, budget, sampling))
                .collect();
            let cdf = above.iter().map(|a| 1.0 - a).collect();
            let mut prev = 1.0;
            let mass = above
                .iter()
                .map(|&a| {
                    let m = prev - a;
                    prev = a;
                    m
                })
                .collect();
            (mass, cdf)
        }
    };
    Ok(BestDistribution { support, mass, cdf })
}

/// Expected best of `budget` i.i.d. draws from the empirical distribution.
pub fn expected_best_at(values: &[f64], budget: usize, direction: Direction) -> Result<f64> {
    check_budget(budget)?;
    let ecdf = empirical_cdf(values)?;
    Ok(moments_from_ecdf(&ecdf, budget, direction, Sampling::WithReplacement)?.0)
}

/// Variance of the best of `budget` i.i.d. draws, `E[Y²] − E[Y]²`.
pub fn variance_best_at(values: &[f64], budget: usize, direction: Direction) -> Result<f64> {
    check_budget(budget)?;
    let ecdf = empirical_cdf(values)?;
    Ok(moments_from_ecdf(&ecdf, budget, direction, Sampling::WithReplacement)?.1)
}

pub fn best_at_distribution(
    values: &[f64],
    budget: usize,
    direction: Direction,
) -> Result<BestDistribution> {
    check_budget(budget)?;
    let ecdf = empirical_cdf(values)?;
    distribution_from_ecdf(&ecdf, budget, direction, Sampling::WithReplacement)
}

/// Exact curve at budgets `1..=max_budget`.
pub fn exact_budget_curve(library: &TrialLibrary, max_budget: usize) -> Result<BudgetCurve> {
    check_budget(max_budget)?;
    let budgets: Vec<usize> = (1..=max_budget).collect();
    exact_curve_at(library, &budgets, Sampling::WithReplacement)
}

/// Exact curve at arbitrary budgets.
pub fn exact_curve_at(
    library: &TrialLibrary,
    budgets: &[usize],
    sampling: Sampling,
) -> Result<BudgetCurve> {
    let direction = library.direction();
    let ecdf = empirical_cdf(&library.analysis_objectives()?)?;
    let mut curve = empty_curve(direction, budgets.len());
    for &b in budgets {
        let (mean, variance) = moments_from_ecdf(&ecdf, b, direction, sampling)?;
        let dist = distribution_from_ecdf(&ecdf, b, direction, sampling)?;
        curve.budgets.push(b);
        curve.mean.push(mean);
        curve.variance.push(variance);
        curve.quantiles.push(dist.quartiles());
    }
    Ok(curve)
}

fn empty_curve(direction: Direction, capacity: usize) -> BudgetCurve {
    BudgetCurve {
        direction,
        budgets: Vec::with_capacity(capacity),
        mean: Vec::with_capacity(capacity),
        variance: Vec::with_capacity(capacity),
        quantiles: Vec::with_capacity(capacity),
    }
}

/// Uniform index into a pool of `len` items. All resampling in the crate
/// goes through this so that trial-count and step-count simulations sharing
/// a seed see the same sequence of draws.
pub fn resample_index<R: Rng + ?Sized>(rng: &mut R, len: usize) -> usize {
    rng.random_range(0..len)
}

/// `count` indices into `len` items under the given sampling scheme.
pub fn draw_indices<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    count: usize,
    sampling: Sampling,
) -> Vec<usize> {
    match sampling {
        Sampling::WithReplacement => (0..count).map(|_| resample_index(rng, len)).collect(),
        Sampling::WithoutReplacement => {
            let mut pool: Vec<usize> = (0..len).collect();
            for i in 0..count {
                let j = rng.random_range(i..len);
                pool.swap(i, j);
            }
            pool.truncate(count);
            pool
        }
    }
}

fn check_repetitions(repetitions: usize) -> Result<()> {
    if repetitions == 0 {
        Err(Error::ZeroRepetitions)
    } else {
        Ok(())
    }
}

/// `repetitions` simulated searches of `budget` trials each, drawn uniformly
/// with replacement. Repetition `r` uses the stream derived from
/// `(seed, r)`.
pub fn bootstrap_runs(
    library: &TrialLibrary,
    budget: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<IncumbentTrace>> {
    bootstrap_runs_with(library, budget, repetitions, seed, Sampling::WithReplacement)
}

pub fn bootstrap_runs_with(
    library: &TrialLibrary,
    budget: usize,
    repetitions: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<Vec<IncumbentTrace>> {
    check_budget(budget)?;
    check_repetitions(repetitions)?;
    let objectives = library.analysis_objectives()?;
    if sampling == Sampling::WithoutReplacement && budget > objectives.len() {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds library size {} without replacement",
            objectives.len()
        )));
    }
    let direction = library.direction();
    (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rng = child_stream(seed, r as u64);
            let draws: Vec<f64> = draw_indices(&mut rng, objectives.len(), budget, sampling)
                .into_iter()
                .map(|i| objectives[i])
                .collect();
            incumbents(&draws, direction)
        })
        .collect()
}

/// Lower generalized inverse of the sample's empirical CDF at `q`.
pub fn sample_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64) - QUANTILE_SLACK).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Mean, population variance and quartiles of a sample.
pub fn sample_summary(values: &[f64]) -> (f64, f64, Quartiles) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = Quartiles {
        q25: sample_quantile(&sorted, 0.25),
        q50: sample_quantile(&sorted, 0.5),
        q75: sample_quantile(&sorted, 0.75),
    };
    (mean, variance, q)
}

/// Monte-Carlo counterpart of [`exact_curve_at`]: one simulated search of
/// length `max(budgets)` per repetition, read off at each budget.
pub fn bootstrap_curve(
    library: &TrialLibrary,
    budgets: &[usize],
    repetitions: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<BudgetCurve> {
    let max_budget = budgets.iter().copied().max().ok_or(Error::ZeroBudget)?;
    if budgets.contains(&0) {
        return Err(Error::ZeroBudget);
    }
    let runs = bootstrap_runs_with(library, max_budget, repetitions, seed, sampling)?;
    let mut curve = empty_curve(library.direction(), budgets.len());
    for &b in budgets {
        let finals: Vec<f64> = runs.iter().map(|t| t.values()[b - 1]).collect();
        let (mean, variance, q) = sample_summary(&finals);
        curve.budgets.push(b);
        curve.mean.push(mean);
        curve.variance.push(variance);
        curve.quantiles.push(q);
    }
    Ok(curve)
}
