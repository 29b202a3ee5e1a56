use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tunebench::aggregate::{
    alpha_tunability, omega_tunability, positive_scores, probability_of_best, relative_summary,
    sharpness, weights_cpe, weights_cpl, weights_cpu, weights_one_hot, WeightScheme,
};
use tunebench::estimator::{bootstrap_curve, exact_curve_at, Sampling};
use tunebench::hpo::{precompute_library, time_budget_curve};
use tunebench::optim::OptimizerKind;
use tunebench::priors::{calibrate, default_priors, PriorSpec};
use tunebench::rng::derive_seed;
use tunebench::tasks::TaskInstance;
use tunebench::{incumbents, Direction, TrialLibrary};

use crate::args::*;
use crate::budgets::parse_budgets;
use crate::config::read_config;
use crate::error::{CliError, Result};
use crate::plot;
use crate::record::{read_libraries, read_prior, to_jsonl, write_file, PriorFile};
use crate::table::*;

/// Files written by a command, in the order they were written.
pub type Written = Vec<PathBuf>;

pub fn run(command: Command) -> Result<Written> {
    match command {
        Command::Generate(a) => generate(&a),
        Command::Calibrate(a) => calibrate_cmd(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Summarize(a) => summarize(&a),
        Command::ProbBest(a) => prob_best(&a),
        Command::TimeCurve(a) => time_curve(&a),
        Command::Plot(a) => plot::plot(&a.csvs, &a.out),
    }
}

/// 64-bit FNV-1a, used to key seeds by id rather than by position.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Master seed of the library for `(optimizer, task)`.
pub fn library_seed(seed: u64, optimizer: &str, task: &str) -> u64 {
    derive_seed(derive_seed(seed, fnv1a(optimizer)), fnv1a(task))
}

pub fn library_file_name(optimizer: &str, task: &str) -> String {
    format!("{optimizer}__{task}.jsonl")
}

fn generate(a: &GenerateArgs) -> Result<Written> {
    let config = read_config(&a.config)?;
    let seed = a.seed.unwrap_or(config.seed);
    let mut priors: BTreeMap<OptimizerKind, PriorSpec> =
        config.optimizers.iter().map(|&k| (k, default_priors(k))).collect();
    for path in &config.priors {
        let spec = read_prior(path)?;
        if !priors.contains_key(&spec.optimizer) {
            return Err(CliError::Config(format!(
                "{}: prior for {} which is not in the optimizer list",
                path.display(),
                spec.optimizer
            )));
        }
        priors.insert(spec.optimizer, spec);
    }
    let mut written = Vec::new();
    for task_config in &config.tasks {
        let task = TaskInstance::new(task_config.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        for &kind in &config.optimizers {
            let lib_seed = library_seed(seed, kind.id(), task.id());
            let lib = precompute_library(kind, &priors[&kind], &task, config.library_size, lib_seed)?;
            let path = a.out.join(library_file_name(kind.id(), task.id()));
            write_file(&path, &to_jsonl(lib.trials()))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn calibrate_cmd(a: &CalibrateArgs) -> Result<Written> {
    if !(a.retention.is_finite() && a.retention >= 0.0) {
        return Err(CliError::Config(format!("invalid retention {}", a.retention)));
    }
    let libraries = read_libraries(&a.trials)?;
    let mut by_optimizer: BTreeMap<OptimizerKind, Vec<tunebench::Trial>> = BTreeMap::new();
    for lib in &libraries {
        let kind: OptimizerKind = lib.optimizer_id().parse()?;
        by_optimizer.entry(kind).or_default().extend(lib.trials().iter().cloned());
    }
    let mut written = Vec::new();
    for (kind, trials) in by_optimizer {
        let fit = calibrate(&default_priors(kind), &trials, a.retention)
            .map_err(|e| CliError::Calibration(format!("{kind}: {e}")))?;
        for w in &fit.warnings {
            eprintln!("warning: {kind}: {w}");
        }
        let json = serde_json::to_string_pretty(&PriorFile::from_calibration(&fit))
            .expect("priors serialize");
        let path = a.out.join(format!("{kind}.prior.json"));
        write_file(&path, &(json + "\n"))?;
        written.push(path);
    }
    Ok(written)
}

fn budgets_for(spec: Option<&str>, default_max: usize) -> Result<Vec<usize>> {
    match spec {
        Some(s) => parse_budgets(s).map_err(CliError::Config),
        None => Ok((1..=default_max).collect()),
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<Written> {
    if a.bootstrap == Some(0) {
        return Err(CliError::Config("--bootstrap needs at least one repetition".into()));
    }
    let sampling = if a.no_replacement {
        Sampling::WithoutReplacement
    } else {
        Sampling::WithReplacement
    };
    let mut written = Vec::new();
    for lib in read_libraries(&a.trials)? {
        let mut budgets = budgets_for(a.budget.as_deref(), lib.len())?;
        if a.no_replacement && budgets.iter().any(|&b| b > lib.len()) {
            eprintln!(
                "warning: {}/{}: budgets above the library size {} dropped without replacement",
                lib.optimizer_id(),
                lib.task_id(),
                lib.len()
            );
            budgets.retain(|&b| b <= lib.len());
            if budgets.last() != Some(&lib.len()) {
                budgets.push(lib.len());
            }
        }
        let curve = match a.bootstrap {
            Some(r) => bootstrap_curve(&lib, &budgets, r, a.seed, sampling)?,
            None => exact_curve_at(&lib, &budgets, sampling)?,
        };
        let rows = curve_rows(lib.optimizer_id(), lib.task_id(), &curve);
        let path = a
            .out
            .join(format!("{}__{}.curve.csv", lib.optimizer_id(), lib.task_id()));
        write_file(&path, &to_csv(&rows, &CURVE_HEADER))?;
        written.push(path);
    }
    Ok(written)
}

/// Curves of a complete optimizer × task grid sharing budgets `1..=T`.
struct Grid {
    optimizers: Vec<String>,
    tasks: Vec<(String, Direction)>,
    horizon: usize,
    /// `means[task][optimizer]`, each of length `horizon`.
    means: Vec<Vec<Vec<f64>>>,
}

fn load_grid(paths: &[PathBuf]) -> Result<Grid> {
    let mut rows: Vec<CurveRow> = Vec::new();
    for p in paths {
        rows.extend(read_csv::<CurveRow>(p, &CURVE_HEADER)?);
    }
    let mut cells: BTreeMap<(String, String), Vec<&CurveRow>> = BTreeMap::new();
    for r in &rows {
        cells.entry((r.task.clone(), r.optimizer.clone())).or_default().push(r);
    }
    let mut optimizers: Vec<String> = rows.iter().map(|r| r.optimizer.clone()).collect();
    optimizers.sort();
    optimizers.dedup();
    let mut task_ids: Vec<String> = rows.iter().map(|r| r.task.clone()).collect();
    task_ids.sort();
    task_ids.dedup();

    let mut horizon = None;
    let mut tasks = Vec::new();
    let mut means = Vec::new();
    for task in &task_ids {
        let mut direction = None;
        let mut per_opt = Vec::new();
        for opt in &optimizers {
            let cell = cells
                .get_mut(&(task.clone(), opt.clone()))
                .ok_or_else(|| CliError::Grid(format!("no curve for {opt} on {task}")))?;
            cell.sort_by_key(|r| r.budget);
            let budgets: Vec<usize> = cell.iter().map(|r| r.budget).collect();
            if budgets.iter().enumerate().any(|(i, &b)| b != i + 1) {
                return Err(CliError::Grid(format!(
                    "{opt} on {task}: budgets must run 1..=T without gaps"
                )));
            }
            if *horizon.get_or_insert(budgets.len()) != budgets.len() {
                return Err(CliError::Grid(format!("{opt} on {task}: ragged budget range")));
            }
            if *direction.get_or_insert(cell[0].direction) != cell[0].direction
                || cell.iter().any(|r| r.direction != cell[0].direction)
            {
                return Err(CliError::Grid(format!("{task}: mixed directions")));
            }
            per_opt.push(cell.iter().map(|r| r.mean).collect());
        }
        tasks.push((task.clone(), direction.expect("at least one optimizer")));
        means.push(per_opt);
    }
    Ok(Grid {
        optimizers,
        tasks,
        horizon: horizon.expect("at least one row"),
        means,
    })
}

/// Per-task positive scores with one shift shared by all optimizers.
fn shared_scores(curves: &[Vec<f64>], direction: Direction) -> Result<Vec<Vec<f64>>> {
    let flat: Vec<f64> = curves.iter().flatten().copied().collect();
    let (scores, _) = positive_scores(&flat, direction)?;
    Ok(scores.chunks(curves[0].len()).map(<[f64]>::to_vec).collect())
}

fn summarize(a: &SummarizeArgs) -> Result<Written> {
    let grid = load_grid(&a.curves)?;
    let t = grid.horizon;
    if t < 2 {
        return Err(CliError::Grid("tunability needs budgets 1..=T with T >= 2".into()));
    }
    let schemes: [WeightScheme; 4] = [
        weights_one_hot(t, t)?,
        weights_cpe(t)?,
        weights_cpl(t)?,
        weights_cpu(t)?,
    ];
    let n_opt = grid.optimizers.len();

    // relative performance per budget
    let mut relative = Vec::new();
    let mut per_task_scores = Vec::new();
    for (ti, (task, direction)) in grid.tasks.iter().enumerate() {
        let scores = shared_scores(&grid.means[ti], *direction)?;
        for (oi, opt) in grid.optimizers.iter().enumerate() {
            for (k, own) in scores[oi].iter().enumerate() {
                let best = scores.iter().map(|s| s[k]).fold(f64::NEG_INFINITY, f64::max);
                relative.push(RelativeRow {
                    scope: task.clone(),
                    optimizer: opt.clone(),
                    budget: k + 1,
                    score: own / best,
                });
            }
        }
        per_task_scores.push(scores);
    }
    for k in 0..t {
        let perf: Vec<Vec<f64>> = (0..n_opt)
            .map(|o| per_task_scores.iter().map(|s| s[o][k]).collect())
            .collect();
        let summary = relative_summary(&perf)?;
        for (oi, opt) in grid.optimizers.iter().enumerate() {
            relative.push(RelativeRow {
                scope: "all".into(),
                optimizer: opt.clone(),
                budget: k + 1,
                score: summary[oi],
            });
        }
    }

    // tunability
    let mut tunability = Vec::new();
    let mut omega_scores = vec![vec![vec![0.0; grid.tasks.len()]; n_opt]; 4];
    let mut zetas = vec![[0.0; 3]; n_opt];
    for (ti, (task, direction)) in grid.tasks.iter().enumerate() {
        for (oi, opt) in grid.optimizers.iter().enumerate() {
            let trace = incumbents(&grid.means[ti][oi], *direction)?;
            let omega: Vec<f64> = schemes
                .iter()
                .map(|w| omega_tunability(&trace, w))
                .collect::<tunebench::Result<_>>()?;
            let scored = incumbents(&per_task_scores[ti][oi], Direction::Maximize)?;
            for (m, w) in schemes.iter().enumerate() {
                omega_scores[m][oi][ti] = omega_tunability(&scored, w)?;
            }
            let zeta_lo = alpha_tunability(&trace, 0.9, *direction)?;
            let zeta_hi = alpha_tunability(&trace, 0.99, *direction)?;
            let delta = sharpness(&trace, 0.99, 0.9, *direction)?;
            zetas[oi][0] += zeta_lo / grid.tasks.len() as f64;
            zetas[oi][1] += zeta_hi / grid.tasks.len() as f64;
            zetas[oi][2] += delta / grid.tasks.len() as f64;
            let (_, shift) = positive_scores(trace.values(), *direction)?;
            tunability.push(TunabilityRow {
                scope: task.clone(),
                optimizer: opt.clone(),
                one_hot: omega[0],
                cpe: omega[1],
                cpl: omega[2],
                cpu: omega[3],
                zeta_lo,
                zeta_hi,
                sharpness: delta,
                shift: shift.describe(),
            });
        }
    }
    let relative_omega: Vec<Vec<f64>> = omega_scores
        .iter()
        .map(|perf| relative_summary(perf))
        .collect::<tunebench::Result<_>>()?;
    for (oi, opt) in grid.optimizers.iter().enumerate() {
        tunability.push(TunabilityRow {
            scope: "all".into(),
            optimizer: opt.clone(),
            one_hot: relative_omega[0][oi],
            cpe: relative_omega[1][oi],
            cpl: relative_omega[2][oi],
            cpu: relative_omega[3][oi],
            zeta_lo: zetas[oi][0],
            zeta_hi: zetas[oi][1],
            sharpness: zetas[oi][2],
            shift: "relative".into(),
        });
    }

    let rel_path = a.out.join("relative.csv");
    write_file(&rel_path, &to_csv(&relative, &RELATIVE_HEADER))?;
    let tun_path = a.out.join("tunability.csv");
    write_file(&tun_path, &to_csv(&tunability, &TUNABILITY_HEADER))?;
    Ok(vec![rel_path, tun_path])
}

fn by_task(libraries: Vec<TrialLibrary>) -> BTreeMap<String, Vec<TrialLibrary>> {
    let mut out: BTreeMap<String, Vec<TrialLibrary>> = BTreeMap::new();
    for lib in libraries {
        out.entry(lib.task_id().to_string()).or_default().push(lib);
    }
    out
}

fn sampling_name(s: Sampling) -> &'static str {
    match s {
        Sampling::WithReplacement => "with_replacement",
        Sampling::WithoutReplacement => "without_replacement",
    }
}

fn prob_best(a: &ProbBestArgs) -> Result<Written> {
    if a.repetitions == 0 {
        return Err(CliError::Config("--repetitions must be positive".into()));
    }
    let mut rows = Vec::new();
    for (task, libs) in by_task(read_libraries(&a.trials)?) {
        if libs.len() < 2 {
            return Err(CliError::Grid(format!(
                "task {task} has a single optimizer; need at least two"
            )));
        }
        let smallest = libs.iter().map(TrialLibrary::len).min().expect("nonempty");
        let refs: Vec<&TrialLibrary> = libs.iter().collect();
        for budget in budgets_for(a.budget.as_deref(), smallest)? {
            let win = probability_of_best(&refs, budget, a.repetitions, a.seed)?;
            for (i, lib) in libs.iter().enumerate() {
                rows.push(ProbRow {
                    task: task.clone(),
                    budget,
                    optimizer: lib.optimizer_id().to_string(),
                    probability: win.probabilities[i],
                    sampling: sampling_name(win.sampling[i]).into(),
                });
            }
        }
    }
    let path = a.out.join("prob_best.csv");
    write_file(&path, &to_csv(&rows, &PROB_HEADER))?;
    Ok(vec![path])
}

fn time_curve(a: &TimeCurveArgs) -> Result<Written> {
    if a.repetitions == 0 || a.intervals == 0 {
        return Err(CliError::Config("--repetitions and --intervals must be positive".into()));
    }
    let mut rows = Vec::new();
    for (task, libs) in by_task(read_libraries(&a.trials)?) {
        let refs: Vec<&TrialLibrary> = libs.iter().collect();
        for tc in time_budget_curve(&refs, a.intervals, a.repetitions, a.seed)? {
            let c = &tc.curve;
            for k in 0..c.len() {
                rows.push(TimeRow {
                    task: task.clone(),
                    optimizer: tc.optimizer_id.clone(),
                    interval: k + 1,
                    steps: c.budgets[k] as u64,
                    mean: c.mean[k],
                    variance: c.variance[k],
                    q25: c.quantiles[k].q25,
                    q50: c.quantiles[k].q50,
                    q75: c.quantiles[k].q75,
                });
            }
        }
    }
    let path = a.out.join("time_curve.csv");
    write_file(&path, &to_csv(&rows, &TIME_HEADER))?;
    Ok(vec![path])
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("plot")
        .trim_end_matches(".curve")
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_ids() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
        assert_ne!(library_seed(1, "adam", "quadratic"), library_seed(1, "adam", "mlp"));
        assert_ne!(library_seed(1, "adam", "mlp"), library_seed(2, "adam", "mlp"));
    }

    #[test]
    fn shared_scores_keep_one_shift() {
        let s = shared_scores(&[vec![3.0, 2.0], vec![4.0, 1.0]], Direction::Minimize).unwrap();
        assert!(s[1][1] > s[0][1] && s[0][1] > s[0][0] && s[0][0] > s[1][0]);
    }
}
