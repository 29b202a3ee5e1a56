use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tunebench", version, about = "Benchmark optimizers by how easy they are to tune")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run random search and write one JSONL trial library per (optimizer, task)
    Generate(GenerateArgs),
    /// Refit each optimizer's prior to its best trials
    Calibrate(CalibrateArgs),
    /// Expected best objective per search budget
    #[command(after_help = "Writes <optimizer>__<task>.curve.csv with columns \
        optimizer,task,direction,budget,mean,variance,q25,q50,q75.")]
    Analyze(AnalyzeArgs),
    /// Relative performance and tunability tables from curve CSVs
    #[command(after_help = "Writes relative.csv (scope,optimizer,budget,score) and \
        tunability.csv (scope,optimizer,one_hot,cpe,cpl,cpu,zeta_0.9,zeta_0.99,sharpness,shift). \
        Per-task tunability rows are in objective units; rows with scope `all` average \
        relative scores over tasks.")]
    Summarize(SummarizeArgs),
    /// Probability that each optimizer finds the best configuration
    #[command(after_help = "Writes prob_best.csv with columns task,budget,optimizer,probability,sampling.")]
    ProbBest(ProbBestArgs),
    /// Expected best objective over a budget of update steps
    #[command(after_help = "Writes time_curve.csv with columns \
        task,optimizer,interval,steps,mean,variance,q25,q50,q75.")]
    TimeCurve(TimeCurveArgs),
    /// Render CSV outputs as SVG charts
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Run configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides the config file
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// JSONL trial files
    #[arg(required = true)]
    pub trials: Vec<PathBuf>,
    /// Keep trials within this fraction of each task's best result
    #[arg(long, default_value_t = 0.2)]
    pub retention: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(required = true)]
    pub trials: Vec<PathBuf>,
    /// Budgets such as `1,2,4` or `1-100`; defaults to every budget up to
    /// the library size
    #[arg(long)]
    pub budget: Option<String>,
    /// Closed-form estimates (the default)
    #[arg(long, conflicts_with = "bootstrap")]
    pub exact: bool,
    /// Monte-Carlo estimates from this many simulated searches
    #[arg(long, value_name = "R")]
    pub bootstrap: Option<usize>,
    /// Draw trials without replacement; budgets above the library size are
    /// dropped
    #[arg(long)]
    pub no_replacement: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Curve CSVs from `analyze`
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProbBestArgs {
    #[arg(required = true)]
    pub trials: Vec<PathBuf>,
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TimeCurveArgs {
    #[arg(required = true)]
    pub trials: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub intervals: usize,
    #[arg(long, default_value_t = 1000)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSVs written by analyze, summarize, prob-best or time-curve
    #[arg(required = true)]
    pub csvs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
