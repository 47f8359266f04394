use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jodscale", version, about = "Pairwise-comparison scaling in JOD units")]
pub struct Cli {
    /// Worker threads for bootstrap, outlier and simulation work.
    #[arg(long, global = true, env = "JODSCALE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scale trial data and report scores, confidence intervals and significance.
    Scale(ScaleArgs),
    /// Screen observers by leave-one-out likelihood.
    Outliers(OutlierArgs),
    /// Run Monte-Carlo experiments over a grid of configurations.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Trial CSV with columns observer, session, scene, condition_1, condition_2, selection.
    #[arg(long, short)]
    pub input: PathBuf,

    /// Condition fixed at 0 JOD; defaults to the first one in the file.
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Disable the finite-distance prior.
    #[arg(long)]
    pub no_prior: bool,

    /// Offset added to the prior density.
    #[arg(long, default_value_t = jodscale::scaling::DEFAULT_GAMMA)]
    pub gamma: f64,

    /// Standard deviation of perceived differences; 1.4826 makes 75% preference 1 JOD.
    #[arg(long, default_value_t = jodscale::scaling::JOD_SIGMA)]
    pub sigma: f64,
}

impl ModelArgs {
    pub fn options(&self) -> jodscale::scaling::ScaleOptions {
        jodscale::scaling::ScaleOptions {
            sigma: self.sigma,
            use_prior: !self.no_prior,
            gamma: self.gamma,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Scale every scene separately instead of pooling them.
    #[arg(long)]
    pub per_content: bool,

    /// Bootstrap samples; 0 skips confidence intervals and significance.
    #[arg(long, default_value_t = jodscale::stats::DEFAULT_BOOTSTRAP_SAMPLES)]
    pub bootstrap: usize,

    /// Significance level of the pairwise tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Seed of the observer bootstrap.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Also run the outlier screening and include it in the report.
    #[arg(long)]
    pub outliers: bool,

    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// SVG plot of scores with confidence intervals.
    #[arg(long)]
    pub plot: Option<PathBuf>,

    /// SVG significance graph of neighbouring conditions.
    #[arg(long)]
    pub graph: Option<PathBuf>,

    /// CSV edge list: content, condition_a, condition_b, p_value, significant.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutlierArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// CSV of per-condition selection rates of flagged observers next to
    /// everyone else.
    #[arg(long)]
    pub profile: Option<PathBuf>,

    /// Observer to profile instead of the flagged ones; may be repeated.
    #[arg(long = "profile-observer")]
    pub profile_observers: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// q = 0..4, observers 5 to 60, prior on and off.
    PriorBenefit,
    /// No-preference answers with thresholds from N(0.7, 0.3), split equally.
    Ties,
    /// q = 0, 2, …, 10 with the prior off, on, and with unanimous pairs dropped.
    Bias,
    /// Spacing of the true scores from 0.25 to 3 JOD.
    Qdiff,
    /// Complete against chain designs at equal numbers of comparisons.
    Designs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in grid.
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<Preset>,

    /// TOML grid configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override the number of runs of every grid point.
    #[arg(long)]
    pub runs: Option<usize>,

    /// Override the base seed; every run derives its own stream from it.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Override the number of bootstrapped runs per grid point.
    #[arg(long)]
    pub ci_runs: Option<usize>,

    /// Override the bootstrap samples of each bootstrapped run.
    #[arg(long)]
    pub ci_bootstrap: Option<usize>,

    /// CSV with one row per grid point; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// JSON summary with the full configuration of every grid point.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}
