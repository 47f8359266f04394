//! Grids of Monte-Carlo configurations: presets and TOML files.
//!
//! A grid file has a `[base]` table with any [`SimConfig`] field and a
//! `[grid]` table of lists; every combination of the lists is one grid
//! point:
//!
//! ```toml
//! [base]
//! q_true = [0.0, 1.0, 2.0, 3.0, 4.0]
//! runs = 500
//!
//! [grid]
//! observers = [10, 20, 40]
//! use_prior = [true, false]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use jodscale::simulate::{run_monte_carlo, Design, SimConfig, SimMetrics, TieModel};
use serde::{Deserialize, Serialize};

use crate::args::{Preset, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::report::{write_json, write_text, SCHEMA_VERSION};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub base: SimConfig,
    pub grid: Grid,
}

/// Values to sweep. Absent lists keep the base value.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    /// Designs, each optionally with its own repetition count so that
    /// designs can be compared at equal effort.
    pub designs: Option<Vec<DesignPoint>>,
    pub observers: Option<Vec<usize>>,
    pub repetitions: Option<Vec<usize>>,
    /// Replaces the true scores by `0, s, 2s, …` with as many conditions as
    /// the base configuration has.
    pub spacing: Option<Vec<f64>>,
    /// Whether observers may answer "no preference"; the threshold
    /// distribution comes from the base `tie_model` or its default.
    pub ties: Option<Vec<bool>>,
    pub use_prior: Option<Vec<bool>>,
    pub drop_unanimous: Option<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPoint {
    pub design: Design,
    pub repetitions: Option<usize>,
}

fn axis<T: Clone>(values: &Option<Vec<T>>, base: T) -> Vec<T> {
    match values {
        Some(v) if !v.is_empty() => v.clone(),
        _ => vec![base],
    }
}

impl GridConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = SimConfig {
            runs: 1000,
            ..SimConfig::default()
        };
        match preset {
            Preset::PriorBenefit => GridConfig {
                base,
                grid: Grid {
                    observers: Some(vec![5, 10, 15, 20, 30, 40, 60]),
                    use_prior: Some(vec![true, false]),
                    ..Grid::default()
                },
            },
            Preset::Ties => GridConfig {
                base: SimConfig {
                    tie_model: Some(TieModel::default()),
                    ..base
                },
                grid: Grid {
                    observers: Some(vec![10, 20, 40]),
                    ties: Some(vec![false, true]),
                    ..Grid::default()
                },
            },
            Preset::Bias => GridConfig {
                base: SimConfig {
                    q_true: SimConfig::evenly_spaced(6, 2.0),
                    ..base
                },
                grid: Grid {
                    use_prior: Some(vec![false, true]),
                    drop_unanimous: Some(vec![false, true]),
                    ..Grid::default()
                },
            },
            Preset::Qdiff => GridConfig {
                base,
                grid: Grid {
                    spacing: Some(vec![0.25, 0.5, 1.0, 2.0, 3.0]),
                    observers: Some(vec![10, 20]),
                    ..Grid::default()
                },
            },
            Preset::Designs => GridConfig {
                base,
                grid: Grid {
                    // 10 pairs × 2 and 4 pairs × 5: 20 comparisons per observer
                    designs: Some(vec![
                        DesignPoint { design: Design::Complete, repetitions: Some(2) },
                        DesignPoint { design: Design::IncompleteChain, repetitions: Some(5) },
                    ]),
                    observers: Some(vec![5, 10, 20, 40]),
                    ..Grid::default()
                },
            },
        }
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("invalid grid configuration: {e}")))
    }

    /// Every combination of the grid lists, in a fixed order.
    pub fn points(&self) -> Vec<SimConfig> {
        let b = &self.base;
        let designs = axis(&self.grid.designs, DesignPoint { design: b.design, repetitions: None });
        let n = b.q_true.len();
        let mut out = Vec::new();
        for d in &designs {
            for &m in &axis(&self.grid.observers, b.observers) {
                for &t in &axis(&self.grid.repetitions, d.repetitions.unwrap_or(b.repetitions)) {
                    for q in axis(
                        &self.grid.spacing.as_ref().map(|s| {
                            s.iter().map(|&s| SimConfig::evenly_spaced(n, s)).collect()
                        }),
                        b.q_true.clone(),
                    ) {
                        for &ties in &axis(&self.grid.ties, b.tie_model.is_some()) {
                            for &prior in &axis(&self.grid.use_prior, b.use_prior) {
                                for &drop in &axis(&self.grid.drop_unanimous, b.drop_unanimous) {
                                    out.push(SimConfig {
                                        q_true: q.clone(),
                                        design: d.design,
                                        observers: m,
                                        repetitions: t,
                                        tie_model: ties.then(|| b.tie_model.unwrap_or_default()),
                                        use_prior: prior,
                                        drop_unanimous: drop,
                                        ..b.clone()
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    source: String,
    points: Vec<PointSummary>,
}

#[derive(Debug, Serialize)]
struct PointSummary {
    config: SimConfig,
    comparisons: usize,
    metrics: SimMetrics,
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

const CSV_HEADER: &str = "point,design,observers,repetitions,q_true,ties,use_prior,drop_unanimous,\
runs,runs_completed,runs_failed,comparisons,rmse,effect_size,mean_ci_size,ci_coverage,\
ci_runs_completed,mean_jod,bias,std_jod\n";

fn csv_row(k: usize, c: &SimConfig, m: &SimMetrics) -> String {
    let design = match c.design {
        Design::Complete => "complete",
        Design::IncompleteChain => "incomplete-chain",
    };
    format!(
        "{k},{design},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        c.observers,
        c.repetitions,
        join(&c.q_true),
        c.tie_model.is_some(),
        c.use_prior,
        c.drop_unanimous,
        c.runs,
        m.runs_completed,
        m.runs_failed,
        c.total_comparisons(),
        m.rmse,
        opt(m.effect_size),
        opt(m.mean_ci_size),
        opt(m.ci_coverage),
        m.ci_runs_completed,
        join(&m.mean_jod),
        join(&m.bias),
        m.std_jod.as_deref().map(join).unwrap_or_default(),
    )
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let (mut grid, source) = match (&args.preset, &args.config) {
        (Some(p), _) => (GridConfig::preset(*p), format!("preset {p:?}")),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            (GridConfig::from_toml(&text)?, path.display().to_string())
        }
        (None, None) => {
            return Err(CliError::Input("give either --preset or --config".into()));
        }
    };
    let b = &mut grid.base;
    b.runs = args.runs.unwrap_or(b.runs);
    b.seed = args.seed.unwrap_or(b.seed);
    b.ci_runs = args.ci_runs.unwrap_or(b.ci_runs);
    b.ci_bootstrap = args.ci_bootstrap.unwrap_or(b.ci_bootstrap);

    let points = grid.points();
    for p in &points {
        p.validate().map_err(|e| CliError::Input(e.to_string()))?;
    }

    let mut csv = String::from(CSV_HEADER);
    let mut summaries = Vec::with_capacity(points.len());
    for (k, config) in points.into_iter().enumerate() {
        log::info!("grid point {}: {} observers, {} runs", k, config.observers, config.runs);
        let metrics = run_monte_carlo(&config)
            .map_err(|e| CliError::Analysis(format!("grid point {k}: {e}")))?;
        let _ = write!(csv, "{}", csv_row(k, &config, &metrics));
        summaries.push(PointSummary {
            comparisons: config.total_comparisons(),
            config,
            metrics,
        });
    }

    write_text(&csv, args.output.as_deref())?;
    if let Some(path) = &args.summary {
        let summary = SimulationSummary {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            source,
            points: summaries,
        };
        write_json(&summary, Some(path as &Path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expands_every_combination() {
        let g = GridConfig::from_toml(
            "[base]\nq_true = [0.0, 1.0, 2.0]\n[grid]\nobservers = [5, 10]\nuse_prior = [true, false]\nspacing = [0.5, 1.0, 2.0]\n",
        )
        .unwrap();
        let points = g.points();
        assert_eq!(points.len(), 12);
        assert_eq!(points[0].q_true, vec![0.0, 0.5, 1.0]);
        assert!(points.iter().all(|p| p.q_true.len() == 3));
    }

    #[test]
    fn designs_preset_matches_effort() {
        let points = GridConfig::preset(Preset::Designs).points();
        for pair in points.chunks(4).next().unwrap().iter().zip(&points[4..]) {
            assert_eq!(pair.0.total_comparisons(), pair.1.total_comparisons());
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(GridConfig::from_toml("[grid]\nobsevers = [1]\n").is_err());
        assert!(GridConfig::from_toml("[base]\ndesign = \"spiral\"\n").is_err());
    }

    #[test]
    fn ties_axis_uses_the_default_threshold() {
        let points = GridConfig::preset(Preset::Ties).points();
        assert_eq!(points.len(), 6);
        assert!(points[0].tie_model.is_none());
        assert_eq!(points[1].tie_model, Some(TieModel::default()));
    }
}
