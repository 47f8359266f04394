use std::fs::File;

use indexmap::IndexMap;
use jodscale::ingest::{build_observer_matrices, parse_trials, pool_matrices, TrialTable};
use jodscale::outliers::{observer_preference_profile, outlier_scores};
use jodscale::scaling::{scale_mle, CountMatrix, ScaleOptions};
use jodscale::stats::{bootstrap_scale, pairwise_significance};

use crate::args::{InputArgs, OutlierArgs, ScaleArgs};
use crate::error::{CliError, CliResult};
use crate::report::{
    write_json, write_text, Analysis, AnalysisReport, BootstrapSection, OutlierCommandReport,
    OutlierSection, Provenance, ReportOptions, SCHEMA_VERSION,
};
use crate::svg;

fn load_table(input: &InputArgs) -> CliResult<TrialTable> {
    let file = File::open(&input.input).map_err(|e| CliError::io(&input.input, e))?;
    parse_trials(file, input.reference.as_deref()).map_err(|e| match e {
        // every ingest failure is a problem with the file or the flags
        e @ jodscale::Error::UnknownReference(_) => CliError::Input(e.to_string()),
        e => CliError::Input(format!("{}: {e}", input.input.display())),
    })
}

fn validated(opts: ScaleOptions) -> CliResult<ScaleOptions> {
    opts.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(opts)
}

/// Observers contributing to one analysis, with their matrices.
struct Group {
    content: Option<String>,
    names: Vec<String>,
    matrices: Vec<CountMatrix>,
}

fn groups(table: &TrialTable, per_content: bool) -> Vec<Group> {
    let mut out: IndexMap<Option<String>, Group> = IndexMap::new();
    for (key, m) in build_observer_matrices(table, per_content) {
        let g = out.entry(key.content.clone()).or_insert_with(|| Group {
            content: key.content.clone(),
            names: Vec::new(),
            matrices: Vec::new(),
        });
        g.names.push(key.observer);
        g.matrices.push(m);
    }
    out.into_values().collect()
}

/// Drops conditions that no observer in the group compared, keeping the
/// original order so the reference stays first when present.
fn restrict(group: &mut Group, labels: &[String]) -> Vec<String> {
    let n = labels.len();
    let pooled = pool_matrices(n, &group.matrices).expect("matrices share the table dimension");
    let keep: Vec<usize> = (0..n)
        .filter(|&i| (0..n).any(|j| pooled.trials(i, j) > 0))
        .collect();
    if keep.len() == n {
        return labels.to_vec();
    }
    for m in &mut group.matrices {
        let rows: Vec<Vec<u32>> = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| if i == j { 0 } else { m.wins(i, j) }).collect())
            .collect();
        *m = CountMatrix::from_rows(&rows).expect("square submatrix with zero diagonal");
    }
    keep.iter().map(|&i| labels[i].clone()).collect()
}

pub fn cmd_scale(args: &ScaleArgs) -> CliResult<()> {
    let opts = validated(args.model.options())?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Input(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if args.bootstrap == 1 {
        return Err(CliError::Input("--bootstrap must be 0 or at least 2".into()));
    }
    let table = load_table(&args.input)?;
    if table.trials.is_empty() {
        return Err(CliError::Analysis("the input contains no trials".into()));
    }
    let labels: Vec<String> = table.conditions.labels().map(str::to_owned).collect();

    let mut analyses = Vec::new();
    for mut group in groups(&table, args.per_content) {
        let conditions = restrict(&mut group, &labels);
        let content = group.content.clone();
        let analysis = analyse(group, conditions, &opts, args).map_err(|e| match (e, content) {
            (CliError::Analysis(msg), Some(scene)) => {
                CliError::Analysis(format!("scene `{scene}`: {msg}"))
            }
            (e, _) => e,
        })?;
        analyses.push(analysis);
    }

    if let Some(path) = &args.plot {
        write_text(&svg::score_plot(&analyses), Some(path))?;
    }
    if let Some(path) = &args.graph {
        write_text(&svg::significance_graph(&analyses), Some(path))?;
    }
    if let Some(path) = &args.edges {
        write_text(&svg::edge_list(&analyses), Some(path))?;
    }

    let report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance::new(
            "scale",
            &args.input.input,
            Some(args.seed),
            ReportOptions {
                scaling: opts,
                bootstrap: Some(args.bootstrap),
                alpha: Some(args.alpha),
                per_content: args.per_content,
                reference: args.input.reference.clone(),
            },
        ),
        analyses,
    };
    write_json(&report, args.output.as_deref())
}

fn analyse(
    group: Group,
    conditions: Vec<String>,
    opts: &ScaleOptions,
    args: &ScaleArgs,
) -> CliResult<Analysis> {
    let n = conditions.len();
    let pooled = pool_matrices(n, &group.matrices)?;
    let fit = scale_mle(&pooled, opts)?;
    if !fit.converged {
        log::warn!("optimisation stopped after {} iterations without converging", fit.iterations);
    }

    let bootstrap = if args.bootstrap > 0 {
        let b = bootstrap_scale(&group.matrices, args.bootstrap, opts, args.seed)?;
        let sig = pairwise_significance(&fit.jod, &b.covariance, args.alpha)?;
        Some(BootstrapSection::new(&b, &sig))
    } else {
        None
    };

    let outliers = if args.outliers {
        let report = outlier_scores(&group.matrices, opts)?;
        Some(OutlierSection::new(&report, &group.names))
    } else {
        None
    };

    Ok(Analysis {
        content: group.content,
        conditions,
        observers: group.matrices.len(),
        comparisons: pooled.total(),
        jod: fit.jod,
        log_posterior: fit.objective,
        converged: fit.converged,
        iterations: fit.iterations,
        bootstrap,
        outliers,
    })
}

pub fn cmd_outliers(args: &OutlierArgs) -> CliResult<()> {
    let opts = validated(args.model.options())?;
    let table = load_table(&args.input)?;
    let labels: Vec<String> = table.conditions.labels().map(str::to_owned).collect();
    let group = groups(&table, false)
        .pop()
        .ok_or_else(|| CliError::Analysis("the input contains no trials".into()))?;

    let report = outlier_scores(&group.matrices, &opts)?;
    let section = OutlierSection::new(&report, &group.names);

    if let Some(path) = &args.profile {
        let chosen: Vec<usize> = if args.profile_observers.is_empty() {
            (0..group.names.len()).filter(|&k| report.observers[k].flagged).collect()
        } else {
            args.profile_observers
                .iter()
                .map(|name| {
                    group.names.iter().position(|n| n == name).ok_or_else(|| {
                        CliError::Input(format!("observer `{name}` does not appear in the data"))
                    })
                })
                .collect::<CliResult<_>>()?
        };
        write_text(&profile_csv(&group, &labels, &chosen)?, Some(path))?;
    }

    let out = OutlierCommandReport {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance::new(
            "outliers",
            &args.input.input,
            None,
            ReportOptions {
                scaling: opts,
                bootstrap: None,
                alpha: None,
                per_content: false,
                reference: args.input.reference.clone(),
            },
        ),
        outliers: section,
    };
    write_json(&out, args.output.as_deref())
}

/// Long format: one row per profiled observer, condition and source
/// observer, where the source is either the profiled observer or one of the
/// population.
fn profile_csv(group: &Group, labels: &[String], chosen: &[usize]) -> CliResult<String> {
    let rates: Vec<Vec<Option<f64>>> = (0..group.matrices.len())
        .map(|o| observer_preference_profile(&group.matrices, o).map(|p| p.observer))
        .collect::<jodscale::Result<_>>()?;
    let mut out = String::from("profiled_observer,condition,group,source_observer,selection_rate\n");
    for &k in chosen {
        let who = &group.names[k];
        for (i, label) in labels.iter().enumerate() {
            for (o, source) in group.names.iter().enumerate() {
                if let Some(rate) = rates[o][i] {
                    let role = if o == k { "observer" } else { "population" };
                    out += &format!("{who},{label},{role},{source},{rate}\n");
                }
            }
        }
    }
    Ok(out)
}
