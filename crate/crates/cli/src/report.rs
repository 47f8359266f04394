//! JSON report layout. The schema in `schema/report.schema.json` describes
//! the same structure; bump [`SCHEMA_VERSION`] when either changes.

use std::io::Write;
use std::path::Path;

use jodscale::outliers::OutlierReport;
use jodscale::scaling::ScaleOptions;
use jodscale::stats::{BootstrapResult, SignificanceReport};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: String,
    /// Absent for commands that draw no random numbers.
    pub seed: Option<u64>,
    pub options: ReportOptions,
}

impl Provenance {
    pub fn new(command: &'static str, input: &Path, seed: Option<u64>, options: ReportOptions) -> Self {
        Provenance {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            input: input.display().to_string(),
            seed,
            options,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReportOptions {
    pub scaling: ScaleOptions,
    pub bootstrap: Option<usize>,
    pub alpha: Option<f64>,
    pub per_content: bool,
    pub reference: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub analyses: Vec<Analysis>,
}

/// Results for one pooled matrix: all scenes, or one scene with
/// `--per-content`.
#[derive(Debug, Serialize)]
pub struct Analysis {
    pub content: Option<String>,
    pub conditions: Vec<String>,
    pub observers: usize,
    pub comparisons: u64,
    pub jod: Vec<f64>,
    pub log_posterior: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outliers: Option<OutlierSection>,
}

#[derive(Debug, Serialize)]
pub struct BootstrapSection {
    pub samples: usize,
    pub redraws: usize,
    /// `null` for the reference condition, which has no interval.
    pub ci_low: Vec<Option<f64>>,
    pub ci_high: Vec<Option<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub significance: SignificanceSection,
}

impl BootstrapSection {
    pub fn new(result: &BootstrapResult, significance: &SignificanceReport) -> Self {
        let without_anchor =
            |v: &[f64]| v.iter().enumerate().map(|(i, &x)| (i > 0).then_some(x)).collect();
        BootstrapSection {
            samples: result.len(),
            redraws: result.redraws,
            ci_low: without_anchor(&result.ci_low),
            ci_high: without_anchor(&result.ci_high),
            covariance: rows(&result.covariance, |&x| x),
            significance: SignificanceSection::new(significance),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SignificanceSection {
    pub alpha: f64,
    pub correction: &'static str,
    /// `null` where the difference variance is zero but the scores differ.
    pub z_scores: Vec<Vec<Option<f64>>>,
    pub p_values: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub degenerate: Vec<Vec<bool>>,
}

impl SignificanceSection {
    fn new(r: &SignificanceReport) -> Self {
        SignificanceSection {
            alpha: r.alpha,
            correction: "none",
            z_scores: rows(&r.z_scores, |&z| z.is_finite().then_some(z)),
            p_values: rows(&r.p_values, |&p| p),
            significant: rows(&r.significant, |&s| s),
            degenerate: rows(&r.degenerate, |&d| d),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutlierSection {
    pub threshold: f64,
    pub q1: f64,
    pub q3: f64,
    /// Ordered by descending score.
    pub observers: Vec<OutlierRow>,
}

#[derive(Debug, Serialize)]
pub struct OutlierRow {
    pub observer: String,
    pub log_likelihood: f64,
    pub iqr_score: f64,
    pub flagged: bool,
}

impl OutlierSection {
    pub fn new(report: &OutlierReport, names: &[String]) -> Self {
        OutlierSection {
            threshold: report.threshold,
            q1: report.q1,
            q3: report.q3,
            observers: report
                .ranking()
                .into_iter()
                .map(|k| {
                    let o = &report.observers[k];
                    OutlierRow {
                        observer: names[k].clone(),
                        log_likelihood: o.log_likelihood,
                        iqr_score: o.iqr_score,
                        flagged: o.flagged,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutlierCommandReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub outliers: OutlierSection,
}

fn rows<T: nalgebra::Scalar, U>(m: &DMatrix<T>, f: impl Fn(&T) -> U) -> Vec<Vec<U>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
        .collect()
}

/// Pretty-printed JSON followed by a newline, to `path` or stdout.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Analysis(format!("cannot serialise report: {e}")))?;
    text.push('\n');
    write_text(&text, path)
}

pub fn write_text(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}
