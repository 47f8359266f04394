//! Trial-level CSV input and per-observer count matrices.
//!
//! The expected layout has one row per comparison:
//!
//! ```text
//! observer,session,scene,condition_1,condition_2,selection
//! 1,1,Window,TMO_Camera,Ferwerda96,1
//! ```
//!
//! `selection` is `1` when the first condition was chosen and `2` when the
//! second was. Column names are matched case-insensitively; extra columns
//! are ignored.

use indexmap::{IndexMap, IndexSet};
use log::warn;
use serde::Serialize;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scaling::CountMatrix;

const REQUIRED_COLUMNS: [&str; 6] = [
    "observer",
    "session",
    "scene",
    "condition_1",
    "condition_2",
    "selection",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Selection {
    First,
    Second,
}

/// One comparison. Conditions are indices into the table's [`ConditionSet`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trial {
    pub observer: String,
    pub session: String,
    pub content: String,
    pub condition_a: usize,
    pub condition_b: usize,
    pub selection: Selection,
}

impl Trial {
    /// `(winner, loser)` condition indices.
    pub fn outcome(&self) -> (usize, usize) {
        match self.selection {
            Selection::First => (self.condition_a, self.condition_b),
            Selection::Second => (self.condition_b, self.condition_a),
        }
    }
}

/// Distinct condition labels; index 0 is the reference scored at 0 JOD.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConditionSet {
    labels: IndexSet<String>,
}

impl ConditionSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = ConditionSet::default();
        for label in labels {
            let label = label.into();
            if !set.labels.insert(label.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate condition label `{label}`"
                )));
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.get_index_of(label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get_index(index).map(String::as_str)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    fn intern(&mut self, label: &str) -> usize {
        match self.labels.get_index_of(label) {
            Some(i) => i,
            None => self.labels.insert_full(label.to_owned()).0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TrialTable {
    pub trials: Vec<Trial>,
    pub conditions: ConditionSet,
}

impl TrialTable {
    /// Builds a table, checking that every trial refers to a known condition
    /// and compares two different ones.
    pub fn new(trials: Vec<Trial>, conditions: ConditionSet) -> Result<Self> {
        for (k, t) in trials.iter().enumerate() {
            let n = conditions.len();
            if t.condition_a >= n || t.condition_b >= n {
                return Err(Error::InvalidParameter(format!(
                    "trial {k} refers to a condition outside the condition set"
                )));
            }
            if t.condition_a == t.condition_b {
                return Err(Error::InvalidParameter(format!(
                    "trial {k} compares a condition with itself"
                )));
            }
        }
        Ok(TrialTable { trials, conditions })
    }

    /// Observer identifiers in order of first appearance.
    pub fn observers(&self) -> Vec<&str> {
        let seen: IndexSet<&str> = self.trials.iter().map(|t| t.observer.as_str()).collect();
        seen.into_iter().collect()
    }

    /// Writes the table back out in the input CSV layout.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(REQUIRED_COLUMNS)?;
        for t in &self.trials {
            let label = |i| self.conditions.label(i).unwrap_or_default();
            let sel = match t.selection {
                Selection::First => "1",
                Selection::Second => "2",
            };
            w.write_record([
                t.observer.as_str(),
                t.session.as_str(),
                t.content.as_str(),
                label(t.condition_a),
                label(t.condition_b),
                sel,
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Parses trial rows from CSV.
///
/// Conditions are numbered in order of first appearance. When
/// `reference_label` is given, that condition is moved to index 0.
pub fn parse_trials<R: Read>(source: R, reference_label: Option<&str>) -> Result<TrialTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    let mut columns = [0usize; REQUIRED_COLUMNS.len()];
    for (slot, name) in columns.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))?;
    }
    for h in headers.iter().filter(|h| !REQUIRED_COLUMNS.contains(&h.as_str())) {
        warn!("ignoring unknown column `{h}`");
    }
    let [observer, session, scene, cond_a, cond_b, selection] = columns;

    let mut conditions = ConditionSet::default();
    let mut trials = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| record.get(k).unwrap_or("");

        let sel = match field(selection) {
            "1" => Selection::First,
            "2" => Selection::Second,
            other => {
                return Err(Error::Row {
                    row,
                    message: format!("selection must be 1 or 2, got `{other}`"),
                })
            }
        };
        let (a, b) = (field(cond_a), field(cond_b));
        if a.is_empty() || b.is_empty() {
            return Err(Error::Row {
                row,
                message: "empty condition label".into(),
            });
        }
        if a == b {
            return Err(Error::Row {
                row,
                message: format!("condition `{a}` is compared with itself"),
            });
        }
        trials.push(Trial {
            observer: field(observer).to_owned(),
            session: field(session).to_owned(),
            content: field(scene).to_owned(),
            condition_a: conditions.intern(a),
            condition_b: conditions.intern(b),
            selection: sel,
        });
    }

    let mut table = TrialTable { trials, conditions };
    if let Some(reference) = reference_label {
        move_to_front(&mut table, reference)?;
    }
    Ok(table)
}

fn move_to_front(table: &mut TrialTable, reference: &str) -> Result<()> {
    let r = table
        .conditions
        .index_of(reference)
        .ok_or_else(|| Error::UnknownReference(reference.to_owned()))?;
    let remap = |i: usize| match i {
        i if i == r => 0,
        i if i < r => i + 1,
        i => i,
    };
    let mut labels: Vec<String> = table.conditions.labels().map(str::to_owned).collect();
    let label = labels.remove(r);
    labels.insert(0, label);
    table.conditions = ConditionSet::new(labels)?;
    for t in &mut table.trials {
        t.condition_a = remap(t.condition_a);
        t.condition_b = remap(t.condition_b);
    }
    Ok(())
}

/// Key of a per-observer matrix: the observer and, when grouping by
/// content, the scene.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ObserverKey {
    pub observer: String,
    pub content: Option<String>,
}

/// One count matrix per observer (and per content when `group_by_content`),
/// in order of first appearance.
pub fn build_observer_matrices(
    table: &TrialTable,
    group_by_content: bool,
) -> IndexMap<ObserverKey, CountMatrix> {
    let n = table.conditions.len();
    let mut out: IndexMap<ObserverKey, CountMatrix> = IndexMap::new();
    for t in &table.trials {
        let key = ObserverKey {
            observer: t.observer.clone(),
            content: group_by_content.then(|| t.content.clone()),
        };
        let (winner, loser) = t.outcome();
        out.entry(key)
            .or_insert_with(|| CountMatrix::zeros(n))
            .add_wins(winner, loser, 1);
    }
    out
}

/// Element-wise sum of count matrices of dimension `n`.
pub fn pool_matrices<'a, I>(n: usize, matrices: I) -> Result<CountMatrix>
where
    I: IntoIterator<Item = &'a CountMatrix>,
{
    let mut pooled = CountMatrix::zeros(n);
    for m in matrices {
        pooled.accumulate(m)?;
    }
    Ok(pooled)
}
