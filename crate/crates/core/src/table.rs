//! Prediction tables: the hard-label output of a classifier pool on one split
//! of one fold, aligned sample-by-sample with the ground truth.
//!
//! On disk a table is a small CSV:
//!
//! ```text
//! sample_id,truth,resnet18_triplet,vgg16_nngk
//! #num_classes=30
//! 0,4,4,4
//! 1,17,17,2
//! ```
//!
//! The `#num_classes=` directive is optional; without it the class count is
//! inferred as one more than the largest label in the file.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Class index of a sample or a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for LabelId {
    fn from(v: u32) -> Self {
        LabelId(v)
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table (line {line}): {reason}")]
    MalformedFile { line: usize, reason: String },
    #[error("label {label} is out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: usize },
    #[error("duplicate classifier name `{0}`")]
    DuplicateClassifier(String),
    #[error("classifier index {index} out of range for a pool of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sample order differs between merged tables at row {row}")]
    RowOrderMismatch { row: usize },
    #[error("ground truth differs between merged tables at row {row}")]
    TruthMismatch { row: usize },
    #[error("malformed fold manifest: {0}")]
    MalformedManifest(String),
    #[error("fold {fold} has more than one `{split}` entry")]
    DuplicateManifestEntry { fold: u32, split: Split },
}

impl TableError {
    pub fn is_io(&self) -> bool {
        matches!(self, TableError::Io { .. })
    }

    fn malformed(line: usize, reason: impl Into<String>) -> Self {
        TableError::MalformedFile {
            line,
            reason: reason.into(),
        }
    }
}

/// Hard-label predictions of `M` classifiers on `N` samples.
///
/// Immutable once built; every constructor validates the shape and label
/// invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionTable {
    classifier_names: Vec<String>,
    sample_ids: Vec<u64>,
    truth: Vec<LabelId>,
    predictions: Vec<Vec<LabelId>>,
    num_classes: usize,
}

impl PredictionTable {
    /// Builds a table. `num_classes = None` infers `1 + max label`.
    pub fn new(
        classifier_names: Vec<String>,
        sample_ids: Vec<u64>,
        truth: Vec<LabelId>,
        predictions: Vec<Vec<LabelId>>,
        num_classes: Option<usize>,
    ) -> Result<Self, TableError> {
        if classifier_names.is_empty() {
            return Err(TableError::malformed(
                0,
                "a table needs at least one classifier",
            ));
        }
        if truth.is_empty() {
            return Err(TableError::malformed(
                0,
                "a table needs at least one sample",
            ));
        }
        if sample_ids.len() != truth.len() {
            return Err(TableError::malformed(
                0,
                format!(
                    "{} sample ids for {} truth labels",
                    sample_ids.len(),
                    truth.len()
                ),
            ));
        }
        if predictions.len() != classifier_names.len() {
            return Err(TableError::malformed(
                0,
                format!(
                    "{} prediction rows for {} classifiers",
                    predictions.len(),
                    classifier_names.len()
                ),
            ));
        }
        let mut seen = HashSet::new();
        for name in &classifier_names {
            if name.is_empty() || name.contains(',') {
                return Err(TableError::malformed(
                    0,
                    format!("invalid classifier name `{name}`"),
                ));
            }
            if !seen.insert(name.as_str()) {
                return Err(TableError::DuplicateClassifier(name.clone()));
            }
        }
        for (i, row) in predictions.iter().enumerate() {
            if row.len() != truth.len() {
                return Err(TableError::malformed(
                    0,
                    format!(
                        "classifier `{}` has {} predictions, expected {}",
                        classifier_names[i],
                        row.len(),
                        truth.len()
                    ),
                ));
            }
        }

        let max_label = truth
            .iter()
            .chain(predictions.iter().flatten())
            .map(|l| l.0)
            .max()
            .unwrap_or(0);
        let num_classes = match num_classes {
            Some(0) => return Err(TableError::malformed(0, "num_classes must be positive")),
            Some(k) => {
                if max_label as usize >= k {
                    return Err(TableError::LabelOutOfRange {
                        label: max_label,
                        num_classes: k,
                    });
                }
                k
            }
            None => max_label as usize + 1,
        };

        Ok(Self {
            classifier_names,
            sample_ids,
            truth,
            predictions,
            num_classes,
        })
    }

    /// Loads and validates a prediction CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, TableError> {
        let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines
            .next()
            .filter(|(_, l)| !l.is_empty())
            .ok_or_else(|| TableError::malformed(1, "missing header"))?;
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() < 3 || columns[0] != "sample_id" || columns[1] != "truth" {
            return Err(TableError::malformed(
                1,
                "header must be `sample_id,truth,<classifier>,...`",
            ));
        }
        let names: Vec<String> = columns[2..].iter().map(|s| s.to_string()).collect();
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(TableError::malformed(1, "empty classifier name"));
            }
            if !seen.insert(name.as_str()) {
                return Err(TableError::DuplicateClassifier(name.clone()));
            }
        }
        let m = names.len();

        let mut declared = None;
        let mut sample_ids = Vec::new();
        let mut truth = Vec::new();
        let mut predictions: Vec<Vec<LabelId>> = vec![Vec::new(); m];
        for (line_no, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#num_classes=") {
                if line_no != 2 {
                    return Err(TableError::malformed(
                        line_no,
                        "`#num_classes=` must be the second line",
                    ));
                }
                let k: usize = rest.parse().map_err(|_| {
                    TableError::malformed(line_no, format!("bad class count `{rest}`"))
                })?;
                declared = Some(k);
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != m + 2 {
                return Err(TableError::malformed(
                    line_no,
                    format!("expected {} fields, found {}", m + 2, fields.len()),
                ));
            }
            let id: u64 = fields[0].parse().map_err(|_| {
                TableError::malformed(line_no, format!("bad sample id `{}`", fields[0]))
            })?;
            let parse_label = |s: &str| -> Result<LabelId, TableError> {
                s.parse::<u32>()
                    .map(LabelId)
                    .map_err(|_| TableError::malformed(line_no, format!("bad label `{s}`")))
            };
            sample_ids.push(id);
            truth.push(parse_label(fields[1])?);
            for (row, field) in predictions.iter_mut().zip(&fields[2..]) {
                row.push(parse_label(field)?);
            }
        }
        if truth.is_empty() {
            return Err(TableError::malformed(1, "table has no samples"));
        }
        Self::new(names, sample_ids, truth, predictions, declared)
    }

    /// Serializes to the CSV format, always writing the class-count directive
    /// so that a reload reproduces the table exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(16 * self.len() * (self.num_classifiers() + 2));
        out.push_str("sample_id,truth");
        for name in &self.classifier_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        out.push_str(&format!("#num_classes={}\n", self.num_classes));
        for j in 0..self.len() {
            out.push_str(&format!("{},{}", self.sample_ids[j], self.truth[j]));
            for row in &self.predictions {
                out.push_str(&format!(",{}", row[j]));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TableError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Concatenates the classifier columns of tables that describe the same
    /// samples in the same order.
    pub fn merge(tables: &[PredictionTable]) -> Result<Self, TableError> {
        let first = tables
            .first()
            .ok_or_else(|| TableError::malformed(0, "nothing to merge"))?;
        let mut names = Vec::new();
        let mut predictions = Vec::new();
        let mut num_classes = 0;
        for table in tables {
            if table.len() != first.len() {
                return Err(TableError::RowOrderMismatch {
                    row: table.len().min(first.len()),
                });
            }
            if let Some(row) =
                (0..first.len()).find(|&j| table.sample_ids[j] != first.sample_ids[j])
            {
                return Err(TableError::RowOrderMismatch { row });
            }
            if let Some(row) = (0..first.len()).find(|&j| table.truth[j] != first.truth[j]) {
                return Err(TableError::TruthMismatch { row });
            }
            names.extend(table.classifier_names.iter().cloned());
            predictions.extend(table.predictions.iter().cloned());
            num_classes = num_classes.max(table.num_classes);
        }
        Self::new(
            names,
            first.sample_ids.clone(),
            first.truth.clone(),
            predictions,
            Some(num_classes),
        )
    }

    /// Number of classifiers `M`.
    pub fn num_classifiers(&self) -> usize {
        self.classifier_names.len()
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn classifier_names(&self) -> &[String] {
        &self.classifier_names
    }

    pub fn sample_ids(&self) -> &[u64] {
        &self.sample_ids
    }

    pub fn truth(&self) -> &[LabelId] {
        &self.truth
    }

    pub fn predictions(&self) -> &[Vec<LabelId>] {
        &self.predictions
    }

    pub fn classifier_index(&self, name: &str) -> Option<usize> {
        self.classifier_names.iter().position(|n| n == name)
    }

    pub fn row(&self, index: usize) -> Result<&[LabelId], TableError> {
        self.predictions
            .get(index)
            .map(Vec::as_slice)
            .ok_or(TableError::IndexOutOfRange {
                index,
                len: self.num_classifiers(),
            })
    }

    /// Number of samples classifier `index` labels correctly.
    pub fn hits(&self, index: usize) -> Result<usize, TableError> {
        let row = self.row(index)?;
        Ok(row.iter().zip(&self.truth).filter(|(p, t)| p == t).count())
    }

    /// Fraction of samples classifier `index` labels correctly.
    pub fn classifier_accuracy(&self, index: usize) -> Result<f64, TableError> {
        Ok(self.hits(index)? as f64 / self.len() as f64)
    }
}

/// Which part of a fold a table was predicted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// One line of a fold manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold: u32,
    pub split: Split,
    pub path: PathBuf,
}

/// The set of prediction tables making up a cross-validation run.
///
/// Serialized as a JSON array of `{"fold": 0, "split": "test", "path": "..."}`.
/// Relative paths are resolved against the manifest's directory on load.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FoldManifest {
    entries: Vec<FoldEntry>,
}

impl FoldManifest {
    pub fn new(entries: Vec<FoldEntry>) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert((e.fold, e.split)) {
                return Err(TableError::DuplicateManifestEntry {
                    fold: e.fold,
                    split: e.split,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest = Self::from_json_str(&text)?;
        if let Some(dir) = path.parent() {
            for e in &mut manifest.entries {
                if e.path.is_relative() {
                    e.path = dir.join(&e.path);
                }
            }
        }
        Ok(manifest)
    }

    pub fn from_json_str(text: &str) -> Result<Self, TableError> {
        let entries: Vec<FoldEntry> =
            serde_json::from_str(text).map_err(|e| TableError::MalformedManifest(e.to_string()))?;
        Self::new(entries)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("manifest entries always serialize")
    }

    pub fn entries(&self) -> &[FoldEntry] {
        &self.entries
    }

    /// Fold ids in ascending order.
    pub fn folds(&self) -> Vec<u32> {
        self.entries
            .iter()
            .map(|e| e.fold)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn path(&self, fold: u32, split: Split) -> Option<&Path> {
        self.entries
            .iter()
            .find(|e| e.fold == fold && e.split == split)
            .map(|e| e.path.as_path())
    }
}
