//! Fold-by-fold comparison of majority voting over the whole pool against
//! the UMDA-selected ensemble, with reports in JSON, CSV and Markdown.

use std::fmt::Write as _;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{ensemble_accuracy, EnsembleMask, FusionError};
use crate::table::{FoldManifest, PredictionTable, Split, TableError};
use crate::umda::{select_ensemble, RunError, UmdaConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("manifest has no folds")]
    NoFolds,
    #[error("fold {fold} has no {split:?} table")]
    ManifestIncomplete { fold: u32, split: Split },
    #[error("fold {fold}: {reason}")]
    ClassifierSetMismatch { fold: u32, reason: String },
    #[error("fold {fold}: ensemble selection failed")]
    Selection {
        fold: u32,
        #[source]
        source: RunError<FusionError>,
    },
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("malformed report: {0}")]
    MalformedReport(String),
}

/// Validation and test tables of one fold.
#[derive(Clone, Debug)]
pub struct FoldTables {
    pub fold: u32,
    pub validation: PredictionTable,
    pub test: PredictionTable,
}

impl FoldTables {
    /// Loads every fold of `manifest`, checking that each has both tables.
    pub fn load_all(manifest: &FoldManifest) -> Result<Vec<FoldTables>, ExperimentError> {
        let folds = manifest.folds();
        if folds.is_empty() {
            return Err(ExperimentError::NoFolds);
        }
        folds
            .into_iter()
            .map(|fold| {
                let load = |split| -> Result<PredictionTable, ExperimentError> {
                    let path = manifest
                        .path(fold, split)
                        .ok_or(ExperimentError::ManifestIncomplete { fold, split })?;
                    Ok(PredictionTable::load(path)?)
                };
                Ok(FoldTables {
                    fold,
                    validation: load(Split::Validation)?,
                    test: load(Split::Test)?,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: u32,
    pub seed: u64,
    pub mv_validation: f64,
    pub mv_test: f64,
    pub umda_validation: f64,
    pub umda_test: f64,
    pub umda_popcount: usize,
    pub umda_mask: EnsembleMask,
    /// Classifier with the best validation accuracy.
    pub best_single: String,
    pub best_single_validation: f64,
    pub best_single_test: f64,
}

/// Mean and population standard deviation of a strategy's test accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: String,
    pub mean: f64,
    pub std: f64,
    pub mean_popcount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeGain {
    pub baseline: String,
    pub baseline_accuracy: f64,
    pub umda_accuracy: f64,
    pub gain_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub num_classifiers: usize,
    pub classifiers: Vec<String>,
    pub folds: Vec<FoldRecord>,
    pub aggregates: Vec<Aggregate>,
    pub gains: Vec<RelativeGain>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(format!("unknown report format `{s}`")),
        }
    }
}

/// `(new - old) / old * 100`.
pub fn relative_gain(new: f64, old: f64) -> f64 {
    (new - old) / old * 100.0
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn check_fold(f: &FoldTables, names: &[String]) -> Result<(), ExperimentError> {
    let mismatch = |reason: String| ExperimentError::ClassifierSetMismatch {
        fold: f.fold,
        reason,
    };
    if f.validation.classifier_names() != f.test.classifier_names() {
        return Err(mismatch(
            "validation and test tables list different classifiers".into(),
        ));
    }
    if f.validation.classifier_names() != names {
        return Err(mismatch("classifiers differ from the first fold".into()));
    }
    Ok(())
}

fn run_fold(f: &FoldTables, config: &UmdaConfig, seed: u64) -> Result<FoldRecord, ExperimentError> {
    let m = f.validation.num_classifiers();
    let full = EnsembleMask::full(m);
    let seed = seed.wrapping_add(u64::from(f.fold));
    let selection =
        select_ensemble(&f.validation, &config.clone().with_seed(seed)).map_err(|source| {
            ExperimentError::Selection {
                fold: f.fold,
                source,
            }
        })?;

    let mut best = 0;
    let mut best_acc = f.validation.classifier_accuracy(0)?;
    for i in 1..m {
        let acc = f.validation.classifier_accuracy(i)?;
        if acc > best_acc {
            best = i;
            best_acc = acc;
        }
    }
    Ok(FoldRecord {
        fold: f.fold,
        seed,
        mv_validation: ensemble_accuracy(&f.validation, &full)?,
        mv_test: ensemble_accuracy(&f.test, &full)?,
        umda_validation: selection.validation_fitness,
        umda_test: ensemble_accuracy(&f.test, &selection.mask)?,
        umda_popcount: selection.mask.popcount(),
        umda_mask: selection.mask,
        best_single: f.validation.classifier_names()[best].clone(),
        best_single_validation: best_acc,
        best_single_test: f.test.classifier_accuracy(best)?,
    })
}

/// Runs every fold: majority vote of the full pool and of the best single
/// classifier on test, and UMDA selection on validation (seeded with
/// `seed + fold`) scored on test. Folds run on separate threads.
pub fn evaluate_folds(
    folds: &[FoldTables],
    config: &UmdaConfig,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let first = folds.first().ok_or(ExperimentError::NoFolds)?;
    let names = first.validation.classifier_names().to_vec();
    for f in folds {
        check_fold(f, &names)?;
    }
    let results: Vec<Result<FoldRecord, ExperimentError>> = thread::scope(|s| {
        let handles: Vec<_> = folds
            .iter()
            .map(|f| s.spawn(move || run_fold(f, config, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold thread panicked"))
            .collect()
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let m = names.len();
    let column = |get: fn(&FoldRecord) -> f64| records.iter().map(get).collect::<Vec<_>>();
    let aggregate = |strategy: &str, values: Vec<f64>, popcounts: Vec<f64>| {
        let (mean, std) = mean_std(&values);
        Aggregate {
            strategy: strategy.to_string(),
            mean,
            std,
            mean_popcount: mean_std(&popcounts).0,
        }
    };
    let aggregates = vec![
        aggregate(
            "best_single",
            column(|r| r.best_single_test),
            vec![1.0; records.len()],
        ),
        aggregate("mv", column(|r| r.mv_test), vec![m as f64; records.len()]),
        aggregate(
            "umda",
            column(|r| r.umda_test),
            column(|r| r.umda_popcount as f64),
        ),
    ];
    let mut report = ExperimentReport {
        seed,
        num_classifiers: m,
        classifiers: names,
        folds: records,
        aggregates,
        gains: Vec::new(),
    };
    for strategy in ["mv", "best_single"] {
        let acc = report.aggregate(strategy).expect("built above").mean;
        report.add_baseline(strategy, acc);
    }
    Ok(report)
}

/// Loads the manifest's tables and runs [`evaluate_folds`].
pub fn run_experiment(
    manifest: &FoldManifest,
    config: &UmdaConfig,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    evaluate_folds(&FoldTables::load_all(manifest)?, config, seed)
}

fn fmt_popcount(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{p:.0}")
    } else {
        format!("{p:.1}")
    }
}

impl ExperimentReport {
    pub fn aggregate(&self, strategy: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.strategy == strategy)
    }

    /// Appends the relative gain of the UMDA mean test accuracy over
    /// `accuracy`, given as a fraction like every accuracy in the report.
    pub fn add_baseline(&mut self, name: &str, accuracy: f64) {
        let umda = self.aggregate("umda").map_or(f64::NAN, |a| a.mean);
        self.gains.push(RelativeGain {
            baseline: name.to_string(),
            baseline_accuracy: accuracy,
            umda_accuracy: umda,
            gain_percent: relative_gain(umda, accuracy),
        });
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Markdown => self.to_markdown(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::MalformedReport(e.to_string()))
    }

    /// Long-format CSV, one value per line: `section,key,field,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,field,value\n");
        let mut row = |section: &str, key: &str, field: &str, value: String| {
            let _ = writeln!(out, "{section},{key},{field},{value}");
        };
        row("meta", "", "seed", self.seed.to_string());
        row(
            "meta",
            "",
            "num_classifiers",
            self.num_classifiers.to_string(),
        );
        row("meta", "", "classifiers", self.classifiers.join(";"));
        for f in &self.folds {
            let k = f.fold.to_string();
            row("fold", &k, "seed", f.seed.to_string());
            row("fold", &k, "mv_validation", f.mv_validation.to_string());
            row("fold", &k, "mv_test", f.mv_test.to_string());
            row("fold", &k, "umda_validation", f.umda_validation.to_string());
            row("fold", &k, "umda_test", f.umda_test.to_string());
            row("fold", &k, "umda_popcount", f.umda_popcount.to_string());
            row("fold", &k, "umda_mask", f.umda_mask.to_string());
            row("fold", &k, "best_single", f.best_single.clone());
            row(
                "fold",
                &k,
                "best_single_validation",
                f.best_single_validation.to_string(),
            );
            row(
                "fold",
                &k,
                "best_single_test",
                f.best_single_test.to_string(),
            );
        }
        for a in &self.aggregates {
            row("aggregate", &a.strategy, "mean", a.mean.to_string());
            row("aggregate", &a.strategy, "std", a.std.to_string());
            row(
                "aggregate",
                &a.strategy,
                "mean_popcount",
                a.mean_popcount.to_string(),
            );
        }
        for g in &self.gains {
            row(
                "gain",
                &g.baseline,
                "baseline_accuracy",
                g.baseline_accuracy.to_string(),
            );
            row(
                "gain",
                &g.baseline,
                "umda_accuracy",
                g.umda_accuracy.to_string(),
            );
            row(
                "gain",
                &g.baseline,
                "gain_percent",
                g.gain_percent.to_string(),
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ExperimentError> {
        let bad = |line: usize, what: &str| {
            ExperimentError::MalformedReport(format!("line {line}: {what}"))
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "section,key,field,value")) => {}
            _ => return Err(bad(1, "expected header `section,key,field,value`")),
        }
        let mut report = ExperimentReport {
            seed: 0,
            num_classifiers: 0,
            classifiers: Vec::new(),
            folds: Vec::new(),
            aggregates: Vec::new(),
            gains: Vec::new(),
        };
        for (i, line) in lines {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(4, ',').collect();
            let [section, key, field, value] = parts[..] else {
                return Err(bad(n, "expected four fields"));
            };
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(n, "not a number"));
            let int = |v: &str| v.parse::<u64>().map_err(|_| bad(n, "not an integer"));
            match section {
                "meta" => match field {
                    "seed" => report.seed = int(value)?,
                    "num_classifiers" => report.num_classifiers = int(value)? as usize,
                    "classifiers" => {
                        report.classifiers = value.split(';').map(String::from).collect()
                    }
                    _ => return Err(bad(n, "unknown meta field")),
                },
                "fold" => {
                    let fold = int(key)? as u32;
                    if report.folds.last().is_none_or(|f| f.fold != fold) {
                        report.folds.push(FoldRecord {
                            fold,
                            seed: 0,
                            mv_validation: 0.0,
                            mv_test: 0.0,
                            umda_validation: 0.0,
                            umda_test: 0.0,
                            umda_popcount: 0,
                            umda_mask: EnsembleMask::new(Vec::new()),
                            best_single: String::new(),
                            best_single_validation: 0.0,
                            best_single_test: 0.0,
                        });
                    }
                    let f = report.folds.last_mut().expect("pushed above");
                    match field {
                        "seed" => f.seed = int(value)?,
                        "mv_validation" => f.mv_validation = num(value)?,
                        "mv_test" => f.mv_test = num(value)?,
                        "umda_validation" => f.umda_validation = num(value)?,
                        "umda_test" => f.umda_test = num(value)?,
                        "umda_popcount" => f.umda_popcount = int(value)? as usize,
                        "umda_mask" => {
                            f.umda_mask = value.parse().map_err(|_| bad(n, "bad mask"))?
                        }
                        "best_single" => f.best_single = value.to_string(),
                        "best_single_validation" => f.best_single_validation = num(value)?,
                        "best_single_test" => f.best_single_test = num(value)?,
                        _ => return Err(bad(n, "unknown fold field")),
                    }
                }
                "aggregate" => {
                    if report.aggregates.last().is_none_or(|a| a.strategy != key) {
                        report.aggregates.push(Aggregate {
                            strategy: key.to_string(),
                            mean: 0.0,
                            std: 0.0,
                            mean_popcount: 0.0,
                        });
                    }
                    let a = report.aggregates.last_mut().expect("pushed above");
                    match field {
                        "mean" => a.mean = num(value)?,
                        "std" => a.std = num(value)?,
                        "mean_popcount" => a.mean_popcount = num(value)?,
                        _ => return Err(bad(n, "unknown aggregate field")),
                    }
                }
                "gain" => {
                    if report.gains.last().is_none_or(|g| g.baseline != key) {
                        report.gains.push(RelativeGain {
                            baseline: key.to_string(),
                            baseline_accuracy: 0.0,
                            umda_accuracy: 0.0,
                            gain_percent: 0.0,
                        });
                    }
                    let g = report.gains.last_mut().expect("pushed above");
                    match field {
                        "baseline_accuracy" => g.baseline_accuracy = num(value)?,
                        "umda_accuracy" => g.umda_accuracy = num(value)?,
                        "gain_percent" => g.gain_percent = num(value)?,
                        _ => return Err(bad(n, "unknown gain field")),
                    }
                }
                _ => return Err(bad(n, "unknown section")),
            }
        }
        Ok(report)
    }

    /// Accuracies in percent as `mean ± std [classifiers]`, then the per-fold
    /// values and the relative gains.
    pub fn to_markdown(&self) -> String {
        let pct = |v: f64| v * 100.0;
        let mut out = String::new();
        let _ = writeln!(out, "## Accuracy (%) over {} folds\n", self.folds.len());
        let _ = writeln!(out, "| Strategy | Accuracy |");
        let _ = writeln!(out, "|---|---|");
        for a in &self.aggregates {
            let label = match a.strategy.as_str() {
                "mv" => "MV",
                "umda" => "UMDA",
                "best_single" => "Best single",
                other => other,
            };
            let _ = writeln!(
                out,
                "| {label} | {:.2} ± {:.2} [{}] |",
                pct(a.mean),
                pct(a.std),
                fmt_popcount(a.mean_popcount)
            );
        }
        let _ = writeln!(out, "\n## Per fold (%)\n");
        let _ = writeln!(
            out,
            "| Fold | MV test | UMDA validation | UMDA test | UMDA mask | Best single test |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for f in &self.folds {
            let _ = writeln!(
                out,
                "| {} | {:.2} | {:.2} | {:.2} | {} [{}] | {:.2} ({}) |",
                f.fold,
                pct(f.mv_test),
                pct(f.umda_validation),
                pct(f.umda_test),
                f.umda_mask,
                f.umda_popcount,
                pct(f.best_single_test),
                f.best_single
            );
        }
        if !self.gains.is_empty() {
            let _ = writeln!(out, "\n## Relative gain of UMDA (%)\n");
            let _ = writeln!(
                out,
                "| Baseline | Baseline accuracy | UMDA accuracy | Gain |"
            );
            let _ = writeln!(out, "|---|---|---|---|");
            for g in &self.gains {
                let _ = writeln!(
                    out,
                    "| {} | {:.2} | {:.2} | {:.2} |",
                    g.baseline,
                    pct(g.baseline_accuracy),
                    pct(g.umda_accuracy),
                    g.gain_percent
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::LabelId;

    fn table(rows: &[&[u32]], truth: &[u32]) -> PredictionTable {
        PredictionTable::new(
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            (0..truth.len() as u64).collect(),
            truth.iter().copied().map(LabelId).collect(),
            rows.iter()
                .map(|r| r.iter().copied().map(LabelId).collect())
                .collect(),
            None,
        )
        .unwrap()
    }

    fn fold(id: u32) -> FoldTables {
        let t = table(
            &[&[0, 1, 1, 0], &[0, 1, 0, 1], &[1, 1, 0, 0]],
            &[0, 1, 0, 0],
        );
        FoldTables {
            fold: id,
            validation: t.clone(),
            test: t,
        }
    }

    #[test]
    fn gain_formula() {
        assert!((relative_gain(93.77, 87.37) - 7.3251).abs() < 1e-3);
        assert_eq!(relative_gain(2.0, 1.0), 100.0);
    }

    #[test]
    fn identical_folds_have_zero_spread() {
        let folds: Vec<_> = (0..5).map(fold).collect();
        let r = evaluate_folds(&folds, &UmdaConfig::new(3), 0).unwrap();
        for a in &r.aggregates {
            assert!(a.std.abs() < 1e-15, "{a:?}");
        }
        assert_eq!(r.folds.len(), 5);
    }

    #[test]
    fn aggregates_are_fold_means() {
        let folds: Vec<_> = (0..3).map(fold).collect();
        let r = evaluate_folds(&folds, &UmdaConfig::new(3), 9).unwrap();
        let mean = r.folds.iter().map(|f| f.umda_test).sum::<f64>() / 3.0;
        assert!((r.aggregate("umda").unwrap().mean - mean).abs() < 1e-12);
        for f in &r.folds {
            assert_eq!(f.umda_popcount, f.umda_mask.popcount());
        }
    }

    #[test]
    fn mismatched_classifiers() {
        let mut f = fold(0);
        f.test = table(&[&[0, 1, 1, 0]], &[0, 1, 0, 0]);
        assert!(matches!(
            evaluate_folds(&[f], &UmdaConfig::new(3), 0),
            Err(ExperimentError::ClassifierSetMismatch { fold: 0, .. })
        ));
        assert!(matches!(
            evaluate_folds(&[], &UmdaConfig::new(3), 0),
            Err(ExperimentError::NoFolds)
        ));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let folds: Vec<_> = (0..2).map(fold).collect();
        let mut r = evaluate_folds(&folds, &UmdaConfig::new(3), 4).unwrap();
        r.add_baseline("paper", 0.8737);
        let back = ExperimentReport::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back, r);
        assert_eq!(ExperimentReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn markdown_rows() {
        let r = evaluate_folds(&[fold(0)], &UmdaConfig::new(3), 0).unwrap();
        let md = r.to_markdown();
        assert!(md.contains("| MV |") && md.contains("[3]"));
        assert!(md.lines().filter(|l| l.contains(" ± ")).count() == 3);
    }
}
