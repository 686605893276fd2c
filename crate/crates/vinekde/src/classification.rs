//! Density-based two-class classification: one vine per class, Bayes
//! posteriors, ROC summary.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use vinekde_core::classify::{accuracy, bayes_posterior, roc_and_summary, Label};
use vinekde_core::{fit_vine, DataMatrix, FitMeta, FitOptions, VineDensityModel};

use crate::csvio::{csv_error, open_reader, parse_cell, read_header};
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub features: DataMatrix,
    pub labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// First `round(fraction * n)` rows and the rest, without shuffling.
    pub fn split_positional(&self, fraction: f64) -> (Self, Self) {
        let cut = ((fraction * self.len() as f64).round() as usize).min(self.len());
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }

    /// Feature rows of one class, optionally truncated to the first `limit`.
    pub fn class_rows(&self, label: Label, limit: Option<usize>) -> DataMatrix {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] == label)
            .take(limit.unwrap_or(usize::MAX))
            .collect();
        self.features.select_rows(&idx)
    }
}

fn parse_label(cell: &str) -> Option<Label> {
    match cell {
        "g" | "G" => Some(Label::G),
        "h" | "H" => Some(Label::H),
        _ => None,
    }
}

/// Reads a CSV with a header row. `label_column` is a header name, or a
/// 0-based column index when no header matches. Labels `g`/`h` are
/// case-insensitive; every other column must be numeric.
pub fn load_labeled_csv(path: &Path, label_column: &str) -> AppResult<LabeledDataset> {
    let mut reader = open_reader(path)?;
    let header = read_header(path, &mut reader)?;
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .or_else(|| label_column.parse::<usize>().ok().filter(|&i| i < header.len()))
        .ok_or_else(|| AppError::schema(path, format!("label column {label_column:?} not found")))?;
    if header.len() < 2 {
        return Err(AppError::schema(path, "need at least one feature column besides the label"));
    }
    let feature_names: Vec<String> =
        header.iter().enumerate().filter(|&(j, _)| j != label_idx).map(|(_, h)| h.clone()).collect();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(labels.len() + 2, |p| p.line() as usize);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                let label = parse_label(cell).ok_or_else(|| AppError::Parse {
                    path: path.to_owned(),
                    row,
                    column: header[j].clone(),
                    message: format!("unknown label {cell:?} (expected g or h)"),
                })?;
                labels.push(label);
            } else {
                values.push(parse_cell(path, row, &header[j], cell)?);
            }
        }
    }
    if labels.is_empty() {
        return Err(AppError::schema(path, "no data rows"));
    }
    let features = DataMatrix::from_row_major(labels.len(), feature_names.len(), values)
        .map_err(|e| AppError::schema(path, e.to_string()))?;
    Ok(LabeledDataset { feature_names, features, labels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub margin_bandwidth_multiplier: f64,
    pub independence_level: Option<f64>,
    pub prior_g: f64,
    /// Use at most this many training rows per class (the first ones).
    pub subsample: Option<usize>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { margin_bandwidth_multiplier: 2.0, independence_level: Some(0.05), prior_g: 0.5, subsample: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TprAtFpr {
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFitSummary {
    pub n: usize,
    pub independence_copulas: usize,
    pub h_fallbacks: usize,
    pub degenerate_pairs: usize,
}

impl ClassFitSummary {
    fn new(model: &VineDensityModel) -> Self {
        let meta: &FitMeta = model.meta();
        Self {
            n: meta.n,
            independence_copulas: model.pair_copulas().iter().flatten().filter(|p| p.is_independence()).count(),
            h_fallbacks: meta.h_fallbacks,
            degenerate_pairs: meta.degenerate_pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub train_g: usize,
    pub train_h: usize,
    pub test_g: usize,
    pub test_h: usize,
    pub prior_g: f64,
    pub margin_bandwidth_multiplier: f64,
    pub independence_level: Option<f64>,
    pub fit_g: ClassFitSummary,
    pub fit_h: ClassFitSummary,
    pub tpr_at_fpr: Vec<TprAtFpr>,
    pub loacc: f64,
    pub highacc: f64,
    pub accuracy_at_half: f64,
    pub prior_fallbacks: usize,
}

impl ClassificationSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub label: Label,
    pub density_g: f64,
    pub density_h: f64,
    pub posterior_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOutcome {
    pub summary: ClassificationSummary,
    pub scores: Vec<ScoredRow>,
}

/// Fits one vine per class on `train` and scores `test`.
pub fn run_classification(
    train: &LabeledDataset,
    test: &LabeledDataset,
    options: &ClassifyOptions,
) -> AppResult<ClassificationOutcome> {
    if !(0.0..=1.0).contains(&options.prior_g) {
        return Err(AppError::Validation(format!("prior must lie in [0, 1], got {}", options.prior_g)));
    }
    if test.is_empty() {
        return Err(AppError::Validation("test set is empty".into()));
    }
    if train.features.ncols() != test.features.ncols() {
        return Err(AppError::Validation("train and test have different feature counts".into()));
    }
    let fit_options = FitOptions {
        margin_bandwidth_multiplier: options.margin_bandwidth_multiplier,
        independence_level: options.independence_level,
        ..FitOptions::default()
    };
    let fit_class = |label: Label| {
        let rows = train.class_rows(label, options.subsample);
        fit_vine(&rows, &fit_options).map_err(|e| AppError::estimation(format!("fitting class {label:?}"), e))
    };
    let (model_g, model_h) = rayon::join(|| fit_class(Label::G), || fit_class(Label::H));
    let (model_g, model_h) = (model_g?, model_h?);

    let pi_g = options.prior_g;
    let scores: Vec<(ScoredRow, bool)> = (0..test.len())
        .into_par_iter()
        .map(|i| {
            let x = test.features.row(i);
            let ctx = |e| AppError::estimation(format!("scoring test row {}", i + 1), e);
            let fg = model_g.density(x).map_err(ctx)?;
            let fh = model_h.density(x).map_err(ctx)?;
            let p = bayes_posterior(fg, fh, pi_g, 1.0 - pi_g).map_err(ctx)?;
            Ok((ScoredRow { label: test.labels[i], density_g: fg, density_h: fh, posterior_g: p.value }, p.prior_fallback))
        })
        .collect::<AppResult<_>>()?;
    let prior_fallbacks = scores.iter().filter(|s| s.1).count();
    let scores: Vec<ScoredRow> = scores.into_iter().map(|s| s.0).collect();
    let posteriors: Vec<f64> = scores.iter().map(|s| s.posterior_g).collect();
    let roc = roc_and_summary(&posteriors, &test.labels).map_err(|e| AppError::estimation("ROC summary", e))?;

    let summary = ClassificationSummary {
        n_train: model_g.meta().n + model_h.meta().n,
        n_test: test.len(),
        train_g: model_g.meta().n,
        train_h: model_h.meta().n,
        test_g: test.count(Label::G),
        test_h: test.count(Label::H),
        prior_g: pi_g,
        margin_bandwidth_multiplier: options.margin_bandwidth_multiplier,
        independence_level: options.independence_level,
        fit_g: ClassFitSummary::new(&model_g),
        fit_h: ClassFitSummary::new(&model_h),
        tpr_at_fpr: roc.tpr_at_fpr.iter().map(|&(fpr, tpr)| TprAtFpr { fpr, tpr }).collect(),
        loacc: roc.loacc,
        highacc: roc.highacc,
        accuracy_at_half: accuracy(&posteriors, &test.labels, 0.5),
        prior_fallbacks,
    };
    Ok(ClassificationOutcome { summary, scores })
}

/// Per-row CSV: `row,label,density_g,density_h,posterior_g`.
pub fn write_scores(path: &Path, scores: &[ScoredRow]) -> AppResult<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| AppError::io(path, e);
    writeln!(out, "row,label,density_g,density_h,posterior_g").map_err(io)?;
    for (i, s) in scores.iter().enumerate() {
        let label = match s.label {
            Label::G => "g",
            Label::H => "h",
        };
        writeln!(out, "{},{label},{},{},{}", i + 1, s.density_g, s.density_h, s.posterior_g).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use vinekde_core::rng::std_normal;

    fn blobs(n: usize, shift: f64, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let (label, c) = if i % 2 == 0 { (Label::G, shift) } else { (Label::H, -shift) };
            values.push(c + std_normal(&mut rng));
            values.push(c + std_normal(&mut rng));
            labels.push(label);
        }
        LabeledDataset {
            feature_names: vec!["a".into(), "b".into()],
            features: DataMatrix::from_row_major(n, 2, values).unwrap(),
            labels,
        }
    }

    #[test]
    fn separated_blobs_are_classified() {
        // centres (2,2) and (-2,-2): the Bayes rule errs with probability
        // Phi(-2 sqrt 2) = 0.0023
        let data = blobs(800, 2.0, 1);
        let out = run_classification(&data, &data, &ClassifyOptions::default()).unwrap();
        assert!(out.summary.accuracy_at_half >= 0.95, "{}", out.summary.accuracy_at_half);
        assert_eq!(out.scores.len(), 800);
        assert_eq!(out.summary.tpr_at_fpr.len(), 5);
    }

    #[test]
    fn certain_prior_calls_everything_g() {
        let data = blobs(200, 1.0, 2);
        let opts = ClassifyOptions { prior_g: 1.0, ..ClassifyOptions::default() };
        let out = run_classification(&data, &data, &opts).unwrap();
        assert!(out.scores.iter().all(|s| s.posterior_g > 0.5));
    }

    #[test]
    fn positional_split_and_subsample() {
        let data = blobs(30, 1.0, 3);
        let (train, test) = data.split_positional(2.0 / 3.0);
        assert_eq!((train.len(), test.len()), (20, 10));
        assert_eq!(train.features.row(0), data.features.row(0));
        assert_eq!(test.features.row(0), data.features.row(20));
        assert_eq!(train.class_rows(Label::G, Some(4)).nrows(), 4);
        assert_eq!(train.class_rows(Label::H, None).nrows(), 10);
    }

    #[test]
    fn loads_labels_and_reports_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "f1,f2,class\n1.0,2.0,g\n0.5,-1,H\n3,4,G\n").unwrap();
        let ds = load_labeled_csv(&path, "class").unwrap();
        assert_eq!(ds.labels, [Label::G, Label::H, Label::G]);
        assert_eq!(ds.feature_names, ["f1", "f2"]);
        assert_eq!(ds.features.row(1), [0.5, -1.0]);
        let by_index = load_labeled_csv(&path, "2").unwrap();
        assert_eq!(by_index, ds);

        std::fs::write(&path, "f1,f2,class\n1.0,2.0,g\n0.5,-1,x\n").unwrap();
        let err = load_labeled_csv(&path, "class").unwrap_err();
        assert!(matches!(err, AppError::Parse { row: 3, .. }), "{err:?}");
        assert!(err.to_string().contains("row 3"));
        assert!(matches!(load_labeled_csv(&path, "label"), Err(AppError::Schema { .. })));
    }
}
