//! Stratified cross validation, ranking metrics, and the ablation harness.
//!
//! SMOTE is applied to each training split after the fold assignment, so
//! synthetic records can never land in a held-out fold. Metrics are pooled
//! over the held-out predictions within a repeat and then averaged across
//! repeats.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ClassLabel, CLASS_COUNT};
use crate::error::{Error, Result};
use crate::features::{FeatureGroup, SignalVector, GROUP_COUNT};
use crate::model::{smote_upsample, train, DenseModel, RankedPrediction, TrainConfig};
use crate::util::write_atomic;

/// A record-to-fold assignment. Fold sizes differ by at most one overall
/// and per class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, record: usize) -> usize {
        self.fold_of[record]
    }

    /// Record indices of one fold and its complement, in input order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut held_out = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                held_out.push(i);
            } else {
                train.push(i);
            }
        }
        (train, held_out)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment: records are shuffled within each class
/// with the seeded generator and dealt round-robin, the dealing cursor
/// carrying over between classes so total fold sizes stay balanced too.
pub fn stratified_kfold(labels: &[ClassLabel], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Validation("k must be at least 2".into()));
    }
    if k > labels.len() {
        return Err(Error::Validation(format!(
            "k = {k} exceeds the dataset size {}",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut cursor = 0usize;
    for class in ClassLabel::all() {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        for m in members {
            fold_of[m] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Average 1-based position of the gold class in the ranked predictions.
pub fn mean_rank(predictions: &[RankedPrediction], golds: &[ClassLabel]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::Validation(format!(
            "{} predictions against {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Validation("mean rank of an empty set".into()));
    }
    let total: usize = predictions
        .iter()
        .zip(golds)
        .map(|(p, g)| p.rank_of(*g))
        .sum();
    Ok(total as f64 / predictions.len() as f64)
}

/// Fraction of records whose gold class is ranked first.
pub fn accuracy(predictions: &[RankedPrediction], golds: &[ClassLabel]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::Validation(format!(
            "{} predictions against {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Validation("accuracy of an empty set".into()));
    }
    let hits = predictions
        .iter()
        .zip(golds)
        .filter(|(p, g)| p.rank_of(**g) == 1)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Cross-validation settings; the defaults mirror the reported protocol of
/// five folds averaged over ten training runs.
#[derive(Clone, Debug, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub repeats: usize,
}

impl Default for CvOptions {
    fn default() -> CvOptions {
        CvOptions { k: 5, repeats: 10 }
    }
}

/// Averaged cross-validation metrics plus the configuration that produced
/// them.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_rank: f64,
    pub per_class_accuracy: [f64; CLASS_COUNT],
    /// Held-out predictions pooled per repeat; constant across repeats.
    pub records_evaluated: usize,
    pub config_echo: ConfigEcho,
}

/// The exact knobs a report was computed with.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigEcho {
    pub train: TrainConfig,
    pub k: usize,
    pub repeat_seeds: Vec<u64>,
}

fn derive_fold_seed(repeat_seed: u64, fold: usize) -> u64 {
    repeat_seed.wrapping_add((fold as u64 + 1) << 32)
}

/// Run k-fold cross validation once per repeat seed and average the
/// pooled per-repeat metrics.
pub fn cross_validate_with_seeds(
    records: &[(SignalVector, ClassLabel)],
    train_config: &TrainConfig,
    k: usize,
    repeat_seeds: &[u64],
) -> Result<EvalReport> {
    if repeat_seeds.is_empty() {
        return Err(Error::Validation("at least one repeat is required".into()));
    }
    let labels: Vec<ClassLabel> = records.iter().map(|(_, l)| *l).collect();

    let mut acc_sum = 0.0;
    let mut rank_sum = 0.0;
    let mut per_class_sum = [0.0; CLASS_COUNT];
    let mut records_evaluated = 0usize;

    for &repeat_seed in repeat_seeds {
        let folds = stratified_kfold(&labels, k, repeat_seed)?;
        let mut predictions: Vec<RankedPrediction> = Vec::with_capacity(records.len());
        let mut golds: Vec<ClassLabel> = Vec::with_capacity(records.len());

        for fold in 0..k {
            let (train_idx, held_out) = folds.split(fold);
            let mut train_records: Vec<(SignalVector, ClassLabel)> =
                train_idx.iter().map(|&i| records[i]).collect();
            let fold_seed = derive_fold_seed(repeat_seed, fold);
            if train_config.smote_enabled {
                train_records = smote_upsample(&train_records, train_config, fold_seed).records;
            }
            let fold_config = TrainConfig {
                seed: fold_seed,
                ..train_config.clone()
            };
            let outcome = train(&train_records, &fold_config).map_err(|e| match e {
                Error::Training {
                    epoch,
                    batch,
                    message,
                } => Error::Training {
                    epoch,
                    batch,
                    message: format!("{message} (repeat seed {repeat_seed}, fold {fold})"),
                },
                other => other,
            })?;
            for &i in &held_out {
                predictions.push(outcome.model.predict_ranked(&records[i].0));
                golds.push(records[i].1);
            }
        }

        records_evaluated = predictions.len();
        acc_sum += accuracy(&predictions, &golds)?;
        rank_sum += mean_rank(&predictions, &golds)?;
        for class in ClassLabel::all() {
            let of_class: Vec<usize> = golds
                .iter()
                .enumerate()
                .filter(|(_, g)| **g == class)
                .map(|(i, _)| i)
                .collect();
            if of_class.is_empty() {
                continue;
            }
            let hits = of_class
                .iter()
                .filter(|&&i| predictions[i].rank_of(golds[i]) == 1)
                .count();
            per_class_sum[class.index()] += hits as f64 / of_class.len() as f64;
        }
    }

    let n = repeat_seeds.len() as f64;
    Ok(EvalReport {
        accuracy: acc_sum / n,
        mean_rank: rank_sum / n,
        per_class_accuracy: per_class_sum.map(|s| s / n),
        records_evaluated,
        config_echo: ConfigEcho {
            train: train_config.clone(),
            k,
            repeat_seeds: repeat_seeds.to_vec(),
        },
    })
}

/// Repeated stratified cross validation with repeat seeds derived as
/// `seed + repeat_index`.
pub fn cross_validate(
    records: &[(SignalVector, ClassLabel)],
    train_config: &TrainConfig,
    options: &CvOptions,
) -> Result<EvalReport> {
    let seeds: Vec<u64> = (0..options.repeats)
        .map(|r| train_config.seed.wrapping_add(r as u64))
        .collect();
    cross_validate_with_seeds(records, train_config, options.k, &seeds)
}

/// One row of the ablation table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationRow {
    Full,
    NoSmote,
    LeaveOut(FeatureGroup),
}

impl AblationRow {
    /// All seven rows in table order: the full configuration, SMOTE
    /// disabled, then one row per left-out feature group.
    pub fn all() -> Vec<AblationRow> {
        let mut rows = vec![AblationRow::Full, AblationRow::NoSmote];
        rows.extend(FeatureGroup::all().into_iter().map(AblationRow::LeaveOut));
        rows
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            AblationRow::Full => "Submission",
            AblationRow::NoSmote => "No SMOTE",
            AblationRow::LeaveOut(group) => group.display_name(),
        }
    }
}

/// Evaluate the full configuration, a SMOTE-less configuration, and one
/// configuration per zeroed feature group, all under identical seeds.
/// Zeroing replaces a group's ten columns with zeros so the model input
/// width stays fixed.
pub fn ablation(
    records: &[(SignalVector, ClassLabel)],
    train_config: &TrainConfig,
    options: &CvOptions,
) -> Result<Vec<(AblationRow, EvalReport)>> {
    let mut results = Vec::new();
    for row in AblationRow::all() {
        let report = match row {
            AblationRow::Full => cross_validate(records, train_config, options)?,
            AblationRow::NoSmote => {
                let config = TrainConfig {
                    smote_enabled: false,
                    ..train_config.clone()
                };
                cross_validate(records, &config, options)?
            }
            AblationRow::LeaveOut(group) => {
                let zeroed: Vec<(SignalVector, ClassLabel)> = records
                    .iter()
                    .map(|(s, l)| (s.with_group_zeroed(group), *l))
                    .collect();
                cross_validate(&zeroed, train_config, options)?
            }
        };
        results.push((row, report));
    }
    Ok(results)
}

/// Write an evaluation report as a one-row CSV in the ablation-table
/// column layout.
pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let mut out = String::from("left_out_group,mean_accuracy,mean_rank\n");
    out.push_str(&format!(
        "Submission,{},{}\n",
        report.accuracy, report.mean_rank
    ));
    write_atomic(path, out.as_bytes())
}

/// Write the seven-row ablation table.
pub fn write_ablation_csv(rows: &[(AblationRow, EvalReport)], path: &Path) -> Result<()> {
    let mut out = String::from("left_out_group,mean_accuracy,mean_rank\n");
    for (row, report) in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.display_name(),
            report.accuracy,
            report.mean_rank
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Write the 5×10 per-group per-class absolute weight matrix.
pub fn write_weight_matrix_csv(model: &DenseModel, path: &Path) -> Result<()> {
    let matrix = model.group_class_weight_matrix();
    let mut out = String::from("group");
    for class in ClassLabel::all() {
        out.push(',');
        out.push_str(class.canonical_name());
    }
    out.push('\n');
    for group in FeatureGroup::all() {
        out.push_str(group.display_name());
        for value in matrix[group.index()] {
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    debug_assert_eq!(matrix.len(), GROUP_COUNT);
    write_atomic(path, out.as_bytes())
}
