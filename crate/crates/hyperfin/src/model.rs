//! SMOTE oversampling and the dense sigmoid classifier.
//!
//! The classifier is a single affine map from the 50-wide signal to the 10
//! classes with a sigmoid activation, trained by mini-batch gradient descent
//! on the mean squared error against one-hot targets. Weight introspection
//! sums absolute input weights per feature group, which is meaningful
//! precisely because the inputs of the single layer are the signal entries.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, CLASS_COUNT};
use crate::error::{Error, Result};
use crate::features::{FeatureGroup, SignalVector, GROUP_COUNT, SIGNAL_LEN};
use crate::util::write_atomic;

/// Training hyperparameters. The defaults are the submitted configuration:
/// 100 epochs, batch size 25, SMOTE up to a third of the majority class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub smote_enabled: bool,
    pub smote_fraction: f64,
    pub smote_k: usize,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 100,
            batch_size: 25,
            learning_rate: 0.05,
            seed: 42,
            smote_enabled: true,
            smote_fraction: 1.0 / 3.0,
            smote_k: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be at least 1".into()));
        }
        if self.smote_k == 0 {
            return Err(Error::Validation("smote_k must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Validation("learning_rate must be positive".into()));
        }
        if !(self.smote_fraction > 0.0 && self.smote_fraction <= 1.0) {
            return Err(Error::Validation(
                "smote_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Minority-class target count: `floor(fraction × majority_count)`. The
/// tiny nudge keeps rational fractions exact where the true product is an
/// integer (1/3 of 300 is 100, not 99.999…).
pub fn smote_threshold(majority_count: usize, fraction: f64) -> usize {
    (fraction * majority_count as f64 + 1e-9).floor() as usize
}

/// Where a synthetic record came from: indices into the original slice and
/// the interpolation factor, so `synthetic = base + u·(neighbor − base)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticOrigin {
    pub class: ClassLabel,
    pub base: usize,
    pub neighbor: usize,
    pub interpolation: f64,
}

/// Result of SMOTE upsampling: the originals untouched and in order,
/// followed by the synthetic records, with one origin entry per synthetic.
#[derive(Clone, Debug)]
pub struct SmoteOutput {
    pub records: Vec<(SignalVector, ClassLabel)>,
    pub origins: Vec<SyntheticOrigin>,
    pub singleton_duplicates: usize,
}

fn squared_distance(a: &SignalVector, b: &SignalVector) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Raise every class below the threshold to exactly the threshold count by
/// interpolating between a random class member and one of its `smote_k`
/// nearest same-class neighbors. A singleton class is duplicated verbatim.
/// Classes at or above the threshold, and the original records, are left
/// untouched. Apply this to training splits only.
pub fn smote_upsample(
    records: &[(SignalVector, ClassLabel)],
    config: &TrainConfig,
    seed: u64,
) -> SmoteOutput {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); CLASS_COUNT];
    for (i, (_, label)) in records.iter().enumerate() {
        by_class[label.index()].push(i);
    }
    let majority = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = SmoteOutput {
        records: records.to_vec(),
        origins: Vec::new(),
        singleton_duplicates: 0,
    };
    if majority == 0 {
        return out;
    }
    let threshold = smote_threshold(majority, config.smote_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for class_index in 0..CLASS_COUNT {
        let members = &by_class[class_index];
        if members.is_empty() || members.len() >= threshold {
            continue;
        }
        let class = ClassLabel::from_index(class_index).expect("index in range");
        let needed = threshold - members.len();

        if members.len() == 1 {
            let only = members[0];
            for _ in 0..needed {
                out.records.push(records[only]);
                out.origins.push(SyntheticOrigin {
                    class,
                    base: only,
                    neighbor: only,
                    interpolation: 0.0,
                });
            }
            out.singleton_duplicates += needed;
            continue;
        }

        // k nearest same-class neighbors per member, ties broken by index
        let k = config.smote_k.min(members.len() - 1);
        let neighbor_table: Vec<Vec<usize>> = members
            .iter()
            .map(|&m| {
                let mut others: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&o| o != m)
                    .map(|&o| (squared_distance(&records[m].0, &records[o].0), o))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(k).map(|(_, o)| o).collect()
            })
            .collect();

        for _ in 0..needed {
            let pick = rng.gen_range(0..members.len());
            let base = members[pick];
            let neighbor = neighbor_table[pick][rng.gen_range(0..k)];
            let u: f64 = rng.gen_range(0.0..=1.0);
            let mut values = *records[base].0.values();
            for (c, v) in values.iter_mut().enumerate() {
                let n = records[neighbor].0.values()[c];
                *v += u * (n - *v);
            }
            out.records.push((SignalVector::from_values(values), class));
            out.origins.push(SyntheticOrigin {
                class,
                base,
                neighbor,
                interpolation: u,
            });
        }
    }
    out
}

/// Output activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

/// The single dense layer: a 10×50 weight matrix plus a 10-wide bias.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseModel {
    pub fn zeros() -> DenseModel {
        DenseModel {
            weights: vec![vec![0.0; SIGNAL_LEN]; CLASS_COUNT],
            bias: vec![0.0; CLASS_COUNT],
            activation: Activation::Sigmoid,
        }
    }

    /// Seeded initialization, uniform in [-0.1, 0.1]. `train` with zero
    /// epochs returns exactly this model.
    pub fn random_init(seed: u64) -> DenseModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseModel::random_init_from(&mut rng)
    }

    fn random_init_from(rng: &mut ChaCha8Rng) -> DenseModel {
        let mut model = DenseModel::zeros();
        for row in &mut model.weights {
            for w in row.iter_mut() {
                *w = rng.gen_range(-0.1..=0.1);
            }
        }
        for b in &mut model.bias {
            *b = rng.gen_range(-0.1..=0.1);
        }
        model
    }

    fn check_shape(&self) -> Result<()> {
        if self.weights.len() != CLASS_COUNT
            || self.weights.iter().any(|r| r.len() != SIGNAL_LEN)
            || self.bias.len() != CLASS_COUNT
        {
            return Err(Error::Validation(format!(
                "model shape must be {CLASS_COUNT}x{SIGNAL_LEN} weights and {CLASS_COUNT} bias"
            )));
        }
        if self
            .weights
            .iter()
            .flatten()
            .chain(self.bias.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Validation("model parameters must be finite".into()));
        }
        Ok(())
    }

    /// Class scores for one signal: `sigmoid(W·s + b)`, elementwise.
    pub fn forward(&self, signal: &SignalVector) -> [f64; CLASS_COUNT] {
        let mut out = [0.0; CLASS_COUNT];
        for (k, row) in self.weights.iter().enumerate() {
            let mut z = self.bias[k];
            for (w, s) in row.iter().zip(signal.values()) {
                z += w * s;
            }
            out[k] = self.activation.apply(z);
        }
        out
    }

    /// All ten classes by descending score, ties broken by class index.
    pub fn predict_ranked(&self, signal: &SignalVector) -> RankedPrediction {
        RankedPrediction::from_scores(self.forward(signal))
    }

    /// Summed absolute weight per feature group, over all output rows.
    pub fn group_weight_sums(&self) -> [f64; GROUP_COUNT] {
        let mut sums = [0.0; GROUP_COUNT];
        for group in FeatureGroup::all() {
            let g = group.index();
            sums[g] = self
                .weights
                .iter()
                .map(|row| {
                    row[g * CLASS_COUNT..(g + 1) * CLASS_COUNT]
                        .iter()
                        .map(|w| w.abs())
                        .sum::<f64>()
                })
                .sum();
        }
        sums
    }

    /// Summed absolute weight per feature group and class: entry `(g, c)`
    /// sums `|W[c][col]|` over the columns of group `g`. Summing a row of
    /// this matrix over classes reproduces `group_weight_sums` exactly.
    pub fn group_class_weight_matrix(&self) -> [[f64; CLASS_COUNT]; GROUP_COUNT] {
        let mut matrix = [[0.0; CLASS_COUNT]; GROUP_COUNT];
        for group in FeatureGroup::all() {
            let g = group.index();
            for (c, row) in self.weights.iter().enumerate() {
                matrix[g][c] = row[g * CLASS_COUNT..(g + 1) * CLASS_COUNT]
                    .iter()
                    .map(|w| w.abs())
                    .sum();
            }
        }
        matrix
    }

    /// Persist as versioned JSON. Parameters survive the round trip
    /// value-exactly.
    pub fn save(&self, config: &TrainConfig, path: &Path) -> Result<()> {
        self.check_shape()?;
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            activation: self.activation,
            config: config.clone(),
            weights: self.weights.clone(),
            bias: self.bias.clone(),
        };
        let json = serde_json::to_vec_pretty(&file)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        write_atomic(path, &json)
    }

    pub fn load(path: &Path) -> Result<(DenseModel, TrainConfig)> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parsed: ModelFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if parsed.version != MODEL_FILE_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model file version {}",
                parsed.version
            )));
        }
        let model = DenseModel {
            weights: parsed.weights,
            bias: parsed.bias,
            activation: parsed.activation,
        };
        model.check_shape()?;
        Ok((model, parsed.config))
    }
}

const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    activation: Activation,
    config: TrainConfig,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

/// All ten classes with scores, descending; ties resolve by class index.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedPrediction {
    entries: Vec<(ClassLabel, f64)>,
}

impl RankedPrediction {
    pub fn from_scores(scores: [f64; CLASS_COUNT]) -> RankedPrediction {
        let mut entries: Vec<(ClassLabel, f64)> = ClassLabel::all()
            .map(|c| (c, scores[c.index()]))
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.index().cmp(&b.0.index())));
        RankedPrediction { entries }
    }

    pub fn entries(&self) -> &[(ClassLabel, f64)] {
        &self.entries
    }

    pub fn top(&self) -> ClassLabel {
        self.entries[0].0
    }

    /// 1-based position of a class in the ranking.
    pub fn rank_of(&self, class: ClassLabel) -> usize {
        self.entries
            .iter()
            .position(|(c, _)| *c == class)
            .expect("every class appears exactly once")
            + 1
    }
}

/// One-hot target for a class.
pub fn one_hot(class: ClassLabel) -> [f64; CLASS_COUNT] {
    let mut target = [0.0; CLASS_COUNT];
    target[class.index()] = 1.0;
    target
}

/// Mean squared error of the model outputs against targets, averaged over
/// both the batch and the ten outputs.
pub fn mse_loss(model: &DenseModel, batch: &[(SignalVector, [f64; CLASS_COUNT])]) -> f64 {
    let mut total = 0.0;
    for (signal, target) in batch {
        let out = model.forward(signal);
        for (o, t) in out.iter().zip(target) {
            total += (o - t) * (o - t);
        }
    }
    total / (batch.len() * CLASS_COUNT) as f64
}

/// Analytic gradients of [`mse_loss`] with respect to the weights and bias.
/// Returns `(grad_weights, grad_bias, loss)`.
pub fn mse_gradients(
    model: &DenseModel,
    batch: &[(SignalVector, [f64; CLASS_COUNT])],
) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let mut grad_w = vec![vec![0.0; SIGNAL_LEN]; CLASS_COUNT];
    let mut grad_b = vec![0.0; CLASS_COUNT];
    let mut loss = 0.0;
    let scale = 2.0 / (batch.len() * CLASS_COUNT) as f64;
    for (signal, target) in batch {
        let out = model.forward(signal);
        for k in 0..CLASS_COUNT {
            let err = out[k] - target[k];
            loss += err * err;
            // d sigmoid(z) / dz = sigmoid(z) (1 - sigmoid(z))
            let delta = scale * err * out[k] * (1.0 - out[k]);
            grad_b[k] += delta;
            for (c, s) in signal.values().iter().enumerate() {
                grad_w[k][c] += delta * s;
            }
        }
    }
    loss /= (batch.len() * CLASS_COUNT) as f64;
    (grad_w, grad_b, loss)
}

/// A trained model plus the mean loss over the final epoch.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: DenseModel,
    pub final_loss: f64,
}

/// Seeded mini-batch gradient descent. Data is reshuffled every epoch with
/// the seeded generator and the final partial batch is kept, so a fixed
/// seed reproduces the parameters bit for bit.
pub fn train(records: &[(SignalVector, ClassLabel)], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    let targets: Vec<[f64; CLASS_COUNT]> = records.iter().map(|(_, c)| one_hot(*c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = DenseModel::random_init_from(&mut rng);
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut final_loss = f64::NAN;

    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, chunk) in indices.chunks(config.batch_size).enumerate() {
            let batch: Vec<(SignalVector, [f64; CLASS_COUNT])> = chunk
                .iter()
                .map(|&i| (records[i].0, targets[i]))
                .collect();
            let (grad_w, grad_b, loss) = mse_gradients(&model, &batch);
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_no,
                    message: format!("non-finite loss {loss}"),
                });
            }
            for (row, grad_row) in model.weights.iter_mut().zip(&grad_w) {
                for (w, g) in row.iter_mut().zip(grad_row) {
                    *w -= config.learning_rate * g;
                }
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= config.learning_rate * g;
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        final_loss = epoch_loss / records.len() as f64;
    }

    if config.epochs == 0 {
        let batch: Vec<(SignalVector, [f64; CLASS_COUNT])> = records
            .iter()
            .zip(&targets)
            .map(|((s, _), t)| (*s, *t))
            .collect();
        final_loss = mse_loss(&model, &batch);
    }

    Ok(TrainOutcome { model, final_loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn class(i: usize) -> ClassLabel {
        ClassLabel::from_index(i).unwrap()
    }

    fn signal_with(entries: &[(usize, f64)]) -> SignalVector {
        let mut values = [0.0; SIGNAL_LEN];
        for &(i, v) in entries {
            values[i] = v;
        }
        SignalVector::from_values(values)
    }

    fn random_signal(rng: &mut ChaCha8Rng) -> SignalVector {
        let mut values = [0.0; SIGNAL_LEN];
        for v in values.iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        SignalVector::from_values(values)
    }

    #[test]
    fn threshold_matches_reference_arithmetic() {
        assert_eq!(smote_threshold(229, 1.0 / 3.0), 76);
        assert_eq!(smote_threshold(3, 1.0 / 3.0), 1);
        assert_eq!(smote_threshold(300, 1.0 / 3.0), 100);
        assert_eq!(smote_threshold(1, 1.0 / 3.0), 0);
        assert_eq!(smote_threshold(10, 0.5), 5);
    }

    #[test]
    fn smote_raises_minority_to_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut records = Vec::new();
        for _ in 0..229 {
            records.push((random_signal(&mut rng), class(0)));
        }
        for _ in 0..9 {
            records.push((random_signal(&mut rng), class(9)));
        }
        let out = smote_upsample(&records, &TrainConfig::default(), 7);
        let count = |c: ClassLabel| out.records.iter().filter(|(_, l)| *l == c).count();
        assert_eq!(count(class(9)), 76);
        assert_eq!(count(class(0)), 229);
        // originals come first and are untouched
        assert_eq!(&out.records[..records.len()], &records[..]);
        assert_eq!(out.origins.len(), 76 - 9);
    }

    #[test]
    fn smote_is_a_noop_when_everything_is_above_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut records = Vec::new();
        for c in 0..3 {
            for _ in 0..30 {
                records.push((random_signal(&mut rng), class(c)));
            }
        }
        let out = smote_upsample(&records, &TrainConfig::default(), 1);
        assert_eq!(out.records, records);
        assert!(out.origins.is_empty());
    }

    #[test]
    fn singleton_class_is_duplicated_with_warning_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut records: Vec<(SignalVector, ClassLabel)> =
            (0..30).map(|_| (random_signal(&mut rng), class(0))).collect();
        let lone = random_signal(&mut rng);
        records.push((lone, class(5)));
        let out = smote_upsample(&records, &TrainConfig::default(), 3);
        let threshold = smote_threshold(30, 1.0 / 3.0);
        let synth: Vec<_> = out.records[records.len()..].to_vec();
        assert_eq!(synth.len(), threshold - 1);
        assert!(synth.iter().all(|(s, l)| *l == class(5) && s == &lone));
        assert_eq!(out.singleton_duplicates, threshold - 1);
    }

    #[test]
    fn synthetics_are_convex_combinations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut records = Vec::new();
        for _ in 0..60 {
            records.push((random_signal(&mut rng), class(1)));
        }
        for _ in 0..4 {
            records.push((random_signal(&mut rng), class(7)));
        }
        let out = smote_upsample(&records, &TrainConfig::default(), 11);
        assert!(!out.origins.is_empty());
        for (i, origin) in out.origins.iter().enumerate() {
            let synth = &out.records[records.len() + i].0;
            let base = &records[origin.base].0;
            let neighbor = &records[origin.neighbor].0;
            assert!((0.0..=1.0).contains(&origin.interpolation));
            assert_eq!(records[origin.base].1, origin.class);
            assert_eq!(records[origin.neighbor].1, origin.class);
            for c in 0..SIGNAL_LEN {
                let expected = base.values()[c]
                    + origin.interpolation * (neighbor.values()[c] - base.values()[c]);
                assert!((synth.values()[c] - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_model_outputs_one_half() {
        let model = DenseModel::zeros();
        let out = model.forward(&signal_with(&[(0, 1.0), (13, -0.5)]));
        assert!(out.iter().all(|o| (o - 0.5).abs() < 1e-15));
    }

    #[test]
    fn forward_matches_hand_computed_fixture() {
        let mut model = DenseModel::zeros();
        model.weights[0][0] = 0.5;
        model.weights[0][1] = -0.25;
        model.weights[0][2] = 0.1;
        model.bias[0] = 0.1;
        let s = signal_with(&[(0, 1.0), (1, 2.0), (2, 0.5)]);
        // z = 0.5·1 − 0.25·2 + 0.1·0.5 + 0.1 = 0.15
        let out = model.forward(&s);
        assert!((out[0] - 0.5374298453437496).abs() < 1e-12);
        assert!((out[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outputs_stay_in_the_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = DenseModel::random_init(3);
        for _ in 0..50 {
            let out = model.forward(&random_signal(&mut rng));
            assert!(out.iter().all(|o| *o > 0.0 && *o < 1.0));
        }
    }

    fn separable_toy(n_per_class: usize) -> Vec<(SignalVector, ClassLabel)> {
        // class c is flagged by its own indicator block entry
        let mut records = Vec::new();
        for c in [2usize, 3, 4] {
            for i in 0..n_per_class {
                let jitter = 0.05 * (i % 5) as f64;
                records.push((signal_with(&[(c, 1.0), (10 + c, 0.5 + jitter)]), class(c)));
            }
        }
        records
    }

    #[test]
    fn training_fits_a_separable_toy() {
        let records = separable_toy(20);
        let outcome = train(&records, &TrainConfig::default()).unwrap();
        let correct = records
            .iter()
            .filter(|(s, gold)| outcome.model.predict_ranked(s).top() == *gold)
            .count();
        assert_eq!(correct, records.len());
        assert!(outcome.final_loss.is_finite());
    }

    #[test]
    fn zero_epochs_returns_the_initialization() {
        let records = separable_toy(4);
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let outcome = train(&records, &config).unwrap();
        assert_eq!(outcome.model, DenseModel::random_init(config.seed));
        assert!(outcome.final_loss.is_finite());
    }

    #[test]
    fn training_is_seed_deterministic() {
        let records = separable_toy(10);
        let config = TrainConfig::default();
        let a = train(&records, &config).unwrap();
        let b = train(&records, &config).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.final_loss, b.final_loss);
        let other = train(
            &records,
            &TrainConfig {
                seed: 43,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a.model, other.model);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(matches!(
            train(&[], &TrainConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn ranking_orders_by_score_then_index() {
        let mut scores = [0.0; CLASS_COUNT];
        scores[2] = 0.9;
        scores[7] = 0.8;
        let ranked = RankedPrediction::from_scores(scores);
        assert_eq!(ranked.top(), class(2));
        assert_eq!(ranked.entries()[1].0, class(7));
        assert_eq!(ranked.rank_of(class(2)), 1);

        let ties = RankedPrediction::from_scores([0.5; CLASS_COUNT]);
        let order: Vec<usize> = ties.entries().iter().map(|(c, _)| c.index()).collect();
        assert_eq!(order, (0..CLASS_COUNT).collect::<Vec<_>>());
    }

    #[test]
    fn dominant_row_ranks_its_class_first() {
        let mut model = DenseModel::zeros();
        for c in 0..SIGNAL_LEN {
            model.weights[2][c] = 0.3; // Bonds row dominates
        }
        let s = signal_with(&[(0, 1.0), (20, 1.0)]);
        assert_eq!(model.predict_ranked(&s).top(), class(2));
    }

    proptest! {
        #[test]
        fn top_rank_matches_forward_argmax(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = DenseModel::random_init(seed);
            let s = random_signal(&mut rng);
            let out = model.forward(&s);
            let ranked = model.predict_ranked(&s);
            // argmax with the same index tie-break
            let mut best = 0usize;
            for k in 1..CLASS_COUNT {
                if out[k] > out[best] {
                    best = k;
                }
            }
            prop_assert_eq!(ranked.top().index(), best);
            // scores are non-increasing
            for pair in ranked.entries().windows(2) {
                prop_assert!(pair[0].1 >= pair[1].1);
            }
        }
    }

    #[test]
    fn all_ones_weights_sum_to_one_hundred_per_group() {
        let mut model = DenseModel::zeros();
        for row in &mut model.weights {
            row.iter_mut().for_each(|w| *w = 1.0);
        }
        assert_eq!(model.group_weight_sums(), [100.0; GROUP_COUNT]);
        assert_eq!(DenseModel::zeros().group_weight_sums(), [0.0; GROUP_COUNT]);
    }

    #[test]
    fn weight_sums_have_comparable_magnitudes_after_training() {
        // shape-only sanity: all five sums are positive and fairly close,
        // mirroring the reported same-order-of-magnitude group weights
        let records = separable_toy(20);
        let outcome = train(&records, &TrainConfig::default()).unwrap();
        let sums = outcome.model.group_weight_sums();
        assert!(sums.iter().all(|s| *s > 0.0));
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 50.0, "sums spread too wide: {sums:?}");
    }

    #[test]
    fn group_class_matrix_locates_single_weight() {
        let mut model = DenseModel::zeros();
        model.weights[2][13] = -2.0; // group 1, class 2
        let matrix = model.group_class_weight_matrix();
        assert_eq!(matrix[1][2], 2.0);
        let total: f64 = matrix.iter().flatten().sum();
        assert_eq!(total, 2.0);
        assert_eq!(
            DenseModel::zeros().group_class_weight_matrix(),
            [[0.0; CLASS_COUNT]; GROUP_COUNT]
        );
    }

    #[test]
    fn group_class_matrix_is_consistent_with_sums() {
        let model = DenseModel::random_init(77);
        let matrix = model.group_class_weight_matrix();
        let sums = model.group_weight_sums();
        for g in 0..GROUP_COUNT {
            let row_sum: f64 = matrix[g].iter().sum();
            assert!((row_sum - sums[g]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..5 {
            let mut model = DenseModel::random_init(trial);
            let batch: Vec<(SignalVector, [f64; CLASS_COUNT])> = (0..4)
                .map(|_| {
                    (
                        random_signal(&mut rng),
                        one_hot(class(rng.gen_range(0..CLASS_COUNT))),
                    )
                })
                .collect();
            let (grad_w, grad_b, _) = mse_gradients(&model, &batch);
            let step = 1e-6;
            let mut diff_sq = 0.0;
            let mut norm_sq = 0.0;
            for k in 0..CLASS_COUNT {
                for c in 0..SIGNAL_LEN {
                    let orig = model.weights[k][c];
                    model.weights[k][c] = orig + step;
                    let up = mse_loss(&model, &batch);
                    model.weights[k][c] = orig - step;
                    let down = mse_loss(&model, &batch);
                    model.weights[k][c] = orig;
                    let fd = (up - down) / (2.0 * step);
                    diff_sq += (fd - grad_w[k][c]).powi(2);
                    norm_sq += fd.powi(2) + grad_w[k][c].powi(2);
                }
                let orig = model.bias[k];
                model.bias[k] = orig + step;
                let up = mse_loss(&model, &batch);
                model.bias[k] = orig - step;
                let down = mse_loss(&model, &batch);
                model.bias[k] = orig;
                let fd = (up - down) / (2.0 * step);
                diff_sq += (fd - grad_b[k]).powi(2);
                norm_sq += fd.powi(2) + grad_b[k].powi(2);
            }
            let rel = diff_sq.sqrt() / norm_sq.sqrt().max(1e-12);
            assert!(rel < 1e-4, "trial {trial}: relative error {rel}");
        }
    }

    #[test]
    fn model_round_trips_value_exactly() {
        let model = DenseModel::random_init(1234);
        let config = TrainConfig::default();
        let file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        model.save(&config, file.path()).unwrap();
        let (loaded, loaded_config) = DenseModel::load(file.path()).unwrap();
        assert_eq!(model, loaded);
        assert_eq!(config, loaded_config);
    }

    #[test]
    fn malformed_model_shapes_are_rejected() {
        let file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        std::fs::write(
            file.path(),
            r#"{"version":1,"activation":"sigmoid","config":{},"weights":[[1.0]],"bias":[0.0]}"#,
        )
        .unwrap();
        assert!(matches!(
            DenseModel::load(file.path()),
            Err(Error::Validation(_))
        ));
    }
}
