//! Multinomial logistic regression over n-gram counts.
//!
//! Trained by full-batch gradient descent on mean cross-entropy plus an L2
//! penalty `(l2 / 2) * ||W||^2` over every weight, bias column included.
//! The epoch with the best dev accuracy is kept.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureVector, Vocabulary};
use super::{RegardResult, RegardScorer};
use crate::corpus::LabeledSample;
use crate::error::{read_to_string, write_file};
use crate::{Error, PolarityLabel, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const N_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Half-width of the uniform initial weight distribution.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            l2: 1e-3,
            epochs: 300,
            seed: 1,
            init_scale: 0.01,
        }
    }
}

/// Row-major `N_CLASSES x n_features` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub n_features: usize,
    pub data: Vec<f64>,
}

impl Weights {
    pub fn zeros(n_features: usize) -> Self {
        Weights {
            n_features,
            data: vec![0.0; N_CLASSES * n_features],
        }
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.data[class * self.n_features..(class + 1) * self.n_features]
    }

    pub fn get(&self, class: usize, feature: usize) -> f64 {
        self.data[class * self.n_features + feature]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|w| w.is_finite())
    }
}

/// Softmax over the three class scores, shifted by the max for stability.
pub fn class_probabilities(weights: &Weights, x: &FeatureVector) -> [f64; 3] {
    let logits: [f64; 3] = std::array::from_fn(|c| x.dot(weights.row(c)));
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|z| (z - max).exp());
    let total: f64 = exps.iter().sum();
    exps.map(|e| e / total)
}

/// A training example in feature space.
#[derive(Debug, Clone)]
pub struct Example {
    pub features: FeatureVector,
    pub label: PolarityLabel,
}

/// Mean cross-entropy + L2 penalty, and its gradient.
pub fn loss_and_gradient(weights: &Weights, data: &[Example], l2: f64) -> (f64, Weights) {
    let mut grad = Weights::zeros(weights.n_features);
    let n = data.len().max(1) as f64;
    let mut loss = 0.0;
    for ex in data {
        let p = class_probabilities(weights, &ex.features);
        let y = ex.label.index();
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for (c, &pc) in p.iter().enumerate() {
            let delta = (pc - if c == y { 1.0 } else { 0.0 }) / n;
            let row = &mut grad.data[c * weights.n_features..(c + 1) * weights.n_features];
            for &(i, v) in &ex.features.entries {
                row[i] += delta * v;
            }
        }
    }
    loss /= n;
    let mut penalty = 0.0;
    for (g, w) in grad.data.iter_mut().zip(&weights.data) {
        *g += l2 * w;
        penalty += w * w;
    }
    (loss + 0.5 * l2 * penalty, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegardModel {
    pub vocabulary: Vocabulary,
    pub weights: Weights,
    pub config: TrainConfig,
    pub format_version: u32,
}

/// Per-epoch training trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainingLog {
    pub losses: Vec<f64>,
    pub dev_accuracies: Vec<f64>,
    pub best_epoch: usize,
}

impl LinearRegardModel {
    pub fn predict(&self, masked_text: &str) -> RegardResult {
        let x = featurize(masked_text, &self.vocabulary);
        RegardResult::from_scores(class_probabilities(&self.weights, &x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: LinearRegardModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model format_version {}",
                model.format_version
            )));
        }
        if model.weights.n_features != model.vocabulary.len() + 1
            || model.weights.data.len() != N_CLASSES * model.weights.n_features
            || !model.weights.is_finite()
            || !model.vocabulary.is_dense()
        {
            return Err(Error::Invalid("model weights do not match vocabulary".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

pub fn predict(model: &LinearRegardModel, masked_text: &str) -> RegardResult {
    model.predict(masked_text)
}

impl RegardScorer for LinearRegardModel {
    fn name(&self) -> &str {
        "trained"
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<RegardResult>> {
        Ok(texts.iter().map(|t| self.predict(t)).collect())
    }
}

fn examples(samples: &[LabeledSample], vocab: &Vocabulary) -> Vec<Example> {
    samples
        .iter()
        .map(|s| Example {
            features: featurize(&s.masked_text, vocab),
            label: s.gold_regard,
        })
        .collect()
}

fn accuracy(weights: &Weights, data: &[Example]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data
        .iter()
        .filter(|ex| RegardResult::from_scores(class_probabilities(weights, &ex.features)).label == ex.label)
        .count();
    hits as f64 / data.len() as f64
}

/// Train on `train`, selecting the epoch with the best accuracy on `dev`.
pub fn train(train: &[LabeledSample], dev: &[LabeledSample], config: &TrainConfig) -> Result<LinearRegardModel> {
    train_with_log(train, dev, config).map(|(m, _)| m)
}

pub fn train_with_log(
    train: &[LabeledSample],
    dev: &[LabeledSample],
    config: &TrainConfig,
) -> Result<(LinearRegardModel, TrainingLog)> {
    if train.is_empty() {
        return Err(Error::Invalid("cannot train on an empty split".into()));
    }
    if !(config.learning_rate > 0.0 && config.l2 >= 0.0) {
        return Err(Error::Invalid(format!("invalid training config {config:?}")));
    }
    let vocabulary = Vocabulary::build(train.iter().map(|s| s.masked_text.as_str()));
    let train_x = examples(train, &vocabulary);
    let dev_x = examples(dev, &vocabulary);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = Weights::zeros(vocabulary.len() + 1);
    if config.init_scale > 0.0 {
        for w in &mut weights.data {
            *w = rng.gen_range(-config.init_scale..=config.init_scale);
        }
    }

    let mut log = TrainingLog::default();
    let mut best = (f64::NEG_INFINITY, weights.clone(), 0);
    for epoch in 0..=config.epochs {
        let (loss, grad) = loss_and_gradient(&weights, &train_x, config.l2);
        log.losses.push(loss);
        if !dev_x.is_empty() {
            let acc = accuracy(&weights, &dev_x);
            log.dev_accuracies.push(acc);
            if acc > best.0 {
                best = (acc, weights.clone(), epoch);
            }
        }
        if epoch == config.epochs {
            break;
        }
        for (w, g) in weights.data.iter_mut().zip(&grad.data) {
            *w -= config.learning_rate * g;
        }
    }
    if !weights.is_finite() {
        return Err(Error::Invalid("training diverged; lower the learning rate".into()));
    }
    let weights = if dev_x.is_empty() {
        log.best_epoch = config.epochs;
        weights
    } else {
        log.best_epoch = best.2;
        best.1
    };
    Ok((
        LinearRegardModel {
            vocabulary,
            weights,
            config: *config,
            format_version: MODEL_FORMAT_VERSION,
        },
        log,
    ))
}
