//! Accuracy of regard scorers against gold labels.

use std::collections::BTreeMap;

use serde::Serialize;

use super::linear::{train, TrainConfig};
use super::RegardScorer;
use crate::corpus::LabeledSample;
use crate::stats::mean_accuracy;
use crate::templates::{BiasContext, TemplateSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub n: usize,
    /// Only contexts with at least one sample appear.
    pub per_context: BTreeMap<BiasContext, f64>,
}

/// Exact-label accuracy of `scorer` on `samples`.
pub fn accuracy(scorer: &dyn RegardScorer, samples: &[LabeledSample], templates: &TemplateSet) -> Result<AccuracyReport> {
    if samples.is_empty() {
        return Err(Error::Invalid("accuracy needs at least one labeled sample".into()));
    }
    let texts: Vec<&str> = samples.iter().map(|s| s.masked_text.as_str()).collect();
    let results = scorer.score_batch(&texts)?;
    let mut hits = 0usize;
    let mut per: BTreeMap<BiasContext, (usize, usize)> = BTreeMap::new();
    for (s, r) in samples.iter().zip(&results) {
        let hit = r.label == s.gold_regard;
        hits += usize::from(hit);
        if let Some(ctx) = s.context(templates) {
            let e = per.entry(ctx).or_default();
            e.0 += usize::from(hit);
            e.1 += 1;
        }
    }
    Ok(AccuracyReport {
        accuracy: hits as f64 / samples.len() as f64,
        n: samples.len(),
        per_context: per.into_iter().map(|(c, (h, n))| (c, h as f64 / n as f64)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSetReport {
    pub scorer: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<AccuracyReport>,
    pub mean_accuracy: f64,
    pub mean_per_context: BTreeMap<BiasContext, f64>,
}

fn summarize(scorer: String, seeds: Vec<u64>, runs: Vec<AccuracyReport>) -> Result<RunSetReport> {
    let (mean, _) = mean_accuracy(&runs.iter().map(|r| r.accuracy).collect::<Vec<_>>())?;
    let mut mean_per_context = BTreeMap::new();
    for ctx in BiasContext::ALL {
        let values: Vec<f64> = runs.iter().filter_map(|r| r.per_context.get(&ctx).copied()).collect();
        if !values.is_empty() {
            mean_per_context.insert(ctx, mean_accuracy(&values)?.0);
        }
    }
    Ok(RunSetReport {
        scorer,
        seeds,
        runs,
        mean_accuracy: mean,
        mean_per_context,
    })
}

/// Retrain the linear model once per seed and average test accuracy.
pub fn evaluate_trained(
    train_split: &[LabeledSample],
    dev_split: &[LabeledSample],
    test: &[LabeledSample],
    config: &TrainConfig,
    seeds: &[u64],
    templates: &TemplateSet,
) -> Result<RunSetReport> {
    if seeds.is_empty() {
        return Err(Error::Invalid("need at least one seed".into()));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let model = train(train_split, dev_split, &TrainConfig { seed, ..*config })?;
        runs.push(accuracy(&model, test, templates)?);
    }
    summarize("trained".into(), seeds.to_vec(), runs)
}

/// Evaluate a fixed scorer `runs` times (for deterministic scorers every run agrees).
pub fn evaluate(scorer: &dyn RegardScorer, samples: &[LabeledSample], runs: usize, templates: &TemplateSet) -> Result<RunSetReport> {
    let runs = (0..runs.max(1))
        .map(|_| accuracy(scorer, samples, templates))
        .collect::<Result<Vec<_>>>()?;
    summarize(scorer.name().to_string(), Vec::new(), runs)
}
