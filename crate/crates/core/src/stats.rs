//! Agreement and correlation statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, CategoryValue, Metric};
use crate::corpus::LabeledSample;
use crate::templates::{BiasContext, TemplateSet};
use crate::{Error, PolarityLabel, Result};

/// Per-item counts of how many raters chose each category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    pub categories: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl RatingMatrix {
    /// Build from per-item rating lists. Ratings outside `categories` are an error.
    pub fn from_ratings<T: PartialEq + ToString>(items: &[Vec<T>], categories: &[T]) -> Result<Self> {
        let mut counts = Vec::with_capacity(items.len());
        for (i, ratings) in items.iter().enumerate() {
            let mut row = vec![0; categories.len()];
            for r in ratings {
                let j = categories
                    .iter()
                    .position(|c| c == r)
                    .ok_or_else(|| Error::Invalid(format!("item {i}: rating {} not a category", r.to_string())))?;
                row[j] += 1;
            }
            counts.push(row);
        }
        Ok(RatingMatrix {
            categories: categories.iter().map(ToString::to_string).collect(),
            counts,
        })
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    /// The common number of raters per item.
    pub fn raters(&self) -> Result<usize> {
        let first = self
            .counts
            .first()
            .ok_or_else(|| Error::Invalid("rating matrix has no items".into()))?
            .iter()
            .sum::<usize>();
        if let Some(i) = self.counts.iter().position(|r| r.iter().sum::<usize>() != first) {
            return Err(Error::Invalid(format!(
                "item {i} has {} ratings, expected {first}",
                self.counts[i].iter().sum::<usize>()
            )));
        }
        if first < 2 {
            return Err(Error::Invalid(format!("need at least 2 raters per item, got {first}")));
        }
        Ok(first)
    }
}

/// Fleiss' kappa for a fixed number of raters per item.
pub fn fleiss_kappa(matrix: &RatingMatrix) -> Result<f64> {
    let n = matrix.raters()? as f64;
    let items = matrix.n_items() as f64;
    let k = matrix.categories.len();

    let mut p_bar = 0.0;
    let mut totals = vec![0.0; k];
    for row in &matrix.counts {
        let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
        p_bar += (sq - n) / (n * (n - 1.0));
        for (t, &c) in totals.iter_mut().zip(row) {
            *t += c as f64;
        }
    }
    p_bar /= items;
    let p_e: f64 = totals.iter().map(|t| (t / (items * n)).powi(2)).sum();

    if p_bar == 1.0 {
        return Ok(1.0);
    }
    if p_e == 1.0 {
        return Err(Error::Undefined("chance agreement is 1; kappa is undefined".into()));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Fleiss-style kappa allowing a different rater count per item (each ≥ 2).
///
/// Per-item agreement uses that item's own count; chance agreement uses the
/// pooled category proportions.
pub fn fleiss_kappa_unequal(matrix: &RatingMatrix) -> Result<f64> {
    let k = matrix.categories.len();
    let mut p_bar = 0.0;
    let mut totals = vec![0.0; k];
    let mut used = 0usize;
    for row in &matrix.counts {
        let n: usize = row.iter().sum();
        if n < 2 {
            continue;
        }
        let nf = n as f64;
        let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
        p_bar += (sq - nf) / (nf * (nf - 1.0));
        for (t, &c) in totals.iter_mut().zip(row) {
            *t += c as f64;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Invalid("no item has at least 2 ratings".into()));
    }
    p_bar /= used as f64;
    let grand: f64 = totals.iter().sum();
    let p_e: f64 = totals.iter().map(|t| (t / grand).powi(2)).sum();
    if p_bar == 1.0 {
        return Ok(1.0);
    }
    if p_e == 1.0 {
        return Err(Error::Undefined("chance agreement is 1; kappa is undefined".into()));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Average (mid) ranks, 1-based.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Invalid(format!(
            "correlation needs two equal-length inputs of at least 2 values (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of midranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Invalid(format!(
            "spearman needs two equal-length inputs of at least 2 values (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    pearson(&midranks(xs), &midranks(ys))
}

/// Spearman over ordinal labels (negative < neutral < positive).
pub fn spearman_labels(xs: &[PolarityLabel], ys: &[PolarityLabel]) -> Result<f64> {
    let f = |v: &[PolarityLabel]| v.iter().map(|l| f64::from(l.ordinal())).collect::<Vec<_>>();
    spearman(&f(xs), &f(ys))
}

/// Mean of per-run accuracies, keeping the runs.
pub fn mean_accuracy(per_run: &[f64]) -> Result<(f64, Vec<f64>)> {
    if per_run.is_empty() {
        return Err(Error::Invalid("mean accuracy needs at least one run".into()));
    }
    let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
    Ok((mean, per_run.to_vec()))
}

/// How "original categories only" agreement restricts the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// Keep items whose raters all chose original categories.
    #[default]
    DropItems,
    /// Drop non-original ratings and keep items with at least 2 left.
    DropRatings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub metric: String,
    pub subset: String,
    pub value: f64,
    pub n_items: usize,
}

/// Ratings per sample for one metric, ordered by annotator id.
fn ratings_by_sample(records: &[AnnotationRecord], metric: Metric) -> BTreeMap<&str, Vec<(&str, CategoryValue)>> {
    let mut by_sample: BTreeMap<&str, Vec<(&str, CategoryValue)>> = BTreeMap::new();
    for r in records {
        by_sample
            .entry(r.sample_id.as_str())
            .or_default()
            .push((r.annotator_id.as_str(), r.category(metric)));
    }
    for ratings in by_sample.values_mut() {
        ratings.sort_by(|a, b| a.0.cmp(b.0));
    }
    by_sample
}

/// Kappa over all six categories.
pub fn kappa_all_categories(records: &[AnnotationRecord], metric: Metric) -> Result<(f64, usize)> {
    let items: Vec<Vec<CategoryValue>> = ratings_by_sample(records, metric)
        .into_values()
        .map(|r| r.into_iter().map(|(_, c)| c).collect())
        .collect();
    let m = RatingMatrix::from_ratings(&items, &CategoryValue::ALL)?;
    Ok((fleiss_kappa(&m)?, m.n_items()))
}

/// Kappa restricted to the three original categories.
pub fn kappa_original(records: &[AnnotationRecord], metric: Metric, restriction: Restriction) -> Result<(f64, usize)> {
    let items = original_items(records, metric, restriction);
    let m = RatingMatrix::from_ratings(&items, &PolarityLabel::ALL)?;
    let kappa = match restriction {
        Restriction::DropItems => fleiss_kappa(&m)?,
        Restriction::DropRatings => fleiss_kappa_unequal(&m)?,
    };
    Ok((kappa, m.n_items()))
}

fn original_items(records: &[AnnotationRecord], metric: Metric, restriction: Restriction) -> Vec<Vec<PolarityLabel>> {
    ratings_by_sample(records, metric)
        .into_values()
        .filter_map(|ratings| {
            let originals: Vec<PolarityLabel> = ratings.iter().filter_map(|(_, c)| c.original()).collect();
            match restriction {
                Restriction::DropItems if originals.len() == ratings.len() => Some(originals),
                Restriction::DropRatings if originals.len() >= 2 => Some(originals),
                _ => None,
            }
        })
        .collect()
}

/// Mean pairwise Spearman between rater slots over items where every
/// rating is an original category. Slots follow annotator-id order.
pub fn annotator_spearman(records: &[AnnotationRecord], metric: Metric) -> Result<(f64, usize)> {
    let items = original_items(records, metric, Restriction::DropItems);
    let raters = items.first().map_or(0, Vec::len);
    if items.iter().any(|i| i.len() != raters) || raters < 2 {
        return Err(Error::Invalid("annotator spearman needs a fixed rater count ≥ 2".into()));
    }
    let mut total = 0.0;
    let mut pairs = 0;
    for a in 0..raters {
        for b in a + 1..raters {
            let xs: Vec<PolarityLabel> = items.iter().map(|i| i[a]).collect();
            let ys: Vec<PolarityLabel> = items.iter().map(|i| i[b]).collect();
            total += spearman_labels(&xs, &ys)?;
            pairs += 1;
        }
    }
    Ok((total / pairs as f64, items.len()))
}

/// Spearman between two label columns of the gold set, split by context.
///
/// Returns rows for respect, occupation and both.
pub fn gold_correlations(
    name: &str,
    gold: &[LabeledSample],
    templates: &TemplateSet,
    left: impl Fn(&LabeledSample) -> PolarityLabel,
    right: impl Fn(&LabeledSample) -> PolarityLabel,
) -> Result<Vec<StatRow>> {
    let mut rows = Vec::new();
    let subsets: [(&str, Option<BiasContext>); 3] = [
        ("respect", Some(BiasContext::Respect)),
        ("occupation", Some(BiasContext::Occupation)),
        ("both", None),
    ];
    for (subset, ctx) in subsets {
        let members: Vec<&LabeledSample> = gold
            .iter()
            .filter(|s| ctx.is_none() || s.context(templates) == ctx)
            .collect();
        let xs: Vec<PolarityLabel> = members.iter().map(|s| left(s)).collect();
        let ys: Vec<PolarityLabel> = members.iter().map(|s| right(s)).collect();
        rows.push(StatRow {
            metric: name.to_string(),
            subset: subset.to_string(),
            value: spearman_labels(&xs, &ys)?,
            n_items: members.len(),
        });
    }
    Ok(rows)
}

pub const ROW_SENTIMENT_VS_REGARD: &str = "sentiment ann. vs. regard ann.";
pub const ROW_PRED_VS_SENTIMENT: &str = "sentiment pred. vs. sentiment ann.";
pub const ROW_PRED_VS_REGARD: &str = "sentiment pred. vs. regard ann.";

/// Sentiment predictions for gold samples, keyed by sample id.
pub type Predictions = BTreeMap<String, PolarityLabel>;

pub const PREDICTIONS_HEADER: &str = "id\tsentiment";

/// Parse a predictions TSV (`id<TAB>negative|neutral|positive`, with header).
pub fn parse_predictions(input: &str, source: &str) -> Result<Predictions> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == PREDICTIONS_HEADER => {}
        _ => return Err(Error::parse(source, 1, format!("expected header {PREDICTIONS_HEADER:?}"))),
    }
    let mut out = Predictions::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source, i + 1, "expected 2 columns"))?;
        let label: PolarityLabel = label
            .trim()
            .parse()
            .map_err(|e| Error::parse(source, i + 1, format!("{e}")))?;
        if out.insert(id.to_string(), label).is_some() {
            return Err(Error::parse(source, i + 1, format!("duplicate id {id:?}")));
        }
    }
    Ok(out)
}

pub fn write_predictions(predictions: &Predictions) -> String {
    let mut out = format!("{PREDICTIONS_HEADER}\n");
    for (id, label) in predictions {
        out.push_str(&format!("{id}\t{label}\n"));
    }
    out
}

/// Correlation rows between gold annotations and, optionally, predictions.
pub fn correlation_rows(gold: &[LabeledSample], templates: &TemplateSet, predictions: Option<&Predictions>) -> Result<Vec<StatRow>> {
    let mut rows = gold_correlations(ROW_SENTIMENT_VS_REGARD, gold, templates, |s| s.gold_sentiment, |s| s.gold_regard)?;
    if let Some(pred) = predictions {
        if let Some(missing) = gold.iter().find(|s| !pred.contains_key(&s.id)) {
            return Err(Error::Invalid(format!("no prediction for gold sample {:?}", missing.id)));
        }
        rows.extend(gold_correlations(ROW_PRED_VS_SENTIMENT, gold, templates, |s| pred[&s.id], |s| s.gold_sentiment)?);
        rows.extend(gold_correlations(ROW_PRED_VS_REGARD, gold, templates, |s| pred[&s.id], |s| s.gold_regard)?);
    }
    Ok(rows)
}

/// Agreement rows for raw annotations.
pub fn agreement_rows(records: &[AnnotationRecord], restriction: Restriction) -> Result<Vec<StatRow>> {
    let mut rows = Vec::new();
    for metric in Metric::ALL {
        let (value, n_items) = kappa_all_categories(records, metric)?;
        rows.push(StatRow {
            metric: format!("fleiss_kappa.{metric}"),
            subset: "all_categories".into(),
            value,
            n_items,
        });
        let (value, n_items) = kappa_original(records, metric, restriction)?;
        rows.push(StatRow {
            metric: format!("fleiss_kappa.{metric}"),
            subset: "original_categories".into(),
            value,
            n_items,
        });
        let (value, n_items) = annotator_spearman(records, metric)?;
        rows.push(StatRow {
            metric: format!("annotator_spearman.{metric}"),
            subset: "original_categories".into(),
            value,
            n_items,
        });
    }
    Ok(rows)
}

/// Aligned text table: correlation rows as Respect / Occ. / Both columns,
/// followed by any other rows one per line.
pub fn render_table(rows: &[StatRow]) -> String {
    let mut out = String::new();
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if matches!(r.subset.as_str(), "respect" | "occupation" | "both") && !names.contains(&r.metric.as_str()) {
            names.push(&r.metric);
        }
    }
    if !names.is_empty() {
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max("Datasets".len());
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>7}  {:>7}", "Datasets", "Respect", "Occ.", "Both");
        for name in &names {
            let cell = |subset: &str| {
                rows.iter()
                    .find(|r| r.metric == *name && r.subset == subset)
                    .map_or("-".to_string(), |r| format!("{:.2}", r.value))
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>7}  {:>7}",
                name,
                cell("respect"),
                cell("occupation"),
                cell("both")
            );
        }
    }
    let others: Vec<&StatRow> = rows
        .iter()
        .filter(|r| !matches!(r.subset.as_str(), "respect" | "occupation" | "both"))
        .collect();
    if !others.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        let width = others.iter().map(|r| r.metric.len() + r.subset.len() + 3).max().unwrap_or(0);
        for r in others {
            let label = format!("{} ({})", r.metric, r.subset);
            let _ = writeln!(out, "{label:<width$}  {:>6.3}  n={}", r.value, r.n_items);
        }
    }
    out
}
