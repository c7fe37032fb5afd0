//! Regard labels and scorers.
//!
//! Every scorer maps masked text to a [`RegardResult`]. Three
//! implementations sit behind [`RegardScorer`]: the re-purposed sentiment
//! analyzer ([`SentimentBaseline`]), a trainable n-gram logistic
//! regression ([`linear::LinearRegardModel`]) and an HTTP client for
//! externally hosted models ([`remote::RemoteScorer`]).

pub mod eval;
pub mod features;
pub mod linear;
pub mod remote;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sentiment::SentimentAnalyzer;
use crate::{Error, Result};

/// Three-way ordinal label shared by sentiment and regard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarityLabel {
    Negative,
    Neutral,
    Positive,
}

impl PolarityLabel {
    /// In score-vector order: negative, neutral, positive.
    pub const ALL: [PolarityLabel; 3] = [
        PolarityLabel::Negative,
        PolarityLabel::Neutral,
        PolarityLabel::Positive,
    ];

    pub fn ordinal(self) -> i8 {
        match self {
            PolarityLabel::Negative => -1,
            PolarityLabel::Neutral => 0,
            PolarityLabel::Positive => 1,
        }
    }

    /// Position in a `[negative, neutral, positive]` vector.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolarityLabel::Negative => "negative",
            PolarityLabel::Neutral => "neutral",
            PolarityLabel::Positive => "positive",
        }
    }
}

impl fmt::Display for PolarityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for PolarityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" => Ok(PolarityLabel::Negative),
            "neutral" => Ok(PolarityLabel::Neutral),
            "positive" => Ok(PolarityLabel::Positive),
            other => Err(Error::Invalid(format!(
                "unknown label {other:?} (expected negative|neutral|positive)"
            ))),
        }
    }
}

/// Preference among tied maxima: neutral, then negative, then positive.
const TIE_ORDER: [PolarityLabel; 3] = [
    PolarityLabel::Neutral,
    PolarityLabel::Negative,
    PolarityLabel::Positive,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegardResult {
    pub label: PolarityLabel,
    /// Probabilities for negative, neutral, positive.
    pub scores: [f64; 3],
}

impl RegardResult {
    /// Label the score vector by its argmax.
    pub fn from_scores(scores: [f64; 3]) -> Self {
        RegardResult {
            label: argmax(&scores),
            scores,
        }
    }

    /// Smoothed one-hot vector: 0.8 on `label`, 0.1 elsewhere.
    pub fn smoothed(label: PolarityLabel) -> Self {
        let mut scores = [0.1; 3];
        scores[label.index()] = 0.8;
        RegardResult { label, scores }
    }

    /// Check scores lie in [0, 1], sum to one within `tol` and that the
    /// label is one of the maximal classes.
    pub fn validate(&self, tol: f64) -> std::result::Result<(), String> {
        if self.scores.iter().any(|s| !s.is_finite() || *s < 0.0 || *s > 1.0) {
            return Err(format!("scores {:?} outside [0, 1]", self.scores));
        }
        let sum: f64 = self.scores.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(format!("scores {:?} sum to {sum}", self.scores));
        }
        let max = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.scores[self.label.index()] < max {
            return Err(format!(
                "label {} is not the argmax of {:?}",
                self.label, self.scores
            ));
        }
        Ok(())
    }
}

pub fn argmax(scores: &[f64; 3]) -> PolarityLabel {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    TIE_ORDER
        .into_iter()
        .find(|l| scores[l.index()] == max)
        .unwrap_or(PolarityLabel::Neutral)
}

/// Anything that assigns regard to masked text.
pub trait RegardScorer: Send + Sync {
    fn name(&self) -> &str;

    /// Score a batch, returning one result per input in order.
    fn score_batch(&self, texts: &[&str]) -> Result<Vec<RegardResult>>;

    fn score(&self, text: &str) -> Result<RegardResult> {
        let mut out = self.score_batch(&[text])?;
        out.pop()
            .ok_or_else(|| Error::Invalid(format!("scorer {} returned no result", self.name())))
    }
}

/// Sentiment predictions taken as regard predictions.
#[derive(Debug, Clone)]
pub struct SentimentBaseline {
    analyzer: SentimentAnalyzer,
}

impl SentimentBaseline {
    pub fn new(analyzer: SentimentAnalyzer) -> Self {
        SentimentBaseline { analyzer }
    }

    pub fn score_text(&self, text: &str) -> RegardResult {
        RegardResult::smoothed(self.analyzer.analyze(text).label)
    }
}

impl RegardScorer for SentimentBaseline {
    fn name(&self) -> &str {
        "sentiment_baseline"
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<RegardResult>> {
        Ok(texts.iter().map(|t| self.score_text(t)).collect())
    }
}

pub fn score_with_sentiment_baseline(text: &str, analyzer: &SentimentAnalyzer) -> RegardResult {
    RegardResult::smoothed(analyzer.analyze(text).label)
}

/// Always predicts the same label. Useful as a majority-class baseline.
#[derive(Debug, Clone)]
pub struct ConstantScorer {
    pub label: PolarityLabel,
    name: String,
}

impl ConstantScorer {
    pub fn new(label: PolarityLabel) -> Self {
        ConstantScorer {
            label,
            name: format!("constant_{label}"),
        }
    }
}

impl RegardScorer for ConstantScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<RegardResult>> {
        Ok(vec![RegardResult::smoothed(self.label); texts.len()])
    }
}
