//! Unigram + bigram count features over lowercased text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Lowercased word tokens. Apostrophes stay inside words.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Unigrams followed by space-joined bigrams.
pub fn ngrams(text: &str) -> Vec<String> {
    let toks = tokens(text);
    let mut out = toks.clone();
    out.extend(toks.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// Dense, unique n-gram indices. Indices follow lexicographic n-gram order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut grams: Vec<String> = texts.into_iter().flat_map(ngrams).collect();
        grams.sort();
        grams.dedup();
        Vocabulary {
            index: grams.into_iter().enumerate().map(|(i, g)| (g, i)).collect(),
        }
    }

    pub fn from_ngrams<I, S>(grams: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut grams: Vec<String> = grams.into_iter().map(Into::into).collect();
        grams.sort();
        grams.dedup();
        Vocabulary {
            index: grams.into_iter().enumerate().map(|(i, g)| (g, i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).copied()
    }

    /// Column of the always-on bias feature.
    pub fn bias_index(&self) -> usize {
        self.index.len()
    }

    /// Indices are exactly `0..len` with no repeats.
    pub fn is_dense(&self) -> bool {
        let mut seen = vec![false; self.index.len()];
        self.index.values().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true))
    }
}

/// Sparse counts sorted by index; the bias entry is last with value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| weights[i] * v).sum()
    }
}

pub fn featurize(masked_text: &str, vocabulary: &Vocabulary) -> FeatureVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for gram in ngrams(masked_text) {
        if let Some(i) = vocabulary.get(&gram) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
    entries.push((vocabulary.bias_index(), 1.0));
    FeatureVector { entries }
}
