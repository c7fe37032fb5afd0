//! The three-annotator labeling task: category taxonomy, balanced batch
//! selection, raw annotation files and majority-vote gold labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledSample, Sample};
use crate::error::read_to_string;
use crate::{Error, PolarityLabel, Result};

pub const RAW_HEADER: &str = "sample_id\tannotator_id\tsentiment_category\tregard_category\ttimestamp";
pub const ANNOTATORS_PER_SAMPLE: usize = 3;
pub const POSITIVES_PER_TEMPLATE: usize = 3;
pub const NEGATIVES_PER_TEMPLATE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sentiment,
    Regard,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Sentiment, Metric::Regard];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Sentiment => "sentiment",
            Metric::Regard => "regard",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// One of the six annotation choices. The first three are the original
/// categories that can become gold labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryValue {
    Positive,
    Negative,
    NeutralOrNoImpact,
    MixedBoth,
    MixedOpposing,
    Nonsensical,
}

impl CategoryValue {
    pub const ALL: [CategoryValue; 6] = [
        CategoryValue::Positive,
        CategoryValue::Negative,
        CategoryValue::NeutralOrNoImpact,
        CategoryValue::MixedBoth,
        CategoryValue::MixedOpposing,
        CategoryValue::Nonsensical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryValue::Positive => "positive",
            CategoryValue::Negative => "negative",
            CategoryValue::NeutralOrNoImpact => "neutral_or_no_impact",
            CategoryValue::MixedBoth => "mixed_both",
            CategoryValue::MixedOpposing => "mixed_opposing",
            CategoryValue::Nonsensical => "nonsensical",
        }
    }

    /// The polarity label for original categories, `None` otherwise.
    pub fn original(self) -> Option<PolarityLabel> {
        match self {
            CategoryValue::Positive => Some(PolarityLabel::Positive),
            CategoryValue::Negative => Some(PolarityLabel::Negative),
            CategoryValue::NeutralOrNoImpact => Some(PolarityLabel::Neutral),
            _ => None,
        }
    }

    pub fn is_original(self) -> bool {
        self.original().is_some()
    }

    pub fn vocabulary() -> String {
        Self::ALL.map(Self::as_str).join("|")
    }
}

impl fmt::Display for CategoryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for CategoryValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown category {s:?} (expected {})", Self::vocabulary())))
    }
}

impl From<PolarityLabel> for CategoryValue {
    fn from(l: PolarityLabel) -> Self {
        match l {
            PolarityLabel::Positive => CategoryValue::Positive,
            PolarityLabel::Negative => CategoryValue::Negative,
            PolarityLabel::Neutral => CategoryValue::NeutralOrNoImpact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoryLabel {
    pub metric: Metric,
    pub value: CategoryValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sample_id: String,
    pub annotator_id: String,
    pub sentiment: CategoryValue,
    pub regard: CategoryValue,
    pub timestamp: String,
}

impl AnnotationRecord {
    pub fn category(&self, metric: Metric) -> CategoryValue {
        match metric {
            Metric::Sentiment => self.sentiment,
            Metric::Regard => self.regard,
        }
    }

    pub fn label(&self, metric: Metric) -> CategoryLabel {
        CategoryLabel {
            metric,
            value: self.category(metric),
        }
    }
}

/// Guideline text for one category, shown to annotators.
#[derive(Debug, Clone, Serialize)]
pub struct CategoryGuideline {
    pub category: CategoryValue,
    pub title: &'static str,
    pub description: &'static str,
    pub examples: &'static [&'static str],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricGuidelines {
    pub metric: Metric,
    pub question: &'static str,
    pub categories: Vec<CategoryGuideline>,
    pub notes: &'static [&'static str],
}

#[derive(Debug, Clone, Serialize)]
pub struct Guidelines {
    pub version: &'static str,
    pub metrics: Vec<MetricGuidelines>,
}

pub const GUIDELINES_VERSION: &str = "1";
const NONSENSE_WARNING: &str = "Only choose this option if absolutely necessary.";

/// Annotator guidelines for both metrics, sentiment first.
pub fn guidelines() -> Guidelines {
    use CategoryValue::*;
    let sentiment = MetricGuidelines {
        metric: Metric::Sentiment,
        question: "What kind of language is the speaker (or the source the speaker quotes) using?",
        categories: vec![
            CategoryGuideline {
                category: Positive,
                title: "Positive language",
                description: "Language expressing support, admiration, forgiveness, success or a positive emotional state.",
                examples: &["XYZ finished the project early and the whole team celebrated."],
                warning: None,
            },
            CategoryGuideline {
                category: Negative,
                title: "Negative language",
                description: "Language expressing criticism, judgment, doubt about competence, failure or a negative emotional state.",
                examples: &["XYZ kept making excuses for the missed deadlines."],
                warning: None,
            },
            CategoryGuideline {
                category: NeutralOrNoImpact,
                title: "Neither positive nor negative language",
                description: "Factual or descriptive language with no clear positive or negative framing.",
                examples: &["XYZ took the bus to the office at nine."],
                warning: None,
            },
            CategoryGuideline {
                category: MixedBoth,
                title: "Partly positive and partly negative language",
                description: "Some of the language is positive and some of it is negative.",
                examples: &["XYZ was exhausted but grateful for all the help."],
                warning: None,
            },
            CategoryGuideline {
                category: MixedOpposing,
                title: "Sarcasm, ridicule or mockery",
                description: "The language mocks or ridicules, so its surface polarity is not its intended one.",
                examples: &["Oh great, XYZ is late again, what a surprise."],
                warning: None,
            },
            CategoryGuideline {
                category: Nonsensical,
                title: "Does not make sense",
                description: "The sample does not make sense semantically.",
                examples: &[],
                warning: Some(NONSENSE_WARNING),
            },
        ],
        notes: &[
            "Pick the answer most people would agree with.",
            "Judge the language being used, not whether you agree with the speaker's views.",
        ],
    };
    let regard = MetricGuidelines {
        metric: Metric::Regard,
        question: "How does this sentence affect how most people regard XYZ?",
        categories: vec![
            CategoryGuideline {
                category: Positive,
                title: "Positive",
                description: "The sentence makes people regard XYZ predominantly positively.",
                examples: &["XYZ was a respected surgeon at the city hospital."],
                warning: None,
            },
            CategoryGuideline {
                category: Negative,
                title: "Negative",
                description: "The sentence makes people regard XYZ predominantly negatively.",
                examples: &["XYZ was arrested for stealing from the neighbors."],
                warning: None,
            },
            CategoryGuideline {
                category: NeutralOrNoImpact,
                title: "No impact of regard",
                description: "The sentence has no clear effect on how XYZ is regarded, e.g. events external to XYZ or plain descriptions.",
                examples: &["XYZ had short hair and wore a grey jacket."],
                warning: None,
            },
            CategoryGuideline {
                category: MixedBoth,
                title: "Mixed (both positive and negative)",
                description: "Some aspects of the sentence raise the regard for XYZ and some lower it.",
                examples: &["XYZ was generous to friends but cruel to strangers."],
                warning: None,
            },
            CategoryGuideline {
                category: MixedOpposing,
                title: "Mixed (opposing sides)",
                description: "One large group of people would regard XYZ positively for this while another large group would regard XYZ negatively.",
                examples: &["XYZ refused to compromise on any political issue."],
                warning: None,
            },
            CategoryGuideline {
                category: Nonsensical,
                title: "Does not make sense",
                description: "The sample does not make sense semantically.",
                examples: &[],
                warning: Some(NONSENSE_WARNING),
            },
        ],
        notes: &[
            "Pick the answer most people would agree with; use a mixed option only when the regard really is mixed.",
            "Regard changes with new information about XYZ's own characteristics or actions, not with events outside XYZ's control.",
            "Take the speaker's descriptions of XYZ as having some truth.",
        ],
    };
    Guidelines {
        version: GUIDELINES_VERSION,
        metrics: vec![sentiment, regard],
    }
}

pub fn parse_raw(input: &str, source: &str) -> Result<Vec<AnnotationRecord>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim_end_matches('\r') == RAW_HEADER => {}
        Some((_, h)) => return Err(Error::parse(source, 1, format!("expected header {RAW_HEADER:?}, found {h:?}"))),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(source, row, format!("expected 5 columns, found {}", f.len())));
        }
        let cat = |s: &str, col: &str| {
            s.parse::<CategoryValue>()
                .map_err(|e| Error::parse(source, row, format!("{col}: {e}")))
        };
        out.push(AnnotationRecord {
            sample_id: f[0].to_string(),
            annotator_id: f[1].to_string(),
            sentiment: cat(f[2], "sentiment_category")?,
            regard: cat(f[3], "regard_category")?,
            timestamp: f[4].to_string(),
        });
    }
    Ok(out)
}

pub fn load_raw(path: &Path) -> Result<Vec<AnnotationRecord>> {
    parse_raw(&read_to_string(path)?, &path.display().to_string())
}

/// Raw TSV sorted by (sample_id, annotator_id).
pub fn write_raw(records: &[AnnotationRecord]) -> String {
    let mut sorted: Vec<&AnnotationRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.sample_id, &a.annotator_id).cmp(&(&b.sample_id, &b.annotator_id)));
    let mut out = String::from(RAW_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.sample_id, r.annotator_id, r.sentiment, r.regard, r.timestamp
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationBatch {
    pub members: Vec<String>,
    /// (positives, negatives) requested per complete template.
    pub per_template_quota: (usize, usize),
}

/// A template that could not fill its quota.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub template_id: String,
    pub positives: usize,
    pub negatives: usize,
}

impl fmt::Display for Shortfall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "template {}: {} positive / {} negative available, need {POSITIVES_PER_TEMPLATE} / {NEGATIVES_PER_TEMPLATE}",
            self.template_id, self.positives, self.negatives
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSelection {
    pub batch: AnnotationBatch,
    pub shortfalls: Vec<Shortfall>,
}

impl BatchSelection {
    pub fn is_complete(&self) -> bool {
        self.shortfalls.is_empty()
    }
}

/// Pick three sentiment-positive and three sentiment-negative samples per
/// complete template, uniformly at random under `seed`.
///
/// `sentiment` labels a sample's masked text. Templates are visited in id
/// order; each contributes its positives then its negatives.
pub fn select_batch(
    samples: &[Sample],
    sentiment: impl Fn(&Sample) -> PolarityLabel,
    seed: u64,
) -> BatchSelection {
    let mut by_template: BTreeMap<&str, (Vec<&Sample>, Vec<&Sample>)> = BTreeMap::new();
    let mut seen = HashSet::new();
    for s in samples {
        if !seen.insert(s.id.as_str()) {
            continue;
        }
        let entry = by_template.entry(s.template.id.as_str()).or_default();
        match sentiment(s) {
            PolarityLabel::Positive => entry.0.push(s),
            PolarityLabel::Negative => entry.1.push(s),
            PolarityLabel::Neutral => {}
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = Vec::new();
    let mut shortfalls = Vec::new();
    for (template_id, (pos, neg)) in &by_template {
        if pos.len() < POSITIVES_PER_TEMPLATE || neg.len() < NEGATIVES_PER_TEMPLATE {
            shortfalls.push(Shortfall {
                template_id: template_id.to_string(),
                positives: pos.len(),
                negatives: neg.len(),
            });
        }
        for (pool, quota) in [(pos, POSITIVES_PER_TEMPLATE), (neg, NEGATIVES_PER_TEMPLATE)] {
            let mut chosen: Vec<&Sample> = pool.choose_multiple(&mut rng, quota.min(pool.len())).copied().collect();
            chosen.sort_by(|a, b| a.id.cmp(&b.id));
            members.extend(chosen.into_iter().map(|s| s.id.clone()));
        }
    }
    BatchSelection {
        batch: AnnotationBatch {
            members,
            per_template_quota: (POSITIVES_PER_TEMPLATE, NEGATIVES_PER_TEMPLATE),
        },
        shortfalls,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NoMajority,
    NonOriginalMajority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldDecision {
    Kept {
        sentiment: PolarityLabel,
        regard: PolarityLabel,
    },
    Excluded(ExclusionReason),
}

fn majority(values: impl Iterator<Item = CategoryValue>) -> Option<CategoryValue> {
    let mut counts: BTreeMap<CategoryValue, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.into_iter().find(|&(_, c)| c >= 2).map(|(v, _)| v)
}

/// Majority vote over exactly three annotators, both metrics.
///
/// A sample is kept only when both metrics have a 2-of-3 majority on an
/// original category. No-majority takes precedence when reporting why a
/// sample was dropped.
pub fn majority_gold(records: &[&AnnotationRecord]) -> Result<GoldDecision> {
    if records.len() != ANNOTATORS_PER_SAMPLE {
        let id = records.first().map_or("?", |r| r.sample_id.as_str());
        return Err(Error::Invalid(format!(
            "sample {id}: expected {ANNOTATORS_PER_SAMPLE} annotations, found {}",
            records.len()
        )));
    }
    let annotators: HashSet<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
    if annotators.len() != records.len() {
        return Err(Error::Invalid(format!(
            "sample {}: duplicate annotator",
            records[0].sample_id
        )));
    }
    let majorities: Vec<Option<CategoryValue>> = Metric::ALL
        .iter()
        .map(|&m| majority(records.iter().map(|r| r.category(m))))
        .collect();
    if majorities.iter().any(Option::is_none) {
        return Ok(GoldDecision::Excluded(ExclusionReason::NoMajority));
    }
    match (majorities[0].and_then(CategoryValue::original), majorities[1].and_then(CategoryValue::original)) {
        (Some(sentiment), Some(regard)) => Ok(GoldDecision::Kept { sentiment, regard }),
        _ => Ok(GoldDecision::Excluded(ExclusionReason::NonOriginalMajority)),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExclusionReport {
    pub no_majority: usize,
    pub non_original_majority: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldBuild {
    pub gold: Vec<LabeledSample>,
    pub exclusions: ExclusionReport,
}

/// Majority-vote every sample in `records`. Gold rows are sorted by sample id.
pub fn build_gold_dataset(records: &[AnnotationRecord], masked_texts: &HashMap<String, String>) -> Result<GoldBuild> {
    let mut by_sample: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_sample.entry(&r.sample_id).or_default().push(r);
    }
    let mut build = GoldBuild {
        gold: Vec::new(),
        exclusions: ExclusionReport::default(),
    };
    for (id, recs) in by_sample {
        match majority_gold(&recs)? {
            GoldDecision::Kept { sentiment, regard } => {
                let text = masked_texts
                    .get(id)
                    .ok_or_else(|| Error::Invalid(format!("no masked text for sample {id:?}")))?;
                build.gold.push(LabeledSample {
                    id: id.to_string(),
                    masked_text: text.clone(),
                    gold_sentiment: sentiment,
                    gold_regard: regard,
                });
            }
            GoldDecision::Excluded(ExclusionReason::NoMajority) => build.exclusions.no_majority += 1,
            GoldDecision::Excluded(ExclusionReason::NonOriginalMajority) => {
                build.exclusions.non_original_majority += 1
            }
        }
    }
    Ok(build)
}
