//! Generated-text corpora: ingestion, one-sentence truncation, gold label
//! files and train/dev/test splits.
//!
//! File formats (UTF-8, LF line endings):
//!
//! * generation file: `template_id<TAB>raw_text` per line
//! * corpus archive: one JSON object per [`Sample`] per line
//! * gold dataset: TSV with header `id	masked_text	sentiment	regard`
//! * split assignment: TSV with header `id	split`

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_file};
use crate::templates::{mask_demographic, BiasContext, CompleteTemplate, Group, TemplateSet};
use crate::{Error, PolarityLabel, Result};

pub const GOLD_HEADER: &str = "id\tmasked_text\tsentiment\tregard";
pub const SPLIT_HEADER: &str = "id\tsplit";

/// Abbreviations whose trailing period never ends a sentence.
pub const ABBREVIATIONS: [&str; 10] = [
    "dr.", "mr.", "mrs.", "ms.", "st.", "vs.", "etc.", "e.g.", "i.e.", "u.s.",
];

/// Reference from a sample to the complete template that prompted it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateRef {
    pub id: String,
    pub context: BiasContext,
    pub group: Group,
}

impl From<&CompleteTemplate> for TemplateRef {
    fn from(t: &CompleteTemplate) -> Self {
        TemplateRef {
            id: t.id(),
            context: t.context,
            group: t.demographic.group,
        }
    }
}

/// One generated continuation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub template: TemplateRef,
    pub raw_text: String,
    pub masked_text: String,
    pub truncated: bool,
}

impl Sample {
    pub fn context(&self) -> BiasContext {
        self.template.context
    }

    pub fn group(&self) -> Group {
        self.template.group
    }
}

/// A problem with one input line. Lines are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub samples: Vec<Sample>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Cut each text after its first sentence.
    pub truncate: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { truncate: true }
    }
}

/// Parse generation records into samples.
///
/// Texts that do not already start with their prompt are treated as bare
/// continuations and joined to the prompt with a single space. Sample ids
/// are `<template_id>.<nnn>`, numbered per template in file order.
pub fn ingest_str(input: &str, templates: &TemplateSet, opts: IngestOptions) -> IngestReport {
    let by_id: HashMap<String, CompleteTemplate> =
        templates.expand().into_iter().map(|t| (t.id(), t)).collect();
    let mut counters: HashMap<String, usize> = HashMap::new();
    let mut report = IngestReport::default();

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let Some((template_id, text)) = line.split_once('\t') else {
            report.diagnostics.push(Diagnostic {
                line: line_no,
                message: "expected `template_id<TAB>raw_text`".into(),
            });
            continue;
        };
        let Some(template) = by_id.get(template_id) else {
            report.diagnostics.push(Diagnostic {
                line: line_no,
                message: format!("unknown template id {template_id:?}"),
            });
            continue;
        };
        let text = text.trim();
        if text.is_empty() {
            report.diagnostics.push(Diagnostic {
                line: line_no,
                message: "empty text".into(),
            });
            continue;
        }
        let counter = counters.entry(template_id.to_string()).or_default();
        let id = format!("{template_id}.{:03}", *counter);
        *counter += 1;
        report.samples.push(make_sample(id, template, text, opts.truncate));
    }
    report
}

pub fn ingest(path: &Path, templates: &TemplateSet, opts: IngestOptions) -> Result<IngestReport> {
    Ok(ingest_str(&read_to_string(path)?, templates, opts))
}

/// Build a sample from a prompt template and generated text.
pub fn make_sample(id: String, template: &CompleteTemplate, text: &str, truncate: bool) -> Sample {
    let full = if text.starts_with(&template.prompt) {
        text.to_string()
    } else if text.starts_with(|c: char| c.is_ascii_punctuation()) {
        format!("{}{}", template.prompt, text)
    } else {
        format!("{} {}", template.prompt, text)
    };
    let raw_text = if truncate {
        truncate_to_sentence(&full).to_string()
    } else {
        full
    };
    let masked_text = mask_demographic(&raw_text, &template.demographic);
    Sample {
        id,
        template: TemplateRef::from(template),
        raw_text,
        masked_text,
        truncated: truncate,
    }
}

/// Serialize samples back to the generation-file format.
pub fn to_generation_str(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.template.id);
        out.push('\t');
        out.push_str(&one_line(&s.raw_text));
        out.push('\n');
    }
    out
}

/// Prefix of `text` through its first sentence terminator.
///
/// Periods belonging to an entry of [`ABBREVIATIONS`] or sitting between two
/// digits are skipped. A run of terminators ("?!", "...") is kept whole. If
/// there is no terminator the whole text is returned.
pub fn truncate_to_sentence(text: &str) -> &str {
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        let is_terminator = match b {
            b'!' | b'?' => true,
            b'.' => !is_decimal_point(bytes, i) && !is_abbreviation_period(text, i),
            _ => false,
        };
        if is_terminator {
            let mut end = i + 1;
            while end < bytes.len() && matches!(bytes[end], b'.' | b'!' | b'?') {
                end += 1;
            }
            return &text[..end];
        }
    }
    text
}

fn is_decimal_point(bytes: &[u8], i: usize) -> bool {
    i > 0 && i + 1 < bytes.len() && bytes[i - 1].is_ascii_digit() && bytes[i + 1].is_ascii_digit()
}

fn is_abbreviation_period(text: &str, i: usize) -> bool {
    let start = text[..i].rfind(char::is_whitespace).map_or(0, |p| p + 1);
    let end = text[i..].find(char::is_whitespace).map_or(text.len(), |p| i + p);
    let token = &text[start..end];
    let lead = token.len() - token.trim_start_matches(['(', '"', '\'', '[']).len();
    let core_start = start + lead;
    let core = text[core_start..end].to_ascii_lowercase();
    ABBREVIATIONS
        .iter()
        .any(|abbr| core.starts_with(abbr) && i < core_start + abbr.len())
}

fn one_line(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn write_archive(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("sample serializes"));
        out.push('\n');
    }
    out
}

pub fn read_archive(input: &str) -> Result<Vec<Sample>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::parse("archive", i + 1, e.to_string()))
        })
        .collect()
}

pub fn load_archive(path: &Path) -> Result<Vec<Sample>> {
    read_archive(&read_to_string(path)?)
}

pub fn save_archive(path: &Path, samples: &[Sample]) -> Result<()> {
    write_file(path, write_archive(samples))
}

/// A sample with majority-vote gold labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: String,
    pub masked_text: String,
    pub gold_sentiment: PolarityLabel,
    pub gold_regard: PolarityLabel,
}

impl LabeledSample {
    /// Bias context, resolved from the template id embedded in the sample id.
    pub fn context(&self, templates: &TemplateSet) -> Option<BiasContext> {
        context_of_sample(&self.id, templates)
    }
}

/// Split a sample id `<placeholder>.<group>.<n>` into its parts.
pub fn parse_sample_id(id: &str) -> Option<(&str, Group, &str)> {
    let mut parts = id.splitn(3, '.');
    let placeholder = parts.next()?;
    let group = parts.next()?.parse().ok()?;
    let ordinal = parts.next()?;
    Some((placeholder, group, ordinal))
}

pub fn context_of_sample(id: &str, templates: &TemplateSet) -> Option<BiasContext> {
    let (placeholder, _, _) = parse_sample_id(id)?;
    templates
        .templates()
        .iter()
        .find(|t| t.id == placeholder)
        .map(|t| t.context)
}

pub fn parse_gold(input: &str, source: &str) -> Result<Vec<LabeledSample>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, header)) if header.trim_end_matches('\r') == GOLD_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                source,
                1,
                format!("expected header {GOLD_HEADER:?}, found {header:?}"),
            ))
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(source, row, format!("expected 4 columns, found {}", fields.len())));
        }
        let label = |s: &str, column: &str| {
            PolarityLabel::from_str(s)
                .map_err(|_| Error::parse(source, row, format!("{column}: unknown label {s:?}")))
        };
        out.push(LabeledSample {
            id: fields[0].to_string(),
            masked_text: fields[1].to_string(),
            gold_sentiment: label(fields[2], "sentiment")?,
            gold_regard: label(fields[3], "regard")?,
        });
    }
    Ok(out)
}

pub fn load_gold_dataset(path: &Path) -> Result<Vec<LabeledSample>> {
    parse_gold(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_gold(samples: &[LabeledSample]) -> String {
    let mut out = String::from(GOLD_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            s.id,
            one_line(&s.masked_text),
            s.gold_sentiment,
            s.gold_regard
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::Invalid(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub members: Vec<LabeledSample>,
}

impl DatasetSplit {
    /// Regard label counts as (negative, neutral, positive).
    pub fn regard_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.members {
            counts[s.gold_regard.index()] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: DatasetSplit,
    pub dev: DatasetSplit,
    pub test: DatasetSplit,
}

impl Splits {
    pub fn iter(&self) -> impl Iterator<Item = &DatasetSplit> {
        [&self.train, &self.dev, &self.test].into_iter()
    }
}

/// Target (train, dev, test) sizes for `n` gold samples.
///
/// 302 samples use the fixed 212/60/30 partition; other sizes take 20% dev
/// and 10% test (rounded down, at least one each) with the rest in train.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    if n == 302 {
        return (212, 60, 30);
    }
    let dev = (n * 2 / 10).max(1);
    let test = (n / 10).max(1);
    (n - dev - test, dev, test)
}

/// Seeded random partition into train/dev/test.
///
/// Members keep their input order inside each split.
pub fn split_dataset(gold: &[LabeledSample], seed: u64) -> Result<Splits> {
    if gold.len() < 3 {
        return Err(Error::Invalid(format!(
            "need at least 3 gold samples to split, got {}",
            gold.len()
        )));
    }
    let (n_train, n_dev, _) = split_sizes(gold.len());
    let mut order: Vec<usize> = (0..gold.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![SplitName::Test; gold.len()];
    for (rank, &i) in order.iter().enumerate() {
        assignment[i] = if rank < n_train {
            SplitName::Train
        } else if rank < n_train + n_dev {
            SplitName::Dev
        } else {
            SplitName::Test
        };
    }
    Ok(collect_splits(gold, |i, _| assignment[i]))
}

fn collect_splits(gold: &[LabeledSample], mut which: impl FnMut(usize, &LabeledSample) -> SplitName) -> Splits {
    let mut splits = Splits {
        train: DatasetSplit { name: SplitName::Train, members: Vec::new() },
        dev: DatasetSplit { name: SplitName::Dev, members: Vec::new() },
        test: DatasetSplit { name: SplitName::Test, members: Vec::new() },
    };
    for (i, s) in gold.iter().enumerate() {
        let target = match which(i, s) {
            SplitName::Train => &mut splits.train,
            SplitName::Dev => &mut splits.dev,
            SplitName::Test => &mut splits.test,
        };
        target.members.push(s.clone());
    }
    splits
}

/// Parse a split assignment file into an id → split map.
pub fn parse_split_assignment(input: &str, source: &str) -> Result<HashMap<String, SplitName>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == SPLIT_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(source, 1, format!("expected header {SPLIT_HEADER:?}, found {h:?}")))
        }
        None => return Ok(HashMap::new()),
    }
    let mut map = HashMap::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (id, split) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source, idx + 1, "expected `id<TAB>split`"))?;
        let split = split
            .parse()
            .map_err(|e: Error| Error::parse(source, idx + 1, e.to_string()))?;
        if map.insert(id.to_string(), split).is_some() {
            return Err(Error::parse(source, idx + 1, format!("duplicate id {id:?}")));
        }
    }
    Ok(map)
}

/// Partition `gold` by a published assignment. Every gold id must be assigned.
pub fn apply_split_assignment(gold: &[LabeledSample], assignment: &HashMap<String, SplitName>) -> Result<Splits> {
    let ids: HashSet<&str> = gold.iter().map(|s| s.id.as_str()).collect();
    if let Some(s) = gold.iter().find(|s| !assignment.contains_key(&s.id)) {
        return Err(Error::Invalid(format!("gold sample {:?} has no split assignment", s.id)));
    }
    if let Some(extra) = assignment.keys().find(|k| !ids.contains(k.as_str())) {
        return Err(Error::Invalid(format!("split assignment names unknown sample {extra:?}")));
    }
    Ok(collect_splits(gold, |_, s| assignment[&s.id]))
}

pub fn write_split_assignment(splits: &Splits) -> String {
    let mut out = String::from(SPLIT_HEADER);
    out.push('\n');
    for split in splits.iter() {
        for s in &split.members {
            out.push_str(&format!("{}\t{}\n", s.id, split.name.as_str()));
        }
    }
    out
}
