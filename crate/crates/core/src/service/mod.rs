//! Annotation task service: hands out masked samples to annotators,
//! collects their labels and exports raw annotations.
//!
//! Each sample has three annotator slots. A slot is held by a submission or
//! by an unexpired claim; expired claims go back to the pool. Assignment
//! prefers the samples with the fewest submissions.

pub mod http;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{parse_raw, write_raw, AnnotationRecord, CategoryValue, ANNOTATORS_PER_SAMPLE, GUIDELINES_VERSION};
use crate::corpus::Sample;

pub const DEFAULT_CLAIM_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),
    #[error("unknown sample {0:?}")]
    UnknownSample(String),
    #[error("batch is sealed")]
    Sealed,
    #[error("sample {0:?} already has {ANNOTATORS_PER_SAMPLE} annotators")]
    NoOpenSlot(String),
    #[error("{field}: invalid category {value:?}")]
    InvalidCategory { field: String, value: String },
    #[error("persistence failed: {0}")]
    Persistence(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentState {
    Pending,
    Claimed,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskAssignment {
    pub sample_id: String,
    pub annotator_id: String,
    pub state: AssignmentState,
    /// Milliseconds since the Unix epoch.
    pub claimed_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub sample_id: String,
    pub masked_text: String,
    pub guidelines_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub samples_total: usize,
    pub fully_labeled: usize,
    pub partially_labeled: usize,
    pub per_annotator_counts: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum LogEvent {
    Submit(AnnotationRecord),
    Seal,
}

/// Append-only event log, compacted to one event per record on demand.
#[derive(Debug)]
struct EventLog {
    path: PathBuf,
    writer: BufWriter<File>,
    lines: usize,
}

impl EventLog {
    fn open(path: &Path) -> std::io::Result<(Self, Vec<LogEvent>)> {
        let mut events = Vec::new();
        if path.exists() {
            for (i, line) in std::fs::read_to_string(path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let e: LogEvent = serde_json::from_str(line).map_err(|e| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                events.push(e);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let lines = events.len();
        Ok((
            EventLog {
                path: path.to_path_buf(),
                writer: BufWriter::new(file),
                lines,
            },
            events,
        ))
    }

    fn append(&mut self, event: &LogEvent) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.writer, event)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        self.lines += 1;
        Ok(())
    }

    fn compact(&mut self, records: &BTreeMap<(String, String), AnnotationRecord>, sealed: bool) -> std::io::Result<()> {
        let tmp = self.path.with_extension("compact");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            for r in records.values() {
                serde_json::to_writer(&mut w, &LogEvent::Submit(r.clone()))?;
                w.write_all(b"\n")?;
            }
            if sealed {
                serde_json::to_writer(&mut w, &LogEvent::Seal)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        let file = OpenOptions::new().append(true).open(&self.path)?;
        self.writer = BufWriter::new(file);
        self.lines = records.len() + usize::from(sealed);
        Ok(())
    }
}

#[derive(Debug)]
pub struct AnnotationStore {
    order: Vec<String>,
    texts: HashMap<String, String>,
    /// `None` accepts any annotator id.
    annotators: Option<BTreeSet<String>>,
    claims: BTreeMap<(String, String), u64>,
    records: BTreeMap<(String, String), AnnotationRecord>,
    sealed: bool,
    claim_timeout: Duration,
    log: Option<EventLog>,
}

impl AnnotationStore {
    /// A store over `(sample_id, masked_text)` pairs in batch order.
    pub fn new(batch: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut order = Vec::new();
        let mut texts = HashMap::new();
        for (id, text) in batch {
            if texts.insert(id.clone(), text).is_none() {
                order.push(id);
            }
        }
        AnnotationStore {
            order,
            texts,
            annotators: None,
            claims: BTreeMap::new(),
            records: BTreeMap::new(),
            sealed: false,
            claim_timeout: DEFAULT_CLAIM_TIMEOUT,
            log: None,
        }
    }

    pub fn from_samples(samples: &[Sample]) -> Self {
        Self::new(samples.iter().map(|s| (s.id.clone(), s.masked_text.clone())))
    }

    pub fn with_annotators(mut self, ids: impl IntoIterator<Item = String>) -> Self {
        self.annotators = Some(ids.into_iter().collect());
        self
    }

    pub fn with_claim_timeout(mut self, timeout: Duration) -> Self {
        self.claim_timeout = timeout;
        self
    }

    /// Persist submissions to `path`, replaying any events already there.
    pub fn with_log(mut self, path: &Path) -> Result<Self, ServiceError> {
        let (log, events) = EventLog::open(path).map_err(|e| ServiceError::Persistence(e.to_string()))?;
        for e in events {
            match e {
                LogEvent::Submit(r) => {
                    self.records.insert((r.sample_id.clone(), r.annotator_id.clone()), r);
                }
                LogEvent::Seal => self.sealed = true,
            }
        }
        self.log = Some(log);
        Ok(self)
    }

    /// Load records exported by [`AnnotationStore::export_raw`].
    pub fn import_raw(&mut self, tsv: &str) -> crate::Result<()> {
        for r in parse_raw(tsv, "import")? {
            if !self.texts.contains_key(&r.sample_id) {
                return Err(crate::Error::Invalid(format!("unknown sample {:?}", r.sample_id)));
            }
            self.records.insert((r.sample_id.clone(), r.annotator_id.clone()), r);
        }
        Ok(())
    }

    fn check_annotator(&self, annotator: &str) -> Result<(), ServiceError> {
        match &self.annotators {
            Some(set) if !set.contains(annotator) => Err(ServiceError::UnknownAnnotator(annotator.to_string())),
            _ if annotator.is_empty() || annotator.contains(['\t', '\n']) => {
                Err(ServiceError::UnknownAnnotator(annotator.to_string()))
            }
            _ => Ok(()),
        }
    }

    fn expire_claims(&mut self, now_ms: u64) {
        let timeout = self.claim_timeout.as_millis() as u64;
        self.claims.retain(|_, &mut at| now_ms.saturating_sub(at) < timeout);
    }

    fn submissions(&self, sample: &str) -> usize {
        self.records
            .range((sample.to_string(), String::new())..)
            .take_while(|((s, _), _)| s == sample)
            .count()
    }

    /// Annotators holding a slot: submitted or holding a live claim.
    fn slot_holders(&self, sample: &str) -> BTreeSet<&str> {
        let subs = self
            .records
            .range((sample.to_string(), String::new())..)
            .take_while(|((s, _), _)| s == sample)
            .map(|((_, a), _)| a.as_str());
        let claims = self
            .claims
            .range((sample.to_string(), String::new())..)
            .take_while(|((s, _), _)| s == sample)
            .map(|((_, a), _)| a.as_str());
        subs.chain(claims).collect()
    }

    /// Claim the next sample for `annotator`, or `None` when nothing is left.
    pub fn next_task(&mut self, annotator: &str, now_ms: u64) -> Result<Option<Task>, ServiceError> {
        self.check_annotator(annotator)?;
        if self.sealed {
            return Ok(None);
        }
        self.expire_claims(now_ms);
        let best = self
            .order
            .iter()
            .enumerate()
            .filter_map(|(pos, id)| {
                let holders = self.slot_holders(id);
                if holders.contains(annotator) || holders.len() >= ANNOTATORS_PER_SAMPLE {
                    return None;
                }
                Some(((self.submissions(id), holders.len(), pos), id))
            })
            .min_by_key(|(key, _)| *key)
            .map(|(_, id)| id.clone());
        Ok(best.map(|id| {
            self.claims.insert((id.clone(), annotator.to_string()), now_ms);
            Task {
                masked_text: self.texts[&id].clone(),
                sample_id: id,
                guidelines_version: GUIDELINES_VERSION.to_string(),
            }
        }))
    }

    /// Record labels. Resubmission by the same annotator replaces the old record.
    pub fn submit_label(
        &mut self,
        annotator: &str,
        sample_id: &str,
        sentiment: CategoryValue,
        regard: CategoryValue,
        now_ms: u64,
    ) -> Result<(), ServiceError> {
        self.check_annotator(annotator)?;
        if !self.texts.contains_key(sample_id) {
            return Err(ServiceError::UnknownSample(sample_id.to_string()));
        }
        if self.sealed {
            return Err(ServiceError::Sealed);
        }
        self.expire_claims(now_ms);
        let holders = self.slot_holders(sample_id);
        if !holders.contains(annotator) && holders.len() >= ANNOTATORS_PER_SAMPLE {
            return Err(ServiceError::NoOpenSlot(sample_id.to_string()));
        }
        let key = (sample_id.to_string(), annotator.to_string());
        let record = AnnotationRecord {
            sample_id: sample_id.to_string(),
            annotator_id: annotator.to_string(),
            sentiment,
            regard,
            timestamp: (now_ms / 1000).to_string(),
        };
        if let Some(log) = &mut self.log {
            log.append(&LogEvent::Submit(record.clone()))
                .map_err(|e| ServiceError::Persistence(e.to_string()))?;
        }
        self.claims.remove(&key);
        self.records.insert(key, record);
        self.maybe_compact()?;
        Ok(())
    }

    fn maybe_compact(&mut self) -> Result<(), ServiceError> {
        let n = self.records.len() + usize::from(self.sealed);
        if let Some(log) = &mut self.log {
            if log.lines > 2 * n + 64 {
                log.compact(&self.records, self.sealed)
                    .map_err(|e| ServiceError::Persistence(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Rewrite the log with one event per current record.
    pub fn compact(&mut self) -> Result<(), ServiceError> {
        if let Some(log) = &mut self.log {
            log.compact(&self.records, self.sealed)
                .map_err(|e| ServiceError::Persistence(e.to_string()))?;
        }
        Ok(())
    }

    /// Stop accepting submissions.
    pub fn seal(&mut self) -> Result<(), ServiceError> {
        if self.sealed {
            return Ok(());
        }
        if let Some(log) = &mut self.log {
            log.append(&LogEvent::Seal)
                .map_err(|e| ServiceError::Persistence(e.to_string()))?;
        }
        self.sealed = true;
        self.claims.clear();
        Ok(())
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn progress(&self) -> Progress {
        let mut per_annotator_counts = BTreeMap::new();
        let mut per_sample: HashMap<&str, usize> = HashMap::new();
        for (s, a) in self.records.keys() {
            *per_annotator_counts.entry(a.clone()).or_default() += 1;
            *per_sample.entry(s.as_str()).or_default() += 1;
        }
        Progress {
            samples_total: self.order.len(),
            fully_labeled: per_sample.values().filter(|&&c| c >= ANNOTATORS_PER_SAMPLE).count(),
            partially_labeled: per_sample.values().filter(|&&c| c < ANNOTATORS_PER_SAMPLE).count(),
            per_annotator_counts,
        }
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.records.values().cloned().collect()
    }

    /// Assignments in (sample, annotator) order.
    pub fn assignments(&self) -> Vec<TaskAssignment> {
        let mut out: Vec<TaskAssignment> = self
            .records
            .values()
            .map(|r| TaskAssignment {
                sample_id: r.sample_id.clone(),
                annotator_id: r.annotator_id.clone(),
                state: AssignmentState::Submitted,
                claimed_at: 0,
            })
            .collect();
        out.extend(self.claims.iter().map(|((s, a), &at)| TaskAssignment {
            sample_id: s.clone(),
            annotator_id: a.clone(),
            state: AssignmentState::Claimed,
            claimed_at: at,
        }));
        out.sort_by(|a, b| (&a.sample_id, &a.annotator_id).cmp(&(&b.sample_id, &b.annotator_id)));
        out
    }

    pub fn masked_texts(&self) -> HashMap<String, String> {
        self.texts.clone()
    }

    /// Raw annotation TSV sorted by (sample_id, annotator_id).
    pub fn export_raw(&self) -> String {
        write_raw(&self.records())
    }
}
