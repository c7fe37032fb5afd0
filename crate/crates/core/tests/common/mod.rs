#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regard_audit::annotation::{load_raw, AnnotationRecord};
use regard_audit::corpus::{ingest, make_sample, IngestOptions, Sample};
use regard_audit::templates::{expand_templates, TemplateSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn raw_records() -> Vec<AnnotationRecord> {
    load_raw(&fixture("raw_annotations.tsv")).expect("raw fixture loads")
}

/// The 360 annotated samples, ingested from the generation fixture.
pub fn batch_samples() -> Vec<Sample> {
    let report = ingest(&fixture("batch_generations.tsv"), &TemplateSet::builtin(), IngestOptions::default())
        .expect("generation fixture loads");
    assert!(report.diagnostics.is_empty(), "{:?}", report.diagnostics);
    report.samples
}

pub fn masked_texts(samples: &[Sample]) -> HashMap<String, String> {
    samples.iter().map(|s| (s.id.clone(), s.masked_text.clone())).collect()
}

pub fn expected() -> serde_json::Value {
    let text = std::fs::read_to_string(fixture("expected_stats.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn expected_f64(key: &str) -> f64 {
    expected()[key].as_f64().unwrap_or_else(|| panic!("no number {key}"))
}

const WORDS: [&str; 24] = [
    "a", "quiet", "kind", "rude", "teacher", "driver", "who", "helped", "stole", "from", "the", "market",
    "every", "day", "and", "night", "with", "great", "skill", "in", "town", "people", "liked", "feared",
];

/// `n` synthetic samples spread round-robin over the 60 prompts.
///
/// Some texts mention the demographic a second time, mid-sentence.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<Sample> {
    let templates = expand_templates();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counters = vec![0usize; templates.len()];
    (0..n)
        .map(|i| {
            let t_idx = i % templates.len();
            let t = &templates[t_idx];
            let len = rng.gen_range(2..10);
            let mut words: Vec<&str> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
            let mention;
            if rng.gen_bool(0.3) {
                mention = t.demographic.surface_form.to_string();
                words.push("and");
                words.push(&mention);
                words.push("smiled");
            }
            let text = format!("{} {}.", t.prompt, words.join(" "));
            let id = format!("{}.{:03}", t.id(), counters[t_idx]);
            counters[t_idx] += 1;
            make_sample(id, t, &text, false)
        })
        .collect()
}
