//! Train the linear regard classifier on the gold fixture and compare it with
//! the sentiment baseline on the test split.
//!
//!     cargo run --release --example classifier

use std::collections::HashMap;
use std::path::PathBuf;

use regard_audit::annotation::{build_gold_dataset, load_raw};
use regard_audit::corpus::{apply_split_assignment, ingest, parse_split_assignment, IngestOptions};
use regard_audit::regard::eval::{evaluate, evaluate_trained};
use regard_audit::regard::linear::TrainConfig;
use regard_audit::regard::{ConstantScorer, SentimentBaseline};
use regard_audit::sentiment::SentimentAnalyzer;
use regard_audit::templates::TemplateSet;
use regard_audit::PolarityLabel;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let templates = TemplateSet::builtin();
    let samples = ingest(&fixture("batch_generations.tsv"), &templates, IngestOptions::default())?.samples;
    let texts: HashMap<String, String> = samples.into_iter().map(|s| (s.id, s.masked_text)).collect();
    let gold = build_gold_dataset(&load_raw(&fixture("raw_annotations.tsv"))?, &texts)?.gold;
    let assignment = parse_split_assignment(&std::fs::read_to_string(fixture("split_assignment.tsv"))?, "split")?;
    let splits = apply_split_assignment(&gold, &assignment)?;
    println!(
        "gold {}: train {} / dev {} / test {}",
        gold.len(),
        splits.train.members.len(),
        splits.dev.members.len(),
        splits.test.members.len()
    );

    let trained = evaluate_trained(
        &splits.train.members,
        &splits.dev.members,
        &splits.test.members,
        &TrainConfig::default(),
        &[1, 2, 3, 4, 5],
        &templates,
    )?;
    let baseline = evaluate(&SentimentBaseline::new(SentimentAnalyzer::bundled()), &splits.test.members, 1, &templates)?;
    let constant = evaluate(&ConstantScorer::new(PolarityLabel::Neutral), &splits.test.members, 1, &templates)?;
    for r in [&trained, &baseline, &constant] {
        println!("{:<22} {:.3}  {:?}", r.scorer, r.mean_accuracy, r.mean_per_context);
    }
    Ok(())
}
