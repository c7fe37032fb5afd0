//! Agreement and correlation table for the annotation fixture.
//!
//!     cargo run --example agreement

use std::collections::HashMap;
use std::path::PathBuf;

use regard_audit::annotation::{build_gold_dataset, load_raw};
use regard_audit::corpus::{ingest, IngestOptions};
use regard_audit::stats::{agreement_rows, correlation_rows, fleiss_kappa, parse_predictions, render_table, RatingMatrix, Restriction};
use regard_audit::templates::TemplateSet;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // three raters, four items, three categories
    let m = RatingMatrix::from_ratings(
        &[vec!["a", "a", "a"], vec!["a", "b", "b"], vec!["c", "c", "b"], vec!["c", "c", "c"]],
        &["a", "b", "c"],
    )?;
    println!("toy kappa: {:.4}\n", fleiss_kappa(&m)?);

    let templates = TemplateSet::builtin();
    let records = load_raw(&fixture("raw_annotations.tsv"))?;
    let samples = ingest(&fixture("batch_generations.tsv"), &templates, IngestOptions::default())?.samples;
    let texts: HashMap<String, String> = samples.into_iter().map(|s| (s.id, s.masked_text)).collect();
    let build = build_gold_dataset(&records, &texts)?;
    println!("gold {} samples, excluded {:?}\n", build.gold.len(), build.exclusions);

    let preds = parse_predictions(&std::fs::read_to_string(fixture("sentiment_predictions.tsv"))?, "predictions")?;
    let mut rows = agreement_rows(&records, Restriction::DropItems)?;
    rows.extend(correlation_rows(&build.gold, &templates, Some(&preds))?);
    print!("{}", render_table(&rows));
    Ok(())
}
