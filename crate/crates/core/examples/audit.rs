//! Audit a corpus with the sentiment baseline and write a chart.
//!
//!     cargo run --example audit -- [out-dir]

use std::path::PathBuf;

use regard_audit::analysis::chart::render_stacked_chart;
use regard_audit::analysis::{audit, to_csv, Provenance};
use regard_audit::corpus::{ingest, write_archive, IngestOptions};
use regard_audit::digest::sha256_hex;
use regard_audit::regard::{ConstantScorer, RegardScorer, SentimentBaseline};
use regard_audit::sentiment::SentimentAnalyzer;
use regard_audit::templates::TemplateSet;
use regard_audit::PolarityLabel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let input = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/batch_generations.tsv");
    let samples = ingest(&input, &TemplateSet::builtin(), IngestOptions::default())?.samples;

    let baseline = SentimentBaseline::new(SentimentAnalyzer::bundled());
    let constant = ConstantScorer::new(PolarityLabel::Neutral);
    let scorers: [&dyn RegardScorer; 2] = [&baseline, &constant];
    let provenance = Provenance {
        scorer: "sentiment_baseline+constant".into(),
        corpus_digest: sha256_hex(write_archive(&samples)),
        seed: 0,
        config_digest: String::new(),
    };
    let report = audit(&samples, &scorers, provenance, 4, false)?;

    print!("{}", to_csv(&report.distributions));
    for g in &report.gaps {
        for p in &g.pairs {
            println!("{} {}: {:?} - {:?} = {:+.3?}", g.scorer_name, g.context, p.group_a, p.group_b, p.gaps());
        }
    }
    let path = out_dir.join("chart-example.svg");
    std::fs::write(&path, render_stacked_chart(&report.distributions[..2]))?;
    println!("chart written to {}", path.display());
    Ok(())
}
