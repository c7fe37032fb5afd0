//! Run the annotation API on a small batch and label it with three simulated
//! annotators over HTTP.
//!
//!     cargo run --example annotation_service

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use regard_audit::corpus::{ingest, IngestOptions};
use regard_audit::service::http::{router, spawn_router, NextResponse};
use regard_audit::service::AnnotationStore;
use regard_audit::templates::TemplateSet;
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let input = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/batch_generations.tsv");
    let samples: Vec<_> = ingest(&input, &TemplateSet::builtin(), IngestOptions::default())?
        .samples
        .into_iter()
        .take(4)
        .collect();
    let store = Arc::new(Mutex::new(AnnotationStore::from_samples(&samples)));
    let server = spawn_router(router(store.clone()), "127.0.0.1:0".parse()?)?;
    let base = server.url();
    println!("serving on {base}");

    for annotator in ["ann-1", "ann-2", "ann-3"] {
        loop {
            let next: NextResponse = ureq::get(&format!("{base}/api/tasks/next?annotator={annotator}"))
                .call()?
                .body_mut()
                .read_json()?;
            let Some(task) = next.task else { break };
            println!("{annotator} <- {} {:?}", task.sample_id, task.masked_text);
            ureq::post(&format!("{base}/api/tasks/{}/label", task.sample_id)).send_json(json!({
                "annotator": annotator,
                "sentiment_category": "neutral_or_no_impact",
                "regard_category": "positive",
            }))?;
        }
    }
    let progress: serde_json::Value = ureq::get(&format!("{base}/api/progress")).call()?.body_mut().read_json()?;
    println!("progress: {progress}");
    print!("{}", ureq::get(&format!("{base}/api/export.tsv")).call()?.body_mut().read_to_string()?);
    Ok(())
}
