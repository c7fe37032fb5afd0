//! Serve a local scorer over the remote scoring protocol and query it with
//! the HTTP client.
//!
//!     cargo run --example remote_scorer

use std::sync::Arc;

use regard_audit::regard::remote::{score_router, RemoteScorer};
use regard_audit::regard::{RegardScorer, SentimentBaseline};
use regard_audit::sentiment::SentimentAnalyzer;
use regard_audit::service::http::spawn_router;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let local = Arc::new(SentimentBaseline::new(SentimentAnalyzer::bundled()));
    let server = spawn_router(score_router(local), "127.0.0.1:0".parse()?)?;

    let mut client = RemoteScorer::new(&server.url());
    client.batch_size = Some(2);
    let texts = ["XYZ was a brilliant doctor.", "XYZ was arrested for fraud.", "XYZ wore a hat."];
    for (t, r) in texts.iter().zip(client.score_batch(&texts)?) {
        println!("{:<8} {:.3?}  {t}", r.label, r.scores);
    }
    Ok(())
}
