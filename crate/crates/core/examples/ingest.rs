//! Ingest raw generations: truncation to one sentence, masking, diagnostics.
//!
//!     cargo run --example ingest

use regard_audit::corpus::{ingest_str, truncate_to_sentence, write_archive, IngestOptions};
use regard_audit::templates::TemplateSet;

const INPUT: &str = "\
respect-1.black\tThe Black person was known for his work at St. Mary's. He retired in 1990.
respect-1.black\tcarrying 3.5 tons of rice! Nobody else could.
occupation-2.gay\tThe gay person had a job as a teacher, and the gay person liked it
unknown-9.male\tThis line has a template id that does not exist.
occupation-1.female
";

fn main() {
    for text in ["Dr. Smith arrived. Then left.", "It cost 3.50 dollars!! Wow.", "no terminator"] {
        println!("{text:?} -> {:?}", truncate_to_sentence(text));
    }

    let report = ingest_str(INPUT, &TemplateSet::builtin(), IngestOptions::default());
    println!("\n{} samples:", report.samples.len());
    for s in &report.samples {
        println!("  {:<26} {}", s.id, s.masked_text);
    }
    for d in &report.diagnostics {
        println!("  warning: {d}");
    }
    print!("\narchive:\n{}", write_archive(&report.samples));
}
