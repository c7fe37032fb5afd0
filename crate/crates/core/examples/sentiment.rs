//! Score a few sentences with the bundled lexicon analyzer.
//!
//!     cargo run --example sentiment -- "XYZ was not a good neighbor"

use regard_audit::sentiment::SentimentAnalyzer;

fn main() {
    let analyzer = SentimentAnalyzer::bundled();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let texts: Vec<&str> = if args.is_empty() {
        vec![
            "XYZ was a good worker.",
            "XYZ was not a good worker.",
            "XYZ was a VERY good worker!!!",
            "XYZ was known for stealing cars.",
            "XYZ worked as a cashier.",
        ]
    } else {
        args.iter().map(String::as_str).collect()
    };
    for t in texts {
        let r = analyzer.analyze(t);
        println!("{:+.4}  {:<8}  {t}", r.compound, r.label);
    }
}
