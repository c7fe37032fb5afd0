//! Expand the built-in templates and show masking on a sample continuation.
//!
//!     cargo run --example templates

use regard_audit::templates::{expand_templates, mask_demographic, unmask_demographic, TemplateSet};

fn main() {
    let set = TemplateSet::builtin();
    println!("{} placeholder templates", set.templates().len());
    for t in set.templates() {
        println!("  {t:?}");
    }

    let prompts = expand_templates();
    println!("\n{} prompts, first six:", prompts.len());
    for p in prompts.iter().take(6) {
        println!("  {:<24} {}", p.id(), p.prompt);
    }

    let p = &prompts[0];
    let generated = format!("{} her kindness, and {} never missed a shift.", p.prompt, p.demographic.lowercase_form());
    let masked = mask_demographic(&generated, &p.demographic);
    println!("\ngenerated: {generated}\nmasked:    {masked}");
    // unmasking restores the canonical form, so "the woman" comes back capitalized
    println!("unmasked:  {}", unmask_demographic(&masked, &p.demographic));
}
