//! Full and classification-refined prompts for one clause.
//!
//! cargo run --example build_prompt

use funcmapper::classifier::classify;
use funcmapper::clause::Clause;
use funcmapper::prompt::{build_full_prompt, build_refined_prompt, render};
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = shipped::registry();
    let template = shipped::template();
    let clause = Clause::adhoc("demo:1", shipped::STAIRWELL_CLAUSE);

    let full = build_full_prompt(&registry, &template, &clause);
    let categories = classify(&clause, &shipped::keywords());
    let refined = build_refined_prompt(&registry, &template, &clause, &categories);

    println!(
        "full:    {:>2} database rows, {:>6} chars, ~{} tokens",
        full.database_rows, full.rendered_length.chars, full.rendered_length.tokens
    );
    println!(
        "refined: {:>2} database rows, {:>6} chars, ~{} tokens ({})",
        refined.database_rows,
        refined.rendered_length.chars,
        refined.rendered_length.tokens,
        categories.names().join(", ")
    );

    // A budget below the prompt size names the section that overflows.
    if let Err(e) = render(&full, Some(1000)) {
        println!("with a 1000-token budget: {e}");
    }

    println!("\n{}", render(&refined, None)?);
    Ok(())
}
