//! Send a refined prompt to the fixture-backed mock model and parse the
//! ranked function list out of its answer.
//!
//! cargo run --example identify_with_mock

use funcmapper::classifier::classify;
use funcmapper::clause::preprocess;
use funcmapper::llm::{parse_identifications, CompletionBackend, CompletionRequest, MockBackend};
use funcmapper::prompt::{build_refined_prompt, render};
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = shipped::registry();
    let corpus = preprocess(&shipped::benchmark_corpus(), &shipped::pipeline_config(), &registry)?;
    let clause = corpus.find("BENCH:5.5.2:1").expect("clause is bundled");

    let categories = classify(clause, &shipped::keywords());
    let prompt = render(&build_refined_prompt(&registry, &shipped::template(), clause, &categories), None)?;

    let backend = MockBackend::new(shipped::mock_fixture());
    let answer = backend.complete(&CompletionRequest {
        correlation_id: clause.id.clone(),
        prompt,
    })?;
    println!("model answer:\n{answer}\n");

    let ranked = parse_identifications(&answer, &registry, &clause.id);
    for (rank, item) in ranked.items.iter().enumerate() {
        let status = if item.in_registry { "ok" } else { "not in registry" };
        println!("{}. {} [{status}]", rank + 1, item.raw_text);
    }
    Ok(())
}
