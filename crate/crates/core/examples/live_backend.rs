//! Identify functions with a hosted model. Reads the endpoint and model from
//! FUNCMAPPER_ENDPOINT / FUNCMAPPER_MODEL and the key from FUNCMAPPER_API_KEY;
//! exits quietly when no key is set.
//!
//! FUNCMAPPER_API_KEY=... cargo run --example live_backend

use funcmapper::classifier::classify;
use funcmapper::clause::Clause;
use funcmapper::llm::{parse_identifications, CompletionBackend, CompletionConfig, CompletionRequest, HttpBackend};
use funcmapper::prompt::{build_refined_prompt, render};
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut config = CompletionConfig::default();
    if config.resolved_api_key().is_none() {
        println!("FUNCMAPPER_API_KEY is not set; nothing to do");
        return Ok(());
    }
    if let Ok(endpoint) = std::env::var("FUNCMAPPER_ENDPOINT") {
        config.endpoint = endpoint;
    }
    if let Ok(model) = std::env::var("FUNCMAPPER_MODEL") {
        config.model = model;
    }

    let registry = shipped::registry();
    let clause = Clause::adhoc("live:1", shipped::STAIRWELL_CLAUSE);
    let categories = classify(&clause, &shipped::keywords());
    let prompt = render(&build_refined_prompt(&registry, &shipped::template(), &clause, &categories), None)?;

    let backend = HttpBackend::new(config)?;
    let answer = backend.complete(&CompletionRequest {
        correlation_id: clause.id.clone(),
        prompt,
    })?;
    for item in parse_identifications(&answer, &registry, &clause.id).items {
        println!("{} {}", if item.in_registry { "+" } else { "?" }, item.raw_text);
    }
    Ok(())
}
