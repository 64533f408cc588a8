//! Recall@5 of the full and refined prompts on the bundled benchmark, offline.
//!
//! cargo run --example evaluate_benchmark

use funcmapper::clause::preprocess;
use funcmapper::eval::{run_benchmark, BenchmarkConfig, BenchmarkContext, ComparisonReport, Variant};
use funcmapper::llm::MockBackend;
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = shipped::registry();
    let template = shipped::template();
    let keywords = shipped::keywords();
    let corpus = preprocess(&shipped::benchmark_corpus(), &shipped::pipeline_config(), &registry)?;
    let ctx = BenchmarkContext {
        registry: &registry,
        template: &template,
        keywords: &keywords,
    };
    let backend = MockBackend::new(shipped::mock_fixture());
    let config = BenchmarkConfig::default();

    let (full, _) = run_benchmark(&corpus, Variant::Full, &backend, &ctx, &config)?;
    let (refined, _) = run_benchmark(&corpus, Variant::Refined, &backend, &ctx, &config)?;
    println!("{}", full.aggregate_line());
    println!("{}\n", refined.aggregate_line());
    print!("{}", ComparisonReport::new(&full, &refined).to_table());
    Ok(())
}
