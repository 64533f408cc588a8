//! Which functions, categories and object kinds the annotated corpus uses.
//!
//! cargo run --example usage_statistics

use funcmapper::clause::preprocess;
use funcmapper::eval::usage_statistics;
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = shipped::registry();
    let corpus = preprocess(&shipped::corpus(), &shipped::pipeline_config(), &registry)?;
    let report = usage_statistics(&corpus, &registry)?;
    print!("{}", report.to_text());

    let split = &report.interpretability;
    println!(
        "\n{} of {} clauses need only property lookups ({:.0}%)",
        split.low_order_only,
        report.clauses,
        split.low_order_only_share * 100.0
    );
    Ok(())
}
