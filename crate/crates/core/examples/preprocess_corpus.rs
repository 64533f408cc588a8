//! Split compound clauses, flatten a table and screen out clauses a machine
//! cannot judge, then run the whole pipeline over the bundled corpus.
//!
//! cargo run --example preprocess_corpus

use funcmapper::clause::{flatten_table, preprocess, split_clause, SplitConfig, TableBlock};
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "(1) The number of safety exits shall not be less than 2; \
                (2) the width of each exit shall not be less than 1.4 m.";
    for (i, fragment) in split_clause(text, &SplitConfig::default())?.iter().enumerate() {
        println!("fragment {}: {fragment}", i + 1);
    }

    let table = TableBlock {
        preamble: "The fire resistance limit of the".into(),
        column_headers: vec!["Class 1".into(), "Class 2".into()],
        row_headers: vec!["fire wall".into(), "stair wall".into()],
        cells: vec![vec!["3.00".into(), "3.00".into()], vec!["2.00".into(), "-".into()]],
    };
    let template = "{preamble} {row} in a building of fire resistance {column} shall not be less than {cell}h.";
    for sentence in flatten_table(&table, template)? {
        println!("table: {sentence}");
    }

    let pipeline = shipped::pipeline_config().compile()?;
    for sample in [
        "Fire compartment refers to a space enclosed by fire walls.",
        "Evacuation routes should be arranged appropriately.",
        "Fire hydrants shall be provided in accordance with GB 50974.",
        "Each fire compartment shall have no fewer than two safety exits.",
    ] {
        println!("{:<24} {sample}", pipeline.screen(sample).status.to_string());
    }

    let processed = preprocess(&shipped::corpus(), &shipped::pipeline_config(), &shipped::registry())?;
    println!("\n{:#?}", processed.counts);
    Ok(())
}
