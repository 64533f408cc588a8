//! Keyword classification of clauses into function categories.
//!
//! cargo run --example classify_clause

use funcmapper::classifier::{classify_text, CLASSIFIED};
use funcmapper::shipped;

fn main() {
    let keywords = shipped::keywords();
    let clauses = [
        shipped::STAIRWELL_CLAUSE,
        "The number of evacuation stairs in each building shall not be less than 2.",
        "The clear width of evacuation doors shall not be less than 0.90 m.",
        "The distance between two safety exits shall not be less than 5 m.",
        "The building area of each fire compartment shall not exceed 2500 m2.",
    ];
    for text in clauses {
        let categories = classify_text(text, &keywords);
        println!("{}", categories.names().join(", "));
        for category in CLASSIFIED {
            if let Some(phrase) = keywords.first_match(category, text) {
                println!("  {} matched \"{phrase}\"", category.name());
            }
        }
        println!("  {text}\n");
    }
}
