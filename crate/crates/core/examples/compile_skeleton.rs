//! Turn an identified function list into a check skeleton whose argument and
//! threshold slots are left as holes for a rule author to fill.
//!
//! cargo run --example compile_skeleton

use funcmapper::clause::Clause;
use funcmapper::engine::compile_identifications;
use funcmapper::llm::parse_identifications;
use funcmapper::shipped;

fn main() {
    let registry = shipped::registry();
    let clause = Clause::adhoc(
        "demo:1",
        "The distance between two safety exits in each fire compartment shall not be less than 5 m.",
    );
    let answer = "\
FUNCTION: hasElement(space a, element b)
FUNCTION: getProperty(element a, type b)
FUNCTION: getElementDistance(element a, element b, type c)
FUNCTION: getExitSpacing(space a)";
    let identified = parse_identifications(answer, &registry, &clause.id);
    let skeleton = compile_identifications(&clause, &identified, &registry);

    println!("calls: {:#?}", skeleton.calls());
    for note in &skeleton.diagnostics {
        println!("note: {note}");
    }
    println!("{}", serde_json::to_string_pretty(&skeleton).expect("skeleton serializes"));
}
