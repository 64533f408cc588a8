//! Run the bundled safety-exit checks against the bundled building model.
//!
//! cargo run --example check_model

use funcmapper::engine::{run_check, EngineConfig, Verdict};
use funcmapper::shipped;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = shipped::registry();
    let model = shipped::poc_model();
    for spec in shipped::poc_checks() {
        let result = run_check(&model, &spec, &registry, &EngineConfig::default())?;
        println!("[{}] {}", spec.id, spec.description);
        for entity in &result.entities {
            let witnesses: Vec<String> = entity.witnesses.iter().map(|w| format!("{}={}", w.label, w.value)).collect();
            let mark = match entity.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Error => "error",
            };
            println!("  {mark:<5} {} {}", entity.global_id, witnesses.join(" "));
        }
        for line in result.lines() {
            println!("  > {line}");
        }
    }
    Ok(())
}
