//! Call atomic functions directly against a building model.
//!
//! cargo run --example geometry_queries

use funcmapper::engine::{eval_atomic, Arg, AtomicCall, EngineConfig};
use funcmapper::model::BuildingModel;
use funcmapper::registry::{FunctionRegistry, ObjectKind};
use funcmapper::shipped;

fn call(model: &BuildingModel, registry: &FunctionRegistry, sig: &str, args: Vec<Arg>) {
    let config = EngineConfig::default();
    let shown: Vec<String> = args
        .iter()
        .map(|a| match a {
            Arg::Entity(id) => id.chars().take(8).collect(),
            Arg::Entities(ids) => format!("[{} ids]", ids.len()),
            Arg::Literal(s) => format!("{s:?}"),
        })
        .collect();
    let name = sig.split('(').next().unwrap_or(sig);
    match AtomicCall::new(sig, args).and_then(|c| eval_atomic(model, registry, &c, &config)) {
        Ok(v) => println!("{name}({}) = {v}", shown.join(", ")),
        Err(e) => println!("{name}({}) failed: {e}", shown.join(", ")),
    }
}

fn main() {
    let registry = shipped::registry();
    let model = shipped::poc_model();
    let zone = "2Hq7mP0vT9uBxYc3LrW8aE";

    let doors: Vec<String> = model
        .contained(zone, ObjectKind::Element, Some("Door"))
        .expect("zone exists")
        .into_iter()
        .map(|e| e.global_id.clone())
        .collect();
    println!("doors in zone: {doors:?}");

    let element_distance = "getElementDistance(element a, element b, type c)";
    for kind in ["horizontal", "linear"] {
        call(
            &model,
            &registry,
            element_distance,
            vec![Arg::Entity(doors[0].clone()), Arg::Entity(doors[1].clone()), Arg::Literal(kind.into())],
        );
    }
    call(&model, &registry, "getFloorArea(space a, type b)", vec![Arg::Entity(zone.into()), Arg::Literal("footprint".into())]);
    call(&model, &registry, "getNumberOfElement(element a)", vec![Arg::Entities(doors.clone())]);
    call(
        &model,
        &registry,
        "isAdjacent(space a, space b, direction c)",
        vec![
            Arg::Entity("1wXU_jTED61P7ZYfArwKmy".into()),
            Arg::Entity("3Zr5cV1nM8kLp0QwE4tYuI".into()),
            Arg::Literal("any".into()),
        ],
    );
    // Unsupported measurement types are rejected with the accepted list.
    call(
        &model,
        &registry,
        element_distance,
        vec![Arg::Entity(doors[0].clone()), Arg::Entity(doors[1].clone()), Arg::Literal("walking".into())],
    );
}
