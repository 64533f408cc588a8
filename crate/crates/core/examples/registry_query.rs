//! Query the bundled function table by category, object kind and order.
//!
//! cargo run --example registry_query

use funcmapper::registry::{FunctionCategory, ObjectKind, Order, RegistryFilter};
use funcmapper::shipped;

fn main() {
    let registry = shipped::registry();
    println!("{} functions", registry.len());
    for (category, n) in registry.category_counts() {
        println!("  {:<18} {n}", category.name());
    }

    println!("\ndistance functions taking an element:");
    let filter = RegistryFilter::all()
        .categories([FunctionCategory::Distance])
        .object_kinds([ObjectKind::Element]);
    for spec in registry.query(&filter) {
        println!("  {}  -> {}", spec.signature.render(), spec.output());
    }

    println!("\nlow-order functions:");
    for spec in registry.query(&RegistryFilter::all().order(Order::Low)) {
        println!("  {}", spec.signature.render());
    }

    // Lookup is by name plus parameter kinds; parameter names do not matter.
    let hit = registry.resolve("getProperty(space x, property y)");
    println!("\nresolve getProperty(space x, property y): {:?}", hit.map(|s| s.signature.render()));
    let miss = registry.resolve("getProperty(space x, space y)");
    println!("resolve getProperty(space x, space y): {:?}", miss.map(|s| s.signature.render()));
}
