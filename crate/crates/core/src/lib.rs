pub mod classifier;
pub mod cli;
pub mod clause;
pub mod engine;
pub mod eval;
pub mod llm;
pub mod model;
pub mod prompt;
pub mod registry;
pub mod shipped;
