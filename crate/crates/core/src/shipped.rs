//! Data files bundled with the crate.
//!
//! The same files live under `data/` and can be passed by path to the CLI;
//! these accessors embed them so examples and tests do not depend on the
//! working directory.

use crate::classifier::KeywordTable;
use crate::clause::{PipelineConfig, RawCorpus};
use crate::engine::CheckSpec;
use crate::llm::MockFixture;
use crate::model::BuildingModel;
use crate::prompt::PromptTemplate;
use crate::registry::FunctionRegistry;

pub const REGISTRY: &str = include_str!("../data/registry.toml");
pub const KEYWORDS: &str = include_str!("../data/keywords.toml");
pub const PIPELINE: &str = include_str!("../data/pipeline.toml");
pub const TEMPLATE: &str = include_str!("../data/template.toml");
pub const CORPUS: &str = include_str!("../data/corpus.json");
pub const BENCHMARK_CORPUS: &str = include_str!("../data/benchmark_corpus.json");
pub const MOCK_RESPONSES: &str = include_str!("../data/mock_responses.json");
pub const POC_MODEL: &str = include_str!("../data/poc_model.json");
pub const POC_CHECKS: &str = include_str!("../data/poc_checks.json");

/// Clause text used throughout the examples: a wall-property requirement whose
/// refined prompt excludes the geometry functions.
pub const STAIRWELL_CLAUSE: &str = "When the fire resistance rating of the building is Class 3, \
the wall of the stairwell, front room and elevator shaft is non-combustible, and the fire \
resistance limit of the wall is not less than 1.50h.";

pub fn registry() -> FunctionRegistry {
    FunctionRegistry::load(REGISTRY).expect("bundled registry is valid")
}

pub fn keywords() -> KeywordTable {
    KeywordTable::from_toml(KEYWORDS).expect("bundled keyword table is valid")
}

pub fn pipeline_config() -> PipelineConfig {
    PipelineConfig::from_toml(PIPELINE).expect("bundled pipeline config is valid")
}

pub fn template() -> PromptTemplate {
    PromptTemplate::from_toml(TEMPLATE).expect("bundled template is valid")
}

pub fn corpus() -> RawCorpus {
    RawCorpus::from_json(CORPUS).expect("bundled corpus is valid")
}

pub fn benchmark_corpus() -> RawCorpus {
    RawCorpus::from_json(BENCHMARK_CORPUS).expect("bundled benchmark corpus is valid")
}

pub fn mock_fixture() -> MockFixture {
    MockFixture::from_json(MOCK_RESPONSES).expect("bundled mock fixture is valid")
}

pub fn poc_model() -> BuildingModel {
    BuildingModel::from_json(POC_MODEL).expect("bundled model is valid")
}

pub fn poc_checks() -> Vec<CheckSpec> {
    CheckSpec::list_from_json(POC_CHECKS).expect("bundled checks are valid")
}
