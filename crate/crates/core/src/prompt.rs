//! Five-part prompt construction: goal, database, requirement, example and
//! analysis, concatenated in that order.
//!
//! The database part injects the function registry (optionally narrowed to a
//! category set), the example part carries the worked chain-of-thought
//! exemplars, and the analysis part carries the single clause under test.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::classifier::CategorySet;
use crate::clause::Clause;
use crate::registry::{CanonicalKey, FunctionCategory, FunctionRegistry, FunctionSpec};

pub const TEMPLATE_SCHEMA: &str = "funcmapper.template/1";

/// Line prefix the model is asked to use for each identified function.
pub const ANSWER_PREFIX: &str = "FUNCTION:";
/// Line prefix carrying the clause id inside the analysis part.
pub const CLAUSE_ID_PREFIX: &str = "Clause ID:";
/// Line prefix listing the categories present in the database part.
pub const CATEGORIES_PREFIX: &str = "Categories:";

const DEFAULT_ROW_FORMAT: &str = "{category} | {object} | {function_name} | {description} | {example}";
const ROW_SLOTS: [&str; 5] = ["category", "object", "function_name", "description", "example"];

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template does not parse: {0}")]
    Syntax(String),
    #[error("unsupported template schema `{0}`")]
    Schema(String),
    #[error("requirement text must ask the model to think step by step")]
    MissingStepByStep,
    #[error("requirement text must state the `{ANSWER_PREFIX}` output contract")]
    MissingOutputContract,
    #[error("template needs at least one worked example")]
    NoExamples,
    #[error("database row format references unknown slot `{{{0}}}`")]
    UnknownSlot(String),
    #[error("worked example {index}: answer `{answer}` does not resolve in the registry")]
    UnresolvedAnswer { index: usize, answer: String },
    #[error(
        "prompt needs ~{estimated} tokens, budget is {budget}; the {section} section overflows \
         (try a classification-refined prompt)"
    )]
    ContextBudgetExceeded {
        section: &'static str,
        estimated: usize,
        budget: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkedExample {
    pub clause: String,
    pub reasoning: String,
    pub answer: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub goal: String,
    pub requirement: String,
    #[serde(default = "default_row_format")]
    pub database_row_format: String,
    #[serde(rename = "example")]
    pub exemplars: Vec<WorkedExample>,
}

fn default_row_format() -> String {
    DEFAULT_ROW_FORMAT.to_string()
}

#[derive(Deserialize)]
struct TemplateDocument {
    schema: String,
    #[serde(flatten)]
    template: PromptTemplate,
}

impl PromptTemplate {
    pub fn from_toml(text: &str) -> Result<Self, PromptError> {
        let doc: TemplateDocument =
            toml::from_str(text).map_err(|e| PromptError::Syntax(e.to_string()))?;
        if doc.schema != TEMPLATE_SCHEMA {
            return Err(PromptError::Schema(doc.schema));
        }
        doc.template.check()?;
        Ok(doc.template)
    }

    /// Structural checks that need no registry.
    pub fn check(&self) -> Result<(), PromptError> {
        let normalized = self.requirement.to_lowercase().replace('_', " ");
        if !normalized.contains("step by step") {
            return Err(PromptError::MissingStepByStep);
        }
        if !self.requirement.contains(ANSWER_PREFIX) {
            return Err(PromptError::MissingOutputContract);
        }
        if self.exemplars.is_empty() {
            return Err(PromptError::NoExamples);
        }
        let slots = Regex::new(r"\{([^{}]*)\}").expect("static regex");
        for cap in slots.captures_iter(&self.database_row_format) {
            if !ROW_SLOTS.contains(&&cap[1]) {
                return Err(PromptError::UnknownSlot(cap[1].to_string()));
            }
        }
        Ok(())
    }

    /// Every exemplar answer must name a registry function.
    pub fn validate(&self, registry: &FunctionRegistry) -> Result<(), PromptError> {
        self.check()?;
        for (i, example) in self.exemplars.iter().enumerate() {
            for answer in &example.answer {
                if registry.resolve(answer).is_none() {
                    return Err(PromptError::UnresolvedAnswer {
                        index: i + 1,
                        answer: answer.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Keeps only the first `k` worked examples.
    pub fn with_k(mut self, k: usize) -> Self {
        self.exemplars.truncate(k.max(1));
        self
    }

    pub fn answer_keys(&self) -> Vec<CanonicalKey> {
        self.exemplars
            .iter()
            .flat_map(|e| e.answer.iter())
            .filter_map(|a| CanonicalKey::from_signature(a).ok())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParts {
    pub goal: String,
    pub database: String,
    pub requirement: String,
    pub example: String,
    pub analysis: String,
}

impl PromptParts {
    fn sections(&self) -> [(&'static str, &str); 5] {
        [
            ("GOAL", &self.goal),
            ("DATABASE", &self.database),
            ("REQUIREMENT", &self.requirement),
            ("EXAMPLE", &self.example),
            ("ANALYSIS", &self.analysis),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedLength {
    pub chars: usize,
    pub tokens: usize,
}

impl RenderedLength {
    pub fn of(text: &str) -> Self {
        let chars = text.chars().count();
        Self {
            chars,
            tokens: estimate_tokens(chars),
        }
    }
}

/// `ceil(chars / 4)`.
pub fn estimate_tokens(chars: usize) -> usize {
    chars.div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub clause_id: String,
    pub parts: PromptParts,
    pub included_categories: CategorySet,
    pub database_rows: usize,
    pub rendered_length: RenderedLength,
}

impl Prompt {
    pub fn is_refined(&self) -> bool {
        self.included_categories.len() < FunctionCategory::ALL.len()
    }
}

/// Prompt over the whole registry.
pub fn build_full_prompt(registry: &FunctionRegistry, template: &PromptTemplate, clause: &Clause) -> Prompt {
    build_prompt(registry, template, clause, &CategorySet::all())
}

/// Prompt whose database part lists only functions in `categories`.
pub fn build_refined_prompt(
    registry: &FunctionRegistry,
    template: &PromptTemplate,
    clause: &Clause,
    categories: &CategorySet,
) -> Prompt {
    build_prompt(registry, template, clause, categories)
}

fn build_prompt(
    registry: &FunctionRegistry,
    template: &PromptTemplate,
    clause: &Clause,
    categories: &CategorySet,
) -> Prompt {
    let rows: Vec<&FunctionSpec> = registry
        .specs()
        .iter()
        .filter(|s| categories.contains(s.category))
        .collect();

    let mut database = String::new();
    let listed: BTreeSet<&str> = categories.iter().map(FunctionCategory::name).collect();
    let _ = writeln!(
        database,
        "{CATEGORIES_PREFIX} {}",
        FunctionCategory::ALL
            .iter()
            .map(|c| c.name())
            .filter(|n| listed.contains(n))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(database, "CATEGORY | OBJECT | FUNCTION_NAME | DESCRIPTION | EXAMPLE");
    for spec in &rows {
        let _ = writeln!(database, "{}", database_row(&template.database_row_format, spec));
    }

    let mut example = String::new();
    for (i, ex) in template.exemplars.iter().enumerate() {
        if i > 0 {
            example.push('\n');
        }
        let _ = writeln!(example, "Example {}:", i + 1);
        let _ = writeln!(example, "Clause: {}", ex.clause.trim());
        let _ = writeln!(example, "Analysis: {}", ex.reasoning.trim());
        for answer in &ex.answer {
            let _ = writeln!(example, "{ANSWER_PREFIX} {}", answer.trim());
        }
    }

    let analysis = format!(
        "{CLAUSE_ID_PREFIX} {}\nClause: {}\nAnalysis: let's think step by step.\n",
        clause.id,
        clause.text.trim()
    );

    let parts = PromptParts {
        goal: ensure_newline(template.goal.trim()),
        database,
        requirement: ensure_newline(template.requirement.trim()),
        example,
        analysis,
    };
    let mut prompt = Prompt {
        clause_id: clause.id.clone(),
        parts,
        included_categories: categories.clone(),
        database_rows: rows.len(),
        rendered_length: RenderedLength { chars: 0, tokens: 0 },
    };
    prompt.rendered_length = RenderedLength::of(&render_unchecked(&prompt));
    prompt
}

fn ensure_newline(text: &str) -> String {
    format!("{text}\n")
}

fn database_row(format: &str, spec: &FunctionSpec) -> String {
    let slots = Regex::new(r"\{([^{}]*)\}").expect("static regex");
    slots
        .replace_all(format, |cap: &regex::Captures<'_>| match &cap[1] {
            "category" => spec.category.name().to_string(),
            "object" => spec.object.clone(),
            "function_name" => spec.signature.render(),
            "description" => spec.description.clone(),
            "example" => spec.exemplar_phrases.join("; "),
            other => format!("{{{other}}}"),
        })
        .into_owned()
}

fn render_unchecked(prompt: &Prompt) -> String {
    let mut out = String::new();
    for (i, (title, body)) in prompt.parts.sections().into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "### {title}");
        out.push_str(body);
    }
    out
}

/// Renders the prompt. With a token budget, fails on the first section whose
/// cumulative estimate passes the budget.
pub fn render(prompt: &Prompt, budget_tokens: Option<usize>) -> Result<String, PromptError> {
    let text = render_unchecked(prompt);
    if let Some(budget) = budget_tokens {
        let estimated = estimate_tokens(text.chars().count());
        if estimated > budget {
            let mut running = 0;
            let mut section = "ANALYSIS";
            for (title, body) in prompt.parts.sections() {
                running += title.chars().count() + 5 + body.chars().count();
                if estimate_tokens(running) > budget {
                    section = title;
                    break;
                }
            }
            return Err(PromptError::ContextBudgetExceeded {
                section: section_name(section),
                estimated,
                budget,
            });
        }
    }
    Ok(text)
}

fn section_name(title: &str) -> &'static str {
    match title {
        "GOAL" => "goal",
        "DATABASE" => "database",
        "REQUIREMENT" => "requirement",
        "EXAMPLE" => "example",
        _ => "analysis",
    }
}
