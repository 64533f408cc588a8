//! Recall@k scoring, benchmark runs and corpus usage statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{classify, KeywordTable};
use crate::clause::{Clause, GoldAnnotation, ProcessedCorpus};
use crate::llm::{complete_all, parse_identifications, CompletionBackend, CompletionRequest, LlmError, RankedFunctionList};
use crate::prompt::{build_full_prompt, build_refined_prompt, render, PromptError, PromptTemplate};
use crate::registry::{CanonicalKey, FunctionCategory, FunctionRegistry, ObjectKind, Order};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("gold set is empty")]
    EmptyGold,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("cannot average an empty list")]
    EmptyList,
    #[error("corpus has no annotated processable clauses")]
    MissingGold,
    #[error("gold function `{0}` is not in the registry")]
    UnknownFunction(CanonicalKey),
    #[error("unknown prompt variant `{0}` (expected full or refined)")]
    UnknownVariant(String),
    #[error("clause {clause_id}: {source}")]
    Prompt {
        clause_id: String,
        #[source]
        source: PromptError,
    },
    #[error("clause {clause_id}: {source}")]
    Completion {
        clause_id: String,
        #[source]
        source: LlmError,
    },
}

/// Fraction of distinct `gold` keys found among the first `k` predictions.
///
/// Unresolved predictions still use up a rank.
pub fn recall_at_k(predicted: &RankedFunctionList, gold: &[CanonicalKey], k: usize) -> Result<f64, EvalError> {
    if k < 1 {
        return Err(EvalError::InvalidK);
    }
    let gold: HashSet<&CanonicalKey> = gold.iter().collect();
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let hits: HashSet<&CanonicalKey> = predicted.top_k(k).flatten().filter(|key| gold.contains(key)).collect();
    Ok(hits.len() as f64 / gold.len() as f64)
}

pub fn recall_at_k_avg(per_clause: &[f64]) -> Result<f64, EvalError> {
    if per_clause.is_empty() {
        return Err(EvalError::EmptyList);
    }
    Ok(per_clause.iter().sum::<f64>() / per_clause.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Refined,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Refined => "refined",
        })
    }
}

impl FromStr for Variant {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "refined" => Ok(Variant::Refined),
            _ => Err(EvalError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseScore {
    pub clause_id: String,
    pub number_true: usize,
    pub number_pred_at_k: usize,
    pub recall_at_k: f64,
    /// Ranked raw predictions, for case inspection.
    pub predicted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub backend: String,
    pub variant: Variant,
    pub k: usize,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: RunMetadata,
    pub clauses: Vec<ClauseScore>,
    pub skipped_without_gold: usize,
    pub recall_at_k_avg: f64,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timestamp blanked, for reproducibility comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut copy = self.clone();
        copy.metadata.timestamp = String::new();
        copy.to_json()
    }

    pub fn method_label(&self) -> String {
        match self.metadata.variant {
            Variant::Full => "Full prompt".to_string(),
            Variant::Refined => "Classification-refined prompt".to_string(),
        }
    }

    pub fn aggregate_line(&self) -> String {
        format!(
            "{} | Recall@{}_avg = {:.2}%",
            self.method_label(),
            self.metadata.k,
            self.recall_at_k_avg * 100.0
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub k: usize,
    pub max_in_flight: usize,
    pub budget_tokens: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            max_in_flight: 4,
            budget_tokens: None,
        }
    }
}

/// Everything a benchmark run needs besides the corpus and backend.
pub struct BenchmarkContext<'a> {
    pub registry: &'a FunctionRegistry,
    pub template: &'a PromptTemplate,
    pub keywords: &'a KeywordTable,
}

/// Renders the prompt the benchmark sends for `clause`.
pub fn render_for_variant(
    clause: &Clause,
    variant: Variant,
    ctx: &BenchmarkContext<'_>,
    budget_tokens: Option<usize>,
) -> Result<String, PromptError> {
    let prompt = match variant {
        Variant::Full => build_full_prompt(ctx.registry, ctx.template, clause),
        Variant::Refined => {
            let categories = classify(clause, ctx.keywords);
            build_refined_prompt(ctx.registry, ctx.template, clause, &categories)
        }
    };
    render(&prompt, budget_tokens)
}

/// Runs identification over every annotated processable clause and scores it.
///
/// Returns the report plus the parsed identification list of each scored
/// clause, both ordered by clause id.
pub fn run_benchmark(
    corpus: &ProcessedCorpus,
    variant: Variant,
    backend: &dyn CompletionBackend,
    ctx: &BenchmarkContext<'_>,
    config: &BenchmarkConfig,
) -> Result<(EvaluationReport, Vec<RankedFunctionList>), EvalError> {
    if config.k < 1 {
        return Err(EvalError::InvalidK);
    }
    let mut scored: Vec<&Clause> = Vec::new();
    let mut skipped = 0;
    for clause in corpus.processable() {
        match &clause.gold {
            Some(gold) if !gold.functions.is_empty() => scored.push(clause),
            _ => skipped += 1,
        }
    }
    scored.sort_by(|a, b| a.id.cmp(&b.id));

    let mut requests = Vec::with_capacity(scored.len());
    for clause in &scored {
        let prompt = render_for_variant(clause, variant, ctx, config.budget_tokens).map_err(|source| {
            EvalError::Prompt {
                clause_id: clause.id.clone(),
                source,
            }
        })?;
        requests.push(CompletionRequest {
            correlation_id: clause.id.clone(),
            prompt,
        });
    }
    let responses = complete_all(backend, &requests, config.max_in_flight);

    let mut rows = Vec::with_capacity(scored.len());
    let mut lists = Vec::with_capacity(scored.len());
    for (clause, (id, response)) in scored.iter().zip(responses) {
        let response = response.map_err(|source| EvalError::Completion { clause_id: id, source })?;
        let list = parse_identifications(&response, ctx.registry, &clause.id);
        let gold = &clause.gold.as_ref().expect("scored clauses carry gold").functions;
        let recall = recall_at_k(&list, gold, config.k)?;
        let number_true = gold.iter().collect::<HashSet<_>>().len();
        rows.push(ClauseScore {
            clause_id: clause.id.clone(),
            number_true,
            number_pred_at_k: (recall * number_true as f64).round() as usize,
            recall_at_k: recall,
            predicted: list.items.iter().map(|i| i.raw_text.clone()).collect(),
        });
        lists.push(list);
    }
    let per_clause: Vec<f64> = rows.iter().map(|r| r.recall_at_k).collect();
    let report = EvaluationReport {
        metadata: RunMetadata {
            backend: backend.name().to_string(),
            variant,
            k: config.k,
            timestamp: chrono::Utc::now().to_rfc3339(),
        },
        recall_at_k_avg: recall_at_k_avg(&per_clause)?,
        clauses: rows,
        skipped_without_gold: skipped,
    };
    Ok((report, lists))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub clause_id: String,
    pub number_true: usize,
    pub full: Option<f64>,
    pub refined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub k: usize,
    pub full_avg: f64,
    pub refined_avg: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn new(full: &EvaluationReport, refined: &EvaluationReport) -> Self {
        let mut rows: BTreeMap<&str, ComparisonRow> = BTreeMap::new();
        for (report, is_full) in [(full, true), (refined, false)] {
            for score in &report.clauses {
                let row = rows.entry(&score.clause_id).or_insert_with(|| ComparisonRow {
                    clause_id: score.clause_id.clone(),
                    number_true: score.number_true,
                    full: None,
                    refined: None,
                });
                if is_full {
                    row.full = Some(score.recall_at_k);
                } else {
                    row.refined = Some(score.recall_at_k);
                }
            }
        }
        Self {
            k: full.metadata.k,
            full_avg: full.recall_at_k_avg,
            refined_avg: refined.recall_at_k_avg,
            rows: rows.into_values().collect(),
        }
    }

    pub fn to_table(&self) -> String {
        let header = format!("Recall@{}_avg", self.k);
        let mut out = format!("{:<30} | {header}\n", "Method");
        out.push_str(&format!("{:-<30}-+-{:-<width$}\n", "", "", width = header.len()));
        out.push_str(&format!("{:<30} | {:.2}%\n", "Full prompt", self.full_avg * 100.0));
        out.push_str(&format!(
            "{:<30} | {:.2}%\n",
            "Classification-refined prompt",
            self.refined_avg * 100.0
        ));
        out.push('\n');
        out.push_str(&format!("{:<24} {:>5} {:>8} {:>8}\n", "clause", "gold", "full", "refined"));
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<24} {:>5} {:>8} {:>8}\n",
                row.clause_id,
                row.number_true,
                cell(row.full),
                cell(row.refined)
            ));
        }
        out
    }
}

/// True when every gold function is a low-order one.
pub fn is_low_order_only(gold: &GoldAnnotation, registry: &FunctionRegistry) -> bool {
    !gold.functions.is_empty()
        && gold
            .functions
            .iter()
            .all(|k| registry.get(k).is_some_and(|s| s.order == Order::Low))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCount {
    pub key: CanonicalKey,
    pub signature: String,
    pub category: FunctionCategory,
    pub order: Order,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilitySplit {
    pub low_order_only: usize,
    pub high_order_required: usize,
    pub low_order_only_share: f64,
    pub high_order_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub clauses: usize,
    pub total_annotations: usize,
    /// Non-increasing by count; ties broken by key.
    pub functions: Vec<FunctionCount>,
    pub category_counts: BTreeMap<FunctionCategory, usize>,
    pub category_shares: BTreeMap<FunctionCategory, f64>,
    pub interpretability: InterpretabilitySplit,
    /// Number of function usages whose parameters involve each object kind.
    pub object_kinds: BTreeMap<ObjectKind, usize>,
}

impl FrequencyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} annotated clauses, {} function usages\n\nFunction usage (descending)\n",
            self.clauses, self.total_annotations
        );
        let widest = self.functions.iter().map(|f| f.signature.len()).max().unwrap_or(0);
        for f in &self.functions {
            out.push_str(&format!(
                "{:>4}  {:<widest$}  {}\n",
                f.count,
                f.signature,
                "#".repeat(f.count)
            ));
        }
        out.push_str("\nCategory shares\n");
        for (category, share) in &self.category_shares {
            out.push_str(&format!("{:<20} {:>6.2}%\n", category.name(), share * 100.0));
        }
        out.push_str("\nObject kinds\n");
        for (kind, count) in &self.object_kinds {
            out.push_str(&format!("{:<20} {count}\n", kind.word()));
        }
        let split = &self.interpretability;
        out.push_str(&format!(
            "\nInterpretable with low-order functions only: {} ({:.2}%)\nRequiring high-order functions: {} ({:.2}%)\n",
            split.low_order_only,
            split.low_order_only_share * 100.0,
            split.high_order_required,
            split.high_order_share * 100.0
        ));
        out
    }
}

pub fn usage_statistics(corpus: &ProcessedCorpus, registry: &FunctionRegistry) -> Result<FrequencyReport, EvalError> {
    let annotated: Vec<&GoldAnnotation> = corpus
        .processable()
        .filter_map(|c| c.gold.as_ref())
        .filter(|g| !g.functions.is_empty())
        .collect();
    if annotated.is_empty() {
        return Err(EvalError::MissingGold);
    }
    let mut counts: BTreeMap<&CanonicalKey, usize> = BTreeMap::new();
    let mut category_counts: BTreeMap<FunctionCategory, usize> = BTreeMap::new();
    let mut object_kinds: BTreeMap<ObjectKind, usize> = BTreeMap::new();
    let mut low_only = 0;
    let mut total = 0;
    for gold in &annotated {
        if is_low_order_only(gold, registry) {
            low_only += 1;
        }
        for key in &gold.functions {
            let spec = registry.get(key).ok_or_else(|| EvalError::UnknownFunction(key.clone()))?;
            total += 1;
            *counts.entry(key).or_default() += 1;
            *category_counts.entry(spec.category).or_default() += 1;
            let kinds: BTreeSet<ObjectKind> = spec.signature.kinds().filter(|k| k.is_checked()).collect();
            for kind in kinds {
                *object_kinds.entry(kind).or_default() += 1;
            }
        }
    }
    let mut functions: Vec<FunctionCount> = counts
        .into_iter()
        .map(|(key, count)| {
            let spec = registry.get(key).expect("checked above");
            FunctionCount {
                key: key.clone(),
                signature: spec.signature.render(),
                category: spec.category,
                order: spec.order,
                count,
            }
        })
        .collect();
    functions.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
    let category_shares = category_counts
        .iter()
        .map(|(c, n)| (*c, *n as f64 / total as f64))
        .collect();
    let n = annotated.len();
    let low_share = low_only as f64 / n as f64;
    Ok(FrequencyReport {
        clauses: n,
        total_annotations: total,
        functions,
        category_counts,
        category_shares,
        interpretability: InterpretabilitySplit {
            low_order_only: low_only,
            high_order_required: n - low_only,
            low_order_only_share: low_share,
            high_order_share: (n - low_only) as f64 / n as f64,
        },
        object_kinds,
    })
}
