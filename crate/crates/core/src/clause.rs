//! Clause preprocessing: sentence splitting, table flattening and the
//! processability screen, plus the corpus formats that feed them.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::registry::{CanonicalKey, FunctionCategory, FunctionRegistry};

pub const CORPUS_SCHEMA: &str = "funcmapper.corpus/1";
pub const PROCESSED_SCHEMA: &str = "funcmapper.processed/1";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config does not parse: {0}")]
    Config(String),
    #[error("invalid pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },
    #[error("corpus does not parse: {0}")]
    Corpus(String),
    #[error("unsupported schema `{0}`")]
    Schema(String),
    #[error("template references unknown slot `{{{0}}}`")]
    UnknownSlot(String),
    #[error("table {table}: cells are {rows}x{cols}, headers are {header_rows}x{header_cols}")]
    TableShape {
        table: String,
        rows: usize,
        cols: usize,
        header_rows: usize,
        header_cols: usize,
    },
    #[error("{location}: {count} annotations for {fragments} fragments")]
    AnnotationCount {
        location: String,
        count: usize,
        fragments: usize,
    },
    #[error("{clause}: gold function `{function}` {problem}")]
    Gold {
        clause: String,
        function: String,
        problem: String,
    },
    #[error("duplicate clause id `{0}`")]
    DuplicateId(String),
    #[error("manifest expects {expected} for {what}, pipeline produced {actual}")]
    Manifest {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Processability {
    Processable,
    Definitive,
    Qualitative,
    ExternalReference,
}

impl fmt::Display for Processability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Processability::Processable => "processable",
            Processability::Definitive => "definitive",
            Processability::Qualitative => "qualitative",
            Processability::ExternalReference => "external-reference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessabilityVerdict {
    pub status: Processability,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ProcessabilityVerdict {
    pub fn processable() -> Self {
        Self {
            status: Processability::Processable,
            reason: None,
        }
    }

    pub fn is_processable(&self) -> bool {
        self.status == Processability::Processable
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseSource {
    pub document: String,
    pub article: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub categories: BTreeSet<FunctionCategory>,
    pub functions: Vec<CanonicalKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub id: String,
    pub text: String,
    pub source: ClauseSource,
    pub verdict: ProcessabilityVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<GoldAnnotation>,
}

impl Clause {
    /// A processable clause with no provenance, for ad-hoc use.
    pub fn adhoc(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            source: ClauseSource {
                document: "adhoc".into(),
                article: "-".into(),
                table: None,
            },
            verdict: ProcessabilityVerdict::processable(),
            gold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableBlock {
    pub preamble: String,
    pub column_headers: Vec<String>,
    pub row_headers: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

impl TableBlock {
    fn check_shape(&self, table: &str) -> Result<(), PipelineError> {
        let cols = self.cells.first().map_or(0, Vec::len);
        let ragged = self.cells.iter().any(|r| r.len() != self.column_headers.len());
        if self.cells.len() != self.row_headers.len() || ragged {
            return Err(PipelineError::TableShape {
                table: table.to_string(),
                rows: self.cells.len(),
                cols,
                header_rows: self.row_headers.len(),
                header_cols: self.column_headers.len(),
            });
        }
        Ok(())
    }
}

/// Delimiter configuration for [`split_clause`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Characters that end a requirement when followed by whitespace or the
    /// end of the text.
    pub terminators: Vec<char>,
    /// Regexes for enumeration markers such as `(2)`. A new fragment starts at
    /// a marker once the current fragment already holds one.
    pub enumeration_markers: Vec<String>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            terminators: vec!['.', ';', '!', '?'],
            enumeration_markers: vec![r"\(\d+\)".into()],
        }
    }
}

/// Phrase lists (case-insensitive regexes) for the three non-processable types.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScreenPatterns {
    pub definitive: Vec<String>,
    pub qualitative: Vec<String>,
    pub external_reference: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub screen: ScreenPatterns,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn compile(&self) -> Result<CompiledPipeline, PipelineError> {
        CompiledPipeline::new(self)
    }
}

/// [`PipelineConfig`] with its regexes compiled.
#[derive(Debug, Clone)]
pub struct CompiledPipeline {
    terminators: Vec<char>,
    markers: Vec<Regex>,
    screen: Vec<(Processability, Vec<Regex>)>,
}

fn compile_pattern(pattern: &str) -> Result<Regex, PipelineError> {
    RegexBuilder::new(pattern)
        .case_insensitive(true)
        .build()
        .map_err(|e| PipelineError::Pattern {
            pattern: pattern.to_string(),
            message: e.to_string(),
        })
}

impl CompiledPipeline {
    pub fn new(config: &PipelineConfig) -> Result<Self, PipelineError> {
        let markers = config
            .split
            .enumeration_markers
            .iter()
            .map(|m| compile_pattern(m))
            .collect::<Result<_, _>>()?;
        let compile_list = |list: &[String]| {
            list.iter()
                .map(|p| compile_pattern(p))
                .collect::<Result<Vec<_>, _>>()
        };
        let screen = vec![
            (Processability::Definitive, compile_list(&config.screen.definitive)?),
            (Processability::Qualitative, compile_list(&config.screen.qualitative)?),
            (
                Processability::ExternalReference,
                compile_list(&config.screen.external_reference)?,
            ),
        ];
        Ok(Self {
            terminators: config.split.terminators.clone(),
            markers,
            screen,
        })
    }

    pub fn split(&self, raw: &str) -> Vec<String> {
        split_with(raw, &self.terminators, &self.markers)
    }

    pub fn screen(&self, text: &str) -> ProcessabilityVerdict {
        for (status, patterns) in &self.screen {
            for re in patterns {
                if let Some(m) = re.find(text) {
                    return ProcessabilityVerdict {
                        status: *status,
                        reason: Some(m.as_str().to_string()),
                    };
                }
            }
        }
        ProcessabilityVerdict::processable()
    }
}

/// Splits `raw` into single-requirement fragments.
///
/// Fragments keep their delimiters, so concatenating them reproduces `raw`
/// up to whitespace. Text without any boundary comes back as one fragment.
pub fn split_clause(raw: &str, config: &SplitConfig) -> Result<Vec<String>, PipelineError> {
    let markers = config
        .enumeration_markers
        .iter()
        .map(|m| compile_pattern(m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(split_with(raw, &config.terminators, &markers))
}

fn split_with(raw: &str, terminators: &[char], markers: &[Regex]) -> Vec<String> {
    let mut marker_starts: Vec<usize> = markers
        .iter()
        .flat_map(|re| re.find_iter(raw).map(|m| m.start()))
        .filter(|&start| start == 0 || raw[..start].ends_with(char::is_whitespace))
        .collect();
    marker_starts.sort_unstable();
    marker_starts.dedup();

    let mut cuts = Vec::new();
    let mut fragment_start = 0;
    let mut fragment_has_marker = false;
    let mut chars = raw.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if marker_starts.binary_search(&i).is_ok() {
            if fragment_has_marker && !raw[fragment_start..i].trim().is_empty() {
                cuts.push(i);
                fragment_start = i;
            }
            fragment_has_marker = true;
        }
        if terminators.contains(&c) {
            let at_boundary = chars.peek().map_or(true, |&(_, next)| next.is_whitespace());
            if at_boundary {
                let end = i + c.len_utf8();
                cuts.push(end);
                fragment_start = end;
                fragment_has_marker = false;
            }
        }
    }

    let mut fragments = Vec::new();
    let mut start = 0;
    for cut in cuts.into_iter().chain(std::iter::once(raw.len())) {
        let piece = raw[start..cut].trim();
        if !piece.is_empty() {
            fragments.push(piece.to_string());
        }
        start = cut;
    }
    if fragments.is_empty() {
        fragments.push(raw.trim().to_string());
    }
    fragments
}

const SLOTS: [&str; 4] = ["preamble", "row", "column", "cell"];
const EMPTY_CELLS: [&str; 5] = ["", "—", "–", "-", "/"];

fn slot_regex() -> Regex {
    Regex::new(r"\{([^{}]*)\}").expect("static regex")
}

/// Turns each non-empty cell into one sentence by substituting the
/// `{preamble}`, `{row}`, `{column}` and `{cell}` slots of `template`.
/// Cells holding only a dash are skipped. Output is row-major.
pub fn flatten_table(block: &TableBlock, template: &str) -> Result<Vec<String>, PipelineError> {
    let slots = slot_regex();
    for cap in slots.captures_iter(template) {
        let name = &cap[1];
        if !SLOTS.contains(&name) {
            return Err(PipelineError::UnknownSlot(name.to_string()));
        }
    }
    block.check_shape("table")?;
    let mut sentences = Vec::new();
    for (row_header, row) in block.row_headers.iter().zip(&block.cells) {
        for (col_header, cell) in block.column_headers.iter().zip(row) {
            if EMPTY_CELLS.contains(&cell.trim()) {
                continue;
            }
            let sentence = slots.replace_all(template, |cap: &regex::Captures<'_>| {
                match &cap[1] {
                    "preamble" => block.preamble.clone(),
                    "row" => row_header.clone(),
                    "column" => col_header.clone(),
                    _ => cell.trim().to_string(),
                }
            });
            sentences.push(sentence.into_owned());
        }
    }
    Ok(sentences)
}

/// Returns the first matching non-processable type in the order definitive,
/// qualitative, external-reference; otherwise processable.
pub fn screen_processability(
    text: &str,
    patterns: &ScreenPatterns,
) -> Result<ProcessabilityVerdict, PipelineError> {
    let config = PipelineConfig {
        split: SplitConfig {
            terminators: Vec::new(),
            enumeration_markers: Vec::new(),
        },
        screen: patterns.clone(),
    };
    Ok(CompiledPipeline::new(&config)?.screen(text))
}

// ------------------------------------------------------------------ corpus

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGold {
    #[serde(default)]
    pub categories: Option<Vec<FunctionCategory>>,
    pub functions: Vec<String>,
}

/// Per-fragment annotation, aligned with fragment ordinals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentAnnotation {
    /// Shared condition from the clause stem, prepended verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<RawGold>,
    /// Expert override of the pattern screen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<ProcessabilityVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawArticle {
    pub article: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<FragmentAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTable {
    pub table: String,
    pub article: String,
    pub template: String,
    #[serde(flatten)]
    pub block: TableBlock,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<FragmentAnnotation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub raw_articles: usize,
    pub tables: usize,
    pub split_clauses: usize,
    pub flattened_clauses: usize,
    pub total_clauses: usize,
    pub processable: usize,
    pub annotated: usize,
    pub low_order_only: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCorpus {
    pub schema: String,
    pub document: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<CorpusManifest>,
    #[serde(default)]
    pub articles: Vec<RawArticle>,
    #[serde(default)]
    pub tables: Vec<RawTable>,
}

impl RawCorpus {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let corpus: RawCorpus =
            serde_json::from_str(text).map_err(|e| PipelineError::Corpus(e.to_string()))?;
        if corpus.schema != CORPUS_SCHEMA {
            return Err(PipelineError::Schema(corpus.schema));
        }
        Ok(corpus)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineCounts {
    pub raw_articles: usize,
    pub tables: usize,
    pub split_clauses: usize,
    pub flattened_clauses: usize,
    pub total_clauses: usize,
    pub processable: usize,
    pub annotated: usize,
    pub by_status: BTreeMap<Processability, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedCorpus {
    pub schema: String,
    pub document: String,
    pub counts: PipelineCounts,
    pub clauses: Vec<Clause>,
}

impl ProcessedCorpus {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let corpus: ProcessedCorpus =
            serde_json::from_str(text).map_err(|e| PipelineError::Corpus(e.to_string()))?;
        if corpus.schema != PROCESSED_SCHEMA {
            return Err(PipelineError::Schema(corpus.schema));
        }
        Ok(corpus)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("processed corpus serializes")
    }

    pub fn processable(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.verdict.is_processable())
    }

    pub fn find(&self, id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }
}

fn resolve_gold(
    clause_id: &str,
    raw: &RawGold,
    registry: &FunctionRegistry,
) -> Result<GoldAnnotation, PipelineError> {
    let mut functions = Vec::new();
    let mut derived = BTreeSet::new();
    for text in &raw.functions {
        let key = CanonicalKey::from_signature(text).map_err(|e| PipelineError::Gold {
            clause: clause_id.to_string(),
            function: text.clone(),
            problem: e.to_string(),
        })?;
        let spec = registry.get(&key).ok_or_else(|| PipelineError::Gold {
            clause: clause_id.to_string(),
            function: text.clone(),
            problem: "is not in the registry".into(),
        })?;
        derived.insert(spec.category);
        if !functions.contains(&key) {
            functions.push(key);
        }
    }
    let categories = match &raw.categories {
        Some(list) => list.iter().copied().collect(),
        None => derived,
    };
    Ok(GoldAnnotation {
        categories,
        functions,
    })
}

fn annotation_for<'a>(
    annotations: &'a [FragmentAnnotation],
    location: &str,
    fragments: usize,
) -> Result<Vec<Option<&'a FragmentAnnotation>>, PipelineError> {
    if annotations.is_empty() {
        return Ok(vec![None; fragments]);
    }
    if annotations.len() != fragments {
        return Err(PipelineError::AnnotationCount {
            location: location.to_string(),
            count: annotations.len(),
            fragments,
        });
    }
    Ok(annotations.iter().map(Some).collect())
}

/// Runs splitting, flattening and screening over a raw corpus.
///
/// Gold annotations are resolved against `registry`; a gold function that
/// does not resolve is an error. When the corpus carries a manifest, its
/// counts are checked against the result.
pub fn preprocess(
    corpus: &RawCorpus,
    config: &PipelineConfig,
    registry: &FunctionRegistry,
) -> Result<ProcessedCorpus, PipelineError> {
    let pipeline = config.compile()?;
    let mut counts = PipelineCounts {
        raw_articles: corpus.articles.len(),
        tables: corpus.tables.len(),
        ..PipelineCounts::default()
    };
    let mut clauses = Vec::new();
    let mut seen = HashSet::new();

    let mut emit = |clause: Clause, clauses: &mut Vec<Clause>| -> Result<(), PipelineError> {
        if !seen.insert(clause.id.clone()) {
            return Err(PipelineError::DuplicateId(clause.id));
        }
        clauses.push(clause);
        Ok(())
    };

    for article in &corpus.articles {
        let fragments = pipeline.split(&article.text);
        counts.split_clauses += fragments.len();
        let location = format!("{}:{}", corpus.document, article.article);
        let annotations = annotation_for(&article.annotations, &location, fragments.len())?;
        for (i, (fragment, note)) in fragments.into_iter().zip(annotations).enumerate() {
            let id = format!("{location}:{}", i + 1);
            let source = ClauseSource {
                document: corpus.document.clone(),
                article: article.article.clone(),
                table: None,
            };
            let clause = build_clause(&pipeline, id, fragment, source, note, registry)?;
            emit(clause, &mut clauses)?;
        }
    }

    for table in &corpus.tables {
        table.block.check_shape(&table.table)?;
        let sentences = flatten_table(&table.block, &table.template)?;
        counts.flattened_clauses += sentences.len();
        let location = format!("{}:{}", corpus.document, table.table);
        let annotations = annotation_for(&table.annotations, &location, sentences.len())?;
        for (i, (sentence, note)) in sentences.into_iter().zip(annotations).enumerate() {
            let id = format!("{location}:{}", i + 1);
            let source = ClauseSource {
                document: corpus.document.clone(),
                article: table.article.clone(),
                table: Some(table.table.clone()),
            };
            let clause = build_clause(&pipeline, id, sentence, source, note, registry)?;
            emit(clause, &mut clauses)?;
        }
    }

    counts.total_clauses = clauses.len();
    for clause in &clauses {
        *counts.by_status.entry(clause.verdict.status).or_insert(0) += 1;
    }
    counts.processable = clauses.iter().filter(|c| c.verdict.is_processable()).count();
    counts.annotated = clauses.iter().filter(|c| c.gold.is_some()).count();

    if let Some(manifest) = &corpus.manifest {
        check_manifest(manifest, &counts, &clauses, registry)?;
    }

    Ok(ProcessedCorpus {
        schema: PROCESSED_SCHEMA.to_string(),
        document: corpus.document.clone(),
        counts,
        clauses,
    })
}

fn build_clause(
    pipeline: &CompiledPipeline,
    id: String,
    fragment: String,
    source: ClauseSource,
    note: Option<&FragmentAnnotation>,
    registry: &FunctionRegistry,
) -> Result<Clause, PipelineError> {
    let text = match note.and_then(|n| n.context.as_deref()) {
        Some(context) => format!("{} {}", context.trim(), fragment),
        None => fragment,
    };
    let verdict = match note.and_then(|n| n.verdict.clone()) {
        Some(v) => v,
        None => pipeline.screen(&text),
    };
    let gold = match note.and_then(|n| n.gold.as_ref()) {
        Some(raw) => Some(resolve_gold(&id, raw, registry)?),
        None => None,
    };
    Ok(Clause {
        id,
        text,
        source,
        verdict,
        gold,
    })
}

fn check_manifest(
    manifest: &CorpusManifest,
    counts: &PipelineCounts,
    clauses: &[Clause],
    registry: &FunctionRegistry,
) -> Result<(), PipelineError> {
    let low_order_only = clauses
        .iter()
        .filter_map(|c| c.gold.as_ref())
        .filter(|g| crate::eval::is_low_order_only(g, registry))
        .count();
    let checks = [
        ("raw_articles", manifest.raw_articles, counts.raw_articles),
        ("tables", manifest.tables, counts.tables),
        ("split_clauses", manifest.split_clauses, counts.split_clauses),
        ("flattened_clauses", manifest.flattened_clauses, counts.flattened_clauses),
        ("total_clauses", manifest.total_clauses, counts.total_clauses),
        ("processable", manifest.processable, counts.processable),
        ("annotated", manifest.annotated, counts.annotated),
        ("low_order_only", manifest.low_order_only, low_order_only),
    ];
    for (what, expected, actual) in checks {
        if expected != actual {
            return Err(PipelineError::Manifest {
                what,
                expected,
                actual,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shipped;

    fn normalized(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn splits_two_sentences() {
        let parts = split_clause("A shall be X. B shall be Y.", &SplitConfig::default()).unwrap();
        assert_eq!(parts, ["A shall be X.", "B shall be Y."]);
    }

    #[test]
    fn no_boundary_is_identity() {
        let parts = split_clause("A shall be X", &SplitConfig::default()).unwrap();
        assert_eq!(parts, ["A shall be X"]);
    }

    #[test]
    fn decimals_and_article_numbers_are_not_boundaries() {
        let raw = "The fire resistance limit shall not be less than 1.50h according to 3.2.1 of this code.";
        let parts = split_clause(raw, &SplitConfig::default()).unwrap();
        assert_eq!(parts.len(), 1);
    }

    #[test]
    fn numbered_sub_requirements() {
        // Hand split: the stem stays on the first item.
        let raw = "Fire walls shall meet the following requirements: (1) the fire resistance \
                   limit shall not be less than 3.00h (2) the wall shall be built directly on \
                   the foundation (3) no openings shall be made in the wall.";
        let parts = split_clause(raw, &SplitConfig::default()).unwrap();
        assert_eq!(
            parts,
            [
                "Fire walls shall meet the following requirements: (1) the fire resistance limit shall not be less than 3.00h",
                "(2) the wall shall be built directly on the foundation",
                "(3) no openings shall be made in the wall.",
            ]
        );
        assert_eq!(normalized(&parts.concat()), normalized(raw));
    }

    #[test]
    fn corpus_long_clause_splits_into_three() {
        let corpus = shipped::corpus();
        let article = corpus.articles.iter().find(|a| a.article == "5.5.8").unwrap();
        let parts = split_clause(&article.text, &shipped::pipeline_config().split).unwrap();
        assert_eq!(parts.len(), 3);
    }

    fn block(cells: Vec<Vec<&str>>) -> TableBlock {
        TableBlock {
            preamble: "The spacing".into(),
            column_headers: vec!["c1".into(), "c2".into()],
            row_headers: vec!["r1".into(), "r2".into()],
            cells: cells
                .into_iter()
                .map(|r| r.into_iter().map(String::from).collect())
                .collect(),
        }
    }

    #[test]
    fn flatten_cardinality_and_skip() {
        let t = "{preamble} of {row} at {column} is {cell}.";
        let full = flatten_table(&block(vec![vec!["1", "2"], vec!["3", "4"]]), t).unwrap();
        assert_eq!(full.len(), 4);
        assert_eq!(full[0], "The spacing of r1 at c1 is 1.");
        assert_eq!(full[3], "The spacing of r2 at c2 is 4.");
        let skipped = flatten_table(&block(vec![vec!["1", "—"], vec!["3", "4"]]), t).unwrap();
        assert_eq!(skipped.len(), 3);
    }

    #[test]
    fn flatten_rejects_unknown_slot() {
        let err = flatten_table(&block(vec![vec!["1", "2"], vec!["3", "4"]]), "{rating} {cell}")
            .unwrap_err();
        assert!(matches!(err, PipelineError::UnknownSlot(s) if s == "rating"));
    }

    #[test]
    fn flatten_rejects_bad_shape() {
        let mut b = block(vec![vec!["1", "2"], vec!["3", "4"]]);
        b.cells.pop();
        assert!(matches!(
            flatten_table(&b, "{cell}"),
            Err(PipelineError::TableShape { .. })
        ));
    }

    #[test]
    fn fire_resistance_table_matches_golden() {
        let corpus = shipped::corpus();
        let table = corpus.tables.iter().find(|t| t.table == "T5.1.2").unwrap();
        let sentences = flatten_table(&table.block, &table.template).unwrap();
        assert_eq!(sentences.len(), 6);
        let golden = include_str!("../tests/golden/fire_resistance_table.txt");
        assert_eq!(sentences.join("\n"), golden.trim_end());
    }

    #[test]
    fn screening_examples() {
        let patterns = shipped::pipeline_config().screen;
        let v = screen_processability(
            "Other fire protection design shall comply with GB 50229 and other standards.",
            &patterns,
        )
        .unwrap();
        assert_eq!(v.status, Processability::ExternalReference);
        assert!(v.reason.is_some());

        let v = screen_processability(
            "Placing the civil buildings near the factory buildings is not recommended.",
            &patterns,
        )
        .unwrap();
        assert_eq!(v.status, Processability::Qualitative);

        let v = screen_processability(
            "The number of safety exits for each fire protection zone shall not be less than 2.",
            &patterns,
        )
        .unwrap();
        assert_eq!(v, ProcessabilityVerdict::processable());
    }

    #[test]
    fn screening_precedence_is_fixed() {
        let patterns = ScreenPatterns {
            definitive: vec!["refers to".into()],
            qualitative: vec!["appropriate".into()],
            external_reference: vec![r"GB \d+".into()],
        };
        let text = "Fire lane refers to an appropriate route, see GB 50067.";
        let v = screen_processability(text, &patterns).unwrap();
        assert_eq!(v.status, Processability::Definitive);
        assert_eq!(v.reason.as_deref(), Some("refers to"));
        let v = screen_processability("an appropriate route per GB 50067", &patterns).unwrap();
        assert_eq!(v.status, Processability::Qualitative);
    }

    #[test]
    fn shipped_corpus_matches_manifest() {
        let processed =
            preprocess(&shipped::corpus(), &shipped::pipeline_config(), &shipped::registry())
                .unwrap();
        let manifest = shipped::corpus().manifest.unwrap();
        assert_eq!(processed.counts.total_clauses, manifest.total_clauses);
        assert_eq!(processed.counts.processable, manifest.processable);
        for clause in processed.clauses.iter() {
            if !clause.verdict.is_processable() {
                assert!(clause.verdict.reason.is_some(), "{}", clause.id);
            }
        }
    }

    #[test]
    fn context_is_prepended_and_ids_are_stable() {
        let corpus: RawCorpus = serde_json::from_value(serde_json::json!({
            "schema": CORPUS_SCHEMA,
            "document": "D",
            "articles": [{
                "article": "1.2",
                "text": "Doors shall open outward. Doors shall be 0.9m wide.",
                "annotations": [{}, {"context": "In hospitals,"}]
            }]
        }))
        .unwrap();
        let processed =
            preprocess(&corpus, &PipelineConfig::default(), &FunctionRegistry::default()).unwrap();
        let ids: Vec<&str> = processed.clauses.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["D:1.2:1", "D:1.2:2"]);
        assert_eq!(processed.clauses[1].text, "In hospitals, Doors shall be 0.9m wide.");
    }

    #[test]
    fn annotation_count_must_match_fragments() {
        let corpus: RawCorpus = serde_json::from_value(serde_json::json!({
            "schema": CORPUS_SCHEMA,
            "document": "D",
            "articles": [{"article": "1", "text": "A. B.", "annotations": [{}]}]
        }))
        .unwrap();
        let err = preprocess(&corpus, &PipelineConfig::default(), &FunctionRegistry::default())
            .unwrap_err();
        assert!(matches!(err, PipelineError::AnnotationCount { count: 1, fragments: 2, .. }));
    }

    #[test]
    fn unresolvable_gold_is_an_error() {
        let corpus: RawCorpus = serde_json::from_value(serde_json::json!({
            "schema": CORPUS_SCHEMA,
            "document": "D",
            "articles": [{"article": "1", "text": "A.",
                "annotations": [{"gold": {"functions": ["getColor(element a)"]}}]}]
        }))
        .unwrap();
        let err = preprocess(&corpus, &PipelineConfig::default(), &shipped::registry())
            .unwrap_err();
        assert!(matches!(err, PipelineError::Gold { .. }));
    }
}
