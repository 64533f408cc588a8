//! Keyword-based multi-label classification of clauses into function
//! categories, and precision/recall/F1 scoring against gold labels.
//!
//! Only quantity, geometry, distance and area are classified. Property,
//! existence and space_location are always included in a clause's category
//! set; window_wall_ratio is never included.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::clause::Clause;
use crate::registry::FunctionCategory;

pub const ALWAYS_ON: [FunctionCategory; 3] = [
    FunctionCategory::Property,
    FunctionCategory::Existence,
    FunctionCategory::SpaceLocation,
];

pub const NEVER_ON: FunctionCategory = FunctionCategory::WindowWallRatio;

pub const CLASSIFIED: [FunctionCategory; 4] = [
    FunctionCategory::Quantity,
    FunctionCategory::Geometry,
    FunctionCategory::Distance,
    FunctionCategory::Area,
];

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("keyword table does not parse: {0}")]
    Syntax(String),
    #[error("empty keyword phrase for category {0}")]
    EmptyPhrase(FunctionCategory),
    #[error("category {0} cannot be keyword-classified")]
    Unclassifiable(FunctionCategory),
    #[error("{predictions} predictions for {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordDocument {
    categories: BTreeMap<FunctionCategory, Vec<String>>,
}

#[derive(Debug, Clone)]
struct Keyword {
    phrase: String,
    matcher: Regex,
}

impl Keyword {
    /// Single words match on word boundaries, multi-word phrases as substrings.
    fn new(phrase: &str) -> Self {
        let phrase = phrase.trim().to_lowercase();
        let escaped = regex::escape(&phrase);
        let pattern = if phrase.contains(char::is_whitespace) {
            escaped
        } else {
            format!(r"\b{escaped}\b")
        };
        let matcher = RegexBuilder::new(&pattern)
            .case_insensitive(true)
            .build()
            .expect("escaped keyword is a valid regex");
        Self { phrase, matcher }
    }
}

/// Category → keyword phrases.
#[derive(Debug, Clone, Default)]
pub struct KeywordTable {
    entries: BTreeMap<FunctionCategory, Vec<Keyword>>,
}

impl KeywordTable {
    pub fn from_toml(text: &str) -> Result<Self, ClassifierError> {
        let doc: KeywordDocument =
            toml::from_str(text).map_err(|e| ClassifierError::Syntax(e.to_string()))?;
        let mut table = KeywordTable::default();
        for (category, phrases) in doc.categories {
            for phrase in phrases {
                table.add(category, &phrase)?;
            }
        }
        Ok(table)
    }

    pub fn add(&mut self, category: FunctionCategory, phrase: &str) -> Result<(), ClassifierError> {
        if phrase.trim().is_empty() {
            return Err(ClassifierError::EmptyPhrase(category));
        }
        if ALWAYS_ON.contains(&category) || category == NEVER_ON {
            return Err(ClassifierError::Unclassifiable(category));
        }
        self.entries.entry(category).or_default().push(Keyword::new(phrase));
        Ok(())
    }

    pub fn categories(&self) -> impl Iterator<Item = FunctionCategory> + '_ {
        self.entries.keys().copied()
    }

    pub fn phrases(&self, category: FunctionCategory) -> Vec<&str> {
        self.entries
            .get(&category)
            .map(|list| list.iter().map(|k| k.phrase.as_str()).collect())
            .unwrap_or_default()
    }

    /// First keyword of `category` found in `text`, if any.
    pub fn first_match(&self, category: FunctionCategory, text: &str) -> Option<&str> {
        self.entries
            .get(&category)?
            .iter()
            .find(|k| k.matcher.is_match(text))
            .map(|k| k.phrase.as_str())
    }
}

/// A set of function categories.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategorySet(pub BTreeSet<FunctionCategory>);

impl CategorySet {
    pub fn all() -> Self {
        Self(FunctionCategory::ALL.into_iter().collect())
    }

    pub fn contains(&self, category: FunctionCategory) -> bool {
        self.0.contains(&category)
    }

    pub fn iter(&self) -> impl Iterator<Item = FunctionCategory> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when the set could have been produced by [`classify`].
    pub fn is_classifier_output(&self) -> bool {
        ALWAYS_ON.iter().all(|c| self.contains(*c)) && !self.contains(NEVER_ON)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.iter().map(FunctionCategory::name).collect()
    }
}

impl FromIterator<FunctionCategory> for CategorySet {
    fn from_iter<T: IntoIterator<Item = FunctionCategory>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

pub fn classify(clause: &Clause, table: &KeywordTable) -> CategorySet {
    classify_text(&clause.text, table)
}

pub fn classify_text(text: &str, table: &KeywordTable) -> CategorySet {
    let mut set: BTreeSet<FunctionCategory> = ALWAYS_ON.into_iter().collect();
    for category in table.categories() {
        if table.first_match(category, text).is_some() {
            set.insert(category);
        }
    }
    set.remove(&NEVER_ON);
    CategorySet(set)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl CategoryScore {
    fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }

    /// Gold positives.
    pub fn number(&self) -> usize {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf1Report {
    pub categories: BTreeMap<FunctionCategory, CategoryScore>,
}

impl Prf1Report {
    pub fn get(&self, category: FunctionCategory) -> Option<&CategoryScore> {
        self.categories.get(&category)
    }

    /// Plain-text table with the columns Category, Number, Precision, Recall,
    /// F1-score. Undefined ratios print as `-`.
    pub fn to_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.1}%", x * 100.0));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>6} {:>10} {:>8} {:>9}",
            "Category", "Number", "Precision", "Recall", "F1-score"
        );
        for (category, s) in &self.categories {
            let _ = writeln!(
                out,
                "{:<18} {:>6} {:>10} {:>8} {:>9}",
                category.name(),
                s.number(),
                pct(s.precision),
                pct(s.recall),
                pct(s.f1)
            );
        }
        out
    }
}

/// Scores the four classified categories.
pub fn score(predictions: &[CategorySet], gold: &[CategorySet]) -> Result<Prf1Report, ClassifierError> {
    score_categories(predictions, gold, &CLASSIFIED)
}

/// Binary-classification counts and P/R/F1 for each of `categories`.
pub fn score_categories(
    predictions: &[CategorySet],
    gold: &[CategorySet],
    categories: &[FunctionCategory],
) -> Result<Prf1Report, ClassifierError> {
    if predictions.len() != gold.len() {
        return Err(ClassifierError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let mut report = Prf1Report::default();
    for &category in categories {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (p, g) in predictions.iter().zip(gold) {
            match (p.contains(category), g.contains(category)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        report
            .categories
            .insert(category, CategoryScore::from_counts(tp, fp, fn_, tn));
    }
    Ok(report)
}
