//! The atomic function database.
//!
//! A [`FunctionRegistry`] is loaded from a human-editable TOML document (see
//! `data/registry.toml`) and is immutable afterwards. Every other stage of the
//! pipeline refers to functions through their [`CanonicalKey`]: the lowercased
//! name plus the ordered parameter kinds. Parameter identifiers (`a`, `b`, ...)
//! and letter case are not part of a function's identity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const REGISTRY_SCHEMA: &str = "funcmapper.registry/1";

/// Kind of a function parameter.
///
/// The first five variants are the objects a clause can constrain. `Type`,
/// `Direction`, `Orientation` and `Property` are auxiliary parameters whose
/// values are free-form strings at call time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Building,
    Space,
    Element,
    Equipment,
    Goods,
    Type,
    Direction,
    Orientation,
    Property,
}

impl ObjectKind {
    pub const CHECKED: [ObjectKind; 5] = [
        ObjectKind::Building,
        ObjectKind::Space,
        ObjectKind::Element,
        ObjectKind::Equipment,
        ObjectKind::Goods,
    ];

    pub const ALL: [ObjectKind; 9] = [
        ObjectKind::Building,
        ObjectKind::Space,
        ObjectKind::Element,
        ObjectKind::Equipment,
        ObjectKind::Goods,
        ObjectKind::Type,
        ObjectKind::Direction,
        ObjectKind::Orientation,
        ObjectKind::Property,
    ];

    pub fn is_checked(self) -> bool {
        Self::CHECKED.contains(&self)
    }

    /// The lowercase word used in signature strings.
    pub fn word(self) -> &'static str {
        match self {
            ObjectKind::Building => "building",
            ObjectKind::Space => "space",
            ObjectKind::Element => "element",
            ObjectKind::Equipment => "equipment",
            ObjectKind::Goods => "goods",
            ObjectKind::Type => "type",
            ObjectKind::Direction => "direction",
            ObjectKind::Orientation => "orientation",
            ObjectKind::Property => "property",
        }
    }

    /// Case-insensitive lookup of a kind word. "system and equipment" is an
    /// accepted spelling of [`ObjectKind::Equipment`].
    pub fn from_word(word: &str) -> Option<Self> {
        let normalized = word.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let kind = match normalized.as_str() {
            "building" => ObjectKind::Building,
            "space" => ObjectKind::Space,
            "element" => ObjectKind::Element,
            "equipment" | "system and equipment" => ObjectKind::Equipment,
            "goods" => ObjectKind::Goods,
            "type" => ObjectKind::Type,
            "direction" => ObjectKind::Direction,
            "orientation" => ObjectKind::Orientation,
            "property" => ObjectKind::Property,
            _ => return None,
        };
        Some(kind)
    }

    /// Kind as it participates in a canonical key. `property b` and `type b`
    /// name the same free-form string slot.
    fn key_kind(self) -> ObjectKind {
        match self {
            ObjectKind::Property => ObjectKind::Type,
            other => other,
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionCategory {
    Property,
    SpaceLocation,
    Existence,
    Quantity,
    Geometry,
    Distance,
    WindowWallRatio,
    Area,
}

impl FunctionCategory {
    pub const ALL: [FunctionCategory; 8] = [
        FunctionCategory::Property,
        FunctionCategory::SpaceLocation,
        FunctionCategory::Existence,
        FunctionCategory::Quantity,
        FunctionCategory::Geometry,
        FunctionCategory::Distance,
        FunctionCategory::WindowWallRatio,
        FunctionCategory::Area,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionCategory::Property => "property",
            FunctionCategory::SpaceLocation => "space_location",
            FunctionCategory::Existence => "existence",
            FunctionCategory::Quantity => "quantity",
            FunctionCategory::Geometry => "geometry",
            FunctionCategory::Distance => "distance",
            FunctionCategory::WindowWallRatio => "window_wall_ratio",
            FunctionCategory::Area => "area",
        }
    }
}

impl fmt::Display for FunctionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_lowercase().replace([' ', '-'], "_");
        let normalized = match normalized.as_str() {
            "wall_window_ratio" | "window_to_wall_ratio" => "window_wall_ratio",
            other => other,
        };
        FunctionCategory::ALL
            .into_iter()
            .find(|c| c.name() == normalized)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

/// A single output value kind from the OUTPUT column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    Boolean,
    Integer,
    Float,
    String,
    Collection,
}

impl ValueKind {
    fn parse(word: &str) -> Option<Self> {
        match word.trim().to_lowercase().as_str() {
            "boolean" | "bool" => Some(ValueKind::Boolean),
            "integer" | "int" => Some(ValueKind::Integer),
            "float" => Some(ValueKind::Float),
            "string" => Some(ValueKind::String),
            "collection" => Some(ValueKind::Collection),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ValueKind::Boolean => "Boolean",
            ValueKind::Integer => "Integer",
            ValueKind::Float => "Float",
            ValueKind::String => "String",
            ValueKind::Collection => "Collection",
        }
    }
}

/// Declared output of a function. Several rows of the source table declare a
/// union such as `Boolean/Collection`; those are kept as unions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutputKind {
    Single(ValueKind),
    Union(Vec<ValueKind>),
}

impl OutputKind {
    pub fn parse(text: &str) -> Option<Self> {
        let members = text
            .split('/')
            .map(ValueKind::parse)
            .collect::<Option<Vec<_>>>()?;
        match members.as_slice() {
            [] => None,
            [single] => Some(OutputKind::Single(*single)),
            _ => Some(OutputKind::Union(members)),
        }
    }

    pub fn members(&self) -> &[ValueKind] {
        match self {
            OutputKind::Single(kind) => std::slice::from_ref(kind),
            OutputKind::Union(kinds) => kinds,
        }
    }

    pub fn contains(&self, kind: ValueKind) -> bool {
        self.members().contains(&kind)
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.members().iter().map(|k| k.label()).collect();
        f.write_str(&labels.join("/"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub kind: ObjectKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSignature {
    pub name: String,
    pub params: Vec<Param>,
    pub output: Option<OutputKind>,
}

impl FunctionSignature {
    pub fn kinds(&self) -> impl Iterator<Item = ObjectKind> + '_ {
        self.params.iter().map(|p| p.kind)
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        canonical_key(self)
    }

    /// Renders the signature as `name(kind a, kind b)`; parameters without an
    /// identifier render as the bare kind word.
    pub fn render(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| {
                if p.name.is_empty() {
                    p.kind.word().to_string()
                } else {
                    format!("{} {}", p.kind.word(), p.name)
                }
            })
            .collect();
        format!("{}({})", self.name, params.join(", "))
    }
}

impl fmt::Display for FunctionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for FunctionSignature {
    type Err = SignatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_signature(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("unbalanced parentheses in `{0}`")]
    UnbalancedParens(String),
    #[error("empty function name in `{0}`")]
    EmptyName(String),
    #[error("function name `{0}` must start with get, is or has")]
    InvalidName(String),
    #[error("function `{0}` has no parameters")]
    NoParams(String),
    #[error("unknown parameter kind `{word}` in `{text}`")]
    UnknownKind { word: String, text: String },
}

const VERBS: [&str; 3] = ["get", "is", "has"];

fn is_verb_initial(name: &str) -> bool {
    VERBS.iter().any(|verb| {
        name.strip_prefix(verb)
            .and_then(|rest| rest.chars().next())
            .is_some_and(|c| c.is_ascii_uppercase())
    })
}

/// Parses `name(kind ident, kind ident, ...)`.
///
/// Whitespace is tolerated anywhere, kind words are case-insensitive, the
/// identifier after a kind word is optional and "system and equipment" maps
/// to [`ObjectKind::Equipment`]. The registry is not consulted.
pub fn parse_signature(text: &str) -> Result<FunctionSignature, SignatureError> {
    let trimmed = text.trim().trim_end_matches(';').trim();
    let open = trimmed.find('(');
    let close = trimmed.rfind(')');
    let (open, close) = match (open, close) {
        (Some(o), Some(c)) if o < c => (o, c),
        _ => return Err(SignatureError::UnbalancedParens(text.to_string())),
    };
    let inner = &trimmed[open + 1..close];
    if inner.contains(['(', ')']) || !trimmed[close + 1..].trim().is_empty() {
        return Err(SignatureError::UnbalancedParens(text.to_string()));
    }
    let name: String = trimmed[..open].split_whitespace().collect();
    if name.is_empty() {
        return Err(SignatureError::EmptyName(text.to_string()));
    }
    if !is_verb_initial(&name) {
        return Err(SignatureError::InvalidName(name));
    }

    let mut params = Vec::new();
    for raw in inner.split(',') {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        params.push(parse_param(raw, text)?);
    }
    if params.is_empty() {
        return Err(SignatureError::NoParams(name));
    }
    Ok(FunctionSignature {
        name,
        params,
        output: None,
    })
}

fn parse_param(raw: &str, text: &str) -> Result<Param, SignatureError> {
    if let Some(kind) = ObjectKind::from_word(raw) {
        return Ok(Param {
            name: String::new(),
            kind,
        });
    }
    let words: Vec<&str> = raw.split_whitespace().collect();
    if words.len() >= 2 {
        let (ident, kind_words) = words.split_last().expect("at least two words");
        if let Some(kind) = ObjectKind::from_word(&kind_words.join(" ")) {
            return Ok(Param {
                name: ident.to_string(),
                kind,
            });
        }
        return Err(SignatureError::UnknownKind {
            word: kind_words.join(" "),
            text: text.to_string(),
        });
    }
    Err(SignatureError::UnknownKind {
        word: raw.to_string(),
        text: text.to_string(),
    })
}

/// Function identity: lowercased name plus ordered parameter kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Parses a signature string and returns its key.
    pub fn from_signature(text: &str) -> Result<Self, SignatureError> {
        parse_signature(text).map(|sig| canonical_key(&sig))
    }

    /// Lowercased function name part of the key.
    pub fn name(&self) -> &str {
        self.0.split('(').next().unwrap_or_default()
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn canonical_key(sig: &FunctionSignature) -> CanonicalKey {
    let kinds: Vec<&str> = sig.kinds().map(|k| k.key_kind().word()).collect();
    CanonicalKey(format!("{}({})", sig.name.to_lowercase(), kinds.join(",")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub signature: FunctionSignature,
    pub category: FunctionCategory,
    /// The OBJECT column as written, e.g. `Space&Element`.
    pub object: String,
    pub description: String,
    pub order: Order,
    pub exemplar_phrases: Vec<String>,
}

impl FunctionSpec {
    pub fn key(&self) -> CanonicalKey {
        self.signature.canonical_key()
    }

    pub fn output(&self) -> &OutputKind {
        self.signature
            .output
            .as_ref()
            .expect("registry specs always carry an output kind")
    }
}

/// Expected counts carried in the registry document header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub total: usize,
    pub low_order: usize,
    pub high_order: usize,
    #[serde(default)]
    pub categories: BTreeMap<FunctionCategory, usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("registry document does not parse: {0}")]
    Syntax(String),
    #[error("unsupported registry schema `{0}`")]
    Schema(String),
    #[error("row {row}: field {field}: {message}")]
    MalformedRow {
        row: usize,
        field: &'static str,
        message: String,
    },
    #[error("row {row}: unknown category `{value}`")]
    UnknownCategory { row: usize, value: String },
    #[error("row {row}: {source}")]
    Signature {
        row: usize,
        #[source]
        source: SignatureError,
    },
    #[error("row {row}: duplicate function {key} (first defined at row {first})")]
    DuplicateKey {
        row: usize,
        first: usize,
        key: CanonicalKey,
    },
    #[error("manifest expects {expected} for {what}, document has {actual}")]
    ManifestMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryDocument {
    schema: Option<String>,
    manifest: Option<Manifest>,
    #[serde(default)]
    function: Vec<RawRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    #[serde(rename = "CATEGORY")]
    category: Option<String>,
    #[serde(rename = "OBJECT", default)]
    object: String,
    #[serde(rename = "OUTPUT")]
    output: Option<String>,
    #[serde(rename = "FUNCTION_NAME")]
    function_name: Option<String>,
    #[serde(rename = "DESCRIPTION")]
    description: Option<String>,
    #[serde(rename = "ORDER")]
    order: Option<String>,
    #[serde(rename = "EXAMPLES", default)]
    examples: Vec<String>,
}

/// Immutable set of atomic functions with lookup by canonical key.
#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    specs: Vec<FunctionSpec>,
    index: HashMap<CanonicalKey, usize>,
    manifest: Option<Manifest>,
}

impl FunctionRegistry {
    /// Parses and validates a registry document. Rows are numbered from 1.
    pub fn load(source: &str) -> Result<Self, RegistryError> {
        let doc: RegistryDocument =
            toml::from_str(source).map_err(|e| RegistryError::Syntax(e.to_string()))?;
        if let Some(schema) = &doc.schema {
            if schema != REGISTRY_SCHEMA {
                return Err(RegistryError::Schema(schema.clone()));
            }
        }
        let mut registry = FunctionRegistry::default();
        for (i, raw) in doc.function.into_iter().enumerate() {
            let row = i + 1;
            let spec = spec_from_row(row, raw)?;
            registry.push(row, spec)?;
        }
        if let Some(manifest) = doc.manifest {
            registry.check_manifest(&manifest)?;
            registry.manifest = Some(manifest);
        }
        Ok(registry)
    }

    /// Builds a registry from already constructed specs.
    pub fn from_specs(specs: Vec<FunctionSpec>) -> Result<Self, RegistryError> {
        let mut registry = FunctionRegistry::default();
        for (i, spec) in specs.into_iter().enumerate() {
            registry.push(i + 1, spec)?;
        }
        Ok(registry)
    }

    fn push(&mut self, row: usize, spec: FunctionSpec) -> Result<(), RegistryError> {
        let key = spec.key();
        if let Some(&first) = self.index.get(&key) {
            return Err(RegistryError::DuplicateKey {
                row,
                first: first + 1,
                key,
            });
        }
        self.index.insert(key, self.specs.len());
        self.specs.push(spec);
        Ok(())
    }

    fn check_manifest(&self, manifest: &Manifest) -> Result<(), RegistryError> {
        let mismatch = |what: &str, expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(RegistryError::ManifestMismatch {
                    what: what.to_string(),
                    expected,
                    actual,
                })
            }
        };
        mismatch("total", manifest.total, self.len())?;
        mismatch("low_order", manifest.low_order, self.count_order(Order::Low))?;
        mismatch("high_order", manifest.high_order, self.count_order(Order::High))?;
        let counts = self.category_counts();
        for (category, expected) in &manifest.categories {
            let actual = counts.get(category).copied().unwrap_or(0);
            mismatch(category.name(), *expected, actual)?;
        }
        Ok(())
    }

    pub fn specs(&self) -> &[FunctionSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn manifest(&self) -> Option<&Manifest> {
        self.manifest.as_ref()
    }

    pub fn get(&self, key: &CanonicalKey) -> Option<&FunctionSpec> {
        self.index.get(key).map(|&i| &self.specs[i])
    }

    pub fn contains(&self, key: &CanonicalKey) -> bool {
        self.index.contains_key(key)
    }

    /// Parses `signature` and looks it up.
    pub fn resolve(&self, signature: &str) -> Option<&FunctionSpec> {
        CanonicalKey::from_signature(signature)
            .ok()
            .and_then(|key| self.get(&key))
    }

    pub fn categories(&self) -> BTreeSet<FunctionCategory> {
        self.specs.iter().map(|s| s.category).collect()
    }

    pub fn category_counts(&self) -> BTreeMap<FunctionCategory, usize> {
        let mut counts = BTreeMap::new();
        for spec in &self.specs {
            *counts.entry(spec.category).or_insert(0) += 1;
        }
        counts
    }

    pub fn count_order(&self, order: Order) -> usize {
        self.specs.iter().filter(|s| s.order == order).count()
    }

    /// Specs matching every facet of `filter`, in registry order.
    pub fn query(&self, filter: &RegistryFilter) -> Vec<&FunctionSpec> {
        self.specs.iter().filter(|s| filter.matches(s)).collect()
    }
}

fn spec_from_row(row: usize, raw: RawRow) -> Result<FunctionSpec, RegistryError> {
    fn required(
        row: usize,
        field: &'static str,
        value: Option<String>,
    ) -> Result<String, RegistryError> {
        match value {
            Some(v) if !v.trim().is_empty() => Ok(v.trim().to_string()),
            _ => Err(RegistryError::MalformedRow {
                row,
                field,
                message: "missing or empty".into(),
            }),
        }
    }

    let category_text = required(row, "CATEGORY", raw.category)?;
    let category = category_text
        .parse::<FunctionCategory>()
        .map_err(|_| RegistryError::UnknownCategory {
            row,
            value: category_text.clone(),
        })?;
    let output_text = required(row, "OUTPUT", raw.output)?;
    let output = OutputKind::parse(&output_text).ok_or_else(|| RegistryError::MalformedRow {
        row,
        field: "OUTPUT",
        message: format!("unknown output kind `{output_text}`"),
    })?;
    let name_text = required(row, "FUNCTION_NAME", raw.function_name)?;
    let mut signature =
        parse_signature(&name_text).map_err(|source| RegistryError::Signature { row, source })?;
    signature.output = Some(output);
    let description = required(row, "DESCRIPTION", raw.description)?;
    let order = match raw.order.as_deref().map(str::trim) {
        None | Some("high") => Order::High,
        Some("low") => Order::Low,
        Some(other) => {
            return Err(RegistryError::MalformedRow {
                row,
                field: "ORDER",
                message: format!("expected `low` or `high`, got `{other}`"),
            })
        }
    };
    if order == Order::Low && category != FunctionCategory::Property {
        return Err(RegistryError::MalformedRow {
            row,
            field: "ORDER",
            message: "only property functions may be low-order".into(),
        });
    }
    if raw.examples.iter().any(|e| e.trim().is_empty()) {
        return Err(RegistryError::MalformedRow {
            row,
            field: "EXAMPLES",
            message: "empty example phrase".into(),
        });
    }
    Ok(FunctionSpec {
        signature,
        category,
        object: raw.object.trim().to_string(),
        description,
        order,
        exemplar_phrases: raw.examples,
    })
}

/// Query facets. `None` means "all" for that facet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegistryFilter {
    pub categories: Option<BTreeSet<FunctionCategory>>,
    pub object_kinds: Option<BTreeSet<ObjectKind>>,
    pub order: Option<Order>,
}

impl RegistryFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn categories(mut self, categories: impl IntoIterator<Item = FunctionCategory>) -> Self {
        self.categories = Some(categories.into_iter().collect());
        self
    }

    pub fn object_kinds(mut self, kinds: impl IntoIterator<Item = ObjectKind>) -> Self {
        self.object_kinds = Some(kinds.into_iter().collect());
        self
    }

    pub fn order(mut self, order: Order) -> Self {
        self.order = Some(order);
        self
    }

    pub fn matches(&self, spec: &FunctionSpec) -> bool {
        if let Some(categories) = &self.categories {
            if !categories.contains(&spec.category) {
                return false;
            }
        }
        if let Some(kinds) = &self.object_kinds {
            if !spec.signature.kinds().any(|k| kinds.contains(&k)) {
                return false;
            }
        }
        if let Some(order) = self.order {
            if spec.order != order {
                return false;
            }
        }
        true
    }
}
