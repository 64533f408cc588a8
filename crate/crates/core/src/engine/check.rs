use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clause::Clause;
use crate::llm::RankedFunctionList;
use crate::model::{BuildingModel, Entity, Value};
use crate::registry::{FunctionRegistry, FunctionSpec, ObjectKind};

use super::atomic::{check_call, eval_atomic, Arg, AtomicCall, EngineConfig, ResultType, RuntimeValue, Shape};
use super::EngineError;

pub const CHECKS_SCHEMA: &str = "funcmapper.checks/1";
pub const PASS_LINE: &str = "Pass the check!";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm")]
    Millimetre,
    #[serde(rename = "cm")]
    Centimetre,
    #[serde(rename = "m")]
    Metre,
    #[serde(rename = "mm2")]
    SquareMillimetre,
    #[serde(rename = "m2")]
    SquareMetre,
}

impl Unit {
    /// Factor converting to millimetres (or square millimetres).
    pub fn factor(self) -> f64 {
        match self {
            Unit::Millimetre | Unit::SquareMillimetre => 1.0,
            Unit::Centimetre => 10.0,
            Unit::Metre => 1000.0,
            Unit::SquareMetre => 1_000_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = "=", alias = "==")]
    Eq,
    #[serde(rename = "!=", alias = "≠")]
    Ne,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    fn apply(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggOp {
    Min,
    Max,
    Sum,
}

/// Expression tree of a check body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Literal {
        value: Value,
    },
    /// A length or area threshold, normalised to millimetres.
    Quantity {
        value: f64,
        unit: Unit,
    },
    Var {
        name: String,
    },
    Call {
        function: String,
        args: Vec<Expr>,
    },
    Count {
        of: Box<Expr>,
    },
    Filter {
        over: Box<Expr>,
        var: String,
        #[serde(rename = "where")]
        predicate: Box<Expr>,
    },
    Aggregate {
        agg: AggOp,
        over: Box<Expr>,
        var: String,
        body: Box<Expr>,
    },
    /// Aggregate over unordered pairs of distinct members.
    Pairwise {
        agg: AggOp,
        over: Box<Expr>,
        a: String,
        b: String,
        body: Box<Expr>,
    },
    Compare {
        cmp: CmpOp,
        left: Box<Expr>,
        right: Box<Expr>,
        /// When set, the left-hand value is recorded as a witness.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    And {
        args: Vec<Expr>,
    },
    Or {
        args: Vec<Expr>,
    },
    Not {
        arg: Box<Expr>,
    },
    /// Placeholder left for an expert to fill in.
    Hole {
        note: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyPredicate {
    pub name: String,
    pub equals: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeSelector {
    pub kind: ObjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<PropertyPredicate>,
    /// Variable the scoped entity is bound to; defaults to the kind word.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
}

impl ScopeSelector {
    pub fn var_name(&self) -> &str {
        self.var.as_deref().unwrap_or(self.kind.word())
    }

    pub fn matches(&self, entity: &Entity) -> bool {
        entity.kind == self.kind
            && self.class_tag.as_ref().is_none_or(|t| &entity.class_tag == t)
            && self
                .property
                .as_ref()
                .is_none_or(|p| entity.properties.get(&p.name) == Some(&p.equals))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub id: String,
    pub description: String,
    pub scope: ScopeSelector,
    pub body: Expr,
}

#[derive(Serialize, Deserialize)]
struct ChecksDocument {
    schema: String,
    checks: Vec<CheckSpec>,
}

impl CheckSpec {
    pub fn list_from_json(text: &str) -> Result<Vec<CheckSpec>, EngineError> {
        let doc: ChecksDocument = serde_json::from_str(text).map_err(|e| EngineError::Syntax(e.to_string()))?;
        if doc.schema != CHECKS_SCHEMA {
            return Err(EngineError::Syntax(format!("unsupported schema `{}`", doc.schema)));
        }
        Ok(doc.checks)
    }

    pub fn list_to_json(checks: &[CheckSpec]) -> String {
        let doc = ChecksDocument {
            schema: CHECKS_SCHEMA.into(),
            checks: checks.to_vec(),
        };
        serde_json::to_string_pretty(&doc).expect("checks serialize")
    }
}

// ------------------------------------------------------------- typing

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    Number,
    Text,
    /// Property value of unknown kind.
    Any,
    Entity(ObjectKind),
    Entities(ObjectKind),
}

impl Ty {
    fn numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Number | Ty::Any)
    }

    fn boolean(self) -> bool {
        matches!(self, Ty::Bool | Ty::Any)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Entity(k) => write!(f, "{k}"),
            Ty::Entities(k) => write!(f, "collection of {k}"),
            other => write!(f, "{}", format!("{other:?}").to_lowercase()),
        }
    }
}

fn shape(ty: Ty) -> Shape {
    match ty {
        Ty::Entity(k) => Shape::Entity(k),
        Ty::Entities(k) => Shape::Entities(k),
        Ty::Text => Shape::Literal,
        _ => Shape::Other,
    }
}

fn resolve<'r>(registry: &'r FunctionRegistry, function: &str) -> Result<&'r FunctionSpec, EngineError> {
    registry
        .resolve(function)
        .ok_or_else(|| EngineError::UnresolvedKey(function.to_string()))
}

fn type_of(expr: &Expr, env: &mut Vec<(String, Ty)>, registry: &FunctionRegistry) -> Result<Ty, EngineError> {
    let collection = |ty: Ty, what: &str| match ty {
        Ty::Entities(k) => Ok(k),
        other => Err(EngineError::Type(format!("{what} expects a collection, found {other}"))),
    };
    Ok(match expr {
        Expr::Literal { value } => match value {
            Value::Flag(_) => Ty::Bool,
            Value::Number(_) => Ty::Number,
            Value::Text(_) => Ty::Text,
        },
        Expr::Quantity { .. } => Ty::Number,
        Expr::Var { name } => env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| EngineError::UnknownVariable(name.clone()))?,
        Expr::Call { function, args } => {
            let spec = resolve(registry, function)?;
            let mut shapes = Vec::with_capacity(args.len());
            for arg in args {
                shapes.push(shape(type_of(arg, env, registry)?));
            }
            match check_call(spec, &shapes)? {
                ResultType::Bool => Ty::Bool,
                ResultType::Int => Ty::Int,
                ResultType::Number => Ty::Number,
                ResultType::Text => Ty::Text,
                ResultType::Any => Ty::Any,
                ResultType::Entities(k) => Ty::Entities(k),
            }
        }
        Expr::Count { of } => {
            collection(type_of(of, env, registry)?, "count")?;
            Ty::Int
        }
        Expr::Filter { over, var, predicate } => {
            let kind = collection(type_of(over, env, registry)?, "filter")?;
            env.push((var.clone(), Ty::Entity(kind)));
            let p = type_of(predicate, env, registry);
            env.pop();
            if !p?.boolean() {
                return Err(EngineError::Type("filter predicate must be boolean".into()));
            }
            Ty::Entities(kind)
        }
        Expr::Aggregate { over, var, body, .. } => {
            let kind = collection(type_of(over, env, registry)?, "aggregate")?;
            env.push((var.clone(), Ty::Entity(kind)));
            let b = type_of(body, env, registry);
            env.pop();
            if !b?.numeric() {
                return Err(EngineError::Type("aggregate body must be numeric".into()));
            }
            Ty::Number
        }
        Expr::Pairwise { over, a, b, body, .. } => {
            let kind = collection(type_of(over, env, registry)?, "pairwise aggregate")?;
            env.push((a.clone(), Ty::Entity(kind)));
            env.push((b.clone(), Ty::Entity(kind)));
            let t = type_of(body, env, registry);
            env.truncate(env.len() - 2);
            if !t?.numeric() {
                return Err(EngineError::Type("pairwise aggregate body must be numeric".into()));
            }
            Ty::Number
        }
        Expr::Compare { cmp, left, right, .. } => {
            let l = type_of(left, env, registry)?;
            let r = type_of(right, env, registry)?;
            let ok = (l.numeric() && r.numeric())
                || (cmp.is_equality()
                    && (l == r || l == Ty::Any || r == Ty::Any)
                    && !matches!(l, Ty::Entities(_)));
            if !ok {
                return Err(EngineError::Type(format!("cannot compare {l} with {r}")));
            }
            Ty::Bool
        }
        Expr::And { args } | Expr::Or { args } => {
            for arg in args {
                if !type_of(arg, env, registry)?.boolean() {
                    return Err(EngineError::Type("boolean connective over a non-boolean".into()));
                }
            }
            Ty::Bool
        }
        Expr::Not { arg } => {
            if !type_of(arg, env, registry)?.boolean() {
                return Err(EngineError::Type("negation of a non-boolean".into()));
            }
            Ty::Bool
        }
        Expr::Hole { note } => return Err(EngineError::Incomplete(note.clone())),
    })
}

/// Type-checks a check body. The body must be boolean.
pub fn type_check(spec: &CheckSpec, registry: &FunctionRegistry) -> Result<(), EngineError> {
    if !spec.scope.kind.is_checked() {
        return Err(EngineError::Type(format!("scope kind {} is not a checked kind", spec.scope.kind)));
    }
    let mut env = vec![(spec.scope.var_name().to_string(), Ty::Entity(spec.scope.kind))];
    match type_of(&spec.body, &mut env, registry)? {
        Ty::Bool | Ty::Any => Ok(()),
        other => Err(EngineError::Type(format!("check body must be boolean, found {other}"))),
    }
}

// ---------------------------------------------------------- evaluation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub value: String,
    /// Set when the value is a finite number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<f64>,
}

struct Evaluator<'a> {
    model: &'a BuildingModel,
    registry: &'a FunctionRegistry,
    config: &'a EngineConfig,
    env: Vec<(String, RuntimeValue)>,
    witnesses: Vec<Witness>,
}

impl Evaluator<'_> {
    fn eval(&mut self, expr: &Expr) -> Result<RuntimeValue, EngineError> {
        Ok(match expr {
            Expr::Literal { value } => RuntimeValue::from(value),
            Expr::Quantity { value, unit } => RuntimeValue::Number(value * unit.factor()),
            Expr::Var { name } => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| EngineError::UnknownVariable(name.clone()))?,
            Expr::Call { function, args } => {
                let spec = resolve(self.registry, function)?;
                let mut call_args = Vec::with_capacity(args.len());
                for arg in args {
                    call_args.push(match self.eval(arg)? {
                        RuntimeValue::Entity(id) => Arg::Entity(id),
                        RuntimeValue::Entities(ids) => Arg::Entities(ids),
                        RuntimeValue::Text(s) => Arg::Literal(s),
                        other => return Err(EngineError::Type(format!("{other} cannot be a call argument"))),
                    });
                }
                let call = AtomicCall {
                    key: spec.key(),
                    args: call_args,
                };
                eval_atomic(self.model, self.registry, &call, self.config)?
            }
            Expr::Count { of } => RuntimeValue::Int(self.members(of)?.len() as i64),
            Expr::Filter { over, var, predicate } => {
                let mut kept = Vec::new();
                for id in self.members(over)? {
                    if self.with_bound(&[(var, &id)], |ev| ev.eval(predicate))? == RuntimeValue::Bool(true) {
                        kept.push(id);
                    }
                }
                RuntimeValue::Entities(kept)
            }
            Expr::Aggregate { agg, over, var, body } => {
                let mut values = Vec::new();
                for id in self.members(over)? {
                    values.push(self.number(|ev| ev.with_bound(&[(var, &id)], |ev| ev.eval(body)))?);
                }
                RuntimeValue::Number(fold(*agg, values))
            }
            Expr::Pairwise { agg, over, a, b, body } => {
                let members = self.members(over)?;
                let mut values = Vec::new();
                for i in 0..members.len() {
                    for j in i + 1..members.len() {
                        let bound = [(a, &members[i]), (b, &members[j])];
                        values.push(self.number(|ev| ev.with_bound(&bound, |ev| ev.eval(body)))?);
                    }
                }
                RuntimeValue::Number(fold(*agg, values))
            }
            Expr::Compare { cmp, left, right, label } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                if let Some(label) = label {
                    self.witnesses.push(Witness {
                        label: label.clone(),
                        value: l.to_string(),
                        number: l.as_f64().filter(|n| n.is_finite()),
                    });
                }
                RuntimeValue::Bool(compare(*cmp, &l, &r)?)
            }
            Expr::And { args } => {
                for arg in args {
                    if !self.truth(arg)? {
                        return Ok(RuntimeValue::Bool(false));
                    }
                }
                RuntimeValue::Bool(true)
            }
            Expr::Or { args } => {
                for arg in args {
                    if self.truth(arg)? {
                        return Ok(RuntimeValue::Bool(true));
                    }
                }
                RuntimeValue::Bool(false)
            }
            Expr::Not { arg } => RuntimeValue::Bool(!self.truth(arg)?),
            Expr::Hole { note } => return Err(EngineError::Incomplete(note.clone())),
        })
    }

    fn with_bound<T>(
        &mut self,
        bindings: &[(&String, &String)],
        f: impl FnOnce(&mut Self) -> Result<T, EngineError>,
    ) -> Result<T, EngineError> {
        for (name, id) in bindings {
            self.env.push(((*name).clone(), RuntimeValue::Entity((*id).clone())));
        }
        let out = f(self);
        self.env.truncate(self.env.len() - bindings.len());
        out
    }

    fn members(&mut self, expr: &Expr) -> Result<Vec<String>, EngineError> {
        match self.eval(expr)? {
            RuntimeValue::Entities(ids) => Ok(ids),
            other => Err(EngineError::Type(format!("expected a collection, found {other}"))),
        }
    }

    fn number(&mut self, f: impl FnOnce(&mut Self) -> Result<RuntimeValue, EngineError>) -> Result<f64, EngineError> {
        let v = f(self)?;
        v.as_f64()
            .ok_or_else(|| EngineError::Type(format!("expected a number, found {v}")))
    }

    fn truth(&mut self, expr: &Expr) -> Result<bool, EngineError> {
        match self.eval(expr)? {
            RuntimeValue::Bool(b) => Ok(b),
            other => Err(EngineError::Type(format!("expected a boolean, found {other}"))),
        }
    }
}

/// Empty min is +inf and empty max is -inf, so comparisons over an empty
/// set hold vacuously.
fn fold(agg: AggOp, values: Vec<f64>) -> f64 {
    match agg {
        AggOp::Min => values.into_iter().fold(f64::INFINITY, f64::min),
        AggOp::Max => values.into_iter().fold(f64::NEG_INFINITY, f64::max),
        AggOp::Sum => values.into_iter().sum(),
    }
}

fn compare(cmp: CmpOp, l: &RuntimeValue, r: &RuntimeValue) -> Result<bool, EngineError> {
    if let (Some(a), Some(b)) = (l.as_f64(), r.as_f64()) {
        return a
            .partial_cmp(&b)
            .map(|o| cmp.apply(o))
            .ok_or_else(|| EngineError::Type("comparison with NaN".into()));
    }
    let equal = match (l, r) {
        (RuntimeValue::Absent, _) | (_, RuntimeValue::Absent) => false,
        _ => l == r,
    };
    match cmp {
        CmpOp::Eq => Ok(equal),
        CmpOp::Ne => Ok(!equal),
        _ if matches!(l, RuntimeValue::Absent) || matches!(r, RuntimeValue::Absent) => Ok(false),
        _ => Err(EngineError::Type(format!("cannot order {l} and {r}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityOutcome {
    pub global_id: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub scope_kind: ObjectKind,
    /// One entry per scoped entity, ordered by id.
    pub entities: Vec<EntityOutcome>,
    /// True when the scope selected no entity.
    pub vacuous: bool,
    pub passed: bool,
}

impl CheckResult {
    pub fn outcome(&self, id: &str) -> Option<&EntityOutcome> {
        self.entities.iter().find(|e| e.global_id == id)
    }

    /// Human-readable verdict lines.
    pub fn lines(&self) -> Vec<String> {
        if self.passed {
            return vec![PASS_LINE.to_string()];
        }
        let kind = self.scope_kind.word();
        self.entities
            .iter()
            .filter_map(|e| match e.verdict {
                Verdict::Pass => None,
                Verdict::Fail => Some(format!("The {kind} with id: {} not pass the checking!", e.global_id)),
                Verdict::Error => Some(format!(
                    "The {kind} with id: {} could not be checked: {}",
                    e.global_id,
                    e.error.as_deref().unwrap_or("unknown error")
                )),
            })
            .collect()
    }
}

/// Runs `spec` over every entity its scope selects. An evaluation error on
/// one entity marks only that entity.
pub fn run_check(
    model: &BuildingModel,
    spec: &CheckSpec,
    registry: &FunctionRegistry,
    config: &EngineConfig,
) -> Result<CheckResult, EngineError> {
    type_check(spec, registry)?;
    let mut entities = Vec::new();
    for entity in model.entities().filter(|e| spec.scope.matches(e)) {
        let mut ev = Evaluator {
            model,
            registry,
            config,
            env: vec![(
                spec.scope.var_name().to_string(),
                RuntimeValue::Entity(entity.global_id.clone()),
            )],
            witnesses: Vec::new(),
        };
        let (verdict, error) = match ev.truth(&spec.body) {
            Ok(true) => (Verdict::Pass, None),
            Ok(false) => (Verdict::Fail, None),
            Err(e) => (Verdict::Error, Some(e.to_string())),
        };
        entities.push(EntityOutcome {
            global_id: entity.global_id.clone(),
            verdict,
            witnesses: ev.witnesses,
            error,
        });
    }
    Ok(CheckResult {
        check_id: spec.id.clone(),
        scope_kind: spec.scope.kind,
        vacuous: entities.is_empty(),
        passed: entities.iter().all(|e| e.verdict == Verdict::Pass),
        entities,
    })
}

// ------------------------------------------------------------ skeletons

/// A partially filled check built from identified functions, for an expert
/// to complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSkeleton {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<ScopeSelector>,
    /// The identified calls with every slot a hole, followed by a hole for
    /// the comparison. Absent when nothing resolved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Expr>,
    pub diagnostics: Vec<String>,
}

impl CheckSkeleton {
    pub fn calls(&self) -> Vec<&str> {
        match &self.body {
            Some(Expr::And { args }) => args
                .iter()
                .filter_map(|e| match e {
                    Expr::Call { function, .. } => Some(function.as_str()),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

pub fn compile_identifications(
    clause: &Clause,
    identified: &RankedFunctionList,
    registry: &FunctionRegistry,
) -> CheckSkeleton {
    let mut diagnostics = Vec::new();
    let mut calls = Vec::new();
    let mut scope_kind = None;
    for item in &identified.items {
        let Some(spec) = item.resolved_key.as_ref().filter(|_| item.in_registry).and_then(|k| registry.get(k)) else {
            diagnostics.push(format!("`{}` does not resolve in the registry; left out", item.raw_text));
            continue;
        };
        if scope_kind.is_none() {
            scope_kind = spec.signature.kinds().find(|k| k.is_checked());
        }
        calls.push(Expr::Call {
            function: spec.signature.render(),
            args: spec
                .signature
                .params
                .iter()
                .map(|p| Expr::Hole {
                    note: format!("{} {}", p.kind, p.name),
                })
                .collect(),
        });
    }
    if identified.is_empty() {
        diagnostics.push("no functions were identified".into());
    }
    let body = (!calls.is_empty()).then(|| {
        calls.push(Expr::Hole {
            note: "combine the calls above and add the comparison".into(),
        });
        Expr::And { args: calls }
    });
    CheckSkeleton {
        id: clause.id.clone(),
        description: clause.text.clone(),
        scope: scope_kind.map(|kind| ScopeSelector {
            kind,
            class_tag: None,
            property: None,
            var: None,
        }),
        body,
        diagnostics,
    }
}
