use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Aabb, BuildingModel, Entity, ModelError, Value};
use crate::registry::{CanonicalKey, FunctionCategory, FunctionRegistry, FunctionSpec, ObjectKind, ValueKind};

use super::EngineError;

/// Functions that resolve and type-check but have no executable semantics.
pub const UNIMPLEMENTED: &[&str] = &[
    "isAccessible",
    "isVisibleFrom",
    "getAccessibleWithSpace",
    "isOpenDirection",
    "isFacedDirectly",
    "isEvenOpened",
    "isOpened",
    "isConnectedTo",
    "isGroupArranged",
];

pub const OVERALL: &str = "overall";
pub const LINEAR: &str = "linear";
pub const HORIZONTAL: &str = "horizontal";
pub const FOOTPRINT: &str = "footprint";
/// Matches any class tag in a `has*` or `getNumberOf*` literal argument.
pub const ANY_TAG: &str = "*";

const DISTANCE_TYPES: &[&str] = &[LINEAR, HORIZONTAL];
const FIREPROOF_TYPES: &[&str] = &[HORIZONTAL];
const DIRECTIONS: &[&str] = &["any", "north", "south", "east", "west"];
const ORIENTATIONS: &[&str] = &["north", "south", "east", "west"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub adjacency_tolerance_mm: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            adjacency_tolerance_mm: 50.0,
        }
    }
}

/// Result of an atomic call or expression. Lengths are millimetres and areas
/// square millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum RuntimeValue {
    Bool(bool),
    Int(i64),
    Number(f64),
    Text(String),
    Entity(String),
    Entities(Vec<String>),
    Absent,
}

impl RuntimeValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            RuntimeValue::Int(i) => Some(*i as f64),
            RuntimeValue::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl From<&Value> for RuntimeValue {
    fn from(value: &Value) -> Self {
        match value {
            Value::Flag(b) => RuntimeValue::Bool(*b),
            Value::Number(n) => RuntimeValue::Number(*n),
            Value::Text(s) => RuntimeValue::Text(s.clone()),
        }
    }
}

impl fmt::Display for RuntimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeValue::Bool(b) => write!(f, "{b}"),
            RuntimeValue::Int(i) => write!(f, "{i}"),
            RuntimeValue::Number(n) => write!(f, "{n}"),
            RuntimeValue::Text(s) => write!(f, "{s:?}"),
            RuntimeValue::Entity(id) => write!(f, "#{id}"),
            RuntimeValue::Entities(ids) => write!(f, "[{}]", ids.join(", ")),
            RuntimeValue::Absent => f.write_str("absent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Entity(String),
    Entities(Vec<String>),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicCall {
    pub key: CanonicalKey,
    pub args: Vec<Arg>,
}

impl AtomicCall {
    /// Builds a call from a signature string such as
    /// `getElementDistance(element a, element b, type c)`.
    pub fn new(signature: &str, args: Vec<Arg>) -> Result<Self, EngineError> {
        let key = CanonicalKey::from_signature(signature).map_err(|_| EngineError::UnresolvedKey(signature.into()))?;
        Ok(Self { key, args })
    }
}

/// Static shape of an argument, shared by the runtime check and the
/// CheckSpec type checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Entity(ObjectKind),
    Entities(ObjectKind),
    Literal,
    Other,
}

/// Static result type of an atomic call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultType {
    Bool,
    Int,
    Number,
    Text,
    /// Property lookups: any scalar, or absent.
    Any,
    Entities(ObjectKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Has(ObjectKind),
    HasExternal,
    CountOf(ObjectKind),
    Property,
    Extent(usize),
    Distance(&'static [&'static str]),
    FloorArea,
    Adjacent,
    WindowWallRatio,
    Unimplemented,
}

fn op_for(spec: &FunctionSpec) -> Op {
    let name = spec.signature.name.as_str();
    let kinds: Vec<ObjectKind> = spec.signature.kinds().collect();
    if UNIMPLEMENTED.contains(&name) {
        return Op::Unimplemented;
    }
    match spec.category {
        FunctionCategory::Existence if name == "hasExternal" => Op::HasExternal,
        FunctionCategory::Existence if kinds.len() == 2 => Op::Has(kinds[1]),
        FunctionCategory::Quantity if name.starts_with("getNumberOf") => Op::CountOf(kinds[0]),
        FunctionCategory::Property => Op::Property,
        FunctionCategory::Geometry if name.ends_with("Width") => Op::Extent(0),
        FunctionCategory::Geometry if name.ends_with("Length") => Op::Extent(1),
        FunctionCategory::Geometry if name.ends_with("Height") => Op::Extent(2),
        FunctionCategory::Distance if name == "getFireproofDistance" => Op::Distance(FIREPROOF_TYPES),
        FunctionCategory::Distance => Op::Distance(DISTANCE_TYPES),
        FunctionCategory::Area => Op::FloorArea,
        FunctionCategory::SpaceLocation if name == "isAdjacent" => Op::Adjacent,
        FunctionCategory::WindowWallRatio => Op::WindowWallRatio,
        _ => Op::Unimplemented,
    }
}

fn declared_type(spec: &FunctionSpec) -> ResultType {
    match spec.output().members() {
        [ValueKind::Boolean, ..] => ResultType::Bool,
        [ValueKind::Integer] => ResultType::Int,
        [ValueKind::Float] => ResultType::Number,
        [ValueKind::Collection] => ResultType::Entities(ObjectKind::Space),
        _ => ResultType::Text,
    }
}

/// Checks argument shapes against `spec` and returns the call's result type.
pub fn check_call(spec: &FunctionSpec, shapes: &[Shape]) -> Result<ResultType, EngineError> {
    let key = spec.key();
    let params = &spec.signature.params;
    if params.len() != shapes.len() {
        return Err(EngineError::Arity {
            key,
            expected: params.len(),
            found: shapes.len(),
        });
    }
    let op = op_for(spec);
    for (position, (param, shape)) in params.iter().zip(shapes).enumerate() {
        let ok = if param.kind.is_checked() {
            match shape {
                Shape::Entity(k) => *k == param.kind,
                Shape::Entities(k) => {
                    *k == param.kind && matches!(op, Op::CountOf(_) | Op::WindowWallRatio)
                }
                Shape::Literal => matches!((op, position), (Op::Has(_), 1) | (Op::CountOf(_), 0)),
                Shape::Other => false,
            }
        } else {
            *shape == Shape::Literal
        };
        if !ok {
            return Err(EngineError::ArgumentKind {
                key,
                position,
                expected: param.kind,
                found: format!("{shape:?}"),
            });
        }
    }
    Ok(match op {
        Op::Has(kind) if shapes[1] == Shape::Literal => ResultType::Entities(kind),
        Op::Has(_) | Op::HasExternal | Op::Adjacent => ResultType::Bool,
        Op::CountOf(_) => ResultType::Int,
        Op::Property => ResultType::Any,
        Op::Extent(_) | Op::Distance(_) | Op::FloorArea | Op::WindowWallRatio => ResultType::Number,
        Op::Unimplemented => declared_type(spec),
    })
}

fn shape_of(model: &BuildingModel, arg: &Arg) -> Result<Shape, EngineError> {
    Ok(match arg {
        Arg::Literal(_) => Shape::Literal,
        Arg::Entity(id) => Shape::Entity(model.entity(id)?.kind),
        Arg::Entities(ids) => {
            let mut kinds = ids.iter().map(|id| model.entity(id).map(|e| e.kind));
            match kinds.next().transpose()? {
                // An empty collection is compatible with any kind; the
                // parameter decides.
                None => Shape::Other,
                Some(first) => {
                    for kind in kinds {
                        if kind? != first {
                            return Ok(Shape::Other);
                        }
                    }
                    Shape::Entities(first)
                }
            }
        }
    })
}

/// Evaluates one atomic call against `model`.
pub fn eval_atomic(
    model: &BuildingModel,
    registry: &FunctionRegistry,
    call: &AtomicCall,
    config: &EngineConfig,
) -> Result<RuntimeValue, EngineError> {
    let spec = registry
        .get(&call.key)
        .ok_or_else(|| EngineError::UnresolvedKey(call.key.to_string()))?;
    let mut shapes = Vec::with_capacity(call.args.len());
    for (arg, param) in call.args.iter().zip(&spec.signature.params) {
        let shape = match shape_of(model, arg)? {
            Shape::Other if matches!(arg, Arg::Entities(ids) if ids.is_empty()) => Shape::Entities(param.kind),
            s => s,
        };
        shapes.push(shape);
    }
    shapes.extend(call.args.iter().skip(spec.signature.params.len()).map(|_| Shape::Other));
    check_call(spec, &shapes)?;

    let key = &call.key;
    let args = &call.args;
    match op_for(spec) {
        Op::Unimplemented => Err(EngineError::NotImplemented(key.clone())),
        Op::Has(kind) => {
            let container = entity_id(&args[0]);
            match &args[1] {
                Arg::Literal(tag) => {
                    let found = model.contained(container, kind, tag_filter(tag))?;
                    Ok(RuntimeValue::Entities(found.into_iter().map(|e| e.global_id.clone()).collect()))
                }
                other => {
                    let target = entity_id(other);
                    let found = model.contained(container, kind, None)?;
                    Ok(RuntimeValue::Bool(found.iter().any(|e| e.global_id == target)))
                }
            }
        }
        Op::HasExternal => {
            let id = entity_id(&args[0]);
            let external = ObjectKind::CHECKED.iter().try_fold(false, |acc, kind| {
                Ok::<_, ModelError>(
                    acc || model
                        .contained(id, *kind, None)?
                        .iter()
                        .any(|e| e.properties.get("is_external") == Some(&Value::Flag(true))),
                )
            })?;
            Ok(RuntimeValue::Bool(external))
        }
        Op::CountOf(kind) => {
            let n = match &args[0] {
                Arg::Literal(tag) => model
                    .entities()
                    .filter(|e| e.kind == kind && tag_filter(tag).is_none_or(|t| e.class_tag == t))
                    .count(),
                Arg::Entities(ids) => ids.len(),
                Arg::Entity(_) => 1,
            };
            Ok(RuntimeValue::Int(n as i64))
        }
        Op::Property => {
            let name = literal(&args[1]);
            Ok(model
                .property_of(entity_id(&args[0]), name)?
                .map_or(RuntimeValue::Absent, RuntimeValue::from))
        }
        Op::Extent(axis) => {
            choice(key, &args[1], &[OVERALL])?;
            let g = geometry(model, entity_id(&args[0]))?;
            Ok(RuntimeValue::Number(g.extent(axis)))
        }
        Op::Distance(allowed) => {
            let kind = choice(key, &args[2], allowed)?;
            let a = geometry(model, entity_id(&args[0]))?;
            let b = geometry(model, entity_id(&args[1]))?;
            let axes: &[usize] = if kind == LINEAR { &[0, 1, 2] } else { &[0, 1] };
            Ok(RuntimeValue::Number(a.distance_over(&b, axes)))
        }
        Op::FloorArea => {
            choice(key, &args[1], &[FOOTPRINT])?;
            let g = geometry(model, entity_id(&args[0]))?;
            Ok(RuntimeValue::Number(g.extent(0) * g.extent(1)))
        }
        Op::Adjacent => {
            let direction = choice(key, &args[2], DIRECTIONS)?;
            let (a_id, b_id) = (entity_id(&args[0]), entity_id(&args[1]));
            let a = geometry(model, a_id)?;
            let b = geometry(model, b_id)?;
            let touching =
                model.declared_adjacent(a_id, b_id) || a.distance_over(&b, &[0, 1]) <= config.adjacency_tolerance_mm;
            Ok(RuntimeValue::Bool(touching && lies_towards(&a, &b, direction)))
        }
        Op::WindowWallRatio => {
            let orientation = choice(key, &args[2], ORIENTATIONS)?;
            let windows = face_area(model, &args[0], orientation)?;
            let walls = face_area(model, &args[1], orientation)?;
            if walls <= 0.0 {
                return Err(EngineError::Degenerate(format!(
                    "{key}: wall face area facing {orientation} is zero"
                )));
            }
            Ok(RuntimeValue::Number(windows / walls))
        }
    }
}

fn entity_id(arg: &Arg) -> &str {
    match arg {
        Arg::Entity(id) => id,
        _ => unreachable!("shape checked"),
    }
}

fn literal(arg: &Arg) -> &str {
    match arg {
        Arg::Literal(s) => s,
        _ => unreachable!("shape checked"),
    }
}

fn tag_filter(tag: &str) -> Option<&str> {
    (tag != ANY_TAG).then_some(tag)
}

fn geometry<'m>(model: &'m BuildingModel, id: &str) -> Result<&'m Aabb, EngineError> {
    model
        .entity(id)?
        .geometry
        .as_ref()
        .ok_or_else(|| EngineError::MissingGeometry(id.to_string()))
}

fn choice(key: &CanonicalKey, arg: &Arg, allowed: &'static [&'static str]) -> Result<&'static str, EngineError> {
    let given = literal(arg).trim().to_lowercase();
    allowed
        .iter()
        .copied()
        .find(|a| *a == given)
        .ok_or_else(|| EngineError::UnknownMeasurementType {
            key: key.clone(),
            given: literal(arg).to_string(),
            allowed,
        })
}

/// `b` lies in `direction` from `a` when the centre offset along that axis is
/// positive and at least as large as the offset along the other horizontal
/// axis. North is +y, east is +x.
fn lies_towards(a: &Aabb, b: &Aabb, direction: &str) -> bool {
    let dx = b.center(0) - a.center(0);
    let dy = b.center(1) - a.center(1);
    match direction {
        "north" => dy > 0.0 && dy.abs() >= dx.abs(),
        "south" => dy < 0.0 && dy.abs() >= dx.abs(),
        "east" => dx > 0.0 && dx.abs() >= dy.abs(),
        "west" => dx < 0.0 && dx.abs() >= dy.abs(),
        _ => true,
    }
}

/// Area of the faces normal to `orientation`, summed over entities whose
/// `orientation` property is absent or equal to it.
fn face_area(model: &BuildingModel, arg: &Arg, orientation: &str) -> Result<f64, EngineError> {
    let ids: Vec<&str> = match arg {
        Arg::Entity(id) => vec![id.as_str()],
        Arg::Entities(ids) => ids.iter().map(String::as_str).collect(),
        Arg::Literal(_) => unreachable!("shape checked"),
    };
    let in_plane_axis = if matches!(orientation, "north" | "south") { 0 } else { 1 };
    let mut total = 0.0;
    for id in ids {
        let entity: &Entity = model.entity(id)?;
        let matches = match entity.properties.get("orientation") {
            Some(Value::Text(o)) => o.eq_ignore_ascii_case(orientation),
            _ => true,
        };
        if matches {
            let g = geometry(model, id)?;
            total += g.extent(in_plane_axis) * g.extent(2);
        }
    }
    Ok(total)
}
