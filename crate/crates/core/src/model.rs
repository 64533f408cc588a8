//! Simplified building model: typed entities with properties, axis-aligned
//! boxes in millimetres, and containment relations.
//!
//! Industry models can be converted into this format by an external command
//! that writes the JSON document described by [`BuildingModel`] to stdout;
//! the crate only consumes the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::registry::ObjectKind;

pub const MODEL_SCHEMA: &str = "funcmapper.model/1";
pub const MODEL_UNITS: &str = "mm";

/// Known class tags. Others load with a warning.
pub const CLASS_VOCABULARY: &[&str] = &[
    "Building",
    "Storey",
    "Room",
    "Corridor",
    "Stairwell",
    "FrontRoom",
    "ElevatorShaft",
    "FireZone",
    "NursingUnit",
    "Door",
    "Window",
    "Wall",
    "FirePartitionWall",
    "Slab",
    "Column",
    "Beam",
    "Stair",
    "Pipe",
    "Duct",
    "Sprinkler",
    "Hydrant",
    "Elevator",
    "Tank",
    "FlammableLiquid",
    "Goods",
];

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("model document does not parse: {0}")]
    Syntax(String),
    #[error("unsupported model schema `{0}`")]
    Schema(String),
    #[error("model units must be `{MODEL_UNITS}`, found `{0}`")]
    Units(String),
    #[error("duplicate entity id `{0}`")]
    DuplicateId(String),
    #[error("entity `{id}` has kind `{kind}`, which is not a checked-object kind")]
    UncheckedKind { id: String, kind: ObjectKind },
    #[error("entity `{0}` has an inverted bounding box (min > max)")]
    InvertedBox(String),
    #[error("relation {from} -> {to} refers to missing entity `{missing}`")]
    DanglingRelation { from: String, to: String, missing: String },
    #[error("containment cycle through entity `{0}`")]
    ContainmentCycle(String),
    #[error("unknown entity id `{0}`")]
    UnknownId(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Flag(bool),
    Number(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Flag(b) => write!(f, "{b}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.min[i] <= self.max[i]) && self.min.iter().chain(&self.max).all(|v| v.is_finite())
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn center(&self, axis: usize) -> f64 {
        (self.min[axis] + self.max[axis]) / 2.0
    }

    /// Separation along one axis; zero when the intervals overlap or touch.
    pub fn gap(&self, other: &Aabb, axis: usize) -> f64 {
        (other.min[axis] - self.max[axis]).max(self.min[axis] - other.max[axis]).max(0.0)
    }

    /// Minimum Euclidean distance between the boxes over the given axes.
    pub fn distance_over(&self, other: &Aabb, axes: &[usize]) -> f64 {
        axes.iter().map(|&a| self.gap(other, a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn translated(&self, by: [f64; 3]) -> Self {
        Self {
            min: [self.min[0] + by[0], self.min[1] + by[1], self.min[2] + by[2]],
            max: [self.max[0] + by[0], self.max[1] + by[1], self.max[2] + by[2]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub global_id: String,
    pub kind: ObjectKind,
    pub class_tag: String,
    #[serde(default)]
    pub properties: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Aabb>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    Contains,
    AdjacentDeclared,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub from: String,
    pub to: String,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema: String,
    units: String,
    #[serde(default)]
    entities: Vec<Entity>,
    #[serde(default)]
    relations: Vec<Relation>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildingModel {
    entities: BTreeMap<String, Entity>,
    relations: Vec<Relation>,
    children: BTreeMap<String, Vec<String>>,
}

impl BuildingModel {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| ModelError::Syntax(e.to_string()))?;
        if doc.schema != MODEL_SCHEMA {
            return Err(ModelError::Schema(doc.schema));
        }
        if doc.units != MODEL_UNITS {
            return Err(ModelError::Units(doc.units));
        }
        Self::new(doc.entities, doc.relations)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            schema: MODEL_SCHEMA.into(),
            units: MODEL_UNITS.into(),
            entities: self.entities.values().cloned().collect(),
            relations: self.relations.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    /// Validates and indexes a model.
    pub fn new(entities: Vec<Entity>, relations: Vec<Relation>) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for entity in entities {
            if !entity.kind.is_checked() {
                return Err(ModelError::UncheckedKind {
                    id: entity.global_id,
                    kind: entity.kind,
                });
            }
            if entity.geometry.is_some_and(|g| !g.is_valid()) {
                return Err(ModelError::InvertedBox(entity.global_id));
            }
            if !CLASS_VOCABULARY.contains(&entity.class_tag.as_str()) {
                warn!(
                    "entity `{}` uses class tag `{}` outside the known vocabulary",
                    entity.global_id, entity.class_tag
                );
            }
            let id = entity.global_id.clone();
            if map.insert(id.clone(), entity).is_some() {
                return Err(ModelError::DuplicateId(id));
            }
        }
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in &relations {
            for end in [&r.from, &r.to] {
                if !map.contains_key(end) {
                    return Err(ModelError::DanglingRelation {
                        from: r.from.clone(),
                        to: r.to.clone(),
                        missing: end.clone(),
                    });
                }
            }
            if r.kind == RelationKind::Contains {
                children.entry(r.from.clone()).or_default().push(r.to.clone());
            }
        }
        for list in children.values_mut() {
            list.sort();
            list.dedup();
        }
        let model = Self {
            entities: map,
            relations,
            children,
        };
        model.check_acyclic()?;
        Ok(model)
    }

    fn check_acyclic(&self) -> Result<(), ModelError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit<'a>(
            model: &'a BuildingModel,
            id: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
        ) -> Result<(), ModelError> {
            match marks.get(id) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Open) => return Err(ModelError::ContainmentCycle(id.to_string())),
                None => {}
            }
            marks.insert(id, Mark::Open);
            for child in model.children.get(id).into_iter().flatten() {
                visit(model, child, marks)?;
            }
            marks.insert(id, Mark::Done);
            Ok(())
        }
        let mut marks = BTreeMap::new();
        for id in self.children.keys() {
            visit(self, id, &mut marks)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn entity(&self, id: &str) -> Result<&Entity, ModelError> {
        self.entities.get(id).ok_or_else(|| ModelError::UnknownId(id.to_string()))
    }

    /// Entities transitively contained in `container_id`, filtered by kind
    /// and optional class tag, ordered by id.
    pub fn contained(
        &self,
        container_id: &str,
        kind: ObjectKind,
        class_tag: Option<&str>,
    ) -> Result<Vec<&Entity>, ModelError> {
        self.entity(container_id)?;
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = vec![container_id];
        while let Some(id) = stack.pop() {
            for child in self.children.get(id).into_iter().flatten() {
                if seen.insert(child.as_str()) {
                    stack.push(child);
                }
            }
        }
        Ok(seen
            .into_iter()
            .filter_map(|id| self.entities.get(id))
            .filter(|e| e.kind == kind && class_tag.is_none_or(|t| e.class_tag == t))
            .collect())
    }

    /// Exact-name property lookup. `Ok(None)` means the entity lacks it.
    pub fn property_of(&self, id: &str, name: &str) -> Result<Option<&Value>, ModelError> {
        Ok(self.entity(id)?.properties.get(name))
    }

    pub fn declared_adjacent(&self, a: &str, b: &str) -> bool {
        self.relations.iter().any(|r| {
            r.kind == RelationKind::AdjacentDeclared && ((r.from == a && r.to == b) || (r.from == b && r.to == a))
        })
    }

    /// Copy with every box shifted by `by`.
    pub fn translated(&self, by: [f64; 3]) -> Self {
        let mut copy = self.clone();
        for e in copy.entities.values_mut() {
            e.geometry = e.geometry.map(|g| g.translated(by));
        }
        copy
    }
}
