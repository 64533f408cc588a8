//! Executes atomic functions against a [`BuildingModel`](crate::model::BuildingModel)
//! and runs declarative checks composed from them.

mod atomic;
mod check;

pub use atomic::{
    check_call, eval_atomic, Arg, AtomicCall, EngineConfig, ResultType, RuntimeValue, Shape, ANY_TAG, FOOTPRINT,
    HORIZONTAL, LINEAR, OVERALL, UNIMPLEMENTED,
};
pub use check::{
    compile_identifications, run_check, type_check, AggOp, CheckResult, CheckSkeleton, CheckSpec, CmpOp, EntityOutcome,
    Expr, PropertyPredicate, ScopeSelector, Ty, Unit, Verdict, Witness, CHECKS_SCHEMA, PASS_LINE,
};

use crate::model::ModelError;
use crate::registry::{CanonicalKey, ObjectKind};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("`{0}` does not resolve in the registry")]
    UnresolvedKey(String),
    #[error("{key}: expected {expected} argument(s), found {found}")]
    Arity {
        key: CanonicalKey,
        expected: usize,
        found: usize,
    },
    #[error("{key}: argument {position} must be a {expected}, found {found}")]
    ArgumentKind {
        key: CanonicalKey,
        position: usize,
        expected: ObjectKind,
        found: String,
    },
    #[error("{0} is registered but not implemented")]
    NotImplemented(CanonicalKey),
    #[error("{key}: unsupported type `{given}` (supported: {})", allowed.join(", "))]
    UnknownMeasurementType {
        key: CanonicalKey,
        given: String,
        allowed: &'static [&'static str],
    },
    #[error("entity `{0}` has no geometry")]
    MissingGeometry(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("unbound variable `{0}`")]
    UnknownVariable(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("check is incomplete: {0}")]
    Incomplete(String),
    #[error("check document does not parse: {0}")]
    Syntax(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
