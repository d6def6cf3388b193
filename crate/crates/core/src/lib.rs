//! Exact models of real rational surfaces and their signed curve counts.
//!
//! The crate models a real surface by its intersection lattice, an integer
//! involution, and the topology of the real point set. Surgery along a
//! Lagrangian sphere class rewrites both the involution (composition with the
//! (-2)-reflection) and the real part. On top of the catalog of models sits a
//! memoized recursion engine that resolves signed count queries through
//! registry data, surgery sum rules, and blow-down bookkeeping, with an exact
//! provenance tree attached to every value. An independent floor-diagram
//! oracle cross-checks the plane leaves.
//!
//! All arithmetic is arbitrary precision; nothing in the crate rounds or
//! overflows.

pub mod catalog;
pub mod combinatorics;
pub mod engine;
pub mod expr;
pub mod lattice;
pub mod matrix;
pub mod oracle;
pub mod registry;
pub mod relative;
pub mod surfaces;

pub use catalog::{builtin as builtin_catalog, Catalog, EquivalenceRecord};
pub use combinatorics::{binomial, u_sequence, verify_inverse_matrix};
pub use engine::{
    euler_char_count, sign_twist, Engine, FTag, InvariantKey, Prov, VanishingPolicy, WValue,
};
pub use lattice::{ClassVec, IntersectionLattice, InvolutionAction, Mod2Class};
pub use registry::{builtin_registry, closed_form_conic, Registry};
pub use relative::{reduce_relative, RelSphereU, RelSphereV, RelativeKey};
pub use surfaces::{
    blowup, surgery, BlowupCenter, BlowupRecord, RealComponent, SphereLocus, SphereSpec,
    SurfaceModel, SurgeryOutcome, SurgeryRecord, SurgeryShape, Topo,
};

/// Crate-wide error type. The CLI maps `Validation`/`Parse` to exit code 1,
/// `UnknownValue` to 2, and verification mismatches to 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("insufficient catalog data: {0}")]
    InsufficientData(String),
    #[error("unknown value: {0}")]
    UnknownValue(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
