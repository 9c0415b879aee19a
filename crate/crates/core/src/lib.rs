//! Quiver mutation: exchange matrices with frozen vertices, canonical forms,
//! mutation-class exploration, hardness gadgets and alternating dynamics.

pub mod canonical;
pub mod document;
pub mod dynamics;
pub mod explorer;
pub mod gadgets;
pub mod quiver;

pub use canonical::{canonical_form, canonical_key, is_isomorphic, CanonicalForm, CanonicalKey};
pub use explorer::{explore, Dedup, ExplorationReport, Limit, Predicate, SearchLimits};
pub use quiver::{Arrow, MutationSequence, Quiver, QuiverBuilder, QuiverError, VertexId};
