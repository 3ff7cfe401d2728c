//! Associative networks over resource metadata and particle-swarm
//! propagation of metadata from metadata-rich to metadata-poor resources.
//!
//! The pipeline is: ingest records into a [`record::Repository`], build an
//! [`network::AssociativeNetwork`] over one relation, normalize it, run
//! [`swarm::propagate`], and score reconstruction with the atrophy
//! experiment in [`eval`].

pub mod cli;
pub mod error;
pub mod eval;
pub mod network;
pub mod par;
pub mod record;
pub mod seed;
pub mod swarm;
pub mod synth;

pub use error::{Error, Result};
pub use network::{AssociativeNetwork, BuildOptions, RelationKind, RelationType};
pub use par::Exec;
pub use record::{PropertyType, Repository, ResourceRecord, ValueSet};
pub use swarm::{PropagationConfig, RecommendationStore};
