//! Time-robust web annotations.
//!
//! Annotations are stored as triple graphs whose `oac:when` values pin each
//! resource to an instant. Archives record representations over time and
//! answer datetime negotiation, so an annotation can be rebuilt against the
//! representations it was made about, and a memento can be matched back to
//! the annotations made about its representation.

pub mod archive;
pub mod collection;
pub mod discovery;
pub mod encoding;
pub mod evaluate;
pub mod graph;
pub mod model;
pub mod temporal;
pub mod vocab;
pub mod workspace;

pub use archive::{
    Archive, ArchiveError, ArchiveKind, MementoRecord, ResourceTimeline, VersionRecord,
};
pub use collection::{Collection, CollectionEntry, CollectionError};
pub use discovery::{Certainty, DiscoveryError, IntervalEstimate, MementoHeaders};
pub use graph::{Graph, GraphError, Term, Triple};
pub use model::{
    AnnotationView, ContextRole, ContextView, ModelError, SegmentDescription, TimeClass,
};
pub use temporal::{Instant, LinkEntry, TemporalError, TimeInterval};
pub use workspace::{Workspace, WorkspaceError};
