//! Turn digitized archaeological inventory volumes into a queryable store.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`corpus`] loads UTF-8 volumes into immutable [`Document`]s.
//! - [`structure`] cuts a document into per-municipality notices and zones.
//! - [`lingproc`] tokenizes and assigns coarse part-of-speech tags.
//! - [`extraction`] finds dates, places, persons and term candidates.
//! - [`terminology`] normalizes variants and links mentions to concepts.
//! - [`store`] keeps immutable snapshots with a full-text index and answers
//!   conjunctive queries.
//! - [`pipeline`] wires everything together from a declarative config.
//!
//! Every offset in this crate counts Unicode scalar values, never bytes.

pub mod corpus;
pub mod curation;
pub mod diag;
pub mod extraction;
pub mod lingproc;
pub mod pipeline;
pub mod span;
pub mod store;
pub mod structure;
pub mod terminology;

pub use corpus::{Document, DocumentMeta, Language};
pub use diag::{Diagnostic, Warning};
pub use extraction::{Mention, MentionKind, TimeRange};
pub use span::Span;
pub use store::{Query, ResultPage, SearchParams, Snapshot};
pub use terminology::{Concept, ConceptTable};
