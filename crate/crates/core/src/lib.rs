//! Toolkit for extracting social determinants of health (SDoH) from clinical
//! notes with a sequence-to-sequence model.
//!
//! The model itself lives outside this crate. Everything around it is here:
//! BRAT standoff I/O ([`brat`]), the annotation scheme ([`schema`]),
//! social-history section extraction ([`section`]), event linearization
//! ([`linearize`]) and decoding of generated sequences back to character
//! offsets ([`decode`]), two-level scoring and inter-annotator agreement
//! ([`score`]), corpus tooling ([`corpus`]), and the Z-code completeness
//! comparison ([`zcode`]).

pub mod brat;
pub mod corpus;
pub mod decode;
pub mod linearize;
pub mod par;
pub mod schema;
pub mod score;
pub mod section;
pub mod zcode;

pub use brat::{
    parse_standoff, serialize_standoff, AttributeAnnotation, BratError, Document,
    DocumentAnnotation, EntityAnnotation, RelationAnnotation, Span,
};
pub use schema::{
    category_of, to_events, validate, EventArg, EventStatus, RelationKind, SchemaError,
    SchemaLabel, SchemaViolation, SdohCategory, SdohEvent, StatusValue, ViolationRule,
};
