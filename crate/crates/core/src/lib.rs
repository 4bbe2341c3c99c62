//! Shallow-parsing toolkit for tokenized English text.
//!
//! The pipeline runs in four stages: sentence preparation ([`textprep`]),
//! part-of-speech tagging ([`tagging`]), regex-style noun/verb phrase
//! chunking ([`chunking`]), and subject-verb-object extraction
//! ([`extraction`]). On top of that, [`evaluation`] scores tag and relation
//! output against gold data, and [`impact`] quantifies how much of the
//! tagging error mass actually matters to the chunker: many substitutions
//! land on tags the chunk grammar treats as interchangeable, so raw tag
//! accuracy understates the accuracy the parser effectively sees.
//!
//! [`pipeline`] ties the stages together over files and is what the
//! `tagchunk` binary calls into.

pub mod chunking;
pub mod evaluation;
pub mod extraction;
pub mod impact;
pub mod pipeline;
pub mod tagging;
pub mod tagset;
pub mod textprep;
