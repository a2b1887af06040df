//! Probing sentence-embedding spaces for dominant concept directions.
//!
//! The pipeline materializes templated prompts, embeds them, averages them
//! into one concept vector per entity, extracts the first principal
//! direction and interprets it against country labels, GDP and job prestige.

pub mod corpus;
pub mod crosslang;
pub mod embed;
pub mod numerics;
pub mod pipeline;
pub mod probe;
pub mod report;
