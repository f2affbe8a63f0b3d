//! Knowledge graph embedding where entities and relations are elementwise
//! invertible flows acting on a shared base variable, and triples are scored
//! by a closed-form distance between the resulting distributions.

pub mod cli;
pub mod dist1d;
pub mod error;
pub mod evaluation;
pub mod flows;
pub mod kgstore;
pub mod rules;
pub mod scoring;
pub mod special;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
