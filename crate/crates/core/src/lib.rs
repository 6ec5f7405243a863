//! Converse bounds and a multi-server simulator for private search over
//! pattern-derived binary messages.

pub mod bounds;
pub mod constructions;
pub mod error;
pub mod infotheory;
pub mod patterns;
pub mod protocol;

pub use error::{Error, Result};
