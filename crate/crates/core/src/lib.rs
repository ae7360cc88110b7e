pub mod abstraction;
pub mod analysis;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod fp;
pub mod interp;
pub mod lang;
pub mod polygon;
pub mod semantics;
pub mod transform;

pub use error::{Error, Result};
