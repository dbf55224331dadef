pub mod bundle;
pub mod complex;
pub mod error;
pub mod json;
pub mod lie;
pub mod linalg;
pub mod mirror;
pub mod scalar;
pub mod spencer;
pub mod symtensor;

pub use error::{Error, Result};
