pub mod error;
pub mod experiments;
pub mod learning;
pub mod meanfield;
pub mod mixture;
pub mod model;

pub use error::{Error, Result};
