pub mod algorithms;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod io;
pub mod matrix;
pub mod theory;

pub use error::{Error, Result};
