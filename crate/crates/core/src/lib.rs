pub mod analysis;
pub mod blob;
pub mod design;
pub mod engine;
pub mod error;
pub mod polyz;
pub mod scalar;
pub mod timing;

pub use error::{Error, Result};
