pub mod cli;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod measurement;
pub mod quantum;
pub mod random;
pub mod superposition;
pub mod theorems;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::ToleranceConfig;
