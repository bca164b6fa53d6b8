pub mod atoms;
pub mod error;
pub mod harness;
pub mod mp;
pub mod quad;
pub mod seeding;
pub mod serde_ext;
pub mod spectral;
pub mod stats;
pub mod trials;

pub use error::{Error, Result};
