pub mod error;
pub mod config;
pub mod disk_oracle;
pub mod numerics;
pub mod pipeline;
pub mod homogeneous;
pub mod mode_solver;
pub mod profile;
pub mod synthesis;
pub mod verify;

pub use error::{ErrorClass, Result, VortexError};
