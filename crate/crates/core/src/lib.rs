pub mod config;
pub mod error;
pub mod group;
pub mod harmonic;
pub mod measure;
pub mod padic;
pub mod seed;
pub mod solenoid;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
