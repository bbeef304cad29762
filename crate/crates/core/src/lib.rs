pub mod cli;
pub mod coeffgen;
pub mod control;
pub mod error;
pub mod maps;
pub mod numerics;
pub mod output;
pub mod stability;

pub use error::{Error, Result};
