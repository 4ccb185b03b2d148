pub mod cegis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hierarchy;
pub mod oracle;
pub mod problem;
pub mod regions;
pub mod stl;

pub use error::{Error, Result};
