pub mod analytic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod oracle;
pub mod par;
pub mod quantum;
pub mod sweep;

pub use error::{Error, Result};
