//! Modeling, simulation and data analysis for a 2-DOF soft pneumatic shoulder
//! sleeve driven by modular fabric bending actuators.

pub mod cli;
pub mod dataio;
pub mod error;
pub mod fitting;
mod lm;
pub mod models;
pub mod pneumatics;
pub mod signals;
pub mod sleeve;

pub use error::{Error, Result};
