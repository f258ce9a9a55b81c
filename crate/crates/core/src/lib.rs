//! End-to-end toolchain for persona-grounded preference data: persona pool
//! growth, tree-structured multi-turn dialogue construction, SFT/DPO export,
//! alignment metrics, and judge-driven evaluation.

pub mod builder;
pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod export;
pub mod gateway;
pub mod metrics;
pub mod persona;
pub mod seed;
pub mod tree;

pub use error::{Error, Result};
