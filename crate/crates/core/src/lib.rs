//! Grid-world agent training with language-model sub-goals.

pub mod craftworld;
pub mod lm;
pub mod textembed;
pub mod policy;
pub mod adapter_loop;
pub mod config;
pub mod evalkit;
pub mod orchestrator;
pub mod cli;
