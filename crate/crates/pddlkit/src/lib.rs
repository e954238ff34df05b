//! Runtime around `pddlkit-core`: LLM backends, pipeline configuration,
//! staged runs and human review.

pub mod config;
pub mod gateway;
pub mod pipeline;
pub mod render;
pub mod review;
