//! Core of pddlkit: the PDDL object model, a grounder and forward-search
//! planner, a static diagnostics engine, and the LLM-driven builders that
//! turn natural-language descriptions into domain and problem files.
//!
//! The crate is `no_std` (it needs `alloc`). Anything that touches the
//! network, the filesystem or a terminal lives in the `pddlkit` crate and
//! reaches this one through the [`llm::LanguageModel`] and
//! [`builder::feedback::ReviewGate`] traits.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod builder;
pub mod diagnostics;
pub mod engine;
pub mod llm;
pub mod pddl;
