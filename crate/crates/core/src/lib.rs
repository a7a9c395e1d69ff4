//! Turns classical planning problems into step-level reward datasets.

pub mod forge;
pub mod grounder;
pub mod pddl;
pub mod planner;
pub mod seed;
pub mod taxonomy;
pub mod pipeline;
pub mod verbalizer;
pub mod eval;
pub mod manifest;
pub mod cli;

#[cfg(test)]
mod testutil;
