//! Termination analysis for the π-calculus extended with integers.
//!
//! A process is translated into a nondeterministic sequential program whose
//! termination implies termination of the process. Termination of the
//! sequential program is then decided by a built-in ranking-function search,
//! optionally after strengthening the translation with refinement types
//! inferred through constrained Horn clause solving.

pub mod syntax;
pub mod typing;
pub mod explore;
pub mod pisem;
pub mod logic;
pub mod seq;
pub mod refine;
pub mod translate;
pub mod chc;
pub mod termcheck;
pub mod emit_c;
pub mod pipeline;
