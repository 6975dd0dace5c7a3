//! Bisimilarity of generalized regular expressions for non-deterministic
//! functors.

pub mod bisim;
pub mod canon;
pub mod ccs;
pub mod cli;
pub mod expr;
pub mod functor;
pub mod lattice;
pub mod lexer;
pub mod semantics;
pub mod signature;
pub mod synth;

#[cfg(test)]
mod fixtures;
