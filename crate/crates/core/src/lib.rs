//! Bitstring program-induction benchmark for in-context learning.
//!
//! The crate builds a fixed registry of 100 bitstring transformations,
//! renders few-shot prompts in digit or nucleotide alphabets, runs them
//! against pluggable model backends and computes accuracy estimates with
//! the accompanying statistics.

pub mod backends;
pub mod bitstring;
pub mod encoding;
pub mod eval;
pub mod stats;
pub mod taskgen;

pub use bitstring::{bitdiversity, Bitstring};
