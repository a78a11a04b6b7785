//! Coverage-guided greybox fuzzing with a chat-model mutator running beside
//! a classic havoc loop.

pub mod coverage;
pub mod corpus;
pub mod fsutil;
pub mod harness;
pub mod metrics;
pub mod mutate;
pub mod parallel;
pub mod probe;
pub mod providers;
pub mod validate;
pub mod campaign;
pub mod cli;
