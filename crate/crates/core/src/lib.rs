//! Core algorithms for semantic resource allocation over noisy channels.
//!
//! The crate models a transmitter that must decide which tokens of a sentence
//! to send under a bandwidth budget and reliability constraints. Tokens carry
//! embeddings, attention scores and knowledge-graph annotations ([`corpus`]);
//! a per-token cost prices reconstruction difficulty against channel quality
//! ([`losses`]); four solvers pick the subset ([`optimizer`]); a fading
//! channel transports the survivors ([`channel`]); and reconstruction quality
//! is scored at the token and sentence level ([`metrics`]).
//!
//! The crate is `no_std` (alloc required) and fully deterministic: every
//! random draw goes through the counter-based generator in [`rng`].

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod corpus;
pub mod losses;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod testgen;

pub(crate) mod vecmath;
