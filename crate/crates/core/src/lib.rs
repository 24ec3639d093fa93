//! Publisher-conditioned synthetic news generation and detection.
//!
//! The crate is organised around the training loop that couples three models:
//!
//! - a style-aware causal language model ([`generator`]) fine-tuned on
//!   publisher-prefixed prompts ([`prompting`]),
//! - a style discriminator that predicts the publisher of a text, and
//! - a source discriminator that separates human-written from
//!   machine-generated news ([`discriminators`]).
//!
//! Both discriminators share the same inductive word-graph encoder
//! ([`wordgraph`]). [`schedule`] runs the nested training loop and
//! [`eval`] holds the fluency / content / style / classification metrics.

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod discriminators;
pub mod eval;
pub mod generator;
pub mod optim;
pub mod prompting;
pub mod rng;
pub mod schedule;
pub mod toy;
pub mod vocab;
pub mod wordgraph;

pub use corpus::{NewsRecord, Source, Split};
pub use vocab::{TokenId, Vocab};
