//! Incremental learning of deterministic k-bit Kripke structures, and a learning-based
//! testing loop built on it.
//!
//! The main pieces are [`learn::FidLearner`] (one DFA per output bit, refined lazily as test
//! strings arrive), [`product::subdirect_product`] and [`minimise::minimise`] (reassemble the
//! family into one minimal hypothesis), [`check`] (a small safety-requirement checker), and
//! [`lbt::lbt_run`] (the loop tying them to a system under test).

pub mod batch;
pub mod check;
pub mod equivalence;
pub mod error;
pub mod format;
pub mod kripke;
pub mod lbt;
pub mod learn;
pub mod minimise;
pub mod product;
pub mod random;
pub mod teacher;

pub use error::{Error, Result};
pub use kripke::{Bits, Dfa, InputAlphabet, KripkeStructure, Symbol, Word};
