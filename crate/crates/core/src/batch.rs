//! Corpus evaluation: run one analysis over many independent inputs.
//!
//! With the `parallel` feature (on by default) items are processed on the rayon thread pool;
//! without it, or through the `*_seq` functions, they run one after another. Results are in
//! input order either way, so both paths give identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::kripke::KripkeStructure;
use crate::lbt::{lbt_run, LbtConfig, LbtReport};
use crate::minimise::{minimise, Minimised};
use crate::teacher::KripkeTeacher;

/// Applies `f` to every item, in parallel when the `parallel` feature is enabled.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(items, f)
    }
}

/// Applies `f` to every item on the calling thread.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

pub fn minimise_all(corpus: &[KripkeStructure]) -> Vec<Minimised> {
    map(corpus, minimise)
}

pub fn minimise_all_seq(corpus: &[KripkeStructure]) -> Vec<Minimised> {
    map_seq(corpus, minimise)
}

/// Runs the testing loop against every model of the corpus, each with its own config.
pub fn lbt_all(jobs: &[(KripkeStructure, LbtConfig)]) -> Vec<Result<LbtReport>> {
    map(jobs, |(sut, cfg)| lbt_run(KripkeTeacher::new(sut.clone()), cfg))
}

pub fn lbt_all_seq(jobs: &[(KripkeStructure, LbtConfig)]) -> Vec<Result<LbtReport>> {
    map_seq(jobs, |(sut, cfg)| lbt_run(KripkeTeacher::new(sut.clone()), cfg))
}
