//! DFA inference from output queries: the single-automaton reference learner ([`id`]) and the
//! incremental family learner ([`fid`]) that learns one DFA per output bit.
//!
//! Both learners name hypothesis states by input words plus a distinguished dead name, and
//! attach to each name the set of distinguishing-string indices on which the teacher answers 1.
//! A hypothesis is the quotient of the names by equality of those sets.

pub mod fid;
pub mod id;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::kripke::{Dfa, InputAlphabet, Symbol, Word};

pub use fid::{DfaFamily, FidLearner, RefineStats};
pub use id::{id_learn, IdTables};

/// A hypothesis state name: the dead state d₀ or an input word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateName {
    Dead,
    Word(Word),
}

impl StateName {
    pub fn word(w: Word) -> Self {
        StateName::Word(w)
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateName::Dead => f.write_str("d0"),
            StateName::Word(w) if w.is_empty() => f.write_str("ε"),
            StateName::Word(w) => write!(f, "{:?}", w.symbols()),
        }
    }
}

/// Concatenation modulo the dead state: `f(d₀, σ) = d₀`, `f(α, σ) = α·σ`.
pub fn f_concat(name: &StateName, sym: Symbol) -> StateName {
    match name {
        StateName::Dead => StateName::Dead,
        StateName::Word(w) => StateName::Word(w.append(sym)),
    }
}

/// A set of distinguishing-string indices, stored as a trimmed bitset so that equal sets
/// compare and hash equal regardless of how many strings exist.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature(Vec<u64>);

impl Signature {
    pub fn empty() -> Self {
        Signature(Vec::new())
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.get(j / 64).is_some_and(|w| (w >> (j % 64)) & 1 == 1)
    }

    pub fn insert(&mut self, j: usize) {
        let word = j / 64;
        if self.0.len() <= word {
            self.0.resize(word + 1, 0);
        }
        self.0[word] |= 1 << (j % 64);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| (w >> b) & 1 == 1).map(move |b| i * 64 + b)
        })
    }

    /// Indices in exactly one of the two sets, ascending.
    pub fn symmetric_difference(&self, other: &Signature) -> Vec<usize> {
        let len = self.0.len().max(other.0.len());
        (0..len)
            .flat_map(|i| {
                let x = self.0.get(i).copied().unwrap_or(0) ^ other.0.get(i).copied().unwrap_or(0);
                (0..64).filter(move |b| (x >> b) & 1 == 1).map(move |b| i * 64 + b)
            })
            .collect()
    }
}

/// Builds the quotient DFA of a congruent naming.
///
/// `p_names` is P (without the dead name) and `t_names` is T ⊇ P; `class` maps every name in T
/// to its signature, and the dead name always has the empty signature. States are the distinct
/// signatures of T, numbered in the order of `t_names` (the initial class ε must come first),
/// with the empty class appended if it is needed only as a transition target. Index 0 of the
/// signature is the ε distinguishing string, which decides acceptance.
pub(crate) fn synthesize_quotient<'a, F>(
    alphabet: &InputAlphabet,
    p_names: &[&'a Word],
    t_names: &[&'a Word],
    class: F,
) -> Result<Dfa>
where
    F: Fn(&Word) -> &'a Signature,
{
    let m = alphabet.len();
    let empty = Signature::empty();
    let mut ids: HashMap<&Signature, usize> = HashMap::new();
    let mut classes: Vec<&Signature> = Vec::new();
    for &w in t_names {
        let c = class(w);
        ids.entry(c).or_insert_with(|| {
            classes.push(c);
            classes.len() - 1
        });
    }
    let initial = *ids
        .get(class(&Word::empty()))
        .ok_or_else(|| Error::Internal("ε is not a state name".into()))?;

    let mut delta: Vec<Option<usize>> = vec![None; classes.len() * m];
    let set = |delta: &mut Vec<Option<usize>>, from: usize, s: Symbol, to: usize| -> Result<()> {
        match delta[from * m + s].replace(to) {
            Some(prev) if prev != to => Err(Error::Internal(format!(
                "naming is not a congruence: class {from} has two successors on symbol {s}"
            ))),
            _ => Ok(()),
        }
    };

    // The dead name: its class is ∅, with self-loops.
    if let Some(&e) = ids.get(&empty) {
        for s in 0..m {
            set(&mut delta, e, s, e)?;
        }
    }
    for &alpha in p_names {
        let from = ids[class(alpha)];
        if class(alpha).is_empty() {
            for s in 0..m {
                set(&mut delta, from, s, from)?;
            }
        } else {
            for s in 0..m {
                let to = *ids.get(class(&alpha.append(s))).ok_or_else(|| {
                    Error::Internal("one-symbol extension of P missing from T".into())
                })?;
                set(&mut delta, from, s, to)?;
            }
        }
    }
    // Frontier classes not represented in P' go to the empty class.
    let needs_sink = (0..classes.len()).any(|c| delta[c * m].is_none());
    if needs_sink {
        let sink = *ids.entry(&empty).or_insert_with(|| {
            classes.push(&empty);
            classes.len() - 1
        });
        delta.resize(classes.len() * m, None);
        for c in 0..classes.len() {
            if delta[c * m].is_none() {
                for s in 0..m {
                    delta[c * m + s] = Some(sink);
                }
            }
        }
    }
    let delta = delta
        .into_iter()
        .map(|t| t.ok_or_else(|| Error::Internal("partial transition function".into())))
        .collect::<Result<Vec<_>>>()?;
    let accepting: Vec<bool> = classes.iter().map(|c| c.contains(0)).collect();
    Dfa::new(alphabet.clone(), initial, delta, &accepting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::fixtures::*;

    #[test]
    fn f_concat_cases() {
        assert_eq!(f_concat(&StateName::Dead, 0), StateName::Dead);
        assert_eq!(
            f_concat(&StateName::word(Word::empty()), 0),
            StateName::word(word(&[0]))
        );
        assert_eq!(
            f_concat(&StateName::word(word(&[0, 1])), 1),
            StateName::word(word(&[0, 1, 1]))
        );
        assert_ne!(StateName::Dead, StateName::word(Word::empty()));
    }

    #[test]
    fn signature_set_semantics() {
        let mut a = Signature::empty();
        a.insert(0);
        a.insert(70);
        assert!(a.contains(70) && a.contains(0) && !a.contains(1));
        assert_eq!(a.indices().collect::<Vec<_>>(), vec![0, 70]);
        let mut b = Signature::empty();
        b.insert(0);
        assert_eq!(a.symmetric_difference(&b), vec![70]);
        assert_ne!(a, b);
        assert_eq!(Signature::empty(), Signature::default());
    }

    fn sig(idx: &[usize]) -> Signature {
        let mut s = Signature::empty();
        for &j in idx {
            s.insert(j);
        }
        s
    }

    #[test]
    fn all_accepting_single_class() {
        let eps = Word::empty();
        let a = word(&[0]);
        let b = word(&[1]);
        let one = sig(&[0]);
        let dfa = synthesize_quotient(&ab(), &[&eps], &[&eps, &a, &b], |_| &one).unwrap();
        assert_eq!(dfa.num_states(), 1);
        assert!(dfa.is_accepting(0));
        assert!((0..2).all(|s| dfa.kripke().step(0, s) == 0));
    }

    #[test]
    fn empty_class_gets_self_loops() {
        let eps = Word::empty();
        let a = word(&[0]);
        let b = word(&[1]);
        let none = Signature::empty();
        let dfa = synthesize_quotient(&ab(), &[&eps], &[&eps, &a, &b], |_| &none).unwrap();
        assert_eq!(dfa.num_states(), 1);
        assert!(!dfa.is_accepting(0));
        assert!((0..2).all(|s| dfa.kripke().step(0, s) == 0));
    }

    #[test]
    fn unmatched_frontier_class_goes_to_sink() {
        // P = {ε}; E(ε) = {0}, E(a) = {0,1}, E(b) = {0}
        let eps = Word::empty();
        let a = word(&[0]);
        let b = word(&[1]);
        let s0 = sig(&[0]);
        let s01 = sig(&[0, 1]);
        let dfa = synthesize_quotient(&ab(), &[&eps], &[&eps, &a, &b], |w| {
            if *w == a {
                &s01
            } else {
                &s0
            }
        })
        .unwrap();
        // states: {0} (initial), {0,1}, ∅ sink
        assert_eq!(dfa.num_states(), 3);
        let k = dfa.kripke();
        assert_eq!(k.step(0, 0), 1);
        assert_eq!(k.step(0, 1), 0);
        assert_eq!(k.step(1, 0), 2);
        assert_eq!(k.step(1, 1), 2);
        assert_eq!(k.step(2, 0), 2);
        assert!(!dfa.is_accepting(2));
    }

    #[test]
    fn non_congruence_is_internal_error() {
        // P = {ε, a} with E(ε) = E(a) but E(a) ≠ E(aa) successor mismatch
        let eps = Word::empty();
        let a = word(&[0]);
        let b = word(&[1]);
        let aa = word(&[0, 0]);
        let ab_ = word(&[0, 1]);
        let s0 = sig(&[0]);
        let s1 = sig(&[1]);
        let r = synthesize_quotient(&ab(), &[&eps, &a], &[&eps, &a, &b, &aa, &ab_], |w| {
            if *w == aa {
                &s1
            } else {
                &s0
            }
        });
        assert!(matches!(r, Err(Error::Internal(_))));
    }
}
