//! Behavioural equivalence of Kripke structures by synchronous exploration of the pair graph.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::kripke::{KripkeStructure, Symbol, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    /// A shortest, shortlex-least word on which the outputs differ.
    Witness(Word),
}

impl Equivalence {
    pub fn is_equal(&self) -> bool {
        matches!(self, Equivalence::Equal)
    }
}

/// Decides λ*_A = λ*_B on all of Σ*.
///
/// Pairs are dequeued in shortlex order of their access words, so the first pair with
/// differing labels yields the shortest, lexicographically least witness.
pub fn behaviourally_equivalent(a: &KripkeStructure, b: &KripkeStructure) -> Result<Equivalence> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    if a.bits() != b.bits() {
        return Err(Error::WidthMismatch(a.bits(), b.bits()));
    }
    let m = a.alphabet().len();
    let start = (a.initial(), b.initial());
    // pair -> (parent pair, symbol)
    let mut parent: HashMap<(usize, usize), Option<((usize, usize), Symbol)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some((p, q)) = queue.pop_front() {
        if a.raw_label(p) != b.raw_label(q) {
            return Ok(Equivalence::Witness(rebuild(&parent, (p, q))));
        }
        for s in 0..m {
            let next = (a.step(p, s), b.step(q, s));
            if let Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some(((p, q), s)));
                queue.push_back(next);
            }
        }
    }
    Ok(Equivalence::Equal)
}

fn rebuild(
    parent: &HashMap<(usize, usize), Option<((usize, usize), Symbol)>>,
    mut at: (usize, usize),
) -> Word {
    let mut rev = Vec::new();
    while let Some(&Some((prev, s))) = parent.get(&at) {
        rev.push(s);
        at = prev;
    }
    rev.reverse();
    Word::from(rev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::fixtures::*;

    fn constant(bit: u64) -> KripkeStructure {
        KripkeStructure::new(ab(), 1, 0, vec![0, 0], vec![bit]).unwrap()
    }

    #[test]
    fn reflexive() {
        assert!(behaviourally_equivalent(&parity(), &parity()).unwrap().is_equal());
    }

    #[test]
    fn witness_at_epsilon() {
        assert_eq!(
            behaviourally_equivalent(&constant(0), &constant(1)).unwrap(),
            Equivalence::Witness(Word::empty())
        );
    }

    #[test]
    fn parity_equals_mod4_parity() {
        assert!(behaviourally_equivalent(&parity(), &mod4_parity())
            .unwrap()
            .is_equal());
    }

    #[test]
    fn parity_vs_constant_zero() {
        // shortest witness is "a"
        assert_eq!(
            behaviourally_equivalent(&parity(), &constant(0)).unwrap(),
            Equivalence::Witness(word(&[0]))
        );
    }

    #[test]
    fn mismatches_rejected() {
        let wide = KripkeStructure::new(ab(), 2, 0, vec![0, 0], vec![0]).unwrap();
        assert!(matches!(
            behaviourally_equivalent(&parity(), &wide),
            Err(Error::WidthMismatch(1, 2))
        ));
        let other = KripkeStructure::new(
            crate::kripke::InputAlphabet::new(["x", "y"]).unwrap(),
            1,
            0,
            vec![0, 0],
            vec![0],
        )
        .unwrap();
        assert!(matches!(
            behaviourally_equivalent(&parity(), &other),
            Err(Error::AlphabetMismatch)
        ));
    }
}
