//! Subdirect products: the reachable part of the direct product of 1-bit structures.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kripke::{KripkeStructure, MAX_BITS};
use crate::learn::DfaFamily;

/// Reachable part of ∏ factors, explored breadth-first from the tuple of initial states.
///
/// Factor `i` supplies output bit `i` (0-based). States are numbered in discovery order
/// (symbol order within each state), so state 0 is the initial tuple. The factors need not be
/// minimal, but the projections are only guaranteed to be onto when they are.
pub fn subdirect_product(factors: &[KripkeStructure]) -> Result<KripkeStructure> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidStructure("product of zero factors".into()))?;
    if factors.len() > MAX_BITS {
        return Err(Error::InvalidStructure(format!(
            "at most {MAX_BITS} factors supported"
        )));
    }
    for f in factors {
        if f.alphabet() != first.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        if f.bits() != 1 {
            return Err(Error::WidthMismatch(f.bits(), 1));
        }
    }
    let m = first.alphabet().len();
    let start: Vec<usize> = factors.iter().map(KripkeStructure::initial).collect();
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut tuples = vec![start];
    let mut delta = Vec::new();
    let mut head = 0;
    while head < tuples.len() {
        for s in 0..m {
            let next: Vec<usize> = tuples[head]
                .iter()
                .zip(factors)
                .map(|(&q, f)| f.step(q, s))
                .collect();
            let id = match ids.entry(next) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => {
                    let id = tuples.len();
                    tuples.push(e.key().clone());
                    e.insert(id);
                    id
                }
            };
            delta.push(id);
        }
        head += 1;
    }
    let labels = tuples
        .iter()
        .map(|t| {
            t.iter()
                .zip(factors)
                .enumerate()
                .fold(0u64, |acc, (i, (&q, f))| acc | (f.raw_label(q) << i))
        })
        .collect();
    KripkeStructure::new(first.alphabet().clone(), factors.len(), 0, delta, labels)
}

/// Reassembles a learned family into one k-bit hypothesis.
pub fn family_product(family: &DfaFamily) -> Result<KripkeStructure> {
    let factors: Vec<KripkeStructure> = family
        .members()
        .iter()
        .map(|d| d.kripke().clone())
        .collect();
    subdirect_product(&factors)
}

/// The i-th (1-based) projection of a product with `arity` factors.
pub fn projection_of_product(p: &KripkeStructure, i: usize) -> Result<KripkeStructure> {
    p.project(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::behaviourally_equivalent;
    use crate::kripke::fixtures::*;
    use crate::kripke::InputAlphabet;

    fn counter(modulus: usize) -> KripkeStructure {
        let al = InputAlphabet::new(["a"]).unwrap();
        let delta = (0..modulus).map(|q| (q + 1) % modulus).collect();
        let labels = (0..modulus).map(|q| (q == 0) as u64).collect();
        KripkeStructure::new(al, 1, 0, delta, labels).unwrap()
    }

    #[test]
    fn unary_product_is_the_factor() {
        let p = subdirect_product(&[parity()]).unwrap();
        assert_eq!(p, parity());
    }

    #[test]
    fn diagonal_of_identical_factors() {
        let p = subdirect_product(&[parity(), parity()]).unwrap();
        assert_eq!(p.num_states(), 2);
    }

    #[test]
    fn parity_times_mod3() {
        let al = InputAlphabet::new(["a"]).unwrap();
        let par = KripkeStructure::new(al, 1, 0, vec![1, 0], vec![0, 1]).unwrap();
        let p = subdirect_product(&[par.clone(), counter(3)]).unwrap();
        assert_eq!(p.num_states(), 6);
        for (i, f) in [par, counter(3)].iter().enumerate() {
            let proj = projection_of_product(&p, i + 1).unwrap();
            assert!(behaviourally_equivalent(&proj, f).unwrap().is_equal());
        }
    }

    #[test]
    fn labels_concatenate() {
        let al = InputAlphabet::new(["a"]).unwrap();
        let par = KripkeStructure::new(al, 1, 0, vec![1, 0], vec![0, 1]).unwrap();
        let p = subdirect_product(&[par, counter(3)]).unwrap();
        // state 0 = (0, 0): bit0 = parity label 0, bit1 = counter label 1
        assert_eq!(p.label(0).to_string(), "01");
        assert_eq!(p.label(1).to_string(), "10");
    }

    #[test]
    fn rejects_mismatches() {
        assert!(subdirect_product(&[]).is_err());
        assert!(matches!(
            subdirect_product(&[parity(), counter(2)]),
            Err(Error::AlphabetMismatch)
        ));
        let wide = KripkeStructure::new(ab(), 2, 0, vec![0, 0], vec![0]).unwrap();
        assert!(subdirect_product(&[wide]).is_err());
        assert!(projection_of_product(&parity(), 2).is_err());
    }
}
