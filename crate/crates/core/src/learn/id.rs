//! Angluin's ID algorithm: learns the canonical DFA of a target from a live-complete set P.
//!
//! Kept deliberately close to the textbook loop; it serves as the reference that the
//! incremental learner is checked against.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::kripke::{Dfa, InputAlphabet, Symbol, Word};
use crate::learn::{synthesize_quotient, Signature, StateName};
use crate::teacher::Teacher;

/// The tables of an ID run: names P ⊆ T, distinguishing strings V, and class map E.
#[derive(Clone, Debug)]
pub struct IdTables {
    alphabet: InputAlphabet,
    p: Vec<Word>,
    t: Vec<Word>,
    v: Vec<Word>,
    e: HashMap<Word, Signature>,
}

impl IdTables {
    /// Runs initialization and the refinement loop to its fixpoint.
    pub fn learn<T: Teacher + ?Sized>(teacher: &mut T, p: &BTreeSet<Word>) -> Result<Self> {
        if teacher.bits() != 1 {
            return Err(Error::WidthMismatch(teacher.bits(), 1));
        }
        if !p.contains(&Word::empty()) {
            return Err(Error::InvalidStructure("P must contain ε".into()));
        }
        let alphabet = teacher.alphabet().clone();
        for w in p {
            alphabet.check_word(w)?;
        }
        let mut t: BTreeSet<Word> = p.clone();
        for w in p {
            for s in 0..alphabet.len() {
                t.insert(w.append(s));
            }
        }
        let mut tables = IdTables {
            alphabet,
            p: p.iter().cloned().collect(),
            t: t.into_iter().collect(),
            v: vec![Word::empty()],
            e: HashMap::new(),
        };
        for w in &tables.t {
            let mut sig = Signature::empty();
            if teacher.query(w)?.get(0) {
                sig.insert(0);
            }
            tables.e.insert(w.clone(), sig);
        }
        tables.refine(teacher)?;
        Ok(tables)
    }

    fn class(&self, name: &StateName) -> &Signature {
        static EMPTY: Signature = Signature(Vec::new());
        match name {
            StateName::Dead => &EMPTY,
            StateName::Word(w) => &self.e[w],
        }
    }

    fn p_prime(&self) -> Vec<StateName> {
        std::iter::once(StateName::Dead)
            .chain(self.p.iter().cloned().map(StateName::Word))
            .collect()
    }

    /// Least violation (α, β, b) with α before β in P' order (d₀ first, then shortlex).
    fn find_violation(&self) -> Option<(StateName, StateName, Symbol)> {
        let names = self.p_prime();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if self.class(a) != self.class(b) {
                    continue;
                }
                for s in 0..self.alphabet.len() {
                    let fa = super::f_concat(a, s);
                    let fb = super::f_concat(b, s);
                    if self.class(&fa) != self.class(&fb) {
                        return Some((a.clone(), b.clone(), s));
                    }
                }
            }
        }
        None
    }

    fn refine<T: Teacher + ?Sized>(&mut self, teacher: &mut T) -> Result<()> {
        while let Some((a, b, s)) = self.find_violation() {
            let diff = self
                .class(&super::f_concat(&a, s))
                .symmetric_difference(self.class(&super::f_concat(&b, s)));
            let gamma = diff
                .iter()
                .map(|&j| &self.v[j])
                .min()
                .expect("violating classes differ");
            let v = Word::from(vec![s]).concat(gamma);
            debug_assert!(!self.v.contains(&v), "distinguishing string repeated");
            let j = self.v.len();
            self.v.push(v.clone());
            for w in &self.t {
                if teacher.query(&w.concat(&v))?.get(0) {
                    self.e.get_mut(w).expect("T names have classes").insert(j);
                }
            }
        }
        Ok(())
    }

    /// Quotient DFA of the (congruent) tables.
    pub fn synthesize(&self) -> Result<Dfa> {
        let p: Vec<&Word> = self.p.iter().collect();
        let t: Vec<&Word> = self.t.iter().collect();
        synthesize_quotient(&self.alphabet, &p, &t, |w| &self.e[w])
    }

    pub fn p(&self) -> &[Word] {
        &self.p
    }

    pub fn t(&self) -> &[Word] {
        &self.t
    }

    pub fn distinguishing(&self) -> &[Word] {
        &self.v
    }

    /// E(α) as indices into [`distinguishing`](Self::distinguishing).
    pub fn class_of(&self, name: &StateName) -> Vec<usize> {
        match name {
            StateName::Dead => Vec::new(),
            StateName::Word(w) => self.e.get(w).map(|s| s.indices().collect()).unwrap_or_default(),
        }
    }
}

/// Learns the DFA of a 1-bit teacher from a live-complete set `p` containing ε.
pub fn id_learn<T: Teacher + ?Sized>(teacher: &mut T, p: &BTreeSet<Word>) -> Result<Dfa> {
    IdTables::learn(teacher, p)?.synthesize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::fixtures::*;
    use crate::kripke::{prefix_closure, KripkeStructure};
    use crate::teacher::KripkeTeacher;

    fn p_of(words: &[Word]) -> BTreeSet<Word> {
        prefix_closure(words.iter())
    }

    #[test]
    fn universal_language_gives_one_state() {
        let all = KripkeStructure::new(ab(), 1, 0, vec![0, 0], vec![1]).unwrap();
        let dfa = id_learn(&mut KripkeTeacher::new(all), &p_of(&[Word::empty()])).unwrap();
        assert_eq!(dfa.num_states(), 1);
        assert!(dfa.is_accepting(0));
    }

    #[test]
    fn odd_number_of_as() {
        let dfa = id_learn(&mut KripkeTeacher::new(parity()), &p_of(&[word(&[0])])).unwrap();
        assert_eq!(dfa.num_states(), 2);
        assert!(!dfa.is_accepting(dfa.kripke().initial()));
        for w in [word(&[0]), word(&[1, 0, 1]), word(&[0, 0, 0])] {
            assert!(dfa.accepts(&w).unwrap());
        }
        assert!(!dfa.accepts(&word(&[0, 1, 0])).unwrap());
    }

    #[test]
    fn class_semantics_after_refinement() {
        let mut t = KripkeTeacher::new(parity());
        let tables = IdTables::learn(&mut t, &p_of(&[word(&[0])])).unwrap();
        for w in tables.t() {
            let expected: Vec<usize> = tables
                .distinguishing()
                .iter()
                .enumerate()
                .filter(|(_, v)| parity().lambda_star(&w.concat(v)).unwrap().get(0))
                .map(|(j, _)| j)
                .collect();
            assert_eq!(tables.class_of(&StateName::Word(w.clone())), expected);
        }
        assert!(tables.class_of(&StateName::Dead).is_empty());
    }

    #[test]
    fn rejects_wide_teacher_and_missing_epsilon() {
        let wide = KripkeStructure::new(ab(), 2, 0, vec![0, 0], vec![0]).unwrap();
        assert!(id_learn(&mut KripkeTeacher::new(wide), &p_of(&[Word::empty()])).is_err());
        let p: BTreeSet<Word> = [word(&[0])].into_iter().collect();
        assert!(id_learn(&mut KripkeTeacher::new(parity()), &p).is_err());
    }
}
