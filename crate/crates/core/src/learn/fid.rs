//! Incremental, lazy learning of a family of DFA, one per output bit of a k-bit teacher.
//!
//! All channels share one set of state names: P (prefix-closed, grows with every processed
//! string) and T = P plus one-symbol extensions. Each channel keeps its own distinguishing
//! strings V_c and class map E^c. When some channel's classes stop being a congruence, a new
//! distinguishing string is formed from the violation, queried once for all of T, and then
//! appended to every channel that exhibits the same violation, leaving congruent channels alone.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kripke::{Bits, Dfa, InputAlphabet, Symbol, Word};
use crate::learn::{synthesize_quotient, Signature, StateName};
use crate::teacher::Teacher;

/// One hypothesis DFA per output channel, over a shared alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfaFamily {
    members: Vec<Dfa>,
}

impl DfaFamily {
    pub fn new(members: Vec<Dfa>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidStructure("empty DFA family".into()))?;
        if members
            .iter()
            .any(|m| m.kripke().alphabet() != first.kripke().alphabet())
        {
            return Err(Error::AlphabetMismatch);
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Dfa] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn state_counts(&self) -> Vec<usize> {
        self.members.iter().map(Dfa::num_states).collect()
    }
}

/// Counters from one run of lazy refinement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefineStats {
    /// New distinguishing strings formed (outer iterations).
    pub splits: usize,
    /// Channel extensions; exceeds `splits` when a string is reused across channels.
    pub extensions: usize,
    /// Queries issued.
    pub queries: u64,
}

/// Name id in the shared table; [`DEAD`] is the dead name d₀.
type NameId = usize;
const DEAD: NameId = usize::MAX;

#[derive(Clone, Debug)]
struct Channel {
    /// V_c in insertion order; index 0 is ε.
    strings: Vec<Word>,
    seen: HashSet<Word>,
    /// E^c, indexed by name id.
    classes: Vec<Signature>,
}

impl Channel {
    fn class(&self, name: NameId) -> &Signature {
        static EMPTY: Signature = Signature(Vec::new());
        if name == DEAD {
            &EMPTY
        } else {
            &self.classes[name]
        }
    }
}

/// The evolving state of an incremental family learner.
#[derive(Clone, Debug)]
pub struct FidLearner {
    alphabet: InputAlphabet,
    bits: usize,
    names: Vec<Word>,
    index: HashMap<Word, NameId>,
    /// Successor ids for names in P; `None` for frontier names.
    succ: Vec<Option<Vec<NameId>>>,
    /// P in shortlex order.
    p_order: Vec<NameId>,
    channels: Vec<Channel>,
    family: Arc<DfaFamily>,
    processed: usize,
    force_synthesis: bool,
}

impl FidLearner {
    /// Builds classes for ε and the one-symbol words, refines them to congruences, and
    /// synthesizes the initial family.
    pub fn init<T: Teacher + ?Sized>(teacher: &mut T) -> Result<Self> {
        let alphabet = teacher.alphabet().clone();
        let bits = teacher.bits();
        let channels = (0..bits)
            .map(|_| Channel {
                strings: vec![Word::empty()],
                seen: HashSet::from([Word::empty()]),
                classes: Vec::new(),
            })
            .collect();
        let mut learner = FidLearner {
            alphabet,
            bits,
            names: Vec::new(),
            index: HashMap::new(),
            succ: Vec::new(),
            p_order: Vec::new(),
            channels,
            family: Arc::new(DfaFamily { members: Vec::new() }),
            processed: 0,
            force_synthesis: false,
        };
        let new = learner.extend_p(&Word::empty());
        learner.seed(&new, teacher)?;
        learner.lazy_refine(teacher)?;
        learner.family = Arc::new(learner.synthesize_family()?);
        Ok(learner)
    }

    /// Always return a new family object from [`process`](Self::process), even when it equals
    /// the previous one.
    pub fn set_force_synthesis(&mut self, force: bool) {
        self.force_synthesis = force;
    }

    /// Adds `s` and its prefixes to P, classifies new names, restores congruence, and returns
    /// the current family. The previous family object is returned when the tables still
    /// synthesize to it, so callers can detect "no change" with [`Arc::ptr_eq`].
    pub fn process<T: Teacher + ?Sized>(&mut self, s: &Word, teacher: &mut T) -> Result<Arc<DfaFamily>> {
        self.alphabet.check_word(s)?;
        self.processed += 1;
        let new = self.extend_p(s);
        self.seed(&new, teacher)?;
        self.lazy_refine(teacher)?;
        let fresh = self.synthesize_family()?;
        if self.force_synthesis || fresh != *self.family {
            self.family = Arc::new(fresh);
        }
        Ok(Arc::clone(&self.family))
    }

    /// Adds every prefix of `s` to P and the one-symbol extensions of new P members to T.
    /// Returns the ids of names that are new to T.
    fn extend_p(&mut self, s: &Word) -> Vec<NameId> {
        let mut new = Vec::new();
        let mut added_p = false;
        for p in s.prefixes() {
            let id = self.intern(p, &mut new);
            if self.succ[id].is_some() {
                continue;
            }
            let mut succ = Vec::with_capacity(self.alphabet.len());
            for sym in 0..self.alphabet.len() {
                let w = self.names[id].append(sym);
                succ.push(self.intern(w, &mut new));
            }
            self.succ[id] = Some(succ);
            self.p_order.push(id);
            added_p = true;
        }
        if added_p {
            let names = &self.names;
            self.p_order.sort_by(|&a, &b| names[a].cmp(&names[b]));
        }
        new
    }

    fn intern(&mut self, w: Word, new: &mut Vec<NameId>) -> NameId {
        if let Some(&id) = self.index.get(&w) {
            return id;
        }
        let id = self.names.len();
        self.index.insert(w.clone(), id);
        self.names.push(w);
        self.succ.push(None);
        for ch in &mut self.channels {
            ch.classes.push(Signature::empty());
        }
        new.push(id);
        id
    }

    /// Classifies new names against every existing distinguishing string of every channel.
    fn seed<T: Teacher + ?Sized>(&mut self, new: &[NameId], teacher: &mut T) -> Result<()> {
        let mut answers: HashMap<Word, Bits> = HashMap::new();
        for &id in new {
            for c in 0..self.bits {
                for j in 0..self.channels[c].strings.len() {
                    let w = self.names[id].concat(&self.channels[c].strings[j]);
                    let b = match answers.get(&w) {
                        Some(&b) => b,
                        None => {
                            let b = check_width(teacher.query(&w)?, self.bits)?;
                            answers.insert(w, b);
                            b
                        }
                    };
                    if b.get(c) {
                        self.channels[c].classes[id].insert(j);
                    }
                }
            }
        }
        Ok(())
    }

    fn p_prime(&self) -> impl Iterator<Item = NameId> + '_ {
        std::iter::once(DEAD).chain(self.p_order.iter().copied())
    }

    fn successor(&self, name: NameId, sym: Symbol) -> NameId {
        if name == DEAD {
            DEAD
        } else {
            self.succ[name].as_ref().expect("P names have successors")[sym]
        }
    }

    fn violates(&self, c: usize, a: NameId, b: NameId, sym: Symbol) -> bool {
        let ch = &self.channels[c];
        ch.class(a) == ch.class(b)
            && ch.class(self.successor(a, sym)) != ch.class(self.successor(b, sym))
    }

    /// Least congruence violation (α, β, σ) of channel `c`, with α before β in P' order
    /// (d₀ first, then shortlex).
    fn find_violation(&self, c: usize) -> Option<(NameId, NameId, Symbol)> {
        let ch = &self.channels[c];
        let m = self.alphabet.len();
        let mut group_of: HashMap<&Signature, usize> = HashMap::new();
        let mut groups: Vec<Vec<NameId>> = Vec::new();
        for name in self.p_prime() {
            let g = *group_of.entry(ch.class(name)).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(name);
        }
        // Groups are in order of their least member, so the first violating group holds α.
        for group in &groups {
            let a = group[0];
            for &b in &group[1..] {
                if let Some(sym) = (0..m).find(|&s| {
                    ch.class(self.successor(a, s)) != ch.class(self.successor(b, s))
                }) {
                    return Some((a, b, sym));
                }
            }
        }
        None
    }

    /// Lazy partition refinement: runs until every channel's classes form a congruence on P'.
    pub fn lazy_refine<T: Teacher + ?Sized>(&mut self, teacher: &mut T) -> Result<RefineStats> {
        let mut stats = RefineStats::default();
        while let Some((c, (a, b, sym))) =
            (0..self.bits).find_map(|c| self.find_violation(c).map(|v| (c, v)))
        {
            let ch = &self.channels[c];
            let fa = ch.class(self.successor(a, sym));
            let fb = ch.class(self.successor(b, sym));
            let gamma = fa
                .symmetric_difference(fb)
                .into_iter()
                .map(|j| &ch.strings[j])
                .min()
                .expect("violating classes differ");
            let v = Word::from(vec![sym]).concat(gamma);

            // The guard is evaluated on the tables as they were before this split.
            let targets: Vec<usize> = (0..self.bits)
                .filter(|&c2| self.violates(c2, a, b, sym) && !self.channels[c2].seen.contains(&v))
                .collect();
            debug_assert!(targets.contains(&c), "new string must refine the violating channel");

            let mut answers = Vec::with_capacity(self.names.len());
            for name in &self.names {
                answers.push(check_width(teacher.query(&name.concat(&v))?, self.bits)?);
                stats.queries += 1;
            }
            for &c2 in &targets {
                let ch = &mut self.channels[c2];
                let j = ch.strings.len();
                ch.strings.push(v.clone());
                ch.seen.insert(v.clone());
                for (id, bits) in answers.iter().enumerate() {
                    if bits.get(c2) {
                        ch.classes[id].insert(j);
                    }
                }
            }
            stats.splits += 1;
            stats.extensions += targets.len();
        }
        Ok(stats)
    }

    /// True iff, at every prefix p of `s`, each member of `family` accepts p exactly when the
    /// recorded output bit of λ*(p) is 1. The recorded bit is the ε column of the class table,
    /// so no queries are needed; every prefix of `s` must already be in P.
    pub fn consistent(&self, family: &DfaFamily, s: &Word) -> bool {
        if family.len() != self.bits {
            return false;
        }
        s.prefixes().all(|p| {
            let Some(&id) = self.index.get(&p) else {
                return false;
            };
            family.members.iter().enumerate().all(|(c, m)| {
                m.accepts(&p).unwrap_or(false) == self.channels[c].classes[id].contains(0)
            })
        })
    }

    /// Quotient DFA per channel from the current (congruent) tables.
    pub fn synthesize_family(&self) -> Result<DfaFamily> {
        let p: Vec<&Word> = self.p_order.iter().map(|&id| &self.names[id]).collect();
        let mut t_ids: Vec<NameId> = (0..self.names.len()).collect();
        t_ids.sort_by(|&a, &b| self.names[a].cmp(&self.names[b]));
        let t: Vec<&Word> = t_ids.iter().map(|&id| &self.names[id]).collect();
        let members = self
            .channels
            .iter()
            .map(|ch| {
                synthesize_quotient(&self.alphabet, &p, &t, |w| &ch.classes[self.index[w]])
            })
            .collect::<Result<Vec<_>>>()?;
        DfaFamily::new(members)
    }

    /// The current hypothesis family F_t.
    pub fn family(&self) -> &Arc<DfaFamily> {
        &self.family
    }

    pub fn alphabet(&self) -> &InputAlphabet {
        &self.alphabet
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Number of strings processed so far (the hypothesis counter t).
    pub fn processed(&self) -> usize {
        self.processed
    }

    /// P in shortlex order.
    pub fn p_set(&self) -> Vec<Word> {
        self.p_order.iter().map(|&id| self.names[id].clone()).collect()
    }

    /// T in shortlex order.
    pub fn t_set(&self) -> Vec<Word> {
        let mut t = self.names.clone();
        t.sort();
        t
    }

    /// V_c for channel `c` (0-based), in insertion order.
    pub fn distinguishing(&self, c: usize) -> &[Word] {
        &self.channels[c].strings
    }

    /// E^c(name) as indices into [`distinguishing`](Self::distinguishing); `None` for unknown names.
    pub fn class_of(&self, c: usize, name: &StateName) -> Option<Vec<usize>> {
        let ch = &self.channels[c];
        match name {
            StateName::Dead => Some(Vec::new()),
            StateName::Word(w) => self.index.get(w).map(|&id| ch.classes[id].indices().collect()),
        }
    }
}

fn check_width(b: Bits, bits: usize) -> Result<Bits> {
    if b.width() == bits {
        Ok(b)
    } else {
        Err(Error::WidthMismatch(b.width(), bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::fixtures::*;
    use crate::kripke::{prefix_closure, KripkeStructure};
    use crate::teacher::KripkeTeacher;

    fn constant(bits: usize, label: u64) -> KripkeStructure {
        KripkeStructure::new(ab(), bits, 0, vec![0, 0], vec![label]).unwrap()
    }

    /// λ(q⁰) = 0, then 1 after any input.
    fn zero_then_one() -> KripkeStructure {
        KripkeStructure::new(ab(), 1, 0, vec![1, 1, 1, 1], vec![0, 1]).unwrap()
    }

    #[test]
    fn constant_teacher_gives_trivial_family() {
        let mut t = KripkeTeacher::new(constant(3, 0b111));
        let fid = FidLearner::init(&mut t).unwrap();
        let f = fid.family();
        assert_eq!(f.len(), 3);
        for m in f.members() {
            assert_eq!(m.num_states(), 1);
            assert!(m.is_accepting(0));
        }
        // one query per element of T₀ = {ε, a, b}, nothing else
        assert_eq!(t.query_count(), 3);
    }

    #[test]
    fn init_splits_epsilon_from_symbols() {
        let mut t = KripkeTeacher::new(zero_then_one());
        let fid = FidLearner::init(&mut t).unwrap();
        // v₁ = "a": ε·a answers 1, so ε leaves the dead class
        assert_eq!(fid.distinguishing(0), &[Word::empty(), word(&[0])]);
        assert_eq!(fid.class_of(0, &StateName::word(Word::empty())), Some(vec![1]));
        assert_eq!(fid.class_of(0, &StateName::word(word(&[0]))), Some(vec![0, 1]));
        assert_eq!(fid.class_of(0, &StateName::word(word(&[1]))), Some(vec![0, 1]));
        assert!(t.query_count() >= 3);
        let m = &fid.family().members()[0];
        assert!(!m.accepts(&Word::empty()).unwrap());
        assert!(m.accepts(&word(&[1])).unwrap());
    }

    #[test]
    fn no_violation_means_no_queries() {
        let mut t = KripkeTeacher::new(parity());
        let mut fid = FidLearner::init(&mut t).unwrap();
        let before = t.query_count();
        let stats = fid.lazy_refine(&mut t).unwrap();
        assert_eq!(stats, RefineStats::default());
        assert_eq!(t.query_count(), before);
    }

    #[test]
    fn consistent_string_reuses_family_object() {
        let mut t = KripkeTeacher::new(parity());
        let mut fid = FidLearner::init(&mut t).unwrap();
        let f0 = Arc::clone(fid.family());
        let f1 = fid.process(&Word::empty(), &mut t).unwrap();
        assert!(Arc::ptr_eq(&f0, &f1));
    }

    #[test]
    fn parity_after_aa() {
        let mut t = KripkeTeacher::new(parity());
        let mut fid = FidLearner::init(&mut t).unwrap();
        let f = fid.process(&word(&[0, 0]), &mut t).unwrap();
        let m = &f.members()[0];
        assert!(m.accepts(&word(&[0])).unwrap());
        assert!(!m.accepts(&Word::empty()).unwrap());
        assert!(!m.accepts(&word(&[0, 0])).unwrap());
        assert_eq!(
            fid.p_set(),
            prefix_closure([&word(&[0, 0])]).into_iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn identical_channels_share_one_batch() {
        // 2-bit teacher whose bits are equal: λ = 00 at q⁰, 11 after any input
        let k = KripkeStructure::new(ab(), 2, 0, vec![1, 1, 1, 1], vec![0b00, 0b11]).unwrap();
        let mut t = KripkeTeacher::new(k);
        let fid = FidLearner::init(&mut t).unwrap();
        // T₀ has 3 names: 3 seeding queries plus one batch of 3 for the shared split
        assert_eq!(t.query_count(), 6);
        assert_eq!(fid.distinguishing(0), fid.distinguishing(1));
        assert_eq!(fid.distinguishing(0).len(), 2);
    }

    #[test]
    fn congruent_channel_not_extended() {
        // bit 0 as zero_then_one, bit 1 constant 0
        let k = KripkeStructure::new(ab(), 2, 0, vec![1, 1, 1, 1], vec![0b00, 0b01]).unwrap();
        let mut t = KripkeTeacher::new(k);
        let fid = FidLearner::init(&mut t).unwrap();
        assert_eq!(fid.distinguishing(0).len(), 2);
        assert_eq!(fid.distinguishing(1), &[Word::empty()]);
    }

    #[test]
    fn consistency_predicate() {
        let mut t = KripkeTeacher::new(parity());
        let mut fid = FidLearner::init(&mut t).unwrap();
        fid.process(&word(&[0, 1, 0]), &mut t).unwrap();
        let rejecting = Dfa::new(ab(), 0, vec![0, 0], &[false]).unwrap();
        let none = DfaFamily::new(vec![rejecting]).unwrap();
        // λ*("a") = 1, so the all-rejecting family is inconsistent on "a..."
        assert!(!fid.consistent(&none, &word(&[0, 1, 0])));
        assert!(fid.consistent(&none, &Word::empty()));
        let current = Arc::clone(fid.family());
        assert!(fid.consistent(&current, &word(&[0, 1, 0])));
    }

    #[test]
    fn forced_synthesis_builds_new_object() {
        let mut t = KripkeTeacher::new(parity());
        let mut fid = FidLearner::init(&mut t).unwrap();
        fid.set_force_synthesis(true);
        let f0 = Arc::clone(fid.family());
        let f1 = fid.process(&Word::empty(), &mut t).unwrap();
        assert!(!Arc::ptr_eq(&f0, &f1));
        assert_eq!(*f0, *f1);
    }
}
