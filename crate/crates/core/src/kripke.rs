//! Deterministic k-bit Kripke structures and the words that drive them.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Index of a symbol within an [`InputAlphabet`].
pub type Symbol = usize;

/// Upper bound on the output width, set by the `u64` backing of [`Bits`].
pub const MAX_BITS: usize = 64;

/// A finite, ordered input alphabet. Symbol order fixes every iteration order in the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputAlphabet {
    symbols: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl InputAlphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c.is_control()) {
                return Err(Error::InvalidAlphabet(format!("bad symbol token `{s}`")));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Self { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn name(&self, sym: Symbol) -> &str {
        &self.symbols[sym]
    }

    pub fn lookup(&self, token: &str) -> Result<Symbol> {
        self.index
            .get(token)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(token.to_string()))
    }

    /// Parses a whitespace-separated sequence of symbol tokens.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        text.split_whitespace()
            .map(|t| self.lookup(t))
            .collect::<Result<Vec<_>>>()
            .map(Word::from)
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.iter()
            .map(|&s| self.name(s))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.iter().find(|&&s| s >= self.len()) {
            Some(&index) => Err(Error::SymbolOutOfRange {
                index,
                size: self.len(),
            }),
            None => Ok(()),
        }
    }
}

/// A finite input string. Ordered shortlex: by length, then lexicographically by symbol order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Symbol> {
        self.0.iter()
    }

    pub fn last(&self) -> Option<Symbol> {
        self.0.last().copied()
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }

    /// `self · s`
    pub fn append(&self, s: Symbol) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(s);
        Word(v)
    }

    /// `self · other`
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    /// All prefixes from ε up to and including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = Word> + '_ {
        (0..=self.0.len()).map(move |l| self.prefix(l))
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The smallest prefix-closed superset of `words`.
pub fn prefix_closure<'a, I>(words: I) -> BTreeSet<Word>
where
    I: IntoIterator<Item = &'a Word>,
{
    let mut out = BTreeSet::new();
    for w in words {
        for p in w.prefixes() {
            out.insert(p);
        }
    }
    out
}

/// A k-bit output vector. Bit `c` (0-based) is channel `c`; the textual form lists channel 0 first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    value: u64,
    width: u8,
}

impl Bits {
    pub fn new(value: u64, width: usize) -> Self {
        assert!((1..=MAX_BITS).contains(&width), "width {width} unsupported");
        Bits {
            value: value & mask(width),
            width: width as u8,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        Bits::new(value, bits.len())
    }

    pub fn width(self) -> usize {
        self.width as usize
    }

    pub fn value(self) -> u64 {
        self.value
    }

    /// Channel `c`, 0-based.
    pub fn get(self, c: usize) -> bool {
        debug_assert!(c < self.width());
        (self.value >> c) & 1 == 1
    }

    pub fn parse(text: &str) -> Option<Bits> {
        if text.is_empty() || text.len() > MAX_BITS {
            return None;
        }
        let mut value = 0u64;
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => value |= 1 << i,
                _ => return None,
            }
        }
        Some(Bits::new(value, text.len()))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in 0..self.width() {
            f.write_str(if self.get(c) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A deterministic Kripke structure: total transition function over dense state ids
/// and a k-bit label per state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeStructure {
    alphabet: InputAlphabet,
    bits: usize,
    initial: usize,
    /// Row-major `state * |Σ| + symbol`.
    delta: Vec<usize>,
    labels: Vec<u64>,
}

impl KripkeStructure {
    /// Builds a structure from a row-major transition table (`delta[q * |Σ| + σ]`).
    pub fn new(
        alphabet: InputAlphabet,
        bits: usize,
        initial: usize,
        delta: Vec<usize>,
        labels: Vec<u64>,
    ) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::InvalidStructure(format!(
                "output width {bits} outside 1..={MAX_BITS}"
            )));
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidStructure("no states".into()));
        }
        if initial >= n {
            return Err(Error::InvalidStructure(format!(
                "initial state {initial} out of range"
            )));
        }
        if delta.len() != n * alphabet.len() {
            return Err(Error::InvalidStructure(format!(
                "transition table has {} entries, expected {}",
                delta.len(),
                n * alphabet.len()
            )));
        }
        if let Some(&t) = delta.iter().find(|&&t| t >= n) {
            return Err(Error::InvalidStructure(format!(
                "transition target {t} out of range"
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l & !mask(bits) != 0) {
            return Err(Error::InvalidStructure(format!(
                "label {l:#x} wider than {bits} bits"
            )));
        }
        Ok(Self {
            alphabet,
            bits,
            initial,
            delta,
            labels,
        })
    }

    pub fn alphabet(&self) -> &InputAlphabet {
        &self.alphabet
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn step(&self, q: usize, sym: Symbol) -> usize {
        self.delta[q * self.alphabet.len() + sym]
    }

    pub fn label(&self, q: usize) -> Bits {
        Bits::new(self.labels[q], self.bits)
    }

    pub(crate) fn raw_label(&self, q: usize) -> u64 {
        self.labels[q]
    }

    /// δ*(q, w).
    pub fn delta_star(&self, q: usize, w: &Word) -> Result<usize> {
        if q >= self.num_states() {
            return Err(Error::InvalidStructure(format!("state {q} out of range")));
        }
        self.alphabet.check_word(w)?;
        Ok(self.run_from(q, w.symbols()))
    }

    /// λ*(w) = λ(δ*(q⁰, w)); on ε this is λ(q⁰).
    pub fn lambda_star(&self, w: &Word) -> Result<Bits> {
        self.delta_star(self.initial, w).map(|q| self.label(q))
    }

    pub(crate) fn run_from(&self, q: usize, w: &[Symbol]) -> usize {
        w.iter().fold(q, |q, &s| self.step(q, s))
    }

    /// Output at every prefix of `w`, ε first.
    pub fn trace(&self, w: &Word) -> Result<Vec<Bits>> {
        self.alphabet.check_word(w)?;
        let mut q = self.initial;
        let mut out = Vec::with_capacity(w.len() + 1);
        out.push(self.label(q));
        for &s in w.iter() {
            q = self.step(q, s);
            out.push(self.label(q));
        }
        Ok(out)
    }

    /// The i-th projection (1-based): same transitions, keeping only output bit `i`.
    pub fn project(&self, i: usize) -> Result<KripkeStructure> {
        if i == 0 || i > self.bits {
            return Err(Error::BitOutOfRange {
                index: i,
                bits: self.bits,
            });
        }
        let labels = self.labels.iter().map(|l| (l >> (i - 1)) & 1).collect();
        Ok(KripkeStructure {
            alphabet: self.alphabet.clone(),
            bits: 1,
            initial: self.initial,
            delta: self.delta.clone(),
            labels,
        })
    }

    /// Shortlex-least access word for each state reachable from q⁰ (BFS in symbol order).
    pub fn access_words(&self) -> Vec<Option<Word>> {
        let n = self.num_states();
        let mut access: Vec<Option<Word>> = vec![None; n];
        access[self.initial] = Some(Word::empty());
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            let w = access[q].clone().expect("queued states have access words");
            for s in 0..self.alphabet.len() {
                let t = self.step(q, s);
                if access[t].is_none() {
                    access[t] = Some(w.append(s));
                    queue.push_back(t);
                }
            }
        }
        access
    }

    pub fn reachable_count(&self) -> usize {
        self.access_words().iter().filter(|a| a.is_some()).count()
    }

    /// The reachable subalgebra, states renumbered in BFS discovery order (initial = 0).
    /// Returns the structure and, for each new id, the original state id.
    pub fn restrict_reachable(&self) -> (KripkeStructure, Vec<usize>) {
        let n = self.num_states();
        let m = self.alphabet.len();
        let mut new_id = vec![usize::MAX; n];
        let mut order = vec![self.initial];
        new_id[self.initial] = 0;
        let mut head = 0;
        while head < order.len() {
            let q = order[head];
            head += 1;
            for s in 0..m {
                let t = self.step(q, s);
                if new_id[t] == usize::MAX {
                    new_id[t] = order.len();
                    order.push(t);
                }
            }
        }
        let delta = order
            .iter()
            .flat_map(|&q| (0..m).map(move |s| (q, s)))
            .map(|(q, s)| new_id[self.step(q, s)])
            .collect();
        let labels = order.iter().map(|&q| self.labels[q]).collect();
        let k = KripkeStructure {
            alphabet: self.alphabet.clone(),
            bits: self.bits,
            initial: 0,
            delta,
            labels,
        };
        (k, order)
    }
}

/// A DFA: the 1-bit view of a Kripke structure, accepting exactly where λ = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa(KripkeStructure);

impl Dfa {
    pub fn from_kripke(k: KripkeStructure) -> Result<Self> {
        if k.bits() != 1 {
            return Err(Error::WidthMismatch(k.bits(), 1));
        }
        Ok(Dfa(k))
    }

    pub fn new(
        alphabet: InputAlphabet,
        initial: usize,
        delta: Vec<usize>,
        accepting: &[bool],
    ) -> Result<Self> {
        let labels = accepting.iter().map(|&a| a as u64).collect();
        KripkeStructure::new(alphabet, 1, initial, delta, labels).map(Dfa)
    }

    pub fn kripke(&self) -> &KripkeStructure {
        &self.0
    }

    pub fn into_kripke(self) -> KripkeStructure {
        self.0
    }

    pub fn num_states(&self) -> usize {
        self.0.num_states()
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.0.labels[q] == 1
    }

    pub fn accepts(&self, w: &Word) -> Result<bool> {
        self.0.lambda_star(w).map(|b| b.get(0))
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&q| self.is_accepting(q))
    }
}

impl fmt::Display for KripkeStructure {
    /// The line-oriented text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kripke {} {}", self.num_states(), self.bits)?;
        writeln!(f, "alphabet {}", self.alphabet.symbols().join(" "))?;
        writeln!(f, "initial {}", self.initial)?;
        for q in 0..self.num_states() {
            writeln!(f, "state {} {}", q, self.label(q))?;
        }
        for q in 0..self.num_states() {
            for s in 0..self.alphabet.len() {
                writeln!(
                    f,
                    "trans {} {} {}",
                    q,
                    self.alphabet.name(s),
                    self.step(q, s)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn ab() -> InputAlphabet {
        InputAlphabet::new(["a", "b"]).unwrap()
    }

    /// δ(q,a) = 1−q, δ(q,b) = q, λ(q) = q.
    pub fn parity() -> KripkeStructure {
        KripkeStructure::new(ab(), 1, 0, vec![1, 0, 0, 1], vec![0, 1]).unwrap()
    }

    /// Counts a's mod 4, λ = count mod 2.
    pub fn mod4_parity() -> KripkeStructure {
        let delta = (0..4).flat_map(|q| [(q + 1) % 4, q]).collect();
        KripkeStructure::new(ab(), 1, 0, delta, vec![0, 1, 0, 1]).unwrap()
    }

    pub fn word(v: &[Symbol]) -> Word {
        Word::from(v)
    }
}
