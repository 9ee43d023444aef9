//! Checks requirements on hypothesis structures and on observed runs of the system under test.
//!
//! Observations are pairs of a state's output bits and the last input symbol (none at the
//! initial state). Counterexamples are always finite input words, shortest first and then
//! lexicographically least in symbol order.

mod requirement;

use std::collections::{HashMap, VecDeque};

pub use requirement::{parse_requirement, Requirement, StateFormula};

use crate::error::{Error, Result};
use crate::kripke::{Bits, InputAlphabet, KripkeStructure, Symbol, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Counterexample {
        word: Word,
        /// The formula that failed, as text.
        reason: String,
    },
}

impl Verdict {
    pub fn counterexample(&self) -> Option<&Word> {
        match self {
            Verdict::Pass => None,
            Verdict::Counterexample { word, .. } => Some(word),
        }
    }
}

/// A state formula with input symbols resolved against an alphabet.
#[derive(Clone, Debug)]
enum Resolved {
    Const(bool),
    Bit(usize),
    Input(Symbol),
    Not(Box<Resolved>),
    And(Box<Resolved>, Box<Resolved>),
    Or(Box<Resolved>, Box<Resolved>),
    Implies(Box<Resolved>, Box<Resolved>),
}

impl Resolved {
    fn new(f: &StateFormula, alphabet: &InputAlphabet, bits: usize) -> Result<Self> {
        let rec = |g: &StateFormula| Resolved::new(g, alphabet, bits).map(Box::new);
        Ok(match f {
            StateFormula::True => Resolved::Const(true),
            StateFormula::False => Resolved::Const(false),
            StateFormula::Bit(c) if *c < bits => Resolved::Bit(*c),
            StateFormula::Bit(c) => {
                return Err(Error::Requirement {
                    pos: 0,
                    msg: format!("bit[{c}] out of range for {bits}-bit outputs"),
                })
            }
            StateFormula::Input(s) => Resolved::Input(alphabet.lookup(s).map_err(|e| {
                Error::Requirement {
                    pos: 0,
                    msg: e.to_string(),
                }
            })?),
            StateFormula::Not(g) => Resolved::Not(rec(g)?),
            StateFormula::And(a, b) => Resolved::And(rec(a)?, rec(b)?),
            StateFormula::Or(a, b) => Resolved::Or(rec(a)?, rec(b)?),
            StateFormula::Implies(a, b) => Resolved::Implies(rec(a)?, rec(b)?),
        })
    }

    fn eval(&self, out: Bits, last: Option<Symbol>) -> bool {
        match self {
            Resolved::Const(b) => *b,
            Resolved::Bit(c) => out.get(*c),
            Resolved::Input(s) => last == Some(*s),
            Resolved::Not(g) => !g.eval(out, last),
            Resolved::And(a, b) => a.eval(out, last) && b.eval(out, last),
            Resolved::Or(a, b) => a.eval(out, last) || b.eval(out, last),
            Resolved::Implies(a, b) => !a.eval(out, last) || b.eval(out, last),
        }
    }

    fn reads_input(&self) -> bool {
        match self {
            Resolved::Input(_) => true,
            Resolved::Const(_) | Resolved::Bit(_) => false,
            Resolved::Not(g) => g.reads_input(),
            Resolved::And(a, b) | Resolved::Or(a, b) | Resolved::Implies(a, b) => {
                a.reads_input() || b.reads_input()
            }
        }
    }
}

/// A requirement validated against an alphabet and output width.
#[derive(Clone, Debug)]
pub struct CompiledRequirement {
    source: Requirement,
    /// The formula every observation must satisfy (ALWAYS/NEVER) or must reach (WITHIN)
    /// or must satisfy at one point (AFTER).
    formula: Resolved,
    after: Option<Word>,
}

impl CompiledRequirement {
    pub fn new(r: &Requirement, alphabet: &InputAlphabet, bits: usize) -> Result<Self> {
        let formula = match r {
            Requirement::Never(f) => Resolved::Not(Box::new(Resolved::new(f, alphabet, bits)?)),
            other => Resolved::new(other.formula(), alphabet, bits)?,
        };
        let after = match r {
            Requirement::After(w, _) => Some(
                w.iter()
                    .map(|t| alphabet.lookup(t))
                    .collect::<Result<Vec<_>>>()
                    .map(Word::from)
                    .map_err(|e| Error::Requirement {
                        pos: 0,
                        msg: e.to_string(),
                    })?,
            ),
            _ => None,
        };
        Ok(Self {
            source: r.clone(),
            formula,
            after,
        })
    }

    pub fn requirement(&self) -> &Requirement {
        &self.source
    }

    fn reason(&self) -> String {
        self.source.to_string()
    }

    /// Index `i` such that the observation after `w[..i]` violates the requirement on this
    /// run, if any. `outputs[i]` is the output after the first `i` symbols of `w`.
    pub fn violation_on_trace(&self, w: &Word, outputs: &[Bits]) -> Option<usize> {
        assert_eq!(outputs.len(), w.len() + 1, "one output per prefix");
        let last = |i: usize| if i == 0 { None } else { Some(w.symbols()[i - 1]) };
        match &self.source {
            Requirement::Always(_) | Requirement::Never(_) => {
                (0..outputs.len()).find(|&i| !self.formula.eval(outputs[i], last(i)))
            }
            Requirement::Within(k, _) => {
                if w.len() < *k {
                    return None;
                }
                let reached = (0..=*k).any(|i| self.formula.eval(outputs[i], last(i)));
                (!reached).then_some(*k)
            }
            Requirement::After(..) => {
                let u = self.after.as_ref().expect("compiled AFTER has a word");
                let i = u.len();
                (w.len() >= i && w.symbols()[..i] == *u.symbols()
                    && !self.formula.eval(outputs[i], last(i)))
                .then_some(i)
            }
        }
    }

    /// True iff the single observation `out` after `w` already proves a violation, whatever
    /// the earlier outputs were. Only invariants and AFTER can be decided this way.
    pub fn violated_at_end(&self, w: &Word, out: Bits) -> bool {
        match &self.source {
            Requirement::Always(_) | Requirement::Never(_) => !self.formula.eval(out, w.last()),
            Requirement::After(..) => {
                self.after.as_ref() == Some(w) && !self.formula.eval(out, w.last())
            }
            Requirement::Within(..) => false,
        }
    }

    /// Checks the requirement on every run of `h`.
    pub fn check(&self, h: &KripkeStructure) -> Result<Verdict> {
        match &self.source {
            Requirement::Always(_) | Requirement::Never(_) => Ok(self.check_invariant(h)),
            Requirement::Within(k, _) => Ok(self.check_within(h, *k)),
            Requirement::After(..) => {
                let w = self.after.as_ref().expect("compiled AFTER has a word");
                let q = h.delta_star(h.initial(), w)?;
                if self.formula.eval(h.label(q), w.last()) {
                    Ok(Verdict::Pass)
                } else {
                    Ok(Verdict::Counterexample {
                        word: w.clone(),
                        reason: self.reason(),
                    })
                }
            }
        }
    }

    /// Breadth-first search over (state, last input) for the least word reaching a violation.
    fn check_invariant(&self, h: &KripkeStructure) -> Verdict {
        let track = self.formula.reads_input();
        let mut parent: HashMap<(usize, Option<Symbol>), Option<((usize, Option<Symbol>), Symbol)>> =
            HashMap::new();
        let start = (h.initial(), None);
        parent.insert(start, None);
        let mut queue = VecDeque::from([start]);
        while let Some(cfg @ (q, last)) = queue.pop_front() {
            if !self.formula.eval(h.label(q), last) {
                let mut rev = Vec::new();
                let mut at = cfg;
                while let Some(&Some((prev, s))) = parent.get(&at) {
                    rev.push(s);
                    at = prev;
                }
                rev.reverse();
                return Verdict::Counterexample {
                    word: Word::from(rev),
                    reason: self.reason(),
                };
            }
            for s in 0..h.alphabet().len() {
                let next = (h.step(q, s), if track { Some(s) } else { None });
                parent.entry(next).or_insert_with(|| {
                    queue.push_back(next);
                    Some((cfg, s))
                });
            }
        }
        Verdict::Pass
    }

    /// Passes iff some observation within `k` steps satisfies the formula; otherwise the
    /// least word of length `k` is returned.
    fn check_within(&self, h: &KripkeStructure, k: usize) -> Verdict {
        let track = self.formula.reads_input();
        let mut frontier = vec![(h.initial(), None)];
        let mut seen: std::collections::HashSet<(usize, Option<Symbol>)> =
            frontier.iter().copied().collect();
        for depth in 0..=k {
            if frontier
                .iter()
                .any(|&(q, last)| self.formula.eval(h.label(q), last))
            {
                return Verdict::Pass;
            }
            if depth == k {
                break;
            }
            let mut next = Vec::new();
            for &(q, _) in &frontier {
                for s in 0..h.alphabet().len() {
                    let cfg = (h.step(q, s), if track { Some(s) } else { None });
                    if seen.insert(cfg) {
                        next.push(cfg);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Verdict::Counterexample {
            word: Word::from(vec![0; k]),
            reason: self.reason(),
        }
    }
}

/// Checks `r` on `h`.
pub fn check(h: &KripkeStructure, r: &Requirement) -> Result<Verdict> {
    CompiledRequirement::new(r, h.alphabet(), h.bits())?.check(h)
}
