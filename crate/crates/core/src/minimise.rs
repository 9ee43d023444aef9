//! Minimisation of deterministic Kripke structures: Nerode congruence and quotient.
//!
//! [`minimise`] is a Hopcroft-style refinement. Blocks start as the classes of equal labels.
//! For every symbol σ and block i the sub-partition B(σ,i) holds the members of block i that
//! have a σ-predecessor; splitters are (σ, i) pairs taken from per-symbol waiting sets. When a
//! block j splits, the smaller of the two halves is physically moved, and for each symbol the
//! half with the smaller sub-partition is put on the waiting set (j itself wins ties).
//!
//! [`nerode_bruteforce`] is the independent pairwise table-filling oracle.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::kripke::KripkeStructure;

/// A partition of `0..n` into disjoint non-empty blocks.
#[derive(Clone, Debug, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n];
        let mut blocks = blocks;
        for (b, members) in blocks.iter_mut().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidStructure(format!("block {b} is empty")));
            }
            members.sort_unstable();
            for &q in members.iter() {
                if q >= n || block_of[q] != usize::MAX {
                    return Err(Error::InvalidStructure(format!(
                        "state {q} out of range or in two blocks"
                    )));
                }
                block_of[q] = b;
            }
        }
        if let Some(q) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidStructure(format!("state {q} in no block")));
        }
        Ok(Self { blocks, block_of })
    }

    /// Builds a partition from a block index per state.
    pub fn from_assignment(block_of: &[usize]) -> Self {
        let count = block_of.iter().map(|&b| b + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); count];
        for (q, &b) in block_of.iter().enumerate() {
            blocks[b].push(q);
        }
        blocks.retain(|b| !b.is_empty());
        Partition::new(block_of.len(), blocks).expect("assignment covers every state once")
    }

    pub fn identity(n: usize) -> Self {
        Partition::from_assignment(&(0..n).collect::<Vec<_>>())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, q: usize) -> usize {
        self.block_of[q]
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    /// Blocks ordered by least member, each sorted; equal partitions have equal normal forms.
    pub fn normalized(&self) -> Vec<Vec<usize>> {
        let mut b = self.blocks.clone();
        b.sort_unstable_by_key(|blk| blk[0]);
        b
    }
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.num_states() == other.num_states() && self.normalized() == other.normalized()
    }
}

/// Work counters of one minimisation run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MinimiseStats {
    /// States physically moved to a new block (the smaller half of every split).
    pub state_moves: u64,
    /// Predecessor transitions inspected while applying splitters.
    pub transitions_scanned: u64,
    pub splitters_processed: u64,
    pub splits: u64,
}

/// One block split, in original state ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitEvent {
    pub symbol: usize,
    /// Block index of the splitter.
    pub splitter: usize,
    /// The block that keeps its index (members with a σ-successor in the splitter).
    pub block: usize,
    pub kept: Vec<usize>,
    /// The newly numbered block.
    pub new_block: usize,
    pub split_off: Vec<usize>,
}

/// Result of [`minimise`].
#[derive(Clone, Debug)]
pub struct Minimised {
    /// Nerode partition over the states of the input (unreachable states are left out of
    /// every block; see [`Minimised::reachable_states`]).
    pub partition: Partition,
    /// The minimal structure, states numbered breadth-first from the initial state.
    pub quotient: KripkeStructure,
    pub stats: MinimiseStats,
    pub trace: Vec<SplitEvent>,
    reachable: Vec<usize>,
}

impl Minimised {
    /// Input states reachable from the initial state, which the partition ranges over.
    pub fn reachable_states(&self) -> &[usize] {
        &self.reachable
    }
}

/// Computes the Nerode congruence and the minimal quotient.
///
/// Unreachable states are dropped first. When every state is reachable, `partition` ranges
/// over all input states; otherwise it is a partition of `0..reachable_count` in the ids of
/// [`KripkeStructure::restrict_reachable`].
pub fn minimise(a: &KripkeStructure) -> Minimised {
    minimise_inner(a, false)
}

/// As [`minimise`], additionally recording every split.
pub fn minimise_traced(a: &KripkeStructure) -> Minimised {
    minimise_inner(a, true)
}

fn minimise_inner(a: &KripkeStructure, tracing: bool) -> Minimised {
    let (r, reachable) = a.restrict_reachable();
    let mut refiner = Refiner::new(&r, tracing);
    refiner.run();
    let block_of_r = refiner.block_assignment();
    let partition_r = Partition::from_assignment(&block_of_r);
    let quotient = quotient(&r, &partition_r)
        .expect("Nerode partition is a congruence")
        .restrict_reachable()
        .0;
    let mut trace = refiner.trace;
    for ev in &mut trace {
        for q in ev.kept.iter_mut().chain(ev.split_off.iter_mut()) {
            *q = reachable[*q];
        }
    }
    let partition = if reachable.len() == a.num_states() {
        let mut assign = vec![0; a.num_states()];
        for (rq, &q) in reachable.iter().enumerate() {
            assign[q] = block_of_r[rq];
        }
        Partition::from_assignment(&assign)
    } else {
        partition_r
    };
    Minimised {
        partition,
        quotient,
        stats: refiner.stats,
        trace,
        reachable,
    }
}

/// Refinable partition over the states, with per-symbol sub-partitions B(σ, ·).
struct Refiner<'a> {
    k: &'a KripkeStructure,
    m: usize,
    /// States grouped by set; set `s` occupies `elems[first[s]..end[s]]`.
    elems: Vec<usize>,
    loc: Vec<usize>,
    set_of: Vec<usize>,
    first: Vec<usize>,
    end: Vec<usize>,
    /// Marked members of set `s` are `elems[first[s]..mid[s]]`.
    mid: Vec<usize>,
    /// Algorithm block numbering: block index -> set, and back.
    block_set: Vec<usize>,
    set_block: Vec<usize>,
    /// `pred[σ][q]`: states r with δ(r, σ) = q.
    pred: Vec<Vec<Vec<usize>>>,
    /// `sub[σ][s]`: members of set `s` having a σ-predecessor, with positions in `sub_pos[σ]`.
    sub: Vec<Vec<Vec<usize>>>,
    sub_pos: Vec<Vec<usize>>,
    waiting: Vec<BTreeSet<usize>>,
    stats: MinimiseStats,
    tracing: bool,
    trace: Vec<SplitEvent>,
}

impl<'a> Refiner<'a> {
    fn new(k: &'a KripkeStructure, tracing: bool) -> Self {
        let n = k.num_states();
        let m = k.alphabet().len();
        let mut pred = vec![vec![Vec::new(); n]; m];
        for r in 0..n {
            for (s, p) in pred.iter_mut().enumerate() {
                p[k.step(r, s)].push(r);
            }
        }

        // Initial blocks: equal labels, numbered by least member.
        let mut label_block: std::collections::HashMap<u64, usize> = Default::default();
        let mut initial: Vec<Vec<usize>> = Vec::new();
        for q in 0..n {
            let b = *label_block.entry(k.raw_label(q)).or_insert_with(|| {
                initial.push(Vec::new());
                initial.len() - 1
            });
            initial[b].push(q);
        }
        let mut elems = Vec::with_capacity(n);
        let mut loc = vec![0; n];
        let mut set_of = vec![0; n];
        let mut first = Vec::new();
        let mut end = Vec::new();
        for (b, members) in initial.iter().enumerate() {
            first.push(elems.len());
            for &q in members {
                loc[q] = elems.len();
                set_of[q] = b;
                elems.push(q);
            }
            end.push(elems.len());
        }
        let count = initial.len();
        let mut sub = vec![vec![Vec::new(); count]; m];
        let mut sub_pos = vec![vec![usize::MAX; n]; m];
        for s in 0..m {
            for q in 0..n {
                if !pred[s][q].is_empty() {
                    sub_pos[s][q] = sub[s][set_of[q]].len();
                    sub[s][set_of[q]].push(q);
                }
            }
        }
        Refiner {
            k,
            m,
            elems,
            loc,
            set_of,
            mid: first.clone(),
            first,
            end,
            block_set: (0..count).collect(),
            set_block: (0..count).collect(),
            pred,
            sub,
            sub_pos,
            waiting: vec![BTreeSet::new(); m],
            stats: MinimiseStats::default(),
            tracing,
            trace: Vec::new(),
        }
    }

    fn block_size(&self, set: usize) -> usize {
        self.end[set] - self.first[set]
    }

    fn run(&mut self) {
        let count = self.block_set.len();
        if count == self.k.num_states() {
            return;
        }
        for s in 0..self.m {
            for i in 0..count {
                if !self.sub[s][self.block_set[i]].is_empty() {
                    self.waiting[s].insert(i);
                }
            }
        }
        let mut splittable = true;
        while splittable {
            for s in 0..self.m {
                while let Some(i) = self.waiting[s].pop_first() {
                    self.apply_splitter(s, i);
                }
            }
            splittable = self.waiting.iter().any(|w| !w.is_empty());
        }
    }

    fn apply_splitter(&mut self, sym: usize, i: usize) {
        self.stats.splitters_processed += 1;
        let splitter = self.sub[sym][self.block_set[i]].clone();
        let mut touched: Vec<usize> = Vec::new();
        for &q in &splitter {
            for idx in 0..self.pred[sym][q].len() {
                let t = self.pred[sym][q][idx];
                self.stats.transitions_scanned += 1;
                self.mark(t, &mut touched);
            }
        }
        // Split touched blocks in ascending block order.
        touched.sort_unstable_by_key(|&s| self.set_block[s]);
        for set in touched {
            let marked = self.mid[set] - self.first[set];
            if marked == self.block_size(set) {
                // B'_j = B_j: no split.
                self.mid[set] = self.first[set];
                continue;
            }
            debug_assert!(marked > 0 && marked < self.block_size(set));
            self.split(sym, i, set);
        }
    }

    fn mark(&mut self, q: usize, touched: &mut Vec<usize>) {
        let set = self.set_of[q];
        let pos = self.loc[q];
        if pos < self.mid[set] {
            return;
        }
        if self.mid[set] == self.first[set] {
            touched.push(set);
        }
        let target = self.mid[set];
        let other = self.elems[target];
        self.elems.swap(pos, target);
        self.loc[other] = pos;
        self.loc[q] = target;
        self.mid[set] += 1;
    }

    /// Splits `set` (block j) into its marked part, which keeps index j, and the rest, which
    /// becomes block `count`. The smaller half is the one that moves to a fresh set.
    fn split(&mut self, sym: usize, splitter: usize, set: usize) {
        let j = self.set_block[set];
        let count = self.block_set.len();
        let (lo, mid, hi) = (self.first[set], self.mid[set], self.end[set]);
        let marked_smaller = mid - lo <= hi - mid;
        let new_set = self.first.len();
        let (moved_lo, moved_hi) = if marked_smaller { (lo, mid) } else { (mid, hi) };
        self.first.push(moved_lo);
        self.end.push(moved_hi);
        self.mid.push(moved_lo);
        if marked_smaller {
            self.first[set] = mid;
        } else {
            self.end[set] = mid;
        }
        self.mid[set] = self.first[set];
        for sub in &mut self.sub {
            sub.push(Vec::new());
        }
        for p in moved_lo..moved_hi {
            let q = self.elems[p];
            self.set_of[q] = new_set;
            for s in 0..self.m {
                let pos = self.sub_pos[s][q];
                if pos == usize::MAX {
                    continue;
                }
                let list = &mut self.sub[s][set];
                list.swap_remove(pos);
                if let Some(&moved) = list.get(pos) {
                    self.sub_pos[s][moved] = pos;
                }
                self.sub_pos[s][q] = self.sub[s][new_set].len();
                self.sub[s][new_set].push(q);
            }
        }
        self.stats.state_moves += (moved_hi - moved_lo) as u64;
        self.stats.splits += 1;

        // Marked part keeps index j; the remainder is block `count`.
        let (kept_set, rest_set) = if marked_smaller { (new_set, set) } else { (set, new_set) };
        self.block_set[j] = kept_set;
        self.block_set.push(rest_set);
        self.set_block.resize(self.first.len(), usize::MAX);
        self.set_block[kept_set] = j;
        self.set_block[rest_set] = count;

        if self.tracing {
            let members = |s: usize| {
                let mut v = self.elems[self.first[s]..self.end[s]].to_vec();
                v.sort_unstable();
                v
            };
            self.trace.push(SplitEvent {
                symbol: sym,
                splitter,
                block: j,
                kept: members(kept_set),
                new_block: count,
                split_off: members(rest_set),
            });
        }

        for s in 0..self.m {
            let bj = self.sub[s][kept_set].len();
            let bc = self.sub[s][rest_set].len();
            if !self.waiting[s].contains(&j) && 0 < bj && bj <= bc {
                self.waiting[s].insert(j);
            } else if bc > 0 {
                self.waiting[s].insert(count);
            }
        }
    }

    fn block_assignment(&self) -> Vec<usize> {
        (0..self.k.num_states())
            .map(|q| self.set_block[self.set_of[q]])
            .collect()
    }
}

/// Pairwise table-filling: mark pairs with different labels, then propagate backwards along
/// equal symbols until nothing changes. O(n²·|Σ|).
pub fn nerode_bruteforce(a: &KripkeStructure) -> Partition {
    let n = a.num_states();
    let m = a.alphabet().len();
    let mut pred = vec![vec![Vec::new(); n]; m];
    for r in 0..n {
        for (s, p) in pred.iter_mut().enumerate() {
            p[a.step(r, s)].push(r);
        }
    }
    let mut distinct = vec![false; n * n];
    let mut queue = VecDeque::new();
    for p in 0..n {
        for q in p + 1..n {
            if a.raw_label(p) != a.raw_label(q) {
                distinct[p * n + q] = true;
                distinct[q * n + p] = true;
                queue.push_back((p, q));
            }
        }
    }
    while let Some((p, q)) = queue.pop_front() {
        for s in 0..m {
            for &r in &pred[s][p] {
                for &t in &pred[s][q] {
                    if r != t && !distinct[r * n + t] {
                        distinct[r * n + t] = true;
                        distinct[t * n + r] = true;
                        queue.push_back((r, t));
                    }
                }
            }
        }
    }
    let mut block_of = vec![usize::MAX; n];
    let mut next = 0;
    for p in 0..n {
        if block_of[p] != usize::MAX {
            continue;
        }
        block_of[p] = next;
        for q in p + 1..n {
            if !distinct[p * n + q] {
                block_of[q] = next;
            }
        }
        next += 1;
    }
    Partition::from_assignment(&block_of)
}

/// The quotient of `a` by a congruence `p`: one state per block, in block order.
pub fn quotient(a: &KripkeStructure, p: &Partition) -> Result<KripkeStructure> {
    if p.num_states() != a.num_states() {
        return Err(Error::InvalidStructure(format!(
            "partition over {} states, structure has {}",
            p.num_states(),
            a.num_states()
        )));
    }
    let m = a.alphabet().len();
    let mut delta = Vec::with_capacity(p.len() * m);
    let mut labels = Vec::with_capacity(p.len());
    for block in p.blocks() {
        let rep = block[0];
        for &q in &block[1..] {
            if a.raw_label(q) != a.raw_label(rep) {
                return Err(Error::NotCongruence {
                    p: rep,
                    q,
                    reason: "their labels differ".into(),
                });
            }
            for s in 0..m {
                if p.block_of(a.step(q, s)) != p.block_of(a.step(rep, s)) {
                    return Err(Error::NotCongruence {
                        p: rep,
                        q,
                        reason: format!("their successors on `{}` do not", a.alphabet().name(s)),
                    });
                }
            }
        }
        labels.push(a.raw_label(rep));
        delta.extend((0..m).map(|s| p.block_of(a.step(rep, s))));
    }
    KripkeStructure::new(
        a.alphabet().clone(),
        a.bits(),
        p.block_of(a.initial()),
        delta,
        labels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::behaviourally_equivalent;
    use crate::kripke::fixtures::*;
    use crate::kripke::InputAlphabet;

    fn chain() -> KripkeStructure {
        let al = InputAlphabet::new(["a"]).unwrap();
        KripkeStructure::new(al, 1, 0, vec![1, 2, 1], vec![0, 1, 1]).unwrap()
    }

    #[test]
    fn distinct_labels_exit_early() {
        let k = KripkeStructure::new(ab(), 2, 0, vec![1, 2, 2, 0, 0, 1], vec![0, 1, 2]).unwrap();
        let r = minimise(&k);
        assert!(r.partition.is_identity());
        assert_eq!(r.stats, MinimiseStats::default());
        assert_eq!(r.quotient.num_states(), 3);
    }

    #[test]
    fn chain_collapses() {
        let r = minimise(&chain());
        assert_eq!(r.partition.normalized(), vec![vec![0], vec![1, 2]]);
        assert_eq!(r.quotient.num_states(), 2);
        assert_eq!(nerode_bruteforce(&chain()), r.partition);
    }

    #[test]
    fn duplicated_parity() {
        let k = mod4_parity();
        let r = minimise(&k);
        assert_eq!(r.partition.normalized(), vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(nerode_bruteforce(&k), r.partition);
        assert!(behaviourally_equivalent(&r.quotient, &k).unwrap().is_equal());
    }

    #[test]
    fn bruteforce_cases() {
        // two states, same label, swapping on every input: one block
        let k = KripkeStructure::new(ab(), 1, 0, vec![1, 1, 0, 0], vec![1, 1]).unwrap();
        assert_eq!(nerode_bruteforce(&k).len(), 1);
        let d = KripkeStructure::new(ab(), 2, 0, vec![1, 2, 2, 0, 0, 1], vec![0, 1, 2]).unwrap();
        assert!(nerode_bruteforce(&d).is_identity());
    }

    #[test]
    fn quotient_rejects_non_congruence() {
        let bad = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(matches!(
            quotient(&chain(), &bad),
            Err(Error::NotCongruence { p: 0, q: 1, .. })
        ));
        // labels equal but successors split: {1,2} vs {0}
        let k = KripkeStructure::new(
            InputAlphabet::new(["a"]).unwrap(),
            1,
            0,
            vec![1, 2, 2],
            vec![0, 0, 1],
        )
        .unwrap();
        let bad = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(matches!(quotient(&k, &bad), Err(Error::NotCongruence { .. })));
    }

    #[test]
    fn quotient_identity_is_isomorphic() {
        let q = quotient(&chain(), &Partition::identity(3)).unwrap();
        assert_eq!(q, chain());
    }

    #[test]
    fn unreachable_states_dropped() {
        // state 2 unreachable
        let k = KripkeStructure::new(ab(), 1, 0, vec![1, 0, 0, 1, 2, 2], vec![0, 1, 1]).unwrap();
        let r = minimise(&k);
        assert_eq!(r.reachable_states(), &[0, 1]);
        assert_eq!(r.partition.num_states(), 2);
        assert_eq!(r.quotient.num_states(), 2);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(2, vec![vec![0]]).is_err());
        assert!(Partition::new(2, vec![vec![0, 1], vec![1]]).is_err());
        assert!(Partition::new(2, vec![vec![0, 1], vec![]]).is_err());
        assert_eq!(
            Partition::new(3, vec![vec![2, 0], vec![1]]).unwrap(),
            Partition::from_assignment(&[1, 0, 1])
        );
    }

    #[test]
    fn trace_records_splits() {
        let r = minimise_traced(&mod4_parity());
        assert_eq!(r.trace.len() as u64, r.stats.splits);
        for ev in &r.trace {
            assert!(!ev.kept.is_empty() && !ev.split_off.is_empty());
        }
    }
}
