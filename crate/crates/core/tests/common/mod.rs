//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the minimiser or the learners: minimal structures come from a
//! plain table-filling fixpoint, and live-complete sets from a glass-box breadth-first search.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use ikl::random::{letters, random_kripke};
use ikl::{KripkeStructure, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn reachable(k: &KripkeStructure) -> Vec<usize> {
    let mut seen = vec![false; k.num_states()];
    let mut order = vec![k.initial()];
    seen[k.initial()] = true;
    let mut i = 0;
    while i < order.len() {
        let q = order[i];
        for s in 0..k.alphabet().len() {
            let r = k.step(q, s);
            if !seen[r] {
                seen[r] = true;
                order.push(r);
            }
        }
        i += 1;
    }
    order
}

/// Equivalence classes of the reachable states, by iterating the distinguishability table
/// to a fixpoint. Each class is sorted; classes are sorted by their least member.
pub fn table_filling_classes(k: &KripkeStructure) -> Vec<Vec<usize>> {
    let states = reachable(k);
    let n = states.len();
    let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut dist = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = k.label(states[i]) != k.label(states[j]);
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if dist[i][j] {
                    continue;
                }
                let split = (0..k.alphabet().len()).any(|s| {
                    dist[pos[&k.step(states[i], s)]][pos[&k.step(states[j], s)]]
                });
                if split {
                    dist[i][j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (i..n).filter(|&j| !dist[i][j]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        let mut members: Vec<usize> = class.iter().map(|&j| states[j]).collect();
        members.sort_unstable();
        classes.push(members);
    }
    classes.sort();
    classes
}

/// The minimal structure built from [`table_filling_classes`].
pub fn table_filling_minimal(k: &KripkeStructure) -> KripkeStructure {
    let classes = table_filling_classes(k);
    let mut block = HashMap::new();
    for (b, c) in classes.iter().enumerate() {
        for &q in c {
            block.insert(q, b);
        }
    }
    let m = k.alphabet().len();
    let mut delta = Vec::with_capacity(classes.len() * m);
    let mut labels = Vec::with_capacity(classes.len());
    for c in &classes {
        for s in 0..m {
            delta.push(block[&k.step(c[0], s)]);
        }
        labels.push(k.label(c[0]).value());
    }
    KripkeStructure::new(k.alphabet().clone(), k.bits(), block[&k.initial()], delta, labels)
        .expect("quotient of a valid structure")
}

/// Whether the reachable parts of `a` and `b` are isomorphic (labels included).
pub fn isomorphic(a: &KripkeStructure, b: &KripkeStructure) -> bool {
    if a.alphabet() != b.alphabet() || a.bits() != b.bits() {
        return false;
    }
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut bwd: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([(a.initial(), b.initial())]);
    fwd.insert(a.initial(), b.initial());
    bwd.insert(b.initial(), a.initial());
    while let Some((p, q)) = queue.pop_front() {
        if a.label(p) != b.label(q) {
            return false;
        }
        for s in 0..a.alphabet().len() {
            let (p2, q2) = (a.step(p, s), b.step(q, s));
            match (fwd.get(&p2), bwd.get(&q2)) {
                (Some(&x), Some(&y)) if x == q2 && y == p2 => {}
                (None, None) => {
                    fwd.insert(p2, q2);
                    bwd.insert(q2, p2);
                    queue.push_back((p2, q2));
                }
                _ => return false,
            }
        }
    }
    true
}

/// Shortest access words of the live states of the minimal DFA of a 1-bit structure
/// (live = some accepting state is reachable), plus ε.
pub fn live_complete_set(dfa: &KripkeStructure) -> BTreeSet<Word> {
    assert_eq!(dfa.bits(), 1);
    let min = table_filling_minimal(dfa);
    let n = min.num_states();
    let m = min.alphabet().len();
    // Backward reachability from accepting states.
    let mut live: Vec<bool> = (0..n).map(|q| min.label(q).get(0)).collect();
    loop {
        let mut changed = false;
        for q in 0..n {
            if !live[q] && (0..m).any(|s| live[min.step(q, s)]) {
                live[q] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut access: Vec<Option<Word>> = vec![None; n];
    access[min.initial()] = Some(Word::empty());
    let mut queue = VecDeque::from([min.initial()]);
    while let Some(q) = queue.pop_front() {
        for s in 0..m {
            let r = min.step(q, s);
            if access[r].is_none() {
                access[r] = Some(access[q].as_ref().unwrap().append(s));
                queue.push_back(r);
            }
        }
    }
    let mut set: BTreeSet<Word> = (0..n)
        .filter(|&q| live[q])
        .filter_map(|q| access[q].clone())
        .collect();
    set.insert(Word::empty());
    set
}

/// Whether the two structures agree on every word, by brute force over all words up to
/// `len` symbols.
pub fn agree_up_to(a: &KripkeStructure, b: &KripkeStructure, len: usize) -> Option<Word> {
    let m = a.alphabet().len();
    let mut frontier = vec![(Word::empty(), a.initial(), b.initial())];
    for depth in 0..=len {
        let mut next = Vec::new();
        for (w, p, q) in frontier {
            if a.label(p) != b.label(q) {
                return Some(w);
            }
            if depth < len {
                for s in 0..m {
                    next.push((w.append(s), a.step(p, s), b.step(q, s)));
                }
            }
        }
        frontier = next;
    }
    None
}

/// A random structure of random size: `1..=max_states` states, `1..=max_bits` bits,
/// `1..=max_symbols` symbols, fully determined by `seed`.
pub fn random_instance(seed: u64, max_states: usize, max_bits: usize, max_symbols: usize) -> KripkeStructure {
    let mut r = rng(seed ^ 0x5eed);
    let n = r.gen_range(1..=max_states);
    let k = r.gen_range(1..=max_bits);
    let m = r.gen_range(1..=max_symbols);
    random_kripke(seed, n, k, &letters(m))
}

/// A structure whose transitions and labels are copied from `k` except for the labels given.
pub fn relabel(k: &KripkeStructure, labels: Vec<u64>) -> KripkeStructure {
    let m = k.alphabet().len();
    let delta = (0..k.num_states())
        .flat_map(|q| (0..m).map(move |s| k.step(q, s)))
        .collect();
    KripkeStructure::new(k.alphabet().clone(), k.bits(), k.initial(), delta, labels).unwrap()
}

/// BFS depth of every state from the initial state.
pub fn depths(k: &KripkeStructure) -> Vec<Option<usize>> {
    let mut d = vec![None; k.num_states()];
    d[k.initial()] = Some(0);
    let mut queue = VecDeque::from([k.initial()]);
    while let Some(q) = queue.pop_front() {
        for s in 0..k.alphabet().len() {
            let r = k.step(q, s);
            if d[r].is_none() {
                d[r] = Some(d[q].unwrap() + 1);
                queue.push_back(r);
            }
        }
    }
    d
}
