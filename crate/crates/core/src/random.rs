//! Seeded generation of synthetic systems under test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kripke::{mask, InputAlphabet, KripkeStructure};

/// The generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random `n`-state, `k`-bit structure in which every state is reachable from state 0.
///
/// A random spanning tree is grafted first (each new state hangs off a free transition slot
/// of an already reached state); the remaining transitions and all labels are uniform.
pub fn random_kripke(seed: u64, n: usize, k: usize, alphabet: &InputAlphabet) -> KripkeStructure {
    assert!(n >= 1 && k >= 1, "need n >= 1 and k >= 1");
    let mut rng = seeded_rng(seed);
    let m = alphabet.len();
    let mut delta: Vec<Option<usize>> = vec![None; n * m];
    let mut free: Vec<usize> = (0..m).collect();
    for q in 1..n {
        let slot = free.swap_remove(rng.gen_range(0..free.len()));
        delta[slot] = Some(q);
        free.extend(q * m..(q + 1) * m);
    }
    let delta = delta
        .into_iter()
        .map(|t| t.unwrap_or_else(|| rng.gen_range(0..n)))
        .collect();
    let labels = (0..n).map(|_| rng.gen::<u64>() & mask(k)).collect();
    KripkeStructure::new(alphabet.clone(), k, 0, delta, labels)
        .expect("generated structure is well formed")
}

/// Like [`random_kripke`], but every non-initial state is entered by at least `min_in`
/// transitions, no two of them from the same state and none a self-loop.
///
/// Uniform structures often contain states entered by a single transition deep in the graph,
/// which random testing almost never visits. Controllers such as an elevator rarely look like
/// that: each floor can be entered from above and from below.
pub fn random_kripke_min_indegree(
    seed: u64,
    n: usize,
    k: usize,
    alphabet: &InputAlphabet,
    min_in: usize,
) -> KripkeStructure {
    let m = alphabet.len();
    assert!(n >= 1 && k >= 1, "need n >= 1 and k >= 1");
    assert!(
        min_in <= m && (n == 1 || min_in < n),
        "min_in too large for {n} states and {m} symbols"
    );
    let mut rng = seeded_rng(seed);
    let delta = (0..1000)
        .find_map(|_| entry_constrained_delta(&mut rng, n, m, min_in))
        .expect("no structure with the requested in-degree found");
    let labels = (0..n).map(|_| rng.gen::<u64>() & mask(k)).collect();
    KripkeStructure::new(alphabet.clone(), k, 0, delta, labels)
        .expect("generated structure is well formed")
}

/// One attempt at a spanning tree plus entry constraints; `None` if the free slots ran out.
fn entry_constrained_delta(rng: &mut SeededRng, n: usize, m: usize, min_in: usize) -> Option<Vec<usize>> {
    let mut delta: Vec<Option<usize>> = vec![None; n * m];
    let mut free: Vec<usize> = (0..m).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for q in 1..n {
        let slot = free.swap_remove(rng.gen_range(0..free.len()));
        delta[slot] = Some(q);
        preds[q].push(slot / m);
        free.extend(q * m..(q + 1) * m);
    }
    for q in 1..n {
        while preds[q].len() < min_in {
            let options: Vec<usize> = (0..n * m)
                .filter(|&i| delta[i].is_none() && i / m != q && !preds[q].contains(&(i / m)))
                .collect();
            if options.is_empty() {
                return None;
            }
            let slot = options[rng.gen_range(0..options.len())];
            delta[slot] = Some(q);
            preds[q].push(slot / m);
        }
    }
    Some(
        delta
            .into_iter()
            .map(|t| t.unwrap_or_else(|| rng.gen_range(0..n)))
            .collect(),
    )
}

/// `a, b, c, ...` for quick synthetic alphabets (up to 26 symbols).
pub fn letters(m: usize) -> InputAlphabet {
    assert!((1..=26).contains(&m));
    InputAlphabet::new((b'a'..b'a' + m as u8).map(|c| (c as char).to_string()))
        .expect("letters are distinct")
}
