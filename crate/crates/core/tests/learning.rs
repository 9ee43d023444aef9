mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use ikl::learn::{id_learn, FidLearner, IdTables, StateName};
use ikl::random::{letters, random_kripke};
use ikl::teacher::{CachedTeacher, KripkeTeacher, Teacher};
use ikl::{KripkeStructure, Word};
use rand::Rng;

fn random_words(seed: u64, m: usize, count: usize, max_len: usize) -> Vec<Word> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let len = r.gen_range(0..=max_len);
            Word::from((0..len).map(|_| r.gen_range(0..m)).collect::<Vec<_>>())
        })
        .collect()
}

#[test]
fn id_learns_minimal_dfa_from_live_complete_sets() {
    for seed in 0..60 {
        let target = random_instance(seed, 10, 1, 3);
        let p = live_complete_set(&target);
        let dfa = id_learn(&mut KripkeTeacher::new(target.clone()), &p).unwrap();
        assert!(
            isomorphic(dfa.kripke(), &table_filling_minimal(&target)),
            "seed {seed}"
        );
    }
}

#[test]
fn id_tables_describe_the_target() {
    for seed in 0..30 {
        let target = random_instance(seed, 8, 1, 2);
        let p = live_complete_set(&target);
        let tables = IdTables::learn(&mut KripkeTeacher::new(target.clone()), &p).unwrap();
        let v = tables.distinguishing();
        assert_eq!(v.iter().collect::<BTreeSet<_>>().len(), v.len());
        for alpha in tables.t() {
            let expected: Vec<usize> = (0..v.len())
                .filter(|&j| target.lambda_star(&alpha.concat(&v[j])).unwrap().get(0))
                .collect();
            assert_eq!(tables.class_of(&StateName::word(alpha.clone())), expected);
        }
    }
}

#[test]
fn fid_hypotheses_are_compatible_with_every_processed_string() {
    for seed in 0..25 {
        let target = random_instance(seed, 15, 3, 3);
        let m = target.alphabet().len();
        let mut teacher = KripkeTeacher::new(target.clone());
        let mut fid = FidLearner::init(&mut teacher).unwrap();
        let words = random_words(seed, m, 60, 8);
        for (j, s) in words.iter().enumerate() {
            let family = fid.process(s, &mut teacher).unwrap();
            for seen in &words[..=j] {
                let out = target.lambda_star(seen).unwrap();
                for (c, member) in family.members().iter().enumerate() {
                    assert_eq!(member.accepts(seen).unwrap(), out.get(c), "seed {seed}");
                }
            }
        }
    }
}

#[test]
fn fid_reaches_the_target_on_live_complete_input() {
    for seed in 0..40 {
        let target = random_instance(seed, 15, 3, 3);
        let mut queries = BTreeSet::new();
        for c in 1..=target.bits() {
            queries.extend(live_complete_set(&target.project(c).unwrap()));
        }
        let mut teacher = CachedTeacher::new(KripkeTeacher::new(target.clone()));
        let mut fid = FidLearner::init(&mut teacher).unwrap();
        for q in &queries {
            fid.process(q, &mut teacher).unwrap();
        }
        for (c, m) in fid.family().members().iter().enumerate() {
            let proj = target.project(c + 1).unwrap();
            assert!(isomorphic(m.kripke(), &table_filling_minimal(&proj)), "seed {seed} channel {c}");
        }
    }
}

#[test]
fn fid_prefix_closure_and_tables() {
    for seed in 0..20 {
        let target = random_instance(seed, 12, 2, 3);
        let m = target.alphabet().len();
        let mut teacher = KripkeTeacher::new(target.clone());
        let mut fid = FidLearner::init(&mut teacher).unwrap();
        let mut processed = vec![Word::empty()];
        for s in random_words(seed + 1, m, 30, 6) {
            fid.process(&s, &mut teacher).unwrap();
            processed.push(s);
            let p: BTreeSet<Word> = ikl::kripke::prefix_closure(processed.iter());
            assert_eq!(fid.p_set().into_iter().collect::<BTreeSet<_>>(), p);
            let mut t = p.clone();
            for a in &p {
                t.extend((0..m).map(|s| a.append(s)));
            }
            assert_eq!(fid.t_set().into_iter().collect::<BTreeSet<_>>(), t);
            for c in 0..target.bits() {
                let v = fid.distinguishing(c);
                assert_eq!(v.iter().collect::<BTreeSet<_>>().len(), v.len());
                for alpha in &t {
                    let expected: Vec<usize> = (0..v.len())
                        .filter(|&j| target.lambda_star(&alpha.concat(&v[j])).unwrap().get(c))
                        .collect();
                    assert_eq!(fid.class_of(c, &StateName::word(alpha.clone())), Some(expected));
                }
            }
        }
    }
}

#[test]
fn family_object_changes_only_with_its_contents() {
    let target = random_kripke(5, 10, 2, &letters(2));
    let mut teacher = KripkeTeacher::new(target);
    let mut fid = FidLearner::init(&mut teacher).unwrap();
    let mut reused = 0;
    for s in random_words(9, 2, 80, 6) {
        let before = fid.family().clone();
        let after = fid.process(&s, &mut teacher).unwrap();
        if Arc::ptr_eq(&before, &after) {
            reused += 1;
            assert!(fid.consistent(&before, &s));
        } else {
            assert_ne!(*before, *after);
        }
    }
    assert!(reused > 0);
}

#[test]
fn learner_queries_match_a_fresh_teacher() {
    // Answers recorded by the cache agree with the model on re-query.
    let target: KripkeStructure = random_kripke(11, 20, 3, &letters(3));
    let mut teacher = CachedTeacher::new(KripkeTeacher::new(target.clone()));
    let mut fid = FidLearner::init(&mut teacher).unwrap();
    for s in random_words(3, 3, 40, 8) {
        fid.process(&s, &mut teacher).unwrap();
    }
    assert!(teacher.unique_queries() <= teacher.query_count());
    for (w, b) in teacher.log() {
        assert_eq!(target.lambda_star(w).unwrap(), *b);
    }
}
