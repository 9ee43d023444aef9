//! The learning-based testing loop: learn a hypothesis, model check it, execute the
//! counterexample (or a fresh random string) on the system under test, and refine.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::check::{CompiledRequirement, Requirement, Verdict};
use crate::equivalence::behaviourally_equivalent;
use crate::error::{Error, Result};
use crate::kripke::{Bits, KripkeStructure, Word};
use crate::learn::{DfaFamily, FidLearner};
use crate::minimise::minimise;
use crate::product::family_product;
use crate::random::{seeded_rng, SeededRng};
use crate::teacher::{Budgeted, CachedTeacher, Teacher, TeacherError};

/// Success probability of the geometric length distribution for random queries.
pub const RANDOM_LENGTH_P: f64 = 0.2;

#[derive(Clone, Debug)]
pub struct LbtConfig {
    pub requirement: Requirement,
    /// Distinct words the system under test may be asked about, learner queries included.
    pub max_queries: u64,
    pub max_wall_time: Duration,
    pub seed: u64,
    /// Convergence is declared when the last `n + 1` hypotheses are equivalent.
    pub n: usize,
    /// Probability that an iteration asks the model checker before falling back to random.
    pub mc_ratio: f64,
}

impl LbtConfig {
    pub fn new(requirement: Requirement) -> Self {
        Self {
            requirement,
            max_queries: 100_000,
            max_wall_time: Duration::from_secs(3600),
            seed: 0,
            n: 50,
            mc_ratio: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidStructure("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mc_ratio) {
            return Err(Error::InvalidStructure("model-check ratio must lie in [0, 1]".into()));
        }
        if self.max_queries == 0 || self.max_wall_time.is_zero() {
            return Err(Error::InvalidStructure("budgets must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuerySource {
    /// The initial hypothesis, before any test was run.
    Init,
    ModelChecker,
    Random,
}

impl fmt::Display for QuerySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuerySource::Init => "init",
            QuerySource::ModelChecker => "mc",
            QuerySource::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LbtVerdict {
    /// `witness` drives the system under test to outputs violating the requirement;
    /// `observed[i]` is the output after the first `i` symbols.
    TrueNegativeFound { witness: Word, observed: Vec<Bits> },
    ConvergedNoViolation,
    /// The query or wall-time budget ran out.
    BudgetExhausted,
    /// The system under test failed to answer.
    TeacherFailed(String),
}

impl LbtVerdict {
    /// Short name used in the CSV `verdict` column.
    pub fn tag(&self) -> &'static str {
        match self {
            LbtVerdict::TrueNegativeFound { .. } => "true_negative",
            LbtVerdict::ConvergedNoViolation => "converged",
            LbtVerdict::BudgetExhausted => "budget_exhausted",
            LbtVerdict::TeacherFailed(_) => "teacher_failed",
        }
    }
}

/// One loop iteration. Iteration 0 describes the initial hypothesis.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub t: usize,
    pub source: QuerySource,
    pub query: Word,
    /// State count of every channel DFA.
    pub family_states: Vec<usize>,
    pub product_states: usize,
    /// The minimised hypothesis after this iteration, shared while the family is unchanged.
    pub hypothesis: Arc<KripkeStructure>,
    /// Distinct words asked of the system under test so far.
    pub cum_queries: u64,
}

impl IterationRecord {
    pub fn min_states(&self) -> usize {
        self.hypothesis.num_states()
    }
}

#[derive(Clone, Debug)]
pub struct LbtReport {
    pub verdict: LbtVerdict,
    pub records: Vec<IterationRecord>,
    pub final_hypothesis: Option<Arc<KripkeStructure>>,
    /// Distinct words asked of the system under test.
    pub queries: u64,
    pub elapsed: Duration,
}

impl LbtReport {
    /// Index of the iteration at which convergence was declared.
    pub fn convergence_iteration(&self) -> Option<usize> {
        match self.verdict {
            LbtVerdict::ConvergedNoViolation => self.records.last().map(|r| r.t),
            _ => None,
        }
    }

    /// Writes `iter,source,query_len,family_states,product_states,min_states,cum_queries,verdict`
    /// rows. Family states are summed over channels; the verdict column is `continue` on all
    /// rows except the last.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "iter,source,query_len,family_states,product_states,min_states,cum_queries,verdict"
        )?;
        for (i, r) in self.records.iter().enumerate() {
            let verdict = if i + 1 == self.records.len() {
                self.verdict.tag()
            } else {
                "continue"
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t,
                r.source,
                r.query.len(),
                r.family_states.iter().sum::<usize>(),
                r.product_states,
                r.min_states(),
                r.cum_queries,
                verdict
            )?;
        }
        Ok(())
    }
}

/// Raised when every string up to the length cap has been used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuerySpaceExhausted;

/// Draws a string of length `1..=cap` that is not in `used`.
///
/// The length follows a geometric law with success probability [`RANDOM_LENGTH_P`], restricted
/// to the lengths that still have unused strings; the string is uniform within its length.
pub fn next_random_query(
    rng: &mut SeededRng,
    used: &HashSet<Word>,
    alphabet_size: usize,
    cap: usize,
) -> Result<Word, QuerySpaceExhausted> {
    assert!(alphabet_size > 0);
    let mut used_by_len: HashMap<usize, usize> = HashMap::new();
    for w in used {
        *used_by_len.entry(w.len()).or_default() += 1;
    }
    let stratum_size = |len: usize| (alphabet_size as u64).checked_pow(len as u32);
    let open: Vec<usize> = (1..=cap)
        .filter(|&len| match stratum_size(len) {
            Some(total) => (used_by_len.get(&len).copied().unwrap_or(0) as u64) < total,
            None => true,
        })
        .collect();
    if open.is_empty() {
        return Err(QuerySpaceExhausted);
    }
    let weights: Vec<f64> = open
        .iter()
        .map(|&len| RANDOM_LENGTH_P * (1.0 - RANDOM_LENGTH_P).powi(len as i32 - 1))
        .collect();
    let mut x = rng.gen::<f64>() * weights.iter().sum::<f64>();
    let mut len = *open.last().expect("non-empty");
    for (&l, &w) in open.iter().zip(&weights) {
        if x < w {
            len = l;
            break;
        }
        x -= w;
    }

    let used_here = used_by_len.get(&len).copied().unwrap_or(0) as u64;
    match stratum_size(len) {
        Some(total) if total <= 1 << 16 && used_here * 2 >= total => {
            // Dense stratum: enumerate the unused strings.
            let unused: Vec<u64> = (0..total)
                .filter(|&i| !used.contains(&decode(i, len, alphabet_size)))
                .collect();
            let pick = unused[rng.gen_range(0..unused.len())];
            Ok(decode(pick, len, alphabet_size))
        }
        _ => loop {
            let w: Word = (0..len)
                .map(|_| rng.gen_range(0..alphabet_size))
                .collect::<Vec<_>>()
                .into();
            if !used.contains(&w) {
                return Ok(w);
            }
        },
    }
}

/// The `i`-th string of length `len` in lexicographic order.
fn decode(mut i: u64, len: usize, m: usize) -> Word {
    let mut syms = vec![0; len];
    for slot in syms.iter_mut().rev() {
        *slot = (i % m as u64) as usize;
        i /= m as u64;
    }
    Word::from(syms)
}

/// True iff the last `n + 1` entries of `history` are pairwise behaviourally equivalent,
/// decided by comparing successive pairs. Shared snapshots compare equal without a search.
pub fn n_equivalence_converged<K: Borrow<KripkeStructure>>(history: &[K], n: usize) -> bool {
    assert!(n >= 1);
    if history.len() < n + 1 {
        return false;
    }
    history[history.len() - n - 1..].windows(2).all(|pair| {
        let (a, b) = (pair[0].borrow(), pair[1].borrow());
        std::ptr::eq(a, b)
            || behaviourally_equivalent(a, b)
                .map(|e| e.is_equal())
                .unwrap_or(false)
    })
}

/// First iteration whose hypothesis is behaviourally equivalent to `sut`.
///
/// This needs the system's structure and is for scoring the convergence heuristic only.
pub fn glass_box_convergence(report: &LbtReport, sut: &KripkeStructure) -> Option<usize> {
    let mut last: Option<(&Arc<KripkeStructure>, bool)> = None;
    for r in &report.records {
        let equal = match last {
            Some((h, eq)) if Arc::ptr_eq(h, &r.hypothesis) => eq,
            _ => behaviourally_equivalent(&r.hypothesis, sut)
                .map(|e| e.is_equal())
                .unwrap_or(false),
        };
        if equal {
            return Some(r.t);
        }
        last = Some((&r.hypothesis, equal));
    }
    None
}

struct Hypothesis {
    family: Arc<DfaFamily>,
    product_states: usize,
    minimal: Arc<KripkeStructure>,
}

impl Hypothesis {
    fn build(family: Arc<DfaFamily>) -> Result<Self> {
        let product = family_product(&family)?;
        let minimal = Arc::new(minimise(&product).quotient);
        Ok(Self {
            family,
            product_states: product.num_states(),
            minimal,
        })
    }
}

enum Stop {
    Verdict(LbtVerdict),
    Fatal(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        match e {
            Error::Teacher(t) => Stop::from(t),
            other => Stop::Fatal(other),
        }
    }
}

impl From<TeacherError> for Stop {
    fn from(e: TeacherError) -> Self {
        match e {
            TeacherError::BudgetExhausted(_) => Stop::Verdict(LbtVerdict::BudgetExhausted),
            other => Stop::Verdict(LbtVerdict::TeacherFailed(other.to_string())),
        }
    }
}

/// Runs the testing loop against `sut` until a true negative, convergence, or a budget.
///
/// Errors are returned only for an incompatible requirement or configuration; failures of
/// the system under test end the run with [`LbtVerdict::TeacherFailed`].
pub fn lbt_run<T: Teacher>(sut: T, cfg: &LbtConfig) -> Result<LbtReport> {
    cfg.validate()?;
    let req = CompiledRequirement::new(&cfg.requirement, sut.alphabet(), sut.bits())?;
    let mut run = Run {
        teacher: CachedTeacher::new(Budgeted::new(sut, cfg.max_queries)),
        req,
        cfg,
        rng: seeded_rng(cfg.seed),
        used: HashSet::new(),
        records: Vec::new(),
        hypothesis: None,
        started: Instant::now(),
        scanned: 0,
    };
    let verdict = match run.drive() {
        Ok(v) | Err(Stop::Verdict(v)) => v,
        Err(Stop::Fatal(e)) => return Err(e),
    };
    Ok(LbtReport {
        verdict,
        final_hypothesis: run.hypothesis.as_ref().map(|h| h.minimal.clone()),
        queries: run.teacher.unique_queries(),
        elapsed: run.started.elapsed(),
        records: run.records,
    })
}

struct Run<'c, T> {
    teacher: CachedTeacher<Budgeted<T>>,
    req: CompiledRequirement,
    cfg: &'c LbtConfig,
    rng: SeededRng,
    used: HashSet<Word>,
    records: Vec<IterationRecord>,
    hypothesis: Option<Hypothesis>,
    started: Instant,
    /// Prefix of the teacher's answer log already checked against the requirement.
    scanned: usize,
}

impl<T: Teacher> Run<'_, T> {
    fn drive(&mut self) -> Result<LbtVerdict, Stop> {
        let mut learner = FidLearner::init(&mut self.teacher)?;
        self.hypothesis = Some(Hypothesis::build(learner.family().clone())?);
        self.record(0, QuerySource::Init, Word::empty());
        if let Some(v) = self.scan_observations()? {
            return Ok(v);
        }
        let mut cap_growth = 0;
        for t in 1.. {
            if self.converged() {
                return Ok(LbtVerdict::ConvergedNoViolation);
            }
            if self.started.elapsed() >= self.cfg.max_wall_time {
                return Ok(LbtVerdict::BudgetExhausted);
            }
            let (source, query) = match self.model_checker_query()? {
                Some(w) => (QuerySource::ModelChecker, w),
                None => loop {
                    let cap = 4 * (self.current().product_states + 1) + cap_growth;
                    let m = self.teacher.alphabet().len();
                    match next_random_query(&mut self.rng, &self.used, m, cap) {
                        Ok(w) => break (QuerySource::Random, w),
                        Err(QuerySpaceExhausted) => cap_growth += 1,
                    }
                },
            };
            self.used.insert(query.clone());

            let observed = self.teacher.trace(&query)?;
            if let Some(v) = self.true_negative(&query, observed) {
                self.record(t, source, query);
                return Ok(v);
            }

            let family = learner.process(&query, &mut self.teacher)?;
            if !Arc::ptr_eq(&family, &self.current().family) {
                self.hypothesis = Some(Hypothesis::build(family)?);
            }
            self.record(t, source, query);
            if let Some(v) = self.scan_observations()? {
                return Ok(v);
            }
        }
        unreachable!("the iteration counter is unbounded")
    }

    /// The verdict for an executed word, cut at the first violating position.
    fn true_negative(&self, w: &Word, observed: Vec<Bits>) -> Option<LbtVerdict> {
        let i = self.req.violation_on_trace(w, &observed)?;
        Some(LbtVerdict::TrueNegativeFound {
            witness: w.prefix(i),
            observed: observed[..=i].to_vec(),
        })
    }

    /// Learner queries are test cases too: checks every SUT answer not yet looked at, and
    /// replays the first one that proves a violation on its own.
    fn scan_observations(&mut self) -> Result<Option<LbtVerdict>, Stop> {
        let log = self.teacher.log();
        let hit = log[self.scanned..]
            .iter()
            .find(|(w, b)| self.req.violated_at_end(w, *b))
            .map(|(w, _)| w.clone());
        self.scanned = log.len();
        let Some(w) = hit else {
            return Ok(None);
        };
        let observed = self.teacher.trace(&w)?;
        Ok(self.true_negative(&w, observed))
    }

    fn current(&self) -> &Hypothesis {
        self.hypothesis.as_ref().expect("built before the loop")
    }

    fn model_checker_query(&mut self) -> Result<Option<Word>> {
        let ratio = self.cfg.mc_ratio;
        let ask = ratio >= 1.0 || (ratio > 0.0 && self.rng.gen_bool(ratio));
        if !ask {
            return Ok(None);
        }
        Ok(match self.req.check(&self.current().minimal)? {
            Verdict::Counterexample { word, .. } if !self.used.contains(&word) => Some(word),
            _ => None,
        })
    }

    fn converged(&self) -> bool {
        let n = self.cfg.n;
        if self.records.len() < n + 1 {
            return false;
        }
        let window: Vec<&KripkeStructure> = self.records[self.records.len() - n - 1..]
            .iter()
            .map(|r| r.hypothesis.as_ref())
            .collect();
        n_equivalence_converged(&window, n)
    }

    fn record(&mut self, t: usize, source: QuerySource, query: Word) {
        let h = self.current();
        let rec = IterationRecord {
            t,
            source,
            query,
            family_states: h.family.state_counts(),
            product_states: h.product_states,
            hypothesis: h.minimal.clone(),
            cum_queries: self.teacher.unique_queries(),
        };
        self.records.push(rec);
    }
}

/// Distinct strings issued as test cases in a report, in order.
pub fn issued_queries(report: &LbtReport) -> Vec<&Word> {
    report.records.iter().skip(1).map(|r| &r.query).collect()
}

/// Every issued test string, as a set; useful for asserting uniqueness.
pub fn issued_set(report: &LbtReport) -> BTreeSet<&Word> {
    issued_queries(report).into_iter().collect()
}
