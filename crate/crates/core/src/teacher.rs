//! Teachers answer output queries λ*(w) about a system under test.
//!
//! [`KripkeTeacher`] evaluates an in-process model, [`ExternalTeacher`] drives a black-box
//! process over the line protocol below, and [`CachedTeacher`] memoizes either.
//!
//! ```text
//! learner -> SUT:  RESET | STEP <symbol> | QUIT
//! SUT -> learner:  OK <bitstring>        | ERR <message>
//! ```
//!
//! Every query is a `RESET` followed by one `STEP` per symbol; the answer is the bit string
//! returned by the last response.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use thiserror::Error;

use crate::kripke::{Bits, InputAlphabet, KripkeStructure, Word};

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("SUT reported an error: {0}")]
    Sut(String),
    #[error("expected {expected} output bits, SUT sent `{got}`")]
    Width { expected: usize, got: String },
    #[error("SUT closed its output stream")]
    Closed,
    #[error("query budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("query rejected: {0}")]
    BadQuery(String),
    #[error("SUT i/o: {0}")]
    Io(#[from] io::Error),
}

/// Answers output queries. Answers must be deterministic in the query word.
pub trait Teacher: Send {
    fn alphabet(&self) -> &InputAlphabet;
    fn bits(&self) -> usize;
    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError>;
    /// Number of queries answered so far.
    fn query_count(&self) -> u64;

    /// Outputs observed at every prefix of `w` (ε first). The default issues one query per prefix.
    fn trace(&mut self, w: &Word) -> Result<Vec<Bits>, TeacherError> {
        w.prefixes().map(|p| self.query(&p)).collect()
    }
}

impl<T: Teacher + ?Sized> Teacher for Box<T> {
    fn alphabet(&self) -> &InputAlphabet {
        (**self).alphabet()
    }
    fn bits(&self) -> usize {
        (**self).bits()
    }
    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError> {
        (**self).query(w)
    }
    fn query_count(&self) -> u64 {
        (**self).query_count()
    }
    fn trace(&mut self, w: &Word) -> Result<Vec<Bits>, TeacherError> {
        (**self).trace(w)
    }
}

/// A teacher backed by a glass-box model.
#[derive(Clone, Debug)]
pub struct KripkeTeacher {
    model: KripkeStructure,
    count: u64,
}

impl KripkeTeacher {
    pub fn new(model: KripkeStructure) -> Self {
        Self { model, count: 0 }
    }

    pub fn model(&self) -> &KripkeStructure {
        &self.model
    }
}

impl Teacher for KripkeTeacher {
    fn alphabet(&self) -> &InputAlphabet {
        self.model.alphabet()
    }

    fn bits(&self) -> usize {
        self.model.bits()
    }

    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError> {
        self.count += 1;
        self.model
            .lambda_star(w)
            .map_err(|e| TeacherError::BadQuery(e.to_string()))
    }

    fn query_count(&self) -> u64 {
        self.count
    }
}

/// A teacher speaking the line protocol with a child process.
pub struct ExternalTeacher {
    alphabet: InputAlphabet,
    bits: usize,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    count: u64,
    last_trace: Vec<Bits>,
}

impl ExternalTeacher {
    /// Spawns `program args...` with piped standard streams.
    pub fn spawn<S: AsRef<str>>(
        argv: &[S],
        alphabet: InputAlphabet,
        bits: usize,
    ) -> Result<Self, TeacherError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| TeacherError::BadQuery("empty SUT command".into()))?;
        let mut child = Command::new(program.as_ref())
            .args(args.iter().map(|a| a.as_ref()))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            alphabet,
            bits,
            child,
            stdin,
            stdout,
            count: 0,
            last_trace: Vec::new(),
        })
    }

    /// Per-step outputs of the most recent query, starting with the output after `RESET`.
    pub fn last_trace(&self) -> &[Bits] {
        &self.last_trace
    }

    fn exchange(&mut self, line: &str) -> Result<Bits, TeacherError> {
        writeln!(self.stdin, "{line}")?;
        self.stdin.flush()?;
        let mut reply = String::new();
        if self.stdout.read_line(&mut reply)? == 0 {
            return Err(TeacherError::Closed);
        }
        let reply = reply.trim_end();
        if let Some(msg) = reply.strip_prefix("ERR") {
            return Err(TeacherError::Sut(msg.trim().to_string()));
        }
        let bits = reply
            .strip_prefix("OK ")
            .ok_or_else(|| TeacherError::Protocol(format!("unexpected reply `{reply}` to `{line}`")))?
            .trim();
        Bits::parse(bits)
            .filter(|b| b.width() == self.bits)
            .ok_or_else(|| TeacherError::Width {
                expected: self.bits,
                got: bits.to_string(),
            })
    }
}

impl Teacher for ExternalTeacher {
    fn alphabet(&self) -> &InputAlphabet {
        &self.alphabet
    }

    fn bits(&self) -> usize {
        self.bits
    }

    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError> {
        self.trace(w).map(|t| *t.last().expect("trace includes ε"))
    }

    fn trace(&mut self, w: &Word) -> Result<Vec<Bits>, TeacherError> {
        self.alphabet
            .check_word(w)
            .map_err(|e| TeacherError::BadQuery(e.to_string()))?;
        self.count += 1;
        self.last_trace.clear();
        let out = self.exchange("RESET")?;
        self.last_trace.push(out);
        for &s in w.iter() {
            let line = format!("STEP {}", self.alphabet.name(s));
            let out = self.exchange(&line)?;
            self.last_trace.push(out);
        }
        Ok(self.last_trace.clone())
    }

    fn query_count(&self) -> u64 {
        self.count
    }
}

impl Drop for ExternalTeacher {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "QUIT");
        let _ = self.stdin.flush();
        if self.child.try_wait().ok().flatten().is_none() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// Memoizing wrapper. Cache hits do not reach the inner teacher.
pub struct CachedTeacher<T> {
    inner: T,
    cache: HashMap<Word, Bits>,
    log: Vec<(Word, Bits)>,
    requests: u64,
}

impl<T: Teacher> CachedTeacher<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            cache: HashMap::new(),
            log: Vec::new(),
            requests: 0,
        }
    }

    /// Distinct words observed, in first-query order.
    pub fn log(&self) -> &[(Word, Bits)] {
        &self.log
    }

    /// A previously observed answer, without querying.
    pub fn lookup(&self, w: &Word) -> Option<Bits> {
        self.cache.get(w).copied()
    }

    /// Queries that reached the inner teacher.
    pub fn unique_queries(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut T {
        &mut self.inner
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: Teacher> Teacher for CachedTeacher<T> {
    fn alphabet(&self) -> &InputAlphabet {
        self.inner.alphabet()
    }

    fn bits(&self) -> usize {
        self.inner.bits()
    }

    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError> {
        self.requests += 1;
        if let Some(&b) = self.cache.get(w) {
            return Ok(b);
        }
        let b = self.inner.query(w)?;
        self.cache.insert(w.clone(), b);
        self.log.push((w.clone(), b));
        Ok(b)
    }

    /// All requests, hits included.
    fn query_count(&self) -> u64 {
        self.requests
    }
}

/// Caps the number of queries forwarded to the inner teacher.
pub struct Budgeted<T> {
    inner: T,
    limit: u64,
}

impl<T: Teacher> Budgeted<T> {
    pub fn new(inner: T, limit: u64) -> Self {
        Self { inner, limit }
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Teacher> Teacher for Budgeted<T> {
    fn alphabet(&self) -> &InputAlphabet {
        self.inner.alphabet()
    }

    fn bits(&self) -> usize {
        self.inner.bits()
    }

    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError> {
        if self.inner.query_count() >= self.limit {
            return Err(TeacherError::BudgetExhausted(self.limit));
        }
        self.inner.query(w)
    }

    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }
}

/// Serves `model` over the line protocol until `QUIT` or end of input.
/// This is the reference SUT harness used by the `kripke-sut` binary.
pub fn serve<R: BufRead, W: Write>(model: &KripkeStructure, input: R, mut output: W) -> io::Result<()> {
    let mut state = model.initial();
    for line in input.lines() {
        let line = line?;
        let mut toks = line.split_whitespace();
        match (toks.next(), toks.next(), toks.next()) {
            (Some("RESET"), None, None) => {
                state = model.initial();
                writeln!(output, "OK {}", model.label(state))?;
            }
            (Some("STEP"), Some(sym), None) => match model.alphabet().lookup(sym) {
                Ok(s) => {
                    state = model.step(state, s);
                    writeln!(output, "OK {}", model.label(state))?;
                }
                Err(e) => writeln!(output, "ERR {e}")?,
            },
            (Some("QUIT"), None, None) => break,
            (None, _, _) => continue,
            _ => writeln!(output, "ERR unrecognised command `{line}`")?,
        }
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::fixtures::*;

    #[test]
    fn kripke_teacher_answers_and_counts() {
        let mut t = KripkeTeacher::new(parity());
        assert_eq!(t.query(&Word::empty()).unwrap(), parity().label(0));
        assert!(t.query(&word(&[0])).unwrap().get(0));
        t.query(&word(&[0, 1])).unwrap();
        assert_eq!(t.query_count(), 3);
    }

    #[test]
    fn cache_hits_do_not_reach_inner() {
        let mut t = CachedTeacher::new(KripkeTeacher::new(parity()));
        let w1 = word(&[0]);
        let w2 = word(&[1, 0]);
        let b = t.query(&w1).unwrap();
        assert_eq!(t.query(&w1).unwrap(), b);
        assert_eq!(t.inner().query_count(), 1);
        assert_eq!(t.query_count(), 2);
        let b2 = t.query(&w2).unwrap();
        assert_eq!(t.log(), &[(w1.clone(), b), (w2, b2)]);
        assert_eq!(t.lookup(&w1), Some(b));
        assert_eq!(t.lookup(&word(&[1, 1, 1])), None);
    }

    #[test]
    fn budget_enforced() {
        let mut t = Budgeted::new(KripkeTeacher::new(parity()), 2);
        t.query(&word(&[0])).unwrap();
        t.query(&word(&[1])).unwrap();
        assert!(matches!(
            t.query(&word(&[1, 1])),
            Err(TeacherError::BudgetExhausted(2))
        ));
        assert_eq!(t.query_count(), 2);
    }

    #[test]
    fn serve_protocol_transcript() {
        let input = "RESET\nSTEP a\nSTEP b\nSTEP z\nBOGUS\nQUIT\nRESET\n";
        let mut out = Vec::new();
        serve(&parity(), input.as_bytes(), &mut out).unwrap();
        let out = String::from_utf8(out).unwrap();
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(&lines[..3], &["OK 0", "OK 1", "OK 1"]);
        assert!(lines[3].starts_with("ERR"));
        assert!(lines[4].starts_with("ERR"));
        assert_eq!(lines.len(), 5);
    }

    fn sh(script: &str) -> ExternalTeacher {
        ExternalTeacher::spawn(&["sh", "-c", script], ab(), 1).unwrap()
    }

    #[test]
    fn external_wrong_width_is_an_error() {
        let mut t = sh("while read l; do echo 'OK 01'; done");
        assert!(matches!(
            t.query(&Word::empty()),
            Err(TeacherError::Width { expected: 1, .. })
        ));
    }

    #[test]
    fn external_closed_stream_is_an_error() {
        let mut t = sh("read l; echo 'OK 0'; read l; exit 0");
        assert!(matches!(t.query(&word(&[0, 0])), Err(TeacherError::Closed)));
    }

    #[test]
    fn external_err_and_garbage() {
        let mut t = sh("read l; echo 'ERR broken'");
        assert!(matches!(t.query(&Word::empty()), Err(TeacherError::Sut(m)) if m == "broken"));
        let mut t = sh("read l; echo 'hello'");
        assert!(matches!(t.query(&Word::empty()), Err(TeacherError::Protocol(_))));
    }
}
