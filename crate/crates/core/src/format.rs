//! Line-oriented text format for Kripke structures and DFA.
//!
//! ```text
//! kripke <n> <k>
//! alphabet <sym1> <sym2> ...
//! initial <qid>
//! state <qid> <bitstring of length k>      (n lines)
//! trans <qid> <sym> <qid'>                 (n·|Σ| lines)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Writing goes through the
//! `Display` impl of [`KripkeStructure`].

use std::path::Path;

use crate::error::{Error, Result};
use crate::kripke::{Bits, InputAlphabet, KripkeStructure};

pub fn parse_kripke(text: &str) -> Result<KripkeStructure> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of input, expected {what}")))
    };

    let (ln, header) = next("`kripke <n> <k>`")?;
    let (n, k) = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["kripke", n, k] => (
            n.parse::<usize>()
                .map_err(|_| err(ln, format!("bad state count `{n}`")))?,
            k.parse::<usize>()
                .map_err(|_| err(ln, format!("bad bit width `{k}`")))?,
        ),
        _ => return Err(err(ln, "expected `kripke <n> <k>`".into())),
    };
    if n == 0 {
        return Err(err(ln, "state count must be positive".into()));
    }

    let (ln, al) = next("`alphabet ...`")?;
    let mut toks = al.split_whitespace();
    if toks.next() != Some("alphabet") {
        return Err(err(ln, "expected `alphabet <sym> ...`".into()));
    }
    let alphabet = InputAlphabet::new(toks).map_err(|e| err(ln, e.to_string()))?;

    let (ln, init) = next("`initial <qid>`")?;
    let initial = match init.split_whitespace().collect::<Vec<_>>()[..] {
        ["initial", q] => parse_state(q, n).map_err(|m| err(ln, m))?,
        _ => return Err(err(ln, "expected `initial <qid>`".into())),
    };

    let m = alphabet.len();
    let mut labels: Vec<Option<u64>> = vec![None; n];
    let mut delta: Vec<Option<usize>> = vec![None; n * m];
    for (ln, line) in lines {
        match line.split_whitespace().collect::<Vec<_>>()[..] {
            ["state", q, bits] => {
                let q = parse_state(q, n).map_err(|m| err(ln, m))?;
                let b = Bits::parse(bits)
                    .filter(|b| b.width() == k)
                    .ok_or_else(|| err(ln, format!("expected a {k}-bit string, got `{bits}`")))?;
                if labels[q].replace(b.value()).is_some() {
                    return Err(err(ln, format!("duplicate label for state {q}")));
                }
            }
            ["trans", q, sym, t] => {
                let q = parse_state(q, n).map_err(|m| err(ln, m))?;
                let s = alphabet.lookup(sym).map_err(|e| err(ln, e.to_string()))?;
                let t = parse_state(t, n).map_err(|m| err(ln, m))?;
                if delta[q * m + s].replace(t).is_some() {
                    return Err(err(ln, format!("duplicate transition from {q} on `{sym}`")));
                }
            }
            _ => return Err(err(ln, format!("unrecognised line `{line}`"))),
        }
    }

    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(q, l)| l.ok_or_else(|| err(0, format!("missing label for state {q}"))))
        .collect::<Result<Vec<_>>>()?;
    let delta = delta
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| {
                err(
                    0,
                    format!(
                        "missing transition from {} on `{}`",
                        i / m,
                        alphabet.name(i % m)
                    ),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;

    KripkeStructure::new(alphabet, k, initial, delta, labels)
}

fn parse_state(tok: &str, n: usize) -> Result<usize, String> {
    match tok.parse::<usize>() {
        Ok(q) if q < n => Ok(q),
        _ => Err(format!("bad state id `{tok}` (expected 0..{n})")),
    }
}

pub fn read_kripke(path: impl AsRef<Path>) -> Result<KripkeStructure> {
    parse_kripke(&std::fs::read_to_string(path)?)
}

pub fn write_kripke(path: impl AsRef<Path>, k: &KripkeStructure) -> Result<()> {
    std::fs::write(path, k.to_string())?;
    Ok(())
}
