//! Requirement syntax.
//!
//! ```text
//! req  := "always" expr | "never" expr | "within" <k> expr | "after" "\"" <symbols> "\"" expr
//! expr := disj ("->" expr)?
//! disj := conj ("|" conj)*
//! conj := unary ("&" unary)*
//! unary:= "!" unary | "(" expr ")" | "bit[" <c> "]" | "in" "==" <symbol> | "true" | "false"
//! ```

use std::fmt;

use crate::error::{Error, Result};

/// A formula over one observation: the state's output bits and the last input symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateFormula {
    True,
    False,
    /// Output bit `c` (0-based) is set.
    Bit(usize),
    /// The last input symbol was this one; false before any input.
    Input(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    pub fn not(f: StateFormula) -> Self {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn max_bit(&self) -> Option<usize> {
        match self {
            StateFormula::Bit(c) => Some(*c),
            StateFormula::True | StateFormula::False | StateFormula::Input(_) => None,
            StateFormula::Not(f) => f.max_bit(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.max_bit().max(b.max_bit())
            }
        }
    }

    pub fn symbols(&self) -> Vec<&str> {
        match self {
            StateFormula::Input(s) => vec![s.as_str()],
            StateFormula::True | StateFormula::False | StateFormula::Bit(_) => Vec::new(),
            StateFormula::Not(f) => f.symbols(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                let mut v = a.symbols();
                v.extend(b.symbols());
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Requirement {
    Always(StateFormula),
    Never(StateFormula),
    /// Some state within `k` steps of the initial state satisfies the formula.
    Within(usize, StateFormula),
    /// The formula holds after the given input word (symbol tokens).
    After(Vec<String>, StateFormula),
}

impl Requirement {
    pub fn formula(&self) -> &StateFormula {
        match self {
            Requirement::Always(f)
            | Requirement::Never(f)
            | Requirement::Within(_, f)
            | Requirement::After(_, f) => f,
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => f.write_str("true"),
            StateFormula::False => f.write_str("false"),
            StateFormula::Bit(c) => write!(f, "bit[{c}]"),
            StateFormula::Input(s) => write!(f, "in == {s}"),
            StateFormula::Not(g) => match **g {
                StateFormula::Input(_) => write!(f, "!({g})"),
                _ => write!(f, "!{g}"),
            },
            StateFormula::And(a, b) => write!(f, "({a} & {b})"),
            StateFormula::Or(a, b) => write!(f, "({a} | {b})"),
            StateFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Requirement::Always(g) => write!(f, "always {g}"),
            Requirement::Never(g) => write!(f, "never {g}"),
            Requirement::Within(k, g) => write!(f, "within {k} {g}"),
            Requirement::After(w, g) => write!(f, "after \"{}\" {g}", w.join(" ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    Quoted(Vec<String>),
    Bang,
    Amp,
    Pipe,
    Arrow,
    EqEq,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let err = |pos: usize, msg: &str| Error::Requirement {
        pos,
        msg: msg.to_string(),
    };
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        i += 1;
        let tok = match c {
            c if c.is_whitespace() => continue,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '-' if chars.get(i).map(|c| c.1) == Some('>') => {
                i += 1;
                Tok::Arrow
            }
            '=' if chars.get(i).map(|c| c.1) == Some('=') => {
                i += 1;
                Tok::EqEq
            }
            '"' => {
                let start = i;
                while i < chars.len() && chars[i].1 != '"' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(err(pos, "unterminated quoted word"));
                }
                let body: String = chars[start..i].iter().map(|c| c.1).collect();
                i += 1;
                Tok::Quoted(body.split_whitespace().map(str::to_string).collect())
            }
            c if c.is_ascii_digit() => {
                let start = i - 1;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|c| c.1).collect();
                Tok::Num(s.parse().map_err(|_| err(pos, "number too large"))?)
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i - 1;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().map(|c| c.1).collect())
            }
            _ => return Err(err(pos, &format!("unexpected character `{c}`"))),
        };
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.len, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Requirement {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn requirement(&mut self) -> Result<Requirement> {
        let r = match self.next() {
            Some(Tok::Ident(kw)) if kw == "always" => Requirement::Always(self.expr()?),
            Some(Tok::Ident(kw)) if kw == "never" => Requirement::Never(self.expr()?),
            Some(Tok::Ident(kw)) if kw == "within" => match self.next() {
                Some(Tok::Num(k)) => Requirement::Within(k, self.expr()?),
                _ => {
                    self.at -= 1;
                    return self.err("expected a step bound after `within`");
                }
            },
            Some(Tok::Ident(kw)) if kw == "after" => match self.next() {
                Some(Tok::Quoted(w)) => Requirement::After(w, self.expr()?),
                _ => {
                    self.at -= 1;
                    return self.err("expected a quoted input word after `after`");
                }
            },
            _ => {
                self.at = self.at.saturating_sub(1);
                return self.err("expected `always`, `never`, `within` or `after`");
            }
        };
        if self.peek().is_some() {
            return self.err("trailing input");
        }
        Ok(r)
    }

    fn expr(&mut self) -> Result<StateFormula> {
        let lhs = self.disj()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.at += 1;
            let rhs = self.expr()?;
            return Ok(StateFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<StateFormula> {
        let mut f = self.conj()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.at += 1;
            f = StateFormula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<StateFormula> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.at += 1;
            f = StateFormula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<StateFormula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.at += 1;
                Ok(StateFormula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(id)) if id == "bit" => {
                self.at += 1;
                self.expect(Tok::LBracket, "`[`")?;
                let c = match self.next() {
                    Some(Tok::Num(c)) => c,
                    _ => {
                        self.at -= 1;
                        return self.err("expected a bit index");
                    }
                };
                self.expect(Tok::RBracket, "`]`")?;
                Ok(StateFormula::Bit(c))
            }
            Some(Tok::Ident(id)) if id == "in" => {
                self.at += 1;
                self.expect(Tok::EqEq, "`==`")?;
                match self.next() {
                    Some(Tok::Ident(s)) => Ok(StateFormula::Input(s)),
                    Some(Tok::Num(n)) => Ok(StateFormula::Input(n.to_string())),
                    _ => {
                        self.at -= 1;
                        self.err("expected an input symbol")
                    }
                }
            }
            Some(Tok::Ident(id)) if id == "true" => {
                self.at += 1;
                Ok(StateFormula::True)
            }
            Some(Tok::Ident(id)) if id == "false" => {
                self.at += 1;
                Ok(StateFormula::False)
            }
            _ => self.err("expected `bit[c]`, `in == σ`, `!`, `(`, `true` or `false`"),
        }
    }
}

pub fn parse_requirement(text: &str) -> Result<Requirement> {
    let toks = tokenize(text)?;
    Parser {
        toks,
        at: 0,
        len: text.len(),
    }
    .requirement()
}
