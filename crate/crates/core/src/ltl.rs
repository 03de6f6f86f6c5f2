//! Syntactically co-safe LTL: parsing, printing, positive normal form and a
//! reference evaluator over finite words.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("parse error at {at}: {msg}")]
    Parse { at: Span, msg: String },
    #[error("formula is not syntactically co-safe at {at}: {msg}")]
    NonCoSafe { at: Span, msg: String },
    #[error("negation of temporal operator `{0}` has no co-safe normal form")]
    NegatedTemporal(&'static str),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }
    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }
    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    /// Atomic propositions in lexicographic order.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True when negations only sit directly on atoms.
    pub fn is_pnf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            Formula::Next(f) | Formula::Eventually(f) => f.is_pnf(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => a.is_pnf() && b.is_pnf(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Until(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            _ => 3,
        }
    }
}

fn write_at(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    let paren = f.precedence() < min;
    if paren {
        out.write_str("(")?;
    }
    match f {
        Formula::True => out.write_str("true")?,
        Formula::False => out.write_str("false")?,
        Formula::Atom(a) => out.write_str(a)?,
        Formula::Not(g) => {
            out.write_str("!")?;
            write_at(g, 3, out)?;
        }
        Formula::Next(g) => {
            out.write_str("X ")?;
            write_at(g, 3, out)?;
        }
        Formula::Eventually(g) => {
            out.write_str("F ")?;
            write_at(g, 3, out)?;
        }
        Formula::And(a, b) => {
            write_at(a, 2, out)?;
            out.write_str(" && ")?;
            write_at(b, 3, out)?;
        }
        Formula::Or(a, b) => {
            write_at(a, 1, out)?;
            out.write_str(" || ")?;
            write_at(b, 2, out)?;
        }
        Formula::Until(a, b) => {
            write_at(a, 1, out)?;
            out.write_str(" U ")?;
            write_at(b, 0, out)?;
        }
    }
    if paren {
        out.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_at(self, 0, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    LParen,
    RParen,
    F,
    X,
    U,
    G,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::True => "`true`".into(),
        Tok::False => "`false`".into(),
        Tok::Not => "`!`".into(),
        Tok::And => "`&&`".into(),
        Tok::Or => "`||`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::F => "`F`".into(),
        Tok::X => "`X`".into(),
        Tok::U => "`U`".into(),
        Tok::G => "`G`".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, LtlError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| LtlError::Parse { at: Span { line, col }, msg };
    while i < chars.len() {
        let c = chars[i];
        let at = Span { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        if two('&', '&') || two('|', '|') {
            out.push((if c == '&' { Tok::And } else { Tok::Or }, at));
            i += 2;
            col += 2;
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Not),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, at));
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "F" => Tok::F,
                "X" => Tok::X,
                "U" => Tok::U,
                "G" => Tok::G,
                "true" => Tok::True,
                "false" => Tok::False,
                w if w.starts_with(|ch: char| ch.is_ascii_lowercase()) && !w.chars().any(|ch| ch.is_ascii_uppercase()) => {
                    Tok::Ident(word)
                }
                _ => return Err(err(at.line, at.col, format!("invalid identifier `{word}`"))),
            };
            out.push((tok, at));
            continue;
        }
        return Err(err(line, col, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }
    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|(_, s)| *s).unwrap_or(self.end)
    }
    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, LtlError> {
        Err(LtlError::Parse { at: self.span(), msg: msg.into() })
    }

    // until := or ('U' until)?
    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::U) {
            self.pos += 1;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let at = self.span();
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::F => Ok(Formula::eventually(self.unary()?)),
            Tok::X => Ok(Formula::next(self.unary()?)),
            Tok::G => Err(LtlError::NonCoSafe { at, msg: "`G` has no finite good prefixes in general".into() }),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(s) => Ok(Formula::Atom(s)),
            Tok::LParen => {
                let inner = self.until()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            other => {
                self.pos -= 1;
                self.fail(format!("unexpected {}", describe(&other)))
            }
        }
    }
}

/// Parses a formula and checks that it is syntactically co-safe, i.e. that
/// after pushing negations inward no negation lands on `F` or `U`.
pub fn parse(text: &str) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    let end = {
        let lines: Vec<&str> = text.split('\n').collect();
        Span { line: lines.len(), col: lines.last().map_or(0, |l| l.chars().count()) + 1 }
    };
    let mut p = Parser { toks, pos: 0, end };
    let f = p.until()?;
    if p.pos < p.toks.len() {
        let t = p.toks[p.pos].0.clone();
        return p.fail(format!("unexpected {}", describe(&t)));
    }
    to_pnf(&f).map_err(|e| LtlError::NonCoSafe { at: Span { line: 1, col: 1 }, msg: e.to_string() })?;
    Ok(f)
}

/// Pushes negations down to atoms.
pub fn to_pnf(f: &Formula) -> Result<Formula, LtlError> {
    pnf(f, false)
}

fn pnf(f: &Formula, neg: bool) -> Result<Formula, LtlError> {
    Ok(match (f, neg) {
        (Formula::True, false) | (Formula::False, true) => Formula::True,
        (Formula::True, true) | (Formula::False, false) => Formula::False,
        (Formula::Atom(_), false) => f.clone(),
        (Formula::Atom(_), true) => Formula::not(f.clone()),
        (Formula::Not(g), _) => pnf(g, !neg)?,
        (Formula::And(a, b), false) => Formula::and(pnf(a, false)?, pnf(b, false)?),
        (Formula::And(a, b), true) => Formula::or(pnf(a, true)?, pnf(b, true)?),
        (Formula::Or(a, b), false) => Formula::or(pnf(a, false)?, pnf(b, false)?),
        (Formula::Or(a, b), true) => Formula::and(pnf(a, true)?, pnf(b, true)?),
        (Formula::Next(g), _) => Formula::next(pnf(g, neg)?),
        (Formula::Eventually(g), false) => Formula::eventually(pnf(g, false)?),
        (Formula::Until(a, b), false) => Formula::until(pnf(a, false)?, pnf(b, false)?),
        (Formula::Eventually(_), true) => return Err(LtlError::NegatedTemporal("F")),
        (Formula::Until(..), true) => return Err(LtlError::NegatedTemporal("U")),
    })
}

/// Informative-prefix semantics on a finite word: every obligation must be
/// discharged inside the word. Positions past the end satisfy only `true`.
pub fn satisfies(f: &Formula, word: &[BTreeSet<String>]) -> bool {
    match to_pnf(f) {
        Ok(g) => sat(&g, word, 0),
        Err(_) => false,
    }
}

fn sat(f: &Formula, w: &[BTreeSet<String>], i: usize) -> bool {
    let n = w.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => i < n && w[i].contains(a),
        Formula::Not(g) => match &**g {
            Formula::Atom(a) => i < n && !w[i].contains(a),
            _ => unreachable!("input is in positive normal form"),
        },
        Formula::And(a, b) => sat(a, w, i) && sat(b, w, i),
        Formula::Or(a, b) => sat(a, w, i) || sat(b, w, i),
        Formula::Next(g) => i < n && sat(g, w, i + 1),
        Formula::Eventually(g) => (i..n).any(|j| sat(g, w, j)),
        Formula::Until(a, b) => {
            for j in i..n {
                if sat(b, w, j) {
                    return true;
                }
                if !sat(a, w, j) {
                    return false;
                }
            }
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let f = parse("a U b U c").unwrap();
        assert_eq!(f, Formula::until(Formula::atom("a"), Formula::until(Formula::atom("b"), Formula::atom("c"))));
        let g = parse("a || b && c").unwrap();
        assert_eq!(g, Formula::or(Formula::atom("a"), Formula::and(Formula::atom("b"), Formula::atom("c"))));
        let h = parse("!a U F b && c").unwrap();
        assert_eq!(
            h,
            Formula::until(
                Formula::not(Formula::atom("a")),
                Formula::and(Formula::eventually(Formula::atom("b")), Formula::atom("c"))
            )
        );
    }

    #[test]
    fn rejects_always_and_bad_input() {
        assert!(matches!(parse("G a"), Err(LtlError::NonCoSafe { .. })));
        assert!(matches!(parse("!F a"), Err(LtlError::NonCoSafe { .. })));
        assert!(matches!(parse("!(a U b)"), Err(LtlError::NonCoSafe { .. })));
        match parse("a &&\n  (b ||") {
            Err(LtlError::Parse { at, .. }) => assert_eq!(at.line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("Abc").is_err());
        assert!(parse("a b").is_err());
    }

    #[test]
    fn negated_next_is_fine() {
        let f = parse("F (repair_p4 && X !p4)").unwrap();
        assert!(to_pnf(&f).unwrap().is_pnf());
        assert!(parse("!X a").is_ok());
    }

    #[test]
    fn evaluator_basics() {
        let l = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let f = parse("F (a && X b)").unwrap();
        assert!(satisfies(&f, &[l(&[]), l(&["a"]), l(&["b"])]));
        assert!(!satisfies(&f, &[l(&["a"]), l(&[]), l(&["b"])]));
        assert!(!satisfies(&f, &[l(&["a"])]));
        let g = parse("!a U b").unwrap();
        assert!(satisfies(&g, &[l(&[]), l(&["b"])]));
        assert!(!satisfies(&g, &[l(&["a"]), l(&["b"])]));
        assert!(satisfies(&parse("X true").unwrap(), &[l(&[])]));
        assert!(!satisfies(&parse("X true").unwrap(), &[]));
    }
}
