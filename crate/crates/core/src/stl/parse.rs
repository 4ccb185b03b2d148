//! Text syntax.
//!
//! ```text
//! formula  := implies
//! implies  := or ( "->" implies )?
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "!" unary | "X" unary | ("F"|"G") "[" int "," int "]" unary | primary
//! primary  := "(" formula ")" | "true" | "false" | linear cmp linear
//! linear   := ["-"] term (("+"|"-") term)*
//! term     := number ["*" var] | var
//! cmp      := ">" | ">=" | "<" | "<="
//! ```
//!
//! Variables are `x0`, `x1`, ... Non-strict comparisons produce the same
//! atom as their strict counterparts.

use super::Formula;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Next,
    Finally,
    Globally,
    True,
    False,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Gt,
    Ge,
    Lt,
    Le,
    Plus,
    Minus,
    Star,
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| Error::Syntax {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
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
        let start = (line, col);
        let peek = chars.get(i + 1).copied();
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ',' => (Tok::Comma, 1),
            '!' | '~' => (Tok::Not, 1),
            '&' if peek == Some('&') => (Tok::And, 2),
            '&' => (Tok::And, 1),
            '|' if peek == Some('|') => (Tok::Or, 2),
            '|' => (Tok::Or, 1),
            '-' if peek == Some('>') => (Tok::Implies, 2),
            '-' => (Tok::Minus, 1),
            '+' => (Tok::Plus, 1),
            '*' => (Tok::Star, 1),
            '>' if peek == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            '<' if peek == Some('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v: f64 = s
                    .parse()
                    .map_err(|_| err(start.0, start.1, format!("bad number `{s}`")))?;
                (Tok::Num(v), j - i)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match word.as_str() {
                    "X" => Tok::Next,
                    "F" => Tok::Finally,
                    "G" => Tok::Globally,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    w if w.len() > 1
                        && w.starts_with('x')
                        && w[1..].bytes().all(|b| b.is_ascii_digit()) =>
                    {
                        Tok::Var(w[1..].parse().map_err(|_| {
                            err(start.0, start.1, format!("bad variable `{w}`"))
                        })?)
                    }
                    w => return Err(err(start.0, start.1, format!("unknown identifier `{w}`"))),
                };
                (tok, j - i)
            }
            c => return Err(err(start.0, start.1, format!("unexpected character `{c}`"))),
        };
        out.push(Spanned {
            tok,
            line: start.0,
            column: start.1,
        });
        i += width;
        col += width;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let s = &self.toks[self.pos];
        Error::Syntax {
            line: s.line,
            column: s.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn interval(&mut self) -> Result<(usize, usize)> {
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.index()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.index()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok((lo, hi))
    }

    fn index(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 => {
                self.bump();
                Ok(v as usize)
            }
            t => Err(self.error(format!("expected non-negative integer, found {t:?}"))),
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Next => {
                let mut n = 0;
                while *self.peek() == Tok::Next {
                    self.bump();
                    n += 1;
                }
                Ok(Formula::next(n, self.unary()?))
            }
            Tok::Finally | Tok::Globally => {
                let glob = *self.peek() == Tok::Globally;
                self.bump();
                let at = self.pos;
                let (lo, hi) = self.interval()?;
                let inner = self.unary()?;
                let f = if glob {
                    Formula::globally(lo, hi, inner)
                } else {
                    Formula::finally(lo, hi, inner)
                };
                f.map_err(|e| {
                    let s = &self.toks[at];
                    Error::Syntax {
                        line: s.line,
                        column: s.column,
                        message: e.to_string(),
                    }
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let f = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::True => {
                self.bump();
                Ok(Formula::always_true())
            }
            Tok::False => {
                self.bump();
                Ok(Formula::always_false())
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let lhs = self.linear()?;
        let op = match self.peek() {
            Tok::Gt | Tok::Ge | Tok::Lt | Tok::Le => self.bump(),
            t => return Err(self.error(format!("expected comparison, found {t:?}"))),
        };
        let rhs = self.linear()?;
        // lhs - rhs (op) 0
        let n = lhs.0.len().max(rhs.0.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in lhs.0.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in rhs.0.iter().enumerate() {
            coeffs[i] -= c;
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let offset = rhs.1 - lhs.1;
        Ok(match op {
            Tok::Gt | Tok::Ge => Formula::predicate(coeffs, offset),
            _ => Formula::predicate(coeffs.into_iter().map(|c| -c).collect(), -offset),
        })
    }

    /// Returns (coefficients, constant).
    fn linear(&mut self) -> Result<(Vec<f64>, f64)> {
        let mut coeffs: Vec<f64> = Vec::new();
        let mut constant = 0.0;
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        loop {
            match self.peek().clone() {
                Tok::Num(v) => {
                    self.bump();
                    if *self.peek() == Tok::Star {
                        self.bump();
                        match self.bump() {
                            Tok::Var(k) => add(&mut coeffs, k, sign * v),
                            t => {
                                self.pos -= 1;
                                return Err(self.error(format!("expected variable, found {t:?}")));
                            }
                        }
                    } else if let Tok::Var(k) = *self.peek() {
                        self.bump();
                        add(&mut coeffs, k, sign * v);
                    } else {
                        constant += sign * v;
                    }
                }
                Tok::Var(k) => {
                    self.bump();
                    add(&mut coeffs, k, sign);
                }
                t => return Err(self.error(format!("expected number or variable, found {t:?}"))),
            }
            match self.peek() {
                Tok::Plus => sign = 1.0,
                Tok::Minus => sign = -1.0,
                _ => break,
            }
            self.bump();
        }
        Ok((coeffs, constant))
    }
}

fn add(coeffs: &mut Vec<f64>, k: usize, c: f64) {
    if coeffs.len() <= k {
        coeffs.resize(k + 1, 0.0);
    }
    coeffs[k] += c;
}

/// Parses a formula from its text form.
pub fn parse(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.implies()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected trailing {:?}", p.peek())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::Trace;

    #[test]
    fn atoms_normalise() {
        assert_eq!(parse("x0 > 1").unwrap(), Formula::predicate(vec![1.0], 1.0));
        assert_eq!(parse("x0 < 1").unwrap(), Formula::predicate(vec![-1.0], -1.0));
        assert_eq!(
            parse("2*x1 - x0 >= 3 + x0").unwrap(),
            Formula::predicate(vec![-2.0, 2.0], 3.0)
        );
        assert_eq!(parse("-x0 + 0.5 x1 > -1").unwrap(), Formula::predicate(vec![-1.0, 0.5], -1.0));
    }

    #[test]
    fn precedence() {
        let f = parse("x0 > 0 | x0 > 1 & x0 > 2 -> x0 > 3").unwrap();
        let p = |c| Formula::predicate(vec![1.0], c);
        assert_eq!(f, p(0.0).or(p(1.0).and(p(2.0))).implies(p(3.0)));
        let g = parse("!F[0,2] x0 > 0 & X X x0 > 1").unwrap();
        assert_eq!(
            g,
            Formula::finally(0, 2, p(0.0)).unwrap().not().and(Formula::next(2, p(1.0)))
        );
        let r = parse("x0>0 -> x0>1 -> x0>2").unwrap();
        assert_eq!(r, p(0.0).implies(p(1.0).implies(p(2.0))));
    }

    #[test]
    fn half_open_membership() {
        let f = parse("x0 >= 0 & x0 < 1").unwrap();
        assert!(f.satisfies(&Trace::scalar(&[0.5]), 0).unwrap());
        assert!(!f.satisfies(&Trace::scalar(&[1.0]), 0).unwrap());
    }

    #[test]
    fn errors_have_positions() {
        match parse("x0 > 1 &\n  x1 >> 2") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 7)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("F[3,1] x0 > 0"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("y > 0"), Err(Error::Syntax { line: 1, column: 1, .. })));
        assert!(parse("(x0 > 0").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "G[0,3] (x0 > 1 -> F[1,2] x1 <= -2.5)",
            "X X !(x0 - 2*x2 > 0.125) | true",
            "false & G[1,1] x0 >= 0",
        ] {
            let f = parse(s).unwrap();
            assert_eq!(parse(&f.to_string()).unwrap(), f, "{s}");
        }
    }
}
