//! Recursive-descent parser for the metric grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' real)?
//! atom   := real | ident | func '(' expr ')' | '(' expr ')' | '-' atom
//! ident  := ('z'|'v') digit+ | 'conj' '(' ident ')'
//! func   := abs2 | re | im | sqrt | exp | log | conj
//! ```
//!
//! The leading `-` on an atom is a small superset of the base grammar; it
//! is needed so that printed negative constants re-parse.

use super::ast::MetricExpr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    /// Returns the next token with its 1-based column.
    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let col = self.pos + 1;
        if self.pos >= self.src.len() {
            return Ok((Tok::Eof, col));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && self.src[self.pos] == b'.' {
                    self.pos += 1;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
                    let mark = self.pos;
                    self.pos += 1;
                    if self.pos < self.src.len()
                        && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    {
                        self.pos += 1;
                    }
                    if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                    } else {
                        // `e` belonged to an identifier after all; back off.
                        self.pos = mark;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    column: col,
                    message: format!("malformed number `{text}`"),
                })?;
                return Ok((Tok::Num(v), col));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                return Ok((Tok::Ident(text.to_string()), col));
            }
            other => {
                return Err(Error::Parse {
                    column: col,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, col))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, expected: &str) -> Result<()> {
        let (tok, col) = self.bump();
        if tok == want {
            Ok(())
        } else {
            Err(Error::Parse {
                column: col,
                message: format!("expected {expected}, found {}", tok.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<MetricExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = MetricExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = MetricExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<MetricExpr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = MetricExpr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = MetricExpr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<MetricExpr> {
        let base = self.atom()?;
        if self.peek().0 == Tok::Caret {
            self.bump();
            let (tok, col) = self.bump();
            let p = match tok {
                Tok::Num(v) => v,
                Tok::Minus => {
                    let (tok2, col2) = self.bump();
                    match tok2 {
                        Tok::Num(v) => -v,
                        other => {
                            return Err(Error::Parse {
                                column: col2,
                                message: format!(
                                    "expected real exponent, found {}",
                                    other.describe()
                                ),
                            })
                        }
                    }
                }
                other => {
                    return Err(Error::Parse {
                        column: col,
                        message: format!("expected real exponent, found {}", other.describe()),
                    })
                }
            };
            return Ok(MetricExpr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MetricExpr> {
        let (tok, col) = self.bump();
        match tok {
            Tok::Num(v) => Ok(MetricExpr::Const(v)),
            Tok::Minus => {
                let inner = self.atom()?;
                // Fold literal negation so printed negative constants
                // round-trip to the same tree.
                Ok(match inner {
                    MetricExpr::Const(c) => MetricExpr::Const(-c),
                    other => MetricExpr::Neg(Box::new(other)),
                })
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident_or_call(&name, col),
            other => Err(Error::Parse {
                column: col,
                message: format!(
                    "expected number, identifier or `(`, found {}",
                    other.describe()
                ),
            }),
        }
    }

    fn ident_or_call(&mut self, name: &str, col: usize) -> Result<MetricExpr> {
        if let Some(var) = parse_var(name) {
            return Ok(var);
        }
        let ctor: fn(Box<MetricExpr>) -> MetricExpr = match name {
            "abs2" => MetricExpr::Abs2,
            "re" => MetricExpr::Re,
            "im" => MetricExpr::Im,
            "sqrt" => MetricExpr::Sqrt,
            "exp" => MetricExpr::Exp,
            "log" => MetricExpr::Log,
            "conj" => MetricExpr::Conj,
            _ => {
                let _ = col;
                return Err(Error::UnknownIdentifier(name.to_string()));
            }
        };
        self.expect(Tok::LParen, "`(`")?;
        let arg = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(ctor(Box::new(arg)))
    }
}

fn parse_var(name: &str) -> Option<MetricExpr> {
    let mut chars = name.chars();
    let head = chars.next()?;
    let rest: String = chars.collect();
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let idx: usize = rest.parse().ok()?;
    match head {
        'z' => Some(MetricExpr::Z(idx)),
        'v' => Some(MetricExpr::V(idx)),
        _ => None,
    }
}

/// Parse a metric expression from text.
pub fn parse_metric(text: &str) -> Result<MetricExpr> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    loop {
        let (tok, col) = lexer.next()?;
        let eof = tok == Tok::Eof;
        toks.push((tok, col));
        if eof {
            break;
        }
    }
    let mut p = Parser { toks, at: 0 };
    let e = p.expr()?;
    let (tok, col) = p.bump();
    if tok != Tok::Eof {
        return Err(Error::Parse {
            column: col,
            message: format!("expected end of input, found {}", tok.describe()),
        });
    }
    Ok(e)
}

/// Print an expression in a form that re-parses to the same tree.
pub fn print_expr(e: &MetricExpr) -> String {
    let mut s = String::new();
    write_expr(e, 0, &mut s);
    s
}

// Precedence levels: 0 sum, 1 product, 2 power/negation, 3 atom.
fn write_expr(e: &MetricExpr, prec: u8, out: &mut String) {
    use MetricExpr::*;
    let own = match e {
        Add(..) | Sub(..) => 0,
        Mul(..) | Div(..) => 1,
        Pow(..) | Neg(..) => 2,
        _ => 3,
    };
    let need_paren = own < prec;
    if need_paren {
        out.push('(');
    }
    match e {
        Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                out.push('-');
                out.push_str(&format!("{}", -c));
            } else {
                out.push_str(&format!("{c}"));
            }
        }
        Z(i) => out.push_str(&format!("z{i}")),
        V(i) => out.push_str(&format!("v{i}")),
        Add(a, b) => {
            write_expr(a, 0, out);
            out.push('+');
            write_expr(b, 1, out);
        }
        Sub(a, b) => {
            write_expr(a, 0, out);
            out.push('-');
            write_expr(b, 1, out);
        }
        Mul(a, b) => {
            write_expr(a, 1, out);
            out.push('*');
            write_expr(b, 2, out);
        }
        Div(a, b) => {
            write_expr(a, 1, out);
            out.push('/');
            write_expr(b, 2, out);
        }
        Pow(a, p) => {
            write_expr(a, 3, out);
            out.push('^');
            if *p < 0.0 {
                out.push('-');
                out.push_str(&format!("{}", -p));
            } else {
                out.push_str(&format!("{p}"));
            }
        }
        Neg(a) => {
            out.push('-');
            write_expr(a, 3, out);
        }
        Conj(a) => write_call("conj", a, out),
        Abs2(a) => write_call("abs2", a, out),
        Re(a) => write_call("re", a, out),
        Im(a) => write_call("im", a, out),
        Sqrt(a) => write_call("sqrt", a, out),
        Exp(a) => write_call("exp", a, out),
        Log(a) => write_call("log", a, out),
    }
    if need_paren {
        out.push(')');
    }
}

fn write_call(name: &str, arg: &MetricExpr, out: &mut String) {
    out.push_str(name);
    out.push('(');
    write_expr(arg, 0, out);
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use MetricExpr::*;

    #[test]
    fn parses_sum_of_abs2() {
        let e = parse_metric("abs2(v1)+abs2(v2)").unwrap();
        assert_eq!(
            e,
            Add(
                Box::new(Abs2(Box::new(V(1)))),
                Box::new(Abs2(Box::new(V(2))))
            )
        );
    }

    #[test]
    fn parses_division_with_pow() {
        let e = parse_metric("abs2(v1)/(1+abs2(z1))^2").unwrap();
        match e {
            Div(num, den) => {
                assert_eq!(*num, Abs2(Box::new(V(1))));
                match *den {
                    Pow(base, p) => {
                        assert_eq!(p, 2.0);
                        assert_eq!(
                            *base,
                            Add(Box::new(Const(1.0)), Box::new(Abs2(Box::new(Z(1)))))
                        );
                    }
                    other => panic!("expected pow, got {other:?}"),
                }
            }
            other => panic!("expected div, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_paren_reports_column() {
        let err = parse_metric("abs2(v1").unwrap_err();
        match err {
            crate::error::Error::Parse { column, .. } => assert_eq!(column, 8),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_metric("abs3(v1)").unwrap_err();
        assert!(matches!(err, crate::error::Error::UnknownIdentifier(_)));
    }

    #[test]
    fn precedence_matches_grammar() {
        let e = parse_metric("1+2*3").unwrap();
        assert_eq!(
            e,
            Add(
                Box::new(Const(1.0)),
                Box::new(Mul(Box::new(Const(2.0)), Box::new(Const(3.0))))
            )
        );
    }

    #[test]
    fn roundtrip_examples() {
        for src in [
            "abs2(v1)+abs2(v2)",
            "abs2(v1)/(1+abs2(z1))^2",
            "(abs2(v1)^2+abs2(v2)^2)^0.5",
            "conj(z1)*v1+conj(z2)*v2",
            "1-abs2(z1)-abs2(z2)",
            "-2.5*abs2(v1)",
        ] {
            let e = parse_metric(src).unwrap();
            let printed = print_expr(&e);
            let e2 = parse_metric(&printed).unwrap();
            assert_eq!(e, e2, "roundtrip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn negative_constant_roundtrip() {
        let e = Mul(Box::new(Const(-1.5)), Box::new(Abs2(Box::new(V(1)))));
        let printed = print_expr(&e);
        assert_eq!(parse_metric(&printed).unwrap(), e);
    }
}
