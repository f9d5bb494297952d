use super::expr::Expr;
use std::fmt;
use std::sync::Arc;

/// Parse the textual surface syntax for relation expressions.
///
/// Grammar, loosest to tightest binding:
///
/// ```text
/// union  := diff   ('|' diff)*
/// diff   := inter  ('\' inter)*
/// inter  := cross  ('&' cross)*
/// cross  := seq    ('*' seq)*        -- only when '*' is followed by a term
/// seq    := postfix (';' postfix)*
/// postfix:= atom ('?' | '+' | '*' | '^-1')*
/// atom   := name | name '(' union {',' union} ')' | '(' union ')'
///         | '[' union ']' | '~' atom
/// ```
///
/// A `*` is cartesian product when a term follows it (`W*R`) and
/// reflexive-transitive closure otherwise (`hb*`). Recognised calls are
/// `weaklift`, `stronglift`, `dom`, `ran`.
pub fn parse_expr(src: &str) -> Result<Expr, ExprParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.union()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("expression parse error at column {col}: {msg}")]
pub struct ExprParseError {
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    Pipe,
    Amp,
    Backslash,
    Semi,
    Star,
    Plus,
    Question,
    Tilde,
    InverseOp,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Name(n) => return write!(f, "`{n}`"),
            Tok::Pipe => "|",
            Tok::Amp => "&",
            Tok::Backslash => "\\",
            Tok::Semi => ";",
            Tok::Star => "*",
            Tok::Plus => "+",
            Tok::Question => "?",
            Tok::Tilde => "~",
            Tok::InverseOp => "^-1",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
        };
        write!(f, "`{s}`")
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
                continue;
            }
            '|' => out.push((Tok::Pipe, col)),
            '&' => out.push((Tok::Amp, col)),
            '\\' => out.push((Tok::Backslash, col)),
            ';' => out.push((Tok::Semi, col)),
            '*' => out.push((Tok::Star, col)),
            '+' => out.push((Tok::Plus, col)),
            '?' => out.push((Tok::Question, col)),
            '~' => out.push((Tok::Tilde, col)),
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            '[' => out.push((Tok::LBracket, col)),
            ']' => out.push((Tok::RBracket, col)),
            ',' => out.push((Tok::Comma, col)),
            '^' => {
                if bytes[i..].starts_with(b"^-1") {
                    out.push((Tok::InverseOp, col));
                    i += 3;
                    continue;
                }
                return Err(ExprParseError {
                    col,
                    msg: "expected `^-1`".into(),
                });
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Name(src[start..i].to_string()), col));
                continue;
            }
            c => {
                return Err(ExprParseError {
                    col,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, msg: &str) -> ExprParseError {
        let col = self
            .tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|(_, c)| *c)
            .unwrap_or(1);
        ExprParseError {
            col,
            msg: msg.to_string(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprParseError> {
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(self.err(&format!("expected {want}, found {t}"))),
            None => Err(self.err(&format!("expected {want}, found end of input"))),
        }
    }

    fn union(&mut self) -> Result<Expr, ExprParseError> {
        let mut e = self.diff()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            e = Expr::Union(Arc::new(e), Arc::new(self.diff()?));
        }
        Ok(e)
    }

    fn diff(&mut self) -> Result<Expr, ExprParseError> {
        let mut e = self.inter()?;
        while self.peek() == Some(&Tok::Backslash) {
            self.bump();
            e = Expr::Diff(Arc::new(e), Arc::new(self.inter()?));
        }
        Ok(e)
    }

    fn inter(&mut self) -> Result<Expr, ExprParseError> {
        let mut e = self.cross()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            e = Expr::Inter(Arc::new(e), Arc::new(self.cross()?));
        }
        Ok(e)
    }

    fn cross(&mut self) -> Result<Expr, ExprParseError> {
        let mut e = self.seq()?;
        while self.peek() == Some(&Tok::Star) && self.star_is_infix() {
            self.bump();
            e = Expr::Cross(Arc::new(e), Arc::new(self.seq()?));
        }
        Ok(e)
    }

    fn seq(&mut self) -> Result<Expr, ExprParseError> {
        let mut e = self.postfix()?;
        while self.peek() == Some(&Tok::Semi) {
            self.bump();
            e = Expr::Seq(Arc::new(e), Arc::new(self.postfix()?));
        }
        Ok(e)
    }

    /// `*` directly before a term opener is the cartesian product.
    fn star_is_infix(&self) -> bool {
        matches!(
            self.peek2(),
            Some(Tok::Name(_)) | Some(Tok::LParen) | Some(Tok::LBracket) | Some(Tok::Tilde)
        )
    }

    fn postfix(&mut self) -> Result<Expr, ExprParseError> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Question) => {
                    self.bump();
                    e = Expr::RClos(Arc::new(e));
                }
                Some(Tok::Plus) => {
                    self.bump();
                    e = Expr::TClos(Arc::new(e));
                }
                Some(Tok::Star) if !self.star_is_infix() => {
                    self.bump();
                    e = Expr::RTClos(Arc::new(e));
                }
                Some(Tok::InverseOp) => {
                    self.bump();
                    e = Expr::Inverse(Arc::new(e));
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ExprParseError> {
        match self.bump() {
            Some(Tok::Name(n)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    let mut args = vec![self.union()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.bump();
                        args.push(self.union()?);
                    }
                    self.expect(Tok::RParen)?;
                    self.call(&n, args)
                } else {
                    Ok(Expr::Name(n))
                }
            }
            Some(Tok::LParen) => {
                let e = self.union()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::LBracket) => {
                let e = self.union()?;
                self.expect(Tok::RBracket)?;
                Ok(Expr::Lift(Arc::new(e)))
            }
            Some(Tok::Tilde) => Ok(Expr::Complement(Arc::new(self.atom()?))),
            Some(t) => Err(self.err(&format!("expected a term, found {t}"))),
            None => Err(self.err("expected a term, found end of input")),
        }
    }

    fn call(&mut self, name: &str, mut args: Vec<Expr>) -> Result<Expr, ExprParseError> {
        let arity = |want: usize, args: &Vec<Expr>| -> Result<(), ExprParseError> {
            if args.len() == want {
                Ok(())
            } else {
                Err(ExprParseError {
                    col: 1,
                    msg: format!("`{name}` takes {want} argument(s), got {}", args.len()),
                })
            }
        };
        match name {
            "weaklift" => {
                arity(2, &args)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Expr::WeakLift(Arc::new(a), Arc::new(b)))
            }
            "stronglift" => {
                arity(2, &args)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Expr::StrongLift(Arc::new(a), Arc::new(b)))
            }
            "dom" => {
                arity(1, &args)?;
                Ok(Expr::Domain(Arc::new(args.pop().unwrap())))
            }
            "ran" => {
                arity(1, &args)?;
                Ok(Expr::Range(Arc::new(args.pop().unwrap())))
            }
            _ => Err(ExprParseError {
                col: 1,
                msg: format!("unknown function `{name}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_paper_style_expressions() {
        for src in [
            "po & ((~stxn;stxn) | (stxn;~stxn))",
            "sync | tfence | (lwsync \\ (W*R))",
            "(rfe | ((fre|coe)*;ihb))*;(fre|coe)*;rfe?",
            "[W];efence;hb*;[W]",
            "come*;efence*;hb*;(sync|tfence);hb*",
            "rmw & (fre;coe)",
            "stronglift(hb,stxn)",
            "cnf \\ (Ato*Ato) \\ (hb | hb^-1)",
            "[Locked];po | po;[Locked] | tfence",
            "dom(rmw) | ran(rmw)",
        ] {
            parse_expr(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        }
    }

    #[test]
    fn star_disambiguation() {
        // postfix: hb* ; x  vs infix: W * R
        let post = parse_expr("hb*;po").unwrap();
        assert!(matches!(post, Expr::Seq(_, _)));
        let infix = parse_expr("W*R").unwrap();
        assert!(matches!(infix, Expr::Cross(_, _)));
        let mixed = parse_expr("lwsync \\ (W*R)").unwrap();
        assert!(matches!(mixed, Expr::Diff(_, _)));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_expr("po |").is_err());
        assert!(parse_expr("po ^ 2").is_err());
        assert!(parse_expr("(po").is_err());
        assert!(parse_expr("frob(po)").is_err());
    }

    #[test]
    fn roundtrips_through_display() {
        let e = parse_expr("(rfe?;ihb;rfe?) | weaklift(thb,stxn)").unwrap();
        let e2 = parse_expr(&e.to_string()).unwrap();
        assert_eq!(e, e2);
    }
}
