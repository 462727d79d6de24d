//! Recursive-descent parser for the call-expression surface syntax.
//!
//! ```text
//! program := expr (';' expr)* ';'?
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | primary
//! primary := call | STRING | NUMBER | triple | '(' expr ')'
//! call    := IDENT '(' (arg (',' arg)* ','?)? ')'
//!          | 'np' '.' 'array' '(' triple ')'
//! arg     := IDENT '=' expr | expr
//! triple  := '[' expr ',' expr ',' expr ','? ']'
//! ```

use super::ast::{Arg, BinOp, Expr, ExprKind, Span};
use super::lexer::{expected_primary, tokenize, Token, TokenKind};
use super::SyntaxError;

/// Parse a single expression.
pub fn parse(source: &str) -> Result<Expr, SyntaxError> {
    let mut parser = Parser::new(source)?;
    let expr = parser.expr()?;
    parser.expect_eof(&["`+`", "`-`", "`*`"])?;
    Ok(expr)
}

/// Parse a `;`-separated sequence of stage expressions.
pub fn parse_stages(source: &str) -> Result<Vec<Expr>, SyntaxError> {
    let mut parser = Parser::new(source)?;
    let mut stages = vec![parser.expr()?];
    while parser.eat(&TokenKind::Semicolon) {
        if parser.peek() == &TokenKind::Eof {
            break;
        }
        stages.push(parser.expr()?);
    }
    parser.expect_eof(&["`+`", "`-`", "`*`", "`;`"])?;
    Ok(stages)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Self, SyntaxError> {
        Ok(Self {
            tokens: tokenize(source)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, ahead: usize) -> &TokenKind {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    /// End offset of the previously consumed token.
    fn last_end(&self) -> usize {
        if self.pos == 0 {
            return 0;
        }
        let t = &self.tokens[self.pos - 1];
        t.offset + t.kind.spelling().len().max(1)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError::new(
            self.offset(),
            format!("unexpected {}", self.peek()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, kind: TokenKind, label: &str) -> Result<Token, SyntaxError> {
        if self.peek() == &kind {
            Ok(self.bump())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn expect_eof(&self, continuations: &[&str]) -> Result<(), SyntaxError> {
        if self.peek() == &TokenKind::Eof {
            Ok(())
        } else {
            let mut expected = continuations.to_vec();
            expected.push("end of input");
            Err(self.error(&expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.eat(&TokenKind::Star) {
            let rhs = self.unary()?;
            lhs = binary(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek() == &TokenKind::Minus {
            let start = self.bump().offset;
            let inner = self.unary()?;
            let span = Span {
                start,
                end: inner.span.end,
            };
            return Ok(match inner.kind {
                ExprKind::Number(n) => Expr::new(ExprKind::Number(-n), span),
                _ => Expr::new(ExprKind::Neg(Box::new(inner)), span),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.offset();
        match self.peek().clone() {
            TokenKind::Number(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Number(n), self.span_from(start)))
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Str(s), self.span_from(start)))
            }
            TokenKind::LBracket => self.triple(),
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.bump();
                if self.peek() == &TokenKind::Dot {
                    return self.dotted(name, start);
                }
                self.expect(TokenKind::LParen, "`(`")?;
                let args = self.args()?;
                Ok(Expr::new(ExprKind::Call { name, args }, self.span_from(start)))
            }
            _ => Err(self.error(&expected_primary().iter().map(String::as_str).collect::<Vec<_>>())),
        }
    }

    fn dotted(&mut self, head: String, start: usize) -> Result<Expr, SyntaxError> {
        self.bump();
        let member_offset = self.offset();
        let member = match self.peek() {
            TokenKind::Ident(m) => m.clone(),
            _ => return Err(self.error(&["identifier"])),
        };
        if head != "np" || member != "array" {
            return Err(SyntaxError::new(
                member_offset,
                format!("unsupported attribute `{head}.{member}`"),
                vec!["`np.array`".into()],
            ));
        }
        self.bump();
        self.expect(TokenKind::LParen, "`(`")?;
        let triple = self.triple()?;
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(Expr::new(triple.kind, self.span_from(start)))
    }

    fn triple(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.expect(TokenKind::LBracket, "`[`")?.offset;
        let a = self.expr()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let b = self.expr()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let c = self.expr()?;
        self.eat(&TokenKind::Comma);
        self.expect(TokenKind::RBracket, "`]`")?;
        Ok(Expr::new(ExprKind::Triple(Box::new([a, b, c])), self.span_from(start)))
    }

    fn args(&mut self) -> Result<Vec<Arg>, SyntaxError> {
        let mut args: Vec<Arg> = Vec::new();
        loop {
            if self.eat(&TokenKind::RParen) {
                return Ok(args);
            }
            let named = matches!(self.peek(), TokenKind::Ident(_)) && self.peek_at(1) == &TokenKind::Equals;
            let arg_offset = self.offset();
            let arg = if named {
                let name = match self.bump().kind {
                    TokenKind::Ident(n) => n,
                    _ => unreachable!(),
                };
                self.bump();
                Arg {
                    name: Some(name),
                    value: self.expr()?,
                }
            } else {
                if args.iter().any(|a| a.name.is_some()) {
                    return Err(SyntaxError::new(
                        arg_offset,
                        "positional argument follows keyword argument".into(),
                        vec!["`name=`".into(), "`)`".into()],
                    ));
                }
                Arg {
                    name: None,
                    value: self.expr()?,
                }
            };
            args.push(arg);
            if !self.eat(&TokenKind::Comma) && self.peek() != &TokenKind::RParen {
                return Err(self.error(&["`,`", "`)`", "`+`", "`-`", "`*`"]));
            }
        }
    }

    fn span_from(&self, start: usize) -> Span {
        Span {
            start,
            end: self.last_end(),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = Span {
        start: lhs.span.start,
        end: rhs.span.end,
    };
    Expr::new(
        ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        span,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call_args(e: &Expr) -> &[Arg] {
        match &e.kind {
            ExprKind::Call { args, .. } => args,
            other => panic!("expected call, got {other:?}"),
        }
    }

    #[test]
    fn parses_pen_alignment() {
        let e = parse(r#"parallel_cost(get_axis("pen"), get_axis("pen holder"))"#).unwrap();
        let args = call_args(&e);
        assert_eq!(args.len(), 2);
        assert!(matches!(&args[1].value.kind, ExprKind::Call { name, .. } if name == "get_axis"));
    }

    #[test]
    fn parses_named_offset() {
        let e = parse(r#"move_cost(get_centroid("knife"), get_centroid("knife blade"), offset=[0,0,0.1])"#).unwrap();
        let args = call_args(&e);
        assert_eq!(args.len(), 3);
        assert_eq!(args[2].name.as_deref(), Some("offset"));
        assert!(matches!(args[2].value.kind, ExprKind::Triple(_)));
    }

    #[test]
    fn empty_source_fails_at_zero() {
        let err = parse("").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.expected.iter().any(|e| e == "identifier"));
    }

    #[test]
    fn truncated_source_reports_end_offset() {
        let src = "move_cost(get_centroid(";
        let err = parse(src).unwrap_err();
        assert_eq!(err.offset, src.len());
    }

    #[test]
    fn np_array_is_a_triple() {
        let e = parse("centroid('a') + np.array([0, 0, 0.2])").unwrap();
        match &e.kind {
            ExprKind::Binary { rhs, .. } => assert!(matches!(rhs.kind, ExprKind::Triple(_))),
            _ => panic!(),
        }
        assert!(parse("np.zeros([0,0,0])").is_err());
    }

    #[test]
    fn precedence_and_negation() {
        let e = parse("a() + b() * -2").unwrap();
        match &e.kind {
            ExprKind::Binary { op: BinOp::Add, rhs, .. } => match &rhs.kind {
                ExprKind::Binary { op: BinOp::Mul, rhs, .. } => {
                    assert!(matches!(rhs.kind, ExprKind::Number(n) if n == -2.0))
                }
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn positional_after_named_is_rejected() {
        assert!(parse("f(a=1, 2)").is_err());
    }

    #[test]
    fn stages_split_on_semicolons() {
        let stages = parse_stages("a(); b() + c();").unwrap();
        assert_eq!(stages.len(), 2);
        assert!(parse_stages(";").is_err());
    }

    #[test]
    fn pretty_print_round_trip() {
        for src in [
            "a() - (b() - c())",
            "f(x=[-1, 2.5, g('q') + 0.1])",
            "-h('a') - 0.05",
            "p() + d(start='x', end=\"gripper\") * 0.15",
        ] {
            let e = parse(src).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert!(e.same_shape(&again), "{src} -> {e}");
        }
    }
}
