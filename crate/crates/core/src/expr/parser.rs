use std::f64::consts::{E, PI};
use std::sync::Arc;

use super::lexer::{tokenize, Token, TokenKind};
use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result};

// Binding powers. `^` is right associative and binds tighter than unary minus.
const ADD_BP: (u8, u8) = (1, 2);
const MUL_BP: (u8, u8) = (3, 4);
const NEG_BP: u8 = 5;
const POW_BP: (u8, u8) = (8, 7);

/// Parses an expression in `x` and `t`.
///
/// Grammar: `^` (right-assoc) > unary `-` > `*` `/` > `+` `-`, with the
/// constants `pi` and `e` and the functions `sin cos tan exp log sqrt abs`.
pub fn parse(source: &str) -> Result<Expr> {
    let tokens = tokenize(source)?;
    let end = source.chars().count();
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        end,
    };
    let e = p.expr(0)?;
    if let Some(tok) = p.peek() {
        return Err(Error::Parse {
            offset: tok.position,
            expected: format!("operator or end of input, found `{}`", tok.lexeme),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        self.pos += 1;
        tok
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek() {
                Some(Token {
                    kind: TokenKind::Operator(c),
                    ..
                }) => *c,
                _ => break,
            };
            let (op, (lbp, rbp)) = match op {
                '+' => (BinOp::Add, ADD_BP),
                '-' => (BinOp::Sub, ADD_BP),
                '*' => (BinOp::Mul, MUL_BP),
                '/' => (BinOp::Div, MUL_BP),
                '^' => (BinOp::Pow, POW_BP),
                _ => unreachable!("lexer only emits + - * / ^"),
            };
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(rbp)?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let tok = match self.next() {
            Some(tok) => tok,
            None => {
                return Err(Error::Parse {
                    offset,
                    expected: "operand, found end of input".into(),
                })
            }
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Const(v)),
            TokenKind::Operator('-') => {
                let operand = self.expr(NEG_BP)?;
                Ok(Expr::Neg(Arc::new(operand)))
            }
            TokenKind::LeftParen => {
                let inner = self.expr(0)?;
                self.close_paren(tok.position)?;
                Ok(inner)
            }
            TokenKind::Identifier => self.identifier(tok),
            _ => Err(Error::Parse {
                offset: tok.position,
                expected: format!("operand, found `{}`", tok.lexeme),
            }),
        }
    }

    fn identifier(&mut self, tok: &Token) -> Result<Expr> {
        match tok.lexeme.as_str() {
            "x" => return Ok(Expr::Var(Var::X)),
            "t" => return Ok(Expr::Var(Var::T)),
            "pi" => return Ok(Expr::Const(PI)),
            "e" => return Ok(Expr::Const(E)),
            _ => {}
        }
        let func = Func::from_name(&tok.lexeme).ok_or_else(|| Error::Parse {
            offset: tok.position,
            expected: format!(
                "variable x or t, constant pi or e, or a known function, found `{}`",
                tok.lexeme
            ),
        })?;
        let open = self.offset();
        match self.next() {
            Some(Token {
                kind: TokenKind::LeftParen,
                position,
                ..
            }) => {
                let arg = self.expr(0)?;
                self.close_paren(*position)?;
                Ok(Expr::Func(func, Arc::new(arg)))
            }
            _ => Err(Error::Parse {
                offset: open,
                expected: format!("`(` after function name `{}`", tok.lexeme),
            }),
        }
    }

    fn close_paren(&mut self, opened_at: usize) -> Result<()> {
        let offset = self.offset();
        match self.next() {
            Some(Token {
                kind: TokenKind::RightParen,
                ..
            }) => Ok(()),
            _ => Err(Error::Parse {
                offset,
                expected: format!("`)` closing the parenthesis opened at offset {opened_at} (unclosed parenthesis)"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64, t: f64) -> f64 {
        parse(src).unwrap().eval(x, t).unwrap()
    }

    #[test]
    fn multiplication_binds_tighter_than_addition() {
        assert_eq!(eval("1+2*3", 0.0, 0.0), 7.0);
        assert_eq!(eval("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(eval("8-4-2", 0.0, 0.0), 2.0);
    }

    #[test]
    fn unary_minus_is_looser_than_power() {
        assert_eq!(eval("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(eval("-2*3", 0.0, 0.0), -6.0);
    }

    #[test]
    fn unclosed_parenthesis() {
        match parse("sin(x") {
            Err(Error::Parse { offset, expected }) => {
                assert_eq!(offset, 5);
                assert!(expected.contains("unclosed"), "{expected}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_identifiers() {
        assert!(matches!(parse("y+1"), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse("foo(x)"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("sin x"),
            Err(Error::Parse { offset: 4, .. })
        ));
    }

    #[test]
    fn rejects_trailing_and_missing_operands() {
        assert!(matches!(parse("1 2"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse("1+"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse(""), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse("sin(x,t)"), Err(Error::Parse { .. })));
    }

    #[test]
    fn constants() {
        assert_eq!(eval("pi", 0.0, 0.0), PI);
        assert_eq!(eval("e", 0.0, 0.0), E);
    }
}
