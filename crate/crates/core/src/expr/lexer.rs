use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TokenKind {
    Number(f64),
    Identifier,
    Operator(char),
    LeftParen,
    RightParen,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Character offset of the first character of the lexeme.
    pub position: usize,
}

/// Splits `source` into tokens. Whitespace separates tokens and is dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut pos = 0;

    while pos < chars.len() {
        let c = chars[pos];
        if c.is_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let kind = match c {
            '0'..='9' | '.' => {
                pos = scan_number(&chars, pos)?;
                let lexeme: String = chars[start..pos].iter().collect();
                let value = lexeme.parse::<f64>().map_err(|_| Error::Lex {
                    offset: start,
                    message: format!("malformed number `{lexeme}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    lexeme,
                    position: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_')
                {
                    pos += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Identifier,
                    lexeme: chars[start..pos].iter().collect(),
                    position: start,
                });
                continue;
            }
            '+' | '-' | '*' | '/' | '^' => TokenKind::Operator(c),
            '(' => TokenKind::LeftParen,
            ')' => TokenKind::RightParen,
            ',' => TokenKind::Comma,
            other => {
                return Err(Error::Lex {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        pos += 1;
        tokens.push(Token {
            kind,
            lexeme: c.to_string(),
            position: start,
        });
    }
    Ok(tokens)
}

/// Returns the offset one past the numeric literal starting at `start`.
fn scan_number(chars: &[char], start: usize) -> Result<usize> {
    let mut pos = start;
    let mut dot: Option<usize> = None;
    let mut digits = 0;
    while pos < chars.len() {
        match chars[pos] {
            '0'..='9' => digits += 1,
            '.' => {
                if let Some(first) = dot {
                    return Err(Error::Lex {
                        offset: first,
                        message: "malformed number: repeated decimal point".into(),
                    });
                }
                dot = Some(pos);
            }
            _ => break,
        }
        pos += 1;
    }
    if digits == 0 {
        return Err(Error::Lex {
            offset: start,
            message: "malformed number: no digits".into(),
        });
    }
    // Exponent only when followed by digits, so `2*e` style input still lexes `e` as a name.
    if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
        let mut look = pos + 1;
        if look < chars.len() && (chars[look] == '+' || chars[look] == '-') {
            look += 1;
        }
        if look < chars.len() && chars[look].is_ascii_digit() {
            pos = look;
            while pos < chars.len() && chars[pos].is_ascii_digit() {
                pos += 1;
            }
        }
    }
    if pos < chars.len() && chars[pos] == '.' {
        return Err(Error::Lex {
            offset: dot.unwrap_or(pos),
            message: "malformed number: repeated decimal point".into(),
        });
    }
    Ok(pos)
}
