//! Tokenizer for the cost-pipeline language.

use super::ast::Pos;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Fn,
    Let,
    Return,
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Fn => "`fn`".into(),
            TokenKind::Let => "`let`".into(),
            TokenKind::Return => "`return`".into(),
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Number(v) => format!("number `{v}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Eq => "`=`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
    /// Byte range in the original source; used for in-place renames.
    pub span: (usize, usize),
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($kind:expr, $start:expr, $len:expr, $pos:expr) => {
            tokens.push(Token {
                kind: $kind,
                pos: $pos,
                span: ($start, $start + $len),
            })
        };
    }

    while i < bytes.len() {
        let b = bytes[i];
        let pos = Pos::new(line, col);
        match b {
            b'\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            b' ' | b'\t' | b'\r' => {
                col += 1;
                i += 1;
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                push!(TokenKind::LParen, i, 1, pos);
                i += 1;
                col += 1;
            }
            b')' => {
                push!(TokenKind::RParen, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'{' => {
                push!(TokenKind::LBrace, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'}' => {
                push!(TokenKind::RBrace, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'[' => {
                push!(TokenKind::LBracket, i, 1, pos);
                i += 1;
                col += 1;
            }
            b']' => {
                push!(TokenKind::RBracket, i, 1, pos);
                i += 1;
                col += 1;
            }
            b',' => {
                push!(TokenKind::Comma, i, 1, pos);
                i += 1;
                col += 1;
            }
            b';' => {
                push!(TokenKind::Semi, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'=' => {
                push!(TokenKind::Eq, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'+' => {
                push!(TokenKind::Plus, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'-' => {
                push!(TokenKind::Minus, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'*' => {
                push!(TokenKind::Star, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'/' => {
                push!(TokenKind::Slash, i, 1, pos);
                i += 1;
                col += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| Diagnostic {
                    pos,
                    message: format!("malformed number `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(Diagnostic {
                        pos,
                        message: format!("number `{text}` overflows"),
                    });
                }
                let len = i - start;
                col += len as u32;
                push!(TokenKind::Number(value), start, len, pos);
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let text = &source[start..i];
                let kind = match text {
                    "fn" => TokenKind::Fn,
                    "let" => TokenKind::Let,
                    "return" => TokenKind::Return,
                    _ => TokenKind::Ident(text.to_string()),
                };
                let len = i - start;
                col += len as u32;
                push!(kind, start, len, pos);
            }
            _ => {
                return Err(Diagnostic {
                    pos,
                    message: format!("unexpected character `{}`", b as char),
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        pos: Pos::new(line, col),
        span: (bytes.len(), bytes.len()),
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_minimal_program() {
        let toks = tokenize("fn f(x) { return (x, x) }").unwrap();
        assert!(matches!(toks[0].kind, TokenKind::Fn));
        assert!(matches!(toks.last().unwrap().kind, TokenKind::Eof));
    }

    #[test]
    fn numbers_with_exponents() {
        let toks = tokenize("1e-10 0.25 3 2.5e4").unwrap();
        let nums: Vec<f64> = toks
            .iter()
            .filter_map(|t| match t.kind {
                TokenKind::Number(v) => Some(v),
                _ => None,
            })
            .collect();
        assert_eq!(nums, vec![1e-10, 0.25, 3.0, 2.5e4]);
    }

    #[test]
    fn comments_skipped() {
        let toks = tokenize("let x = 1; // set up\nlet y = 2;").unwrap();
        assert_eq!(
            toks.iter().filter(|t| matches!(t.kind, TokenKind::Let)).count(),
            2
        );
    }

    #[test]
    fn rejects_unknown_character() {
        let err = tokenize("let x = 1 @ 2").unwrap_err();
        assert!(err.message.contains('@'));
        assert_eq!(err.pos.line, 1);
        assert_eq!(err.pos.col, 11);
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("fn f(x) {\n  let y = 1;\n}").unwrap();
        let let_tok = toks.iter().find(|t| matches!(t.kind, TokenKind::Let)).unwrap();
        assert_eq!(let_tok.pos.line, 2);
        assert_eq!(let_tok.pos.col, 3);
    }
}
