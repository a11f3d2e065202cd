//! Java token scanner. Produces a flat, non-overlapping token stream with
//! byte spans; comments are kept as trivia tokens so the stream re-serializes
//! to the original text.

use super::ast::{Span, Token, TokenKind};
use super::grammar::LanguageSpec;

// `>>` and `>>>` are deliberately absent: a `>` run always lexes as single
// `>` tokens so nested generics close cleanly; the parser re-fuses adjacent
// `>`s into shift operators where an expression calls for one.
const MULTI_OPS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "::", "->", "++", "--", "<<", "<=", ">=", "==", "!=", "&&",
    "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub fn is_legal_identifier(text: &str, spec: &LanguageSpec) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    if !chars.all(is_ident_part) {
        return false;
    }
    !spec.is_reserved(text)
}

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    spec: &'a LanguageSpec,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str, spec: &'a LanguageSpec) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0, spec }
    }

    pub fn tokenize(mut self) -> Vec<Token> {
        let mut out = Vec::new();
        while let Some(tok) = self.next_token() {
            out.push(tok);
        }
        out
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn next_token(&mut self) -> Option<Token> {
        // skip whitespace
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let c = self.peek()?;

        if self.starts_with("//") {
            while let Some(c) = self.peek() {
                if c == '\n' {
                    break;
                }
                self.pos += c.len_utf8();
            }
            return Some(self.token(start, TokenKind::Comment));
        }
        if self.starts_with("/*") {
            self.pos += 2;
            while self.pos < self.bytes.len() && !self.starts_with("*/") {
                self.pos += self.peek().map_or(1, |c| c.len_utf8());
            }
            if self.starts_with("*/") {
                self.pos += 2;
            }
            return Some(self.token(start, TokenKind::Comment));
        }

        if is_ident_start(c) {
            while let Some(c) = self.peek() {
                if is_ident_part(c) {
                    self.pos += c.len_utf8();
                } else {
                    break;
                }
            }
            let text = &self.src[start..self.pos];
            let kind = if self.spec.is_reserved(text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            return Some(self.token(start, kind));
        }

        if c.is_ascii_digit() || (c == '.' && self.second_is_digit()) {
            self.scan_number();
            return Some(self.token(start, TokenKind::Number));
        }

        if c == '"' {
            self.scan_quoted('"');
            return Some(self.token(start, TokenKind::Str));
        }
        if c == '\'' {
            self.scan_quoted('\'');
            return Some(self.token(start, TokenKind::Char));
        }

        for op in MULTI_OPS {
            if self.starts_with(op) {
                self.pos += op.len();
                return Some(self.token(start, TokenKind::Operator));
            }
        }

        self.pos += c.len_utf8();
        let kind = match c {
            '(' | ')' | '{' | '}' | '[' | ']' | ';' | ',' => TokenKind::Punct,
            '+' | '-' | '*' | '/' | '%' | '=' | '<' | '>' | '!' | '~' | '&' | '|' | '^' | '?'
            | ':' | '.' | '@' => TokenKind::Operator,
            _ => TokenKind::Error,
        };
        Some(self.token(start, kind))
    }

    fn second_is_digit(&self) -> bool {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next().is_some_and(|c| c.is_ascii_digit())
    }

    fn scan_number(&mut self) {
        // hex / binary / octal prefixes
        if self.starts_with("0x") || self.starts_with("0X") || self.starts_with("0b")
            || self.starts_with("0B")
        {
            self.pos += 2;
            while let Some(c) = self.peek() {
                if c.is_ascii_hexdigit() || c == '_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        } else {
            let mut seen_dot = false;
            let mut seen_exp = false;
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() || c == '_' {
                    self.pos += 1;
                } else if c == '.' && !seen_dot && !seen_exp && self.second_is_digit() {
                    seen_dot = true;
                    self.pos += 1;
                } else if (c == 'e' || c == 'E') && !seen_exp {
                    // lookahead: exponent must be followed by digit or sign+digit
                    let rest: Vec<char> = self.src[self.pos..].chars().take(3).collect();
                    let ok = match rest.get(1) {
                        Some('+') | Some('-') => rest.get(2).is_some_and(|c| c.is_ascii_digit()),
                        Some(d) => d.is_ascii_digit(),
                        None => false,
                    };
                    if !ok {
                        break;
                    }
                    seen_exp = true;
                    self.pos += 1;
                    if matches!(self.peek(), Some('+') | Some('-')) {
                        self.pos += 1;
                    }
                } else {
                    break;
                }
            }
        }
        // type suffix
        if let Some(c) = self.peek() {
            if matches!(c, 'l' | 'L' | 'f' | 'F' | 'd' | 'D') {
                self.pos += 1;
            }
        }
    }

    fn scan_quoted(&mut self, quote: char) {
        self.pos += 1;
        while let Some(c) = self.peek() {
            if c == '\\' {
                self.pos += 1;
                if let Some(esc) = self.peek() {
                    self.pos += esc.len_utf8();
                }
            } else if c == quote {
                self.pos += 1;
                return;
            } else if c == '\n' {
                return; // unterminated on this line
            } else {
                self.pos += c.len_utf8();
            }
        }
    }

    fn token(&self, start: usize, kind: TokenKind) -> Token {
        Token {
            text: self.src[start..self.pos].to_string(),
            kind,
            span: Span::new(start, self.pos),
        }
    }
}
