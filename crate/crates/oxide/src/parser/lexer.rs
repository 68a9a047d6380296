//! Hand-rolled lexer for `.ox` source. Tracks 1-based line/column positions
//! and strips `//` comments. LF and CRLF both end lines.

use std::sync::Arc;

use crate::diag::{Code, Diagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Provenance identifier, `'a` stored as `a`.
    ProvIdent(String),
    Int(u32),
    StrLit(String),
    Kw(Kw),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Semi,
    Colon,
    ColonColon,
    /// `:=`, accepted as an alias for `=` in assignments.
    ColonEq,
    Dot,
    DotDot,
    Amp,
    Pipe,
    Star,
    Eq,
    Arrow,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kw {
    Struct,
    Fn,
    Let,
    Mut,
    If,
    Else,
    True,
    False,
    Abort,
    Shrd,
    Uniq,
    /// Reserved: pop only arises at runtime and is rejected in source.
    Pop,
    U32,
    Bool,
    StringTy,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::ProvIdent(name) => format!("provenance `'{name}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::StrLit(_) => "string literal".to_string(),
            Tok::Kw(kw) => format!("`{}`", kw.as_str()),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Semi => "`;`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::ColonColon => "`::`".to_string(),
            Tok::ColonEq => "`:=`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::DotDot => "`..`".to_string(),
            Tok::Amp => "`&`".to_string(),
            Tok::Pipe => "`|`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

impl Kw {
    pub fn as_str(self) -> &'static str {
        match self {
            Kw::Struct => "struct",
            Kw::Fn => "fn",
            Kw::Let => "let",
            Kw::Mut => "mut",
            Kw::If => "if",
            Kw::Else => "else",
            Kw::True => "true",
            Kw::False => "false",
            Kw::Abort => "abort",
            Kw::Shrd => "shrd",
            Kw::Uniq => "uniq",
            Kw::Pop => "pop",
            Kw::U32 => "u32",
            Kw::Bool => "bool",
            Kw::StringTy => "String",
        }
    }

    fn from_ident(s: &str) -> Option<Kw> {
        Some(match s {
            "struct" => Kw::Struct,
            "fn" => Kw::Fn,
            "let" => Kw::Let,
            "mut" => Kw::Mut,
            "if" => Kw::If,
            "else" => Kw::Else,
            "true" => Kw::True,
            "false" => Kw::False,
            "abort" => Kw::Abort,
            "shrd" => Kw::Shrd,
            "uniq" => Kw::Uniq,
            "pop" => Kw::Pop,
            "u32" => Kw::U32,
            "bool" => Kw::Bool,
            "String" => Kw::StringTy,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    file: Arc<str>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, file: Arc<str>) -> Lexer<'a> {
        Lexer {
            chars: src.chars().peekable(),
            file,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn span_from(&self, start: (u32, u32)) -> SourceSpan {
        SourceSpan::new(self.file.clone(), start, self.pos())
    }

    fn error(&self, start: (u32, u32), msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(Code::Parse, msg, self.span_from(start))
    }
}

pub fn lex(src: &str, file: &str) -> Result<Vec<Token>, Diagnostic> {
    let file: Arc<str> = Arc::from(file);
    let mut lx = Lexer::new(src, file.clone());
    let mut tokens = Vec::new();

    loop {
        // Skip whitespace and line comments.
        loop {
            match lx.peek() {
                Some(c) if c.is_whitespace() => {
                    lx.bump();
                }
                Some('/') => {
                    let mut probe = lx.chars.clone();
                    probe.next();
                    if probe.peek() == Some(&'/') {
                        while let Some(c) = lx.peek() {
                            if c == '\n' {
                                break;
                            }
                            lx.bump();
                        }
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }

        let start = lx.pos();
        let c = match lx.bump() {
            Some(c) => c,
            None => {
                tokens.push(Token {
                    tok: Tok::Eof,
                    span: SourceSpan::new(file, start, start),
                });
                return Ok(tokens);
            }
        };

        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '*' => Tok::Star,
            '=' => Tok::Eq,
            ':' => match lx.peek() {
                Some(':') => {
                    lx.bump();
                    Tok::ColonColon
                }
                Some('=') => {
                    lx.bump();
                    Tok::ColonEq
                }
                _ => Tok::Colon,
            },
            '.' => {
                if lx.peek() == Some('.') {
                    lx.bump();
                    Tok::DotDot
                } else {
                    Tok::Dot
                }
            }
            '-' => {
                if lx.peek() == Some('>') {
                    lx.bump();
                    Tok::Arrow
                } else {
                    return Err(lx.error(start, "expected `->`"));
                }
            }
            '\'' => {
                let mut name = String::new();
                while let Some(c) = lx.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        name.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(lx.error(start, "expected provenance name after `'`"));
                }
                Tok::ProvIdent(name)
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match lx.bump() {
                        Some('"') => break,
                        Some('\\') => match lx.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(other) => {
                                return Err(lx.error(
                                    start,
                                    format!("unsupported escape `\\{other}` in string literal"),
                                ));
                            }
                            None => {
                                return Err(lx.error(start, "unterminated string literal"));
                            }
                        },
                        Some('\n') | None => {
                            return Err(lx.error(start, "unterminated string literal"));
                        }
                        Some(other) => s.push(other),
                    }
                }
                Tok::StrLit(s)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(c) = lx.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                match digits.parse::<u32>() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        return Err(
                            lx.error(start, format!("integer literal `{digits}` exceeds u32"))
                        );
                    }
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = String::from(c);
                while let Some(c) = lx.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        name.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                match Kw::from_ident(&name) {
                    Some(kw) => Tok::Kw(kw),
                    None => Tok::Ident(name),
                }
            }
            other => {
                return Err(lx.error(start, format!("unexpected character `{other}`")));
            }
        };

        tokens.push(Token {
            tok,
            span: lx.span_from(start),
        });
    }
}
