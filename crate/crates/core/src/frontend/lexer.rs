//! Tokenizer for `.qu` sources.

use std::fmt;

use super::diag::{Diagnostic, ErrorCode, FileId, Span};
use crate::time::TimeUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Package,
    Import,
    Opaque,
    Operation,
    If,
    Else,
    While,
    Break,
    Continue,
    Return,
    Using,
    True,
    False,
    Control,
    Invert,
    Duration,
    Bool,
    Int,
    Double,
    Unit,
    Qubit,
    Time,
    Timer,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        Some(match word {
            "package" => Keyword::Package,
            "import" => Keyword::Import,
            "opaque" => Keyword::Opaque,
            "operation" => Keyword::Operation,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "break" => Keyword::Break,
            "continue" => Keyword::Continue,
            "return" => Keyword::Return,
            "using" => Keyword::Using,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "control" => Keyword::Control,
            "invert" => Keyword::Invert,
            "duration" => Keyword::Duration,
            "bool" => Keyword::Bool,
            "int" => Keyword::Int,
            "double" => Keyword::Double,
            "unit" => Keyword::Unit,
            "qubit" => Keyword::Qubit,
            "time" => Keyword::Time,
            "timer" => Keyword::Timer,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Package => "package",
            Keyword::Import => "import",
            Keyword::Opaque => "opaque",
            Keyword::Operation => "operation",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::Break => "break",
            Keyword::Continue => "continue",
            Keyword::Return => "return",
            Keyword::Using => "using",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Control => "control",
            Keyword::Invert => "invert",
            Keyword::Duration => "duration",
            Keyword::Bool => "bool",
            Keyword::Int => "int",
            Keyword::Double => "double",
            Keyword::Unit => "unit",
            Keyword::Qubit => "qubit",
            Keyword::Time => "time",
            Keyword::Timer => "timer",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Double(f64),
    Time(f64, TimeUnit),
    Kw(Keyword),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Arrow,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Bang,
    At,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Int(v) => return write!(f, "integer `{v}`"),
            Tok::Double(v) => return write!(f, "double `{v}`"),
            Tok::Time(v, u) => return write!(f, "time `{v}{}`", u.as_str()),
            Tok::Kw(k) => return write!(f, "`{}`", k.as_str()),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::Assign => "=",
            Tok::PlusAssign => "+=",
            Tok::MinusAssign => "-=",
            Tok::StarAssign => "*=",
            Tok::SlashAssign => "/=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::At => "@",
            Tok::Eof => return f.write_str("end of file"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: FileId,
}

pub fn tokenize(source: &str, file: FileId) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer { chars: source.chars().collect(), pos: 0, line: 1, col: 1, file };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia()?;
        let span = lx.span();
        let Some(c) = lx.peek() else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            lx.number()?
        } else if c.is_alphabetic() || c == '_' {
            let word = lx.take_while(|c| c.is_alphanumeric() || c == '_');
            match Keyword::lookup(&word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            }
        } else {
            lx.punct()?
        };
        out.push(Token { tok, span });
    }
}

impl Lexer {
    fn span(&self) -> Span {
        Span::new(self.file, self.line, self.col)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn error(&self, span: Span, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(ErrorCode::Lex, span, msg)
    }

    fn skip_trivia(&mut self) -> Result<(), Diagnostic> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.span();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(start, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self) -> Result<Tok, Diagnostic> {
        let start = self.span();
        let mut text = self.take_while(|c| c.is_ascii_digit());
        let mut is_double = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            is_double = true;
            text.push('.');
            self.bump();
            text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            let exp_follows = matches!(self.peek(), Some('e' | 'E'))
                && (self.peek_at(1).is_some_and(|c| c.is_ascii_digit())
                    || (matches!(self.peek_at(1), Some('+' | '-'))
                        && self.peek_at(2).is_some_and(|c| c.is_ascii_digit())));
            if exp_follows {
                text.push('e');
                self.bump();
                if let Some(sign @ ('+' | '-')) = self.peek() {
                    text.push(sign);
                    self.bump();
                }
                text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            }
        }
        if self.peek().is_some_and(|c| c.is_alphabetic() || c == '_') {
            let suffix = self.take_while(|c| c.is_alphanumeric() || c == '_');
            let unit: TimeUnit = suffix
                .parse()
                .map_err(|_| self.error(start, format!("unknown time unit `{suffix}` in literal `{text}{suffix}`")))?;
            let magnitude: f64 =
                text.parse().map_err(|_| self.error(start, format!("malformed time literal `{text}`")))?;
            return Ok(Tok::Time(magnitude, unit));
        }
        if is_double {
            let v: f64 = text.parse().map_err(|_| self.error(start, format!("malformed double literal `{text}`")))?;
            Ok(Tok::Double(v))
        } else {
            let v: i64 =
                text.parse().map_err(|_| self.error(start, format!("integer literal `{text}` is too large")))?;
            Ok(Tok::Int(v))
        }
    }

    fn punct(&mut self) -> Result<Tok, Diagnostic> {
        let start = self.span();
        let c = self.bump().expect("punct called at end of input");
        let next = self.peek();
        let two = |lx: &mut Self, tok: Tok| {
            lx.bump();
            tok
        };
        Ok(match (c, next) {
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('{', _) => Tok::LBrace,
            ('}', _) => Tok::RBrace,
            ('[', _) => Tok::LBracket,
            (']', _) => Tok::RBracket,
            (',', _) => Tok::Comma,
            (';', _) => Tok::Semi,
            (':', _) => Tok::Colon,
            ('.', _) => Tok::Dot,
            ('@', _) => Tok::At,
            ('-', Some('>')) => two(self, Tok::Arrow),
            ('+', Some('=')) => two(self, Tok::PlusAssign),
            ('-', Some('=')) => two(self, Tok::MinusAssign),
            ('*', Some('=')) => two(self, Tok::StarAssign),
            ('/', Some('=')) => two(self, Tok::SlashAssign),
            ('=', Some('=')) => two(self, Tok::EqEq),
            ('!', Some('=')) => two(self, Tok::NotEq),
            ('<', Some('=')) => two(self, Tok::Le),
            ('>', Some('=')) => two(self, Tok::Ge),
            ('&', Some('&')) => two(self, Tok::AndAnd),
            ('|', Some('|')) => two(self, Tok::OrOr),
            ('=', _) => Tok::Assign,
            ('<', _) => Tok::Lt,
            ('>', _) => Tok::Gt,
            ('+', _) => Tok::Plus,
            ('-', _) => Tok::Minus,
            ('*', _) => Tok::Star,
            ('/', _) => Tok::Slash,
            ('%', _) => Tok::Percent,
            ('!', _) => Tok::Bang,
            (other, _) => return Err(self.error(start, format!("illegal character `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src, 0).unwrap().into_iter().map(|t| t.tok).filter(|t| *t != Tok::Eof).collect()
    }

    #[test]
    fn simple_declaration() {
        assert_eq!(
            toks("int x = 5;"),
            vec![Tok::Kw(Keyword::Int), Tok::Ident("x".into()), Tok::Assign, Tok::Int(5), Tok::Semi]
        );
    }

    #[test]
    fn timing_constraint_expression() {
        assert_eq!(
            toks("tmr == intervals[i]/2"),
            vec![
                Tok::Ident("tmr".into()),
                Tok::EqEq,
                Tok::Ident("intervals".into()),
                Tok::LBracket,
                Tok::Ident("i".into()),
                Tok::RBracket,
                Tok::Slash,
                Tok::Int(2),
            ]
        );
    }

    #[test]
    fn time_literals_are_single_tokens() {
        assert_eq!(toks("300ns"), vec![Tok::Time(300.0, TimeUnit::Ns)]);
        assert_eq!(toks("0.5us"), vec![Tok::Time(0.5, TimeUnit::Us)]);
    }

    #[test]
    fn unknown_time_unit_is_rejected() {
        let err = tokenize("5.0xs", 0).unwrap_err();
        assert_eq!(err.code, ErrorCode::Lex);
        assert!(err.message.contains("xs"));
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("int x;\n  $", 0).unwrap_err();
        assert_eq!((err.span.line, err.span.col), (2, 3));
    }

    #[test]
    fn comments_and_doubles() {
        assert_eq!(
            toks("// c\n1.5 /* x */ 2.0e-3 a.length"),
            vec![Tok::Double(1.5), Tok::Double(2.0e-3), Tok::Ident("a".into()), Tok::Dot, Tok::Ident("length".into())]
        );
    }
}
