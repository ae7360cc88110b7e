use crate::error::{Error, Result};
use crate::fp::{round_nearest, Float, Format, Rational};

use super::ast::{Arith, BoolExpr, FloatBool, FloatExpr, Program, ProgramExpr, RelOp};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Fun,
    If,
    Then,
    Elsif,
    Else,
    Let,
    In,
    Warning,
    And,
    Or,
    Not,
    True,
    False,
    LParen,
    RParen,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Rel(RelOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Eof => "end of input".into(),
            Tok::Rel(r) => format!("`{}`", r.symbol()),
            other => format!("`{}`", keyword_text(other)),
        }
    }
}

fn keyword_text(t: &Tok) -> &'static str {
    match t {
        Tok::Fun => "fun",
        Tok::If => "if",
        Tok::Then => "then",
        Tok::Elsif => "elsif",
        Tok::Else => "else",
        Tok::Let => "let",
        Tok::In => "in",
        Tok::Warning => "warning",
        Tok::And => "and",
        Tok::Or => "or",
        Tok::Not => "not",
        Tok::True => "true",
        Tok::False => "false",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Comma => ",",
        Tok::Assign => "=",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        _ => "?",
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "fun" => Tok::Fun,
                "if" => Tok::If,
                "then" => Tok::Then,
                "elsif" => Tok::Elsif,
                "else" => Tok::Else,
                "let" => Tok::Let,
                "in" => Tok::In,
                "warning" => Tok::Warning,
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                } else {
                    return Err(syntax(line, col + (i - start), "malformed exponent"));
                }
            }
            Tok::Number(chars[start..i].iter().collect())
        } else {
            let next = chars.get(i + 1).copied();
            let (t, len) = match (c, next) {
                ('<', Some('=')) => (Tok::Rel(RelOp::Le), 2),
                ('>', Some('=')) => (Tok::Rel(RelOp::Ge), 2),
                ('=', Some('=')) => (Tok::Rel(RelOp::Eq), 2),
                ('<', _) => (Tok::Rel(RelOp::Lt), 1),
                ('>', _) => (Tok::Rel(RelOp::Gt), 1),
                ('=', _) => (Tok::Assign, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
            };
            i += len;
            t
        };
        col += i - start;
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    format: Format,
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

    fn error_here(&self, message: impl Into<String>) -> Error {
        let s = &self.toks[self.pos];
        syntax(s.line, s.col, message)
    }

    fn unexpected(&self, expected: &str) -> Error {
        self.error_here(format!(
            "expected {expected}, found {}",
            self.peek().describe()
        ))
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", keyword_text(&t))))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn program(&mut self) -> Result<(String, Vec<String>, ProgramExpr)> {
        self.expect(Tok::Fun)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Assign)?;
        let body = self.pexpr()?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of input"));
        }
        Ok((name, params, body))
    }

    fn pexpr(&mut self) -> Result<ProgramExpr> {
        match self.peek() {
            Tok::If => self.conditional(),
            Tok::Let => {
                self.bump();
                let var = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.aexpr()?;
                self.expect(Tok::In)?;
                let body = self.pexpr()?;
                Ok(ProgramExpr::let_in(var, value, body))
            }
            Tok::Warning => {
                self.bump();
                Ok(ProgramExpr::Warning)
            }
            Tok::LParen => {
                let save = self.pos;
                match self.aexpr() {
                    Ok(a) => Ok(ProgramExpr::Arith(a)),
                    Err(_) => {
                        self.pos = save;
                        self.bump();
                        let inner = self.pexpr()?;
                        self.expect(Tok::RParen)?;
                        Ok(inner)
                    }
                }
            }
            _ => Ok(ProgramExpr::Arith(self.aexpr()?)),
        }
    }

    fn conditional(&mut self) -> Result<ProgramExpr> {
        self.expect(Tok::If)?;
        let mut branches = Vec::new();
        let g = self.bexpr()?;
        self.expect(Tok::Then)?;
        let s = self.pexpr()?;
        branches.push((g, s));
        while *self.peek() == Tok::Elsif {
            self.bump();
            let g = self.bexpr()?;
            self.expect(Tok::Then)?;
            let s = self.pexpr()?;
            branches.push((g, s));
        }
        if *self.peek() != Tok::Else {
            return Err(self.unexpected("`elsif` or `else`"));
        }
        self.bump();
        let else_branch = self.pexpr()?;
        if branches.len() == 1 {
            let (g, s) = branches.pop().expect("one branch");
            Ok(ProgramExpr::if2(g, s, else_branch))
        } else {
            Ok(ProgramExpr::if_n(branches, else_branch))
        }
    }

    fn bexpr(&mut self) -> Result<FloatBool> {
        let mut lhs = self.band()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.band()?;
            lhs = BoolExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn band(&mut self) -> Result<FloatBool> {
        let mut lhs = self.bnot()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.bnot()?;
            lhs = BoolExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn bnot(&mut self) -> Result<FloatBool> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(BoolExpr::not(self.bnot()?));
        }
        self.batom()
    }

    fn batom(&mut self) -> Result<FloatBool> {
        match self.peek() {
            Tok::True => {
                self.bump();
                Ok(BoolExpr::True)
            }
            Tok::False => {
                self.bump();
                Ok(BoolExpr::False)
            }
            Tok::LParen => {
                let save = self.pos;
                match self.relation() {
                    Ok(r) => Ok(r),
                    Err(first) => {
                        self.pos = save;
                        self.bump();
                        match self.bexpr() {
                            Ok(b) => {
                                self.expect(Tok::RParen)?;
                                Ok(b)
                            }
                            Err(_) => Err(first),
                        }
                    }
                }
            }
            _ => self.relation(),
        }
    }

    fn relation(&mut self) -> Result<FloatBool> {
        let lhs = self.aexpr()?;
        let op = match self.peek() {
            Tok::Rel(op) => *op,
            _ => return Err(self.unexpected("a relation (`<`, `<=`, `>`, `>=`, `==`)")),
        };
        self.bump();
        let rhs = self.aexpr()?;
        if let Tok::Rel(_) = self.peek() {
            return Err(self.error_here("relations do not chain"));
        }
        Ok(BoolExpr::rel(op, lhs, rhs))
    }

    fn aexpr(&mut self) -> Result<FloatExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Arith::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Arith::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<FloatExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Arith::mul(lhs, self.unary()?);
                }
                Tok::Slash => return Err(self.error_here("division is not supported")),
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<FloatExpr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Number(text) = self.peek().clone() {
                self.bump();
                return self.literal(&format!("-{text}"));
            }
            return Ok(Arith::neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<FloatExpr> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                self.literal(&text)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Arith::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.aexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("an arithmetic expression")),
        }
    }

    fn literal(&self, text: &str) -> Result<FloatExpr> {
        let prev = &self.toks[self.pos.saturating_sub(1)];
        let r = Rational::parse_literal(text).map_err(|e| syntax(prev.line, prev.col, e.to_string()))?;
        let f: Float = round_nearest(&r, self.format).map_err(|_| {
            syntax(prev.line, prev.col, format!("literal `{text}` overflows the format"))
        })?;
        Ok(Arith::Const(f))
    }
}

/// Parses a `fun name(params) = body` declaration, rounding decimal literals
/// to nearest-even in `format`.
pub fn parse_program(text: &str, format: Format) -> Result<Program> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        format,
    };
    let (name, params, body) = p.program()?;
    Program::new(name, params, body, format)
}

/// Parses a standalone Boolean expression (used for guards in tests and tools).
pub fn parse_bool(text: &str, format: Format) -> Result<FloatBool> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        format,
    };
    let b = p.bexpr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(b)
}

/// Parses a standalone arithmetic expression.
pub fn parse_arith(text: &str, format: Format) -> Result<FloatExpr> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        format,
    };
    let a = p.aexpr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(a)
}
