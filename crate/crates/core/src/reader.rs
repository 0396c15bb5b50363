//! Reader for standard clause syntax with the fixed operator table.

use std::collections::HashMap;

use crate::ops;
use crate::term::{Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    QName(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    Punct(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    layout_before: bool,
    offset: usize,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

fn error_at(src: &str, offset: usize, message: impl Into<String>) -> ParseError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    ParseError { offset, line, column, message: message.into() }
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, chars: src.char_indices().collect(), i: 0 }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map(|&(o, _)| o).unwrap_or(self.src.len())
    }

    fn err(&self, msg: &str) -> ParseError {
        error_at(self.src, self.offset(), msg)
    }

    /// Skips whitespace and comments; reports whether anything was skipped.
    fn skip_layout(&mut self) -> Result<bool, ParseError> {
        let start = self.i;
        loop {
            match self.peek(0) {
                Some(c) if c.is_whitespace() => self.i += 1,
                Some('%') => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.i += 1;
                    }
                }
                Some('/') if self.peek(1) == Some('*') => {
                    self.i += 2;
                    loop {
                        match self.peek(0) {
                            None => return Err(self.err("unterminated block comment")),
                            Some('*') if self.peek(1) == Some('/') => {
                                self.i += 2;
                                break;
                            }
                            _ => self.i += 1,
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(self.i > start)
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            let layout_before = self.skip_layout()?;
            let offset = self.offset();
            let Some(c) = self.peek(0) else { break };
            let tok = if c.is_ascii_digit() {
                self.number()?
            } else if c == '_' || c.is_uppercase() {
                Tok::Var(self.word())
            } else if c.is_alphabetic() {
                Tok::Name(self.word())
            } else if c == '\'' {
                Tok::QName(self.quoted('\'')?)
            } else if c == '"' {
                Tok::Str(self.quoted('"')?)
            } else if "()[]{},|".contains(c) {
                self.i += 1;
                Tok::Punct(c)
            } else if c == '!' || c == ';' {
                self.i += 1;
                Tok::Name(c.to_string())
            } else if SYMBOL_CHARS.contains(c) {
                let start = self.i;
                while self.peek(0).is_some_and(|c| SYMBOL_CHARS.contains(c)) {
                    self.i += 1;
                }
                let run: String = self.chars[start..self.i].iter().map(|&(_, c)| c).collect();
                let at_end = self.peek(0).is_none_or(|c| c.is_whitespace() || c == '%');
                if run == "." && at_end {
                    Tok::End
                } else if run.ends_with('.') && run.len() > 1 && at_end && !ops::is_op(&run) {
                    // `a:-b+.` style: the trailing dot ends the clause.
                    self.i -= 1;
                    Tok::Name(run[..run.len() - 1].to_string())
                } else {
                    Tok::Name(run)
                }
            } else {
                return Err(self.err(&format!("unexpected character {:?}", c)));
            };
            out.push(Token { tok, layout_before, offset });
        }
        Ok(out)
    }

    fn word(&mut self) -> String {
        let start = self.i;
        while self.peek(0).is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.i += 1;
        }
        self.chars[start..self.i].iter().map(|&(_, c)| c).collect()
    }

    fn digits(&mut self) -> String {
        let start = self.i;
        while self.peek(0).is_some_and(|c| c.is_ascii_digit() || c == '_') {
            self.i += 1;
        }
        self.chars[start..self.i].iter().map(|&(_, c)| c).filter(|&c| c != '_').collect()
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        if self.peek(0) == Some('0') && self.peek(1) == Some('\'') {
            if let Some(c) = self.peek(2) {
                self.i += 3;
                if c == '\\' {
                    let e = self.peek(0).ok_or_else(|| self.err("bad character code"))?;
                    self.i += 1;
                    return Ok(Tok::Int(unescape(e) as i64));
                }
                return Ok(Tok::Int(c as i64));
            }
        }
        let int_part = self.digits();
        let mut text = int_part.clone();
        let mut is_float = false;
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
            text.push('.');
            text.push_str(&self.digits());
            is_float = true;
        }
        if matches!(self.peek(0), Some('e') | Some('E')) {
            let signed = matches!(self.peek(1), Some('+') | Some('-'));
            let d = if signed { self.peek(2) } else { self.peek(1) };
            if d.is_some_and(|c| c.is_ascii_digit()) {
                text.push('e');
                self.i += 1;
                if signed {
                    text.push(self.peek(0).unwrap());
                    self.i += 1;
                }
                text.push_str(&self.digits());
                is_float = true;
            }
        }
        if is_float {
            text.parse::<f64>().map(Tok::Float).map_err(|_| self.err("malformed float"))
        } else {
            int_part.parse::<i64>().map(Tok::Int).map_err(|_| self.err("integer out of range"))
        }
    }

    fn quoted(&mut self, q: char) -> Result<String, ParseError> {
        self.i += 1;
        let mut out = String::new();
        loop {
            match self.peek(0) {
                None => return Err(self.err("unterminated quoted text")),
                Some(c) if c == q => {
                    if self.peek(1) == Some(q) {
                        out.push(q);
                        self.i += 2;
                    } else {
                        self.i += 1;
                        return Ok(out);
                    }
                }
                Some('\\') => {
                    let e = self.peek(1).ok_or_else(|| self.err("unterminated escape"))?;
                    self.i += 2;
                    if e != '\n' {
                        out.push(unescape(e));
                    }
                }
                Some(c) => {
                    out.push(c);
                    self.i += 1;
                }
            }
        }
    }
}

fn unescape(e: char) -> char {
    match e {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '0' => '\0',
        'a' => '\x07',
        'b' => '\x08',
        'f' => '\x0c',
        'v' => '\x0b',
        'e' => '\x1b',
        's' => ' ',
        other => other,
    }
}

/// A term read from source together with its named variables.
#[derive(Debug, Clone)]
pub struct ReadTerm {
    pub term: Term,
    pub var_names: Vec<(String, Var)>,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    vars: HashMap<String, Var>,
    var_order: Vec<(String, Var)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.pos + k)
    }

    fn err_here(&self, msg: &str) -> ParseError {
        let off = self.peek().map(|t| t.offset).unwrap_or(self.src.len());
        error_at(self.src, off, msg)
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Punct(p), .. }) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(&format!("expected `{}`", c))),
        }
    }

    fn is_punct(&self, k: usize, c: char) -> bool {
        matches!(self.peek_at(k), Some(Token { tok: Tok::Punct(p), .. }) if *p == c)
    }

    fn infix_at(&self) -> Option<(String, ops::OpDef)> {
        let name = match &self.peek()?.tok {
            Tok::Name(n) => n.clone(),
            Tok::Punct(',') => ",".to_string(),
            Tok::Punct('|') => "|".to_string(),
            _ => return None,
        };
        ops::infix(&name).map(|op| (name, op))
    }

    fn parse(&mut self, max: u16) -> Result<(Term, u16), ParseError> {
        let (mut left, mut left_p) = self.primary(max)?;
        while let Some((name, op)) = self.infix_at() {
            let (la, ra) = op.arg_priorities();
            if op.priority > max || left_p > la {
                break;
            }
            self.pos += 1;
            let (right, _) = self.parse(ra)?;
            let functor = if name == "|" { ";" } else { name.as_str() };
            left = Term::compound(functor, vec![left, right]);
            left_p = op.priority;
        }
        Ok((left, left_p))
    }

    fn can_start_term(&self, k: usize) -> bool {
        match self.peek_at(k).map(|t| &t.tok) {
            None | Some(Tok::End) => false,
            Some(Tok::Punct(c)) => matches!(c, '(' | '[' | '{'),
            Some(Tok::Name(n)) => !(ops::infix(n).is_some() && ops::prefix(n).is_none()),
            _ => true,
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect_punct('(')?;
        let mut args = vec![self.parse(999)?.0];
        while self.is_punct(0, ',') {
            self.pos += 1;
            args.push(self.parse(999)?.0);
        }
        self.expect_punct(')')?;
        Ok(args)
    }

    fn primary(&mut self, max: u16) -> Result<(Term, u16), ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err_here("unexpected end of input"));
        };
        self.pos += 1;
        match tok.tok {
            Tok::Int(i) => Ok((Term::int(i), 0)),
            Tok::Float(f) => Ok((Term::float(f), 0)),
            Tok::Str(s) => Ok((Term::string(&s), 0)),
            Tok::Var(name) => {
                if name == "_" {
                    return Ok((Term::Var(Var::named("_")), 0));
                }
                let v = self.vars.entry(name.clone()).or_insert_with(|| Var::named(&name)).clone();
                if !self.var_order.iter().any(|(n, _)| *n == name) {
                    self.var_order.push((name, v.clone()));
                }
                Ok((Term::Var(v), 0))
            }
            Tok::Punct('(') => {
                let (t, _) = self.parse(1200)?;
                self.expect_punct(')')?;
                Ok((t, 0))
            }
            Tok::Punct('[') => {
                if self.is_punct(0, ']') {
                    self.pos += 1;
                    return self.after_name("[]".to_string(), false, max);
                }
                let mut items = vec![self.parse(999)?.0];
                while self.is_punct(0, ',') {
                    self.pos += 1;
                    items.push(self.parse(999)?.0);
                }
                let tail = if self.is_punct(0, '|') {
                    self.pos += 1;
                    self.parse(999)?.0
                } else {
                    Term::nil()
                };
                self.expect_punct(']')?;
                Ok((Term::list_with_tail(items, tail), 0))
            }
            Tok::Punct('{') => {
                if self.is_punct(0, '}') {
                    self.pos += 1;
                    return self.after_name("{}".to_string(), false, max);
                }
                let (t, _) = self.parse(1200)?;
                self.expect_punct('}')?;
                Ok((Term::compound("{}", vec![t]), 0))
            }
            Tok::Name(n) => self.after_name(n, true, max),
            Tok::QName(n) => self.after_name(n, false, max),
            Tok::Punct(c) => {
                self.pos -= 1;
                Err(self.err_here(&format!("unexpected `{}`", c)))
            }
            Tok::End => {
                self.pos -= 1;
                Err(self.err_here("unexpected end of clause"))
            }
        }
    }

    fn after_name(&mut self, name: String, operator_capable: bool, max: u16) -> Result<(Term, u16), ParseError> {
        let functional = self.is_punct(0, '(') && !self.peek().is_some_and(|t| t.layout_before);
        if functional {
            let args = self.args()?;
            return Ok((Term::compound(&name, args), 0));
        }
        if operator_capable && name == "-" {
            if let Some(Token { tok, layout_before: false, .. }) = self.peek() {
                let neg = match tok {
                    Tok::Int(i) => Some(Term::int(-i)),
                    Tok::Float(f) => Some(Term::float(-f)),
                    _ => None,
                };
                if let Some(t) = neg {
                    self.pos += 1;
                    return Ok((t, 0));
                }
            }
        }
        if operator_capable {
            if let Some(op) = ops::prefix(&name) {
                if self.can_start_term(0) {
                    let (_, mut ap) = op.arg_priorities();
                    let mut p = op.priority;
                    if p > max {
                        p = max;
                        ap = ap.min(max);
                    }
                    let (arg, _) = self.parse(ap)?;
                    return Ok((Term::compound(&name, vec![arg]), p));
                }
            }
        }
        Ok((Term::atom(&name), 0))
    }
}

fn parser(src: &str) -> Result<Parser<'_>, ParseError> {
    Ok(Parser { src, toks: Lexer::new(src).tokens()?, pos: 0, vars: HashMap::new(), var_order: Vec::new() })
}

/// Reads every `.`-terminated term in `src`. Variable scopes are per term.
pub fn read_terms(src: &str) -> Result<Vec<ReadTerm>, ParseError> {
    let mut p = parser(src)?;
    let mut out = Vec::new();
    while p.peek().is_some() {
        p.vars.clear();
        p.var_order.clear();
        let (term, _) = p.parse(1200)?;
        match p.peek() {
            Some(Token { tok: Tok::End, .. }) => p.pos += 1,
            _ => return Err(p.err_here("operator expected or missing `.`")),
        }
        out.push(ReadTerm { term, var_names: std::mem::take(&mut p.var_order) });
    }
    Ok(out)
}

/// Reads exactly one term; the terminating `.` is optional.
pub fn read_term(src: &str) -> Result<ReadTerm, ParseError> {
    let mut p = parser(src)?;
    if p.peek().is_none() {
        return Err(p.err_here("empty input"));
    }
    let (term, _) = p.parse(1200)?;
    if let Some(Token { tok: Tok::End, .. }) = p.peek() {
        p.pos += 1;
    }
    if p.peek().is_some() {
        return Err(p.err_here("unexpected text after term"));
    }
    Ok(ReadTerm { term, var_names: p.var_order })
}

/// Convenience for tests and examples: reads one term, panicking on error.
pub fn term(src: &str) -> Term {
    match read_term(src) {
        Ok(r) => r.term,
        Err(e) => panic!("{}: {}", e, src),
    }
}
