//! Lexer and recursive-descent parser for program text and goals.
//!
//! ```text
//! program   := item* ;
//! item      := fact | data_rule | tr_rule | query ;
//! fact      := atom "." ;
//! data_rule := atom ":-" atom ("," atom)* "." ;
//! tr_rule   := atom "<-" goal "." ;
//! goal      := step ("*" step)* ;
//! step      := "ins(" atom ")" | "del(" atom ")" | comparison | atom ;
//! query     := "?-" goal "." ;
//! ```
//!
//! `*` separates serial steps at the top level of a goal; inside parentheses
//! it is integer multiplication. `%` starts a line comment.

use crate::builtin::{CmpOp, Comparison};
use crate::program::{DataRule, Program, SerialGoal, Span, Step, TrRule};
use crate::term::{Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    Arrow,
    Query,
    Star,
    Plus,
    Minus,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::If => "`:-`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::Query => "`?-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |message: String, line, col| ParseError { message, line, col };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let rest = |k: usize| chars.get(i + k).copied();
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if c.is_ascii_lowercase() { Tok::Ident(word) } else { Tok::Var(word) };
            out.push((tok, span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += i - start;
            let value = digits.parse().map_err(|_| err(format!("integer `{digits}` out of range"), span.line, span.col))?;
            out.push((Tok::Int(value), span));
            continue;
        }
        let (tok, len) = match (c, rest(1), rest(2)) {
            ('(', _, _) => (Tok::LParen, 1),
            (')', _, _) => (Tok::RParen, 1),
            (',', _, _) => (Tok::Comma, 1),
            ('.', _, _) => (Tok::Dot, 1),
            ('*', _, _) => (Tok::Star, 1),
            ('+', _, _) => (Tok::Plus, 1),
            ('-', _, _) => (Tok::Minus, 1),
            (':', Some('-'), _) => (Tok::If, 2),
            ('?', Some('-'), _) => (Tok::Query, 2),
            ('<', Some('-'), _) => (Tok::Arrow, 2),
            ('<', _, _) => (Tok::Cmp(CmpOp::Lt), 1),
            ('>', Some('='), _) => (Tok::Cmp(CmpOp::Ge), 2),
            ('>', _, _) => (Tok::Cmp(CmpOp::Gt), 1),
            ('=', Some('<'), _) => (Tok::Cmp(CmpOp::Le), 2),
            ('=', Some(':'), Some('=')) => (Tok::Cmp(CmpOp::Eq), 3),
            ('=', Some('\\'), Some('=')) => (Tok::Cmp(CmpOp::Ne), 3),
            _ => return Err(err(format!("unexpected character `{c}`"), line, col)),
        };
        out.push((tok, span));
        advance(len, &mut i, &mut col);
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let Span { line, col } = self.span();
        Err(ParseError { message: message.into(), line, col })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut prog = Program::default();
        while *self.peek() != Tok::Eof {
            let span = self.span();
            if *self.peek() == Tok::Query {
                self.bump();
                let goal = self.goal()?;
                self.expect(Tok::Dot)?;
                prog.queries.push((goal, span));
                continue;
            }
            let head = self.atom()?;
            match self.bump() {
                Tok::Dot => {
                    prog.base_facts.entry(head).or_insert(span);
                }
                Tok::If => {
                    let mut body = vec![self.atom()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        body.push(self.atom()?);
                    }
                    self.expect(Tok::Dot)?;
                    prog.data_rules.push(DataRule { head, body, span });
                }
                Tok::Arrow => {
                    let body = self.goal()?;
                    self.expect(Tok::Dot)?;
                    prog.tr_rules.push(TrRule { head, body, span });
                }
                other => {
                    self.pos -= 1;
                    return self.error(format!("expected `.`, `:-` or `<-`, found {}", other.describe()));
                }
            }
        }
        Ok(prog)
    }

    fn goal(&mut self) -> Result<SerialGoal, ParseError> {
        let mut steps = Vec::new();
        self.step(&mut steps)?;
        while *self.peek() == Tok::Star {
            self.bump();
            self.step(&mut steps)?;
        }
        Ok(SerialGoal::new(steps))
    }

    fn step(&mut self, steps: &mut Vec<Step>) -> Result<(), ParseError> {
        if let Tok::Ident(name) = self.peek() {
            let name = name.clone();
            if (name == "ins" || name == "del") && *self.peek_at(1) == Tok::LParen {
                self.bump();
                self.bump();
                let atom = self.atom()?;
                self.expect(Tok::RParen)?;
                steps.push(if name == "ins" { Step::Ins(atom) } else { Step::Del(atom) });
                return Ok(());
            }
            if name == "true" && *self.peek_at(1) != Tok::LParen {
                self.bump();
                return Ok(());
            }
        }
        let lhs = self.expr(false)?;
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let rhs = self.expr(false)?;
            steps.push(Step::Test(Comparison { op, lhs, rhs }));
            return Ok(());
        }
        if !is_atom(&lhs) {
            return self.error(format!("`{lhs}` is not a goal"));
        }
        steps.push(Step::Call(lhs));
        Ok(())
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let Tok::Ident(name) = self.peek().clone() else {
            return self.error(format!("expected an atom, found {}", self.peek().describe()));
        };
        self.bump();
        if *self.peek() != Tok::LParen {
            return Ok(Term::Const(name.into()));
        }
        self.bump();
        let args = self.args()?;
        Ok(Term::compound(name, args))
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = vec![self.expr(true)?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr(true)?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn expr(&mut self, allow_star: bool) -> Result<Term, ParseError> {
        let mut lhs = self.product(allow_star)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product(allow_star)?;
            lhs = Term::compound(op, vec![lhs, rhs]);
        }
    }

    fn product(&mut self, allow_star: bool) -> Result<Term, ParseError> {
        let mut lhs = self.primary()?;
        while allow_star && *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.primary()?;
            lhs = Term::compound("*", vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(name) => {
                self.bump();
                Ok(Term::Var(Var::new(name)))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Term::Int(i))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(i) => Ok(Term::Int(-i)),
                    _ => {
                        self.pos -= 1;
                        self.error("expected an integer after unary `-`")
                    }
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.expr(true)?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(_) => self.atom(),
            other => self.error(format!("expected a term, found {}", other.describe())),
        }
    }
}

fn is_atom(t: &Term) -> bool {
    matches!(t, Term::Const(_)) || (matches!(t, Term::Compound(..)) && !t.is_arith())
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Parser::new(text)?.program()
}

/// Parses `?- G.` or a bare goal `G` (trailing `.` optional).
pub fn parse_goal(text: &str) -> Result<SerialGoal, ParseError> {
    let mut p = Parser::new(text)?;
    if *p.peek() == Tok::Query {
        p.bump();
    }
    let goal = p.goal()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", p.peek().describe()));
    }
    Ok(goal)
}

/// Parses a single term, e.g. a ground fact.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.expr(true)?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", p.peek().describe()));
    }
    Ok(t)
}
