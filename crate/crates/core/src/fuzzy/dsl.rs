//! Rule files (`.frs`).
//!
//! ```text
//! # comment
//! RULE r1 : IF BareNuclei IS High OR (ClumpThickness IS High AND Mitoses IS High)
//!           THEN class IS malignant WEIGHT 0.8
//! ```
//!
//! AND binds tighter than OR; parentheses override. A trailing `;` after a
//! rule is accepted. Keywords are case-sensitive.

use std::fmt;

use super::membership::{Feature, Term};
use super::{Expr, FuzzyError, Rule, RuleBase};
use crate::data::Class;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Colon,
    Semi,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Pos {
    line: usize,
    col: usize,
}

fn syntax(pos: Pos, message: impl Into<String>) -> FuzzyError {
    FuzzyError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn at(pos: Pos, inner: FuzzyError) -> FuzzyError {
    FuzzyError::At {
        line: pos.line,
        col: pos.col,
        inner: Box::new(inner),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, FuzzyError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                chars.next();
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            col += 1;
            out.push((tok, pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(s), pos));
            continue;
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+') {
                    s.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let v: f64 = s
                .parse()
                .map_err(|_| syntax(pos, format!("malformed number '{s}'")))?;
            out.push((Tok::Number(v), pos));
            continue;
        }
        return Err(syntax(pos, format!("unexpected character '{c}'")));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), FuzzyError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.pos(),
                format!("expected '{kw}', found {}", self.peek()),
            ))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), FuzzyError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.pos(),
                format!("expected {tok}, found {}", self.peek()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), FuzzyError> {
        match self.bump() {
            (Tok::Ident(s), pos) => Ok((s, pos)),
            (other, pos) => Err(syntax(pos, format!("expected {what}, found {other}"))),
        }
    }

    fn rule(&mut self) -> Result<Rule, FuzzyError> {
        self.expect_keyword("RULE")?;
        let (name, _) = self.ident("rule name")?;
        self.expect(Tok::Colon)?;
        self.expect_keyword("IF")?;
        let antecedent = self.or_expr()?;
        self.expect_keyword("THEN")?;
        self.expect_keyword("class")?;
        self.expect_keyword("IS")?;
        let (class, pos) = self.ident("'benign' or 'malignant'")?;
        let consequent = match class.as_str() {
            "benign" => Class::Benign,
            "malignant" => Class::Malignant,
            other => {
                return Err(syntax(
                    pos,
                    format!("expected 'benign' or 'malignant', found '{other}'"),
                ))
            }
        };
        let mut weight = 1.0;
        if self.is_keyword("WEIGHT") {
            self.bump();
            match self.bump() {
                (Tok::Number(w), pos) => {
                    if !(w > 0.0 && w <= 1.0) {
                        return Err(at(pos, FuzzyError::InvalidWeight(w)));
                    }
                    weight = w;
                }
                (other, pos) => return Err(syntax(pos, format!("expected weight, found {other}"))),
            }
        }
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        Ok(Rule {
            name,
            antecedent,
            consequent,
            weight,
        })
    }

    fn or_expr(&mut self) -> Result<Expr, FuzzyError> {
        let mut parts = vec![self.and_expr()?];
        while self.is_keyword("OR") {
            self.bump();
            parts.push(self.and_expr()?);
        }
        Ok(Expr::or(parts))
    }

    fn and_expr(&mut self) -> Result<Expr, FuzzyError> {
        let mut parts = vec![self.atom()?];
        while self.is_keyword("AND") {
            self.bump();
            parts.push(self.atom()?);
        }
        Ok(Expr::and(parts))
    }

    fn atom(&mut self) -> Result<Expr, FuzzyError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let e = self.or_expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let (fname, fpos) = self.ident("feature name")?;
        self.expect_keyword("IS")?;
        let (tname, tpos) = self.ident("term")?;
        let feature: Feature = fname.parse().map_err(|e| at(fpos, e))?;
        let term: Term = tname.parse().map_err(|e| at(tpos, e))?;
        if !feature.has_term(term) {
            return Err(at(tpos, FuzzyError::UndefinedTerm { feature, term }));
        }
        Ok(Expr::Clause { feature, term })
    }
}

/// Parses a rule file. Rule names must be unique and at least one rule
/// must be present.
pub fn parse_rules(text: &str) -> Result<RuleBase, FuzzyError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let mut rules: Vec<Rule> = Vec::new();
    while *p.peek() != Tok::Eof {
        let pos = p.pos();
        let rule = p.rule()?;
        if rules.iter().any(|r| r.name == rule.name) {
            return Err(at(pos, FuzzyError::DuplicateRule(rule.name)));
        }
        rules.push(rule);
    }
    RuleBase::new(rules)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Clause { feature, term } => write!(f, "{feature} IS {term}"),
            Expr::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Expr::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    match p {
                        Expr::Or(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let class = match self.consequent {
            Class::Benign => "benign",
            Class::Malignant => "malignant",
        };
        write!(
            f,
            "RULE {}: IF {} THEN class IS {class}",
            self.name, self.antecedent
        )?;
        if self.weight != 1.0 {
            write!(f, " WEIGHT {}", self.weight)?;
        }
        Ok(())
    }
}

impl fmt::Display for RuleBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
