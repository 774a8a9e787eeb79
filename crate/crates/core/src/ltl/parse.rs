//! Property-file parser.
//!
//! ```text
//! formula := or ('->' formula)?
//! or      := and ('||' and)*
//! and     := until ('&&' until)*
//! until   := unary (('U' | 'W') until)?
//! unary   := ('!' | 'X' | '[]' | '<>') unary | primary
//! primary := 'true' | 'false' | atom | '(' formula ')'
//!          | quantifier '(' formula ')'
//! ```
//!
//! Quantifiers `forall_workers`, `exists_workers` bind `$w` and expand over
//! `w1..wN`; `forall_threads`, `exists_threads` bind `$t` and expand over
//! `s, w1..wN`. `#` starts a comment that runs to the end of the line.

use super::LtlFormula;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: unknown proposition `{name}`")]
    UnknownProposition { line: usize, column: usize, name: String },
}

/// Settings for quantifier expansion and proposition checking.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    pub workers: usize,
    /// When set, every atom must be a member.
    pub vocabulary: Option<BTreeSet<String>>,
}

impl ParseContext {
    pub fn with_workers(workers: usize) -> Self {
        ParseContext { workers, vocabulary: None }
    }

    fn threads(&self) -> Vec<String> {
        std::iter::once("s".to_string()).chain(self.workers()).collect()
    }

    fn workers(&self) -> Vec<String> {
        (1..=self.workers).map(|i| format!("w{i}")).collect()
    }
}

/// Parses a formula with no quantifier expansion context and any atoms.
pub fn parse(text: &str) -> Result<LtlFormula, ParseError> {
    parse_with(text, &ParseContext::default())
}

pub fn parse_with(text: &str, ctx: &ParseContext) -> Result<LtlFormula, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, ctx, bindings: Vec::new() };
    let f = p.formula()?;
    match p.peek() {
        Tok::Eof => Ok(f),
        _ => Err(p.error("unexpected trailing input")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    WeakUntil,
    Always,
    Eventually,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let mut push = |tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: l0, column: c0 });
            *i += width;
            *col += width;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '!' => push(Tok::Not, 1, &mut i, &mut col),
            'X' => push(Tok::Next, 1, &mut i, &mut col),
            'U' => push(Tok::Until, 1, &mut i, &mut col),
            'W' => push(Tok::WeakUntil, 1, &mut i, &mut col),
            _ if two == "&&" => push(Tok::And, 2, &mut i, &mut col),
            _ if two == "||" => push(Tok::Or, 2, &mut i, &mut col),
            _ if two == "->" => push(Tok::Implies, 2, &mut i, &mut col),
            _ if two == "[]" => push(Tok::Always, 2, &mut i, &mut col),
            _ if two == "<>" => push(Tok::Eventually, 2, &mut i, &mut col),
            c if c.is_ascii_lowercase() || c == '_' || c == '$' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_lowercase()
                        || chars[i].is_ascii_digit()
                        || chars[i] == '_'
                        || chars[i] == '$')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(word), line: l0, column: c0 });
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

#[derive(Clone, Copy)]
enum Quantifier {
    Forall,
    Exists,
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    ctx: &'a ParseContext,
    bindings: Vec<(&'static str, String)>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ParseError {
        let t = &self.tokens[self.pos];
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            other => format!("{other:?}"),
        };
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            message: format!("{message} (found {found})"),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected {tok:?}")))
        }
    }

    fn formula(&mut self) -> Result<LtlFormula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.formula()?;
            return Ok(LtlFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<LtlFormula, ParseError> {
        let mut f = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            f = LtlFormula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<LtlFormula, ParseError> {
        let mut f = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            f = LtlFormula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> Result<LtlFormula, ParseError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                Ok(LtlFormula::until(lhs, self.until()?))
            }
            Tok::WeakUntil => {
                self.bump();
                Ok(LtlFormula::weak_until(lhs, self.until()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<LtlFormula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(LtlFormula::not(self.unary()?))
            }
            Tok::Next => {
                self.bump();
                Ok(LtlFormula::next(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                Ok(LtlFormula::always(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(LtlFormula::eventually(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<LtlFormula, ParseError> {
        let t = self.tokens[self.pos].clone();
        match &t.tok {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(word) => {
                self.bump();
                match word.as_str() {
                    "true" => Ok(LtlFormula::True),
                    "false" => Ok(LtlFormula::False),
                    "forall_workers" => self.quantified(Quantifier::Forall, "$w", false),
                    "exists_workers" => self.quantified(Quantifier::Exists, "$w", false),
                    "forall_threads" => self.quantified(Quantifier::Forall, "$t", true),
                    "exists_threads" => self.quantified(Quantifier::Exists, "$t", true),
                    _ => self.atom(word, t.line, t.column),
                }
            }
            _ => Err(self.error("expected a formula")),
        }
    }

    fn quantified(
        &mut self,
        q: Quantifier,
        var: &'static str,
        include_supervisor: bool,
    ) -> Result<LtlFormula, ParseError> {
        if self.bindings.iter().any(|(v, _)| *v == var) {
            return Err(self.error(&format!("nested rebinding of `{var}`")));
        }
        let values = if include_supervisor { self.ctx.threads() } else { self.ctx.workers() };
        let body_start = self.pos;
        let mut parts = Vec::new();
        // Parse the body once per value so positions in errors stay exact.
        for v in &values {
            self.pos = body_start;
            self.bindings.push((var, v.clone()));
            let r = self.expect(Tok::LParen).and_then(|_| self.formula());
            self.bindings.pop();
            parts.push(r?);
            self.expect(Tok::RParen)?;
        }
        if values.is_empty() {
            // Empty domain: skip the balanced body.
            self.expect(Tok::LParen)?;
            let mut depth = 1;
            while depth > 0 {
                match self.bump().tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen => depth -= 1,
                    Tok::Eof => return Err(self.error("unbalanced quantifier body")),
                    _ => {}
                }
            }
        }
        Ok(match q {
            Quantifier::Forall => LtlFormula::conjunction(parts),
            Quantifier::Exists => LtlFormula::disjunction(parts),
        })
    }

    fn atom(&self, word: &str, line: usize, column: usize) -> Result<LtlFormula, ParseError> {
        let mut name = word.to_string();
        for (var, value) in &self.bindings {
            name = name.replace(var, value);
        }
        if name.contains('$') {
            return Err(ParseError::Syntax {
                line,
                column,
                message: format!("unbound substitution variable in `{word}`"),
            });
        }
        if let Some(vocab) = &self.ctx.vocabulary {
            if !vocab.contains(&name) {
                return Err(ParseError::UnknownProposition { line, column, name });
            }
        }
        Ok(LtlFormula::Atom(name))
    }
}
