//! Formula AST, concrete syntax, negation normal form, and random generation.
//!
//! Concrete grammar (whitespace insignificant between tokens):
//!
//! ```text
//! formula := imp
//! imp     := or ("->" imp)?                  // right-associative
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "~" unary | "[E]" unary | "[A]" unary
//!          | "<E>" unary | "<A>" unary | atom
//! atom    := "true" | "false" | IDENT | "(" formula ")"
//! IDENT   := [a-z][a-zA-Z0-9_]*   (excluding the keywords true/false)
//! ```

use std::collections::BTreeSet;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

/// An IQML formula. All four implicit-quantifier modalities are primitive:
/// `BoxE` is `[E]` ("some index has every successor satisfying ..."),
/// `BoxA` is `[A]`, `DiaE` is `<E>`, `DiaA` is `<A>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(String),
    Top,
    Bot,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    BoxE(Box<Formula>),
    BoxA(Box<Formula>),
    DiaE(Box<Formula>),
    DiaA(Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("proposition list must be nonempty")]
    EmptyProps,
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: Formula, r: Formula) -> Formula {
        Formula::Imp(Box::new(l), Box::new(r))
    }

    pub fn box_e(f: Formula) -> Formula {
        Formula::BoxE(Box::new(f))
    }

    pub fn box_a(f: Formula) -> Formula {
        Formula::BoxA(Box::new(f))
    }

    pub fn dia_e(f: Formula) -> Formula {
        Formula::DiaE(Box::new(f))
    }

    pub fn dia_a(f: Formula) -> Formula {
        Formula::DiaA(Box::new(f))
    }

    /// All subtrees of `self` including `self`, deduplicated by structural
    /// equality.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        out.insert(self.clone());
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => {}
            Formula::Not(f)
            | Formula::BoxE(f)
            | Formula::BoxA(f)
            | Formula::DiaE(f)
            | Formula::DiaA(f) => f.collect_subformulas(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_subformulas(out);
                r.collect_subformulas(out);
            }
        }
    }

    /// Maximum nesting of modal constructors.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 0,
            Formula::Not(f) => f.modal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.modal_depth().max(r.modal_depth())
            }
            Formula::BoxE(f) | Formula::BoxA(f) | Formula::DiaE(f) | Formula::DiaA(f) => {
                1 + f.modal_depth()
            }
        }
    }

    /// Proposition names occurring in the formula, sorted.
    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Top | Formula::Bot => {}
            Formula::Not(f)
            | Formula::BoxE(f)
            | Formula::BoxA(f)
            | Formula::DiaE(f)
            | Formula::DiaA(f) => f.collect_props(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_props(out);
                r.collect_props(out);
            }
        }
    }

    /// Negation normal form: `Not` appears only directly above atoms, `Imp`
    /// is eliminated, modal duals are pushed through the `[E]/<A>` and
    /// `[A]/<E>` pairs. Logically equivalent to the input and preserves
    /// modal depth.
    pub fn to_nnf(&self) -> Formula {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => self.clone(),
            Formula::And(l, r) => Formula::and(l.to_nnf(), r.to_nnf()),
            Formula::Or(l, r) => Formula::or(l.to_nnf(), r.to_nnf()),
            Formula::Imp(l, r) => Formula::or(l.negated_nnf(), r.to_nnf()),
            Formula::BoxE(f) => Formula::box_e(f.to_nnf()),
            Formula::BoxA(f) => Formula::box_a(f.to_nnf()),
            Formula::DiaE(f) => Formula::dia_e(f.to_nnf()),
            Formula::DiaA(f) => Formula::dia_a(f.to_nnf()),
            Formula::Not(f) => f.negated_nnf(),
        }
    }

    /// NNF of the negation of `self`.
    fn negated_nnf(&self) -> Formula {
        match self {
            Formula::Atom(_) => Formula::not(self.clone()),
            Formula::Top => Formula::Bot,
            Formula::Bot => Formula::Top,
            Formula::Not(f) => f.to_nnf(),
            Formula::And(l, r) => Formula::or(l.negated_nnf(), r.negated_nnf()),
            Formula::Or(l, r) => Formula::and(l.negated_nnf(), r.negated_nnf()),
            Formula::Imp(l, r) => Formula::and(l.to_nnf(), r.negated_nnf()),
            // ~[E]f = <A>~f, ~[A]f = <E>~f, ~<E>f = [A]~f, ~<A>f = [E]~f
            Formula::BoxE(f) => Formula::dia_a(f.negated_nnf()),
            Formula::BoxA(f) => Formula::dia_e(f.negated_nnf()),
            Formula::DiaE(f) => Formula::box_a(f.negated_nnf()),
            Formula::DiaA(f) => Formula::box_e(f.negated_nnf()),
        }
    }

    /// True for atoms and negated atoms.
    pub fn is_literal(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            _ => false,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_formula(self))
    }
}

/// Canonical text form. Binary connectives are always parenthesized, so
/// `parse_formula(render_formula(f))` is structurally `f`.
pub fn render_formula(f: &Formula) -> String {
    match f {
        Formula::Atom(p) => p.clone(),
        Formula::Top => "true".to_string(),
        Formula::Bot => "false".to_string(),
        Formula::Not(g) => format!("~{}", render_formula(g)),
        Formula::And(l, r) => format!("({} & {})", render_formula(l), render_formula(r)),
        Formula::Or(l, r) => format!("({} | {})", render_formula(l), render_formula(r)),
        Formula::Imp(l, r) => format!("({} -> {})", render_formula(l), render_formula(r)),
        Formula::BoxE(g) => format!("[E]{}", render_formula(g)),
        Formula::BoxA(g) => format!("[A]{}", render_formula(g)),
        Formula::DiaE(g) => format!("<E>{}", render_formula(g)),
        Formula::DiaA(g) => format!("<A>{}", render_formula(g)),
    }
}

/// True iff `s` is a valid identifier: `[a-z][a-zA-Z0-9_]*`, excluding the
/// keywords `true` and `false`. Worlds, indices, and propositions all share
/// this lexical rule.
pub fn is_valid_ident(s: &str) -> bool {
    if s == "true" || s == "false" {
        return false;
    }
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Arrow,
    BoxE,
    BoxA,
    DiaE,
    DiaA,
    True,
    False,
    Ident(String),
}

struct Lexer<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, pos: usize, message: &str) -> SyntaxError {
        SyntaxError::Parse {
            offset: pos,
            message: message.to_string(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Token, usize)>, SyntaxError> {
        let mut out = Vec::new();
        while self.pos < self.text.len() {
            let start = self.pos;
            let c = self.text[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'(' => {
                    out.push((Token::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Token::RParen, start));
                    self.pos += 1;
                }
                b'~' => {
                    out.push((Token::Not, start));
                    self.pos += 1;
                }
                b'&' => {
                    out.push((Token::And, start));
                    self.pos += 1;
                }
                b'|' => {
                    out.push((Token::Or, start));
                    self.pos += 1;
                }
                b'-' => {
                    self.pos += 1;
                    if self.text.get(self.pos) == Some(&b'>') {
                        out.push((Token::Arrow, start));
                        self.pos += 1;
                    } else {
                        return Err(self.err(self.pos, "expected '>' after '-'"));
                    }
                }
                b'[' => {
                    let tok = self.modal(b']', Token::BoxE, Token::BoxA)?;
                    out.push((tok, start));
                }
                b'<' => {
                    let tok = self.modal(b'>', Token::DiaE, Token::DiaA)?;
                    out.push((tok, start));
                }
                c if c.is_ascii_lowercase() => {
                    let mut end = self.pos + 1;
                    while end < self.text.len()
                        && (self.text[end].is_ascii_alphanumeric() || self.text[end] == b'_')
                    {
                        end += 1;
                    }
                    let word = std::str::from_utf8(&self.text[self.pos..end]).unwrap();
                    let tok = match word {
                        "true" => Token::True,
                        "false" => Token::False,
                        _ => Token::Ident(word.to_string()),
                    };
                    out.push((tok, start));
                    self.pos = end;
                }
                _ => {
                    return Err(self.err(start, &format!("unexpected character '{}'", c as char)));
                }
            }
        }
        Ok(out)
    }

    /// Scans `[E]`/`[A]` (close = `]`) or `<E>`/`<A>` (close = `>`); the
    /// opening bracket is at `self.pos`.
    fn modal(&mut self, close: u8, exists: Token, forall: Token) -> Result<Token, SyntaxError> {
        self.pos += 1;
        let quantifier = match self.text.get(self.pos) {
            Some(b'E') => exists,
            Some(b'A') => forall,
            _ => return Err(self.err(self.pos, "expected 'E' or 'A'")),
        };
        self.pos += 1;
        if self.text.get(self.pos) != Some(&close) {
            return Err(self.err(self.pos, &format!("expected '{}'", close as char)));
        }
        self.pos += 1;
        Ok(quantifier)
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: &str) -> SyntaxError {
        SyntaxError::Parse {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or_expr()?;
        if self.peek() == Some(&Token::Arrow) {
            self.bump();
            let rhs = self.formula()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Token::Or) {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Some(Token::Not) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::BoxE) => {
                self.bump();
                Ok(Formula::box_e(self.unary()?))
            }
            Some(Token::BoxA) => {
                self.bump();
                Ok(Formula::box_a(self.unary()?))
            }
            Some(Token::DiaE) => {
                self.bump();
                Ok(Formula::dia_e(self.unary()?))
            }
            Some(Token::DiaA) => {
                self.bump();
                Ok(Formula::dia_a(self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().cloned() {
            Some(Token::True) => {
                self.bump();
                Ok(Formula::Top)
            }
            Some(Token::False) => {
                self.bump();
                Ok(Formula::Bot)
            }
            Some(Token::Ident(name)) => {
                self.bump();
                Ok(Formula::Atom(name))
            }
            Some(Token::LParen) => {
                self.bump();
                let inner = self.formula()?;
                if self.peek() == Some(&Token::RParen) {
                    self.bump();
                    Ok(inner)
                } else {
                    Err(self.err("expected ')'"))
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

/// Parses the concrete syntax. Precedence `~`/modal > `&` > `|` > `->`,
/// with `->` right-associative. Errors carry the byte offset of the
/// offending position.
pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let f = parser.formula()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.err("unexpected trailing input"));
    }
    Ok(f)
}

/// Deterministic random formula with `modal_depth <= max_depth` and atoms
/// drawn from `props`. The depth bound constrains modal nesting only;
/// boolean structure is additionally capped by an internal size budget.
pub fn random_formula(seed: u64, max_depth: usize, props: &[String]) -> Result<Formula, SyntaxError> {
    if props.is_empty() {
        return Err(SyntaxError::EmptyProps);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut size_budget = 3 + 4 * (max_depth + 1);
    Ok(gen_formula(&mut rng, max_depth, &mut size_budget, props))
}

fn gen_formula(
    rng: &mut ChaCha8Rng,
    modal_budget: usize,
    size_budget: &mut usize,
    props: &[String],
) -> Formula {
    if *size_budget == 0 {
        return gen_leaf(rng, props);
    }
    *size_budget -= 1;
    // Leaves 3, unary 3, binary 6, modal 4; modalities excluded at budget 0.
    let top = if modal_budget > 0 { 16 } else { 12 };
    match rng.gen_range(0..top) {
        0..=2 => gen_leaf(rng, props),
        3..=5 => Formula::not(gen_formula(rng, modal_budget, size_budget, props)),
        6 | 7 => Formula::and(
            gen_formula(rng, modal_budget, size_budget, props),
            gen_formula(rng, modal_budget, size_budget, props),
        ),
        8 | 9 => Formula::or(
            gen_formula(rng, modal_budget, size_budget, props),
            gen_formula(rng, modal_budget, size_budget, props),
        ),
        10 | 11 => Formula::imp(
            gen_formula(rng, modal_budget, size_budget, props),
            gen_formula(rng, modal_budget, size_budget, props),
        ),
        12 => Formula::box_e(gen_formula(rng, modal_budget - 1, size_budget, props)),
        13 => Formula::box_a(gen_formula(rng, modal_budget - 1, size_budget, props)),
        14 => Formula::dia_e(gen_formula(rng, modal_budget - 1, size_budget, props)),
        _ => Formula::dia_a(gen_formula(rng, modal_budget - 1, size_budget, props)),
    }
}

fn gen_leaf(rng: &mut ChaCha8Rng, props: &[String]) -> Formula {
    // Truth constants kept rare so random formulas stay interesting.
    match rng.gen_range(0..10) {
        0 => Formula::Top,
        1 => Formula::Bot,
        _ => Formula::Atom(props[rng.gen_range(0..props.len())].clone()),
    }
}
