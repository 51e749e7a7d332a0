//! First-order formulas: syntax tree, parser, printer and syntactic metadata.
//!
//! Grammar (binding from tightest to loosest: `!`, `&`, `|`, `->`, `<->`):
//!
//! ```text
//! formula := quant | iff
//! quant   := ("exists" | "forall") var "." formula
//! iff     := imp { "<->" imp }
//! imp     := or [ "->" imp ]
//! or      := and { "|" and }
//! and     := unary { "&" unary }
//! unary   := "!" unary | "(" formula ")" | quant | atom
//! atom    := name "(" var { "," var } ")" | var ("=" | "!=") var | "true" | "false"
//! var     := "x" digits
//! ```
//!
//! A quantifier body extends as far to the right as possible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::structure::{Signature, Structure, ADJ};

/// Variable index; `x1` is `1`.
pub type Var = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom { rel: String, args: Vec<Var> },
    Eq(Var, Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fragment {
    /// Conjunctions of relational atoms (including the empty conjunction).
    Hom,
    /// No free variables.
    Sentence,
    /// Quantifier-free with free variables.
    Qf,
    /// Formulas whose free variables are among `x1..xp`.
    Fo(usize),
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fragment::Hom => write!(f, "HOM"),
            Fragment::Sentence => write!(f, "Sentence"),
            Fragment::Qf => write!(f, "QF"),
            Fragment::Fo(p) => write!(f, "FO_{p}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: unknown relation `{name}`")]
    UnknownRelation {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: relation `{name}` has arity {expected} but got {found} arguments")]
    Arity {
        line: usize,
        col: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: Vec<Var>) -> Self {
        Formula::Atom {
            rel: rel.into(),
            args,
        }
    }

    pub fn adj(a: Var, b: Var) -> Self {
        Formula::atom(ADJ, vec![a, b])
    }

    pub fn neq(a: Var, b: Var) -> Self {
        Formula::Eq(a, b).not()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn implies(self, other: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Self {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    pub fn exists(v: Var, body: Formula) -> Self {
        Formula::Exists(v, Box::new(body))
    }

    pub fn forall(v: Var, body: Formula) -> Self {
        Formula::Forall(v, Box::new(body))
    }

    /// Conjunction; empty gives `True`, a single conjunct is returned as is.
    pub fn and_all(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; empty gives `False`.
    pub fn or_all(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    /// Pairwise distinctness of the given variables.
    pub fn distinct(vars: &[Var]) -> Self {
        let mut parts = Vec::new();
        for (i, &a) in vars.iter().enumerate() {
            for &b in &vars[i + 1..] {
                parts.push(Formula::neq(a, b));
            }
        }
        Formula::and_all(parts)
    }

    /// `exists^{>=k} y. body(y)` expanded into `k` existentials over fresh
    /// variables `first, first+1, ...` with pairwise distinctness.
    pub fn exists_at_least(k: usize, first: Var, body: impl Fn(Var) -> Formula) -> Self {
        if k == 0 {
            return Formula::True;
        }
        let vars: Vec<Var> = (0..k as Var).map(|i| first + i).collect();
        let mut parts = vec![Formula::distinct(&vars)];
        parts.extend(vars.iter().map(|&v| body(v)));
        let parts: Vec<Formula> = parts.into_iter().filter(|f| *f != Formula::True).collect();
        vars.iter()
            .rev()
            .fold(Formula::and_all(parts), |acc, &v| Formula::exists(v, acc))
    }

    pub fn qrank(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => 0,
            Formula::Not(f) => f.qrank(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::qrank).max().unwrap_or(0),
            Formula::Implies(a, b) | Formula::Iff(a, b) => a.qrank().max(b.qrank()),
            Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.qrank(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom { args, .. } => {
                out.extend(args.iter().filter(|v| !bound.contains(v)));
            }
            Formula::Eq(a, b) => {
                for v in [a, b] {
                    if !bound.contains(v) {
                        out.insert(*v);
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(*v);
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Largest free variable index (0 for sentences).
    pub fn rank(&self) -> usize {
        self.free_vars().last().map_or(0, |&v| v as usize)
    }

    /// Every variable index occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom { args, .. } => out.extend(args.iter().copied()),
            Formula::Eq(a, b) => {
                out.insert(*a);
                out.insert(*b);
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                out.insert(*v);
            }
            _ => {}
        });
        out
    }

    /// Relation names used, with the argument counts they are used with.
    pub fn relations(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom { rel, args } = f {
                out.insert((rel.clone(), args.len()));
            }
        });
        out
    }

    fn visit(&self, g: &mut impl FnMut(&Formula)) {
        g(self);
        match self {
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.visit(g),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.visit(g);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(g);
                b.visit(g);
            }
            _ => {}
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.qrank() == 0
    }

    fn is_hom(&self) -> bool {
        match self {
            Formula::True | Formula::Atom { .. } => true,
            Formula::And(fs) => fs.iter().all(Formula::is_hom),
            _ => false,
        }
    }

    pub fn fragment(&self) -> Fragment {
        if self.is_hom() {
            Fragment::Hom
        } else if self.free_vars().is_empty() {
            Fragment::Sentence
        } else if self.is_quantifier_free() {
            Fragment::Qf
        } else {
            Fragment::Fo(self.rank())
        }
    }

    /// Rewrites `->` and `<->` with `!`, `&`, `|`.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => self.clone(),
            Formula::Not(f) => f.desugar().not(),
            Formula::And(fs) => Formula::And(fs.iter().map(Formula::desugar).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(Formula::desugar).collect()),
            Formula::Implies(a, b) => Formula::Or(vec![a.desugar().not(), b.desugar()]),
            Formula::Iff(a, b) => {
                let (a, b) = (a.desugar(), b.desugar());
                Formula::Or(vec![
                    Formula::And(vec![a.clone(), b.clone()]),
                    Formula::And(vec![a.not(), b.not()]),
                ])
            }
            Formula::Exists(v, f) => Formula::exists(*v, f.desugar()),
            Formula::Forall(v, f) => Formula::forall(*v, f.desugar()),
        }
    }

    /// Capture-avoiding simultaneous substitution of free variables.
    pub fn substitute(&self, map: &BTreeMap<Var, Var>) -> Formula {
        let mut next = self
            .all_vars()
            .into_iter()
            .chain(map.keys().copied())
            .chain(map.values().copied())
            .max()
            .unwrap_or(0)
            + 1;
        self.subst_inner(map, &mut next)
    }

    fn subst_inner(&self, map: &BTreeMap<Var, Var>, next: &mut Var) -> Formula {
        let m = |v: &Var| *map.get(v).unwrap_or(v);
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom { rel, args } => Formula::atom(rel.clone(), args.iter().map(m).collect()),
            Formula::Eq(a, b) => Formula::Eq(m(a), m(b)),
            Formula::Not(f) => f.subst_inner(map, next).not(),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst_inner(map, next)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst_inner(map, next)).collect()),
            Formula::Implies(a, b) => a.subst_inner(map, next).implies(b.subst_inner(map, next)),
            Formula::Iff(a, b) => a.subst_inner(map, next).iff(b.subst_inner(map, next)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let free = f.free_vars();
                let mut inner: BTreeMap<Var, Var> = map
                    .iter()
                    .filter(|(k, _)| **k != *v && free.contains(k))
                    .map(|(k, t)| (*k, *t))
                    .collect();
                let captured = inner.values().any(|t| t == v);
                let bound = if captured {
                    let fresh = *next;
                    *next += 1;
                    inner.insert(*v, fresh);
                    fresh
                } else {
                    *v
                };
                let body = f.subst_inner(&inner, next);
                if matches!(self, Formula::Exists(..)) {
                    Formula::exists(bound, body)
                } else {
                    Formula::forall(bound, body)
                }
            }
        }
    }

    /// Replaces every atom `R(args)` by `g(R, args)` (other nodes are kept).
    pub fn map_atoms(&self, g: &mut impl FnMut(&str, &[Var]) -> Formula) -> Formula {
        match self {
            Formula::Atom { rel, args } => g(rel, args),
            Formula::True | Formula::False | Formula::Eq(..) => self.clone(),
            Formula::Not(f) => f.map_atoms(g).not(),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.map_atoms(g)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.map_atoms(g)).collect()),
            Formula::Implies(a, b) => a.map_atoms(g).implies(b.map_atoms(g)),
            Formula::Iff(a, b) => a.map_atoms(g).iff(b.map_atoms(g)),
            Formula::Exists(v, f) => Formula::exists(*v, f.map_atoms(g)),
            Formula::Forall(v, f) => Formula::forall(*v, f.map_atoms(g)),
        }
    }

    /// Checks relation names and arities against a signature.
    pub fn check_signature(&self, sig: &Signature) -> Result<(), ParseError> {
        for (name, found) in self.relations() {
            match sig.arity(&name) {
                None => {
                    return Err(ParseError::UnknownRelation {
                        line: 0,
                        col: 0,
                        name,
                    })
                }
                Some(expected) if expected != found => {
                    return Err(ParseError::Arity {
                        line: 0,
                        col: 0,
                        name,
                        expected,
                        found,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists(..) | Formula::Forall(..) => 0,
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(fs) if fs.len() >= 2 => 3,
            Formula::And(fs) if fs.len() >= 2 => 4,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, required: u8) -> fmt::Result {
        if self.precedence() < required {
            write!(f, "(")?;
            self.write_bare(f)?;
            write!(f, ")")
        } else {
            self.write_bare(f)
        }
    }

    fn write_joined(
        f: &mut fmt::Formatter<'_>,
        parts: &[Formula],
        op: &str,
        required: u8,
    ) -> fmt::Result {
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                write!(f, " {op} ")?;
            }
            part.write_prec(f, required)?;
        }
        Ok(())
    }

    fn write_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom { rel, args } => {
                let args: Vec<String> = args.iter().map(|v| format!("x{v}")).collect();
                write!(f, "{rel}({})", args.join(","))
            }
            Formula::Eq(a, b) => write!(f, "x{a} = x{b}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Eq(a, b) => write!(f, "x{a} != x{b}"),
                other => {
                    write!(f, "!")?;
                    if other.precedence() < 5
                        || matches!(other, Formula::Not(g) if matches!(g.as_ref(), Formula::Eq(..)))
                    {
                        write!(f, "(")?;
                        other.write_bare(f)?;
                        write!(f, ")")
                    } else {
                        other.write_bare(f)
                    }
                }
            },
            // Degenerate one-element lists print as their element in parens
            // so that the node shape survives a round trip up to flattening.
            Formula::And(fs) if fs.is_empty() => write!(f, "true"),
            Formula::Or(fs) if fs.is_empty() => write!(f, "false"),
            Formula::And(fs) | Formula::Or(fs) if fs.len() == 1 => fs[0].write_prec(f, 5),
            Formula::And(fs) => Self::write_joined(f, fs, "&", 5),
            Formula::Or(fs) => Self::write_joined(f, fs, "|", 4),
            Formula::Implies(a, b) => {
                a.write_prec(f, 3)?;
                write!(f, " -> ")?;
                b.write_prec(f, 2)
            }
            Formula::Iff(a, b) => {
                a.write_prec(f, 1)?;
                write!(f, " <-> ")?;
                b.write_prec(f, 2)
            }
            Formula::Exists(v, body) => {
                write!(f, "exists x{v}. ")?;
                body.write_prec(f, 0)
            }
            Formula::Forall(v, body) => {
                write!(f, "forall x{v}. ")?;
                body.write_prec(f, 0)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_bare(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Var(Var),
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Neq,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    Exists,
    Forall,
    True,
    False,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Var(v) => write!(f, "`x{v}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Neq => write!(f, "`!=`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::DoubleArrow => write!(f, "`<->`"),
            Tok::Exists => write!(f, "`exists`"),
            Tok::Forall => write!(f, "`forall`"),
            Tok::True => write!(f, "`true`"),
            Tok::False => write!(f, "`false`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
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
        let start = col;
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let three: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        let (tok, len) = if three == "<->" {
            (Tok::DoubleArrow, 3)
        } else if two == "->" {
            (Tok::Arrow, 2)
        } else if two == "!=" {
            (Tok::Neq, 2)
        } else {
            match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '=' => (Tok::Eq, 1),
                '!' => (Tok::Bang, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Pipe, 1),
                c if c.is_ascii_alphabetic() => {
                    let mut j = i;
                    while j < chars.len() && chars[j].is_ascii_alphanumeric() {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let tok = match word.as_str() {
                        "exists" => Tok::Exists,
                        "forall" => Tok::Forall,
                        "true" => Tok::True,
                        "false" => Tok::False,
                        w if w.len() > 1
                            && w.starts_with('x')
                            && w[1..].bytes().all(|b| b.is_ascii_digit()) =>
                        {
                            let v: Var = w[1..].parse().map_err(|_| {
                                syntax(line, start, format!("variable `{w}` is too large"))
                            })?;
                            if v == 0 {
                                return Err(syntax(line, start, "variables are numbered from x1"));
                            }
                            Tok::Var(v)
                        }
                        _ => Tok::Name(word),
                    };
                    (tok, j - i)
                }
                other => {
                    return Err(syntax(
                        line,
                        start,
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        out.push(Token {
            tok,
            line,
            col: start,
        });
        i += len;
        col += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    sig: Option<&'a Signature>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(syntax(
                t.line,
                t.col,
                format!("expected {tok}, found {}", t.tok),
            ))
        }
    }

    fn var(&mut self) -> Result<Var, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Var(v) => Ok(v),
            other => Err(syntax(
                t.line,
                t.col,
                format!("expected a variable, found {other}"),
            )),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().tok {
            Tok::Exists | Tok::Forall => self.quant(),
            _ => self.iff(),
        }
    }

    fn quant(&mut self) -> Result<Formula, ParseError> {
        let q = self.bump();
        let v = self.var()?;
        self.expect(Tok::Dot)?;
        let body = self.formula()?;
        Ok(if q.tok == Tok::Exists {
            Formula::exists(v, body)
        } else {
            Formula::forall(v, body)
        })
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.imp()?;
        while self.peek().tok == Tok::DoubleArrow {
            self.bump();
            let right = self.imp()?;
            left = left.iff(right);
        }
        Ok(left)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let left = self.or()?;
        if self.peek().tok == Tok::Arrow {
            self.bump();
            let right = if matches!(self.peek().tok, Tok::Exists | Tok::Forall) {
                self.quant()?
            } else {
                self.imp()?
            };
            return Ok(left.implies(right));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.and()?];
        while self.peek().tok == Tok::Pipe {
            self.bump();
            parts.push(self.and()?);
        }
        Ok(Formula::or_all(parts))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.peek().tok == Tok::Amp {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(Formula::and_all(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Bang => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Exists | Tok::Forall => self.quant(),
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Var(a) => {
                self.bump();
                let op = self.bump();
                let b = self.var()?;
                match op.tok {
                    Tok::Eq => Ok(Formula::Eq(a, b)),
                    Tok::Neq => Ok(Formula::neq(a, b)),
                    other => Err(syntax(
                        op.line,
                        op.col,
                        format!("expected `=` or `!=`, found {other}"),
                    )),
                }
            }
            Tok::Name(name) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut args = vec![self.var()?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    args.push(self.var()?);
                }
                self.expect(Tok::RParen)?;
                if let Some(sig) = self.sig {
                    match sig.arity(&name) {
                        None => {
                            return Err(ParseError::UnknownRelation {
                                line: t.line,
                                col: t.col,
                                name,
                            })
                        }
                        Some(expected) if expected != args.len() => {
                            return Err(ParseError::Arity {
                                line: t.line,
                                col: t.col,
                                name,
                                expected,
                                found: args.len(),
                            })
                        }
                        _ => {}
                    }
                }
                Ok(Formula::Atom { rel: name, args })
            }
            other => Err(syntax(t.line, t.col, format!("unexpected {other}"))),
        }
    }
}

fn parse_with(text: &str, sig: Option<&Signature>) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
        sig,
    };
    let f = parser.formula()?;
    let t = parser.peek();
    if t.tok != Tok::Eof {
        return Err(syntax(
            t.line,
            t.col,
            format!("unexpected {} after formula", t.tok),
        ));
    }
    Ok(f)
}

/// Parses a formula and checks its relations against `sig`.
pub fn parse(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    parse_with(text, Some(sig))
}

/// Parses a formula without signature checks.
pub fn parse_unchecked(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, None)
}

/// The canonical conjunctive formula of a graph `F` on `0..k`: one atom
/// `adj(x{i+1}, x{j+1})` per edge. Returns the formula and its declared
/// arity `k` (the free variables of an edgeless `F` are only declared).
pub fn canonical_hom_formula(f: &Structure) -> (Formula, usize) {
    let atoms = f
        .edges()
        .into_iter()
        .map(|(i, j)| Formula::adj(i as Var + 1, j as Var + 1))
        .collect();
    (Formula::and_all(atoms), f.size())
}

/// The `k`-extension sentence: for all `2k` distinct vertices there is a
/// further vertex adjacent to the first `k` and to none of the last `k`.
/// The witness is `x{2k+1}`.
pub fn extension_sentence(k: usize) -> Formula {
    let n = 2 * k as Var;
    let z = n + 1;
    let xs: Vec<Var> = (1..=n).collect();
    let mut witness: Vec<Formula> = xs.iter().map(|&x| Formula::neq(x, z)).collect();
    witness.extend((1..=k as Var).map(|x| Formula::adj(x, z)));
    witness.extend((k as Var + 1..=n).map(|x| Formula::adj(x, z).not()));
    let body = Formula::distinct(&xs).implies(Formula::exists(z, Formula::and_all(witness)));
    xs.iter()
        .rev()
        .fold(body, |acc, &x| Formula::forall(x, acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> Signature {
        Signature::graph()
    }

    #[test]
    fn parses_equality() {
        let f = parse("x1 = x1", &g()).unwrap();
        assert_eq!(f, Formula::Eq(1, 1));
        assert_eq!(f.qrank(), 0);
        assert_eq!(f.free_vars(), BTreeSet::from([1]));
    }

    #[test]
    fn parses_existential() {
        let f = parse("exists x2. adj(x1,x2)", &g()).unwrap();
        assert_eq!(f, Formula::exists(2, Formula::adj(1, 2)));
        assert_eq!(f.qrank(), 1);
        assert_eq!(f.free_vars(), BTreeSet::from([1]));
        assert_eq!(f.fragment(), Fragment::Fo(1));
    }

    #[test]
    fn path_conjunction_is_hom() {
        let f = parse("adj(x1,x2) & adj(x2,x3)", &g()).unwrap();
        assert_eq!(f.fragment(), Fragment::Hom);
        let p3 = Structure::graph(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(canonical_hom_formula(&p3).0, f);
    }

    #[test]
    fn canonical_formulas() {
        let k2 = Structure::graph(2, &[(0, 1)]).unwrap();
        assert_eq!(canonical_hom_formula(&k2).0.to_string(), "adj(x1,x2)");
        let c5 = Structure::graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let (f, p) = canonical_hom_formula(&c5);
        assert_eq!(p, 5);
        assert_eq!(
            f.to_string(),
            "adj(x1,x2) & adj(x1,x5) & adj(x2,x3) & adj(x3,x4) & adj(x4,x5)"
        );
        let empty = Structure::graph(3, &[]).unwrap();
        assert_eq!(canonical_hom_formula(&empty), (Formula::True, 3));
    }

    #[test]
    fn extension_sentence_shape() {
        let u1 = extension_sentence(1);
        assert_eq!(u1.qrank(), 3);
        assert!(u1.free_vars().is_empty());
        assert_eq!(extension_sentence(2).qrank(), 5);
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse_unchecked("A(x1) | B(x1) & C(x1) -> D(x1) -> E(x1) <-> F(x1)").unwrap();
        let a = |n: &str| Formula::atom(n, vec![1]);
        let expected = Formula::Or(vec![a("A"), Formula::And(vec![a("B"), a("C")])])
            .implies(a("D").implies(a("E")))
            .iff(a("F"));
        assert_eq!(f, expected);
        let q = parse_unchecked("A(x1) & exists x2. B(x2) | C(x1)").unwrap();
        assert_eq!(
            q,
            Formula::And(vec![
                a("A"),
                Formula::exists(2, Formula::Or(vec![Formula::atom("B", vec![2]), a("C")]))
            ])
        );
        assert_eq!(parse_unchecked(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn errors_have_positions() {
        match parse("adj(x1,x2) &\n  foo(x1)", &g()) {
            Err(ParseError::UnknownRelation { line, col, name }) => {
                assert_eq!((line, col, name.as_str()), (2, 3, "foo"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("adj(x1)", &g()),
            Err(ParseError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            parse("adj(x1,", &g()),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse("x0 = x1", &g()),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse("x1 = x2 )", &g()),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn substitution_avoids_capture() {
        let f = parse_unchecked("exists x2. adj(x1,x2)").unwrap();
        let map = BTreeMap::from([(1, 2)]);
        let s = f.substitute(&map);
        assert_eq!(s.free_vars(), BTreeSet::from([2]));
        match s {
            Formula::Exists(v, body) => {
                assert_ne!(v, 2);
                assert_eq!(*body, Formula::adj(2, v));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn neq_sugar_prints() {
        let f = parse_unchecked("!(x1 = x2) & !!(x1 = x2)").unwrap();
        assert_eq!(f.to_string(), "x1 != x2 & !(x1 != x2)");
        assert_eq!(parse_unchecked(&f.to_string()).unwrap(), f);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_formula() -> impl Strategy<Value = Formula> {
            let leaf = prop_oneof![
                Just(Formula::True),
                Just(Formula::False),
                (1u32..4, 1u32..4).prop_map(|(a, b)| Formula::Eq(a, b)),
                (1u32..4, 1u32..4).prop_map(|(a, b)| Formula::adj(a, b)),
                (1u32..4).prop_map(|a| Formula::atom("C1", vec![a])),
            ];
            leaf.prop_recursive(4, 24, 3, |inner| {
                prop_oneof![
                    inner.clone().prop_map(Formula::not),
                    proptest::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
                    proptest::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| a.implies(b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| a.iff(b)),
                    (1u32..4, inner.clone()).prop_map(|(v, b)| Formula::exists(v, b)),
                    (1u32..4, inner).prop_map(|(v, b)| Formula::forall(v, b)),
                ]
            })
        }

        fn flatten(f: &Formula) -> Formula {
            match f {
                Formula::And(fs) => {
                    let mut out = Vec::new();
                    for g in fs.iter().map(flatten) {
                        match g {
                            Formula::And(inner) => out.extend(inner),
                            other => out.push(other),
                        }
                    }
                    Formula::and_all(out)
                }
                Formula::Or(fs) => {
                    let mut out = Vec::new();
                    for g in fs.iter().map(flatten) {
                        match g {
                            Formula::Or(inner) => out.extend(inner),
                            other => out.push(other),
                        }
                    }
                    Formula::or_all(out)
                }
                Formula::Not(g) => flatten(g).not(),
                Formula::Implies(a, b) => flatten(a).implies(flatten(b)),
                Formula::Iff(a, b) => flatten(a).iff(flatten(b)),
                Formula::Exists(v, g) => Formula::exists(*v, flatten(g)),
                Formula::Forall(v, g) => Formula::forall(*v, flatten(g)),
                other => other.clone(),
            }
        }

        proptest! {
            #[test]
            fn print_parse_round_trip(f in arb_formula()) {
                let sig = Signature::colored_graph(1);
                let printed = f.to_string();
                let parsed = parse(&printed, &sig).unwrap();
                prop_assert_eq!(flatten(&parsed), flatten(&f));
                prop_assert_eq!(parsed.to_string(), printed);
            }

            #[test]
            fn qrank_laws(f in arb_formula(), g in arb_formula(), v in 1u32..4) {
                prop_assert_eq!(f.clone().not().qrank(), f.qrank());
                prop_assert_eq!(Formula::And(vec![f.clone(), g.clone()]).qrank(), f.qrank().max(g.qrank()));
                prop_assert_eq!(Formula::exists(v, f.clone()).qrank(), 1 + f.qrank());
                prop_assert_eq!(f.desugar().qrank(), f.qrank());
                prop_assert_eq!(f.desugar().free_vars(), f.free_vars());
            }

            #[test]
            fn canonical_formula_metadata(n in 1usize..6, raw in proptest::collection::vec((0usize..6, 0usize..6), 0..8)) {
                let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
                let f = Structure::graph(n, &edges).unwrap();
                let (phi, p) = canonical_hom_formula(&f);
                prop_assert_eq!(p, n);
                prop_assert_eq!(phi.qrank(), 0);
                prop_assert_eq!(phi.fragment(), Fragment::Hom);
                prop_assert!(phi.free_vars().iter().all(|&v| (v as usize) <= n));
            }
        }
    }
}
