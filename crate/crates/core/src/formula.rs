//! Temporal B-formulae, their text syntax, and exact evaluation over lassos.
//!
//! # Grammar
//!
//! ```text
//! formula := unary [ ("U" | "S") unary ]
//! unary   := ("X" | "F" | "G") unary | atom
//! atom    := "(" formula ")" | ident [ "(" [ formula { "," formula } ] ")" ]
//! ```
//!
//! Binary operators do not associate: `x U y U z` is rejected, write
//! `(x U y) U z`. An identifier followed by `(` is a function application;
//! a bare identifier is a nullary function if one of that name exists and a
//! variable otherwise. Functions resolve against the supplied base first and
//! then against the built-ins `and`, `or`, `not`, `xor`, `true`, `false`.
//! The single letters `X F G U S` are keywords. Names starting with `__`
//! are reserved for variables introduced by reductions.
//!
//! # Lassos
//!
//! A [`Lasso`] is a finite prefix followed by a non-empty loop repeated
//! forever. Each state lists the variables true there; every other variable,
//! including ones never mentioned, is false. The JSON form is
//! `{"prefix": [["x"], []], "loop": [["y"]]}`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boolfn::{bi, builtin, is_identifier, Base, BoolFn};
use crate::error::{Error, Result};

pub const RESERVED_PREFIX: &str = "__";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Var(String),
    Apply(Arc<BoolFn>, Vec<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Globally(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Since(Box<Formula>, Box<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemporalOp {
    X,
    F,
    G,
    U,
    S,
}

impl TemporalOp {
    pub const ALL: [TemporalOp; 5] = [
        TemporalOp::X,
        TemporalOp::F,
        TemporalOp::G,
        TemporalOp::U,
        TemporalOp::S,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn symbol(self) -> char {
        match self {
            TemporalOp::X => 'X',
            TemporalOp::F => 'F',
            TemporalOp::G => 'G',
            TemporalOp::U => 'U',
            TemporalOp::S => 'S',
        }
    }
}

/// A set of temporal operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpSet(u8);

impl OpSet {
    pub const EMPTY: OpSet = OpSet(0);
    pub const ALL: OpSet = OpSet(0b11111);

    pub fn from_ops(ops: impl IntoIterator<Item = TemporalOp>) -> Self {
        OpSet(ops.into_iter().fold(0, |acc, op| acc | op.bit()))
    }

    /// Every subset of `{X, F, G, U, S}`, in bit order.
    pub fn all_subsets() -> impl Iterator<Item = OpSet> {
        (0u8..32).map(OpSet)
    }

    pub fn contains(self, op: TemporalOp) -> bool {
        self.0 & op.bit() != 0
    }

    pub fn insert(&mut self, op: TemporalOp) {
        self.0 |= op.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: OpSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: OpSet) -> OpSet {
        OpSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = TemporalOp> {
        TemporalOp::ALL.into_iter().filter(move |op| self.contains(*op))
    }

    /// Parses a comma separated list such as `F,X`; the empty string and `-`
    /// denote the empty set.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let mut set = OpSet::EMPTY;
        if text.is_empty() || text == "-" || text == "{}" {
            return Ok(set);
        }
        for part in text.split(',') {
            let op = match part.trim() {
                "X" => TemporalOp::X,
                "F" => TemporalOp::F,
                "G" => TemporalOp::G,
                "U" => TemporalOp::U,
                "S" => TemporalOp::S,
                other => {
                    return Err(Error::Argument(format!("unknown temporal operator `{other}`")))
                }
            };
            set.insert(op);
        }
        Ok(set)
    }
}

impl fmt::Display for OpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.iter().map(|op| op.symbol().to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for OpSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

// Constructors. The connective helpers always use the built-ins.
impl Formula {
    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }

    pub fn apply(f: Arc<BoolFn>, args: Vec<Formula>) -> Result<Formula> {
        if args.len() != f.arity() {
            return Err(Error::ArityMismatch {
                name: f.name().to_string(),
                expected: f.arity(),
                found: args.len(),
            });
        }
        Ok(Formula::Apply(f, args))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::Apply(bi("and"), vec![a, b])
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Apply(bi("or"), vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Apply(bi("not"), vec![a])
    }

    pub fn xor(a: Formula, b: Formula) -> Formula {
        Formula::Apply(bi("xor"), vec![a, b])
    }

    pub fn tt() -> Formula {
        Formula::Apply(bi("true"), vec![])
    }

    pub fn ff() -> Formula {
        Formula::Apply(bi("false"), vec![])
    }

    /// `(a & b) | (!a & !b)`
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::or(
            Formula::and(a.clone(), b.clone()),
            Formula::and(Formula::not(a), Formula::not(b)),
        )
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::tt)
    }

    pub fn next(a: Formula) -> Formula {
        Formula::Next(Box::new(a))
    }

    pub fn eventually(a: Formula) -> Formula {
        Formula::Eventually(Box::new(a))
    }

    pub fn globally(a: Formula) -> Formula {
        Formula::Globally(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn since(a: Formula, b: Formula) -> Formula {
        Formula::Since(Box::new(a), Box::new(b))
    }
}

// Structural queries.
impl Formula {
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Var(_) => vec![],
            Formula::Apply(_, args) => args.iter().collect(),
            Formula::Next(a) | Formula::Eventually(a) | Formula::Globally(a) => vec![a],
            Formula::Until(a, b) | Formula::Since(a, b) => vec![a, b],
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Formula::Var(v) = self {
            out.insert(v.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    /// Distinct functions applied anywhere in the formula.
    pub fn functions(&self) -> Vec<Arc<BoolFn>> {
        let mut out: Vec<Arc<BoolFn>> = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Apply(g, _) = f {
                if !out.iter().any(|h| h == g) {
                    out.push(g.clone());
                }
            }
        });
        out
    }

    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn temporal_ops(&self) -> OpSet {
        let mut set = OpSet::EMPTY;
        self.visit(&mut |f| match f {
            Formula::Next(_) => set.insert(TemporalOp::X),
            Formula::Eventually(_) => set.insert(TemporalOp::F),
            Formula::Globally(_) => set.insert(TemporalOp::G),
            Formula::Until(..) => set.insert(TemporalOp::U),
            Formula::Since(..) => set.insert(TemporalOp::S),
            _ => {}
        });
        set
    }

    pub fn is_propositional(&self) -> bool {
        self.temporal_ops().is_empty()
    }

    /// Maximal nesting of `X`. Only defined when `X` is the sole temporal operator.
    pub fn x_depth(&self) -> Result<usize> {
        match self {
            Formula::Var(_) => Ok(0),
            Formula::Apply(_, args) => args
                .iter()
                .map(Formula::x_depth)
                .try_fold(0, |m, d| d.map(|d| m.max(d))),
            Formula::Next(a) => Ok(a.x_depth()? + 1),
            _ => Err(Error::Precondition(
                "X-depth is only defined for formulae whose only temporal operator is X".into(),
            )),
        }
    }

    /// Maximal nesting of `S`.
    pub fn since_depth(&self) -> usize {
        let inner = self
            .children()
            .into_iter()
            .map(Formula::since_depth)
            .max()
            .unwrap_or(0);
        inner + matches!(self, Formula::Since(..)) as usize
    }

    /// Distinct subformulae in pre-order; the formula itself comes first.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out: Vec<&Formula> = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if out.contains(&f) {
                return;
            }
            out.push(f);
            for c in f.children() {
                go(c, out);
            }
        }
        go(self, &mut out);
        out
    }

    /// Nullary application with the given constant value, if this is one.
    pub fn as_constant(&self) -> Option<bool> {
        match self {
            Formula::Apply(f, args) if args.is_empty() => Some(f.row(0)),
            _ => None,
        }
    }

    /// Rebuilds the formula bottom-up through `f`.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Formula) -> Formula) -> Formula {
        let rebuilt = match self {
            Formula::Var(_) => self.clone(),
            Formula::Apply(g, args) => {
                Formula::Apply(g.clone(), args.iter().map(|a| a.map_bottom_up(f)).collect())
            }
            Formula::Next(a) => Formula::next(a.map_bottom_up(f)),
            Formula::Eventually(a) => Formula::eventually(a.map_bottom_up(f)),
            Formula::Globally(a) => Formula::globally(a.map_bottom_up(f)),
            Formula::Until(a, b) => Formula::until(a.map_bottom_up(f), b.map_bottom_up(f)),
            Formula::Since(a, b) => Formula::since(a.map_bottom_up(f), b.map_bottom_up(f)),
        };
        f(rebuilt)
    }

    pub fn rename_vars(&self, rename: &impl Fn(&str) -> String) -> Formula {
        self.map_bottom_up(&mut |f| match f {
            Formula::Var(v) => Formula::Var(rename(&v)),
            other => other,
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(g: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if matches!(g, Formula::Until(..) | Formula::Since(..)) {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        }
        match self {
            Formula::Var(v) => f.write_str(v),
            Formula::Apply(g, args) if args.is_empty() => f.write_str(g.name()),
            Formula::Apply(g, args) => {
                write!(f, "{}(", g.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::Next(a) => {
                f.write_str("X ")?;
                operand(a, f)
            }
            Formula::Eventually(a) => {
                f.write_str("F ")?;
                operand(a, f)
            }
            Formula::Globally(a) => {
                f.write_str("G ")?;
                operand(a, f)
            }
            Formula::Until(a, b) => {
                operand(a, f)?;
                f.write_str(" U ")?;
                operand(b, f)
            }
            Formula::Since(a, b) => {
                operand(a, f)?;
                f.write_str(" S ")?;
                operand(b, f)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept variables with the reserved `__` prefix (reduction output).
    pub allow_reserved: bool,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((i, Tok::LParen));
                i += 1
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1
            }
            ',' => {
                out.push((i, Tok::Comma));
                i += 1
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            other => {
                return Err(Error::Syntax {
                    position: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    base: &'a Base,
    opts: ParseOptions,
}

fn keyword(name: &str) -> Option<TemporalOp> {
    match name {
        "X" => Some(TemporalOp::X),
        "F" => Some(TemporalOp::F),
        "G" => Some(TemporalOp::G),
        "U" => Some(TemporalOp::U),
        "S" => Some(TemporalOp::S),
        _ => None,
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn binary_op(&self) -> Option<TemporalOp> {
        match self.peek() {
            Some(Tok::Ident(s)) => keyword(s).filter(|op| matches!(op, TemporalOp::U | TemporalOp::S)),
            _ => None,
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        let Some(op) = self.binary_op() else {
            return Ok(lhs);
        };
        self.pos += 1;
        let rhs = self.unary()?;
        if self.binary_op().is_some() {
            return self.err("binary temporal operators do not associate; add parentheses");
        }
        Ok(match op {
            TemporalOp::U => Formula::until(lhs, rhs),
            _ => Formula::since(lhs, rhs),
        })
    }

    fn unary(&mut self) -> Result<Formula> {
        if let Some(Tok::Ident(s)) = self.peek() {
            match keyword(s) {
                Some(TemporalOp::X) => {
                    self.pos += 1;
                    return Ok(Formula::next(self.unary()?));
                }
                Some(TemporalOp::F) => {
                    self.pos += 1;
                    return Ok(Formula::eventually(self.unary()?));
                }
                Some(TemporalOp::G) => {
                    self.pos += 1;
                    return Ok(Formula::globally(self.unary()?));
                }
                _ => {}
            }
        }
        self.atom()
    }

    fn resolve(&self, name: &str) -> Option<Arc<BoolFn>> {
        self.base.get(name).cloned().or_else(|| builtin(name))
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if keyword(&name).is_some() {
                    return self.err(format!("unexpected operator `{name}`"));
                }
                let start = self.offset();
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let f = self
                        .resolve(&name)
                        .ok_or_else(|| Error::UnknownFunction(name.clone()))?;
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        args.push(self.formula()?);
                        while self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                            args.push(self.formula()?);
                        }
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    Formula::apply(f, args)
                } else if let Some(f) = self.resolve(&name) {
                    Formula::apply(f, vec![])
                } else {
                    if name.starts_with(RESERVED_PREFIX) && !self.opts.allow_reserved {
                        return Err(Error::Syntax {
                            position: start,
                            message: format!(
                                "variable `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"
                            ),
                        });
                    }
                    Ok(Formula::Var(name))
                }
            }
            Some(_) => self.err("expected a formula"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses a formula, resolving function names against `base` and the built-ins.
pub fn parse(text: &str, base: &Base) -> Result<Formula> {
    parse_with(text, base, ParseOptions::default())
}

pub fn parse_with(text: &str, base: &Base, opts: ParseOptions) -> Result<Formula> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        base,
        opts,
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Lassos and evaluation

pub type Assignment = BTreeSet<String>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LassoRepr")]
pub struct Lasso {
    prefix: Vec<Assignment>,
    #[serde(rename = "loop")]
    cycle: Vec<Assignment>,
}

#[derive(Deserialize)]
struct LassoRepr {
    #[serde(default)]
    prefix: Vec<Assignment>,
    #[serde(rename = "loop")]
    cycle: Vec<Assignment>,
}

impl TryFrom<LassoRepr> for Lasso {
    type Error = Error;

    fn try_from(r: LassoRepr) -> Result<Self> {
        Lasso::new(r.prefix, r.cycle)
    }
}

impl Lasso {
    pub fn new(prefix: Vec<Assignment>, cycle: Vec<Assignment>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Argument("a lasso needs a non-empty loop".into()));
        }
        for v in prefix.iter().chain(&cycle).flatten() {
            if !is_identifier(v) {
                return Err(Error::Argument(format!("`{v}` is not a variable name")));
            }
        }
        Ok(Lasso { prefix, cycle })
    }

    /// Convenience constructor from string slices.
    pub fn from_names(prefix: &[&[&str]], cycle: &[&[&str]]) -> Result<Self> {
        let conv = |states: &[&[&str]]| -> Vec<Assignment> {
            states
                .iter()
                .map(|s| s.iter().map(|v| v.to_string()).collect())
                .collect()
        };
        Lasso::new(conv(prefix), conv(cycle))
    }

    /// Every state carries the same assignment.
    pub fn constant(state: Assignment) -> Self {
        Lasso {
            prefix: vec![],
            cycle: vec![state],
        }
    }

    pub fn prefix(&self) -> &[Assignment] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Assignment] {
        &self.cycle
    }

    /// Number of distinct positions, prefix plus one loop pass.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Assignment at an arbitrary position of the infinite sequence.
    pub fn state(&self, i: usize) -> &Assignment {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Same infinite sequence with the loop copied `times` more into the prefix.
    pub fn unrolled(&self, times: usize) -> Lasso {
        let mut prefix = self.prefix.clone();
        for _ in 0..times {
            prefix.extend(self.cycle.iter().cloned());
        }
        Lasso {
            prefix,
            cycle: self.cycle.clone(),
        }
    }

    /// Applies `f` to every state.
    pub fn map_states(&self, mut f: impl FnMut(usize, &Assignment) -> Assignment) -> Lasso {
        let p = self.prefix.len();
        Lasso {
            prefix: self.prefix.iter().enumerate().map(|(i, s)| f(i, s)).collect(),
            cycle: self.cycle.iter().enumerate().map(|(i, s)| f(p + i, s)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("lasso serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("bad lasso: {e}")))
    }
}

/// Truth values of a formula along an unrolled copy of a lasso.
///
/// Past operators need the loop to be unrolled once per level of `S` nesting
/// before their values become periodic; `positions` covers that unrolled
/// prefix plus one loop pass, and later positions wrap into the last pass.
#[derive(Clone, Debug)]
pub struct Trace {
    values: Vec<bool>,
    loop_start: usize,
    loop_len: usize,
}

impl Trace {
    pub fn at(&self, i: usize) -> bool {
        if i < self.values.len() {
            self.values[i]
        } else {
            self.values[self.loop_start + (i - self.loop_start) % self.loop_len]
        }
    }
}

struct Labeler<'a> {
    states: Vec<&'a Assignment>,
    loop_start: usize,
}

impl Labeler<'_> {
    fn n(&self) -> usize {
        self.states.len()
    }

    fn succ(&self, j: usize) -> usize {
        if j + 1 == self.n() {
            self.loop_start
        } else {
            j + 1
        }
    }

    /// Fixpoint of `v[j] = step(j, v[j+1])` over the lasso. `init` is the
    /// value assumed past the end on the first loop pass: `false` gives the
    /// least fixpoint, `true` the greatest.
    fn backward(&self, step: impl Fn(usize, bool) -> bool, init: bool) -> Vec<bool> {
        let n = self.n();
        let mut out = vec![false; n];
        let mut next = init;
        for _ in 0..2 {
            for j in (self.loop_start..n).rev() {
                next = step(j, next);
                out[j] = next;
            }
        }
        for j in (0..self.loop_start).rev() {
            next = step(j, next);
            out[j] = next;
        }
        out
    }

    fn label(&self, f: &Formula) -> Vec<bool> {
        let n = self.n();
        match f {
            Formula::Var(v) => self.states.iter().map(|s| s.contains(v)).collect(),
            Formula::Apply(g, args) => {
                let labels: Vec<Vec<bool>> = args.iter().map(|a| self.label(a)).collect();
                let mut row = vec![false; args.len()];
                (0..n)
                    .map(|j| {
                        for (slot, l) in row.iter_mut().zip(&labels) {
                            *slot = l[j];
                        }
                        g.eval_unchecked(&row)
                    })
                    .collect()
            }
            Formula::Next(a) => {
                let a = self.label(a);
                (0..n).map(|j| a[self.succ(j)]).collect()
            }
            Formula::Eventually(a) => {
                let a = self.label(a);
                self.backward(|j, next| a[j] || next, false)
            }
            Formula::Globally(a) => {
                let a = self.label(a);
                self.backward(|j, next| a[j] && next, true)
            }
            Formula::Until(a, b) => {
                let (a, b) = (self.label(a), self.label(b));
                self.backward(|j, next| b[j] || (a[j] && next), false)
            }
            Formula::Since(a, b) => {
                let (a, b) = (self.label(a), self.label(b));
                let mut out = vec![false; n];
                let mut prev = false;
                for j in 0..n {
                    prev = b[j] || (a[j] && prev);
                    out[j] = prev;
                }
                out
            }
        }
    }
}

/// Labels every position of the lasso with the truth value of `f`.
pub fn trace(lasso: &Lasso, f: &Formula) -> Trace {
    let unrolled = lasso.unrolled(f.since_depth());
    let states: Vec<&Assignment> = unrolled.prefix.iter().chain(&unrolled.cycle).collect();
    let loop_start = unrolled.prefix.len();
    let labeler = Labeler { states, loop_start };
    Trace {
        values: labeler.label(f),
        loop_start,
        loop_len: lasso.cycle.len(),
    }
}

/// Whether the structure satisfies `f` at position `i`. Variables missing
/// from an assignment are false.
pub fn eval_at(lasso: &Lasso, i: usize, f: &Formula) -> bool {
    trace(lasso, f).at(i)
}

/// A lasso together with the position at which a formula holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub lasso: Lasso,
    pub index: usize,
}

impl Witness {
    pub fn new(lasso: Lasso, index: usize) -> Self {
        Witness { lasso, index }
    }

    pub fn verifies(&self, f: &Formula) -> bool {
        eval_at(&self.lasso, self.index, f)
    }
}

/// All lassos over `vars` with exactly the given prefix and loop lengths, in
/// increasing order of the packed assignment bits (state-major).
pub fn lassos_of_shape(
    vars: &[String],
    prefix_len: usize,
    loop_len: usize,
) -> impl Iterator<Item = Lasso> + '_ {
    let states = prefix_len + loop_len;
    let bits = vars.len() * states;
    assert!(bits < 64, "lasso enumeration too large");
    (0u64..1 << bits).map(move |code| {
        let assignment = |s: usize| -> Assignment {
            vars.iter()
                .enumerate()
                .filter(|(v, _)| code >> (s * vars.len() + v) & 1 == 1)
                .map(|(_, name)| name.clone())
                .collect()
        };
        Lasso {
            prefix: (0..prefix_len).map(assignment).collect(),
            cycle: (prefix_len..states).map(assignment).collect(),
        }
    })
}

/// Every lasso with prefix length `<= max_prefix` and loop length in `1..=max_loop`.
pub fn all_lassos(
    vars: &[String],
    max_prefix: usize,
    max_loop: usize,
) -> impl Iterator<Item = Lasso> + '_ {
    (1..=max_loop).flat_map(move |l| (0..=max_prefix).flat_map(move |p| lassos_of_shape(vars, p, l)))
}

pub const DEFAULT_WORK_LIMIT: u64 = 2_000_000;

/// Searches lassos over the formula's variables, loop length outermost, then
/// prefix length, then assignments, then start position within the prefix
/// and one loop pass. Returns the first witness.
pub fn sat_bounded(
    f: &Formula,
    max_prefix: usize,
    max_loop: usize,
    work_limit: u64,
) -> Result<Option<Witness>> {
    if max_loop == 0 {
        return Err(Error::Argument("loop bound must be at least 1".into()));
    }
    let vars: Vec<String> = f.variables().into_iter().collect();
    let mut work = 0u64;
    for l in 1..=max_loop {
        for p in 0..=max_prefix {
            if vars.len() * (p + l) >= 63 {
                return Err(Error::Resource(format!(
                    "{} variables over {} states",
                    vars.len(),
                    p + l
                )));
            }
            for lasso in lassos_of_shape(&vars, p, l) {
                work += 1;
                if work > work_limit {
                    return Err(Error::Resource(format!(
                        "bounded search exceeded {work_limit} lassos"
                    )));
                }
                let t = trace(&lasso, f);
                if let Some(i) = (0..p + l).find(|&i| t.at(i)) {
                    return Ok(Some(Witness::new(lasso, i)));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse(s, &Base::default()).unwrap()
    }

    fn lasso(prefix: &[&[&str]], cycle: &[&[&str]]) -> Lasso {
        Lasso::from_names(prefix, cycle).unwrap()
    }

    #[test]
    fn parses_until_and_application() {
        assert_eq!(p("x U y"), Formula::until(Formula::var("x"), Formula::var("y")));
        assert_eq!(
            p("and(x, X y)"),
            Formula::and(Formula::var("x"), Formula::next(Formula::var("y")))
        );
        assert_eq!(p("X x U y"), Formula::until(p("X x"), p("y")));
        assert_eq!(p("true"), Formula::tt());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse("x U (y U", &Base::default()),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(parse("x U y U z", &Base::default()), Err(Error::Syntax { .. })));
        assert!(matches!(parse("foo(x)", &Base::default()), Err(Error::UnknownFunction(_))));
        assert!(matches!(
            parse("and(x)", &Base::default()),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(parse("and", &Base::default()), Err(Error::ArityMismatch { .. })));
        assert!(matches!(parse("__t", &Base::default()), Err(Error::Syntax { .. })));
        assert!(parse_with(
            "__t",
            &Base::default(),
            ParseOptions {
                allow_reserved: true
            }
        )
        .is_ok());
        assert!(matches!(parse("x $ y", &Base::default()), Err(Error::Syntax { position: 2, .. })));
    }

    #[test]
    fn base_functions_shadow_builtins() {
        let base = Base::parse("g 2 0010\nc 0 1").unwrap();
        let f = parse("g(c, x)", &base).unwrap();
        match &f {
            Formula::Apply(g, args) => {
                assert_eq!(g.table_string(), "0010");
                assert_eq!(args[0].as_constant(), Some(true));
            }
            _ => panic!(),
        }
        assert_eq!(f.to_string(), "g(c, x)");
    }

    #[test]
    fn printing_parenthesises_nested_binaries() {
        for s in ["(x U y) U z", "x S (y U z)", "X (x U y)", "G F X x", "not(x U y)"] {
            assert_eq!(p(s).to_string(), s);
        }
    }

    #[test]
    fn globally_on_constant_loop() {
        assert!(eval_at(&lasso(&[], &[&["x"]]), 0, &p("G x")));
    }

    #[test]
    fn since_looks_back() {
        let l = lasso(&[&["y"], &[]], &[&[]]);
        let f = p("x S y");
        assert!(!eval_at(&l, 1, &f));
        assert!(eval_at(&l, 0, &f));
    }

    #[test]
    fn eventually_in_loop() {
        assert!(eval_at(&lasso(&[&[]], &[&["x"]]), 0, &p("F x")));
        assert!(!eval_at(&lasso(&[&["x"]], &[&[]]), 1, &p("F x")));
    }

    #[test]
    fn since_values_stabilise_after_unrolling() {
        // x S y with y only in the prefix: true in the first loop pass while
        // x holds, false once the loop's gap is crossed.
        let l = lasso(&[&["y"]], &[&["x"], &[]]);
        let f = p("x S y");
        let got: Vec<bool> = (0..6).map(|i| eval_at(&l, i, &f)).collect();
        assert_eq!(got, vec![true, true, false, false, false, false]);
        // nested S needs two unrollings
        let g = p("(x S y) S z");
        let l2 = lasso(&[&["z"]], &[&["x", "y"], &[]]);
        for i in 0..8 {
            let unrolled = l2.unrolled(3);
            assert_eq!(eval_at(&l2, i, &g), eval_at(&unrolled, i, &g), "i={i}");
        }
    }

    #[test]
    fn until_wraps_around_loop() {
        let l = lasso(&[], &[&["x"], &["x"], &["y"]]);
        let f = p("x U y");
        assert!((0..6).all(|i| eval_at(&l, i, &f)));
        let g = p("x U z");
        assert!((0..6).all(|i| !eval_at(&l, i, &g)));
    }

    #[test]
    fn x_depth_examples() {
        assert_eq!(p("X X x").x_depth().unwrap(), 2);
        assert_eq!(p("and(x, X y)").x_depth().unwrap(), 1);
        assert_eq!(p("x").x_depth().unwrap(), 0);
        assert!(matches!(p("F x").x_depth(), Err(Error::Precondition(_))));
    }

    #[test]
    fn bounded_search_examples() {
        assert_eq!(sat_bounded(&p("and(x, not(x))"), 3, 2, DEFAULT_WORK_LIMIT).unwrap(), None);
        let w = sat_bounded(&p("x"), 3, 2, DEFAULT_WORK_LIMIT).unwrap().unwrap();
        assert_eq!(w, Witness::new(lasso(&[], &[&["x"]]), 0));
        let w = sat_bounded(&p("and(x, X not(x))"), 3, 2, DEFAULT_WORK_LIMIT)
            .unwrap()
            .unwrap();
        assert_eq!(w, Witness::new(lasso(&[&["x"]], &[&[]]), 0));
    }

    #[test]
    fn bounded_search_respects_work_limit() {
        let f = p("and(and(a, b), and(c, X X X X d))");
        assert!(matches!(sat_bounded(&f, 4, 3, 10), Err(Error::Resource(_))));
    }

    #[test]
    fn lasso_json() {
        let l = Lasso::from_json(r#"{"prefix": [["x"], []], "loop": [["y"]]}"#).unwrap();
        assert_eq!(l, lasso(&[&["x"], &[]], &[&["y"]]));
        assert_eq!(Lasso::from_json(&l.to_json()).unwrap(), l);
        assert!(Lasso::from_json(r#"{"prefix": [], "loop": []}"#).is_err());
        assert!(Lasso::from_json(r#"{"loop": [["a b"]]}"#).is_err());
    }

    #[test]
    fn opset_parse_and_display() {
        let s = OpSet::parse("F, X").unwrap();
        assert_eq!(s.to_string(), "X,F");
        assert_eq!(OpSet::parse("-").unwrap(), OpSet::EMPTY);
        assert!(OpSet::parse("Y").is_err());
        assert_eq!(OpSet::all_subsets().count(), 32);
    }
}
