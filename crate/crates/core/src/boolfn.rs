//! Finite Boolean functions, bases, and the closure properties that decide
//! which clone a base lies in.
//!
//! A function of arity `n` is stored as a truth table of `2^n` bits. Bit `k`
//! is the value on the argument tuple whose binary encoding is `k`, with the
//! first argument as the most significant bit. So `and` has table `0001`
//! when written from index 0 upwards.
//!
//! # Base files
//!
//! A base file is line oriented. Blank lines and lines starting with `#` are
//! ignored; every other line is
//!
//! ```text
//! <name> <arity> <table>
//! ```
//!
//! where `<table>` is a string of exactly `2^arity` characters from `{0,1}`,
//! listed from input `00..0` to `11..1`. For example:
//!
//! ```text
//! # x and not y
//! andnot 2 0010
//! one    0 1
//! ```

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ARITY: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolFn {
    name: String,
    arity: usize,
    table: u64,
}

fn table_mask(arity: usize) -> u64 {
    let rows = 1u32 << arity;
    if rows == 64 {
        u64::MAX
    } else {
        (1u64 << rows) - 1
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl BoolFn {
    /// Builds a function from its packed truth table.
    pub fn new(name: impl Into<String>, arity: usize, table: u64) -> Result<Self> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(Error::Argument(format!("`{name}` is not a valid function name")));
        }
        if arity > MAX_ARITY {
            return Err(Error::Argument(format!(
                "arity {arity} of `{name}` exceeds the maximum of {MAX_ARITY}"
            )));
        }
        if table & !table_mask(arity) != 0 {
            return Err(Error::Argument(format!(
                "table of `{name}` has bits beyond 2^{arity} rows"
            )));
        }
        Ok(BoolFn { name, arity, table })
    }

    /// Parses a table given as a binary string listed from row 0 upwards.
    pub fn from_table_str(name: impl Into<String>, arity: usize, bits: &str) -> Result<Self> {
        let name = name.into();
        if arity > MAX_ARITY {
            return Err(Error::Argument(format!(
                "arity {arity} of `{name}` exceeds the maximum of {MAX_ARITY}"
            )));
        }
        let rows = 1usize << arity;
        if bits.len() != rows {
            return Err(Error::Argument(format!(
                "table of `{name}` has length {}, expected {rows}",
                bits.len()
            )));
        }
        let mut table = 0u64;
        for (k, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => table |= 1 << k,
                other => {
                    return Err(Error::Argument(format!(
                        "table of `{name}` contains `{other}`, expected 0 or 1"
                    )))
                }
            }
        }
        BoolFn::new(name, arity, table)
    }

    /// Tabulates a closure over all `2^arity` argument tuples.
    pub fn from_fn(
        name: impl Into<String>,
        arity: usize,
        f: impl Fn(&[bool]) -> bool,
    ) -> Result<Self> {
        if arity > MAX_ARITY {
            return Err(Error::Argument(format!("arity {arity} exceeds {MAX_ARITY}")));
        }
        let mut table = 0u64;
        let mut args = vec![false; arity];
        for k in 0..(1usize << arity) {
            decode_row(k, &mut args);
            if f(&args) {
                table |= 1 << k;
            }
        }
        BoolFn::new(name, arity, table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> u64 {
        self.table
    }

    pub fn rows(&self) -> usize {
        1 << self.arity
    }

    pub fn table_string(&self) -> String {
        (0..self.rows())
            .map(|k| if self.row(k) { '1' } else { '0' })
            .collect()
    }

    /// Value on the tuple with binary encoding `k`.
    #[inline]
    pub fn row(&self, k: usize) -> bool {
        self.table >> k & 1 == 1
    }

    pub fn eval(&self, args: &[bool]) -> Result<bool> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch {
                name: self.name.clone(),
                expected: self.arity,
                found: args.len(),
            });
        }
        Ok(self.row(encode_row(args)))
    }

    /// Same as [`BoolFn::eval`] for callers that already checked the length.
    #[inline]
    pub(crate) fn eval_unchecked(&self, args: &[bool]) -> bool {
        debug_assert_eq!(args.len(), self.arity);
        self.row(encode_row(args))
    }

    fn all_ones_row(&self) -> usize {
        self.rows() - 1
    }

    pub fn is_one_reproducing(&self) -> bool {
        self.row(self.all_ones_row())
    }

    pub fn is_zero_reproducing(&self) -> bool {
        !self.row(0)
    }

    /// Compares every tuple with each of its one-bit-raised neighbours.
    pub fn is_monotone(&self) -> bool {
        (0..self.rows()).all(|k| {
            (0..self.arity).all(|bit| {
                let raised = k | (1 << bit);
                raised == k || !self.row(k) || self.row(raised)
            })
        })
    }

    pub fn is_self_dual(&self) -> bool {
        let top = self.all_ones_row();
        (0..self.rows()).all(|k| self.row(k) != self.row(top ^ k))
    }

    /// Constant term and per-argument coefficients of the affine fit, if the
    /// function is affine over GF(2).
    pub fn affine_form(&self) -> Option<(bool, Vec<bool>)> {
        let c = self.row(0);
        let coefficients: Vec<bool> = (0..self.arity)
            .map(|i| self.row(1 << (self.arity - 1 - i)) ^ c)
            .collect();
        let fits = (0..self.rows()).all(|k| {
            let mut v = c;
            for (i, &coef) in coefficients.iter().enumerate() {
                if coef && k >> (self.arity - 1 - i) & 1 == 1 {
                    v = !v;
                }
            }
            v == self.row(k)
        });
        fits.then_some((c, coefficients))
    }

    pub fn is_linear(&self) -> bool {
        self.affine_form().is_some()
    }

    /// Position (0-based) of an argument that is 1 on every 1-row, if any.
    pub fn one_separating_position(&self) -> Option<usize> {
        (0..self.arity).find(|&i| {
            let mask = 1 << (self.arity - 1 - i);
            (0..self.rows()).all(|k| !self.row(k) || k & mask != 0)
        })
    }

    pub fn is_one_separating(&self) -> bool {
        self.one_separating_position().is_some()
    }

    /// Argument positions whose flip changes the value on some tuple.
    pub fn essential_positions(&self) -> Vec<usize> {
        (0..self.arity)
            .filter(|&i| {
                let mask = 1 << (self.arity - 1 - i);
                (0..self.rows()).any(|k| self.row(k) != self.row(k ^ mask))
            })
            .collect()
    }

    pub fn depends_on_at_most_one(&self) -> bool {
        self.essential_positions().len() <= 1
    }

    /// `Some(v)` when the function ignores all of its arguments.
    pub fn constant_value(&self) -> Option<bool> {
        if self.table == 0 {
            Some(false)
        } else if self.table == table_mask(self.arity) {
            Some(true)
        } else {
            None
        }
    }

    pub fn has_property(&self, tag: CloneTag) -> bool {
        match tag {
            CloneTag::R1 => self.is_one_reproducing(),
            CloneTag::D => self.is_self_dual(),
            CloneTag::M => self.is_monotone(),
            CloneTag::N => self.depends_on_at_most_one(),
            CloneTag::L => self.is_linear(),
        }
    }

    pub fn is_builtin(&self) -> bool {
        builtin(&self.name).is_some_and(|b| b.as_ref() == self)
    }
}

impl fmt::Display for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.name, self.arity, self.table_string())
    }
}

#[inline]
pub(crate) fn encode_row(args: &[bool]) -> usize {
    args.iter().fold(0, |acc, &b| acc << 1 | b as usize)
}

pub(crate) fn decode_row(k: usize, out: &mut [bool]) {
    let n = out.len();
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = k >> (n - 1 - i) & 1 == 1;
    }
}

/// The five clones whose membership drives classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CloneTag {
    R1,
    D,
    M,
    N,
    L,
}

pub const BUILTIN_NAMES: [&str; 6] = ["and", "or", "not", "xor", "true", "false"];

/// The always-available connectives used by reductions and the tableau.
pub fn builtin(name: &str) -> Option<Arc<BoolFn>> {
    use std::sync::OnceLock;
    static BUILTINS: OnceLock<Vec<Arc<BoolFn>>> = OnceLock::new();
    let all = BUILTINS.get_or_init(|| {
        [
            ("and", 2, "0001"),
            ("or", 2, "0111"),
            ("not", 1, "10"),
            ("xor", 2, "0110"),
            ("true", 0, "1"),
            ("false", 0, "0"),
        ]
        .into_iter()
        .map(|(n, a, t)| Arc::new(BoolFn::from_table_str(n, a, t).expect("builtin table")))
        .collect()
    });
    all.iter().find(|f| f.name() == name).cloned()
}

pub(crate) fn bi(name: &str) -> Arc<BoolFn> {
    builtin(name).expect("builtin name")
}

/// A finite set of functions with unique names. May be empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Base {
    functions: Vec<Arc<BoolFn>>,
}

impl Base {
    pub fn new(functions: impl IntoIterator<Item = BoolFn>) -> Result<Self> {
        Self::from_arcs(functions.into_iter().map(Arc::new))
    }

    pub fn from_arcs(functions: impl IntoIterator<Item = Arc<BoolFn>>) -> Result<Self> {
        let functions: Vec<_> = functions.into_iter().collect();
        let mut seen = HashSet::new();
        for f in &functions {
            if !seen.insert(f.name().to_string()) {
                return Err(Error::Argument(format!("duplicate function name `{}`", f.name())));
            }
        }
        Ok(Base { functions })
    }

    /// Base made of built-in connectives, by name.
    pub fn builtins(names: &[&str]) -> Result<Self> {
        Self::from_arcs(
            names
                .iter()
                .map(|n| builtin(n).ok_or_else(|| Error::UnknownFunction(n.to_string())))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn functions(&self) -> &[Arc<BoolFn>] {
        &self.functions
    }

    pub fn get(&self, name: &str) -> Option<&Arc<BoolFn>> {
        self.functions.iter().find(|f| f.name() == name)
    }

    /// True when `f` is one of the base's functions (same name and table).
    pub fn contains(&self, f: &BoolFn) -> bool {
        self.get(f.name()).is_some_and(|g| g.as_ref() == f)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn with(&self, f: Arc<BoolFn>) -> Result<Self> {
        let mut fns = self.functions.clone();
        fns.push(f);
        Self::from_arcs(fns)
    }

    /// Parses the line-oriented base file format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut fns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [name, arity, table] = fields[..] else {
                return Err(Error::Argument(format!(
                    "line {}: expected `<name> <arity> <table>`",
                    lineno + 1
                )));
            };
            let arity: usize = arity.parse().map_err(|_| {
                Error::Argument(format!("line {}: bad arity `{arity}`", lineno + 1))
            })?;
            let f = BoolFn::from_table_str(name, arity, table)
                .map_err(|e| Error::Argument(format!("line {}: {e}", lineno + 1)))?;
            fns.push(f);
        }
        Base::new(fns)
    }

    pub fn to_text(&self) -> String {
        self.functions.iter().map(|f| format!("{f}\n")).collect()
    }
}

/// True iff every function of the base has the property defining `tag`.
/// Each of the five clones is exactly the set of functions with its property,
/// so this is membership of the generated clone.
pub fn base_within(base: &Base, tag: CloneTag) -> bool {
    base.functions().iter().all(|f| f.has_property(tag))
}

/// Bases of the named clones used throughout the classification tables.
pub fn named_bases() -> Vec<(&'static str, Base)> {
    let f = |n: &str, a: usize, t: &str| BoolFn::from_table_str(n, a, t).expect("static table");
    let and = f("and", 2, "0001");
    let or = f("or", 2, "0111");
    let not = f("not", 1, "10");
    let one = f("true", 0, "1");
    let zero = f("false", 0, "0");
    let xor = f("xor", 2, "0110");
    let iff = f("iff", 2, "1001");
    let andnot = f("andnot", 2, "0010");
    // x!y | x!z | !y!z
    let dual_maj = f("dmaj", 3, "10001110");
    let b = |fns: Vec<BoolFn>| Base::new(fns).expect("static base");
    vec![
        ("BF", b(vec![and.clone(), or.clone(), not.clone()])),
        ("R1", b(vec![or.clone(), iff])),
        ("M", b(vec![or.clone(), and.clone(), zero.clone(), one.clone()])),
        ("S1", b(vec![andnot])),
        ("D", b(vec![dual_maj])),
        ("L", b(vec![xor.clone(), one.clone()])),
        ("L0", b(vec![xor])),
        ("V", b(vec![or, one.clone(), zero.clone()])),
        ("E", b(vec![and, one.clone(), zero.clone()])),
        ("N", b(vec![not, one.clone(), zero.clone()])),
        ("I", b(vec![zero, one])),
        ("I2", b(vec![])),
    ]
}

pub fn named_base(name: &str) -> Option<Base> {
    named_bases().into_iter().find(|(n, _)| *n == name).map(|(_, b)| b)
}
