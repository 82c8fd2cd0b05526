//! Satisfiability-preserving transformations between fragments.
//!
//! Variables introduced here carry the reserved `__` prefix, so they never
//! clash with user variables:
//!
//! | name       | introduced by                         |
//! |------------|---------------------------------------|
//! | `__x{i}`   | [`flatten`], one per subformula       |
//! | `__t`      | the truth anchor replacing constant 1 |
//! | `__t{i}`   | QBF encodings, block end markers      |
//! | `__u{i}`   | QBF encodings, block start markers    |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::boolfn::{bi, Base, BoolFn};
use crate::classify::{classify, Class, FragmentSpec};
use crate::error::{Error, Result};
use crate::formula::{eval_at, parse, trace, Formula, Lasso, OpSet, TemporalOp};

pub const ANCHOR: &str = "__t";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreshVar {
    pub name: String,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionOutput {
    pub formula: Formula,
    pub fresh_vars: Vec<FreshVar>,
}

fn fresh(name: impl Into<String>, role: impl Into<String>) -> FreshVar {
    FreshVar {
        name: name.into(),
        role: role.into(),
    }
}

/// Disjunctive normal form of `g` over its essential arguments, instantiated
/// with `args`. Uses only `and`, `or`, `not`, `true`, `false`.
pub fn dnf_template(g: &BoolFn, args: &[Formula]) -> Formula {
    if let Some(c) = g.constant_value() {
        return if c { Formula::tt() } else { Formula::ff() };
    }
    let ess = g.essential_positions();
    let mut row = vec![false; g.arity()];
    let mut terms = Vec::new();
    for k in 0..1usize << ess.len() {
        for (j, &p) in ess.iter().enumerate() {
            row[p] = k >> (ess.len() - 1 - j) & 1 == 1;
        }
        if g.eval_unchecked(&row) {
            terms.push(Formula::conj(ess.iter().map(|&p| {
                if row[p] {
                    args[p].clone()
                } else {
                    Formula::not(args[p].clone())
                }
            })));
        }
    }
    terms.into_iter().reduce(Formula::or).expect("non-constant function has a 1-row")
}

/// Replaces every non-built-in connective by its DNF template. The result
/// is equivalent to the input.
pub fn expand_to_builtin(f: &Formula) -> Formula {
    f.map_bottom_up(&mut |g| match g {
        Formula::Apply(h, args) if !h.is_builtin() => dnf_template(&h, &args),
        other => other,
    })
}

fn is_connective(g: &BoolFn, names: &[&str]) -> bool {
    names.iter().any(|n| g == bi(n).as_ref())
}

// ---------------------------------------------------------------------------
// Subformula flattening

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlattenMode {
    /// Output over `U`, `S`, `X`; any input operators.
    Full,
    /// Output over `F` only; input may use `F` and `G` only.
    FutureOnly,
}

fn always(f: Formula, mode: FlattenMode) -> Formula {
    match mode {
        FlattenMode::Full => Formula::not(Formula::until(Formula::tt(), Formula::not(f))),
        FlattenMode::FutureOnly => Formula::not(Formula::eventually(Formula::not(f))),
    }
}

/// One fresh variable per distinct subformula, pinned to it by definitions
/// that hold at every state. Equisatisfiable with the input.
pub fn flatten(f: &Formula, mode: FlattenMode) -> Result<ReductionOutput> {
    let fg = OpSet::from_ops([TemporalOp::F, TemporalOp::G]);
    if mode == FlattenMode::FutureOnly && !f.temporal_ops().is_subset(fg) {
        return Err(Error::Precondition(
            "future-only flattening accepts F and G only".into(),
        ));
    }
    let subs = f.subformulas();
    let index: HashMap<&Formula, usize> = subs.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let x = |g: &Formula| Formula::var(format!("__x{}", index[g] + 1));
    let mut conjuncts = vec![x(f)];
    let mut fresh_vars = Vec::new();
    for (i, g) in subs.iter().enumerate() {
        let rhs = match g {
            Formula::Var(_) => (*g).clone(),
            Formula::Apply(h, args) => {
                let xs: Vec<Formula> = args.iter().map(x).collect();
                if is_connective(h, &["and", "or", "not"]) {
                    Formula::Apply(h.clone(), xs)
                } else {
                    dnf_template(h, &xs)
                }
            }
            Formula::Next(a) => Formula::next(x(a)),
            Formula::Eventually(a) => match mode {
                FlattenMode::Full => Formula::until(Formula::tt(), x(a)),
                FlattenMode::FutureOnly => Formula::eventually(x(a)),
            },
            Formula::Globally(a) => always(x(a), mode),
            Formula::Until(a, b) => Formula::until(x(a), x(b)),
            Formula::Since(a, b) => Formula::since(x(a), x(b)),
        };
        let def = Formula::iff(x(g), rhs);
        conjuncts.push(always(def.clone(), mode));
        if mode == FlattenMode::Full {
            conjuncts.push(Formula::not(Formula::since(Formula::tt(), Formula::not(def))));
        }
        fresh_vars.push(fresh(format!("__x{}", i + 1), format!("subformula {g}")));
    }
    Ok(ReductionOutput {
        formula: Formula::conj(conjuncts),
        fresh_vars,
    })
}

/// Adds `__x{i}` to every state where the i-th subformula of `f` holds,
/// after unrolling far enough for past operators to be periodic.
pub fn extend_model(f: &Formula, lasso: &Lasso) -> Lasso {
    let unrolled = lasso.unrolled(f.since_depth());
    let traces: Vec<_> = f.subformulas().iter().map(|g| trace(&unrolled, g)).collect();
    unrolled.map_states(|j, s| {
        let mut s = s.clone();
        for (i, t) in traces.iter().enumerate() {
            if t.at(j) {
                s.insert(format!("__x{}", i + 1));
            }
        }
        s
    })
}

// ---------------------------------------------------------------------------
// Short formula synthesis

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    And,
    Or,
    Not,
}

impl Target {
    pub fn vars(self) -> usize {
        match self {
            Target::Not => 1,
            _ => 2,
        }
    }

    /// Bit `k` is the value on row `k` (first variable most significant).
    pub fn table(self) -> u8 {
        match self {
            Target::And => 0b1000,
            Target::Or => 0b1110,
            Target::Not => 0b01,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::And => "and",
            Target::Or => "or",
            Target::Not => "not",
        })
    }
}

pub const DEFAULT_SYNTH_CAP: usize = 12;

pub const SYNTH_VARS: [&str; 2] = ["x", "y"];

#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    pub max_nodes: usize,
    /// Every designated variable occurs exactly once.
    pub read_once: bool,
    /// Allow the constant 1 as a leaf even if the base lacks it.
    pub with_one: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_nodes: DEFAULT_SYNTH_CAP,
            read_once: true,
            with_one: false,
        }
    }
}

/// Smallest `B`-formula over `x` (and `y`) with the given truth table.
pub fn synthesize(base: &Base, nvars: usize, table: u8, opts: SynthOptions) -> Result<Formula> {
    assert!((1..=2).contains(&nvars));
    let rows = 1usize << nvars;
    let full_table = ((1u16 << rows) - 1) as u8;
    let full_mask = (1u8 << nvars) - 1;
    let mut seen: HashSet<(u8, u8)> = HashSet::new();
    let mut by_size: Vec<Vec<(u8, u8, Formula)>> = vec![Vec::new(); opts.max_nodes + 1];

    let mut leaves: Vec<(u8, u8, Formula)> = Vec::new();
    for (v, name) in SYNTH_VARS.iter().take(nvars).enumerate() {
        let t = (0..rows)
            .filter(|k| k >> (nvars - 1 - v) & 1 == 1)
            .fold(0u8, |acc, k| acc | 1 << k);
        leaves.push((1 << v, t, Formula::var(*name)));
    }
    for g in base.functions().iter().filter(|g| g.arity() == 0) {
        let t = if g.row(0) { full_table } else { 0 };
        leaves.push((0, t, Formula::Apply(g.clone(), vec![])));
    }
    if opts.with_one {
        leaves.push((0, full_table, Formula::tt()));
    }
    for (mask, t, f) in leaves {
        if seen.insert((mask, t)) {
            if mask == full_mask && t == table {
                return Ok(f);
            }
            by_size[1].push((mask, t, f));
        }
    }

    let fns: Vec<_> = base.functions().iter().filter(|g| g.arity() > 0).cloned().collect();
    for size in 2..=opts.max_nodes {
        let mut found: Vec<(u8, u8, Formula)> = Vec::new();
        for g in &fns {
            let a = g.arity();
            if a > size - 1 {
                continue;
            }
            for parts in compositions(size - 1, a) {
                if parts.iter().any(|&s| by_size[s].is_empty()) {
                    continue;
                }
                let mut pick = vec![0usize; a];
                'tuples: loop {
                    let children: Vec<&(u8, u8, Formula)> =
                        (0..a).map(|j| &by_size[parts[j]][pick[j]]).collect();
                    let mut mask = 0u8;
                    let mut disjoint = true;
                    for c in &children {
                        disjoint &= mask & c.0 == 0;
                        mask |= c.0;
                    }
                    if disjoint || !opts.read_once {
                        let mut t = 0u8;
                        let mut args = vec![false; a];
                        for k in 0..rows {
                            for (slot, c) in args.iter_mut().zip(&children) {
                                *slot = c.1 >> k & 1 == 1;
                            }
                            if g.eval_unchecked(&args) {
                                t |= 1 << k;
                            }
                        }
                        if seen.insert((mask, t)) {
                            let f = Formula::Apply(
                                g.clone(),
                                children.iter().map(|c| c.2.clone()).collect(),
                            );
                            if mask == full_mask && t == table {
                                return Ok(f);
                            }
                            found.push((mask, t, f));
                        }
                    }
                    // advance the odometer, last argument fastest
                    let mut j = a;
                    loop {
                        if j == 0 {
                            break 'tuples;
                        }
                        j -= 1;
                        pick[j] += 1;
                        if pick[j] < by_size[parts[j]].len() {
                            break;
                        }
                        pick[j] = 0;
                    }
                }
            }
        }
        by_size[size] = found;
    }
    Err(Error::Inconclusive(format!(
        "no formula with table {table:0w$b} within {} nodes",
        opts.max_nodes,
        w = rows
    )))
}

/// Ordered ways to write `n` as a sum of `k` positive parts.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Read-once realisation of `target` over `base`, searched up to the default node cap.
pub fn synth_short(base: &Base, target: Target) -> Result<Formula> {
    synthesize(base, target.vars(), target.table(), SynthOptions::default())
}

/// Number of occurrences of variable `v` in `f`.
pub fn occurrences(f: &Formula, v: &str) -> usize {
    let mut n = 0;
    f.visit(&mut |g| {
        if matches!(g, Formula::Var(w) if w == v) {
            n += 1;
        }
    });
    n
}

/// Substitutes `x` and `y` in a synthesized template.
pub fn instantiate(template: &Formula, args: &[Formula]) -> Formula {
    template.map_bottom_up(&mut |g| match &g {
        Formula::Var(v) => match SYNTH_VARS.iter().position(|n| n == v) {
            Some(i) => args[i].clone(),
            None => g,
        },
        _ => g,
    })
}

fn replace_one(f: &Formula, anchor: &Formula) -> Formula {
    let one = bi("true");
    f.map_bottom_up(&mut |g| match &g {
        Formula::Apply(h, args) if args.is_empty() && *h == one => anchor.clone(),
        _ => g,
    })
}

/// Templates for rewriting `{and, or, not}`-formulae into a base with `S1`
/// in its clone, using a fresh anchor variable in place of constant 1.
struct AnchorTemplates {
    and: Formula,
    or: Formula,
    not: Formula,
    /// `x & y` over the base alone; variables may repeat.
    and_b: Formula,
    anchor: Formula,
}

impl AnchorTemplates {
    fn new(base: &Base) -> Result<Self> {
        let with_one = SynthOptions {
            with_one: true,
            ..Default::default()
        };
        let relaxed = SynthOptions {
            read_once: false,
            ..Default::default()
        };
        let synth = |t: Target, o| {
            synthesize(base, t.vars(), t.table(), o).map_err(|e| {
                Error::Inconclusive(format!("cannot realise {t} over the base: {e}"))
            })
        };
        Ok(AnchorTemplates {
            and: synth(Target::And, with_one)?,
            or: synth(Target::Or, with_one)?,
            not: synth(Target::Not, with_one)?,
            and_b: synth(Target::And, relaxed)?,
            anchor: Formula::var(ANCHOR),
        })
    }

    /// Rewrites the connectives `and`, `or`, `not`, `true`, `false`; every
    /// constant 1 becomes the anchor.
    fn rewrite(&self, f: &Formula) -> Formula {
        let one = replace_one(&Formula::tt(), &self.anchor);
        let out = f.map_bottom_up(&mut |g| match &g {
            Formula::Apply(h, args) if is_connective(h, &["and"]) => instantiate(&self.and, args),
            Formula::Apply(h, args) if is_connective(h, &["or"]) => instantiate(&self.or, args),
            Formula::Apply(h, args) if is_connective(h, &["not"]) => instantiate(&self.not, args),
            Formula::Apply(h, _) if is_connective(h, &["false"]) => {
                instantiate(&self.not, &[Formula::tt()])
            }
            _ => g,
        });
        replace_one(&out, &one)
    }

    fn and_b(&self, a: Formula, b: Formula) -> Formula {
        instantiate(&self.and_b, &[a, b])
    }

    /// `and_B(t, block)`, equivalent to the original block where it holds.
    fn wrap(&self, block: Formula) -> Formula {
        self.and_b(self.anchor.clone(), block)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AnchorOps {
    /// `{G, X}`
    GX,
    /// `{F, X}`
    FX,
}

impl AnchorOps {
    pub fn ops(self) -> OpSet {
        match self {
            AnchorOps::GX => OpSet::from_ops([TemporalOp::G, TemporalOp::X]),
            AnchorOps::FX => OpSet::from_ops([TemporalOp::F, TemporalOp::X]),
        }
    }
}

/// `g(t, F(g(t, X t)))` with `g` realising `x & !y`; equivalent to `G t`.
pub fn always_via_eventually(g: &Formula, t: &Formula) -> Formula {
    let inner = instantiate(g, &[t.clone(), Formula::next(t.clone())]);
    instantiate(g, &[t.clone(), Formula::eventually(inner)])
}

fn check_s1(base: &Base, ops: OpSet) -> Result<()> {
    let v = classify(&FragmentSpec::new(base.clone(), ops));
    if matches!(v.class, Class::NPComplete | Class::PSPACEComplete) {
        Ok(())
    } else {
        Err(Error::Precondition(
            "the base must express x & !y (its clone must contain S1)".into(),
        ))
    }
}

fn check_standard(f: &Formula) -> Result<()> {
    match f
        .functions()
        .into_iter()
        .find(|g| !is_connective(g, &["and", "or", "not", "true", "false"]))
    {
        Some(g) => Err(Error::Precondition(format!(
            "expected and/or/not only, found `{}`",
            g.name()
        ))),
        None => Ok(()),
    }
}

/// Rewrites an `{and, or, not}` formula over `{G, X}` or `{F, X}` into a pure
/// `B`-formula over the same operators: constant 1 becomes the anchor `__t`,
/// which the output forces true everywhere.
pub fn rewrite_with_true_anchor(f: &Formula, base: &Base, ops: AnchorOps) -> Result<ReductionOutput> {
    check_s1(base, ops.ops())?;
    check_standard(f)?;
    if !f.temporal_ops().is_subset(ops.ops()) {
        return Err(Error::Precondition(format!(
            "formula uses {} but the target operators are {}",
            f.temporal_ops(),
            ops.ops()
        )));
    }
    let tpl = AnchorTemplates::new(base)?;
    let body = tpl.rewrite(f);
    let t = tpl.anchor.clone();
    let always_t = match ops {
        AnchorOps::GX => Formula::globally(t.clone()),
        AnchorOps::FX => {
            let g = synthesize(
                base,
                2,
                0b0100,
                SynthOptions {
                    read_once: false,
                    ..Default::default()
                },
            )
            .map_err(|e| Error::Inconclusive(format!("cannot realise x & !y: {e}")))?;
            always_via_eventually(&g, &t)
        }
    };
    let formula = tpl.and_b(body, tpl.and_b(t, always_t));
    Ok(ReductionOutput {
        formula,
        fresh_vars: vec![fresh(ANCHOR, "truth anchor replacing constant 1")],
    })
}

// ---------------------------------------------------------------------------
// QBF

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QbfInstance {
    pub prefix: Vec<(Quantifier, String)>,
    pub matrix: Formula,
}

impl QbfInstance {
    pub fn new(prefix: Vec<(Quantifier, String)>, matrix: Formula) -> Result<Self> {
        let mut names = HashSet::new();
        for (_, v) in &prefix {
            if !names.insert(v.as_str()) {
                return Err(Error::Argument(format!("variable `{v}` quantified twice")));
            }
            if v.starts_with("__") {
                return Err(Error::Argument(format!("`{v}` uses the reserved prefix")));
            }
        }
        if !matrix.is_propositional() {
            return Err(Error::Argument("QBF matrix must be propositional".into()));
        }
        check_standard(&matrix).map_err(|e| Error::Argument(e.to_string()))?;
        if let Some(v) = matrix.variables().iter().find(|v| !names.contains(v.as_str())) {
            return Err(Error::Argument(format!("matrix variable `{v}` is not quantified")));
        }
        Ok(QbfInstance { prefix, matrix })
    }

    /// Quantifier lines `forall x` / `exists x`, then the matrix.
    pub fn parse(text: &str) -> Result<Self> {
        let mut prefix = Vec::new();
        let mut rest = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match (rest.is_empty(), words.as_slice()) {
                (true, ["forall", v]) => prefix.push((Quantifier::Forall, v.to_string())),
                (true, ["exists", v]) => prefix.push((Quantifier::Exists, v.to_string())),
                _ => rest.push(line),
            }
        }
        if rest.is_empty() {
            return Err(Error::Argument("QBF has no matrix".into()));
        }
        let matrix = parse(&rest.join(" "), &Base::default())?;
        QbfInstance::new(prefix, matrix)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (q, v) in &self.prefix {
            let kw = match q {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            s.push_str(&format!("{kw} {v}\n"));
        }
        s.push_str(&format!("{}\n", self.matrix));
        s
    }

    /// Brute-force evaluation.
    pub fn is_valid(&self) -> bool {
        fn go(q: &QbfInstance, i: usize, env: &mut BTreeMap<String, bool>) -> bool {
            if i == q.prefix.len() {
                return eval_prop(&q.matrix, env);
            }
            let (quant, v) = &q.prefix[i];
            let branch = |b: bool, env: &mut BTreeMap<String, bool>| {
                env.insert(v.clone(), b);
                go(q, i + 1, env)
            };
            match quant {
                Quantifier::Forall => branch(false, env) && branch(true, env),
                Quantifier::Exists => branch(false, env) || branch(true, env),
            }
        }
        go(self, 0, &mut BTreeMap::new())
    }

    fn var(&self, i: usize) -> &str {
        &self.prefix[i - 1].1
    }
}

fn eval_prop(f: &Formula, env: &BTreeMap<String, bool>) -> bool {
    match f {
        Formula::Var(v) => env.get(v).copied().unwrap_or(false),
        Formula::Apply(g, args) => {
            let vals: Vec<bool> = args.iter().map(|a| eval_prop(a, env)).collect();
            g.eval_unchecked(&vals)
        }
        _ => unreachable!("propositional formula expected"),
    }
}

fn t_var(i: usize) -> String {
    format!("__t{i}")
}

fn u_var(i: usize) -> String {
    format!("__u{i}")
}

type Lit = (String, bool);

/// How the propositional glue of the encoding is expressed.
trait Glue {
    fn block(&self, lits: &[Lit]) -> Formula;
    fn and(&self, a: Formula, b: Formula) -> Formula;
    fn or(&self, a: Formula, b: Formula) -> Formula;
    fn matrix(&self, f: &Formula) -> Formula;
    fn conj(&self, items: Vec<Formula>) -> Formula;
}

fn lit_conj(lits: &[Lit]) -> Formula {
    Formula::conj(lits.iter().map(|(v, pos)| {
        let x = Formula::var(v.clone());
        if *pos {
            x
        } else {
            Formula::not(x)
        }
    }))
}

struct PlainGlue;

impl Glue for PlainGlue {
    fn block(&self, lits: &[Lit]) -> Formula {
        lit_conj(lits)
    }
    fn and(&self, a: Formula, b: Formula) -> Formula {
        Formula::and(a, b)
    }
    fn or(&self, a: Formula, b: Formula) -> Formula {
        Formula::or(a, b)
    }
    fn matrix(&self, f: &Formula) -> Formula {
        f.clone()
    }
    fn conj(&self, items: Vec<Formula>) -> Formula {
        Formula::conj(items)
    }
}

struct BaseGlue(AnchorTemplates);

impl Glue for BaseGlue {
    fn block(&self, lits: &[Lit]) -> Formula {
        self.0.wrap(self.0.rewrite(&lit_conj(lits)))
    }
    fn and(&self, a: Formula, b: Formula) -> Formula {
        self.0.and_b(a, b)
    }
    fn or(&self, a: Formula, b: Formula) -> Formula {
        self.0.wrap(self.0.rewrite(&Formula::or(a, b)))
    }
    fn matrix(&self, f: &Formula) -> Formula {
        self.0.wrap(self.0.rewrite(f))
    }
    fn conj(&self, items: Vec<Formula>) -> Formula {
        balanced(items, &|a, b| self.0.and_b(a, b))
    }
}

/// Binary tree of depth `ceil(log2(n))` over the items, left half rounded up.
pub fn balanced(mut items: Vec<Formula>, join: &impl Fn(Formula, Formula) -> Formula) -> Formula {
    assert!(!items.is_empty());
    if items.len() == 1 {
        return items.pop().unwrap();
    }
    let right = items.split_off(items.len().div_ceil(2));
    join(balanced(items, join), balanced(right, join))
}

/// Right-nested chain `b1 op (b2 op (... op bn))`.
fn chain_right(blocks: Vec<Formula>, op: fn(Formula, Formula) -> Formula) -> Formula {
    blocks.into_iter().rev().reduce(|acc, b| op(b, acc)).unwrap()
}

/// Left-nested chain `((b1 op b2) op ...) op bn`.
fn chain_left(blocks: Vec<Formula>, op: fn(Formula, Formula) -> Formula) -> Formula {
    blocks.into_iter().reduce(op).unwrap()
}

fn encode(q: &QbfInstance, glue: &impl Glue, op: fn(Formula, Formula) -> Formula) -> Formula {
    let lit = |v: String, pos: bool| (v, pos);
    let t0 = Formula::var(t_var(0));

    let a = || glue.block(&[lit(u_var(0), true), lit(t_var(0), false)]);
    let b = || glue.block(&[lit(u_var(0), false), lit(t_var(0), false)]);
    let c = || glue.block(&[lit(u_var(0), false), lit(t_var(0), true)]);
    let alpha = glue.and(
        glue.and(a(), chain_right(vec![a(), b(), c()], op)),
        chain_left(vec![a(), b(), c()], op),
    );

    // (u_{i-1}, t_{i-1}, u_i, t_i, x_i) sign patterns
    const BETA: [[bool; 5]; 6] = [
        [true, false, true, false, false],
        [false, false, false, false, false],
        [false, false, false, true, false],
        [false, false, true, false, true],
        [false, false, false, false, true],
        [false, true, false, true, true],
    ];
    const GAMMA: [[bool; 4]; 3] = [
        [true, false, true, false],
        [false, false, false, false],
        [false, true, false, true],
    ];
    let blk = |i: usize, signs: &[bool], x: bool| {
        glue.block(&[
            lit(u_var(i - 1), signs[0]),
            lit(t_var(i - 1), signs[1]),
            lit(u_var(i), signs[2]),
            lit(t_var(i), signs[3]),
            lit(q.var(i).to_string(), x),
        ])
    };

    let mut items = vec![alpha];
    for (i, (quant, _)) in q.prefix.iter().enumerate() {
        let i = i + 1;
        if *quant == Quantifier::Forall {
            let blocks = || BETA.iter().map(|s| blk(i, &s[..4], s[4])).collect::<Vec<_>>();
            let beta = glue.and(chain_right(blocks(), op), chain_left(blocks(), op));
            items.push(op(beta, t0.clone()));
        }
    }
    for (i, (quant, _)) in q.prefix.iter().enumerate() {
        let i = i + 1;
        if *quant == Quantifier::Exists {
            let gamma = |x: bool| chain_right(GAMMA.iter().map(|s| blk(i, s, x)).collect(), op);
            items.push(op(glue.or(gamma(false), gamma(true)), t0.clone()));
        }
    }
    items.push(op(glue.matrix(&q.matrix), t0));
    glue.conj(items)
}

fn marker_vars(q: &QbfInstance) -> Vec<FreshVar> {
    let n = q.prefix.len();
    (0..=n)
        .map(|i| fresh(t_var(i), format!("end marker of level {i}")))
        .chain((0..=n).map(|i| fresh(u_var(i), format!("start marker of level {i}"))))
        .collect()
}

/// Formula over `{and, or, not}` and `S`, satisfiable iff the QBF is valid.
pub fn qbf_to_since(q: &QbfInstance) -> ReductionOutput {
    ReductionOutput {
        formula: encode(q, &PlainGlue, Formula::since),
        fresh_vars: marker_vars(q),
    }
}

/// The same encoding with every `S` replaced by `U`.
pub fn qbf_to_until(q: &QbfInstance) -> ReductionOutput {
    ReductionOutput {
        formula: encode(q, &PlainGlue, Formula::until),
        fresh_vars: marker_vars(q),
    }
}

/// The `S` encoding as a pure `B`-formula. Each propositional block is
/// rewritten over `B` plus the anchor and guarded as `and_B(t, block)`;
/// the outer conjunction is a balanced `and_B` tree.
pub fn qbf_to_since_b(q: &QbfInstance, base: &Base) -> Result<ReductionOutput> {
    check_s1(base, OpSet::from_ops([TemporalOp::S]))?;
    let glue = BaseGlue(AnchorTemplates::new(base)?);
    let mut fresh_vars = marker_vars(q);
    fresh_vars.push(fresh(ANCHOR, "truth anchor replacing constant 1"));
    Ok(ReductionOutput {
        formula: encode(q, &glue, Formula::since),
        fresh_vars,
    })
}

/// Checks the block structure of a model of the `S` encoding: cut points
/// `0 = a_0 < .. < a_N <= m + 1`, `N = 3 * 2^k` for `k` universal variables,
/// such that every state `j` with `m - a_i < j <= m - a_{i-1}` carries the
/// labels required of block `i`, and each existential variable is a
/// function of the variables quantified before it, read at the same state.
pub fn verify_model_shape(lasso: &Lasso, m: usize, q: &QbfInstance) -> Result<bool> {
    if !eval_at(lasso, m, &qbf_to_since(q).formula) {
        return Err(Error::Argument(
            "the structure does not satisfy the encoding at the given index".into(),
        ));
    }
    let n = q.prefix.len();
    let foralls: Vec<usize> = (1..=n).filter(|&i| q.prefix[i - 1].0 == Quantifier::Forall).collect();
    let exists: Vec<usize> = (1..=n).filter(|&i| q.prefix[i - 1].0 == Quantifier::Exists).collect();
    let k = foralls.len();
    let blocks = 3usize << k;

    let has = |j: usize, v: &str| lasso.state(j).contains(v);
    let block_ok = |i: usize, j: usize| -> bool {
        if has(j, &t_var(0)) != (i == blocks) || has(j, &u_var(0)) != (i == 1) {
            return false;
        }
        for (h, &p) in foralls.iter().enumerate() {
            let period = 3usize << (k - h - 1);
            if has(j, q.var(p)) != i.div_ceil(period).is_multiple_of(2)
                || has(j, &t_var(p)) != i.is_multiple_of(period)
                || has(j, &u_var(p)) != (i % period == 1)
            {
                return false;
            }
        }
        exists.iter().all(|&e| {
            has(j, &t_var(e)) == has(j, &t_var(e - 1)) && has(j, &u_var(e)) == has(j, &u_var(e - 1))
        })
    };
    let functional = |first: usize| -> bool {
        exists.iter().all(|&e| {
            let mut seen: HashMap<Vec<bool>, bool> = HashMap::new();
            (first..=m).all(|j| {
                let key: Vec<bool> = (1..e).map(|d| has(j, q.var(d))).collect();
                let val = has(j, q.var(e));
                *seen.entry(key).or_insert(val) == val
            })
        })
    };

    // Block i occupies positions (end - len, end]; search lengths longest first.
    fn search(
        i: usize,
        end: isize,
        blocks: usize,
        block_ok: &dyn Fn(usize, usize) -> bool,
        functional: &dyn Fn(usize) -> bool,
    ) -> bool {
        if i > blocks {
            return functional((end + 1) as usize);
        }
        let mut len = 0;
        while end - len >= 0 && block_ok(i, (end - len) as usize) {
            len += 1;
        }
        (1..=len).rev().any(|l| search(i + 1, end - l, blocks, block_ok, functional))
    }
    Ok(search(1, m as isize, blocks, &block_ok, &functional))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::named_base;
    use crate::formula::sat_bounded;
    use crate::tableau::decide_tableau;

    fn p(s: &str) -> Formula {
        parse(s, &Base::default()).unwrap()
    }

    fn sat(f: &Formula) -> bool {
        decide_tableau(f).unwrap().satisfiable
    }

    fn qbf(s: &str) -> QbfInstance {
        QbfInstance::parse(s).unwrap()
    }

    #[test]
    fn dnf_of_andnot() {
        let g = named_base("S1").unwrap().functions()[0].clone();
        let f = dnf_template(&g, &[p("a"), p("b")]);
        assert_eq!(f.to_string(), "and(a, not(b))");
    }

    #[test]
    fn flatten_single_variable() {
        let out = flatten(&p("x"), FlattenMode::Full).unwrap();
        assert_eq!(out.fresh_vars.len(), 1);
        assert!(sat(&out.formula));
        assert_eq!(out.formula.temporal_ops(), OpSet::from_ops([TemporalOp::U, TemporalOp::S]));
    }

    #[test]
    fn flatten_examples() {
        let f = p("F not(x)");
        let out = flatten(&f, FlattenMode::Full).unwrap();
        assert_eq!(out.fresh_vars.len(), 3);
        assert_eq!(sat(&out.formula), sat_bounded(&f, 2, 2, 1_000_000).unwrap().is_some());
        assert!(!sat(&flatten(&p("and(x, not(x))"), FlattenMode::Full).unwrap().formula));
        let fo = flatten(&p("G F x"), FlattenMode::FutureOnly).unwrap().formula;
        assert_eq!(fo.temporal_ops(), OpSet::from_ops([TemporalOp::F]));
        assert!(sat(&fo));
        assert!(matches!(flatten(&p("X x"), FlattenMode::FutureOnly), Err(Error::Precondition(_))));
    }

    #[test]
    fn extended_model_satisfies_flattening() {
        let f = p("and(x S y, F not(x))");
        let w = decide_tableau(&f).unwrap().witness.unwrap();
        let ext = extend_model(&f, &w.lasso);
        let out = flatten(&f, FlattenMode::Full).unwrap();
        assert!(eval_at(&ext, w.index, &out.formula));
    }

    #[test]
    fn synth_examples() {
        let and = synth_short(&Base::builtins(&["and"]).unwrap(), Target::And).unwrap();
        assert_eq!(and.to_string(), "and(x, y)");
        let not = synth_short(&named_base("N").unwrap(), Target::Not).unwrap();
        assert_eq!(not.to_string(), "not(x)");
        let b = named_base("S1").unwrap().with(bi("true")).unwrap();
        let not = synth_short(&b, Target::Not).unwrap();
        assert_eq!(not.to_string(), "andnot(true, x)");
        assert!(matches!(
            synth_short(&named_base("S1").unwrap(), Target::Or),
            Err(Error::Inconclusive(_))
        ));
    }

    #[test]
    fn relaxed_synthesis_may_repeat() {
        let s1 = named_base("S1").unwrap();
        let relaxed = SynthOptions {
            read_once: false,
            ..Default::default()
        };
        let and = synthesize(&s1, 2, Target::And.table(), relaxed).unwrap();
        // x & y = x & !(x & !y)
        assert_eq!(and.to_string(), "andnot(x, andnot(x, y))");
        assert_eq!(occurrences(&and, "x"), 2);
    }

    #[test]
    fn anchor_rewrite_examples() {
        let s1 = named_base("S1").unwrap();
        let out = rewrite_with_true_anchor(&p("F x"), &s1, AnchorOps::FX).unwrap();
        assert!(s1_only(&out.formula));
        assert!(sat(&expand_to_builtin(&out.formula)));
        let out = rewrite_with_true_anchor(&p("and(x, not(x))"), &s1, AnchorOps::GX).unwrap();
        assert!(!sat(&expand_to_builtin(&out.formula)));
        let out = rewrite_with_true_anchor(&p("x"), &s1, AnchorOps::GX).unwrap();
        let w = decide_tableau(&expand_to_builtin(&out.formula)).unwrap().witness.unwrap();
        assert!((0..6).all(|j| w.lasso.state(w.index + j).contains(ANCHOR)));
        assert!(rewrite_with_true_anchor(&p("x"), &named_base("M").unwrap(), AnchorOps::GX).is_err());
    }

    fn s1_only(f: &Formula) -> bool {
        f.functions().iter().all(|g| g.name() == "andnot")
    }

    #[test]
    fn always_encoding_matches_globally() {
        let g = named_base("S1").unwrap().functions()[0].clone();
        let tpl = Formula::Apply(g, vec![p("x"), p("y")]);
        let t = p("t");
        let enc = always_via_eventually(&tpl, &t);
        let vars = vec!["t".to_string()];
        for l in crate::formula::all_lassos(&vars, 3, 2) {
            for i in 0..l.len() {
                assert_eq!(eval_at(&l, i, &enc), eval_at(&l, i, &p("G t")));
            }
        }
    }

    #[test]
    fn qbf_parsing_and_validity() {
        let q = qbf("forall x\nexists y\nand(or(x, not(y)), or(not(x), y))");
        assert!(q.is_valid());
        assert_eq!(QbfInstance::parse(&q.to_text()).unwrap(), q);
        assert!(!qbf("forall x\nx").is_valid());
        assert!(qbf("true").is_valid());
        assert!(QbfInstance::parse("exists x\ny").is_err());
        assert!(QbfInstance::parse("exists x\nexists x\nx").is_err());
        assert!(QbfInstance::parse("exists x\nF x").is_err());
    }

    #[test]
    fn since_encoding_examples() {
        assert!(sat(&qbf_to_since(&qbf("exists x\nx")).formula));
        assert!(!sat(&qbf_to_since(&qbf("forall x\nx")).formula));
        let q = qbf("forall x\nexists y\nand(or(x, not(y)), or(not(x), y))");
        assert!(sat(&qbf_to_since(&q).formula));
        assert_eq!(qbf_to_since(&q).formula.temporal_ops(), OpSet::from_ops([TemporalOp::S]));
    }

    #[test]
    fn until_encoding_examples() {
        assert!(sat(&qbf_to_until(&qbf("exists x\nx")).formula));
        assert!(!sat(&qbf_to_until(&qbf("forall x\nx")).formula));
        let q = qbf("forall x\nexists y\nor(and(x, y), and(not(x), not(y)))");
        assert!(sat(&qbf_to_until(&q).formula));
    }

    #[test]
    fn base_encoding_examples() {
        let s1 = named_base("S1").unwrap();
        let out = qbf_to_since_b(&qbf("exists x\nx"), &s1).unwrap();
        assert!(s1_only(&out.formula));
        assert!(sat(&expand_to_builtin(&out.formula)));
        let out = qbf_to_since_b(&qbf("forall x\nx"), &s1).unwrap();
        assert!(!sat(&expand_to_builtin(&out.formula)));
    }

    #[test]
    fn balanced_depth() {
        fn depth(f: &Formula) -> usize {
            match f {
                Formula::Apply(_, args) if !args.is_empty() => 1 + args.iter().map(depth).max().unwrap(),
                _ => 0,
            }
        }
        for n in 1..=9usize {
            let items: Vec<Formula> = (0..n).map(|i| Formula::var(format!("v{i}"))).collect();
            let f = balanced(items, &Formula::and);
            let expect = (n as f64).log2().ceil() as usize;
            assert_eq!(depth(&f), expect, "n={n}");
        }
    }

    #[test]
    fn model_shape_of_witness() {
        let q = qbf("exists x\nx");
        let w = decide_tableau(&qbf_to_since(&q).formula).unwrap().witness.unwrap();
        assert!(verify_model_shape(&w.lasso, w.index, &q).unwrap());
    }

    #[test]
    fn model_shape_hand_built() {
        // forall x. or(x, not(x)): blocks 1..6 listed from the evaluation point backwards
        let q = qbf("forall x\nor(x, not(x))");
        let rows: [&[&str]; 6] = [
            &["__u0", "__u1"],
            &[],
            &["__t1"],
            &["__u1", "x"],
            &["x"],
            &["__t0", "__t1", "x"],
        ];
        let states: Vec<&[&str]> = rows.iter().rev().copied().collect();
        let l = Lasso::from_names(&states, &[&[]]).unwrap();
        assert!(verify_model_shape(&l, 5, &q).unwrap());
        assert!(matches!(
            verify_model_shape(&Lasso::from_names(&[], &[&[]]).unwrap(), 0, &q),
            Err(Error::Argument(_))
        ));
    }
}
