//! Formula generators and batch checks shared by the CLI and the test suites.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boolfn::{bi, named_base, named_bases, Base, BoolFn};
use crate::classify::{classify, Class, FragmentSpec};
use crate::error::{Error, Result};
use crate::formula::{Formula, OpSet, TemporalOp};
use crate::reductions::{
    expand_to_builtin, qbf_to_since, qbf_to_since_b, qbf_to_until, verify_model_shape,
    QbfInstance, Quantifier,
};
use crate::tableau::{decide_tableau_with, TableauOptions};

#[derive(Clone)]
enum Ctor {
    Leaf(Formula),
    Fn(Arc<BoolFn>),
    Op(TemporalOp),
}

impl Ctor {
    fn arity(&self) -> usize {
        match self {
            Ctor::Leaf(_) => 0,
            Ctor::Fn(g) => g.arity(),
            Ctor::Op(TemporalOp::U | TemporalOp::S) => 2,
            Ctor::Op(_) => 1,
        }
    }

    fn build(&self, mut args: Vec<Formula>) -> Formula {
        match self {
            Ctor::Leaf(f) => f.clone(),
            Ctor::Fn(g) => Formula::Apply(g.clone(), args),
            Ctor::Op(op) => {
                let b = if args.len() == 2 { args.pop() } else { None };
                let a = args.pop().unwrap();
                match op {
                    TemporalOp::X => Formula::next(a),
                    TemporalOp::F => Formula::eventually(a),
                    TemporalOp::G => Formula::globally(a),
                    TemporalOp::U => Formula::until(a, b.unwrap()),
                    TemporalOp::S => Formula::since(a, b.unwrap()),
                }
            }
        }
    }
}

fn constructors(base: &Base, ops: OpSet, vars: &[&str]) -> Vec<Ctor> {
    let mut out: Vec<Ctor> = vars.iter().map(|v| Ctor::Leaf(Formula::var(*v))).collect();
    for g in base.functions() {
        if g.arity() == 0 {
            out.push(Ctor::Leaf(Formula::Apply(g.clone(), vec![])));
        } else {
            out.push(Ctor::Fn(g.clone()));
        }
    }
    out.extend(ops.iter().map(Ctor::Op));
    out
}

fn compositions(n: usize, k: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if k == 0 {
        if n == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for first in 1..=n.saturating_sub(k - 1) {
        cur.push(first);
        compositions(n - first, k - 1, out, cur);
        cur.pop();
    }
}

/// Calls `visit` on every formula over the fragment with at most `max_nodes`
/// nodes, in order of increasing size.
pub fn for_each_formula(
    base: &Base,
    ops: OpSet,
    vars: &[&str],
    max_nodes: usize,
    visit: &mut dyn FnMut(&Formula),
) {
    let ctors = constructors(base, ops, vars);
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max_nodes + 1];
    for n in 1..=max_nodes {
        let keep = n < max_nodes;
        let mut level = Vec::new();
        for c in &ctors {
            let a = c.arity();
            if (a == 0) != (n == 1) {
                continue;
            }
            if a == 0 {
                let f = c.build(vec![]);
                visit(&f);
                if keep {
                    level.push(f);
                }
                continue;
            }
            let mut parts = Vec::new();
            compositions(n - 1, a, &mut parts, &mut Vec::new());
            for p in parts {
                if p.iter().any(|&s| by_size[s].is_empty()) {
                    continue;
                }
                let mut pick = vec![0usize; a];
                loop {
                    let args = (0..a).map(|j| by_size[p[j]][pick[j]].clone()).collect();
                    let f = c.build(args);
                    visit(&f);
                    if keep {
                        level.push(f);
                    }
                    let mut j = a;
                    loop {
                        if j == 0 {
                            break;
                        }
                        j -= 1;
                        pick[j] += 1;
                        if pick[j] < by_size[p[j]].len() {
                            break;
                        }
                        pick[j] = 0;
                    }
                    if pick.iter().all(|&i| i == 0) {
                        break;
                    }
                }
            }
        }
        by_size[n] = level;
    }
}

pub fn count_formulas(base: &Base, ops: OpSet, vars: &[&str], max_nodes: usize) -> usize {
    let mut n = 0;
    for_each_formula(base, ops, vars, max_nodes, &mut |_| n += 1);
    n
}

/// Random formula with at most `max_nodes` nodes. The size is drawn
/// uniformly first; shapes the base cannot fill end up smaller.
pub fn random_formula(
    rng: &mut ChaCha8Rng,
    base: &Base,
    ops: OpSet,
    vars: &[&str],
    max_nodes: usize,
) -> Formula {
    let ctors = constructors(base, ops, vars);
    let size = rng.gen_range(1..=max_nodes.max(1));
    gen(rng, &ctors, size)
}

fn gen(rng: &mut ChaCha8Rng, ctors: &[Ctor], size: usize) -> Formula {
    let fits: Vec<&Ctor> = ctors
        .iter()
        .filter(|c| c.arity() > 0 && c.arity() < size)
        .collect();
    let leaves: Vec<&Ctor> = ctors.iter().filter(|c| c.arity() == 0).collect();
    let Some(c) = fits.choose(rng).copied() else {
        return match leaves.choose(rng) {
            Some(c) => c.build(vec![]),
            // a base with no leaves at all cannot happen: variables are leaves
            None => unreachable!("no leaf constructors"),
        };
    };
    let a = c.arity();
    // split size - 1 into a positive parts
    let mut cuts: Vec<usize> = (1..size - 1).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(a - 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(a);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(size - 1)) {
        parts.push(c - prev);
        prev = c;
    }
    let args = parts.into_iter().map(|s| gen(rng, ctors, s)).collect();
    c.build(args)
}

// ---------------------------------------------------------------------------
// Classification table

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub base: String,
    pub ops: OpSet,
    pub class: Class,
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub base: String,
    pub ops: OpSet,
    pub expected: Class,
    pub found: Class,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub cells: usize,
    pub mismatches: Vec<Mismatch>,
}

pub const EXPECTED_CELLS: &str = include_str!("../data/expected_cells.txt");

/// Lines `<base> <ops> <class>`; `#` starts a comment.
pub fn parse_cells(text: &str) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let w: Vec<&str> = line.split_whitespace().collect();
        let [base, ops, class] = w[..] else {
            return Err(Error::Argument(format!("line {}: expected 3 fields", n + 1)));
        };
        if named_base(base).is_none() {
            return Err(Error::Argument(format!("line {}: unknown base `{base}`", n + 1)));
        }
        out.push(Cell {
            base: base.to_string(),
            ops: OpSet::parse(ops)?,
            class: Class::parse(class)?,
        });
    }
    Ok(out)
}

pub fn expected_cells() -> Vec<Cell> {
    parse_cells(EXPECTED_CELLS).expect("bundled table parses")
}

pub fn table_check(expected: &[Cell]) -> TableReport {
    let mut mismatches = Vec::new();
    for cell in expected {
        let base = named_base(&cell.base).expect("validated by parse_cells");
        let found = classify(&FragmentSpec::new(base, cell.ops)).class;
        if found != cell.class {
            mismatches.push(Mismatch {
                base: cell.base.clone(),
                ops: cell.ops,
                expected: cell.class,
                found,
            });
        }
    }
    TableReport {
        cells: expected.len(),
        mismatches,
    }
}

/// Every named base crossed with every operator set.
pub fn all_cells() -> Vec<(String, OpSet)> {
    named_bases()
        .iter()
        .flat_map(|(name, _)| OpSet::all_subsets().map(move |m| (name.to_string(), m)))
        .collect()
}

// ---------------------------------------------------------------------------
// QBF sweep

const QBF_VARS: [&str; 4] = ["p", "q", "r", "s"];

/// Every prenex QBF with at most `max_quantifiers` distinct variables and a
/// matrix over `and`, `or`, `not`, `true`, `false` with at most `max_nodes` nodes.
pub fn qbf_instances(max_quantifiers: usize, max_nodes: usize) -> Result<Vec<QbfInstance>> {
    if max_quantifiers > QBF_VARS.len() {
        return Err(Error::Argument(format!(
            "at most {} quantifiers supported",
            QBF_VARS.len()
        )));
    }
    let base = Base::builtins(&["and", "or", "not", "true", "false"])?;
    let mut out = Vec::new();
    for k in 0..=max_quantifiers {
        let vars = &QBF_VARS[..k];
        let mut matrices = Vec::new();
        for_each_formula(&base, OpSet::EMPTY, vars, max_nodes, &mut |f| matrices.push(f.clone()));
        for mask in 0..1usize << k {
            let prefix: Vec<(Quantifier, String)> = vars
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let q = if mask >> i & 1 == 1 {
                        Quantifier::Forall
                    } else {
                        Quantifier::Exists
                    };
                    (q, v.to_string())
                })
                .collect();
            for m in &matrices {
                out.push(QbfInstance::new(prefix.clone(), m.clone())?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct QbfSuiteReport {
    pub instances: usize,
    pub valid: usize,
    pub since_agree: usize,
    pub since_b_agree: usize,
    pub until_agree: usize,
    pub shapes_checked: usize,
    pub shape_failures: usize,
    /// One line per disagreement or failed check.
    pub failures: Vec<String>,
}

impl QbfSuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.since_agree == self.instances
            && self.since_b_agree == self.instances
            && self.until_agree == self.instances
            && self.shape_failures == 0
    }
}

/// Compares brute-force validity with the tableau on all three encodings.
pub fn qbf_suite(max_quantifiers: usize, max_nodes: usize, opts: TableauOptions) -> Result<QbfSuiteReport> {
    qbf_suite_on(&qbf_instances(max_quantifiers, max_nodes)?, opts)
}

pub fn qbf_suite_on(instances: &[QbfInstance], opts: TableauOptions) -> Result<QbfSuiteReport> {
    let s1 = named_base("S1").expect("S1 is a named base");
    let mut rep = QbfSuiteReport::default();
    for q in instances {
        rep.instances += 1;
        let valid = q.is_valid();
        rep.valid += valid as usize;
        let label = || q.to_text().replace('\n', "; ");

        let r = decide_tableau_with(&qbf_to_since(q).formula, opts)?;
        if r.satisfiable == valid {
            rep.since_agree += 1;
        } else {
            rep.failures.push(format!("S encoding disagrees: {}", label()));
        }
        if let Some(w) = &r.witness {
            rep.shapes_checked += 1;
            if !verify_model_shape(&w.lasso, w.index, q)? {
                rep.shape_failures += 1;
                rep.failures.push(format!("model shape rejected: {}", label()));
            }
        }

        let fb = qbf_to_since_b(q, &s1)?.formula;
        let r = decide_tableau_with(&expand_to_builtin(&fb), opts)?;
        if r.satisfiable == valid {
            rep.since_b_agree += 1;
        } else {
            rep.failures.push(format!("S1 encoding disagrees: {}", label()));
        }

        let r = decide_tableau_with(&qbf_to_until(q).formula, opts)?;
        if r.satisfiable == valid {
            rep.until_agree += 1;
        } else {
            rep.failures.push(format!("U encoding disagrees: {}", label()));
        }
    }
    Ok(rep)
}

/// Built-in `{and, or, not}` base used for the standard formula families.
pub fn standard_base() -> Base {
    Base::from_arcs(vec![bi("and"), bi("or"), bi("not")]).expect("distinct names")
}
