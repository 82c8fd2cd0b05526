//! Fragment-specific satisfiability procedures and the dispatcher.
//!
//! Every procedure checks its own precondition and returns
//! [`Error::FragmentViolation`] when the formula falls outside it. Witnesses
//! are always re-checked by direct evaluation before they are returned.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::boolfn::{base_within, Base, CloneTag};
use crate::classify::{classify, FragmentSpec, Strategy};
use crate::error::{Error, Result};
use crate::formula::{
    eval_at, sat_bounded, Assignment, Formula, Lasso, OpSet, TemporalOp, Witness,
    DEFAULT_WORK_LIMIT,
};
use crate::reductions::expand_to_builtin;
use crate::tableau::{decide_tableau_with, TableauOptions};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SatResult {
    pub satisfiable: bool,
    pub witness: Option<Witness>,
    pub method: Strategy,
}

impl SatResult {
    pub fn sat(method: Strategy, witness: Option<Witness>) -> Self {
        SatResult {
            satisfiable: true,
            witness,
            method,
        }
    }

    pub fn unsat(method: Strategy) -> Self {
        SatResult {
            satisfiable: false,
            witness: None,
            method,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstStatus {
    Const0,
    Const1,
    NoConstant,
}

impl ConstStatus {
    fn of(b: bool) -> Self {
        if b {
            ConstStatus::Const1
        } else {
            ConstStatus::Const0
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            ConstStatus::Const0 => Some(false),
            ConstStatus::Const1 => Some(true),
            ConstStatus::NoConstant => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecideOptions {
    pub tableau: TableauOptions,
    /// Cap on structures tried by the enumerating procedures.
    pub work_limit: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            tableau: TableauOptions::default(),
            work_limit: DEFAULT_WORK_LIMIT,
        }
    }
}

/// Routes `f` to the procedure chosen by [`classify`] for `spec`.
pub fn decide(f: &Formula, spec: &FragmentSpec) -> Result<SatResult> {
    decide_with(f, spec, &DecideOptions::default())
}

pub fn decide_with(f: &Formula, spec: &FragmentSpec, opts: &DecideOptions) -> Result<SatResult> {
    spec.admits(f)?;
    match classify(spec).strategy {
        Strategy::AllTrueWitness => decide_all_true(f),
        Strategy::SelfDualWitness => decide_self_dual(f),
        Strategy::ConstantAnalysisN => decide_n(f),
        Strategy::MonotoneRewrite => decide_monotone(f),
        Strategy::XorNext => decide_xor_next_with(f, opts.work_limit),
        Strategy::PropLinear | Strategy::PropEnum => decide_prop(f, &spec.base),
        Strategy::XBounded => decide_x_bounded_with(f, opts.work_limit),
        Strategy::Tableau => decide_general(f, opts.tableau),
    }
}

/// Tableau on the built-in expansion of `f`; accepts any connectives.
pub fn decide_general(f: &Formula, opts: TableauOptions) -> Result<SatResult> {
    let mut r = decide_tableau_with(&expand_to_builtin(f), opts)?;
    if let Some(w) = &r.witness {
        check_witness(f, w)?;
    }
    r.method = Strategy::Tableau;
    Ok(r)
}

fn check_witness(f: &Formula, w: &Witness) -> Result<()> {
    if w.verifies(f) {
        Ok(())
    } else {
        Err(Error::Invariant(format!(
            "witness {} at {} does not satisfy {f}",
            w.lasso.to_json(),
            w.index
        )))
    }
}

fn require_functions(f: &Formula, tag: CloneTag, what: &str) -> Result<()> {
    match f.functions().into_iter().find(|g| !g.has_property(tag)) {
        Some(g) => Err(Error::FragmentViolation(format!("`{}` is not {what}", g.name()))),
        None => Ok(()),
    }
}

fn require_ops(f: &Formula, allowed: OpSet) -> Result<()> {
    if f.temporal_ops().is_subset(allowed) {
        Ok(())
    } else {
        Err(Error::FragmentViolation(format!(
            "temporal operators {} exceed {allowed}",
            f.temporal_ops()
        )))
    }
}

fn all_true(f: &Formula) -> Lasso {
    Lasso::constant(f.variables())
}

fn all_false() -> Lasso {
    Lasso::constant(Assignment::new())
}

pub fn decide_all_true(f: &Formula) -> Result<SatResult> {
    require_functions(f, CloneTag::R1, "1-reproducing")?;
    let w = Witness::new(all_true(f), 0);
    check_witness(f, &w)?;
    Ok(SatResult::sat(Strategy::AllTrueWitness, Some(w)))
}

pub fn decide_self_dual(f: &Formula) -> Result<SatResult> {
    require_functions(f, CloneTag::D, "self-dual")?;
    let one = eval_at(&all_true(f), 0, f);
    let zero = eval_at(&all_false(), 0, f);
    if one == zero {
        return Err(Error::Invariant(format!(
            "{f} has the same value ({one}) on the all-true and all-false structures"
        )));
    }
    let lasso = if one { all_true(f) } else { all_false() };
    Ok(SatResult::sat(Strategy::SelfDualWitness, Some(Witness::new(lasso, 0))))
}

/// Whether `f` is equivalent to a constant, for formulae whose functions
/// each depend on at most one argument.
pub fn constant_analysis_n(f: &Formula) -> Result<ConstStatus> {
    require_functions(f, CloneTag::N, "dependent on at most one argument")?;
    Ok(const_status(f))
}

fn const_status(f: &Formula) -> ConstStatus {
    use ConstStatus::*;
    match f {
        Formula::Var(_) => NoConstant,
        Formula::Apply(g, args) => {
            if let Some(c) = g.constant_value() {
                return ConstStatus::of(c);
            }
            let p = g.essential_positions()[0];
            match const_status(&args[p]).value() {
                Some(c) => {
                    let mut row = vec![false; args.len()];
                    row[p] = c;
                    ConstStatus::of(g.eval_unchecked(&row))
                }
                None => NoConstant,
            }
        }
        Formula::Next(a) | Formula::Eventually(a) | Formula::Globally(a) => const_status(a),
        Formula::Until(a, b) => match (const_status(b), const_status(a)) {
            (c @ (Const0 | Const1), _) => c,
            (s, Const0) => s,
            // F of a non-constant stays non-constant
            (s, Const1) => s,
            _ => NoConstant,
        },
        Formula::Since(a, b) => match (const_status(b), const_status(a)) {
            (c @ (Const0 | Const1), _) => c,
            (s, Const0) => s,
            _ => NoConstant,
        },
    }
}

pub fn decide_n(f: &Formula) -> Result<SatResult> {
    if constant_analysis_n(f)? == ConstStatus::Const0 {
        return Ok(SatResult::unsat(Strategy::ConstantAnalysisN));
    }
    let witness = [all_true(f), all_false()]
        .into_iter()
        .map(|l| Witness::new(l, 0))
        .find(|w| w.verifies(f));
    Ok(SatResult::sat(Strategy::ConstantAnalysisN, witness))
}

fn is_zero(f: &Formula) -> bool {
    f.as_constant() == Some(false)
}

/// Value of a propositional formula when every variable is true.
fn value_all_ones(f: &Formula) -> bool {
    match f {
        Formula::Var(_) => true,
        Formula::Apply(g, args) => {
            let vals: Vec<bool> = args.iter().map(value_all_ones).collect();
            g.eval_unchecked(&vals)
        }
        _ => unreachable!("propositional formula expected"),
    }
}

/// One bottom-up pass of the constant-0 propagation rules.
pub fn monotone_rewrite_once(f: &Formula) -> Formula {
    let zero = Formula::ff;
    f.map_bottom_up(&mut |g| {
        if g.is_propositional() && !is_zero(&g) && !value_all_ones(&g) {
            return zero();
        }
        match &g {
            Formula::Next(a) | Formula::Eventually(a) | Formula::Globally(a) if is_zero(a) => zero(),
            Formula::Until(_, b) | Formula::Since(_, b) if is_zero(b) => zero(),
            Formula::Until(a, b) | Formula::Since(a, b) if is_zero(a) => (**b).clone(),
            Formula::Apply(h, args) if !args.is_empty() => {
                let abstracted: Vec<bool> = args.iter().map(|x| !is_zero(x)).collect();
                if h.eval_unchecked(&abstracted) {
                    g
                } else {
                    zero()
                }
            }
            _ => g,
        }
    })
}

/// The sequence of formulae produced by repeated passes, ending at the fixpoint.
pub fn monotone_rewrite_trace(f: &Formula) -> Vec<Formula> {
    let mut out = vec![f.clone()];
    loop {
        let next = monotone_rewrite_once(out.last().unwrap());
        if &next == out.last().unwrap() {
            return out;
        }
        out.push(next);
    }
}

pub fn decide_monotone(f: &Formula) -> Result<SatResult> {
    require_functions(f, CloneTag::M, "monotone")?;
    let fixpoint = monotone_rewrite_trace(f).pop().unwrap();
    if is_zero(&fixpoint) {
        return Ok(SatResult::unsat(Strategy::MonotoneRewrite));
    }
    let w = Witness::new(all_true(f), 0);
    check_witness(f, &w)?;
    Ok(SatResult::sat(Strategy::MonotoneRewrite, Some(w)))
}

/// `f = c ^ (xor of vars) ^ X a1 ^ .. ^ X ak` for a formula over affine functions and `X`.
struct XorParts {
    constant: bool,
    vars: BTreeSet<String>,
    nexts: Vec<Formula>,
}

fn xor_parts(f: &Formula, out: &mut XorParts) -> Result<()> {
    match f {
        Formula::Var(v) => {
            if !out.vars.remove(v) {
                out.vars.insert(v.clone());
            }
        }
        Formula::Apply(g, args) => {
            let (c, coefs) = g
                .affine_form()
                .ok_or_else(|| Error::FragmentViolation(format!("`{}` is not linear", g.name())))?;
            out.constant ^= c;
            for (arg, coef) in args.iter().zip(coefs) {
                if coef {
                    xor_parts(arg, out)?;
                }
            }
        }
        Formula::Next(a) => out.nexts.push((**a).clone()),
        _ => {
            return Err(Error::FragmentViolation(
                "only X is allowed with the XOR decomposition".into(),
            ))
        }
    }
    Ok(())
}

/// (satisfiable, tautology) via the XOR/X decomposition.
pub fn xor_next_status(f: &Formula) -> Result<(bool, bool)> {
    let mut parts = XorParts {
        constant: false,
        vars: BTreeSet::new(),
        nexts: Vec::new(),
    };
    xor_parts(f, &mut parts)?;
    if !parts.vars.is_empty() {
        return Ok((true, false));
    }
    let (sat, taut) = match parts.nexts.into_iter().reduce(Formula::xor) {
        Some(rest) => xor_next_status(&rest)?,
        None => (false, false),
    };
    Ok(if parts.constant {
        (!taut, !sat)
    } else {
        (sat, taut)
    })
}

pub fn decide_xor_next(f: &Formula) -> Result<SatResult> {
    decide_xor_next_with(f, DEFAULT_WORK_LIMIT)
}

pub fn decide_xor_next_with(f: &Formula, work_limit: u64) -> Result<SatResult> {
    require_ops(f, OpSet::from_ops([TemporalOp::X]))?;
    let (sat, _) = xor_next_status(f)?;
    if !sat {
        return Ok(SatResult::unsat(Strategy::XorNext));
    }
    let witness = match sat_bounded(f, f.x_depth()? + 1, 1, work_limit) {
        Ok(Some(w)) => Some(w),
        Ok(None) => {
            return Err(Error::Invariant(format!(
                "XOR decomposition says {f} is satisfiable but no bounded model exists"
            )))
        }
        Err(Error::Resource(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SatResult::sat(Strategy::XorNext, witness))
}

pub fn decide_x_bounded(f: &Formula) -> Result<SatResult> {
    decide_x_bounded_with(f, DEFAULT_WORK_LIMIT)
}

/// Tries every assignment to the first `x_depth + 1` states with all
/// variables false afterwards.
pub fn decide_x_bounded_with(f: &Formula, work_limit: u64) -> Result<SatResult> {
    require_ops(f, OpSet::from_ops([TemporalOp::X]))?;
    let d = f.x_depth()?;
    let vars: Vec<String> = f.variables().into_iter().collect();
    let bits = vars.len() * (d + 1);
    if bits >= 64 || (1u64 << bits) > work_limit {
        return Err(Error::Resource(format!(
            "{} variables over {} states exceed the work limit",
            vars.len(),
            d + 1
        )));
    }
    for code in 0u64..1 << bits {
        let prefix: Vec<Assignment> = (0..=d)
            .map(|s| {
                vars.iter()
                    .enumerate()
                    .filter(|(v, _)| code >> (s * vars.len() + v) & 1 == 1)
                    .map(|(_, name)| name.clone())
                    .collect()
            })
            .collect();
        let lasso = Lasso::new(prefix, vec![Assignment::new()])?;
        if eval_at(&lasso, 0, f) {
            return Ok(SatResult::sat(Strategy::XBounded, Some(Witness::new(lasso, 0))));
        }
    }
    Ok(SatResult::unsat(Strategy::XBounded))
}

fn point(vars: impl IntoIterator<Item = String>) -> Lasso {
    Lasso::constant(vars.into_iter().collect())
}

/// Propositional satisfiability: affine analysis for linear bases,
/// truth-table enumeration otherwise.
pub fn decide_prop(f: &Formula, base: &Base) -> Result<SatResult> {
    if !f.is_propositional() {
        return Err(Error::FragmentViolation(
            "propositional procedure applied to a temporal formula".into(),
        ));
    }
    if let Some(g) = f.functions().into_iter().find(|g| !base.contains(g)) {
        return Err(Error::FragmentViolation(format!("`{}` is not in the base", g.name())));
    }
    let vars: Vec<String> = f.variables().into_iter().collect();
    if base_within(base, CloneTag::L) {
        let c = eval_at(&point([]), 0, f);
        let lasso = if c {
            Some(point([]))
        } else {
            vars.iter()
                .find(|v| eval_at(&point([(*v).clone()]), 0, f) != c)
                .map(|v| point([v.clone()]))
        };
        return Ok(match lasso {
            Some(l) => {
                let w = Witness::new(l, 0);
                check_witness(f, &w)?;
                SatResult::sat(Strategy::PropLinear, Some(w))
            }
            None => SatResult::unsat(Strategy::PropLinear),
        });
    }
    if vars.len() >= 32 {
        return Err(Error::Resource(format!("{} variables", vars.len())));
    }
    for code in 0u64..1 << vars.len() {
        let l = point(
            vars.iter()
                .enumerate()
                .filter(|(i, _)| code >> i & 1 == 1)
                .map(|(_, v)| v.clone()),
        );
        if eval_at(&l, 0, f) {
            return Ok(SatResult::sat(Strategy::PropEnum, Some(Witness::new(l, 0))));
        }
    }
    Ok(SatResult::unsat(Strategy::PropEnum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{named_base, BoolFn};
    use crate::formula::parse;

    fn spec(base: Base, ops: &str) -> FragmentSpec {
        FragmentSpec::new(base, OpSet::parse(ops).unwrap())
    }

    fn p(s: &str, base: &Base) -> Formula {
        parse(s, base).unwrap()
    }

    #[test]
    fn dispatcher_examples() {
        let or = Base::builtins(&["or"]).unwrap();
        let r = decide(&p("x U y", &or), &spec(or, "U")).unwrap();
        assert!(r.satisfiable);
        assert_eq!(r.method, Strategy::AllTrueWitness);

        let bf = named_base("BF").unwrap();
        let f = p("and(x, F not(x))", &bf);
        let r = decide(&f, &spec(bf, "F")).unwrap();
        assert!(r.satisfiable);
        assert!(r.witness.unwrap().verifies(&f));

        let e = named_base("E").unwrap();
        let r = decide(&p("x U false", &e), &spec(e, "U,S")).unwrap();
        assert!(!r.satisfiable);
        assert_eq!(r.method, Strategy::MonotoneRewrite);
    }

    #[test]
    fn dispatcher_rejects_outside_fragment() {
        let or = Base::builtins(&["or"]).unwrap();
        let f = p("not(x)", &Base::default());
        assert!(matches!(decide(&f, &spec(or, "U")), Err(Error::FragmentViolation(_))));
    }

    #[test]
    fn all_true_examples() {
        let b = Base::new([BoolFn::from_fn("xor3", 3, |a| a[0] ^ a[1] ^ a[2]).unwrap()]).unwrap();
        let r = decide_all_true(&p("F xor3(x, y, z)", &b)).unwrap();
        let w = r.witness.unwrap();
        assert_eq!(w.lasso.cycle()[0].len(), 3);
        let r = decide_all_true(&p("G and(x, y)", &b)).unwrap();
        assert!(r.satisfiable);
    }

    #[test]
    fn self_dual_examples() {
        let d = named_base("D").unwrap();
        let r = decide_self_dual(&p("not(x)", &d)).unwrap();
        assert!(r.witness.unwrap().lasso.cycle()[0].is_empty());
        let r = decide_self_dual(&p("x", &d)).unwrap();
        assert_eq!(r.witness.unwrap().lasso.cycle()[0].len(), 1);
        let f = p("G dmaj(x, y, z)", &d);
        let one = eval_at(&all_true(&f), 0, &f);
        let zero = eval_at(&all_false(), 0, &f);
        assert_ne!(one, zero);
        assert!(decide_self_dual(&f).unwrap().satisfiable);
    }

    #[test]
    fn constant_analysis_examples() {
        let n = named_base("N").unwrap();
        let s = |t: &str| constant_analysis_n(&p(t, &n)).unwrap();
        assert_eq!(s("not(true)"), ConstStatus::Const0);
        assert_eq!(s("x S false"), ConstStatus::Const0);
        assert_eq!(s("G not(x)"), ConstStatus::NoConstant);
        assert_eq!(s("true U x"), ConstStatus::NoConstant);
        assert_eq!(s("false U not(false)"), ConstStatus::Const1);
        assert!(!decide_n(&p("X not(true)", &n)).unwrap().satisfiable);
        assert!(constant_analysis_n(&p("and(x, y)", &Base::default())).is_err());
    }

    #[test]
    fn monotone_examples() {
        let e = named_base("M").unwrap();
        assert!(!decide_monotone(&p("and(x, y U false)", &e)).unwrap().satisfiable);
        let r = decide_monotone(&p("x U (false S y)", &e)).unwrap();
        assert!(r.satisfiable);
        assert_eq!(r.witness.unwrap().lasso, Lasso::from_names(&[], &[&["x", "y"]]).unwrap());
        assert!(decide_monotone(&p("G and(x, true)", &e)).unwrap().satisfiable);
        assert!(decide_monotone(&p("not(x)", &Base::default())).is_err());
    }

    #[test]
    fn xor_next_examples() {
        let l = named_base("L").unwrap();
        let r = |t: &str| decide_xor_next(&p(t, &l)).unwrap();
        assert!(r("xor(x, true)").satisfiable);
        assert!(r("xor(xor(X x, X x), true)").satisfiable);
        assert!(!r("xor(X x, X x)").satisfiable);
        assert_eq!(xor_next_status(&p("xor(X true, X false)", &l)).unwrap(), (true, true));
        assert!(decide_xor_next(&p("F x", &l)).is_err());
    }

    #[test]
    fn x_bounded_examples() {
        let bf = named_base("BF").unwrap();
        let r = decide_x_bounded(&p("and(x, X not(x))", &bf)).unwrap();
        let w = r.witness.unwrap();
        assert_eq!(w.lasso, Lasso::from_names(&[&["x"], &[]], &[&[]]).unwrap());
        assert!(!decide_x_bounded(&p("and(x, not(x))", &bf)).unwrap().satisfiable);
        let w = decide_x_bounded(&p("X X y", &bf)).unwrap().witness.unwrap();
        assert_eq!(w.lasso, Lasso::from_names(&[&[], &[], &["y"]], &[&[]]).unwrap());
    }

    #[test]
    fn prop_examples() {
        let l = named_base("L").unwrap();
        assert!(decide_prop(&p("xor(xor(x, y), true)", &l), &l).unwrap().satisfiable);
        assert!(!decide_prop(&p("xor(x, x)", &l), &l).unwrap().satisfiable);
        let s1 = named_base("S1").unwrap();
        let r = decide_prop(&p("andnot(x, x)", &s1), &s1).unwrap();
        assert!(!r.satisfiable);
        assert_eq!(r.method, Strategy::PropEnum);
    }
}
