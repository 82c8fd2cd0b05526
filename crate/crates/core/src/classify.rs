//! Complexity classification of satisfiability fragments.
//!
//! A fragment is a base `B` of Boolean functions together with a set `M` of
//! temporal operators. The classifier never computes the clone generated by
//! `B`; it tests the base against the five property clones in a fixed order
//! and falls through to the hard case by elimination.

use std::fmt;

use serde::Serialize;

use crate::boolfn::{base_within, Base, CloneTag};
use crate::error::{Error, Result};
use crate::formula::{Formula, OpSet, TemporalOp};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentSpec {
    pub base: Base,
    pub temporal: OpSet,
}

impl FragmentSpec {
    pub fn new(base: Base, temporal: OpSet) -> Self {
        FragmentSpec { base, temporal }
    }

    /// Checks that every function and temporal operator in `f` belongs to the fragment.
    pub fn admits(&self, f: &Formula) -> Result<()> {
        for g in f.functions() {
            if !self.base.contains(&g) {
                return Err(Error::FragmentViolation(format!(
                    "function `{}` ({}) is not in the base",
                    g.name(),
                    g.table_string()
                )));
            }
        }
        let extra: Vec<TemporalOp> = f
            .temporal_ops()
            .iter()
            .filter(|op| !self.temporal.contains(*op))
            .collect();
        if !extra.is_empty() {
            let names: Vec<String> = extra.iter().map(|op| op.symbol().to_string()).collect();
            return Err(Error::FragmentViolation(format!(
                "temporal operator(s) {} not allowed",
                names.join(",")
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Class {
    Trivial,
    PTime,
    NPComplete,
    PSPACEComplete,
    Open,
}

impl Class {
    /// Position in the hardness order; `None` for `Open`.
    pub fn rank(self) -> Option<u8> {
        match self {
            Class::Trivial => Some(0),
            Class::PTime => Some(1),
            Class::NPComplete => Some(2),
            Class::PSPACEComplete => Some(3),
            Class::Open => None,
        }
    }

    pub fn parse(s: &str) -> Result<Class> {
        Ok(match s {
            "Trivial" => Class::Trivial,
            "PTime" => Class::PTime,
            "NPComplete" => Class::NPComplete,
            "PSPACEComplete" => Class::PSPACEComplete,
            "Open" => Class::Open,
            other => return Err(Error::Argument(format!("unknown class `{other}`"))),
        })
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Strategy {
    AllTrueWitness,
    SelfDualWitness,
    ConstantAnalysisN,
    MonotoneRewrite,
    XorNext,
    PropLinear,
    PropEnum,
    XBounded,
    Tableau,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub class: Class,
    pub strategy: Strategy,
    pub citation: &'static str,
}

impl Verdict {
    fn new(class: Class, strategy: Strategy, citation: &'static str) -> Self {
        Verdict {
            class,
            strategy,
            citation,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} via {} ({})", self.class, self.strategy, self.citation)
    }
}

fn within_x(m: OpSet) -> bool {
    m.is_subset(OpSet::from_ops([TemporalOp::X]))
}

fn within_fg(m: OpSet) -> bool {
    m.is_subset(OpSet::from_ops([TemporalOp::F, TemporalOp::G]))
}

/// First matching rule wins.
pub fn classify(spec: &FragmentSpec) -> Verdict {
    let (b, m) = (&spec.base, spec.temporal);
    if base_within(b, CloneTag::R1) {
        return Verdict::new(
            Class::Trivial,
            Strategy::AllTrueWitness,
            "1-reproducing base: every formula holds where all variables are true",
        );
    }
    if base_within(b, CloneTag::D) {
        return Verdict::new(
            Class::Trivial,
            Strategy::SelfDualWitness,
            "self-dual base: the all-true or the all-false structure satisfies every formula",
        );
    }
    if base_within(b, CloneTag::N) {
        return Verdict::new(
            Class::PTime,
            Strategy::ConstantAnalysisN,
            "base in N: satisfiable iff not equivalent to the constant 0",
        );
    }
    if base_within(b, CloneTag::M) {
        return Verdict::new(
            Class::PTime,
            Strategy::MonotoneRewrite,
            "monotone base: constant-0 propagation to a fixpoint",
        );
    }
    if base_within(b, CloneTag::L) {
        return if m.is_empty() {
            Verdict::new(
                Class::PTime,
                Strategy::PropLinear,
                "linear base, no temporal operators: affine propositional satisfiability",
            )
        } else if within_x(m) {
            Verdict::new(
                Class::PTime,
                Strategy::XorNext,
                "linear base with X only: XOR decomposition over X-subterms",
            )
        } else {
            Verdict::new(
                Class::Open,
                Strategy::Tableau,
                "linear base with F, G, U or S: complexity is an open problem; decided by tableau",
            )
        };
    }
    // Elimination: every remaining clone contains S1.
    if m.is_empty() {
        Verdict::new(
            Class::NPComplete,
            Strategy::PropEnum,
            "propositional satisfiability with x & !y expressible",
        )
    } else if within_x(m) {
        Verdict::new(
            Class::NPComplete,
            Strategy::XBounded,
            "X only: models of depth d normalise to d+1 states",
        )
    } else if within_fg(m) {
        Verdict::new(
            Class::NPComplete,
            Strategy::Tableau,
            "F and G only: polynomial-size model property",
        )
    } else {
        Verdict::new(
            Class::PSPACEComplete,
            Strategy::Tableau,
            "x & !y expressible with U, S, or X combined with F/G",
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{named_base, BoolFn};

    fn spec(base: &str, ops: &str) -> FragmentSpec {
        FragmentSpec::new(named_base(base).unwrap(), OpSet::parse(ops).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(classify(&spec("BF", "F")).class, Class::NPComplete);
        assert_eq!(classify(&spec("S1", "U")).class, Class::PSPACEComplete);
        assert_eq!(classify(&spec("L", "F")).class, Class::Open);
        let or = Base::builtins(&["or"]).unwrap();
        let v = classify(&FragmentSpec::new(or, OpSet::parse("U,S,X").unwrap()));
        assert_eq!(v.class, Class::Trivial);
        let not = Base::builtins(&["not"]).unwrap();
        let v = classify(&FragmentSpec::new(not, OpSet::parse("F,X").unwrap()));
        assert_eq!((v.class, v.strategy), (Class::Trivial, Strategy::SelfDualWitness));
        let n = Base::builtins(&["not", "true"]).unwrap();
        let v = classify(&FragmentSpec::new(n, OpSet::parse("F,X").unwrap()));
        assert_eq!((v.class, v.strategy), (Class::PTime, Strategy::ConstantAnalysisN));
    }

    #[test]
    fn empty_base_is_trivial() {
        assert_eq!(classify(&spec("I2", "U,S")).class, Class::Trivial);
    }

    #[test]
    fn hard_strategies() {
        let s = |ops| classify(&spec("S1", ops));
        assert_eq!(s("-").strategy, Strategy::PropEnum);
        assert_eq!(s("X").strategy, Strategy::XBounded);
        assert_eq!(s("F,G").strategy, Strategy::Tableau);
        assert_eq!(s("F,X").class, Class::PSPACEComplete);
    }

    #[test]
    fn admits_checks_functions_by_table() {
        let sp = spec("S1", "F");
        let g = named_base("S1").unwrap().functions()[0].clone();
        let ok = Formula::eventually(Formula::Apply(g, vec![Formula::var("x"), Formula::var("y")]));
        assert!(sp.admits(&ok).is_ok());
        let bad = Formula::next(Formula::var("x"));
        assert!(matches!(sp.admits(&bad), Err(Error::FragmentViolation(_))));
        let impostor = std::sync::Arc::new(BoolFn::from_table_str("andnot", 2, "0001").unwrap());
        let bad = Formula::Apply(impostor, vec![Formula::var("x"), Formula::var("y")]);
        assert!(matches!(sp.admits(&bad), Err(Error::FragmentViolation(_))));
    }
}
