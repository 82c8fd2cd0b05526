use std::sync::Arc;

use ltlsat_core::boolfn::{base_within, named_base, named_bases, BoolFn, CloneTag};
use ltlsat_core::deciders::{constant_analysis_n, monotone_rewrite_trace, ConstStatus};
use ltlsat_core::formula::{all_lassos, parse, sat_bounded, Assignment};
use ltlsat_core::harness::{random_formula, standard_base};
use ltlsat_core::reductions::{expand_to_builtin, qbf_to_since, QbfInstance};
use ltlsat_core::{
    classify, decide_tableau, eval_at, Base, Formula, FragmentSpec, Lasso, OpSet, TemporalOp,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 2] = ["x", "y"];

fn formula(seed: u64, base: &Base, ops: OpSet, max: usize) -> Formula {
    random_formula(&mut ChaCha8Rng::seed_from_u64(seed), base, ops, &VARS, max)
}

fn state() -> impl Strategy<Value = Assignment> {
    (any::<bool>(), any::<bool>()).prop_map(|(x, y)| {
        let mut s = Assignment::new();
        if x {
            s.insert("x".into());
        }
        if y {
            s.insert("y".into());
        }
        s
    })
}

fn lasso() -> impl Strategy<Value = Lasso> {
    (
        prop::collection::vec(state(), 0..4),
        prop::collection::vec(state(), 1..4),
    )
        .prop_map(|(p, c)| Lasso::new(p, c).unwrap())
}

fn boolfn() -> impl Strategy<Value = BoolFn> {
    (0usize..=3)
        .prop_flat_map(|a| (Just(a), 0u64..1 << (1 << a)))
        .prop_map(|(a, t)| BoolFn::new("f", a, t).unwrap())
}

fn all_vars() -> Vec<String> {
    VARS.iter().map(|v| v.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_roundtrip(seed in any::<u64>()) {
        let f = formula(seed, &standard_base(), OpSet::ALL, 12);
        let back = parse(&f.to_string(), &Base::default()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn unrolling_preserves_evaluation(seed in any::<u64>(), l in lasso(), k in 1usize..3) {
        let f = formula(seed, &standard_base(), OpSet::ALL, 10);
        let u = l.unrolled(k);
        for i in 0..l.len() + 2 {
            prop_assert_eq!(eval_at(&l, i, &f), eval_at(&u, i, &f));
        }
    }

    #[test]
    fn future_abbreviations(seed in any::<u64>(), l in lasso()) {
        let a = formula(seed, &standard_base(), OpSet::ALL, 6);
        let f = Formula::eventually(a.clone());
        let fu = Formula::until(Formula::tt(), a.clone());
        let g = Formula::globally(a.clone());
        let nfn = Formula::not(Formula::eventually(Formula::not(a)));
        for i in 0..l.len() {
            prop_assert_eq!(eval_at(&l, i, &f), eval_at(&l, i, &fu));
            prop_assert_eq!(eval_at(&l, i, &g), eval_at(&l, i, &nfn));
        }
    }

    #[test]
    fn since_formulas_ignore_stuttering(seed in any::<u64>(), l in lasso(), j in 0usize..6) {
        let f = formula(seed, &standard_base(), OpSet::from_ops([TemporalOp::S]), 10);
        let u = l.unrolled(2);
        let j = j % u.prefix().len().max(1);
        prop_assume!(j < u.prefix().len());
        let mut prefix = u.prefix().to_vec();
        prefix.insert(j, prefix[j].clone());
        let st = Lasso::new(prefix, u.cycle().to_vec()).unwrap();
        for i in 0..u.len() {
            let shifted = if i < j { i } else { i + 1 };
            prop_assert_eq!(eval_at(&u, i, &f), eval_at(&st, shifted, &f));
        }
    }

    #[test]
    fn next_only_depends_on_depth(seed in any::<u64>(), l in lasso(), tail in state()) {
        let f = formula(seed, &standard_base(), OpSet::from_ops([TemporalOp::X]), 10);
        let d = f.x_depth().unwrap();
        let prefix: Vec<Assignment> = (0..=d).map(|i| l.state(i).clone()).collect();
        let cut = Lasso::new(prefix, vec![tail]).unwrap();
        prop_assert_eq!(eval_at(&l, 0, &f), eval_at(&cut, 0, &f));
    }

    #[test]
    fn tableau_is_alpha_invariant(seed in any::<u64>()) {
        let f = formula(seed, &standard_base(), OpSet::ALL, 9);
        let g = f.rename_vars(&|v| if v == "x" { "y".into() } else { "x".into() });
        prop_assert_eq!(
            decide_tableau(&f).unwrap().satisfiable,
            decide_tableau(&g).unwrap().satisfiable
        );
    }

    #[test]
    fn tableau_agrees_with_bounded_search(seed in any::<u64>()) {
        let f = formula(seed, &standard_base(), OpSet::ALL, 8);
        let bounded = sat_bounded(&f, 4, 3, 50_000_000).unwrap();
        let r = decide_tableau(&f).unwrap();
        if bounded.is_some() {
            prop_assert!(r.satisfiable, "{}", f);
        }
        if let Some(w) = r.witness {
            prop_assert!(w.verifies(&f));
        }
    }

    #[test]
    fn separating_functions_fix_zero(g in boolfn()) {
        if g.is_one_separating() {
            prop_assert!(!g.row(0));
        }
        if g.depends_on_at_most_one() {
            prop_assert!(g.is_linear());
        }
    }

    #[test]
    fn base_within_is_monotone(gs in prop::collection::vec(boolfn(), 1..4), drop in any::<prop::sample::Index>()) {
        let named: Vec<BoolFn> = gs
            .iter()
            .enumerate()
            .map(|(i, g)| BoolFn::new(format!("f{i}"), g.arity(), g.table()).unwrap())
            .collect();
        let full = Base::new(named.clone()).unwrap();
        let mut fewer = named;
        fewer.remove(drop.index(fewer.len()));
        let small = Base::new(fewer).unwrap();
        for tag in [CloneTag::R1, CloneTag::D, CloneTag::M, CloneTag::N, CloneTag::L] {
            if base_within(&full, tag) {
                prop_assert!(base_within(&small, tag));
            }
        }
    }

    #[test]
    fn n_constants_are_sound(seed in any::<u64>()) {
        let n = named_base("N").unwrap();
        let f = formula(seed, &n, OpSet::ALL, 8);
        let vars = all_vars();
        match constant_analysis_n(&f).unwrap() {
            ConstStatus::NoConstant => {
                prop_assert!(decide_tableau(&expand_to_builtin(&f)).unwrap().satisfiable);
                let neg = Formula::not(expand_to_builtin(&f));
                prop_assert!(decide_tableau(&neg).unwrap().satisfiable);
            }
            c => {
                let v = c.value().unwrap();
                for l in all_lassos(&vars, 3, 2) {
                    for i in 0..l.len() {
                        prop_assert_eq!(eval_at(&l, i, &f), v);
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_rewrites_preserve_verdict(seed in any::<u64>()) {
        let m = named_base("M").unwrap();
        let f = formula(seed, &m, OpSet::ALL, 9);
        let expect = decide_tableau(&f).unwrap().satisfiable;
        for step in monotone_rewrite_trace(&f) {
            prop_assert_eq!(decide_tableau(&step).unwrap().satisfiable, expect, "{}", step);
        }
    }

    #[test]
    fn self_dual_formulas_split_constant_models(seed in any::<u64>()) {
        let d = named_base("D").unwrap();
        let f = formula(seed, &d, OpSet::ALL, 10);
        let all_true = Lasso::constant(f.variables());
        let all_false = Lasso::constant(Assignment::new());
        prop_assert_ne!(eval_at(&all_true, 0, &f), eval_at(&all_false, 0, &f));
    }

    #[test]
    fn since_encoding_ignores_stuttering(seed in any::<u64>(), j in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = Base::builtins(&["and", "or", "not"]).unwrap();
        let vars = ["p", "q"];
        let m = random_formula(&mut rng, &base, OpSet::EMPTY, &vars, 5);
        let prefix = vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let q = if seed >> i & 1 == 1 {
                    ltlsat_core::reductions::Quantifier::Forall
                } else {
                    ltlsat_core::reductions::Quantifier::Exists
                };
                (q, v.to_string())
            })
            .collect();
        let q = QbfInstance::new(prefix, m).unwrap();
        let f = qbf_to_since(&q).formula;
        let r = decide_tableau(&f).unwrap();
        prop_assume!(r.satisfiable);
        let w = r.witness.unwrap();
        let u = w.lasso.unrolled(1);
        let j = j % u.prefix().len().max(1);
        prop_assume!(j < u.prefix().len());
        let mut states = u.prefix().to_vec();
        states.insert(j, states[j].clone());
        let st = Lasso::new(states, u.cycle().to_vec()).unwrap();
        let shifted = if w.index < j { w.index } else { w.index + 1 };
        prop_assert!(eval_at(&st, shifted, &f));
    }
}

#[test]
fn enlarging_operators_never_lowers_the_class() {
    for (name, base) in named_bases() {
        for m in OpSet::all_subsets() {
            for op in TemporalOp::ALL {
                let mut bigger = m;
                bigger.insert(op);
                let a = classify(&FragmentSpec::new(base.clone(), m)).class.rank();
                let b = classify(&FragmentSpec::new(base.clone(), bigger)).class.rank();
                if let (Some(a), Some(b)) = (a, b) {
                    assert!(a <= b, "{name}: {m} -> {bigger}");
                }
            }
        }
    }
}

#[test]
fn classification_ignores_function_names() {
    for (_, base) in named_bases() {
        let renamed = Base::from_arcs(base.functions().iter().enumerate().map(|(i, g)| {
            Arc::new(BoolFn::new(format!("g{i}"), g.arity(), g.table()).unwrap())
        }))
        .unwrap();
        for m in OpSet::all_subsets() {
            assert_eq!(
                classify(&FragmentSpec::new(base.clone(), m)),
                classify(&FragmentSpec::new(renamed.clone(), m))
            );
        }
    }
}
