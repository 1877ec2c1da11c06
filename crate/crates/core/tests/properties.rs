//! Randomized law checks. Each case draws a seed and builds its instance
//! from the seeded corpus generators, so failures shrink to a seed.

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use toposlos_core::cat::{enumerate_nat_trans, enumerate_presheaves, product_presheaf, FinCategory, Presheaf};
use toposlos_core::corpus::{self, context, corpus_sig, random_ctx_morphism, random_formula, FormulaConfig, ModelPool};
use toposlos_core::filter::{check_cocone, filtered_product_presheaf, Filter};
use toposlos_core::fol::CtxMorphism;
use toposlos_core::formula::{check_substitution_lemma, interpret_expr, Expr, Formula, QuantifierRegistry, CONJ, DISJ};
use toposlos_core::laws::{check_adjunctions, check_heyting_laws};
use toposlos_core::los::check_basic;
use toposlos_core::modal::{eval_box, eval_diamond, eval_nabla, Coalgebra, FElem, SetFunctor, Subset};
use toposlos_core::oracle::{self, kripke_box, kripke_diamond, kripke_nabla, successor_relation};

fn presheaves(base: FinCategory, max: usize) -> Vec<Arc<Presheaf>> {
    enumerate_presheaves(&Arc::new(base), 0, max).unwrap()
}

fn labels(n: usize) -> Vec<String> {
    corpus::index_labels(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heyting_laws_on_random_graphs(k in 0usize..910) {
        let ps = presheaves(FinCategory::graph(), 3);
        let r = check_heyting_laws(&ps[k % ps.len()]).unwrap();
        prop_assert!(r.passed(), "{:?}", r.counterexamples);
    }

    #[test]
    fn adjunctions_on_random_maps(seed in any::<u64>()) {
        let mut rng = corpus::rng(seed);
        let base = corpus::bases()[rng.gen_range(0..3)].clone();
        let ps = enumerate_presheaves(&base, 1, 2).unwrap();
        let x = &ps[rng.gen_range(0..ps.len())];
        let y = &ps[rng.gen_range(0..ps.len())];
        let maps = enumerate_nat_trans(x, y).unwrap();
        prop_assume!(!maps.is_empty());
        let t = &maps[rng.gen_range(0..maps.len())];
        prop_assert!(check_adjunctions(t).unwrap().passed());
    }

    #[test]
    fn filter_equivalence_is_an_equivalence(core in 1u32..8, seed in any::<u64>()) {
        let l = labels(3);
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        let f = Filter::principal_at(&l, core).unwrap();
        let mut rng = corpus::rng(seed);
        let tuples: Vec<Vec<usize>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(0..2)).collect()).collect();
        for a in &tuples {
            prop_assert!(f.equivalent(a, a));
            for b in &tuples {
                prop_assert_eq!(f.equivalent(a, b), f.equivalent(b, a));
                for c in &tuples {
                    if f.equivalent(a, b) && f.equivalent(b, c) {
                        prop_assert!(f.equivalent(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn filtered_products_commute_and_match_the_pairwise_classes(seed in any::<u64>(), core in 1u32..8) {
        let mut rng = corpus::rng(seed);
        let base = corpus::bases()[rng.gen_range(0..3)].clone();
        let ps = enumerate_presheaves(&base, 1, 2).unwrap();
        let fam: Vec<Arc<Presheaf>> = (0..3).map(|_| ps[rng.gen_range(0..ps.len())].clone()).collect();
        let l = labels(3);
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        let f = Filter::principal_at(&l, core).unwrap();
        let fp = filtered_product_presheaf(&fam, &f).unwrap();
        prop_assert!(check_cocone(&fp).unwrap().is_ok());
        let counts = oracle::filtered_class_counts(&fam, &f).unwrap();
        for (b, c) in counts.into_iter().enumerate() {
            prop_assert_eq!(fp.num_classes(b), c);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpretation_matches_tarski_on_sets(seed in any::<u64>()) {
        let mut rng = corpus::rng(seed);
        let pool = ModelPool::new(Arc::new(FinCategory::terminal()), corpus_sig(), 3).unwrap();
        let m = pool.model(&mut rng).unwrap();
        let ctx = context(rng.gen_range(0..3));
        let e = random_formula(&mut rng, &ctx, 3, &FormulaConfig::default());
        let reg = QuantifierRegistry::standard();
        let lib = interpret_expr(&m, &reg, &ctx, &e).unwrap();
        prop_assert_eq!(lib, oracle::tarski_sub(&m, &reg, &ctx, &e).unwrap());
    }

    #[test]
    fn conj_and_disj_agree_with_the_connectives(seed in any::<u64>()) {
        let mut rng = corpus::rng(seed);
        let base = corpus::bases()[rng.gen_range(0..3)].clone();
        let pool = ModelPool::new(base, corpus_sig(), 2).unwrap();
        let m = pool.model(&mut rng).unwrap();
        let ctx = context(rng.gen_range(0..3));
        let cfg = FormulaConfig { max_vars: 2, ..Default::default() };
        let a = random_formula(&mut rng, &ctx, 2, &cfg);
        let b = random_formula(&mut rng, &ctx, 2, &cfg);
        let reg = QuantifierRegistry::standard();
        let id = CtxMorphism::identity(&ctx);
        let ev = |e: &Expr| interpret_expr(&m, &reg, &ctx, e).unwrap();
        prop_assert_eq!(ev(&Expr::quant(CONJ, id.clone(), vec![a.clone(), b.clone()])), ev(&Expr::and(a.clone(), b.clone())));
        prop_assert_eq!(ev(&Expr::quant(DISJ, id, vec![a.clone(), b.clone()])), ev(&Expr::or(a, b)));
    }

    #[test]
    fn basic_formulas_are_interpretable_in_products(seed in any::<u64>()) {
        let mut rng = corpus::rng(seed);
        let base = corpus::bases()[rng.gen_range(0..2)].clone();
        let pool = ModelPool::new(base, corpus_sig(), 2).unwrap();
        let fam: Vec<_> = (0..rng.gen_range(1..=3)).map(|_| pool.model(&mut rng).unwrap()).collect();
        let ctx = context(2);
        let cfg = FormulaConfig { max_depth: 0, ..Default::default() };
        let Expr::Atom(a) = random_formula(&mut rng, &ctx, 0, &cfg) else { return Ok(()) };
        prop_assert!(check_basic(&fam, &ctx, &a).unwrap().passed());
    }
}

#[test]
fn substitution_lemma_on_500_random_triples() {
    let mut rng = corpus::rng(2024);
    let pools: Vec<ModelPool> =
        corpus::bases().into_iter().map(|b| ModelPool::new(b, corpus_sig(), 2).unwrap()).collect();
    let reg = QuantifierRegistry::standard();
    let cfg = FormulaConfig::default();
    for k in 0..500 {
        let m = pools[k % 3].model(&mut rng).unwrap();
        let src = context(rng.gen_range(0..3));
        let dst = context(rng.gen_range(0..3));
        let g = random_ctx_morphism(&mut rng, &src, &dst, true);
        let phi = Formula::new(dst.clone(), random_formula(&mut rng, &dst, 3, &cfg));
        assert!(check_substitution_lemma(&m, &reg, &g, &phi).unwrap(), "case {k}: {phi} along {}", g.display());
    }
}

#[test]
fn modal_operators_match_the_relational_oracle() {
    for n in 0..=3 {
        for c in toposlos_core::modal::enumerate_coalgebras(&SetFunctor::Powerset, n).unwrap() {
            let succ = successor_relation(&c).unwrap();
            for k in 0..1usize << n {
                let a: Subset = (0..n).filter(|j| k >> j & 1 == 1).collect();
                assert_eq!(eval_box(&c, &a).unwrap(), kripke_box(&succ, &a));
                assert_eq!(eval_diamond(&c, &a).unwrap(), kripke_diamond(&succ, &a));
                let args: BTreeSet<Subset> = [a.clone(), (0..n).filter(|x| !a.contains(x)).collect()].into();
                assert_eq!(eval_nabla(&c, &args).unwrap(), kripke_nabla(&succ, &args));
            }
        }
    }
    let k = Coalgebra::kripke(&["p"], &["s0", "s1"], &[&[1], &[0, 1]], &[&["p"], &[]]).unwrap();
    assert!(matches!(k.structure[0], FElem::Kripke(..)));
    let succ = successor_relation(&k).unwrap();
    assert_eq!(eval_box(&k, &[1].into()).unwrap(), kripke_box(&succ, &[1].into()));
}

#[test]
fn plain_products_have_the_expected_sizes() {
    let base = Arc::new(FinCategory::graph());
    let ps = enumerate_presheaves(&base, 1, 2).unwrap();
    for a in ps.iter().take(10) {
        for b in ps.iter().take(10) {
            let p = product_presheaf(&base, &[a.clone(), b.clone()]).unwrap();
            for o in 0..2 {
                assert_eq!(p.presheaf.size(o), a.size(o) * b.size(o));
            }
        }
    }
}
