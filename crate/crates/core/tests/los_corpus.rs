//! End-to-end transfer checks on the seeded corpus.

use toposlos_core::corpus::{bases, index_labels, los_cases, relational_sig, rng, ModelPool};
use toposlos_core::filter::Filter;
use toposlos_core::fol::{Context, Term};
use toposlos_core::formula::Atom;
use toposlos_core::los::{
    check_finiteness, los_sentence_corollary, los_verify, proof_steps, FinitenessOptions, LosInstance, LosOptions,
};
use toposlos_core::sub::generators;

fn labels(n: usize) -> Vec<String> {
    index_labels(n)
}

#[test]
fn transfer_holds_for_every_ultrafilter() {
    let cases = los_cases(11, 24, 3, false).unwrap();
    for (k, c) in cases.iter().enumerate() {
        let l = labels(c.family.len());
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        for f in Filter::ultrafilters(&l).unwrap() {
            let inst = LosInstance::new(c.family.clone(), f, c.formula.clone());
            let r = los_verify(&inst, LosOptions { force: true, check_hypotheses: false }).unwrap();
            assert!(r.result.passed(), "case {k}: {}", c.formula);
            assert!(r.rows.iter().all(|row| row.lhs == row.rhs), "case {k}");
            for s in proof_steps(&inst).unwrap() {
                assert!(!s.failed(), "case {k} {}: {:?}", s.condition, s.counterexamples.first());
            }
            if c.formula.ctx.is_empty() {
                assert!(los_sentence_corollary(&inst).unwrap().passed(), "case {k}");
            }
        }
    }
}

#[test]
fn positive_steps_hold_for_every_proper_filter() {
    let cases = los_cases(23, 16, 2, true).unwrap();
    for (k, c) in cases.iter().enumerate() {
        let l = labels(c.family.len());
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        for f in Filter::all_proper(&l).unwrap() {
            let inst = LosInstance::new(c.family.clone(), f, c.formula.clone());
            for s in proof_steps(&inst).unwrap() {
                assert!(!s.failed(), "case {k} {}: {:?}", s.condition, s.counterexamples.first());
            }
        }
    }
}

#[test]
fn hypotheses_gate_the_verdict() {
    let cases = los_cases(5, 6, 2, false).unwrap();
    for c in &cases {
        let l = labels(c.family.len());
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        let f = Filter::ultrafilters(&l).unwrap().remove(0);
        let inst = LosInstance::new(c.family.clone(), f, c.formula.clone());
        match los_verify(&inst, LosOptions { force: false, check_hypotheses: true }) {
            Ok(r) => {
                assert!(!r.forced);
                assert!(r.hypotheses.iter().all(|h| !h.failed()));
            }
            Err(e) => assert_eq!(e.code(), "HypothesesNotMet", "{e}"),
        }
    }
}

/// Relational atoms without constants always find a witness on the
/// terminal and chain bases; on the graph base `r(x)` does.
#[test]
fn relational_atoms_have_finiteness_witnesses() {
    let x = Context::new(&[("x", "s")]).unwrap();
    let xy = Context::new(&[("x", "s"), ("y", "s")]).unwrap();
    let unary = (x.clone(), Atom::Rel("r".into(), vec![Term::Var(0)]));
    let binary = (xy.clone(), Atom::Rel("e".into(), vec![Term::Var(1), Term::Var(0)]));
    let eq = (xy, Atom::Eq(Term::Var(0), Term::Var(1)));
    let mut r = rng(5);
    for base in bases() {
        let atoms =
            if base.num_objects() == 2 { vec![unary.clone()] } else { vec![unary.clone(), binary.clone(), eq.clone()] };
        let pool = ModelPool::new(base.clone(), relational_sig(), 2).unwrap();
        for _ in 0..6 {
            let m = pool.model(&mut r).unwrap();
            for (ctx, atom) in &atoms {
                let g = generators(&m.context_product(ctx).unwrap().presheaf).unwrap();
                for i in 0..g.len() {
                    let d = g.member_sub(i);
                    let rep = check_finiteness(&m, ctx, atom, &d, &FinitenessOptions::default()).unwrap();
                    assert!(rep.passed(), "{atom:?} at {d}: {rep:?}");
                }
            }
        }
    }
}
