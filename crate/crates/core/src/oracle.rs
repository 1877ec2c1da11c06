//! Brute-force reference implementations.
//!
//! Each function here recomputes something the main modules compute by a
//! direct formula, using the definition instead: joins over all subobjects,
//! Tarski-style satisfaction, relational Kripke semantics, pairwise class
//! computation. They are exponential and only meant for small instances.

use std::collections::BTreeSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::bound;
use crate::cat::{NatTrans, ObjId, Presheaf};
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::fol::{Context, SigmaStructure};
use crate::formula::{Atom, Expr, QuantKind, QuantifierRegistry};
use crate::modal::{Coalgebra, FElem, Subset};
use crate::sub::{enumerate_sub, SubPresheaf};

fn join_all<'a>(amb: &Arc<Presheaf>, it: impl Iterator<Item = &'a SubPresheaf>) -> SubPresheaf {
    let mut parts: Vec<FixedBitSet> =
        (0..amb.base().num_objects()).map(|b| FixedBitSet::with_capacity(amb.size(b))).collect();
    for s in it {
        for (p, q) in parts.iter_mut().zip(s.parts()) {
            p.union_with(q);
        }
    }
    SubPresheaf::new(amb.clone(), parts).expect("unions of subobjects are subobjects")
}

/// `a → b` as the join of every `c` with `a ∧ c ⪯ b`.
pub fn implies_by_join(a: &SubPresheaf, b: &SubPresheaf) -> Result<SubPresheaf> {
    if a.ambient() != b.ambient() {
        return Err(Error::AmbientMismatch("implication across ambients".into()));
    }
    let amb = a.ambient().clone();
    let all = enumerate_sub(&amb)?;
    let ok: Vec<&SubPresheaf> = all
        .iter()
        .filter(|c| {
            let meet: Vec<FixedBitSet> = a.parts().iter().zip(c.parts()).map(|(x, y)| x & y).collect();
            meet.iter().zip(b.parts()).all(|(m, q)| m.is_subset(q))
        })
        .collect();
    Ok(join_all(&amb, ok.into_iter()))
}

/// `¬a` as the join of every `c` disjoint from `a`.
pub fn neg_by_join(a: &SubPresheaf) -> Result<SubPresheaf> {
    implies_by_join(a, &SubPresheaf::bottom(a.ambient()))
}

/// `∀t(a)` as the join of every `b` with `t*(b) ⪯ a`.
pub fn forall_by_join(t: &NatTrans, a: &SubPresheaf) -> Result<SubPresheaf> {
    let ys = enumerate_sub(t.dst())?;
    let ok: Vec<&SubPresheaf> = ys.iter().filter(|b| preimage_leq(t, b, a)).collect();
    Ok(join_all(t.dst(), ok.into_iter()))
}

fn preimage_leq(t: &NatTrans, b: &SubPresheaf, a: &SubPresheaf) -> bool {
    (0..t.src().base().num_objects())
        .all(|o| (0..t.src().size(o)).all(|x| !b.contains(o, t.apply(o, x)) || a.contains(o, x)))
}

/// `∃t(a)` as the least subobject containing the elementwise image.
pub fn exists_by_image(t: &NatTrans, a: &SubPresheaf) -> Result<SubPresheaf> {
    let elems: Vec<(ObjId, usize)> = a.elements().into_iter().map(|(b, x)| (b, t.apply(b, x))).collect();
    Ok(SubPresheaf::generated_by(t.dst(), &elems))
}

/// `t*(b)` elementwise.
pub fn pullback_elementwise(t: &NatTrans, b: &SubPresheaf) -> Result<SubPresheaf> {
    let src = t.src();
    let parts = (0..src.base().num_objects())
        .map(|o| {
            let mut p = FixedBitSet::with_capacity(src.size(o));
            for x in 0..src.size(o) {
                p.set(x, b.contains(o, t.apply(o, x)));
            }
            p
        })
        .collect();
    SubPresheaf::new(src.clone(), parts)
}

// ---------------------------------------------------------------------------
// Tarski semantics over set-like bases

/// Classical satisfaction of `expr` at the context tuple `env` (object `b`
/// of a base with identities only). Quantifiers along a context morphism
/// `γ` range over the source tuples mapped to `env` by `γ`.
pub fn tarski_holds(
    m: &SigmaStructure,
    reg: &QuantifierRegistry,
    ctx: &Context,
    expr: &Expr,
    b: ObjId,
    env: &[usize],
) -> Result<bool> {
    if !m.base().is_set_like() {
        return Err(Error::UnsupportedCarrier("Tarski semantics needs a base with identities only".into()));
    }
    holds(m, reg, ctx, expr, b, env)
}

fn source_tuples(m: &SigmaStructure, ctx: &Context, b: ObjId) -> Result<Vec<Vec<usize>>> {
    let p = m.context_product(ctx)?;
    bound::guard("Tarski source tuples", p.presheaf.size(b) as f64)?;
    Ok((0..p.presheaf.size(b)).map(|x| p.decode(b, x)).collect())
}

fn holds(
    m: &SigmaStructure,
    reg: &QuantifierRegistry,
    ctx: &Context,
    expr: &Expr,
    b: ObjId,
    env: &[usize],
) -> Result<bool> {
    Ok(match expr {
        Expr::Top => true,
        Expr::Bot => false,
        Expr::Atom(Atom::Eq(s, t)) => m.eval_term(b, env, s) == m.eval_term(b, env, t),
        Expr::Atom(Atom::Rel(r, ts)) => {
            let vals: Vec<usize> = ts.iter().map(|t| m.eval_term(b, env, t)).collect();
            let dom = m.sorts_product(m.sig().relation(r)?)?;
            m.relation(r)?.contains(b, dom.encode(b, &vals))
        }
        Expr::Atom(Atom::Member(..)) => {
            return Err(Error::UnsupportedCarrier("membership atoms in the Tarski oracle".into()));
        }
        Expr::And(x, y) => holds(m, reg, ctx, x, b, env)? && holds(m, reg, ctx, y, b, env)?,
        Expr::Or(x, y) => holds(m, reg, ctx, x, b, env)? || holds(m, reg, ctx, y, b, env)?,
        Expr::Implies(x, y) => !holds(m, reg, ctx, x, b, env)? || holds(m, reg, ctx, y, b, env)?,
        Expr::Not(x) => !holds(m, reg, ctx, x, b, env)?,
        Expr::Pullback { along, body } => {
            let moved: Vec<usize> = along.terms.iter().map(|t| m.eval_term(b, env, t)).collect();
            holds(m, reg, &along.dst, body, b, &moved)?
        }
        Expr::Quant { name, along, args } => {
            let def = reg.get(name)?;
            let fiber: Vec<Vec<usize>> = source_tuples(m, &along.src, b)?
                .into_iter()
                .filter(|x| along.terms.iter().map(|t| m.eval_term(b, x, t)).eq(env.iter().copied()))
                .collect();
            match &def.kind {
                QuantKind::Exists => {
                    let mut any = false;
                    for x in &fiber {
                        if holds(m, reg, &along.src, &args[0], b, x)? {
                            any = true;
                            break;
                        }
                    }
                    any
                }
                QuantKind::Forall => {
                    let mut all = true;
                    for x in &fiber {
                        if !holds(m, reg, &along.src, &args[0], b, x)? {
                            all = false;
                            break;
                        }
                    }
                    all
                }
                QuantKind::Conj => {
                    holds(m, reg, &along.src, &args[0], b, env)? && holds(m, reg, &along.src, &args[1], b, env)?
                }
                QuantKind::Disj => {
                    holds(m, reg, &along.src, &args[0], b, env)? || holds(m, reg, &along.src, &args[1], b, env)?
                }
                QuantKind::Box { relation } | QuantKind::Diamond { relation } => {
                    let n = env.len();
                    if n == 0 {
                        return Err(Error::PreconditionFailed("modal operators need a variable".into()));
                    }
                    let sort = ctx.sort(n - 1).to_string();
                    let dom = m.sorts_product(&[sort.clone(), sort.clone()])?;
                    let rel = m.relation(relation)?;
                    let is_box = matches!(def.kind, QuantKind::Box { .. });
                    let mut acc = is_box;
                    for y in 0..m.carrier(&sort)?.size(b) {
                        if !rel.contains(b, dom.encode(b, &[env[n - 1], y])) {
                            continue;
                        }
                        let mut e2 = env.to_vec();
                        e2[n - 1] = y;
                        let h = holds(m, reg, ctx, &args[0], b, &e2)?;
                        if is_box && !h {
                            acc = false;
                            break;
                        }
                        if !is_box && h {
                            acc = true;
                            break;
                        }
                    }
                    acc
                }
                QuantKind::Custom(_) => {
                    return Err(Error::UnknownQuantifier(format!("{name} has no Tarski clause")));
                }
            }
        }
    })
}

/// The set of satisfying tuples as a subobject of `|M|(ctx)`.
pub fn tarski_sub(m: &SigmaStructure, reg: &QuantifierRegistry, ctx: &Context, expr: &Expr) -> Result<SubPresheaf> {
    let p = m.context_product(ctx)?;
    let amb = p.presheaf.clone();
    let mut parts = Vec::new();
    for b in 0..amb.base().num_objects() {
        let mut bs = FixedBitSet::with_capacity(amb.size(b));
        for x in 0..amb.size(b) {
            bs.set(x, tarski_holds(m, reg, ctx, expr, b, &p.decode(b, x))?);
        }
        parts.push(bs);
    }
    SubPresheaf::new(amb, parts)
}

/// Classical ultraproduct satisfaction for a tuple of family tuples:
/// `{i | M_i ⊨ φ[a_i]} ∈ F`.
pub fn classical_filtered_holds(
    family: &[Arc<SigmaStructure>],
    filter: &Filter,
    reg: &QuantifierRegistry,
    ctx: &Context,
    expr: &Expr,
    b: ObjId,
    envs: &[Vec<usize>],
) -> Result<bool> {
    let mut mask = 0u32;
    for (i, (m, env)) in family.iter().zip(envs).enumerate() {
        if tarski_holds(m, reg, ctx, expr, b, env)? {
            mask |= 1 << i;
        }
    }
    Ok(filter.contains(mask))
}

// ---------------------------------------------------------------------------
// filtered products

/// Classes of `∏_I X_i(b)` under `~_F`, by union-find over all pairs with
/// the definitional test `{i | x_i = y_i} ∈ F`.
pub fn filtered_class_counts(family: &[Arc<Presheaf>], filter: &Filter) -> Result<Vec<usize>> {
    let Some(first) = family.first() else {
        return Err(Error::PreconditionFailed("empty family".into()));
    };
    let nobj = first.base().num_objects();
    let mut out = Vec::with_capacity(nobj);
    for b in 0..nobj {
        let sizes: Vec<usize> = family.iter().map(|x| x.size(b)).collect();
        let total: usize = sizes.iter().product();
        bound::guard("pairwise class computation", (total as f64).powi(2))?;
        let tuples: Vec<Vec<usize>> = (0..total)
            .map(|mut k| {
                let mut t = vec![0; sizes.len()];
                for j in (0..sizes.len()).rev() {
                    t[j] = k % sizes[j];
                    k /= sizes[j];
                }
                t
            })
            .collect();
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for i in 0..total {
            for j in i + 1..total {
                if filter.equivalent(&tuples[i], &tuples[j]) {
                    let (a, c) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = c;
                }
            }
        }
        let roots: BTreeSet<usize> = (0..total).map(|i| find(&mut parent, i)).collect();
        out.push(roots.len());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Kripke semantics

/// The successor relation read off the structure map of a powerset or
/// Kripke coalgebra.
pub fn successor_relation(c: &Coalgebra) -> Result<Vec<Subset>> {
    c.structure
        .iter()
        .map(|e| match e {
            FElem::Set(s) | FElem::Kripke(s, _) => Ok(s.clone()),
            _ => Err(Error::UnsupportedFunctor("no successor relation".into())),
        })
        .collect()
}

pub fn kripke_box(succ: &[Subset], a: &Subset) -> Subset {
    (0..succ.len()).filter(|&x| succ[x].iter().all(|y| a.contains(y))).collect()
}

pub fn kripke_diamond(succ: &[Subset], a: &Subset) -> Subset {
    (0..succ.len()).filter(|&x| succ[x].iter().any(|y| a.contains(y))).collect()
}

/// Moss' cover: every successor lies in some argument and every argument
/// contains some successor.
pub fn kripke_nabla(succ: &[Subset], args: &BTreeSet<Subset>) -> Subset {
    (0..succ.len())
        .filter(|&x| {
            succ[x].iter().all(|y| args.iter().any(|a| a.contains(y)))
                && args.iter().all(|a| succ[x].iter().any(|y| a.contains(y)))
        })
        .collect()
}
