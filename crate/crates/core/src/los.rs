//! Hypothesis checks for the ultraproduct theorem and the theorem itself on
//! enumerable instances.
//!
//! Two kinds of checks live here. The exhaustive ones (`check_filterable`,
//! `check_distributing`, ...) quantify over every subobject of a small
//! context and mirror the definitions directly. The instance-level ones
//! used by [`check_hypotheses`] and [`proof_steps`] only look at the
//! subobjects that actually occur when evaluating one formula over one
//! family, which keeps them feasible on products.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::bound;
use crate::cat::{for_each_function, NatTrans, Presheaf};
use crate::error::{Error, Result};
use crate::filter::{bits, filtered_product_models, Filter, FilteredModel};
use crate::fol::{
    enumerate_model_morphisms, enumerate_models, interpret_ctx_morphism, product_models, Context, CtxMorphism,
    ModelMorphism, SigmaStructure, Term,
};
use crate::formula::{
    apply_quantifier, check_expr, interp_basic, interpret_expr, Atom, Expr, Formula, QuantifierDef, QuantifierRegistry,
};
use crate::par;
use crate::sub::{
    check_supgen_condition_by_image, cover_split, enumerate_sub, exists_along, generators, join_unchecked,
    meet_unchecked, pullback_sub, sub_neg, Gen, GeneratorSet, SubPresheaf,
};

pub use crate::report::{ConditionReport, Counterexample, Verdict, MAX_COUNTEREXAMPLES};

fn args_string(args: &[SubPresheaf]) -> String {
    args.iter().map(|a| format!("[{a}]")).collect::<Vec<_>>().join(" ")
}

fn ambient_of(m: &SigmaStructure, ctx: &Context) -> Result<Arc<Presheaf>> {
    Ok(m.context_product(ctx)?.presheaf.clone())
}

fn check_gen_ambient(l: &GeneratorSet, p: &Arc<Presheaf>, what: &str) -> Result<()> {
    if crate::cat::same_presheaf(l.ambient(), p) {
        Ok(())
    } else {
        Err(Error::AmbientMismatch(format!("{what} generators are not over the expected context")))
    }
}

fn tuples_guard(what: &str, n: usize, arity: usize) -> Result<()> {
    bound::guard(what, bound::pow_estimate(n, arity))
}

// ---------------------------------------------------------------------------
// exhaustive checks

fn filterable_impl(
    label: &str,
    def: &QuantifierDef,
    m: &SigmaStructure,
    along: &CtxMorphism,
    witnesses: &[SubPresheaf],
    ldst: &GeneratorSet,
) -> Result<ConditionReport> {
    let src = ambient_of(m, &along.src)?;
    check_gen_ambient(ldst, &ambient_of(m, &along.dst)?, "target")?;
    let subs = enumerate_sub(&src)?;
    let n = def.arity;
    tuples_guard("argument tuples", subs.len(), n)?;
    tuples_guard("witness tuples", witnesses.len(), n)?;
    // results of Q on witness tuples, grouped by value
    let mut by_value: HashMap<Gen, Vec<Vec<usize>>> = HashMap::new();
    let mut err = None;
    for_each_function(n, witnesses.len(), |t| {
        let args: Vec<SubPresheaf> = t.iter().map(|&i| witnesses[i].clone()).collect();
        match apply_quantifier(m, def, along, &args) {
            Ok(v) => by_value.entry(Gen::from_sub(&v)).or_default().push(t.to_vec()),
            Err(e) => err = Some(e),
        }
        err.is_none()
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut rep = ConditionReport::new(label);
    let mut tuples = Vec::new();
    for_each_function(n, subs.len(), |t| {
        tuples.push(t.to_vec());
        true
    });
    let results = par::try_map(&tuples, |t| {
        let args: Vec<SubPresheaf> = t.iter().map(|&i| subs[i].clone()).collect();
        let q = apply_quantifier(m, def, along, &args)?;
        let mut bad = None;
        let mut checked = 0u64;
        for d in ldst.members() {
            if !d.leq(&q) {
                continue;
            }
            checked += 1;
            let ok = by_value
                .get(d)
                .is_some_and(|ws| ws.iter().any(|w| w.iter().zip(&args).all(|(&i, a)| witnesses[i].leq(a))));
            if !ok && bad.is_none() {
                bad = Some(d.to_sub(ldst.ambient()));
            }
        }
        Ok::<_, Error>((checked, bad, args))
    })?;
    for (checked, bad, args) in results {
        rep.checked += checked;
        if let Some(d) = bad {
            if rep.failures == 0 {
                rep.fail("no witness", vec![("delta", d.to_string()), ("args", args_string(&args))]);
            } else {
                rep.failures += 1;
            }
        }
    }
    Ok(rep)
}

/// For every `δ ∈ l_dst` and arguments `ι⃗` with `δ ⪯ Q(ι⃗)`, searches
/// generators `δ_j ⪯ ι_j` of `l_src` with `Q(δ⃗) = δ`.
pub fn check_filterable(
    def: &QuantifierDef,
    m: &SigmaStructure,
    along: &CtxMorphism,
    lsrc: &GeneratorSet,
    ldst: &GeneratorSet,
) -> Result<ConditionReport> {
    check_gen_ambient(lsrc, &ambient_of(m, &along.src)?, "source")?;
    let ws: Vec<SubPresheaf> = (0..lsrc.len()).map(|i| lsrc.member_sub(i)).collect();
    filterable_impl("filterable", def, m, along, &ws, ldst)
}

/// As [`check_filterable`] with witnesses drawn from all subobjects.
pub fn check_globally_filterable(
    def: &QuantifierDef,
    m: &SigmaStructure,
    along: &CtxMorphism,
    ldst: &GeneratorSet,
) -> Result<ConditionReport> {
    let ws = enumerate_sub(&ambient_of(m, &along.src)?)?;
    filterable_impl("globally filterable", def, m, along, &ws, ldst)
}

/// `Q_M(μ*ι⃗) = μ*(Q_M′(ι⃗))` for every argument tuple over `M′`.
pub fn check_distributing(def: &QuantifierDef, along: &CtxMorphism, mu: &ModelMorphism) -> Result<ConditionReport> {
    let ms = mu.context_map(&along.src)?;
    let mt = mu.context_map(&along.dst)?;
    let subs = enumerate_sub(ms.dst())?;
    tuples_guard("argument tuples", subs.len(), def.arity)?;
    let mut tuples = Vec::new();
    for_each_function(def.arity, subs.len(), |t| {
        tuples.push(t.to_vec());
        true
    });
    let rows = par::try_map(&tuples, |t| {
        let args: Vec<SubPresheaf> = t.iter().map(|&i| subs[i].clone()).collect();
        let pulled: Vec<SubPresheaf> = args.iter().map(|a| pullback_sub(&ms, a)).collect::<Result<_>>()?;
        let lhs = apply_quantifier(&mu.src, def, along, &pulled)?;
        let rhs = pullback_sub(&mt, &apply_quantifier(&mu.dst, def, along, &args)?)?;
        Ok::<_, Error>((lhs == rhs, args, lhs, rhs))
    })?;
    let mut rep = ConditionReport::new("distributing");
    for (ok, args, lhs, rhs) in rows {
        rep.checked += 1;
        if !ok {
            rep.fail(
                "square",
                vec![
                    ("args", args_string(&args)),
                    ("q_after_pullback", lhs.to_string()),
                    ("pullback_after_q", rhs.to_string()),
                ],
            );
        }
    }
    if !mu.is_epi() {
        rep.note("μ is not componentwise surjective");
    }
    Ok(rep)
}

/// For `δ_σ ∈ l_σ` and `ι ∈ Sub(|M|τ)` with `δ_σ ⪯ f*(ι)`, searches
/// `δ_τ ∈ l_τ` below `ι` with `δ_σ ⪯ f*(δ_τ)`, or `δ_σ = f*(δ_τ)` when
/// `strict` is set.
pub fn check_pullback_filterable(
    f: &CtxMorphism,
    m: &SigmaStructure,
    lsrc: &GeneratorSet,
    ldst: &GeneratorSet,
    strict: bool,
) -> Result<ConditionReport> {
    let t = interpret_ctx_morphism(m, f)?;
    check_gen_ambient(lsrc, t.src(), "source")?;
    check_gen_ambient(ldst, t.dst(), "target")?;
    let subs = enumerate_sub(t.dst())?;
    bound::guard("pullback filterability", subs.len() as f64 * lsrc.len() as f64)?;
    let dst_subs: Vec<SubPresheaf> = (0..ldst.len()).map(|i| ldst.member_sub(i)).collect();
    let dst_pulled: Vec<SubPresheaf> = dst_subs.iter().map(|d| pullback_sub(&t, d)).collect::<Result<_>>()?;
    let mut rep = ConditionReport::new(if strict { "pullback filterable (strict)" } else { "pullback filterable" });
    for iota in &subs {
        let pulled = pullback_sub(&t, iota)?;
        for ds in lsrc.members() {
            if !ds.leq(&pulled) {
                continue;
            }
            rep.checked += 1;
            let ds_sub = ds.to_sub(lsrc.ambient());
            let ok = dst_subs
                .iter()
                .zip(&dst_pulled)
                .any(|(dt, dtp)| dt.leq(iota) && if strict { ds_sub == *dtp } else { ds_sub.leq(dtp) });
            if !ok {
                rep.fail("no witness", vec![("delta", ds_sub.to_string()), ("iota", iota.to_string())]);
            }
        }
    }
    Ok(rep)
}

/// A registered dual pair `(Q, Q̄, S)`; `signs` are 1-based positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualPair {
    pub quantifier: String,
    pub dual: String,
    pub signs: Vec<usize>,
}

impl DualPair {
    pub fn new(q: &str, qbar: &str, signs: &[usize]) -> Self {
        DualPair { quantifier: q.into(), dual: qbar.into(), signs: signs.to_vec() }
    }
}

/// `∀/∃` with `S = {1}` and `conj/disj` with `S = {1,2}`, both ways.
pub fn standard_duals() -> Vec<DualPair> {
    use crate::formula::{CONJ, DISJ, EXISTS, FORALL};
    vec![
        DualPair::new(FORALL, EXISTS, &[1]),
        DualPair::new(EXISTS, FORALL, &[1]),
        DualPair::new(CONJ, DISJ, &[1, 2]),
        DualPair::new(DISJ, CONJ, &[1, 2]),
    ]
}

fn negate_at(args: &[SubPresheaf], signs: &[usize]) -> Vec<SubPresheaf> {
    args.iter().enumerate().map(|(j, a)| if signs.contains(&(j + 1)) { sub_neg(a) } else { a.clone() }).collect()
}

fn sign_mask_to_set(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|j| mask >> j & 1 == 1).map(|j| j + 1).collect()
}

/// Duality condition with a uniform sign set: for every model, argument
/// tuple and generator `ι` of the target context,
/// `ι ⋠ Q(ι⃗)` iff `ι ⪯ Q̄(ι̅⃗)`. Argument tuples range over all subobjects,
/// which covers every formula's interpretation.
pub fn check_dual(
    q: &QuantifierDef,
    qbar: &QuantifierDef,
    along: &CtxMorphism,
    signs: &[usize],
    ms: &[Arc<SigmaStructure>],
) -> Result<ConditionReport> {
    if q.arity != qbar.arity {
        return Err(Error::ArityMismatch(format!("{} and {} have different arities", q.name, qbar.name)));
    }
    if signs.iter().any(|&j| j == 0 || j > q.arity) {
        return Err(Error::MalformedInput("sign positions are 1-based argument indices".into()));
    }
    let n = q.arity;
    let mut rep = ConditionReport::new("dual");
    let mut per_model_sets: Vec<Vec<Vec<usize>>> = Vec::new();
    for (k, m) in ms.iter().enumerate() {
        let subs = enumerate_sub(&ambient_of(m, &along.src)?)?;
        let gens = generators(&ambient_of(m, &along.dst)?)?;
        tuples_guard("dual argument tuples", subs.len(), n)?;
        bound::guard("sign sets", bound::pow_estimate(2, n) * bound::pow_estimate(subs.len(), n))?;
        let mut tuples = Vec::new();
        for_each_function(n, subs.len(), |t| {
            tuples.push(t.to_vec());
            true
        });
        // for each sign mask, whether it works on every tuple
        let ok_masks = par::try_map(&tuples, |t| {
            let args: Vec<SubPresheaf> = t.iter().map(|&i| subs[i].clone()).collect();
            let qv = apply_quantifier(m, q, along, &args)?;
            let mut ok = Vec::with_capacity(1 << n);
            for mask in 0..(1usize << n) {
                let s = sign_mask_to_set(mask);
                let qb = apply_quantifier(m, qbar, along, &negate_at(&args, &s))?;
                let bad = gens.members().iter().find(|g| g.leq(&qv) == g.leq(&qb)).map(|g| g.to_sub(gens.ambient()));
                ok.push(bad);
            }
            Ok::<_, Error>((args, ok))
        })?;
        let given: usize = signs.iter().map(|j| 1 << (j - 1)).sum();
        let mut working = vec![true; 1 << n];
        for (args, ok) in &ok_masks {
            rep.checked += 1;
            for (mask, bad) in ok.iter().enumerate() {
                if bad.is_some() {
                    working[mask] = false;
                }
            }
            if let Some(g) = &ok[given] {
                rep.fail(
                    "duality",
                    vec![("model", k.to_string()), ("generator", g.to_string()), ("args", args_string(args))],
                );
            }
        }
        per_model_sets.push((0..1usize << n).filter(|&m| working[m]).map(sign_mask_to_set).collect());
    }
    if rep.failed() && per_model_sets.iter().all(|s| !s.is_empty()) {
        let uniform: BTreeSet<&Vec<usize>> = per_model_sets[0].iter().collect();
        let common =
            per_model_sets.iter().skip(1).fold(uniform, |acc, s| acc.into_iter().filter(|x| s.contains(x)).collect());
        if common.is_empty() {
            rep.note("only a model-dependent sign set would succeed");
        } else {
            rep.note(format!(
                "sign set {:?} fails but {:?} works uniformly",
                signs,
                common.into_iter().next().unwrap()
            ));
        }
    }
    Ok(rep)
}

/// `ι_I = ⋀ p_i*(ι_i)` and the identity `↓ι_I = ⋂ ↓p_i*(ι_i)` over the
/// generators of `|∏_I M|(σ)`.
pub fn check_projection_condition(
    family: &[Arc<SigmaStructure>],
    ctx: &Context,
    iotas: &[SubPresheaf],
    gens: Option<&GeneratorSet>,
) -> Result<(SubPresheaf, ConditionReport)> {
    if family.len() != iotas.len() {
        return Err(Error::ArityMismatch("one subobject per model is required".into()));
    }
    let Some(first) = family.first() else {
        return Err(Error::PreconditionFailed("empty family".into()));
    };
    let (prod, projs) = product_models(first.sig(), first.base(), family)?;
    let amb = ambient_of(&prod, ctx)?;
    let pulled: Vec<SubPresheaf> =
        projs.iter().zip(iotas).map(|(p, i)| pullback_sub(&p.context_map(ctx)?, i)).collect::<Result<_>>()?;
    let iota_i = pulled.iter().fold(SubPresheaf::top(&amb), |acc, p| meet_unchecked(&acc, p));
    let owned;
    let gens = match gens {
        Some(g) => {
            check_gen_ambient(g, &amb, "product")?;
            g
        }
        None => {
            owned = generators(&amb)?;
            &owned
        }
    };
    Ok((iota_i.clone(), projection_report(gens, &iota_i, &pulled)))
}

fn projection_report(gens: &GeneratorSet, iota_i: &SubPresheaf, pulled: &[SubPresheaf]) -> ConditionReport {
    let mut rep = ConditionReport::new("projection");
    for g in gens.members() {
        rep.checked += 1;
        let left = g.leq(iota_i);
        let right = pulled.iter().all(|p| g.leq(p));
        if left != right {
            rep.fail(
                "down-set",
                vec![
                    ("generator", g.to_sub(gens.ambient()).to_string()),
                    ("in_down_iota_I", left.to_string()),
                    ("in_all_down_sets", right.to_string()),
                ],
            );
        }
    }
    rep
}

/// Interpretability of an atom over the plain product: for every generator
/// `δ` of `|∏_I M|(σ)`, `δ ⪯ ⟦∏_I M⟧(bc)` iff `δ ⪯ p_i*(⟦M_i⟧(bc))` for all `i`.
pub fn check_basic(family: &[Arc<SigmaStructure>], ctx: &Context, bc: &Atom) -> Result<ConditionReport> {
    let Some(first) = family.first() else {
        return Err(Error::PreconditionFailed("empty family".into()));
    };
    let (prod, projs) = product_models(first.sig(), first.base(), family)?;
    let whole = interp_basic(&prod, ctx, bc)?;
    let pulled: Vec<SubPresheaf> = projs
        .iter()
        .zip(family)
        .map(|(p, m)| pullback_sub(&p.context_map(ctx)?, &interp_basic(m, ctx, bc)?))
        .collect::<Result<_>>()?;
    let gens = generators(whole.ambient())?;
    Ok(basic_report(&gens, &whole, &pulled))
}

fn basic_report(gens: &GeneratorSet, whole: &SubPresheaf, pulled: &[SubPresheaf]) -> ConditionReport {
    let mut rep = ConditionReport::new("basic");
    for g in gens.members() {
        rep.checked += 1;
        let l = g.leq(whole);
        let r = pulled.iter().all(|p| g.leq(p));
        if l != r {
            rep.fail(
                "interpretability",
                vec![
                    ("generator", g.to_sub(gens.ambient()).to_string()),
                    ("in_product", l.to_string()),
                    ("in_every_factor", r.to_string()),
                ],
            );
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// finiteness

/// Probe morphisms for the two subconditions. The identity is always used.
#[derive(Clone, Debug, Default)]
pub struct FinitenessOptions {
    /// Candidates also range over all models with carriers up to this size
    /// (set-like bases only).
    pub candidate_bound: usize,
    /// Extra `μ: N -> M` for subcondition 1.
    pub probes_in: Vec<ModelMorphism>,
    /// Extra `μ: M -> N` for subcondition 2.
    pub probes_out: Vec<ModelMorphism>,
}

/// The carriers generated by the components of `δ`, with relations either
/// induced from `m` or reduced to the atom's tuples at `δ`.
fn generated_candidates(
    m: &Arc<SigmaStructure>,
    ctx: &Context,
    bc: &Atom,
    delta: &SubPresheaf,
) -> Result<Vec<(String, Arc<SigmaStructure>)>> {
    let sig = m.sig().clone();
    if !sig.power_sorts.is_empty() {
        return Err(Error::UnsupportedCarrier("generated substructures with power sorts".into()));
    }
    let base = m.base().clone();
    let nobj = base.num_objects();
    let prod = m.context_product(ctx)?;
    let mut keep: BTreeMap<String, Vec<BTreeSet<usize>>> =
        sig.sorts.iter().map(|s| (s.clone(), vec![BTreeSet::new(); nobj])).collect();
    for (b, x) in delta.elements() {
        for (k, v) in prod.decode(b, x).into_iter().enumerate() {
            keep.get_mut(ctx.sort(k)).unwrap()[b].insert(v);
        }
    }
    loop {
        let mut changed = false;
        for s in &sig.sorts {
            let c = m.carrier(s)?;
            for mid in 0..base.num_morphisms() {
                let mor = base.morphism(mid);
                let adds: Vec<usize> = keep[s][mor.cod].iter().map(|&x| c.act(mid, x)).collect();
                for y in adds {
                    changed |= keep.get_mut(s).unwrap()[mor.dom].insert(y);
                }
            }
        }
        for (fname, p) in &sig.functions {
            let f = m.function(fname)?;
            let dom = m.sorts_product(&p.args)?;
            for b in 0..nobj {
                let lists: Vec<Vec<usize>> = p.args.iter().map(|s| keep[s][b].iter().copied().collect()).collect();
                let mut adds = Vec::new();
                let sizes: Vec<usize> = lists.iter().map(Vec::len).collect();
                if sizes.contains(&0) && !sizes.is_empty() {
                    continue;
                }
                let total: usize = sizes.iter().product();
                for mut k in 0..total {
                    let mut comps = vec![0; lists.len()];
                    for j in (0..lists.len()).rev() {
                        comps[j] = lists[j][k % sizes[j]];
                        k /= sizes[j];
                    }
                    adds.push(f.apply(b, dom.encode(b, &comps)));
                }
                for y in adds {
                    changed |= keep.get_mut(&p.result).unwrap()[b].insert(y);
                }
            }
        }
        if !changed {
            break;
        }
    }
    // carriers and inclusions
    let mut carriers = BTreeMap::new();
    let mut back: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    for s in &sig.sorts {
        let c = m.carrier(s)?;
        let lists: Vec<Vec<usize>> = keep[s].iter().map(|set| set.iter().copied().collect()).collect();
        let sets =
            lists.iter().enumerate().map(|(b, l)| l.iter().map(|&x| c.elements(b)[x].clone()).collect()).collect();
        let maps = (0..base.num_morphisms())
            .map(|mid| {
                let mor = base.morphism(mid);
                lists[mor.cod].iter().map(|&x| lists[mor.dom].binary_search(&c.act(mid, x)).unwrap()).collect()
            })
            .collect();
        carriers.insert(s.clone(), Arc::new(Presheaf::new(base.clone(), sets, maps)?));
        back.insert(s.clone(), lists);
    }
    let back = Arc::new(back);
    // tuples the atom needs, in original indices
    let needed: Vec<BTreeSet<Vec<usize>>> = match bc {
        Atom::Rel(_, ts) => (0..nobj)
            .map(|b| {
                delta.parts()[b]
                    .ones()
                    .map(|x| {
                        let env = prod.decode(b, x);
                        ts.iter().map(|t| m.eval_term(b, &env, t)).collect()
                    })
                    .collect()
            })
            .collect(),
        _ => vec![BTreeSet::new(); nobj],
    };
    let needed = Arc::new(needed);
    let mut out = Vec::new();
    for variant in ["induced", "minimal"] {
        let mut bld = SigmaStructure::builder(sig.clone(), base.clone());
        for (s, c) in &carriers {
            bld = bld.carrier(s, c.clone());
        }
        for (fname, p) in &sig.functions {
            let (back, mm, p, fname) = (back.clone(), m.clone(), p.clone(), fname.clone());
            bld = bld.function_fn(&fname.clone(), move |b, args| {
                let comps: Vec<usize> = args.iter().zip(&p.args).map(|(&a, s)| back[s][b][a]).collect();
                let dom = mm.sorts_product(&p.args).expect("declared");
                let y = mm.function(&fname).expect("declared").apply(b, dom.encode(b, &comps));
                back[&p.result][b].binary_search(&y).expect("closed under functions")
            });
        }
        for (rname, args) in &sig.relations {
            let (back, mm, args, rname2) = (back.clone(), m.clone(), args.clone(), rname.clone());
            let target = match bc {
                Atom::Rel(r, _) => r == rname,
                _ => false,
            };
            let needed = needed.clone();
            let minimal = variant == "minimal";
            bld = bld.relation_fn(rname, move |b, comps| {
                let orig: Vec<usize> = comps.iter().zip(&args).map(|(&a, s)| back[s][b][a]).collect();
                if minimal {
                    target && needed[b].contains(&orig)
                } else {
                    let dom = mm.sorts_product(&args).expect("declared");
                    mm.relation(&rname2).expect("declared").contains(b, dom.encode(b, &orig))
                }
            });
        }
        // the minimal variant puts the atom's tuple in the relation even
        // when it fails in `m`, so it is not a substructure of `m`
        if let Ok(c) = bld.build() {
            out.push((format!("generated ({variant})"), Arc::new(c)));
        }
    }
    if let Some(c) = term_candidate(m, ctx, bc, delta, &needed)? {
        out.push(("term model".into(), Arc::new(c)));
    }
    Ok(out)
}

/// Largest carrier the term-model candidate may have; morphisms out of it
/// are enumerated, so this keeps the search small.
const TERM_CANDIDATE_MAX: usize = 8;

/// Constant presheaf of ground terms: one fresh constant per component of
/// each element of `δ` plus the signature's constants. The atom's relation
/// holds on the fresh tuples and on the constant tuples that evaluate into
/// them; every other relation is empty. Only for signatures whose function
/// symbols are all constants.
fn term_candidate(
    m: &Arc<SigmaStructure>,
    ctx: &Context,
    bc: &Atom,
    delta: &SubPresheaf,
    needed: &[BTreeSet<Vec<usize>>],
) -> Result<Option<SigmaStructure>> {
    let sig = m.sig().clone();
    let Atom::Rel(rname, ts) = bc else { return Ok(None) };
    if sig.functions.values().any(|p| !p.args.is_empty()) {
        return Ok(None);
    }
    let base = m.base().clone();
    let nobj = base.num_objects();
    // names per sort, and the index of each fresh constant
    let mut names: BTreeMap<String, Vec<String>> = sig.sorts.iter().map(|s| (s.clone(), Vec::new())).collect();
    let mut fresh: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (b, x) in delta.elements() {
        for k in 0..ctx.len() {
            let list = names.get_mut(ctx.sort(k)).unwrap();
            fresh.insert((b, x, k), list.len());
            list.push(format!("a{b}.{x}.{k}"));
        }
    }
    let mut consts: BTreeMap<String, usize> = BTreeMap::new();
    for (c, p) in &sig.functions {
        let list = names.get_mut(&p.result).unwrap();
        consts.insert(c.clone(), list.len());
        list.push(c.clone());
    }
    if names.values().map(Vec::len).sum::<usize>() > TERM_CANDIDATE_MAX {
        return Ok(None);
    }
    let mut bld = SigmaStructure::builder(sig.clone(), base.clone());
    for (s, list) in &names {
        let sets = vec![list.clone(); nobj];
        let maps = (0..base.num_morphisms()).map(|_| (0..list.len()).collect()).collect();
        bld = bld.carrier(s, Arc::new(Presheaf::new(base.clone(), sets, maps)?));
    }
    for (c, &i) in &consts {
        bld = bld.function_fn(c, move |_, _| i);
    }
    let rsorts = &sig.relations[rname];
    let mut holds: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); nobj];
    for (b, x) in delta.elements() {
        let mut tuple = Vec::with_capacity(ts.len());
        for t in ts {
            match t {
                Term::Var(i) => tuple.push(fresh[&(b, x, *i)]),
                Term::App(c, _) => tuple.push(consts[c]),
            }
        }
        holds[b].insert(tuple);
    }
    // constant tuples evaluating to a needed tuple
    let pools: Vec<Vec<(&String, usize)>> = rsorts
        .iter()
        .map(|s| sig.functions.iter().filter(|(_, p)| &p.result == s).map(|(c, _)| (c, consts[c])).collect())
        .collect();
    if pools.iter().all(|p| !p.is_empty()) {
        let total: usize = pools.iter().map(Vec::len).product();
        for b in 0..nobj {
            for mut k in 0..total {
                let mut tuple = vec![0; pools.len()];
                let mut value = vec![0; pools.len()];
                for j in (0..pools.len()).rev() {
                    let (c, i) = pools[j][k % pools[j].len()];
                    k /= pools[j].len();
                    tuple[j] = i;
                    value[j] = m.eval_term(b, &[], &Term::App(c.clone(), vec![]));
                }
                if needed[b].contains(&value) {
                    holds[b].insert(tuple);
                }
            }
        }
    }
    let holds = Arc::new(holds);
    for r in sig.relations.keys() {
        let (holds, target) = (holds.clone(), r == rname);
        bld = bld.relation_fn(r, move |b, comps| target && holds[b].contains(comps));
    }
    // not restriction closed unless the fresh tuples are shared across objects
    Ok(bld.build().ok())
}

fn pull_ctx(mu: &ModelMorphism, ctx: &Context, s: &SubPresheaf) -> Result<SubPresheaf> {
    pullback_sub(&mu.context_map(ctx)?, s)
}

/// Subcondition 1 at one probe `μ: N -> M`.
fn finiteness_sub1(
    c: &Arc<SigmaStructure>,
    ctx: &Context,
    bc: &Atom,
    delta: &SubPresheaf,
    mu: &ModelMorphism,
) -> Result<(bool, bool)> {
    let n = &mu.src;
    let lhs = pull_ctx(mu, ctx, delta)?.leq(&interp_basic(n, ctx, bc)?);
    let cv = interp_basic(c, ctx, bc)?;
    let mut rhs = false;
    for nu in enumerate_model_morphisms(c, n)? {
        if cv == pull_ctx(&nu.then(mu)?, ctx, delta)? {
            rhs = true;
            break;
        }
    }
    Ok((lhs, rhs))
}

/// Subcondition 2 at one probe `μ: M -> N`: some generator `δ_N` works.
fn finiteness_sub2(
    c: &Arc<SigmaStructure>,
    ctx: &Context,
    bc: &Atom,
    delta: &SubPresheaf,
    mu: &ModelMorphism,
) -> Result<bool> {
    let n = &mu.dst;
    let gens = generators(&ambient_of(n, ctx)?)?;
    let nv = interp_basic(n, ctx, bc)?;
    let cv = interp_basic(c, ctx, bc)?;
    let into: Vec<ModelMorphism> = enumerate_model_morphisms(c, n)?;
    let map = mu.context_map(ctx)?;
    for i in 0..gens.len() {
        let dn = gens.member_sub(i);
        if !delta.leq(&pullback_sub(&map, &dn)?) {
            continue;
        }
        let lhs = dn.leq(&nv);
        let mut rhs = false;
        for nu in &into {
            if cv.leq(&pull_ctx(nu, ctx, &dn)?) {
                rhs = true;
                break;
            }
        }
        if lhs == rhs {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Searches a single witness `M_bc` satisfying both subconditions on the
/// identity probe and the supplied probes. Finite presentability is
/// replaced by finiteness of the candidate.
pub fn check_finiteness(
    m: &Arc<SigmaStructure>,
    ctx: &Context,
    bc: &Atom,
    delta: &SubPresheaf,
    opts: &FinitenessOptions,
) -> Result<ConditionReport> {
    let (rep, _) = finiteness_impl(m, ctx, bc, delta, opts)?;
    Ok(rep)
}

fn finiteness_impl(
    m: &Arc<SigmaStructure>,
    ctx: &Context,
    bc: &Atom,
    delta: &SubPresheaf,
    opts: &FinitenessOptions,
) -> Result<(ConditionReport, Option<Arc<SigmaStructure>>)> {
    if !crate::cat::same_presheaf(delta.ambient(), &ambient_of(m, ctx)?) {
        return Err(Error::AmbientMismatch("δ is not a subobject of the context".into()));
    }
    let mut cands = generated_candidates(m, ctx, bc, delta)?;
    if opts.candidate_bound > 0 && m.base().is_set_like() {
        for (k, c) in enumerate_models(m.sig(), m.base(), opts.candidate_bound)?.into_iter().enumerate() {
            cands.push((format!("enumerated #{k}"), c));
        }
    }
    let id = ModelMorphism::identity(m);
    let ins: Vec<&ModelMorphism> = std::iter::once(&id).chain(&opts.probes_in).collect();
    let outs: Vec<&ModelMorphism> = std::iter::once(&id).chain(&opts.probes_out).collect();
    let mut rep = ConditionReport::new("finiteness");
    for (name, c) in &cands {
        rep.checked += 1;
        let mut ok = true;
        for mu in &ins {
            let (l, r) = finiteness_sub1(c, ctx, bc, delta, mu)?;
            if l != r {
                ok = false;
                break;
            }
        }
        if ok {
            for mu in &outs {
                if !finiteness_sub2(c, ctx, bc, delta, mu)? {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            rep.note(format!("witness: {name}"));
            return Ok((rep, Some(c.clone())));
        }
    }
    rep.fail(
        "no witness",
        vec![
            ("atom", Expr::Atom(bc.clone()).display(ctx)),
            ("delta", delta.to_string()),
            ("candidates", cands.len().to_string()),
        ],
    );
    Ok((rep, None))
}

// ---------------------------------------------------------------------------
// instances

/// A family, a filter and a formula, plus the quantifier table and the
/// registered dual pairs used to route non-filterable quantifiers.
#[derive(Clone, Debug)]
pub struct LosInstance {
    pub family: Vec<Arc<SigmaStructure>>,
    pub filter: Filter,
    pub formula: Formula,
    pub registry: QuantifierRegistry,
    pub duals: Vec<DualPair>,
}

impl LosInstance {
    pub fn new(family: Vec<Arc<SigmaStructure>>, filter: Filter, formula: Formula) -> Self {
        LosInstance { family, filter, formula, registry: QuantifierRegistry::standard(), duals: standard_duals() }
    }
}

/// One generator of `|∏_I M|(σ)` with both sides of the biconditional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LosRow {
    pub generator: String,
    pub lhs: bool,
    pub rhs: bool,
    /// Per index `i`: `δ_I ⪯ p_i*(⟦M_i⟧(σ.φ))`.
    pub members: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LosReport {
    pub formula: String,
    pub filter: String,
    pub forced: bool,
    pub hypotheses: Vec<ConditionReport>,
    pub result: ConditionReport,
    pub rows: Vec<LosRow>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LosOptions {
    /// Run even when a hypothesis fails or was skipped.
    pub force: bool,
    /// Compute hypothesis reports; without `force` this is always done.
    pub check_hypotheses: bool,
}

struct CtxData {
    gens_i: GeneratorSet,
    mu: NatTrans,
    projs: Vec<NatTrans>,
}

/// Interpretations of one subformula in `∏_I M`, pulled back from `∏_F M`,
/// and pulled back from each factor, all over `|∏_I M|(τ)`.
struct NodeEval {
    in_prod: SubPresheaf,
    filtered_pulled: SubPresheaf,
    factors_pulled: Vec<SubPresheaf>,
}

struct Setup<'a> {
    inst: &'a LosInstance,
    fm: FilteredModel,
    ctxs: Mutex<HashMap<Vec<String>, Arc<CtxData>>>,
}

impl<'a> Setup<'a> {
    fn new(inst: &'a LosInstance) -> Result<Self> {
        let Some(first) = inst.family.first() else {
            return Err(Error::PreconditionFailed("empty family".into()));
        };
        inst.formula.ctx.check(first.sig())?;
        check_expr(first.sig(), &inst.registry, &inst.formula.ctx, &inst.formula.expr)?;
        let fm = filtered_product_models(&inst.family, &inst.filter)?;
        Ok(Setup { inst, fm, ctxs: Mutex::new(HashMap::new()) })
    }

    fn prod(&self) -> &Arc<SigmaStructure> {
        &self.fm.product
    }

    fn ctx(&self, ctx: &Context) -> Result<Arc<CtxData>> {
        let key = ctx.sorts();
        if let Some(d) = self.ctxs.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let gens_i = generators(&ambient_of(self.prod(), ctx)?)?;
        let mu = self.fm.quotient.context_map(ctx)?;
        let projs = self.fm.projections.iter().map(|p| p.context_map(ctx)).collect::<Result<_>>()?;
        let d = Arc::new(CtxData { gens_i, mu, projs });
        self.ctxs.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }

    fn eval(&self, ctx: &Context, e: &Expr) -> Result<NodeEval> {
        let reg = &self.inst.registry;
        let d = self.ctx(ctx)?;
        let in_prod = interpret_expr(self.prod(), reg, ctx, e)?;
        let in_filtered = interpret_expr(&self.fm.model, reg, ctx, e)?;
        let filtered_pulled = pullback_sub(&d.mu, &in_filtered)?;
        let factors: Vec<SubPresheaf> =
            self.inst.family.iter().map(|m| interpret_expr(m, reg, ctx, e)).collect::<Result<_>>()?;
        let factors_pulled = factors.iter().zip(&d.projs).map(|(v, p)| pullback_sub(p, v)).collect::<Result<_>>()?;
        Ok(NodeEval { in_prod, filtered_pulled, factors_pulled })
    }

    fn row(&self, ev: &NodeEval, g: &Gen) -> (bool, bool, Vec<bool>) {
        let lhs = g.leq(&ev.filtered_pulled);
        let members: Vec<bool> = ev.factors_pulled.iter().map(|p| g.leq(p)).collect();
        let rhs = self.inst.filter.contains_indices(members.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i));
        (lhs, rhs, members)
    }

    fn members_mask(&self, ev: &NodeEval, g: &Gen) -> u32 {
        ev.factors_pulled.iter().enumerate().filter(|(_, p)| g.leq(p)).fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// A subformula occurrence with the context it lives in.
#[derive(Clone, Debug)]
pub struct Node {
    pub path: String,
    pub ctx: Context,
    pub expr: Expr,
}

/// All subformula occurrences, parents before children.
pub fn subformulas(phi: &Formula) -> Vec<Node> {
    fn go(path: String, ctx: &Context, e: &Expr, out: &mut Vec<Node>) {
        out.push(Node { path: path.clone(), ctx: ctx.clone(), expr: e.clone() });
        match e {
            Expr::Top | Expr::Bot | Expr::Atom(_) => {}
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
                go(format!("{path}.0"), ctx, a, out);
                go(format!("{path}.1"), ctx, b, out);
            }
            Expr::Not(a) => go(format!("{path}.0"), ctx, a, out),
            Expr::Quant { along, args, .. } => {
                for (k, a) in args.iter().enumerate() {
                    go(format!("{path}.{k}"), &along.src, a, out);
                }
            }
            Expr::Pullback { along, body } => go(format!("{path}.0"), &along.dst, body, out),
        }
    }
    let mut out = Vec::new();
    go("φ".into(), &phi.ctx, &phi.expr, &mut out);
    out
}

fn node_label(n: &Node) -> String {
    format!("{} = {}", n.path, n.expr.display(&n.ctx))
}

/// The biconditional for one subformula at every generator.
fn biconditional(
    setup: &Setup,
    n: &Node,
    ev: &NodeEval,
    rep: &mut ConditionReport,
    forward_only: bool,
) -> Result<Vec<LosRow>> {
    let d = setup.ctx(&n.ctx)?;
    let mut rows = Vec::with_capacity(d.gens_i.len());
    for g in d.gens_i.members() {
        rep.checked += 1;
        let (lhs, rhs, members) = setup.row(ev, g);
        let bad = if forward_only { lhs && !rhs } else { lhs != rhs };
        let gs = g.to_sub(d.gens_i.ambient()).to_string();
        if bad {
            rep.fail(
                "biconditional",
                vec![
                    ("node", node_label(n)),
                    ("generator", gs.clone()),
                    ("lhs", lhs.to_string()),
                    ("rhs", rhs.to_string()),
                    ("members", format!("{members:?}")),
                ],
            );
        }
        rows.push(LosRow { generator: gs, lhs, rhs, members });
    }
    Ok(rows)
}

// instance-level versions of the quantifier and pullback conditions

/// Generators `δ` of `|X|τ` below `Q(ι⃗)` must be `Q(δ⃗)` for generators
/// `δ_j ⪯ ι_j`.
#[allow(clippy::too_many_arguments)]
fn instance_filterable(
    x: &SigmaStructure,
    def: &QuantifierDef,
    along: &CtxMorphism,
    args: &[SubPresheaf],
    gens_src: &GeneratorSet,
    gens_dst: &GeneratorSet,
    rep: &mut ConditionReport,
    label: &str,
) -> Result<()> {
    let q = apply_quantifier(x, def, along, args)?;
    let cands: Vec<Vec<usize>> = args.iter().map(|a| gens_src.down(a)).collect();
    let mut memo: HashMap<Vec<usize>, Gen> = HashMap::new();
    let mut eval = |t: &[usize]| -> Result<Gen> {
        if let Some(g) = memo.get(t) {
            return Ok(g.clone());
        }
        let a: Vec<SubPresheaf> = t.iter().map(|&i| gens_src.member_sub(i)).collect();
        let g = Gen::from_sub(&apply_quantifier(x, def, along, &a)?);
        memo.insert(t.to_vec(), g.clone());
        Ok(g)
    };
    // single-argument results, indexed by value
    let mut unary: Option<HashMap<Gen, ()>> = None;
    if def.arity == 1 {
        let mut h = HashMap::new();
        for &i in &cands[0] {
            h.insert(eval(&[i])?, ());
        }
        unary = Some(h);
    }
    let total: f64 = cands.iter().map(|c| c.len() as f64).product();
    for d in gens_dst.members() {
        if !d.leq(&q) {
            continue;
        }
        rep.checked += 1;
        let found = if let Some(h) = &unary {
            h.contains_key(d)
        } else {
            // the diagonal first, then the full search
            let diag: Option<Vec<usize>> = if crate::cat::same_presheaf(gens_src.ambient(), gens_dst.ambient()) {
                cands.iter().map(|c| c.iter().copied().find(|&i| gens_src.members()[i] == *d)).collect()
            } else {
                None
            };
            let mut found = match diag {
                Some(t) => eval(&t)? == *d,
                None => false,
            };
            if !found {
                if total > 1e5 {
                    rep.skip(format!("{label}: witness search over {total} tuples is too large"));
                    continue;
                }
                let sizes: Vec<usize> = cands.iter().map(Vec::len).collect();
                let mut idx = vec![0; sizes.len()];
                if !sizes.contains(&0) {
                    loop {
                        let t: Vec<usize> = idx.iter().zip(&cands).map(|(&k, c)| c[k]).collect();
                        if eval(&t)? == *d {
                            found = true;
                            break;
                        }
                        let mut k = sizes.len();
                        let mut done = true;
                        while k > 0 {
                            k -= 1;
                            idx[k] += 1;
                            if idx[k] < sizes[k] {
                                done = false;
                                break;
                            }
                            idx[k] = 0;
                        }
                        if done {
                            break;
                        }
                    }
                }
            }
            found
        };
        if !found {
            rep.fail(
                "no generator witness",
                vec![
                    ("where", label.to_string()),
                    ("delta", d.to_sub(gens_dst.ambient()).to_string()),
                    ("args", args_string(args)),
                ],
            );
        }
    }
    Ok(())
}

/// The node is `Q(φ⃗)` with `Q` routed through its registered dual: the
/// duality condition must hold in every model involved, at every generator.
fn instance_dual(setup: &Setup, n: &Node, pair: &DualPair, rep: &mut ConditionReport) -> Result<Option<Expr>> {
    let Expr::Quant { along, args, .. } = &n.expr else {
        return Ok(None);
    };
    let dual_args: Vec<Expr> = args
        .iter()
        .enumerate()
        .map(|(j, a)| if pair.signs.contains(&(j + 1)) { Expr::not(a.clone()) } else { a.clone() })
        .collect();
    let dual = Expr::Quant { name: pair.dual.clone(), along: along.clone(), args: dual_args };
    let reg = &setup.inst.registry;
    let mut models: Vec<(String, &SigmaStructure)> =
        vec![("∏_I".into(), setup.prod()), ("∏_F".into(), &setup.fm.model)];
    for (i, m) in setup.inst.family.iter().enumerate() {
        models.push((format!("M_{}", setup.inst.filter.labels()[i]), m));
    }
    for (name, x) in models {
        let v = interpret_expr(x, reg, &n.ctx, &n.expr)?;
        let vb = interpret_expr(x, reg, &n.ctx, &dual)?;
        let gens = generators(v.ambient())?;
        for g in gens.members() {
            rep.checked += 1;
            if g.leq(&v) == g.leq(&vb) {
                rep.fail(
                    "duality",
                    vec![
                        ("node", node_label(n)),
                        ("model", name.clone()),
                        ("generator", g.to_sub(gens.ambient()).to_string()),
                        ("dual", pair.dual.clone()),
                    ],
                );
            }
        }
    }
    Ok(Some(dual))
}

/// Filterability at `∏_I M` for the node's actual arguments, or the dual
/// route when it fails and a dual pair is registered. Returns whether the
/// node went through the dual.
fn quantifier_condition(setup: &Setup, n: &Node, rep: &mut ConditionReport) -> Result<bool> {
    let Expr::Quant { name, along, args } = &n.expr else {
        return Ok(false);
    };
    let def = setup.inst.registry.get(name)?;
    let ds = setup.ctx(&along.src)?;
    let dt = setup.ctx(&along.dst)?;
    let reg = &setup.inst.registry;
    let pulled: Vec<SubPresheaf> = args
        .iter()
        .map(|a| pullback_sub(&ds.mu, &interpret_expr(&setup.fm.model, reg, &along.src, a)?))
        .collect::<Result<_>>()?;
    let mut local = ConditionReport::new("filterable");
    instance_filterable(setup.prod(), def, along, &pulled, &ds.gens_i, &dt.gens_i, &mut local, &node_label(n))?;
    if local.passed() {
        rep.absorb(local);
        return Ok(false);
    }
    let Some(pair) = setup.inst.duals.iter().find(|p| p.quantifier == *name) else {
        rep.absorb(local);
        return Ok(false);
    };
    rep.note(format!("{}: not filterable, using the dual {}", node_label(n), pair.dual));
    rep.checked += local.checked;
    let Some(dual) = instance_dual(setup, n, pair, rep)? else {
        return Ok(true);
    };
    // the dual itself must be filterable
    if let Expr::Quant { name: dn, along, args } = &dual {
        let ddef = setup.inst.registry.get(dn)?;
        let dpulled: Vec<SubPresheaf> = args
            .iter()
            .map(|a| pullback_sub(&ds.mu, &interpret_expr(&setup.fm.model, reg, &along.src, a)?))
            .collect::<Result<_>>()?;
        instance_filterable(
            setup.prod(),
            ddef,
            along,
            &dpulled,
            &ds.gens_i,
            &dt.gens_i,
            rep,
            &format!("dual of {}", n.path),
        )?;
    }
    Ok(true)
}

/// `Q_{∏_I}(μ*ι⃗) = μ*(Q_{∏_F}(ι⃗))` and the same along each projection,
/// for the node's arguments.
fn distributing_condition(setup: &Setup, n: &Node, rep: &mut ConditionReport) -> Result<()> {
    let Expr::Quant { name, along, args } = &n.expr else {
        return Ok(());
    };
    let def = setup.inst.registry.get(name)?;
    let reg = &setup.inst.registry;
    let ds = setup.ctx(&along.src)?;
    let dt = setup.ctx(&along.dst)?;
    let fargs: Vec<SubPresheaf> =
        args.iter().map(|a| interpret_expr(&setup.fm.model, reg, &along.src, a)).collect::<Result<_>>()?;
    let pulled: Vec<SubPresheaf> = fargs.iter().map(|a| pullback_sub(&ds.mu, a)).collect::<Result<_>>()?;
    rep.checked += 1;
    let lhs = apply_quantifier(setup.prod(), def, along, &pulled)?;
    let rhs = pullback_sub(&dt.mu, &apply_quantifier(&setup.fm.model, def, along, &fargs)?)?;
    if lhs != rhs {
        rep.fail("square over μ_I", vec![("node", node_label(n)), ("lhs", lhs.to_string()), ("rhs", rhs.to_string())]);
    }
    for (i, m) in setup.inst.family.iter().enumerate() {
        let margs: Vec<SubPresheaf> =
            args.iter().map(|a| interpret_expr(m, reg, &along.src, a)).collect::<Result<_>>()?;
        let pulled: Vec<SubPresheaf> = margs.iter().map(|a| pullback_sub(&ds.projs[i], a)).collect::<Result<_>>()?;
        rep.checked += 1;
        let lhs = apply_quantifier(setup.prod(), def, along, &pulled)?;
        let rhs = pullback_sub(&dt.projs[i], &apply_quantifier(m, def, along, &margs)?)?;
        if lhs != rhs {
            rep.fail(
                "square over a projection",
                vec![
                    ("node", node_label(n)),
                    ("index", setup.inst.filter.labels()[i].clone()),
                    ("lhs", lhs.to_string()),
                    ("rhs", rhs.to_string()),
                ],
            );
        }
    }
    Ok(())
}

/// ⪯-form filterability of `|∏_I M|(f)*` at the node's body.
fn pullback_condition(setup: &Setup, n: &Node, rep: &mut ConditionReport) -> Result<()> {
    let Expr::Pullback { along, body } = &n.expr else {
        return Ok(());
    };
    let ds = setup.ctx(&along.src)?;
    let dt = setup.ctx(&along.dst)?;
    let reg = &setup.inst.registry;
    let iota = pullback_sub(&dt.mu, &interpret_expr(&setup.fm.model, reg, &along.dst, body)?)?;
    let f = interpret_ctx_morphism(setup.prod(), along)?;
    let pulled = pullback_sub(&f, &iota)?;
    for g in ds.gens_i.members() {
        if !g.leq(&pulled) {
            continue;
        }
        rep.checked += 1;
        let gs = g.to_sub(ds.gens_i.ambient());
        let img = Gen::from_sub(&exists_along(&f, &gs)?);
        let ok = (dt.gens_i.contains(&img) && img.leq(&iota))
            || dt
                .gens_i
                .down(&iota)
                .into_iter()
                .any(|k| gs.leq(&pullback_sub(&f, &dt.gens_i.member_sub(k)).expect("same ambient")));
        if !ok {
            rep.fail(
                "no generator witness",
                vec![("node", node_label(n)), ("delta", gs.to_string()), ("iota", iota.to_string())],
            );
        }
    }
    Ok(())
}

/// Every hypothesis, checked on the instance at hand.
pub fn check_hypotheses(inst: &LosInstance) -> Result<Vec<ConditionReport>> {
    let setup = Setup::new(inst)?;
    hypotheses_with(&setup)
}

fn hypotheses_with(setup: &Setup) -> Result<Vec<ConditionReport>> {
    let inst = setup.inst;
    let nodes = subformulas(&inst.formula);
    let mut out = Vec::new();

    let mut ultra = ConditionReport::new("ultrafilter");
    ultra.checked = 1;
    if !inst.filter.is_ultrafilter() {
        ultra.fail("filter", vec![("filter", inst.filter.to_string())]);
    }
    out.push(ultra);

    let mut contexts: BTreeMap<Vec<String>, Context> = BTreeMap::new();
    for n in &nodes {
        contexts.entry(n.ctx.sorts()).or_insert_with(|| n.ctx.clone());
        if let Expr::Quant { along, .. } | Expr::Pullback { along, .. } = &n.expr {
            contexts.entry(along.src.sorts()).or_insert_with(|| along.src.clone());
            contexts.entry(along.dst.sorts()).or_insert_with(|| along.dst.clone());
        }
    }

    let mut transport = ConditionReport::new("sup-generation");
    for ctx in contexts.values() {
        let d = setup.ctx(ctx)?;
        let gens_f = generators(&ambient_of(&setup.fm.model, ctx)?)?;
        transport.checked += d.gens_i.len() as u64 * (1 + d.projs.len() as u64);
        let mut r = check_supgen_condition_by_image(&d.mu, &d.gens_i, &gens_f)?;
        for (i, m) in inst.family.iter().enumerate() {
            r.extend(check_supgen_condition_by_image(&d.projs[i], &d.gens_i, &generators(&ambient_of(m, ctx)?)?)?);
        }
        for v in r.violations {
            transport.fail(&v.kind, vec![("context", ctx.to_string()), ("message", v.message)]);
        }
    }
    out.push(transport);

    let mut projection = ConditionReport::new("projection");
    let mut basic = ConditionReport::new("basic");
    let mut finiteness = ConditionReport::new("finiteness");
    let mut filterable = ConditionReport::new("filterable");
    let mut distributing = ConditionReport::new("distributing");
    let mut pullback = ConditionReport::new("pullback filterable");
    for n in &nodes {
        let ev = setup.eval(&n.ctx, &n.expr)?;
        let d = setup.ctx(&n.ctx)?;
        let iota_i = ev.factors_pulled.iter().fold(SubPresheaf::top(d.gens_i.ambient()), |a, p| meet_unchecked(&a, p));
        projection.absorb(projection_report(&d.gens_i, &iota_i, &ev.factors_pulled));
        match &n.expr {
            Expr::Atom(a) => {
                basic.absorb(basic_report(&d.gens_i, &ev.in_prod, &ev.factors_pulled));
                finiteness.absorb(finiteness_on_filtered(setup, &n.ctx, a)?);
            }
            Expr::Quant { .. } => {
                quantifier_condition(setup, n, &mut filterable)?;
                distributing_condition(setup, n, &mut distributing)?;
            }
            Expr::Pullback { .. } => pullback_condition(setup, n, &mut pullback)?,
            _ => {}
        }
    }
    out.extend([projection, basic, finiteness, filterable, distributing, pullback]);
    Ok(out)
}

/// Finiteness at every generator of `|∏_F M|(σ)` with the identity probe,
/// plus the factorization of the witness morphism through a coprojection.
fn finiteness_on_filtered(setup: &Setup, ctx: &Context, bc: &Atom) -> Result<ConditionReport> {
    let fmod = &setup.fm.model;
    let gens = generators(&ambient_of(fmod, ctx)?)?;
    let core = setup.inst.filter.core();
    let (_, mu_core) = setup.fm.coprojection(core)?;
    let mut rep = ConditionReport::new("finiteness");
    let opts = FinitenessOptions::default();
    for i in 0..gens.len() {
        let delta = gens.member_sub(i);
        let (r, witness) = finiteness_impl(fmod, ctx, bc, &delta, &opts)?;
        rep.absorb(r);
        let Some(c) = witness else { continue };
        // every morphism C -> ∏_F M factors through μ_core
        let through: Vec<ModelMorphism> = enumerate_model_morphisms(&c, &mu_core.src)?;
        for nu in enumerate_model_morphisms(&c, fmod)? {
            rep.checked += 1;
            let factors = through.iter().any(|t| {
                t.then(&mu_core).is_ok_and(|comp| {
                    comp.components()
                        .iter()
                        .all(|(s, k)| nu.component(s).is_ok_and(|x| x.components() == k.components()))
                })
            });
            if !factors {
                rep.fail("factorization", vec![("delta", delta.to_string()), ("core", setup.inst.filter.show(core))]);
            }
        }
    }
    Ok(rep)
}

/// Checks `δ_I ⪯ μ_I*(⟦∏_F M⟧(σ.φ))` iff `{i | δ_I ⪯ p_i*(⟦M_i⟧(σ.φ))} ∈ F`
/// at every generator `δ_I` of `|∏_I M|(σ)`.
pub fn los_verify(inst: &LosInstance, opts: LosOptions) -> Result<LosReport> {
    let setup = Setup::new(inst)?;
    let mut hypotheses = Vec::new();
    if !opts.force || opts.check_hypotheses {
        hypotheses = hypotheses_with(&setup)?;
        if !opts.force {
            let bad: Vec<String> = hypotheses
                .iter()
                .filter(|h| !h.passed())
                .map(|h| {
                    format!(
                        "{} ({})",
                        h.condition,
                        match &h.verdict {
                            Verdict::Skipped(r) => r.clone(),
                            _ => "fail".into(),
                        }
                    )
                })
                .collect();
            if !bad.is_empty() {
                return Err(Error::HypothesesNotMet(bad.join("; ")));
            }
        }
    }
    let root = Node { path: "φ".into(), ctx: inst.formula.ctx.clone(), expr: inst.formula.expr.clone() };
    let ev = setup.eval(&root.ctx, &root.expr)?;
    let mut result = ConditionReport::new("los");
    let rows = biconditional(&setup, &root, &ev, &mut result, false)?;
    Ok(LosReport {
        formula: inst.formula.to_string(),
        filter: inst.filter.to_string(),
        forced: opts.force,
        hypotheses,
        result,
        rows,
    })
}

/// `∏_F M ⊨ σ.φ` iff `{i | M_i ⊨ σ.φ} ∈ F`, for sentences.
pub fn los_sentence_corollary(inst: &LosInstance) -> Result<ConditionReport> {
    let setup = Setup::new(inst)?;
    let reg = &inst.registry;
    let phi = &inst.formula;
    let mut all: Vec<Arc<SigmaStructure>> = inst.family.clone();
    all.push(setup.fm.model.clone());
    if !crate::formula::is_sentence(&all, reg, phi)? {
        return Err(Error::NotASentence(format!("{phi} is neither ⊥ nor ⊤ in some model")));
    }
    let lhs = crate::formula::validates(&setup.fm.model, reg, phi)?;
    let mut mask = 0u32;
    for (i, m) in inst.family.iter().enumerate() {
        if crate::formula::validates(m, reg, phi)? {
            mask |= 1 << i;
        }
    }
    let rhs = inst.filter.contains(mask);
    let mut rep = ConditionReport::new("sentence corollary");
    rep.checked = 1;
    rep.note(format!("∏_F M ⊨ φ: {lhs}; indices: {}", inst.filter.show(mask)));
    if lhs != rhs {
        rep.fail("biconditional", vec![("lhs", lhs.to_string()), ("indices", inst.filter.show(mask))]);
    }
    Ok(rep)
}

/// The five inductive steps of the proof, each checked on the instance.
/// Steps whose statement needs an ultrafilter check only their forward
/// direction (or are skipped) over other filters.
pub fn proof_steps(inst: &LosInstance) -> Result<Vec<ConditionReport>> {
    let setup = Setup::new(inst)?;
    let ultra = inst.filter.is_ultrafilter();
    let nodes = subformulas(&inst.formula);
    let evals: Vec<NodeEval> = nodes.iter().map(|n| setup.eval(&n.ctx, &n.expr)).collect::<Result<_>>()?;
    let by_path: HashMap<&str, usize> = nodes.iter().enumerate().map(|(k, n)| (n.path.as_str(), k)).collect();
    let child = |n: &Node, k: usize| by_path[format!("{}.{k}", n.path).as_str()];

    let mut basic = ConditionReport::new("step basic");
    let mut disj = ConditionReport::new("step disjunction");
    let mut imp = ConditionReport::new("step implication");
    let mut quant = ConditionReport::new("step quantifier");
    let mut pb = ConditionReport::new("step pullback");
    if !ultra {
        imp.skip("the complement law needs an ultrafilter");
    }
    for (k, n) in nodes.iter().enumerate() {
        let ev = &evals[k];
        let d = setup.ctx(&n.ctx)?;
        match &n.expr {
            Expr::Atom(_) => {
                basic.absorb(basic_report(&d.gens_i, &ev.in_prod, &ev.factors_pulled));
                biconditional(&setup, n, ev, &mut basic, false)?;
            }
            Expr::Or(_, _) => {
                let (a, b) = (&evals[child(n, 0)], &evals[child(n, 1)]);
                step_or(&setup, n, ev, a, b, &d, &mut disj)?;
                biconditional(&setup, n, ev, &mut disj, !ultra)?;
            }
            Expr::Implies(_, _) | Expr::Not(_) => {
                if ultra {
                    for g in d.gens_i.members() {
                        imp.checked += 1;
                        let a = setup.members_mask(ev, g);
                        let full = (1u32 << inst.family.len()) - 1;
                        if inst.filter.contains(a) == inst.filter.contains(full & !a) {
                            imp.fail("complement", vec![("node", node_label(n)), ("indices", inst.filter.show(a))]);
                        }
                    }
                    biconditional(&setup, n, ev, &mut imp, false)?;
                }
            }
            Expr::Quant { args, .. } => {
                let mut hyp = ConditionReport::new("quantifier hypotheses");
                let dual = quantifier_condition(&setup, n, &mut hyp)?;
                distributing_condition(&setup, n, &mut hyp)?;
                if outside_hypotheses(n, hyp, &mut quant) {
                    if ultra {
                        biconditional(&setup, n, ev, &mut quant, false)?;
                    }
                    continue;
                }
                if !dual {
                    let kids: Vec<&NodeEval> = (0..args.len()).map(|j| &evals[child(n, j)]).collect();
                    step_quant_forward(&setup, n, ev, &kids, &mut quant)?;
                }
                if ultra {
                    biconditional(&setup, n, ev, &mut quant, false)?;
                } else if dual {
                    quant.note(format!("{}: the dual route needs an ultrafilter", node_label(n)));
                } else {
                    biconditional(&setup, n, ev, &mut quant, true)?;
                }
            }
            Expr::Pullback { along, .. } => {
                let mut hyp = ConditionReport::new("pullback hypotheses");
                pullback_condition(&setup, n, &mut hyp)?;
                if outside_hypotheses(n, hyp, &mut pb) {
                    biconditional(&setup, n, ev, &mut pb, !ultra)?;
                    continue;
                }
                let c = &evals[child(n, 0)];
                let f = interpret_ctx_morphism(setup.prod(), along)?;
                for g in d.gens_i.members() {
                    pb.checked += 1;
                    let img = Gen::from_sub(&exists_along(&f, &g.to_sub(d.gens_i.ambient()))?);
                    if setup.row(ev, g) != setup.row(c, &img) {
                        pb.fail(
                            "transport",
                            vec![("node", node_label(n)), ("generator", g.to_sub(d.gens_i.ambient()).to_string())],
                        );
                    }
                }
                // the body's converse direction may need an ultrafilter
                biconditional(&setup, n, ev, &mut pb, !ultra)?;
            }
            _ => {}
        }
    }
    Ok(vec![basic, disj, imp, quant, pb])
}

/// Folds a node's hypothesis report into a step report. Returns true when
/// the hypotheses fail, in which case the node only counts as not covered.
fn outside_hypotheses(n: &Node, hyp: ConditionReport, step: &mut ConditionReport) -> bool {
    step.checked += hyp.checked;
    let failed = hyp.failed();
    step.details.extend(hyp.details);
    if !failed {
        return false;
    }
    step.not_applicable += 1;
    let why = hyp.counterexamples.first().map(|c| c.kind.clone()).unwrap_or_default();
    step.note(format!("{}: hypotheses fail ({why}); not covered by this step", node_label(n)));
    true
}

/// Forward half of the disjunction step: split `δ_I` along the covering
/// property, collect the index sets of the generators below each part and
/// check that their intersection lies in `F` and validates the disjunction.
fn step_or(
    setup: &Setup,
    n: &Node,
    ev: &NodeEval,
    a: &NodeEval,
    b: &NodeEval,
    d: &CtxData,
    rep: &mut ConditionReport,
) -> Result<()> {
    let f = &setup.inst.filter;
    let full = (1u32 << setup.inst.family.len()) - 1;
    for g in d.gens_i.members() {
        if !g.leq(&ev.filtered_pulled) {
            continue;
        }
        rep.checked += 1;
        let gs = g.to_sub(d.gens_i.ambient());
        let (pa, pbv) = cover_split(&gs, &a.filtered_pulled, &b.filtered_pulled)?;
        if join_unchecked(&pa, &pbv) != gs {
            rep.fail("cover", vec![("node", node_label(n)), ("generator", gs.to_string())]);
            continue;
        }
        let mut l = full;
        let mut inherited = false;
        for (part, side) in [(&pa, a), (&pbv, b)] {
            for k in d.gens_i.down(part) {
                let h = &d.gens_i.members()[k];
                let m = setup.members_mask(side, h);
                if !f.contains(m) {
                    inherited = true;
                }
                l &= m;
            }
        }
        if inherited {
            rep.note(format!("{}: a disjunct's biconditional fails below {gs}", node_label(n)));
            continue;
        }
        let ok = f.contains(l) && bits(l).all(|i| g.leq(&ev.factors_pulled[i]));
        if !ok {
            rep.fail(
                "intersection",
                vec![("node", node_label(n)), ("generator", gs.to_string()), ("indices", f.show(l))],
            );
        }
    }
    Ok(())
}

/// Forward half of the quantifier step for a filterable node: generator
/// witnesses for the pulled-back arguments give index sets whose
/// intersection is in `F` and validates the node.
fn step_quant_forward(
    setup: &Setup,
    n: &Node,
    ev: &NodeEval,
    kids: &[&NodeEval],
    rep: &mut ConditionReport,
) -> Result<()> {
    let Expr::Quant { name, along, .. } = &n.expr else {
        return Ok(());
    };
    let def = setup.inst.registry.get(name)?;
    let ds = setup.ctx(&along.src)?;
    let dt = setup.ctx(&along.dst)?;
    let f = &setup.inst.filter;
    let cands: Vec<Vec<usize>> = kids.iter().map(|k| ds.gens_i.down(&k.filtered_pulled)).collect();
    let est: f64 = cands.iter().map(|c| c.len() as f64).product();
    if est > 1e5 {
        rep.skip(format!("{}: witness search too large", node_label(n)));
        return Ok(());
    }
    let mut results: Vec<(Vec<usize>, Gen)> = Vec::new();
    for_each_tuple(&cands, |t| {
        let a: Vec<SubPresheaf> = t.iter().map(|&i| ds.gens_i.member_sub(i)).collect();
        let v = apply_quantifier(setup.prod(), def, along, &a)?;
        results.push((t.to_vec(), Gen::from_sub(&v)));
        Ok(())
    })?;
    for g in dt.gens_i.members() {
        if !g.leq(&ev.filtered_pulled) {
            continue;
        }
        let Some((w, _)) = results.iter().find(|(_, v)| v == g) else {
            continue; // reported by the filterability condition
        };
        rep.checked += 1;
        let mut l = (1u32 << setup.inst.family.len()) - 1;
        let mut inherited = false;
        for (j, &wi) in w.iter().enumerate() {
            let m = setup.members_mask(kids[j], &ds.gens_i.members()[wi]);
            inherited |= !f.contains(m);
            l &= m;
        }
        if inherited {
            rep.note(format!("{}: an argument's biconditional fails at a witness", node_label(n)));
            continue;
        }
        if !(f.contains(l) && bits(l).all(|i| g.leq(&ev.factors_pulled[i]))) {
            rep.fail(
                "intersection",
                vec![
                    ("node", node_label(n)),
                    ("generator", g.to_sub(dt.gens_i.ambient()).to_string()),
                    ("indices", f.show(l)),
                ],
            );
        }
    }
    Ok(())
}

fn for_each_tuple(cands: &[Vec<usize>], mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if cands.iter().any(Vec::is_empty) {
        return Ok(());
    }
    let mut idx = vec![0; cands.len()];
    loop {
        let t: Vec<usize> = idx.iter().zip(cands).map(|(&k, c)| c[k]).collect();
        f(&t)?;
        let mut k = cands.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::FinCategory;
    use crate::fol::tests::bit_model;
    use crate::fol::{Signature, Term};
    use crate::formula::{CONJ, DISJ, EXISTS, FORALL};

    fn rel_sig() -> Arc<Signature> {
        Arc::new(Signature::new(&["s"]).with_relation("r", &["s"]))
    }

    fn rel_model(names: &[&str], r: &'static [usize]) -> Arc<SigmaStructure> {
        let base = Arc::new(FinCategory::terminal());
        let s = Arc::new(Presheaf::set(base.clone(), names).unwrap());
        Arc::new(
            SigmaStructure::builder(rel_sig(), base)
                .carrier("s", s)
                .relation_fn("r", move |_, a| r.contains(&a[0]))
                .build()
                .unwrap(),
        )
    }

    fn x() -> Context {
        Context::new(&[("x", "s")]).unwrap()
    }

    fn xy() -> Context {
        Context::new(&[("x", "s"), ("y", "s")]).unwrap()
    }

    fn gens(m: &SigmaStructure, ctx: &Context) -> GeneratorSet {
        generators(&ambient_of(m, ctx).unwrap()).unwrap()
    }

    fn reg() -> QuantifierRegistry {
        QuantifierRegistry::standard()
    }

    #[test]
    fn existential_projection_is_filterable() {
        let m = bit_model(&[0]);
        let pi = CtxMorphism::prefix_projection(&xy(), 1).unwrap();
        let r = check_filterable(reg().get(EXISTS).unwrap(), &m, &pi, &gens(&m, &xy()), &gens(&m, &x())).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.checked > 0);
    }

    #[test]
    fn universal_projection_needs_global_witnesses() {
        let m = bit_model(&[0]);
        let pi = CtxMorphism::prefix_projection(&xy(), 1).unwrap();
        let def = reg().get(FORALL).unwrap().clone();
        let local = check_filterable(&def, &m, &pi, &gens(&m, &xy()), &gens(&m, &x())).unwrap();
        assert!(local.failed());
        assert!(!local.counterexamples.is_empty());
        let global = check_globally_filterable(&def, &m, &pi, &gens(&m, &x())).unwrap();
        assert!(global.passed(), "{global:?}");
    }

    #[test]
    fn universal_does_not_distribute_over_an_inclusion() {
        let small = rel_model(&["0"], &[]);
        let big = rel_model(&["0", "1"], &[]);
        let inc = enumerate_model_morphisms(&small, &big).unwrap().remove(0);
        let pi = CtxMorphism::prefix_projection(&xy(), 1).unwrap();
        assert!(check_distributing(reg().get(FORALL).unwrap(), &pi, &inc).unwrap().failed());
        assert!(check_distributing(reg().get(EXISTS).unwrap(), &pi, &inc).unwrap().failed());
        // surjections are fine for both
        let back = enumerate_model_morphisms(&big, &small).unwrap().remove(0);
        assert!(check_distributing(reg().get(FORALL).unwrap(), &pi, &back).unwrap().passed());
        assert!(check_distributing(reg().get(EXISTS).unwrap(), &pi, &back).unwrap().passed());
    }

    #[test]
    fn pullback_filterability_forms() {
        let m = rel_model(&["0", "1"], &[0]);
        let pi = CtxMorphism::prefix_projection(&xy(), 1).unwrap();
        let loose = check_pullback_filterable(&pi, &m, &gens(&m, &xy()), &gens(&m, &x()), false).unwrap();
        assert!(loose.passed());
        // a point of the product is never the pullback of a point
        let strict = check_pullback_filterable(&pi, &m, &gens(&m, &xy()), &gens(&m, &x()), true).unwrap();
        assert!(strict.failed());
    }

    #[test]
    fn standard_duals_hold() {
        let ms = vec![rel_model(&["0", "1"], &[0]), rel_model(&["0"], &[])];
        let r = reg();
        let pi = CtxMorphism::prefix_projection(&xy(), 1).unwrap();
        let (fa, ex) = (r.get(FORALL).unwrap(), r.get(EXISTS).unwrap());
        assert!(check_dual(fa, ex, &pi, &[1], &ms).unwrap().passed());
        let wrong = check_dual(fa, ex, &pi, &[], &ms).unwrap();
        assert!(wrong.failed());
        assert!(wrong.details.iter().any(|d| d.contains("[1]")));
        let id = CtxMorphism::identity(&x());
        assert!(check_dual(r.get(CONJ).unwrap(), r.get(DISJ).unwrap(), &id, &[1, 2], &ms).unwrap().passed());
        assert!(check_dual(fa, ex, &pi, &[3], &ms).is_err());
    }

    #[test]
    fn projection_and_basic_conditions() {
        let fam = vec![rel_model(&["0", "1"], &[0]), rel_model(&["0", "1"], &[1])];
        let iotas: Vec<SubPresheaf> =
            fam.iter().map(|m| interp_basic(m, &x(), &Atom::Rel("r".into(), vec![Term::Var(0)])).unwrap()).collect();
        let (iota_i, rep) = check_projection_condition(&fam, &x(), &iotas, None).unwrap();
        assert!(rep.passed());
        assert_eq!(iota_i.count(), 1);
        let atom = Atom::Rel("r".into(), vec![Term::Var(0)]);
        assert!(check_basic(&fam, &x(), &atom).unwrap().passed());
        assert!(check_basic(&fam, &xy(), &Atom::Eq(Term::Var(0), Term::Var(1))).unwrap().passed());
    }

    #[test]
    fn finiteness_witnesses() {
        let m = rel_model(&["0", "1"], &[0]);
        let atom = Atom::Rel("r".into(), vec![Term::Var(0)]);
        let g = gens(&m, &x());
        let delta = (0..g.len()).map(|i| g.member_sub(i)).find(|d| d.to_string().contains("0")).unwrap();
        let opts = FinitenessOptions::default();
        let r = check_finiteness(&m, &x(), &atom, &delta, &opts).unwrap();
        assert!(r.passed(), "{r:?}");
        let tauto = Atom::Eq(Term::Var(0), Term::Var(0));
        assert!(check_finiteness(&m, &x(), &tauto, &delta, &opts).unwrap().passed());
        // a probe into a model where r is empty
        let n = rel_model(&["0", "1"], &[]);
        let probes_out = enumerate_model_morphisms(&m, &n).unwrap();
        let opts = FinitenessOptions { probes_out, ..Default::default() };
        assert!(check_finiteness(&m, &x(), &atom, &delta, &opts).unwrap().passed());
    }

    #[test]
    fn trivial_formulas_and_atoms() {
        let fam = vec![rel_model(&["0", "1"], &[0]), rel_model(&["0", "1"], &[1]), rel_model(&["0"], &[0])];
        let labels = ["1", "2", "3"];
        let force = LosOptions { force: true, check_hypotheses: false };
        for f in [Filter::trivial(&labels).unwrap(), Filter::make_principal(&labels, &["2"]).unwrap()] {
            for e in [Expr::Top, Expr::Bot, Expr::rel("r", vec![Term::Var(0)])] {
                let inst = LosInstance::new(fam.clone(), f.clone(), Formula::new(x(), e));
                let rep = los_verify(&inst, force).unwrap();
                assert!(rep.result.passed(), "{rep:?}");
                assert_eq!(rep.rows.len(), rep.result.checked as usize);
            }
        }
    }

    #[test]
    fn hypotheses_gate_the_theorem() {
        let fam = vec![rel_model(&["0", "1"], &[0]), rel_model(&["0", "1"], &[1])];
        let labels = ["1", "2"];
        let phi = Formula::new(x(), Expr::rel("r", vec![Term::Var(0)]));
        let inst = LosInstance::new(fam.clone(), Filter::make_principal(&labels, &["1"]).unwrap(), phi.clone());
        let hs = check_hypotheses(&inst).unwrap();
        for h in &hs {
            assert!(h.passed(), "{h:?}");
        }
        assert!(los_verify(&inst, LosOptions::default()).unwrap().result.passed());
        let trivial = LosInstance::new(fam, Filter::trivial(&labels).unwrap(), phi);
        assert!(matches!(los_verify(&trivial, LosOptions::default()), Err(Error::HypothesesNotMet(_))));
    }

    #[test]
    fn universal_goes_through_its_dual() {
        let fam = vec![rel_model(&["0", "1"], &[0, 1]), rel_model(&["0", "1"], &[1])];
        let labels = ["1", "2"];
        let body = Expr::rel("r", vec![Term::Var(1)]);
        let phi = Formula::new(x(), Expr::forall(&xy(), 1, body).unwrap());
        let inst = LosInstance::new(fam, Filter::make_principal(&labels, &["1"]).unwrap(), phi);
        let hs = check_hypotheses(&inst).unwrap();
        let fil = hs.iter().find(|h| h.condition == "filterable").unwrap();
        assert!(fil.passed(), "{fil:?}");
        assert!(fil.details.iter().any(|d| d.contains("dual")));
        let steps = proof_steps(&inst).unwrap();
        assert!(steps.iter().all(|s| !s.failed()), "{steps:?}");
        let rep = los_verify(&inst, LosOptions { force: true, check_hypotheses: false }).unwrap();
        assert!(rep.result.passed());
    }

    #[test]
    fn sentence_corollary() {
        let fam = vec![bit_model(&[0]), bit_model(&[1]), bit_model(&[])];
        let labels = ["1", "2", "3"];
        let ctx = Context::empty();
        let body = Expr::and(Expr::eq(Term::Var(0), Term::constant("c")), Expr::rel("r", vec![Term::Var(0)]));
        let phi = Formula::new(ctx, Expr::exists(&x(), 0, body).unwrap());
        for f in [
            Filter::make_principal(&labels, &["1"]).unwrap(),
            Filter::make_principal(&labels, &["2"]).unwrap(),
            Filter::make_principal(&labels, &["1", "2"]).unwrap(),
        ] {
            let inst = LosInstance::new(fam.clone(), f, phi.clone());
            let r = los_sentence_corollary(&inst).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let open = LosInstance::new(
            fam,
            Filter::trivial(&labels).unwrap(),
            Formula::new(x(), Expr::rel("r", vec![Term::Var(0)])),
        );
        assert!(matches!(los_sentence_corollary(&open), Err(Error::NotASentence(_))));
    }

    #[test]
    fn disjunction_forward_step_over_any_filter() {
        let fam = vec![rel_model(&["0", "1"], &[0]), rel_model(&["0", "1"], &[1]), rel_model(&["0", "1"], &[])];
        let labels = ["1", "2", "3"];
        let e = Expr::or(Expr::rel("r", vec![Term::Var(0)]), Expr::eq(Term::Var(0), Term::Var(0)));
        let inst = LosInstance::new(fam, Filter::make_principal(&labels, &["1", "2"]).unwrap(), Formula::new(x(), e));
        let steps = proof_steps(&inst).unwrap();
        assert!(steps.iter().all(|s| !s.failed()), "{steps:?}");
        assert!(matches!(steps[2].verdict, Verdict::Skipped(_)));
    }
}
