//! Subpresheaves and their Heyting algebra, base change with its adjoints,
//! sup-generator sets and the sieve classifier Ω.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::bound::{self, Counter};
use crate::cat::{same_base, same_presheaf, FinCategory, MorId, NatTrans, ObjId, Presheaf};
use crate::error::{Error, Result};
use crate::report::ValidationReport;

/// A restriction-closed family of subsets of a presheaf.
#[derive(Clone, Debug)]
pub struct SubPresheaf {
    ambient: Arc<Presheaf>,
    parts: Vec<FixedBitSet>,
}

impl PartialEq for SubPresheaf {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts && same_presheaf(&self.ambient, &other.ambient)
    }
}

impl Eq for SubPresheaf {}

impl Hash for SubPresheaf {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.parts.hash(state);
    }
}

fn empty_parts(amb: &Presheaf) -> Vec<FixedBitSet> {
    (0..amb.base().num_objects()).map(|b| FixedBitSet::with_capacity(amb.size(b))).collect()
}

/// True iff every restriction of a member is a member.
pub fn is_restriction_closed(amb: &Presheaf, parts: &[FixedBitSet]) -> bool {
    let cat = amb.base();
    cat.morphisms()
        .iter()
        .enumerate()
        .all(|(m, mor)| parts[mor.cod].ones().all(|x| parts[mor.dom].contains(amb.act(m, x))))
}

impl SubPresheaf {
    pub fn new(ambient: Arc<Presheaf>, parts: Vec<FixedBitSet>) -> Result<Self> {
        let nobj = ambient.base().num_objects();
        if parts.len() != nobj || parts.iter().enumerate().any(|(b, p)| p.len() != ambient.size(b)) {
            return Err(Error::MalformedInput("subobject parts do not match the ambient".into()));
        }
        if !is_restriction_closed(&ambient, &parts) {
            return Err(Error::MalformedInput("subobject is not closed under restriction".into()));
        }
        Ok(SubPresheaf { ambient, parts })
    }

    pub(crate) fn new_unchecked(ambient: Arc<Presheaf>, parts: Vec<FixedBitSet>) -> Self {
        SubPresheaf { ambient, parts }
    }

    pub fn top(ambient: &Arc<Presheaf>) -> Self {
        let parts = (0..ambient.base().num_objects())
            .map(|b| {
                let mut s = FixedBitSet::with_capacity(ambient.size(b));
                s.insert_range(..);
                s
            })
            .collect();
        SubPresheaf { ambient: ambient.clone(), parts }
    }

    pub fn bottom(ambient: &Arc<Presheaf>) -> Self {
        SubPresheaf { parts: empty_parts(ambient), ambient: ambient.clone() }
    }

    /// From element names per object; checked for restriction closure.
    pub fn from_names(ambient: &Arc<Presheaf>, parts: &[(&str, Vec<&str>)]) -> Result<Self> {
        let mut out = empty_parts(ambient);
        for (o, names) in parts {
            let b = ambient.base().object_id(o)?;
            for n in names {
                out[b].insert(ambient.element_id(b, n)?);
            }
        }
        Self::new(ambient.clone(), out)
    }

    /// From `(object, element index)` pairs, closing downward.
    pub fn generated_by(ambient: &Arc<Presheaf>, elems: &[(ObjId, usize)]) -> Self {
        let mut parts = empty_parts(ambient);
        let cat = ambient.base();
        let mut stack: Vec<(ObjId, usize)> = elems.to_vec();
        while let Some((b, x)) = stack.pop() {
            if parts[b].put(x) {
                continue;
            }
            for &f in cat.arrows_into(b) {
                let a = cat.morphism(f).dom;
                let y = ambient.act(f, x);
                if !parts[a].contains(y) {
                    stack.push((a, y));
                }
            }
        }
        SubPresheaf { ambient: ambient.clone(), parts }
    }

    pub fn ambient(&self) -> &Arc<Presheaf> {
        &self.ambient
    }

    pub fn parts(&self) -> &[FixedBitSet] {
        &self.parts
    }

    pub fn contains(&self, b: ObjId, x: usize) -> bool {
        self.parts[b].contains(x)
    }

    pub fn is_bottom(&self) -> bool {
        self.parts.iter().all(|p| p.is_clear())
    }

    pub fn is_top(&self) -> bool {
        self.parts.iter().all(|p| p.count_ones(..) == p.len())
    }

    pub fn count(&self) -> usize {
        self.parts.iter().map(|p| p.count_ones(..)).sum()
    }

    /// Elements as `(object, index)` pairs in object-then-index order.
    pub fn elements(&self) -> Vec<(ObjId, usize)> {
        self.parts.iter().enumerate().flat_map(|(b, p)| p.ones().map(move |x| (b, x))).collect()
    }

    /// `self ⪯ other`. Ambients are assumed equal.
    pub fn leq(&self, other: &SubPresheaf) -> bool {
        self.parts.iter().zip(&other.parts).all(|(a, b)| a.is_subset(b))
    }

    /// Element names per object name, for reports.
    pub fn names(&self) -> BTreeMap<String, Vec<String>> {
        let cat = self.ambient.base();
        self.parts
            .iter()
            .enumerate()
            .map(|(b, p)| (cat.objects()[b].clone(), p.ones().map(|x| self.ambient.elements(b)[x].clone()).collect()))
            .collect()
    }
}

impl std::fmt::Display for SubPresheaf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names = self.names();
        let mut first = true;
        for (o, els) in names {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{o}:{{{}}}", els.join(","))?;
        }
        Ok(())
    }
}

fn same_ambient(a: &SubPresheaf, b: &SubPresheaf) -> Result<()> {
    if same_presheaf(&a.ambient, &b.ambient) {
        Ok(())
    } else {
        Err(Error::AmbientMismatch("subobjects of different presheaves".into()))
    }
}

pub fn sub_leq(a: &SubPresheaf, b: &SubPresheaf) -> Result<bool> {
    same_ambient(a, b)?;
    Ok(a.leq(b))
}

pub fn sub_meet(a: &SubPresheaf, b: &SubPresheaf) -> Result<SubPresheaf> {
    same_ambient(a, b)?;
    Ok(meet_unchecked(a, b))
}

pub(crate) fn meet_unchecked(a: &SubPresheaf, b: &SubPresheaf) -> SubPresheaf {
    let parts = a
        .parts
        .iter()
        .zip(&b.parts)
        .map(|(x, y)| {
            let mut p = x.clone();
            p.intersect_with(y);
            p
        })
        .collect();
    SubPresheaf { ambient: a.ambient.clone(), parts }
}

pub fn sub_join(a: &SubPresheaf, b: &SubPresheaf) -> Result<SubPresheaf> {
    same_ambient(a, b)?;
    Ok(join_unchecked(a, b))
}

pub(crate) fn join_unchecked(a: &SubPresheaf, b: &SubPresheaf) -> SubPresheaf {
    let parts = a
        .parts
        .iter()
        .zip(&b.parts)
        .map(|(x, y)| {
            let mut p = x.clone();
            p.union_with(y);
            p
        })
        .collect();
    SubPresheaf { ambient: a.ambient.clone(), parts }
}

/// Heyting implication: `x ∈ (a → b)(b₀)` iff every restriction of `x`
/// lying in `a` also lies in `b`.
pub fn sub_implies(a: &SubPresheaf, b: &SubPresheaf) -> Result<SubPresheaf> {
    same_ambient(a, b)?;
    let amb = &a.ambient;
    let cat = amb.base();
    let mut parts = empty_parts(amb);
    for (b0, part) in parts.iter_mut().enumerate() {
        for x in 0..amb.size(b0) {
            let ok = cat.arrows_into(b0).iter().all(|&f| {
                let c0 = cat.morphism(f).dom;
                let y = amb.act(f, x);
                !a.parts[c0].contains(y) || b.parts[c0].contains(y)
            });
            if ok {
                part.insert(x);
            }
        }
    }
    Ok(SubPresheaf { ambient: amb.clone(), parts })
}

/// Pseudo-complement `a → ⊥`.
pub fn sub_neg(a: &SubPresheaf) -> SubPresheaf {
    sub_implies(a, &SubPresheaf::bottom(&a.ambient)).expect("same ambient")
}

fn check_dom(t: &NatTrans, a: &SubPresheaf) -> Result<()> {
    if same_presheaf(t.src(), &a.ambient) {
        Ok(())
    } else {
        Err(Error::AmbientMismatch("subobject does not live on the domain of the map".into()))
    }
}

fn check_cod(t: &NatTrans, b: &SubPresheaf) -> Result<()> {
    if same_presheaf(t.dst(), &b.ambient) {
        Ok(())
    } else {
        Err(Error::AmbientMismatch("subobject does not live on the codomain of the map".into()))
    }
}

/// Base change `t*`: componentwise preimage.
pub fn pullback_sub(t: &NatTrans, b: &SubPresheaf) -> Result<SubPresheaf> {
    check_cod(t, b)?;
    let src = t.src();
    let parts = (0..src.base().num_objects())
        .map(|c| {
            let mut p = FixedBitSet::with_capacity(src.size(c));
            for (x, &y) in t.component(c).iter().enumerate() {
                if b.parts[c].contains(y) {
                    p.insert(x);
                }
            }
            p
        })
        .collect();
    Ok(SubPresheaf { ambient: src.clone(), parts })
}

/// Left adjoint `∃t`: componentwise image.
pub fn exists_along(t: &NatTrans, a: &SubPresheaf) -> Result<SubPresheaf> {
    check_dom(t, a)?;
    let dst = t.dst();
    let parts = (0..dst.base().num_objects())
        .map(|c| {
            let mut p = FixedBitSet::with_capacity(dst.size(c));
            for x in a.parts[c].ones() {
                p.insert(t.apply(c, x));
            }
            p
        })
        .collect();
    Ok(SubPresheaf { ambient: dst.clone(), parts })
}

/// Right adjoint `∀t`: `y ∈ ∀t(a)(b₀)` iff for every `g: c -> b₀` the whole
/// fiber of `t_c` over `Y(g)(y)` lies in `a(c)`.
pub fn forall_along(t: &NatTrans, a: &SubPresheaf) -> Result<SubPresheaf> {
    check_dom(t, a)?;
    Ok(forall_with_fibers(t, &t.fibers(), a))
}

pub(crate) fn forall_with_fibers(t: &NatTrans, fibers: &[Vec<Vec<usize>>], a: &SubPresheaf) -> SubPresheaf {
    let dst = t.dst();
    let cat = dst.base();
    let mut parts = empty_parts(dst);
    for (b0, part) in parts.iter_mut().enumerate() {
        for y in 0..dst.size(b0) {
            let ok = cat.arrows_into(b0).iter().all(|&g| {
                let c = cat.morphism(g).dom;
                fibers[c][dst.act(g, y)].iter().all(|&x| a.parts[c].contains(x))
            });
            if ok {
                part.insert(y);
            }
        }
    }
    SubPresheaf { ambient: dst.clone(), parts }
}

/// Flattened element graph of a presheaf: direct non-identity restrictions
/// in both directions.
struct ElementGraph {
    offsets: Vec<usize>,
    down: Vec<Vec<usize>>,
    up: Vec<Vec<usize>>,
}

impl ElementGraph {
    fn new(amb: &Presheaf) -> Self {
        let cat = amb.base();
        let nobj = cat.num_objects();
        let mut offsets = vec![0; nobj + 1];
        for b in 0..nobj {
            offsets[b + 1] = offsets[b] + amb.size(b);
        }
        let n = offsets[nobj];
        let mut down = vec![Vec::new(); n];
        let mut up = vec![Vec::new(); n];
        for b in 0..nobj {
            for x in 0..amb.size(b) {
                let e = offsets[b] + x;
                for &f in cat.arrows_into(b) {
                    if cat.is_identity(f) {
                        continue;
                    }
                    let e2 = offsets[cat.morphism(f).dom] + amb.act(f, x);
                    if e2 != e && !down[e].contains(&e2) {
                        down[e].push(e2);
                        up[e2].push(e);
                    }
                }
            }
        }
        ElementGraph { offsets, down, up }
    }

    fn to_parts(&self, amb: &Presheaf, members: impl Iterator<Item = usize>) -> Vec<FixedBitSet> {
        let mut parts = empty_parts(amb);
        for e in members {
            let b = self.offsets.partition_point(|&o| o <= e) - 1;
            parts[b].insert(e - self.offsets[b]);
        }
        parts
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Free,
    In,
    Out,
}

/// Enumerates the down-sets of the restriction preorder restricted to
/// `universe` (which must itself be down-closed). Results are element
/// lists; ⊥ comes first.
fn enumerate_downsets(
    g: &ElementGraph,
    universe: &[usize],
    counter: &mut Counter,
    out: &mut Vec<Vec<usize>>,
) -> Result<()> {
    let n = g.down.len();
    let mut mark = vec![Mark::Out; n];
    for &e in universe {
        mark[e] = Mark::Free;
    }
    fn propagate(g: &ElementGraph, mark: &mut [Mark], e: usize, m: Mark, trail: &mut Vec<usize>) -> bool {
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            match mark[x] {
                Mark::Free => {
                    mark[x] = m;
                    trail.push(x);
                    let next = if m == Mark::In { &g.down[x] } else { &g.up[x] };
                    stack.extend(next.iter().copied());
                }
                cur if cur == m => {}
                _ => return false,
            }
        }
        true
    }
    fn rec(
        g: &ElementGraph,
        universe: &[usize],
        pos: usize,
        mark: &mut Vec<Mark>,
        counter: &mut Counter,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        let mut pos = pos;
        while pos < universe.len() && mark[universe[pos]] != Mark::Free {
            pos += 1;
        }
        if pos == universe.len() {
            counter.tick()?;
            out.push(universe.iter().copied().filter(|&e| mark[e] == Mark::In).collect());
            return Ok(());
        }
        for m in [Mark::Out, Mark::In] {
            let mut trail = Vec::new();
            if propagate(g, mark, universe[pos], m, &mut trail) {
                rec(g, universe, pos + 1, mark, counter, out)?;
            }
            for e in trail {
                mark[e] = Mark::Free;
            }
        }
        Ok(())
    }
    rec(g, universe, 0, &mut mark, counter, out)
}

/// All subobjects of `f`, ⊥ first, in a deterministic order.
pub fn enumerate_sub(f: &Arc<Presheaf>) -> Result<Vec<SubPresheaf>> {
    let g = ElementGraph::new(f);
    let universe: Vec<usize> = (0..g.down.len()).collect();
    let mut counter = Counter::new("subobjects");
    let mut raw = Vec::new();
    enumerate_downsets(&g, &universe, &mut counter, &mut raw)?;
    Ok(raw.into_iter().map(|els| SubPresheaf { ambient: f.clone(), parts: g.to_parts(f, els.into_iter()) }).collect())
}

/// The subobject `⟨x⟩` generated by one element.
pub fn principal(f: &Arc<Presheaf>, b: ObjId, x: usize) -> SubPresheaf {
    SubPresheaf::generated_by(f, &[(b, x)])
}

/// A subobject stored sparsely as its sorted `(object, index)` elements.
/// Generator sets of large products hold many tiny subobjects, so they use
/// this form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen(pub Vec<(ObjId, usize)>);

impl Gen {
    pub fn from_sub(s: &SubPresheaf) -> Gen {
        Gen(s.elements())
    }

    pub fn to_sub(&self, amb: &Arc<Presheaf>) -> SubPresheaf {
        let mut parts = empty_parts(amb);
        for &(b, x) in &self.0 {
            parts[b].insert(x);
        }
        SubPresheaf { ambient: amb.clone(), parts }
    }

    pub fn leq(&self, s: &SubPresheaf) -> bool {
        self.0.iter().all(|&(b, x)| s.parts[b].contains(x))
    }

    pub fn leq_gen(&self, other: &Gen) -> bool {
        self.0.iter().all(|e| other.0.binary_search(e).is_ok())
    }

    pub fn names(&self, amb: &Presheaf) -> BTreeMap<String, Vec<String>> {
        let cat = amb.base();
        let mut out: BTreeMap<String, Vec<String>> = cat.objects().iter().map(|o| (o.clone(), Vec::new())).collect();
        for &(b, x) in &self.0 {
            out.get_mut(&cat.objects()[b]).unwrap().push(amb.elements(b)[x].clone());
        }
        out
    }
}

/// A set `l_X` of nonbottom subobjects used as generators.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    ambient: Arc<Presheaf>,
    members: Vec<Gen>,
    index: HashMap<Gen, usize>,
}

impl GeneratorSet {
    /// Accepts any list of subobjects; ⊥ is dropped and duplicates merged.
    /// Call [`GeneratorSet::validate`] before relying on it.
    pub fn new(ambient: &Arc<Presheaf>, members: &[SubPresheaf]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for m in members {
            if !same_presheaf(&m.ambient, ambient) {
                return Err(Error::AmbientMismatch("generator on a different presheaf".into()));
            }
            if !m.is_bottom() {
                set.insert(Gen::from_sub(m));
            }
        }
        Ok(Self::from_gens(ambient, set.into_iter().collect()))
    }

    pub(crate) fn from_gens(ambient: &Arc<Presheaf>, members: Vec<Gen>) -> Self {
        let index = members.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        GeneratorSet { ambient: ambient.clone(), members, index }
    }

    pub fn ambient(&self) -> &Arc<Presheaf> {
        &self.ambient
    }

    pub fn members(&self) -> &[Gen] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_sub(&self, i: usize) -> SubPresheaf {
        self.members[i].to_sub(&self.ambient)
    }

    pub fn contains(&self, g: &Gen) -> bool {
        self.index.contains_key(g)
    }

    pub fn contains_sub(&self, s: &SubPresheaf) -> bool {
        self.contains(&Gen::from_sub(s))
    }

    /// `↓a`: indices of the members below `a`.
    pub fn down(&self, a: &SubPresheaf) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i].leq(a)).collect()
    }

    /// Join of the given members.
    pub fn join_of(&self, idx: &[usize]) -> SubPresheaf {
        let mut parts = empty_parts(&self.ambient);
        for &i in idx {
            for &(b, x) in &self.members[i].0 {
                parts[b].insert(x);
            }
        }
        SubPresheaf { ambient: self.ambient.clone(), parts }
    }

    /// Checks: no ⊥, downward closure among nonbottom subobjects, and
    /// `a = ⋁↓a` for every subobject `a`.
    pub fn validate(&self) -> Result<ValidationReport> {
        let mut rep = ValidationReport::new();
        if self.members.iter().any(|g| g.0.is_empty()) {
            rep.push("bottom", "⊥ is listed as a generator");
        }
        let g = ElementGraph::new(&self.ambient);
        let mut counter = Counter::new("generator down-closure");
        for m in &self.members {
            let universe: Vec<usize> = m.0.iter().map(|&(b, x)| g.offsets[b] + x).collect();
            let mut below = Vec::new();
            enumerate_downsets(&g, &universe, &mut counter, &mut below)?;
            for els in below.into_iter().filter(|e| !e.is_empty()) {
                let sub =
                    SubPresheaf { ambient: self.ambient.clone(), parts: g.to_parts(&self.ambient, els.into_iter()) };
                let gen = Gen::from_sub(&sub);
                if !self.contains(&gen) {
                    rep.push("downward closure", format!("{sub} lies below a generator but is missing"));
                }
            }
        }
        for a in enumerate_sub(&self.ambient)? {
            let j = self.join_of(&self.down(&a));
            if j != a {
                rep.push("sup-generation", format!("{a} is not the join of the generators below it"));
            }
        }
        Ok(rep)
    }
}

/// Canonical generators: the nonbottom subobjects below some `⟨x⟩`.
pub fn generators(f: &Arc<Presheaf>) -> Result<GeneratorSet> {
    let g = ElementGraph::new(f);
    let mut counter = Counter::new("generators");
    let mut set = BTreeSet::new();
    let cat = f.base();
    for b in 0..cat.num_objects() {
        for x in 0..f.size(b) {
            let p = principal(f, b, x);
            let universe: Vec<usize> = p.elements().into_iter().map(|(b, x)| g.offsets[b] + x).collect();
            if universe.len() == 1 {
                counter.tick()?;
                set.insert(Gen(vec![(b, x)]));
                continue;
            }
            let mut below = Vec::new();
            enumerate_downsets(&g, &universe, &mut counter, &mut below)?;
            for els in below.into_iter().filter(|e| !e.is_empty()) {
                let sub = SubPresheaf { ambient: f.clone(), parts: g.to_parts(f, els.into_iter()) };
                set.insert(Gen::from_sub(&sub));
            }
        }
    }
    Ok(GeneratorSet::from_gens(f, set.into_iter().collect()))
}

fn check_gens_for(t: &NatTrans, lx: &GeneratorSet, ly: &GeneratorSet) -> Result<()> {
    if !same_presheaf(lx.ambient(), t.src()) || !same_presheaf(ly.ambient(), t.dst()) {
        return Err(Error::AmbientMismatch("generator sets do not match the map".into()));
    }
    Ok(())
}

/// Exhaustive transport check: for every `δ_X ∈ l_X` and `ι ∈ Sub(Y)` with
/// `δ_X ⪯ t*(ι)`, some `δ_Y ∈ l_Y` has `δ_Y ⪯ ι` and `δ_X ⪯ t*(δ_Y)`.
pub fn check_supgen_condition(t: &NatTrans, lx: &GeneratorSet, ly: &GeneratorSet) -> Result<ValidationReport> {
    check_gens_for(t, lx, ly)?;
    let subs_y = enumerate_sub(t.dst())?;
    bound::guard("transport check", lx.len() as f64 * subs_y.len() as f64)?;
    let ly_subs: Vec<SubPresheaf> = (0..ly.len()).map(|i| ly.member_sub(i)).collect();
    let ly_pulled: Vec<SubPresheaf> = ly_subs.iter().map(|d| pullback_sub(t, d)).collect::<Result<_>>()?;
    let pulled: Vec<SubPresheaf> = subs_y.iter().map(|i| pullback_sub(t, i)).collect::<Result<_>>()?;
    let mut rep = ValidationReport::new();
    for dx in lx.members() {
        for (iota, pi) in subs_y.iter().zip(&pulled) {
            if !dx.leq(pi) {
                continue;
            }
            let found = ly_subs.iter().zip(&ly_pulled).any(|(dy, dyp)| dy.leq(iota) && dx.leq(dyp));
            if !found {
                rep.push("transport", format!("no witness for δ_X = {} and ι = {iota}", dx.to_sub(lx.ambient())));
            }
        }
    }
    Ok(rep)
}

/// Equivalent fast form of [`check_supgen_condition`]: the condition holds
/// iff `∃t(δ_X) ∈ l_Y` for every `δ_X ∈ l_X` (take `ι = ∃t(δ_X)`).
pub fn check_supgen_condition_by_image(t: &NatTrans, lx: &GeneratorSet, ly: &GeneratorSet) -> Result<ValidationReport> {
    check_gens_for(t, lx, ly)?;
    let mut rep = ValidationReport::new();
    for dx in lx.members() {
        let img: BTreeSet<(ObjId, usize)> = dx.0.iter().map(|&(b, x)| (b, t.apply(b, x))).collect();
        let img = Gen(img.into_iter().collect());
        if !ly.contains(&img) {
            rep.push(
                "transport",
                format!("image {} of δ_X = {} is not a generator", img.to_sub(ly.ambient()), dx.to_sub(lx.ambient())),
            );
        }
    }
    Ok(rep)
}

/// Splits `ι ⪯ δ₁ ∨ δ₂` as `(ι ∧ δ₁, ι ∧ δ₂)`.
pub fn cover_split(iota: &SubPresheaf, d1: &SubPresheaf, d2: &SubPresheaf) -> Result<(SubPresheaf, SubPresheaf)> {
    same_ambient(iota, d1)?;
    same_ambient(iota, d2)?;
    if !iota.leq(&join_unchecked(d1, d2)) {
        return Err(Error::PreconditionFailed("ι is not below δ₁ ∨ δ₂".into()));
    }
    Ok((meet_unchecked(iota, d1), meet_unchecked(iota, d2)))
}

/// A sieve on an object: arrows into it closed under precomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sieve {
    pub on: ObjId,
    pub arrows: Vec<MorId>,
}

/// The subobject classifier of presheaves on a finite category.
#[derive(Clone, Debug)]
pub struct Omega {
    pub presheaf: Arc<Presheaf>,
    sieves: Vec<Vec<Sieve>>,
    maximal: Vec<usize>,
}

impl Omega {
    pub fn sieves(&self, b: ObjId) -> &[Sieve] {
        &self.sieves[b]
    }

    pub fn maximal(&self, b: ObjId) -> usize {
        self.maximal[b]
    }

    fn index_of(&self, b: ObjId, arrows: &[MorId]) -> usize {
        self.sieves[b].iter().position(|s| s.arrows == arrows).expect("sieve pullback is a sieve")
    }
}

fn is_sieve(cat: &FinCategory, arrows: &[MorId]) -> bool {
    arrows.iter().all(|&f| {
        let dom = cat.morphism(f).dom;
        cat.arrows_into(dom).iter().all(|&g| cat.compose(f, g).is_some_and(|fg| arrows.contains(&fg)))
    })
}

/// `Ω(A)` = sieves on `A`; `Ω(f)(S) = {g | f∘g ∈ S}`.
pub fn omega_presheaf(cat: &Arc<FinCategory>) -> Result<Omega> {
    let nobj = cat.num_objects();
    let est: f64 = (0..nobj).map(|b| bound::pow_estimate(2, cat.arrows_into(b).len())).sum();
    bound::guard("sieve candidates", est)?;
    let mut sieves = Vec::with_capacity(nobj);
    let mut maximal = Vec::with_capacity(nobj);
    for b in 0..nobj {
        let into = cat.arrows_into(b);
        let mut list = Vec::new();
        for mask in 0u64..(1u64 << into.len()) {
            let arrows: Vec<MorId> =
                into.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &m)| m).collect();
            if is_sieve(cat, &arrows) {
                list.push(Sieve { on: b, arrows });
            }
        }
        maximal.push(list.iter().position(|s| s.arrows.len() == into.len()).expect("maximal sieve"));
        sieves.push(list);
    }
    let names: Vec<Vec<String>> = sieves
        .iter()
        .map(|l| {
            l.iter()
                .map(|s| {
                    let ns: Vec<&str> = s.arrows.iter().map(|&m| cat.morphism(m).name.as_str()).collect();
                    format!("{{{}}}", ns.join(","))
                })
                .collect()
        })
        .collect();
    let mut maps = Vec::with_capacity(cat.num_morphisms());
    for f in 0..cat.num_morphisms() {
        let mor = cat.morphism(f);
        let map = sieves[mor.cod]
            .iter()
            .map(|s| {
                let pulled: Vec<MorId> = cat
                    .arrows_into(mor.dom)
                    .iter()
                    .copied()
                    .filter(|&g| cat.compose(f, g).is_some_and(|fg| s.arrows.contains(&fg)))
                    .collect();
                sieves[mor.dom].iter().position(|t| t.arrows == pulled).expect("sieve pullback is a sieve")
            })
            .collect();
        maps.push(map);
    }
    let presheaf = Arc::new(Presheaf::new(cat.clone(), names, maps)?);
    Ok(Omega { presheaf, sieves, maximal })
}

/// `χ(G)_A(x) = {f: B -> A | F(f)(x) ∈ G(B)}`.
pub fn char_morphism(omega: &Omega, g: &SubPresheaf) -> Result<NatTrans> {
    let amb = &g.ambient;
    let cat = amb.base();
    if !same_base(cat, omega.presheaf.base()) {
        return Err(Error::BaseMismatch("classifier over a different base".into()));
    }
    let components = (0..cat.num_objects())
        .map(|a| {
            (0..amb.size(a))
                .map(|x| {
                    let arrows: Vec<MorId> = cat
                        .arrows_into(a)
                        .iter()
                        .copied()
                        .filter(|&f| g.parts[cat.morphism(f).dom].contains(amb.act(f, x)))
                        .collect();
                    omega.index_of(a, &arrows)
                })
                .collect()
        })
        .collect();
    Ok(NatTrans::new_unchecked(amb.clone(), omega.presheaf.clone(), components))
}

/// Inverse of [`char_morphism`]: the elements sent to the maximal sieve.
pub fn sub_from_char(omega: &Omega, x: &NatTrans) -> Result<SubPresheaf> {
    if !same_presheaf(x.dst(), &omega.presheaf) {
        return Err(Error::AmbientMismatch("map does not land in Ω".into()));
    }
    let src = x.src();
    let parts = (0..src.base().num_objects())
        .map(|a| {
            let mut p = FixedBitSet::with_capacity(src.size(a));
            for (e, &s) in x.component(a).iter().enumerate() {
                if s == omega.maximal[a] {
                    p.insert(e);
                }
            }
            p
        })
        .collect();
    Ok(SubPresheaf { ambient: src.clone(), parts })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cat::check_nat_trans;

    fn set(names: &[&str]) -> Arc<Presheaf> {
        Arc::new(Presheaf::set(Arc::new(FinCategory::terminal()), names).unwrap())
    }

    fn s(amb: &Arc<Presheaf>, names: &[&str]) -> SubPresheaf {
        SubPresheaf::from_names(amb, &[("pt", names.to_vec())]).unwrap()
    }

    fn edge() -> Arc<Presheaf> {
        Arc::new(
            Presheaf::from_names(
                Arc::new(FinCategory::graph()),
                &[("V", vec!["v0", "v1"]), ("E", vec!["e"])],
                &[("s", vec![("e", "v0")]), ("t", vec![("e", "v1")])],
            )
            .unwrap(),
        )
    }

    #[test]
    fn lattice_examples() {
        let x = set(&["1", "2", "3"]);
        let a = s(&x, &["1", "2"]);
        let b = s(&x, &["2", "3"]);
        assert_eq!(sub_meet(&a, &b).unwrap(), s(&x, &["2"]));
        assert_eq!(sub_meet(&a, &SubPresheaf::top(&x)).unwrap(), a);
        assert_eq!(sub_join(&a, &SubPresheaf::bottom(&x)).unwrap(), a);
        assert_eq!(sub_implies(&a, &b).unwrap(), s(&x, &["2", "3"]));
        assert!(sub_implies(&a, &a).unwrap().is_top());
        let other = set(&["1"]);
        assert!(matches!(sub_meet(&a, &SubPresheaf::top(&other)), Err(Error::AmbientMismatch(_))));
    }

    #[test]
    fn non_boolean_negation_on_an_edge() {
        let e = edge();
        let a = SubPresheaf::from_names(&e, &[("V", vec!["v0", "v1"])]).unwrap();
        let na = sub_neg(&a);
        assert!(na.is_bottom());
        let nna = sub_neg(&na);
        assert!(nna.is_top());
        assert_ne!(nna, a);
    }

    #[test]
    fn union_of_edge_subgraphs_is_closed() {
        let g = Arc::new(
            Presheaf::from_names(
                Arc::new(FinCategory::graph()),
                &[("V", vec!["a", "b", "c"]), ("E", vec!["ab", "bc"])],
                &[("s", vec![("ab", "a"), ("bc", "b")]), ("t", vec![("ab", "b"), ("bc", "c")])],
            )
            .unwrap(),
        );
        let x = SubPresheaf::from_names(&g, &[("V", vec!["a", "b"]), ("E", vec!["ab"])]).unwrap();
        let y = SubPresheaf::from_names(&g, &[("V", vec!["b", "c"]), ("E", vec!["bc"])]).unwrap();
        let u = sub_join(&x, &y).unwrap();
        assert!(is_restriction_closed(&g, u.parts()));
        assert!(SubPresheaf::from_names(&g, &[("E", vec!["ab"])]).is_err());
    }

    #[test]
    fn quantifier_examples_on_sets() {
        let x = set(&["1", "2", "3"]);
        let y = set(&["x", "y"]);
        let f = NatTrans::new(x.clone(), y.clone(), vec![vec![0, 0, 1]]).unwrap();
        assert_eq!(exists_along(&f, &s(&x, &["1"])).unwrap(), s(&y, &["x"]));
        assert!(exists_along(&f, &SubPresheaf::bottom(&x)).unwrap().is_bottom());
        assert_eq!(forall_along(&f, &s(&x, &["1", "2"])).unwrap(), s(&y, &["x"]));
        assert!(forall_along(&f, &s(&x, &["1"])).unwrap().is_bottom());
        assert!(forall_along(&f, &SubPresheaf::top(&x)).unwrap().is_top());
        let c = NatTrans::new(set(&["1", "2"]), set(&["x"]), vec![vec![0, 0]]).unwrap();
        assert!(pullback_sub(&c, &SubPresheaf::top(c.dst())).unwrap().is_top());
        // adjunction table: 8 × 4 pairs
        let mut pairs = 0;
        for a in enumerate_sub(&x).unwrap() {
            for b in enumerate_sub(&y).unwrap() {
                assert_eq!(exists_along(&f, &a).unwrap().leq(&b), a.leq(&pullback_sub(&f, &b).unwrap()));
                pairs += 1;
            }
        }
        assert_eq!(pairs, 32);
    }

    #[test]
    fn forall_outside_image_is_vacuous() {
        let e = edge();
        let base = e.base().clone();
        let two = Arc::new(
            Presheaf::from_names(
                base,
                &[("V", vec!["v0", "v1", "w"]), ("E", vec!["e", "f"])],
                &[("s", vec![("e", "v0"), ("f", "w")]), ("t", vec![("e", "v1"), ("f", "w")])],
            )
            .unwrap(),
        );
        let inc = NatTrans::new(e.clone(), two.clone(), vec![vec![0, 1], vec![0]]).unwrap();
        assert!(check_nat_trans(&inc).is_ok());
        for a in enumerate_sub(&e).unwrap() {
            let r = forall_along(&inc, &a).unwrap();
            assert!(r.contains(0, 2));
            assert!(r.contains(1, 1));
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_sub(&set(&["1", "2", "3"])).unwrap().len(), 8);
        // ⊥, {v0}, {v1}, {v0,v1}, full
        let e = edge();
        let subs = enumerate_sub(&e).unwrap();
        assert_eq!(subs.len(), 5);
        assert!(subs[0].is_bottom());
        let term = Arc::new(Presheaf::terminal(Arc::new(FinCategory::graph())));
        assert_eq!(enumerate_sub(&term).unwrap().len(), 3);
    }

    #[test]
    fn generator_examples() {
        let x = set(&["1", "2"]);
        let l = generators(&x).unwrap();
        assert_eq!(l.len(), 2);
        assert!(l.validate().unwrap().is_ok());
        let e = edge();
        let le = generators(&e).unwrap();
        assert_eq!(le.len(), 4);
        assert!(le.validate().unwrap().is_ok());
        for a in enumerate_sub(&e).unwrap() {
            assert_eq!(le.join_of(&le.down(&a)), a);
        }
    }

    #[test]
    fn transport_condition() {
        let x = set(&["1", "2", "3"]);
        let y = set(&["x", "y"]);
        let f = NatTrans::new(x.clone(), y.clone(), vec![vec![0, 0, 1]]).unwrap();
        let (lx, ly) = (generators(&x).unwrap(), generators(&y).unwrap());
        assert!(check_supgen_condition(&f, &lx, &ly).unwrap().is_ok());
        assert!(check_supgen_condition_by_image(&f, &lx, &ly).unwrap().is_ok());
        let id = NatTrans::identity(&x);
        assert!(check_supgen_condition(&id, &lx, &lx).unwrap().is_ok());
        let truncated = GeneratorSet::new(&y, &[s(&y, &["y"])]).unwrap();
        let rep = check_supgen_condition(&f, &lx, &truncated).unwrap();
        assert!(!rep.is_ok());
        assert!(rep.mentions("pt:{1}"));
        assert!(!check_supgen_condition_by_image(&f, &lx, &truncated).unwrap().is_ok());
    }

    #[test]
    fn cover_split_examples() {
        let x = set(&["1", "2", "3"]);
        let (a, b) = cover_split(&s(&x, &["1", "2"]), &s(&x, &["1"]), &s(&x, &["2", "3"])).unwrap();
        assert_eq!(a, s(&x, &["1"]));
        assert_eq!(b, s(&x, &["2"]));
        assert!(matches!(
            cover_split(&s(&x, &["1", "2"]), &s(&x, &["1"]), &s(&x, &["3"])),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn omega_examples() {
        let pt = Arc::new(FinCategory::terminal());
        assert_eq!(omega_presheaf(&pt).unwrap().presheaf.size(0), 2);
        let g = Arc::new(FinCategory::graph());
        let om = omega_presheaf(&g).unwrap();
        assert_eq!(om.presheaf.size(0), 2);
        assert_eq!(om.presheaf.size(1), 5);
        assert_eq!(om.presheaf.elements(1), &["{}", "{s}", "{t}", "{s,t}", "{id_E,s,t}"]);
        assert!(crate::cat::check_presheaf(&om.presheaf).is_ok());
        let e = edge();
        let om = omega_presheaf(e.base()).unwrap();
        for sub in enumerate_sub(&e).unwrap() {
            let chi = char_morphism(&om, &sub).unwrap();
            assert!(check_nat_trans(&chi).is_ok());
            assert_eq!(sub_from_char(&om, &chi).unwrap(), sub);
        }
    }
}
