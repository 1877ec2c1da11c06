//! Finite categories, presheaves over them, natural transformations and
//! finite products of presheaves.
//!
//! A presheaf is stored contravariantly: a morphism `f: a -> b` of the base
//! acts as a function from the elements at `b` to the elements at `a`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock};

use crate::bound;
use crate::error::{Error, Result};
use crate::report::ValidationReport;

pub type ObjId = usize;
pub type MorId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    pub name: String,
    pub dom: ObjId,
    pub cod: ObjId,
}

/// A finite category with an explicit composition table.
#[derive(Clone, Debug)]
pub struct FinCategory {
    objects: Vec<String>,
    morphisms: Vec<Morphism>,
    identity: Vec<MorId>,
    table: BTreeMap<(MorId, MorId), MorId>,
    dense: Vec<Option<MorId>>,
    into: Vec<Vec<MorId>>,
}

impl PartialEq for FinCategory {
    fn eq(&self, other: &Self) -> bool {
        self.objects == other.objects
            && self.morphisms == other.morphisms
            && self.identity == other.identity
            && self.table == other.table
    }
}

impl Eq for FinCategory {}

fn unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::MalformedInput(format!("duplicate {what} identifier '{n}'")));
        }
    }
    Ok(())
}

impl FinCategory {
    /// Builds a category from name tables. `compose` lists triples
    /// `(g, f, g∘f)`. Laws are not checked here; see [`check_category`].
    pub fn new(
        objects: Vec<String>,
        morphisms: Vec<(String, String, String)>,
        identities: Vec<(String, String)>,
        compose: Vec<(String, String, String)>,
    ) -> Result<Self> {
        unique(&objects, "object")?;
        let mor_names: Vec<String> = morphisms.iter().map(|m| m.0.clone()).collect();
        unique(&mor_names, "morphism")?;
        let obj_ix = |n: &str| {
            objects.iter().position(|o| o == n).ok_or_else(|| Error::UnknownIdentifier(format!("object '{n}'")))
        };
        let mut mors = Vec::with_capacity(morphisms.len());
        for (name, dom, cod) in &morphisms {
            mors.push(Morphism { name: name.clone(), dom: obj_ix(dom)?, cod: obj_ix(cod)? });
        }
        let mor_ix = |n: &str| {
            mor_names.iter().position(|o| o == n).ok_or_else(|| Error::UnknownIdentifier(format!("morphism '{n}'")))
        };
        let mut identity = vec![usize::MAX; objects.len()];
        for (o, m) in &identities {
            let oi = obj_ix(o)?;
            if identity[oi] != usize::MAX {
                return Err(Error::MalformedInput(format!("duplicate identity for object '{o}'")));
            }
            identity[oi] = mor_ix(m)?;
        }
        if let Some(b) = identity.iter().position(|&m| m == usize::MAX) {
            return Err(Error::MalformedInput(format!("object '{}' has no identity", objects[b])));
        }
        let mut table = BTreeMap::new();
        for (g, f, h) in &compose {
            let key = (mor_ix(g)?, mor_ix(f)?);
            if table.insert(key, mor_ix(h)?).is_some() {
                return Err(Error::MalformedInput(format!("duplicate composite entry for {g}∘{f}")));
            }
        }
        Ok(Self::assemble(objects, mors, identity, table))
    }

    fn assemble(
        objects: Vec<String>,
        morphisms: Vec<Morphism>,
        identity: Vec<MorId>,
        table: BTreeMap<(MorId, MorId), MorId>,
    ) -> Self {
        let m = morphisms.len();
        let mut dense = vec![None; m * m];
        for (&(g, f), &h) in &table {
            dense[g * m + f] = Some(h);
        }
        let mut into = vec![Vec::new(); objects.len()];
        for (i, mor) in morphisms.iter().enumerate() {
            into[mor.cod].push(i);
        }
        FinCategory { objects, morphisms, identity, table, dense, into }
    }

    /// The terminal category: one object, one identity.
    pub fn terminal() -> Self {
        Self::poset(&["pt"], &[])
    }

    /// The graph base: objects V, E and two morphisms s, t: V -> E.
    /// Presheaves over it are directed multigraphs.
    pub fn graph() -> Self {
        let objects = vec!["V".to_string(), "E".to_string()];
        let mors = vec![
            Morphism { name: "id_V".into(), dom: 0, cod: 0 },
            Morphism { name: "id_E".into(), dom: 1, cod: 1 },
            Morphism { name: "s".into(), dom: 0, cod: 1 },
            Morphism { name: "t".into(), dom: 0, cod: 1 },
        ];
        let mut table = BTreeMap::new();
        for (i, m) in mors.iter().enumerate() {
            table.insert((i, m.dom), i);
            table.insert((m.cod, i), i);
        }
        Self::assemble(objects, mors, vec![0, 1], table)
    }

    /// The thin category of a finite poset. `leq` lists the strict pairs
    /// `(i, j)` with `i < j`; it is closed transitively here.
    pub fn poset(names: &[&str], leq: &[(usize, usize)]) -> Self {
        let n = names.len();
        let mut rel = vec![vec![false; n]; n];
        for (i, row) in rel.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(i, j) in leq {
            rel[i][j] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if rel[i][k] && rel[k][j] {
                        rel[i][j] = true;
                    }
                }
            }
        }
        let mut mors = Vec::new();
        let mut id = vec![0; n];
        let mut at = HashMap::new();
        for i in 0..n {
            id[i] = mors.len();
            at.insert((i, i), mors.len());
            mors.push(Morphism { name: format!("id_{}", names[i]), dom: i, cod: i });
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && rel[i][j] {
                    at.insert((i, j), mors.len());
                    mors.push(Morphism { name: format!("{}<={}", names[i], names[j]), dom: i, cod: j });
                }
            }
        }
        let mut table = BTreeMap::new();
        for (gi, g) in mors.iter().enumerate() {
            for (fi, f) in mors.iter().enumerate() {
                if f.cod == g.dom {
                    table.insert((gi, fi), at[&(f.dom, g.cod)]);
                }
            }
        }
        Self::assemble(names.iter().map(|s| s.to_string()).collect(), mors, id, table)
    }

    /// The chain `p0 <= p1 <= p2`.
    pub fn chain3() -> Self {
        Self::poset(&["p0", "p1", "p2"], &[(0, 1), (1, 2)])
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_morphisms(&self) -> usize {
        self.morphisms.len()
    }

    pub fn morphism(&self, m: MorId) -> &Morphism {
        &self.morphisms[m]
    }

    pub fn identity(&self, b: ObjId) -> MorId {
        self.identity[b]
    }

    pub fn is_identity(&self, m: MorId) -> bool {
        self.identity[self.morphisms[m].dom] == m
    }

    /// `g ∘ f`, if the table has an entry.
    pub fn compose(&self, g: MorId, f: MorId) -> Option<MorId> {
        self.dense[g * self.morphisms.len() + f]
    }

    pub fn composition_table(&self) -> &BTreeMap<(MorId, MorId), MorId> {
        &self.table
    }

    /// Morphisms with codomain `b`, in table order.
    pub fn arrows_into(&self, b: ObjId) -> &[MorId] {
        &self.into[b]
    }

    pub fn hom(&self, a: ObjId, b: ObjId) -> Vec<MorId> {
        self.into[b].iter().copied().filter(|&m| self.morphisms[m].dom == a).collect()
    }

    /// Morphisms `a -> b` by object name.
    pub fn hom_set(&self, a: &str, b: &str) -> Result<Vec<MorId>> {
        Ok(self.hom(self.object_id(a)?, self.object_id(b)?))
    }

    pub fn object_id(&self, name: &str) -> Result<ObjId> {
        self.objects.iter().position(|o| o == name).ok_or_else(|| Error::UnknownIdentifier(format!("object '{name}'")))
    }

    pub fn morphism_id(&self, name: &str) -> Result<MorId> {
        self.morphisms
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownIdentifier(format!("morphism '{name}'")))
    }

    /// One object and only its identity: presheaves are plain finite sets.
    pub fn is_set_like(&self) -> bool {
        self.objects.len() == 1 && self.morphisms.len() == 1
    }
}

/// Lists every violated category law.
pub fn check_category(cat: &FinCategory) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let mors = &cat.morphisms;
    let name = |m: MorId| mors[m].name.as_str();
    for (b, &id) in cat.identity.iter().enumerate() {
        if mors[id].dom != b || mors[id].cod != b {
            rep.push("identity", format!("identity {} of {} is not an endomorphism of it", name(id), cat.objects[b]));
        }
    }
    for (&(g, f), &h) in &cat.table {
        if mors[f].cod != mors[g].dom {
            rep.push("dom/cod mismatch", format!("entry {}∘{} for a non-composable pair", name(g), name(f)));
        } else if mors[h].dom != mors[f].dom || mors[h].cod != mors[g].cod {
            rep.push("dom/cod mismatch", format!("{}∘{} = {} has the wrong type", name(g), name(f), name(h)));
        }
    }
    for g in 0..mors.len() {
        for f in 0..mors.len() {
            if mors[f].cod == mors[g].dom && cat.compose(g, f).is_none() {
                rep.push("missing composite", format!("no entry for {}∘{}", name(g), name(f)));
            }
        }
    }
    for (f, m) in mors.iter().enumerate() {
        let id_dom = cat.identity[m.dom];
        let id_cod = cat.identity[m.cod];
        if cat.compose(f, id_dom) != Some(f) {
            rep.push("right identity", format!("{}∘{} ≠ {}", name(f), name(id_dom), name(f)));
        }
        if cat.compose(id_cod, f) != Some(f) {
            rep.push("left identity", format!("{}∘{} ≠ {}", name(id_cod), name(f), name(f)));
        }
    }
    for h in 0..mors.len() {
        for g in 0..mors.len() {
            if mors[g].cod != mors[h].dom {
                continue;
            }
            for f in 0..mors.len() {
                if mors[f].cod != mors[g].dom {
                    continue;
                }
                let left = cat.compose(g, f).and_then(|gf| cat.compose(h, gf));
                let right = cat.compose(h, g).and_then(|hg| cat.compose(hg, f));
                if left != right {
                    rep.push(
                        "associativity",
                        format!("({}∘{})∘{} ≠ {}∘({}∘{})", name(h), name(g), name(f), name(h), name(g), name(f)),
                    );
                }
            }
        }
    }
    rep
}

/// A presheaf on a finite category with finite sets of named elements.
#[derive(Debug)]
pub struct Presheaf {
    base: Arc<FinCategory>,
    sets: Vec<Vec<String>>,
    maps: Vec<Vec<usize>>,
    lookup: OnceLock<Vec<HashMap<String, usize>>>,
}

impl Clone for Presheaf {
    fn clone(&self) -> Self {
        Presheaf { base: self.base.clone(), sets: self.sets.clone(), maps: self.maps.clone(), lookup: OnceLock::new() }
    }
}

impl PartialEq for Presheaf {
    fn eq(&self, other: &Self) -> bool {
        same_base(&self.base, &other.base) && self.sets == other.sets && self.maps == other.maps
    }
}

impl Eq for Presheaf {}

pub fn same_base(a: &Arc<FinCategory>, b: &Arc<FinCategory>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Structural or pointer equality of presheaves.
pub fn same_presheaf(a: &Arc<Presheaf>, b: &Arc<Presheaf>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Presheaf {
    /// `sets[b]` lists the elements at object `b`; `maps[f]` sends indices at
    /// `cod f` to indices at `dom f`. Only shapes are validated; functor laws
    /// are reported by [`check_presheaf`].
    pub fn new(base: Arc<FinCategory>, sets: Vec<Vec<String>>, maps: Vec<Vec<usize>>) -> Result<Self> {
        if sets.len() != base.num_objects() {
            return Err(Error::MalformedInput(format!(
                "presheaf has {} element sets for {} objects",
                sets.len(),
                base.num_objects()
            )));
        }
        for (b, s) in sets.iter().enumerate() {
            unique(s, &format!("element (object {})", base.objects[b]))?;
        }
        if maps.len() != base.num_morphisms() {
            return Err(Error::MalformedInput(format!(
                "presheaf has {} maps for {} morphisms",
                maps.len(),
                base.num_morphisms()
            )));
        }
        for (m, map) in maps.iter().enumerate() {
            let mor = &base.morphisms[m];
            if map.len() != sets[mor.cod].len() {
                return Err(Error::MalformedInput(format!("map for {} is not total", mor.name)));
            }
            if map.iter().any(|&x| x >= sets[mor.dom].len()) {
                return Err(Error::MalformedInput(format!("map for {} leaves its codomain", mor.name)));
            }
        }
        Ok(Presheaf { base, sets, maps, lookup: OnceLock::new() })
    }

    /// Like [`Presheaf::new`] but also rejects functor-law violations.
    pub fn validated(base: Arc<FinCategory>, sets: Vec<Vec<String>>, maps: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self::new(base, sets, maps)?;
        let rep = check_presheaf(&p);
        if !rep.is_ok() {
            return Err(Error::MalformedInput(rep.to_string()));
        }
        Ok(p)
    }

    /// Builds a presheaf from element names. Elements are sorted per object;
    /// identity maps may be omitted.
    pub fn from_names(
        base: Arc<FinCategory>,
        sets: &[(&str, Vec<&str>)],
        maps: &[(&str, Vec<(&str, &str)>)],
    ) -> Result<Self> {
        let mut elems = vec![None; base.num_objects()];
        for (o, names) in sets {
            let b = base.object_id(o)?;
            let mut v: Vec<String> = names.iter().map(|s| s.to_string()).collect();
            v.sort();
            if elems[b].replace(v).is_some() {
                return Err(Error::MalformedInput(format!("object '{o}' listed twice")));
            }
        }
        let elems: Vec<Vec<String>> = elems.into_iter().map(|e| e.unwrap_or_default()).collect();
        let pos = |b: ObjId, n: &str| {
            elems[b]
                .iter()
                .position(|e| e == n)
                .ok_or_else(|| Error::UnknownIdentifier(format!("element '{n}' at {}", base.objects[b])))
        };
        let mut out: Vec<Option<Vec<usize>>> = vec![None; base.num_morphisms()];
        for (m, pairs) in maps {
            let mi = base.morphism_id(m)?;
            let mor = &base.morphisms[mi];
            let mut map = vec![usize::MAX; elems[mor.cod].len()];
            for (x, y) in pairs {
                map[pos(mor.cod, x)?] = pos(mor.dom, y)?;
            }
            if map.contains(&usize::MAX) {
                return Err(Error::MalformedInput(format!("map for {m} is not total")));
            }
            out[mi] = Some(map);
        }
        let mut full = Vec::with_capacity(out.len());
        for (mi, map) in out.into_iter().enumerate() {
            match map {
                Some(m) => full.push(m),
                None if base.is_identity(mi) => full.push((0..elems[base.morphisms[mi].cod].len()).collect()),
                None => return Err(Error::MalformedInput(format!("no map given for {}", base.morphisms[mi].name))),
            }
        }
        Self::new(base, elems, full)
    }

    /// A finite set viewed as a presheaf on a set-like base.
    pub fn set(base: Arc<FinCategory>, names: &[&str]) -> Result<Self> {
        if !base.is_set_like() {
            return Err(Error::UnsupportedCarrier("Presheaf::set needs a set-like base".into()));
        }
        let name = base.objects[0].clone();
        Self::from_names(base, &[(&name, names.to_vec())], &[])
    }

    /// Singleton at every object.
    pub fn terminal(base: Arc<FinCategory>) -> Self {
        let sets = vec![vec!["()".to_string()]; base.num_objects()];
        let maps = vec![vec![0]; base.num_morphisms()];
        Presheaf { base, sets, maps, lookup: OnceLock::new() }
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn elements(&self, b: ObjId) -> &[String] {
        &self.sets[b]
    }

    pub fn size(&self, b: ObjId) -> usize {
        self.sets[b].len()
    }

    pub fn total_size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// The action of `f: a -> b`, as indices at `b` to indices at `a`.
    pub fn map(&self, f: MorId) -> &[usize] {
        &self.maps[f]
    }

    pub fn act(&self, f: MorId, x: usize) -> usize {
        self.maps[f][x]
    }

    pub fn element_id(&self, b: ObjId, name: &str) -> Result<usize> {
        let lookup = self.lookup.get_or_init(|| {
            self.sets.iter().map(|s| s.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect()).collect()
        });
        lookup[b]
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownIdentifier(format!("element '{name}' at {}", self.base.objects[b])))
    }

    pub fn has_empty_object(&self) -> bool {
        self.sets.iter().any(Vec::is_empty)
    }
}

/// Lists every violated functor law.
pub fn check_presheaf(p: &Presheaf) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let cat = &p.base;
    for b in 0..cat.num_objects() {
        let id = cat.identity(b);
        if p.maps[id].iter().enumerate().any(|(i, &j)| i != j) {
            rep.push("identity", format!("{} does not act as the identity", cat.morphisms[id].name));
        }
    }
    for (&(g, f), &h) in cat.composition_table() {
        let (gm, fm) = (&cat.morphisms[g], &cat.morphisms[f]);
        if fm.cod != gm.dom {
            continue;
        }
        // F(g∘f) = F(f) ∘ F(g)
        let bad = (0..p.size(gm.cod)).find(|&x| p.maps[h][x] != p.maps[f][p.maps[g][x]]);
        if let Some(x) = bad {
            rep.push(
                "composition",
                format!("F({}∘{}) ≠ F({})∘F({}) at {}", gm.name, fm.name, fm.name, gm.name, p.sets[gm.cod][x]),
            );
        }
    }
    rep
}

/// A natural transformation between presheaves on the same base.
#[derive(Clone, Debug)]
pub struct NatTrans {
    src: Arc<Presheaf>,
    dst: Arc<Presheaf>,
    components: Vec<Vec<usize>>,
}

impl PartialEq for NatTrans {
    fn eq(&self, other: &Self) -> bool {
        same_presheaf(&self.src, &other.src)
            && same_presheaf(&self.dst, &other.dst)
            && self.components == other.components
    }
}

impl Eq for NatTrans {}

impl NatTrans {
    /// Checks base agreement and totality, not naturality.
    pub fn new(src: Arc<Presheaf>, dst: Arc<Presheaf>, components: Vec<Vec<usize>>) -> Result<Self> {
        if !same_base(&src.base, &dst.base) {
            return Err(Error::BaseMismatch("natural transformation between different bases".into()));
        }
        if components.len() != src.base.num_objects() {
            return Err(Error::MalformedInput("component count differs from object count".into()));
        }
        for (b, c) in components.iter().enumerate() {
            if c.len() != src.size(b) || c.iter().any(|&y| y >= dst.size(b)) {
                return Err(Error::MalformedInput(format!(
                    "component at {} is not a total function",
                    src.base.objects[b]
                )));
            }
        }
        Ok(NatTrans { src, dst, components })
    }

    pub(crate) fn new_unchecked(src: Arc<Presheaf>, dst: Arc<Presheaf>, components: Vec<Vec<usize>>) -> Self {
        NatTrans { src, dst, components }
    }

    pub fn identity(p: &Arc<Presheaf>) -> Self {
        let components = (0..p.base.num_objects()).map(|b| (0..p.size(b)).collect()).collect();
        NatTrans { src: p.clone(), dst: p.clone(), components }
    }

    pub fn src(&self) -> &Arc<Presheaf> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<Presheaf> {
        &self.dst
    }

    pub fn component(&self, b: ObjId) -> &[usize] {
        &self.components[b]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn apply(&self, b: ObjId, x: usize) -> usize {
        self.components[b][x]
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &NatTrans) -> Result<NatTrans> {
        if !same_presheaf(&self.dst, &next.src) {
            return Err(Error::AmbientMismatch("composing non-adjacent natural transformations".into()));
        }
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(b, c)| c.iter().map(|&x| next.components[b][x]).collect())
            .collect();
        Ok(NatTrans { src: self.src.clone(), dst: next.dst.clone(), components })
    }

    /// Every component surjective.
    pub fn is_epi(&self) -> bool {
        self.components.iter().enumerate().all(|(b, c)| {
            let mut hit = vec![false; self.dst.size(b)];
            for &y in c {
                hit[y] = true;
            }
            hit.into_iter().all(|h| h)
        })
    }

    /// Every component injective.
    pub fn is_mono(&self) -> bool {
        self.components.iter().enumerate().all(|(b, c)| {
            let mut hit = vec![false; self.dst.size(b)];
            c.iter().all(|&y| !std::mem::replace(&mut hit[y], true))
        })
    }

    /// Componentwise bijective.
    pub fn is_iso(&self) -> bool {
        self.is_epi() && self.is_mono()
    }

    /// Fibers of each component: `fibers()[b][y]` lists the preimages of `y`.
    pub fn fibers(&self) -> Vec<Vec<Vec<usize>>> {
        self.components
            .iter()
            .enumerate()
            .map(|(b, c)| {
                let mut fib = vec![Vec::new(); self.dst.size(b)];
                for (x, &y) in c.iter().enumerate() {
                    fib[y].push(x);
                }
                fib
            })
            .collect()
    }
}

/// Lists every base morphism whose naturality square fails.
pub fn check_nat_trans(t: &NatTrans) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let cat = &t.src.base;
    for (m, mor) in cat.morphisms.iter().enumerate() {
        let bad = (0..t.src.size(mor.cod))
            .find(|&x| t.dst.act(m, t.components[mor.cod][x]) != t.components[mor.dom][t.src.act(m, x)]);
        if let Some(x) = bad {
            rep.push("naturality", format!("square for {} fails at {}", mor.name, t.src.sets[mor.cod][x]));
        }
    }
    rep
}

/// A product presheaf with its projections and mixed-radix tuple coding.
/// Tuples are ordered lexicographically by component index.
#[derive(Clone, Debug)]
pub struct Product {
    pub presheaf: Arc<Presheaf>,
    pub factors: Vec<Arc<Presheaf>>,
    pub projections: Vec<NatTrans>,
    radices: Vec<Vec<usize>>,
}

impl Product {
    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn encode(&self, b: ObjId, comps: &[usize]) -> usize {
        let mut idx = 0;
        for (k, &c) in comps.iter().enumerate() {
            idx = idx * self.radices[b][k] + c;
        }
        idx
    }

    pub fn decode(&self, b: ObjId, mut idx: usize) -> Vec<usize> {
        let r = &self.radices[b];
        let mut out = vec![0; r.len()];
        for k in (0..r.len()).rev() {
            out[k] = idx % r[k];
            idx /= r[k];
        }
        out
    }

    /// The pairing `⟨t_1, …, t_n⟩: X -> ∏ F_k` of maps with a common source.
    pub fn pair(&self, maps: &[NatTrans]) -> Result<NatTrans> {
        if maps.len() != self.factors.len() {
            return Err(Error::ArityMismatch(format!(
                "pairing {} maps into a {}-fold product",
                maps.len(),
                self.arity()
            )));
        }
        let src = match maps.first() {
            Some(m) => m.src.clone(),
            None => return Err(Error::PreconditionFailed("pairing of zero maps needs a source; use pair_from".into())),
        };
        self.pair_from(&src, maps)
    }

    pub fn pair_from(&self, src: &Arc<Presheaf>, maps: &[NatTrans]) -> Result<NatTrans> {
        if maps.len() != self.factors.len() {
            return Err(Error::ArityMismatch(format!(
                "pairing {} maps into a {}-fold product",
                maps.len(),
                self.arity()
            )));
        }
        for (m, f) in maps.iter().zip(&self.factors) {
            if !same_presheaf(&m.src, src) || !same_presheaf(&m.dst, f) {
                return Err(Error::AmbientMismatch("pairing maps with mismatched ends".into()));
            }
        }
        let nobj = src.base.num_objects();
        let mut components = Vec::with_capacity(nobj);
        let mut buf = vec![0; maps.len()];
        for b in 0..nobj {
            let comp = (0..src.size(b))
                .map(|x| {
                    for (k, m) in maps.iter().enumerate() {
                        buf[k] = m.components[b][x];
                    }
                    self.encode(b, &buf)
                })
                .collect();
            components.push(comp);
        }
        Ok(NatTrans { src: src.clone(), dst: self.presheaf.clone(), components })
    }
}

/// Componentwise product. An empty factor list gives the terminal presheaf.
pub fn product_presheaf(base: &Arc<FinCategory>, factors: &[Arc<Presheaf>]) -> Result<Product> {
    for f in factors {
        if !same_base(base, &f.base) {
            return Err(Error::BaseMismatch("product factors over different bases".into()));
        }
    }
    let nobj = base.num_objects();
    let radices: Vec<Vec<usize>> = (0..nobj).map(|b| factors.iter().map(|f| f.size(b)).collect()).collect();
    let mut est = 0f64;
    for r in &radices {
        est += r.iter().map(|&x| x as f64).product::<f64>();
    }
    bound::guard("product presheaf elements", est)?;
    let count = |b: ObjId| radices[b].iter().product::<usize>();
    let decode = |b: ObjId, mut idx: usize, out: &mut [usize]| {
        for k in (0..out.len()).rev() {
            out[k] = idx % radices[b][k];
            idx /= radices[b][k];
        }
    };
    let encode = |b: ObjId, comps: &[usize]| comps.iter().enumerate().fold(0, |acc, (k, &c)| acc * radices[b][k] + c);
    let mut sets = Vec::with_capacity(nobj);
    let mut buf = vec![0; factors.len()];
    for b in 0..nobj {
        let mut names = Vec::with_capacity(count(b));
        for idx in 0..count(b) {
            decode(b, idx, &mut buf);
            let mut s = String::from("(");
            for (k, &c) in buf.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                s.push_str(&factors[k].sets[b][c]);
            }
            s.push(')');
            names.push(s);
        }
        sets.push(names);
    }
    let mut maps = Vec::with_capacity(base.num_morphisms());
    for (m, mor) in base.morphisms.iter().enumerate() {
        let map = (0..count(mor.cod))
            .map(|idx| {
                decode(mor.cod, idx, &mut buf);
                for (k, f) in factors.iter().enumerate() {
                    buf[k] = f.maps[m][buf[k]];
                }
                encode(mor.dom, &buf)
            })
            .collect();
        maps.push(map);
    }
    let presheaf = Arc::new(Presheaf { base: base.clone(), sets, maps, lookup: OnceLock::new() });
    let mut projections = Vec::with_capacity(factors.len());
    for (k, f) in factors.iter().enumerate() {
        let components = (0..nobj)
            .map(|b| {
                (0..count(b))
                    .map(|idx| {
                        decode(b, idx, &mut buf);
                        buf[k]
                    })
                    .collect()
            })
            .collect();
        projections.push(NatTrans { src: presheaf.clone(), dst: f.clone(), components });
    }
    Ok(Product { presheaf, factors: factors.to_vec(), projections, radices })
}

/// Calls `visit` with every function `[0, n) -> [0, m)` in lexicographic
/// order; stops early when `visit` returns false.
pub(crate) fn for_each_function(n: usize, m: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if n > 0 && m == 0 {
        return;
    }
    let mut f = vec![0; n];
    loop {
        if !visit(&f) {
            return;
        }
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            f[k] += 1;
            if f[k] < m {
                break;
            }
            f[k] = 0;
        }
    }
}

/// All natural transformations `F => G`, in lexicographic order of their
/// components.
pub fn enumerate_nat_trans(f: &Arc<Presheaf>, g: &Arc<Presheaf>) -> Result<Vec<NatTrans>> {
    if !same_base(&f.base, &g.base) {
        return Err(Error::BaseMismatch("enumerating maps between different bases".into()));
    }
    let cat = f.base.clone();
    let nobj = cat.num_objects();
    let est: f64 = (0..nobj).map(|b| bound::pow_estimate(g.size(b), f.size(b))).product();
    bound::guard("natural transformation candidates", est)?;
    let mut out = Vec::new();
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); nobj];
    // squares whose objects are both assigned once object b is assigned
    let ready: Vec<Vec<MorId>> = (0..nobj)
        .map(|b| {
            (0..cat.num_morphisms())
                .filter(|&m| {
                    let mor = &cat.morphisms[m];
                    mor.dom.max(mor.cod) == b
                })
                .collect()
        })
        .collect();
    fn rec(
        b: usize,
        f: &Presheaf,
        g: &Presheaf,
        ready: &[Vec<MorId>],
        comps: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if b == comps.len() {
            out.push(comps.clone());
            return;
        }
        let cat = &f.base;
        for_each_function(f.size(b), g.size(b), |c| {
            comps[b] = c.to_vec();
            let ok = ready[b].iter().all(|&m| {
                let mor = &cat.morphisms[m];
                (0..f.size(mor.cod)).all(|x| g.act(m, comps[mor.cod][x]) == comps[mor.dom][f.act(m, x)])
            });
            if ok {
                rec(b + 1, f, g, ready, comps, out);
            }
            true
        });
    }
    let mut raw = Vec::new();
    rec(0, f, g, &ready, &mut comps, &mut raw);
    for c in raw {
        out.push(NatTrans { src: f.clone(), dst: g.clone(), components: c });
    }
    Ok(out)
}

/// Every presheaf on `base` whose sets have between `min` and `max`
/// elements, with elements named "0", "1", … .
pub fn enumerate_presheaves(base: &Arc<FinCategory>, min: usize, max: usize) -> Result<Vec<Arc<Presheaf>>> {
    let nobj = base.num_objects();
    let nonid: Vec<MorId> = (0..base.num_morphisms()).filter(|&m| !base.is_identity(m)).collect();
    let mut sizes = vec![min; nobj];
    let mut out = Vec::new();
    let mut est = 0f64;
    loop {
        est += nonid
            .iter()
            .map(|&m| bound::pow_estimate(sizes[base.morphisms[m].dom], sizes[base.morphisms[m].cod]))
            .product::<f64>();
        bound::guard("presheaf candidates", est)?;
        enumerate_with_sizes(base, &sizes, &nonid, &mut out);
        let mut k = nobj;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            sizes[k] += 1;
            if sizes[k] <= max {
                break;
            }
            sizes[k] = min;
        }
    }
}

fn enumerate_with_sizes(base: &Arc<FinCategory>, sizes: &[usize], nonid: &[MorId], out: &mut Vec<Arc<Presheaf>>) {
    let sets: Vec<Vec<String>> = sizes.iter().map(|&n| (0..n).map(|i| i.to_string()).collect()).collect();
    let mut maps: Vec<Vec<usize>> = base
        .morphisms
        .iter()
        .map(|m| if base.is_identity_of(m) { (0..sizes[m.cod]).collect() } else { Vec::new() })
        .collect();
    fn rec(
        k: usize,
        base: &Arc<FinCategory>,
        sizes: &[usize],
        nonid: &[MorId],
        sets: &[Vec<String>],
        maps: &mut Vec<Vec<usize>>,
        out: &mut Vec<Arc<Presheaf>>,
    ) {
        if k == nonid.len() {
            let p = Presheaf { base: base.clone(), sets: sets.to_vec(), maps: maps.clone(), lookup: OnceLock::new() };
            if check_presheaf(&p).is_ok() {
                out.push(Arc::new(p));
            }
            return;
        }
        let m = nonid[k];
        let mor = base.morphism(m).clone();
        for_each_function(sizes[mor.cod], sizes[mor.dom], |f| {
            maps[m] = f.to_vec();
            rec(k + 1, base, sizes, nonid, sets, maps, out);
            true
        });
    }
    rec(0, base, sizes, nonid, &sets, &mut maps, out);
}

impl FinCategory {
    fn is_identity_of(&self, m: &Morphism) -> bool {
        m.dom == m.cod && self.morphisms[self.identity[m.dom]] == *m
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn graph() -> Arc<FinCategory> {
        Arc::new(FinCategory::graph())
    }

    pub(crate) fn edge(base: &Arc<FinCategory>) -> Arc<Presheaf> {
        Arc::new(
            Presheaf::from_names(
                base.clone(),
                &[("V", vec!["v0", "v1"]), ("E", vec!["e"])],
                &[("s", vec![("e", "v0")]), ("t", vec![("e", "v1")])],
            )
            .unwrap(),
        )
    }

    fn loop_graph(base: &Arc<FinCategory>) -> Arc<Presheaf> {
        Arc::new(
            Presheaf::from_names(
                base.clone(),
                &[("V", vec!["w"]), ("E", vec!["l"])],
                &[("s", vec![("l", "w")]), ("t", vec![("l", "w")])],
            )
            .unwrap(),
        )
    }

    #[test]
    fn standard_categories_pass() {
        assert!(check_category(&FinCategory::terminal()).is_ok());
        assert!(check_category(&FinCategory::graph()).is_ok());
        assert!(check_category(&FinCategory::chain3()).is_ok());
    }

    #[test]
    fn broken_right_identity_is_named() {
        let c = FinCategory::new(
            vec!["V".into(), "E".into()],
            vec![
                ("id_V".into(), "V".into(), "V".into()),
                ("id_E".into(), "E".into(), "E".into()),
                ("s".into(), "V".into(), "E".into()),
                ("t".into(), "V".into(), "E".into()),
            ],
            vec![("V".into(), "id_V".into()), ("E".into(), "id_E".into())],
            vec![
                ("id_V".into(), "id_V".into(), "id_V".into()),
                ("id_E".into(), "id_E".into(), "id_E".into()),
                ("s".into(), "id_V".into(), "t".into()),
                ("t".into(), "id_V".into(), "t".into()),
                ("id_E".into(), "s".into(), "s".into()),
                ("id_E".into(), "t".into(), "t".into()),
            ],
        )
        .unwrap();
        let rep = check_category(&c);
        assert!(rep.violations.iter().any(|v| v.kind == "right identity" && v.message.starts_with("s∘id_V")));
    }

    #[test]
    fn duplicate_identifiers_rejected() {
        let r = FinCategory::new(vec!["A".into(), "A".into()], vec![], vec![], vec![]);
        assert!(matches!(r, Err(Error::MalformedInput(_))));
    }

    #[test]
    fn hom_sets() {
        let t = FinCategory::terminal();
        assert_eq!(t.hom(0, 0), vec![0]);
        let g = FinCategory::graph();
        let names = |v: Vec<MorId>| v.into_iter().map(|m| g.morphism(m).name.clone()).collect::<Vec<_>>();
        assert_eq!(names(g.hom_set("V", "E").unwrap()), vec!["s", "t"]);
        assert!(g.hom_set("E", "V").unwrap().is_empty());
        assert!(matches!(g.hom_set("X", "V"), Err(Error::UnknownIdentifier(_))));
    }

    #[test]
    fn products() {
        let pt = Arc::new(FinCategory::terminal());
        let a = Arc::new(Presheaf::set(pt.clone(), &["a", "b"]).unwrap());
        let x = Arc::new(Presheaf::set(pt.clone(), &["x"]).unwrap());
        let p = product_presheaf(&pt, &[a, x]).unwrap();
        assert_eq!(p.presheaf.elements(0), &["(a,x)".to_string(), "(b,x)".to_string()]);
        assert_eq!(p.projections.len(), 2);

        let g = graph();
        let term = product_presheaf(&g, &[]).unwrap();
        assert_eq!(term.presheaf.size(0), 1);
        assert_eq!(term.presheaf.size(1), 1);
        assert_eq!(*term.presheaf, Presheaf::terminal(g.clone()));

        let e = edge(&g);
        let pp = product_presheaf(&g, &[e.clone(), e.clone()]).unwrap();
        assert_eq!(pp.presheaf.size(0), 4);
        assert_eq!(pp.presheaf.size(1), 1);
        assert!(check_presheaf(&pp.presheaf).is_ok());
        for pr in &pp.projections {
            assert!(check_nat_trans(pr).is_ok());
        }
    }

    #[test]
    fn nat_trans_checks() {
        let g = graph();
        let e = edge(&g);
        let l = loop_graph(&g);
        assert!(check_nat_trans(&NatTrans::identity(&e)).is_ok());
        let collapse = NatTrans::new(e.clone(), l.clone(), vec![vec![0, 0], vec![0]]).unwrap();
        assert!(check_nat_trans(&collapse).is_ok());
        let swap = NatTrans::new(e.clone(), e.clone(), vec![vec![1, 0], vec![0]]).unwrap();
        let rep = check_nat_trans(&swap);
        assert!(rep.mentions("square for s") || rep.mentions("square for t"));
        assert!(matches!(NatTrans::new(e.clone(), l.clone(), vec![vec![0], vec![0]]), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn enumerate_examples() {
        let pt = Arc::new(FinCategory::terminal());
        let one = Arc::new(Presheaf::set(pt.clone(), &["*"]).unwrap());
        assert_eq!(enumerate_nat_trans(&one, &one).unwrap().len(), 1);
        let two = Arc::new(Presheaf::set(pt.clone(), &["1", "2"]).unwrap());
        let a = Arc::new(Presheaf::set(pt.clone(), &["a"]).unwrap());
        assert_eq!(enumerate_nat_trans(&two, &a).unwrap().len(), 1);
        let g = graph();
        let ts = enumerate_nat_trans(&edge(&g), &loop_graph(&g)).unwrap();
        assert_eq!(ts.len(), 1);
        assert!(check_nat_trans(&ts[0]).is_ok());
    }

    #[test]
    fn epi_mono_examples() {
        let pt = Arc::new(FinCategory::terminal());
        let two = Arc::new(Presheaf::set(pt.clone(), &["a", "b"]).unwrap());
        let x = Arc::new(Presheaf::set(pt.clone(), &["x"]).unwrap());
        let id = NatTrans::identity(&two);
        assert!(id.is_epi() && id.is_mono());
        let c = NatTrans::new(two, x, vec![vec![0, 0]]).unwrap();
        assert!(c.is_epi() && !c.is_mono());
    }

    #[test]
    fn enumeration_bound_is_enforced() {
        let pt = Arc::new(FinCategory::terminal());
        let names: Vec<String> = (0..30).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let big = Arc::new(Presheaf::set(pt.clone(), &refs).unwrap());
        assert!(matches!(enumerate_nat_trans(&big, &big), Err(Error::SearchSpaceTooLarge { .. })));
    }

    #[test]
    fn presheaf_enumeration_counts() {
        let pt = Arc::new(FinCategory::terminal());
        assert_eq!(enumerate_presheaves(&pt, 0, 3).unwrap().len(), 4);
        let g = graph();
        // sum over |V|,|E| of |V|^(2|E|)
        assert_eq!(enumerate_presheaves(&g, 0, 3).unwrap().len(), 910);
        let c = Arc::new(FinCategory::chain3());
        for p in enumerate_presheaves(&c, 1, 2).unwrap() {
            assert!(check_presheaf(&p).is_ok());
        }
    }
}
