//! Filters on finite index sets and filtered products of presheaves and of
//! Σ-structures.
//!
//! Subsets of the index set are bitmasks; index `i` is bit `i`. On a finite
//! set every filter is principal at its core (the intersection of its
//! members), which the constructions use to key equivalence classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::bound;
use crate::cat::{product_presheaf, same_base, NatTrans, ObjId, Presheaf, Product};
use crate::error::{Error, Result};
use crate::fol::{product_models, ModelMorphism, SigmaStructure};
use crate::report::ValidationReport;

/// Largest index set a filter may be materialized on.
pub const MAX_INDEX: usize = 16;

/// A filter on a finite labelled index set, stored as its member subsets.
#[derive(Clone, PartialEq, Eq)]
pub struct Filter {
    labels: Vec<String>,
    members: BTreeSet<u32>,
}

impl fmt::Debug for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Filter{}", self)
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|&m| self.show(m)).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn check_size(labels: &[String]) -> Result<()> {
    if labels.len() > MAX_INDEX {
        return Err(Error::SearchSpaceTooLarge {
            what: "filter index set".into(),
            estimate: format!("2^{}", labels.len()),
            bound: 1 << MAX_INDEX,
        });
    }
    let set: BTreeSet<&String> = labels.iter().collect();
    if set.len() != labels.len() {
        return Err(Error::MalformedInput("index labels must be distinct".into()));
    }
    Ok(())
}

impl Filter {
    fn full(&self) -> u32 {
        full_mask(self.labels.len())
    }

    /// Validates the filter axioms on an explicit family of subsets.
    pub fn from_members(labels: &[&str], members: &[u32]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        check_size(&labels)?;
        let full = full_mask(labels.len());
        let members: BTreeSet<u32> = members.iter().copied().collect();
        if members.iter().any(|&m| m & !full != 0) {
            return Err(Error::MalformedInput("filter member outside the index set".into()));
        }
        if !members.contains(&full) {
            return Err(Error::MalformedInput("a filter contains the whole index set".into()));
        }
        for &a in &members {
            for &b in &members {
                if !members.contains(&(a & b)) {
                    return Err(Error::MalformedInput("filter not closed under intersection".into()));
                }
            }
            for s in 0..=full {
                if s & a == a && !members.contains(&s) {
                    return Err(Error::MalformedInput("filter not closed under supersets".into()));
                }
            }
        }
        Ok(Filter { labels, members })
    }

    /// `{A | J ⊆ A}`; an empty `J` gives the improper filter.
    pub fn make_principal(labels: &[&str], j: &[&str]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        check_size(&labels)?;
        let jm = mask_of(&labels, j)?;
        Ok(Self::principal_mask(labels, jm))
    }

    fn principal_mask(labels: Vec<String>, jm: u32) -> Self {
        let full = full_mask(labels.len());
        let members = (0..=full).filter(|s| s & jm == jm).collect();
        Filter { labels, members }
    }

    /// The principal filter at the index mask `jm`.
    pub fn principal_at(labels: &[&str], jm: u32) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        check_size(&labels)?;
        if jm & !full_mask(labels.len()) != 0 {
            return Err(Error::MalformedInput("mask outside the index set".into()));
        }
        Ok(Self::principal_mask(labels, jm))
    }

    /// Every proper filter, by core in increasing mask order.
    pub fn all_proper(labels: &[&str]) -> Result<Vec<Self>> {
        let full = full_mask(labels.len());
        (1..=full).map(|jm| Self::principal_at(labels, jm)).collect()
    }

    /// The ultrafilters, one per index.
    pub fn ultrafilters(labels: &[&str]) -> Result<Vec<Self>> {
        (0..labels.len()).map(|i| Self::principal_at(labels, 1 << i)).collect()
    }

    /// Superset closure of all finite intersections of the seeds. Seeds with
    /// empty intersection give the improper filter.
    pub fn generate(labels: &[&str], seeds: &[Vec<&str>]) -> Result<Self> {
        let labels_s: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        check_size(&labels_s)?;
        let mut core = full_mask(labels.len());
        for s in seeds {
            core &= mask_of(&labels_s, s)?;
        }
        Ok(Self::principal_mask(labels_s, core))
    }

    /// `{I}`.
    pub fn trivial(labels: &[&str]) -> Result<Self> {
        let labels_s: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        check_size(&labels_s)?;
        let full = full_mask(labels.len());
        Ok(Self::principal_mask(labels_s, full))
    }

    /// The cofinite filter. On a finite index set it is improper, so it can
    /// only serve as a description.
    pub fn frechet(labels: &[&str]) -> Result<Self> {
        Err(Error::ImproperFilter(format!("the cofinite filter on the finite set {{{}}} contains ∅", labels.join(","))))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self) -> &BTreeSet<u32> {
        &self.members
    }

    pub fn contains(&self, m: u32) -> bool {
        self.members.contains(&m)
    }

    pub fn contains_indices(&self, idx: impl IntoIterator<Item = usize>) -> bool {
        self.contains(idx.into_iter().fold(0, |m, i| m | 1 << i))
    }

    pub fn is_proper(&self) -> bool {
        !self.members.contains(&0)
    }

    pub fn is_ultrafilter(&self) -> bool {
        let full = self.full();
        self.is_proper() && (0..=full).all(|a| self.contains(a) != self.contains(full & !a))
    }

    /// Intersection of all members (the least member).
    pub fn core(&self) -> u32 {
        self.members.iter().fold(self.full(), |c, &m| c & m)
    }

    /// The principal ultrafilter at the least point of the core.
    pub fn extend_to_ultrafilter(&self) -> Result<Filter> {
        if !self.is_proper() {
            return Err(Error::ImproperFilter("the improper filter has no ultrafilter above it".into()));
        }
        let i0 = self.core().trailing_zeros();
        Ok(Self::principal_mask(self.labels.clone(), 1 << i0))
    }

    /// `{J ∩ K | K ∈ F}` on the index set `J`, relabelled in index order.
    pub fn reduce(&self, j: u32) -> Filter {
        let idx: Vec<usize> = bits(j).collect();
        let labels: Vec<String> = idx.iter().map(|&i| self.labels[i].clone()).collect();
        let members = self.members.iter().map(|&k| compress(k & j, &idx)).collect();
        Filter { labels, members }
    }

    pub fn mask(&self, names: &[&str]) -> Result<u32> {
        mask_of(&self.labels, names)
    }

    pub fn show(&self, m: u32) -> String {
        let parts: Vec<&str> = bits(m).map(|i| self.labels[i].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }

    /// `(a_i) ~_F (a'_i)`: the agreement set is a member.
    pub fn equivalent(&self, a: &[usize], b: &[usize]) -> bool {
        self.contains_indices((0..a.len()).filter(|&i| a[i] == b[i]))
    }
}

fn full_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

fn mask_of(labels: &[String], names: &[&str]) -> Result<u32> {
    let mut m = 0;
    for n in names {
        let i = labels.iter().position(|l| l == n).ok_or_else(|| Error::UnknownIdentifier(format!("index '{n}'")))?;
        m |= 1 << i;
    }
    Ok(m)
}

pub fn bits(m: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| m >> i & 1 == 1)
}

fn compress(m: u32, idx: &[usize]) -> u32 {
    idx.iter().enumerate().fold(0, |acc, (k, &i)| if m >> i & 1 == 1 { acc | 1 << k } else { acc })
}

/// `∏_F X` with its quotient map from `∏_I X` and explicit class tables.
#[derive(Clone, Debug)]
pub struct FilteredProduct {
    pub filter: Filter,
    pub family: Vec<Arc<Presheaf>>,
    pub product: Product,
    pub presheaf: Arc<Presheaf>,
    /// Per object: tuple index in `∏_I X` to class index.
    pub class_index: Vec<Vec<usize>>,
    /// Per object: class index to its lexicographically least tuple.
    pub reps: Vec<Vec<usize>>,
    /// `μ_I`.
    pub quotient: NatTrans,
}

/// Classes of `∏_I X` under `~_F`, represented by their least tuples.
pub fn filtered_product_presheaf(family: &[Arc<Presheaf>], f: &Filter) -> Result<FilteredProduct> {
    if family.len() != f.len() {
        return Err(Error::ArityMismatch(format!("{} factors for an index set of size {}", family.len(), f.len())));
    }
    if !f.is_proper() {
        return Err(Error::ImproperFilter("filtered product over the improper filter".into()));
    }
    let Some(first) = family.first() else {
        return Err(Error::PreconditionFailed("filtered product of an empty family".into()));
    };
    let base = first.base().clone();
    for (i, p) in family.iter().enumerate() {
        if !same_base(&base, p.base()) {
            return Err(Error::BaseMismatch("filtered product factors over different bases".into()));
        }
        if p.has_empty_object() {
            return Err(Error::EmptyCarrier(format!("factor {} is empty at some object", f.labels()[i])));
        }
    }
    let product = product_presheaf(&base, family)?;
    let core: Vec<usize> = bits(f.core()).collect();
    let nobj = base.num_objects();
    let mut class_index = Vec::with_capacity(nobj);
    let mut reps = Vec::with_capacity(nobj);
    for b in 0..nobj {
        let mut key_to_class: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut idx = Vec::with_capacity(product.presheaf.size(b));
        let mut rb = Vec::new();
        // tuples are visited in lexicographic order, so the first member of
        // each class is its least tuple
        for x in 0..product.presheaf.size(b) {
            let comps = product.decode(b, x);
            let key: Vec<usize> = core.iter().map(|&i| comps[i]).collect();
            let next = rb.len();
            let c = *key_to_class.entry(key).or_insert(next);
            if c == next {
                rb.push(x);
            }
            idx.push(c);
        }
        class_index.push(idx);
        reps.push(rb);
    }
    let sets: Vec<Vec<String>> = (0..nobj)
        .map(|b| reps[b].iter().map(|&x| format!("[{}]", product.presheaf.elements(b)[x])).collect())
        .collect();
    let maps: Vec<Vec<usize>> = (0..base.num_morphisms())
        .map(|m| {
            let mor = base.morphism(m);
            reps[mor.cod].iter().map(|&x| class_index[mor.dom][product.presheaf.act(m, x)]).collect()
        })
        .collect();
    let presheaf = Arc::new(Presheaf::new(base, sets, maps)?);
    let quotient = NatTrans::new_unchecked(product.presheaf.clone(), presheaf.clone(), class_index.clone());
    Ok(FilteredProduct { filter: f.clone(), family: family.to_vec(), product, presheaf, class_index, reps, quotient })
}

impl FilteredProduct {
    pub fn num_classes(&self, b: ObjId) -> usize {
        self.reps[b].len()
    }

    /// `∏_J X_j` for `J ⊆ I`.
    pub fn sub_product(&self, j: u32) -> Result<Product> {
        let factors: Vec<Arc<Presheaf>> =
            bits(j).filter(|&i| i < self.family.len()).map(|i| self.family[i].clone()).collect();
        product_presheaf(self.presheaf.base(), &factors)
    }

    /// `μ_J: ∏_J X_j -> ∏_F X` for `J ∈ F`; positions outside `J` are filled
    /// with the first element.
    pub fn coprojection(&self, j: u32) -> Result<(Product, NatTrans)> {
        if !self.filter.contains(j) {
            return Err(Error::PreconditionFailed(format!("{} is not in the filter", self.filter.show(j))));
        }
        let pj = self.sub_product(j)?;
        let idx: Vec<usize> = bits(j).collect();
        let n = self.family.len();
        let comps = (0..self.presheaf.base().num_objects())
            .map(|b| {
                (0..pj.presheaf.size(b))
                    .map(|y| {
                        let part = pj.decode(b, y);
                        let mut full = vec![0; n];
                        for (k, &i) in idx.iter().enumerate() {
                            full[i] = part[k];
                        }
                        self.class_index[b][self.product.encode(b, &full)]
                    })
                    .collect()
            })
            .collect();
        let mu = NatTrans::new_unchecked(pj.presheaf.clone(), self.presheaf.clone(), comps);
        Ok((pj, mu))
    }

    /// `p_{J′,J}: ∏_{J′} -> ∏_J` for `J ⊆ J′`.
    pub fn restriction(&self, jp: u32, j: u32) -> Result<(Product, Product, NatTrans)> {
        if j & !jp != 0 {
            return Err(Error::PreconditionFailed("restriction needs J ⊆ J′".into()));
        }
        let big = self.sub_product(jp)?;
        let small = self.sub_product(j)?;
        let big_idx: Vec<usize> = bits(jp).collect();
        let keep: Vec<usize> = bits(j).map(|i| big_idx.iter().position(|&k| k == i).expect("J ⊆ J′")).collect();
        let comps = (0..self.presheaf.base().num_objects())
            .map(|b| {
                (0..big.presheaf.size(b))
                    .map(|y| {
                        let c = big.decode(b, y);
                        small.encode(b, &keep.iter().map(|&k| c[k]).collect::<Vec<_>>())
                    })
                    .collect()
            })
            .collect();
        let p = NatTrans::new_unchecked(big.presheaf.clone(), small.presheaf.clone(), comps);
        Ok((big, small, p))
    }

    /// Class of a tuple given by component indices.
    pub fn class_of(&self, b: ObjId, comps: &[usize]) -> usize {
        self.class_index[b][self.product.encode(b, comps)]
    }
}

/// `μ_J ∘ p_{J′,J} = μ_{J′}` for all `J ⊆ J′` in the filter.
pub fn check_cocone(fp: &FilteredProduct) -> Result<ValidationReport> {
    let mut rep = ValidationReport::new();
    let mut mus = BTreeMap::new();
    for &j in fp.filter.members() {
        mus.insert(j, fp.coprojection(j)?.1);
    }
    for (&j, mu_j) in &mus {
        for (&jp, mu_jp) in &mus {
            if j & !jp != 0 || j == jp {
                continue;
            }
            let (_, _, p) = fp.restriction(jp, j)?;
            if p.then(mu_j)?.components() != mu_jp.components() {
                rep.push("cocone", format!("μ_{} ∘ p ≠ μ_{}", fp.filter.show(j), fp.filter.show(jp)));
            }
        }
    }
    Ok(rep)
}

/// Hypothesis (each `p_{J′,J}` epi) and conclusion (each `μ_J` epi).
pub fn check_coprojection_epi(family: &[Arc<Presheaf>], f: &Filter) -> Result<ValidationReport> {
    let fp = filtered_product_presheaf(family, f)?;
    let mut rep = ValidationReport::new();
    let members: Vec<u32> = f.members().iter().copied().collect();
    for &j in &members {
        for &jp in &members {
            if j & !jp == 0 && j != jp && !fp.restriction(jp, j)?.2.is_epi() {
                rep.push("hypothesis", format!("p_{{{},{}}} is not epi", f.show(jp), f.show(j)));
            }
        }
        if !fp.coprojection(j)?.1.is_epi() {
            rep.push("epi", format!("μ_{} is not epi", f.show(j)));
        }
    }
    Ok(rep)
}

/// For `J ∈ F`: the map `∏_F X -> ∏_{F|J} X` restricting representatives.
pub fn reduction_iso(family: &[Arc<Presheaf>], f: &Filter, j: u32) -> Result<NatTrans> {
    if !f.contains(j) {
        return Err(Error::PreconditionFailed(format!("{} is not in the filter", f.show(j))));
    }
    let fp = filtered_product_presheaf(family, f)?;
    let sub: Vec<Arc<Presheaf>> = bits(j).map(|i| family[i].clone()).collect();
    let red = filtered_product_presheaf(&sub, &f.reduce(j))?;
    let idx: Vec<usize> = bits(j).collect();
    let comps = (0..fp.presheaf.base().num_objects())
        .map(|b| {
            fp.reps[b]
                .iter()
                .map(|&x| {
                    let c = fp.product.decode(b, x);
                    red.class_of(b, &idx.iter().map(|&i| c[i]).collect::<Vec<_>>())
                })
                .collect()
        })
        .collect();
    Ok(NatTrans::new_unchecked(fp.presheaf.clone(), red.presheaf.clone(), comps))
}

/// `∏_F M` with the plain product and the quotient morphism `μ_I`.
#[derive(Clone, Debug)]
pub struct FilteredModel {
    pub filter: Filter,
    pub family: Vec<Arc<SigmaStructure>>,
    pub model: Arc<SigmaStructure>,
    pub product: Arc<SigmaStructure>,
    pub projections: Vec<ModelMorphism>,
    pub sorts: BTreeMap<String, FilteredProduct>,
    pub quotient: ModelMorphism,
}

/// Filtered product of Σ-structures. Functions act on representatives; a
/// tuple of classes is in a relation when the set of indices whose
/// components are related is a member of the filter.
pub fn filtered_product_models(family: &[Arc<SigmaStructure>], f: &Filter) -> Result<FilteredModel> {
    let Some(first) = family.first() else {
        return Err(Error::PreconditionFailed("filtered product of an empty family".into()));
    };
    let sig = first.sig().clone();
    let base = first.base().clone();
    let (product, projections) = product_models(&sig, &base, family)?;
    let mut sorts = BTreeMap::new();
    for s in &sig.sorts {
        let fam: Vec<Arc<Presheaf>> = family.iter().map(|m| m.carrier(s).cloned()).collect::<Result<_>>()?;
        sorts.insert(s.clone(), filtered_product_presheaf(&fam, f)?);
    }
    let sorts = Arc::new(sorts);
    let mut builder = SigmaStructure::builder(sig.clone(), base.clone());
    for (s, fp) in sorts.iter() {
        if !sig.power_sorts.contains_key(s) {
            builder = builder.carrier(s, fp.presheaf.clone());
        }
    }
    for (fname, prof) in &sig.functions {
        let sorts = sorts.clone();
        let prod = product.clone();
        let prof = prof.clone();
        let fname = fname.clone();
        builder = builder.function_fn(&fname.clone(), move |b, classes| {
            let reps: Vec<usize> = classes.iter().zip(&prof.args).map(|(&c, s)| sorts[s].reps[b][c]).collect();
            let dom = prod.sorts_product(&prof.args).expect("declared sorts");
            let v = prod.function(&fname).expect("declared").apply(b, dom.encode(b, &reps));
            sorts[&prof.result].class_index[b][v]
        });
    }
    for (rname, args) in &sig.relations {
        let sorts = sorts.clone();
        let fam: Vec<Arc<SigmaStructure>> = family.to_vec();
        let args = args.clone();
        let rname = rname.clone();
        let filter = f.clone();
        builder = builder.relation_fn(&rname.clone(), move |b, classes| {
            let tuples: Vec<Vec<usize>> =
                classes.iter().zip(&args).map(|(&c, s)| sorts[s].product.decode(b, sorts[s].reps[b][c])).collect();
            filter.contains_indices((0..fam.len()).filter(|&i| {
                let m = &fam[i];
                let dom = m.sorts_product(&args).expect("declared sorts");
                let vals: Vec<usize> = tuples.iter().map(|t| t[i]).collect();
                m.relation(&rname).expect("declared").contains(b, dom.encode(b, &vals))
            }))
        });
    }
    let model = Arc::new(builder.build()?);
    let comps = sig
        .sorts
        .iter()
        .map(|s| {
            let t = NatTrans::new_unchecked(
                product.carrier(s)?.clone(),
                model.carrier(s)?.clone(),
                sorts[s].class_index.clone(),
            );
            Ok((s.clone(), t))
        })
        .collect::<Result<_>>()?;
    let quotient = ModelMorphism::new(product.clone(), model.clone(), comps)?;
    let sorts = Arc::try_unwrap(sorts).unwrap_or_else(|a| (*a).clone());
    Ok(FilteredModel { filter: f.clone(), family: family.to_vec(), model, product, projections, sorts, quotient })
}

impl FilteredModel {
    /// `μ_J: ∏_J M_j -> ∏_F M` as a model morphism, `J ∈ F`.
    pub fn coprojection(&self, j: u32) -> Result<(Arc<SigmaStructure>, ModelMorphism)> {
        let sub: Vec<Arc<SigmaStructure>> = bits(j).map(|i| self.family[i].clone()).collect();
        let (pj, _) = product_models(self.model.sig(), self.model.base(), &sub)?;
        let mut comps = BTreeMap::new();
        for s in &self.model.sig().sorts {
            let (_, mu) = self.sorts[s].coprojection(j)?;
            comps.insert(
                s.clone(),
                NatTrans::new_unchecked(
                    pj.carrier(s)?.clone(),
                    self.model.carrier(s)?.clone(),
                    mu.components().to_vec(),
                ),
            );
        }
        let mu = ModelMorphism::new(pj.clone(), self.model.clone(), comps)?;
        Ok((pj, mu))
    }
}

/// Whether per-sort maps `a -> b` form a structure-preserving bijection
/// whose inverse also preserves structure.
pub fn is_model_iso(mu: &ModelMorphism) -> Result<bool> {
    if !mu.components().values().all(NatTrans::is_iso) || !crate::fol::check_model_morphism(mu).is_ok() {
        return Ok(false);
    }
    let inv = mu
        .components()
        .iter()
        .map(|(s, c)| {
            let comps = (0..c.components().len())
                .map(|b| {
                    let mut v = vec![0; c.dst().size(b)];
                    for (x, &y) in c.component(b).iter().enumerate() {
                        v[y] = x;
                    }
                    v
                })
                .collect();
            (s.clone(), NatTrans::new_unchecked(c.dst().clone(), c.src().clone(), comps))
        })
        .collect();
    let back = ModelMorphism::new(mu.dst.clone(), mu.src.clone(), inv)?;
    Ok(crate::fol::check_model_morphism(&back).is_ok())
}

/// Guard for tuple enumeration over a family.
pub fn family_tuple_estimate(family: &[Arc<Presheaf>]) -> f64 {
    let nobj = family.first().map(|p| p.base().num_objects()).unwrap_or(0);
    (0..nobj).map(|b| family.iter().map(|p| p.size(b) as f64).product::<f64>()).sum()
}

pub fn guard_family(family: &[Arc<Presheaf>]) -> Result<()> {
    bound::guard("family tuples", family_tuple_estimate(family))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::{enumerate_nat_trans, FinCategory};

    const I3: [&str; 3] = ["1", "2", "3"];

    fn set(base: &Arc<FinCategory>, names: &[&str]) -> Arc<Presheaf> {
        Arc::new(Presheaf::set(base.clone(), names).unwrap())
    }

    #[test]
    fn principal_filters() {
        let f = Filter::make_principal(&I3, &["1", "2"]).unwrap();
        assert_eq!(f.to_string(), "{{1,2}, {1,2,3}}");
        assert!(!Filter::trivial(&I3).unwrap().is_ultrafilter());
        let u = Filter::trivial(&I3).unwrap().extend_to_ultrafilter().unwrap();
        assert_eq!(u, Filter::make_principal(&I3, &["1"]).unwrap());
        assert!(u.is_ultrafilter());
        assert!(!Filter::make_principal(&I3, &[]).unwrap().is_proper());
        assert!(matches!(Filter::frechet(&I3), Err(Error::ImproperFilter(_))));
        let g = Filter::generate(&I3, &[vec!["1", "2"], vec!["2", "3"]]).unwrap();
        assert_eq!(g, Filter::make_principal(&I3, &["2"]).unwrap());
        assert!(!Filter::generate(&I3, &[vec!["1"], vec!["3"]]).unwrap().is_proper());
    }

    #[test]
    fn axioms_are_checked() {
        assert!(Filter::from_members(&I3, &[0b111, 0b011]).is_ok());
        assert!(Filter::from_members(&I3, &[0b111, 0b011, 0b110]).is_err());
        assert!(Filter::from_members(&I3, &[0b011]).is_err());
    }

    #[test]
    fn reduction() {
        let f = Filter::make_principal(&I3, &["1", "2"]).unwrap();
        assert_eq!(f.reduce(0b111), f);
        let r = f.reduce(0b011);
        assert_eq!(r.labels(), &["1", "2"]);
        assert_eq!(r.members().iter().copied().collect::<Vec<_>>(), vec![0b11]);
    }

    #[test]
    fn presheaf_products() {
        let base = Arc::new(FinCategory::terminal());
        let fam = vec![set(&base, &["a", "b"]), set(&base, &["c"]), set(&base, &["d", "e"])];
        let triv = filtered_product_presheaf(&fam, &Filter::trivial(&I3).unwrap()).unwrap();
        assert_eq!(triv.num_classes(0), 4);
        let fp = filtered_product_presheaf(&fam, &Filter::make_principal(&I3, &["1", "2"]).unwrap()).unwrap();
        assert_eq!(fp.presheaf.elements(0), &["[(a,c,d)]", "[(b,c,d)]"]);
        assert!(check_cocone(&fp).unwrap().is_ok());
        assert!(check_coprojection_epi(&fam, &fp.filter).unwrap().is_ok());
        let u = filtered_product_presheaf(&fam, &Filter::make_principal(&I3, &["1"]).unwrap()).unwrap();
        assert_eq!(u.num_classes(0), 2);
        let iso = reduction_iso(&fam, &fp.filter, 0b011).unwrap();
        assert!(iso.is_iso());
    }

    #[test]
    fn empty_carriers_are_rejected() {
        let base = Arc::new(FinCategory::terminal());
        let fam = vec![set(&base, &["a"]), set(&base, &[]), set(&base, &["d"])];
        let r = filtered_product_presheaf(&fam, &Filter::trivial(&I3).unwrap());
        assert!(matches!(r, Err(Error::EmptyCarrier(_))));
    }

    #[test]
    fn graph_products_are_natural() {
        let base = Arc::new(FinCategory::graph());
        let e = crate::cat::tests::edge(&base);
        let fam = vec![e.clone(), e.clone(), e];
        let fp = filtered_product_presheaf(&fam, &Filter::make_principal(&I3, &["2", "3"]).unwrap()).unwrap();
        assert!(crate::cat::check_presheaf(&fp.presheaf).is_ok());
        assert!(crate::cat::check_nat_trans(&fp.quotient).is_ok());
        assert!(check_cocone(&fp).unwrap().is_ok());
        // universal property: maps out of ∏_F agreeing after μ_I are equal
        let target = Arc::new(Presheaf::terminal(fp.presheaf.base().clone()));
        let maps = enumerate_nat_trans(&fp.presheaf, &target).unwrap();
        assert_eq!(maps.len(), 1);
    }

    #[test]
    fn model_products() {
        use crate::fol::tests::bit_model;
        let a = bit_model(&[0]);
        let b = bit_model(&[0, 1]);
        let labels = ["1", "2"];
        let fm = filtered_product_models(&[a.clone(), b.clone()], &Filter::trivial(&labels).unwrap()).unwrap();
        let (p, _) = product_models(a.sig(), a.base(), &[a.clone(), b.clone()]).unwrap();
        assert_eq!(fm.model.relation("r").unwrap().count(), p.relation("r").unwrap().count());
        assert!(crate::fol::check_model_morphism(&fm.quotient).is_ok());
        let u = filtered_product_models(&[a.clone(), b.clone()], &Filter::make_principal(&labels, &["1"]).unwrap())
            .unwrap();
        let (_, mu) = u.coprojection(0b01).unwrap();
        assert!(crate::fol::check_model_morphism(&mu).is_ok());
        assert_eq!(u.model.relation("r").unwrap().count(), 1);
    }
}
