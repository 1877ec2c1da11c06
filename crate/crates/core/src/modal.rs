//! Coalgebras for finitary set functors, predicate liftings and the modal
//! operators they induce.
//!
//! Finite sets are `0..n`; a function `n -> m` is a slice of length `n`
//! with entries below `m`. Subsets are `BTreeSet<usize>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::bound;
use crate::cat::for_each_function;
use crate::error::{Error, Result};
use crate::internal::{ITerm, IType, InternalEnv, Value};
use crate::report::ValidationReport;

pub type Subset = BTreeSet<usize>;

/// An element of `F(X)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FElem {
    /// Powerset: a subset of `X`.
    Set(Subset),
    /// Kripke: successors and the labels (indices into the proposition list).
    Kripke(Subset, Subset),
    /// Exponent `X^n`.
    Tuple(Vec<usize>),
    /// Constant functor value index.
    Const(usize),
    /// Payload of a user-supplied functor.
    Other(Vec<usize>),
}

/// A user-supplied finitary functor.
pub trait CustomFunctor: Send + Sync {
    fn name(&self) -> String;
    fn elements(&self, n: usize) -> Result<Vec<FElem>>;
    fn map(&self, mu: &[usize], m: usize, e: &FElem) -> FElem;
    /// `β`, if the functor carries one.
    fn successors(&self, e: &FElem) -> Option<Subset>;
}

#[derive(Clone)]
pub enum SetFunctor {
    Powerset,
    /// `P(X) × P(PV)`.
    Kripke {
        props: Vec<String>,
    },
    /// `X^arity`.
    Exponent {
        arity: usize,
    },
    /// `X ↦ C`.
    Constant {
        values: Vec<String>,
    },
    Custom(Arc<dyn CustomFunctor>),
}

impl fmt::Debug for SetFunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFunctor::Powerset => write!(f, "Powerset"),
            SetFunctor::Kripke { props } => write!(f, "Kripke({props:?})"),
            SetFunctor::Exponent { arity } => write!(f, "Exponent({arity})"),
            SetFunctor::Constant { values } => write!(f, "Constant({values:?})"),
            SetFunctor::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

impl PartialEq for SetFunctor {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SetFunctor::Powerset, SetFunctor::Powerset) => true,
            (SetFunctor::Kripke { props: a }, SetFunctor::Kripke { props: b }) => a == b,
            (SetFunctor::Exponent { arity: a }, SetFunctor::Exponent { arity: b }) => a == b,
            (SetFunctor::Constant { values: a }, SetFunctor::Constant { values: b }) => a == b,
            (SetFunctor::Custom(a), SetFunctor::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Outcome of the product-preservation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Preservation {
    Yes,
    No,
    Unknown,
}

fn subsets(n: usize) -> Result<Vec<Subset>> {
    bound::guard("subsets", bound::pow_estimate(2, n))?;
    Ok((0..1usize << n).map(|k| (0..n).filter(|j| k >> j & 1 == 1).collect()).collect())
}

fn image(mu: &[usize], s: &Subset) -> Subset {
    s.iter().map(|&x| mu[x]).collect()
}

fn preimage(mu: &[usize], s: &Subset) -> Subset {
    (0..mu.len()).filter(|x| s.contains(&mu[*x])).collect()
}

impl SetFunctor {
    /// `F(n)` in a fixed order.
    pub fn elements(&self, n: usize) -> Result<Vec<FElem>> {
        Ok(match self {
            SetFunctor::Powerset => subsets(n)?.into_iter().map(FElem::Set).collect(),
            SetFunctor::Kripke { props } => {
                bound::guard("Kripke functor elements", bound::pow_estimate(2, n + props.len()))?;
                let labels = subsets(props.len())?;
                let mut out = Vec::new();
                for s in subsets(n)? {
                    for l in &labels {
                        out.push(FElem::Kripke(s.clone(), l.clone()));
                    }
                }
                out
            }
            SetFunctor::Exponent { arity } => {
                bound::guard("exponent functor elements", bound::pow_estimate(n, *arity))?;
                let mut out = Vec::new();
                for_each_function(*arity, n, |t| {
                    out.push(FElem::Tuple(t.to_vec()));
                    true
                });
                out
            }
            SetFunctor::Constant { values } => (0..values.len()).map(FElem::Const).collect(),
            SetFunctor::Custom(c) => c.elements(n)?,
        })
    }

    pub fn contains(&self, n: usize, e: &FElem) -> bool {
        match (self, e) {
            (SetFunctor::Powerset, FElem::Set(s)) => s.iter().all(|&x| x < n),
            (SetFunctor::Kripke { props }, FElem::Kripke(s, l)) => {
                s.iter().all(|&x| x < n) && l.iter().all(|&p| p < props.len())
            }
            (SetFunctor::Exponent { arity }, FElem::Tuple(t)) => t.len() == *arity && t.iter().all(|&x| x < n),
            (SetFunctor::Constant { values }, FElem::Const(i)) => *i < values.len(),
            (SetFunctor::Custom(c), e) => c.elements(n).map(|v| v.contains(e)).unwrap_or(false),
            _ => false,
        }
    }

    /// `F(μ)` for `μ: n -> m`.
    pub fn map(&self, mu: &[usize], m: usize, e: &FElem) -> FElem {
        match (self, e) {
            (SetFunctor::Powerset, FElem::Set(s)) => FElem::Set(image(mu, s)),
            (SetFunctor::Kripke { .. }, FElem::Kripke(s, l)) => FElem::Kripke(image(mu, s), l.clone()),
            (SetFunctor::Exponent { .. }, FElem::Tuple(t)) => FElem::Tuple(t.iter().map(|&x| mu[x]).collect()),
            (SetFunctor::Constant { .. }, FElem::Const(i)) => FElem::Const(*i),
            (SetFunctor::Custom(c), e) => c.map(mu, m, e),
            _ => e.clone(),
        }
    }

    /// `β_X: F(X) -> P(X)`.
    pub fn successors(&self, e: &FElem) -> Result<Subset> {
        match (self, e) {
            (SetFunctor::Powerset, FElem::Set(s)) | (SetFunctor::Kripke { .. }, FElem::Kripke(s, _)) => Ok(s.clone()),
            (SetFunctor::Exponent { .. }, FElem::Tuple(t)) => Ok(t.iter().copied().collect()),
            (SetFunctor::Constant { .. }, FElem::Const(_)) => Ok(Subset::new()),
            (SetFunctor::Custom(c), e) => {
                c.successors(e).ok_or_else(|| Error::UnsupportedFunctor(format!("{} has no successor map", c.name())))
            }
            _ => Err(Error::MalformedInput(format!("{e:?} is not an element of {self:?}"))),
        }
    }

    pub fn display(&self, names: &[String], e: &FElem) -> String {
        let set = |s: &Subset, n: &[String]| {
            format!("{{{}}}", s.iter().map(|&i| n[i].as_str()).collect::<Vec<_>>().join(","))
        };
        match (self, e) {
            (SetFunctor::Kripke { props }, FElem::Kripke(s, l)) => format!("({}, {})", set(s, names), set(l, props)),
            (_, FElem::Set(s)) => set(s, names),
            (_, FElem::Tuple(t)) => format!("({})", t.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(",")),
            (SetFunctor::Constant { values }, FElem::Const(i)) => values[*i].clone(),
            _ => format!("{e:?}"),
        }
    }

    /// Identity and composition laws on all sets up to `max_n`.
    pub fn check_functor_laws(&self, max_n: usize) -> Result<ValidationReport> {
        let mut rep = ValidationReport::new();
        for n in 0..=max_n {
            let id: Vec<usize> = (0..n).collect();
            for e in self.elements(n)? {
                if self.map(&id, n, &e) != e {
                    rep.push("identity", format!("F(id_{n}) moves {e:?}"));
                }
            }
        }
        for a in 0..=max_n {
            for b in 0..=max_n {
                for c in 0..=max_n {
                    bound::guard("functor law triples", bound::pow_estimate(b, a) * bound::pow_estimate(c, b))?;
                    let ea = self.elements(a)?;
                    for_each_function(a, b, |f| {
                        for_each_function(b, c, |g| {
                            let gf: Vec<usize> = f.iter().map(|&x| g[x]).collect();
                            for e in &ea {
                                if self.map(&gf, c, e) != self.map(g, c, &self.map(f, b, e)) {
                                    rep.push("composition", format!("F(g∘f) ≠ F(g)∘F(f) at {e:?}"));
                                    return false;
                                }
                            }
                            true
                        });
                        rep.is_ok()
                    });
                }
            }
        }
        Ok(rep)
    }

    /// Whether `⟨F(π_1), …, F(π_k)⟩: F(∏ X_i) -> ∏ F(X_i)` is a bijection for
    /// sets of the given sizes (and `F(1) ≅ 1` for the empty product).
    pub fn preserves_product(&self, sizes: &[usize]) -> Result<bool> {
        let total: usize = sizes.iter().product();
        let elems = self.elements(total)?;
        let factor_counts: Vec<usize> =
            sizes.iter().map(|&n| self.elements(n).map(|v| v.len())).collect::<Result<_>>()?;
        if elems.len() != factor_counts.iter().product::<usize>() {
            return Ok(false);
        }
        let projs = product_projections(sizes);
        let mut seen = BTreeSet::new();
        for e in &elems {
            let key: Vec<FElem> = projs.iter().zip(sizes).map(|(p, &n)| self.map(p, n, e)).collect();
            if !seen.insert(key) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Tri-state summary over all pairs of sizes up to `max_n`.
    pub fn product_preserving(&self, max_n: usize) -> Preservation {
        let mut checks = vec![vec![]];
        for a in 1..=max_n {
            for b in 1..=max_n {
                checks.push(vec![a, b]);
            }
        }
        for c in checks {
            match self.preserves_product(&c) {
                Ok(false) => return Preservation::No,
                Ok(true) => {}
                Err(_) => return Preservation::Unknown,
            }
        }
        Preservation::Yes
    }
}

/// Projections of the product `∏ sizes` with the first factor most
/// significant.
fn product_projections(sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().product();
    let mut out = vec![Vec::with_capacity(total); sizes.len()];
    for x in 0..total {
        let mut r = x;
        for k in (0..sizes.len()).rev() {
            out[k].push(r % sizes[k]);
            r /= sizes[k];
        }
    }
    for o in &mut out {
        o.shrink_to_fit();
    }
    out
}

/// An `F`-coalgebra on a finite set of named states.
#[derive(Clone, Debug)]
pub struct Coalgebra {
    pub functor: SetFunctor,
    pub states: Vec<String>,
    pub structure: Vec<FElem>,
    /// Optional valuation of propositional variables.
    pub valuation: BTreeMap<String, Subset>,
}

impl Coalgebra {
    pub fn new(functor: SetFunctor, states: Vec<String>, structure: Vec<FElem>) -> Result<Self> {
        if structure.len() != states.len() {
            return Err(Error::MalformedInput("structure map is not total".into()));
        }
        for (s, e) in states.iter().zip(&structure) {
            if !functor.contains(states.len(), e) {
                return Err(Error::MalformedInput(format!("α({s}) is not in F(X)")));
            }
        }
        Ok(Coalgebra { functor, states, structure, valuation: BTreeMap::new() })
    }

    /// Kripke frame from successor lists; each state's labels are given by name.
    pub fn kripke(props: &[&str], states: &[&str], succ: &[&[usize]], labels: &[&[&str]]) -> Result<Self> {
        let props: Vec<String> = props.iter().map(|p| p.to_string()).collect();
        let structure = succ
            .iter()
            .zip(labels)
            .map(|(s, ls)| {
                let l: Result<Subset> = ls
                    .iter()
                    .map(|p| {
                        props
                            .iter()
                            .position(|q| q == p)
                            .ok_or_else(|| Error::UnknownIdentifier(format!("proposition {p}")))
                    })
                    .collect();
                Ok(FElem::Kripke(s.iter().copied().collect(), l?))
            })
            .collect::<Result<_>>()?;
        Self::new(SetFunctor::Kripke { props }, states.iter().map(|s| s.to_string()).collect(), structure)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn all(&self) -> Subset {
        (0..self.len()).collect()
    }

    pub fn names(&self, s: &Subset) -> Vec<String> {
        s.iter().map(|&i| self.states[i].clone()).collect()
    }
}

/// `α⁻¹(Y) = {x | α(x) ∈ Y}`.
pub fn alpha_inverse(c: &Coalgebra, y: &BTreeSet<FElem>) -> Subset {
    (0..c.len()).filter(|&x| y.contains(&c.structure[x])).collect()
}

/// `F(μ)∘α_X = α_Y∘μ`.
pub fn is_coalgebra_morphism(src: &Coalgebra, dst: &Coalgebra, mu: &[usize]) -> bool {
    mu.len() == src.len()
        && (0..src.len()).all(|x| src.functor.map(mu, dst.len(), &src.structure[x]) == dst.structure[mu[x]])
}

/// Every coalgebra structure on `n` states, states named "s0", "s1", ….
pub fn enumerate_coalgebras(functor: &SetFunctor, n: usize) -> Result<Vec<Coalgebra>> {
    let elems = functor.elements(n)?;
    bound::guard("coalgebra structures", bound::pow_estimate(elems.len(), n))?;
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut out = Vec::new();
    for_each_function(n, elems.len(), |f| {
        out.push(Coalgebra {
            functor: functor.clone(),
            states: states.clone(),
            structure: f.iter().map(|&i| elems[i].clone()).collect(),
            valuation: BTreeMap::new(),
        });
        true
    });
    Ok(out)
}

pub type LiftingFn = Arc<dyn Fn(&SetFunctor, usize, &[Subset], &FElem) -> Result<bool> + Send + Sync>;

/// An `n`-ary predicate lifting, given by membership of `F(X)` elements in
/// `λ_X(args)`.
#[derive(Clone)]
pub struct PredicateLifting {
    pub name: String,
    pub arity: usize,
    test: LiftingFn,
}

impl fmt::Debug for PredicateLifting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PredicateLifting({}/{})", self.name, self.arity)
    }
}

impl PredicateLifting {
    pub fn new(name: &str, arity: usize, test: LiftingFn) -> Self {
        PredicateLifting { name: name.into(), arity, test }
    }

    /// `{y | β(y) ⊆ a}`.
    pub fn modal_box() -> Self {
        Self::new("box", 1, Arc::new(|f, _, a, e| Ok(f.successors(e)?.is_subset(&a[0]))))
    }

    /// `{y | β(y) ∩ a ≠ ∅}`.
    pub fn modal_diamond() -> Self {
        Self::new("diamond", 1, Arc::new(|f, _, a, e| Ok(!f.successors(e)?.is_disjoint(&a[0]))))
    }

    pub fn const_top() -> Self {
        Self::new("top", 1, Arc::new(|_, _, _, _| Ok(true)))
    }

    /// Elements of a Kripke functor labelled with `p`; the argument is unused.
    pub fn atom(p: &str) -> Self {
        let p = p.to_string();
        Self::new(
            &p.clone(),
            1,
            Arc::new(move |f, _, _, e| match (f, e) {
                (SetFunctor::Kripke { props }, FElem::Kripke(_, l)) => {
                    let i = props
                        .iter()
                        .position(|q| *q == p)
                        .ok_or_else(|| Error::UnknownIdentifier(format!("proposition {p}")))?;
                    Ok(l.contains(&i))
                }
                _ => Err(Error::UnsupportedFunctor("atomic propositions need a Kripke functor".into())),
            }),
        )
    }

    /// Moss' `∇` at arity `k`: every argument meets `β(y)` and `β(y)` is
    /// covered by the arguments.
    pub fn nabla(k: usize) -> Self {
        Self::new(
            "nabla",
            k,
            Arc::new(|f, _, args, e| {
                let succ = f.successors(e)?;
                let meets = args.iter().all(|a| !a.is_disjoint(&succ));
                let covered = succ.iter().all(|x| args.iter().any(|a| a.contains(x)));
                Ok(meets && covered)
            }),
        )
    }

    /// `λ_X(args) ⊆ F(X)` for `X = n`.
    pub fn component(&self, f: &SetFunctor, n: usize, args: &[Subset]) -> Result<BTreeSet<FElem>> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch(format!("{} takes {} arguments", self.name, self.arity)));
        }
        let mut out = BTreeSet::new();
        for e in f.elements(n)? {
            if (self.test)(f, n, args, &e)? {
                out.insert(e);
            }
        }
        Ok(out)
    }
}

/// `[λ]_X(args) = α⁻¹(λ_X(args))`.
pub fn apply_lifting(l: &PredicateLifting, c: &Coalgebra, args: &[Subset]) -> Result<Subset> {
    if args.iter().flatten().any(|&x| x >= c.len()) {
        return Err(Error::MalformedInput("argument is not a subset of the carrier".into()));
    }
    Ok(alpha_inverse(c, &l.component(&c.functor, c.len(), args)?))
}

pub fn eval_box(c: &Coalgebra, a: &Subset) -> Result<Subset> {
    apply_lifting(&PredicateLifting::modal_box(), c, std::slice::from_ref(a))
}

pub fn eval_diamond(c: &Coalgebra, a: &Subset) -> Result<Subset> {
    apply_lifting(&PredicateLifting::modal_diamond(), c, std::slice::from_ref(a))
}

/// `∇` applied to a set of argument subsets (duplicates collapse).
pub fn eval_nabla(c: &Coalgebra, args: &BTreeSet<Subset>) -> Result<Subset> {
    let v: Vec<Subset> = args.iter().cloned().collect();
    apply_lifting(&PredicateLifting::nabla(v.len()), c, &v)
}

fn show(s: &Subset) -> String {
    format!("{{{}}}", s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

/// Naturality of `λ` over all functions between sets up to `max_n`, then
/// the `α⁻¹` square and distribution of `[λ]` over every morphism between
/// coalgebras with at most `max_n` states.
pub fn check_lifting_naturality(l: &PredicateLifting, functor: &SetFunctor, max_n: usize) -> Result<ValidationReport> {
    check_lifting_naturality_with(l, functor, max_n, max_n)
}

/// As [`check_lifting_naturality`], with the coalgebra part limited to
/// `max_states` states. Kripke functors have too many coalgebras on three
/// states for the pairwise search.
pub fn check_lifting_naturality_with(
    l: &PredicateLifting,
    functor: &SetFunctor,
    max_n: usize,
    max_states: usize,
) -> Result<ValidationReport> {
    let mut rep = ValidationReport::new();
    let mut err = None;
    for n in 0..=max_n {
        for m in 0..=max_n {
            let arg_tuples = tuples_of(&subsets(m)?, l.arity);
            bound::guard("lifting naturality squares", bound::pow_estimate(m, n) * arg_tuples.len() as f64)?;
            let cache: Vec<BTreeSet<FElem>> =
                arg_tuples.iter().map(|a| l.component(functor, m, a)).collect::<Result<_>>()?;
            let elems_n = functor.elements(n)?;
            for_each_function(n, m, |mu| {
                for (args, lm) in arg_tuples.iter().zip(&cache) {
                    let pulled: Vec<Subset> = args.iter().map(|a| preimage(mu, a)).collect();
                    let lhs = match l.component(functor, n, &pulled) {
                        Ok(v) => v,
                        Err(e) => {
                            err = Some(e);
                            return false;
                        }
                    };
                    let rhs: BTreeSet<FElem> =
                        elems_n.iter().filter(|e| lm.contains(&functor.map(mu, m, e))).cloned().collect();
                    if lhs != rhs {
                        let a: Vec<String> = args.iter().map(show).collect();
                        rep.push(
                            "lifting naturality",
                            format!("square for μ={mu:?}: {n} -> {m} fails at ({})", a.join(", ")),
                        );
                        return false;
                    }
                }
                true
            });
            if let Some(e) = err.take() {
                return Err(e);
            }
            if !rep.is_ok() {
                return Ok(rep);
            }
        }
    }
    let coalgebras: Vec<Coalgebra> = (1..=max_states)
        .map(|n| enumerate_coalgebras(functor, n))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    bound::guard("coalgebra pairs", (coalgebras.len() as f64).powi(2))?;
    for x in &coalgebras {
        for y in &coalgebras {
            let fy = functor.elements(y.len())?;
            let arg_tuples = tuples_of(&subsets(y.len())?, l.arity);
            let mut fail = None;
            for_each_function(x.len(), y.len(), |mu| {
                if !is_coalgebra_morphism(x, y, mu) {
                    return true;
                }
                // α⁻¹ square on singletons; preimages preserve unions
                for e in &fy {
                    let one: BTreeSet<FElem> = [e.clone()].into();
                    let lhs = preimage(mu, &alpha_inverse(y, &one));
                    let pulled: BTreeSet<FElem> = functor
                        .elements(x.len())
                        .unwrap_or_default()
                        .into_iter()
                        .filter(|d| functor.map(mu, y.len(), d) == *e)
                        .collect();
                    if lhs != alpha_inverse(x, &pulled) {
                        fail = Some(format!("α⁻¹ square for μ={mu:?} fails at {e:?}"));
                        return false;
                    }
                }
                for args in &arg_tuples {
                    let pulled: Vec<Subset> = args.iter().map(|a| preimage(mu, a)).collect();
                    match (apply_lifting(l, y, args), apply_lifting(l, x, &pulled)) {
                        (Ok(a), Ok(b)) if preimage(mu, &a) == b => {}
                        (Ok(_), Ok(_)) => {
                            let a: Vec<String> = args.iter().map(show).collect();
                            fail =
                                Some(format!("[{}] does not distribute over μ={mu:?} at ({})", l.name, a.join(", ")));
                            return false;
                        }
                        _ => {}
                    }
                }
                true
            });
            if let Some(msg) = fail {
                rep.push("distributing", msg);
                return Ok(rep);
            }
        }
    }
    Ok(rep)
}

/// Exhaustive monotonicity of `[λ]` on one coalgebra.
pub fn check_lifting_isotone(l: &PredicateLifting, c: &Coalgebra) -> Result<ValidationReport> {
    let mut rep = ValidationReport::new();
    let tuples = tuples_of(&subsets(c.len())?, l.arity);
    bound::guard("isotonicity pairs", (tuples.len() as f64).powi(2))?;
    let vals: Vec<Subset> = tuples.iter().map(|a| apply_lifting(l, c, a)).collect::<Result<_>>()?;
    for (i, a) in tuples.iter().enumerate() {
        for (j, b) in tuples.iter().enumerate() {
            if a.iter().zip(b).all(|(x, y)| x.is_subset(y)) && !vals[i].is_subset(&vals[j]) {
                rep.push("isotone", format!("[{}] is not isotone at {:?} ⊆ {:?}", l.name, a, b));
                return Ok(rep);
            }
        }
    }
    Ok(rep)
}

fn tuples_of(items: &[Subset], n: usize) -> Vec<Vec<Subset>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t: Vec<Subset>| items.iter().map(move |s| [t.clone(), vec![s.clone()]].concat()))
            .collect();
    }
    out
}

/// Product coalgebra with its projections. The functor must preserve the
/// product of the carriers; the structure is the unique mediating map.
pub fn product_coalgebras(cs: &[Coalgebra]) -> Result<(Coalgebra, Vec<Vec<usize>>)> {
    let Some(first) = cs.first() else {
        return Err(Error::PreconditionFailed("product of an empty family of coalgebras".into()));
    };
    if cs.iter().any(|c| c.functor != first.functor) {
        return Err(Error::MalformedInput("coalgebras for different functors".into()));
    }
    let f = &first.functor;
    let sizes: Vec<usize> = cs.iter().map(Coalgebra::len).collect();
    if !f.preserves_product(&sizes)? {
        return Err(Error::FunctorNotProductPreserving(format!(
            "{f:?}: F(∏X_i) is not the product of the F(X_i) for sizes {sizes:?}"
        )));
    }
    let total: usize = sizes.iter().product();
    let projs = product_projections(&sizes);
    let mut mediate: HashMap<Vec<FElem>, FElem> = HashMap::new();
    for e in f.elements(total)? {
        let key = projs.iter().zip(&sizes).map(|(p, &n)| f.map(p, n, &e)).collect();
        mediate.insert(key, e);
    }
    let mut states = Vec::with_capacity(total);
    let mut structure = Vec::with_capacity(total);
    for x in 0..total {
        let comps: Vec<usize> = projs.iter().map(|p| p[x]).collect();
        states.push(format!(
            "({})",
            comps.iter().zip(cs).map(|(&i, c)| c.states[i].as_str()).collect::<Vec<_>>().join(",")
        ));
        let key: Vec<FElem> = comps.iter().zip(cs).map(|(&i, c)| c.structure[i].clone()).collect();
        structure.push(mediate[&key].clone());
    }
    Ok((Coalgebra { functor: f.clone(), states, structure, valuation: BTreeMap::new() }, projs))
}

/// Reflexivity and transitivity of `b: X -> PX`, evaluated as internal
/// formulas `∀x. x ∈ b(x)` and `∀x∀y∀z. y ∈ b(x) ∧ z ∈ b(y) ⇒ z ∈ b(x)`.
pub fn check_preorder_coalgebra(c: &Coalgebra) -> Result<bool> {
    if c.functor != SetFunctor::Powerset {
        return Err(Error::UnsupportedFunctor("preorder coalgebras use the powerset functor".into()));
    }
    let base = Arc::new(crate::cat::FinCategory::terminal());
    let names: Vec<&str> = c.states.iter().map(String::as_str).collect();
    let x = Arc::new(crate::cat::Presheaf::set(base, &names)?);
    let mut env = InternalEnv::new(&[("X", x)])?;
    let structure = c.structure.clone();
    env.add_morphism("b", IType::named("X"), IType::power(IType::named("X")), move |v| {
        match (v, v_set(&structure, v)) {
            (Value::Elem(_), Some(s)) => Value::Set(s.iter().map(|&j| Value::Elem(j)).collect()),
            _ => Value::Set(BTreeSet::new()),
        }
    })?;
    let ty = IType::named("X");
    let b = |t: ITerm| ITerm::App("b".into(), t.bx());
    let refl = ITerm::Forall(ty.clone(), ITerm::In(ITerm::Var(0).bx(), b(ITerm::Var(0)).bx()).bx());
    let body = ITerm::Implies(
        ITerm::And(
            ITerm::In(ITerm::Var(1).bx(), b(ITerm::Var(0)).bx()).bx(),
            ITerm::In(ITerm::Var(2).bx(), b(ITerm::Var(1)).bx()).bx(),
        )
        .bx(),
        ITerm::In(ITerm::Var(2).bx(), b(ITerm::Var(0)).bx()).bx(),
    );
    let trans = ITerm::Forall(ty.clone(), ITerm::Forall(ty.clone(), ITerm::Forall(ty, body.bx()).bx()).bx());
    let holds = |t: &ITerm| env.eval_at(&[], &[], t).map(|v| v == Value::Truth(true));
    Ok(holds(&refl)? && holds(&trans)?)
}

fn v_set<'a>(structure: &'a [FElem], v: &Value) -> Option<&'a Subset> {
    match v {
        Value::Elem(i) => match &structure[*i] {
            FElem::Set(s) => Some(s),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> Subset {
        xs.iter().copied().collect()
    }

    fn two_state() -> Coalgebra {
        Coalgebra::kripke(&["p"], &["s0", "s1"], &[&[1], &[]], &[&[], &["p"]]).unwrap()
    }

    #[test]
    fn preimages() {
        let c = two_state();
        let all: BTreeSet<FElem> = c.functor.elements(2).unwrap().into_iter().collect();
        assert_eq!(alpha_inverse(&c, &all), c.all());
        assert!(alpha_inverse(&c, &BTreeSet::new()).is_empty());
        let y: BTreeSet<FElem> =
            all.into_iter().filter(|e| matches!(e, FElem::Kripke(s, _) if *s == set(&[1]))).collect();
        assert_eq!(alpha_inverse(&c, &y), set(&[0]));
    }

    #[test]
    fn liftings() {
        let c = two_state();
        assert_eq!(apply_lifting(&PredicateLifting::const_top(), &c, &[set(&[])]).unwrap(), c.all());
        assert_eq!(apply_lifting(&PredicateLifting::atom("p"), &c, &[c.all()]).unwrap(), set(&[1]));
        assert_eq!(eval_box(&c, &c.all()).unwrap(), c.all());
        assert!(eval_diamond(&c, &set(&[])).unwrap().is_empty());
        assert_eq!(eval_box(&c, &set(&[1])).unwrap(), set(&[0, 1]));
        assert_eq!(eval_diamond(&c, &set(&[1])).unwrap(), set(&[0]));
    }

    #[test]
    fn nabla() {
        let c = two_state();
        assert_eq!(eval_nabla(&c, &BTreeSet::new()).unwrap(), set(&[1]));
        assert_eq!(eval_nabla(&c, &[set(&[1])].into()).unwrap(), set(&[0]));
        assert_eq!(eval_nabla(&c, &[c.all()].into()).unwrap(), set(&[0]));
    }

    #[test]
    fn naturality() {
        let k = SetFunctor::Kripke { props: vec!["p".into()] };
        assert!(check_lifting_naturality(&PredicateLifting::const_top(), &k, 2).unwrap().is_ok());
        assert!(check_lifting_naturality(&PredicateLifting::modal_box(), &k, 2).unwrap().is_ok());
        let bad = PredicateLifting::new("first", 1, Arc::new(|f, _, _, e| Ok(f.successors(e)?.contains(&0))));
        let rep = check_lifting_naturality(&bad, &k, 2).unwrap();
        assert!(rep.mentions("square for"));
    }

    #[test]
    fn functor_laws_and_products() {
        let k = SetFunctor::Kripke { props: vec!["p".into()] };
        assert!(k.check_functor_laws(2).unwrap().is_ok());
        assert_eq!(k.product_preserving(2), Preservation::No);
        assert_eq!(SetFunctor::Exponent { arity: 2 }.product_preserving(2), Preservation::Yes);
        assert_eq!(
            SetFunctor::Constant { values: vec!["a".into(), "b".into()] }.product_preserving(2),
            Preservation::No
        );
        let c = two_state();
        assert!(matches!(product_coalgebras(&[c.clone(), c]), Err(Error::FunctorNotProductPreserving(_))));
    }

    #[test]
    fn exponent_products() {
        let f = SetFunctor::Exponent { arity: 2 };
        let a = Coalgebra::new(
            f.clone(),
            vec!["a0".into(), "a1".into()],
            vec![FElem::Tuple(vec![1, 0]), FElem::Tuple(vec![1, 1])],
        )
        .unwrap();
        let b = Coalgebra::new(f.clone(), vec!["b0".into()], vec![FElem::Tuple(vec![0, 0])]).unwrap();
        let (p, projs) = product_coalgebras(&[a.clone(), b.clone()]).unwrap();
        // the structure pairs the component structures
        assert_eq!(p.structure[0], FElem::Tuple(vec![1, 0]));
        assert!(is_coalgebra_morphism(&p, &a, &projs[0]));
        assert!(is_coalgebra_morphism(&p, &b, &projs[1]));
        let (single, _) = product_coalgebras(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.structure, a.structure);
    }

    #[test]
    fn preorders() {
        let mk = |b: &[&[usize]]| {
            Coalgebra::new(
                SetFunctor::Powerset,
                vec!["s0".into(), "s1".into()],
                b.iter().map(|s| FElem::Set(set(s))).collect(),
            )
            .unwrap()
        };
        assert!(check_preorder_coalgebra(&mk(&[&[0], &[1]])).unwrap());
        assert!(check_preorder_coalgebra(&mk(&[&[0, 1], &[1]])).unwrap());
        assert!(!check_preorder_coalgebra(&mk(&[&[1], &[]])).unwrap());
        assert!(matches!(check_preorder_coalgebra(&two_state()), Err(Error::UnsupportedFunctor(_))));
    }
}
