//! Many-sorted signatures, contexts, terms and Σ-structures whose carriers
//! are presheaves, with model morphisms and products of models.
//!
//! Variables are positional: a context is a list of sorts, and names are
//! kept only for display.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use fixedbitset::FixedBitSet;

use crate::bound;
use crate::cat::{
    check_nat_trans, enumerate_nat_trans, for_each_function, product_presheaf, same_base, same_presheaf, FinCategory,
    NatTrans, ObjId, Presheaf, Product,
};
use crate::error::{Error, Result};
use crate::report::ValidationReport;
use crate::sub::SubPresheaf;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnProfile {
    pub args: Vec<String>,
    pub result: String,
}

/// A many-sorted signature. Power sorts `PA` pair a sort with the sort of
/// its elements; their carriers are generated, not supplied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub functions: BTreeMap<String, FnProfile>,
    pub relations: BTreeMap<String, Vec<String>>,
    pub power_sorts: BTreeMap<String, String>,
}

impl Signature {
    pub fn new(sorts: &[&str]) -> Self {
        Signature { sorts: sorts.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn with_function(mut self, name: &str, args: &[&str], result: &str) -> Self {
        self.functions.insert(
            name.to_string(),
            FnProfile { args: args.iter().map(|s| s.to_string()).collect(), result: result.to_string() },
        );
        self
    }

    pub fn with_relation(mut self, name: &str, args: &[&str]) -> Self {
        self.relations.insert(name.to_string(), args.iter().map(|s| s.to_string()).collect());
        self
    }

    /// Declares `power` as the power sort of `elem`; `power` must be a sort.
    pub fn with_power_sort(mut self, power: &str, elem: &str) -> Self {
        self.power_sorts.insert(power.to_string(), elem.to_string());
        self
    }

    pub fn has_sort(&self, s: &str) -> bool {
        self.sorts.iter().any(|x| x == s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        let names = self.sorts.iter().chain(self.functions.keys()).chain(self.relations.keys());
        for n in names {
            if !seen.insert(n) {
                return Err(Error::MalformedInput(format!("signature name '{n}' is used twice")));
            }
        }
        let check = |s: &String, ctx: &str| {
            if self.has_sort(s) {
                Ok(())
            } else {
                Err(Error::UnknownIdentifier(format!("sort '{s}' in {ctx}")))
            }
        };
        for (f, p) in &self.functions {
            for s in p.args.iter().chain(std::iter::once(&p.result)) {
                check(s, &format!("function {f}"))?;
            }
        }
        for (r, args) in &self.relations {
            for s in args {
                check(s, &format!("relation {r}"))?;
            }
        }
        for (p, a) in &self.power_sorts {
            check(p, "power sort")?;
            check(a, "power sort element")?;
            if self.power_sorts.contains_key(a) {
                return Err(Error::MalformedInput(format!("power sort {p} of a power sort is not supported")));
            }
        }
        Ok(())
    }

    pub fn function(&self, name: &str) -> Result<&FnProfile> {
        self.functions.get(name).ok_or_else(|| Error::UnknownIdentifier(format!("function '{name}'")))
    }

    pub fn relation(&self, name: &str) -> Result<&Vec<String>> {
        self.relations.get(name).ok_or_else(|| Error::UnknownIdentifier(format!("relation '{name}'")))
    }
}

/// An ordered list of sorted variables. Equality is positional: only the
/// sorts matter.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub vars: Vec<(String, String)>,
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.vars.len() == other.vars.len() && self.vars.iter().zip(&other.vars).all(|(a, b)| a.1 == b.1)
    }
}

impl Eq for Context {}

impl Context {
    pub fn new(vars: &[(&str, &str)]) -> Result<Self> {
        let vars: Vec<(String, String)> = vars.iter().map(|(n, s)| (n.to_string(), s.to_string())).collect();
        Self::from_vars(vars)
    }

    pub fn from_vars(vars: Vec<(String, String)>) -> Result<Self> {
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.0 == v.0) {
                return Err(Error::MalformedInput(format!("variable '{}' declared twice", v.0)));
            }
        }
        Ok(Context { vars })
    }

    pub fn empty() -> Self {
        Context::default()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn sorts(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.1.clone()).collect()
    }

    pub fn sort(&self, i: usize) -> &str {
        &self.vars[i].1
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].0
    }

    /// Appends variables; a clashing name gets primes added.
    pub fn extended(&self, more: &[(String, String)]) -> Context {
        let mut vars = self.vars.clone();
        for (n, s) in more {
            let mut name = n.clone();
            while vars.iter().any(|v| v.0 == name) {
                name.push('\'');
            }
            vars.push((name, s.clone()));
        }
        Context { vars }
    }

    pub fn check(&self, sig: &Signature) -> Result<()> {
        for (n, s) in &self.vars {
            if !sig.has_sort(s) {
                return Err(Error::UnknownIdentifier(format!("sort '{s}' of variable {n}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (n, s)) in self.vars.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}:{s}")?;
        }
        write!(f, "]")
    }
}

/// A term over a context: a variable position or a function application.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    App(String, Vec<Term>),
}

impl Term {
    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.to_string(), args)
    }

    pub fn constant(c: &str) -> Term {
        Term::App(c.to_string(), Vec::new())
    }

    /// Sort of the term, checking it against the signature and context.
    pub fn sort(&self, sig: &Signature, ctx: &Context) -> Result<String> {
        match self {
            Term::Var(i) => ctx
                .vars
                .get(*i)
                .map(|v| v.1.clone())
                .ok_or_else(|| Error::UnboundVariable(format!("variable #{i} in context {ctx}"))),
            Term::App(f, args) => {
                let p = sig.function(f)?;
                if p.args.len() != args.len() {
                    return Err(Error::ArityMismatch(format!("{f} takes {} arguments", p.args.len())));
                }
                for (a, s) in args.iter().zip(&p.args) {
                    let got = a.sort(sig, ctx)?;
                    if &got != s {
                        return Err(Error::MalformedInput(format!("argument of {f} has sort {got}, expected {s}")));
                    }
                }
                Ok(p.result.clone())
            }
        }
    }

    /// Replaces variable `i` by `subst[i]`.
    pub fn substitute(&self, subst: &[Term]) -> Term {
        match self {
            Term::Var(i) => subst[*i].clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.substitute(subst)).collect()),
        }
    }

    /// Adds `k` to every variable position at or above `from`.
    pub fn shift(&self, from: usize, k: usize) -> Term {
        match self {
            Term::Var(i) if *i >= from => Term::Var(i + k),
            Term::Var(i) => Term::Var(*i),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.shift(from, k)).collect()),
        }
    }

    pub fn display(&self, ctx: &Context) -> String {
        match self {
            Term::Var(i) => ctx.vars.get(*i).map(|v| v.0.clone()).unwrap_or_else(|| format!("#{i}")),
            Term::App(f, args) if args.is_empty() => f.clone(),
            Term::App(f, args) => {
                let parts: Vec<String> = args.iter().map(|a| a.display(ctx)).collect();
                format!("{f}({})", parts.join(", "))
            }
        }
    }
}

/// A context morphism `σ -> τ`: one term over `σ` per variable of `τ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtxMorphism {
    pub src: Context,
    pub dst: Context,
    pub terms: Vec<Term>,
}

impl CtxMorphism {
    pub fn new(sig: &Signature, src: Context, dst: Context, terms: Vec<Term>) -> Result<Self> {
        if terms.len() != dst.len() {
            return Err(Error::ArityMismatch(format!(
                "{} terms for a target context of length {}",
                terms.len(),
                dst.len()
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            let s = t.sort(sig, &src)?;
            if s != dst.sort(i) {
                return Err(Error::MalformedInput(format!(
                    "term {} has sort {s}, target variable {} has sort {}",
                    t.display(&src),
                    dst.name(i),
                    dst.sort(i)
                )));
            }
        }
        Ok(CtxMorphism { src, dst, terms })
    }

    pub fn identity(ctx: &Context) -> Self {
        CtxMorphism { src: ctx.clone(), dst: ctx.clone(), terms: (0..ctx.len()).map(Term::Var).collect() }
    }

    /// The projection `src -> dst` forgetting the trailing variables of
    /// `src`; `dst` must be a prefix of `src`.
    pub fn prefix_projection(src: &Context, keep: usize) -> Result<Self> {
        if keep > src.len() {
            return Err(Error::MalformedInput("projection keeps more variables than it has".into()));
        }
        let dst = Context { vars: src.vars[..keep].to_vec() };
        Ok(CtxMorphism { src: src.clone(), dst, terms: (0..keep).map(Term::Var).collect() })
    }

    /// `Some(k)` if this is the projection onto the first `k` variables.
    pub fn prefix_length(&self) -> Option<usize> {
        let k = self.dst.len();
        if k > self.src.len() {
            return None;
        }
        let vars_ok = self.terms.iter().enumerate().all(|(i, t)| *t == Term::Var(i));
        let sorts_ok = (0..k).all(|i| self.src.sort(i) == self.dst.sort(i));
        (vars_ok && sorts_ok).then_some(k)
    }

    pub fn is_identity(&self) -> bool {
        self.prefix_length() == Some(self.src.len())
    }

    /// `next ∘ self`: substitutes this morphism's terms into `next`'s.
    pub fn then(&self, next: &CtxMorphism) -> Result<CtxMorphism> {
        if self.dst != next.src {
            return Err(Error::MalformedInput("composing context morphisms with mismatched contexts".into()));
        }
        Ok(CtxMorphism {
            src: self.src.clone(),
            dst: next.dst.clone(),
            terms: next.terms.iter().map(|t| t.substitute(&self.terms)).collect(),
        })
    }

    pub fn display(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|t| t.display(&self.src)).collect();
        format!("{} -> {} ⟨{}⟩", self.src, self.dst, parts.join(", "))
    }
}

/// A Σ-structure: presheaf carriers, natural transformations for function
/// symbols and subobjects for relation symbols.
pub struct SigmaStructure {
    sig: Arc<Signature>,
    base: Arc<FinCategory>,
    carriers: BTreeMap<String, Arc<Presheaf>>,
    functions: BTreeMap<String, NatTrans>,
    relations: BTreeMap<String, SubPresheaf>,
    products: RwLock<HashMap<Vec<String>, Arc<Product>>>,
}

impl fmt::Debug for SigmaStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmaStructure").field("carriers", &self.carriers).field("relations", &self.relations).finish()
    }
}

impl PartialEq for SigmaStructure {
    fn eq(&self, other: &Self) -> bool {
        *self.sig == *other.sig
            && same_base(&self.base, &other.base)
            && self.carriers == other.carriers
            && self
                .functions
                .iter()
                .zip(&other.functions)
                .all(|(a, b)| a.0 == b.0 && a.1.components() == b.1.components())
            && self.relations.iter().zip(&other.relations).all(|(a, b)| a.0 == b.0 && a.1.parts() == b.1.parts())
    }
}

/// Builder for [`SigmaStructure`].
pub struct ModelBuilder {
    sig: Arc<Signature>,
    base: Arc<FinCategory>,
    carriers: BTreeMap<String, Arc<Presheaf>>,
    functions: BTreeMap<String, FnSpec>,
    relations: BTreeMap<String, RelSpec>,
}

type FnClosure = Box<dyn Fn(ObjId, &[usize]) -> usize>;
type RelClosure = Box<dyn Fn(ObjId, &[usize]) -> bool>;

enum FnSpec {
    Table(Vec<Vec<usize>>),
    Closure(FnClosure),
}

enum RelSpec {
    Parts(Vec<FixedBitSet>),
    Closure(RelClosure),
}

impl ModelBuilder {
    pub fn carrier(mut self, sort: &str, p: Arc<Presheaf>) -> Self {
        self.carriers.insert(sort.to_string(), p);
        self
    }

    /// Function table indexed by the mixed-radix code of the argument tuple.
    pub fn function_table(mut self, name: &str, table: Vec<Vec<usize>>) -> Self {
        self.functions.insert(name.to_string(), FnSpec::Table(table));
        self
    }

    /// Function given pointwise on argument element indices.
    pub fn function_fn(mut self, name: &str, f: impl Fn(ObjId, &[usize]) -> usize + 'static) -> Self {
        self.functions.insert(name.to_string(), FnSpec::Closure(Box::new(f)));
        self
    }

    pub fn relation_parts(mut self, name: &str, parts: Vec<FixedBitSet>) -> Self {
        self.relations.insert(name.to_string(), RelSpec::Parts(parts));
        self
    }

    pub fn relation_fn(mut self, name: &str, f: impl Fn(ObjId, &[usize]) -> bool + 'static) -> Self {
        self.relations.insert(name.to_string(), RelSpec::Closure(Box::new(f)));
        self
    }

    pub fn build(self) -> Result<SigmaStructure> {
        let ModelBuilder { sig, base, mut carriers, functions, relations } = self;
        sig.validate()?;
        for (p, a) in &sig.power_sorts {
            let elem = carriers.get(a).ok_or_else(|| Error::MalformedInput(format!("no carrier for sort {a}")))?;
            let gen = Arc::new(power_carrier(elem)?);
            match carriers.get(p) {
                Some(given) if !same_presheaf(given, &gen) => {
                    return Err(Error::MalformedInput(format!(
                        "carrier of power sort {p} is not the canonical powerset"
                    )))
                }
                _ => {
                    carriers.insert(p.clone(), gen);
                }
            }
        }
        for s in &sig.sorts {
            let c = carriers.get(s).ok_or_else(|| Error::MalformedInput(format!("no carrier for sort {s}")))?;
            if !same_base(c.base(), &base) {
                return Err(Error::BaseMismatch(format!("carrier of {s}")));
            }
        }
        if let Some(extra) = carriers.keys().find(|k| !sig.has_sort(k)) {
            return Err(Error::UnknownIdentifier(format!("carrier for undeclared sort '{extra}'")));
        }
        let mut m = SigmaStructure {
            sig: sig.clone(),
            base: base.clone(),
            carriers,
            functions: BTreeMap::new(),
            relations: BTreeMap::new(),
            products: RwLock::new(HashMap::new()),
        };
        for name in functions.keys().chain(relations.keys()) {
            if !sig.functions.contains_key(name) && !sig.relations.contains_key(name) {
                return Err(Error::UnknownIdentifier(format!("'{name}' is not in the signature")));
            }
        }
        let mut functions = functions;
        for (name, p) in &sig.functions {
            let spec =
                functions.remove(name).ok_or_else(|| Error::MalformedInput(format!("no interpretation for {name}")))?;
            let dom = m.sorts_product(&p.args)?;
            let cod = m.carrier(&p.result)?.clone();
            let table = match spec {
                FnSpec::Table(t) => t,
                FnSpec::Closure(f) => (0..base.num_objects())
                    .map(|b| (0..dom.presheaf.size(b)).map(|x| f(b, &dom.decode(b, x))).collect())
                    .collect(),
            };
            let t = NatTrans::new(dom.presheaf.clone(), cod, table)
                .map_err(|e| Error::MalformedInput(format!("function {name}: {e}")))?;
            let rep = check_nat_trans(&t);
            if !rep.is_ok() {
                return Err(Error::MalformedInput(format!("function {name}: {rep}")));
            }
            m.functions.insert(name.clone(), t);
        }
        let mut relations = relations;
        for (name, args) in &sig.relations {
            let spec =
                relations.remove(name).ok_or_else(|| Error::MalformedInput(format!("no interpretation for {name}")))?;
            let dom = m.sorts_product(args)?;
            let parts = match spec {
                RelSpec::Parts(p) => p,
                RelSpec::Closure(f) => (0..base.num_objects())
                    .map(|b| {
                        let mut s = FixedBitSet::with_capacity(dom.presheaf.size(b));
                        for x in 0..dom.presheaf.size(b) {
                            if f(b, &dom.decode(b, x)) {
                                s.insert(x);
                            }
                        }
                        s
                    })
                    .collect(),
            };
            let sub = SubPresheaf::new(dom.presheaf.clone(), parts)
                .map_err(|e| Error::MalformedInput(format!("relation {name}: {e}")))?;
            m.relations.insert(name.clone(), sub);
        }
        Ok(m)
    }
}

/// Canonical powerset carrier of a set-like presheaf: element `k` is the
/// subset with bitmask `k`.
pub fn power_carrier(elem: &Presheaf) -> Result<Presheaf> {
    if !elem.base().is_set_like() {
        return Err(Error::UnsupportedCarrier("power sorts need set-like carriers".into()));
    }
    let n = elem.size(0);
    bound::guard("power sort carrier", bound::pow_estimate(2, n))?;
    let names = (0..1usize << n)
        .map(|k| {
            let els: Vec<&str> = (0..n).filter(|j| k >> j & 1 == 1).map(|j| elem.elements(0)[j].as_str()).collect();
            format!("{{{}}}", els.join(","))
        })
        .collect();
    Presheaf::new(elem.base().clone(), vec![names], vec![(0..1usize << n).collect()])
}

impl SigmaStructure {
    pub fn builder(sig: Arc<Signature>, base: Arc<FinCategory>) -> ModelBuilder {
        ModelBuilder { sig, base, carriers: BTreeMap::new(), functions: BTreeMap::new(), relations: BTreeMap::new() }
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn carrier(&self, sort: &str) -> Result<&Arc<Presheaf>> {
        self.carriers.get(sort).ok_or_else(|| Error::UnknownIdentifier(format!("sort '{sort}'")))
    }

    pub fn carriers(&self) -> &BTreeMap<String, Arc<Presheaf>> {
        &self.carriers
    }

    pub fn function(&self, name: &str) -> Result<&NatTrans> {
        self.functions.get(name).ok_or_else(|| Error::UnknownIdentifier(format!("function '{name}'")))
    }

    pub fn relation(&self, name: &str) -> Result<&SubPresheaf> {
        self.relations.get(name).ok_or_else(|| Error::UnknownIdentifier(format!("relation '{name}'")))
    }

    pub fn relations(&self) -> &BTreeMap<String, SubPresheaf> {
        &self.relations
    }

    /// Product of the carriers of `sorts`, cached so that equal sort lists
    /// share one presheaf.
    pub fn sorts_product(&self, sorts: &[String]) -> Result<Arc<Product>> {
        if let Some(p) = self.products.read().expect("cache lock").get(sorts) {
            return Ok(p.clone());
        }
        let factors: Vec<Arc<Presheaf>> = sorts.iter().map(|s| self.carrier(s).cloned()).collect::<Result<_>>()?;
        let p = Arc::new(product_presheaf(&self.base, &factors)?);
        let mut cache = self.products.write().expect("cache lock");
        Ok(cache.entry(sorts.to_vec()).or_insert(p).clone())
    }

    pub fn context_product(&self, ctx: &Context) -> Result<Arc<Product>> {
        self.sorts_product(&ctx.sorts())
    }

    /// Every carrier nonempty at every object.
    pub fn has_empty_carrier(&self) -> bool {
        self.carriers.values().any(|c| c.has_empty_object())
    }

    /// Value of `t` at object `b` for the context tuple `env`.
    pub(crate) fn eval_term(&self, b: ObjId, env: &[usize], t: &Term) -> usize {
        match t {
            Term::Var(i) => env[*i],
            Term::App(f, args) => {
                let vals: Vec<usize> = args.iter().map(|a| self.eval_term(b, env, a)).collect();
                let fun = &self.functions[f];
                let dom = self.sorts_product(&self.sig.functions[f].args).expect("declared sorts");
                fun.apply(b, dom.encode(b, &vals))
            }
        }
    }
}

/// `|M|(σ)`: the product of the variable carriers.
pub fn interpret_context(m: &SigmaStructure, ctx: &Context) -> Result<Arc<Presheaf>> {
    ctx.check(m.sig())?;
    Ok(m.context_product(ctx)?.presheaf.clone())
}

/// `⟦t⟧: |M|(σ) -> M_s`.
pub fn interpret_term(m: &SigmaStructure, ctx: &Context, t: &Term) -> Result<NatTrans> {
    let sort = t.sort(m.sig(), ctx)?;
    let prod = m.context_product(ctx)?;
    let cod = m.carrier(&sort)?.clone();
    let comps = (0..m.base.num_objects())
        .map(|b| (0..prod.presheaf.size(b)).map(|x| m.eval_term(b, &prod.decode(b, x), t)).collect())
        .collect();
    Ok(NatTrans::new_unchecked(prod.presheaf.clone(), cod, comps))
}

/// `|M|(g): |M|(σ) -> |M|(τ)`, the tuple of term interpretations.
pub fn interpret_ctx_morphism(m: &SigmaStructure, g: &CtxMorphism) -> Result<NatTrans> {
    for (i, t) in g.terms.iter().enumerate() {
        if t.sort(m.sig(), &g.src)? != g.dst.sort(i) {
            return Err(Error::MalformedInput(format!("context morphism {} is ill-typed", g.display())));
        }
    }
    let src = m.context_product(&g.src)?;
    let dst = m.context_product(&g.dst)?;
    let comps = (0..m.base.num_objects())
        .map(|b| {
            (0..src.presheaf.size(b))
                .map(|x| {
                    let env = src.decode(b, x);
                    let vals: Vec<usize> = g.terms.iter().map(|t| m.eval_term(b, &env, t)).collect();
                    dst.encode(b, &vals)
                })
                .collect()
        })
        .collect();
    Ok(NatTrans::new_unchecked(src.presheaf.clone(), dst.presheaf.clone(), comps))
}

/// A morphism of Σ-structures: one natural transformation per sort.
#[derive(Clone, Debug)]
pub struct ModelMorphism {
    pub src: Arc<SigmaStructure>,
    pub dst: Arc<SigmaStructure>,
    components: BTreeMap<String, NatTrans>,
}

impl ModelMorphism {
    /// Checks shapes; use [`check_model_morphism`] for the structure laws.
    pub fn new(
        src: Arc<SigmaStructure>,
        dst: Arc<SigmaStructure>,
        components: BTreeMap<String, NatTrans>,
    ) -> Result<Self> {
        if *src.sig != *dst.sig {
            return Err(Error::SignatureMismatch("model morphism between different signatures".into()));
        }
        if !same_base(&src.base, &dst.base) {
            return Err(Error::BaseMismatch("model morphism between different bases".into()));
        }
        for s in &src.sig.sorts {
            let c = components.get(s).ok_or_else(|| Error::MalformedInput(format!("no component for sort {s}")))?;
            if !same_presheaf(c.src(), src.carrier(s)?) || !same_presheaf(c.dst(), dst.carrier(s)?) {
                return Err(Error::AmbientMismatch(format!("component for sort {s} has the wrong ends")));
            }
        }
        Ok(ModelMorphism { src, dst, components })
    }

    pub fn identity(m: &Arc<SigmaStructure>) -> Self {
        let components = m.carriers.iter().map(|(s, c)| (s.clone(), NatTrans::identity(c))).collect();
        ModelMorphism { src: m.clone(), dst: m.clone(), components }
    }

    pub fn component(&self, sort: &str) -> Result<&NatTrans> {
        self.components.get(sort).ok_or_else(|| Error::UnknownIdentifier(format!("sort '{sort}'")))
    }

    pub fn components(&self) -> &BTreeMap<String, NatTrans> {
        &self.components
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &ModelMorphism) -> Result<ModelMorphism> {
        let components =
            self.components.iter().map(|(s, c)| Ok((s.clone(), c.then(next.component(s)?)?))).collect::<Result<_>>()?;
        Ok(ModelMorphism { src: self.src.clone(), dst: next.dst.clone(), components })
    }

    pub fn is_epi(&self) -> bool {
        self.components.values().all(NatTrans::is_epi)
    }

    /// `|μ|_σ: |M|(σ) -> |N|(σ)`.
    pub fn context_map(&self, ctx: &Context) -> Result<NatTrans> {
        self.sorts_map(&ctx.sorts())
    }

    pub fn sorts_map(&self, sorts: &[String]) -> Result<NatTrans> {
        let sp = self.src.sorts_product(sorts)?;
        let dp = self.dst.sorts_product(sorts)?;
        let comps: Vec<&NatTrans> = sorts.iter().map(|s| self.component(s)).collect::<Result<_>>()?;
        let nobj = self.src.base.num_objects();
        let table = (0..nobj)
            .map(|b| {
                (0..sp.presheaf.size(b))
                    .map(|x| {
                        let v: Vec<usize> = sp.decode(b, x).iter().zip(&comps).map(|(&e, c)| c.apply(b, e)).collect();
                        dp.encode(b, &v)
                    })
                    .collect()
            })
            .collect();
        Ok(NatTrans::new_unchecked(sp.presheaf.clone(), dp.presheaf.clone(), table))
    }
}

/// Naturality of components, function squares and relation preservation.
pub fn check_model_morphism(mu: &ModelMorphism) -> ValidationReport {
    let mut rep = ValidationReport::new();
    for (s, c) in &mu.components {
        for v in check_nat_trans(c).violations {
            rep.push("naturality", format!("sort {s}: {}", v.message));
        }
    }
    let sig = &mu.src.sig;
    let nobj = mu.src.base.num_objects();
    for (f, p) in &sig.functions {
        let Ok(dom_map) = mu.sorts_map(&p.args) else {
            rep.push("shape", format!("cannot form the argument map of {f}"));
            continue;
        };
        let fs = &mu.src.functions[f];
        let fd = &mu.dst.functions[f];
        let res = &mu.components[&p.result];
        'obj: for b in 0..nobj {
            for x in 0..dom_map.src().size(b) {
                if res.apply(b, fs.apply(b, x)) != fd.apply(b, dom_map.apply(b, x)) {
                    rep.push("function square", format!("{f} at {}", dom_map.src().elements(b)[x]));
                    break 'obj;
                }
            }
        }
    }
    for (r, args) in &sig.relations {
        let Ok(dom_map) = mu.sorts_map(args) else {
            rep.push("shape", format!("cannot form the argument map of {r}"));
            continue;
        };
        let rs = &mu.src.relations[r];
        let rd = &mu.dst.relations[r];
        'robj: for b in 0..nobj {
            for x in rs.parts()[b].ones() {
                let y = dom_map.apply(b, x);
                if !rd.contains(b, y) {
                    rep.push(
                        "relation",
                        format!(
                            "{r}: {} maps to {} outside the target relation",
                            dom_map.src().elements(b)[x],
                            dom_map.dst().elements(b)[y]
                        ),
                    );
                    break 'robj;
                }
            }
        }
    }
    rep
}

/// Product of models with its projections. The empty family gives the
/// terminal model (all carriers terminal, all relations full).
pub fn product_models(
    sig: &Arc<Signature>,
    base: &Arc<FinCategory>,
    ms: &[Arc<SigmaStructure>],
) -> Result<(Arc<SigmaStructure>, Vec<ModelMorphism>)> {
    for m in ms {
        if *m.sig != **sig {
            return Err(Error::SignatureMismatch("product of models over different signatures".into()));
        }
        if !same_base(&m.base, base) {
            return Err(Error::BaseMismatch("product of models over different bases".into()));
        }
    }
    let mut builder = SigmaStructure::builder(sig.clone(), base.clone());
    let mut sort_products: BTreeMap<String, Product> = BTreeMap::new();
    for s in &sig.sorts {
        if sig.power_sorts.contains_key(s) && !ms.is_empty() {
            // power carriers are regenerated from the element carriers
            continue;
        }
        let factors: Vec<Arc<Presheaf>> = ms.iter().map(|m| m.carrier(s).cloned()).collect::<Result<_>>()?;
        let p = product_presheaf(base, &factors)?;
        builder = builder.carrier(s, p.presheaf.clone());
        sort_products.insert(s.clone(), p);
    }
    if ms.len() > 1 && !sig.power_sorts.is_empty() {
        return Err(Error::UnsupportedCarrier("products of models with power sorts".into()));
    }
    let sp = Arc::new(sort_products);
    for (f, p) in &sig.functions {
        let sp = sp.clone();
        let ms: Vec<Arc<SigmaStructure>> = ms.to_vec();
        let p = p.clone();
        let fname = f.clone();
        builder = builder.function_fn(f, move |b, args| {
            let comps: Vec<Vec<usize>> = args.iter().zip(&p.args).map(|(&a, s)| sp[s].decode(b, a)).collect();
            let out: Vec<usize> = ms
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let vals: Vec<usize> = comps.iter().map(|c| c[i]).collect();
                    let dom = m.sorts_product(&p.args).expect("declared");
                    m.functions[&fname].apply(b, dom.encode(b, &vals))
                })
                .collect();
            sp[&p.result].encode(b, &out)
        });
    }
    for (r, args) in &sig.relations {
        let sp = sp.clone();
        let ms: Vec<Arc<SigmaStructure>> = ms.to_vec();
        let args = args.clone();
        let rname = r.clone();
        builder = builder.relation_fn(r, move |b, xs| {
            let comps: Vec<Vec<usize>> = xs.iter().zip(&args).map(|(&a, s)| sp[s].decode(b, a)).collect();
            ms.iter().enumerate().all(|(i, m)| {
                let vals: Vec<usize> = comps.iter().map(|c| c[i]).collect();
                let dom = m.sorts_product(&args).expect("declared");
                m.relations[&rname].contains(b, dom.encode(b, &vals))
            })
        });
    }
    let prod = Arc::new(builder.build()?);
    let mut projections = Vec::with_capacity(ms.len());
    for (i, m) in ms.iter().enumerate() {
        let components = sig
            .sorts
            .iter()
            .map(|s| {
                let proj = &sp[s].projections[i];
                let t = NatTrans::new_unchecked(
                    prod.carrier(s)?.clone(),
                    m.carrier(s)?.clone(),
                    proj.components().to_vec(),
                );
                Ok((s.clone(), t))
            })
            .collect::<Result<_>>()?;
        projections.push(ModelMorphism { src: prod.clone(), dst: m.clone(), components });
    }
    Ok((prod, projections))
}

/// All model morphisms `a -> b`.
pub fn enumerate_model_morphisms(a: &Arc<SigmaStructure>, b: &Arc<SigmaStructure>) -> Result<Vec<ModelMorphism>> {
    if *a.sig != *b.sig {
        return Err(Error::SignatureMismatch("enumerating morphisms between different signatures".into()));
    }
    let sorts = a.sig.sorts.clone();
    let mut per_sort = Vec::with_capacity(sorts.len());
    let mut est = 1f64;
    for s in &sorts {
        let c = enumerate_nat_trans(a.carrier(s)?, b.carrier(s)?)?;
        est *= c.len() as f64;
        per_sort.push(c);
    }
    bound::guard("model morphism candidates", est)?;
    let mut out = Vec::new();
    let counts: Vec<usize> = per_sort.iter().map(Vec::len).collect();
    if counts.contains(&0) {
        return Ok(out);
    }
    let mut idx = vec![0; sorts.len()];
    loop {
        let components =
            sorts.iter().zip(&idx).enumerate().map(|(k, (s, &i))| (s.clone(), per_sort[k][i].clone())).collect();
        let mu = ModelMorphism { src: a.clone(), dst: b.clone(), components };
        if check_model_morphism(&mu).is_ok() {
            out.push(mu);
        }
        let mut k = sorts.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Every model of `sig` over a set-like base whose carriers have at most
/// `max` elements (elements named "0", "1", …). Power sorts are generated.
pub fn enumerate_models(sig: &Arc<Signature>, base: &Arc<FinCategory>, max: usize) -> Result<Vec<Arc<SigmaStructure>>> {
    if !base.is_set_like() {
        return Err(Error::UnsupportedCarrier("model enumeration needs a set-like base".into()));
    }
    sig.validate()?;
    let plain: Vec<String> = sig.sorts.iter().filter(|s| !sig.power_sorts.contains_key(*s)).cloned().collect();
    let mut out = Vec::new();
    let mut sizes = vec![0usize; plain.len()];
    let mut total = 0f64;
    loop {
        let size_of = |s: &str| -> usize {
            match sig.power_sorts.get(s) {
                Some(a) => 1 << sizes[plain.iter().position(|p| p == a).unwrap()],
                None => sizes[plain.iter().position(|p| p == s).unwrap()],
            }
        };
        let mut est = 1f64;
        for p in sig.functions.values() {
            let n: usize = p.args.iter().map(|s| size_of(s)).product();
            est *= bound::pow_estimate(size_of(&p.result), n);
        }
        for args in sig.relations.values() {
            let n: usize = args.iter().map(|s| size_of(s)).product();
            est *= bound::pow_estimate(2, n);
        }
        total += est;
        bound::guard("model candidates", total)?;
        enumerate_models_with(sig, base, &plain, &sizes, &mut out)?;
        let mut k = plain.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            sizes[k] += 1;
            if sizes[k] <= max {
                break;
            }
            sizes[k] = 0;
        }
    }
}

fn enumerate_models_with(
    sig: &Arc<Signature>,
    base: &Arc<FinCategory>,
    plain: &[String],
    sizes: &[usize],
    out: &mut Vec<Arc<SigmaStructure>>,
) -> Result<()> {
    let mut carriers = BTreeMap::new();
    for (s, &n) in plain.iter().zip(sizes) {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        carriers.insert(s.clone(), Arc::new(Presheaf::new(base.clone(), vec![names], vec![(0..n).collect()])?));
    }
    for (p, a) in &sig.power_sorts {
        carriers.insert(p.clone(), Arc::new(power_carrier(&carriers[a])?));
    }
    let dom_size = |args: &[String]| -> usize { args.iter().map(|s| carriers[s].size(0)).product() };
    let fns: Vec<(String, usize, usize)> =
        sig.functions.iter().map(|(f, p)| (f.clone(), dom_size(&p.args), carriers[&p.result].size(0))).collect();
    let rels: Vec<(String, usize)> = sig.relations.iter().map(|(r, a)| (r.clone(), dom_size(a))).collect();
    let mut tables: Vec<Vec<usize>> = vec![Vec::new(); fns.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec_fn(
        k: usize,
        fns: &[(String, usize, usize)],
        rels: &[(String, usize)],
        tables: &mut Vec<Vec<usize>>,
        sig: &Arc<Signature>,
        base: &Arc<FinCategory>,
        carriers: &BTreeMap<String, Arc<Presheaf>>,
        out: &mut Vec<Arc<SigmaStructure>>,
    ) -> Result<()> {
        if k == fns.len() {
            let total: usize = rels.iter().map(|r| r.1).sum();
            for mask in 0u64..(1u64 << total) {
                let mut b = SigmaStructure::builder(sig.clone(), base.clone());
                for (s, c) in carriers {
                    b = b.carrier(s, c.clone());
                }
                for ((f, _, _), t) in fns.iter().zip(tables.iter()) {
                    b = b.function_table(f, vec![t.clone()]);
                }
                let mut off = 0;
                for (r, n) in rels {
                    let mut s = FixedBitSet::with_capacity(*n);
                    for x in 0..*n {
                        if mask >> (off + x) & 1 == 1 {
                            s.insert(x);
                        }
                    }
                    off += n;
                    b = b.relation_parts(r, vec![s]);
                }
                out.push(Arc::new(b.build()?));
            }
            return Ok(());
        }
        let mut res = Ok(());
        for_each_function(fns[k].1, fns[k].2, |t| {
            tables[k] = t.to_vec();
            res = rec_fn(k + 1, fns, rels, tables, sig, base, carriers, out);
            res.is_ok()
        });
        res
    }
    rec_fn(0, &fns, &rels, &mut tables, sig, base, &carriers, out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn bit_sig() -> Arc<Signature> {
        Arc::new(
            Signature::new(&["s"])
                .with_function("c", &[], "s")
                .with_function("f", &["s"], "s")
                .with_relation("r", &["s"]),
        )
    }

    pub(crate) fn bit_model(r: &'static [usize]) -> Arc<SigmaStructure> {
        let base = Arc::new(FinCategory::terminal());
        let s = Arc::new(Presheaf::set(base.clone(), &["0", "1"]).unwrap());
        Arc::new(
            SigmaStructure::builder(bit_sig(), base)
                .carrier("s", s)
                .function_fn("c", |_, _| 0)
                .function_fn("f", |_, a| 1 - a[0])
                .relation_fn("r", move |_, a| r.contains(&a[0]))
                .build()
                .unwrap(),
        )
    }

    fn x() -> Context {
        Context::new(&[("x", "s")]).unwrap()
    }

    #[test]
    fn contexts() {
        let m = bit_model(&[0]);
        let t = interpret_context(&m, &Context::empty()).unwrap();
        assert_eq!(t.size(0), 1);
        assert_eq!(interpret_context(&m, &x()).unwrap().size(0), 2);
        let xy = Context::new(&[("x", "s"), ("y", "s")]).unwrap();
        assert_eq!(interpret_context(&m, &xy).unwrap().size(0), 4);
        assert!(Context::new(&[("x", "s"), ("x", "s")]).is_err());
        assert!(interpret_context(&m, &Context::new(&[("x", "q")]).unwrap()).is_err());
    }

    #[test]
    fn terms() {
        let m = bit_model(&[0]);
        let fc = Term::app("f", vec![Term::constant("c")]);
        let t = interpret_term(&m, &Context::empty(), &fc).unwrap();
        assert_eq!(t.component(0), &[1]);
        let ffx = Term::app("f", vec![Term::app("f", vec![Term::Var(0)])]);
        assert_eq!(interpret_term(&m, &x(), &ffx).unwrap().component(0), &[0, 1]);
        assert!(matches!(interpret_term(&m, &Context::empty(), &Term::Var(0)), Err(Error::UnboundVariable(_))));
    }

    #[test]
    fn context_morphisms() {
        let m = bit_model(&[0]);
        let sig = m.sig().clone();
        let xy = Context::new(&[("x", "s"), ("y", "s")]).unwrap();
        let p = CtxMorphism::prefix_projection(&xy, 1).unwrap();
        let t = interpret_ctx_morphism(&m, &p).unwrap();
        assert_eq!(t.component(0), m.context_product(&xy).unwrap().projections[0].component(0));
        let y = Context::new(&[("y", "s")]).unwrap();
        let g = CtxMorphism::new(&sig, x(), y, vec![Term::app("f", vec![Term::Var(0)])]).unwrap();
        assert_eq!(interpret_ctx_morphism(&m, &g).unwrap().component(0), &[1, 0]);
        let id = interpret_ctx_morphism(&m, &CtxMorphism::identity(&xy)).unwrap();
        assert_eq!(id, NatTrans::identity(&m.context_product(&xy).unwrap().presheaf));
        // functoriality
        let gg = g
            .then(&CtxMorphism::new(&sig, g.dst.clone(), x(), vec![Term::app("f", vec![Term::Var(0)])]).unwrap())
            .unwrap();
        let lhs = interpret_ctx_morphism(&m, &gg).unwrap();
        let rhs = interpret_ctx_morphism(&m, &g)
            .unwrap()
            .then(
                &interpret_ctx_morphism(
                    &m,
                    &CtxMorphism::new(&sig, g.dst.clone(), x(), vec![Term::app("f", vec![Term::Var(0)])]).unwrap(),
                )
                .unwrap(),
            )
            .unwrap();
        assert_eq!(lhs.components(), rhs.components());
    }

    fn flip(src: &Arc<SigmaStructure>, dst: &Arc<SigmaStructure>) -> ModelMorphism {
        let c = NatTrans::new(src.carrier("s").unwrap().clone(), dst.carrier("s").unwrap().clone(), vec![vec![1, 0]])
            .unwrap();
        ModelMorphism::new(src.clone(), dst.clone(), [("s".to_string(), c)].into()).unwrap()
    }

    #[test]
    fn model_morphisms() {
        let a = bit_model(&[0]);
        assert!(check_model_morphism(&ModelMorphism::identity(&a)).is_ok());
        let rep = check_model_morphism(&flip(&a, &a));
        assert!(rep.mentions("relation"));
        let b = bit_model(&[0, 1]);
        // flip breaks c ↦ c, so only the relation condition is absorbed by ⊤
        assert!(!check_model_morphism(&flip(&a, &b)).mentions("relation"));
    }

    #[test]
    fn morphism_enumeration() {
        let base = Arc::new(FinCategory::terminal());
        let one = Arc::new(Presheaf::set(base.clone(), &["*"]).unwrap());
        let sig1 = Arc::new(Signature::new(&["s"]));
        let m1 = Arc::new(SigmaStructure::builder(sig1, base.clone()).carrier("s", one).build().unwrap());
        assert_eq!(enumerate_model_morphisms(&m1, &m1).unwrap().len(), 1);
        let sig2 = Arc::new(Signature::new(&["s"]).with_function("f", &["s"], "s"));
        let two = Arc::new(Presheaf::set(base.clone(), &["0", "1"]).unwrap());
        let flipm = Arc::new(
            SigmaStructure::builder(sig2, base.clone())
                .carrier("s", two.clone())
                .function_fn("f", |_, a| 1 - a[0])
                .build()
                .unwrap(),
        );
        assert_eq!(enumerate_model_morphisms(&flipm, &flipm).unwrap().len(), 2);
        let sig3 = Arc::new(Signature::new(&["s"]).with_function("f", &["s"], "s").with_relation("r", &["s"]));
        let mk = |r: &'static [usize]| {
            Arc::new(
                SigmaStructure::builder(sig3.clone(), base.clone())
                    .carrier("s", two.clone())
                    .function_fn("f", |_, a| 1 - a[0])
                    .relation_fn("r", move |_, a| r.contains(&a[0]))
                    .build()
                    .unwrap(),
            )
        };
        assert_eq!(enumerate_model_morphisms(&mk(&[0]), &mk(&[])).unwrap().len(), 0);
    }

    #[test]
    fn products_of_models() {
        let a = bit_model(&[0]);
        let b = bit_model(&[0, 1]);
        let (p, proj) = product_models(a.sig(), a.base(), &[a.clone(), b.clone()]).unwrap();
        let r = p.relation("r").unwrap();
        let names: Vec<String> = r.parts()[0].ones().map(|x| r.ambient().elements(0)[x].clone()).collect();
        assert_eq!(names, vec!["((0,0))", "((0,1))"]);
        for pr in &proj {
            assert!(check_model_morphism(pr).is_ok());
        }
        let (single, _) = product_models(a.sig(), a.base(), std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.carrier("s").unwrap().size(0), 2);
        let (term, ps) = product_models(a.sig(), a.base(), &[]).unwrap();
        assert!(ps.is_empty());
        assert_eq!(term.carrier("s").unwrap().size(0), 1);
        assert!(term.relation("r").unwrap().is_top());
    }

    #[test]
    fn power_sorts() {
        let base = Arc::new(FinCategory::terminal());
        let sig = Arc::new(Signature::new(&["a", "pa"]).with_power_sort("pa", "a"));
        let m = SigmaStructure::builder(sig, base.clone())
            .carrier("a", Arc::new(Presheaf::set(base, &["x", "y"]).unwrap()))
            .build()
            .unwrap();
        assert_eq!(m.carrier("pa").unwrap().elements(0), &["{}", "{x}", "{y}", "{x,y}"]);
    }

    #[test]
    fn model_enumeration() {
        let base = Arc::new(FinCategory::terminal());
        let sig = Arc::new(Signature::new(&["s"]).with_relation("r", &["s"]));
        // sizes 0,1,2: 1 + 2 + 4 models
        assert_eq!(enumerate_models(&sig, &base, 2).unwrap().len(), 7);
    }
}
