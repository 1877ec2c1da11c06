//! Seeded random instances for property tests, the acceptance suite and
//! the benches.
//!
//! Everything is one-sorted over the signature `s; c: s; f: s -> s;
//! r: [s]; e: [s, s]`, so terms and formulas never need sort bookkeeping.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cat::{enumerate_nat_trans, enumerate_presheaves, product_presheaf, FinCategory, NatTrans, Presheaf};
use crate::error::Result;
use crate::fol::{Context, CtxMorphism, SigmaStructure, Signature, Term};
use crate::formula::{Expr, Formula, CONJ, DISJ};
use crate::sub::SubPresheaf;

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `s; c: s; f: s -> s; r: [s]; e: [s, s]`.
pub fn corpus_sig() -> Arc<Signature> {
    Arc::new(
        Signature::new(&["s"])
            .with_function("c", &[], "s")
            .with_function("f", &["s"], "s")
            .with_relation("r", &["s"])
            .with_relation("e", &["s", "s"]),
    )
}

/// `s; r: [s]; e: [s, s]` without function symbols.
pub fn relational_sig() -> Arc<Signature> {
    Arc::new(Signature::new(&["s"]).with_relation("r", &["s"]).with_relation("e", &["s", "s"]))
}

/// The terminal category, the graph category and the chain of three.
pub fn bases() -> Vec<Arc<FinCategory>> {
    vec![Arc::new(FinCategory::terminal()), Arc::new(FinCategory::graph()), Arc::new(FinCategory::chain3())]
}

/// A random subobject: the down-closure of a random set of elements.
pub fn random_sub<R: Rng>(rng: &mut R, amb: &Arc<Presheaf>, density: f64) -> SubPresheaf {
    let mut elems = Vec::new();
    for b in 0..amb.base().num_objects() {
        for x in 0..amb.size(b) {
            if rng.gen_bool(density) {
                elems.push((b, x));
            }
        }
    }
    SubPresheaf::generated_by(amb, &elems)
}

/// Candidate carriers and their endomaps over one base.
pub struct ModelPool {
    pub base: Arc<FinCategory>,
    pub sig: Arc<Signature>,
    carriers: Vec<(Arc<Presheaf>, Vec<NatTrans>, Vec<NatTrans>)>,
}

impl ModelPool {
    /// Carriers with 1 to `max_carrier` elements per object. With function
    /// symbols, only carriers with a global element are kept so `c` has a
    /// value.
    pub fn new(base: Arc<FinCategory>, sig: Arc<Signature>, max_carrier: usize) -> Result<Self> {
        let with_fns = !sig.functions.is_empty();
        let one = Arc::new(Presheaf::terminal(base.clone()));
        let mut carriers = Vec::new();
        for p in enumerate_presheaves(&base, 1, max_carrier)? {
            let (points, endos) = if with_fns {
                (enumerate_nat_trans(&one, &p)?, enumerate_nat_trans(&p, &p)?)
            } else {
                (Vec::new(), Vec::new())
            };
            if with_fns && points.is_empty() {
                continue;
            }
            carriers.push((p, points, endos));
        }
        Ok(ModelPool { base, sig, carriers })
    }

    pub fn num_carriers(&self) -> usize {
        self.carriers.len()
    }

    /// A random model on one of the carriers.
    pub fn model<R: Rng>(&self, rng: &mut R) -> Result<Arc<SigmaStructure>> {
        let k = rng.gen_range(0..self.carriers.len());
        self.model_on(rng, k)
    }

    pub fn model_on<R: Rng>(&self, rng: &mut R, k: usize) -> Result<Arc<SigmaStructure>> {
        let (p, points, endos) = &self.carriers[k];
        let mut b = SigmaStructure::builder(self.sig.clone(), self.base.clone()).carrier("s", p.clone());
        if self.sig.functions.contains_key("c") {
            let pt = points.choose(rng).expect("nonempty");
            b = b.function_table("c", pt.components().to_vec());
        }
        if self.sig.functions.contains_key("f") {
            let f = endos.choose(rng).expect("identity exists");
            b = b.function_table("f", f.components().to_vec());
        }
        let d = rng.gen_range(0.2..0.7);
        let r = random_sub(rng, p, d);
        b = b.relation_parts("r", r.parts().to_vec());
        if self.sig.relations.contains_key("e") {
            let pp = Arc::new(product_presheaf(&self.base, &[p.clone(), p.clone()])?.presheaf);
            let e = random_sub(rng, &pp, d * 0.6);
            b = b.relation_parts("e", e.parts().to_vec());
        }
        Ok(Arc::new(b.build()?))
    }
}

/// Knobs for random formulas.
#[derive(Clone, Copy, Debug)]
pub struct FormulaConfig {
    pub max_depth: usize,
    /// Bound on the context length, bound variables included.
    pub max_vars: usize,
    /// Only `⊤, ⊥`, atoms, `∧, ∨, ∃`, conj and pullbacks.
    pub positive: bool,
    pub quantifiers: bool,
    pub pullbacks: bool,
    /// Terms may use `c` and `f`.
    pub functions: bool,
}

impl Default for FormulaConfig {
    fn default() -> Self {
        FormulaConfig {
            max_depth: 3,
            max_vars: 3,
            positive: false,
            quantifiers: true,
            pullbacks: true,
            functions: true,
        }
    }
}

const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];

/// A context of `n` variables of sort `s`.
pub fn context(n: usize) -> Context {
    let vars: Vec<(String, String)> = (0..n).map(|i| (NAMES[i % NAMES.len()].to_string(), "s".to_string())).collect();
    Context::from_vars(vars).expect("distinct names")
}

pub fn random_term<R: Rng>(rng: &mut R, ctx: &Context, functions: bool) -> Term {
    let var = |rng: &mut R| Term::Var(rng.gen_range(0..ctx.len()));
    if !functions {
        return var(rng);
    }
    let base = if ctx.is_empty() || rng.gen_bool(0.25) { Term::constant("c") } else { var(rng) };
    if rng.gen_bool(0.3) {
        Term::app("f", vec![base])
    } else {
        base
    }
}

fn random_atom<R: Rng>(rng: &mut R, ctx: &Context, cfg: &FormulaConfig) -> Expr {
    if ctx.is_empty() && !cfg.functions {
        return if rng.gen_bool(0.5) { Expr::Top } else { Expr::Bot };
    }
    match rng.gen_range(0..4) {
        0 => Expr::eq(random_term(rng, ctx, cfg.functions), random_term(rng, ctx, cfg.functions)),
        1 => Expr::rel("r", vec![random_term(rng, ctx, cfg.functions)]),
        2 => Expr::rel("e", vec![random_term(rng, ctx, cfg.functions), random_term(rng, ctx, cfg.functions)]),
        _ => Expr::rel("r", vec![random_term(rng, ctx, cfg.functions)]),
    }
}

/// A context morphism `src -> dst` with random terms.
pub fn random_ctx_morphism<R: Rng>(rng: &mut R, src: &Context, dst: &Context, functions: bool) -> CtxMorphism {
    let terms = (0..dst.len()).map(|_| random_term(rng, src, functions)).collect();
    CtxMorphism { src: src.clone(), dst: dst.clone(), terms }
}

/// A random formula over `ctx` of depth at most `depth`.
pub fn random_formula<R: Rng>(rng: &mut R, ctx: &Context, depth: usize, cfg: &FormulaConfig) -> Expr {
    if depth == 0 || rng.gen_bool(0.15) {
        return match rng.gen_range(0..10) {
            0 => Expr::Top,
            1 => Expr::Bot,
            _ => random_atom(rng, ctx, cfg),
        };
    }
    let d = depth - 1;
    let can_bind = cfg.quantifiers && ctx.len() < cfg.max_vars;
    let mut choices: Vec<u8> = vec![0, 1, 6];
    if !cfg.positive {
        choices.extend([2, 3, 7]);
    }
    if can_bind {
        choices.push(5);
        if !cfg.positive {
            choices.push(4);
        }
    }
    if cfg.pullbacks {
        choices.push(8);
    }
    match *choices.choose(rng).expect("nonempty") {
        0 => Expr::and(random_formula(rng, ctx, d, cfg), random_formula(rng, ctx, d, cfg)),
        1 => Expr::or(random_formula(rng, ctx, d, cfg), random_formula(rng, ctx, d, cfg)),
        2 => Expr::implies(random_formula(rng, ctx, d, cfg), random_formula(rng, ctx, d, cfg)),
        3 => Expr::not(random_formula(rng, ctx, d, cfg)),
        k @ (4 | 5) => {
            let inner = context(ctx.len() + 1);
            let body = random_formula(rng, &inner, d, cfg);
            if k == 4 {
                Expr::forall(&inner, ctx.len(), body).expect("prefix")
            } else {
                Expr::exists(&inner, ctx.len(), body).expect("prefix")
            }
        }
        6 => Expr::quant(
            CONJ,
            CtxMorphism::identity(ctx),
            vec![random_formula(rng, ctx, d, cfg), random_formula(rng, ctx, d, cfg)],
        ),
        7 => Expr::quant(
            DISJ,
            CtxMorphism::identity(ctx),
            vec![random_formula(rng, ctx, d, cfg), random_formula(rng, ctx, d, cfg)],
        ),
        _ => {
            let n = rng.gen_range(0..=cfg.max_vars.min(ctx.len() + 1));
            let dst = context(n);
            if ctx.is_empty() && !cfg.functions && n > 0 {
                return random_atom(rng, ctx, cfg);
            }
            let along = random_ctx_morphism(rng, ctx, &dst, cfg.functions);
            Expr::pullback(along, random_formula(rng, &dst, d, cfg))
        }
    }
}

/// One family and formula for the transfer-theorem corpus.
#[derive(Clone, Debug)]
pub struct LosCase {
    pub family: Vec<Arc<SigmaStructure>>,
    pub formula: Formula,
}

/// `n` cases cycling through the bases, with 2 or 3 models each and free
/// contexts of at most one variable. `positive` restricts the connectives
/// as in [`FormulaConfig::positive`].
pub fn los_cases(seed: u64, n: usize, max_carrier: usize, positive: bool) -> Result<Vec<LosCase>> {
    let mut rng = rng(seed);
    let pools: Vec<ModelPool> =
        bases().into_iter().map(|b| ModelPool::new(b, corpus_sig(), max_carrier)).collect::<Result<_>>()?;
    let cfg = FormulaConfig { max_depth: 3, max_vars: 2, positive, ..Default::default() };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let pool = &pools[k % pools.len()];
        let size = rng.gen_range(2..=3);
        let family = (0..size).map(|_| pool.model(&mut rng)).collect::<Result<_>>()?;
        let ctx = context(rng.gen_range(0..=1));
        let expr = random_formula(&mut rng, &ctx, cfg.max_depth, &cfg);
        out.push(LosCase { family, formula: Formula::new(ctx, expr) });
    }
    Ok(out)
}

/// Index labels "1", "2", … .
pub fn index_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}
