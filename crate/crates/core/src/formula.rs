//! Formulas over a signature, their interpretation as subobjects of context
//! products, validation, quantifiers and syntactic substitution.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::bound;
use crate::cat::same_presheaf;
use crate::error::{Error, Result};
use crate::fol::{interpret_ctx_morphism, Context, CtxMorphism, SigmaStructure, Signature, Term};
use crate::report::ValidationReport;
use crate::sub::{
    enumerate_sub, exists_along, forall_along, join_unchecked, meet_unchecked, pullback_sub, sub_implies, SubPresheaf,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    /// `t ∈ S` with `t: A` and `S: PA`.
    Member(Term, Term),
}

/// Formula syntax. A node lives in a context determined by its parent:
/// the arguments of `Quant` live in `along.src` while the node lives in
/// `along.dst`; the body of `Pullback` lives in `along.dst` while the node
/// lives in `along.src`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Top,
    Bot,
    Atom(Atom),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Quant { name: String, along: CtxMorphism, args: Vec<Expr> },
    Pullback { along: CtxMorphism, body: Box<Expr> },
}

impl Expr {
    pub fn eq(a: Term, b: Term) -> Expr {
        Expr::Atom(Atom::Eq(a, b))
    }

    pub fn rel(r: &str, args: Vec<Term>) -> Expr {
        Expr::Atom(Atom::Rel(r.to_string(), args))
    }

    pub fn member(t: Term, s: Term) -> Expr {
        Expr::Atom(Atom::Member(t, s))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::Implies(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    pub fn quant(name: &str, along: CtxMorphism, args: Vec<Expr>) -> Expr {
        Expr::Quant { name: name.to_string(), along, args }
    }

    /// `∀` along the projection from `inner` onto its first `keep` variables.
    pub fn forall(inner: &Context, keep: usize, body: Expr) -> Result<Expr> {
        Ok(Expr::quant(FORALL, CtxMorphism::prefix_projection(inner, keep)?, vec![body]))
    }

    pub fn exists(inner: &Context, keep: usize, body: Expr) -> Result<Expr> {
        Ok(Expr::quant(EXISTS, CtxMorphism::prefix_projection(inner, keep)?, vec![body]))
    }

    pub fn pullback(along: CtxMorphism, body: Expr) -> Expr {
        Expr::Pullback { along, body: Box::new(body) }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Top | Expr::Bot | Expr::Atom(_) => 0,
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => 1 + a.depth().max(b.depth()),
            Expr::Not(a) => 1 + a.depth(),
            Expr::Quant { args, .. } => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Pullback { body, .. } => 1 + body.depth(),
        }
    }

    /// Renders in the concrete syntax accepted by the command-line parser.
    pub fn display(&self, ctx: &Context) -> String {
        match self {
            Expr::Top => "top".into(),
            Expr::Bot => "bot".into(),
            Expr::Atom(Atom::Eq(a, b)) => format!("{} = {}", a.display(ctx), b.display(ctx)),
            Expr::Atom(Atom::Member(a, b)) => format!("{} in {}", a.display(ctx), b.display(ctx)),
            Expr::Atom(Atom::Rel(r, ts)) => {
                let parts: Vec<String> = ts.iter().map(|t| t.display(ctx)).collect();
                format!("{r}({})", parts.join(", "))
            }
            Expr::And(a, b) => format!("({} and {})", a.display(ctx), b.display(ctx)),
            Expr::Or(a, b) => format!("({} or {})", a.display(ctx), b.display(ctx)),
            Expr::Implies(a, b) => format!("({} implies {})", a.display(ctx), b.display(ctx)),
            Expr::Not(a) => format!("not {}", a.display(ctx)),
            Expr::Quant { name, along, args } => {
                let inner: Vec<String> = args.iter().map(|a| a.display(&along.src)).collect();
                let quant = match name.as_str() {
                    FORALL | EXISTS => name.clone(),
                    _ => format!("@{name}"),
                };
                match along.prefix_length() {
                    Some(k) if k == ctx.len() && along.dst == *ctx => {
                        let extra: Vec<String> = along.src.vars[k..].iter().map(|(n, s)| format!("{n}:{s}")).collect();
                        format!("{quant} pi[{}] ({})", extra.join(", "), inner.join(", "))
                    }
                    _ => format!("{quant} via[{}] ({})", morphism_syntax(along), inner.join(", ")),
                }
            }
            Expr::Pullback { along, body } => {
                format!("subst[{}] ({})", morphism_syntax(along), body.display(&along.dst))
            }
        }
    }
}

fn morphism_syntax(g: &CtxMorphism) -> String {
    let vars: Vec<String> = g.src.vars.iter().map(|(n, s)| format!("{n}:{s}")).collect();
    let terms: Vec<String> =
        g.terms.iter().zip(&g.dst.vars).map(|(t, (n, s))| format!("{n}:{s} := {}", t.display(&g.src))).collect();
    format!("{}; {}", vars.join(", "), terms.join(", "))
}

/// A formula together with its context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub ctx: Context,
    pub expr: Expr,
}

impl Formula {
    pub fn new(ctx: Context, expr: Expr) -> Self {
        Formula { ctx, expr }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}. {}", self.ctx, self.expr.display(&self.ctx))
    }
}

pub const FORALL: &str = "forall";
pub const EXISTS: &str = "exists";
pub const CONJ: &str = "conj";
pub const DISJ: &str = "disj";

/// Evaluator for custom quantifiers: model, context morphism, arguments.
pub type CustomEval = Arc<dyn Fn(&SigmaStructure, &CtxMorphism, &[SubPresheaf]) -> Result<SubPresheaf> + Send + Sync>;

#[derive(Clone)]
pub enum QuantKind {
    Forall,
    Exists,
    Conj,
    Disj,
    /// `□_R` on the last variable: every `R`-successor satisfies the argument.
    Box {
        relation: String,
    },
    /// `◇_R` on the last variable: some `R`-successor satisfies the argument.
    Diamond {
        relation: String,
    },
    Custom(CustomEval),
}

impl fmt::Debug for QuantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantKind::Forall => write!(f, "Forall"),
            QuantKind::Exists => write!(f, "Exists"),
            QuantKind::Conj => write!(f, "Conj"),
            QuantKind::Disj => write!(f, "Disj"),
            QuantKind::Box { relation } => write!(f, "Box({relation})"),
            QuantKind::Diamond { relation } => write!(f, "Diamond({relation})"),
            QuantKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuantifierDef {
    pub name: String,
    pub arity: usize,
    pub kind: QuantKind,
}

impl QuantifierDef {
    pub fn forall() -> Self {
        QuantifierDef { name: FORALL.into(), arity: 1, kind: QuantKind::Forall }
    }

    pub fn exists() -> Self {
        QuantifierDef { name: EXISTS.into(), arity: 1, kind: QuantKind::Exists }
    }

    pub fn conj() -> Self {
        QuantifierDef { name: CONJ.into(), arity: 2, kind: QuantKind::Conj }
    }

    pub fn disj() -> Self {
        QuantifierDef { name: DISJ.into(), arity: 2, kind: QuantKind::Disj }
    }

    pub fn modal_box(name: &str, relation: &str) -> Self {
        QuantifierDef { name: name.into(), arity: 1, kind: QuantKind::Box { relation: relation.into() } }
    }

    pub fn modal_diamond(name: &str, relation: &str) -> Self {
        QuantifierDef { name: name.into(), arity: 1, kind: QuantKind::Diamond { relation: relation.into() } }
    }

    pub fn custom(name: &str, arity: usize, eval: CustomEval) -> Self {
        QuantifierDef { name: name.into(), arity, kind: QuantKind::Custom(eval) }
    }

    /// Whether the quantifier commutes with substitution along context
    /// morphisms in the way syntactic substitution relies on.
    fn substitutable(&self, along: &CtxMorphism) -> bool {
        match self.kind {
            QuantKind::Forall | QuantKind::Exists => along.prefix_length().is_some(),
            QuantKind::Conj | QuantKind::Disj => along.is_identity(),
            _ => false,
        }
    }
}

/// Name-keyed quantifier table; immutable once handed to evaluation.
#[derive(Clone, Debug)]
pub struct QuantifierRegistry {
    defs: BTreeMap<String, QuantifierDef>,
}

impl Default for QuantifierRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl QuantifierRegistry {
    pub fn empty() -> Self {
        QuantifierRegistry { defs: BTreeMap::new() }
    }

    /// `forall`, `exists`, `conj` and `disj`.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        for d in [QuantifierDef::forall(), QuantifierDef::exists(), QuantifierDef::conj(), QuantifierDef::disj()] {
            r.defs.insert(d.name.clone(), d);
        }
        r
    }

    pub fn register(&mut self, def: QuantifierDef) -> &mut Self {
        self.defs.insert(def.name.clone(), def);
        self
    }

    pub fn get(&self, name: &str) -> Result<&QuantifierDef> {
        self.defs.get(name).ok_or_else(|| Error::UnknownQuantifier(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.defs.keys()
    }
}

/// Type-checks `expr` in `ctx`.
pub fn check_expr(sig: &Signature, reg: &QuantifierRegistry, ctx: &Context, expr: &Expr) -> Result<()> {
    match expr {
        Expr::Top | Expr::Bot => Ok(()),
        Expr::Atom(Atom::Eq(a, b)) => {
            let (sa, sb) = (a.sort(sig, ctx)?, b.sort(sig, ctx)?);
            if sa != sb {
                return Err(Error::MalformedInput(format!("equation between sorts {sa} and {sb}")));
            }
            Ok(())
        }
        Expr::Atom(Atom::Rel(r, ts)) => {
            let prof = sig.relation(r)?;
            if prof.len() != ts.len() {
                return Err(Error::ArityMismatch(format!("{r} takes {} arguments", prof.len())));
            }
            for (t, s) in ts.iter().zip(prof) {
                let got = t.sort(sig, ctx)?;
                if &got != s {
                    return Err(Error::MalformedInput(format!("argument of {r} has sort {got}, expected {s}")));
                }
            }
            Ok(())
        }
        Expr::Atom(Atom::Member(t, s)) => {
            let (st, ss) = (t.sort(sig, ctx)?, s.sort(sig, ctx)?);
            match sig.power_sorts.get(&ss) {
                Some(a) if *a == st => Ok(()),
                _ => Err(Error::MalformedInput(format!("membership of a {st} in a {ss}"))),
            }
        }
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
            check_expr(sig, reg, ctx, a)?;
            check_expr(sig, reg, ctx, b)
        }
        Expr::Not(a) => check_expr(sig, reg, ctx, a),
        Expr::Quant { name, along, args } => {
            let def = reg.get(name)?;
            if args.len() != def.arity {
                return Err(Error::ArityMismatch(format!("{name} takes {} arguments", def.arity)));
            }
            if along.dst != *ctx {
                return Err(Error::MalformedInput(format!("{name} along {} used in context {ctx}", along.display())));
            }
            CtxMorphism::new(sig, along.src.clone(), along.dst.clone(), along.terms.clone())?;
            match &def.kind {
                QuantKind::Conj | QuantKind::Disj | QuantKind::Box { .. } | QuantKind::Diamond { .. }
                    if !along.is_identity() =>
                {
                    return Err(Error::MalformedInput(format!("{name} must be taken along an identity")))
                }
                QuantKind::Box { relation } | QuantKind::Diamond { relation } => {
                    let prof = sig.relation(relation)?;
                    let last = ctx.vars.last().map(|v| &v.1);
                    if prof.len() != 2 || prof[0] != prof[1] || Some(&prof[0]) != last {
                        return Err(Error::MalformedInput(format!(
                            "{name} needs a binary relation on the sort of the last variable"
                        )));
                    }
                }
                _ => {}
            }
            for a in args {
                check_expr(sig, reg, &along.src, a)?;
            }
            Ok(())
        }
        Expr::Pullback { along, body } => {
            if along.src != *ctx {
                return Err(Error::MalformedInput(format!("substitution {} used in context {ctx}", along.display())));
            }
            CtxMorphism::new(sig, along.src.clone(), along.dst.clone(), along.terms.clone())?;
            check_expr(sig, reg, &along.dst, body)
        }
    }
}

/// Interpretation of a basic atom as a subobject of `|M|(ctx)`.
pub fn interp_basic(m: &SigmaStructure, ctx: &Context, a: &Atom) -> Result<SubPresheaf> {
    let reg = QuantifierRegistry::empty();
    check_expr(m.sig(), &reg, ctx, &Expr::Atom(a.clone()))?;
    atom(m, ctx, a)
}

fn atom(m: &SigmaStructure, ctx: &Context, a: &Atom) -> Result<SubPresheaf> {
    let prod = m.context_product(ctx)?;
    let amb = prod.presheaf.clone();
    let nobj = m.base().num_objects();
    match a {
        Atom::Eq(s, t) => {
            let parts = (0..nobj)
                .map(|b| {
                    let mut bits = FixedBitSet::with_capacity(amb.size(b));
                    for x in 0..amb.size(b) {
                        let env = prod.decode(b, x);
                        if m.eval_term(b, &env, s) == m.eval_term(b, &env, t) {
                            bits.insert(x);
                        }
                    }
                    bits
                })
                .collect();
            Ok(SubPresheaf::new_unchecked(amb, parts))
        }
        Atom::Rel(r, ts) => {
            let rel = m.relation(r)?;
            let dst = m.sorts_product(&m.sig().relation(r)?.clone())?;
            let parts = (0..nobj)
                .map(|b| {
                    let mut bits = FixedBitSet::with_capacity(amb.size(b));
                    for x in 0..amb.size(b) {
                        let env = prod.decode(b, x);
                        let vals: Vec<usize> = ts.iter().map(|t| m.eval_term(b, &env, t)).collect();
                        if rel.contains(b, dst.encode(b, &vals)) {
                            bits.insert(x);
                        }
                    }
                    bits
                })
                .collect();
            Ok(SubPresheaf::new_unchecked(amb, parts))
        }
        Atom::Member(t, s) => {
            if !m.base().is_set_like() {
                return Err(Error::UnsupportedCarrier("membership atoms need set-like carriers".into()));
            }
            let mut bits = FixedBitSet::with_capacity(amb.size(0));
            for x in 0..amb.size(0) {
                let env = prod.decode(0, x);
                let (e, set) = (m.eval_term(0, &env, t), m.eval_term(0, &env, s));
                if set >> e & 1 == 1 {
                    bits.insert(x);
                }
            }
            Ok(SubPresheaf::new_unchecked(amb, vec![bits]))
        }
    }
}

/// `Q_f` applied in model `m` to subobjects of `|M|(along.src)`.
pub fn apply_quantifier(
    m: &SigmaStructure,
    def: &QuantifierDef,
    along: &CtxMorphism,
    args: &[SubPresheaf],
) -> Result<SubPresheaf> {
    if args.len() != def.arity {
        return Err(Error::ArityMismatch(format!("{} takes {} arguments", def.name, def.arity)));
    }
    let src = m.context_product(&along.src)?;
    for a in args {
        if !same_presheaf(a.ambient(), &src.presheaf) {
            return Err(Error::AmbientMismatch(format!("argument of {} is not over |M|{}", def.name, along.src)));
        }
    }
    match &def.kind {
        QuantKind::Forall => forall_along(&interpret_ctx_morphism(m, along)?, &args[0]),
        QuantKind::Exists => exists_along(&interpret_ctx_morphism(m, along)?, &args[0]),
        QuantKind::Conj => {
            identity_only(def, along)?;
            Ok(meet_unchecked(&args[0], &args[1]))
        }
        QuantKind::Disj => {
            identity_only(def, along)?;
            Ok(join_unchecked(&args[0], &args[1]))
        }
        QuantKind::Box { relation } => {
            identity_only(def, along)?;
            let (succ, moved, proj) = modal_parts(m, relation, &along.src, &args[0])?;
            forall_along(&proj, &sub_implies(&succ, &moved)?)
        }
        QuantKind::Diamond { relation } => {
            identity_only(def, along)?;
            let (succ, moved, proj) = modal_parts(m, relation, &along.src, &args[0])?;
            exists_along(&proj, &meet_unchecked(&succ, &moved))
        }
        QuantKind::Custom(f) => f(m, along, args),
    }
}

fn identity_only(def: &QuantifierDef, along: &CtxMorphism) -> Result<()> {
    if along.is_identity() {
        Ok(())
    } else {
        Err(Error::PreconditionFailed(format!("{} must be taken along an identity", def.name)))
    }
}

/// Over the context extended by a fresh `y`: `R(x_last, y)`, the argument
/// with `x_last` replaced by `y`, and the projection forgetting `y`.
fn modal_parts(
    m: &SigmaStructure,
    relation: &str,
    ctx: &Context,
    a: &SubPresheaf,
) -> Result<(SubPresheaf, SubPresheaf, crate::cat::NatTrans)> {
    let n = ctx.len();
    if n == 0 {
        return Err(Error::PreconditionFailed("modal operators need a variable".into()));
    }
    let sort = ctx.sort(n - 1).to_string();
    let ext = ctx.extended(&[("y".to_string(), sort)]);
    let succ = atom(m, &ext, &Atom::Rel(relation.to_string(), vec![Term::Var(n - 1), Term::Var(n)]))?;
    let mut terms: Vec<Term> = (0..n - 1).map(Term::Var).collect();
    terms.push(Term::Var(n));
    let swap = CtxMorphism { src: ext.clone(), dst: ctx.clone(), terms };
    let moved = pullback_sub(&interpret_ctx_morphism(m, &swap)?, a)?;
    let proj = interpret_ctx_morphism(m, &CtxMorphism::prefix_projection(&ext, n)?)?;
    Ok((succ, moved, proj))
}

/// `⟦M⟧(ctx.expr)` without re-checking types.
pub fn interpret_expr(m: &SigmaStructure, reg: &QuantifierRegistry, ctx: &Context, expr: &Expr) -> Result<SubPresheaf> {
    let amb = || m.context_product(ctx).map(|p| p.presheaf.clone());
    match expr {
        Expr::Top => Ok(SubPresheaf::top(&amb()?)),
        Expr::Bot => Ok(SubPresheaf::bottom(&amb()?)),
        Expr::Atom(a) => atom(m, ctx, a),
        Expr::And(a, b) => Ok(meet_unchecked(&interpret_expr(m, reg, ctx, a)?, &interpret_expr(m, reg, ctx, b)?)),
        Expr::Or(a, b) => Ok(join_unchecked(&interpret_expr(m, reg, ctx, a)?, &interpret_expr(m, reg, ctx, b)?)),
        Expr::Implies(a, b) => sub_implies(&interpret_expr(m, reg, ctx, a)?, &interpret_expr(m, reg, ctx, b)?),
        Expr::Not(a) => sub_implies(&interpret_expr(m, reg, ctx, a)?, &SubPresheaf::bottom(&amb()?)),
        Expr::Quant { name, along, args } => {
            let def = reg.get(name)?;
            let vals: Vec<SubPresheaf> =
                args.iter().map(|a| interpret_expr(m, reg, &along.src, a)).collect::<Result<_>>()?;
            apply_quantifier(m, def, along, &vals)
        }
        Expr::Pullback { along, body } => {
            let inner = interpret_expr(m, reg, &along.dst, body)?;
            pullback_sub(&interpret_ctx_morphism(m, along)?, &inner)
        }
    }
}

/// `⟦M⟧(σ.φ)`, a subobject of `|M|(σ)`.
pub fn interpret_formula(m: &SigmaStructure, reg: &QuantifierRegistry, phi: &Formula) -> Result<SubPresheaf> {
    phi.ctx.check(m.sig())?;
    check_expr(m.sig(), reg, &phi.ctx, &phi.expr)?;
    interpret_expr(m, reg, &phi.ctx, &phi.expr)
}

pub fn validates(m: &SigmaStructure, reg: &QuantifierRegistry, phi: &Formula) -> Result<bool> {
    Ok(interpret_formula(m, reg, phi)?.is_top())
}

/// `M ⊨_ι σ.φ`: `ι` lies below the interpretation.
pub fn validates_at(m: &SigmaStructure, reg: &QuantifierRegistry, iota: &SubPresheaf, phi: &Formula) -> Result<bool> {
    let v = interpret_formula(m, reg, phi)?;
    if !same_presheaf(iota.ambient(), v.ambient()) {
        return Err(Error::AmbientMismatch("ι is not a subobject of the formula's context".into()));
    }
    Ok(iota.leq(&v))
}

/// Sentencehood relative to the supplied models: the interpretation is ⊥
/// or ⊤ in each of them.
pub fn is_sentence(ms: &[Arc<SigmaStructure>], reg: &QuantifierRegistry, phi: &Formula) -> Result<bool> {
    for m in ms {
        let v = interpret_formula(m, reg, phi)?;
        if !(v.is_top() || v.is_bottom()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Syntactic substitution along `g: σ -> τ` of an expression living in `τ`;
/// the result lives in `σ`. Quantifiers that do not commute with
/// substitution are kept under an explicit pullback node.
pub fn substitute(reg: &QuantifierRegistry, expr: &Expr, g: &CtxMorphism) -> Result<Expr> {
    let sub_term = |t: &Term| t.substitute(&g.terms);
    Ok(match expr {
        Expr::Top => Expr::Top,
        Expr::Bot => Expr::Bot,
        Expr::Atom(Atom::Eq(a, b)) => Expr::eq(sub_term(a), sub_term(b)),
        Expr::Atom(Atom::Member(a, b)) => Expr::member(sub_term(a), sub_term(b)),
        Expr::Atom(Atom::Rel(r, ts)) => Expr::rel(r, ts.iter().map(sub_term).collect()),
        Expr::And(a, b) => Expr::and(substitute(reg, a, g)?, substitute(reg, b, g)?),
        Expr::Or(a, b) => Expr::or(substitute(reg, a, g)?, substitute(reg, b, g)?),
        Expr::Implies(a, b) => Expr::implies(substitute(reg, a, g)?, substitute(reg, b, g)?),
        Expr::Not(a) => Expr::not(substitute(reg, a, g)?),
        Expr::Pullback { along, body } => Expr::Pullback { along: g.then(along)?, body: body.clone() },
        Expr::Quant { name, along, args } => {
            let def = reg.get(name)?;
            if !def.substitutable(along) {
                return Ok(Expr::pullback(g.clone(), expr.clone()));
            }
            let k = g.dst.len();
            let extra = along.src.vars[k..].to_vec();
            let inner_src = g.src.extended(&extra);
            let n = g.src.len();
            let mut terms = g.terms.clone();
            terms.extend((0..extra.len()).map(|i| Term::Var(n + i)));
            let lifted = CtxMorphism { src: inner_src.clone(), dst: along.src.clone(), terms };
            let args = args.iter().map(|a| substitute(reg, a, &lifted)).collect::<Result<_>>()?;
            Expr::Quant { name: name.clone(), along: CtxMorphism::prefix_projection(&inner_src, n)?, args }
        }
    })
}

/// Compares `⟦σ.g(φ)⟧` with the interpretation of the syntactically
/// substituted formula.
pub fn check_substitution_lemma(
    m: &SigmaStructure,
    reg: &QuantifierRegistry,
    g: &CtxMorphism,
    phi: &Formula,
) -> Result<bool> {
    if phi.ctx != g.dst {
        return Err(Error::MalformedInput("substitution target differs from the formula's context".into()));
    }
    let lhs = interpret_formula(m, reg, &Formula::new(g.src.clone(), Expr::pullback(g.clone(), phi.expr.clone())))?;
    let rhs = interpret_formula(m, reg, &Formula::new(g.src.clone(), substitute(reg, &phi.expr, g)?))?;
    Ok(lhs == rhs)
}

/// Exhaustive monotonicity of a quantifier along `along` in model `m`.
pub fn check_isotone(m: &SigmaStructure, def: &QuantifierDef, along: &CtxMorphism) -> Result<ValidationReport> {
    let amb = m.context_product(&along.src)?.presheaf.clone();
    let subs = enumerate_sub(&amb)?;
    let n = def.arity;
    bound::guard("isotonicity argument pairs", (subs.len() as f64).powi(2 * n as i32))?;
    let mut rep = ValidationReport::new();
    let values: BTreeMap<Vec<usize>, SubPresheaf> = tuples(subs.len(), n)
        .into_iter()
        .map(|t| {
            let args: Vec<SubPresheaf> = t.iter().map(|&i| subs[i].clone()).collect();
            Ok((t, apply_quantifier(m, def, along, &args)?))
        })
        .collect::<Result<_>>()?;
    for (a, va) in &values {
        for (b, vb) in &values {
            if a.iter().zip(b).all(|(&i, &j)| subs[i].leq(&subs[j])) && !va.leq(vb) {
                let show = |t: &Vec<usize>| t.iter().map(|&i| subs[i].to_string()).collect::<Vec<_>>().join(", ");
                rep.push(
                    "isotone",
                    format!("{} not isotone: ({}) ≤ ({}) but images are not", def.name, show(a), show(b)),
                );
                return Ok(rep);
            }
        }
    }
    Ok(rep)
}

fn tuples(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|t| (0..k).map(move |i| [t.clone(), vec![i]].concat())).collect();
    }
    out
}
