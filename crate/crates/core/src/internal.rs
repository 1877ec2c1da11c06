//! The internal language of a topos, evaluated over set-like carriers.
//!
//! Types are named carriers, finite products, power types and `Ω`. Over a
//! one-object base subobjects are subsets, so terms of type `X` denote
//! functions from the context product to `X` and formulas denote the set
//! of context tuples satisfying them.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::bound;
use crate::cat::Presheaf;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IType {
    Named(String),
    Prod(Vec<IType>),
    Power(Box<IType>),
    Omega,
}

impl IType {
    pub fn named(n: &str) -> IType {
        IType::Named(n.to_string())
    }

    pub fn power(t: IType) -> IType {
        IType::Power(Box::new(t))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Elem(usize),
    Tuple(Vec<Value>),
    Set(BTreeSet<Value>),
    Truth(bool),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ITerm {
    True,
    False,
    /// Position in the context.
    Var(usize),
    App(String, Box<ITerm>),
    Tuple(Vec<ITerm>),
    /// Zero-based component of a tuple.
    Proj(Box<ITerm>, usize),
    /// `{x:X | α}` where `α` lives in the context extended by `x`.
    Comprehension(IType, Box<ITerm>),
    Eq(Box<ITerm>, Box<ITerm>),
    In(Box<ITerm>, Box<ITerm>),
    Leq(Box<ITerm>, Box<ITerm>),
    And(Box<ITerm>, Box<ITerm>),
    Or(Box<ITerm>, Box<ITerm>),
    Implies(Box<ITerm>, Box<ITerm>),
    Not(Box<ITerm>),
    /// Binds a new last context variable of the given type.
    Forall(IType, Box<ITerm>),
    Exists(IType, Box<ITerm>),
}

impl ITerm {
    pub fn bx(self) -> Box<ITerm> {
        Box::new(self)
    }
}

struct Morphism {
    dom: IType,
    cod: IType,
    table: BTreeMap<Value, Value>,
}

/// Carriers and morphisms available to internal terms.
pub struct InternalEnv {
    carriers: BTreeMap<String, Arc<Presheaf>>,
    morphisms: BTreeMap<String, Morphism>,
}

/// Meaning of a term in a context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Internal {
    /// Graph of the morphism from the context product, in context order.
    Morphism(Vec<(Vec<Value>, Value)>),
    /// Context tuples satisfying the formula.
    Subobject(Vec<Vec<Value>>),
}

impl InternalEnv {
    pub fn new(carriers: &[(&str, Arc<Presheaf>)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, p) in carriers {
            if !p.base().is_set_like() {
                return Err(Error::UnsupportedCarrier(format!("carrier {n} is not over a one-object base")));
            }
            map.insert(n.to_string(), p.clone());
        }
        Ok(InternalEnv { carriers: map, morphisms: BTreeMap::new() })
    }

    /// Tabulates `f` over the elements of `dom`.
    pub fn add_morphism(&mut self, name: &str, dom: IType, cod: IType, f: impl Fn(&Value) -> Value) -> Result<()> {
        let cod_elems: BTreeSet<Value> = self.domain(&cod)?.into_iter().collect();
        let mut table = BTreeMap::new();
        for v in self.domain(&dom)? {
            let out = f(&v);
            if !cod_elems.contains(&out) {
                return Err(Error::MalformedInput(format!("morphism {name} leaves its codomain")));
            }
            table.insert(v, out);
        }
        self.morphisms.insert(name.to_string(), Morphism { dom, cod, table });
        Ok(())
    }

    /// All values of a type, in a fixed order.
    pub fn domain(&self, ty: &IType) -> Result<Vec<Value>> {
        Ok(match ty {
            IType::Named(n) => {
                let p = self.carriers.get(n).ok_or_else(|| Error::UnknownIdentifier(format!("type '{n}'")))?;
                (0..p.size(0)).map(Value::Elem).collect()
            }
            IType::Prod(ts) => {
                let mut out = vec![Vec::new()];
                for t in ts {
                    let d = self.domain(t)?;
                    bound::guard("internal product values", (out.len() * d.len()) as f64)?;
                    out = out
                        .into_iter()
                        .flat_map(|p| d.iter().map(move |v| [p.clone(), vec![v.clone()]].concat()))
                        .collect();
                }
                out.into_iter().map(Value::Tuple).collect()
            }
            IType::Power(t) => {
                let d = self.domain(t)?;
                bound::guard("internal power values", bound::pow_estimate(2, d.len()))?;
                (0..1usize << d.len())
                    .map(|k| Value::Set((0..d.len()).filter(|j| k >> j & 1 == 1).map(|j| d[j].clone()).collect()))
                    .collect()
            }
            IType::Omega => vec![Value::Truth(false), Value::Truth(true)],
        })
    }

    pub fn display(&self, ty: &IType, v: &Value) -> String {
        match (ty, v) {
            (IType::Named(n), Value::Elem(i)) => self.carriers[n].elements(0)[*i].clone(),
            (IType::Prod(ts), Value::Tuple(vs)) => {
                let parts: Vec<String> = ts.iter().zip(vs).map(|(t, v)| self.display(t, v)).collect();
                format!("({})", parts.join(","))
            }
            (IType::Power(t), Value::Set(s)) => {
                let parts: Vec<String> = s.iter().map(|v| self.display(t, v)).collect();
                format!("{{{}}}", parts.join(","))
            }
            (_, Value::Truth(b)) => b.to_string(),
            _ => format!("{v:?}"),
        }
    }

    pub fn type_of(&self, ctx: &[IType], t: &ITerm) -> Result<IType> {
        let omega2 = |a: &ITerm, b: &ITerm| -> Result<IType> {
            self.expect(ctx, a, &IType::Omega)?;
            self.expect(ctx, b, &IType::Omega)?;
            Ok(IType::Omega)
        };
        match t {
            ITerm::True | ITerm::False => Ok(IType::Omega),
            ITerm::Var(i) => {
                ctx.get(*i).cloned().ok_or_else(|| Error::UnboundVariable(format!("internal variable #{i}")))
            }
            ITerm::App(f, a) => {
                let m = self.morphisms.get(f).ok_or_else(|| Error::UnknownIdentifier(format!("morphism '{f}'")))?;
                self.expect(ctx, a, &m.dom)?;
                Ok(m.cod.clone())
            }
            ITerm::Tuple(ts) => Ok(IType::Prod(ts.iter().map(|t| self.type_of(ctx, t)).collect::<Result<_>>()?)),
            ITerm::Proj(a, i) => match self.type_of(ctx, a)? {
                IType::Prod(ts) if *i < ts.len() => Ok(ts[*i].clone()),
                other => Err(Error::MalformedInput(format!("projection {i} of a term of type {other:?}"))),
            },
            ITerm::Comprehension(ty, a) => {
                let ext = [ctx, std::slice::from_ref(ty)].concat();
                self.expect(&ext, a, &IType::Omega)?;
                Ok(IType::power(ty.clone()))
            }
            ITerm::Eq(a, b) => {
                let ta = self.type_of(ctx, a)?;
                self.expect(ctx, b, &ta)?;
                Ok(IType::Omega)
            }
            ITerm::In(a, b) => {
                let ta = self.type_of(ctx, a)?;
                self.expect(ctx, b, &IType::power(ta))?;
                Ok(IType::Omega)
            }
            ITerm::Leq(a, b) => {
                let ta = self.type_of(ctx, a)?;
                if !matches!(ta, IType::Power(_)) {
                    return Err(Error::MalformedInput("⪯ compares terms of power type".into()));
                }
                self.expect(ctx, b, &ta)?;
                Ok(IType::Omega)
            }
            ITerm::And(a, b) | ITerm::Or(a, b) | ITerm::Implies(a, b) => omega2(a, b),
            ITerm::Not(a) => {
                self.expect(ctx, a, &IType::Omega)?;
                Ok(IType::Omega)
            }
            ITerm::Forall(ty, a) | ITerm::Exists(ty, a) => {
                let ext = [ctx, std::slice::from_ref(ty)].concat();
                self.expect(&ext, a, &IType::Omega)?;
                Ok(IType::Omega)
            }
        }
    }

    fn expect(&self, ctx: &[IType], t: &ITerm, ty: &IType) -> Result<()> {
        let got = self.type_of(ctx, t)?;
        if &got != ty {
            return Err(Error::MalformedInput(format!("expected type {ty:?}, found {got:?}")));
        }
        Ok(())
    }

    /// Value of `t` under the assignment `env` to the context variables.
    pub fn eval_at(&self, env: &[Value], ctx: &[IType], t: &ITerm) -> Result<Value> {
        let truth = |a: &ITerm| -> Result<bool> {
            match self.eval_at(env, ctx, a)? {
                Value::Truth(b) => Ok(b),
                _ => Err(Error::MalformedInput("formula did not evaluate to a truth value".into())),
            }
        };
        Ok(match t {
            ITerm::True => Value::Truth(true),
            ITerm::False => Value::Truth(false),
            ITerm::Var(i) => env[*i].clone(),
            ITerm::App(f, a) => {
                let arg = self.eval_at(env, ctx, a)?;
                self.morphisms[f].table[&arg].clone()
            }
            ITerm::Tuple(ts) => Value::Tuple(ts.iter().map(|a| self.eval_at(env, ctx, a)).collect::<Result<_>>()?),
            ITerm::Proj(a, i) => match self.eval_at(env, ctx, a)? {
                Value::Tuple(vs) => vs[*i].clone(),
                _ => return Err(Error::MalformedInput("projection of a non-tuple".into())),
            },
            ITerm::Comprehension(ty, a) => {
                let ext = [ctx, std::slice::from_ref(ty)].concat();
                let mut out = BTreeSet::new();
                for v in self.domain(ty)? {
                    let env2 = [env, std::slice::from_ref(&v)].concat();
                    if self.eval_at(&env2, &ext, a)? == Value::Truth(true) {
                        out.insert(v);
                    }
                }
                Value::Set(out)
            }
            ITerm::Eq(a, b) => Value::Truth(self.eval_at(env, ctx, a)? == self.eval_at(env, ctx, b)?),
            ITerm::In(a, b) => match self.eval_at(env, ctx, b)? {
                Value::Set(s) => Value::Truth(s.contains(&self.eval_at(env, ctx, a)?)),
                _ => return Err(Error::MalformedInput("membership in a non-set".into())),
            },
            ITerm::Leq(a, b) => match (self.eval_at(env, ctx, a)?, self.eval_at(env, ctx, b)?) {
                (Value::Set(x), Value::Set(y)) => Value::Truth(x.is_subset(&y)),
                _ => return Err(Error::MalformedInput("⪯ between non-sets".into())),
            },
            ITerm::And(a, b) => Value::Truth(truth(a)? && truth(b)?),
            ITerm::Or(a, b) => Value::Truth(truth(a)? || truth(b)?),
            ITerm::Implies(a, b) => Value::Truth(!truth(a)? || truth(b)?),
            ITerm::Not(a) => Value::Truth(!truth(a)?),
            ITerm::Forall(ty, a) | ITerm::Exists(ty, a) => {
                let ext = [ctx, std::slice::from_ref(ty)].concat();
                let mut all = true;
                let mut any = false;
                for v in self.domain(ty)? {
                    let env2 = [env, std::slice::from_ref(&v)].concat();
                    let hold = self.eval_at(&env2, &ext, a)? == Value::Truth(true);
                    all &= hold;
                    any |= hold;
                }
                Value::Truth(if matches!(t, ITerm::Forall(..)) { all } else { any })
            }
        })
    }
}

/// Meaning of `t` in context `ctx`: a morphism table for ordinary terms, a
/// subset of the context product for formulas.
pub fn eval_internal_term(env: &InternalEnv, ctx: &[IType], t: &ITerm) -> Result<Internal> {
    let ty = env.type_of(ctx, t)?;
    let tuples = env.domain(&IType::Prod(ctx.to_vec()))?.into_iter().map(|x| match x {
        Value::Tuple(vs) => vs,
        _ => unreachable!("product domain yields tuples"),
    });
    if ty == IType::Omega {
        let mut out = Vec::new();
        for tup in tuples {
            if env.eval_at(&tup, ctx, t)? == Value::Truth(true) {
                out.push(tup);
            }
        }
        Ok(Internal::Subobject(out))
    } else {
        tuples.map(|tup| Ok((tup.clone(), env.eval_at(&tup, ctx, t)?))).collect::<Result<_>>().map(Internal::Morphism)
    }
}
