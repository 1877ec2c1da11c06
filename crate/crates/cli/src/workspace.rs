//! Loading and eager validation of workspace documents.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use toposlos_core::cat::{check_category, check_presheaf, FinCategory, NatTrans, Presheaf};
use toposlos_core::filter::Filter;
use toposlos_core::fol::{check_model_morphism, product_models, FnProfile, ModelMorphism, SigmaStructure, Signature};
use toposlos_core::formula::{Formula, QuantifierDef, QuantifierRegistry};
use toposlos_core::los::{standard_duals, DualPair, LosInstance};
use toposlos_core::modal::Coalgebra;
use toposlos_core::sub::{GeneratorSet, SubPresheaf};

use crate::error::{At, CliError, CliResult};
use crate::schema::*;
use crate::syntax::parse_formula;

pub struct Instance {
    pub models: Vec<String>,
    pub filter: String,
    pub formula: String,
    pub generators: Option<GeneratorSet>,
}

pub struct Workspace {
    pub base: Arc<FinCategory>,
    pub sig: Arc<Signature>,
    pub registry: QuantifierRegistry,
    pub duals: Vec<DualPair>,
    pub models: BTreeMap<String, Arc<SigmaStructure>>,
    pub morphisms: BTreeMap<String, ModelMorphism>,
    pub formulas: BTreeMap<String, Formula>,
    pub filters: BTreeMap<String, Filter>,
    pub instances: BTreeMap<String, Instance>,
    pub coalgebras: BTreeMap<String, Coalgebra>,
}

pub fn load_workspace(path: &Path) -> CliResult<Workspace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_workspace(&text)
}

pub fn parse_workspace(text: &str) -> CliResult<Workspace> {
    let doc: Document = serde_json::from_str(text).map_err(|e| CliError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build(doc)
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn build_base(spec: BaseSpec) -> CliResult<FinCategory> {
    let cat = match spec {
        BaseSpec::Builtin(name) => match name.as_str() {
            "terminal" => FinCategory::terminal(),
            "graph" => FinCategory::graph(),
            "chain3" => FinCategory::chain3(),
            other => return Err(CliError::invalid("base", format!("unknown built-in base '{other}'"))),
        },
        BaseSpec::Poset(p) => {
            let mut leq = Vec::new();
            for (a, b) in &p.leq {
                let ix = |n: &str| {
                    p.poset
                        .iter()
                        .position(|o| o == n)
                        .ok_or_else(|| CliError::invalid("base.leq", format!("unknown object '{n}'")))
                };
                leq.push((ix(a)?, ix(b)?));
            }
            FinCategory::poset(&strs(&p.poset), &leq)
        }
        BaseSpec::Table(t) => FinCategory::new(
            t.objects,
            t.morphisms.into_iter().map(|m| (m.name, m.dom, m.cod)).collect(),
            t.identities.into_iter().collect(),
            t.compose,
        )
        .at("base")?,
    };
    let rep = check_category(&cat);
    if !rep.is_ok() {
        return Err(CliError::invalid("base", rep.to_string()));
    }
    Ok(cat)
}

fn build_signature(spec: SignatureSpec) -> CliResult<Signature> {
    let sig = Signature {
        sorts: spec.sorts,
        functions: spec.functions.into_iter().map(|(n, f)| (n, FnProfile { args: f.args, result: f.result })).collect(),
        relations: spec.relations,
        power_sorts: spec.power_sorts,
    };
    sig.validate().at("signature")?;
    Ok(sig)
}

fn build_presheaf(base: &Arc<FinCategory>, spec: &PresheafSpec, loc: &str) -> CliResult<Arc<Presheaf>> {
    let sets: Vec<(&str, Vec<&str>)> = spec.elements.iter().map(|(o, es)| (o.as_str(), strs(es))).collect();
    let mut maps: Vec<(&str, Vec<(&str, &str)>)> = spec
        .maps
        .iter()
        .map(|(m, pairs)| (m.as_str(), pairs.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect()))
        .collect();
    // maps out of an empty set may be omitted
    for (mi, m) in base.morphisms().iter().enumerate() {
        let cod = &base.objects()[m.cod];
        let empty = spec.elements.get(cod).is_none_or(|e| e.is_empty());
        if empty && !base.is_identity(mi) && !spec.maps.contains_key(&m.name) {
            maps.push((m.name.as_str(), Vec::new()));
        }
    }
    let p = Presheaf::from_names(base.clone(), &sets, &maps).at(loc)?;
    let rep = check_presheaf(&p);
    if !rep.is_ok() {
        return Err(CliError::invalid(loc, rep.to_string()));
    }
    Ok(Arc::new(p))
}

fn element(p: &Presheaf, b: usize, name: &str, loc: &str) -> CliResult<usize> {
    p.element_id(b, name).at(loc)
}

fn build_model(
    base: &Arc<FinCategory>,
    sig: &Arc<Signature>,
    name: &str,
    spec: &ModelSpec,
) -> CliResult<SigmaStructure> {
    let loc = format!("models.{name}");
    let mut carriers = BTreeMap::new();
    for (s, p) in &spec.carriers {
        if !sig.has_sort(s) {
            return Err(CliError::invalid(format!("{loc}.carriers.{s}"), "undeclared sort"));
        }
        carriers.insert(s.clone(), build_presheaf(base, p, &format!("{loc}.carriers.{s}"))?);
    }
    let carrier = |s: &str, at: &str| {
        carriers.get(s).cloned().ok_or_else(|| CliError::invalid(at.to_string(), format!("no carrier for sort '{s}'")))
    };
    let mut builder = SigmaStructure::builder(sig.clone(), base.clone());
    for (s, p) in &carriers {
        builder = builder.carrier(s, p.clone());
    }
    for (f, entries) in &spec.functions {
        let floc = format!("{loc}.functions.{f}");
        let prof = sig.function(f).at(&floc)?;
        let args: Vec<Arc<Presheaf>> = prof.args.iter().map(|s| carrier(s, &floc)).collect::<CliResult<_>>()?;
        let res = carrier(&prof.result, &floc)?;
        let mut table: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        for (k, e) in entries.iter().enumerate() {
            let eloc = format!("{floc}[{k}]");
            let b = base.object_id(&e.at).at(&eloc)?;
            if e.args.len() != args.len() {
                return Err(CliError::invalid(eloc, format!("{f} takes {} arguments", args.len())));
            }
            let xs: Vec<usize> =
                e.args.iter().zip(&args).map(|(x, p)| element(p, b, x, &eloc)).collect::<CliResult<_>>()?;
            let v = element(&res, b, &e.value, &eloc)?;
            if table.insert((b, xs), v).is_some() {
                return Err(CliError::invalid(eloc, "duplicate argument tuple"));
            }
        }
        for b in 0..base.num_objects() {
            let need: usize = args.iter().map(|p| p.size(b)).product();
            let have = table.keys().filter(|k| k.0 == b).count();
            if have != need {
                return Err(CliError::invalid(
                    floc,
                    format!("not total at {}: {have} of {need} argument tuples given", base.objects()[b]),
                ));
            }
        }
        builder = builder.function_fn(f, move |b, xs| table[&(b, xs.to_vec())]);
    }
    for (r, entries) in &spec.relations {
        let rloc = format!("{loc}.relations.{r}");
        let prof = sig.relation(r).at(&rloc)?;
        let args: Vec<Arc<Presheaf>> = prof.iter().map(|s| carrier(s, &rloc)).collect::<CliResult<_>>()?;
        let mut set = std::collections::HashSet::new();
        for (k, e) in entries.iter().enumerate() {
            let eloc = format!("{rloc}[{k}]");
            let b = base.object_id(&e.at).at(&eloc)?;
            if e.args.len() != args.len() {
                return Err(CliError::invalid(eloc, format!("{r} takes {} arguments", args.len())));
            }
            let xs: Vec<usize> =
                e.args.iter().zip(&args).map(|(x, p)| element(p, b, x, &eloc)).collect::<CliResult<_>>()?;
            set.insert((b, xs));
        }
        builder = builder.relation_fn(r, move |b, xs| set.contains(&(b, xs.to_vec())));
    }
    // relations left out of the document are empty
    for r in sig.relations.keys().filter(|r| !spec.relations.contains_key(*r)) {
        builder = builder.relation_fn(r, |_, _| false);
    }
    builder.build().at(loc)
}

fn build_filter(name: &str, spec: &FilterSpec) -> CliResult<Filter> {
    let loc = format!("filters.{name}");
    let labels = strs(&spec.index);
    let given = [spec.principal.is_some(), spec.generated_by.is_some(), spec.members.is_some(), spec.frechet];
    if given.iter().filter(|&&g| g).count() > 1 {
        return Err(CliError::invalid(loc, "give at most one of principal, generated_by, members, frechet"));
    }
    let f = if let Some(j) = &spec.principal {
        Filter::make_principal(&labels, &strs(j))
    } else if let Some(seeds) = &spec.generated_by {
        let seeds: Vec<Vec<&str>> = seeds.iter().map(|s| strs(s)).collect();
        Filter::generate(&labels, &seeds)
    } else if let Some(ms) = &spec.members {
        let probe = Filter::trivial(&labels).at(&loc)?;
        let masks: Vec<u32> = ms.iter().map(|m| probe.mask(&strs(m))).collect::<Result<_, _>>().at(&loc)?;
        Filter::from_members(&labels, &masks)
    } else if spec.frechet {
        Filter::frechet(&labels)
    } else {
        Filter::trivial(&labels)
    }
    .at(&loc)?;
    if !f.is_proper() {
        return Err(CliError::invalid(loc, "the filter is improper"));
    }
    Ok(f)
}

fn build_morphism(
    models: &BTreeMap<String, Arc<SigmaStructure>>,
    name: &str,
    spec: &MorphismSpec,
) -> CliResult<ModelMorphism> {
    let loc = format!("morphisms.{name}");
    let get =
        |m: &str| models.get(m).cloned().ok_or_else(|| CliError::invalid(loc.clone(), format!("unknown model '{m}'")));
    let (src, dst) = (get(&spec.src)?, get(&spec.dst)?);
    let base = src.base();
    let mut comps = BTreeMap::new();
    for (s, per_obj) in &spec.components {
        let sloc = format!("{loc}.components.{s}");
        let (a, b) = (src.carrier(s).at(&sloc)?.clone(), dst.carrier(s).at(&sloc)?.clone());
        let mut table = Vec::new();
        for o in 0..base.num_objects() {
            let oname = &base.objects()[o];
            let map =
                per_obj.get(oname).ok_or_else(|| CliError::invalid(sloc.clone(), format!("no map at {oname}")))?;
            let mut row = vec![usize::MAX; a.size(o)];
            for (x, y) in map {
                row[element(&a, o, x, &sloc)?] = element(&b, o, y, &sloc)?;
            }
            if row.contains(&usize::MAX) {
                return Err(CliError::invalid(sloc, format!("map at {oname} is not total")));
            }
            table.push(row);
        }
        comps.insert(s.clone(), NatTrans::new(a, b, table).at(&sloc)?);
    }
    let mu = ModelMorphism::new(src, dst, comps).at(&loc)?;
    let rep = check_model_morphism(&mu);
    if !rep.is_ok() {
        return Err(CliError::invalid(loc, rep.to_string()));
    }
    Ok(mu)
}

fn build_coalgebra(name: &str, spec: &CoalgebraSpec) -> CliResult<Coalgebra> {
    let loc = format!("coalgebras.{name}");
    let ix = |s: &str| {
        spec.states
            .iter()
            .position(|t| t == s)
            .ok_or_else(|| CliError::invalid(loc.clone(), format!("unknown state '{s}'")))
    };
    for s in spec.successors.keys().chain(spec.labels.keys()) {
        ix(s)?;
    }
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut labels: Vec<Vec<&str>> = Vec::new();
    for s in &spec.states {
        succ.push(spec.successors.get(s).map_or(Ok(Vec::new()), |v| v.iter().map(|t| ix(t)).collect())?);
        labels.push(spec.labels.get(s).map_or(Vec::new(), |v| strs(v)));
    }
    let succ_refs: Vec<&[usize]> = succ.iter().map(Vec::as_slice).collect();
    let label_refs: Vec<&[&str]> = labels.iter().map(Vec::as_slice).collect();
    Coalgebra::kripke(&strs(&spec.props), &strs(&spec.states), &succ_refs, &label_refs).at(loc)
}

fn build_generators(
    ws: &Workspace,
    inst_name: &str,
    spec: &GeneratorSpec,
    models: &[Arc<SigmaStructure>],
    formula: &Formula,
) -> CliResult<GeneratorSet> {
    let loc = format!("instances.{inst_name}.generators");
    let (prod, _) = product_models(&ws.sig, &ws.base, models).at(&loc)?;
    let amb = prod.context_product(&formula.ctx).at(&loc)?.presheaf.clone();
    let mut members = Vec::new();
    for (k, m) in spec.members.iter().enumerate() {
        let mloc = format!("{loc}[{k}]");
        let elems: Vec<(usize, usize)> = m
            .iter()
            .map(|(o, x)| {
                let b = ws.base.object_id(o).at(&mloc)?;
                Ok((b, element(&amb, b, x, &mloc)?))
            })
            .collect::<CliResult<_>>()?;
        members.push(SubPresheaf::generated_by(&amb, &elems));
    }
    let gens = GeneratorSet::new(&amb, &members).at(&loc)?;
    let rep = gens.validate().at(&loc)?;
    if !rep.is_ok() {
        return Err(CliError::invalid(loc, rep.to_string()));
    }
    Ok(gens)
}

fn build(doc: Document) -> CliResult<Workspace> {
    if doc.version != SCHEMA_VERSION {
        return Err(CliError::invalid(
            "version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", doc.version),
        ));
    }
    let base = Arc::new(build_base(doc.base)?);
    let sig = Arc::new(build_signature(doc.signature)?);
    let mut registry = QuantifierRegistry::standard();
    for (k, q) in doc.quantifiers.iter().enumerate() {
        let def = match q {
            QuantifierSpec::Box { name, relation } => QuantifierDef::modal_box(name, relation),
            QuantifierSpec::Diamond { name, relation } => QuantifierDef::modal_diamond(name, relation),
        };
        let (QuantifierSpec::Box { relation, .. } | QuantifierSpec::Diamond { relation, .. }) = q;
        let prof = sig.relation(relation).at(format!("quantifiers[{k}]"))?;
        if prof.len() != 2 || prof[0] != prof[1] {
            return Err(CliError::invalid(format!("quantifiers[{k}]"), "modal relation must be binary on one sort"));
        }
        registry.register(def);
    }
    let mut duals = standard_duals();
    for (k, d) in doc.duals.iter().enumerate() {
        let loc = format!("duals[{k}]");
        let (q, qb) = (registry.get(&d.quantifier).at(&loc)?, registry.get(&d.dual).at(&loc)?);
        if q.arity != qb.arity || d.signs.iter().any(|&j| j == 0 || j > q.arity) {
            return Err(CliError::invalid(loc, "arities differ or a sign position is out of range"));
        }
        duals.retain(|p| p.quantifier != d.quantifier);
        duals.push(DualPair::new(&d.quantifier, &d.dual, &d.signs));
    }
    let mut models = BTreeMap::new();
    for (n, m) in &doc.models {
        models.insert(n.clone(), Arc::new(build_model(&base, &sig, n, m)?));
    }
    let mut morphisms = BTreeMap::new();
    for (n, m) in &doc.morphisms {
        morphisms.insert(n.clone(), build_morphism(&models, n, m)?);
    }
    let mut formulas = BTreeMap::new();
    for (n, src) in &doc.formulas {
        let phi = parse_formula(src, &sig, &registry).map_err(|e| match e {
            CliError::Syntax { column, message } => {
                CliError::invalid(format!("formulas.{n}"), format!("column {column}: {message}"))
            }
            other => other,
        })?;
        formulas.insert(n.clone(), phi);
    }
    let mut filters = BTreeMap::new();
    for (n, f) in &doc.filters {
        filters.insert(n.clone(), build_filter(n, f)?);
    }
    let mut coalgebras = BTreeMap::new();
    for (n, c) in &doc.coalgebras {
        coalgebras.insert(n.clone(), build_coalgebra(n, c)?);
    }
    let mut ws = Workspace {
        base,
        sig,
        registry,
        duals,
        models,
        morphisms,
        formulas,
        filters,
        instances: BTreeMap::new(),
        coalgebras,
    };
    for (n, spec) in &doc.instances {
        let loc = format!("instances.{n}");
        let fam = ws.family(&spec.models).map_err(|e| CliError::invalid(&loc, e.to_string()))?;
        let filter = ws
            .filters
            .get(&spec.filter)
            .ok_or_else(|| CliError::invalid(&loc, format!("unknown filter '{}'", spec.filter)))?;
        if filter.len() != fam.len() {
            return Err(CliError::invalid(
                loc,
                format!("filter indexes {} models, instance has {}", filter.len(), fam.len()),
            ));
        }
        let phi = ws
            .formulas
            .get(&spec.formula)
            .ok_or_else(|| CliError::invalid(&loc, format!("unknown formula '{}'", spec.formula)))?;
        let generators = match &spec.generators {
            None => None,
            Some(g) => {
                let gs = doc
                    .generators
                    .get(g)
                    .ok_or_else(|| CliError::invalid(&loc, format!("unknown generator set '{g}'")))?;
                Some(build_generators(&ws, n, gs, &fam, phi)?)
            }
        };
        ws.instances.insert(
            n.clone(),
            Instance {
                models: spec.models.clone(),
                filter: spec.filter.clone(),
                formula: spec.formula.clone(),
                generators,
            },
        );
    }
    Ok(ws)
}

impl Workspace {
    pub fn model(&self, name: &str) -> CliResult<&Arc<SigmaStructure>> {
        self.models.get(name).ok_or_else(|| CliError::invalid("models", format!("unknown model '{name}'")))
    }

    pub fn family(&self, names: &[String]) -> CliResult<Vec<Arc<SigmaStructure>>> {
        names.iter().map(|n| self.model(n).cloned()).collect()
    }

    pub fn filter(&self, name: &str) -> CliResult<&Filter> {
        self.filters.get(name).ok_or_else(|| CliError::invalid("filters", format!("unknown filter '{name}'")))
    }

    /// A formula by name, or parsed from the argument when no name matches.
    pub fn formula(&self, name_or_src: &str) -> CliResult<Formula> {
        match self.formulas.get(name_or_src) {
            Some(f) => Ok(f.clone()),
            None => parse_formula(name_or_src, &self.sig, &self.registry),
        }
    }

    pub fn instance(&self, name: &str) -> CliResult<(&Instance, LosInstance)> {
        let inst = self
            .instances
            .get(name)
            .ok_or_else(|| CliError::invalid("instances", format!("unknown instance '{name}'")))?;
        let mut li = LosInstance::new(
            self.family(&inst.models)?,
            self.filter(&inst.filter)?.clone(),
            self.formula(&inst.formula)?,
        );
        li.registry = self.registry.clone();
        li.duals = self.duals.clone();
        Ok((inst, li))
    }

    pub fn coalgebra(&self, name: &str) -> CliResult<&Coalgebra> {
        self.coalgebras.get(name).ok_or_else(|| CliError::invalid("coalgebras", format!("unknown coalgebra '{name}'")))
    }
}
