//! Command implementations. Each returns a JSON report and whether every
//! check it ran passed; the caller turns that into an exit code.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use toposlos_core::cat::Presheaf;
use toposlos_core::filter::{check_cocone, filtered_product_models, filtered_product_presheaf};
use toposlos_core::formula::{interpret_expr, interpret_formula, Expr};
use toposlos_core::laws::check_heyting_laws;
use toposlos_core::los::{
    check_dual, check_hypotheses, check_projection_condition, los_sentence_corollary, los_verify, proof_steps,
    subformulas, ConditionReport, LosOptions,
};
use toposlos_core::modal::{eval_box, eval_diamond, Subset};
use toposlos_core::oracle;
use toposlos_core::sub::SubPresheaf;
use toposlos_core::Error as CoreError;

use crate::error::{At, CliError, CliResult};
use crate::workspace::Workspace;

pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

fn sub_json(s: &SubPresheaf) -> Value {
    json!(s.names())
}

fn sizes(p: &Presheaf) -> Value {
    let m: BTreeMap<&str, usize> =
        p.base().objects().iter().enumerate().map(|(b, o)| (o.as_str(), p.size(b))).collect();
    json!(m)
}

pub fn check(ws: &Workspace) -> Outcome {
    let models: BTreeMap<&str, Value> = ws
        .models
        .iter()
        .map(|(n, m)| {
            let carriers: BTreeMap<&str, Value> = m.carriers().iter().map(|(s, p)| (s.as_str(), sizes(p))).collect();
            let relations: BTreeMap<&str, usize> = m.relations().iter().map(|(r, s)| (r.as_str(), s.count())).collect();
            (n.as_str(), json!({ "carriers": carriers, "relations": relations }))
        })
        .collect();
    let formulas: BTreeMap<&str, String> = ws.formulas.iter().map(|(n, f)| (n.as_str(), f.to_string())).collect();
    let filters: BTreeMap<&str, Value> = ws
        .filters
        .iter()
        .map(|(n, f)| (n.as_str(), json!({ "filter": f.to_string(), "ultrafilter": f.is_ultrafilter() })))
        .collect();
    let instances: BTreeMap<&str, Value> = ws
        .instances
        .iter()
        .map(|(n, i)| {
            let gens = i.generators.as_ref().map(|g| g.len());
            (n.as_str(), json!({ "models": i.models, "filter": i.filter, "formula": i.formula, "generators": gens }))
        })
        .collect();
    let coalgebras: BTreeMap<&str, usize> = ws.coalgebras.iter().map(|(n, c)| (n.as_str(), c.len())).collect();
    let report = json!({
        "command": "check",
        "base": {
            "objects": ws.base.objects(),
            "morphisms": ws.base.morphisms().iter().map(|m| m.name.clone()).collect::<Vec<_>>(),
        },
        "signature": {
            "sorts": ws.sig.sorts,
            "functions": ws.sig.functions.keys().collect::<Vec<_>>(),
            "relations": ws.sig.relations.keys().collect::<Vec<_>>(),
        },
        "quantifiers": ws.registry.names().collect::<Vec<_>>(),
        "models": models,
        "morphisms": ws.morphisms.keys().collect::<Vec<_>>(),
        "formulas": formulas,
        "filters": filters,
        "instances": instances,
        "coalgebras": coalgebras,
    });
    Outcome { report, ok: true }
}

pub fn eval(ws: &Workspace, model: &str, formula: &str) -> CliResult<Outcome> {
    let m = ws.model(model)?;
    let phi = ws.formula(formula)?;
    let s = interpret_formula(m, &ws.registry, &phi).at(format!("eval {model}"))?;
    let report = json!({
        "command": "eval",
        "model": model,
        "formula": phi.to_string(),
        "context": phi.ctx.to_string(),
        "subobject": sub_json(&s),
        "elements": s.count(),
        "ambient_elements": s.ambient().total_size(),
        "top": s.is_top(),
        "bottom": s.is_bottom(),
    });
    Ok(Outcome { report, ok: true })
}

fn class_table(fp: &toposlos_core::filter::FilteredProduct) -> Value {
    let base = fp.presheaf.base();
    let mut per_obj = BTreeMap::new();
    for (b, o) in base.objects().iter().enumerate() {
        let mut classes: Vec<Vec<&str>> = vec![Vec::new(); fp.num_classes(b)];
        for (x, &c) in fp.class_index[b].iter().enumerate() {
            classes[c].push(fp.product.presheaf.elements(b)[x].as_str());
        }
        let table: Vec<Value> = classes
            .iter()
            .enumerate()
            .map(|(c, members)| json!({ "class": fp.presheaf.elements(b)[c], "members": members }))
            .collect();
        per_obj.insert(o.as_str(), json!({ "count": fp.num_classes(b), "classes": table }));
    }
    json!(per_obj)
}

pub fn product(ws: &Workspace, models: &[String], filter: &str) -> CliResult<Outcome> {
    let fam = ws.family(models)?;
    let f = ws.filter(filter)?;
    if f.len() != fam.len() {
        return Err(CliError::invalid("product", format!("filter indexes {} models, {} given", f.len(), fam.len())));
    }
    let fm = filtered_product_models(&fam, f).at("product")?;
    let mut sorts = BTreeMap::new();
    let mut ok = true;
    for (s, fp) in &fm.sorts {
        let cocone = check_cocone(fp).at(format!("product sort {s}"))?;
        ok &= cocone.is_ok();
        sorts.insert(s.as_str(), json!({ "classes": class_table(fp), "cocone": cocone.to_string() }));
    }
    let relations: BTreeMap<&str, Value> =
        fm.model.relations().iter().map(|(r, s)| (r.as_str(), sub_json(s))).collect();
    let report = json!({
        "command": "product",
        "models": models,
        "filter": f.to_string(),
        "ultrafilter": f.is_ultrafilter(),
        "sorts": sorts,
        "relations": relations,
    });
    Ok(Outcome { report, ok })
}

/// Condition groups selectable with `--only`.
pub const CONDITION_GROUPS: &[&str] = &["projection", "finiteness", "filterable", "distributing", "dual"];

fn in_group(condition: &str, only: Option<&str>) -> bool {
    match only {
        None => true,
        Some("filterable") => condition == "filterable" || condition == "pullback filterable",
        Some(g) => condition == g,
    }
}

fn dual_reports(ws: &Workspace, li: &toposlos_core::los::LosInstance) -> CliResult<Vec<ConditionReport>> {
    let mut out = Vec::new();
    for n in subformulas(&li.formula) {
        let Expr::Quant { name, along, .. } = &n.expr else { continue };
        for d in li.duals.iter().filter(|d| &d.quantifier == name) {
            let q = ws.registry.get(&d.quantifier).at("duals")?;
            let qb = ws.registry.get(&d.dual).at("duals")?;
            let mut r = check_dual(q, qb, along, &d.signs, &li.family).at(format!("dual at {}", n.path))?;
            r.condition = format!("dual {} / {} at {}", d.quantifier, d.dual, n.path);
            out.push(r);
        }
    }
    Ok(out)
}

pub fn conditions(ws: &Workspace, instance: &str, only: Option<&str>) -> CliResult<Outcome> {
    if let Some(g) = only {
        if !CONDITION_GROUPS.contains(&g) {
            return Err(CliError::invalid("--only", format!("unknown condition group '{g}'")));
        }
    }
    let (inst, li) = ws.instance(instance)?;
    let loc = format!("instances.{instance}");
    let mut reports: Vec<ConditionReport> = Vec::new();
    if only != Some("dual") {
        reports.extend(check_hypotheses(&li).at(&loc)?.into_iter().filter(|r| in_group(&r.condition, only)));
    }
    if let Some(g) = &inst.generators {
        if only.is_none() || only == Some("projection") {
            let iotas: Vec<SubPresheaf> = li
                .family
                .iter()
                .map(|m| interpret_formula(m, &li.registry, &li.formula))
                .collect::<Result<_, _>>()
                .at(&loc)?;
            let (_, mut r) = check_projection_condition(&li.family, &li.formula.ctx, &iotas, Some(g)).at(&loc)?;
            r.condition = "projection (declared generators)".into();
            reports.push(r);
        }
    }
    // dualities only matter where a quantifier is not filterable, so they
    // count towards the verdict only when asked for explicitly
    let duals = if only.is_none() || only == Some("dual") { dual_reports(ws, &li)? } else { Vec::new() };
    let ok = reports.iter().all(|r| !r.failed()) && (only != Some("dual") || duals.iter().all(|r| !r.failed()));
    let report = json!({
        "command": "conditions",
        "instance": instance,
        "models": inst.models,
        "filter": li.filter.to_string(),
        "formula": li.formula.to_string(),
        "only": only,
        "conditions": reports,
        "duals": duals,
    });
    Ok(Outcome { report, ok })
}

pub fn los(ws: &Workspace, instance: &str, force: bool) -> CliResult<Outcome> {
    let (inst, li) = ws.instance(instance)?;
    let loc = format!("instances.{instance}");
    let r = los_verify(&li, LosOptions { force, check_hypotheses: true }).at(&loc)?;
    let steps = proof_steps(&li).at(&loc)?;
    let sentence = if li.formula.ctx.is_empty() {
        match los_sentence_corollary(&li) {
            Ok(c) => Some(c),
            Err(CoreError::NotASentence(m)) => {
                let mut c = ConditionReport::new("sentence corollary");
                c.skip(format!("not a sentence relative to this family and its filtered product: {m}"));
                Some(c)
            }
            Err(e) => return Err(e).at(&loc),
        }
    } else {
        None
    };
    let ok = r.result.passed() && steps.iter().all(|s| !s.failed()) && sentence.as_ref().is_none_or(|s| !s.failed());
    let report = json!({
        "command": "los",
        "instance": instance,
        "models": inst.models,
        "verdict": if r.result.passed() { "pass" } else { "fail" },
        "report": r,
        "steps": steps,
        "sentence": sentence,
    });
    Ok(Outcome { report, ok })
}

pub fn oracle_eval(ws: &Workspace, model: &str, formula: &str) -> CliResult<Outcome> {
    let m = ws.model(model)?;
    let phi = ws.formula(formula)?;
    let lib = interpret_expr(m, &ws.registry, &phi.ctx, &phi.expr).at("oracle eval")?;
    let ora = oracle::tarski_sub(m, &ws.registry, &phi.ctx, &phi.expr).at("oracle eval")?;
    let agree = lib == ora;
    let report = json!({
        "command": "oracle eval",
        "model": model,
        "formula": phi.to_string(),
        "library": sub_json(&lib),
        "oracle": sub_json(&ora),
        "agree": agree,
    });
    Ok(Outcome { report, ok: agree })
}

pub fn oracle_classes(ws: &Workspace, models: &[String], filter: &str) -> CliResult<Outcome> {
    let fam = ws.family(models)?;
    let f = ws.filter(filter)?;
    let mut sorts = BTreeMap::new();
    let mut ok = true;
    for s in &ws.sig.sorts {
        let ps: Vec<Arc<Presheaf>> =
            fam.iter().map(|m| m.carrier(s).cloned()).collect::<Result<_, _>>().at("oracle classes")?;
        let fp = filtered_product_presheaf(&ps, f).at(format!("oracle classes sort {s}"))?;
        let counts = oracle::filtered_class_counts(&ps, f).at(format!("oracle classes sort {s}"))?;
        let lib: Vec<usize> = (0..ws.base.num_objects()).map(|b| fp.num_classes(b)).collect();
        ok &= lib == counts;
        sorts.insert(s.as_str(), json!({ "library": lib, "oracle": counts }));
    }
    let report = json!({
        "command": "oracle classes",
        "models": models,
        "filter": f.to_string(),
        "objects": ws.base.objects(),
        "sorts": sorts,
        "agree": ok,
    });
    Ok(Outcome { report, ok })
}

pub fn oracle_heyting(ws: &Workspace, model: &str, sort: &str) -> CliResult<Outcome> {
    let m = ws.model(model)?;
    let p = m.carrier(sort).at(format!("models.{model}"))?;
    let r = check_heyting_laws(p).at(format!("models.{model}.carriers.{sort}"))?;
    let ok = r.passed();
    Ok(Outcome { report: json!({ "command": "oracle heyting", "model": model, "sort": sort, "report": r }), ok })
}

pub fn oracle_modal(ws: &Workspace, coalgebra: &str) -> CliResult<Outcome> {
    let c = ws.coalgebra(coalgebra)?;
    let succ = oracle::successor_relation(c).at("oracle modal")?;
    let n = c.len();
    if n > 16 {
        return Err(CliError::Core {
            location: format!("coalgebras.{coalgebra}"),
            source: CoreError::SearchSpaceTooLarge {
                what: "state subsets".into(),
                estimate: format!("2^{n}"),
                bound: 1 << 16,
            },
        });
    }
    let mut rows = Vec::new();
    let mut ok = true;
    for k in 0..1usize << n {
        let a: Subset = (0..n).filter(|j| k >> j & 1 == 1).collect();
        let (b, d) = (eval_box(c, &a).at("oracle modal")?, eval_diamond(c, &a).at("oracle modal")?);
        let (ob, od) = (oracle::kripke_box(&succ, &a), oracle::kripke_diamond(&succ, &a));
        let agree = b == ob && d == od;
        ok &= agree;
        rows.push(json!({ "subset": c.names(&a), "box": c.names(&b), "diamond": c.names(&d), "agree": agree }));
    }
    let report =
        json!({ "command": "oracle modal", "coalgebra": coalgebra, "states": c.states, "rows": rows, "agree": ok });
    Ok(Outcome { report, ok })
}
