//! Exhaustive law suites over one presheaf or one natural transformation:
//! Heyting algebra axioms with residuation, the adjunction chain
//! `∃t ⊣ t* ⊣ ∀t`, and the classifier round trip.
//!
//! Library results are indexed into the list of all subobjects once, then
//! the laws are checked on index tables. The implication table is also
//! recomputed from its definition as a join, independently of
//! [`sub_implies`].

use std::collections::HashMap;
use std::sync::Arc;

use crate::cat::{NatTrans, Presheaf};
use crate::error::{Error, Result};
use crate::par;
use crate::report::ConditionReport;
use crate::sub::{
    char_morphism, enumerate_sub, exists_along, forall_along, omega_presheaf, pullback_sub, sub_from_char, sub_implies,
    sub_join, sub_meet, SubPresheaf,
};

/// Flattened bit mask of a subobject; the ambient has at most 128 elements.
fn mask(s: &SubPresheaf) -> u128 {
    let mut m = 0u128;
    let mut off = 0;
    for p in s.parts() {
        for x in p.ones() {
            m |= 1 << (off + x);
        }
        off += p.len();
    }
    m
}

struct Table {
    masks: Vec<u128>,
    index: HashMap<u128, usize>,
}

impl Table {
    fn new(subs: &[SubPresheaf]) -> Self {
        let masks: Vec<u128> = subs.iter().map(mask).collect();
        let index = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        Table { masks, index }
    }

    fn idx(&self, s: &SubPresheaf) -> Option<usize> {
        self.index.get(&mask(s)).copied()
    }

    fn leq(&self, a: usize, b: usize) -> bool {
        self.masks[a] & !self.masks[b] == 0
    }
}

fn guard_size(p: &Presheaf) -> Result<()> {
    if p.total_size() > 128 {
        return Err(Error::SearchSpaceTooLarge {
            what: "law tables".into(),
            estimate: p.total_size().to_string(),
            bound: 128,
        });
    }
    Ok(())
}

/// Heyting axioms, residuation and agreement of `sub_implies` with the join
/// oracle, over every pair and triple of subobjects of `p`.
pub fn check_heyting_laws(p: &Arc<Presheaf>) -> Result<ConditionReport> {
    guard_size(p)?;
    let subs = enumerate_sub(p)?;
    let n = subs.len();
    let t = Table::new(&subs);
    let top = t.idx(&SubPresheaf::top(p)).expect("top is a subobject");
    let bot = t.idx(&SubPresheaf::bottom(p)).expect("bottom is a subobject");
    let mut rep = ConditionReport::new("heyting");

    // library tables, row by row
    let rows = par::try_map_range(n, |a| {
        let mut meet = Vec::with_capacity(n);
        let mut join = Vec::with_capacity(n);
        let mut imp = Vec::with_capacity(n);
        for b in &subs {
            meet.push(t.idx(&sub_meet(&subs[a], b)?));
            join.push(t.idx(&sub_join(&subs[a], b)?));
            imp.push(t.idx(&sub_implies(&subs[a], b)?));
        }
        Ok::<_, Error>((meet, join, imp))
    })?;
    let mut meet = vec![0; n * n];
    let mut join = vec![0; n * n];
    let mut imp = vec![0; n * n];
    for (a, (m, j, i)) in rows.into_iter().enumerate() {
        for b in 0..n {
            let (Some(x), Some(y), Some(z)) = (m[b], j[b], i[b]) else {
                rep.fail("closure", vec![("a", subs[a].to_string()), ("b", subs[b].to_string())]);
                return Ok(rep);
            };
            meet[a * n + b] = x;
            join[a * n + b] = y;
            imp[a * n + b] = z;
        }
    }
    let (m, j, i) = (
        |a: usize, b: usize| meet[a * n + b],
        |a: usize, b: usize| join[a * n + b],
        |a: usize, b: usize| imp[a * n + b],
    );

    // implication as the join of every c with a ∧ c ⪯ b
    let oracle_bad = par::map_range(n, |a| {
        let mut bad = Vec::new();
        for b in 0..n {
            let mut acc = 0u128;
            for c in 0..n {
                if t.masks[a] & t.masks[c] & !t.masks[b] == 0 {
                    acc |= t.masks[c];
                }
            }
            if acc != t.masks[imp[a * n + b]] {
                bad.push(b);
            }
        }
        bad
    });
    for (a, bs) in oracle_bad.into_iter().enumerate() {
        rep.checked += n as u64;
        for b in bs {
            rep.fail("implication oracle", vec![("a", subs[a].to_string()), ("b", subs[b].to_string())]);
        }
    }

    // pair laws
    for a in 0..n {
        for b in 0..n {
            rep.checked += 1;
            let laws = [
                ("meet commutes", m(a, b) == m(b, a)),
                ("join commutes", j(a, b) == j(b, a)),
                ("absorption", m(a, j(a, b)) == a && j(a, m(a, b)) == a),
                ("idempotence", m(a, a) == a && j(a, a) == a),
                ("bounds", m(a, top) == a && j(a, bot) == a && m(a, bot) == bot && j(a, top) == top),
                ("order", t.leq(a, b) == (m(a, b) == a)),
                ("meet is glb", t.leq(m(a, b), a) && t.leq(m(a, b), b)),
                ("join is lub", t.leq(a, j(a, b)) && t.leq(b, j(a, b))),
                ("a → a = ⊤", i(a, a) == top),
                ("modus ponens", m(a, i(a, b)) == m(a, b)),
                ("b ∧ (a → b) = b", m(b, i(a, b)) == b),
            ];
            for (name, ok) in laws {
                if !ok {
                    rep.fail(name, vec![("a", subs[a].to_string()), ("b", subs[b].to_string())]);
                }
            }
        }
    }

    // triple laws
    let triple_bad = par::map_range(n, |a| {
        let mut bad: Vec<(&'static str, usize, usize)> = Vec::new();
        for b in 0..n {
            for c in 0..n {
                if m(a, m(b, c)) != m(m(a, b), c) {
                    bad.push(("meet associates", b, c));
                }
                if j(a, j(b, c)) != j(j(a, b), c) {
                    bad.push(("join associates", b, c));
                }
                if m(a, j(b, c)) != j(m(a, b), m(a, c)) {
                    bad.push(("distributivity", b, c));
                }
                if t.leq(m(a, c), b) != t.leq(c, i(a, b)) {
                    bad.push(("residuation", b, c));
                }
            }
        }
        bad
    });
    for (a, bad) in triple_bad.into_iter().enumerate() {
        rep.checked += (n * n) as u64;
        for (law, b, c) in bad {
            rep.fail(law, vec![("a", subs[a].to_string()), ("b", subs[b].to_string()), ("c", subs[c].to_string())]);
        }
    }
    Ok(rep)
}

/// `∃t(a) ⪯ b ⇔ a ⪯ t*(b)` and `t*(b) ⪯ a ⇔ b ⪯ ∀t(a)` for every `a`
/// over the source and `b` over the target.
pub fn check_adjunctions(t: &NatTrans) -> Result<ConditionReport> {
    guard_size(t.src())?;
    guard_size(t.dst())?;
    let xs = enumerate_sub(t.src())?;
    let ys = enumerate_sub(t.dst())?;
    let ex: Vec<u128> = xs.iter().map(|a| exists_along(t, a).map(|s| mask(&s))).collect::<Result<_>>()?;
    let fa: Vec<u128> = xs.iter().map(|a| forall_along(t, a).map(|s| mask(&s))).collect::<Result<_>>()?;
    let pb: Vec<u128> = ys.iter().map(|b| pullback_sub(t, b).map(|s| mask(&s))).collect::<Result<_>>()?;
    let xm: Vec<u128> = xs.iter().map(mask).collect();
    let ym: Vec<u128> = ys.iter().map(mask).collect();
    let sub = |a: u128, b: u128| a & !b == 0;
    let mut rep = ConditionReport::new("adjunctions");
    for (ai, &a) in xm.iter().enumerate() {
        for (bi, &b) in ym.iter().enumerate() {
            rep.checked += 1;
            if sub(ex[ai], b) != sub(a, pb[bi]) {
                rep.fail("∃ ⊣ pullback", vec![("a", xs[ai].to_string()), ("b", ys[bi].to_string())]);
            }
            if sub(pb[bi], a) != sub(b, fa[ai]) {
                rep.fail("pullback ⊣ ∀", vec![("a", xs[ai].to_string()), ("b", ys[bi].to_string())]);
            }
        }
    }
    Ok(rep)
}

/// `χ⁻¹(χ(G)) = G` for every subobject `G` of `p`.
pub fn check_classifier_roundtrip(p: &Arc<Presheaf>) -> Result<ConditionReport> {
    let omega = omega_presheaf(p.base())?;
    let mut rep = ConditionReport::new("classifier");
    for g in enumerate_sub(p)? {
        rep.checked += 1;
        let chi = char_morphism(&omega, &g)?;
        let ok = crate::cat::check_nat_trans(&chi).is_ok() && sub_from_char(&omega, &chi)? == g;
        if !ok {
            rep.fail("round trip", vec![("subobject", g.to_string())]);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::FinCategory;

    #[test]
    fn laws_on_an_edge() {
        let base = Arc::new(FinCategory::graph());
        let e = crate::cat::tests::edge(&base);
        let r = check_heyting_laws(&e).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.checked > 0);
        assert!(check_classifier_roundtrip(&e).unwrap().passed());
    }

    #[test]
    fn adjunctions_on_a_collapse() {
        let base = Arc::new(FinCategory::terminal());
        let x = Arc::new(Presheaf::set(base.clone(), &["1", "2", "3"]).unwrap());
        let y = Arc::new(Presheaf::set(base, &["x", "y"]).unwrap());
        let t = NatTrans::new(x, y, vec![vec![0, 0, 1]]).unwrap();
        let r = check_adjunctions(&t).unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 8 * 4);
    }
}
