//! Base invariant values imported from the literature, stored as data with
//! citations. These are the leaves every recursion bottoms out in; the
//! derived tables are deliberately *not* stored here.
//!
//! An entry matches a query key by surface, choice of real component, weight
//! tag, class pattern (optionally linear in one integer parameter `b`), and
//! an `s` range whose bounds may depend on `b`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::engine::{FTag, InvariantKey};
use crate::expr::ValueExpr;
use crate::lattice::ClassVec;
use crate::surfaces::SurfaceModel;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegistryEntryDoc {
    pub surface: String,
    /// Component label, or `*` for any single choice of component.
    pub l: String,
    /// `zero` or `rest`.
    pub f: String,
    /// Class pattern over the surface basis and aliases; may mention the
    /// parameter `b` linearly, as in `c1+b*F`.
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_max: Option<i64>,
    /// `odd`, `even`, or absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_parity: Option<String>,
    /// Bounds for s, as expressions in b.
    pub s_min: String,
    pub s_max: String,
    /// Closed-form value in b and s...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// ...or a table indexed by s - s_min.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<i64>>,
    pub citation: String,
    pub quote: String,
}

#[derive(Clone, Debug)]
enum FPattern {
    Zero,
    Rest,
}

#[derive(Clone, Debug)]
enum ValueRule {
    Expr(ValueExpr),
    Table(Vec<i64>),
}

#[derive(Clone, Debug)]
struct CompiledEntry {
    doc: RegistryEntryDoc,
    f: FPattern,
    base: ClassVec,
    step: Option<ClassVec>,
    s_min: ValueExpr,
    s_max: ValueExpr,
    value: ValueRule,
}

#[derive(Clone, Debug, Default)]
pub struct Registry {
    entries: Vec<CompiledEntry>,
}

/// A successful lookup: the exact value plus the entry's citation trail.
#[derive(Clone, Debug)]
pub struct RegistryHit {
    pub value: BigInt,
    pub citation: String,
    pub quote: String,
}

impl Registry {
    pub fn from_docs(catalog: &Catalog, docs: Vec<RegistryEntryDoc>) -> Result<Registry> {
        let mut entries = Vec::new();
        for doc in docs {
            entries.push(compile_entry(catalog, doc)?);
        }
        let reg = Registry { entries };
        reg.check_overlaps(catalog)?;
        Ok(reg)
    }

    pub fn from_json(catalog: &Catalog, text: &str) -> Result<Registry> {
        let docs: Vec<RegistryEntryDoc> = serde_json::from_str(text)?;
        Registry::from_docs(catalog, docs)
    }

    pub fn docs(&self) -> Vec<RegistryEntryDoc> {
        self.entries.iter().map(|e| e.doc.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First matching entry wins; `None` when nothing matches.
    pub fn lookup(&self, catalog: &Catalog, key: &InvariantKey) -> Option<RegistryHit> {
        let model = catalog.get(&key.surface).ok()?;
        for entry in &self.entries {
            if let Some(hit) = match_entry(entry, model, key) {
                return Some(hit);
            }
        }
        None
    }

    /// Detect entries that can both match one key but disagree on the value.
    /// Parametric entries are sampled over a window of b; unbounded overlap
    /// beyond the window is accepted as consistent by sampling.
    fn check_overlaps(&self, catalog: &Catalog) -> Result<()> {
        let mut seen: BTreeMap<(String, String, String, Vec<i64>, i64), (BigInt, usize)> =
            BTreeMap::new();
        for (idx, entry) in self.entries.iter().enumerate() {
            let model = catalog.get(&entry.doc.surface)?;
            let labels: Vec<String> = if entry.doc.l == "*" {
                model.components.iter().map(|c| c.label.clone()).collect()
            } else {
                vec![entry.doc.l.clone()]
            };
            let b_window: Vec<i64> = match &entry.step {
                None => vec![0],
                Some(_) => {
                    let lo = entry.doc.b_min.unwrap_or(-8).max(-8);
                    let hi = entry.doc.b_max.unwrap_or(lo + 40).min(lo + 40);
                    (lo..=hi).filter(|b| parity_ok(&entry.doc.b_parity, *b)).collect()
                }
            };
            for label in &labels {
                for &b in &b_window {
                    let (Ok(smin), Ok(smax)) =
                        (entry.s_min.eval(&[("b", b)]), entry.s_max.eval(&[("b", b)]))
                    else {
                        continue;
                    };
                    let (Ok(smin), Ok(smax)) = (i64::try_from(&smin), i64::try_from(&smax)) else {
                        continue;
                    };
                    let mut s = smin.max(0);
                    while s <= smax && s <= smin.max(0) + 40 {
                        let class = concrete_class(entry, b);
                        let Some(coords) = class.to_i64() else { break };
                        let Ok(value) = entry_value(entry, b, s) else { break };
                        let f_key = match entry.f {
                            FPattern::Zero => "zero".to_string(),
                            FPattern::Rest => format!("rest-of-{label}"),
                        };
                        let map_key =
                            (entry.doc.surface.clone(), label.clone(), f_key, coords, s);
                        if let Some((prev, prev_idx)) = seen.get(&map_key) {
                            if *prev != value {
                                return Err(Error::Validation(format!(
                                    "registry entries {prev_idx} and {idx} disagree on {} ({}, s={s}): {prev} vs {value}",
                                    entry.doc.surface, entry.doc.class
                                )));
                            }
                        } else {
                            seen.insert(map_key, (value, idx));
                        }
                        s += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

fn parity_ok(parity: &Option<String>, b: i64) -> bool {
    match parity.as_deref() {
        Some("odd") => b.rem_euclid(2) == 1,
        Some("even") => b.rem_euclid(2) == 0,
        _ => true,
    }
}

fn compile_entry(catalog: &Catalog, doc: RegistryEntryDoc) -> Result<CompiledEntry> {
    if doc.citation.trim().is_empty() {
        return Err(Error::Validation(format!(
            "registry entry for {} lacks a citation",
            doc.surface
        )));
    }
    let model = catalog.get(&doc.surface)?;
    let f = match doc.f.as_str() {
        "zero" => FPattern::Zero,
        "rest" => FPattern::Rest,
        other => {
            return Err(Error::Validation(format!(
                "registry entry for {}: unknown weight tag `{other}`",
                doc.surface
            )))
        }
    };
    let (base, step) = split_class_pattern(model, &doc.class)?;
    let s_min = ValueExpr::parse(&doc.s_min)?;
    let s_max = ValueExpr::parse(&doc.s_max)?;
    let value = match (&doc.value, &doc.values) {
        (Some(expr), None) => ValueRule::Expr(ValueExpr::parse(expr)?),
        (None, Some(table)) => ValueRule::Table(table.clone()),
        _ => {
            return Err(Error::Validation(format!(
                "registry entry for {}: exactly one of value/values required",
                doc.surface
            )))
        }
    };
    if doc.l != "*" {
        model.component(&doc.l)?;
    }
    Ok(CompiledEntry { doc, f, base, step, s_min, s_max, value })
}

/// Split `class` into base + b·step.
fn split_class_pattern(model: &SurfaceModel, class: &str) -> Result<(ClassVec, Option<ClassVec>)> {
    let terms = crate::expr::parse_linear_expression(class)?;
    let mut base = model.lattice.zero();
    let mut step = model.lattice.zero();
    let mut has_b = false;
    for t in &terms {
        let Some(sym) = &t.symbol else {
            return Err(Error::Parse(format!("bare integer term in `{class}`")));
        };
        let v = model.parse_class(sym)?;
        match t.param.as_deref() {
            None => {
                for (a, x) in base.coords.iter_mut().zip(&v.coords) {
                    *a += &t.coefficient * x;
                }
            }
            Some("b") => {
                has_b = true;
                for (a, x) in step.coords.iter_mut().zip(&v.coords) {
                    *a += &t.coefficient * x;
                }
            }
            Some(other) => {
                return Err(Error::Parse(format!(
                    "unknown parameter `{other}` in registry pattern `{class}`"
                )));
            }
        }
    }
    Ok((base, if has_b { Some(step) } else { None }))
}

fn concrete_class(entry: &CompiledEntry, b: i64) -> ClassVec {
    match &entry.step {
        None => entry.base.clone(),
        Some(step) => entry.base.add(&step.scale_i64(b)),
    }
}

fn entry_value(entry: &CompiledEntry, b: i64, s: i64) -> Result<BigInt> {
    match &entry.value {
        ValueRule::Expr(e) => e.eval(&[("b", b), ("s", s)]),
        ValueRule::Table(t) => {
            let smin = entry.s_min.eval(&[("b", b)])?;
            let smin = i64::try_from(&smin)
                .map_err(|_| Error::Validation("s_min out of range".into()))?;
            let idx = usize::try_from(s - smin)
                .map_err(|_| Error::Validation("table index out of range".into()))?;
            t.get(idx)
                .map(|v| BigInt::from(*v))
                .ok_or_else(|| Error::Validation("value table too short".into()))
        }
    }
}

fn match_entry(entry: &CompiledEntry, model: &SurfaceModel, key: &InvariantKey) -> Option<RegistryHit> {
    if entry.doc.surface != key.surface || key.l.len() != 1 {
        return None;
    }
    let label = key.l.iter().next().unwrap();
    if entry.doc.l != "*" && entry.doc.l != *label {
        return None;
    }
    match entry.f {
        FPattern::Zero => {
            if !matches!(key.f, FTag::Zero) {
                return None;
            }
        }
        FPattern::Rest => {
            let complement: std::collections::BTreeSet<String> = model
                .components
                .iter()
                .map(|c| c.label.clone())
                .filter(|l| l != label)
                .collect();
            let matches = match &key.f {
                FTag::Zero => complement.is_empty(),
                FTag::Components(set) => *set == complement,
                FTag::Explicit(_) => false,
            };
            if !matches {
                return None;
            }
        }
    }
    // class pattern
    let b = match &entry.step {
        None => {
            if key.d != entry.base {
                return None;
            }
            0i64
        }
        Some(step) => {
            let diff = key.d.sub(&entry.base);
            let pivot = step.coords.iter().position(|c| !num_traits::Zero::is_zero(c))?;
            let (q, r) = num_integer::Integer::div_rem(&diff.coords[pivot], &step.coords[pivot]);
            if !num_traits::Zero::is_zero(&r) {
                return None;
            }
            let b = i64::try_from(&q).ok()?;
            if entry.base.add(&step.scale_i64(b)) != key.d {
                return None;
            }
            b
        }
    };
    if let Some(lo) = entry.doc.b_min {
        if b < lo {
            return None;
        }
    }
    if let Some(hi) = entry.doc.b_max {
        if b > hi {
            return None;
        }
    }
    if !parity_ok(&entry.doc.b_parity, b) {
        return None;
    }
    let s = key.s as i64;
    let smin = i64::try_from(&entry.s_min.eval(&[("b", b)]).ok()?).ok()?;
    let smax = i64::try_from(&entry.s_max.eval(&[("b", b)]).ok()?).ok()?;
    if s < smin || s > smax {
        return None;
    }
    let value = entry_value(entry, b, s).ok()?;
    Some(RegistryHit {
        value,
        citation: entry.doc.citation.clone(),
        quote: entry.doc.quote.clone(),
    })
}

/// Closed-form values for the minimal conic bundles, used as the oracle the
/// engine recursion is checked against (never as a compute source).
///
/// For n ≥ 2, b ≥ n-3, s ≤ b-n+3 the count for the class c₁ + b·fiber is
/// 2^{2b+2-s} with the zero weight tag, and with the full complementary
/// weight it is (-1)^{b+1} 2^{b+n-1} at s = b-n+3 and 0 for smaller s.
/// For n = 1 the zero-tag value is 2^{2b+2-s} for s ≤ b+1, and at s = b+2
/// it is 2^{b+1} for odd b, 0 for even b.
pub fn closed_form_conic(n: u32, b: i64, s: i64, full_weight: bool) -> Result<BigInt> {
    if n == 0 {
        return Err(Error::Validation("closed form starts at n = 1".into()));
    }
    if n == 1 {
        if full_weight {
            return Err(Error::Validation(
                "n = 1 has a connected real part; no complementary weight".into(),
            ));
        }
        if b < -2 || s < 0 || s > b + 2 {
            return Err(Error::Validation(format!("parameters out of range: n=1 b={b} s={s}")));
        }
        if s <= b + 1 {
            return Ok(BigInt::from(2).pow((2 * b + 2 - s) as u32));
        }
        return Ok(if b.rem_euclid(2) == 1 {
            BigInt::from(2).pow((b + 1) as u32)
        } else {
            BigInt::from(0)
        });
    }
    let n_i = n as i64;
    if b < n_i - 3 || s < 0 || s > b - n_i + 3 {
        return Err(Error::Validation(format!("parameters out of range: n={n} b={b} s={s}")));
    }
    if !full_weight {
        return Ok(BigInt::from(2).pow((2 * b + 2 - s) as u32));
    }
    if s == b - n_i + 3 {
        let mag = BigInt::from(2).pow((b + n_i - 1) as u32);
        Ok(if b.rem_euclid(2) == 0 { -mag } else { mag })
    } else {
        Ok(BigInt::from(0))
    }
}

/// The registry shipped with the built-in catalog.
pub fn builtin_registry_json() -> &'static str {
    include_str!("../data/registry.json")
}

pub fn builtin_registry(catalog: &Catalog) -> Registry {
    Registry::from_json(catalog, builtin_registry_json())
        .expect("built-in registry must load against the built-in catalog")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use std::collections::BTreeSet;

    fn key(surface: &str, l: &str, f: FTag, d: ClassVec, s: u32) -> InvariantKey {
        InvariantKey {
            surface: surface.into(),
            l: BTreeSet::from([l.to_string()]),
            f,
            d,
            s,
        }
    }

    #[test]
    fn builtin_registry_loads() {
        let cat = catalog::builtin();
        let reg = builtin_registry(&cat);
        assert!(reg.len() >= 8);
    }

    #[test]
    fn plane_line_and_cubic_rows() {
        let cat = catalog::builtin();
        let reg = builtin_registry(&cat);
        let cp2 = cat.get("cp2").unwrap();
        let d = cp2.parse_class("D").unwrap();
        let hit = reg.lookup(&cat, &key("cp2", "RP2", FTag::Zero, d, 0)).unwrap();
        assert_eq!(hit.value, BigInt::from(1));
        let d3 = cp2.parse_class("3D").unwrap();
        let hit = reg.lookup(&cat, &key("cp2", "RP2", FTag::Zero, d3.clone(), 3)).unwrap();
        assert_eq!(hit.value, BigInt::from(2));
        let hit = reg.lookup(&cat, &key("cp2", "RP2", FTag::Zero, d3.clone(), 4)).unwrap();
        assert_eq!(hit.value, BigInt::from(1));
        assert!(reg.lookup(&cat, &key("cp2", "RP2", FTag::Zero, d3, 2)).is_none());

        let cx = cat.get("cubic-X").unwrap();
        let d = cx.parse_class("2*c1").unwrap();
        let hit = reg.lookup(&cat, &key("cubic-X", "RP2", FTag::Zero, d, 1)).unwrap();
        assert_eq!(hit.value, BigInt::from(30));
    }

    #[test]
    fn conic_seed_rows() {
        let cat = catalog::builtin();
        let reg = builtin_registry(&cat);
        let x1 = cat.get("X1").unwrap();
        for (b, s, expect) in [(1i64, 0u32, 16i64), (2, 1, 32), (0, 1, 2), (1, 3, 4)] {
            let d = x1.parse_class(&format!("c1+{b}F")).unwrap();
            let hit = reg.lookup(&cat, &key("X1", "S1", FTag::Zero, d, s)).unwrap();
            assert_eq!(hit.value, BigInt::from(expect), "b={b} s={s}");
        }
        // boundary case s = b+2: odd b gives 2^{b+1}, even b gives 0
        let d = x1.parse_class("c1+2F").unwrap();
        let hit = reg.lookup(&cat, &key("X1", "S1", FTag::Zero, d, 4)).unwrap();
        assert_eq!(hit.value, BigInt::from(0));
    }

    #[test]
    fn degree_one_seeds_for_any_component() {
        let cat = catalog::builtin();
        let reg = builtin_registry(&cat);
        let y1 = cat.get("Y1").unwrap();
        let d = y1.parse_class("2*c1").unwrap();
        let f = FTag::Components(BTreeSet::from(["K".to_string()]));
        let hit = reg.lookup(&cat, &key("Y1", "P", f, d.clone(), 0)).unwrap();
        assert_eq!(hit.value, BigInt::from(6));
        let f = FTag::Components(BTreeSet::from(["P".to_string()]));
        let hit = reg.lookup(&cat, &key("Y1", "K", f, d, 0)).unwrap();
        assert_eq!(hit.value, BigInt::from(6));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(closed_form_conic(2, 1, 0, false).unwrap(), BigInt::from(16));
        assert_eq!(closed_form_conic(1, 1, 3, false).unwrap(), BigInt::from(4));
        assert_eq!(closed_form_conic(2, 1, 2, true).unwrap(), BigInt::from(4));
        assert_eq!(closed_form_conic(2, 2, 3, true).unwrap(), BigInt::from(-8));
        assert_eq!(closed_form_conic(2, 2, 1, true).unwrap(), BigInt::from(0));
        assert!(closed_form_conic(2, 1, 3, true).is_err());
    }

    #[test]
    fn conflicting_entries_rejected() {
        let cat = catalog::builtin();
        let mut docs = builtin_registry(&cat).docs();
        let mut clash = docs[0].clone();
        clash.value = Some("41".into());
        clash.values = None;
        docs.push(clash);
        let err = Registry::from_docs(&cat, docs).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
