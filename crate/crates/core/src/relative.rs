//! Relative counts: queries decorated with two collections of (-2)-sphere
//! classes. Spheres in `U` stay away from the constraint components and carry
//! the binomial relation; spheres in `V` have a real circle bounding pieces
//! of the real part and disappear by capping across a surgery record. Every
//! relative query reduces to absolute ones by eliminating U through the
//! inverted binomial relation and V through capping.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::combinatorics::{forward_coefficient, reduction_coefficient};
use crate::engine::{Engine, FTag, InvariantKey, WValue};
use crate::lattice::{is_exceptional, ClassVec};
use crate::surfaces::{Label, SurgeryOutcome};
use crate::{Error, Result};

/// Sphere relative to which only simple, unfixed incidences are allowed.
/// Its real locus must avoid the constraint components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelSphereU {
    pub cls: ClassVec,
}

/// Sphere with a real circle on a named component; the class must pair to
/// zero with the query class and the weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelSphereV {
    pub cls: ClassVec,
    pub circle_on: Label,
}

#[derive(Clone, Debug)]
pub struct RelativeKey {
    pub base: InvariantKey,
    pub u: Vec<RelSphereU>,
    pub v: Vec<RelSphereV>,
    /// Components whose weight is added to F once every V-sphere is capped.
    pub l0: BTreeSet<Label>,
    /// Catalog assertion that the V-circles jointly bound L ∪ L0.
    pub assert_v_boundary: bool,
}

impl RelativeKey {
    pub fn absolute(base: InvariantKey) -> Self {
        RelativeKey { base, u: Vec::new(), v: Vec::new(), l0: BTreeSet::new(), assert_v_boundary: false }
    }

    pub fn validate(&self, engine: &Engine) -> Result<()> {
        engine.validate_key(&self.base)?;
        let model = engine.catalog().get(&self.base.surface)?;
        let all: Vec<&ClassVec> =
            self.u.iter().map(|e| &e.cls).chain(self.v.iter().map(|e| &e.cls)).collect();
        for (i, a) in all.iter().enumerate() {
            if model.lattice.self_pairing(a)? != BigInt::from(-2) {
                return Err(Error::Validation("relative sphere classes must square to -2".into()));
            }
            for b in all.iter().skip(i + 1) {
                if !model.lattice.pair(a, b)?.is_zero() {
                    return Err(Error::Validation(
                        "relative sphere classes must be pairwise orthogonal".into(),
                    ));
                }
            }
        }
        for e in &self.v {
            model.component(&e.circle_on)?;
            if !model.lattice.pair(&self.base.d, &e.cls)?.is_zero() {
                return Err(Error::Validation(
                    "the class must pair to zero with every V-sphere".into(),
                ));
            }
            let f_pairing = match &self.base.f {
                FTag::Zero => 0,
                FTag::Explicit(m) => model.lattice.pair_mod2(m, &e.cls.mod2())?,
                FTag::Components(set) => {
                    let mut acc = 0u8;
                    for label in set {
                        let comp = model.component(label)?;
                        match &comp.mod2_class {
                            Some(m) => acc ^= model.lattice.pair_mod2(m, &e.cls.mod2())?,
                            None => {
                                return Err(Error::InsufficientData(format!(
                                    "component {label} has no recorded mod-2 class"
                                )))
                            }
                        }
                    }
                    acc
                }
            };
            if f_pairing != 0 {
                return Err(Error::Validation(
                    "the weight must be orthogonal to every V-sphere".into(),
                ));
            }
        }
        if !self.v.is_empty() && !self.assert_v_boundary {
            return Err(Error::Validation(
                "V-spheres require the boundary assertion from the catalog".into(),
            ));
        }
        if self.l0.intersection(&self.base.l).next().is_some() {
            return Err(Error::Validation("L0 must be disjoint from L".into()));
        }
        for label in &self.l0 {
            model.component(label)?;
        }
        Ok(())
    }
}

/// A finite linear combination of relative keys.
pub struct Expansion {
    pub terms: Vec<(BigInt, RelativeKey)>,
    pub rule: &'static str,
    pub citation: &'static str,
}

fn tail_classes(
    engine: &Engine,
    key: &RelativeKey,
    e: &ClassVec,
    stride: i64,
) -> Result<Vec<(i64, ClassVec)>> {
    let model = engine.catalog().get(&key.base.surface)?;
    let policy = engine.policy();
    let genus = key.base.genus();
    let mut out = Vec::new();
    for k in 0..=policy.max_k as i64 {
        let d_k = key.base.d.sub(&e.scale_i64(stride * k));
        if k > 0 && policy.use_adjunction {
            let defect = model.adjunction_defect(&d_k, genus)?;
            let exceptional = is_exceptional(&model.lattice, &model.c1, &d_k)?;
            if defect.is_negative() && !exceptional {
                return Ok(out);
            }
        }
        out.push((k, d_k));
    }
    Err(Error::Config(format!(
        "relative tail did not terminate within {} terms; tighten the vanishing policy",
        policy.max_k
    )))
}

/// Express the count with E removed from U through the counts keeping E:
/// W with U∖E equals Σ_k binom(m + 2k, k) · W with U in the class d - 2kE,
/// where 2m = d·E ≥ 0.
pub fn relations_drop_u(engine: &Engine, key: &RelativeKey, e_index: usize) -> Result<Expansion> {
    key.validate(engine)?;
    let model = engine.catalog().get(&key.base.surface)?;
    let e = &key.u[e_index].cls;
    let pairing = model.lattice.pair(&key.base.d, e)?;
    if pairing.is_negative() || (&pairing % BigInt::from(2)) != BigInt::zero() {
        return Err(Error::Validation(
            "the class must pair non-negatively and evenly with the U-sphere".into(),
        ));
    }
    let m = i64::try_from(&pairing).map_err(|_| Error::Validation("pairing too large".into()))? / 2;
    let mut terms = Vec::new();
    for (k, d_k) in tail_classes(engine, key, e, 2)? {
        let coeff = forward_coefficient(m, k);
        let mut term = key.clone();
        term.base.d = d_k;
        terms.push((coeff, term));
    }
    Ok(Expansion {
        terms,
        rule: "relative-forward",
        citation: "binomial relation for dropping a relative sphere",
    })
}

/// The inverted relation: the count keeping E expands over counts with E
/// dropped, with the alternating coefficients
/// (-1)^k (binom(m+k, m) + binom(m+k-1, m)).
pub fn relations_keep_u(engine: &Engine, key: &RelativeKey, e_index: usize) -> Result<Expansion> {
    key.validate(engine)?;
    let model = engine.catalog().get(&key.base.surface)?;
    let e = key.u[e_index].cls.clone();
    let pairing = model.lattice.pair(&key.base.d, &e)?;
    if pairing.is_negative() || (&pairing % BigInt::from(2)) != BigInt::zero() {
        return Err(Error::Validation(
            "the class must pair non-negatively and evenly with the U-sphere".into(),
        ));
    }
    let m = i64::try_from(&pairing).map_err(|_| Error::Validation("pairing too large".into()))? / 2;
    let mut dropped = key.clone();
    dropped.u.remove(e_index);
    let mut terms = Vec::new();
    for (k, d_k) in tail_classes(engine, key, &e, 2)? {
        let coeff = reduction_coefficient(m, k);
        let mut term = dropped.clone();
        term.base.d = d_k;
        terms.push((coeff, term));
    }
    Ok(Expansion {
        terms,
        rule: "relative-reduction",
        citation: "inverse of the binomial relation (upper triangular system)",
    })
}

/// Across a surgery record along a U-sphere with d·E = 0 the relative counts
/// spread with weights 2^k.
pub fn relations_surgery_u(
    engine: &Engine,
    source_key: &RelativeKey,
    e_index: usize,
    target_id: &str,
) -> Result<Expansion> {
    let catalog = engine.catalog();
    let model = catalog.get(&source_key.base.surface)?;
    let e = &source_key.u[e_index].cls;
    if !model.lattice.pair(&source_key.base.d, e)?.is_zero() {
        return Err(Error::Validation("the class must pair to zero with the sphere".into()));
    }
    let rec = catalog
        .surgeries_from(&source_key.base.surface)
        .find(|r| r.target == target_id && (r.sphere == *e || r.sphere == e.neg()))
        .ok_or_else(|| {
            Error::Validation(format!(
                "no surgery record from {} to {target_id} along that class",
                source_key.base.surface
            ))
        })?;
    let mut dropped = source_key.clone();
    dropped.u.remove(e_index);
    dropped.base.surface = rec.target.to_string();
    let mut terms = Vec::new();
    for (k, d_k) in tail_classes(engine, source_key, e, 1)? {
        let coeff = BigInt::from(2).pow(k as u32);
        let mut term = dropped.clone();
        term.base.d = d_k;
        terms.push((coeff, term));
    }
    Ok(Expansion {
        terms,
        rule: "relative-surgery",
        citation: "surgery relation for a relative sphere with vanishing pairing",
    })
}

/// Cap one V-sphere across the matching surgery record: the count transports
/// unchanged, with the cut component of L or L0 replaced by its capped image.
pub fn cap_v(engine: &Engine, key: &RelativeKey, v_index: usize) -> Result<RelativeKey> {
    key.validate(engine)?;
    if !key.assert_v_boundary {
        return Err(Error::Validation("capping requires the boundary assertion".into()));
    }
    let catalog = engine.catalog();
    let sphere = &key.v[v_index];
    let rec = catalog
        .surgeries_to(&key.base.surface)
        .find(|r| {
            (r.sphere == sphere.cls || r.sphere == sphere.cls.neg())
                && matches!(&r.outcome,
                    SurgeryOutcome::CutComponent { target, .. } if *target == sphere.circle_on)
        })
        .cloned()
        .ok_or_else(|| {
            Error::Validation(format!(
                "no surgery record caps the circle on {} along that class",
                sphere.circle_on
            ))
        })?;
    let SurgeryOutcome::CutComponent { target: cut, source: capped } = &rec.outcome else {
        unreachable!("record filtered to the cut case");
    };
    let relabel = |set: &BTreeSet<Label>| -> BTreeSet<Label> {
        set.iter().map(|l| if l == cut { capped.clone() } else { l.clone() }).collect()
    };
    let mut out = key.clone();
    out.v.remove(v_index);
    out.base.surface = rec.source.clone();
    out.base.l = relabel(&key.base.l);
    out.l0 = relabel(&key.l0);
    if let FTag::Components(set) = &key.base.f {
        out.base.f = FTag::Components(relabel(set));
    }
    Ok(out)
}

/// Full reduction to absolute values: eliminate U spheres through the
/// inverted relation, cap V spheres, then fold L0 into the weight and hand
/// the absolute key to the engine.
pub fn reduce_relative(engine: &Engine, key: &RelativeKey) -> Result<WValue> {
    key.validate(engine)?;
    if !key.u.is_empty() {
        let expansion = relations_keep_u(engine, key, key.u.len() - 1)?;
        let mut terms = Vec::new();
        for (coeff, sub) in expansion.terms {
            if coeff.is_zero() {
                continue;
            }
            let val = reduce_relative(engine, &sub)?;
            terms.push((coeff, val));
        }
        return Ok(WValue::combination(expansion.rule, expansion.citation, terms));
    }
    if !key.v.is_empty() {
        let capped = cap_v(engine, key, key.v.len() - 1)?;
        let val = reduce_relative(engine, &capped)?;
        return Ok(WValue::combination(
            "relative-capping",
            "capping a relative sphere with real circle across the surgery",
            vec![(BigInt::from(1), val)],
        ));
    }
    // absolute: add the L0 weight to F
    let mut f = key.base.f.clone();
    if !key.l0.is_empty() {
        f = match f {
            FTag::Zero => FTag::Components(key.l0.clone()),
            FTag::Components(set) => {
                // symmetric difference: weights add mod 2
                let mut out = BTreeSet::new();
                for l in set.symmetric_difference(&key.l0) {
                    out.insert(l.clone());
                }
                FTag::Components(out)
            }
            FTag::Explicit(_) => {
                return Err(Error::Validation(
                    "cannot fold component weights into an explicit class".into(),
                ))
            }
        };
    }
    let absolute = InvariantKey {
        surface: key.base.surface.clone(),
        l: key.base.l.clone(),
        f,
        d: key.base.d.clone(),
        s: key.base.s,
    }
    .normalized();
    engine.compute(&absolute)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::VanishingPolicy;
    use crate::{catalog, registry};
    use std::sync::Arc;

    fn engine() -> Engine {
        let cat = Arc::new(catalog::builtin());
        let reg = Arc::new(registry::builtin_registry(&cat));
        Engine::new(cat, reg, VanishingPolicy::default())
    }

    #[test]
    fn capping_reaches_the_registry() {
        let e = engine();
        let y1 = e.catalog().get("Y1").unwrap();
        let gamma = y1.parse_class("F-Et2-Et3").unwrap();
        let base = InvariantKey::new(
            "Y1",
            &["P"],
            FTag::Zero,
            y1.parse_class("2*c1").unwrap(),
            0,
        );
        let key = RelativeKey {
            base,
            u: vec![],
            v: vec![RelSphereV { cls: gamma, circle_on: "K".into() }],
            l0: BTreeSet::from(["K".to_string()]),
            assert_v_boundary: true,
        };
        let out = reduce_relative(&e, &key).unwrap();
        assert_eq!(out.value, BigInt::from(6));
        assert!(out.replays_consistently());
    }

    #[test]
    fn u_reduction_with_vanishing_tail() {
        let e = engine();
        let y1 = e.catalog().get("Y1").unwrap();
        let gamma = y1.parse_class("F-Et2-Et3").unwrap();
        let d = y1.parse_class("2*c1").unwrap();
        let base = InvariantKey {
            surface: "Y1".into(),
            l: BTreeSet::from(["P".to_string()]),
            f: FTag::Components(BTreeSet::from(["K".to_string()])),
            d,
            s: 0,
        };
        let key = RelativeKey {
            base,
            u: vec![RelSphereU { cls: gamma }],
            v: vec![],
            l0: BTreeSet::new(),
            assert_v_boundary: false,
        };
        // d·E = 0: the reduction has coefficients 1, -2, ... but the tail
        // dies by adjunction after k = 1
        let out = reduce_relative(&e, &key).unwrap();
        assert_eq!(out.value, BigInt::from(6));
    }

    #[test]
    fn forward_and_reduction_coefficients_compose() {
        let e = engine();
        let y1 = e.catalog().get("Y1").unwrap();
        let gamma = y1.parse_class("F-Et2-Et3").unwrap();
        let d = y1.parse_class("2*c1").unwrap();
        let base = InvariantKey {
            surface: "Y1".into(),
            l: BTreeSet::from(["P".to_string()]),
            f: FTag::Components(BTreeSet::from(["K".to_string()])),
            d,
            s: 0,
        };
        let key = RelativeKey {
            base,
            u: vec![RelSphereU { cls: gamma }],
            v: vec![],
            l0: BTreeSet::new(),
            assert_v_boundary: false,
        };
        let fwd = relations_drop_u(&e, &key, 0).unwrap();
        assert_eq!(fwd.terms[0].0, BigInt::from(1));
        let red = relations_keep_u(&e, &key, 0).unwrap();
        assert_eq!(red.terms[0].0, BigInt::from(1));
        if red.terms.len() > 1 {
            assert_eq!(red.terms[1].0, BigInt::from(-2));
        }
    }

    #[test]
    fn invalid_relative_keys() {
        let e = engine();
        let y1 = e.catalog().get("Y1").unwrap();
        let d = y1.parse_class("2*c1").unwrap();
        let base = InvariantKey::new("Y1", &["P"], FTag::Zero, d, 0);
        // V-sphere without the boundary assertion
        let gamma = y1.parse_class("F-Et2-Et3").unwrap();
        let key = RelativeKey {
            base: base.clone(),
            u: vec![],
            v: vec![RelSphereV { cls: gamma, circle_on: "K".into() }],
            l0: BTreeSet::new(),
            assert_v_boundary: false,
        };
        assert!(key.validate(&e).is_err());
        // non-(-2) class in U
        let key = RelativeKey {
            base,
            u: vec![RelSphereU { cls: y1.parse_class("Et1").unwrap() }],
            v: vec![],
            l0: BTreeSet::new(),
            assert_v_boundary: false,
        };
        assert!(key.validate(&e).is_err());
    }
}
