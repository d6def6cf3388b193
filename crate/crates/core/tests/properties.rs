//! Property tests for the lattice layer and the catalog-wide invariants.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

use wsurg_core::catalog::builtin as builtin_catalog;
use wsurg_core::engine::{Engine, FTag, InvariantKey, Prov, VanishingPolicy};
use wsurg_core::lattice::ClassVec;
use wsurg_core::registry::builtin_registry;

fn blown_plane_vectors() -> impl Strategy<Value = ClassVec> {
    proptest::collection::vec(-9i64..=9, 7).prop_map(|v| ClassVec::from_i64(&v))
}

proptest! {
    #[test]
    fn pairing_symmetric_bilinear(a in blown_plane_vectors(),
                                  b in blown_plane_vectors(),
                                  c in blown_plane_vectors(),
                                  k in -5i64..=5) {
        let cat = builtin_catalog();
        let model = cat.get("cubic-X").unwrap();
        let lat = &model.lattice;
        prop_assert_eq!(lat.pair(&a, &b).unwrap(), lat.pair(&b, &a).unwrap());
        let bc = b.add(&c.scale_i64(k));
        let lhs = lat.pair(&a, &bc).unwrap();
        let rhs = lat.pair(&a, &b).unwrap() + BigInt::from(k) * lat.pair(&a, &c).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn reflection_is_an_involutive_isometry(a in blown_plane_vectors(),
                                            b in blown_plane_vectors()) {
        let cat = builtin_catalog();
        let model = cat.get("cubic-X").unwrap();
        let lat = &model.lattice;
        let s = model.parse_class("2D-E1-E2-E3-E4-E5-E6").unwrap();
        let ra = lat.reflect(&a, &s).unwrap();
        let rb = lat.reflect(&b, &s).unwrap();
        prop_assert_eq!(lat.pair(&ra, &rb).unwrap(), lat.pair(&a, &b).unwrap());
        prop_assert_eq!(lat.reflect(&ra, &s).unwrap(), a);
    }
}

#[test]
fn every_catalog_involution_validates() {
    // involution construction re-checks T² = I and the isometry property;
    // re-validating the full catalog exercises all of them
    builtin_catalog().validate().unwrap();
}

#[test]
fn anticanonical_class_is_anti_invariant_everywhere() {
    let cat = builtin_catalog();
    for id in cat.ids() {
        let model = cat.get(id).unwrap();
        assert!(model.involution.is_anti_invariant(&model.c1), "{id}");
    }
}

#[test]
fn minus_identity_has_full_anti_eigenlattice() {
    let cat = builtin_catalog();
    let model = cat.get("quadric-empty").unwrap();
    assert_eq!(model.involution.eigenlattice(-1).len(), 2);
    assert_eq!(model.involution.eigenlattice(1).len(), 0);
}

#[test]
fn memoized_results_are_reused_verbatim() {
    let cat = Arc::new(builtin_catalog());
    let reg = Arc::new(builtin_registry(&cat));
    let engine = Engine::new(cat.clone(), reg, VanishingPolicy::default());
    let model = cat.get("Y5").unwrap();
    let f = FTag::Components(
        model.components.iter().map(|c| c.label.clone()).filter(|l| l != "P").collect(),
    );
    let key = InvariantKey::new("Y5", &["P"], f, model.parse_class("2*c1").unwrap(), 0);
    let first = engine.compute(&key).unwrap();
    let second = engine.compute(&key).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.value, BigInt::from(30));
}

#[test]
fn policy_cap_reports_configuration_error() {
    // with adjunction off, the surgery tails never terminate on their own
    let cat = Arc::new(builtin_catalog());
    let reg = Arc::new(builtin_registry(&cat));
    let policy = VanishingPolicy { use_adjunction: false, max_k: 8, ..Default::default() };
    let engine = Engine::new(cat.clone(), reg, policy);
    let model = cat.get("cubic-Y").unwrap();
    let key = InvariantKey::new("cubic-Y", &["RP2"], FTag::Zero, model.c1.clone(), 0);
    let err = engine.compute(&key).unwrap_err();
    assert!(matches!(err, wsurg_core::Error::Config(_)), "{err}");
}

#[test]
fn user_predicate_zeroes_are_recorded() {
    let cat = Arc::new(builtin_catalog());
    let reg = Arc::new(builtin_registry(&cat));
    let policy = VanishingPolicy {
        user_predicate: Some(Arc::new(|_, d: &ClassVec| !d.coords[0].is_zero())),
        predicate_id: "kill-everything-with-a-line-part".into(),
        ..Default::default()
    };
    let engine = Engine::new(cat.clone(), reg, policy);
    let model = cat.get("cubic-Y").unwrap();
    let key = InvariantKey::new("cubic-Y", &["RP2"], FTag::Zero, model.c1.clone(), 0);
    let out = engine.compute(&key).unwrap();
    assert!(out.value.is_zero());
    assert!(matches!(out.prov.as_ref(), Prov::Vanishing { .. }));
}

#[test]
fn twisted_route_matches_composed_sign_twists() {
    // whenever both the plain and the twisted expansions apply, the twisted
    // one equals the plain one with each tail value sign-twisted
    let cat = Arc::new(builtin_catalog());
    let reg = Arc::new(builtin_registry(&cat));
    let engine = Engine::new(cat.clone(), reg, VanishingPolicy::default());
    let cubic_y = cat.get("cubic-Y").unwrap();
    let cubic_x = cat.get("cubic-X").unwrap();
    let sphere = cubic_x.parse_class("2D-E1-E2-E3-E4-E5-E6").unwrap();
    let d = cubic_y.parse_class("2*c1").unwrap();
    for s in 0..=2u32 {
        let plain = engine
            .compute(&InvariantKey::new("cubic-Y", &["RP2"], FTag::Zero, d.clone(), s))
            .unwrap();
        let twisted = engine
            .compute(&InvariantKey::new(
                "cubic-Y",
                &["RP2"],
                FTag::Components(["S".to_string()].into()),
                d.clone(),
                s,
            ))
            .unwrap();
        let (Prov::Combination { terms: pt, .. }, Prov::Combination { terms: tt, .. }) =
            (plain.prov.as_ref(), twisted.prov.as_ref())
        else {
            panic!("expected expansions");
        };
        assert_eq!(pt.len(), tt.len());
        for (k, ((pc, pv), (tc, tv))) in pt.iter().zip(tt).enumerate() {
            // tail class pairs with the sphere to 2k, so the sign is (-1)^k
            let delta = d.sub(&sphere.scale_i64(k as i64));
            let pairing = cubic_x.lattice.pair(&delta, &sphere).unwrap();
            assert_eq!(pairing, BigInt::from(2 * k as i64));
            let sign = if k % 2 == 0 { 1i64 } else { -1 };
            assert_eq!(tc, &(pc * BigInt::from(sign)));
            assert_eq!(pv.value, tv.value);
        }
    }
}
