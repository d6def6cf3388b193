//! Acceptance suite: one test per criterion, each printing a pass line with
//! its runtime. All comparisons are exact.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};

use wsurg_core::catalog::{builtin as builtin_catalog, Catalog};
use wsurg_core::combinatorics::{
    forward_coefficient, reduction_coefficient, u_sequence, verify_inverse_matrix,
};
use wsurg_core::engine::{Engine, FTag, InvariantKey, VanishingPolicy};
use wsurg_core::lattice::{ClassVec, IntersectionLattice, InvolutionAction, Mod2Class};
use wsurg_core::matrix::{Gf2Mat, IntMat};
use wsurg_core::oracle;
use wsurg_core::registry::{builtin_registry, closed_form_conic};
use wsurg_core::surfaces::{RealComponent, SurfaceModel, Topo};
use wsurg_core::Error;

fn engine() -> Engine {
    let cat = Arc::new(builtin_catalog());
    let reg = Arc::new(builtin_registry(&cat));
    Engine::new(cat, reg, VanishingPolicy::default())
}

fn key(e: &Engine, surface: &str, l: &[&str], f: FTag, class: &str, s: u32) -> InvariantKey {
    let model = e.catalog().get(surface).unwrap();
    InvariantKey::new(surface, l, f, model.parse_class(class).unwrap(), s)
}

fn rest_of(e: &Engine, surface: &str, l: &str) -> FTag {
    let model = e.catalog().get(surface).unwrap();
    FTag::Components(
        model.components.iter().map(|c| c.label.clone()).filter(|x| x != l).collect(),
    )
}

fn finish(name: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "{name} took {elapsed:?}, over the {budget:?} budget"
    );
    println!("acceptance {name}: pass ({elapsed:?})");
}

/// Criterion 1: exact identity suite — the relation matrix times its claimed
/// inverse is the identity for all m ≤ 8, K ≤ 10; the telescoping sequence is
/// i + 1 up to i = 30; and on 1000 random finite tails of depth ≤ 10 the
/// forward relation composed with the inverted relation is the identity.
#[test]
fn criterion_1_identity_suite() {
    let start = Instant::now();
    for m in 0..=8 {
        for k in 1..=10 {
            assert!(verify_inverse_matrix(m, k), "matrix inverse fails at m={m} K={k}");
        }
    }
    for i in 0..=30u32 {
        assert_eq!(u_sequence(i), BigInt::from(i + 1), "u_{i}");
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    for trial in 0..1000 {
        let m = rng.gen_range(0..=8i64);
        let depth = rng.gen_range(1..=10usize);
        let tail: Vec<BigInt> =
            (0..depth).map(|_| BigInt::from(rng.gen_range(-100..=100i64))).collect();
        let w = |j: usize| -> BigInt {
            if j < depth {
                tail[j].clone()
            } else {
                BigInt::zero()
            }
        };
        // forward relation at shifted depth j: pairing grows by 2 per step
        let forward = |j: usize| -> BigInt {
            let mut acc = BigInt::zero();
            for k in 0..depth.saturating_sub(j) {
                acc += forward_coefficient(m + 2 * j as i64, k as i64) * w(j + k);
            }
            acc
        };
        let mut recovered = BigInt::zero();
        for k in 0..depth {
            recovered += reduction_coefficient(m, k as i64) * forward(k);
        }
        assert_eq!(recovered, tail[0], "trial {trial}: m={m} depth={depth}");
    }
    finish("criterion 1 (identity suite)", start, Duration::from_secs(5));
}

/// Criterion 2: the two-component cubic. The engine derives the rows 4-s and
/// -s on the anticanonical class and the double-anticanonical table
/// (160, 64, 24) / (0, 0, 24) from the six registry base rows. The s range of
/// the anticanonical rows stops at s = 1: at s = 2 the key has r = -2, which
/// key validation must reject (criterion 7 pins that behaviour; the table
/// rows carry all three s values).
#[test]
fn criterion_2_cubic_reproduction() {
    let start = Instant::now();
    let e = engine();
    let twisted = FTag::Components(BTreeSet::from(["S".to_string()]));
    // derived rows must not be registry entries
    for (f, class) in [
        (FTag::Zero, "c1"),
        (FTag::Zero, "2*c1"),
        (twisted.clone(), "c1"),
        (twisted.clone(), "2*c1"),
    ] {
        let probe = key(&e, "cubic-Y", &["RP2"], f, class, 0);
        assert!(
            e.registry().lookup(e.catalog(), &probe).is_none(),
            "derived cubic rows must be engine-computed, not stored"
        );
    }
    for s in 0..=1u32 {
        let zero_row = e.compute(&key(&e, "cubic-Y", &["RP2"], FTag::Zero, "c1", s)).unwrap();
        assert_eq!(zero_row.value, BigInt::from(4 - s as i64), "plain row s={s}");
        let tw_row = e.compute(&key(&e, "cubic-Y", &["RP2"], twisted.clone(), "c1", s)).unwrap();
        assert_eq!(tw_row.value, BigInt::from(-(s as i64)), "twisted row s={s}");
    }
    for (s, plain, tw) in [(0u32, 160i64, 0i64), (1, 64, 0), (2, 24, 24)] {
        let zero_row = e.compute(&key(&e, "cubic-Y", &["RP2"], FTag::Zero, "2*c1", s)).unwrap();
        assert_eq!(zero_row.value, BigInt::from(plain), "plain 2c1 row s={s}");
        assert!(zero_row.replays_consistently());
        let tw_row = e.compute(&key(&e, "cubic-Y", &["RP2"], twisted.clone(), "2*c1", s)).unwrap();
        assert_eq!(tw_row.value, BigInt::from(tw), "twisted 2c1 row s={s}");
    }
    // the s = 2 anticanonical key exceeds the constraint budget
    let over = key(&e, "cubic-Y", &["RP2"], FTag::Zero, "c1", 2);
    assert!(matches!(e.compute(&over), Err(Error::Validation(_))));
    finish("criterion 2 (cubic reproduction)", start, Duration::from_secs(1));
}

/// Criterion 3: the conic-bundle grid. For 2 ≤ n ≤ 5, n-3 ≤ b ≤ 6,
/// 0 ≤ s ≤ b-n+3 the engine recursion agrees cell by cell with the closed
/// form, for both the zero weight and the full complementary weight.
#[test]
fn criterion_3_conic_reproduction() {
    let start = Instant::now();
    let e = engine();
    let mut cells = 0u32;
    for n in 2..=5u32 {
        let id = format!("X{n}");
        let full = rest_of(&e, &id, "S1");
        let model = e.catalog().get(&id).unwrap().clone();
        let fiber = model.parse_class("F").unwrap();
        for b in (n as i64 - 3)..=6 {
            let class = model.c1.add(&fiber.scale_i64(b));
            for s in 0..=(b - n as i64 + 3) {
                let zero_key =
                    InvariantKey::new(&id, &["S1"], FTag::Zero, class.clone(), s as u32);
                let got = e.compute(&zero_key).unwrap();
                let want = closed_form_conic(n, b, s, false).unwrap();
                assert_eq!(got.value, want, "n={n} b={b} s={s} zero weight");
                let full_key =
                    InvariantKey::new(&id, &["S1"], full.clone(), class.clone(), s as u32);
                let got = e.compute(&full_key).unwrap();
                let want = closed_form_conic(n, b, s, true).unwrap();
                assert_eq!(got.value, want, "n={n} b={b} s={s} full weight");
                cells += 2;
            }
        }
    }
    assert!(cells >= 200, "grid covered {cells} cells");
    finish("criterion 3 (conic bundles)", start, Duration::from_secs(5));
}

/// Criterion 4: the degree-1 chain produces 30, 18, 10, 6, 6, 6, 6, with the
/// middle model computed consistently through all three of its arrows.
#[test]
fn criterion_4_degree_one_chain() {
    let start = Instant::now();
    let e = engine();
    let expected: [(&str, &str, i64); 7] = [
        ("Y5", "P", 30),
        ("Y4", "P", 18),
        ("Y3", "P", 10),
        ("Y2", "P", 6),
        ("Y1", "P", 6),
        ("Y1p", "S", 6),
        ("Y1pp", "P", 6),
    ];
    for (id, l, want) in expected {
        let k = key(&e, id, &[l], rest_of(&e, id, l), "2*c1", 0);
        let got = e.compute(&k).unwrap();
        assert_eq!(got.value, BigInt::from(want), "{id}");
        assert!(got.replays_consistently(), "{id} provenance replay");
    }
    // route-by-route consistency for the middle model
    let via_y1 = e
        .compute_via(&key(&e, "Y2", &["P"], rest_of(&e, "Y2", "P"), "2*c1", 0), "Y1", None)
        .unwrap();
    assert_eq!(via_y1.value, BigInt::from(6));
    let via_y1p = e
        .compute_via(&key(&e, "Y2", &["S"], rest_of(&e, "Y2", "S"), "2*c1", 0), "Y1p", None)
        .unwrap();
    assert_eq!(via_y1p.value, BigInt::from(6));
    let via_y1pp = e
        .compute_via(
            &key(&e, "Y2-alt", &["P"], rest_of(&e, "Y2-alt", "P"), "2*c1", 0),
            "Y1pp",
            None,
        )
        .unwrap();
    assert_eq!(via_y1pp.value, BigInt::from(6));
    finish("criterion 4 (degree-1 chain)", start, Duration::from_secs(1));
}

/// Criterion 5: structural suite over every catalog surgery record — the
/// sphere class squares to -2 and has degree 0, the real Euler characteristic
/// jumps by exactly 2, the source involution is the target one composed with
/// the reflection, the anti-invariant lattices drop rank by one across the
/// record with the small-side one orthogonal to the sphere, and the mod-2
/// invariant lattices agree inside the sphere's orthogonal complement.
#[test]
fn criterion_5_structural_suite() {
    let start = Instant::now();
    let cat = builtin_catalog();
    assert!(!cat.surgeries().is_empty());
    for rec in cat.surgeries() {
        let ctx = format!("record {} -> {}", rec.source, rec.target);
        let source = cat.get(&rec.source).unwrap();
        let target = cat.get(&rec.target).unwrap();
        let lat = &target.lattice;
        assert_eq!(lat.self_pairing(&rec.sphere).unwrap(), BigInt::from(-2), "{ctx}: square");
        assert!(target.c1_degree(&rec.sphere).unwrap().is_zero(), "{ctx}: degree");
        assert_eq!(source.euler_char(), target.euler_char() + 2, "{ctx}: Euler jump");
        // involution relation and involutivity
        let refl = lat.reflection_matrix(&rec.sphere).unwrap();
        let composed = target.involution.matrix().mul(&refl);
        assert_eq!(&composed, source.involution.matrix(), "{ctx}: composed involution");
        assert!(composed.mul(&composed).is_identity(), "{ctx}: involutive");
        let g = lat.gram();
        assert_eq!(&composed.transpose().mul(g).mul(&composed), g, "{ctx}: isometry");
        // sphere class sides
        assert!(target.involution.is_anti_invariant(&rec.sphere), "{ctx}: anti on target");
        assert!(source.involution.is_invariant(&rec.sphere), "{ctx}: invariant on source");
        // eigenlattice ranks and orthogonality
        let anti_target = target.involution.eigenlattice(-1);
        let anti_source = source.involution.eigenlattice(-1);
        assert_eq!(anti_target.len(), anti_source.len() + 1, "{ctx}: rank drop");
        for v in &anti_source {
            assert!(lat.pair(v, &rec.sphere).unwrap().is_zero(), "{ctx}: orthogonality");
        }
        let span = IntMat::from_rows(anti_target.iter().map(|v| v.coords.clone()).collect());
        assert!(span.rowspan_contains(&rec.sphere.coords), "{ctx}: sphere in the big side");
        // anticanonical class anti-invariant on both sides
        assert!(target.involution.is_anti_invariant(&target.c1), "{ctx}: c1 anti (target)");
        assert!(source.involution.is_anti_invariant(&source.c1), "{ctx}: c1 anti (source)");
        // mod-2: invariant classes orthogonal to the sphere agree across the record
        let rank = lat.rank();
        let to_gf2_plus_identity = |inv: &InvolutionAction| {
            let mut m = inv.matrix().clone();
            for i in 0..rank {
                m[(i, i)] -= BigInt::from(1);
            }
            Gf2Mat::from_int_mat_mod2(&m)
        };
        let sphere_row = {
            let mut rows = Gf2Mat::new(rank);
            let gs = lat.gram().mul_vec(&rec.sphere.coords);
            let mut bits = 0u64;
            for (j, v) in gs.iter().enumerate() {
                if (v % BigInt::from(2)).abs() == BigInt::from(1) {
                    bits |= 1 << j;
                }
            }
            rows.push_row(bits);
            rows
        };
        let cut = |inv: &InvolutionAction| {
            let mut sys = to_gf2_plus_identity(inv);
            for row in &sphere_row.rows {
                sys.push_row(*row);
            }
            let kernel = sys.kernel_basis();
            let mut space = Gf2Mat::new(rank);
            for v in kernel {
                space.push_row(v);
            }
            space.rref()
        };
        assert_eq!(
            cut(&target.involution),
            cut(&source.involution),
            "{ctx}: mod-2 invariants in the sphere's orthogonal complement"
        );
    }
    // the printed anti-invariant lattices of the degree-1 chain
    let anti_description: [(&str, &[&str]); 8] = [
        ("Y1", &["c1", "F", "Et1", "Et2", "Et3"]),
        ("Y1p", &["c1", "F", "Et1", "Et2", "Et3"]),
        ("Y1pp", &["c1", "F", "Et1", "Et2+Et3", "Et4+Et5"]),
        ("Y2", &["c1", "F", "Et1", "F+Et2-Et3"]),
        ("Y2-alt", &["c1", "F", "Et1", "Et2+Et3"]),
        ("Y3", &["c1", "F", "Et1"]),
        ("Y4", &["c1", "Et1"]),
        ("Y5", &["c1"]),
    ];
    for (id, gens) in anti_description {
        let model = cat.get(id).unwrap();
        let computed = model.involution.eigenlattice(-1);
        assert_eq!(computed.len(), gens.len(), "{id}: anti rank");
        let computed_mat =
            IntMat::from_rows(computed.iter().map(|v| v.coords.clone()).collect());
        let stated = IntMat::from_rows(
            gens.iter().map(|g| model.parse_class(g).unwrap().coords).collect(),
        );
        assert!(
            wsurg_core::matrix::same_rowspan(&computed_mat, &stated),
            "{id}: anti-invariant lattice matches the stated generators"
        );
    }
    finish("criterion 5 (structural suite)", start, Duration::from_secs(1));
}

/// Criterion 6: oracle suite. Floor-diagram complex totals equal the
/// recursion values for every degree up to 5; the totally-real counts hit the
/// anchors at degrees 1-3; and for every computed degree the real count is
/// bounded by and has the parity of the complex one.
#[test]
fn criterion_6_oracle_suite() {
    let start = Instant::now();
    for d in 1..=5u32 {
        let n = oracle::kontsevich_nd(d);
        let complex = oracle::complex_total(d, None).unwrap();
        assert_eq!(complex, n, "degree {d} complex totals");
        let w = oracle::welschinger_s0(d, None).unwrap();
        assert!(w.abs() <= n, "degree {d} bound");
        assert_eq!((&w - &n) % BigInt::from(2), BigInt::zero(), "degree {d} parity");
    }
    assert_eq!(oracle::welschinger_s0(1, None).unwrap(), BigInt::from(1));
    assert_eq!(oracle::welschinger_s0(2, None).unwrap(), BigInt::from(1));
    assert_eq!(oracle::welschinger_s0(3, None).unwrap(), BigInt::from(8));
    // the plane leaf in the registry agrees with the oracle
    let e = engine();
    let line = key(&e, "cp2", &["RP2"], FTag::Zero, "D", 0);
    assert_eq!(e.compute(&line).unwrap().value, oracle::welschinger_s0(1, None).unwrap());
    finish("criterion 6 (oracle suite)", start, Duration::from_secs(60));
}

/// Criterion 7: the invariance statements themselves live beyond desk scale;
/// what is checked instead is that key validation enforces their hypotheses —
/// the genus-1 degree exclusion, rejection of negative constraint budgets,
/// and the point-parity condition whenever parity data is present.
#[test]
fn criterion_7_key_validation() {
    let start = Instant::now();
    let e = engine();
    // genus-1 exclusion triggers on degree 2 (and degree 0)
    let deg2 = key(&e, "cubic-Y", &["RP2", "S"], FTag::Zero, "2D-E1-E2-E3-E4", 0);
    assert!(matches!(e.compute(&deg2), Err(Error::Validation(_))));
    let x1 = e.catalog().get("X1").unwrap();
    assert!(x1.c1_degree(&x1.parse_class("F-E1-E2").unwrap()).unwrap().is_zero());
    // degree-3 genus-1 keys pass validation
    let ok = key(&e, "cubic-Y", &["RP2", "S"], FTag::Zero, "c1", 1);
    assert!(e.validate_key(&ok).is_ok());
    // r < 0 rejected
    let over = key(&e, "cubic-Y", &["RP2"], FTag::Zero, "c1", 2);
    let err = e.validate_key(&over).unwrap_err();
    assert!(err.to_string().contains("negative"), "{err}");
    // parity condition enforced when parity data is present
    let mut cat = Catalog::new();
    let lattice = IntersectionLattice::new(
        vec!["D".into()],
        IntMat::from_i64_rows(&[vec![1]]),
    )
    .unwrap();
    let inv = InvolutionAction::new(&lattice, IntMat::from_i64_rows(&[vec![-1]])).unwrap();
    let comp = |label: &str, parity: Option<Vec<bool>>| RealComponent {
        label: label.into(),
        topo: Topo::Rp2 { k: 0 },
        mod2_class: None,
        parity_data: parity.map(|bits| Mod2Class { bits }),
    };
    let model = SurfaceModel::new(
        "parity-probe",
        lattice,
        ClassVec::from_i64(&[3]),
        inv,
        vec![comp("A", Some(vec![false])), comp("B", Some(vec![false])), comp("C", None)],
    )
    .unwrap();
    cat.insert(model).unwrap();
    let reg = wsurg_core::registry::Registry::default();
    let probe = Engine::new(Arc::new(cat), Arc::new(reg), VanishingPolicy::default());
    let d = ClassVec::from_i64(&[1]);
    // r = 3: both components demand an odd point count, leaving an odd
    // remainder after the forced minimum of 2 -> unsatisfiable
    let bad = InvariantKey::new("parity-probe", &["A", "B"], FTag::Zero, d.clone(), 0);
    let err = probe.validate_key(&bad).unwrap_err();
    assert!(err.to_string().contains("parity"), "{err}");
    // d = 2D gives r = 6: the remainder is even, so the key validates
    let good = InvariantKey::new("parity-probe", &["A", "B"], FTag::Zero, d.scale_i64(2), 0);
    assert!(probe.validate_key(&good).is_ok());
    // missing parity data on a non-sphere component is an explicit error
    let missing = InvariantKey::new("parity-probe", &["A", "C"], FTag::Zero, d, 0);
    assert!(matches!(probe.validate_key(&missing), Err(Error::InsufficientData(_))));
    finish("criterion 7 (key validation)", start, Duration::from_secs(1));
}
