//! Real surface models: an intersection lattice with an involution, plus the
//! topology of the real point set as a list of named components.
//!
//! Two constructors change a model: blowing up (real points and conjugate
//! pairs) and surgery along a Lagrangian sphere class. Surgery composes the
//! involution with the (-2)-reflection in the sphere class and rewrites the
//! real part: an empty real locus contributes a fresh sphere component, a
//! circle locus cuts its component and caps the two boundary circles.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::lattice::{ClassVec, IntersectionLattice, InvolutionAction, Mod2Class};
use crate::matrix::IntMat;
use crate::{Error, Result};

pub type Label = String;

/// Homeomorphism type of one connected component of the real part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topo {
    Sphere,
    /// Projective plane blown up at k real points: k+1 cross-caps, χ = 1 - k.
    Rp2 { k: u32 },
    OrientableGenus { g: u32 },
    /// Klein bottle with k extra cross-caps, χ = -k. Unused by the built-in
    /// catalog; accepted in user files for completeness.
    KleinLike { k: u32 },
}

impl Topo {
    pub fn chi(&self) -> i64 {
        match self {
            Topo::Sphere => 2,
            Topo::Rp2 { k } => 1 - *k as i64,
            Topo::OrientableGenus { g } => 2 - 2 * *g as i64,
            Topo::KleinLike { k } => -(*k as i64),
        }
    }

    /// Effect of a real blow-up at a point of the component.
    pub fn add_crosscap(&self) -> Result<Topo> {
        Ok(match self {
            Topo::Sphere => Topo::Rp2 { k: 0 },
            Topo::Rp2 { k } => Topo::Rp2 { k: k + 1 },
            Topo::OrientableGenus { g } => Topo::Rp2 { k: 2 * g },
            Topo::KleinLike { k } => Topo::Rp2 { k: k + 1 },
        })
    }

    /// Cut along a two-sided non-separating circle and cap both boundary
    /// circles with disks (χ goes up by 2).
    pub fn cut_nonseparating(&self) -> Result<Topo> {
        match self {
            Topo::Sphere => Err(Error::Validation(
                "a sphere has no non-separating circle to cut".into(),
            )),
            Topo::Rp2 { k: 0 } => Err(Error::Validation(
                "every two-sided circle in the projective plane bounds".into(),
            )),
            Topo::Rp2 { k: 1 } => Ok(Topo::Sphere),
            Topo::Rp2 { k } => Ok(Topo::Rp2 { k: k - 2 }),
            Topo::OrientableGenus { g: 0 } => Err(Error::Validation(
                "a sphere has no non-separating circle to cut".into(),
            )),
            Topo::OrientableGenus { g: 1 } => Ok(Topo::Sphere),
            Topo::OrientableGenus { g } => Ok(Topo::OrientableGenus { g: g - 1 }),
            Topo::KleinLike { .. } => Err(Error::Validation(
                "cut outcome for this component type must be named explicitly".into(),
            )),
        }
    }

    pub fn parse(s: &str) -> Result<Topo> {
        if s == "sphere" {
            return Ok(Topo::Sphere);
        }
        for (prefix, make) in [
            ("rp2_", Box::new(|k| Topo::Rp2 { k }) as Box<dyn Fn(u32) -> Topo>),
            ("orientable_genus_", Box::new(|g| Topo::OrientableGenus { g })),
            ("klein_like_", Box::new(|k| Topo::KleinLike { k })),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let n: u32 = rest
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad topology descriptor `{s}`")))?;
                return Ok(make(n));
            }
        }
        Err(Error::Parse(format!("unknown topology descriptor `{s}`")))
    }

    pub fn descriptor(&self) -> String {
        match self {
            Topo::Sphere => "sphere".into(),
            Topo::Rp2 { k } => format!("rp2_{k}"),
            Topo::OrientableGenus { g } => format!("orientable_genus_{g}"),
            Topo::KleinLike { k } => format!("klein_like_{k}"),
        }
    }
}

/// One connected component of the real part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealComponent {
    pub label: Label,
    pub topo: Topo,
    /// Class of the component in H₂(X; ℤ/2), when the catalog knows it.
    /// Spheres produced by empty-locus surgery carry the surgery class;
    /// non-sphere components usually carry nothing.
    pub mod2_class: Option<Mod2Class>,
    /// Functional p with p·(d mod 2) = square of the trace class of d on this
    /// component. Spheres need no data (their trace class is always zero).
    pub parity_data: Option<Mod2Class>,
}

impl RealComponent {
    pub fn chi(&self) -> i64 {
        self.topo.chi()
    }

    /// Square (mod 2) of the class traced on this component by a class d.
    pub fn trace_square(&self, d: &Mod2Class) -> Result<u8> {
        if matches!(self.topo, Topo::Sphere) {
            return Ok(0);
        }
        match &self.parity_data {
            Some(p) => Ok(p.dot(d)),
            None => Err(Error::InsufficientData(format!(
                "component {} has no parity data",
                self.label
            ))),
        }
    }
}

/// Real locus of a Lagrangian sphere class, relative to a fixed model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereLocus {
    Empty,
    CircleOn { component: Label },
}

/// A class realizable by a real Lagrangian sphere: square -2, degree 0,
/// anti-invariant, with a prescribed real locus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereSpec {
    pub cls: ClassVec,
    pub locus: SphereLocus,
}

/// Algebraic model of a real rational surface.
#[derive(Clone, Debug)]
pub struct SurfaceModel {
    pub id: String,
    pub lattice: IntersectionLattice,
    pub c1: ClassVec,
    pub involution: InvolutionAction,
    pub components: Vec<RealComponent>,
    /// Classes for which the sign-twist rewriting of the mod-2 weight is
    /// asserted applicable. Catalog data, never inferred.
    pub twistable: Vec<ClassVec>,
    /// Declared Lagrangian sphere classes on this surface.
    pub spheres: Vec<SphereSpec>,
    /// Extra parse-time names for classes (`F` for the fiber, etc.).
    /// `c1` is always available without being listed here.
    pub aliases: BTreeMap<String, ClassVec>,
}

impl SurfaceModel {
    pub fn new(
        id: &str,
        lattice: IntersectionLattice,
        c1: ClassVec,
        involution: InvolutionAction,
        components: Vec<RealComponent>,
    ) -> Result<Self> {
        let model = SurfaceModel {
            id: id.to_string(),
            lattice,
            c1,
            involution,
            components,
            twistable: Vec::new(),
            spheres: Vec::new(),
            aliases: BTreeMap::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.involution.is_anti_invariant(&self.c1) {
            return Err(Error::Validation(format!(
                "{}: the anticanonical class must be anti-invariant",
                self.id
            )));
        }
        let mut seen = BTreeSet::new();
        for c in &self.components {
            if !seen.insert(c.label.clone()) {
                return Err(Error::Validation(format!(
                    "{}: duplicate component label {}",
                    self.id, c.label
                )));
            }
            if let Some(m) = &c.mod2_class {
                if m.bits.len() != self.lattice.rank() {
                    return Err(Error::Validation(format!(
                        "{}: component {} mod-2 class has wrong length",
                        self.id, c.label
                    )));
                }
            }
            if let Some(p) = &c.parity_data {
                if p.bits.len() != self.lattice.rank() {
                    return Err(Error::Validation(format!(
                        "{}: component {} parity data has wrong length",
                        self.id, c.label
                    )));
                }
            }
        }
        for t in &self.twistable {
            if t.coords.len() != self.lattice.rank() {
                return Err(Error::Validation(format!("{}: twistable class length", self.id)));
            }
        }
        for s in &self.spheres {
            self.check_sphere(s)?;
        }
        Ok(())
    }

    pub fn component(&self, label: &str) -> Result<&RealComponent> {
        self.components
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::Validation(format!("{}: no component named {label}", self.id)))
    }

    pub fn has_component(&self, label: &str) -> bool {
        self.components.iter().any(|c| c.label == label)
    }

    pub fn component_labels(&self) -> BTreeSet<Label> {
        self.components.iter().map(|c| c.label.clone()).collect()
    }

    /// Euler characteristic of the real part (0 when the real part is empty).
    pub fn euler_char(&self) -> i64 {
        self.components.iter().map(|c| c.chi()).sum()
    }

    pub fn c1_degree(&self, d: &ClassVec) -> Result<BigInt> {
        self.lattice.pair(&self.c1, d)
    }

    pub fn adjunction_defect(&self, d: &ClassVec, genus: u32) -> Result<BigInt> {
        crate::lattice::adjunction_defect(&self.lattice, &self.c1, d, genus)
    }

    /// Anticanonical degree squared; 1 for the minimal chain of degree-1
    /// del Pezzo models.
    pub fn degree(&self) -> Result<BigInt> {
        self.lattice.self_pairing(&self.c1)
    }

    pub fn parse_class(&self, input: &str) -> Result<ClassVec> {
        let mut aliases = self.aliases.clone();
        aliases.insert("c1".to_string(), self.c1.clone());
        self.lattice.parse_class(input, &aliases)
    }

    pub fn is_twistable(&self, t: &ClassVec) -> bool {
        self.twistable.iter().any(|x| x == t || *x == t.neg())
    }

    fn check_sphere(&self, spec: &SphereSpec) -> Result<()> {
        if self.lattice.self_pairing(&spec.cls)? != BigInt::from(-2) {
            return Err(Error::Validation(format!(
                "{}: sphere class must have square -2",
                self.id
            )));
        }
        if !self.c1_degree(&spec.cls)?.is_zero() {
            return Err(Error::Validation(format!(
                "{}: sphere class must have degree 0",
                self.id
            )));
        }
        if !self.involution.is_anti_invariant(&spec.cls) {
            return Err(Error::Validation(format!(
                "{}: sphere class must be anti-invariant",
                self.id
            )));
        }
        if let SphereLocus::CircleOn { component } = &spec.locus {
            self.component(component)?;
        }
        Ok(())
    }

    /// Mod-2 parity condition on the distribution of real point constraints:
    /// trivially true in genus 0, otherwise each chosen component must carry
    /// a point count of the parity fixed by the trace class of d.
    pub fn parity_check(
        &self,
        l: &BTreeSet<Label>,
        d: &ClassVec,
        point_counts: &BTreeMap<Label, u64>,
    ) -> Result<bool> {
        if l.len() <= 1 {
            return Ok(true);
        }
        let d2 = d.mod2();
        for label in l {
            let comp = self.component(label)?;
            let want = (comp.trace_square(&d2)? + 1) % 2;
            let have = (point_counts.get(label).copied().unwrap_or(0) % 2) as u8;
            if have != want {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether r real points can be distributed over the components of `l`
    /// with the parities the condition demands.
    pub fn parity_satisfiable(&self, l: &BTreeSet<Label>, d: &ClassVec, r: u64) -> Result<bool> {
        if l.len() <= 1 {
            return Ok(true);
        }
        let d2 = d.mod2();
        let mut min_total = 0u64;
        for label in l {
            let comp = self.component(label)?;
            min_total += ((comp.trace_square(&d2)? + 1) % 2) as u64;
        }
        Ok(r >= min_total && (r - min_total) % 2 == 0)
    }

    fn rename_component(&mut self, from: &str, to: &str) -> Result<()> {
        if self.has_component(to) {
            return Err(Error::Validation(format!("component {to} already exists")));
        }
        let comp = self
            .components
            .iter_mut()
            .find(|c| c.label == from)
            .ok_or_else(|| Error::Validation(format!("no component named {from}")))?;
        comp.label = to.to_string();
        Ok(())
    }
}

/// Where a blow-up centre sits.
#[derive(Clone, Debug)]
pub enum BlowupCenter {
    RealPoint { on: Label, exceptional: String },
    ConjPair { exceptional: (String, String) },
}

/// One exceptional step of a blow-up record, indexed into the child basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupStep {
    RealPoint { index: usize, on: Label },
    ConjPair { a: usize, b: usize },
}

/// Child = parent blown up at the recorded centres.
#[derive(Clone, Debug)]
pub struct BlowupRecord {
    pub child: String,
    pub parent: String,
    pub steps: Vec<BlowupStep>,
}

/// How the real part changes across a surgery record.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurgeryOutcome {
    /// The sphere had empty real locus on the target; the source gains a
    /// sphere component.
    NewComponent { label: Label },
    /// The circle locus cut one target component into one source component.
    CutComponent { target: Label, source: Label },
    /// Separating cut: one target component became two source components.
    SplitComponent { target: Label, sources: (Label, Label) },
}

/// Directed surgery relation between two catalog models sharing a lattice.
/// The source has real Euler characteristic two more than the target; the
/// sphere class is anti-invariant on the target and invariant on the source.
#[derive(Clone, Debug)]
pub struct SurgeryRecord {
    pub source: String,
    pub target: String,
    pub sphere: ClassVec,
    pub locus: SphereLocus,
    pub outcome: SurgeryOutcome,
    /// Mod-2 pairing of each source component class with the sphere class.
    /// Computed from the component class when known, otherwise asserted from
    /// the catalog geometry (components disjoint from the sphere pair to 0;
    /// a transverse two-point intersection also pairs to 0).
    pub source_pairings: BTreeMap<Label, u8>,
    /// Same for target components.
    pub target_pairings: BTreeMap<Label, u8>,
}

impl SurgeryRecord {
    /// Label of the source component the sphere class is tied to.
    pub fn source_side_component(&self) -> Option<&Label> {
        match &self.outcome {
            SurgeryOutcome::NewComponent { label } => Some(label),
            SurgeryOutcome::CutComponent { source, .. } => Some(source),
            SurgeryOutcome::SplitComponent { .. } => None,
        }
    }
}

/// Requested real-part rewriting for a surgery.
#[derive(Clone, Debug)]
pub enum SurgeryShape {
    NewSphere { label: Label },
    CutNonSeparating { component: Label, relabel: Option<Label> },
    CutSeparating { component: Label, pieces: [(Label, Topo); 2] },
}

fn pairing_with_sphere(
    lattice: &IntersectionLattice,
    comp: &RealComponent,
    sphere2: &Mod2Class,
) -> u8 {
    match &comp.mod2_class {
        Some(m) => lattice.pair_mod2(m, sphere2).unwrap_or(0),
        // no recorded class: the catalog geometry pins the pairing to 0
        None => 0,
    }
}

/// Blow up a model at real points and conjugate pairs.
///
/// Real points add one exceptional class E with E² = -1 and τE = -E, and put
/// a cross-cap on the component carrying the point. Conjugate pairs add two
/// classes swapped with a sign by the involution and leave the real part
/// unchanged. The anticanonical class loses every new exceptional class.
pub fn blowup(
    model: &SurfaceModel,
    new_id: &str,
    centers: &[BlowupCenter],
) -> Result<(SurfaceModel, BlowupRecord)> {
    let old_rank = model.lattice.rank();
    let mut labels = model.lattice.basis_labels().to_vec();
    let mut steps = Vec::new();
    for c in centers {
        match c {
            BlowupCenter::RealPoint { on, exceptional } => {
                model.component(on)?;
                steps.push(BlowupStep::RealPoint { index: labels.len(), on: on.clone() });
                labels.push(exceptional.clone());
            }
            BlowupCenter::ConjPair { exceptional } => {
                steps.push(BlowupStep::ConjPair { a: labels.len(), b: labels.len() + 1 });
                labels.push(exceptional.0.clone());
                labels.push(exceptional.1.clone());
            }
        }
    }
    let rank = labels.len();
    let mut gram = IntMat::new(rank, rank);
    for i in 0..old_rank {
        for j in 0..old_rank {
            gram[(i, j)] = model.lattice.gram()[(i, j)].clone();
        }
    }
    for i in old_rank..rank {
        gram[(i, i)] = BigInt::from(-1);
    }
    let lattice = IntersectionLattice::new(labels, gram)?;

    let mut tau = IntMat::new(rank, rank);
    for i in 0..old_rank {
        for j in 0..old_rank {
            tau[(i, j)] = model.involution.matrix()[(i, j)].clone();
        }
    }
    for step in &steps {
        match step {
            BlowupStep::RealPoint { index, .. } => tau[(*index, *index)] = BigInt::from(-1),
            BlowupStep::ConjPair { a, b } => {
                tau[(*b, *a)] = BigInt::from(-1);
                tau[(*a, *b)] = BigInt::from(-1);
            }
        }
    }
    let involution = InvolutionAction::new(&lattice, tau)?;

    let extend = |v: &ClassVec, fill: i64| -> ClassVec {
        let mut coords = v.coords.clone();
        coords.resize(rank, BigInt::zero());
        for c in coords.iter_mut().skip(old_rank) {
            *c = BigInt::from(fill);
        }
        coords[..old_rank].clone_from_slice(&v.coords);
        ClassVec::new(coords)
    };
    let c1 = extend(&model.c1, -1);

    let extend_mod2 = |m: &Mod2Class| -> Mod2Class {
        let mut bits = m.bits.clone();
        bits.resize(rank, false);
        Mod2Class { bits }
    };

    let mut components: Vec<RealComponent> = model
        .components
        .iter()
        .map(|c| RealComponent {
            label: c.label.clone(),
            topo: c.topo.clone(),
            mod2_class: c.mod2_class.as_ref().map(extend_mod2),
            parity_data: c.parity_data.as_ref().map(extend_mod2),
        })
        .collect();
    for step in &steps {
        if let BlowupStep::RealPoint { on, .. } = step {
            let comp = components
                .iter_mut()
                .find(|c| c.label == *on)
                .expect("component existence checked above");
            comp.topo = comp.topo.add_crosscap()?;
            // the point changes both the component class and its first
            // homology; drop data rather than guess
            comp.mod2_class = None;
            comp.parity_data = None;
        }
    }

    let mut new_model = SurfaceModel::new(new_id, lattice, c1, involution, components)?;
    new_model.twistable = model.twistable.iter().map(|t| extend(t, 0)).collect();
    new_model.aliases =
        model.aliases.iter().map(|(k, v)| (k.clone(), extend(v, 0))).collect();
    let record =
        BlowupRecord { child: new_id.to_string(), parent: model.id.clone(), steps };
    Ok((new_model, record))
}

/// Surgery along a Lagrangian sphere class. The input model is the small
/// side (the class is anti-invariant there); the result gains 2 in real
/// Euler characteristic and carries the composed involution.
pub fn surgery(
    model: &SurfaceModel,
    sphere: &ClassVec,
    shape: &SurgeryShape,
    new_id: &str,
) -> Result<(SurfaceModel, SurgeryRecord)> {
    let locus = match shape {
        SurgeryShape::NewSphere { .. } => SphereLocus::Empty,
        SurgeryShape::CutNonSeparating { component, .. }
        | SurgeryShape::CutSeparating { component, .. } => {
            SphereLocus::CircleOn { component: component.clone() }
        }
    };
    model.check_sphere(&SphereSpec { cls: sphere.clone(), locus: locus.clone() })?;

    let involution = model.involution.compose_reflection(&model.lattice, sphere)?;
    let mut components = model.components.clone();
    let outcome;
    match shape {
        SurgeryShape::NewSphere { label } => {
            if model.has_component(label) {
                return Err(Error::Validation(format!(
                    "{}: component {label} already exists",
                    model.id
                )));
            }
            components.push(RealComponent {
                label: label.clone(),
                topo: Topo::Sphere,
                mod2_class: Some(sphere.mod2()),
                parity_data: None,
            });
            outcome = SurgeryOutcome::NewComponent { label: label.clone() };
        }
        SurgeryShape::CutNonSeparating { component, relabel } => {
            let comp = components
                .iter_mut()
                .find(|c| c.label == *component)
                .ok_or_else(|| {
                    Error::Validation(format!("{}: no component named {component}", model.id))
                })?;
            comp.topo = comp.topo.cut_nonseparating()?;
            comp.mod2_class = None;
            comp.parity_data = None;
            let source_label = relabel.clone().unwrap_or_else(|| component.clone());
            comp.label = source_label.clone();
            outcome =
                SurgeryOutcome::CutComponent { target: component.clone(), source: source_label };
        }
        SurgeryShape::CutSeparating { component, pieces } => {
            let pos = components
                .iter()
                .position(|c| c.label == *component)
                .ok_or_else(|| {
                    Error::Validation(format!("{}: no component named {component}", model.id))
                })?;
            let old_chi = components[pos].chi();
            let new_chi = pieces[0].1.chi() + pieces[1].1.chi();
            if new_chi != old_chi + 2 {
                return Err(Error::Validation(format!(
                    "{}: separating cut pieces have χ {new_chi}, expected {}",
                    model.id,
                    old_chi + 2
                )));
            }
            components.remove(pos);
            for (label, topo) in pieces.iter() {
                components.push(RealComponent {
                    label: label.clone(),
                    topo: topo.clone(),
                    mod2_class: None,
                    parity_data: None,
                });
            }
            outcome = SurgeryOutcome::SplitComponent {
                target: component.clone(),
                sources: (pieces[0].0.clone(), pieces[1].0.clone()),
            };
        }
    }

    let new_model = SurfaceModel {
        id: new_id.to_string(),
        lattice: model.lattice.clone(),
        c1: model.c1.clone(),
        involution,
        components,
        twistable: model.twistable.clone(),
        spheres: Vec::new(),
        aliases: model.aliases.clone(),
    };
    new_model.validate()?;
    if new_model.euler_char() != model.euler_char() + 2 {
        return Err(Error::Validation(format!(
            "surgery to {new_id}: real Euler characteristic moved from {} to {}, expected +2",
            model.euler_char(),
            new_model.euler_char()
        )));
    }

    let sphere2 = sphere.mod2();
    let source_pairings = new_model
        .components
        .iter()
        .map(|c| (c.label.clone(), pairing_with_sphere(&new_model.lattice, c, &sphere2)))
        .collect();
    let target_pairings = model
        .components
        .iter()
        .map(|c| (c.label.clone(), pairing_with_sphere(&model.lattice, c, &sphere2)))
        .collect();
    let record = SurgeryRecord {
        source: new_id.to_string(),
        target: model.id.clone(),
        sphere: sphere.clone(),
        locus,
        outcome,
        source_pairings,
        target_pairings,
    };
    Ok((new_model, record))
}

pub(crate) fn rename_component_in(model: &mut SurfaceModel, from: &str, to: &str) -> Result<()> {
    model.rename_component(from, to)
}
