//! The signed-count recursion engine.
//!
//! A query names a surface, a set of real components carrying the real point
//! constraints, a mod-2 weight class, an anti-invariant curve class, and the
//! number of conjugate point pairs. The engine resolves it through, in order:
//! registry lookup, the vanishing policy, the exceptional-pencil Euler-count
//! rule, surgery-sum expansions along catalog records (plain or sign-twisted),
//! conjugate-pair blow-down, inverted surgery sums, and deformation
//! equivalences. Every value carries a provenance tree that replays to the
//! value; results are memoized per policy fingerprint.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::lattice::{is_exceptional, ClassVec, Mod2Class};
use crate::registry::Registry;
use crate::surfaces::{BlowupStep, Label, SurfaceModel, SurgeryOutcome, SurgeryRecord};
use crate::{Error, Result};

/// Mod-2 weight of a query: zero, a set of component labels (the sum of
/// their classes), or an explicit class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FTag {
    Zero,
    Components(BTreeSet<Label>),
    Explicit(Mod2Class),
}

impl FTag {
    fn normalized(self) -> FTag {
        match self {
            FTag::Components(set) if set.is_empty() => FTag::Zero,
            FTag::Explicit(m) if m.is_zero() => FTag::Zero,
            other => other,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FTag::Zero => "0".into(),
            FTag::Components(set) => {
                format!("[{}]", set.iter().cloned().collect::<Vec<_>>().join("+"))
            }
            FTag::Explicit(m) => format!(
                "explicit:{}",
                m.bits.iter().map(|b| if *b { '1' } else { '0' }).collect::<String>()
            ),
        }
    }
}

/// Names one signed invariant: W over `surface`, constraints on `l`, weight
/// `f`, class `d`, with `s` conjugate pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InvariantKey {
    pub surface: String,
    pub l: BTreeSet<Label>,
    pub f: FTag,
    pub d: ClassVec,
    pub s: u32,
}

impl InvariantKey {
    pub fn new(surface: &str, l: &[&str], f: FTag, d: ClassVec, s: u32) -> Self {
        InvariantKey {
            surface: surface.to_string(),
            l: l.iter().map(|s| s.to_string()).collect(),
            f,
            d,
            s,
        }
        .normalized()
    }

    pub fn normalized(mut self) -> Self {
        self.f = self.f.normalized();
        self
    }

    pub fn genus(&self) -> u32 {
        self.l.len().saturating_sub(1) as u32
    }

    pub fn describe(&self, catalog: &Catalog) -> String {
        let class = catalog
            .get(&self.surface)
            .map(|m| m.lattice.render_class(&self.d))
            .unwrap_or_else(|_| "?".into());
        format!(
            "W[{}; L={}; F={}]({}, s={})",
            self.surface,
            self.l.iter().cloned().collect::<Vec<_>>().join("+"),
            self.f.describe(),
            class,
            self.s
        )
    }
}

/// Checked facts about a valid key.
#[derive(Clone, Debug)]
pub struct KeyFacts {
    pub genus: u32,
    pub real_points: u64,
}

/// Why a term was declared zero without further recursion.
pub const REASON_ADJUNCTION: &str =
    "adjunction: no immersed irreducible representative in this genus";
pub const REASON_EXCEPTIONAL_PAIRING: &str =
    "pairs negatively with a blown-up exceptional curve class";
pub const REASON_PREDICATE: &str = "declared non-effective by the configured predicate";

/// Exact value with its derivation tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WValue {
    pub value: BigInt,
    pub prov: Arc<Prov>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prov {
    Registry { citation: String, quote: String },
    Vanishing { reason: String },
    EulerCount { surface: String, chi: i64 },
    Combination { rule: String, citation: String, terms: Vec<(BigInt, WValue)> },
}

impl WValue {
    pub fn registry(value: BigInt, citation: &str, quote: &str) -> Self {
        WValue {
            value,
            prov: Arc::new(Prov::Registry { citation: citation.into(), quote: quote.into() }),
        }
    }

    pub fn vanishing(reason: &str) -> Self {
        WValue { value: BigInt::zero(), prov: Arc::new(Prov::Vanishing { reason: reason.into() }) }
    }

    pub fn combination(rule: &str, citation: &str, terms: Vec<(BigInt, WValue)>) -> Self {
        let value = terms.iter().map(|(c, v)| c * &v.value).sum();
        WValue {
            value,
            prov: Arc::new(Prov::Combination {
                rule: rule.into(),
                citation: citation.into(),
                terms,
            }),
        }
    }

    /// Recompute the value from the tree alone.
    pub fn replay(&self) -> BigInt {
        match self.prov.as_ref() {
            Prov::Registry { .. } | Prov::Vanishing { .. } | Prov::EulerCount { .. } => {
                self.value.clone()
            }
            Prov::Combination { terms, .. } => terms.iter().map(|(c, v)| c * v.replay()).sum(),
        }
    }

    pub fn replays_consistently(&self) -> bool {
        if self.replay() != self.value {
            return false;
        }
        match self.prov.as_ref() {
            Prov::Combination { terms, .. } => terms.iter().all(|(_, v)| v.replays_consistently()),
            _ => true,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc: ProvDoc = self.into();
        serde_json::to_value(doc).expect("provenance serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<WValue> {
        let doc: ProvDoc = serde_json::from_value(value.clone())?;
        doc.try_into()
    }
}

/// JSON form of a provenance tree: value as a decimal string, stable field
/// order, children and coefficients aligned by index.
#[derive(Serialize, Deserialize)]
struct ProvDoc {
    value: String,
    rule: String,
    citation: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coefficients: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<ProvDoc>,
}

impl From<&WValue> for ProvDoc {
    fn from(w: &WValue) -> ProvDoc {
        let (rule, citation, coefficients, children) = match w.prov.as_ref() {
            Prov::Registry { citation, quote } => {
                ("registry".to_string(), format!("{citation}; {quote}"), vec![], vec![])
            }
            Prov::Vanishing { reason } => ("vanishing".to_string(), reason.clone(), vec![], vec![]),
            Prov::EulerCount { surface, chi } => (
                "euler-characteristic-count".to_string(),
                format!("exceptional pencil on {surface}, real Euler characteristic {chi}"),
                vec![],
                vec![],
            ),
            Prov::Combination { rule, citation, terms } => (
                rule.clone(),
                citation.clone(),
                terms.iter().map(|(c, _)| c.to_string()).collect(),
                terms.iter().map(|(_, v)| v.into()).collect(),
            ),
        };
        ProvDoc { value: w.value.to_string(), rule, citation, coefficients, children }
    }
}

impl TryFrom<ProvDoc> for WValue {
    type Error = Error;
    fn try_from(doc: ProvDoc) -> Result<WValue> {
        let value: BigInt =
            doc.value.parse().map_err(|_| Error::Parse("bad integer in trace".into()))?;
        if doc.children.is_empty() {
            let prov = match doc.rule.as_str() {
                "registry" => Prov::Registry { citation: doc.citation, quote: String::new() },
                "vanishing" => Prov::Vanishing { reason: doc.citation },
                "euler-characteristic-count" => {
                    Prov::EulerCount { surface: doc.citation, chi: 0 }
                }
                other => Prov::Combination {
                    rule: other.to_string(),
                    citation: doc.citation,
                    terms: vec![],
                },
            };
            return Ok(WValue { value, prov: Arc::new(prov) });
        }
        if doc.children.len() != doc.coefficients.len() {
            return Err(Error::Parse("trace children/coefficients mismatch".into()));
        }
        let mut terms = Vec::new();
        for (c, child) in doc.coefficients.iter().zip(doc.children) {
            let coeff: BigInt =
                c.parse().map_err(|_| Error::Parse("bad coefficient in trace".into()))?;
            terms.push((coeff, WValue::try_from(child)?));
        }
        Ok(WValue {
            value,
            prov: Arc::new(Prov::Combination {
                rule: doc.rule,
                citation: doc.citation,
                terms,
            }),
        })
    }
}

/// Termination policy for the surgery and relation sums. The adjunction
/// filter kills a tail as soon as the defect goes negative (it is strictly
/// decreasing along every tail walked here); the cap guards against a
/// misconfigured policy, never standing in for one.
#[derive(Clone)]
pub struct VanishingPolicy {
    pub use_adjunction: bool,
    pub max_k: u32,
    pub user_predicate: Option<Arc<dyn Fn(&SurfaceModel, &ClassVec) -> bool + Send + Sync>>,
    /// Names the predicate inside the memo fingerprint.
    pub predicate_id: String,
}

impl Default for VanishingPolicy {
    fn default() -> Self {
        VanishingPolicy {
            use_adjunction: true,
            max_k: 64,
            user_predicate: None,
            predicate_id: String::new(),
        }
    }
}

impl std::fmt::Debug for VanishingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VanishingPolicy")
            .field("use_adjunction", &self.use_adjunction)
            .field("max_k", &self.max_k)
            .field("predicate", &self.predicate_id)
            .finish()
    }
}

impl VanishingPolicy {
    pub fn fingerprint(&self) -> String {
        format!("adj={};cap={};pred={}", self.use_adjunction, self.max_k, self.predicate_id)
    }
}

/// A rule either produces a value, fails softly (the next rule gets a try),
/// or fails hard (the whole query aborts).
enum Fail {
    Soft(String),
    Hard(Error),
}

type RuleResult = std::result::Result<WValue, Fail>;

fn soft(msg: impl Into<String>) -> Fail {
    Fail::Soft(msg.into())
}

pub struct Engine {
    catalog: Arc<Catalog>,
    registry: Arc<Registry>,
    policy: VanishingPolicy,
    memo: RwLock<HashMap<(String, InvariantKey), WValue>>,
}

impl Engine {
    pub fn new(catalog: Arc<Catalog>, registry: Arc<Registry>, policy: VanishingPolicy) -> Self {
        Engine { catalog, registry, policy, memo: RwLock::new(HashMap::new()) }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn policy(&self) -> &VanishingPolicy {
        &self.policy
    }

    /// Validate a key against the catalog. Checks, in order: the surface and
    /// labels exist, d is anti-invariant, the real point count r is
    /// non-negative, the genus-1 degree exclusion, and (positive genus only)
    /// satisfiability of the point-parity condition.
    pub fn validate_key(&self, key: &InvariantKey) -> Result<KeyFacts> {
        let model = self.catalog.get(&key.surface)?;
        if key.l.is_empty() {
            return Err(Error::Validation("the constraint set L must be non-empty".into()));
        }
        for label in &key.l {
            model.component(label)?;
        }
        match &key.f {
            FTag::Components(set) => {
                for label in set {
                    model.component(label)?;
                    if key.l.contains(label) {
                        return Err(Error::Validation(format!(
                            "weight component {label} lies in L"
                        )));
                    }
                }
            }
            FTag::Explicit(m) => {
                if m.bits.len() != model.lattice.rank() {
                    return Err(Error::Validation("explicit weight has wrong length".into()));
                }
            }
            FTag::Zero => {}
        }
        if key.d.coords.len() != model.lattice.rank() {
            return Err(Error::Validation("class has wrong length".into()));
        }
        if !model.involution.is_anti_invariant(&key.d) {
            return Err(Error::Validation(format!(
                "class {} is not anti-invariant on {}",
                model.lattice.render_class(&key.d),
                key.surface
            )));
        }
        let genus = key.genus();
        let degree = model.c1_degree(&key.d)?;
        let r: BigInt = &degree + BigInt::from(genus as i64) - 1 - BigInt::from(2 * key.s as i64);
        if r.is_negative() {
            return Err(Error::Validation(format!(
                "r = {} is negative: s = {} exceeds the constraint budget of {}",
                r,
                key.s,
                key.describe(&self.catalog)
            )));
        }
        if genus == 1 && (degree.is_zero() || degree == BigInt::from(2)) {
            return Err(Error::Validation(format!(
                "genus-1 query with degree {degree} is excluded (multiple covers obstruct invariance)"
            )));
        }
        let real_points = u64::try_from(&r).expect("non-negative r fits");
        if genus >= 1 && !model.parity_satisfiable(&key.l, &key.d, real_points)? {
            return Err(Error::Validation(
                "the point-parity condition cannot be met by any distribution of real points"
                    .into(),
            ));
        }
        Ok(KeyFacts { genus, real_points })
    }

    /// Resolve a key to an exact value with provenance.
    pub fn compute(&self, key: &InvariantKey) -> Result<WValue> {
        let key = key.clone().normalized();
        self.validate_key(&key)?;
        let mut stack = Vec::new();
        match self.resolve(&key, &mut stack) {
            Ok(v) => Ok(v),
            Err(Fail::Hard(e)) => Err(e),
            Err(Fail::Soft(why)) => Err(Error::UnknownValue(format!(
                "{}: no registry entry or rule applies ({why})",
                key.describe(&self.catalog)
            ))),
        }
    }

    fn resolve(&self, key: &InvariantKey, stack: &mut Vec<InvariantKey>) -> RuleResult {
        let memo_key = (self.policy.fingerprint(), key.clone());
        if let Some(hit) = self.memo.read().expect("memo lock").get(&memo_key) {
            return Ok(hit.clone());
        }
        if stack.contains(key) {
            return Err(soft("cyclic derivation"));
        }
        stack.push(key.clone());
        let out = self.resolve_rules(key, stack);
        stack.pop();
        if let Ok(v) = &out {
            let mut memo = self.memo.write().expect("memo lock");
            let prev = memo.insert(memo_key, v.clone());
            if let Some(prev) = prev {
                debug_assert_eq!(prev.value, v.value);
            }
        }
        out
    }

    /// Validate and resolve a derived sub-key. Sub-keys produced by the rules
    /// are valid whenever the parent was, so a validation failure here is a
    /// hard error (it flags broken catalog data, not an unknown value).
    fn resolve_sub(&self, key: &InvariantKey, stack: &mut Vec<InvariantKey>) -> RuleResult {
        let key = key.clone().normalized();
        self.validate_key(&key).map_err(Fail::Hard)?;
        self.resolve(&key, stack)
    }

    fn resolve_rules(&self, key: &InvariantKey, stack: &mut Vec<InvariantKey>) -> RuleResult {
        let mut notes: Vec<String> = Vec::new();
        macro_rules! attempt {
            ($expr:expr) => {
                match $expr {
                    Ok(v) => return Ok(v),
                    Err(Fail::Soft(msg)) => notes.push(msg),
                    Err(hard) => return Err(hard),
                }
            };
        }
        attempt!(self.rule_registry(key));
        attempt!(self.rule_vanishing(key));
        attempt!(self.rule_euler_count(key));
        let forward: Vec<Arc<SurgeryRecord>> =
            self.catalog.surgeries_from(&key.surface).cloned().collect();
        for rec in &forward {
            attempt!(self.rule_surgery_forward(key, rec, None, stack));
        }
        attempt!(self.rule_blowdown(key, stack));
        let inverse: Vec<Arc<SurgeryRecord>> =
            self.catalog.surgeries_to(&key.surface).cloned().collect();
        for rec in &inverse {
            attempt!(self.rule_surgery_inverse(key, rec, stack));
        }
        attempt!(self.rule_equivalence(key, stack));
        Err(soft(notes.join("; ")))
    }

    fn rule_registry(&self, key: &InvariantKey) -> RuleResult {
        match self.registry.lookup(&self.catalog, key) {
            Some(hit) => Ok(WValue::registry(hit.value, &hit.citation, &hit.quote)),
            None => Err(soft("no registry entry")),
        }
    }

    fn rule_vanishing(&self, key: &InvariantKey) -> RuleResult {
        let model = self.catalog.get(&key.surface).map_err(Fail::Hard)?;
        if self.policy.use_adjunction {
            let defect = model.adjunction_defect(&key.d, key.genus()).map_err(Fail::Hard)?;
            let exceptional =
                is_exceptional(&model.lattice, &model.c1, &key.d).map_err(Fail::Hard)?;
            if defect.is_negative() && !exceptional {
                return Ok(WValue::vanishing(REASON_ADJUNCTION));
            }
        }
        if let Some(pred) = &self.policy.user_predicate {
            if pred(model, &key.d) {
                return Ok(WValue::vanishing(REASON_PREDICATE));
            }
        }
        Err(soft("not covered by the vanishing policy"))
    }

    /// On a degree-1 model with s = 0 and the full complementary weight, the
    /// count in the class c1 + (exceptional) is 1 - χ(real part).
    fn rule_euler_count(&self, key: &InvariantKey) -> RuleResult {
        let model = self.catalog.get(&key.surface).map_err(Fail::Hard)?;
        if model.degree().map_err(Fail::Hard)? != BigInt::one() {
            return Err(soft("not a degree-1 model"));
        }
        if key.s != 0 || key.l.len() != 1 {
            return Err(soft("Euler count needs s = 0 and a single component"));
        }
        let label = key.l.iter().next().unwrap();
        let complement: BTreeSet<Label> = model
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
            return Err(soft("Euler count needs the full complementary weight"));
        }
        let gamma = key.d.sub(&model.c1);
        if !is_exceptional(&model.lattice, &model.c1, &gamma).map_err(Fail::Hard)? {
            return Err(soft("class is not anticanonical plus exceptional"));
        }
        if !model.involution.is_anti_invariant(&gamma) {
            return Err(soft("exceptional summand is not anti-invariant"));
        }
        let chi = model.euler_char();
        let value = BigInt::from(1 - chi);
        Ok(WValue {
            value,
            prov: Arc::new(Prov::EulerCount { surface: key.surface.clone(), chi }),
        })
    }

    /// Transport of the weight tag across a surgery record, from the big
    /// (source) side to the small (target) side. Returns the target tag and
    /// whether the sphere class was absorbed (forcing the sign twist).
    fn transport_weight_forward(
        &self,
        key: &InvariantKey,
        rec: &SurgeryRecord,
    ) -> std::result::Result<(FTag, bool), Fail> {
        let source = self.catalog.get(&rec.source).map_err(Fail::Hard)?;
        // normality of the weight against the sphere class
        let pairing = match &key.f {
            FTag::Zero => 0,
            FTag::Components(set) => {
                let mut acc = 0u8;
                for label in set {
                    match rec.source_pairings.get(label) {
                        Some(p) => acc ^= p,
                        None => {
                            return Err(Fail::Hard(Error::InsufficientData(format!(
                                "record {} -> {}: no pairing data for component {label}",
                                rec.source, rec.target
                            ))))
                        }
                    }
                }
                acc
            }
            FTag::Explicit(m) => source
                .lattice
                .pair_mod2(m, &rec.sphere.mod2())
                .map_err(Fail::Hard)?,
        };
        if pairing != 0 {
            return Err(soft("weight class pairs oddly with the surgery sphere"));
        }
        let moved = rec.source_side_component().cloned();
        match &key.f {
            FTag::Zero => Ok((FTag::Zero, false)),
            FTag::Explicit(m) => Ok((FTag::Explicit(m.clone()), false)),
            FTag::Components(set) => {
                let Some(moved) = moved else {
                    return Err(soft("separating record does not transport component weights"));
                };
                if set.contains(&moved) {
                    let mut mapped: BTreeSet<Label> =
                        set.iter().filter(|l| **l != moved).cloned().collect();
                    if let SurgeryOutcome::CutComponent { target, .. } = &rec.outcome {
                        mapped.insert(target.clone());
                    }
                    Ok((FTag::Components(mapped).normalized(), true))
                } else {
                    Ok((FTag::Components(set.clone()), false))
                }
            }
        }
    }

    /// The surgery sum: W on the source equals the target value of the same
    /// class plus twice the tail of target values in the classes d - k·S.
    /// With the sphere class absorbed into the weight the tail alternates,
    /// which requires the sphere to be sign-twistable on the target.
    fn rule_surgery_forward(
        &self,
        key: &InvariantKey,
        rec: &SurgeryRecord,
        force_twisted: Option<bool>,
        stack: &mut Vec<InvariantKey>,
    ) -> RuleResult {
        debug_assert_eq!(rec.source, key.surface);
        let target = self.catalog.get(&rec.target).map_err(Fail::Hard)?;
        if let Some(moved) = rec.source_side_component() {
            if key.l.contains(moved) {
                return Err(soft("constraint components meet the surgery sphere"));
            }
        } else {
            return Err(soft("separating records are structural only"));
        }
        let (f_target, twisted) = self.transport_weight_forward(key, rec)?;
        if let Some(want) = force_twisted {
            if want != twisted {
                return Err(soft("requested twist variant does not match the weight"));
            }
        }
        if twisted && !target.is_twistable(&rec.sphere) {
            return Err(soft(format!(
                "sphere class is not listed as sign-twistable on {}",
                rec.target
            )));
        }
        let terms = self.surgery_tail(key, rec, &f_target, twisted, false, stack)?;
        let (rule, citation) = if twisted {
            (
                "surgery-sum-twisted",
                "surgery sum rule composed with the sign-twist of the weight class",
            )
        } else {
            ("surgery-sum", "surgery sum rule: coefficients 1, 2, 2, ...")
        };
        Ok(WValue::combination(rule, citation, terms))
    }

    /// Shared tail builder. For the forward rule the terms are
    /// (1, W_target(d)), (±2, W_target(d - kS)); the inverse caller replaces
    /// the k = 0 term itself and negates the tail coefficients.
    fn surgery_tail(
        &self,
        key: &InvariantKey,
        rec: &SurgeryRecord,
        f_target: &FTag,
        twisted: bool,
        skip_head: bool,
        stack: &mut Vec<InvariantKey>,
    ) -> std::result::Result<Vec<(BigInt, WValue)>, Fail> {
        let target = self.catalog.get(&rec.target).map_err(Fail::Hard)?;
        let genus = key.genus();
        let mut terms = Vec::new();
        if !skip_head {
            let head = InvariantKey {
                surface: rec.target.clone(),
                l: key.l.clone(),
                f: f_target.clone(),
                d: key.d.clone(),
                s: key.s,
            };
            terms.push((BigInt::one(), self.resolve_sub(&head, stack)?));
        }
        for k in 1..=self.policy.max_k {
            let delta = key.d.sub(&rec.sphere.scale_i64(k as i64));
            if self.policy.use_adjunction {
                let defect = target.adjunction_defect(&delta, genus).map_err(Fail::Hard)?;
                let exceptional =
                    is_exceptional(&target.lattice, &target.c1, &delta).map_err(Fail::Hard)?;
                // the defect strictly decreases along the tail, so the first
                // non-exceptional negative kills everything beyond it
                if defect.is_negative() && !exceptional {
                    return Ok(terms);
                }
            }
            let sub = InvariantKey {
                surface: rec.target.clone(),
                l: key.l.clone(),
                f: f_target.clone(),
                d: delta,
                s: key.s,
            };
            let val = self.resolve_sub(&sub, stack)?;
            let mut coeff = BigInt::from(2);
            if twisted && k % 2 == 1 {
                coeff = -coeff;
            }
            terms.push((coeff, val));
        }
        Err(Fail::Hard(Error::Config(format!(
            "surgery sum for {} did not terminate within {} terms; tighten the vanishing policy",
            key.describe(&self.catalog),
            self.policy.max_k
        ))))
    }

    /// Push a query down a conjugate-pair blow-up: coefficient 0 on a pair
    /// drops it, coefficient -1 on both members consumes one conjugate point
    /// pair, and a positive coefficient forces the count to vanish.
    fn rule_blowdown(&self, key: &InvariantKey, stack: &mut Vec<InvariantKey>) -> RuleResult {
        let Some(rec) = self.catalog.blowup_of(&key.surface) else {
            return Err(soft("not a recorded blow-up"));
        };
        if rec
            .steps
            .iter()
            .any(|s| matches!(s, BlowupStep::RealPoint { .. }))
        {
            return Err(soft("blow-down across real centres is not available"));
        }
        let parent = self.catalog.get(&rec.parent).map_err(Fail::Hard)?;
        let mut drop = vec![false; key.d.coords.len()];
        let mut extra_pairs = 0u32;
        for step in &rec.steps {
            let BlowupStep::ConjPair { a, b } = step else { unreachable!() };
            drop[*a] = true;
            drop[*b] = true;
            let (ma, mb) = (&key.d.coords[*a], &key.d.coords[*b]);
            if ma != mb {
                // anti-invariance forces equal coefficients on a pair
                return Err(Fail::Hard(Error::Validation(
                    "unequal coefficients on a conjugate exceptional pair".into(),
                )));
            }
            if ma.is_positive() {
                return Ok(WValue::vanishing(REASON_EXCEPTIONAL_PAIRING));
            }
            if *ma == BigInt::from(-1) {
                extra_pairs += 1;
            } else if !ma.is_zero() {
                return Err(soft("no blow-down rule for coefficients below -1"));
            }
        }
        let coords: Vec<BigInt> = key
            .d
            .coords
            .iter()
            .zip(&drop)
            .filter(|(_, d)| !**d)
            .map(|(c, _)| c.clone())
            .collect();
        if coords.len() != parent.lattice.rank() {
            return Err(Fail::Hard(Error::Validation(format!(
                "blow-up record {} -> {} does not cover the rank difference",
                rec.child, rec.parent
            ))));
        }
        let f_parent = match &key.f {
            FTag::Zero => FTag::Zero,
            FTag::Components(set) => FTag::Components(set.clone()),
            FTag::Explicit(m) => {
                let dropped_support = m.bits.iter().zip(&drop).any(|(bit, d)| *bit && *d);
                if dropped_support {
                    return Err(soft("explicit weight touches the blown-up classes"));
                }
                FTag::Explicit(Mod2Class {
                    bits: m
                        .bits
                        .iter()
                        .zip(&drop)
                        .filter(|(_, d)| !**d)
                        .map(|(b, _)| *b)
                        .collect(),
                })
            }
        };
        let sub = InvariantKey {
            surface: rec.parent.clone(),
            l: key.l.clone(),
            f: f_parent,
            d: ClassVec::new(coords),
            s: key.s + extra_pairs,
        };
        let val = self.resolve_sub(&sub, stack)?;
        Ok(WValue::combination(
            "blow-down",
            "conjugate-pair blow-up: classes through the pair trade for one conjugate point pair",
            vec![(BigInt::one(), val)],
        ))
    }

    /// Solve the forward surgery sum for its head term: the target value
    /// equals the source value minus the (twisted) tail on the target.
    fn rule_surgery_inverse(
        &self,
        key: &InvariantKey,
        rec: &SurgeryRecord,
        stack: &mut Vec<InvariantKey>,
    ) -> RuleResult {
        debug_assert_eq!(rec.target, key.surface);
        let Some(moved) = rec.source_side_component().cloned() else {
            return Err(soft("separating records are structural only"));
        };
        let cut_target = match &rec.outcome {
            SurgeryOutcome::CutComponent { target, .. } => Some(target.clone()),
            _ => None,
        };
        if let Some(cut) = &cut_target {
            if key.l.contains(cut) {
                return Err(soft("constraint components meet the surgery circle"));
            }
        }
        let mut last = soft("no usable weight transport");
        for twisted in [false, true] {
            // lift the weight from the target side back to the source side:
            // the twisted reading adds the sphere class to the weight
            let f_source = if !twisted {
                match (&key.f, &cut_target) {
                    (FTag::Components(set), Some(cut)) if set.contains(cut) => continue,
                    (f, _) => f.clone(),
                }
            } else {
                match (&key.f, &cut_target) {
                    (FTag::Explicit(m), _) => {
                        FTag::Explicit(m.add(&rec.sphere.mod2())).normalized()
                    }
                    (FTag::Zero, None) => FTag::Components(BTreeSet::from([moved.clone()])),
                    (FTag::Components(set), None) => {
                        let mut mapped = set.clone();
                        mapped.insert(moved.clone());
                        FTag::Components(mapped)
                    }
                    (FTag::Components(set), Some(cut)) if set.contains(cut) => {
                        let mut mapped: BTreeSet<Label> =
                            set.iter().filter(|l| *l != cut).cloned().collect();
                        mapped.insert(moved.clone());
                        FTag::Components(mapped)
                    }
                    // the class F + [sphere] is not a sum of source components
                    _ => continue,
                }
            };
            if twisted
                && !self
                    .catalog
                    .get(&key.surface)
                    .map_err(Fail::Hard)?
                    .is_twistable(&rec.sphere)
            {
                last = soft("sphere class is not listed as sign-twistable here");
                continue;
            }
            let source_key = InvariantKey {
                surface: rec.source.clone(),
                l: key.l.clone(),
                f: f_source,
                d: key.d.clone(),
                s: key.s,
            }
            .normalized();
            if let Err(e) = self.validate_key(&source_key) {
                last = soft(format!("source-side key invalid: {e}"));
                continue;
            }
            // normality of the lifted weight against the sphere
            if self.transport_weight_forward(&source_key, rec).is_err() {
                last = soft("lifted weight pairs oddly with the surgery sphere");
                continue;
            }
            let head = match self.resolve(&source_key, stack) {
                Ok(v) => v,
                Err(Fail::Hard(e)) => return Err(Fail::Hard(e)),
                Err(Fail::Soft(msg)) => {
                    last = Fail::Soft(msg);
                    continue;
                }
            };
            let tail = match self.surgery_tail(key, rec, &key.f.clone(), twisted, true, stack) {
                Ok(t) => t,
                Err(Fail::Hard(e)) => return Err(Fail::Hard(e)),
                Err(Fail::Soft(msg)) => {
                    last = Fail::Soft(msg);
                    continue;
                }
            };
            let mut terms = vec![(BigInt::one(), head)];
            for (coeff, val) in tail {
                terms.push((-coeff, val));
            }
            return Ok(WValue::combination(
                "surgery-sum-inverted",
                "surgery sum rule solved for its leading target term",
                terms,
            ));
        }
        Err(last)
    }

    /// Transport along a deformation equivalence. Only classes proportional
    /// to the anticanonical class move across (the records do not carry a
    /// full lattice identification).
    fn rule_equivalence(&self, key: &InvariantKey, stack: &mut Vec<InvariantKey>) -> RuleResult {
        let model = self.catalog.get(&key.surface).map_err(Fail::Hard)?;
        let mut last = soft("no equivalence applies");
        for eq in self.catalog.equivalences() {
            let (other_id, map): (String, Vec<(Label, Label)>) = if eq.a == key.surface {
                (eq.b.clone(), eq.component_map.clone())
            } else if eq.b == key.surface {
                (eq.a.clone(), eq.component_map.iter().map(|(a, b)| (b.clone(), a.clone())).collect())
            } else {
                continue;
            };
            // d = t·c1 for an integer t?
            let pivot = model.c1.coords.iter().position(|c| !c.is_zero()).unwrap();
            let (t, rem) =
                num_integer::Integer::div_rem(&key.d.coords[pivot], &model.c1.coords[pivot]);
            if !rem.is_zero() || key.d != model.c1.scale(&t) {
                last = soft("class does not transport along the equivalence");
                continue;
            }
            let relabel = |set: &BTreeSet<Label>| -> Option<BTreeSet<Label>> {
                set.iter()
                    .map(|l| map.iter().find(|(a, _)| a == l).map(|(_, b)| b.clone()))
                    .collect()
            };
            let Some(l_other) = relabel(&key.l) else {
                last = soft("components do not correspond along the equivalence");
                continue;
            };
            let f_other = match &key.f {
                FTag::Zero => FTag::Zero,
                FTag::Components(set) => match relabel(set) {
                    Some(mapped) => FTag::Components(mapped),
                    None => {
                        last = soft("weight components do not correspond along the equivalence");
                        continue;
                    }
                },
                FTag::Explicit(_) => {
                    last = soft("explicit weights do not transport along equivalences");
                    continue;
                }
            };
            let other = self.catalog.get(&other_id).map_err(Fail::Hard)?;
            let sub = InvariantKey {
                surface: other_id.clone(),
                l: l_other,
                f: f_other,
                d: other.c1.scale(&t),
                s: key.s,
            };
            match self.resolve_sub(&sub, stack) {
                Ok(v) => {
                    return Ok(WValue::combination(
                        "deformation-equivalence",
                        "equal models up to deformation; counts agree",
                        vec![(BigInt::one(), v)],
                    ));
                }
                Err(Fail::Hard(e)) => return Err(Fail::Hard(e)),
                Err(Fail::Soft(msg)) => last = Fail::Soft(msg),
            }
        }
        Err(last)
    }

    /// Expand a key along one specific record (chosen by target id), for
    /// route-by-route cross-checks. `force_twisted` pins the expected
    /// variant.
    pub fn compute_via(
        &self,
        key: &InvariantKey,
        target_id: &str,
        force_twisted: Option<bool>,
    ) -> Result<WValue> {
        let key = key.clone().normalized();
        self.validate_key(&key)?;
        let rec = self
            .catalog
            .surgeries_from(&key.surface)
            .find(|r| r.target == target_id)
            .cloned()
            .ok_or_else(|| {
                Error::Validation(format!(
                    "no surgery record from {} to {target_id}",
                    key.surface
                ))
            })?;
        let mut stack = Vec::new();
        match self.rule_surgery_forward(&key, &rec, force_twisted, &mut stack) {
            Ok(v) => Ok(v),
            Err(Fail::Hard(e)) => Err(e),
            Err(Fail::Soft(msg)) => Err(Error::UnknownValue(msg)),
        }
    }

    /// The plain surgery sum as a standalone operation: requires the weight
    /// to transport without absorbing the sphere class.
    pub fn surgery_sum(&self, key: &InvariantKey, target_id: &str) -> Result<WValue> {
        self.compute_via(key, target_id, Some(false))
    }

    /// The sign-twisted surgery sum as a standalone operation: requires the
    /// weight to absorb the sphere class.
    pub fn surgery_sum_twisted(&self, key: &InvariantKey, target_id: &str) -> Result<WValue> {
        self.compute_via(key, target_id, Some(true))
    }
}

/// Rewrite a weight class by a sign-twistable class: F ↦ F + [t] at the cost
/// of the sign (-1)^{(d·t)/2}. Returns the rewritten key and the sign.
pub fn sign_twist(
    model: &SurfaceModel,
    key: &InvariantKey,
    t: &ClassVec,
) -> Result<(InvariantKey, i8)> {
    if !model.is_twistable(t) {
        return Err(Error::Validation(format!(
            "{}: class {} is not listed as sign-twistable",
            model.id,
            model.lattice.render_class(t)
        )));
    }
    let pairing = model.lattice.pair(&key.d, t)?;
    let (half, rem) = num_integer::Integer::div_rem(&pairing, &BigInt::from(2));
    if !rem.is_zero() {
        return Err(Error::Validation(
            "sign twist needs an even pairing with the class".into(),
        ));
    }
    let sign: i8 = if (&half % BigInt::from(2)).is_zero() { 1 } else { -1 };
    let f_explicit = match &key.f {
        FTag::Zero => Mod2Class::zero(model.lattice.rank()),
        FTag::Explicit(m) => m.clone(),
        FTag::Components(set) => {
            let mut acc = Mod2Class::zero(model.lattice.rank());
            for label in set {
                let comp = model.component(label)?;
                let Some(m) = &comp.mod2_class else {
                    return Err(Error::InsufficientData(format!(
                        "component {label} has no recorded mod-2 class"
                    )));
                };
                acc = acc.add(m);
            }
            acc
        }
    };
    let twisted = InvariantKey {
        surface: key.surface.clone(),
        l: key.l.clone(),
        f: FTag::Explicit(f_explicit.add(&t.mod2())).normalized(),
        d: key.d.clone(),
        s: key.s,
    };
    Ok((twisted, sign))
}

/// Standalone form of the Euler-count rule: on a degree-1 model the count of
/// c1 + gamma at s = 0 with full complementary weight is 1 - χ(real part).
pub fn euler_char_count(model: &SurfaceModel, gamma: &ClassVec) -> Result<BigInt> {
    if model.degree()? != BigInt::one() {
        return Err(Error::Validation(format!("{} is not a degree-1 model", model.id)));
    }
    if !is_exceptional(&model.lattice, &model.c1, gamma)? {
        return Err(Error::Validation("class is not exceptional".into()));
    }
    if !model.involution.is_anti_invariant(gamma) {
        return Err(Error::Validation("class is not anti-invariant".into()));
    }
    Ok(BigInt::from(1 - model.euler_char()))
}
