//! Integer intersection lattices, involutions, and (-2)-class reflections.
//!
//! A lattice here is H₂ of a rational surface with its intersection pairing,
//! presented by a labeled basis and a symmetric Gram matrix. An involution is
//! an integer isometry squaring to the identity; its (±1)-eigenlattices are
//! computed exactly over ℤ (kernels of integer matrices are saturated, so no
//! separate saturation pass is needed).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::matrix::IntMat;
use crate::{Error, Result};

/// Intersection lattice: labeled free ℤ-module with a symmetric pairing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionLattice {
    rank: usize,
    gram: IntMat,
    basis_labels: Vec<String>,
}

impl IntersectionLattice {
    pub fn new(basis_labels: Vec<String>, gram: IntMat) -> Result<Self> {
        let rank = basis_labels.len();
        if rank == 0 {
            return Err(Error::Validation("lattice rank must be positive".into()));
        }
        if gram.rows() != rank || gram.cols() != rank {
            return Err(Error::Validation(format!(
                "gram matrix is {}x{}, expected {rank}x{rank}",
                gram.rows(),
                gram.cols()
            )));
        }
        if !gram.is_symmetric() {
            return Err(Error::Validation("gram matrix is not symmetric".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &basis_labels {
            if !seen.insert(l.clone()) {
                return Err(Error::Validation(format!("duplicate basis label {l}")));
            }
        }
        Ok(IntersectionLattice { rank, gram, basis_labels })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gram(&self) -> &IntMat {
        &self.gram
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.basis_labels.iter().position(|l| l == label)
    }

    pub fn basis_vector(&self, index: usize) -> ClassVec {
        let mut coords = vec![BigInt::zero(); self.rank];
        coords[index] = BigInt::one();
        ClassVec::new(coords)
    }

    pub fn zero(&self) -> ClassVec {
        ClassVec::new(vec![BigInt::zero(); self.rank])
    }

    fn check_len(&self, v: &ClassVec) -> Result<()> {
        if v.coords.len() != self.rank {
            return Err(Error::Validation(format!(
                "class has {} coordinates, lattice rank is {}",
                v.coords.len(),
                self.rank
            )));
        }
        Ok(())
    }

    /// Intersection pairing a·b = aᵀ G b.
    pub fn pair(&self, a: &ClassVec, b: &ClassVec) -> Result<BigInt> {
        self.check_len(a)?;
        self.check_len(b)?;
        let gb = self.gram.mul_vec(&b.coords);
        Ok(a.coords.iter().zip(&gb).map(|(x, y)| x * y).sum())
    }

    /// Mod-2 pairing of two ℤ/2 classes.
    pub fn pair_mod2(&self, a: &Mod2Class, b: &Mod2Class) -> Result<u8> {
        if a.bits.len() != self.rank || b.bits.len() != self.rank {
            return Err(Error::Validation("mod-2 class length mismatch".into()));
        }
        let mut acc = 0u8;
        for i in 0..self.rank {
            if !a.bits[i] {
                continue;
            }
            for j in 0..self.rank {
                if b.bits[j] && self.gram[(i, j)].is_odd() {
                    acc ^= 1;
                }
            }
        }
        Ok(acc)
    }

    pub fn self_pairing(&self, a: &ClassVec) -> Result<BigInt> {
        self.pair(a, a)
    }

    /// Reflection in a (-2)-class: d ↦ d + (d·s)s. Involutive isometry fixing
    /// s^⊥ and negating s.
    pub fn reflect(&self, d: &ClassVec, s: &ClassVec) -> Result<ClassVec> {
        if self.self_pairing(s)? != BigInt::from(-2) {
            return Err(Error::Validation("reflection class must have square -2".into()));
        }
        let q = self.pair(d, s)?;
        let coords = d
            .coords
            .iter()
            .zip(&s.coords)
            .map(|(x, y)| x + &q * y)
            .collect();
        Ok(ClassVec::new(coords))
    }

    /// Matrix of the reflection in `s`, acting on column vectors.
    pub fn reflection_matrix(&self, s: &ClassVec) -> Result<IntMat> {
        if self.self_pairing(s)? != BigInt::from(-2) {
            return Err(Error::Validation("reflection class must have square -2".into()));
        }
        let gs = self.gram.mul_vec(&s.coords);
        let mut m = IntMat::identity(self.rank);
        for i in 0..self.rank {
            for j in 0..self.rank {
                let add = &s.coords[i] * &gs[j];
                m[(i, j)] += add;
            }
        }
        Ok(m)
    }

    /// Parse a symbolic class expression over the basis labels plus aliases,
    /// e.g. `3D-E1-E2` or `c1+2F`.
    pub fn parse_class(
        &self,
        input: &str,
        aliases: &std::collections::BTreeMap<String, ClassVec>,
    ) -> Result<ClassVec> {
        let terms = crate::expr::parse_linear_expression(input)?;
        let mut out = self.zero();
        for term in terms {
            if let Some(p) = &term.param {
                return Err(Error::Parse(format!(
                    "unbound parameter `{p}` in class expression `{input}`"
                )));
            }
            let vec = match term.symbol {
                None => {
                    return Err(Error::Parse(format!(
                        "bare integer term in class expression `{input}`"
                    )))
                }
                Some(sym) => {
                    if let Some(i) = self.label_index(&sym) {
                        self.basis_vector(i)
                    } else if let Some(v) = aliases.get(&sym) {
                        v.clone()
                    } else {
                        return Err(Error::Parse(format!(
                            "unknown class symbol `{sym}` in `{input}`"
                        )));
                    }
                }
            };
            self.check_len(&vec)?;
            for (o, x) in out.coords.iter_mut().zip(&vec.coords) {
                *o += &term.coefficient * x;
            }
        }
        Ok(out)
    }

    /// Render a class as a symbolic expression in the basis labels.
    pub fn render_class(&self, v: &ClassVec) -> String {
        let mut s = String::new();
        for (i, c) in v.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let label = &self.basis_labels[i];
            if c.is_one() {
                if !s.is_empty() {
                    s.push('+');
                }
                s.push_str(label);
            } else if *c == BigInt::from(-1) {
                s.push('-');
                s.push_str(label);
            } else {
                if !s.is_empty() && !c.is_negative() {
                    s.push('+');
                }
                s.push_str(&format!("{c}{label}"));
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

/// Integer homology class in the coordinates of a fixed labeled basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassVec {
    pub coords: Vec<BigInt>,
}

impl ClassVec {
    pub fn new(coords: Vec<BigInt>) -> Self {
        ClassVec { coords }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        ClassVec::new(coords.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &ClassVec) -> ClassVec {
        ClassVec::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ClassVec) -> ClassVec {
        ClassVec::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> ClassVec {
        ClassVec::new(self.coords.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, k: &BigInt) -> ClassVec {
        ClassVec::new(self.coords.iter().map(|a| a * k).collect())
    }

    pub fn scale_i64(&self, k: i64) -> ClassVec {
        self.scale(&BigInt::from(k))
    }

    pub fn mod2(&self) -> Mod2Class {
        Mod2Class { bits: self.coords.iter().map(|c| c.is_odd()).collect() }
    }

    /// Coordinates as i64, when they fit. Catalog and registry data always do.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coords.iter().map(|c| i64::try_from(c).ok()).collect()
    }
}

/// Class with ℤ/2 coefficients, stored as a bit per basis vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mod2Class {
    pub bits: Vec<bool>,
}

impl Mod2Class {
    pub fn zero(rank: usize) -> Self {
        Mod2Class { bits: vec![false; rank] }
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn add(&self, other: &Mod2Class) -> Mod2Class {
        Mod2Class { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect() }
    }

    /// Coordinatewise dot product mod 2 (a functional evaluation, not the
    /// intersection pairing).
    pub fn dot(&self, other: &Mod2Class) -> u8 {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| **a && **b).count() as u8 % 2
    }
}

/// Involution on the lattice: integer matrix T with T² = I and TᵀGT = G.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvolutionAction {
    matrix: IntMat,
}

impl InvolutionAction {
    pub fn new(lattice: &IntersectionLattice, matrix: IntMat) -> Result<Self> {
        if matrix.rows() != lattice.rank() || matrix.cols() != lattice.rank() {
            return Err(Error::Validation("involution matrix has wrong shape".into()));
        }
        if !matrix.mul(&matrix).is_identity() {
            return Err(Error::Validation("involution does not square to the identity".into()));
        }
        let g = lattice.gram();
        if matrix.transpose().mul(g).mul(&matrix) != *g {
            return Err(Error::Validation("involution is not an isometry of the pairing".into()));
        }
        Ok(InvolutionAction { matrix })
    }

    pub fn matrix(&self) -> &IntMat {
        &self.matrix
    }

    pub fn apply(&self, v: &ClassVec) -> ClassVec {
        ClassVec::new(self.matrix.mul_vec(&v.coords))
    }

    pub fn is_invariant(&self, v: &ClassVec) -> bool {
        self.apply(v) == *v
    }

    pub fn is_anti_invariant(&self, v: &ClassVec) -> bool {
        self.apply(v) == v.neg()
    }

    /// ℤ-basis of the saturated eigenlattice {x : T·x = sign·x}.
    pub fn eigenlattice(&self, sign: i8) -> Vec<ClassVec> {
        assert!(sign == 1 || sign == -1);
        let n = self.matrix.rows();
        let mut m = self.matrix.clone();
        for i in 0..n {
            let adj = BigInt::from(sign as i64);
            m[(i, i)] -= adj;
        }
        m.kernel_basis().into_iter().map(ClassVec::new).collect()
    }

    /// Compose with a reflection: x ↦ T(r_s(x)). Used to realize a surgery on
    /// the involution side.
    pub fn compose_reflection(
        &self,
        lattice: &IntersectionLattice,
        s: &ClassVec,
    ) -> Result<InvolutionAction> {
        let r = lattice.reflection_matrix(s)?;
        InvolutionAction::new(lattice, self.matrix.mul(&r))
    }
}

/// Degree of the class against the given anticanonical class.
pub fn c1_degree(lattice: &IntersectionLattice, c1: &ClassVec, d: &ClassVec) -> Result<BigInt> {
    lattice.pair(c1, d)
}

/// Adjunction defect d² − c₁·d − 2g + 2. A negative value rules out an
/// immersed irreducible genus-g representative; it is used only as a
/// vanishing filter.
pub fn adjunction_defect(
    lattice: &IntersectionLattice,
    c1: &ClassVec,
    d: &ClassVec,
    genus: u32,
) -> Result<BigInt> {
    let dd = lattice.self_pairing(d)?;
    let cd = lattice.pair(c1, d)?;
    Ok(dd - cd - BigInt::from(2 * genus as i64) + 2)
}

/// Lattice-level test for an exceptional class: square -1 and degree 1.
pub fn is_exceptional(lattice: &IntersectionLattice, c1: &ClassVec, d: &ClassVec) -> Result<bool> {
    Ok(lattice.self_pairing(d)? == BigInt::from(-1) && lattice.pair(c1, d)? == BigInt::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn blown_plane() -> (IntersectionLattice, ClassVec) {
        // plane class D and six exceptional classes
        let labels: Vec<String> =
            ["D", "E1", "E2", "E3", "E4", "E5", "E6"].iter().map(|s| s.to_string()).collect();
        let mut gram = IntMat::new(7, 7);
        gram[(0, 0)] = BigInt::one();
        for i in 1..7 {
            gram[(i, i)] = BigInt::from(-1);
        }
        let lat = IntersectionLattice::new(labels, gram).unwrap();
        let c1 = ClassVec::from_i64(&[3, -1, -1, -1, -1, -1, -1]);
        (lat, c1)
    }

    #[test]
    fn pairing_on_blown_plane() {
        let (lat, c1) = blown_plane();
        let d = lat.basis_vector(0);
        let e1 = lat.basis_vector(1);
        assert_eq!(lat.pair(&d, &d).unwrap(), BigInt::from(1));
        assert_eq!(lat.pair(&e1, &e1).unwrap(), BigInt::from(-1));
        assert_eq!(lat.pair(&d, &e1).unwrap(), BigInt::from(0));
        let zero = lat.zero();
        assert_eq!(lat.pair(&zero, &c1).unwrap(), BigInt::from(0));
        let s = ClassVec::from_i64(&[2, -1, -1, -1, -1, -1, -1]);
        assert_eq!(lat.self_pairing(&s).unwrap(), BigInt::from(-2));
        assert_eq!(c1_degree(&lat, &c1, &c1).unwrap(), BigInt::from(3));
        assert_eq!(c1_degree(&lat, &c1, &s).unwrap(), BigInt::from(0));
        assert_eq!(c1_degree(&lat, &c1, &lat.zero()).unwrap(), BigInt::from(0));
    }

    #[test]
    fn reflect_basics() {
        let (lat, _) = blown_plane();
        let s = ClassVec::from_i64(&[2, -1, -1, -1, -1, -1, -1]);
        assert_eq!(lat.reflect(&s, &s).unwrap(), s.neg());
        // e1 - e2 is orthogonal to s
        let fixed = ClassVec::from_i64(&[0, 1, -1, 0, 0, 0, 0]);
        assert_eq!(lat.reflect(&fixed, &s).unwrap(), fixed);
        let d = ClassVec::from_i64(&[5, -2, 0, 1, -3, 2, 7]);
        let once = lat.reflect(&d, &s).unwrap();
        assert_eq!(lat.reflect(&once, &s).unwrap(), d);
        let e = lat.basis_vector(1);
        assert!(lat.reflect(&d, &e).is_err());
    }

    #[test]
    fn adjunction_examples() {
        let (lat, c1) = blown_plane();
        let e = lat.basis_vector(1);
        assert_eq!(adjunction_defect(&lat, &c1, &e, 0).unwrap(), BigInt::from(0));
        let sum_e = ClassVec::from_i64(&[0, 1, 1, 1, 1, 1, 1]);
        assert_eq!(adjunction_defect(&lat, &c1, &sum_e, 0).unwrap(), BigInt::from(-10));
    }

    #[test]
    fn eigenlattice_full_anti() {
        let (lat, _) = blown_plane();
        let mut neg = IntMat::identity(7);
        for i in 0..7 {
            neg[(i, i)] = BigInt::from(-1);
        }
        let inv = InvolutionAction::new(&lat, neg).unwrap();
        assert_eq!(inv.eigenlattice(-1).len(), 7);
        assert_eq!(inv.eigenlattice(1).len(), 0);
    }

    #[test]
    fn parse_and_render() {
        let (lat, c1) = blown_plane();
        let mut aliases = BTreeMap::new();
        aliases.insert("c1".to_string(), c1.clone());
        let parsed = lat.parse_class("3D-E1-E2-E3-E4-E5-E6", &aliases).unwrap();
        assert_eq!(parsed, c1);
        let parsed = lat.parse_class("2*c1", &aliases).unwrap();
        assert_eq!(parsed, c1.scale_i64(2));
        let parsed = lat.parse_class("c1 - 2D", &aliases).unwrap();
        assert_eq!(parsed, ClassVec::from_i64(&[1, -1, -1, -1, -1, -1, -1]));
        assert!(lat.parse_class("c1+Q7", &aliases).is_err());
        assert_eq!(lat.render_class(&ClassVec::from_i64(&[2, 0, -1, 0, 0, 0, 3])), "2D-E2+3E6");
    }
}
