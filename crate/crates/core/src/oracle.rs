//! Independent genus-0 plane counts: the classical quadratic recursion for
//! the complex numbers N_d, and a floor-diagram enumerator producing both the
//! complex counts and the totally-real signed counts.
//!
//! A floor diagram of degree d has floors 1 < 2 < ... < d, a tree of weighted
//! elevator edges directed downward, and one unit weight downward end per
//! unit of uncollected flow (each floor sources one unit). A marking places
//! 3d-1 labels on floors, edges, and ends compatibly with the partial order:
//! floor chain, lower endpoint < edge < upper endpoint, end < its floor.
//! Counts: complex multiplicity is the product of squared bounded weights;
//! the real multiplicity vanishes on any even bounded weight and is +1
//! otherwise (a weight-w elevator attaches to a floor at both ends, so its
//! two odd-weight vertex signs cancel). The rule is pinned by the anchor
//! values W(1) = 1, W(2) = 1, W(3) = 8 and corroborated at degrees 4 and 5
//! in the tests.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::{Error, Result};

fn bigint_as_string<S: Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// N_1 = 1 and the quadratic recursion
/// N_d = Σ_{d1+d2=d} N_{d1} N_{d2} d1² d2 (d2 C(3d-4, 3d1-2) - d1 C(3d-4, 3d1-1)).
pub fn kontsevich_nd(d: u32) -> BigInt {
    assert!(d >= 1, "degree must be positive");
    let mut table: Vec<BigInt> = vec![BigInt::zero(), BigInt::one()];
    for n in 2..=d as i64 {
        let mut acc = BigInt::zero();
        for d1 in 1..n {
            let d2 = n - d1;
            let c1 = crate::combinatorics::binomial(3 * n - 4, 3 * d1 - 2);
            let c2 = crate::combinatorics::binomial(3 * n - 4, 3 * d1 - 1);
            let weight = BigInt::from(d2) * c1 - BigInt::from(d1) * c2;
            acc += &table[d1 as usize]
                * &table[d2 as usize]
                * BigInt::from(d1 * d1)
                * BigInt::from(d2)
                * weight;
        }
        table.push(acc);
    }
    table[d as usize].clone()
}

/// Bounded elevator between two floors, directed downward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagEdge {
    pub upper: usize,
    pub lower: usize,
    pub weight: u32,
}

/// A degree-d genus-0 floor diagram. `ends[v]` counts the unit downward ends
/// at floor v+1; they always total d.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FloorDiagram {
    pub degree: u32,
    pub edges: Vec<DiagEdge>,
    pub ends: Vec<u32>,
}

/// One diagram with its marking count and multiplicities.
#[derive(Clone, Debug, Serialize)]
pub struct CountedDiagram {
    pub diagram: FloorDiagram,
    #[serde(serialize_with = "bigint_as_string")]
    pub markings: BigInt,
    #[serde(serialize_with = "bigint_as_string")]
    pub complex_mult: BigInt,
    #[serde(serialize_with = "bigint_as_string")]
    pub real_mult: BigInt,
}

/// Totals over all diagrams of one degree.
#[derive(Clone, Debug, Serialize)]
pub struct OracleTotals {
    pub degree: u32,
    #[serde(serialize_with = "bigint_as_string")]
    pub complex_total: BigInt,
    #[serde(serialize_with = "bigint_as_string")]
    pub real_total: BigInt,
    pub diagram_count: usize,
}

const DEFAULT_DEGREE_BOUND: u32 = 6;

/// Exhaustively enumerate floor diagrams of the given degree, one per
/// isomorphism class (the ordered floors make the sorted weighted edge list a
/// canonical form).
pub fn enumerate_diagrams(degree: u32, bound: Option<u32>) -> Result<Vec<CountedDiagram>> {
    let bound = bound.unwrap_or(DEFAULT_DEGREE_BOUND);
    if degree == 0 || degree > bound {
        return Err(Error::Validation(format!(
            "degree {degree} outside the supported range 1..={bound}"
        )));
    }
    let d = degree as usize;
    let mut out = Vec::new();
    // candidate elevator slots (upper > lower), in canonical order
    let mut slots = Vec::new();
    for upper in 2..=d {
        for lower in 1..upper {
            slots.push((upper, lower));
        }
    }
    let mut chosen: Vec<usize> = Vec::new();
    choose_trees(d, &slots, 0, &mut chosen, &mut |tree| {
        let mut weights = vec![1u32; tree.len()];
        assign_weights(d, tree, &mut weights, 0, &mut |w| {
            if let Some(diagram) = finish_diagram(degree, tree, w) {
                out.push(count_diagram(diagram));
            }
        });
    });
    Ok(out)
}

fn choose_trees(
    d: usize,
    slots: &[(usize, usize)],
    from: usize,
    chosen: &mut Vec<usize>,
    emit: &mut impl FnMut(&[(usize, usize)]),
) {
    if chosen.len() == d - 1 {
        let edges: Vec<(usize, usize)> = chosen.iter().map(|&i| slots[i]).collect();
        if spans(d, &edges) {
            emit(&edges);
        }
        return;
    }
    let needed = d - 1 - chosen.len();
    if slots.len() - from < needed {
        return;
    }
    for i in from..slots.len() {
        chosen.push(i);
        choose_trees(d, slots, i + 1, chosen, emit);
        chosen.pop();
    }
}

fn spans(d: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..=d).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merged = 0;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
        merged += 1;
    }
    merged == d - 1
}

/// Assign weights edge by edge, keeping every floor's outflow within its
/// budget: out(v) ≤ in(v) + 1, processing floors top down so the budget on
/// the current floor is known.
fn assign_weights(
    d: usize,
    tree: &[(usize, usize)],
    weights: &mut Vec<u32>,
    idx: usize,
    emit: &mut impl FnMut(&[u32]),
) {
    // order edges by upper floor descending so inflow is settled before
    // outflow is distributed
    let mut order: Vec<usize> = (0..tree.len()).collect();
    order.sort_by(|&a, &b| tree[b].0.cmp(&tree[a].0).then(tree[a].1.cmp(&tree[b].1)));
    assign_ordered(d, tree, &order, weights, idx, emit);
}

fn assign_ordered(
    d: usize,
    tree: &[(usize, usize)],
    order: &[usize],
    weights: &mut Vec<u32>,
    idx: usize,
    emit: &mut impl FnMut(&[u32]),
) {
    if idx == order.len() {
        emit(weights);
        return;
    }
    let e = order[idx];
    let upper = tree[e].0;
    // inflow into `upper` from already-assigned higher edges
    let mut inflow = 0u32;
    for (&o, pos) in order.iter().zip(0..) {
        if pos >= idx {
            break;
        }
        if tree[o].1 == upper {
            inflow += weights[o];
        }
    }
    // outflow already assigned from `upper` among earlier edges of the order
    let mut used = 0u32;
    for (&o, pos) in order.iter().zip(0..) {
        if pos >= idx {
            break;
        }
        if tree[o].0 == upper {
            used += weights[o];
        }
    }
    let budget = inflow + 1;
    if used >= budget {
        return;
    }
    for w in 1..=(budget - used).min(d as u32) {
        weights[e] = w;
        assign_ordered(d, tree, order, weights, idx + 1, emit);
    }
    weights[e] = 1;
}

/// Check global balance and derive the unit end counts.
fn finish_diagram(degree: u32, tree: &[(usize, usize)], weights: &[u32]) -> Option<FloorDiagram> {
    let d = degree as usize;
    let mut inflow = vec![0u32; d + 1];
    let mut outflow = vec![0u32; d + 1];
    for (&(upper, lower), &w) in tree.iter().zip(weights) {
        outflow[upper] += w;
        inflow[lower] += w;
    }
    let mut ends = vec![0u32; d];
    let mut total = 0u32;
    for v in 1..=d {
        let budget = inflow[v] + 1;
        if outflow[v] > budget {
            return None;
        }
        ends[v - 1] = budget - outflow[v];
        total += ends[v - 1];
    }
    debug_assert_eq!(total, degree);
    let mut edges: Vec<DiagEdge> = tree
        .iter()
        .zip(weights)
        .map(|(&(upper, lower), &w)| DiagEdge { upper, lower, weight: w })
        .collect();
    edges.sort_by_key(|e| (e.upper, e.lower));
    Some(FloorDiagram { degree, edges, ends })
}

fn count_diagram(diagram: FloorDiagram) -> CountedDiagram {
    let markings = marking_count(&diagram);
    let mut complex_mult = BigInt::one();
    let mut real_zero = false;
    for e in &diagram.edges {
        complex_mult *= BigInt::from(e.weight) * BigInt::from(e.weight);
        if e.weight % 2 == 0 {
            real_zero = true;
        }
    }
    let real_mult = if real_zero { BigInt::zero() } else { BigInt::one() };
    CountedDiagram { diagram, markings, complex_mult, real_mult }
}

/// Linear extensions of the diagram poset divided by the end symmetries.
fn marking_count(diagram: &FloorDiagram) -> BigInt {
    let d = diagram.degree as usize;
    // elements: floors 0..d, edges d..d+m, ends after that
    let m = diagram.edges.len();
    let total = d + m + diagram.ends.iter().sum::<u32>() as usize;
    debug_assert_eq!(total, 3 * d - 1);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); total];
    for v in 1..d {
        preds[v].push(v - 1);
    }
    for (i, e) in diagram.edges.iter().enumerate() {
        let id = d + i;
        preds[id].push(e.lower - 1);
        preds[e.upper - 1].push(id);
    }
    let mut next = d + m;
    for (v, &count) in diagram.ends.iter().enumerate() {
        for _ in 0..count {
            preds[v].push(next);
            next += 1;
        }
    }
    let pred_masks: Vec<u32> = preds
        .iter()
        .map(|ps| ps.iter().fold(0u32, |acc, &p| acc | (1 << p)))
        .collect();
    let full: u32 = if total == 32 { u32::MAX } else { (1u32 << total) - 1 };
    let mut memo: std::collections::HashMap<u32, BigInt> = std::collections::HashMap::new();
    let extensions = extension_count(full, &pred_masks, total, &mut memo);
    let mut symmetry = BigInt::one();
    for &count in &diagram.ends {
        for i in 2..=count {
            symmetry *= BigInt::from(i);
        }
    }
    let (q, r) = num_integer::Integer::div_rem(&extensions, &symmetry);
    debug_assert!(r.is_zero(), "end symmetry must divide the extension count");
    q
}

fn extension_count(
    placed_target: u32,
    pred_masks: &[u32],
    total: usize,
    memo: &mut std::collections::HashMap<u32, BigInt>,
) -> BigInt {
    fn rec(
        mask: u32,
        pred_masks: &[u32],
        total: usize,
        memo: &mut std::collections::HashMap<u32, BigInt>,
    ) -> BigInt {
        if mask == 0 {
            return BigInt::one();
        }
        if let Some(hit) = memo.get(&mask) {
            return hit.clone();
        }
        // remove one maximal element of the remaining set at a time
        let mut acc = BigInt::zero();
        for x in 0..total {
            let bit = 1u32 << x;
            if mask & bit == 0 {
                continue;
            }
            // x can be last among `mask` iff nothing in mask requires x first:
            // all successors of x must be outside mask; equivalently x is not
            // a predecessor of any element of mask
            let mut is_max = true;
            for y in 0..total {
                let yb = 1u32 << y;
                if mask & yb != 0 && pred_masks[y] & bit != 0 {
                    is_max = false;
                    break;
                }
            }
            if is_max {
                acc += rec(mask & !bit, pred_masks, total, memo);
            }
        }
        memo.insert(mask, acc.clone());
        acc
    }
    rec(placed_target, pred_masks, total, memo)
}

/// Complex total over all diagrams; agrees with `kontsevich_nd`.
pub fn complex_total(degree: u32, bound: Option<u32>) -> Result<BigInt> {
    Ok(enumerate_diagrams(degree, bound)?
        .iter()
        .map(|c| &c.markings * &c.complex_mult)
        .sum())
}

/// Totally-real signed count from the diagram enumeration.
pub fn welschinger_s0(degree: u32, bound: Option<u32>) -> Result<BigInt> {
    Ok(enumerate_diagrams(degree, bound)?
        .iter()
        .map(|c| &c.markings * &c.real_mult)
        .sum())
}

pub fn totals(degree: u32, bound: Option<u32>) -> Result<OracleTotals> {
    let diagrams = enumerate_diagrams(degree, bound)?;
    Ok(OracleTotals {
        degree,
        complex_total: diagrams.iter().map(|c| &c.markings * &c.complex_mult).sum(),
        real_total: diagrams.iter().map(|c| &c.markings * &c.real_mult).sum(),
        diagram_count: diagrams.len(),
    })
}
