//! Newton polyhedra of operator supports, computed with exact rational
//! arithmetic.
//!
//! The polyhedron of a support `S ⊂ ℤ₊ⁿ` is `conv({0} ∪ S)`. Hull facets are
//! found by desk-scale enumeration: every facet not through the origin is the
//! solution of an `n×n` rational system `⟨s,a⟩ = 1` over `n` linearly
//! independent support points, and every facet through the origin is the
//! nullspace of `n-1` such points. Supports here are tiny (tens of points,
//! small `n`), so exactness wins over asymptotics.

use crate::rational::{nullspace_vector, rank, rat_to_string, solve_linear, Rat};
use crate::symbol::{MultiIndex, OperatorSymbol};
use num::{One, Signed, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolytopeError {
    #[error("the Newton polyhedron is degenerate (not full-dimensional)")]
    Degenerate,
    #[error("point dimension {got} does not match polyhedron dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Why a polyhedron fails to be regular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrregularityWitness {
    /// The hull spans only `rank` dimensions.
    DegenerateHull { rank: usize },
    /// A facet normal in `𝒜` has a non-positive component.
    NonPositiveFacetComponent { facet: Vec<Rat>, coordinate: usize },
    /// A facet through the origin lies outside every coordinate hyperplane,
    /// so no finite `𝒜` reproduces the hull.
    NonCoordinateOriginFacet { normal: Vec<Rat> },
}

impl std::fmt::Display for IrregularityWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IrregularityWitness::DegenerateHull { rank } => {
                write!(f, "hull is degenerate (dimension {rank})")
            }
            IrregularityWitness::NonPositiveFacetComponent { facet, coordinate } => {
                let fs: Vec<String> = facet.iter().map(rat_to_string).collect();
                write!(
                    f,
                    "facet normal ({}) has non-positive component {}",
                    fs.join(","),
                    coordinate + 1
                )
            }
            IrregularityWitness::NonCoordinateOriginFacet { normal } => {
                let fs: Vec<String> = normal.iter().map(rat_to_string).collect();
                write!(f, "origin facet ({}) is not a coordinate hyperplane", fs.join(","))
            }
        }
    }
}

/// Exact Newton polyhedron: vertex set `𝒱(ℙ)` (origin included) and the
/// facet-normal set `𝒜`, each normal scaled so its facet is `⟨α,a⟩ = 1`.
///
/// Facets through the origin are kept separately: coordinate ones are
/// implicit in `α ≥ 0`, non-coordinate ones make the polyhedron irregular
/// but still participate in exact membership tests.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolyhedron {
    n: usize,
    vertices: Vec<MultiIndex>,
    facets: Vec<Vec<Rat>>,
    origin_facets: Vec<Vec<Rat>>,
    degenerate: bool,
}

impl NewtonPolyhedron {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `𝒱(ℙ)`, sorted, with the origin first.
    pub fn vertices(&self) -> &[MultiIndex] {
        &self.vertices
    }

    /// Vertices `s¹..s^m` without the origin.
    pub fn nonzero_vertices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.vertices.iter().filter(|v| !v.is_zero())
    }

    /// The facet-normal set `𝒜`.
    pub fn facets(&self) -> &[Vec<Rat>] {
        &self.facets
    }

    /// Normals of facets through the origin, oriented so the hull satisfies
    /// `⟨α,h⟩ ≥ 0`. Includes coordinate hyperplane facets.
    pub fn origin_facets(&self) -> &[Vec<Rat>] {
        &self.origin_facets
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Regular ⟺ full-dimensional, every `a ∈ 𝒜` strictly positive, and
    /// every origin facet a coordinate hyperplane.
    pub fn is_regular(&self) -> bool {
        self.irregularity_witness().is_none()
    }

    pub fn irregularity_witness(&self) -> Option<IrregularityWitness> {
        if self.degenerate {
            let points: Vec<Vec<Rat>> = self.vertices.iter().map(to_rat_row).collect();
            return Some(IrregularityWitness::DegenerateHull { rank: rank(&points) });
        }
        for facet in &self.facets {
            if let Some(coordinate) = facet.iter().position(|a| !a.is_positive()) {
                return Some(IrregularityWitness::NonPositiveFacetComponent {
                    facet: facet.clone(),
                    coordinate,
                });
            }
        }
        for h in &self.origin_facets {
            if !is_coordinate_normal(h) {
                return Some(IrregularityWitness::NonCoordinateOriginFacet { normal: h.clone() });
            }
        }
        None
    }

    /// Exact membership via the complete facet list:
    /// `α ≥ 0`, `⟨α,a⟩ ≤ 1` for all `a ∈ 𝒜`, `⟨α,h⟩ ≥ 0` for origin facets.
    pub fn contains(&self, alpha: &[Rat]) -> Result<bool, PolytopeError> {
        if self.degenerate {
            return Err(PolytopeError::Degenerate);
        }
        if alpha.len() != self.n {
            return Err(PolytopeError::DimensionMismatch {
                got: alpha.len(),
                expected: self.n,
            });
        }
        if alpha.iter().any(|c| c.is_negative()) {
            return Ok(false);
        }
        for a in &self.facets {
            if dot(alpha, a) > Rat::one() {
                return Ok(false);
            }
        }
        for h in &self.origin_facets {
            if dot(alpha, h).is_negative() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Regularity verdict for an operator: constant support (true by construction
/// of the coefficient language) plus polyhedron regularity.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub operator_constant_support: bool,
    pub polyhedron_regular: bool,
    pub witness: Option<IrregularityWitness>,
}

/// Exponents of the terms that survive the symbolic-zero test. Coefficients
/// are closed-form expressions, so the surviving support does not depend on
/// the base point.
pub fn support_of(p: &OperatorSymbol) -> Vec<MultiIndex> {
    p.terms().iter().map(|t| t.alpha.clone()).collect()
}

pub fn is_regular(p: &OperatorSymbol) -> RegularityReport {
    let np = newton_polyhedron(&support_of(p), p.dim());
    let witness = np.irregularity_witness();
    RegularityReport {
        operator_constant_support: true,
        polyhedron_regular: witness.is_none(),
        witness,
    }
}

fn to_rat_row(m: &MultiIndex) -> Vec<Rat> {
    m.0.iter()
        .map(|&a| Rat::from_integer(a.into()))
        .collect()
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .fold(Rat::zero(), |acc, v| acc + v)
}

fn is_coordinate_normal(h: &[Rat]) -> bool {
    h.iter().filter(|c| !c.is_zero()).count() == 1
}

/// Index combinations `k` out of `n`, lexicographic.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Computes `conv({0} ∪ support)` exactly. Degenerate hulls are flagged and
/// carry no facet data; their vertices are still the exact extreme points.
pub fn newton_polyhedron(support: &[MultiIndex], n: usize) -> NewtonPolyhedron {
    assert!(n > 0, "dimension must be positive");
    let mut point_set: BTreeSet<MultiIndex> = support.iter().cloned().collect();
    point_set.insert(MultiIndex::zero(n));
    let points: Vec<MultiIndex> = point_set.into_iter().collect();
    let rows: Vec<Vec<Rat>> = points.iter().map(to_rat_row).collect();
    let nonzero: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(i, _)| i)
        .collect();

    if rank(&rows) < n {
        let vertices = extreme_points(&points, &rows);
        return NewtonPolyhedron {
            n,
            vertices,
            facets: Vec::new(),
            origin_facets: Vec::new(),
            degenerate: true,
        };
    }

    // Facets not through the origin: ⟨s,a⟩ = 1 over n independent points.
    let mut facet_set: BTreeSet<Vec<Rat>> = BTreeSet::new();
    let one = Rat::one();
    for combo in combinations(nonzero.len(), n) {
        let matrix: Vec<Vec<Rat>> = combo.iter().map(|&i| rows[nonzero[i]].clone()).collect();
        let rhs = vec![one.clone(); n];
        let Some(a) = solve_linear(&matrix, &rhs) else {
            continue;
        };
        if facet_set.contains(&a) {
            continue;
        }
        if rows.iter().any(|p| dot(p, &a) > one) {
            continue;
        }
        let tight: Vec<Vec<Rat>> = rows
            .iter()
            .filter(|p| dot(p, &a) == one)
            .cloned()
            .collect();
        if rank(&tight) == n {
            facet_set.insert(a);
        }
    }

    // Facets through the origin: nullspace of n-1 independent points.
    let mut origin_set: BTreeSet<Vec<Rat>> = BTreeSet::new();
    for combo in combinations(nonzero.len(), n - 1) {
        let matrix: Vec<Vec<Rat>> = combo.iter().map(|&i| rows[nonzero[i]].clone()).collect();
        let Some(h) = nullspace_vector(&matrix, n) else {
            continue;
        };
        let mut pos = false;
        let mut neg = false;
        for p in &rows {
            let d = dot(p, &h);
            if d.is_positive() {
                pos = true;
            } else if d.is_negative() {
                neg = true;
            }
        }
        if pos && neg {
            continue;
        }
        let oriented: Vec<Rat> = if neg { h.iter().map(|c| -c).collect() } else { h };
        if origin_set.contains(&oriented) {
            continue;
        }
        let tight: Vec<Vec<Rat>> = rows
            .iter()
            .filter(|p| dot(p, &oriented).is_zero())
            .cloned()
            .collect();
        if rank(&tight) == n - 1 {
            origin_set.insert(oriented);
        }
    }

    let facets: Vec<Vec<Rat>> = facet_set.into_iter().collect();
    let origin_facets: Vec<Vec<Rat>> = origin_set.into_iter().collect();

    // A point is a vertex exactly when its tight facet normals span ℝⁿ.
    let mut vertices = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut tight_normals: Vec<Vec<Rat>> = Vec::new();
        for a in &facets {
            if dot(&rows[i], a) == one {
                tight_normals.push(a.clone());
            }
        }
        for h in &origin_facets {
            if dot(&rows[i], h).is_zero() {
                tight_normals.push(h.clone());
            }
        }
        if rank(&tight_normals) == n {
            vertices.push(p.clone());
        }
    }

    NewtonPolyhedron {
        n,
        vertices,
        facets,
        origin_facets,
        degenerate: false,
    }
}

/// Extreme points of a (possibly degenerate) point set: `p` is extreme iff it
/// is not a convex combination of the others. Carathéodory membership over
/// exhaustive small subsets keeps this exact.
fn extreme_points(points: &[MultiIndex], rows: &[Vec<Rat>]) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        let others: Vec<Vec<Rat>> = rows
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| r.clone())
            .collect();
        if !convex_hull_contains(&others, &rows[i]) {
            out.push(points[i].clone());
        }
    }
    out
}

/// Exact convex-combination membership by enumerating affinely independent
/// subsets of size ≤ dim+1 and solving for barycentric coordinates.
fn convex_hull_contains(points: &[Vec<Rat>], target: &[Rat]) -> bool {
    if points.is_empty() {
        return false;
    }
    let n = target.len();
    let dim_bound = rank(points).min(n) + 1;
    for k in 1..=dim_bound.min(points.len()) {
        for combo in combinations(points.len(), k) {
            if barycentric_member(&combo.iter().map(|&i| points[i].clone()).collect::<Vec<_>>(), target) {
                return true;
            }
        }
    }
    false
}

/// Is `target` a convex combination of exactly these `k` points? Solved as an
/// augmented system with the affine row `Σλ = 1`; non-unique systems are
/// skipped (a smaller subset will witness membership).
fn barycentric_member(pts: &[Vec<Rat>], target: &[Rat]) -> bool {
    let k = pts.len();
    let n = target.len();
    // Build (n+1) x k system; pick k independent rows for the solve.
    let mut matrix: Vec<Vec<Rat>> = (0..n)
        .map(|c| pts.iter().map(|p| p[c].clone()).collect())
        .collect();
    matrix.push(vec![Rat::one(); k]);
    let mut rhs: Vec<Rat> = target.to_vec();
    rhs.push(Rat::one());

    // Gaussian elimination on the overdetermined system.
    let rows_total = n + 1;
    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut aug: Vec<(Vec<Rat>, Rat)> = matrix.into_iter().zip(rhs).collect();
    let mut r = 0;
    for col in 0..k {
        let Some(p) = (r..rows_total).find(|&i| !aug[i].0[col].is_zero()) else {
            return false; // dependent subset; a smaller one decides
        };
        aug.swap(r, p);
        let inv = aug[r].0[col].clone();
        for i in 0..rows_total {
            if i == r || aug[i].0[col].is_zero() {
                continue;
            }
            let factor = &aug[i].0[col] / &inv;
            for c in 0..k {
                let sub = &factor * &aug[r].0[c];
                aug[i].0[c] -= sub;
            }
            let sub = &factor * &aug[r].1;
            aug[i].1 -= sub;
        }
        pivot_rows.push(r);
        r += 1;
    }
    // Consistency of the remaining rows.
    for i in r..rows_total {
        if !aug[i].1.is_zero() {
            return false;
        }
    }
    // Read off λ and check non-negativity.
    for (row, col) in pivot_rows.iter().zip(0..k) {
        let lambda = &aug[*row].1 / &aug[*row].0[col];
        if lambda.is_negative() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::symbol::parse_operator;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn ratvec(v: &[(i64, i64)]) -> Vec<Rat> {
        v.iter().map(|&(p, q)| rat(p, q)).collect()
    }

    #[test]
    fn laplacian_polyhedron() {
        let np = newton_polyhedron(&[mi(&[2, 0]), mi(&[0, 2])], 2);
        assert_eq!(
            np.vertices(),
            &[mi(&[0, 0]), mi(&[0, 2]), mi(&[2, 0])]
        );
        assert_eq!(np.facets(), &[ratvec(&[(1, 2), (1, 2)])]);
        assert!(np.is_regular());
    }

    #[test]
    fn fourth_order_two_facets() {
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3])], 2);
        let mut vs = np.vertices().to_vec();
        vs.sort();
        assert_eq!(vs, vec![mi(&[0, 0]), mi(&[0, 4]), mi(&[2, 3]), mi(&[4, 0])]);
        let mut facets = np.facets().to_vec();
        facets.sort();
        assert_eq!(
            facets,
            vec![ratvec(&[(1, 8), (1, 4)]), ratvec(&[(1, 4), (1, 6)])]
        );
    }

    #[test]
    fn quasielliptic_simplex_single_facet() {
        // S = {m_j e_j} gives the single facet Σ e_j / m_j.
        let np = newton_polyhedron(&[mi(&[2, 0, 0]), mi(&[0, 4, 0]), mi(&[0, 0, 6])], 3);
        assert_eq!(np.facets().len(), 1);
        assert_eq!(np.facets()[0], ratvec(&[(1, 2), (1, 4), (1, 6)]));
        assert!(np.is_regular());
    }

    #[test]
    fn contains_on_laplacian() {
        let np = newton_polyhedron(&[mi(&[2, 0]), mi(&[0, 2])], 2);
        assert!(np.contains(&ratvec(&[(1, 1), (1, 1)])).unwrap());
        assert!(!np.contains(&ratvec(&[(3, 1), (0, 1)])).unwrap());
        let np4 = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3])], 2);
        assert!(np4.contains(&ratvec(&[(2, 1), (2, 1)])).unwrap());
    }

    #[test]
    fn degenerate_hull_flagged() {
        let p = parse_operator("D1^2", 2).unwrap();
        let report = is_regular(&p);
        assert!(!report.polyhedron_regular);
        assert!(matches!(
            report.witness,
            Some(IrregularityWitness::DegenerateHull { rank: 1 })
        ));
        let np = newton_polyhedron(&support_of(&p), 2);
        assert!(np.contains(&ratvec(&[(1, 1), (0, 1)])).is_err());
        // Extreme points of the segment are still exact.
        assert_eq!(np.vertices(), &[mi(&[0, 0]), mi(&[2, 0])]);
    }

    #[test]
    fn zero_component_facet_is_irregular() {
        // Support {(2,0),(2,4)}: the facet through both has normal (1/2, 0).
        let np = newton_polyhedron(&[mi(&[2, 0]), mi(&[2, 4])], 2);
        assert!(!np.is_regular());
        match np.irregularity_witness().unwrap() {
            IrregularityWitness::NonPositiveFacetComponent { facet, coordinate } => {
                assert_eq!(facet, ratvec(&[(1, 2), (0, 1)]));
                assert_eq!(coordinate, 1);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn non_coordinate_origin_facet_is_irregular() {
        // conv{0,(1,2),(2,1)} has positive 𝒜 but slanted origin edges.
        let np = newton_polyhedron(&[mi(&[1, 2]), mi(&[2, 1])], 2);
        assert_eq!(np.facets(), &[ratvec(&[(1, 3), (1, 3)])]);
        assert!(!np.is_regular());
        // Exact membership still knows e2 is outside.
        assert!(!np.contains(&ratvec(&[(0, 1), (1, 1)])).unwrap());
        assert!(np.contains(&ratvec(&[(1, 1), (1, 1)])).unwrap());
    }

    #[test]
    fn support_of_prunes_zero_terms() {
        let p = parse_operator("0*D1 + D2", 2).unwrap();
        assert_eq!(support_of(&p), vec![mi(&[0, 1])]);
        let heat = parse_operator("i*D1 + D2^2", 2).unwrap();
        assert_eq!(support_of(&heat), vec![mi(&[0, 2]), mi(&[1, 0])]);
    }

    #[test]
    fn idempotent_on_vertices() {
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3]), mi(&[1, 1])], 2);
        let again = newton_polyhedron(np.vertices(), 2);
        assert_eq!(np, again);
    }

    #[test]
    fn vertex_not_in_interior() {
        // (1,1) is inside the 4th-order hull, not a vertex.
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3]), mi(&[1, 1])], 2);
        assert!(!np.vertices().contains(&mi(&[1, 1])));
    }

    #[test]
    fn heat_facet() {
        let p = parse_operator("i*D1 + D2^2", 2).unwrap();
        let np = newton_polyhedron(&support_of(&p), 2);
        assert_eq!(np.facets(), &[vec![rat_int(1), rat(1, 2)]]);
    }
}
