//! Anisotropy data derived from a regular Newton polyhedron: the exponents
//! `μ_j = max_{a∈𝒜} 1/a_j`, `μ = max_j μ_j`, the dilation weights
//! `q_j = μ/μ_j`, the order function `k(α) = max_{a∈𝒜} ⟨α,a⟩`, and the two
//! weight functions
//!
//! ```text
//! |ξ|_ℙ = (Σ_i (ξ^{2sⁱ})^{1/μ})^{1/2}      (sum over nonzero vertices)
//! |ξ|_q = (Σ_j |ξ_j|^{2/q_j})^{1/2}
//! ```
//!
//! together with the quasihomogeneous dilations `ξ_j ↦ t^{q_j} ξ_j` and the
//! q-quasiconic sectors they leave invariant.

use crate::polytope::NewtonPolyhedron;
use crate::rational::{rat_to_f64, Rat};
use crate::symbol::MultiIndex;
use num::{One, Zero};
use thiserror::Error;

/// Canonical sector half-width on the unit q-quasisphere.
pub const DEFAULT_SECTOR_RADIUS: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("the Newton polyhedron is not regular: {0}")]
    Irregular(String),
    #[error("q-quasiconic sectors live in ℝⁿ∖{{0}}; ξ = 0 has no direction")]
    ZeroFrequency,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn require_regular(np: &NewtonPolyhedron) -> Result<(), WeightError> {
    match np.irregularity_witness() {
        None => Ok(()),
        Some(w) => Err(WeightError::Irregular(w.to_string())),
    }
}

/// Exact anisotropy exponents of a regular polyhedron.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyData {
    mu: Vec<Rat>,
    mu_max: Rat,
    q: Vec<Rat>,
}

impl AnisotropyData {
    /// `μ_j`, per coordinate.
    pub fn mu(&self) -> &[Rat] {
        &self.mu
    }

    /// `μ = max_j μ_j`.
    pub fn mu_max(&self) -> &Rat {
        &self.mu_max
    }

    pub fn mu_max_f64(&self) -> f64 {
        rat_to_f64(&self.mu_max)
    }

    /// The dilation weight vector `q`.
    pub fn q(&self) -> &[Rat] {
        &self.q
    }

    pub fn q_f64(&self) -> Vec<f64> {
        self.q.iter().map(rat_to_f64).collect()
    }
}

/// `μ_j = max_{a∈𝒜} a_j⁻¹`, `μ = max μ_j`, `q = (μ/μ_1, …, μ/μ_n)`.
pub fn anisotropy(np: &NewtonPolyhedron) -> Result<AnisotropyData, WeightError> {
    require_regular(np)?;
    let n = np.dim();
    let mut mu: Vec<Rat> = vec![Rat::zero(); n];
    for a in np.facets() {
        for j in 0..n {
            let inv = Rat::one() / &a[j];
            if inv > mu[j] {
                mu[j] = inv;
            }
        }
    }
    let mu_max = mu.iter().cloned().fold(Rat::zero(), |acc, v| acc.max(v));
    let q: Vec<Rat> = mu.iter().map(|m| &mu_max / m).collect();
    Ok(AnisotropyData { mu, mu_max, q })
}

/// Order function `k(α) = inf{t > 0 : α/t ∈ ℙ} = max_{a∈𝒜} ⟨α,a⟩`.
pub fn k_of(np: &NewtonPolyhedron, alpha: &MultiIndex) -> Result<Rat, WeightError> {
    require_regular(np)?;
    Ok(np
        .facets()
        .iter()
        .map(|a| alpha.dot_rat(a))
        .fold(Rat::zero(), |acc, v| acc.max(v)))
}

/// `|ξ|_ℙ`, evaluated through the nonzero vertices of the polyhedron.
pub fn weight_p(np: &NewtonPolyhedron, data: &AnisotropyData, xi: &[f64]) -> f64 {
    Weights::new(np, data).norm_p(xi)
}

/// `|ξ|_q`. Negative components enter through their absolute value, which
/// keeps the weight real and even.
pub fn weight_q(q: &[f64], xi: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), xi.len());
    xi.iter()
        .zip(q)
        .map(|(&x, &qj)| x.abs().powf(2.0 / qj))
        .sum::<f64>()
        .sqrt()
}

/// Quasihomogeneous dilation `(t^{q_1}ξ_1, …, t^{q_n}ξ_n)`.
pub fn dilate(q: &[f64], t: f64, xi: &[f64]) -> Vec<f64> {
    debug_assert!(t > 0.0);
    xi.iter()
        .zip(q)
        .map(|(&x, &qj)| t.powf(qj) * x)
        .collect()
}

/// A q-quasiconic sector: all dilates of a Euclidean ball of radius `radius`
/// around `anchor` on the unit q-quasisphere.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiconicSector {
    q: Vec<f64>,
    anchor: Vec<f64>,
    radius: f64,
}

impl QuasiconicSector {
    /// Builds the sector around `direction` (any nonzero vector; it is
    /// projected to the unit q-quasisphere).
    pub fn new(q: Vec<f64>, direction: &[f64], radius: f64) -> Result<Self, WeightError> {
        if direction.len() != q.len() {
            return Err(WeightError::DimensionMismatch {
                expected: q.len(),
                got: direction.len(),
            });
        }
        let norm = weight_q(&q, direction);
        if norm == 0.0 || !norm.is_finite() {
            return Err(WeightError::ZeroFrequency);
        }
        let anchor = dilate(&q, 1.0 / norm, direction);
        Ok(QuasiconicSector { q, anchor, radius })
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Membership is dilation-invariant by construction: `ξ` is projected to
    /// the unit q-quasisphere and compared with the anchor.
    pub fn contains(&self, xi: &[f64]) -> Result<bool, WeightError> {
        let norm = weight_q(&self.q, xi);
        if norm == 0.0 {
            return Err(WeightError::ZeroFrequency);
        }
        let proj = dilate(&self.q, 1.0 / norm, xi);
        let dist2: f64 = proj
            .iter()
            .zip(&self.anchor)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(dist2.sqrt() <= self.radius)
    }
}

/// Free-function form of [`QuasiconicSector::contains`].
pub fn sector_contains(sector: &QuasiconicSector, xi: &[f64]) -> Result<bool, WeightError> {
    sector.contains(xi)
}

/// Float-ready bundle of both weight functions for hot sampling loops.
#[derive(Debug, Clone)]
pub struct Weights {
    vertex_exponents: Vec<Vec<u32>>,
    inv_mu: f64,
    mu: f64,
    q: Vec<f64>,
}

impl Weights {
    pub fn new(np: &NewtonPolyhedron, data: &AnisotropyData) -> Self {
        let vertex_exponents = np
            .nonzero_vertices()
            .map(|v| v.0.iter().map(|&s| 2 * s).collect())
            .collect();
        Weights {
            vertex_exponents,
            inv_mu: 1.0 / data.mu_max_f64(),
            mu: data.mu_max_f64(),
            q: data.q_f64(),
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `|ξ|_ℙ`.
    pub fn norm_p(&self, xi: &[f64]) -> f64 {
        let mut sum = 0.0;
        for exps in &self.vertex_exponents {
            let mut mono = 1.0;
            for (&e, &x) in exps.iter().zip(xi) {
                if e > 0 {
                    mono *= x.powi(e as i32);
                }
            }
            sum += mono.powf(self.inv_mu);
        }
        sum.sqrt()
    }

    /// `|ξ|_q`.
    pub fn norm_q(&self, xi: &[f64]) -> f64 {
        weight_q(&self.q, xi)
    }

    pub fn dilate(&self, t: f64, xi: &[f64]) -> Vec<f64> {
        dilate(&self.q, t, xi)
    }

    /// Projection to the unit q-quasisphere; `None` for `ξ = 0`.
    pub fn unit_q(&self, xi: &[f64]) -> Option<Vec<f64>> {
        let norm = self.norm_q(xi);
        if norm == 0.0 || !norm.is_finite() {
            None
        } else {
            Some(self.dilate(1.0 / norm, xi))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::newton_polyhedron;
    use crate::rational::{rat, rat_int};

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn simplex(m: &[u32]) -> NewtonPolyhedron {
        let n = m.len();
        let support: Vec<MultiIndex> = m
            .iter()
            .enumerate()
            .map(|(j, &mj)| MultiIndex::unit(n, j, mj))
            .collect();
        newton_polyhedron(&support, n)
    }

    #[test]
    fn quasielliptic_simplex_anisotropy() {
        let np = simplex(&[2, 4]);
        let data = anisotropy(&np).unwrap();
        assert_eq!(data.mu(), &[rat_int(2), rat_int(4)]);
        assert_eq!(data.mu_max(), &rat_int(4));
        assert_eq!(data.q(), &[rat_int(2), rat_int(1)]);
    }

    #[test]
    fn heat_anisotropy() {
        let np = newton_polyhedron(&[mi(&[1, 0]), mi(&[0, 2])], 2);
        let data = anisotropy(&np).unwrap();
        assert_eq!(data.mu(), &[rat_int(1), rat_int(2)]);
        assert_eq!(data.mu_max(), &rat_int(2));
        assert_eq!(data.q(), &[rat_int(2), rat_int(1)]);
    }

    #[test]
    fn fourth_order_anisotropy() {
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3])], 2);
        let data = anisotropy(&np).unwrap();
        assert_eq!(data.mu(), &[rat_int(8), rat_int(6)]);
        assert_eq!(data.mu_max(), &rat_int(8));
        assert_eq!(data.q(), &[rat_int(1), rat(4, 3)]);
    }

    #[test]
    fn irregular_polyhedron_is_an_error() {
        let np = newton_polyhedron(&[mi(&[2, 0])], 2);
        assert!(matches!(anisotropy(&np), Err(WeightError::Irregular(_))));
        assert!(matches!(
            k_of(&np, &mi(&[1, 0])),
            Err(WeightError::Irregular(_))
        ));
    }

    #[test]
    fn k_is_one_on_vertices() {
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3])], 2);
        for v in np.nonzero_vertices() {
            assert_eq!(k_of(&np, v).unwrap(), rat_int(1));
        }
        assert_eq!(k_of(&np, &mi(&[0, 0])).unwrap(), rat_int(0));
    }

    #[test]
    fn k_on_simplex_is_scaled_q_pairing() {
        let np = simplex(&[2, 4]);
        let data = anisotropy(&np).unwrap();
        let m = rat_int(4);
        for a1 in 0..=6u32 {
            for a2 in 0..=6u32 {
                let alpha = mi(&[a1, a2]);
                let expect = alpha.dot_rat(data.q()) / &m;
                assert_eq!(k_of(&np, &alpha).unwrap(), expect);
            }
        }
    }

    #[test]
    fn fourth_order_k_value() {
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3])], 2);
        assert_eq!(k_of(&np, &mi(&[1, 1])).unwrap(), rat(5, 12));
    }

    #[test]
    fn laplacian_weight_is_euclidean() {
        let np = simplex(&[2, 2]);
        let data = anisotropy(&np).unwrap();
        for &(x, y) in &[(3.0, 4.0), (-1.5, 2.0), (0.1, -0.7)] {
            let w = weight_p(&np, &data, &[x, y]);
            let e = (x * x + y * y).sqrt();
            assert!((w - e).abs() <= 1e-12 * e.max(1.0));
        }
    }

    #[test]
    fn heat_weight_closed_form() {
        let np = newton_polyhedron(&[mi(&[1, 0]), mi(&[0, 2])], 2);
        let data = anisotropy(&np).unwrap();
        for &(tau, xi2) in &[(2.0, 3.0), (-5.0, 0.5), (0.25, -2.0)] {
            let w = weight_p(&np, &data, &[tau, xi2]);
            let e = (tau.abs() + xi2 * xi2).sqrt();
            assert!((w - e).abs() <= 1e-12 * e.max(1.0));
        }
    }

    #[test]
    fn fourth_order_weight_at_ones() {
        let np = newton_polyhedron(&[mi(&[4, 0]), mi(&[0, 4]), mi(&[2, 3])], 2);
        let data = anisotropy(&np).unwrap();
        let w = weight_p(&np, &data, &[1.0, 1.0]);
        assert!((w - 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weight_q_values() {
        assert!((weight_q(&[1.0, 1.0], &[3.0, 4.0]) - 5.0).abs() < 1e-12);
        assert!((weight_q(&[2.0, 1.0], &[4.0, 0.0]) - 2.0).abs() < 1e-12);
        assert_eq!(weight_q(&[2.0, 1.0], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn dilate_basics() {
        let xi = [1.0, 1.0];
        assert_eq!(dilate(&[2.0, 1.0], 1.0, &xi), vec![1.0, 1.0]);
        assert_eq!(dilate(&[2.0, 1.0], 2.0, &xi), vec![4.0, 2.0]);
        // dilation scales |·|_q exactly one-homogeneously
        let q = [2.0, 1.0];
        let w0 = weight_q(&q, &xi);
        let w2 = weight_q(&q, &dilate(&q, 2.0, &xi));
        assert!((w2 - 2.0 * w0).abs() < 1e-12 * w0);
    }

    #[test]
    fn sector_membership() {
        let q = vec![1.0, 1.0];
        let sector = QuasiconicSector::new(q.clone(), &[1.0, 0.0], 0.1).unwrap();
        assert!(sector.contains(&[1.0, 0.0]).unwrap());
        assert!(sector.contains(&[5.0, 0.0]).unwrap());
        assert!(!sector.contains(&[0.0, 1.0]).unwrap());
        assert!(sector.contains(&[0.0, 0.0]).is_err());
        // dilates of the anchor stay inside
        let anchored = dilate(&q, 37.5, sector.anchor());
        assert!(sector.contains(&anchored).unwrap());
    }
}
