//! Sampling-based certification of symbol estimates: multi-quasiellipticity,
//! the two-inequality microlocal condition behind the Σ set, grid search for
//! its best `(ρ, δ, μ′)` parameters, the propagated Gevrey index `s′`, and
//! characteristic-direction sampling.
//!
//! Verdicts are "holds on the sampled set", never proofs: each check sweeps a
//! ladder of q-quasispherical shells with seeded deterministic samples and
//! requires the extracted constant to stabilize across the top of the ladder.

use crate::polytope::{newton_polyhedron, support_of, NewtonPolyhedron};
use crate::rational::Rat;
use crate::sampling::{ball_points, sector_directions, unit_sphere_directions};
use crate::symbol::{MultiIndex, OperatorSymbol};
use crate::weights::{anisotropy, AnisotropyData, QuasiconicSector, WeightError, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_LADDER: [f64; 4] = [1e1, 1e2, 1e3, 1e4];
pub const DEFAULT_SPHERE_SAMPLES: usize = 4096;
pub const DEFAULT_SECTOR_SAMPLES: usize = 256;
pub const DEFAULT_U_RADIUS: f64 = 0.5;
pub const DEFAULT_X_SAMPLES: usize = 64;
pub const DEFAULT_ALPHA_MAX: u32 = 4;

/// Ratios below this are treated as a symbol zero (after local refinement).
const VANISH_TOL: f64 = 1e-5;
/// Relative change between the top two ladder shells that still counts as
/// stabilized.
const STABILIZE_REL: f64 = 0.05;
/// Constants beyond this are treated as divergent.
const DIVERGE_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("operator is not regular: {0}")]
    Irregular(String),
    #[error("the radius ladder is empty")]
    EmptyLadder,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("operator is identically zero")]
    ZeroOperator,
    #[error("facet is not a member of the polyhedron's facet set")]
    FacetNotInA,
    #[error(transparent)]
    Weight(#[from] WeightError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateVerdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Parameters quantified over by the Σ-condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaParams {
    pub rho: f64,
    pub delta: f64,
    pub mu_prime: f64,
    pub s: f64,
    pub alpha_max: u32,
    pub beta_max: u32,
}

impl SigmaParams {
    /// `0 ≤ δ < ρ ≤ 1` and `δμ < μ′ ≤ μ`, with `s ≥ 1`.
    pub fn validate(&self, mu: f64) -> Result<(), EstimateError> {
        if !(self.delta >= 0.0 && self.delta < self.rho && self.rho <= 1.0) {
            return Err(EstimateError::InvalidParams(format!(
                "need 0 <= delta < rho <= 1, got rho={}, delta={}",
                self.rho, self.delta
            )));
        }
        if !(self.delta * mu < self.mu_prime && self.mu_prime <= mu) {
            return Err(EstimateError::InvalidParams(format!(
                "need delta*mu < mu' <= mu, got mu'={}, delta*mu={}, mu={}",
                self.mu_prime,
                self.delta * mu,
                mu
            )));
        }
        if self.s < 1.0 {
            return Err(EstimateError::InvalidParams(format!(
                "need s >= 1, got {}",
                self.s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
}

/// Result of a sampling sweep. `per_radius` records the extracted constant on
/// each ladder shell, so stabilization is visible in the report.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub verdict: EstimateVerdict,
    pub c_est: f64,
    pub worst_point: Option<WorstPoint>,
    pub samples_used: usize,
    pub radius_ladder: Vec<f64>,
    pub per_radius: Vec<f64>,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Newton polyhedron, anisotropy data and float weights of a regular operator.
pub fn operator_geometry(
    p: &OperatorSymbol,
) -> Result<(NewtonPolyhedron, AnisotropyData, Weights), EstimateError> {
    let np = newton_polyhedron(&support_of(p), p.dim());
    if let Some(w) = np.irregularity_witness() {
        return Err(EstimateError::Irregular(w.to_string()));
    }
    let data = anisotropy(&np)?;
    let weights = Weights::new(&np, &data);
    Ok((np, data, weights))
}

/// Minimum of `|P(x₀,ξ)| / |ξ|_ℙ^μ` over a sampled shell `{|ξ|_q = r}`.
fn shell_min_ratio(
    p: &OperatorSymbol,
    x0: &[f64],
    weights: &Weights,
    dirs: &[Vec<f64>],
    r: f64,
) -> (f64, Vec<f64>) {
    let mu = weights.mu();
    let mut best = f64::INFINITY;
    let mut best_xi = Vec::new();
    for dir in dirs {
        let qn = weights.norm_q(dir);
        if qn == 0.0 {
            continue;
        }
        let xi = weights.dilate(r / qn, dir);
        let wp = weights.norm_p(&xi);
        if wp <= 0.0 {
            continue;
        }
        let ratio = p.eval(x0, &xi).norm() / wp.powf(mu);
        if ratio < best {
            best = ratio;
            best_xi = xi;
        }
    }
    (best, best_xi)
}

/// Deterministic local refinement of the minimizing direction: shrinking
/// Gaussian perturbations around the incumbent, projected to the shell.
fn refine_min_ratio(
    p: &OperatorSymbol,
    x0: &[f64],
    weights: &Weights,
    start_dir: &[f64],
    r: f64,
    seed: u64,
) -> (f64, Vec<f64>) {
    let mu = weights.mu();
    let n = start_dir.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    let eval = |dir: &[f64]| -> Option<(f64, Vec<f64>)> {
        let qn = weights.norm_q(dir);
        if qn == 0.0 {
            return None;
        }
        let xi = weights.dilate(r / qn, dir);
        let wp = weights.norm_p(&xi);
        if wp <= 0.0 {
            return None;
        }
        Some((p.eval(x0, &xi).norm() / wp.powf(mu), xi))
    };
    let mut best_dir = start_dir.to_vec();
    let (mut best, mut best_xi) = eval(&best_dir).unwrap_or((f64::INFINITY, best_dir.clone()));
    let mut eps = 0.05;
    for _ in 0..40 {
        for _ in 0..24 {
            let cand: Vec<f64> = best_dir
                .iter()
                .map(|&d| {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    d + eps * g
                })
                .collect();
            let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= 1e-12 {
                continue;
            }
            let cand: Vec<f64> = cand.into_iter().map(|x| x / norm).collect();
            if let Some((v, xi)) = eval(&cand) {
                if v < best {
                    best = v;
                    best_xi = xi;
                    best_dir = cand;
                }
            }
        }
        eps *= 0.7;
        let _ = n;
    }
    (best, best_xi)
}

/// Multi-quasiellipticity check: `|ξ|_ℙ^μ ≤ C |P(x₀,ξ)|` for large `ξ`,
/// certified by stabilization of the shell minima across the radius ladder.
pub fn check_multi_quasielliptic(
    p: &OperatorSymbol,
    x0: &[f64],
    ladder: &[f64],
    samples_per_sphere: usize,
    seed: u64,
) -> Result<EstimateReport, EstimateError> {
    let (_np, _data, weights) = operator_geometry(p)?;
    if ladder.is_empty() {
        return Err(EstimateError::EmptyLadder);
    }
    if p.is_zero() {
        return Err(EstimateError::ZeroOperator);
    }
    let mut ladder = ladder.to_vec();
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dirs = unit_sphere_directions(p.dim(), samples_per_sphere, seed);

    let mut per_radius = Vec::with_capacity(ladder.len());
    let mut last_xi = Vec::new();
    for &r in &ladder {
        let (m, xi) = shell_min_ratio(p, x0, &weights, &dirs, r);
        per_radius.push(m);
        last_xi = xi;
    }
    let samples_used = dirs.len() * ladder.len();

    // Confirm or rule out a symbol zero near the sampled minimum.
    let r_last = *ladder.last().unwrap();
    let start_dir: Vec<f64> = if last_xi.is_empty() {
        dirs[0].clone()
    } else {
        let qn = weights.norm_q(&last_xi);
        weights.dilate(1.0 / qn, &last_xi)
    };
    let (refined, refined_xi) = refine_min_ratio(p, x0, &weights, &start_dir, r_last, seed);

    let zero_mi = MultiIndex::zero(p.dim());
    let mut notes = Vec::new();
    let m_last = per_radius[per_radius.len() - 1];
    let verdict;
    let c_est;
    let worst_point;
    if refined < VANISH_TOL || per_radius.iter().any(|&m| m == 0.0) {
        verdict = EstimateVerdict::Fails;
        c_est = f64::INFINITY.min(1e300);
        worst_point = Some(WorstPoint {
            x: x0.to_vec(),
            xi: refined_xi,
            alpha: zero_mi.clone(),
            beta: zero_mi,
        });
        notes.push(format!(
            "symbol ratio refined to {refined:.3e} on the shell |xi|_q = {r_last}"
        ));
    } else if per_radius.len() >= 2 {
        let m_prev = per_radius[per_radius.len() - 2];
        let rel = (m_last - m_prev).abs() / m_prev.abs().max(f64::MIN_POSITIVE);
        if rel < STABILIZE_REL {
            verdict = EstimateVerdict::Holds;
            c_est = 1.0 / m_last;
            worst_point = Some(WorstPoint {
                x: x0.to_vec(),
                xi: last_xi,
                alpha: zero_mi.clone(),
                beta: zero_mi,
            });
        } else {
            verdict = EstimateVerdict::Inconclusive;
            c_est = 1.0 / m_last;
            worst_point = None;
            notes.push(format!(
                "shell minima did not stabilize: relative change {rel:.3} over the top decade"
            ));
        }
    } else {
        verdict = EstimateVerdict::Inconclusive;
        c_est = 1.0 / m_last;
        worst_point = None;
        notes.push("ladder too short to judge stabilization".into());
    }

    Ok(EstimateReport {
        verdict,
        c_est,
        worst_point,
        samples_used,
        radius_ladder: ladder,
        per_radius,
        seed,
        notes,
    })
}

fn multi_indices_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fn rec(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, axis: usize, left: u32) {
        if axis + 1 == current.len() {
            for v in 0..=left {
                current[axis] = v;
                out.push(MultiIndex(current.clone()));
            }
            current[axis] = 0;
            return;
        }
        for v in 0..=left {
            current[axis] = v;
            rec(out, current, axis + 1, left - v);
        }
        current[axis] = 0;
    }
    rec(&mut out, &mut current, 0, max_order);
    out.sort();
    out.dedup();
    out
}

/// Checks the two-sided symbol estimate
///
/// ```text
/// |ξ|_ℙ^{μ'} ≤ c |P(x,ξ)|
/// |D_x^α D_ξ^β P| ≤ c^{|α|+1} ⟨α,q⟩^{sμ⟨α,q⟩} |P| |ξ|_ℙ^{δ|α|-ρ|β|}
/// ```
///
/// over `U × (Γ ∩ shells)`, with the convention `⟨α,q⟩^{sμ⟨α,q⟩} = 1` at
/// `α = 0`. Holding at `(x₀,ξ₀)` means the pair is outside the Σ set for
/// these parameters, on this sector and sample set.
#[allow(clippy::too_many_arguments)]
pub fn check_sigma(
    p: &OperatorSymbol,
    x0: &[f64],
    sector: &QuasiconicSector,
    params: &SigmaParams,
    u_radius: f64,
    ladder: &[f64],
    samples: usize,
    seed: u64,
) -> Result<EstimateReport, EstimateError> {
    let (_np, data, weights) = operator_geometry(p)?;
    let mu = data.mu_max_f64();
    params.validate(mu)?;
    if ladder.is_empty() {
        return Err(EstimateError::EmptyLadder);
    }
    if p.is_zero() {
        return Err(EstimateError::ZeroOperator);
    }
    let mut ladder = ladder.to_vec();
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let n = p.dim();
    let constant_coeff = p.is_constant_coefficient();
    let x_points: Vec<Vec<f64>> = if constant_coeff {
        vec![x0.to_vec()]
    } else {
        let mut pts = vec![x0.to_vec()];
        pts.extend(ball_points(x0, u_radius, DEFAULT_X_SAMPLES, seed ^ 0x11));
        pts
    };
    let dirs = sector_directions(&weights, sector, samples, seed ^ 0x22);
    let q_f64 = data.q_f64();

    let alphas: Vec<MultiIndex> = if constant_coeff {
        vec![MultiIndex::zero(n)]
    } else {
        multi_indices_up_to(n, params.alpha_max)
    };
    let betas = multi_indices_up_to(n, params.beta_max);
    // Precompute ∂_x^α P once per α; vanished derivatives drop out here.
    let x_derivs: Vec<(MultiIndex, OperatorSymbol)> = alphas
        .iter()
        .map(|a| (a.clone(), p.x_derivative(a)))
        .filter(|(a, dp)| a.order() == 0 || !dp.is_zero())
        .collect();

    let zero_mi = MultiIndex::zero(n);
    let mut per_radius = Vec::with_capacity(ladder.len());
    let mut worst: Option<WorstPoint> = None;
    let mut samples_used = 0usize;
    let mut notes = Vec::new();

    for &r in &ladder {
        let mut c_r = 0.0f64;
        for x in &x_points {
            for dir in &dirs {
                let xi = weights.dilate(r, dir);
                samples_used += 1;
                let ap = p.eval(x, &xi).norm();
                let wp = weights.norm_p(&xi);
                if ap == 0.0 {
                    return Ok(EstimateReport {
                        verdict: EstimateVerdict::Fails,
                        c_est: 1e300,
                        worst_point: Some(WorstPoint {
                            x: x.clone(),
                            xi,
                            alpha: zero_mi.clone(),
                            beta: zero_mi.clone(),
                        }),
                        samples_used,
                        radius_ladder: ladder.clone(),
                        per_radius,
                        seed,
                        notes: vec!["P vanishes at a sampled point of the sector".into()],
                    });
                }
                let ratio1 = wp.powf(params.mu_prime) / ap;
                if ratio1 > c_r {
                    c_r = ratio1;
                    worst = Some(WorstPoint {
                        x: x.clone(),
                        xi: xi.clone(),
                        alpha: zero_mi.clone(),
                        beta: zero_mi.clone(),
                    });
                }
                for (alpha, dp) in &x_derivs {
                    let aq = alpha.dot_f64(&q_f64);
                    let alpha_factor = if aq == 0.0 {
                        1.0
                    } else {
                        aq.powf(params.s * mu * aq)
                    };
                    for beta in &betas {
                        if alpha.order() == 0 && beta.order() == 0 {
                            continue;
                        }
                        let val = dp.eval_xi_derivative(beta, x, &xi).norm();
                        if val == 0.0 {
                            continue;
                        }
                        let exponent = params.delta * alpha.order() as f64
                            - params.rho * beta.order() as f64;
                        let denom = alpha_factor * ap * wp.powf(exponent);
                        let c_need = (val / denom).powf(1.0 / (alpha.order() as f64 + 1.0));
                        if c_need > c_r {
                            c_r = c_need;
                            worst = Some(WorstPoint {
                                x: x.clone(),
                                xi: xi.clone(),
                                alpha: alpha.clone(),
                                beta: beta.clone(),
                            });
                        }
                    }
                }
            }
        }
        per_radius.push(c_r);
    }

    let c_last = *per_radius.last().unwrap();
    let verdict = if !c_last.is_finite() || c_last > DIVERGE_CAP {
        notes.push("extracted constant diverges across the ladder".into());
        EstimateVerdict::Fails
    } else if per_radius.len() >= 2 {
        let c_prev = per_radius[per_radius.len() - 2];
        let rel = (c_last - c_prev).abs() / c_prev.abs().max(f64::MIN_POSITIVE);
        if rel < STABILIZE_REL {
            EstimateVerdict::Holds
        } else {
            notes.push(format!(
                "constant did not stabilize: relative change {rel:.3} over the top decade"
            ));
            EstimateVerdict::Inconclusive
        }
    } else {
        notes.push("ladder too short to judge stabilization".into());
        EstimateVerdict::Inconclusive
    };

    Ok(EstimateReport {
        verdict,
        c_est: c_last,
        worst_point: worst,
        samples_used,
        radius_ladder: ladder,
        per_radius,
        seed,
        notes,
    })
}

/// Grid search over admissible `(ρ, δ, μ′)`: among parameters where the
/// Σ-condition holds, maximizes `μ′`, then `ρ`, then minimizes `δ` — the
/// order that minimizes `s′`. When nothing holds, the closest candidate is
/// reported as inconclusive.
#[allow(clippy::too_many_arguments)]
pub fn fit_sigma_params(
    p: &OperatorSymbol,
    x0: &[f64],
    sector: &QuasiconicSector,
    s: f64,
    rho_grid: &[f64],
    delta_grid: &[f64],
    mu_prime_grid: &[f64],
    u_radius: f64,
    ladder: &[f64],
    samples: usize,
    alpha_max: u32,
    beta_max: u32,
    seed: u64,
) -> Result<(SigmaParams, EstimateReport), EstimateError> {
    let (_np, data, _w) = operator_geometry(p)?;
    let mu = data.mu_max_f64();
    let mut combos: Vec<SigmaParams> = Vec::new();
    for &rho in rho_grid {
        for &delta in delta_grid {
            for &mu_prime in mu_prime_grid {
                let params = SigmaParams {
                    rho,
                    delta,
                    mu_prime,
                    s,
                    alpha_max,
                    beta_max,
                };
                if params.validate(mu).is_ok() {
                    combos.push(params);
                }
            }
        }
    }
    if combos.is_empty() {
        return Err(EstimateError::InvalidParams(
            "no admissible grid point for this operator's mu".into(),
        ));
    }

    let mut best_hold: Option<(SigmaParams, EstimateReport)> = None;
    let mut closest: Option<(SigmaParams, EstimateReport)> = None;
    let mut held = 0usize;
    for params in &combos {
        let report = check_sigma(p, x0, sector, params, u_radius, ladder, samples, seed)?;
        if report.verdict == EstimateVerdict::Holds {
            held += 1;
            let better = match &best_hold {
                None => true,
                Some((bp, _)) => {
                    (params.mu_prime, params.rho, -params.delta)
                        > (bp.mu_prime, bp.rho, -bp.delta)
                }
            };
            if better {
                best_hold = Some((*params, report));
            }
        } else {
            let score = if report.c_est.is_finite() {
                report.c_est
            } else {
                f64::MAX
            };
            let better = match &closest {
                None => true,
                Some((_, br)) => {
                    score
                        < if br.c_est.is_finite() {
                            br.c_est
                        } else {
                            f64::MAX
                        }
                }
            };
            if better {
                closest = Some((*params, report));
            }
        }
    }

    if let Some((params, mut report)) = best_hold {
        report
            .notes
            .push(format!("{held}/{} grid points hold", combos.len()));
        Ok((params, report))
    } else {
        let (params, mut report) = closest.expect("at least one combo was checked");
        report.verdict = EstimateVerdict::Inconclusive;
        report.notes.push(format!(
            "no grid point held ({} checked); closest candidate reported",
            combos.len()
        ));
        Ok((params, report))
    }
}

/// `s′ = max(sμ/(μ′-δμ), s/(ρ-δ))`.
pub fn gevrey_index_s_prime(
    s: f64,
    rho: f64,
    delta: f64,
    mu: f64,
    mu_prime: f64,
) -> Result<f64, EstimateError> {
    let params = SigmaParams {
        rho,
        delta,
        mu_prime,
        s,
        alpha_max: 0,
        beta_max: 0,
    };
    params.validate(mu)?;
    Ok((s * mu / (mu_prime - delta * mu)).max(s / (rho - delta)))
}

/// The sub-symbol of terms tight on the facet `a`: `Σ_{⟨α,a⟩=1} a_α(x) ξ^α`.
/// For a single-facet polyhedron this is the principal quasihomogeneous part.
pub fn principal_part(
    p: &OperatorSymbol,
    np: &NewtonPolyhedron,
    facet: &[Rat],
) -> Result<OperatorSymbol, EstimateError> {
    if !np.facets().iter().any(|a| a.as_slice() == facet) {
        return Err(EstimateError::FacetNotInA);
    }
    let one = Rat::from_integer(1.into());
    let keep: Vec<MultiIndex> = p
        .terms()
        .iter()
        .filter(|t| t.alpha.dot_rat(facet) == one)
        .map(|t| t.alpha.clone())
        .collect();
    Ok(p.restrict_to(&keep))
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicSample {
    /// Directions on the unit q-quasisphere where the symbol (or its
    /// principal part) nearly vanishes.
    pub directions: Vec<Vec<f64>>,
    pub threshold: f64,
    /// True when the principal quasihomogeneous part was evaluated directly
    /// (single-facet polyhedron); false when the MQE ratio was used instead.
    pub via_principal_part: bool,
    pub samples: usize,
}

/// Samples near-characteristic directions on the unit q-quasisphere. With a
/// single facet the principal part is evaluated directly; otherwise the MQE
/// ratio at the largest default ladder radius stands in. `threshold = None`
/// picks 1.5 angular cells of the sampled sup.
pub fn characteristic_sample(
    p: &OperatorSymbol,
    x0: &[f64],
    sphere_samples: usize,
    threshold: Option<f64>,
    seed: u64,
) -> Result<CharacteristicSample, EstimateError> {
    let (np, _data, weights) = operator_geometry(p)?;
    if p.is_zero() {
        return Err(EstimateError::ZeroOperator);
    }
    let single_facet = np.facets().len() == 1;
    let dirs = unit_sphere_directions(p.dim(), sphere_samples, seed);
    let r_ref = *DEFAULT_LADDER.last().unwrap();
    let mu = weights.mu();

    let mut etas = Vec::with_capacity(dirs.len());
    let mut values = Vec::with_capacity(dirs.len());
    let pq = if single_facet {
        Some(principal_part(p, &np, &np.facets()[0].clone())?)
    } else {
        None
    };
    for dir in &dirs {
        let Some(eta) = weights.unit_q(dir) else {
            continue;
        };
        let value = match &pq {
            Some(pq) => pq.eval(x0, &eta).norm(),
            None => {
                let xi = weights.dilate(r_ref, &eta);
                let wp = weights.norm_p(&xi);
                if wp <= 0.0 {
                    continue;
                }
                p.eval(x0, &xi).norm() / wp.powf(mu)
            }
        };
        etas.push(eta);
        values.push(value);
    }
    let sup = values.iter().cloned().fold(0.0, f64::max);
    let thr = threshold
        .unwrap_or_else(|| 1.5 * std::f64::consts::TAU / sphere_samples as f64 * sup.max(1e-300));
    let directions = etas
        .into_iter()
        .zip(&values)
        .filter(|(_, &v)| v < thr)
        .map(|(eta, _)| eta)
        .collect();
    Ok(CharacteristicSample {
        directions,
        threshold: thr,
        via_principal_part: single_facet,
        samples: sphere_samples,
    })
}
