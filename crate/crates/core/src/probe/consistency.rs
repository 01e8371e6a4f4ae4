//! Cross-checks the probes against the microlocal inclusion theorems on a
//! matrix of base points and directions:
//!
//! * main inclusion: iterate-microregular at `s` together with the
//!   Σ-condition holding must give `s′`-microregularity,
//! * operator chain: microregular for `u` implies microregular for `Pu`
//!   implies microregular with respect to the iterates.
//!
//! Inconclusive verdicts never count as violations; they are tallied
//! separately so a run can be judged by both numbers.

use super::decay::{
    combine_iterate_verdicts, decay_margins, iterate_margins, localized_power_spectra,
    localized_spectra,
};
use super::spectral::spectral_apply;
use super::{auto_pad, select_bins, verdict_from_margins, ProbeError, ProbeVerdict};
use crate::estimates::{
    check_sigma, gevrey_index_s_prime, operator_geometry, EstimateError, EstimateVerdict,
    SigmaParams, DEFAULT_LADDER,
};
use crate::grid::{BoxRegion, GridField};
use crate::symbol::OperatorSymbol;
use crate::weights::{QuasiconicSector, Weights, DEFAULT_SECTOR_RADIUS};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct ConsistencyConfig {
    pub n_range: (u32, u32),
    pub k_half_width: f64,
    /// `None` picks the smallest pad the grid resolution allows.
    pub pad: Option<f64>,
    pub sector_radius: f64,
    pub ladder: Vec<f64>,
    pub sector_samples: usize,
    pub u_radius: f64,
    pub seed: u64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            n_range: (2, 8),
            k_half_width: 0.5,
            pad: None,
            sector_radius: DEFAULT_SECTOR_RADIUS,
            ladder: DEFAULT_LADDER.to_vec(),
            sector_samples: 64,
            u_radius: crate::estimates::DEFAULT_U_RADIUS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellOutcome {
    pub x0: Vec<f64>,
    pub direction: Vec<f64>,
    pub wf_u: ProbeVerdict,
    pub wf_pu: ProbeVerdict,
    pub iterate_wf: ProbeVerdict,
    pub sigma: EstimateVerdict,
    pub wf_u_s_prime: ProbeVerdict,
    pub s_prime: f64,
    pub violations: Vec<String>,
    pub involves_inconclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub cells: Vec<CellOutcome>,
    pub total_cells: usize,
    pub violations: usize,
    pub inconclusive_cells: usize,
    pub s: f64,
    pub s_prime: f64,
    pub seed: u64,
}

impl From<EstimateError> for ProbeError {
    fn from(e: EstimateError) -> Self {
        ProbeError::InvalidParam(e.to_string())
    }
}

/// Runs the full implication matrix for one operator and one field.
pub fn inclusion_consistency(
    p: &OperatorSymbol,
    u: &GridField,
    s: f64,
    params: &SigmaParams,
    directions: &[Vec<f64>],
    x0_set: &[Vec<f64>],
    cfg: &ConsistencyConfig,
) -> Result<ConsistencyReport, ProbeError> {
    let (np, data, _w) = operator_geometry(p)?;
    let weights = Weights::new(&np, &data);
    let mu = data.mu_max_f64();
    let s_prime = gevrey_index_s_prime(s, params.rho, params.delta, mu, params.mu_prime)?;
    let pad = cfg
        .pad
        .unwrap_or_else(|| auto_pad(u.counts(), u.lengths(), cfg.n_range.1));
    let n_values: Vec<u32> = (cfg.n_range.0..=cfg.n_range.1).collect();
    let mut with_zero = vec![0u32];
    with_zero.extend(&n_values);

    let pu = spectral_apply(p, u)?;
    let bins_global = select_bins(u.counts(), u.lengths(), &weights, None);

    let mut cells = Vec::new();
    let mut violations = 0usize;
    let mut inconclusive_cells = 0usize;

    for x0 in x0_set {
        let region = BoxRegion::cube(x0.clone(), cfg.k_half_width);
        // All the FFT-heavy work is direction-independent; do it once.
        let spectra_u = localized_spectra(u, &region, pad, &data, &n_values)?;
        let spectra_pu = localized_spectra(&pu, &region, pad, &data, &n_values)?;
        let power_spectra = localized_power_spectra(p, u, &region, pad, &data, &with_zero)?;

        for dir in directions {
            let sector =
                QuasiconicSector::new(data.q_f64(), dir, cfg.sector_radius)?;
            let bins = select_bins(u.counts(), u.lengths(), &weights, Some(&sector));
            if bins.idx.is_empty() {
                return Err(ProbeError::SectorEmpty);
            }

            let (m_u, _) = decay_margins(&spectra_u, &bins, mu, s);
            let (wf_u, _) = verdict_from_margins(&m_u);
            let (m_pu, _) = decay_margins(&spectra_pu, &bins, mu, s);
            let (wf_pu, _) = verdict_from_margins(&m_pu);
            let (m_usp, _) = decay_margins(&spectra_u, &bins, mu, s_prime);
            let (wf_u_s_prime, _) = verdict_from_margins(&m_usp);

            let (_mf, jj, jjj, _c) =
                iterate_margins(&power_spectra, &bins_global, &bins, mu, s);
            let (v_jj, _) = verdict_from_margins(&jj);
            let (v_jjj, _) = verdict_from_margins(&jjj);
            let iterate_wf = combine_iterate_verdicts(v_jj, v_jjj);

            let sigma_report = check_sigma(
                p,
                x0,
                &sector,
                params,
                cfg.u_radius,
                &cfg.ladder,
                cfg.sector_samples,
                cfg.seed,
            )?;
            let sigma = sigma_report.verdict;

            let mut cell_violations = Vec::new();
            let mut involves_inconclusive = false;

            // Theorem-of-iterates inclusion.
            let conclusive = iterate_wf != ProbeVerdict::Inconclusive
                && sigma != EstimateVerdict::Inconclusive
                && wf_u_s_prime != ProbeVerdict::Inconclusive;
            if conclusive {
                if iterate_wf == ProbeVerdict::Microregular
                    && sigma == EstimateVerdict::Holds
                    && wf_u_s_prime == ProbeVerdict::NotMicroregular
                {
                    cell_violations.push(
                        "iterate-microregular and sigma holds, but u is not s'-microregular"
                            .into(),
                    );
                }
            } else {
                involves_inconclusive = true;
            }

            // Microlocal property of P: WF(Pu) ⊂ WF(u).
            if wf_u != ProbeVerdict::Inconclusive && wf_pu != ProbeVerdict::Inconclusive {
                if wf_u == ProbeVerdict::Microregular && wf_pu == ProbeVerdict::NotMicroregular
                {
                    cell_violations
                        .push("u microregular but Pu not microregular".into());
                }
            } else {
                involves_inconclusive = true;
            }

            // Iterate inclusionWF(u,P) ⊂ WF(Pu).
            if wf_pu != ProbeVerdict::Inconclusive && iterate_wf != ProbeVerdict::Inconclusive {
                if wf_pu == ProbeVerdict::Microregular
                    && iterate_wf == ProbeVerdict::NotMicroregular
                {
                    cell_violations
                        .push("Pu microregular but u not iterate-microregular".into());
                }
            } else {
                involves_inconclusive = true;
            }

            violations += cell_violations.len();
            if involves_inconclusive {
                inconclusive_cells += 1;
            }
            cells.push(CellOutcome {
                x0: x0.clone(),
                direction: dir.clone(),
                wf_u,
                wf_pu,
                iterate_wf,
                sigma,
                wf_u_s_prime,
                s_prime,
                violations: cell_violations,
                involves_inconclusive,
            });
        }
    }

    Ok(ConsistencyReport {
        total_cells: cells.len(),
        cells,
        violations,
        inconclusive_cells,
        s,
        s_prime,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian_field;
    use crate::symbol::parse_operator;

    #[test]
    fn laplacian_gaussian_matrix_has_no_violations() {
        let tau = std::f64::consts::TAU;
        let p = parse_operator("D1^2 + D2^2", 2).unwrap();
        let center = [tau / 2.0, tau / 2.0];
        let u = gaussian_field(vec![256, 256], vec![tau, tau], &center, 0.6).unwrap();
        let params = SigmaParams {
            rho: 1.0,
            delta: 0.0,
            mu_prime: 2.0,
            s: 1.0,
            alpha_max: 2,
            beta_max: 2,
        };
        let dirs: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 8.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let cfg = ConsistencyConfig {
            n_range: (2, 5),
            k_half_width: 0.4,
            sector_samples: 16,
            ..Default::default()
        };
        let report =
            inclusion_consistency(&p, &u, 1.0, &params, &dirs, &[center.to_vec()], &cfg)
                .unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.total_cells, 8);
        for cell in &report.cells {
            assert_eq!(cell.wf_u, ProbeVerdict::Microregular, "{:?}", cell);
        }
    }
}
