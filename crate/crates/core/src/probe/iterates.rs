//! Iterate-growth probe: the `L²(K)` norms of `P^N u` against the Gevrey
//! vector bound `‖P^N u‖ ≤ C (C N^s)^{μN}`, plus a two-parameter fit of the
//! growth exponent. Norms are tracked in log space so deep iterates cannot
//! overflow.

use super::spectral::IterateEngine;
use super::{margin_entry, verdict_from_margins, MarginEntry, ProbeError, ProbeReport};
use crate::grid::{BoxRegion, GridField};
use crate::symbol::OperatorSymbol;
use crate::weights::AnisotropyData;

/// Growth of `‖P^N u‖_{L²(K)}` for `N = 1..N_max`. The verdict is pass
/// (reported as `microregular`) when one constant, fitted at `N = 2`, bounds
/// the whole range; `s_hat = b/μ` comes from least squares of
/// `ln g_N ≈ aN + bN ln N` over `N ∈ [2, N_max]`.
pub fn iterate_growth_probe(
    p: &OperatorSymbol,
    u: &GridField,
    region: &BoxRegion,
    data: &AnisotropyData,
    s: f64,
    n_max: u32,
) -> Result<ProbeReport, ProbeError> {
    if s < 1.0 {
        return Err(ProbeError::InvalidParam(format!("s must be >= 1, got {s}")));
    }
    if n_max < 2 {
        return Err(ProbeError::InvalidParam(
            "N_max must be at least 2".into(),
        ));
    }
    let mu = data.mu_max_f64();

    let mut engine = IterateEngine::new(p, u)?;
    let mut g_ln: Vec<(u32, f64)> = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        engine.step(n)?;
        let local = engine.field()?.l2_norm_over(region);
        g_ln.push((n, engine.ln_scale() + local.ln()));
    }

    let fit_range: Vec<(u32, f64)> = g_ln.iter().filter(|(n, _)| *n >= 2).cloned().collect();
    let zero_field = fit_range.iter().all(|&(_, g)| g == f64::NEG_INFINITY);

    let mut notes = Vec::new();
    let (margins, c_fit): (Vec<MarginEntry>, f64) = if zero_field {
        notes.push("iterates vanish on K".into());
        (
            fit_range
                .iter()
                .map(|&(n, _)| margin_entry(n, f64::NEG_INFINITY))
                .collect(),
            0.0,
        )
    } else {
        let (n0, g0) = fit_range[0];
        let n0f = n0 as f64;
        // g_{N0} = C (C N0^s)^{μN0}
        let ln_c = (g0 - s * mu * n0f * n0f.ln()) / (mu * n0f + 1.0);
        (
            fit_range
                .iter()
                .map(|&(n, g)| {
                    let nf = n as f64;
                    let bound = (mu * nf + 1.0) * ln_c + s * mu * nf * nf.ln();
                    margin_entry(n, g - bound)
                })
                .collect(),
            ln_c.exp(),
        )
    };

    let s_hat = if zero_field {
        None
    } else {
        fit_growth_exponent(&fit_range).map(|b| b / mu)
    };

    let (verdict, vnotes) = verdict_from_margins(&margins);
    notes.extend(vnotes);

    Ok(ProbeReport {
        verdict,
        margins,
        global_margins: None,
        c_fit,
        m_fit: None,
        s_hat,
        window: None,
        notes,
    })
}

/// Least squares of `y ≈ a·N + b·N·ln N`; returns `b`.
fn fit_growth_exponent(points: &[(u32, f64)]) -> Option<f64> {
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for &(n, y) in points {
        if !y.is_finite() {
            continue;
        }
        let p1 = n as f64;
        let p2 = p1 * p1.ln();
        s11 += p1 * p1;
        s12 += p1 * p2;
        s22 += p2 * p2;
        t1 += p1 * y;
        t2 += p2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-9 * s11.max(s22).max(1.0) {
        return None;
    }
    Some((s11 * t2 - s12 * t1) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::operator_geometry;
    use crate::grid::{gaussian_field, spectral_gevrey_field};
    use crate::probe::ProbeVerdict;
    use crate::symbol::parse_operator;
    use num::complex::Complex64;

    fn tau() -> f64 {
        std::f64::consts::TAU
    }

    #[test]
    fn single_mode_has_geometric_growth() {
        let p = parse_operator("D1^2", 1).unwrap();
        let (_np, data, _w) = operator_geometry(&p).unwrap();
        let mut u = GridField::zeros(vec![1024], vec![tau()]).unwrap();
        let mut x = vec![0.0];
        for idx in 0..u.len() {
            u.point_at(idx, &mut x);
            u.samples_mut()[idx] = Complex64::from_polar(1.0, 5.0 * x[0]);
        }
        let region = BoxRegion::cube(vec![tau() / 2.0], 1.0);
        let report = iterate_growth_probe(&p, &u, &region, &data, 1.0, 6).unwrap();
        assert_eq!(report.verdict, ProbeVerdict::Microregular);
        let s_hat = report.s_hat.unwrap();
        assert!(s_hat.abs() < 0.1, "s_hat = {s_hat}");
    }

    #[test]
    fn gevrey2_spectrum_recovers_index_two() {
        let p = parse_operator("D1^2", 1).unwrap();
        let (_np, data, _w) = operator_geometry(&p).unwrap();
        let u = spectral_gevrey_field(vec![4096], vec![tau()], 0.5).unwrap();
        let region = BoxRegion::cube(vec![tau() / 2.0], 1.2);
        let report = iterate_growth_probe(&p, &u, &region, &data, 2.0, 6).unwrap();
        let s_hat = report.s_hat.unwrap();
        assert!(
            (1.7..=2.3).contains(&s_hat),
            "s_hat = {s_hat}, margins {:?}",
            report.margins
        );
    }

    #[test]
    fn gaussian_with_laplacian_passes_at_s_one() {
        let p = parse_operator("D1^2 + D2^2", 2).unwrap();
        let (_np, data, _w) = operator_geometry(&p).unwrap();
        let center = [tau() / 2.0, tau() / 2.0];
        let u = gaussian_field(vec![512, 512], vec![tau(), tau()], &center, 0.6).unwrap();
        let region = BoxRegion::cube(center.to_vec(), 0.8);
        let report = iterate_growth_probe(&p, &u, &region, &data, 1.0, 6).unwrap();
        assert_eq!(report.verdict, ProbeVerdict::Microregular, "{:?}", report.margins);
        let s_hat = report.s_hat.unwrap();
        assert!(s_hat <= 1.2, "s_hat = {s_hat}");
    }

    #[test]
    fn aliasing_aborts_with_the_offending_n() {
        // High-order operator on a rough field walks into Nyquist quickly.
        let p = parse_operator("D1^8", 1).unwrap();
        let (_np, data, _w) = operator_geometry(&p).unwrap();
        let u = spectral_gevrey_field(vec![64], vec![tau()], 0.9).unwrap();
        let region = BoxRegion::cube(vec![tau() / 2.0], 1.0);
        match iterate_growth_probe(&p, &u, &region, &data, 1.0, 8) {
            Err(ProbeError::Aliasing { at_n: Some(_), .. }) => {}
            other => panic!("expected aliasing error, got {other:?}"),
        }
    }
}
