//! Fourier-decay microregularity probes.
//!
//! `fourier_decay_probe` realizes the localized-transform criterion: with
//! `u_N = χ_{pN} u` cut around the base point, microregularity in a sector
//! requires one constant `C` with `|û_N(ξ)| ≤ C (C N^s / |ξ|_ℙ)^{μN}` on the
//! window. The constant is fitted at the smallest tested `N` and the margin
//! sequence of the larger `N` decides the verdict.
//!
//! `iterate_wavefront_probe` applies the same template to `f_N = χ_{pN} P^N u`
//! against the two iterate bounds: the global one
//! `|f̂_N| ≤ C (C(N^{sμ} + |ξ|_ℙ))^{μN+M}` and the sector one
//! `|f̂_N| ≤ C (C N^s)^{μN} (1+|ξ|)^M`, with `M` fitted once from the `N = 0`
//! transform tail.

use super::spectral::IterateEngine;
use super::truncation::truncation_sequence;
use super::{
    margin_entry, select_bins, verdict_from_margins, Bins, MarginEntry, ProbeError, ProbeReport,
    ProbeVerdict, P_FACTOR,
};
use crate::grid::{BoxRegion, GridField};
use crate::polytope::NewtonPolyhedron;
use crate::symbol::OperatorSymbol;
use crate::weights::{AnisotropyData, QuasiconicSector, Weights};
use num::complex::Complex64;

/// Physical spectra of the localized cuts `χ_{p·N} · v` for a set of N.
/// `ln_offsets` restores magnitudes when the source iterate was rescaled.
pub(crate) struct LocalizedSpectra {
    pub n_values: Vec<u32>,
    pub spectra: Vec<Vec<Complex64>>,
    pub ln_offsets: Vec<f64>,
}

pub(crate) fn localized_spectra(
    v: &GridField,
    region: &BoxRegion,
    pad: f64,
    data: &AnisotropyData,
    n_values: &[u32],
) -> Result<LocalizedSpectra, ProbeError> {
    let mut spectra = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let steps = (P_FACTOR * n).max(1);
        let chi = truncation_sequence(
            region,
            pad,
            steps,
            1.0,
            data,
            v.counts(),
            v.lengths(),
        )?;
        let cut = v.mul_real_window(&chi)?;
        spectra.push(cut.physical_spectrum());
    }
    Ok(LocalizedSpectra {
        n_values: n_values.to_vec(),
        ln_offsets: vec![0.0; spectra.len()],
        spectra,
    })
}

/// Localized spectra of the iterates `P^N v`. `n_values` must be ascending
/// (zeros allowed; they localize `v` itself with `χ_1`).
pub(crate) fn localized_power_spectra(
    p: &OperatorSymbol,
    v: &GridField,
    region: &BoxRegion,
    pad: f64,
    data: &AnisotropyData,
    n_values: &[u32],
) -> Result<LocalizedSpectra, ProbeError> {
    let mut engine = IterateEngine::new(p, v)?;
    let mut spectra = Vec::with_capacity(n_values.len());
    let mut ln_offsets = Vec::with_capacity(n_values.len());
    let mut reached = 0u32;
    for &n in n_values {
        debug_assert!(n >= reached, "n_values must be ascending");
        while reached < n {
            reached += 1;
            engine.step(reached)?;
        }
        let steps = (P_FACTOR * n).max(1);
        let chi = truncation_sequence(
            region,
            pad,
            steps,
            1.0,
            data,
            v.counts(),
            v.lengths(),
        )?;
        let cut = engine.field()?.mul_real_window(&chi)?;
        spectra.push(cut.physical_spectrum());
        ln_offsets.push(engine.ln_scale());
    }
    Ok(LocalizedSpectra {
        n_values: n_values.to_vec(),
        spectra,
        ln_offsets,
    })
}

/// Margins of the decay bound over the given bins, with the constant fitted
/// at the first N. Returns `(entries, ln_c)`.
pub(crate) fn decay_margins(
    spectra: &LocalizedSpectra,
    bins: &Bins,
    mu: f64,
    s: f64,
) -> (Vec<MarginEntry>, f64) {
    let mut raws = Vec::with_capacity(spectra.n_values.len());
    for (i, &n) in spectra.n_values.iter().enumerate() {
        let nn = n as f64;
        let mut raw = f64::NEG_INFINITY;
        for (b, &idx) in bins.idx.iter().enumerate() {
            let amp = spectra.spectra[i][idx].norm();
            if amp == 0.0 {
                continue;
            }
            let v = amp.ln() + spectra.ln_offsets[i] + mu * nn * (bins.ln_wp[b] - s * nn.ln());
            if v > raw {
                raw = v;
            }
        }
        raws.push(raw);
    }
    let n0 = spectra.n_values[0] as f64;
    if raws[0] == f64::NEG_INFINITY {
        // zero localized field: every margin is zero
        let entries = spectra
            .n_values
            .iter()
            .map(|&n| margin_entry(n, f64::NEG_INFINITY))
            .collect();
        return (entries, f64::NEG_INFINITY);
    }
    let ln_c = raws[0] / (mu * n0);
    let entries = spectra
        .n_values
        .iter()
        .zip(&raws)
        .map(|(&n, &raw)| margin_entry(n, raw - mu * n as f64 * ln_c))
        .collect();
    (entries, ln_c)
}

fn validate_common(s: f64, n_range: (u32, u32)) -> Result<Vec<u32>, ProbeError> {
    if s < 1.0 {
        return Err(ProbeError::InvalidParam(format!("s must be >= 1, got {s}")));
    }
    if n_range.0 < 1 || n_range.1 < n_range.0 {
        return Err(ProbeError::InvalidParam(format!(
            "bad N range {}..{}",
            n_range.0, n_range.1
        )));
    }
    Ok((n_range.0..=n_range.1).collect())
}

/// Fourier-decay microregularity of `u` at `(x₀, Γ)` for index `s`.
#[allow(clippy::too_many_arguments)]
pub fn fourier_decay_probe(
    u: &GridField,
    x0: &[f64],
    sector: &QuasiconicSector,
    np: &NewtonPolyhedron,
    data: &AnisotropyData,
    s: f64,
    n_range: (u32, u32),
    k_half_width: f64,
    pad: f64,
) -> Result<ProbeReport, ProbeError> {
    let n_values = validate_common(s, n_range)?;
    let weights = Weights::new(np, data);
    let region = BoxRegion::cube(x0.to_vec(), k_half_width);
    let bins = select_bins(u.counts(), u.lengths(), &weights, Some(sector));
    if bins.idx.is_empty() {
        return Err(ProbeError::SectorEmpty);
    }
    let spectra = localized_spectra(u, &region, pad, data, &n_values)?;
    let (margins, ln_c) = decay_margins(&spectra, &bins, data.mu_max_f64(), s);
    let (verdict, notes) = verdict_from_margins(&margins);
    Ok(ProbeReport {
        verdict,
        margins,
        global_margins: None,
        c_fit: ln_c.exp(),
        m_fit: None,
        s_hat: None,
        window: Some(bins.window()),
        notes,
    })
}

/// Least-squares slope of `ln amp` against `ln(1+|ξ|)`, clamped to ≥ 0: the
/// polynomial order `M` of a localized transform tail.
pub(crate) fn fit_transform_order(spectrum: &[Complex64], bins: &Bins) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (b, &idx) in bins.idx.iter().enumerate() {
        let amp = spectrum[idx].norm();
        if amp > 0.0 {
            xs.push(bins.ln_one_plus[b]);
            ys.push(amp.ln());
        }
    }
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    if den <= 0.0 {
        return 0.0;
    }
    (num / den).max(0.0)
}

/// Margins of the two iterate bounds. `spectra` must start with the `N = 0`
/// entry used to fit `M`. Returns `(m_fit, jj_entries, jjj_entries, ln_c_jjj)`.
pub(crate) fn iterate_margins(
    spectra: &LocalizedSpectra,
    bins_global: &Bins,
    bins_sector: &Bins,
    mu: f64,
    s: f64,
) -> (f64, Vec<MarginEntry>, Vec<MarginEntry>, f64) {
    debug_assert_eq!(spectra.n_values[0], 0);
    let m_fit = fit_transform_order(&spectra.spectra[0], bins_global);

    // jj: |f̂_N| ≤ C (C (N^{sμ} + |ξ|_ℙ))^{μN+M}, all ξ in the window.
    let mut jj_raws = Vec::new();
    for (i, &n) in spectra.n_values.iter().enumerate().skip(1) {
        let nn = n as f64;
        let shift = nn.powf(s * mu);
        let e = mu * nn + m_fit;
        let mut raw = f64::NEG_INFINITY;
        for (b, &idx) in bins_global.idx.iter().enumerate() {
            let amp = spectra.spectra[i][idx].norm();
            if amp == 0.0 {
                continue;
            }
            let v = amp.ln() + spectra.ln_offsets[i] - e * (shift + bins_global.wp[b]).ln();
            if v > raw {
                raw = v;
            }
        }
        jj_raws.push((n, raw));
    }
    let zero_field = jj_raws.first().map(|&(_, r)| r == f64::NEG_INFINITY).unwrap_or(true);
    let (jj_entries, _ln_c_jj) = if zero_field {
        (
            jj_raws
                .iter()
                .map(|&(n, _)| margin_entry(n, f64::NEG_INFINITY))
                .collect::<Vec<_>>(),
            f64::NEG_INFINITY,
        )
    } else {
        let (n0, raw0) = jj_raws[0];
        let e0 = mu * n0 as f64 + m_fit;
        let ln_c = raw0 / (e0 + 1.0);
        (
            jj_raws
                .iter()
                .map(|&(n, raw)| {
                    let e = mu * n as f64 + m_fit;
                    margin_entry(n, raw - (e + 1.0) * ln_c)
                })
                .collect::<Vec<_>>(),
            ln_c,
        )
    };

    // jjj: |f̂_N| ≤ C (C N^s)^{μN} (1+|ξ|)^M on the sector.
    let mut jjj_raws = Vec::new();
    for (i, &n) in spectra.n_values.iter().enumerate().skip(1) {
        let nn = n as f64;
        let mut raw = f64::NEG_INFINITY;
        for (b, &idx) in bins_sector.idx.iter().enumerate() {
            let amp = spectra.spectra[i][idx].norm();
            if amp == 0.0 {
                continue;
            }
            let v = amp.ln() + spectra.ln_offsets[i]
                - m_fit * bins_sector.ln_one_plus[b]
                - s * mu * nn * nn.ln();
            if v > raw {
                raw = v;
            }
        }
        jjj_raws.push((n, raw));
    }
    let zero_sector = jjj_raws.first().map(|&(_, r)| r == f64::NEG_INFINITY).unwrap_or(true);
    let (jjj_entries, ln_c_jjj) = if zero_sector {
        (
            jjj_raws
                .iter()
                .map(|&(n, _)| margin_entry(n, f64::NEG_INFINITY))
                .collect::<Vec<_>>(),
            f64::NEG_INFINITY,
        )
    } else {
        let (n0, raw0) = jjj_raws[0];
        let ln_c = raw0 / (mu * n0 as f64 + 1.0);
        (
            jjj_raws
                .iter()
                .map(|&(n, raw)| margin_entry(n, raw - (mu * n as f64 + 1.0) * ln_c))
                .collect::<Vec<_>>(),
            ln_c,
        )
    };

    (m_fit, jj_entries, jjj_entries, ln_c_jjj)
}

pub(crate) fn combine_iterate_verdicts(
    jj: ProbeVerdict,
    jjj: ProbeVerdict,
) -> ProbeVerdict {
    use ProbeVerdict::*;
    match (jj, jjj) {
        (NotMicroregular, _) | (_, NotMicroregular) => NotMicroregular,
        (Microregular, Microregular) => Microregular,
        _ => Inconclusive,
    }
}

/// Microregularity of `u` with respect to the iterates of `P` at `(x₀, Γ)`.
#[allow(clippy::too_many_arguments)]
pub fn iterate_wavefront_probe(
    p: &OperatorSymbol,
    u: &GridField,
    x0: &[f64],
    sector: &QuasiconicSector,
    np: &NewtonPolyhedron,
    data: &AnisotropyData,
    s: f64,
    n_range: (u32, u32),
    k_half_width: f64,
    pad: f64,
) -> Result<ProbeReport, ProbeError> {
    let n_values = validate_common(s, n_range)?;
    let weights = Weights::new(np, data);
    let region = BoxRegion::cube(x0.to_vec(), k_half_width);
    let bins_sector = select_bins(u.counts(), u.lengths(), &weights, Some(sector));
    if bins_sector.idx.is_empty() {
        return Err(ProbeError::SectorEmpty);
    }
    let bins_global = select_bins(u.counts(), u.lengths(), &weights, None);

    let mut with_zero = vec![0u32];
    with_zero.extend(&n_values);
    let spectra = localized_power_spectra(p, u, &region, pad, data, &with_zero)?;
    let mu = data.mu_max_f64();
    let (m_fit, jj_entries, jjj_entries, ln_c_jjj) =
        iterate_margins(&spectra, &bins_global, &bins_sector, mu, s);

    let (v_jj, mut notes_jj) = verdict_from_margins(&jj_entries);
    let (v_jjj, notes_jjj) = verdict_from_margins(&jjj_entries);
    let verdict = combine_iterate_verdicts(v_jj, v_jjj);
    let mut notes = notes_jjj;
    notes_jj.iter_mut().for_each(|n| *n = format!("global bound: {n}"));
    notes.extend(notes_jj);

    Ok(ProbeReport {
        verdict,
        margins: jjj_entries,
        global_margins: Some(jj_entries),
        c_fit: ln_c_jjj.exp(),
        m_fit: Some(m_fit),
        s_hat: None,
        window: Some(bins_sector.window()),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::operator_geometry;
    use crate::grid::{gaussian_field, jump_field};
    use crate::probe::auto_pad;
    use crate::symbol::parse_operator;
    use crate::weights::DEFAULT_SECTOR_RADIUS;

    fn tau() -> f64 {
        std::f64::consts::TAU
    }

    struct Setup {
        np: NewtonPolyhedron,
        data: AnisotropyData,
        sector: QuasiconicSector,
    }

    fn setup(op: &OperatorSymbol, dir: &[f64]) -> Setup {
        let (np, data, _w) = operator_geometry(op).unwrap();
        let sector =
            QuasiconicSector::new(data.q_f64(), dir, DEFAULT_SECTOR_RADIUS).unwrap();
        Setup { np, data, sector }
    }

    #[test]
    fn gaussian_is_microregular_everywhere() {
        let lap = parse_operator("D1^2 + D2^2", 2).unwrap();
        let counts = vec![256usize, 256];
        let lengths = vec![tau(), tau()];
        let center = [tau() / 2.0, tau() / 2.0];
        let u = gaussian_field(counts.clone(), lengths.clone(), &center, 0.6).unwrap();
        let pad = auto_pad(&counts, &lengths, 5);
        for dir in [[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0]] {
            let st = setup(&lap, &dir);
            let report = fourier_decay_probe(
                &u,
                &center,
                &st.sector,
                &st.np,
                &st.data,
                1.0,
                (2, 5),
                0.4,
                pad,
            )
            .unwrap();
            assert_eq!(
                report.verdict,
                ProbeVerdict::Microregular,
                "direction {dir:?}, margins {:?}",
                report.margins
            );
        }
    }

    #[test]
    fn jump_field_splits_by_direction() {
        let lap = parse_operator("D1^2 + D2^2", 2).unwrap();
        let counts = vec![256usize, 256];
        let lengths = vec![tau(), tau()];
        let center = [tau() / 2.0, tau() / 2.0];
        let u = jump_field(counts.clone(), lengths.clone(), &center, 0.6).unwrap();
        let pad = auto_pad(&counts, &lengths, 5);
        let st1 = setup(&lap, &[1.0, 0.0]);
        let r1 = fourier_decay_probe(
            &u, &center, &st1.sector, &st1.np, &st1.data, 1.0, (2, 5), 0.4, pad,
        )
        .unwrap();
        assert_eq!(r1.verdict, ProbeVerdict::NotMicroregular, "{:?}", r1.margins);
        let st2 = setup(&lap, &[0.0, 1.0]);
        let r2 = fourier_decay_probe(
            &u, &center, &st2.sector, &st2.np, &st2.data, 1.0, (2, 5), 0.4, pad,
        )
        .unwrap();
        assert_eq!(r2.verdict, ProbeVerdict::Microregular, "{:?}", r2.margins);
    }

    #[test]
    fn zero_field_is_microregular() {
        let lap = parse_operator("D1^2 + D2^2", 2).unwrap();
        let counts = vec![64usize, 64];
        let lengths = vec![tau(), tau()];
        let u = GridField::zeros(counts.clone(), lengths.clone()).unwrap();
        let center = [tau() / 2.0, tau() / 2.0];
        let pad = auto_pad(&counts, &lengths, 5);
        let st = setup(&lap, &[1.0, 0.0]);
        let report = fourier_decay_probe(
            &u, &center, &st.sector, &st.np, &st.data, 1.0, (2, 5), 0.3, pad,
        )
        .unwrap();
        assert_eq!(report.verdict, ProbeVerdict::Microregular);
        let it = iterate_wavefront_probe(
            &lap, &u, &center, &st.sector, &st.np, &st.data, 1.0, (2, 5), 0.3, pad,
        )
        .unwrap();
        assert_eq!(it.verdict, ProbeVerdict::Microregular);
    }

    #[test]
    fn monotone_in_s() {
        // microregular at s stays microregular at larger s on identical data
        let lap = parse_operator("D1^2 + D2^2", 2).unwrap();
        let counts = vec![128usize, 128];
        let lengths = vec![tau(), tau()];
        let center = [tau() / 2.0, tau() / 2.0];
        let u = gaussian_field(counts.clone(), lengths.clone(), &center, 0.6).unwrap();
        let pad = auto_pad(&counts, &lengths, 5);
        let st = setup(&lap, &[1.0, 0.0]);
        let region = BoxRegion::cube(center.to_vec(), 0.4);
        let n_values: Vec<u32> = (2..=5).collect();
        let spectra = localized_spectra(&u, &region, pad, &st.data, &n_values).unwrap();
        let weights = Weights::new(&st.np, &st.data);
        let bins = select_bins(&counts, &lengths, &weights, Some(&st.sector));
        let (m1, _) = decay_margins(&spectra, &bins, 2.0, 1.0);
        let (m2, _) = decay_margins(&spectra, &bins, 2.0, 1.5);
        for (a, b) in m1.iter().zip(&m2) {
            assert!(b.ln_margin <= a.ln_margin + 1e-12);
        }
    }

    #[test]
    fn gaussian_iterates_are_microregular() {
        let lap = parse_operator("D1^2 + D2^2", 2).unwrap();
        let counts = vec![256usize, 256];
        let lengths = vec![tau(), tau()];
        let center = [tau() / 2.0, tau() / 2.0];
        let u = gaussian_field(counts.clone(), lengths.clone(), &center, 0.6).unwrap();
        let pad = auto_pad(&counts, &lengths, 5);
        let st = setup(&lap, &[1.0, 0.0]);
        let report = iterate_wavefront_probe(
            &lap, &u, &center, &st.sector, &st.np, &st.data, 1.0, (2, 5), 0.4, pad,
        )
        .unwrap();
        assert_eq!(
            report.verdict,
            ProbeVerdict::Microregular,
            "margins {:?} global {:?}",
            report.margins,
            report.global_margins
        );
    }
}
