//! Truncation sequences `χ_N`: equal to 1 on a box `K`, supported in the
//! padded box, built as the indicator of the half-padded box convolved `N`
//! times per axis with a normalized bump of width `pad/(2N)`. The derivative
//! bound these satisfy is checked by finite differences in the test suites;
//! the construction itself does not depend on the anisotropy data.

use super::ProbeError;
use crate::grid::{BoxRegion, GridField};
use crate::weights::AnisotropyData;
use num::complex::Complex64;
use num::Zero;

/// Builds `χ_N` on the given grid shape.
///
/// Requires `N ≥ 1`, `s ≥ 1`, a bump of at least 4 grid cells per axis, and
/// `K` padded by `pad` to fit inside the periodic box.
pub fn truncation_sequence(
    region: &BoxRegion,
    pad: f64,
    n_steps: u32,
    s: f64,
    data: &AnisotropyData,
    counts: &[usize],
    lengths: &[f64],
) -> Result<GridField, ProbeError> {
    let n = counts.len();
    if region.center.len() != n || data.q().len() != n {
        return Err(ProbeError::InvalidParam(
            "region/anisotropy dimension does not match the grid".into(),
        ));
    }
    if n_steps == 0 {
        return Err(ProbeError::InvalidParam("N must be at least 1".into()));
    }
    if s < 1.0 {
        return Err(ProbeError::InvalidParam(format!("s must be >= 1, got {s}")));
    }
    if !(pad > 0.0) {
        return Err(ProbeError::InvalidParam("pad must be positive".into()));
    }
    let width = pad / (2.0 * n_steps as f64);
    for axis in 0..n {
        let h = lengths[axis] / counts[axis] as f64;
        let cells = width / h;
        if cells < 4.0 {
            return Err(ProbeError::PadTooSmall { width_cells: cells });
        }
        let lo = region.center[axis] - region.half_width[axis] - pad;
        let hi = region.center[axis] + region.half_width[axis] + pad;
        if lo < 0.0 || hi > lengths[axis] {
            return Err(ProbeError::RegionOutOfBounds);
        }
    }

    // Indicator of K padded by pad/2; the N bump convolutions eat pad/4 of
    // support growth and pad/4 of plateau, leaving χ_N = 1 on K and
    // χ_N = 0 outside K padded by pad.
    let half_padded = region.padded(pad / 2.0);
    let mut field = GridField::zeros(counts.to_vec(), lengths.to_vec())?;
    let mut x = vec![0.0; n];
    for idx in 0..field.len() {
        field.point_at(idx, &mut x);
        if half_padded.contains(&x) {
            field.samples_mut()[idx] = Complex64::new(1.0, 0.0);
        }
    }
    field.fft_in_place(false);

    // Per-axis probability bump transforms, normalized so the DC bin is 1.
    let bump_spectra: Vec<Vec<Complex64>> = (0..n)
        .map(|axis| bump_transform(counts[axis], lengths[axis], width))
        .collect();

    let mut axis_index = vec![0usize; n];
    for idx in 0..field.len() {
        decompose(idx, counts, &mut axis_index);
        let mut factor = Complex64::new(1.0, 0.0);
        for axis in 0..n {
            factor *= bump_spectra[axis][axis_index[axis]].powu(n_steps);
        }
        field.samples_mut()[idx] *= factor;
    }
    field.fft_in_place(true);
    for v in field.samples_mut() {
        *v = Complex64::new(v.re, 0.0);
    }
    Ok(field)
}

fn decompose(mut idx: usize, counts: &[usize], out: &mut [usize]) {
    for axis in (0..counts.len()).rev() {
        out[axis] = idx % counts[axis];
        idx /= counts[axis];
    }
}

/// DFT of the standard compactly supported bump `exp(-1/(1-(2t/w)²))` of
/// width `w`, sampled on the axis grid and normalized to unit mass.
fn bump_transform(count: usize, length: f64, width: f64) -> Vec<Complex64> {
    let h = length / count as f64;
    let mut bump = vec![Complex64::zero(); count];
    let mut mass = 0.0;
    for (i, val) in bump.iter_mut().enumerate() {
        let xj = i as f64 * h;
        let t = if xj <= length / 2.0 { xj } else { xj - length };
        let u = 2.0 * t / width;
        if u.abs() < 1.0 {
            let v = (-1.0 / (1.0 - u * u)).exp();
            *val = Complex64::new(v, 0.0);
            mass += v;
        }
    }
    // Unit total mass makes the DC gain 1, so convolution preserves [0,1].
    let scale = 1.0 / mass;
    for v in &mut bump {
        *v *= scale;
    }
    let mut field_like = bump;
    // 1-D DFT in place via the shared machinery.
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(count);
    fft.process(&mut field_like);
    field_like
}
