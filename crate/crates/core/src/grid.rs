//! Periodic grid fields, their discrete Fourier transforms, and the `.gfld`
//! file format.
//!
//! A `GridField` samples a complex function on `∏_j [0, L_j)` with a
//! power-of-two count per axis, row-major. Discrete frequencies are indexed
//! by integers `k_j ∈ (-counts_j/2, counts_j/2]` with physical frequency
//! `ξ_j = 2π k_j / L_j`. The physical-transform convention is
//! `û(ξ_k) = (∏ h_j) · DFT[u]_k`, which makes Parseval exact:
//! `‖u‖² = (∏ h_j / ∏ N_j) Σ_k |DFT_k|²`.

use num::complex::Complex64;
use num::Zero;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// Hard cap on total samples; keeps accidental huge allocations out.
pub const MAX_TOTAL_SAMPLES: usize = 1 << 24;
/// Minimum samples per axis.
pub const MIN_AXIS_COUNT: usize = 16;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("axis counts must be powers of two with at least {MIN_AXIS_COUNT} samples, got {0}")]
    BadCounts(usize),
    #[error("total sample count {0} exceeds the cap {MAX_TOTAL_SAMPLES}")]
    TooLarge(usize),
    #[error("axis lengths must be positive")]
    BadLengths,
    #[error("field dimension mismatch: {got} vs {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("shapes differ between fields")]
    ShapeMismatch,
    #[error("malformed .gfld header: {0}")]
    Header(String),
    #[error("payload size mismatch: expected {expected} bytes, got {got}")]
    Payload { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An axis-aligned box `∏ [c_j - w_j, c_j + w_j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxRegion {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl BoxRegion {
    pub fn new(center: Vec<f64>, half_width: Vec<f64>) -> Self {
        assert_eq!(center.len(), half_width.len());
        BoxRegion { center, half_width }
    }

    pub fn cube(center: Vec<f64>, half_width: f64) -> Self {
        let n = center.len();
        BoxRegion {
            center,
            half_width: vec![half_width; n],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.center.iter().zip(&self.half_width))
            .all(|(&xj, (&cj, &wj))| (xj - cj).abs() <= wj)
    }

    /// The box grown by `pad` on every side.
    pub fn padded(&self, pad: f64) -> BoxRegion {
        BoxRegion {
            center: self.center.clone(),
            half_width: self.half_width.iter().map(|w| w + pad).collect(),
        }
    }
}

/// Frequency decoding shared by fields and shape-only consumers.
pub fn frequency_of(
    counts: &[usize],
    lengths: &[f64],
    mut idx: usize,
    k: &mut [i64],
    xi: &mut [f64],
) {
    for axis in (0..counts.len()).rev() {
        let c = counts[axis];
        let i = idx % c;
        idx /= c;
        let kj = if i <= c / 2 {
            i as i64
        } else {
            i as i64 - c as i64
        };
        k[axis] = kj;
        xi[axis] = std::f64::consts::TAU * kj as f64 / lengths[axis];
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GfldHeader {
    n: usize,
    counts: Vec<usize>,
    lengths: Vec<f64>,
    dtype: String,
}

/// Complex samples of a periodic function on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    counts: Vec<usize>,
    lengths: Vec<f64>,
    samples: Vec<Complex64>,
}

fn validate_shape(counts: &[usize], lengths: &[f64]) -> Result<usize, FieldError> {
    if counts.is_empty() || counts.len() != lengths.len() {
        return Err(FieldError::Header("empty or inconsistent shape".into()));
    }
    for &c in counts {
        if c < MIN_AXIS_COUNT || !c.is_power_of_two() {
            return Err(FieldError::BadCounts(c));
        }
    }
    if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(FieldError::BadLengths);
    }
    let total: usize = counts.iter().product();
    if total > MAX_TOTAL_SAMPLES {
        return Err(FieldError::TooLarge(total));
    }
    Ok(total)
}

impl GridField {
    pub fn zeros(counts: Vec<usize>, lengths: Vec<f64>) -> Result<Self, FieldError> {
        let total = validate_shape(&counts, &lengths)?;
        Ok(GridField {
            counts,
            lengths,
            samples: vec![Complex64::zero(); total],
        })
    }

    pub fn from_samples(
        counts: Vec<usize>,
        lengths: Vec<f64>,
        samples: Vec<Complex64>,
    ) -> Result<Self, FieldError> {
        let total = validate_shape(&counts, &lengths)?;
        if samples.len() != total {
            return Err(FieldError::Payload {
                expected: total * 16,
                got: samples.len() * 16,
            });
        }
        Ok(GridField {
            counts,
            lengths,
            samples,
        })
    }

    /// Builds the field whose physical transform is `spectrum(k, ξ)`;
    /// i.e. samples are the inverse DFT of `spectrum / ∏h`.
    pub fn from_spectrum<F>(
        counts: Vec<usize>,
        lengths: Vec<f64>,
        mut spectrum: F,
    ) -> Result<Self, FieldError>
    where
        F: FnMut(&[i64], &[f64]) -> Complex64,
    {
        let mut field = GridField::zeros(counts, lengths)?;
        let inv_hvol = 1.0 / field.cell_volume();
        let mut k = vec![0i64; field.dim()];
        let mut xi = vec![0.0; field.dim()];
        for idx in 0..field.samples.len() {
            field.freq_at(idx, &mut k, &mut xi);
            field.samples[idx] = spectrum(&k, &xi) * inv_hvol;
        }
        field.fft_in_place(true);
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid spacings `h_j = L_j / N_j`.
    pub fn spacings(&self) -> Vec<f64> {
        self.lengths
            .iter()
            .zip(&self.counts)
            .map(|(&l, &c)| l / c as f64)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }

    pub fn same_shape(&self, other: &GridField) -> bool {
        self.counts == other.counts && self.lengths == other.lengths
    }

    /// Spatial coordinates of the sample at flat index `idx`.
    pub fn point_at(&self, mut idx: usize, x: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let c = self.counts[axis];
            let i = idx % c;
            idx /= c;
            x[axis] = self.lengths[axis] * i as f64 / c as f64;
        }
    }

    /// Integer and physical frequency of the spectral bin at flat index
    /// `idx`, with `k_j ∈ (-N_j/2, N_j/2]`.
    pub fn freq_at(&self, idx: usize, k: &mut [i64], xi: &mut [f64]) {
        frequency_of(&self.counts, &self.lengths, idx, k, xi);
    }

    /// In-place n-dimensional DFT (`inverse = true` includes the `1/∏N`
    /// normalization).
    pub fn fft_in_place(&mut self, inverse: bool) {
        let mut planner = FftPlanner::new();
        let n = self.dim();
        let total = self.samples.len();
        for axis in 0..n {
            let len = self.counts[axis];
            let fft = if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            };
            let stride: usize = self.counts[axis + 1..].iter().product();
            let mut line = vec![Complex64::zero(); len];
            let mut scratch = vec![Complex64::zero(); fft.get_inplace_scratch_len()];
            let lines = total / len;
            for li in 0..lines {
                // Decompose the line index into (outer block, inner offset).
                let outer = li / stride;
                let inner = li % stride;
                let base = outer * stride * len + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = self.samples[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, slot) in line.iter().enumerate() {
                    self.samples[base + j * stride] = *slot;
                }
            }
        }
        if inverse {
            let scale = 1.0 / total as f64;
            for v in &mut self.samples {
                *v *= scale;
            }
        }
    }

    /// Raw forward DFT coefficients.
    pub fn dft(&self) -> Vec<Complex64> {
        let mut copy = self.clone();
        copy.fft_in_place(false);
        copy.samples
    }

    /// Physical transform `û(ξ_k) = ∏h · DFT_k`.
    pub fn physical_spectrum(&self) -> Vec<Complex64> {
        let hvol = self.cell_volume();
        self.dft().into_iter().map(|v| v * hvol).collect()
    }

    /// `L²` norm over the full box.
    pub fn l2_norm(&self) -> f64 {
        let hvol = self.cell_volume();
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * hvol).sqrt()
    }

    /// `L²` norm restricted to a sub-box.
    pub fn l2_norm_over(&self, region: &BoxRegion) -> f64 {
        let hvol = self.cell_volume();
        let mut x = vec![0.0; self.dim()];
        let mut sum = 0.0;
        for (idx, v) in self.samples.iter().enumerate() {
            self.point_at(idx, &mut x);
            if region.contains(&x) {
                sum += v.norm_sqr();
            }
        }
        (sum * hvol).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise product with a real window.
    pub fn mul_real_window(&self, window: &GridField) -> Result<GridField, FieldError> {
        if !self.same_shape(window) {
            return Err(FieldError::ShapeMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&window.samples)
            .map(|(u, w)| u * w.re)
            .collect();
        GridField::from_samples(self.counts.clone(), self.lengths.clone(), samples)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.samples {
            *v *= factor;
        }
    }

    /// Value at the grid point nearest to `x`.
    pub fn value_near(&self, x: &[f64]) -> Complex64 {
        let mut idx = 0usize;
        for axis in 0..self.dim() {
            let c = self.counts[axis];
            let h = self.lengths[axis] / c as f64;
            let i = ((x[axis] / h).round() as isize).rem_euclid(c as isize) as usize;
            idx = idx * c + i;
        }
        self.samples[idx]
    }

    /// Fraction of spectral energy within two cells of the Nyquist frequency
    /// on any axis. This is the aliasing monitor used by `spectral_apply`.
    pub fn nyquist_energy_fraction(&self) -> f64 {
        let spec = self.dft();
        let mut k = vec![0i64; self.dim()];
        let mut xi = vec![0.0; self.dim()];
        let mut near = 0.0;
        let mut total = 0.0;
        for (idx, v) in spec.iter().enumerate() {
            self.freq_at(idx, &mut k, &mut xi);
            let e = v.norm_sqr();
            total += e;
            let near_nyquist = k
                .iter()
                .zip(&self.counts)
                .any(|(&kj, &c)| kj.unsigned_abs() as usize + 1 >= c / 2);
            if near_nyquist {
                near += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            near / total
        }
    }

    // ---- .gfld serialization -------------------------------------------

    /// Writes the field: one JSON header line, then raw little-endian
    /// re/im f64 pairs in row-major order. Round trips bit-exactly.
    pub fn write_gfld<W: Write>(&self, mut out: W) -> Result<(), FieldError> {
        let header = GfldHeader {
            n: self.dim(),
            counts: self.counts.clone(),
            lengths: self.lengths.clone(),
            dtype: "c128le".into(),
        };
        let mut line = serde_json::to_string(&header)
            .map_err(|e| FieldError::Header(e.to_string()))?;
        line.push('\n');
        out.write_all(line.as_bytes())?;
        let mut buf = Vec::with_capacity(self.samples.len() * 16);
        for v in &self.samples {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_gfld<R: Read>(mut input: R) -> Result<Self, FieldError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| FieldError::Header("missing newline after header".into()))?;
        let header: GfldHeader = serde_json::from_slice(&bytes[..newline])
            .map_err(|e| FieldError::Header(e.to_string()))?;
        if header.dtype != "c128le" {
            return Err(FieldError::Header(format!(
                "unsupported dtype {:?}",
                header.dtype
            )));
        }
        if header.n != header.counts.len() {
            return Err(FieldError::Header(
                "n does not match counts length".into(),
            ));
        }
        let total = validate_shape(&header.counts, &header.lengths)?;
        let payload = &bytes[newline + 1..];
        if payload.len() != total * 16 {
            return Err(FieldError::Payload {
                expected: total * 16,
                got: payload.len(),
            });
        }
        let mut samples = Vec::with_capacity(total);
        for chunk in payload.chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            samples.push(Complex64::new(re, im));
        }
        GridField::from_samples(header.counts, header.lengths, samples)
    }

    pub fn write_gfld_path<P: AsRef<Path>>(&self, path: P) -> Result<(), FieldError> {
        let file = std::fs::File::create(path)?;
        self.write_gfld(std::io::BufWriter::new(file))
    }

    pub fn read_gfld_path<P: AsRef<Path>>(path: P) -> Result<Self, FieldError> {
        let file = std::fs::File::open(path)?;
        Self::read_gfld(std::io::BufReader::new(file))
    }
}

// ---- bundled field generators ------------------------------------------

/// Periodized Gaussian `exp(-|x-c|²/2σ²)`, built from its exact spectrum.
pub fn gaussian_field(
    counts: Vec<usize>,
    lengths: Vec<f64>,
    center: &[f64],
    sigma: f64,
) -> Result<GridField, FieldError> {
    let n = counts.len();
    if center.len() != n {
        return Err(FieldError::DimensionMismatch {
            got: center.len(),
            expected: n,
        });
    }
    let amp = (std::f64::consts::TAU * sigma * sigma).powf(n as f64 / 2.0);
    let center = center.to_vec();
    GridField::from_spectrum(counts, lengths, move |_k, xi| {
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        let phase: f64 = xi.iter().zip(&center).map(|(x, c)| x * c).sum();
        Complex64::from_polar(amp * (-0.5 * sigma * sigma * xi2).exp(), -phase)
    })
}

/// `sign(x₁-c₁) · exp(-|x-c|²/2σ²)`: a jump across `{x₁ = c₁}` under a
/// smooth envelope. Singular directions are `±e₁` along the jump plane.
pub fn jump_field(
    counts: Vec<usize>,
    lengths: Vec<f64>,
    center: &[f64],
    sigma: f64,
) -> Result<GridField, FieldError> {
    let n = counts.len();
    if center.len() != n {
        return Err(FieldError::DimensionMismatch {
            got: center.len(),
            expected: n,
        });
    }
    let mut field = GridField::zeros(counts, lengths)?;
    let mut x = vec![0.0; n];
    for idx in 0..field.len() {
        field.point_at(idx, &mut x);
        let r2: f64 = x
            .iter()
            .zip(center)
            .map(|(xj, cj)| (xj - cj) * (xj - cj))
            .sum();
        let sign = if x[0] >= center[0] { 1.0 } else { -1.0 };
        field.samples_mut()[idx] =
            Complex64::new(sign * (-r2 / (2.0 * sigma * sigma)).exp(), 0.0);
    }
    Ok(field)
}

/// Field with spectrum `û(k) = exp(-|k|^θ)`; `θ = 1/2` gives the standard
/// Gevrey-2 test field.
pub fn spectral_gevrey_field(
    counts: Vec<usize>,
    lengths: Vec<f64>,
    theta: f64,
) -> Result<GridField, FieldError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FieldError::Header(format!(
            "theta must lie in (0,1], got {theta}"
        )));
    }
    let hvol: f64 = lengths
        .iter()
        .zip(&counts)
        .map(|(&l, &c)| l / c as f64)
        .product();
    GridField::from_spectrum(counts, lengths, move |k, _xi| {
        let kmag: f64 = k.iter().map(|&kj| (kj * kj) as f64).sum::<f64>().sqrt();
        // û(k) is specified on the DFT side; undo the physical scaling.
        Complex64::new((-kmag.powf(theta)).exp() * hvol, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parseval_exact() {
        let field = gaussian_field(
            vec![64, 64],
            vec![std::f64::consts::TAU, std::f64::consts::TAU],
            &[3.0, 3.0],
            0.6,
        )
        .unwrap();
        let direct = field.l2_norm();
        let spec = field.dft();
        let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        let via_spec =
            (total * field.cell_volume() / field.len() as f64).sqrt();
        assert!((direct - via_spec).abs() <= 1e-12 * direct);
    }

    #[test]
    fn pure_mode_is_fft_eigenvector() {
        let counts = vec![64];
        let lengths = vec![std::f64::consts::TAU];
        let mut field = GridField::zeros(counts, lengths).unwrap();
        let mut x = vec![0.0];
        for idx in 0..field.len() {
            field.point_at(idx, &mut x);
            field.samples_mut()[idx] = Complex64::from_polar(1.0, 3.0 * x[0]);
        }
        let spec = field.dft();
        let mut k = vec![0i64];
        let mut xi = vec![0.0];
        for (idx, v) in spec.iter().enumerate() {
            field.freq_at(idx, &mut k, &mut xi);
            if k[0] == 3 {
                assert!((v.re - 64.0).abs() < 1e-9 && v.im.abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn round_trip_fft() {
        let field = jump_field(
            vec![32, 32],
            vec![std::f64::consts::TAU, std::f64::consts::TAU],
            &[3.1, 3.1],
            0.5,
        )
        .unwrap();
        let mut copy = field.clone();
        copy.fft_in_place(false);
        copy.fft_in_place(true);
        for (a, b) in field.samples().iter().zip(copy.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gfld_round_trip_bit_exact() {
        let field = gaussian_field(
            vec![16, 32],
            vec![1.0, 2.0],
            &[0.5, 1.0],
            0.2,
        )
        .unwrap();
        let mut buf = Vec::new();
        field.write_gfld(&mut buf).unwrap();
        let back = GridField::read_gfld(buf.as_slice()).unwrap();
        assert_eq!(field.counts(), back.counts());
        assert_eq!(field.lengths(), back.lengths());
        for (a, b) in field.samples().iter().zip(back.samples()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn gfld_rejects_bad_headers() {
        let bytes = b"{\"n\":1,\"counts\":[10],\"lengths\":[1.0],\"dtype\":\"c128le\"}\n";
        assert!(matches!(
            GridField::read_gfld(&bytes[..]),
            Err(FieldError::BadCounts(10))
        ));
        let bytes = b"not json\n";
        assert!(matches!(
            GridField::read_gfld(&bytes[..]),
            Err(FieldError::Header(_))
        ));
    }

    #[test]
    fn box_region_membership() {
        let region = BoxRegion::cube(vec![1.0, 1.0], 0.5);
        assert!(region.contains(&[1.2, 0.8]));
        assert!(!region.contains(&[1.6, 1.0]));
        assert!(region.padded(0.2).contains(&[1.6, 1.0]));
    }

    #[test]
    fn counts_validation() {
        assert!(GridField::zeros(vec![8], vec![1.0]).is_err());
        assert!(GridField::zeros(vec![48], vec![1.0]).is_err());
        assert!(GridField::zeros(vec![64], vec![-1.0]).is_err());
    }
}
