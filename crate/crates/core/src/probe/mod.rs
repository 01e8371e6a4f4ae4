//! Grid-based numerical probes for multi-anisotropic Gevrey wave fronts:
//! truncation sequences, Fourier-decay microregularity tests, iterate-growth
//! tests, and the consistency harness tying them to the symbol estimates.
//!
//! A probe verdict is evidence on a finite frequency window, not a proof.
//! The window, the fitted constants, and every margin enter the report, and
//! borderline margin sequences are reported as inconclusive rather than
//! rounded to a verdict.

mod consistency;
mod decay;
mod iterates;
mod spectral;
mod truncation;

pub use consistency::{
    inclusion_consistency, CellOutcome, ConsistencyConfig, ConsistencyReport,
};
pub use decay::{fourier_decay_probe, iterate_wavefront_probe};
pub use iterates::iterate_growth_probe;
pub use spectral::{iterate_once, spectral_apply};
pub use truncation::truncation_sequence;

use crate::grid::{frequency_of, FieldError};
use crate::weights::{QuasiconicSector, WeightError, Weights};
use serde::Serialize;
use thiserror::Error;

/// Reindexing factor of the localization sequence: probes cut with `χ_{pN}`.
pub const P_FACTOR: u32 = 2;
/// Lower end of the frequency window, in units of the fundamental frequency
/// `2π/min_j L_j`.
pub const R_MIN_CELLS: f64 = 8.0;
/// Componentwise fraction of Nyquist kept in the window.
pub const NYQUIST_FRAC: f64 = 0.8;
/// A margin sequence passes when it stays below this.
pub const MARGIN_TOL: f64 = 1.05;
/// Relative wiggle allowed before a margin sequence counts as non-monotone.
pub const MONOTONE_SLACK: f64 = 1.2;
/// Margins below this are noise; monotonicity ignores wiggle down there.
const MARGIN_NOISE_FLOOR: f64 = 1e-6;
/// Conclusive verdicts need at least this many tested N values.
pub const MIN_CONCLUSIVE_POINTS: usize = 4;
/// Aliasing monitor threshold: spectral energy fraction within two cells of
/// Nyquist on any axis.
pub const ALIAS_ENERGY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("bump width is {width_cells:.2} grid cells; at least 4 are required (increase pad or grid resolution)")]
    PadTooSmall { width_cells: f64 },
    #[error("the localization box padded by pad does not fit inside the grid box")]
    RegionOutOfBounds,
    #[error("invalid probe parameter: {0}")]
    InvalidParam(String),
    #[error("aliasing: {fraction:.3e} of spectral energy within two cells of Nyquist{}", at_n.map(|n| format!(" at iterate N = {n}")).unwrap_or_default())]
    Aliasing { fraction: f64, at_n: Option<u32> },
    #[error("the sector contains no frequency bins inside the window")]
    SectorEmpty,
    #[error("field values overflowed at iterate N = {at_n}")]
    Overflow { at_n: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Microregular,
    NotMicroregular,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginEntry {
    pub n: u32,
    pub margin: f64,
    pub ln_margin: f64,
}

/// The frequency window a probe actually examined.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyWindow {
    pub r_min: f64,
    pub nyquist_fraction: f64,
    pub bin_count: usize,
}

/// Outcome of a wave-front probe.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub verdict: ProbeVerdict,
    /// Sector-side margins, one per tested N (the jjj-side for iterates).
    pub margins: Vec<MarginEntry>,
    /// Global-bound margins for the iterate probe (the jj side).
    pub global_margins: Option<Vec<MarginEntry>>,
    /// Fitted localization constant.
    pub c_fit: f64,
    /// Fitted polynomial order of the N = 0 transform tail.
    pub m_fit: Option<f64>,
    /// Fitted Gevrey index from iterate growth.
    pub s_hat: Option<f64>,
    pub window: Option<FrequencyWindow>,
    pub notes: Vec<String>,
}

/// Frequency bins inside the window (and sector, when given), with the
/// per-bin quantities margins need.
pub(crate) struct Bins {
    pub idx: Vec<usize>,
    pub ln_wp: Vec<f64>,
    pub wp: Vec<f64>,
    pub ln_one_plus: Vec<f64>,
    pub r_min: f64,
}

impl Bins {
    pub fn window(&self) -> FrequencyWindow {
        FrequencyWindow {
            r_min: self.r_min,
            nyquist_fraction: NYQUIST_FRAC,
            bin_count: self.idx.len(),
        }
    }
}

pub(crate) fn select_bins(
    counts: &[usize],
    lengths: &[f64],
    weights: &Weights,
    sector: Option<&QuasiconicSector>,
) -> Bins {
    let n = counts.len();
    let total: usize = counts.iter().product();
    let min_len = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_min = R_MIN_CELLS * std::f64::consts::TAU / min_len;
    let mut k = vec![0i64; n];
    let mut xi = vec![0.0; n];
    let mut bins = Bins {
        idx: Vec::new(),
        ln_wp: Vec::new(),
        wp: Vec::new(),
        ln_one_plus: Vec::new(),
        r_min,
    };
    for idx in 0..total {
        frequency_of(counts, lengths, idx, &mut k, &mut xi);
        let inside_cap = k
            .iter()
            .zip(counts)
            .all(|(&kj, &c)| (kj.unsigned_abs() as f64) <= NYQUIST_FRAC * (c as f64 / 2.0));
        if !inside_cap {
            continue;
        }
        if weights.norm_q(&xi) < r_min {
            continue;
        }
        if let Some(sec) = sector {
            if !sec.contains(&xi).unwrap_or(false) {
                continue;
            }
        }
        let wp = weights.norm_p(&xi);
        if wp <= 0.0 {
            continue;
        }
        let euclid: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        bins.idx.push(idx);
        bins.ln_wp.push(wp.ln());
        bins.wp.push(wp);
        bins.ln_one_plus.push((1.0 + euclid).ln());
    }
    bins
}

/// Turns a log-margin sequence into a verdict:
/// conclusive only with enough N values and a margin sequence that is
/// monotone up to ±20% relative wiggle (wiggle below the noise floor is
/// ignored); then microregular iff everything stays within tolerance.
pub(crate) fn verdict_from_margins(entries: &[MarginEntry]) -> (ProbeVerdict, Vec<String>) {
    let mut notes = Vec::new();
    if entries.len() < MIN_CONCLUSIVE_POINTS {
        notes.push(format!(
            "only {} N values tested; {} needed for a conclusive verdict",
            entries.len(),
            MIN_CONCLUSIVE_POINTS
        ));
        return (ProbeVerdict::Inconclusive, notes);
    }
    let floor = MARGIN_NOISE_FLOOR.ln();
    let clamped: Vec<f64> = entries.iter().map(|e| e.ln_margin.max(floor)).collect();
    let slack = MONOTONE_SLACK.ln();
    let rising = clamped[clamped.len() - 1] > clamped[0];
    let monotone_ok = clamped.windows(2).all(|w| {
        if rising {
            w[1] >= w[0] - slack
        } else {
            w[1] <= w[0] + slack
        }
    });
    if !monotone_ok {
        notes.push("margin sequence is non-monotone beyond ±20%".into());
        return (ProbeVerdict::Inconclusive, notes);
    }
    let max_ln = entries
        .iter()
        .map(|e| e.ln_margin)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_ln <= MARGIN_TOL.ln() {
        (ProbeVerdict::Microregular, notes)
    } else {
        (ProbeVerdict::NotMicroregular, notes)
    }
}

pub(crate) fn margin_entry(n: u32, ln_margin: f64) -> MarginEntry {
    MarginEntry {
        n,
        margin: ln_margin.exp().min(1e300),
        ln_margin,
    }
}

/// Pad value that keeps every bump of `χ_{p·N}` at ≥ 4 grid cells, with 5%
/// headroom.
pub fn auto_pad(counts: &[usize], lengths: &[f64], n_max: u32) -> f64 {
    let h_max = lengths
        .iter()
        .zip(counts)
        .map(|(&l, &c)| l / c as f64)
        .fold(0.0, f64::max);
    1.05 * 4.0 * h_max * 2.0 * (P_FACTOR * n_max) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(ms: &[f64]) -> Vec<MarginEntry> {
        ms.iter()
            .enumerate()
            .map(|(i, &m)| margin_entry(i as u32 + 2, m.ln()))
            .collect()
    }

    #[test]
    fn verdicts_from_margin_shapes() {
        let (v, _) = verdict_from_margins(&entries(&[1.0, 0.3, 0.05, 0.001]));
        assert_eq!(v, ProbeVerdict::Microregular);
        let (v, _) = verdict_from_margins(&entries(&[1.0, 8.0, 70.0, 500.0]));
        assert_eq!(v, ProbeVerdict::NotMicroregular);
        let (v, _) = verdict_from_margins(&entries(&[1.0, 0.3]));
        assert_eq!(v, ProbeVerdict::Inconclusive);
        // oscillation above the noise floor is inconclusive
        let (v, _) = verdict_from_margins(&entries(&[1.0, 0.2, 0.9, 0.1]));
        assert_eq!(v, ProbeVerdict::Inconclusive);
        // wiggle below the noise floor is not
        let (v, _) = verdict_from_margins(&entries(&[1.0, 1e-8, 3e-8, 1e-9]));
        assert_eq!(v, ProbeVerdict::Microregular);
    }
}
