//! Analysis of linear partial differential operators through their Newton
//! polyhedra: exact polyhedral geometry, anisotropy weights, sampling-based
//! multi-quasiellipticity certificates, and grid-based probes for
//! multi-anisotropic Gevrey wave fronts.
//!
//! The pipeline starts from an operator written in a small expression
//! language (`symbol`), computes the Newton polyhedron of its support with
//! exact rational arithmetic (`polytope`), derives the anisotropy weights and
//! quasihomogeneous geometry (`weights`), and from there either certifies
//! symbol estimates by deterministic sampling (`estimates`) or probes sampled
//! fields for microlocal Gevrey regularity on periodic grids (`probe`).

pub mod estimates;
pub mod grid;
pub mod polytope;
pub mod probe;
pub mod rational;
pub mod sampling;
pub mod symbol;
pub mod weights;

pub use estimates::{
    characteristic_sample, check_multi_quasielliptic, check_sigma, fit_sigma_params,
    gevrey_index_s_prime, principal_part, EstimateError, EstimateReport, EstimateVerdict,
    SigmaParams,
};
pub use grid::{BoxRegion, FieldError, GridField};
pub use polytope::{
    newton_polyhedron, support_of, IrregularityWitness, NewtonPolyhedron, PolytopeError,
    RegularityReport,
};
pub use probe::{
    fourier_decay_probe, inclusion_consistency, iterate_growth_probe, iterate_wavefront_probe,
    spectral_apply, truncation_sequence, ConsistencyReport, ProbeError, ProbeReport, ProbeVerdict,
};
pub use rational::Rat;
pub use symbol::{parse_operator, CoefExpr, MultiIndex, OperatorSymbol, ParseError};
pub use weights::{
    anisotropy, dilate, k_of, sector_contains, weight_p, weight_q, AnisotropyData,
    QuasiconicSector, WeightError, Weights,
};
