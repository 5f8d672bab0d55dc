//! Numerical laboratory for belief-propagation decoding thresholds of
//! spatially coupled LDPC protograph ensembles over 16-QAM with iterative
//! demapping.
//!
//! The crate covers the full pipeline:
//!
//! * [`protograph`] — base matrices, tail-biting/terminated coupling, rates;
//! * [`demapper`] — Gray / set-partitioning 16-QAM, Monte-Carlo transfer
//!   curves of the APP demapper, curve caching;
//! * [`ga_de`] — mean-based density evolution with the demapper in the loop,
//!   an exact erasure-channel mode, and threshold bisection;
//! * [`exit`] — closed-form EXIT charts, open-tunnel thresholds and the
//!   equal-area approximation of the coupled threshold;
//! * [`mapping`] — bit-mapping matrices and their constraints;
//! * [`optimizer`] — differential evolution over relaxed mappings.
//!
//! All numerics are generic over [`scalar::Scalar`] (any `num-traits` float);
//! the type aliases below fix the `f64` instantiation the CLI and the
//! acceptance suite use. Channel qualities are handled internally as Es/N0
//! in dB; reported thresholds are additionally converted to Eb/N0 via
//! `Eb/N0 = Es/N0 - 10 log10(4 R)` with the tail-biting design rate, which
//! is the axis the reference thresholds use.

pub mod demapper;
pub mod error;
pub mod exit;
pub mod ga_de;
pub mod mapping;
pub mod optimizer;
pub mod protograph;
pub mod reference;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for the shipped binaries and tests.
pub type Real = f64;

/// `f64` instantiations of the generic core types.
pub type DemapperCurves = demapper::DemapperCurveSet<Real>;
pub type Curves = demapper::DualCurves<Real>;
pub type CurveCache = demapper::CurveCache<Real>;
pub type Constellation = demapper::LabeledConstellation<Real>;
pub type Mapping = mapping::MappingMatrix<Real>;
pub type Relaxed = mapping::RelaxedMapping<Real>;
pub type MeanState = ga_de::MeanState<Real>;
pub type DeResult = ga_de::DeResult<Real>;
pub type Profile = exit::DegreeProfile<Real>;
pub type ExitPair = exit::ExitCurvePair<Real>;
pub type Sweep = optimizer::SweepResult<Real>;
