//! 16-QAM constellations and iterative-demapper transfer curves.
//!
//! The demapper is characterized, per bit channel, by the extrinsic mutual
//! information it emits as a function of the a-priori information fed back
//! from the decoder. These curves — measured once per (labeling, SNR) point
//! and cached — are the only channel-facing input the density-evolution and
//! EXIT machinery consumes.

mod cache;
mod constellation;
mod curves;

pub use cache::{read_curves_csv, write_curves_csv, CurveCache};
pub use constellation::{
    make_constellation, LabeledConstellation, Labeling, BITS_PER_SYMBOL, POINTS,
};
pub use curves::{
    curve_lookup, simulate_demapper_curves, snr_interpolated_curves, uniform_grid, CurveSource,
    DemapperCurveSet, DualCurves, FnCurveSource,
};
