//! Gaussian-approximation density evolution with iterative demapping, the
//! exact erasure-channel variant, and threshold search by bisection.

mod bec;
mod evolve;
mod functions;

pub use bec::{bec_de, resolve_iterations, BecOptions};
pub use evolve::{
    bisect_threshold, de_step, ebn0_to_esn0_db, error_proxy, esn0_to_ebn0_db, find_threshold_db,
    run_de, BisectOutcome, DeOptions, DeResult, DensityEvolver, EnsembleGraph, MeanState,
    ThresholdOptions,
};
pub use functions::{
    j_fun, j_inv, ln_phi_f64, phi_f64, phi_fun, phi_inv, phi_inv_f64, H1, H2, H3, MEAN_CAP,
};
