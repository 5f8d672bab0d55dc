//! Exact erasure-probability density evolution on the protograph.
//!
//! On the binary erasure channel no Gaussian approximation is needed: the
//! per-edge erasure probabilities evolve exactly. Seeding a few spatial
//! positions with (partially) known bits reduces their channel erasure
//! probability and triggers the decoding wave that tail-biting chains lack.

use super::evolve::{DeResult, EnsembleGraph};
use crate::error::{Error, Result};
use crate::protograph::CoupledEnsemble;
use crate::scalar::{sc, Scalar};

/// Stopping parameters for [`bec_de`].
#[derive(Debug, Clone, Copy)]
pub struct BecOptions {
    pub max_iter: usize,
    /// A-posteriori erasure probability below which a position counts as
    /// resolved.
    pub success_tol: f64,
    /// Absolute stall tolerance on the erasure profile.
    pub stall_tol: f64,
    /// Fraction of bits known at the seeded positions; 1 means fully known.
    pub known_fraction: f64,
}

impl Default for BecOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            success_tol: 1e-9,
            stall_tol: 1e-12,
            known_fraction: 1.0,
        }
    }
}

/// Runs erasure density evolution with channel parameter `epsilon`.
///
/// Variable types at `known_positions` see an effective erasure probability
/// `(1 - known_fraction) * epsilon`. The trajectory rows hold the worst
/// a-posteriori erasure probability per spatial position.
pub fn bec_de<R: Scalar>(
    ensemble: &CoupledEnsemble,
    epsilon: R,
    known_positions: &[usize],
    options: &BecOptions,
) -> Result<DeResult<R>> {
    if epsilon < R::zero() || epsilon > R::one() {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} outside [0, 1]"
        )));
    }
    if options.max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let positions = ensemble.positions();
    if let Some(&bad) = known_positions.iter().find(|&&p| p >= positions) {
        return Err(Error::InvalidArgument(format!(
            "known position {bad} out of range (L = {positions})"
        )));
    }
    let graph = EnsembleGraph::new(ensemble);
    let n_vars = graph.vars();
    let seeded = sc::<R>((1.0 - options.known_fraction).clamp(0.0, 1.0)) * epsilon;
    let channel: Vec<R> = (0..n_vars)
        .map(|v| {
            if known_positions.contains(&ensemble.position_of_var(v)) {
                seeded
            } else {
                epsilon
            }
        })
        .collect();

    // Per-slot erasure probabilities, initialized to the channel values.
    let mut var_to_check: Vec<R> = vec![R::zero(); graph.slots()];
    for (var, adj) in graph.var_adj().iter().enumerate() {
        for &(_, _, slot) in adj.iter() {
            var_to_check[slot] = channel[var];
        }
    }
    let mut check_to_var: Vec<R> = vec![R::one(); graph.slots()];
    let mut app: Vec<R> = channel.clone();

    let position_profile = |app: &[R]| -> Vec<R> {
        let mut row = vec![R::zero(); positions];
        for (var, &e) in app.iter().enumerate() {
            let pos = ensemble.position_of_var(var);
            if e > row[pos] {
                row[pos] = e;
            }
        }
        row
    };

    let mut trajectory = vec![position_profile(&app)];
    let mut converged = false;
    let mut iterations_used = 0;
    let mut prev_app = app.clone();

    for iter in 1..=options.max_iter {
        iterations_used = iter;
        // Check update: y = 1 - prod (1 - x)^(mult - [own edge]).
        for adj in graph.check_adj() {
            let mut product = R::one();
            let mut zeros = 0u32;
            for &(_, mult, slot) in adj.iter() {
                let keep = R::one() - var_to_check[slot];
                if keep <= R::zero() {
                    zeros += mult;
                } else {
                    product = product * keep.powi(mult as i32);
                }
            }
            for &(_, _, slot) in adj.iter() {
                let keep = R::one() - var_to_check[slot];
                let own_zero = keep <= R::zero();
                let remaining = zeros - u32::from(own_zero);
                check_to_var[slot] = if remaining > 0 {
                    R::one()
                } else {
                    let own = if own_zero { R::one() } else { keep };
                    R::one() - product / own
                };
            }
        }
        // Variable update: x = eps * prod y^(mult - [own edge]); app uses all.
        for (var, adj) in graph.var_adj().iter().enumerate() {
            let mut product = R::one();
            let mut zeros = 0u32;
            for &(_, mult, slot) in adj.iter() {
                let y = check_to_var[slot];
                if y <= R::zero() {
                    zeros += mult;
                } else {
                    product = product * y.powi(mult as i32);
                }
            }
            app[var] = if zeros > 0 {
                R::zero()
            } else {
                channel[var] * product
            };
            for &(_, _, slot) in adj.iter() {
                let y = check_to_var[slot];
                let own_zero = y <= R::zero();
                let remaining = zeros - u32::from(own_zero);
                var_to_check[slot] = if remaining > 0 {
                    R::zero()
                } else {
                    let own = if own_zero { R::one() } else { y };
                    channel[var] * product / own
                };
            }
        }
        trajectory.push(position_profile(&app));
        if app.iter().all(|e| e.as_f64() <= options.success_tol) {
            converged = true;
            break;
        }
        let delta = app
            .iter()
            .zip(&prev_app)
            .map(|(a, b)| (*a - *b).abs().as_f64())
            .fold(0.0, f64::max);
        if delta < options.stall_tol {
            break;
        }
        prev_app.copy_from_slice(&app);
    }

    let final_mi = app.iter().map(|&e| R::one() - e).collect();
    Ok(DeResult {
        converged,
        iterations_used,
        per_position_error: trajectory,
        final_mi,
    })
}

/// Iteration index at which each spatial position first resolves, or `None`
/// if it never does. Useful for measuring the wave speed.
pub fn resolve_iterations<R: Scalar>(result: &DeResult<R>, tol: f64) -> Vec<Option<usize>> {
    let positions = result
        .per_position_error
        .first()
        .map_or(0, Vec::len);
    (0..positions)
        .map(|pos| {
            result
                .per_position_error
                .iter()
                .position(|row| row[pos].as_f64() <= tol)
        })
        .collect()
}
