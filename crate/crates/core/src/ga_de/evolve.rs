//! Mean-based protograph density evolution with the demapper in the loop.
//!
//! Only the means of the consistent-Gaussian messages are tracked. One
//! flooding iteration performs, in order and from a consistent snapshot of
//! the previous state:
//!
//! 1. demapper update: `mu_D(i) = J^{-1}( sum_l D(l,i) f_l( J(sum_k B(k,i) mu_cv) ) )`
//! 2. check update:    `mu_cv = phi^{-1}( 1 - prod (1 - phi(mu_vc))^(B - [own edge]) )`
//! 3. variable update: `mu_vc = mu_D + sum B mu_cv - [own edge]`
//!
//! with all means clamped to [`MEAN_CAP`]. The check product is accumulated
//! in the log domain so near-converged states keep relative precision
//! instead of collapsing to the cap prematurely.

use super::functions::{j_fun, j_inv, ln_phi_f64, phi_inv_f64, MEAN_CAP};
use crate::demapper::{CurveSource, DualCurves, BITS_PER_SYMBOL};
use crate::error::{Error, Result};
use crate::mapping::MappingMatrix;
use crate::protograph::CoupledEnsemble;
use crate::scalar::{sc, Scalar};

/// Sparse adjacency of a protograph: one slot per nonzero (check, variable)
/// pair; parallel edges are carried as multiplicities.
#[derive(Debug, Clone)]
pub struct EnsembleGraph {
    n_vars: usize,
    n_slots: usize,
    n_positions: usize,
    /// Per check: (variable, multiplicity, slot).
    check_adj: Vec<Vec<(usize, u32, usize)>>,
    /// Per variable: (check, multiplicity, slot).
    var_adj: Vec<Vec<(usize, u32, usize)>>,
    var_position: Vec<usize>,
}

impl EnsembleGraph {
    pub fn new(ensemble: &CoupledEnsemble) -> Self {
        let base = ensemble.base();
        let (n_checks, n_vars) = (base.rows(), base.cols());
        let mut check_adj = vec![Vec::new(); n_checks];
        let mut var_adj = vec![Vec::new(); n_vars];
        let mut n_slots = 0;
        for check in 0..n_checks {
            for var in 0..n_vars {
                let mult = base.get(check, var);
                if mult > 0 {
                    check_adj[check].push((var, mult, n_slots));
                    var_adj[var].push((check, mult, n_slots));
                    n_slots += 1;
                }
            }
        }
        let var_position = (0..n_vars).map(|v| ensemble.position_of_var(v)).collect();
        Self {
            n_vars,
            n_slots,
            n_positions: ensemble.positions(),
            check_adj,
            var_adj,
            var_position,
        }
    }

    pub fn slots(&self) -> usize {
        self.n_slots
    }

    pub fn vars(&self) -> usize {
        self.n_vars
    }

    /// Per-check adjacency: `(variable, multiplicity, slot)` triples.
    pub fn check_adj(&self) -> &[Vec<(usize, u32, usize)>] {
        &self.check_adj
    }

    /// Per-variable adjacency: `(check, multiplicity, slot)` triples.
    pub fn var_adj(&self) -> &[Vec<(usize, u32, usize)>] {
        &self.var_adj
    }
}

/// Message means of one density-evolution iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanState<R> {
    /// Variable-to-check means, slot indexed.
    pub vc: Vec<R>,
    /// Check-to-variable means, slot indexed.
    pub cv: Vec<R>,
    /// Demapper-to-variable means, per variable type.
    pub demap: Vec<R>,
    pub iteration: usize,
}

impl<R: Scalar> MeanState<R> {
    pub fn zero(graph: &EnsembleGraph) -> Self {
        Self {
            vc: vec![R::zero(); graph.n_slots],
            cv: vec![R::zero(); graph.n_slots],
            demap: vec![R::zero(); graph.n_vars],
            iteration: 0,
        }
    }
}

/// Outcome of a density-evolution run.
#[derive(Debug, Clone)]
pub struct DeResult<R> {
    pub converged: bool,
    pub iterations_used: usize,
    /// Per-iteration, per-spatial-position error proxy (`Q(sqrt(mu_app/2))`
    /// on AWGN, a-posteriori erasure probability on the BEC). Empty when
    /// trajectory recording is disabled.
    pub per_position_error: Vec<Vec<R>>,
    /// Final a-posteriori mutual information per variable type.
    pub final_mi: Vec<R>,
}

/// Stopping parameters for [`run_de`].
#[derive(Debug, Clone, Copy)]
pub struct DeOptions {
    pub max_iter: usize,
    /// A-posteriori MI every variable type must reach for success.
    pub success_mi: f64,
    /// Absolute MI stall tolerance.
    pub stall_tol: f64,
    pub record_trajectory: bool,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            max_iter: 40_000,
            success_mi: 1.0 - 1e-6,
            stall_tol: 1e-8,
            record_trajectory: false,
        }
    }
}

/// Prepared evolver: graph, per-variable mapping weights and curves.
pub struct DensityEvolver<'a, R> {
    graph: &'a EnsembleGraph,
    /// Nonzero (combined channel, weight) pairs per variable type.
    weights: Vec<Vec<(usize, R)>>,
    curves: &'a DualCurves<R>,
}

impl<'a, R: Scalar> DensityEvolver<'a, R> {
    pub fn new(
        graph: &'a EnsembleGraph,
        mapping: &MappingMatrix<R>,
        curves: &'a DualCurves<R>,
    ) -> Result<Self> {
        if mapping.bits_per_symbol() != BITS_PER_SYMBOL {
            return Err(Error::DimensionMismatch(format!(
                "mapping has K = {}, demapper provides K = {}",
                mapping.bits_per_symbol(),
                BITS_PER_SYMBOL
            )));
        }
        if mapping.columns().len() != graph.n_vars {
            return Err(Error::DimensionMismatch(format!(
                "mapping has {} columns, ensemble has {} variable types",
                mapping.columns().len(),
                graph.n_vars
            )));
        }
        let weights = (0..graph.n_vars)
            .map(|v| {
                mapping
                    .column(v)
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w > R::zero())
                    .map(|(l, w)| (l, *w))
                    .collect()
            })
            .collect();
        Ok(Self {
            graph,
            weights,
            curves,
        })
    }

    /// One flooding iteration; writes the successor of `state` into `next`.
    pub fn step_into(&self, state: &MeanState<R>, next: &mut MeanState<R>) {
        let cap = sc::<R>(MEAN_CAP);

        // Demapper update from the previous check-to-variable means.
        for (var, adj) in self.graph.var_adj.iter().enumerate() {
            let mut agg = R::zero();
            for &(_, mult, slot) in adj {
                agg = agg + sc::<R>(mult as f64) * state.cv[slot];
            }
            let i_a = j_fun(agg.min(cap));
            let mut mi = R::zero();
            for &(channel, w) in &self.weights[var] {
                mi = mi + w * self.curves.mi(channel, i_a);
            }
            next.demap[var] = j_inv(mi.min(R::one())).min(cap);
        }

        // Check-node update from the previous variable-to-check means,
        // accumulated as sum of multiplicity-weighted ln(1 - phi(mu)) terms.
        // A zero mean gives phi = 1 (ln -> -inf); those edges are counted
        // separately so the exclusion of the own edge stays well defined.
        for adj in &self.graph.check_adj {
            let mut ln_sum = 0.0f64;
            let mut zero_edges = 0u32;
            for &(_, mult, slot) in adj {
                let mu = state.vc[slot].as_f64();
                if mu <= 0.0 {
                    zero_edges += mult;
                } else {
                    // ln(1 - phi(mu)) = ln(-expm1(ln phi))
                    let lp = ln_phi_f64(mu);
                    ln_sum += mult as f64 * (-lp.exp_m1()).ln();
                }
            }
            for &(_, mult, slot) in adj {
                let mu = state.vc[slot].as_f64();
                let own_zero = mu <= 0.0;
                let remaining_zero = zero_edges - u32::from(own_zero);
                next.cv[slot] = if remaining_zero > 0 {
                    // Some other edge carries no information: phi^{-1}(1) = 0.
                    R::zero()
                } else {
                    let own = if own_zero {
                        0.0
                    } else {
                        let lp = ln_phi_f64(mu);
                        (-lp.exp_m1()).ln()
                    };
                    let exponent = ln_sum - own;
                    let arg = -exponent.exp_m1(); // 1 - prod(1 - phi)
                    sc::<R>(phi_inv_f64(arg)).min(cap)
                };
            }
        }

        // Variable-node update from the fresh demapper and check means.
        for (var, adj) in self.graph.var_adj.iter().enumerate() {
            let mut total = R::zero();
            for &(_, mult, slot) in adj {
                total = total + sc::<R>(mult as f64) * next.cv[slot];
            }
            for &(_, _, slot) in adj {
                next.vc[slot] = (next.demap[var] + total - next.cv[slot]).min(cap);
            }
        }
        next.iteration = state.iteration + 1;
    }

    /// A-posteriori mean per variable type (demapper plus all check inputs).
    fn app_means(&self, state: &MeanState<R>, out: &mut [R]) {
        for (var, adj) in self.graph.var_adj.iter().enumerate() {
            let mut total = state.demap[var];
            for &(_, mult, slot) in adj {
                total = total + sc::<R>(mult as f64) * state.cv[slot];
            }
            out[var] = total;
        }
    }
}

/// One public flooding iteration (convenience wrapper over
/// [`DensityEvolver::step_into`]).
pub fn de_step<R: Scalar>(
    ensemble: &CoupledEnsemble,
    mapping: &MappingMatrix<R>,
    curves: &DualCurves<R>,
    state: &MeanState<R>,
) -> Result<MeanState<R>> {
    let graph = EnsembleGraph::new(ensemble);
    let evolver = DensityEvolver::new(&graph, mapping, curves)?;
    let mut next = MeanState::zero(&graph);
    evolver.step_into(state, &mut next);
    Ok(next)
}

/// Error proxy of a consistent-Gaussian LLR with mean `mu`.
#[inline]
pub fn error_proxy(mu: f64) -> f64 {
    0.5 * libm::erfc((mu / 2.0).sqrt() / std::f64::consts::SQRT_2)
}

/// Runs density evolution from the all-zero state until every variable type
/// reaches `success_mi`, the MI profile stalls, or `max_iter` is hit.
pub fn run_de<R: Scalar>(
    ensemble: &CoupledEnsemble,
    mapping: &MappingMatrix<R>,
    curves: &DualCurves<R>,
    options: &DeOptions,
) -> Result<DeResult<R>> {
    if options.max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let graph = EnsembleGraph::new(ensemble);
    let evolver = DensityEvolver::new(&graph, mapping, curves)?;
    let mut state = MeanState::zero(&graph);
    let mut next = MeanState::zero(&graph);
    let mut app = vec![R::zero(); graph.n_vars];
    let mut mi = vec![R::zero(); graph.n_vars];
    let mut prev_mi = vec![R::zero(); graph.n_vars];

    let position_error = |app: &[R], out: &mut Vec<R>| {
        out.clear();
        out.resize(graph.n_positions, R::zero());
        for (var, &pos) in graph.var_position.iter().enumerate() {
            let pe = sc::<R>(error_proxy(app[var].as_f64()));
            if pe > out[pos] {
                out[pos] = pe;
            }
        }
    };

    let mut trajectory = Vec::new();
    if options.record_trajectory {
        let mut row = Vec::new();
        position_error(&app, &mut row);
        trajectory.push(row);
    }

    let mut converged = false;
    let mut iterations_used = 0;
    for _ in 0..options.max_iter {
        evolver.step_into(&state, &mut next);
        std::mem::swap(&mut state, &mut next);
        iterations_used = state.iteration;
        evolver.app_means(&state, &mut app);
        for (m, a) in mi.iter_mut().zip(&app) {
            *m = j_fun(*a);
        }
        if options.record_trajectory {
            let mut row = Vec::new();
            position_error(&app, &mut row);
            trajectory.push(row);
        }
        if mi.iter().all(|m| m.as_f64() >= options.success_mi) {
            converged = true;
            break;
        }
        let delta = mi
            .iter()
            .zip(&prev_mi)
            .map(|(a, b)| (*a - *b).abs().as_f64())
            .fold(0.0, f64::max);
        if delta < options.stall_tol {
            break;
        }
        std::mem::swap(&mut mi, &mut prev_mi);
    }

    Ok(DeResult {
        converged,
        iterations_used,
        per_position_error: trajectory,
        final_mi: mi,
    })
}

/// Outcome of a threshold bisection that may give up early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BisectOutcome {
    /// Bracket shrunk to the requested tolerance; value is the midpoint.
    Resolved(f64),
    /// Search aborted because even the bracket floor exceeds `abort_above`;
    /// value is that floor (a lower bound on the true threshold).
    AbortedBelow(f64),
    /// Density evolution failed at the top of the bracket.
    FailedAtHigh,
}

/// Bisection controls for [`bisect_threshold`].
#[derive(Debug, Clone, Copy)]
pub struct ThresholdOptions {
    pub tol_db: f64,
    /// Verify that the bracket low end fails before bisecting.
    pub validate_low: bool,
    /// Stop early once the bracket floor exceeds this value.
    pub abort_above: Option<f64>,
    pub de: DeOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            tol_db: 0.01,
            validate_low: true,
            abort_above: None,
            de: DeOptions::default(),
        }
    }
}

/// Bisection on Es/N0 for the smallest channel quality where density
/// evolution converges.
pub fn bisect_threshold<R: Scalar>(
    ensemble: &CoupledEnsemble,
    mapping: &MappingMatrix<R>,
    source: &dyn CurveSource<R>,
    bracket: (f64, f64),
    options: &ThresholdOptions,
) -> Result<BisectOutcome> {
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "bracket ({lo}, {hi}) is not increasing"
        )));
    }
    let run = |snr_db: f64| -> Result<bool> {
        let curves = source.dual_at(snr_db)?;
        Ok(run_de(ensemble, mapping, &curves, &options.de)?.converged)
    };
    if !run(hi)? {
        return Ok(BisectOutcome::FailedAtHigh);
    }
    if options.validate_low && run(lo)? {
        return Err(Error::InvalidBracket {
            lo_db: lo,
            hi_db: hi,
            lo_outcome: "converged",
            hi_outcome: "converged",
        });
    }
    while hi - lo > options.tol_db {
        if let Some(limit) = options.abort_above {
            if lo > limit {
                return Ok(BisectOutcome::AbortedBelow(lo));
            }
        }
        let mid = 0.5 * (lo + hi);
        if run(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BisectOutcome::Resolved(0.5 * (lo + hi)))
}

/// Threshold search with strict bracket validation: density evolution must
/// fail at `bracket.0` and succeed at `bracket.1`. Returns Es/N0 in dB.
pub fn find_threshold_db<R: Scalar>(
    ensemble: &CoupledEnsemble,
    mapping: &MappingMatrix<R>,
    source: &dyn CurveSource<R>,
    bracket: (f64, f64),
    tol_db: f64,
) -> Result<f64> {
    let options = ThresholdOptions {
        tol_db,
        ..Default::default()
    };
    match bisect_threshold(ensemble, mapping, source, bracket, &options)? {
        BisectOutcome::Resolved(db) => Ok(db),
        BisectOutcome::FailedAtHigh => Err(Error::InvalidBracket {
            lo_db: bracket.0,
            hi_db: bracket.1,
            lo_outcome: "stalled",
            hi_outcome: "stalled",
        }),
        BisectOutcome::AbortedBelow(_) => unreachable!("no abort limit configured"),
    }
}

/// Conversion from the internal Es/N0 axis to Eb/N0 for reporting:
/// `Eb/N0 = Es/N0 - 10 log10(bits_per_symbol * rate)`.
pub fn esn0_to_ebn0_db(es_n0_db: f64, rate: f64, bits_per_symbol: usize) -> f64 {
    es_n0_db - 10.0 * (bits_per_symbol as f64 * rate).log10()
}

/// Inverse of [`esn0_to_ebn0_db`].
pub fn ebn0_to_esn0_db(eb_n0_db: f64, rate: f64, bits_per_symbol: usize) -> f64 {
    eb_n0_db + 10.0 * (bits_per_symbol as f64 * rate).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demapper::Labeling;
    use crate::ga_de::functions::{phi_fun, phi_inv};
    use crate::mapping::uniform_mapping;
    use crate::protograph::{build_coupled, standard_code, CouplingMode};

    fn uncoupled_c1() -> CoupledEnsemble {
        let spec = standard_code("C1").unwrap().spec.with_mode(CouplingMode::Uncoupled);
        build_coupled(&spec).unwrap()
    }

    #[test]
    fn first_iteration_matches_closed_form() {
        let ensemble = uncoupled_c1();
        let mapping = uniform_mapping::<f64>(4, 1, 2, Labeling::Gray);
        let c = 0.37;
        let curves = DualCurves::constant(0.0, c);
        let graph = EnsembleGraph::new(&ensemble);
        let state = MeanState::zero(&graph);
        let next = de_step(&ensemble, &mapping, &curves, &state).unwrap();
        // mu_D = J^{-1}(sum_l D f_l(0)) = J^{-1}(c); checks emit nothing yet.
        let want = j_inv(c);
        for v in &next.demap {
            assert!((v - want).abs() < 1e-12);
        }
        assert!(next.cv.iter().all(|&m| m == 0.0));
        for v in &next.vc {
            assert!((v - want).abs() < 1e-12);
        }
        assert_eq!(next.iteration, 1);
    }

    /// Independent scalar recursion for the regular (3,6) protograph with a
    /// constant demapper curve:
    ///   u = phi^{-1}(1 - (1 - phi(v))^5),  v = J^{-1}(c) + 2u.
    fn scalar_recursion(c: f64, iterations: usize) -> (f64, f64) {
        let mu_d = j_inv(c);
        let mut u = 0.0f64;
        let mut v = 0.0f64;
        for _ in 0..iterations {
            // check side from previous v, then variable side from fresh u
            u = if v <= 0.0 {
                0.0
            } else {
                let one_minus = 1.0 - phi_fun(v);
                phi_inv(1.0 - one_minus.powi(5))
            };
            v = (mu_d + 2.0 * u).min(MEAN_CAP);
        }
        (u, v)
    }

    #[test]
    fn matches_scalar_recursion_for_regular_code() {
        let ensemble = uncoupled_c1();
        let mapping = uniform_mapping::<f64>(4, 1, 2, Labeling::Gray);
        let c = 0.62;
        let curves = DualCurves::constant(0.0, c);
        let graph = EnsembleGraph::new(&ensemble);
        let evolver = DensityEvolver::new(&graph, &mapping, &curves).unwrap();
        let mut state = MeanState::zero(&graph);
        let mut next = MeanState::zero(&graph);
        for iter in 1..=40 {
            evolver.step_into(&state, &mut next);
            std::mem::swap(&mut state, &mut next);
            let (u, v) = scalar_recursion(c, iter);
            for &cv in &state.cv {
                assert!((cv - u).abs() < 1e-9, "iter {iter}: cv {cv} vs {u}");
            }
            for &vc in &state.vc {
                assert!((vc - v).abs() < 1e-9, "iter {iter}: vc {vc} vs {v}");
            }
        }
    }

    #[test]
    fn means_are_monotone_from_zero() {
        let ensemble = uncoupled_c1();
        let mapping = uniform_mapping::<f64>(4, 1, 2, Labeling::Sp);
        let curves = DualCurves::constant(0.0, 0.5);
        let graph = EnsembleGraph::new(&ensemble);
        let evolver = DensityEvolver::new(&graph, &mapping, &curves).unwrap();
        let mut state = MeanState::zero(&graph);
        let mut next = MeanState::zero(&graph);
        for _ in 0..60 {
            evolver.step_into(&state, &mut next);
            for (slot, (&new, &old)) in next.vc.iter().zip(&state.vc).enumerate() {
                assert!(new >= old, "vc slot {slot} decreased");
            }
            for (&new, &old) in next.cv.iter().zip(&state.cv) {
                assert!(new >= old);
            }
            std::mem::swap(&mut state, &mut next);
        }
    }

    #[test]
    fn run_bookkeeping() {
        let ensemble = uncoupled_c1();
        let mapping = uniform_mapping::<f64>(4, 1, 2, Labeling::Gray);
        let curves = DualCurves::constant(0.0, 0.3);
        let options = DeOptions {
            max_iter: 1,
            record_trajectory: true,
            ..Default::default()
        };
        let res = run_de(&ensemble, &mapping, &curves, &options).unwrap();
        assert_eq!(res.iterations_used, 1);
        assert_eq!(res.per_position_error.len(), 2);
        assert_eq!(res.per_position_error[0].len(), 1);
        let bad = DeOptions {
            max_iter: 0,
            ..Default::default()
        };
        assert!(run_de(&ensemble, &mapping, &curves, &bad).is_err());
    }

    #[test]
    fn constant_curve_one_converges_and_zero_stalls() {
        let ensemble = uncoupled_c1();
        let mapping = uniform_mapping::<f64>(4, 1, 2, Labeling::Gray);
        let hot = DualCurves::constant(0.0, 1.0);
        let res = run_de(&ensemble, &mapping, &hot, &DeOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.iterations_used < 50);
        let cold = DualCurves::constant(0.0, 0.2);
        let res = run_de(&ensemble, &mapping, &cold, &DeOptions::default()).unwrap();
        assert!(!res.converged);
        assert!(res.final_mi.iter().all(|&m| m < 0.9));
    }

    #[test]
    fn threshold_bisection_on_synthetic_source() {
        // Synthetic model: constant curve value rises linearly with SNR, so
        // the threshold is where the (3,6) fixed point first closes.
        let ensemble = uncoupled_c1();
        let mapping = uniform_mapping::<f64>(4, 1, 2, Labeling::Gray);
        let source = crate::demapper::FnCurveSource(|snr: f64| {
            Ok(DualCurves::constant(snr, (snr / 10.0).clamp(0.0, 1.0)))
        });
        let t = find_threshold_db(&ensemble, &mapping, &source, (1.0, 9.9), 0.01).unwrap();
        assert!(t > 1.5 && t < 9.5, "threshold {t}");
        // Monotonicity in SNR across the bracket on a 0.1 dB grid.
        let mut failed_after_success = false;
        let mut seen_success = false;
        for k in 0..=20 {
            let snr = t - 1.0 + 2.0 * k as f64 / 20.0;
            let curves = source.dual_at(snr).unwrap();
            let res = run_de(&ensemble, &mapping, &curves, &DeOptions::default()).unwrap();
            if res.converged {
                seen_success = true;
            } else if seen_success {
                failed_after_success = true;
            }
        }
        assert!(seen_success);
        assert!(!failed_after_success);
        // Invalid bracket: both ends succeed.
        assert!(matches!(
            find_threshold_db(&ensemble, &mapping, &source, (9.0, 9.9), 0.1),
            Err(Error::InvalidBracket { .. })
        ));
        // Failure at the high end is reported too.
        assert!(matches!(
            find_threshold_db(&ensemble, &mapping, &source, (0.1, 0.5), 0.1),
            Err(Error::InvalidBracket { .. })
        ));
    }

    #[test]
    fn snr_axis_conversions() {
        let eb = esn0_to_ebn0_db(6.42, 0.5, 4);
        assert!((eb - (6.42 - 3.0102999566398)).abs() < 1e-9);
        let es = ebn0_to_esn0_db(eb, 0.5, 4);
        assert!((es - 6.42).abs() < 1e-12);
    }
}
