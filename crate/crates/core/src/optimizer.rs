//! Differential-evolution search over relaxed bit mappings.
//!
//! The decision variable is the pair (seed vector, rest vector) of the
//! two-vector relaxation; the objective is the density-evolution threshold
//! of the tail-biting ensemble under the expanded mapping. Constraints are
//! handled by projection after mutation: mask the channels the scheme
//! forbids, clip, renormalize, water-fill seed entries that the family
//! balance cannot absorb, and derive the balanced rest vector. Fitness calls
//! are expensive (each one is a threshold bisection of the full coupled
//! chain), so results are memoized on the quantized genotype and the
//! bisection gives up early once a trial provably cannot beat its parent.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demapper::{CurveSource, BITS_PER_SYMBOL};
use crate::error::{Error, Result};
use crate::ga_de::{bisect_threshold, run_de, BisectOutcome, DeOptions, ThresholdOptions};
use crate::mapping::{
    family_balanced_rest, seeded_mapping, uniform_mapping, MappingMatrix, RelaxedMapping,
};
use crate::protograph::CoupledEnsemble;
use crate::scalar::{sc, Scalar};

const K: usize = BITS_PER_SYMBOL;
const CHANNELS: usize = 2 * K;
const GENES: usize = 2 * CHANNELS;

/// Which labeling families a mapping may use, and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Gray channels everywhere.
    Gray,
    /// Set-partitioning channels everywhere.
    Sp,
    /// Set partitioning allowed only inside the seeded sub-blocks; the rest
    /// of the chain stays Gray and needs no iterative demapping.
    Hybrid,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Gray, Scheme::Sp, Scheme::Hybrid];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" => Ok(Scheme::Gray),
            "sp" => Ok(Scheme::Sp),
            "hybrid" => Ok(Scheme::Hybrid),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected gray, sp or hybrid)"
            ))),
        }
    }

    fn seed_mask(self) -> [bool; CHANNELS] {
        let mut m = [false; CHANNELS];
        match self {
            Scheme::Gray => m[..K].fill(true),
            Scheme::Sp => m[K..].fill(true),
            Scheme::Hybrid => m.fill(true),
        }
        m
    }

    fn rest_mask(self) -> [bool; CHANNELS] {
        let mut m = [false; CHANNELS];
        match self {
            Scheme::Gray | Scheme::Hybrid => m[..K].fill(true),
            Scheme::Sp => m[K..].fill(true),
        }
        m
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Gray => write!(f, "gray"),
            Scheme::Sp => write!(f, "sp"),
            Scheme::Hybrid => write!(f, "hybrid"),
        }
    }
}

/// Differential-evolution hyperparameters and fitness controls.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub population: usize,
    pub generations: usize,
    /// Differential weight F in (0, 2).
    pub differential_weight: f64,
    /// Crossover rate CR in [0, 1].
    pub crossover_rate: f64,
    pub seed: u64,
    /// Bisection tolerance used inside fitness evaluations (dB).
    pub fitness_tol_db: f64,
    /// Tolerance for the final re-evaluation of the winner (dB).
    pub refine_tol_db: f64,
    /// Es/N0 search bracket for every fitness bisection (dB).
    pub fitness_bracket: (f64, f64),
    /// Density-evolution controls for the runs inside fitness.
    pub de: DeOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 32,
            generations: 150,
            differential_weight: 0.7,
            crossover_rate: 0.9,
            seed: 1,
            fitness_tol_db: 0.05,
            refine_tol_db: 0.01,
            fitness_bracket: (4.5, 7.5),
            de: DeOptions::default(),
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 8 {
            return Err(Error::InvalidArgument("population must be at least 8".into()));
        }
        if !(self.differential_weight > 0.0 && self.differential_weight < 2.0) {
            return Err(Error::InvalidArgument("differential weight must lie in (0, 2)".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidArgument("crossover rate must lie in [0, 1]".into()));
        }
        if self.generations == 0 {
            return Err(Error::InvalidArgument("need at least one generation".into()));
        }
        Ok(())
    }
}

/// Best mapping found for one (scheme, T) cell.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome<R> {
    pub best: RelaxedMapping<R>,
    /// Threshold of the best mapping, Es/N0 in dB at `refine_tol_db`.
    pub threshold_es_db: f64,
    /// Number of distinct fitness evaluations spent.
    pub evaluations: usize,
}

/// One row of a threshold-versus-T sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry<R> {
    pub scheme: Scheme,
    pub t_uni: usize,
    pub threshold_es_db: f64,
    pub best: RelaxedMapping<R>,
    pub evaluations: usize,
}

/// Full sweep result across schemes and T values.
#[derive(Debug, Clone)]
pub struct SweepResult<R> {
    pub entries: Vec<SweepEntry<R>>,
}

/// Threshold fitness of an expanded mapping; infeasible mappings score
/// infinity. Returns Es/N0 in dB resolved to `tol_db` (or a sound lower
/// bound when `abort_above` proves the candidate cannot win).
pub fn fitness_of_mapping<R: Scalar>(
    mapping: &MappingMatrix<R>,
    ensemble: &CoupledEnsemble,
    source: &dyn CurveSource<R>,
    bracket: (f64, f64),
    tol_db: f64,
    de: &DeOptions,
    abort_above: Option<f64>,
) -> f64 {
    if !mapping.validate().pass() {
        return f64::INFINITY;
    }
    let options = ThresholdOptions {
        tol_db,
        validate_low: false,
        abort_above,
        de: *de,
    };
    match bisect_threshold(ensemble, mapping, source, bracket, &options) {
        Ok(BisectOutcome::Resolved(db)) => db,
        Ok(BisectOutcome::AbortedBelow(db)) => db,
        Ok(BisectOutcome::FailedAtHigh) | Err(_) => f64::INFINITY,
    }
}

/// Threshold fitness of a relaxed candidate (expansion plus
/// [`fitness_of_mapping`]).
pub fn fitness<R: Scalar>(
    candidate: &RelaxedMapping<R>,
    ensemble: &CoupledEnsemble,
    source: &dyn CurveSource<R>,
    config: &OptimizerConfig,
) -> f64 {
    let l = ensemble.positions();
    let n_prime = ensemble.vars_per_position();
    match seeded_mapping(candidate, K, l, n_prime) {
        Ok(mapping) => fitness_of_mapping(
            &mapping,
            ensemble,
            source,
            config.fitness_bracket,
            config.fitness_tol_db,
            &config.de,
            None,
        ),
        Err(_) => f64::INFINITY,
    }
}

/// Projects a raw genotype onto the feasible set of a scheme.
///
/// Steps: mask forbidden channels, clip to `[0, 1]`, renormalize each half
/// to the simplex, force the balance-constrained rows uniform (set
/// partitioning inside a hybrid seed; everything when the vector covers the
/// whole chain), and water-fill seed entries above the family-balance cap so
/// the derived rest vector stays nonnegative.
fn project<R: Scalar>(
    genes: &[f64; GENES],
    scheme: Scheme,
    t_uni: usize,
    l: usize,
) -> Option<RelaxedMapping<R>> {
    let normalize = |v: &mut [f64; CHANNELS], mask: &[bool; CHANNELS]| {
        for (x, allowed) in v.iter_mut().zip(mask) {
            if !*allowed || !x.is_finite() || *x < 0.0 {
                *x = if *allowed { 0.0 } else { 0.0 };
            }
            *x = x.min(1.0);
        }
        let total: f64 = v.iter().sum();
        if total <= 0.0 {
            let n = mask.iter().filter(|m| **m).count() as f64;
            for (x, allowed) in v.iter_mut().zip(mask) {
                *x = if *allowed { 1.0 / n } else { 0.0 };
            }
        } else {
            for x in v.iter_mut() {
                *x /= total;
            }
        }
    };

    let mut seed: [f64; CHANNELS] = genes[..CHANNELS].try_into().unwrap();
    let mut rest: [f64; CHANNELS] = genes[CHANNELS..].try_into().unwrap();
    normalize(&mut seed, &scheme.seed_mask());
    normalize(&mut rest, &scheme.rest_mask());

    if scheme == Scheme::Hybrid {
        // The rest region carries no set-partitioning mass, so the seed's SP
        // rows must share the family total uniformly.
        let beta: f64 = seed[K..].iter().sum();
        for x in &mut seed[K..] {
            *x = beta / K as f64;
        }
    }

    let family_uniform = |v: &mut [f64; CHANNELS]| {
        for family in 0..2 {
            let rows = family * K..(family + 1) * K;
            let mass: f64 = v[rows.clone()].iter().sum();
            for x in &mut v[rows] {
                *x = mass / K as f64;
            }
        }
    };

    if t_uni == 0 {
        family_uniform(&mut rest);
        seed = rest;
    } else if t_uni == l {
        family_uniform(&mut seed);
        rest = seed;
    } else {
        // Water-fill the seed against the per-family balance caps so the
        // corrected rest vector is nonnegative.
        for family in 0..2 {
            let rows = family * K..(family + 1) * K;
            let seed_mass: f64 = seed[rows.clone()].iter().sum();
            let rest_mass: f64 = rest[rows.clone()].iter().sum();
            if seed_mass <= 0.0 {
                continue;
            }
            let cap =
                (t_uni as f64 * seed_mass + (l - t_uni) as f64 * rest_mass) / (K * t_uni) as f64;
            for _ in 0..K {
                let mut excess = 0.0;
                let mut free = 0.0;
                for x in &seed[rows.clone()] {
                    if *x > cap {
                        excess += x - cap;
                    } else if *x < cap {
                        free += cap - x;
                    }
                }
                if excess <= 1e-15 {
                    break;
                }
                let scale = if free > 0.0 { excess / free } else { 0.0 };
                for x in &mut seed[rows.clone()] {
                    if *x > cap {
                        *x = cap;
                    } else {
                        *x += (cap - *x) * scale;
                    }
                }
            }
        }
    }

    let to_vec = |v: &[f64; CHANNELS]| v.iter().map(|&x| sc::<R>(x)).collect::<Vec<R>>();
    RelaxedMapping::new(t_uni, to_vec(&seed), to_vec(&rest)).ok()
}

/// The family-uniform genotype (expands to the uniform mapping).
fn uniform_genes(scheme: Scheme) -> [f64; GENES] {
    let mut genes = [0.0; GENES];
    let fill = |slice: &mut [f64], mask: &[bool; CHANNELS]| {
        let n = mask.iter().filter(|m| **m).count() as f64;
        for (x, allowed) in slice.iter_mut().zip(mask) {
            *x = if *allowed { 1.0 / n } else { 0.0 };
        }
    };
    let seed_mask = match scheme {
        // The uniform hybrid baseline is all-Gray (no SP mass anywhere).
        Scheme::Hybrid => Scheme::Gray.seed_mask(),
        other => other.seed_mask(),
    };
    let (seed_half, rest_half) = genes.split_at_mut(CHANNELS);
    fill(seed_half, &seed_mask);
    fill(rest_half, &scheme.rest_mask());
    genes
}

struct Memo<R> {
    table: HashMap<(usize, Vec<i64>, Vec<i64>), f64>,
    _marker: std::marker::PhantomData<R>,
}

impl<R: Scalar> Memo<R> {
    fn new() -> Self {
        Self {
            table: HashMap::new(),
            _marker: std::marker::PhantomData,
        }
    }

    fn get(&self, candidate: &RelaxedMapping<R>) -> Option<f64> {
        self.table.get(&candidate.key()).copied()
    }

    fn insert(&mut self, candidate: &RelaxedMapping<R>, value: f64) {
        self.table.insert(candidate.key(), value);
    }
}

/// DE/rand/1/bin over the relaxed mapping for one (scheme, T) cell.
///
/// Deterministic for a fixed `(seed, config)`: all random draws happen
/// serially; only the (pure) fitness evaluations run in parallel.
pub fn optimize_for_t<R: Scalar>(
    ensemble: &CoupledEnsemble,
    scheme: Scheme,
    t_uni: usize,
    config: &OptimizerConfig,
    source: &dyn CurveSource<R>,
) -> Result<OptimizeOutcome<R>> {
    config.validate()?;
    let l = ensemble.positions();
    let n_prime = ensemble.vars_per_position();
    if t_uni > l {
        return Err(Error::InvalidArgument(format!(
            "T = {t_uni} exceeds L = {l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut memo = Memo::<R>::new();
    let mut evaluations = 0usize;

    let evaluate_batch =
        |jobs: Vec<(usize, RelaxedMapping<R>, Option<f64>)>,
         memo: &mut Memo<R>,
         evaluations: &mut usize|
         -> Vec<(usize, f64)> {
            // Deduplicate by quantized key so identical candidates cost one run.
            let mut fresh: Vec<(usize, RelaxedMapping<R>, Option<f64>)> = Vec::new();
            let mut results: Vec<(usize, f64)> = Vec::new();
            for (idx, cand, abort) in jobs {
                match memo.get(&cand) {
                    Some(hit) => results.push((idx, hit)),
                    None => fresh.push((idx, cand, abort)),
                }
            }
            let computed: Vec<(usize, RelaxedMapping<R>, f64)> = fresh
                .into_par_iter()
                .map(|(idx, cand, abort)| {
                    let value = match seeded_mapping(&cand, K, l, n_prime) {
                        Ok(mapping) => fitness_of_mapping(
                            &mapping,
                            ensemble,
                            source,
                            config.fitness_bracket,
                            config.fitness_tol_db,
                            &config.de,
                            abort,
                        ),
                        Err(_) => f64::INFINITY,
                    };
                    (idx, cand, value)
                })
                .collect();
            for (idx, cand, value) in computed {
                *evaluations += 1;
                // Early-aborted values are lower bounds, not final fitness;
                // only cache fully resolved evaluations.
                if value.is_infinite() || value > config.fitness_bracket.0 {
                    memo.insert(&cand, value);
                }
                results.push((idx, value));
            }
            results
        };

    // Initial population: the uniform baseline plus random feasible points.
    let mut genotypes: Vec<[f64; GENES]> = Vec::with_capacity(config.population);
    genotypes.push(uniform_genes(scheme));
    while genotypes.len() < config.population {
        let mut genes = [0.0; GENES];
        for g in &mut genes {
            *g = rng.gen::<f64>();
        }
        genotypes.push(genes);
    }
    let mut population: Vec<RelaxedMapping<R>> = genotypes
        .iter()
        .map(|g| {
            project(g, scheme, t_uni, l)
                .ok_or_else(|| Error::InfeasibleMapping("projection failed".into()))
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs = population
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.clone(), None))
        .collect();
    let mut fitness_values = vec![f64::INFINITY; config.population];
    for (idx, value) in evaluate_batch(jobs, &mut memo, &mut evaluations) {
        fitness_values[idx] = value;
    }

    for _generation in 0..config.generations {
        // Serial mutation and crossover keeps the run deterministic.
        let mut trials: Vec<(usize, [f64; GENES])> = Vec::with_capacity(config.population);
        for i in 0..config.population {
            let pick = |rng: &mut ChaCha8Rng, exclude: &[usize]| loop {
                let j = (rng.gen::<u64>() % config.population as u64) as usize;
                if !exclude.contains(&j) {
                    return j;
                }
            };
            let a = pick(&mut rng, &[i]);
            let b = pick(&mut rng, &[i, a]);
            let c = pick(&mut rng, &[i, a, b]);
            let mut trial = genotypes[i];
            let forced = (rng.gen::<u64>() % GENES as u64) as usize;
            for gene in 0..GENES {
                if gene == forced || rng.gen::<f64>() < config.crossover_rate {
                    trial[gene] = genotypes[a][gene]
                        + config.differential_weight * (genotypes[b][gene] - genotypes[c][gene]);
                }
            }
            trials.push((i, trial));
        }
        let jobs: Vec<(usize, RelaxedMapping<R>, Option<f64>)> = trials
            .iter()
            .filter_map(|(i, genes)| {
                project::<R>(genes, scheme, t_uni, l).map(|c| (*i, c, Some(fitness_values[*i])))
            })
            .collect();
        let results = evaluate_batch(jobs, &mut memo, &mut evaluations);
        let trial_genes: HashMap<usize, [f64; GENES]> = trials.into_iter().collect();
        for (idx, value) in results {
            if value <= fitness_values[idx] {
                fitness_values[idx] = value;
                genotypes[idx] = trial_genes[&idx];
                population[idx] = project(&genotypes[idx], scheme, t_uni, l)
                    .expect("projection already succeeded for this genotype");
            }
        }
    }

    let best_idx = fitness_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let best = population[best_idx].clone();

    // Final refinement of the winner at the tight tolerance.
    let mapping = seeded_mapping(&best, K, l, n_prime)
        .map_err(|e| Error::InfeasibleMapping(format!("winner failed to expand: {e}")))?;
    let threshold = fitness_of_mapping(
        &mapping,
        ensemble,
        source,
        config.fitness_bracket,
        config.refine_tol_db,
        &config.de,
        None,
    );
    evaluations += 1;
    Ok(OptimizeOutcome {
        best,
        threshold_es_db: threshold,
        evaluations,
    })
}

/// Runs [`optimize_for_t`] across a T grid for several schemes.
pub fn sweep_t<R: Scalar>(
    ensemble: &CoupledEnsemble,
    schemes: &[Scheme],
    t_values: &[usize],
    config: &OptimizerConfig,
    source: &dyn CurveSource<R>,
) -> Result<SweepResult<R>> {
    let mut entries = Vec::new();
    for &scheme in schemes {
        for &t_uni in t_values {
            let outcome = optimize_for_t(ensemble, scheme, t_uni, config, source)?;
            entries.push(SweepEntry {
                scheme,
                t_uni,
                threshold_es_db: outcome.threshold_es_db,
                best: outcome.best,
                evaluations: outcome.evaluations,
            });
        }
    }
    Ok(SweepResult { entries })
}

/// Complexity proxy of a mapping: how much of the chain needs the iterative
/// demapper, and how many decoding iterations a margin of 0.1 dB above the
/// threshold costs.
#[derive(Debug, Clone, Copy)]
pub struct CostSummary {
    pub iterative_blocks: usize,
    pub total_blocks: usize,
    pub iterative_fraction: f64,
    pub iterations_at_margin: usize,
}

pub fn demapping_cost<R: Scalar>(
    ensemble: &CoupledEnsemble,
    mapping: &MappingMatrix<R>,
    source: &dyn CurveSource<R>,
    threshold_es_db: f64,
    de: &DeOptions,
) -> Result<CostSummary> {
    let summary = mapping.hybrid_summary();
    let total = mapping.sub_blocks();
    let curves = source.dual_at(threshold_es_db + 0.1)?;
    let result = run_de(ensemble, mapping, &curves, de)?;
    Ok(CostSummary {
        iterative_blocks: summary.iterative_blocks(),
        total_blocks: total,
        iterative_fraction: summary.iterative_blocks() as f64 / total as f64,
        iterations_at_margin: result.iterations_used,
    })
}

/// Uniform single-labeling baseline threshold for comparison plots.
pub fn uniform_threshold<R: Scalar>(
    ensemble: &CoupledEnsemble,
    labeling: crate::demapper::Labeling,
    source: &dyn CurveSource<R>,
    config: &OptimizerConfig,
) -> f64 {
    let mapping = uniform_mapping::<R>(
        K,
        ensemble.positions(),
        ensemble.vars_per_position(),
        labeling,
    );
    fitness_of_mapping(
        &mapping,
        ensemble,
        source,
        config.fitness_bracket,
        config.refine_tol_db,
        &config.de,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demapper::{DemapperCurveSet, DualCurves, FnCurveSource, Labeling};
    use crate::protograph::{build_coupled, standard_code};

    /// Synthetic curve source: per-bit curves rise with SNR; the last SP bit
    /// is much steeper in the a-priori input, so concentrating mass on it
    /// and triggering feedback pays off.
    fn synthetic_source() -> impl CurveSource<f64> {
        FnCurveSource(move |snr: f64| {
            let base = (snr / 12.0).clamp(0.0, 0.85);
            let grid = vec![0.0, 1.0];
            let mk = |labeling, offsets: [f64; 4], slopes: [f64; 4]| {
                let per_bit = (0..4)
                    .map(|b| {
                        vec![
                            (base + offsets[b]).clamp(0.0, 1.0),
                            (base + offsets[b] + slopes[b]).clamp(0.0, 1.0),
                        ]
                    })
                    .collect();
                DemapperCurveSet::from_measured(labeling, snr, grid.clone(), per_bit, 0.0).unwrap()
            };
            Ok(DualCurves::new(
                mk(Labeling::Gray, [0.02, -0.02, 0.02, -0.02], [0.01; 4]),
                mk(Labeling::Sp, [-0.15, -0.1, 0.0, 0.1], [0.05, 0.1, 0.2, 0.4]),
            ))
        })
    }

    fn small_ensemble() -> CoupledEnsemble {
        let spec = standard_code("C1").unwrap().spec.with_replication(10).unwrap();
        build_coupled(&spec).unwrap()
    }

    fn quick_config() -> OptimizerConfig {
        OptimizerConfig {
            population: 8,
            generations: 4,
            seed: 11,
            fitness_tol_db: 0.1,
            refine_tol_db: 0.05,
            fitness_bracket: (1.0, 11.9),
            de: DeOptions {
                max_iter: 4000,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn infeasible_mapping_scores_infinity() {
        let ensemble = small_ensemble();
        let source = synthetic_source();
        let mut cols =
            uniform_mapping::<f64>(K, 10, 2, Labeling::Gray).columns().to_vec();
        cols[0][0] += 0.2; // break the column-sum constraint
        let broken = MappingMatrix::from_columns(K, 10, 2, cols).unwrap();
        let f = fitness_of_mapping(
            &broken,
            &ensemble,
            &source,
            (1.0, 11.9),
            0.1,
            &DeOptions::default(),
            None,
        );
        assert!(f.is_infinite());
    }

    #[test]
    fn projection_yields_feasible_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scheme in Scheme::ALL {
            for t in [0usize, 1, 3, 10] {
                for _ in 0..50 {
                    let mut genes = [0.0; GENES];
                    for g in &mut genes {
                        *g = rng.gen::<f64>() * 2.0 - 0.5;
                    }
                    let c = project::<f64>(&genes, scheme, t, 10).expect("projection");
                    let m = seeded_mapping(&c, K, 10, 2).expect("expansion");
                    assert!(m.validate().pass(), "{scheme} T={t}");
                    if scheme == Scheme::Hybrid && t > 0 && t < 10 {
                        // No SP mass outside the seeded blocks.
                        for col in &m.columns()[t * 2..] {
                            assert!(col[K..].iter().all(|&v| v == 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn optimizer_is_deterministic_and_beats_uniform_baseline() {
        let ensemble = small_ensemble();
        let source = synthetic_source();
        let config = quick_config();
        let a = optimize_for_t(&ensemble, Scheme::Sp, 3, &config, &source).unwrap();
        let b = optimize_for_t(&ensemble, Scheme::Sp, 3, &config, &source).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.threshold_es_db, b.threshold_es_db);
        assert!(a.evaluations > 0);
        let uniform = uniform_threshold(&ensemble, Labeling::Sp, &source, &config);
        assert!(
            a.threshold_es_db <= uniform + 1e-9,
            "optimized {} vs uniform {}",
            a.threshold_es_db,
            uniform
        );
    }

    #[test]
    fn t_zero_reduces_to_the_uniform_mapping() {
        let ensemble = small_ensemble();
        let source = synthetic_source();
        let config = quick_config();
        let outcome = optimize_for_t(&ensemble, Scheme::Sp, 0, &config, &source).unwrap();
        let uniform = uniform_threshold(&ensemble, Labeling::Sp, &source, &config);
        assert!((outcome.threshold_es_db - uniform).abs() <= config.refine_tol_db + 1e-9);
    }

    #[test]
    fn config_validation() {
        let ensemble = small_ensemble();
        let source = synthetic_source();
        let mut config = quick_config();
        config.population = 4;
        assert!(optimize_for_t(&ensemble, Scheme::Gray, 2, &config, &source).is_err());
        let mut config = quick_config();
        config.differential_weight = 2.5;
        assert!(optimize_for_t(&ensemble, Scheme::Gray, 2, &config, &source).is_err());
    }

    #[test]
    fn cost_summary_reports_iterative_blocks() {
        let ensemble = small_ensemble();
        let source = synthetic_source();
        let relaxed = RelaxedMapping::<f64>::new(
            3,
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
            vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let mapping = seeded_mapping(&relaxed, K, 10, 2).unwrap();
        let cost = demapping_cost(
            &ensemble,
            &mapping,
            &source,
            8.0,
            &DeOptions {
                max_iter: 2000,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cost.iterative_blocks, 3);
        assert_eq!(cost.total_blocks, 10);
        assert!((cost.iterative_fraction - 0.3).abs() < 1e-12);
    }
}
