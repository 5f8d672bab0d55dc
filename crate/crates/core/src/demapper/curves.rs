//! Bitwise extrinsic-information transfer curves of the APP demapper.
//!
//! For a grid of a-priori information values `I_A`, the simulator transmits
//! random symbols over complex AWGN, feeds consistent-Gaussian a-priori LLRs
//! to an exact a-posteriori-probability demapper, and measures the extrinsic
//! mutual information of every bit channel as the time average of
//! `1 - log2(1 + exp(-L * x))` with `x` the bipolar true bit. Raw curves are
//! regularized with pool-adjacent-violators smoothing so downstream
//! fixed-point searches see monotone transfer functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::constellation::{LabeledConstellation, Labeling, BITS_PER_SYMBOL, POINTS};
use crate::error::{Error, Result};
use crate::ga_de::j_inv;
use crate::scalar::{sc, Scalar};

/// Tabulated per-bit demapper transfer curves at one channel quality.
#[derive(Debug, Clone, PartialEq)]
pub struct DemapperCurveSet<R> {
    labeling: Labeling,
    /// Channel quality as Es/N0 in dB.
    snr_db: f64,
    grid: Vec<R>,
    per_bit: Vec<Vec<R>>,
    average: Vec<R>,
    /// Largest per-point standard error of the raw measurement; zero for
    /// synthetic or reloaded sets.
    max_standard_error: f64,
}

impl<R: Scalar> DemapperCurveSet<R> {
    /// Assembles a curve set from already-measured per-bit curves.
    ///
    /// Curves are regularized (monotone, clamped to `[0, 1]`) and the average
    /// curve is recomputed from the stored per-bit curves.
    pub fn from_measured(
        labeling: Labeling,
        snr_db: f64,
        grid: Vec<R>,
        per_bit: Vec<Vec<R>>,
        max_standard_error: f64,
    ) -> Result<Self> {
        if per_bit.len() != BITS_PER_SYMBOL {
            return Err(Error::DimensionMismatch(format!(
                "expected {BITS_PER_SYMBOL} bit curves, got {}",
                per_bit.len()
            )));
        }
        validate_grid(&grid)?;
        if per_bit.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::DimensionMismatch(
                "curve length differs from grid length".into(),
            ));
        }
        let per_bit: Vec<Vec<R>> = per_bit
            .into_iter()
            .map(|c| {
                let mut c = isotonic(&c);
                for v in &mut c {
                    *v = v.max(R::zero()).min(R::one());
                }
                c
            })
            .collect();
        let average = (0..grid.len())
            .map(|i| {
                per_bit.iter().map(|c| c[i]).sum::<R>() / sc(BITS_PER_SYMBOL as f64)
            })
            .collect();
        Ok(Self {
            labeling,
            snr_db,
            grid,
            per_bit,
            average,
            max_standard_error,
        })
    }

    /// A synthetic set where every bit curve is the constant `value`;
    /// handy for tests and closed-form cross-checks.
    pub fn constant(labeling: Labeling, snr_db: f64, value: R) -> Self {
        let grid = uniform_grid(2);
        Self {
            labeling,
            snr_db,
            per_bit: vec![vec![value; 2]; BITS_PER_SYMBOL],
            average: vec![value; 2],
            grid,
            max_standard_error: 0.0,
        }
    }

    pub fn labeling(&self) -> Labeling {
        self.labeling
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn grid(&self) -> &[R] {
        &self.grid
    }

    pub fn per_bit(&self) -> &[Vec<R>] {
        &self.per_bit
    }

    pub fn average_curve(&self) -> &[R] {
        &self.average
    }

    pub fn max_standard_error(&self) -> f64 {
        self.max_standard_error
    }

    /// Piecewise-linear evaluation of one bit curve; `i_a` is clamped to the
    /// grid range.
    #[inline]
    pub fn value(&self, bit: usize, i_a: R) -> R {
        interp(&self.grid, &self.per_bit[bit], i_a)
    }

    /// Piecewise-linear evaluation of the average curve.
    #[inline]
    pub fn average(&self, i_a: R) -> R {
        interp(&self.grid, &self.average, i_a)
    }
}

/// Uniform `I_A` grid over `[0, 1]` with `n` points.
pub fn uniform_grid<R: Scalar>(n: usize) -> Vec<R> {
    assert!(n >= 2);
    (0..n)
        .map(|i| sc(i as f64 / (n - 1) as f64))
        .collect()
}

fn validate_grid<R: Scalar>(grid: &[R]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    if grid[0] < R::zero() || *grid.last().unwrap() > R::one() {
        return Err(Error::InvalidArgument("grid must lie in [0, 1]".into()));
    }
    Ok(())
}

#[inline]
fn interp<R: Scalar>(grid: &[R], curve: &[R], x: R) -> R {
    if x <= grid[0] {
        return curve[0];
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return curve[last];
    }
    // Grids are short (tens of points); a linear scan beats binary search.
    let mut hi = 1;
    while grid[hi] < x {
        hi += 1;
    }
    let lo = hi - 1;
    let t = (x - grid[lo]) / (grid[hi] - grid[lo]);
    curve[lo] + t * (curve[hi] - curve[lo])
}

/// Spec-level lookup with argument checking: exact at grid points,
/// piecewise-linear in between, error outside `[0, 1]`.
pub fn curve_lookup<R: Scalar>(set: &DemapperCurveSet<R>, bit_channel: usize, i_a: R) -> Result<R> {
    if bit_channel >= BITS_PER_SYMBOL {
        return Err(Error::InvalidArgument(format!(
            "bit channel {bit_channel} out of range (K = {BITS_PER_SYMBOL})"
        )));
    }
    if i_a < R::zero() || i_a > R::one() {
        return Err(Error::InvalidArgument(format!("i_a = {i_a} outside [0, 1]")));
    }
    Ok(set.value(bit_channel, i_a))
}

/// Pool-adjacent-violators isotonic regression (nondecreasing, equal weights).
fn isotonic<R: Scalar>(values: &[R]) -> Vec<R> {
    let mut level: Vec<R> = Vec::with_capacity(values.len());
    let mut weight: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        level.push(v);
        weight.push(1);
        while level.len() > 1 && level[level.len() - 2] > level[level.len() - 1] {
            let (l1, w1) = (level.pop().unwrap(), weight.pop().unwrap());
            let (l0, w0) = (level.pop().unwrap(), weight.pop().unwrap());
            let w = w0 + w1;
            level.push((l0 * sc(w0 as f64) + l1 * sc(w1 as f64)) / sc(w as f64));
            weight.push(w);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (l, w) in level.into_iter().zip(weight) {
        for _ in 0..w {
            out.push(l);
        }
    }
    out
}

/// Measures the per-bit demapper transfer curves by Monte Carlo simulation.
///
/// `snr_db` is Es/N0 in dB over the unit-energy constellation; the complex
/// noise has per-component variance `N0/2`. A-priori LLRs are drawn from the
/// consistent Gaussian model with mean `J^{-1}(I_A)` and variance twice the
/// mean. Identical seeds give bit-identical curves.
pub fn simulate_demapper_curves<R: Scalar>(
    constellation: &LabeledConstellation<R>,
    snr_db: f64,
    grid: &[R],
    n_symbols: usize,
    seed: u64,
) -> Result<DemapperCurveSet<R>> {
    validate_grid(grid)?;
    if n_symbols < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "n_symbols = {n_symbols} too small for a stable estimate (min 10000)"
        )));
    }
    let points: Vec<(f64, f64)> = constellation
        .points()
        .iter()
        .map(|p| (p.re.as_f64(), p.im.as_f64()))
        .collect();
    // Bipolar bit values per label: +1 for bit 0, -1 for bit 1.
    let mut bipolar = [[0.0f64; BITS_PER_SYMBOL]; POINTS];
    for (label, row) in bipolar.iter_mut().enumerate() {
        for (bit, v) in row.iter_mut().enumerate() {
            *v = if (label >> bit) & 1 == 0 { 1.0 } else { -1.0 };
        }
    }
    let n0 = 10f64.powf(-snr_db / 10.0);
    let labeling = constellation.labeling();

    let measured: Vec<([f64; BITS_PER_SYMBOL], f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &i_a)| {
            let sub_seed = derive_seed(seed, &[labeling as u64, snr_key(snr_db) as u64, gi as u64]);
            measure_point(&points, &bipolar, n0, i_a.as_f64(), n_symbols, sub_seed)
        })
        .collect();

    let per_bit: Vec<Vec<R>> = (0..BITS_PER_SYMBOL)
        .map(|bit| measured.iter().map(|(mi, _)| sc(mi[bit])).collect())
        .collect();
    let max_se = measured.iter().map(|(_, se)| *se).fold(0.0, f64::max);
    DemapperCurveSet::from_measured(labeling, snr_db, grid.to_vec(), per_bit, max_se)
}

/// One (I_A, SNR) measurement point: per-bit extrinsic MI plus the largest
/// standard error across bits.
fn measure_point(
    points: &[(f64, f64)],
    bipolar: &[[f64; BITS_PER_SYMBOL]; POINTS],
    n0: f64,
    i_a: f64,
    n_symbols: usize,
    seed: u64,
) -> ([f64; BITS_PER_SYMBOL], f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu_a = j_inv(i_a);
    let sd_a = (2.0 * mu_a).sqrt();
    let noise_sd = (n0 / 2.0).sqrt();
    let inv_n0 = 1.0 / n0;

    let mut sum = [0.0f64; BITS_PER_SYMBOL];
    let mut sum_sq = [0.0f64; BITS_PER_SYMBOL];
    let mut metric = [0.0f64; POINTS];

    for _ in 0..n_symbols {
        let label = (rng.gen::<u32>() & 15) as usize;
        let (px, py) = points[label];
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let (yx, yy) = (px + noise_sd * g1, py + noise_sd * g2);

        let mut l_a = [0.0f64; BITS_PER_SYMBOL];
        for (bit, l) in l_a.iter_mut().enumerate() {
            let g: f64 = rng.sample(StandardNormal);
            *l = bipolar[label][bit] * mu_a + sd_a * g;
        }

        let mut m_max = f64::NEG_INFINITY;
        for (s, m) in metric.iter_mut().enumerate() {
            let dx = yx - points[s].0;
            let dy = yy - points[s].1;
            let mut acc = -(dx * dx + dy * dy) * inv_n0;
            for bit in 0..BITS_PER_SYMBOL {
                acc += 0.5 * bipolar[s][bit] * l_a[bit];
            }
            *m = acc;
            if acc > m_max {
                m_max = acc;
            }
        }
        let mut ex = [0.0f64; POINTS];
        for s in 0..POINTS {
            ex[s] = (metric[s] - m_max).exp();
        }
        for bit in 0..BITS_PER_SYMBOL {
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            for s in 0..POINTS {
                if (s >> bit) & 1 == 0 {
                    s0 += ex[s];
                } else {
                    s1 += ex[s];
                }
            }
            let l_ext = (s0 / s1).ln() - l_a[bit];
            let t = bipolar[label][bit] * l_ext;
            // 1 - log2(1 + e^{-t}), with a stable softplus.
            let softplus = if t < -35.0 {
                -t
            } else if t > 35.0 {
                (-t).exp()
            } else {
                (-t).exp().ln_1p()
            };
            let mi = 1.0 - softplus / std::f64::consts::LN_2;
            sum[bit] += mi;
            sum_sq[bit] += mi * mi;
        }
    }

    let n = n_symbols as f64;
    let mut mi = [0.0f64; BITS_PER_SYMBOL];
    let mut worst_se = 0.0f64;
    for bit in 0..BITS_PER_SYMBOL {
        let mean = sum[bit] / n;
        let var = (sum_sq[bit] / n - mean * mean).max(0.0);
        mi[bit] = mean;
        worst_se = worst_se.max((var / n).sqrt());
    }
    (mi, worst_se)
}

/// Millidecibel key used for seeding and cache file names.
pub(crate) fn snr_key(snr_db: f64) -> i64 {
    (snr_db * 1000.0).round() as i64
}

/// Deterministic seed derivation (splitmix64 chain).
pub(crate) fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    let mut mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    state = mix(state);
    for &p in parts {
        state = mix(state ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    state
}

/// Linear interpolation between cached curve sets in SNR.
///
/// The sets must share labeling and grid and be spaced at most 0.25 dB apart
/// around the requested point.
pub fn snr_interpolated_curves<R: Scalar>(
    cache: &[DemapperCurveSet<R>],
    snr_db: f64,
) -> Result<DemapperCurveSet<R>> {
    if cache.is_empty() {
        return Err(Error::InvalidArgument("empty curve cache".into()));
    }
    let mut sets: Vec<&DemapperCurveSet<R>> = cache.iter().collect();
    sets.sort_by(|a, b| a.snr_db.partial_cmp(&b.snr_db).unwrap());
    let lo = sets[0].snr_db;
    let hi = sets[sets.len() - 1].snr_db;
    if snr_db < lo - 1e-9 || snr_db > hi + 1e-9 {
        return Err(Error::SnrOutOfRange { snr_db, lo, hi });
    }
    if let Some(exact) = sets.iter().find(|s| (s.snr_db - snr_db).abs() < 1e-9) {
        return Ok((*exact).clone());
    }
    let hi_idx = sets.iter().position(|s| s.snr_db > snr_db).unwrap();
    let (a, b) = (sets[hi_idx - 1], sets[hi_idx]);
    let spacing = b.snr_db - a.snr_db;
    if spacing > 0.25 + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "cache spacing {spacing:.3} dB around {snr_db:.3} dB exceeds 0.25 dB"
        )));
    }
    if a.labeling != b.labeling || a.grid != b.grid {
        return Err(Error::InvalidArgument(
            "curve sets differ in labeling or grid".into(),
        ));
    }
    let t = sc::<R>((snr_db - a.snr_db) / spacing);
    let per_bit = (0..BITS_PER_SYMBOL)
        .map(|bit| {
            a.per_bit[bit]
                .iter()
                .zip(&b.per_bit[bit])
                .map(|(&x, &y)| x + t * (y - x))
                .collect()
        })
        .collect();
    let se = a.max_standard_error.max(b.max_standard_error);
    DemapperCurveSet::from_measured(a.labeling, snr_db, a.grid.clone(), per_bit, se)
}

/// Curves of both labeling families at one channel quality, indexed by the
/// combined bit-channel number (0..K Gray, K..2K set partitioning).
#[derive(Debug, Clone)]
pub struct DualCurves<R> {
    pub gray: DemapperCurveSet<R>,
    pub sp: DemapperCurveSet<R>,
}

impl<R: Scalar> DualCurves<R> {
    pub fn new(gray: DemapperCurveSet<R>, sp: DemapperCurveSet<R>) -> Self {
        Self { gray, sp }
    }

    /// Same constant curve on all 2K channels.
    pub fn constant(snr_db: f64, value: R) -> Self {
        Self {
            gray: DemapperCurveSet::constant(Labeling::Gray, snr_db, value),
            sp: DemapperCurveSet::constant(Labeling::Sp, snr_db, value),
        }
    }

    pub fn set(&self, labeling: Labeling) -> &DemapperCurveSet<R> {
        match labeling {
            Labeling::Gray => &self.gray,
            Labeling::Sp => &self.sp,
        }
    }

    /// Extrinsic MI of combined channel `l` (0-based across both families).
    #[inline]
    pub fn mi(&self, channel: usize, i_a: R) -> R {
        if channel < BITS_PER_SYMBOL {
            self.gray.value(channel, i_a)
        } else {
            self.sp.value(channel - BITS_PER_SYMBOL, i_a)
        }
    }
}

/// Source of demapper curves at arbitrary channel quality, e.g. a disk cache
/// with SNR interpolation or a synthetic model in tests.
pub trait CurveSource<R: Scalar>: Sync {
    fn dual_at(&self, es_n0_db: f64) -> Result<DualCurves<R>>;

    fn single_at(&self, labeling: Labeling, es_n0_db: f64) -> Result<DemapperCurveSet<R>> {
        let dual = self.dual_at(es_n0_db)?;
        Ok(match labeling {
            Labeling::Gray => dual.gray,
            Labeling::Sp => dual.sp,
        })
    }
}

/// Wraps a closure as a [`CurveSource`]; mainly for tests.
pub struct FnCurveSource<F>(pub F);

impl<R: Scalar, F> CurveSource<R> for FnCurveSource<F>
where
    F: Fn(f64) -> Result<DualCurves<R>> + Sync,
{
    fn dual_at(&self, es_n0_db: f64) -> Result<DualCurves<R>> {
        (self.0)(es_n0_db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demapper::constellation::make_constellation;

    fn quick_curves(labeling: Labeling, snr_db: f64, seed: u64) -> DemapperCurveSet<f64> {
        let c = make_constellation::<f64>(labeling);
        let grid = uniform_grid::<f64>(11);
        simulate_demapper_curves(&c, snr_db, &grid, 20_000, seed).unwrap()
    }

    #[test]
    fn isotonic_regression_pools_violators() {
        let out = isotonic(&[1.0f64, 2.0, 1.0, 3.0]);
        assert_eq!(out, vec![1.0, 1.5, 1.5, 3.0]);
        let sorted = isotonic(&[0.0f64, 0.1, 0.2]);
        assert_eq!(sorted, vec![0.0, 0.1, 0.2]);
    }

    #[test]
    fn curves_are_monotone_and_bounded() {
        for labeling in Labeling::ALL {
            let set = quick_curves(labeling, 6.0, 7);
            for bit in 0..BITS_PER_SYMBOL {
                let c = &set.per_bit()[bit];
                assert!(c.windows(2).all(|w| w[1] >= w[0]), "{labeling} bit {bit}");
                assert!(c.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
            // More a-priori information cannot reduce the extrinsic MI.
            assert!(set.value(0, 1.0) >= set.value(0, 0.0));
        }
    }

    #[test]
    fn average_is_mean_of_bit_curves() {
        let set = quick_curves(Labeling::Sp, 6.0, 3);
        for (i, &avg) in set.average_curve().iter().enumerate() {
            let mean: f64 = (0..BITS_PER_SYMBOL).map(|b| set.per_bit()[b][i]).sum::<f64>() / 4.0;
            assert!((avg - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = quick_curves(Labeling::Gray, 5.0, 42);
        let b = quick_curves(Labeling::Gray, 5.0, 42);
        assert_eq!(a, b);
        let c = quick_curves(Labeling::Gray, 5.0, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn lookup_identities() {
        let set = quick_curves(Labeling::Gray, 6.0, 1);
        let grid = set.grid().to_vec();
        for (i, &g) in grid.iter().enumerate() {
            assert_eq!(curve_lookup(&set, 2, g).unwrap(), set.per_bit()[2][i]);
        }
        let mid = 0.5 * (grid[3] + grid[4]);
        let want = 0.5 * (set.per_bit()[1][3] + set.per_bit()[1][4]);
        assert!((curve_lookup(&set, 1, mid).unwrap() - want).abs() < 1e-12);
        // Monotone in i_a.
        let mut last = -1.0;
        for k in 0..=100 {
            let v = curve_lookup(&set, 0, k as f64 / 100.0).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!(curve_lookup(&set, 0, 1.5).is_err());
        assert!(curve_lookup(&set, 9, 0.5).is_err());
    }

    #[test]
    fn iq_symmetry_within_monte_carlo_error() {
        // Gray bits 0/2 share the sign role, bits 1/3 the inner/outer role.
        let set = quick_curves(Labeling::Gray, 6.0, 11);
        let tol = 3.0 * set.max_standard_error().max(1e-3) * 3.0;
        for i in 0..set.grid().len() {
            assert!((set.per_bit()[0][i] - set.per_bit()[2][i]).abs() < tol);
            assert!((set.per_bit()[1][i] - set.per_bit()[3][i]).abs() < tol);
        }
    }

    #[test]
    fn gray_mi_increases_with_snr() {
        let mut last = -1.0;
        for snr in [0.0, 2.5, 5.0, 7.5, 10.0] {
            let set = quick_curves(Labeling::Gray, snr, 5);
            let v = set.average(0.0);
            assert!(v > last, "snr {snr}");
            last = v;
        }
    }

    #[test]
    fn sp_has_larger_slope_than_gray() {
        let gray = quick_curves(Labeling::Gray, 6.0, 9);
        let sp = quick_curves(Labeling::Sp, 6.0, 9);
        let slope = |s: &DemapperCurveSet<f64>| s.average(1.0) - s.average(0.0);
        assert!(slope(&sp) > slope(&gray));
    }

    #[test]
    fn snr_interpolation_is_linear() {
        let a = quick_curves(Labeling::Gray, 5.0, 2);
        let b = quick_curves(Labeling::Gray, 5.2, 2);
        let cache = vec![a.clone(), b.clone()];
        let mid = snr_interpolated_curves(&cache, 5.1).unwrap();
        for i in 0..a.grid().len() {
            let want = 0.5 * (a.per_bit()[0][i] + b.per_bit()[0][i]);
            assert!((mid.per_bit()[0][i] - want).abs() < 1e-12);
        }
        let exact = snr_interpolated_curves(&cache, 5.2).unwrap();
        assert_eq!(exact, b);
        assert!(matches!(
            snr_interpolated_curves(&cache, 6.0),
            Err(Error::SnrOutOfRange { .. })
        ));
    }

    #[test]
    fn n_symbols_floor_is_enforced() {
        let c = make_constellation::<f64>(Labeling::Gray);
        let grid = uniform_grid::<f64>(5);
        assert!(simulate_demapper_curves(&c, 6.0, &grid, 5_000, 1).is_err());
    }
}
