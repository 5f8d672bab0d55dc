//! Bit-mapping matrices: which fraction of each spatial position's code bits
//! rides on which demapper bit channel.
//!
//! The matrix `D` has `2K` rows (channels `1..K` Gray, `K+1..2K` set
//! partitioning) and one column per variable position. Two constraints make
//! a mapping realizable by an interleaver:
//!
//! 1. every column sums to one (each code bit goes somewhere), and
//! 2. within each labeling family all row sums are equal (every symbol of a
//!    family carries exactly one bit per bit channel).
//!
//! The optimizer works on the relaxed two-vector form: one column vector for
//! the `T_uni` seeded sub-blocks and one for the remaining `L - T_uni`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demapper::{Labeling, BITS_PER_SYMBOL};
use crate::error::{Error, Result};
use crate::scalar::{sc, Scalar};

/// Quantization step for stored mapping fractions.
pub const FRACTION_STEP: f64 = 1e-6;
const FRACTION_UNITS: i64 = 1_000_000;

/// Labeling family composition of one sub-block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockLabeling {
    Gray,
    Sp,
    Mixed,
}

/// Dense mapping matrix with per-sub-block labeling classification.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingMatrix<R> {
    k: usize,
    l: usize,
    n_prime: usize,
    /// One column per variable position (`l * n_prime`), each of length `2k`.
    cols: Vec<Vec<R>>,
    assignment: Vec<BlockLabeling>,
}

impl<R: Scalar> MappingMatrix<R> {
    /// Builds a matrix from explicit columns (allows per-type variation
    /// inside a sub-block). Shape is checked here; the constraint report
    /// comes from [`MappingMatrix::validate`].
    pub fn from_columns(k: usize, l: usize, n_prime: usize, cols: Vec<Vec<R>>) -> Result<Self> {
        if k == 0 || l == 0 || n_prime == 0 {
            return Err(Error::InvalidArgument("k, l, n_prime must be positive".into()));
        }
        if cols.len() != l * n_prime {
            return Err(Error::DimensionMismatch(format!(
                "expected {} columns, got {}",
                l * n_prime,
                cols.len()
            )));
        }
        if cols.iter().any(|c| c.len() != 2 * k) {
            return Err(Error::DimensionMismatch(format!(
                "every column must have {} entries",
                2 * k
            )));
        }
        let assignment = classify_blocks(k, l, n_prime, &cols);
        Ok(Self {
            k,
            l,
            n_prime,
            cols,
            assignment,
        })
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.k
    }

    pub fn sub_blocks(&self) -> usize {
        self.l
    }

    pub fn vars_per_block(&self) -> usize {
        self.n_prime
    }

    pub fn columns(&self) -> &[Vec<R>] {
        &self.cols
    }

    #[inline]
    pub fn column(&self, var: usize) -> &[R] {
        &self.cols[var]
    }

    /// Per-sub-block labeling classification.
    pub fn hybrid_assignment(&self) -> &[BlockLabeling] {
        &self.assignment
    }

    /// Counts of sub-blocks per labeling class.
    pub fn hybrid_summary(&self) -> HybridSummary {
        let mut s = HybridSummary::default();
        for a in &self.assignment {
            match a {
                BlockLabeling::Gray => s.gray += 1,
                BlockLabeling::Sp => s.sp += 1,
                BlockLabeling::Mixed => s.mixed += 1,
            }
        }
        s
    }

    /// Constraint report: maximum violations of the column-sum, family
    /// row-balance, and `[0, 1]` range constraints.
    pub fn validate(&self) -> ValidationReport {
        let k = self.k;
        let mut max_col = 0.0f64;
        let mut max_range = 0.0f64;
        for col in &self.cols {
            let sum: f64 = col.iter().map(|v| v.as_f64()).sum();
            max_col = max_col.max((sum - 1.0).abs());
            for v in col {
                let v = v.as_f64();
                max_range = max_range.max((-v).max(v - 1.0).max(0.0));
            }
        }
        let mut max_balance = 0.0f64;
        for family in 0..2 {
            let rows = family * k..(family + 1) * k;
            let sums: Vec<f64> = rows
                .map(|r| self.cols.iter().map(|c| c[r].as_f64()).sum())
                .collect();
            let hi = sums.iter().cloned().fold(f64::MIN, f64::max);
            let lo = sums.iter().cloned().fold(f64::MAX, f64::min);
            max_balance = max_balance.max(hi - lo);
        }
        ValidationReport {
            max_column_violation: max_col,
            max_balance_violation: max_balance,
            max_range_violation: max_range,
        }
    }
}

/// Counts of sub-blocks per labeling family.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct HybridSummary {
    pub gray: usize,
    pub sp: usize,
    pub mixed: usize,
}

impl HybridSummary {
    /// Sub-blocks that need the iterative (set-partitioning) demapper.
    pub fn iterative_blocks(&self) -> usize {
        self.sp + self.mixed
    }
}

fn classify_blocks<R: Scalar>(
    k: usize,
    l: usize,
    n_prime: usize,
    cols: &[Vec<R>],
) -> Vec<BlockLabeling> {
    (0..l)
        .map(|b| {
            let mut gray = 0.0;
            let mut sp = 0.0;
            for col in &cols[b * n_prime..(b + 1) * n_prime] {
                for (i, v) in col.iter().enumerate() {
                    if i < k {
                        gray += v.as_f64();
                    } else {
                        sp += v.as_f64();
                    }
                }
            }
            const TOL: f64 = 1e-9;
            match (gray > TOL, sp > TOL) {
                (true, false) => BlockLabeling::Gray,
                (false, true) => BlockLabeling::Sp,
                _ => BlockLabeling::Mixed,
            }
        })
        .collect()
}

/// Result of [`MappingMatrix::validate`]; passes when every violation is
/// below `1e-9`.
#[derive(Debug, Clone, Copy)]
pub struct ValidationReport {
    pub max_column_violation: f64,
    pub max_balance_violation: f64,
    pub max_range_violation: f64,
}

impl ValidationReport {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn pass(&self) -> bool {
        self.max_column_violation < Self::TOLERANCE
            && self.max_balance_violation < Self::TOLERANCE
            && self.max_range_violation < Self::TOLERANCE
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "column sum violation {:.3e}, family balance violation {:.3e}, range violation {:.3e} => {}",
            self.max_column_violation,
            self.max_balance_violation,
            self.max_range_violation,
            if self.pass() { "pass" } else { "FAIL" }
        )
    }
}

/// Uniform single-labeling mapping: every column spreads `1/K` over the `K`
/// bit channels of the chosen family.
pub fn uniform_mapping<R: Scalar>(
    k: usize,
    l: usize,
    n_prime: usize,
    labeling: Labeling,
) -> MappingMatrix<R> {
    let mut col = vec![R::zero(); 2 * k];
    let share = R::one() / sc(k as f64);
    let offset = match labeling {
        Labeling::Gray => 0,
        Labeling::Sp => k,
    };
    for i in 0..k {
        col[offset + i] = share;
    }
    MappingMatrix::from_columns(k, l, n_prime, vec![col; l * n_prime]).expect("uniform mapping")
}

/// Two-vector relaxation: `vec_seed` on the first `t_uni` sub-blocks,
/// `vec_rest` on the rest. Stored fractions are quantized to
/// [`FRACTION_STEP`] so optimizer candidates are canonical and hashable.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedMapping<R> {
    pub t_uni: usize,
    pub vec_seed: Vec<R>,
    pub vec_rest: Vec<R>,
}

impl<R: Scalar> RelaxedMapping<R> {
    /// Quantizes both vectors onto the simplex (entries are multiples of
    /// [`FRACTION_STEP`] summing exactly to one in fixed point).
    pub fn new(t_uni: usize, vec_seed: Vec<R>, vec_rest: Vec<R>) -> Result<Self> {
        if vec_seed.len() != vec_rest.len() || vec_seed.len() % 2 != 0 || vec_seed.is_empty() {
            return Err(Error::DimensionMismatch(
                "seed/rest vectors must share the same even length".into(),
            ));
        }
        let check = |v: &[R]| -> Result<()> {
            if v.iter().any(|x| *x < -sc::<R>(1e-9) || x.is_nan()) {
                return Err(Error::InvalidArgument("negative mapping fraction".into()));
            }
            let sum: f64 = v.iter().map(|x| x.as_f64()).sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "mapping vector sums to {sum}, expected 1"
                )));
            }
            Ok(())
        };
        check(&vec_seed)?;
        check(&vec_rest)?;
        Ok(Self {
            t_uni,
            vec_seed: quantize_simplex(&vec_seed),
            vec_rest: quantize_simplex(&vec_rest),
        })
    }

    /// Fixed-point key for memoization; identical mappings share a key.
    pub fn key(&self) -> (usize, Vec<i64>, Vec<i64>) {
        let units = |v: &[R]| {
            v.iter()
                .map(|x| (x.as_f64() / FRACTION_STEP).round() as i64)
                .collect()
        };
        (self.t_uni, units(&self.vec_seed), units(&self.vec_rest))
    }
}

/// Largest-remainder quantization onto the simplex: entries become multiples
/// of [`FRACTION_STEP`] and sum to exactly one in fixed point.
pub fn quantize_simplex<R: Scalar>(v: &[R]) -> Vec<R> {
    let raw: Vec<f64> = v.iter().map(|x| x.as_f64().max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    let scale = if total > 0.0 {
        FRACTION_UNITS as f64 / total
    } else {
        0.0
    };
    let scaled: Vec<f64> = raw.iter().map(|x| x * scale).collect();
    let mut units: Vec<i64> = scaled.iter().map(|x| x.floor() as i64).collect();
    let assigned: i64 = units.iter().sum();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in 0..(FRACTION_UNITS - assigned).max(0) as usize {
        units[order[i % v.len()]] += 1;
    }
    units
        .into_iter()
        .map(|u| sc(u as f64 * FRACTION_STEP))
        .collect()
}

/// Closed-form family-balance correction: returns the rest vector that makes
/// the expanded mapping satisfy the row-balance constraint exactly, keeping
/// each family's total mass from `rest`.
pub fn family_balanced_rest<R: Scalar>(
    vec_seed: &[R],
    vec_rest: &[R],
    t_uni: usize,
    l: usize,
) -> Result<Vec<R>> {
    let channels = vec_seed.len();
    let k = channels / 2;
    let t = t_uni as f64;
    let rest_blocks = (l - t_uni) as f64;
    let mut out = vec![R::zero(); channels];
    for family in 0..2 {
        let rows = family * k..(family + 1) * k;
        let seed_mass: f64 = rows.clone().map(|i| vec_seed[i].as_f64()).sum();
        let rest_mass: f64 = rows.clone().map(|i| vec_rest[i].as_f64()).sum();
        let target = (t * seed_mass + rest_blocks * rest_mass) / k as f64;
        for i in rows {
            let r = (target - t * vec_seed[i].as_f64()) / rest_blocks;
            if r < -1e-9 {
                return Err(Error::InfeasibleMapping(format!(
                    "channel {i}: seeded fraction {:.6} exceeds the balance budget {:.6}",
                    vec_seed[i].as_f64(),
                    target / t.max(1.0)
                )));
            }
            out[i] = sc(r.max(0.0));
        }
    }
    Ok(out)
}

/// Expands a relaxed mapping into the full matrix.
///
/// Sub-blocks `0..t_uni` take `vec_seed`; the remaining blocks take the
/// family-balance-corrected rest vector, so the expanded matrix satisfies
/// both constraints to float accuracy. Degenerate `t_uni` values (0 or `l`)
/// require the surviving vector to be family-balanced on its own.
pub fn seeded_mapping<R: Scalar>(
    relaxed: &RelaxedMapping<R>,
    k: usize,
    l: usize,
    n_prime: usize,
) -> Result<MappingMatrix<R>> {
    if relaxed.vec_seed.len() != 2 * k {
        return Err(Error::DimensionMismatch(format!(
            "relaxed vectors have {} channels, expected {}",
            relaxed.vec_seed.len(),
            2 * k
        )));
    }
    if relaxed.t_uni > l {
        return Err(Error::InvalidArgument(format!(
            "t_uni = {} exceeds l = {}",
            relaxed.t_uni, l
        )));
    }
    let require_balanced = |v: &[R], what: &str| -> Result<()> {
        for family in 0..2 {
            let rows = &v[family * k..(family + 1) * k];
            let hi = rows.iter().cloned().fold(R::zero(), R::max).as_f64();
            let lo = rows.iter().cloned().fold(R::one(), R::min).as_f64();
            if hi - lo > 1e-9 {
                return Err(Error::InfeasibleMapping(format!(
                    "{what} vector must be family-balanced when it covers every sub-block"
                )));
            }
        }
        Ok(())
    };
    let cols: Vec<Vec<R>> = if relaxed.t_uni == l {
        require_balanced(&relaxed.vec_seed, "seed")?;
        vec![relaxed.vec_seed.clone(); l * n_prime]
    } else if relaxed.t_uni == 0 {
        require_balanced(&relaxed.vec_rest, "rest")?;
        vec![relaxed.vec_rest.clone(); l * n_prime]
    } else {
        let rest = family_balanced_rest(&relaxed.vec_seed, &relaxed.vec_rest, relaxed.t_uni, l)?;
        let mut cols = Vec::with_capacity(l * n_prime);
        for block in 0..l {
            let v = if block < relaxed.t_uni {
                &relaxed.vec_seed
            } else {
                &rest
            };
            for _ in 0..n_prime {
                cols.push(v.clone());
            }
        }
        cols
    };
    MappingMatrix::from_columns(k, l, n_prime, cols)
}

/// JSON file form of a relaxed mapping:
/// `{K, L, N_prime, T_uni, vec_seed, vec_rest}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MappingFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_prime")]
    pub n_prime: usize,
    #[serde(rename = "T_uni")]
    pub t_uni: usize,
    pub vec_seed: Vec<f64>,
    pub vec_rest: Vec<f64>,
}

impl MappingFile {
    pub fn to_relaxed<R: Scalar>(&self) -> Result<RelaxedMapping<R>> {
        RelaxedMapping::new(
            self.t_uni,
            self.vec_seed.iter().map(|&v| sc(v)).collect(),
            self.vec_rest.iter().map(|&v| sc(v)).collect(),
        )
    }

    pub fn from_relaxed<R: Scalar>(
        relaxed: &RelaxedMapping<R>,
        k: usize,
        l: usize,
        n_prime: usize,
    ) -> Self {
        Self {
            k,
            l,
            n_prime,
            t_uni: relaxed.t_uni,
            vec_seed: relaxed.vec_seed.iter().map(|v| v.as_f64()).collect(),
            vec_rest: relaxed.vec_rest.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

/// Writes the full matrix as plain CSV: `2K` lines, one column per variable
/// position.
pub fn write_mapping_csv<R: Scalar, W: std::io::Write>(
    m: &MappingMatrix<R>,
    mut w: W,
) -> Result<()> {
    for row in 0..2 * m.bits_per_symbol() {
        let line: Vec<String> = m
            .columns()
            .iter()
            .map(|c| format!("{}", c[row].as_f64()))
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a full matrix written by [`write_mapping_csv`]; `l` and `n_prime`
/// give the column split, `k` is inferred from the row count.
pub fn read_mapping_csv<R: Scalar, Rd: std::io::BufRead>(
    reader: Rd,
    l: usize,
    n_prime: usize,
) -> Result<MappingMatrix<R>> {
    let mut rows: Vec<Vec<R>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map(sc)
                    .map_err(|_| Error::InvalidArgument(format!("bad mapping entry '{tok}'")))
            })
            .collect::<Result<Vec<R>>>()?;
        rows.push(row);
    }
    if rows.len() % 2 != 0 || rows.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "mapping CSV must have an even number of rows, got {}",
            rows.len()
        )));
    }
    let k = rows.len() / 2;
    let n_cols = rows[0].len();
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(Error::DimensionMismatch("ragged mapping CSV".into()));
    }
    let cols = (0..n_cols)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect();
    MappingMatrix::from_columns(k, l, n_prime, cols)
}

/// Random point on the simplex over the masked channels; used by tests and
/// the optimizer's population initialization.
pub fn random_simplex<R: Scalar, G: Rng>(rng: &mut G, channels: usize, mask: &[bool]) -> Vec<R> {
    let mut v = vec![0.0f64; channels];
    let mut total = 0.0;
    for (i, allowed) in mask.iter().enumerate() {
        if *allowed {
            let e = -rng.gen::<f64>().max(1e-12).ln();
            v[i] = e;
            total += e;
        }
    }
    v.iter().map(|&x| sc(x / total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const K: usize = BITS_PER_SYMBOL;

    #[test]
    fn uniform_mapping_is_exact() {
        let m = uniform_mapping::<f64>(K, 6, 2, Labeling::Gray);
        for col in m.columns() {
            assert_eq!(&col[..K], &[0.25; 4]);
            assert_eq!(&col[K..], &[0.0; 4]);
        }
        let report = m.validate();
        assert!(report.pass(), "{report}");
        assert_eq!(report.max_column_violation, 0.0);
        let sp = uniform_mapping::<f64>(K, 6, 2, Labeling::Sp);
        assert_eq!(sp.hybrid_summary().sp, 6);
        assert_eq!(sp.hybrid_summary().iterative_blocks(), 6);
    }

    #[test]
    fn quantization_lands_on_the_fixed_grid() {
        let r = RelaxedMapping::<f64>::new(
            2,
            vec![0.1234567, 0.2, 0.3, 0.3765433, 0.0, 0.0, 0.0, 0.0],
            vec![0.125; 8],
        )
        .unwrap();
        let unit_sum: i64 = r
            .vec_seed
            .iter()
            .map(|v| (v / FRACTION_STEP).round() as i64)
            .sum();
        assert_eq!(unit_sum, 1_000_000);
        for v in &r.vec_seed {
            let units = v / FRACTION_STEP;
            assert!((units - units.round()).abs() < 1e-6);
        }
    }

    #[test]
    fn seeded_expansion_passes_validation() {
        // Concentrate the best SP channel on the seeded blocks.
        let relaxed = RelaxedMapping::<f64>::new(
            3,
            vec![0.0, 0.0, 0.0, 0.0, 0.05, 0.05, 0.05, 0.85],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        let m = seeded_mapping(&relaxed, K, 12, 2).unwrap();
        let report = m.validate();
        assert!(report.pass(), "{report}");
        assert_eq!(m.hybrid_summary().sp, 12);
    }

    #[test]
    fn random_seeded_mappings_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mask = [true; 8];
        let l = 20;
        let mut accepted = 0;
        let mut trials = 0;
        while accepted < 1000 && trials < 20_000 {
            trials += 1;
            let t = 1 + (rng.gen::<u64>() % (l as u64 - 1)) as usize;
            let seed = random_simplex::<f64, _>(&mut rng, 8, &mask);
            let rest = random_simplex::<f64, _>(&mut rng, 8, &mask);
            let relaxed = RelaxedMapping::new(t, seed, rest).unwrap();
            match seeded_mapping(&relaxed, K, l, 2) {
                Ok(m) => {
                    accepted += 1;
                    let report = m.validate();
                    assert!(report.pass(), "trial {trials}: {report}");
                }
                Err(Error::InfeasibleMapping(_)) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(accepted >= 1000, "only {accepted} feasible in {trials} trials");
    }

    #[test]
    fn corruption_is_reported_at_its_magnitude() {
        let m = uniform_mapping::<f64>(K, 5, 2, Labeling::Sp);
        let mut cols = m.columns().to_vec();
        cols[3][5] += 0.125;
        let bad = MappingMatrix::from_columns(K, 5, 2, cols).unwrap();
        let report = bad.validate();
        assert!(!report.pass());
        assert!((report.max_column_violation - 0.125).abs() < 1e-12);
        assert!((report.max_balance_violation - 0.125).abs() < 1e-12);
    }

    #[test]
    fn permuting_sub_blocks_preserves_validity() {
        let relaxed = RelaxedMapping::<f64>::new(
            2,
            vec![0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.1, 0.7],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        let m = seeded_mapping(&relaxed, K, 8, 3).unwrap();
        let n = m.vars_per_block();
        let mut cols = m.columns().to_vec();
        // Rotate the sub-block order.
        cols.rotate_left(3 * n);
        let rotated = MappingMatrix::from_columns(K, 8, 3, cols).unwrap();
        assert!(rotated.validate().pass());
    }

    #[test]
    fn degenerate_t_values() {
        let uniform_sp = vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25];
        // T = 0 equals the uniform mapping built from vec_rest.
        let r0 = RelaxedMapping::<f64>::new(0, uniform_sp.clone(), uniform_sp.clone()).unwrap();
        let m0 = seeded_mapping(&r0, K, 7, 2).unwrap();
        assert_eq!(m0, uniform_mapping::<f64>(K, 7, 2, Labeling::Sp));
        // T = L with seed == rest == uniform is the same matrix again.
        let rl = RelaxedMapping::<f64>::new(7, uniform_sp.clone(), uniform_sp).unwrap();
        let ml = seeded_mapping(&rl, K, 7, 2).unwrap();
        assert_eq!(ml, m0);
        // T = L with an unbalanced seed is infeasible.
        let bad = RelaxedMapping::<f64>::new(
            7,
            vec![0.0, 0.0, 0.0, 0.0, 0.7, 0.1, 0.1, 0.1],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        assert!(matches!(
            seeded_mapping(&bad, K, 7, 2),
            Err(Error::InfeasibleMapping(_))
        ));
    }

    #[test]
    fn hybrid_block_count_matches_t_uni() {
        let relaxed = RelaxedMapping::<f64>::new(
            4,
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
            vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let m = seeded_mapping(&relaxed, K, 10, 2).unwrap();
        let summary = m.hybrid_summary();
        assert_eq!(summary.sp, 4);
        assert_eq!(summary.gray, 6);
        assert_eq!(summary.iterative_blocks(), 4);
        let assignment = m.hybrid_assignment();
        assert!(assignment[..4].iter().all(|a| *a == BlockLabeling::Sp));
        assert!(assignment[4..].iter().all(|a| *a == BlockLabeling::Gray));
    }

    #[test]
    fn infeasible_overconcentration_is_rejected() {
        // All of the family budget on one channel of a large seed region
        // cannot be compensated by the remaining blocks.
        let relaxed = RelaxedMapping::<f64>::new(
            9,
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        assert!(matches!(
            seeded_mapping(&relaxed, K, 10, 2),
            Err(Error::InfeasibleMapping(_))
        ));
    }

    #[test]
    fn json_and_csv_round_trips() {
        let relaxed = RelaxedMapping::<f64>::new(
            2,
            vec![0.0, 0.0, 0.0, 0.0, 0.1, 0.2, 0.3, 0.4],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        let file = MappingFile::from_relaxed(&relaxed, K, 9, 2);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"T_uni\":2"));
        let back: MappingFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_relaxed::<f64>().unwrap(), relaxed);

        let m = seeded_mapping(&relaxed, K, 9, 2).unwrap();
        let mut buf = Vec::new();
        write_mapping_csv(&m, &mut buf).unwrap();
        let again = read_mapping_csv::<f64, _>(buf.as_slice(), 9, 2).unwrap();
        assert_eq!(again.columns().len(), m.columns().len());
        for (a, b) in again.columns().iter().zip(m.columns()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
