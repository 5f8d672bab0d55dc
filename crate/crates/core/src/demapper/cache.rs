//! CSV persistence and an SNR-lattice cache for demapper curves.
//!
//! Curve generation dominates the runtime of every threshold search, so
//! measured sets are persisted as CSV (`labeling,snr_db,bit,i_a,i_e`) keyed
//! by their full generation parameters. Lattice sets are spaced `step_db`
//! apart; arbitrary SNRs are served by linear interpolation between the two
//! neighbouring lattice sets.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::constellation::{make_constellation, Labeling, BITS_PER_SYMBOL};
use super::curves::{
    derive_seed, simulate_demapper_curves, snr_interpolated_curves, snr_key, CurveSource,
    DemapperCurveSet, DualCurves,
};
use crate::error::{Error, Result};
use crate::scalar::{sc, Scalar};

/// Writes a curve set as CSV with columns `labeling,snr_db,bit,i_a,i_e`.
/// Bits are numbered 1-based in the file.
pub fn write_curves_csv<R: Scalar, W: std::io::Write>(
    set: &DemapperCurveSet<R>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["labeling", "snr_db", "bit", "i_a", "i_e"])?;
    for bit in 0..BITS_PER_SYMBOL {
        for (i, &ia) in set.grid().iter().enumerate() {
            w.write_record([
                set.labeling().to_string(),
                format!("{}", set.snr_db()),
                format!("{}", bit + 1),
                format!("{}", ia.as_f64()),
                format!("{}", set.per_bit()[bit][i].as_f64()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve set written by [`write_curves_csv`]. The average curve is
/// recomputed; the standard-error estimate is not persisted and loads as 0.
pub fn read_curves_csv<R: Scalar, Rd: std::io::Read>(reader: Rd) -> Result<DemapperCurveSet<R>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut labeling: Option<Labeling> = None;
    let mut snr_db: Option<f64> = None;
    let mut grid: Vec<R> = Vec::new();
    let mut per_bit: Vec<Vec<R>> = vec![Vec::new(); BITS_PER_SYMBOL];
    for record in r.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad curve CSV field {i}")))
        };
        let lab = Labeling::parse(record.get(0).unwrap_or(""))?;
        labeling = Some(labeling.unwrap_or(lab));
        if labeling != Some(lab) {
            return Err(Error::InvalidArgument("mixed labelings in curve CSV".into()));
        }
        snr_db = Some(parse(1)?);
        let bit = parse(2)? as usize;
        if !(1..=BITS_PER_SYMBOL).contains(&bit) {
            return Err(Error::InvalidArgument(format!("bit {bit} out of range")));
        }
        if bit == 1 {
            grid.push(sc(parse(3)?));
        }
        per_bit[bit - 1].push(sc(parse(4)?));
    }
    let labeling =
        labeling.ok_or_else(|| Error::InvalidArgument("empty curve CSV".into()))?;
    DemapperCurveSet::from_measured(labeling, snr_db.unwrap_or(0.0), grid, per_bit, 0.0)
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Disk- and memory-backed cache of measured curve sets on an SNR lattice.
///
/// Cache keys include labeling, SNR, grid size, symbol count and seed, so
/// changing any generation parameter produces fresh files. Writes are
/// atomic (temp file + rename), which makes concurrent generators safe: the
/// measurement is deterministic, so racing writers produce identical bytes.
pub struct CurveCache<R> {
    dir: Option<PathBuf>,
    grid: Vec<R>,
    n_symbols: usize,
    seed: u64,
    step_db: f64,
    memo: Mutex<HashMap<(Labeling, i64), Arc<DemapperCurveSet<R>>>>,
}

impl<R: Scalar> CurveCache<R> {
    /// Production defaults: 21-point grid, 2e5 symbols per point, 0.1 dB
    /// lattice spacing.
    pub fn new(dir: Option<PathBuf>, seed: u64) -> Self {
        Self::with_params(dir, seed, super::curves::uniform_grid(21), 200_000, 0.1)
    }

    pub fn with_params(
        dir: Option<PathBuf>,
        seed: u64,
        grid: Vec<R>,
        n_symbols: usize,
        step_db: f64,
    ) -> Self {
        assert!(step_db > 0.0 && step_db <= 0.25);
        Self {
            dir,
            grid,
            n_symbols,
            seed,
            step_db,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    fn file_name(&self, labeling: Labeling, key: i64) -> String {
        format!(
            "{}_es{}m_n{}_g{}_s{}.csv",
            labeling,
            key,
            self.n_symbols,
            self.grid.len(),
            self.seed
        )
    }

    /// Nearest lattice node at or below the given SNR.
    fn node_below(&self, snr_db: f64) -> i64 {
        let step = snr_key(self.step_db);
        let k = snr_key(snr_db);
        k.div_euclid(step) * step
    }

    /// Returns the lattice curve set at an exact lattice key (millidB).
    fn lattice(&self, labeling: Labeling, key: i64) -> Result<Arc<DemapperCurveSet<R>>> {
        if let Some(hit) = self.memo.lock().unwrap().get(&(labeling, key)) {
            return Ok(hit.clone());
        }
        let snr_db = key as f64 / 1000.0;
        let from_disk = self.dir.as_ref().and_then(|dir| {
            let path = dir.join(self.file_name(labeling, key));
            std::fs::File::open(path).ok()
        });
        let set = match from_disk {
            Some(file) => read_curves_csv(std::io::BufReader::new(file))?,
            None => {
                let constellation = make_constellation::<R>(labeling);
                let seed = derive_seed(self.seed, &[labeling as u64, key as u64]);
                let set = simulate_demapper_curves(
                    &constellation,
                    snr_db,
                    &self.grid,
                    self.n_symbols,
                    seed,
                )?;
                if let Some(dir) = &self.dir {
                    let mut buf = Vec::new();
                    write_curves_csv(&set, &mut buf)?;
                    atomic_write(&dir.join(self.file_name(labeling, key)), &buf)?;
                }
                set
            }
        };
        let set = Arc::new(set);
        self.memo
            .lock()
            .unwrap()
            .insert((labeling, key), set.clone());
        Ok(set)
    }

    /// Curve set at an arbitrary SNR via lattice interpolation.
    pub fn curves_at(&self, labeling: Labeling, snr_db: f64) -> Result<DemapperCurveSet<R>> {
        let lo_key = self.node_below(snr_db);
        let lo = self.lattice(labeling, lo_key)?;
        if (lo.snr_db() - snr_db).abs() < 1e-9 {
            return Ok((*lo).clone());
        }
        let hi = self.lattice(labeling, lo_key + snr_key(self.step_db))?;
        snr_interpolated_curves(&[(*lo).clone(), (*hi).clone()], snr_db)
    }

    /// Pre-generates lattice nodes covering `[lo_db, hi_db]` for the given
    /// labelings; useful before a parallel search so generation happens once.
    pub fn ensure_range(&self, labelings: &[Labeling], lo_db: f64, hi_db: f64) -> Result<()> {
        let step = snr_key(self.step_db);
        let first = self.node_below(lo_db);
        let last = self.node_below(hi_db) + step;
        for &labeling in labelings {
            let mut key = first;
            while key <= last {
                self.lattice(labeling, key)?;
                key += step;
            }
        }
        Ok(())
    }
}

impl<R: Scalar> CurveSource<R> for CurveCache<R> {
    fn dual_at(&self, es_n0_db: f64) -> Result<DualCurves<R>> {
        Ok(DualCurves::new(
            self.curves_at(Labeling::Gray, es_n0_db)?,
            self.curves_at(Labeling::Sp, es_n0_db)?,
        ))
    }

    fn single_at(&self, labeling: Labeling, es_n0_db: f64) -> Result<DemapperCurveSet<R>> {
        self.curves_at(labeling, es_n0_db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demapper::curves::uniform_grid;

    #[test]
    fn csv_round_trip() {
        let c = make_constellation::<f64>(Labeling::Sp);
        let set =
            simulate_demapper_curves(&c, 6.0, &uniform_grid::<f64>(9), 20_000, 5).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&set, &mut buf).unwrap();
        let back: DemapperCurveSet<f64> = read_curves_csv(buf.as_slice()).unwrap();
        assert_eq!(back.labeling(), Labeling::Sp);
        assert_eq!(back.snr_db(), 6.0);
        assert_eq!(back.grid(), set.grid());
        assert_eq!(back.per_bit(), set.per_bit());
        assert_eq!(back.average_curve(), set.average_curve());
    }

    #[test]
    fn cache_persists_and_interpolates() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CurveCache::<f64>::with_params(
            Some(dir.path().to_path_buf()),
            3,
            uniform_grid(9),
            20_000,
            0.1,
        );
        let a = cache.curves_at(Labeling::Gray, 5.0).unwrap();
        // Second cache instance should read back identical data from disk.
        let cache2 = CurveCache::<f64>::with_params(
            Some(dir.path().to_path_buf()),
            3,
            uniform_grid(9),
            20_000,
            0.1,
        );
        let b = cache2.curves_at(Labeling::Gray, 5.0).unwrap();
        assert_eq!(a.per_bit(), b.per_bit());
        // Interpolated point sits between its lattice neighbours.
        let mid = cache.curves_at(Labeling::Gray, 5.05).unwrap();
        let lo = cache.curves_at(Labeling::Gray, 5.0).unwrap();
        let hi = cache.curves_at(Labeling::Gray, 5.1).unwrap();
        for i in 0..lo.grid().len() {
            let (a, m, b) = (lo.per_bit()[0][i], mid.per_bit()[0][i], hi.per_bit()[0][i]);
            assert!((m - 0.5 * (a + b)).abs() < 1e-12);
        }
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 2);
    }
}
