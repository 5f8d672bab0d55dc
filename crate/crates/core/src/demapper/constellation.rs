//! 16-QAM constellations with Gray and set-partitioning labelings.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sc, Scalar};

/// Bits per 16-QAM symbol.
pub const BITS_PER_SYMBOL: usize = 4;
/// Number of constellation points.
pub const POINTS: usize = 16;

/// Bit-labeling family of a constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labeling {
    /// Per-axis Gray code; nearest neighbours differ in one bit.
    Gray,
    /// Set partitioning; each bit level doubles the intra-subset distance.
    Sp,
}

impl Labeling {
    pub const ALL: [Labeling; 2] = [Labeling::Gray, Labeling::Sp];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" => Ok(Labeling::Gray),
            "sp" => Ok(Labeling::Sp),
            other => Err(Error::InvalidArgument(format!(
                "unknown labeling '{other}' (expected 'gray' or 'sp')"
            ))),
        }
    }
}

impl std::fmt::Display for Labeling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Labeling::Gray => write!(f, "gray"),
            Labeling::Sp => write!(f, "sp"),
        }
    }
}

/// Unit-energy 16-QAM constellation with per-point 4-bit labels.
///
/// `points[label]` is the signal point carrying label `label`; bit-channel
/// `i` (1-based in the docs) is bit `i - 1` of the label, LSB first.
#[derive(Debug, Clone)]
pub struct LabeledConstellation<R> {
    points: Vec<Complex<R>>,
    labeling: Labeling,
}

impl<R: Scalar> LabeledConstellation<R> {
    pub fn labeling(&self) -> Labeling {
        self.labeling
    }

    /// Signal point carrying the given 4-bit label.
    #[inline]
    pub fn point(&self, label: u8) -> Complex<R> {
        self.points[label as usize]
    }

    pub fn points(&self) -> &[Complex<R>] {
        &self.points
    }

    /// Value of bit-channel `bit` (0-based) within a label.
    #[inline]
    pub fn bit(label: u8, bit: usize) -> u8 {
        (label >> bit) & 1
    }

    /// Mean symbol energy; unity by construction up to rounding.
    pub fn mean_energy(&self) -> R {
        let total: R = self.points.iter().map(|p| p.norm_sqr()).sum();
        total / sc(POINTS as f64)
    }
}

/// 1-D Gray map for 4-PAM: labels (00, 01, 11, 10) over levels (-3, -1, +1, +3).
fn pam_level(b_sign: u8, b_inner: u8) -> i32 {
    match (b_sign, b_inner) {
        (0, 0) => -3,
        (0, 1) => -1,
        (1, 1) => 1,
        (1, 0) => 3,
        _ => unreachable!(),
    }
}

/// Builds the canonical 16-QAM constellation for a labeling.
///
/// Points live on the `{-3,-1,1,3}^2` grid scaled by `1/sqrt(10)`.
///
/// * Gray: bit channels 1-2 Gray-label the in-phase 4-PAM, channels 3-4 the
///   quadrature 4-PAM.
/// * Set partitioning: bit channel 1 selects the coarsest binary partition
///   and each further channel halves the subset again, doubling the minimum
///   intra-subset squared distance (0.4, 0.8, 1.6, 3.2 on the unit-energy
///   scale). With grid coordinates `u, v` in `{0..3}` the label bits are
///   `b1 = (u+v) mod 2`, `b2 = u mod 2`, `b3 = (floor(u/2)+floor(v/2)) mod 2`,
///   `b4 = floor(u/2)`.
pub fn make_constellation<R: Scalar>(labeling: Labeling) -> LabeledConstellation<R> {
    let scale = 1.0 / 10.0f64.sqrt();
    let mut points = vec![Complex::new(R::zero(), R::zero()); POINTS];
    match labeling {
        Labeling::Gray => {
            for label in 0u8..16 {
                let (b1, b2) = ((label) & 1, (label >> 1) & 1);
                let (b3, b4) = ((label >> 2) & 1, (label >> 3) & 1);
                let re = pam_level(b1, b2) as f64 * scale;
                let im = pam_level(b3, b4) as f64 * scale;
                points[label as usize] = Complex::new(sc(re), sc(im));
            }
        }
        Labeling::Sp => {
            for u in 0u8..4 {
                for v in 0u8..4 {
                    let b1 = (u + v) & 1;
                    let b2 = u & 1;
                    let b3 = ((u >> 1) + (v >> 1)) & 1;
                    let b4 = u >> 1;
                    let label = b1 | (b2 << 1) | (b3 << 2) | (b4 << 3);
                    let re = (2 * i32::from(u) - 3) as f64 * scale;
                    let im = (2 * i32::from(v) - 3) as f64 * scale;
                    points[label as usize] = Complex::new(sc(re), sc(im));
                }
            }
        }
    }
    LabeledConstellation { points, labeling }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist2(a: Complex<f64>, b: Complex<f64>) -> f64 {
        (a - b).norm_sqr()
    }

    /// Minimum squared distance between points whose labels agree on bit
    /// channels `0..fixed_bits`.
    fn min_intra_subset_dist2(c: &LabeledConstellation<f64>, fixed_bits: usize) -> f64 {
        let mask = (1u8 << fixed_bits) - 1;
        let mut best = f64::INFINITY;
        for a in 0u8..16 {
            for b in (a + 1)..16 {
                if a & mask == b & mask {
                    best = best.min(dist2(c.point(a), c.point(b)));
                }
            }
        }
        best
    }

    #[test]
    fn unit_energy_both_labelings() {
        for labeling in Labeling::ALL {
            let c = make_constellation::<f64>(labeling);
            assert!((c.mean_energy() - 1.0).abs() < 1e-12, "{labeling}");
        }
    }

    #[test]
    fn labels_are_a_permutation() {
        for labeling in Labeling::ALL {
            let c = make_constellation::<f64>(labeling);
            for a in 0u8..16 {
                for b in (a + 1)..16 {
                    assert!(
                        dist2(c.point(a), c.point(b)) > 1e-9,
                        "{labeling}: labels {a} and {b} share a point"
                    );
                }
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let c = make_constellation::<f64>(Labeling::Gray);
        let step2 = 4.0 / 10.0; // squared distance between adjacent grid points
        for a in 0u8..16 {
            for b in 0u8..16 {
                if a != b && (dist2(c.point(a), c.point(b)) - step2).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1, "labels {a:04b} / {b:04b}");
                }
            }
        }
    }

    #[test]
    fn gray_axis_order_is_canonical() {
        // Per-axis label order (00, 01, 11, 10) across -3,-1,+1,+3 (scaled).
        let c = make_constellation::<f64>(Labeling::Gray);
        let scale = 1.0 / 10.0f64.sqrt();
        let expected = [
            ((0u8, 0u8), -3.0),
            ((0, 1), -1.0),
            ((1, 1), 1.0),
            ((1, 0), 3.0),
        ];
        for &((b1, b2), level) in &expected {
            let label = b1 | (b2 << 1); // channels 3-4 zero => im = -3 scaled
            let p = c.point(label);
            assert!((p.re - level * scale).abs() < 1e-12);
        }
    }

    #[test]
    fn sp_distance_doubles_per_partition_level() {
        let c = make_constellation::<f64>(Labeling::Sp);
        let expected = [0.4, 0.8, 1.6, 3.2];
        for (level, want) in expected.iter().enumerate() {
            let got = min_intra_subset_dist2(&c, level);
            assert!(
                (got - want).abs() < 1e-12,
                "level {level}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn labeling_parse_round_trip() {
        assert_eq!(Labeling::parse("Gray").unwrap(), Labeling::Gray);
        assert_eq!(Labeling::parse("sp").unwrap(), Labeling::Sp);
        assert!(Labeling::parse("nats").is_err());
    }
}
