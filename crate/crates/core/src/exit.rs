//! EXIT-chart threshold machinery.
//!
//! Closed-form check-node and demapper-augmented variable-node transfer
//! curves over the unstructured degree profile of an ensemble, an
//! open-tunnel bisection for the BP threshold of the uncoupled code, and the
//! equal-area balance between the first curve intersections that
//! approximates the threshold the coupled chain saturates towards.
//!
//! Two deliberate approximations are inherited from the method itself: the
//! protograph structure is collapsed to its degree profile (the chart does
//! not see edge placement), and the equal-area rule is exact only on the
//! erasure channel with random coupling — here it serves as the same
//! heuristic on AWGN. The variable-node demapper term uses the average
//! demapper curve; density evolution uses the per-bit curves, which is one
//! source of the small gaps between the two threshold columns.

use crate::demapper::{CurveSource, DemapperCurveSet, Labeling};
use crate::error::{Error, Result};
use crate::ga_de::{j_fun, j_inv};
use crate::protograph::BaseMatrix;
use crate::scalar::{sc, Scalar};

/// Unstructured degree profile of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile<R> {
    /// Edge-perspective variable degree fractions `(degree, fraction)`.
    lambda: Vec<(usize, R)>,
    /// Edge-perspective check degree fractions.
    rho: Vec<(usize, R)>,
    /// Node-perspective variable degree fractions.
    l_node: Vec<(usize, R)>,
}

impl<R: Scalar> DegreeProfile<R> {
    /// Collapses a (typically uncoupled) base matrix to its degree profile.
    pub fn from_base(base: &BaseMatrix) -> Self {
        let var_degrees = base.col_sums();
        let check_degrees = base.row_sums();
        let l_node = node_fractions(&var_degrees);
        let lambda = edge_fractions(&var_degrees);
        let rho = edge_fractions(&check_degrees);
        Self { lambda, rho, l_node }
    }

    pub fn lambda(&self) -> &[(usize, R)] {
        &self.lambda
    }

    pub fn rho(&self) -> &[(usize, R)] {
        &self.rho
    }

    pub fn l_node(&self) -> &[(usize, R)] {
        &self.l_node
    }
}

fn node_fractions<R: Scalar>(degrees: &[u32]) -> Vec<(usize, R)> {
    let mut counts = std::collections::BTreeMap::new();
    for &d in degrees {
        *counts.entry(d as usize).or_insert(0usize) += 1;
    }
    let n = degrees.len() as f64;
    counts
        .into_iter()
        .map(|(d, c)| (d, sc(c as f64 / n)))
        .collect()
}

fn edge_fractions<R: Scalar>(degrees: &[u32]) -> Vec<(usize, R)> {
    let total: u32 = degrees.iter().sum();
    let mut counts = std::collections::BTreeMap::new();
    for &d in degrees {
        *counts.entry(d as usize).or_insert(0u32) += d;
    }
    counts
        .into_iter()
        .map(|(d, e)| (d, sc(e as f64 / total as f64)))
        .collect()
}

/// Check-node transfer: `I_ec = 1 - sum_j rho_j J((j-1) Jinv(1 - I_ac))`.
pub fn cnd_exit<R: Scalar>(profile: &DegreeProfile<R>, i_a: R) -> R {
    let mu = j_inv(R::one() - i_a.max(R::zero()).min(R::one()));
    let mut acc = R::zero();
    for &(j, rho) in &profile.rho {
        acc = acc + rho * j_fun(sc::<R>((j - 1) as f64) * mu);
    }
    R::one() - acc
}

/// Variable-node transfer with the demapper in the loop:
/// `mu_c = Jinv(f_D(sum_i L_i J(i Jinv(I_av))))` and
/// `I_ev = sum_i lambda_i J(mu_c + (i-1) Jinv(I_av))`.
pub fn vnd_demap_exit<R: Scalar>(
    profile: &DegreeProfile<R>,
    demap_curve: &DemapperCurveSet<R>,
    i_a: R,
) -> R {
    let mu_a = j_inv(i_a.max(R::zero()).min(R::one()));
    let mut feedback = R::zero();
    for &(i, l) in &profile.l_node {
        feedback = feedback + l * j_fun(sc::<R>(i as f64) * mu_a);
    }
    let mu_c = j_inv(demap_curve.average(feedback.min(R::one())));
    let mut out = R::zero();
    for &(i, lambda) in &profile.lambda {
        out = out + lambda * j_fun(mu_c + sc::<R>((i - 1) as f64) * mu_a);
    }
    out
}

/// Inverse check curve: the a-priori information the check stage needs in
/// order to emit `i_e`. Solved by bisection; both curves are monotone.
pub fn cnd_inv<R: Scalar>(profile: &DegreeProfile<R>, i_e: R) -> R {
    let (mut lo, mut hi) = (R::zero(), R::one());
    for _ in 0..60 {
        let mid = (lo + hi) * sc(0.5);
        if cnd_exit(profile, mid) < i_e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * sc(0.5)
}

/// Sampled chart: variable (with demapper) and inverse check curves on a
/// common a-priori grid.
#[derive(Debug, Clone)]
pub struct ExitCurvePair<R> {
    pub grid: Vec<R>,
    pub vnd_demap: Vec<R>,
    pub cnd_inv: Vec<R>,
}

impl<R: Scalar> ExitCurvePair<R> {
    pub fn sample(
        profile: &DegreeProfile<R>,
        demap_curve: &DemapperCurveSet<R>,
        points: usize,
    ) -> Self {
        let grid: Vec<R> = (0..points)
            .map(|k| sc(k as f64 / (points - 1) as f64))
            .collect();
        let vnd_demap = grid
            .iter()
            .map(|&i| vnd_demap_exit(profile, demap_curve, i))
            .collect();
        let cnd_inv_curve = grid.iter().map(|&i| cnd_inv(profile, i)).collect();
        Self {
            grid,
            vnd_demap,
            cnd_inv: cnd_inv_curve,
        }
    }
}

const CHART_GRID: usize = 1001;

/// True when the decoding tunnel is open: the variable curve stays strictly
/// above the inverse check curve on the whole grid short of the (1, 1)
/// corner.
pub fn tunnel_open<R: Scalar>(profile: &DegreeProfile<R>, demap_curve: &DemapperCurveSet<R>) -> bool {
    let pair = ExitCurvePair::sample(profile, demap_curve, CHART_GRID);
    for k in 0..CHART_GRID - 1 {
        if pair.vnd_demap[k] <= pair.cnd_inv[k] {
            return false;
        }
    }
    true
}

/// Bisection on Es/N0 for the smallest SNR with an open decoding tunnel.
pub fn bp_threshold_exit<R: Scalar>(
    profile: &DegreeProfile<R>,
    source: &dyn CurveSource<R>,
    labeling: Labeling,
    bracket: (f64, f64),
    tol_db: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let open = |snr: f64| -> Result<bool> {
        Ok(tunnel_open(profile, &source.single_at(labeling, snr)?))
    };
    let (lo_open, hi_open) = (open(lo)?, open(hi)?);
    if lo_open || !hi_open {
        return Err(Error::InvalidBracket {
            lo_db: lo,
            hi_db: hi,
            lo_outcome: if lo_open { "open" } else { "closed" },
            hi_outcome: if hi_open { "open" } else { "closed" },
        });
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if open(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Interior intersections of the two chart curves, refined by bisection on
/// the sign of their difference to an `i_a` accuracy of 1e-8.
fn intersections<R: Scalar>(
    profile: &DegreeProfile<R>,
    demap_curve: &DemapperCurveSet<R>,
) -> Vec<f64> {
    let g = |i: f64| -> f64 {
        let i = sc::<R>(i);
        (vnd_demap_exit(profile, demap_curve, i) - cnd_inv(profile, i)).as_f64()
    };
    let step = 1.0 / (CHART_GRID - 1) as f64;
    let mut out = Vec::new();
    let mut prev = g(0.0);
    for k in 1..CHART_GRID {
        let x = k as f64 * step;
        let cur = g(x);
        if (prev > 0.0) != (cur > 0.0) {
            let (mut a, mut b) = (x - step, x);
            let mut ga = prev;
            for _ in 0..30 {
                let m = 0.5 * (a + b);
                let gm = g(m);
                if (ga > 0.0) != (gm > 0.0) {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = cur;
    }
    out
}

/// Signed area between the curves over `[a, b]` by the trapezoidal rule on
/// the chart grid, with linear partial cells at both ends.
fn signed_area<R: Scalar>(
    profile: &DegreeProfile<R>,
    demap_curve: &DemapperCurveSet<R>,
    a: f64,
    b: f64,
) -> f64 {
    let g = |i: f64| -> f64 {
        let i = sc::<R>(i);
        (vnd_demap_exit(profile, demap_curve, i) - cnd_inv(profile, i)).as_f64()
    };
    let step = 1.0 / (CHART_GRID - 1) as f64;
    let mut area = 0.0;
    let mut x = a;
    let mut gx = g(a);
    loop {
        let next = ((x / step).floor() + 1.0) * step;
        let next = next.min(b);
        let gn = g(next);
        area += 0.5 * (gx + gn) * (next - x);
        if next >= b {
            break;
        }
        x = next;
        gx = gn;
    }
    area
}

/// Equal-area balance at one SNR: `A12 - A23` between the first/second and
/// second/third curve intersections (the (1,1) corner closes the last lobe).
/// Errors when fewer than two interior intersections exist.
pub fn area_balance<R: Scalar>(
    profile: &DegreeProfile<R>,
    demap_curve: &DemapperCurveSet<R>,
) -> Result<f64> {
    let crossings = intersections(profile, demap_curve);
    if crossings.len() < 2 {
        return Err(Error::NoEqualArea {
            snr_db: demap_curve.snr_db(),
            found: crossings.len(),
        });
    }
    let (i1, i2) = (crossings[0], crossings[1]);
    let i3 = crossings.get(2).copied().unwrap_or(1.0);
    let a12 = signed_area(profile, demap_curve, i1, i2).abs();
    let a23 = signed_area(profile, demap_curve, i2, i3).max(0.0);
    Ok(a12 - a23)
}

/// Below the equal-area point? Robust over the whole bracket: a single
/// deficit lobe counts as below, an open tunnel counts as above.
fn below_area_point<R: Scalar>(
    profile: &DegreeProfile<R>,
    demap_curve: &DemapperCurveSet<R>,
) -> bool {
    match area_balance(profile, demap_curve) {
        Ok(balance) => balance > 0.0,
        Err(_) => !tunnel_open(profile, demap_curve),
    }
}

/// Bisection on Es/N0 for the equal-area point of the chart, the saturation
/// target of the coupled ensemble. The bracket low end must show the
/// two-lobe geometry.
pub fn map_threshold_area<R: Scalar>(
    profile: &DegreeProfile<R>,
    source: &dyn CurveSource<R>,
    labeling: Labeling,
    bracket: (f64, f64),
    tol_db: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    // The precondition is a proper two-lobe chart at the low end.
    area_balance(profile, &source.single_at(labeling, lo)?)?;
    let below = |snr: f64| -> Result<bool> {
        Ok(below_area_point(profile, &source.single_at(labeling, snr)?))
    };
    let (lo_below, hi_below) = (below(lo)?, below(hi)?);
    if !lo_below || hi_below {
        return Err(Error::InvalidBracket {
            lo_db: lo,
            hi_db: hi,
            lo_outcome: if lo_below { "below" } else { "above" },
            hi_outcome: if hi_below { "below" } else { "above" },
        });
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protograph::standard_code;

    fn regular_36() -> DegreeProfile<f64> {
        let code = standard_code("C1").unwrap();
        DegreeProfile::from_base(&code.spec.uncoupled_base())
    }

    #[test]
    fn profiles_of_bundled_codes() {
        let p = regular_36();
        assert_eq!(p.lambda(), &[(3usize, 1.0)]);
        assert_eq!(p.rho(), &[(6usize, 1.0)]);
        assert_eq!(p.l_node(), &[(3usize, 1.0)]);
        // C3 and C4 share the degree profile.
        let c3 = DegreeProfile::<f64>::from_base(&standard_code("C3").unwrap().spec.uncoupled_base());
        let c4 = DegreeProfile::<f64>::from_base(&standard_code("C4").unwrap().spec.uncoupled_base());
        assert_eq!(c3, c4);
        assert_eq!(c3.rho(), &[(16usize, 1.0)]);
        // Fractions sum to one.
        let total: f64 = c3.lambda().iter().map(|(_, f)| f).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnd_endpoints_and_hand_value() {
        let p = regular_36();
        assert!((cnd_exit(&p, 1.0) - 1.0).abs() < 1e-12);
        assert!(cnd_exit(&p, 0.0).abs() < 1e-12);
        // Single-term hand evaluation for rho_6 = 1 at i_a = 0.5.
        let want = 1.0 - j_fun(5.0 * j_inv(0.5));
        assert!((cnd_exit(&p, 0.5) - want).abs() < 1e-12);
    }

    #[test]
    fn vnd_flat_curve_collapse() {
        let p = regular_36();
        let c = 0.43;
        let flat = DemapperCurveSet::constant(Labeling::Gray, 0.0, c);
        // With a constant demapper curve, I_ev(0) collapses to the constant.
        assert!((vnd_demap_exit(&p, &flat, 0.0) - c).abs() < 1e-9);
        // Perfect a-priori saturates the output.
        assert!((vnd_demap_exit(&p, &flat, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn curves_are_monotone() {
        let p = regular_36();
        let flat = DemapperCurveSet::constant(Labeling::Gray, 0.0, 0.3);
        let mut last_v = -1.0;
        let mut last_c = -1.0;
        for k in 0..=1000 {
            let i = k as f64 / 1000.0;
            let v = vnd_demap_exit(&p, &flat, i);
            let c = cnd_exit(&p, i);
            assert!(v >= last_v, "vnd dips at {i}");
            assert!(c >= last_c, "cnd dips at {i}");
            last_v = v;
            last_c = c;
        }
    }

    #[test]
    fn cnd_inverse_round_trip() {
        let p = regular_36();
        for k in 1..20 {
            let i = k as f64 / 20.0;
            let e = cnd_exit(&p, i);
            let back = cnd_inv(&p, e);
            assert!((back - i).abs() < 1e-9, "i={i} back={back}");
        }
    }

    #[test]
    fn tunnel_state_follows_curve_level() {
        let p = regular_36();
        // A strong flat demapper curve dominates the check curve everywhere.
        let strong = DemapperCurveSet::constant(Labeling::Gray, 0.0, 0.95);
        assert!(tunnel_open(&p, &strong));
        let weak = DemapperCurveSet::constant(Labeling::Gray, 0.0, 0.05);
        assert!(!tunnel_open(&p, &weak));
    }

    #[test]
    fn exit_pair_samples_are_consistent() {
        let p = regular_36();
        let flat = DemapperCurveSet::constant(Labeling::Sp, 0.0, 0.4);
        let pair = ExitCurvePair::sample(&p, &flat, 101);
        assert_eq!(pair.grid.len(), 101);
        for (k, &i) in pair.grid.iter().enumerate() {
            assert!((pair.vnd_demap[k] - vnd_demap_exit(&p, &flat, i)).abs() < 1e-12);
        }
    }
}
