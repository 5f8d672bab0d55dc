//! Scalar transfer functions for mean-based density evolution.
//!
//! `J(mu)` maps the mean of a consistent Gaussian LLR (variance `2 mu`) to its
//! mutual information; `phi(x)` is the check-node companion
//!
//! ```text
//! phi(x) = 1 - (4 pi x)^(-1/2) * Int tanh(u/2) exp(-(u-x)^2 / (4x)) du,   phi(0) = 1.
//! ```
//!
//! `J` and its inverse use the closed-form three-parameter fit
//! (`H1 = 0.3073`, `H2 = 0.8935`, `H3 = 1.1064`). `phi` is evaluated from a
//! high-resolution quadrature table in `sqrt(x)` with monotone cubic
//! interpolation; the inverse solves the interpolant inside a bracketing
//! table cell. Both pairs round-trip well below the 1e-5 tolerance the rest
//! of the crate relies on.

use once_cell::sync::Lazy;

use crate::scalar::{sc, Scalar};

pub const H1: f64 = 0.3073;
pub const H2: f64 = 0.8935;
pub const H3: f64 = 1.1064;

/// Cap applied to all message means. `J(MEAN_CAP)` is indistinguishable from
/// 1 in double precision, so capped means behave as "fully known" bits while
/// every update stays finite.
pub const MEAN_CAP: f64 = 1e3;

/// Mutual information of a consistent Gaussian LLR with mean `mu`.
#[inline]
pub fn j_fun<R: Scalar>(mu: R) -> R {
    let mu = mu.max(R::zero());
    let t = sc::<R>(H1) * (sc::<R>(2.0) * mu).powf(sc(H2));
    // 1 - 2^(-t), evaluated as -expm1(-t ln 2) to keep precision for small t.
    let inner = -(-t * sc::<R>(std::f64::consts::LN_2)).exp_m1();
    inner.powf(sc(H3))
}

/// Inverse of [`j_fun`]. Inputs are clamped to `[0, 1]`; `j_inv(1)` returns
/// [`MEAN_CAP`].
#[inline]
pub fn j_inv<R: Scalar>(mi: R) -> R {
    let cap = sc::<R>(MEAN_CAP);
    if mi >= R::one() {
        return cap;
    }
    let mi = mi.max(R::zero());
    // 1 - I^(1/H3) via expm1 for accuracy near I = 1.
    let q = -(mi.ln() / sc::<R>(H3)).exp_m1();
    let val = -q.ln() / sc::<R>(H1 * std::f64::consts::LN_2);
    let mu = sc::<R>(0.5) * val.powf(sc(1.0 / H2));
    mu.min(cap)
}

/// Check-node transfer function `phi(x)`.
#[inline]
pub fn phi_fun<R: Scalar>(x: R) -> R {
    sc(phi_f64(x.as_f64()))
}

/// Inverse of [`phi_fun`] on `(0, 1]`; values at or below `phi(MEAN_CAP)`
/// return [`MEAN_CAP`].
#[inline]
pub fn phi_inv<R: Scalar>(y: R) -> R {
    sc(phi_inv_f64(y.as_f64()))
}

/// Natural log of `phi(x)`, useful when products of many `1 - phi` terms are
/// accumulated in the log domain.
#[inline]
pub fn ln_phi_f64(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < SERIES_CUTOFF {
        return (1.0 - x / 2.0 + x * x / 4.0).ln();
    }
    let table = &*PHI_TABLE;
    if x > table.x_max() {
        return ln_phi_asymptotic(x);
    }
    table.eval_ln(x.sqrt())
}

pub fn phi_f64(x: f64) -> f64 {
    ln_phi_f64(x).exp()
}

pub fn phi_inv_f64(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return MEAN_CAP;
    }
    let target = y.ln();
    let table = &*PHI_TABLE;
    if target <= *table.ln_phi.last().unwrap() {
        return MEAN_CAP;
    }
    // Inverse lookup in t = sqrt(-ln phi); linear in s near both ends, so a
    // monotone cubic table is accurate and much cheaper than root finding.
    let s = table.eval_inv((-target).sqrt());
    (s * s).min(MEAN_CAP)
}

const SERIES_CUTOFF: f64 = 1e-6;

/// Large-argument tail `phi(x) ~ sqrt(pi/x) exp(-x/4) (1 - 10/(7x))`; only
/// used beyond the table range, which already exceeds [`MEAN_CAP`].
fn ln_phi_asymptotic(x: f64) -> f64 {
    0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
}

// ---------------------------------------------------------------------------
// Quadrature-backed table
// ---------------------------------------------------------------------------

/// Tabulated `ln phi(s^2)` on a uniform grid in `s = sqrt(x)` plus the
/// corresponding inverse table `s(t)` on a uniform grid in
/// `t = sqrt(-ln phi)`; both interpolated with Fritsch-Carlson monotone
/// cubics.
struct PhiTable {
    fwd: MonotoneCubic,
    ln_phi: Vec<f64>,
    inv: MonotoneCubic,
    inv_t_max: f64,
}

const TABLE_S_MAX: f64 = 33.2; // x up to ~1102, comfortably past MEAN_CAP
const TABLE_N: usize = 4096;
const INV_N: usize = 4096;

static PHI_TABLE: Lazy<PhiTable> = Lazy::new(PhiTable::build);

impl PhiTable {
    fn x_max(&self) -> f64 {
        TABLE_S_MAX * TABLE_S_MAX
    }

    fn build() -> Self {
        let step = TABLE_S_MAX / (TABLE_N - 1) as f64;
        let mut ln_phi = Vec::with_capacity(TABLE_N);
        ln_phi.push(0.0); // phi(0) = 1
        for i in 1..TABLE_N {
            let s = step * i as f64;
            ln_phi.push(phi_quadrature(s * s).ln());
        }
        let fwd = MonotoneCubic::new(step, ln_phi.clone());

        // Inverse: s as a function of t = sqrt(-ln phi(s^2)), solved per node
        // on the forward table (binary search plus in-cell bisection).
        let t_max = (-ln_phi[TABLE_N - 1]).sqrt();
        let inv_step = t_max / (INV_N - 1) as f64;
        let mut inv_s = Vec::with_capacity(INV_N);
        inv_s.push(0.0);
        for k in 1..INV_N {
            let t = inv_step * k as f64;
            inv_s.push(invert_ln_phi(&fwd, &ln_phi, -(t * t)));
        }
        let inv = MonotoneCubic::new(inv_step, inv_s);
        Self {
            fwd,
            ln_phi,
            inv,
            inv_t_max: t_max,
        }
    }

    #[inline]
    fn eval_ln(&self, s: f64) -> f64 {
        self.fwd.eval(s)
    }

    #[inline]
    fn eval_inv(&self, t: f64) -> f64 {
        if t >= self.inv_t_max {
            return TABLE_S_MAX;
        }
        self.inv.eval(t)
    }
}

/// Solves `ln phi(s^2) = target` on the forward table: the node values are
/// strictly decreasing, so a binary search brackets one cell and in-cell
/// bisection on the cubic finishes the job. Build-time only.
fn invert_ln_phi(fwd: &MonotoneCubic, ln_phi: &[f64], target: f64) -> f64 {
    let (mut lo, mut hi) = (0usize, ln_phi.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ln_phi[mid] > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if fwd.cell(lo, mid) > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    (lo as f64 + 0.5 * (a + b)) * fwd.step
}

/// Uniform-grid monotone cubic (Fritsch-Carlson limited Hermite).
struct MonotoneCubic {
    step: f64,
    values: Vec<f64>,
    tangent: Vec<f64>,
}

impl MonotoneCubic {
    fn new(step: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut secant = vec![0.0; n - 1];
        for i in 0..n - 1 {
            secant[i] = (values[i + 1] - values[i]) / step;
        }
        let mut tangent = vec![0.0; n];
        tangent[0] = secant[0];
        tangent[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            tangent[i] = 0.5 * (secant[i - 1] + secant[i]);
        }
        for i in 0..n - 1 {
            if secant[i] == 0.0 {
                tangent[i] = 0.0;
                tangent[i + 1] = 0.0;
            } else {
                let a = tangent[i] / secant[i];
                let b = tangent[i + 1] / secant[i];
                let r = a * a + b * b;
                if r > 9.0 {
                    let t = 3.0 / r.sqrt();
                    tangent[i] = t * a * secant[i];
                    tangent[i + 1] = t * b * secant[i];
                }
            }
        }
        Self { step, values, tangent }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        let pos = x / self.step;
        let i = (pos as usize).min(self.values.len() - 2);
        self.cell(i, pos - i as f64)
    }

    #[inline]
    fn cell(&self, i: usize, t: f64) -> f64 {
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.tangent[i] * h, self.tangent[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }
}

/// Composite 16-point Gauss-Legendre evaluation of
/// `phi(x) = Int 2/(1+e^u) N(u; x, 2x) du`, written without the `1 - tanh`
/// cancellation so the tiny large-`x` values keep full relative precision.
fn phi_quadrature(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let sigma = (2.0 * x).sqrt();
    let norm = 1.0 / (4.0 * std::f64::consts::PI * x).sqrt();
    let integrand = |u: f64| {
        let logistic = if u > 0.0 {
            let e = (-u).exp();
            2.0 * e / (1.0 + e)
        } else {
            2.0 / (1.0 + u.exp())
        };
        let d = u - x;
        logistic * (-d * d / (4.0 * x)).exp() * norm
    };
    let (lo, hi, width) = if x > 8.0 {
        // The Gaussian bump near u = x is damped by e^{-u}; everything that
        // matters sits in the logistic transition around u = 0.
        (-60.0f64, 60.0f64, 0.5)
    } else {
        let half = 14.0 * sigma;
        (x - half, x + half, (0.5f64).min(sigma / 2.0))
    };
    let panels = ((hi - lo) / width).ceil() as usize;
    let panel_w = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + panel_w * p as f64;
        let c = a + 0.5 * panel_w;
        let h = 0.5 * panel_w;
        let mut acc = 0.0;
        for k in 0..8 {
            let t = GL16_X[k] * h;
            acc += GL16_W[k] * (integrand(c - t) + integrand(c + t));
        }
        total += acc * h;
    }
    total
}

const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];
